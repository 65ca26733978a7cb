# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for the linear systems integrated by the library.

Coefficients arrive pre-sampled on the half-step grid ``x0 + k*h/2``,
``k = 0..2N``, so the inner loops never call back into Python.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def rk4_sturm(const double[::1] inv_p, double lam, double h, double u0, double q0):
    cdef Py_ssize_t n = (inv_p.shape[0] - 1) // 2
    cdef Py_ssize_t k
    cdef double u = u0, q = q0, s = 0.0
    cdef double a0, a1, a2, k1u, k1q, k1s, k2u, k2q, k2s, k3u, k3q, k3s, k4u, k4q, k4s
    cdef double hh = 0.5 * h
    out_u = np.empty(n + 1)
    out_q = np.empty(n + 1)
    out_s = np.empty(n + 1)
    cdef double[::1] ou = out_u, oq = out_q, os = out_s
    ou[0] = u
    oq[0] = q
    os[0] = s
    for k in range(n):
        a0 = inv_p[2 * k]
        a1 = inv_p[2 * k + 1]
        a2 = inv_p[2 * k + 2]
        k1u = q * a0
        k1q = -lam * u
        k1s = u
        k2u = (q + hh * k1q) * a1
        k2q = -lam * (u + hh * k1u)
        k2s = u + hh * k1u
        k3u = (q + hh * k2q) * a1
        k3q = -lam * (u + hh * k2u)
        k3s = u + hh * k2u
        k4u = (q + h * k3q) * a2
        k4q = -lam * (u + h * k3u)
        k4s = u + h * k3u
        u = u + h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        q = q + h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        s = s + h * (k1s + 2.0 * k2s + 2.0 * k3s + k4s) / 6.0
        ou[k + 1] = u
        oq[k + 1] = q
        os[k + 1] = s
    return out_u, out_q, out_s


cdef inline void _beam_rhs(double y0, double y1, double v0, double v1,
                           double ip, double rr, double* d) noexcept nogil:
    d[0] = y1
    d[1] = v0 * ip
    d[2] = v1
    d[3] = rr * y0


def rk4_beam(const double[::1] inv_p, const double[::1] r, double h, states):
    cdef double[:, ::1] st = np.ascontiguousarray(states, dtype=np.float64).copy()
    cdef Py_ssize_t m = st.shape[0]
    cdef Py_ssize_t n = (inv_p.shape[0] - 1) // 2
    cdef Py_ssize_t i, k, j
    cdef double hh = 0.5 * h
    cdef double y[4]
    cdef double t[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    with nogil:
        for i in range(m):
            for j in range(4):
                y[j] = st[i, j]
            for k in range(n):
                _beam_rhs(y[0], y[1], y[2], y[3], inv_p[2 * k], r[2 * k], k1)
                for j in range(4):
                    t[j] = y[j] + hh * k1[j]
                _beam_rhs(t[0], t[1], t[2], t[3], inv_p[2 * k + 1], r[2 * k + 1], k2)
                for j in range(4):
                    t[j] = y[j] + hh * k2[j]
                _beam_rhs(t[0], t[1], t[2], t[3], inv_p[2 * k + 1], r[2 * k + 1], k3)
                for j in range(4):
                    t[j] = y[j] + h * k3[j]
                _beam_rhs(t[0], t[1], t[2], t[3], inv_p[2 * k + 2], r[2 * k + 2], k4)
                for j in range(4):
                    y[j] = y[j] + h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
            for j in range(4):
                st[i, j] = y[j]
    return np.asarray(st)
