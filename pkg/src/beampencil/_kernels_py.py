"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same operation order, so both backends agree to rounding.
"""

import numpy as np


def rk4_sturm(inv_p, lam, h, u0, q0):
    """RK4 for ``u' = q/p, q' = -lam*u`` plus the running integral of ``u``."""
    inv_p = np.asarray(inv_p, dtype=float)
    n = (inv_p.shape[0] - 1) // 2
    ip = inv_p.tolist()
    hh = 0.5 * h
    u, q, s = float(u0), float(q0), 0.0
    out_u = [u]
    out_q = [q]
    out_s = [s]
    for k in range(n):
        a0, a1, a2 = ip[2 * k], ip[2 * k + 1], ip[2 * k + 2]
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
        out_u.append(u)
        out_q.append(q)
        out_s.append(s)
    return np.array(out_u), np.array(out_q), np.array(out_s)


def _beam_rhs(y, ip, rr):
    return np.stack([y[:, 1], y[:, 2] * ip, y[:, 3], rr * y[:, 0]], axis=1)


def rk4_beam(inv_p, r, h, states):
    """RK4 for ``(y, y', v, v')' = (y', v/p, v', r*y)``, batched over rows of ``states``."""
    inv_p = np.asarray(inv_p, dtype=float)
    r = np.asarray(r, dtype=float)
    y = np.array(states, dtype=float, copy=True).reshape(-1, 4)
    n = (inv_p.shape[0] - 1) // 2
    hh = 0.5 * h
    for k in range(n):
        k1 = _beam_rhs(y, inv_p[2 * k], r[2 * k])
        k2 = _beam_rhs(y + hh * k1, inv_p[2 * k + 1], r[2 * k + 1])
        k3 = _beam_rhs(y + hh * k2, inv_p[2 * k + 1], r[2 * k + 1])
        k4 = _beam_rhs(y + h * k3, inv_p[2 * k + 2], r[2 * k + 2])
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return y
