import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from beampencil.assembly import assemble_pencil
from beampencil.eigen import inertia_index, ldl_inertia
from beampencil.oscillation import ConeState, count_sign_changes, disconjugacy_check, signchange_noninc_check
from beampencil.problem import CoefficientField, Mesh, ProblemSpec

from conftest import CC, ME

finite = st.floats(-1e3, 1e3, allow_nan=False)
ONE = CoefficientField.constant(1.0)


@given(st.lists(finite, min_size=2, max_size=60), st.floats(0.1, 100))
def test_sign_changes_scale_invariant(xs, k):
    assert count_sign_changes(xs, 1e-9) == count_sign_changes(np.array(xs) * k, 1e-9 * k)


@given(st.lists(finite, min_size=2, max_size=60), st.integers(0, 59))
def test_sign_changes_ignore_dead_band_insertions(xs, pos):
    ys = list(xs)
    ys.insert(min(pos, len(ys)), 0.0)
    assert count_sign_changes(ys, 1e-9) == count_sign_changes(xs, 1e-9)


@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=8), st.floats(0, 1))
def test_table_stays_within_values(vals, x):
    tab = CoefficientField.table(np.linspace(0, 1, len(vals)), vals)
    assert min(vals) - 1e-12 <= tab(x) <= max(vals) + 1e-12


@given(st.floats(-400, 50), st.floats(-2, 2), st.sampled_from([CC, ME]), st.floats(-2000, 2000))
def test_inertia_agrees_with_ldl(c, alpha, bc, lam):
    pm = assemble_pencil(ProblemSpec.build(c=c, alpha=alpha, bc=bc), Mesh.uniform(12))
    M = pm.pencil(lam)
    ev = np.linalg.eigvalsh(M)
    if np.min(np.abs(ev)) > 1e-8 * np.max(np.abs(ev)):
        assert inertia_index(pm, lam) == ldl_inertia(M)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: max(v) > 1e-3),
       st.floats(0, 0.9))
def test_forward_cone_positive(v, a):
    p = CoefficientField.polynomial([1.0, 0.5]).certify("p")
    _, ok = disconjugacy_check(p, ONE, ConeState(a, tuple(v)), step=1e-3)
    assert ok


@given(st.lists(st.floats(0.02, 0.98), min_size=0, max_size=6, unique=True),
       st.sampled_from([(CC, 0.0), (ME, 0.0), (ME, 1.0)]))
def test_sign_changes_not_increased(roots, family):
    bc, alpha = family
    roots = sorted(roots)
    if any(b - a < 0.02 for a, b in zip(roots, roots[1:])):
        return
    f = Polynomial.fromroots(roots) if roots else Polynomial([1.0])
    res = signchange_noninc_check(ONE, ONE, alpha, bc, f, Mesh.uniform(24))
    assert res.passed
