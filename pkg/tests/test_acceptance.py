"""Exit criteria of the package, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (or ``python3 tests/test_acceptance.py``);
a PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from beampencil.assembly import assemble_pencil
from beampencil.eigen import _raw_spectrum, compute_spectrum
from beampencil.oscillation import (
    ConeState,
    count_sign_changes,
    disconjugacy_batch,
    disconjugacy_check,
    signchange_noninc_check,
)
from beampencil.problem import CoefficientField, Mesh, ProblemSpec
from beampencil.sturm import (
    admissible_sup,
    congruence_defect,
    kernel_residual,
    random_test_function,
    sigma_solution,
    transform_pencil,
)
from beampencil.verify import (
    verify_inertia_consistency,
    verify_interlacing,
    verify_negative_count,
    verify_simplicity,
    verify_zero_counts,
)

from conftest import CC, ME, buckling_roots, cc_count, me_count

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parent.parent
M64 = Mesh.uniform(64)
C_VALUES = (-20.0, -50.0, -200.0, -500.0)
ONE = CoefficientField.constant(1.0)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def positive_poly(rng, floor=0.2, max_degree=3):
    q = Polynomial(rng.uniform(-1, 1, rng.integers(1, max_degree + 1) + 1))
    m = q(np.linspace(0, 1, 10_001)).min()
    if m < floor:
        q = q + (floor - m)
    return CoefficientField.polynomial(list(q.coef)).certify()


def test_criterion_01_admissible_boundary():
    with Timer() as t:
        adm = admissible_sup(ONE, Mesh.uniform(128))
    assert abs(adm.sup_lambda - math.pi**2) / math.pi**2 <= 1e-6
    assert t.elapsed < 1.0


def test_criterion_02_buckling_spectrum():
    l1, l2 = buckling_roots(2)
    assert l1 == pytest.approx(4 * math.pi**2, rel=1e-12)
    with Timer() as t:
        sp = compute_spectrum(ProblemSpec.build(), M64)
    assert abs(sp.positives[0] - l1) / l1 <= 1e-4
    assert abs(sp.positives[1] - l2) / l2 <= 1e-4
    assert t.elapsed < 2.0


@pytest.mark.parametrize("bc", [CC, ME], ids=["clamped_clamped", "clamped_mass_end"])
@pytest.mark.parametrize("c", C_VALUES)
def test_criterion_03_negative_count(c, bc):
    analytic = cc_count(c) if bc is CC else me_count(c)
    with Timer() as t:
        e = verify_negative_count(ProblemSpec.build(c=c, bc=bc), M64)
    assert e.status == "pass"
    assert e.witness["pencil_count"] == e.witness["sl_count"] == analytic
    assert t.elapsed < 5.0


def test_criterion_03_analytic_counts():
    assert [cc_count(c) for c in C_VALUES] == [1, 2, 4, 7]
    assert [me_count(c) for c in C_VALUES] == [1, 2, 5, 7]


@pytest.mark.parametrize("spec", [ProblemSpec.build(c=-500.0), ProblemSpec.build(c=-500.0, alpha=-1.0, bc=ME)],
                         ids=["clamped_clamped", "clamped_mass_end"])
def test_criterion_04_zero_counts(spec):
    with Timer() as t:
        e = verify_zero_counts(spec, M64, n_max=5)
    assert e.status == "pass"
    rows = e.witness["eigenfunctions"]
    assert [r["count"] for r in rows] == [0, 1, 2, 3, 4]
    assert all(r["all_simple"] for r in rows)
    assert [r["count_half_tol"] for r in rows] == [0, 1, 2, 3, 4]
    assert t.elapsed < 10.0


@pytest.mark.parametrize("bc", [CC, ME], ids=["clamped_clamped", "clamped_mass_end"])
@pytest.mark.parametrize("c", C_VALUES)
def test_criterion_05_simplicity(c, bc):
    e = verify_simplicity(ProblemSpec.build(c=c, bc=bc), M64)
    assert e.status == "pass" and e.witness["count"] >= 1
    for row in e.witness["eigenvalues"]:
        assert row["rel_gap"] >= 1e-6 and row["sv_ratio"] >= 1e3


def test_criterion_06_interlacing():
    e = verify_interlacing(ProblemSpec.build(c=-500.0), M64)
    assert e.status == "pass"
    chain = e.witness["negative_chain"]
    assert len(chain) >= 6
    for row in chain[:6]:
        assert row["lambda_prime_next"] < row["lambda"] < row["lambda_prime"]
        assert row["gap_upper"] >= 1e-8 and row["gap_lower"] >= 1e-8
    e = verify_interlacing(ProblemSpec.build(c=5.0, alpha=1.0), M64)
    assert e.status == "pass"
    assert e.witness["first_positive"]["lambda_prime_1"] < e.witness["first_positive"]["lambda_1"]


def test_criterion_07_transform_congruence():
    rng = np.random.default_rng(20240107)
    worst_congruence, worst_kernel = 0.0, 0.0
    for i in range(10):
        bc = (CC, ME)[i % 2]
        spec = ProblemSpec.build(p=positive_poly(rng), r=positive_poly(rng), c=-float(rng.uniform(20, 300)),
                                 alpha=float(rng.uniform(-1, 1)), bc=bc)
        adm = admissible_sup(spec.p, M64)
        for lam in (-10.0, -1.0, 0.5 * adm.sup_lambda):
            prof = sigma_solution(spec.p, lam, adm)
            model = transform_pencil(spec, lam, prof)
            for _ in range(20):
                d = congruence_defect(spec, model, prof, random_test_function(rng, bc))
                worst_congruence = max(worst_congruence, d)
        # kernel correspondence at lam_{-1}, computed and checked on the same (doubled) mesh
        fine = M64.refined()
        lam1 = float(_raw_spectrum(assemble_pencil(spec, fine))[0][0])
        res = kernel_residual(transform_pencil(spec, lam1, sigma_solution(spec.p, lam1, adm)), bc, fine)
        worst_kernel = max(worst_kernel, res)
    assert worst_congruence <= 1e-6
    assert worst_kernel <= 1e-6


def test_criterion_08_inertia_consistency():
    specs = [ProblemSpec.build()] + [ProblemSpec.build(c=c, bc=bc) for c in C_VALUES for bc in (CC, ME)]
    for spec in specs:
        e = verify_inertia_consistency(spec, M64)
        assert e.status == "pass", spec
        for br in e.witness["branches"]:
            got = br["inertia_between"]
            assert got == list(range(len(got)))
            assert len(got) == br["checked"] + 1 or br["checked"] == 0


def test_criterion_09_disconjugacy():
    end, ok = disconjugacy_check(ONE, ONE, ConeState(0.0, (0.0, 0.0, 0.0, 1.0)))
    assert ok
    assert abs(end[0] - (math.sinh(1) - math.sin(1)) / 2) <= 1e-8
    rng = np.random.default_rng(99)
    for _ in range(10):
        p, r = positive_poly(rng, 0.1), positive_poly(rng, 0.1)
        states = rng.uniform(0, 1, (100, 4))
        # sprinkle exact zeros so the cone boundary is exercised too
        states[rng.uniform(size=states.shape) < 0.3] = 0.0
        states[~states.any(axis=1), 3] = 1.0
        a = float(rng.uniform(0, 0.9))
        _, fwd = disconjugacy_batch(p, r, a, states, "forward")
        assert fwd.all()
        back_states = states * np.array([1, -1, 1, -1])
        _, back = disconjugacy_batch(p, r, float(rng.uniform(0.1, 1.0)), back_states, "backward")
        assert back.all()


def test_criterion_10_sign_change_non_increase():
    rng = np.random.default_rng(1010)
    mesh = Mesh.uniform(48)
    trials = 0
    for _ in range(50):
        deg = int(rng.integers(1, 13))
        f = Polynomial(rng.standard_normal(deg + 1))
        xs = np.linspace(0, 1, 2001)
        if count_sign_changes(f(xs), 1e-9 * np.max(np.abs(f(xs)))) == 0:
            # force mixed signs with real roots in (0, 1)
            f = Polynomial.fromroots(rng.uniform(0.05, 0.95, max(1, deg // 2))) * float(rng.choice([-1, 1]))
        for bc in (CC, ME):
            for alpha in (0.0, 1.0):
                res = signchange_noninc_check(ONE, ONE, alpha, bc, f, mesh)
                assert res.passed, (f.coef, bc, alpha, res)
                trials += 1
    assert trials == 200


def test_criterion_11_determinism(tmp_path):
    cfg = ROOT / "configs" / "c_minus500.json"
    docs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        subprocess.run([sys.executable, "-m", "beampencil", "verify", str(cfg), "--pair", "--out", str(out)],
                       check=True)
        doc = json.loads(out.read_text())
        assert "timings" in doc
        del doc["timings"]
        docs.append(json.dumps(doc, sort_keys=True, indent=2))
    assert docs[0] == docs[1]
    raw = []
    for i in range(2):
        out = tmp_path / f"n{i}.json"
        subprocess.run([sys.executable, "-m", "beampencil", "verify", str(cfg), "--no-timings", "--out", str(out)],
                       check=True)
        raw.append(out.read_bytes())
    assert raw[0] == raw[1]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
