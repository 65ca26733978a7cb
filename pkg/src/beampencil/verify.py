"""Theorem checks over computed spectra, collected into a JSON report.

Every check works only with eigenvalues that passed the mesh-doubling test,
and a check whose sign hypotheses fail is reported as skipped.
"""

from __future__ import annotations

import functools
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .assembly import assemble_pencil
from .eigen import (
    ReductionError,
    _raw_spectrum,
    compute_spectrum,
    inertia_index,
    reconstruct_eigenfunction,
)
from .oscillation import locate_zeros
from .problem import BoundaryKind, Mesh, ProblemSpec, RunOptions
from .sturm import (
    NotAdmissibleError,
    admissible_sup,
    congruence_defect,
    kernel_residual,
    random_test_function,
    sigma_solution,
    sl_negative_count,
    transform_pencil,
)

PASS, FAIL, SKIPPED, INCONCLUSIVE, INFO = "pass", "fail", "skipped", "inconclusive", "info"


@dataclass(frozen=True)
class Tolerances:
    drift: float = 1e-4
    gap: float = 1e-6
    kernel_ratio: float = 1e3
    interlace_gap: float = 1e-8
    value_tol: float = 1e-6
    deriv_tol: float = 1e-5
    congruence: float = 1e-6
    kernel_sv: float = 1e-6
    mu_floor: float = 1e-12
    inertia_tau: float = 1e-10


DEFAULT_TOL = Tolerances()


@dataclass
class TheoremEntry:
    name: str
    status: str
    hypotheses: list = field(default_factory=list)
    witness: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "status": self.status,
                "hypotheses": self.hypotheses, "witness": _plain(self.witness)}


@dataclass
class TheoremReport:
    meta: dict
    theorems: list
    timings: dict = field(default_factory=dict)

    @property
    def failed(self):
        return any(t.status == FAIL for t in self.theorems)

    def to_json(self, timings=True):
        out = {"meta": _plain(self.meta), "theorems": [t.to_json() for t in self.theorems]}
        if timings:
            out["timings"] = _plain(self.timings)
        return out


def _plain(obj):
    """Convert numpy scalars/arrays inside nested containers to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _hyp(name, holds):
    return {"name": name, "holds": bool(holds)}


@functools.lru_cache(maxsize=32)
def _spectrum(spec: ProblemSpec, mesh: Mesh, mu_floor, drift):
    return compute_spectrum(spec, mesh, mu_floor=mu_floor, drift_tol=drift)


def spectrum_for(spec, mesh, tol: Tolerances = DEFAULT_TOL):
    return _spectrum(spec, mesh, tol.mu_floor, tol.drift)


@functools.lru_cache(maxsize=32)
def _admissible(p, mesh):
    return admissible_sup(p, mesh)


def _converged_negatives(sp):
    return sp.negatives[: sp.converged_count["negative"]]


def _kernel_ratio(pm, lam):
    s = linalg.svdvals(pm.pencil(lam))
    return float(s[-2] / max(s[-1], np.finfo(float).tiny)), float(s[-1])


def _relative_gaps(values):
    """Relative distance of each entry to its nearest neighbour in the list."""
    v = np.asarray(values)
    if v.size < 2:
        return np.full(v.size, np.inf)
    d = np.abs(np.diff(v))
    left = np.concatenate([[np.inf], d])
    right = np.concatenate([d, [np.inf]])
    return np.minimum(left, right) / np.abs(v)


def verify_simplicity(spec: ProblemSpec, mesh: Mesh, tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    sp = spectrum_for(spec, mesh, tol)
    conv = _converged_negatives(sp)
    if conv.size == 0:
        return TheoremEntry("simplicity_of_negatives", PASS, [],
                            {"count": 0, "vacuous": True})
    gaps = _relative_gaps(sp.negatives)
    rows, tail, ok = [], [], True
    for k, lam in enumerate(sp.negatives):
        ratio, _ = _kernel_ratio(sp.matrices, lam)
        good = gaps[k] >= tol.gap and ratio >= tol.kernel_ratio
        row = {"index": -(k + 1), "lambda": lam, "rel_gap": min(gaps[k], 1e300),
               "sv_ratio": ratio, "simple": good}
        if k < conv.size:
            ok &= good
            rows.append(row)
        else:
            tail.append(row)
    return TheoremEntry("simplicity_of_negatives", PASS if ok else FAIL, [],
                        {"count": int(conv.size), "total_computed": int(sp.negatives.size),
                         "vacuous": False, "eigenvalues": rows, "unconverged_info": tail})


def verify_zero_counts(spec: ProblemSpec, mesh: Mesh, n_max=5, samples=2001,
                       tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    hyps = [_hyp("c<0", spec.c < 0)]
    if spec.bc.mass_end:
        hyps.append(_hyp("alpha<=0", spec.alpha <= 0))
    name = "zero_counts_of_negative_eigenfunctions"
    if not all(h["holds"] for h in hyps):
        return TheoremEntry(name, SKIPPED, hyps, {})
    sp = spectrum_for(spec, mesh, tol)
    m = min(n_max, sp.converged_count["negative"])
    rows, ok = [], True
    for n in range(1, m + 1):
        ef = reconstruct_eigenfunction(sp, -n, samples)
        rep = locate_zeros(ef, tol.value_tol, tol.deriv_tol)
        rep_half = locate_zeros(ef, tol.value_tol / 2, tol.deriv_tol)
        toward_zero = 0.0 if n == 1 else sp.negatives[n - 2]
        probe = ef.lam + 0.5 * (toward_zero - ef.lam)
        ind = inertia_index(sp.matrices, probe, tol.inertia_tau)
        good = (rep.count == n - 1 and rep.all_simple and rep_half.count == rep.count
                and ind == n - 1)
        ok &= good
        rows.append({"index": -n, "lambda": ef.lam, "zeros": [z.x for z in rep.zeros],
                     "count": rep.count, "all_simple": rep.all_simple,
                     "count_half_tol": rep_half.count, "inertia_probe": probe,
                     "inertia": ind, "residual": ef.residual})
    status = PASS if ok else FAIL
    return TheoremEntry(name, status, hyps, {"checked": m, "eigenfunctions": rows})


def _negative_total(spec, mesh, tol):
    neg, _, _, _ = _raw_spectrum(assemble_pencil(spec, mesh), tol.mu_floor)
    return neg


def verify_negative_count(spec: ProblemSpec, mesh: Mesh, tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    """Pencil negative count against the second-order problem's count.

    The pencil count is taken on the end-graded mesh and its doubling; the
    plain-mesh count is reported alongside.
    """
    graded = mesh.with_end_grading()
    try:
        neg_g = _negative_total(spec, graded, tol)
        neg_g2 = _negative_total(spec, graded.refined(), tol)
    except ReductionError as exc:
        return TheoremEntry("negative_count", INCONCLUSIVE, [], {"error": str(exc)})
    plain = _negative_total(spec, mesh, tol).size
    sl = sl_negative_count(spec, mesh, tol.inertia_tau)
    sl2 = sl_negative_count(spec, mesh.refined(), tol.inertia_tau)
    witness = {"pencil_count": int(neg_g.size), "pencil_count_refined": int(neg_g2.size),
               "pencil_count_plain_mesh": int(plain), "sl_count": sl, "sl_count_refined": sl2,
               "graded_nodes": int(graded.nodes.size)}
    # ind T(lam) for lam -> -inf is the negative inertia of B
    B = assemble_pencil(spec, graded).B
    ev = linalg.eigvalsh(B)
    witness["b_negative_inertia"] = int(np.count_nonzero(ev < -tol.inertia_tau * np.max(np.abs(ev))))
    if neg_g.size != neg_g2.size or sl != sl2:
        return TheoremEntry("negative_count", INCONCLUSIVE, [], witness)
    ok = neg_g.size == sl == witness["b_negative_inertia"]
    return TheoremEntry("negative_count", PASS if ok else FAIL, [], witness)


def verify_interlacing(spec: ProblemSpec, mesh: Mesh, tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    """Compare the clamped-clamped (unprimed) and mass-end (primed) spectra."""
    cc = spectrum_for(spec.with_bc(BoundaryKind.CLAMPED_CLAMPED), mesh, tol)
    me = spectrum_for(spec.with_bc(BoundaryKind.CLAMPED_MASS_END), mesh, tol)
    ln, lpn = _converged_negatives(cc), _converged_negatives(me)
    rows, ok = [], True
    for k in range(min(ln.size, lpn.size)):
        lam, lamp = ln[k], lpn[k]
        g1 = (lamp - lam) / abs(lam)
        row = {"n": k + 1, "lambda": lam, "lambda_prime": lamp, "gap_upper": g1}
        good = g1 >= tol.interlace_gap
        if k + 1 < lpn.size:
            g2 = (lam - lpn[k + 1]) / abs(lam)
            row.update(lambda_prime_next=lpn[k + 1], gap_lower=g2)
            good &= g2 >= tol.interlace_gap
        row["holds"] = bool(good)
        ok &= good
        rows.append(row)
    hyps = [_hyp("c>0", spec.c > 0), _hyp("alpha>=0", spec.alpha >= 0)]
    witness = {"negative_chain": rows}
    positive_checked = all(h["holds"] for h in hyps)
    if positive_checked:
        if cc.converged_count["positive"] and me.converged_count["positive"]:
            l1, l1p = cc.positives[0], me.positives[0]
            good = (l1 - l1p) / abs(l1) >= tol.interlace_gap
            witness["first_positive"] = {"lambda_1": l1, "lambda_prime_1": l1p, "holds": bool(good)}
            ok &= good
        else:
            witness["first_positive"] = "not converged"
            positive_checked = False
    if not rows and not positive_checked:
        witness["vacuous"] = True
    return TheoremEntry("interlacing", PASS if ok else FAIL, hyps, witness)


def verify_admissibility(spec: ProblemSpec, mesh: Mesh, samples=2001,
                         tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    """Negatives lie below sup Lambda(p); under (mass-end, c>0, alpha>=0) so does lam_1,
    whose eigenfunction must then be sign-constant on (0, 1).
    """
    sp = spectrum_for(spec, mesh, tol)
    adm = _admissible(spec.p, mesh)
    conv = _converged_negatives(sp)
    margins = (adm.sup_lambda - conv).tolist()
    ok = all(m > 0 for m in margins)
    hyps = [_hyp("mass_end", spec.bc.mass_end), _hyp("c>0", spec.c > 0), _hyp("alpha>=0", spec.alpha >= 0)]
    witness = {"sup_lambda": adm.sup_lambda, "sup_n_elements": adm.n_elements,
               "negative_margins": margins}
    if not all(h["holds"] for h in hyps):
        witness["lambda_1"] = "skipped (hypotheses unmet)"
    elif sp.converged_count["positive"] == 0:
        witness["lambda_1"] = "not converged"
        ok = False
    else:
        ef = reconstruct_eigenfunction(sp, 1, samples)
        rep = locate_zeros(ef, tol.value_tol, tol.deriv_tol)
        witness.update(lambda_1=ef.lam, lambda_1_margin=adm.sup_lambda - ef.lam,
                       lambda_1_zeros=rep.count)
        ok &= ef.lam < adm.sup_lambda and rep.count == 0
    return TheoremEntry("admissibility", PASS if ok else FAIL, hyps, witness)


def first_positive_oscillation(spec: ProblemSpec, mesh: Mesh, samples=2001,
                               tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    """Observed interior zeros of the lam_1 eigenfunction; information only, never pass/fail."""
    sp = spectrum_for(spec, mesh, tol)
    name = "first_positive_oscillation"
    if sp.converged_count["positive"] == 0:
        return TheoremEntry(name, INFO, [], {"lambda_1": "not converged"})
    ef = reconstruct_eigenfunction(sp, 1, samples)
    rep = locate_zeros(ef, tol.value_tol, tol.deriv_tol)
    return TheoremEntry(name, INFO, [], {"lambda_1": ef.lam, "zeros": [z.x for z in rep.zeros],
                                         "count": rep.count, "all_simple": rep.all_simple})


def verify_inertia_consistency(spec: ProblemSpec, mesh: Mesh, tol: Tolerances = DEFAULT_TOL,
                               max_per_branch=20) -> TheoremEntry:
    """ind T is constant between consecutive eigenvalues and steps by one across each."""
    sp = spectrum_for(spec, mesh, tol)
    rows, ok = [], True
    for branch, vals, cnt in (("negative", sp.negatives, sp.converged_count["negative"]),
                              ("positive", sp.positives, sp.converged_count["positive"])):
        m = min(cnt, max_per_branch)
        # midpoints 0|lam_1, lam_1|lam_2, ..., lam_m|lam_{m+1}; past the last eigenvalue the midpoint is 2*lam_m
        pts = np.concatenate([[0.0], vals[: m + 1]])
        if 0 < m == vals.size:
            pts = np.append(pts, 3.0 * vals[-1])
        got = [inertia_index(sp.matrices, 0.5 * (a + b), tol.inertia_tau)
               for a, b in zip(pts[:-1], pts[1:])]
        good = got == list(range(len(got)))
        ok &= good
        rows.append({"branch": branch, "checked": m, "inertia_between": got, "holds": bool(good)})
    return TheoremEntry("inertia_consistency", PASS if ok else FAIL, [], {"branches": rows})


def verify_transform(spec: ProblemSpec, mesh: Mesh, lambda_probe, seed=0, n_functions=20,
                     tol: Tolerances = DEFAULT_TOL) -> TheoremEntry:
    adm = _admissible(spec.p, mesh)
    if not adm.contains(lambda_probe):
        raise NotAdmissibleError(f"lambda_probe={lambda_probe!r} outside the admissible set")
    rng = np.random.default_rng(seed)
    prof = sigma_solution(spec.p, lambda_probe, adm)
    model = transform_pencil(spec, lambda_probe, prof)
    defects = [congruence_defect(spec, model, prof, random_test_function(rng, spec.bc))
               for _ in range(n_functions)]
    witness = {"lambda": float(lambda_probe), "omega": prof.omega,
               "sigma_residual": prof.ode_residual(), "max_congruence_defect": max(defects)}
    ok = max(defects) <= tol.congruence
    sp = spectrum_for(spec, mesh, tol)
    hits = np.nonzero(np.abs(sp.negatives - lambda_probe) <= 1e-12 * abs(lambda_probe))[0]
    if hits.size:
        k = int(hits[0])
        fine = mesh.refined()
        lam_f = float(_negative_total(spec, fine, tol)[k])
        prof_f = sigma_solution(spec.p, lam_f, adm)
        res = kernel_residual(transform_pencil(spec, lam_f, prof_f), spec.bc, fine)
        witness["kernel"] = {"index": -(k + 1), "lambda_refined": lam_f,
                             "n_elements": fine.n_elements, "smallest_singular_value": res}
        ok &= res <= tol.kernel_sv
    return TheoremEntry("transform", PASS if ok else FAIL, [_hyp("lambda in admissible set", True)],
                        witness)


def _family_entries(spec, mesh, options, tol, timings, prefix=""):
    out = []
    checks = [
        ("simplicity", lambda: [verify_simplicity(spec, mesh, tol)]),
        ("zero_counts", lambda: [verify_zero_counts(spec, mesh, 5, options.samples, tol)]),
        ("negative_count", lambda: [verify_negative_count(spec, mesh, tol)]),
        ("admissibility", lambda: [verify_admissibility(spec, mesh, options.samples, tol)]),
        ("first_positive", lambda: [first_positive_oscillation(spec, mesh, options.samples, tol)]),
        ("inertia", lambda: [verify_inertia_consistency(spec, mesh, tol)]),
        ("transform", lambda: _transform_entries(spec, mesh, options, tol)),
    ]
    for key, fn in checks:
        t0 = time.perf_counter()
        entries = fn()
        timings[prefix + key] = time.perf_counter() - t0
        for e in entries:
            if prefix:
                e.name = prefix + e.name
            out.append(e)
    return out


def _transform_entries(spec, mesh, options, tol):
    sp = spectrum_for(spec, mesh, tol)
    probes = [0.0, -1.0]
    if sp.converged_count["negative"]:
        probes.append(float(sp.negatives[0]))
    entries = []
    for i, lam in enumerate(probes):
        e = verify_transform(spec, mesh, lam, seed=options.seed + i, tol=tol)
        e.name = f"transform[{i}]"
        entries.append(e)
    return entries


def run_verification(spec: ProblemSpec, mesh: Mesh, options: RunOptions | None = None,
                     pair=False, tol: Tolerances = DEFAULT_TOL) -> TheoremReport:
    options = options or RunOptions()
    timings = {}
    t0 = time.perf_counter()
    if pair:
        theorems = []
        for bc in BoundaryKind:
            theorems += _family_entries(spec.with_bc(bc), mesh, options, tol, timings,
                                        prefix=bc.value + ":")
        t1 = time.perf_counter()
        theorems.append(verify_interlacing(spec, mesh, tol))
        timings["interlacing"] = time.perf_counter() - t1
    else:
        theorems = _family_entries(spec, mesh, options, tol, timings)
    timings["total"] = time.perf_counter() - t0
    meta = {"problem": spec.to_json(), "n_elements": mesh.n_elements,
            "refined_n_elements": mesh.refined().n_elements, "pair": pair,
            "samples": options.samples, "seed": options.seed,
            "tolerances": asdict(tol), "kernel_backend": kernels.BACKEND,
            "sigma_choice": "u+w"}
    return TheoremReport(meta, theorems, timings)
