import json

import numpy as np
import pytest

from beampencil.problem import (
    BoundaryKind,
    CoefficientField,
    ConfigError,
    Mesh,
    NotPositiveError,
    ProblemSpec,
    eval_coefficient,
    load_problem,
    parse_config,
    parse_problem,
)


def test_constant_config_is_valid():
    spec, mesh, opts = parse_problem(json.dumps(
        {"p": 1, "r": 1, "c": 0, "alpha": 0, "bc": "clamped_clamped", "n_elements": 64}))
    assert spec.p.eps0 == 1.0 and spec.r.eps0 == 1.0
    assert mesh.n_elements == 64
    assert opts.samples == 2001


def test_mass_end_config():
    spec, mesh, _ = parse_problem(json.dumps(
        {"p": {"const": 1}, "r": 1, "c": -50, "alpha": 0, "bc": "clamped_mass_end", "n_elements": 64}))
    assert spec.bc is BoundaryKind.CLAMPED_MASS_END
    assert spec.c == -50


def test_negative_table_reports_location():
    cfg = {"p": {"table": [[0, 1], [0.5, -0.1], [1, 1]]}, "r": 1, "n_elements": 8}
    with pytest.raises(NotPositiveError, match="p not uniformly positive at x=0.5"):
        parse_config(cfg)


@pytest.mark.parametrize("cfg, msg", [
    ({"bc": "clamped_clamped", "n_elements": 1}, "n_elements"),
    ({"bc": "simply_supported"}, "bc must be"),
    ({"c": "big"}, "c"),
    ({"c": float("nan")}, "c"),
    ({"n_elements": 4.5}, "integer"),
    ({"p": {"spline": [1]}}, "unknown"),
    ({"p": {"table": [[0, 1], [0.7, 2]]}}, "span"),
    ({"frobnicate": 1}, "unknown keys"),
    ({"samples": 2}, "samples"),
])
def test_bad_configs(cfg, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(cfg)


def test_malformed_text():
    with pytest.raises(ConfigError, match="malformed"):
        parse_problem("{p: 1")
    with pytest.raises(ConfigError):
        parse_problem("[1, 2]")


def test_mass_end_allows_single_element():
    _, mesh, _ = parse_config({"bc": "clamped_mass_end", "n_elements": 1})
    assert mesh.n_elements == 1


def test_explicit_nodes():
    _, mesh, _ = parse_config({"nodes": [0, 0.1, 0.5, 1]})
    assert mesh.n_elements == 3
    with pytest.raises(ConfigError):
        parse_config({"nodes": [0, 0.5, 0.4, 1]})


def test_load_problem(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"c": -20, "seed": 3}))
    spec, _, opts = load_problem(path)
    assert spec.c == -20 and opts.seed == 3
    with pytest.raises(OSError):
        load_problem(tmp_path / "missing.json")


def test_eval_coefficient_examples():
    assert eval_coefficient(CoefficientField.constant(2.0), 0.77) == 2.0
    tab = CoefficientField.table([0, 1], [1, 3])
    assert eval_coefficient(tab, 0.5) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        eval_coefficient(CoefficientField.constant(1.0), 1.5)


def test_polynomial_and_derivative():
    f = CoefficientField.polynomial([1.0, 2.0, 3.0])
    x = np.linspace(0, 1, 7)
    assert np.allclose(f(x), 1 + 2 * x + 3 * x**2, rtol=0, atol=1e-15)
    assert np.allclose(f.derivative(x), 2 + 6 * x, rtol=0, atol=1e-14)
    assert f.degree == 2


def test_table_continuity_under_refinement():
    tab = CoefficientField.table([0, 0.3, 1], [1, 4, 2])
    for d in (1e-2, 1e-4, 1e-6):
        assert abs(tab(0.3 + d) - tab(0.3)) < 10 * d


def test_scan_monotone_in_density():
    # dips below zero only on a narrow window around x=0.50005
    tab = CoefficientField.table([0, 0.5, 0.50005, 0.5001, 1], [1, 1, -1, 1, 1])
    coarse_min = tab.scan(10_000)[1]
    fine_min = tab.scan(100_000)[1]
    assert coarse_min < 0 and fine_min < 0


def test_certify_sets_eps0():
    f = CoefficientField.polynomial([2.0, -1.0]).certify("p")
    assert f.eps0 == pytest.approx(1.0)
    with pytest.raises(NotPositiveError):
        CoefficientField.polynomial([0.5, -1.0]).certify("r")


def test_spec_requires_certified_fields():
    with pytest.raises(ConfigError):
        ProblemSpec.build(p=CoefficientField.polynomial([1.0, -2.0]))
    spec = ProblemSpec.build(c=-3, alpha=2, bc="clamped_mass_end")
    assert spec.with_bc(BoundaryKind.CLAMPED_CLAMPED).alpha == 2
    assert json.loads(json.dumps(spec.to_json()))["bc"] == "clamped_mass_end"


def test_reflected_and_scaled():
    f = CoefficientField.polynomial([1.0, 1.0])
    x = np.linspace(0, 1, 5)
    assert np.allclose(f.reflected()(x), f(1 - x))
    assert np.allclose(f.scaled(3.0)(x), 3 * f(x))
    t = CoefficientField.table([0, 0.2, 1], [1, 2, 3])
    assert np.allclose(t.reflected()(x), t(1 - x))


def test_mesh():
    m = Mesh.uniform(4)
    assert m.n_elements == 4 and np.allclose(m.h, 0.25)
    r = m.refined()
    assert r.n_elements == 8 and np.all(np.isin(m.nodes, r.nodes))
    g = m.with_end_grading()
    assert g.nodes[0] == 0 and g.nodes[-1] == 1 and g.n_elements == 8
    assert Mesh.uniform(4) == m and hash(Mesh.uniform(4)) == hash(m)
    with pytest.raises(ConfigError):
        Mesh(np.array([0.0, 0.5]))
