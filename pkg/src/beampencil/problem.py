"""Coefficient fields, problem instances, meshes and config parsing."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

SCAN_POINTS = 10_000
DEFAULT_SAMPLES = 2001


class ConfigError(ValueError):
    """Malformed or inconsistent problem configuration."""


class NotPositiveError(ConfigError):
    def __init__(self, name, x, value):
        self.name, self.x, self.value = name, float(x), float(value)
        super().__init__(f"{name} not uniformly positive at x={self.x:.6g} (value {self.value:.6g})")


@dataclass(frozen=True)
class CoefficientField:
    """A real function on [0, 1]: constant, polynomial or piecewise-linear table.

    ``values`` holds the constant (1-tuple), the polynomial coefficients
    ``a0, a1, ...`` in increasing degree, or the flattened table.  Tables keep
    their abscissae in ``knots``.  ``eps0`` is set once positivity has been
    certified by :meth:`certify`.
    """

    kind: str
    values: tuple
    knots: tuple = ()
    eps0: float | None = None

    def __post_init__(self):
        if self.kind not in ("const", "poly", "table"):
            raise ConfigError(f"unknown coefficient kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0 or not np.all(np.isfinite(vals)):
            raise ConfigError("coefficient values must be finite and non-empty")
        if self.kind == "const" and vals.size != 1:
            raise ConfigError("constant field takes exactly one value")
        if self.kind == "table":
            xs = np.asarray(self.knots, dtype=float)
            if xs.size != vals.size or xs.size < 2:
                raise ConfigError("table needs at least two (x, value) pairs")
            if np.any(np.diff(xs) <= 0):
                raise ConfigError("table abscissae must be strictly increasing")
            if abs(xs[0]) > 1e-12 or abs(xs[-1] - 1.0) > 1e-12:
                raise ConfigError("table must span exactly [0, 1]")

    @classmethod
    def constant(cls, value):
        return cls("const", (float(value),))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("poly", tuple(float(a) for a in coeffs))

    @classmethod
    def table(cls, xs, values):
        xs = np.asarray(xs, dtype=float)
        return cls("table", tuple(np.asarray(values, dtype=float).tolist()), tuple(xs.tolist()))

    @property
    def positive(self):
        return self.eps0 is not None

    @property
    def degree(self):
        """Polynomial degree; tables count as piecewise linear."""
        if self.kind == "const":
            return 0
        if self.kind == "poly":
            return len(self.values) - 1
        return 1

    @property
    def breakpoints(self):
        """Interior points where the field is only continuous (table knots)."""
        if self.kind == "table":
            return np.asarray(self.knots[1:-1], dtype=float)
        return np.empty(0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full_like(x, self.values[0])
        if self.kind == "poly":
            return P.polyval(x, np.asarray(self.values))
        return np.interp(x, self.knots, self.values)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.zeros_like(x)
        if self.kind == "poly":
            return P.polyval(x, P.polyder(np.asarray(self.values)))
        xs = np.asarray(self.knots)
        slopes = np.diff(self.values) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def scan(self, points=SCAN_POINTS):
        """Minimum over a uniform grid of ``points`` intervals (plus table knots)."""
        xs = np.linspace(0.0, 1.0, points + 1)
        if self.kind == "table":
            xs = np.union1d(xs, self.knots)
        vals = self(xs)
        i = int(np.argmin(vals))
        return float(xs[i]), float(vals[i])

    def certify(self, name="coefficient", points=SCAN_POINTS):
        """Return a copy flagged uniformly positive, or raise NotPositiveError."""
        x, v = self.scan(points)
        if not v > 0.0:
            raise NotPositiveError(name, x, v)
        return CoefficientField(self.kind, self.values, self.knots, v)

    def scaled(self, factor):
        vals = tuple(float(factor) * v for v in self.values)
        eps0 = None
        if self.eps0 is not None and factor > 0:
            eps0 = self.eps0 * factor
        return CoefficientField(self.kind, vals, self.knots, eps0)

    def reflected(self):
        """The field x -> f(1 - x)."""
        if self.kind == "const":
            return self
        if self.kind == "poly":
            # f(1 - x) via composition with the polynomial 1 - x
            out = np.zeros(1)
            base = np.array([1.0])
            for a in self.values:
                out = P.polyadd(out, a * base)
                base = P.polymul(base, [1.0, -1.0])
            return CoefficientField("poly", tuple(out.tolist()), (), self.eps0)
        xs = 1.0 - np.asarray(self.knots)[::-1]
        xs[0], xs[-1] = 0.0, 1.0
        return CoefficientField("table", tuple(self.values[::-1]), tuple(xs.tolist()), self.eps0)

    def to_json(self):
        if self.kind == "const":
            return {"const": self.values[0]}
        if self.kind == "poly":
            return {"poly": list(self.values)}
        return {"table": [[x, v] for x, v in zip(self.knots, self.values)]}


def eval_coefficient(fld: CoefficientField, x):
    """Evaluate ``fld`` at points of [0, 1]; raises ValueError outside."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0) or not np.all(np.isfinite(xa)):
        raise ValueError(f"x outside [0, 1]: {x!r}")
    out = fld(xa)
    return float(out) if out.ndim == 0 else out


class BoundaryKind(enum.Enum):
    CLAMPED_CLAMPED = "clamped_clamped"
    CLAMPED_MASS_END = "clamped_mass_end"

    @property
    def mass_end(self):
        return self is BoundaryKind.CLAMPED_MASS_END


@dataclass(frozen=True)
class ProblemSpec:
    """The pencil instance: coefficients p, r, scalars c, alpha and the BC family."""

    p: CoefficientField
    r: CoefficientField
    c: float = 0.0
    alpha: float = 0.0
    bc: BoundaryKind = BoundaryKind.CLAMPED_CLAMPED

    def __post_init__(self):
        if not (self.p.positive and self.r.positive):
            raise ConfigError("p and r must be certified uniformly positive")
        for name in ("c", "alpha"):
            v = getattr(self, name)
            if isinstance(v, complex) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite real number")
        if not isinstance(self.bc, BoundaryKind):
            raise ConfigError(f"bad boundary kind {self.bc!r}")

    @classmethod
    def build(cls, p=1.0, r=1.0, c=0.0, alpha=0.0, bc=BoundaryKind.CLAMPED_CLAMPED):
        """Convenience constructor accepting numbers or fields."""
        p = p if isinstance(p, CoefficientField) else CoefficientField.constant(p)
        r = r if isinstance(r, CoefficientField) else CoefficientField.constant(r)
        if isinstance(bc, str):
            bc = BoundaryKind(bc)
        return cls(p.certify("p"), r.certify("r"), float(c), float(alpha), bc)

    def with_bc(self, bc):
        return ProblemSpec(self.p, self.r, self.c, self.alpha, bc)

    def to_json(self):
        return {"p": self.p.to_json(), "r": self.r.to_json(), "c": self.c,
                "alpha": self.alpha, "bc": self.bc.value}


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigError("mesh needs at least one element")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ConfigError("mesh must start at 0 and end at 1")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, n_elements):
        n = int(n_elements)
        if n < 1:
            raise ConfigError("n_elements must be positive")
        return cls(np.linspace(0.0, 1.0, n + 1))

    @property
    def n_elements(self):
        return self.nodes.size - 1

    @property
    def h(self):
        return np.diff(self.nodes)

    def refined(self):
        """Bisect every element."""
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return Mesh(np.sort(np.concatenate([self.nodes, mids])))

    def with_end_grading(self, levels=2):
        """Add geometric nodes ``h*10^-k`` (k = 1..levels) next to both endpoints.

        The clamped slope condition y'(0)=0 puts a boundary layer into the
        lower-order form; these nodes resolve it.  Deeper grading makes A
        numerically indefinite once the end elements shrink below ~1e-6.
        """
        h0, h1 = self.h[0], self.h[-1]
        k = 10.0 ** -np.arange(1, levels + 1)
        extra = np.concatenate([h0 * k, 1.0 - h1 * k])
        return Mesh(np.union1d(self.nodes, extra))

    def __eq__(self, other):
        return isinstance(other, Mesh) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())


@dataclass(frozen=True)
class RunOptions:
    samples: int = DEFAULT_SAMPLES
    seed: int = 20240101
    extra: dict = field(default_factory=dict)


def _parse_field(name, obj):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        fld = CoefficientField.constant(obj)
    elif isinstance(obj, dict) and len(obj) == 1:
        (kind, val), = obj.items()
        try:
            if kind == "const":
                fld = CoefficientField.constant(float(val))
            elif kind == "poly":
                fld = CoefficientField.polynomial([float(a) for a in val])
            elif kind == "table":
                pairs = np.asarray(val, dtype=float)
                if pairs.ndim != 2 or pairs.shape[1] != 2:
                    raise ConfigError(f"{name}: table entries must be [x, value] pairs")
                fld = CoefficientField.table(pairs[:, 0], pairs[:, 1])
            else:
                raise ConfigError(f"{name}: unknown coefficient kind {kind!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{name}: {exc}") from exc
    else:
        raise ConfigError(f"{name}: expected {{'const'|'poly'|'table': ...}}")
    return fld.certify(name)


def _real(cfg, key, default=None):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"missing key {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a real number")
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    return float(v)


def parse_config(cfg: dict):
    """Validate a decoded config mapping; returns ``(spec, mesh, options)``."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    known = {"p", "r", "c", "alpha", "bc", "n_elements", "samples", "seed", "nodes"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    p = _parse_field("p", cfg.get("p", 1.0))
    r = _parse_field("r", cfg.get("r", 1.0))
    c = _real(cfg, "c", 0.0)
    alpha = _real(cfg, "alpha", 0.0)
    try:
        bc = BoundaryKind(cfg.get("bc", "clamped_clamped"))
    except ValueError:
        raise ConfigError(f"bc must be one of {[b.value for b in BoundaryKind]}") from None
    if "nodes" in cfg:
        mesh = Mesh(np.asarray(cfg["nodes"], dtype=float))
    else:
        n = cfg.get("n_elements", 64)
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError("n_elements must be an integer")
        mesh = Mesh.uniform(n)
    min_n = 2 if bc is BoundaryKind.CLAMPED_CLAMPED else 1
    if mesh.n_elements < min_n:
        raise ConfigError(f"n_elements must be >= {min_n} for {bc.value}")
    samples = cfg.get("samples", DEFAULT_SAMPLES)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 3:
        raise ConfigError("samples must be an integer >= 3")
    seed = cfg.get("seed", RunOptions.seed)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    spec = ProblemSpec(p, r, c, alpha, bc)
    return spec, mesh, RunOptions(samples=samples, seed=seed)


def parse_problem(config_text: str):
    """Parse JSON config text into ``(ProblemSpec, Mesh, RunOptions)``."""
    try:
        cfg = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return parse_config(cfg)


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())
