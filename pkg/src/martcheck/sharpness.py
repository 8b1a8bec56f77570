"""Numerical sharpness probes for the one-step and tree inequalities.

The central quantity is the two-point gain

    rio_gain(a, b, p) = (||a + Y||_{L^p}^2 - a^2) / ||Y||_{L^p}^2,  Y = +-b,

which approaches the one-step constant p-1 as b -> 0. Searches maximize a
gain (two-point families, bound p-1) or a normalized lhs/rhs ratio
(random-tree families, bound 1), and flag any run whose best exceeds the
bound beyond 1e-9 as a violation finding.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ineq, ptree
from .errors import ConfigError, DomainError
from .ptree import as_exponent

SOUND_TOL = 1e-9
COLLAPSE_DIAMETER = 1e-10

_SEARCH_STREAM = 13

FAMILY_TAGS = ("RIO-TWO-POINT", "ASYM-TWO-POINT", "RANDOM-TREE")
METHODS = ("grid", "random", "nelder-mead")


def _check_scale(name: str, v: float) -> float:
    v = float(v)
    if not math.isfinite(v) or v <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {v!r}")
    return v


def _sym_even_series(p: float, r: float) -> float:
    """sum_{k>=1} C(p,2k) r^(2k) = (  (1+r)^p + (1-r)^p )/2 - 1.

    Termwise evaluation; only used where p*r < 1 so terms decay from the
    first one and no cancellation occurs. Exact cutoff for even integer p.
    """
    term = 0.5 * p * (p - 1.0) * r * r
    total = term
    for k in range(1, 40):
        term *= (p - 2 * k) * (p - 2 * k - 1) * r * r / ((2 * k + 1) * (2 * k + 2))
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def _asym_moment_series(p: float, r: float, q: float) -> float:
    """sum_{k>=2} C(p,k) r^k E[Y0^k] for Y0 = 1-q w.p. q, -q w.p. 1-q.

    Equals E[(1+rY0)^p] - 1 since the k=0,1 terms are 1 and 0 (mean zero).
    """
    coef = 0.5 * p * (p - 1.0)
    up, dn = 1.0 - q, -q
    rk, uk, dk = r * r, up * up, dn * dn
    total = coef * rk * (q * uk + (1.0 - q) * dk)
    for k in range(2, 60):
        coef *= (p - k) / (k + 1.0)
        rk *= r
        uk *= up
        dk *= dn
        total += coef * rk * (q * uk + (1.0 - q) * dk)
        # odd moments vanish at q = 1/2, so bound the tail by magnitudes
        if abs(coef) * rk * (q * abs(uk) + (1.0 - q) * abs(dk)) <= 1e-18 * abs(total):
            break
    return total


def rio_gain(a, b, p) -> float:
    """Exact two-point gain for X = a constant, Y = +-b with probability 1/2.

    Evaluated as gain(1, b/a, p). The inner moment uses the even binomial
    series when p*b/a is small (the expm1 pair would cancel to O(b^2) and
    lose the signal) and expm1/log1p otherwise, so no b > 0 regime loses
    accuracy to cancellation.
    """
    p = as_exponent(p)
    a = _check_scale("a", a)
    b = _check_scale("b", b)
    r = b / a
    if r < 0.1 and p * r < 1.0:
        s = _sym_even_series(p, r)
    elif r < 1.0:
        s = 0.5 * (math.expm1(p * math.log1p(r)) + math.expm1(p * math.log1p(-r)))
    else:
        s = 0.5 * ((1.0 + r) ** p + (r - 1.0) ** p) - 1.0
    return math.expm1((2.0 / p) * math.log1p(s)) / (r * r)


def asym_two_point_gain(a, b, q, p) -> float:
    """Gain for the centered asymmetric family Y = b(1-q) w.p. q, -bq w.p. 1-q."""
    p = as_exponent(p)
    a = _check_scale("a", a)
    b = _check_scale("b", b)
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in ]0,1[, got {q!r}")
    r = b / a
    if r < 0.1 and p * r < 1.0:
        s = _asym_moment_series(p, r, q)
    else:
        up = r * (1.0 - q)
        dn = r * q
        s = q * math.expm1(p * math.log1p(up))
        if dn < 1.0:
            s += (1.0 - q) * math.expm1(p * math.log1p(-dn))
        else:
            s += (1.0 - q) * ((dn - 1.0) ** p - 1.0)
    w = q * (1.0 - q) ** p + (1.0 - q) * q ** p
    return math.expm1((2.0 / p) * math.log1p(s)) / (r * r * w ** (2.0 / p))


def asymptotic_gain_probe(p, b_sequence: Sequence[float]) -> list[float]:
    """rio_gain(1, b, p) along a decreasing positive b sequence.

    The tail approaches p-1 from below; the final entry sits within
    10 * b_last of the limit for the b scales used in the test suites.
    """
    p = as_exponent(p)
    bs = [float(b) for b in b_sequence]
    if not bs or any(b <= 0.0 for b in bs):
        raise DomainError("b sequence must be nonempty and positive")
    if any(b1 <= b2 for b1, b2 in zip(bs, bs[1:])):
        raise DomainError("b sequence must be strictly decreasing")
    return [rio_gain(1.0, b, p) for b in bs]


@dataclass(frozen=True)
class FamilySpec:
    """A parametrized witness family for one inequality.

    RIO-TWO-POINT   params a, b        (boxes a_box, b_box)
    ASYM-TWO-POINT  params a, b, q     (boxes a_box, b_box, q_box)
    RANDOM-TREE     param tree_seed    (depth, dim, branching fixed)
    """

    tag: str
    p: float
    a_box: tuple[float, float] | None = None
    b_box: tuple[float, float] | None = None
    q_box: tuple[float, float] | None = None
    depth: int | None = None
    dim: int | None = None
    branching: tuple[int, ...] = (2, 3)

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ConfigError(f"unknown family tag {self.tag!r}; known: {FAMILY_TAGS}")
        object.__setattr__(self, "p", as_exponent(self.p))
        if self.tag == "RANDOM-TREE":
            if self.depth is None or self.depth < 1 or self.dim is None or self.dim < 1:
                raise ConfigError("RANDOM-TREE needs depth >= 1 and dim >= 1")
            if self.a_box or self.b_box or self.q_box:
                raise ConfigError("RANDOM-TREE takes no parameter boxes")
            return
        for name in ("a_box", "b_box"):
            box = getattr(self, name)
            if box is None:
                raise ConfigError(f"{self.tag} needs {name}")
            lo, hi = (float(box[0]), float(box[1]))
            if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi):
                raise ConfigError(f"{name} must satisfy 0 < lo <= hi")
            object.__setattr__(self, name, (lo, hi))
        if self.tag == "ASYM-TWO-POINT":
            if self.q_box is None:
                raise ConfigError("ASYM-TWO-POINT needs q_box")
            lo, hi = (float(self.q_box[0]), float(self.q_box[1]))
            if not (0.0 < lo <= hi < 1.0):
                raise ConfigError("q_box must satisfy 0 < lo <= hi < 1")
            object.__setattr__(self, "q_box", (lo, hi))
        elif self.q_box is not None:
            raise ConfigError("q_box only applies to ASYM-TWO-POINT")


@dataclass(frozen=True)
class SearchConfig:
    family: FamilySpec
    method: str
    budget: int
    seed: int
    target: str = "RIO-STEP"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; known: {METHODS}")
        if int(self.budget) < 1:
            raise ConfigError("budget must be >= 1")
        object.__setattr__(self, "budget", int(self.budget))
        object.__setattr__(self, "seed", int(self.seed))
        target = ineq.coerce_id(self.target)
        object.__setattr__(self, "target", target.value)
        if self.family.tag == "RANDOM-TREE":
            if target not in ineq.DISCRETE_EVAL_IDS:
                raise ConfigError(
                    f"RANDOM-TREE target must be a tree inequality, got {target.value}")
            if self.method == "nelder-mead":
                raise ConfigError("nelder-mead needs continuous parameters; "
                                  "RANDOM-TREE supports grid and random")
        elif target is not ineq.InequalityId.RIO_STEP:
            raise ConfigError(f"{self.family.tag} maximizes the RIO-STEP gain only")


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one search run.

    best_ratio is the gain (two-point families) or lhs/rhs (tree families);
    bound is the matching soundness cap (p-1 or 1.0) and exceeded flags a
    best_ratio above bound + 1e-9, a violation finding. trace lists the
    improving (params, ratio) steps in evaluation order.
    """

    best_ratio: float
    best_params: dict
    evaluations: int
    trace: tuple[tuple[dict, float], ...]
    bound: float
    exceeded: bool


def family_ratio(family: FamilySpec, params: dict, target: str = "RIO-STEP") -> float:
    """Evaluate one parameter point of a family. Pure and deterministic."""
    if family.tag == "RIO-TWO-POINT":
        return rio_gain(params["a"], params["b"], family.p)
    if family.tag == "ASYM-TWO-POINT":
        return asym_two_point_gain(params["a"], params["b"], params["q"], family.p)
    tree = ptree.random_tree(family.depth, family.dim, int(params["tree_seed"]),
                             branching=family.branching)
    report = ineq.eval_discrete(tree, tree.depth, family.p, target)
    return report.ratio


class _BudgetExhausted(Exception):
    pass


class _Recorder:
    """Wraps the evaluator: budget accounting, incumbent, improving trace.

    Ties on the ratio go to the lexicographically smallest parameter vector
    (parameter names in sorted order)."""

    def __init__(self, evaluate: Callable[[dict], float], names: Sequence[str], budget: int):
        self.evaluate = evaluate
        self.names = tuple(sorted(names))
        self.budget = budget
        self.count = 0
        self.best_ratio = -math.inf
        self.best_key: tuple | None = None
        self.best_params: dict = {}
        self.trace: list[tuple[dict, float]] = []

    def __call__(self, params: dict) -> float:
        if self.count >= self.budget:
            raise _BudgetExhausted
        self.count += 1
        ratio = self.evaluate(params)
        key = tuple(params[name] for name in self.names)
        if ratio > self.best_ratio or (ratio == self.best_ratio and
                                       (self.best_key is None or key < self.best_key)):
            self.best_ratio = ratio
            self.best_key = key
            self.best_params = dict(params)
            self.trace.append((dict(params), ratio))
        return ratio


def nelder_mead(fn: Callable[[np.ndarray], float], x0: Sequence[float],
                step: Sequence[float], budget: int, *,
                reflect: float = 1.0, expand: float = 2.0,
                contract: float = 0.5, shrink: float = 0.5,
                collapse: float = COLLAPSE_DIAMETER) -> tuple[np.ndarray, float, int]:
    """Minimize fn with a plain Nelder-Mead simplex.

    Coefficients (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
    When the simplex diameter drops below `collapse` the simplex is rebuilt
    around the incumbent with the original steps. Stops after `budget`
    evaluations and returns (best point, best value, evaluations used).
    """
    x0 = np.asarray(x0, dtype=float)
    step = np.asarray(step, dtype=float)
    dims = len(x0)
    evals = 0
    best_x, best_f = x0.copy(), math.inf

    def call(x: np.ndarray) -> float:
        nonlocal evals, best_x, best_f
        if evals >= budget:
            raise _BudgetExhausted
        evals += 1
        f = fn(x)
        if f < best_f:
            best_f, best_x = f, x.copy()
        return f

    def fresh(center: np.ndarray) -> tuple[list[np.ndarray], list[float]]:
        pts = [center.copy()]
        pts += [center + step * np.eye(dims)[i] for i in range(dims)]
        return pts, [call(q) for q in pts]

    try:
        pts, fv = fresh(x0)
        while True:
            order = sorted(range(dims + 1), key=lambda i: fv[i])
            pts = [pts[i] for i in order]
            fv = [fv[i] for i in order]
            diameter = max(float(np.linalg.norm(q - pts[0])) for q in pts[1:])
            if diameter < collapse:
                pts, fv = fresh(pts[0])
                continue
            centroid = np.mean(pts[:-1], axis=0)
            xr = centroid + reflect * (centroid - pts[-1])
            fr = call(xr)
            if fr < fv[0]:
                xe = centroid + expand * (xr - centroid)
                fe = call(xe)
                pts[-1], fv[-1] = (xe, fe) if fe < fr else (xr, fr)
            elif fr < fv[-2]:
                pts[-1], fv[-1] = xr, fr
            else:
                xc = centroid + contract * (pts[-1] - centroid)
                fc = call(xc)
                if fc < fv[-1]:
                    pts[-1], fv[-1] = xc, fc
                else:
                    for i in range(1, dims + 1):
                        pts[i] = pts[0] + shrink * (pts[i] - pts[0])
                        fv[i] = call(pts[i])
    except _BudgetExhausted:
        pass
    return best_x, best_f, evals


def _two_point_dims(family: FamilySpec) -> list[tuple[str, float, float, bool]]:
    """(name, lo, hi, log_scale) for the family's continuous parameters."""
    dims = [("a", *family.a_box, True), ("b", *family.b_box, True)]
    if family.tag == "ASYM-TWO-POINT":
        dims.append(("q", *family.q_box, False))
    return dims


def _grid_axes(dims, budget: int) -> list[np.ndarray]:
    free = [d for d in dims if d[1] < d[2]]
    res = max(2, int(len(free) and math.floor(budget ** (1.0 / len(free)))))
    axes = []
    for name, lo, hi, log_scale in dims:
        if lo == hi:
            axes.append(np.array([lo]))
        elif log_scale:
            axes.append(np.geomspace(lo, hi, res))
        else:
            axes.append(np.linspace(lo, hi, res))
    return axes


def search(config: SearchConfig) -> SearchResult:
    """Run the configured maximization; deterministic for a fixed config."""
    family = config.family
    if family.tag == "RANDOM-TREE":
        rec = _Recorder(lambda prm: family_ratio(family, prm, config.target),
                        ("tree_seed",), config.budget)
        try:
            if config.method == "random":
                rng = np.random.Generator(np.random.Philox(
                    np.random.SeedSequence(entropy=config.seed, spawn_key=(_SEARCH_STREAM,))))
                for _ in range(config.budget):
                    rec({"tree_seed": int(rng.integers(0, 2**63))})
            else:  # grid enumerates tree seeds 0..budget-1
                for i in range(config.budget):
                    rec({"tree_seed": i})
        except _BudgetExhausted:
            pass
        bound = 1.0
    else:
        dims = _two_point_dims(family)
        names = [d[0] for d in dims]
        rec = _Recorder(lambda prm: family_ratio(family, prm, config.target),
                        names, config.budget)
        try:
            if config.method == "grid":
                for values in itertools.product(*_grid_axes(dims, config.budget)):
                    rec(dict(zip(names, map(float, values))))
            elif config.method == "random":
                rng = np.random.Generator(np.random.Philox(
                    np.random.SeedSequence(entropy=config.seed, spawn_key=(_SEARCH_STREAM,))))
                for _ in range(config.budget):
                    prm = {}
                    for name, lo, hi, log_scale in dims:
                        if log_scale:
                            prm[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
                        else:
                            prm[name] = float(rng.uniform(lo, hi))
                    rec(prm)
            else:
                free = [d for d in dims if d[1] < d[2]]
                fixed = {d[0]: d[1] for d in dims if d[1] == d[2]}

                def to_params(z: np.ndarray) -> dict:
                    prm = dict(fixed)
                    for (name, lo, hi, log_scale), zi in zip(free, z):
                        v = math.exp(zi) if log_scale else zi
                        prm[name] = float(min(max(v, lo), hi))
                    return prm

                if not free:
                    rec(dict(fixed))
                else:
                    x0, step = [], []
                    for name, lo, hi, log_scale in free:
                        if log_scale:
                            x0.append(0.5 * (math.log(lo) + math.log(hi)))
                            step.append(0.25 * (math.log(hi) - math.log(lo)))
                        else:
                            x0.append(0.5 * (lo + hi))
                            step.append(0.25 * (hi - lo))
                    nelder_mead(lambda z: -rec(to_params(z)), x0, step, config.budget)
        except _BudgetExhausted:
            pass
        bound = family.p - 1.0
    return SearchResult(
        best_ratio=rec.best_ratio, best_params=rec.best_params,
        evaluations=rec.count, trace=tuple(rec.trace), bound=bound,
        exceeded=rec.best_ratio > bound + SOUND_TOL)
