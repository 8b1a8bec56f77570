"""Moment inequality evaluators for discrete martingales on finite trees.

Every evaluator returns an InequalityReport whose sides are exact (no
sampling). The squared-display convention is used throughout: lhs and rhs
are the squared L^p norms, except DOOB which is stated unsquared.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import ptree
from .errors import DomainError, PreconditionError, QuadratureError
from .ptree import ProbTree, as_exponent

ABS_TOL = 1e-9        # lhs <= rhs + ABS_TOL defines "satisfied" for exact sides
COND_MEAN_TOL = 1e-12

_SWEEP_STREAM = 12    # spawn-key domain tag for the random-tree sweep


class InequalityId(enum.Enum):
    """Closed set of discrete inequality identifiers."""

    D_BURK_1 = "D-BURK-1"
    D_BURK_2 = "D-BURK-2"
    PROP1_MAIN = "PROP1-MAIN"
    PROP1_MAX = "PROP1-MAX"
    RIO_STEP = "RIO-STEP"
    RIO_CHAIN = "RIO-CHAIN"
    DOOB = "DOOB"


#: ids accepted by eval_discrete (RIO-STEP acts on a distribution pair instead)
DISCRETE_EVAL_IDS = (
    InequalityId.D_BURK_1,
    InequalityId.D_BURK_2,
    InequalityId.PROP1_MAIN,
    InequalityId.PROP1_MAX,
    InequalityId.RIO_CHAIN,
    InequalityId.DOOB,
)


@dataclass(frozen=True)
class InequalityReport:
    """One verified comparison lhs <= constant * (rhs / constant).

    For exact evaluators `satisfied` means lhs <= rhs + 1e-9 and `verdict`
    is "satisfied" or "violation". Monte Carlo evaluators fill the ci_*
    half-widths and may report the verdict "inconclusive" or
    "violation-candidate" instead. `ratio` is lhs/rhs, with 0/0 mapped to 0.
    """

    id: str
    p: float
    n_or_t: float
    lhs: float
    rhs: float
    constant: float
    ratio: float
    satisfied: bool
    verdict: str
    ci_lhs: float | None = None
    ci_rhs: float | None = None
    seed: int | None = None
    notes: str = ""


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0.0:
        return lhs / rhs
    return 0.0 if lhs == 0.0 else float("inf")


def exact_report(ineq_id: str, p: float, n_or_t: float, lhs: float, rhs: float,
                 constant: float, notes: str = "") -> InequalityReport:
    satisfied = lhs <= rhs + ABS_TOL
    return InequalityReport(
        id=ineq_id, p=p, n_or_t=n_or_t, lhs=lhs, rhs=rhs, constant=constant,
        ratio=_ratio(lhs, rhs), satisfied=satisfied,
        verdict="satisfied" if satisfied else "violation", notes=notes)


def coerce_id(value) -> InequalityId:
    if isinstance(value, InequalityId):
        return value
    try:
        return InequalityId(str(value))
    except ValueError:
        known = ", ".join(i.value for i in InequalityId)
        raise DomainError(f"unknown inequality id {value!r}; known: {known}") from None


def eval_discrete(tree: ProbTree, n: int, p, ineq_id) -> InequalityReport:
    """Evaluate one inequality on a valid tree at level n, exponent p.

    D-BURK-1:   ||M_n||_p^2          <= (p-1)^2 * || sum ||d_k||^2 ||_{p/2}
    D-BURK-2:   ||sup ||M||||_p^2    <= p^2     * || sum ||d_k||^2 ||_{p/2}
    PROP1-MAIN: ||M_n||_p^2          <= (p-1)   * sum_k ||d_k||_p^2
    PROP1-MAX:  ||sup ||M||||_p^2    <= p^2/(p-1) * sum_k ||d_k||_p^2
    RIO-CHAIN:  ||M_n||_p^2          <= ||M_0||^2 + (p-1) * sum_{k>=1} ||d_k||_p^2
    DOOB:       ||sup ||M||||_p      <= p/(p-1) * ||M_n||_p        (unsquared)
    """
    p = as_exponent(p)
    iid = coerce_id(ineq_id)
    if iid is InequalityId.RIO_STEP:
        raise DomainError("RIO-STEP compares a distribution pair; use eval_rio_step")
    if iid is InequalityId.D_BURK_1:
        lhs = ptree.lp_norm(tree, n, p) ** 2
        constant = (p - 1.0) ** 2
        rhs = constant * ptree.quadratic_sum_norm(tree, n, p)
    elif iid is InequalityId.D_BURK_2:
        lhs = ptree.sup_lp_norm(tree, n, p) ** 2
        constant = p * p
        rhs = constant * ptree.quadratic_sum_norm(tree, n, p)
    elif iid is InequalityId.PROP1_MAIN:
        lhs = ptree.lp_norm(tree, n, p) ** 2
        constant = p - 1.0
        rhs = constant * ptree.increment_lp_sum(tree, n, p)
    elif iid is InequalityId.PROP1_MAX:
        lhs = ptree.sup_lp_norm(tree, n, p) ** 2
        constant = p * p / (p - 1.0)
        rhs = constant * ptree.increment_lp_sum(tree, n, p)
    elif iid is InequalityId.RIO_CHAIN:
        lhs = ptree.lp_norm(tree, n, p) ** 2
        constant = p - 1.0
        start_sq = ptree.increment_lp_sum(tree, 0, p)
        rhs = start_sq + constant * (ptree.increment_lp_sum(tree, n, p) - start_sq)
    else:  # DOOB
        lhs = ptree.sup_lp_norm(tree, n, p)
        constant = p / (p - 1.0)
        rhs = constant * ptree.lp_norm(tree, n, p)
    return exact_report(iid.value, p, float(n), lhs, rhs, constant)


Atom = tuple[float, Sequence[float]]


def _norm_pow_moment(atoms: Iterable[tuple[float, np.ndarray]], p: float) -> float:
    return float(sum(q * float(np.linalg.norm(v)) ** p for q, v in atoms))


def eval_rio_step(x_atoms: Sequence[Atom], y_given_x: Sequence[Sequence[Atom]],
                  p, constant: float | None = None) -> InequalityReport:
    """One-step bound ||X+Y||_p^2 <= ||X||_p^2 + (p-1) ||Y||_p^2.

    X is a finite distribution given as (prob, vector) atoms; y_given_x
    holds, for each X atom, the conditional distribution of Y, which must
    have zero mean (tolerance 1e-12). `constant` overrides p-1, which is
    how negative controls with a deliberately too-small constant are run.
    """
    p = as_exponent(p)
    if len(x_atoms) == 0 or len(x_atoms) != len(y_given_x):
        raise PreconditionError("need one conditional Y distribution per X atom")
    xs = [(float(q), np.asarray(v, dtype=float)) for q, v in x_atoms]
    qx = np.array([q for q, _ in xs])
    if np.any(qx <= 0.0) or abs(qx.sum() - 1.0) > COND_MEAN_TOL:
        raise PreconditionError("X atom probabilities must be positive and sum to 1")
    joint: list[tuple[float, np.ndarray, np.ndarray]] = []
    for (q, x), cond in zip(xs, y_given_x):
        cond = [(float(c), np.asarray(y, dtype=float)) for c, y in cond]
        cp = np.array([c for c, _ in cond])
        if len(cond) == 0 or np.any(cp <= 0.0) or abs(cp.sum() - 1.0) > COND_MEAN_TOL:
            raise PreconditionError("conditional probabilities must be positive and sum to 1")
        mean = sum(c * y for c, y in cond)
        resid = float(np.linalg.norm(mean))
        if resid > COND_MEAN_TOL:
            raise PreconditionError(
                f"conditional mean of Y must vanish; got norm {resid:.3g}")
        joint.extend((q * c, x, y) for c, y in cond)
    x_norm_sq = _norm_pow_moment(((q, x) for q, x in xs), p) ** (2.0 / p)
    y_norm_sq = _norm_pow_moment(((w, y) for w, _, y in joint), p) ** (2.0 / p)
    lhs = _norm_pow_moment(((w, x + y) for w, x, y in joint), p) ** (2.0 / p)
    c = (p - 1.0) if constant is None else float(constant)
    rhs = x_norm_sq + c * y_norm_sq
    return exact_report(InequalityId.RIO_STEP.value, p, 1.0, lhs, rhs, c)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


def _gauss_panels(f, edges: np.ndarray) -> float:
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(t.ravel()).reshape(t.shape)
    return float(np.sum((vals @ _GL_WEIGHTS) * half))


def _graded_edges(anchors: list[float], sigma: float = 0.25) -> np.ndarray:
    """Panel edges on [0,1] geometrically refined toward every anchor.

    Algebraic singularities t^a sit at the anchors (interval ends and
    integrand kinks); grading resolves them where uniform halving would
    need dozens of rounds for a close to 0."""
    edges = set(anchors)
    for i, b in enumerate(anchors):
        for other in (anchors[i - 1] if i > 0 else None,
                      anchors[i + 1] if i + 1 < len(anchors) else None):
            if other is None:
                continue
            half = 0.5 * abs(other - b)
            sign = 1.0 if other > b else -1.0
            step = half
            while step > 1e-15:
                edges.add(b + sign * step)
                step *= sigma
    return np.unique(np.fromiter(edges, dtype=float))


def adaptive_panel_quadrature(f, breakpoints: Sequence[float] = (),
                              tol: float = 1e-10, max_refine: int = 12) -> float:
    """Integrate f over [0,1] with 15-point Gauss panels, halving all panels
    until the total changes by less than tol * max(1, |integral|).

    Interior breakpoints (integrand kinks) become panel edges from the
    start, with geometrically graded panels toward them and toward 0 and 1.
    Raises QuadratureError with the achieved tolerance if refinement runs out.
    """
    anchors = sorted({0.0, 1.0, *(float(b) for b in breakpoints if 0.0 < b < 1.0)})
    edges = _graded_edges(anchors)
    prev = _gauss_panels(f, edges)
    achieved = float("inf")
    for _ in range(max_refine):
        edges = np.sort(np.concatenate([edges, 0.5 * (edges[1:] + edges[:-1])]))
        cur = _gauss_panels(f, edges)
        achieved = abs(cur - prev)
        if achieved <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature did not converge to {tol:g} (achieved {achieved:.3g})",
        achieved=achieved)


@dataclass(frozen=True)
class TaylorBound:
    lhs: float
    rhs: float
    satisfied: bool


def taylor_pointwise(x: Sequence[float], y: Sequence[float], p) -> TaylorBound:
    """Pointwise second-order bound for ||x+y||^p.

    lhs = ||x+y||^p
    rhs = ||x||^p + p ||x||^{p-2} <x,y>
          + p(p-1) * int_0^1 ||x+ty||^{p-2} ||y||^2 (1-t) dt

    The remainder integral is evaluated by adaptive panel quadrature with a
    panel edge at the norm minimizer t* = -<x,y>/||y||^2 when it lies in
    ]0,1[ (for 2 < p < 3 the integrand kinks there).
    """
    p = as_exponent(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d vectors of equal dimension")
    y_sq = float(y @ y)
    inner = float(x @ y)
    lhs = float(np.linalg.norm(x + y)) ** p
    head = float(np.linalg.norm(x)) ** p
    grad = p * float(np.linalg.norm(x)) ** (p - 2.0) * inner if inner != 0.0 else 0.0
    if y_sq == 0.0:
        remainder = 0.0
    else:
        def integrand(t: np.ndarray) -> np.ndarray:
            pts = x[None, :] + t[:, None] * y[None, :]
            r = np.linalg.norm(pts, axis=1)
            return r ** (p - 2.0) * y_sq * (1.0 - t)

        t_star = -inner / y_sq
        remainder = adaptive_panel_quadrature(integrand, breakpoints=(t_star,))
    rhs = head + grad + p * (p - 1.0) * remainder
    # rhs is a cancelling sum; its roundoff scales with the summed terms,
    # so the comparison tolerance must too
    scale = max(1.0, abs(lhs), head, abs(grad), p * (p - 1.0) * remainder)
    return TaylorBound(lhs=lhs, rhs=rhs, satisfied=lhs <= rhs + ABS_TOL * scale)


@dataclass(frozen=True)
class ConstantComparison:
    """Classic versus improved constants at one exponent."""

    p: float
    classic_main: float   # (p-1)^2
    new_main: float       # p-1
    classic_max: float    # p^2
    new_max: float        # p^2/(p-1)
    improved_main: bool
    improved_max: bool


def compare_constants(p) -> ConstantComparison:
    p = as_exponent(p)
    classic_main = (p - 1.0) ** 2
    new_main = p - 1.0
    classic_max = p * p
    new_max = p * p / (p - 1.0)
    return ConstantComparison(
        p=p, classic_main=classic_main, new_main=new_main,
        classic_max=classic_max, new_max=new_max,
        improved_main=new_main < classic_main,
        improved_max=new_max < classic_max)


def sweep_random_trees(count: int, max_depth: int, max_dim: int, seed: int,
                       p_values: Sequence[float],
                       ids: Sequence[InequalityId] = DISCRETE_EVAL_IDS,
                       ) -> Iterator[InequalityReport]:
    """Evaluate `ids` on `count` random trees, every level, every exponent.

    Tree t draws its depth in 1..max_depth and dimension in 1..max_dim from
    a substream derived from (seed, t), so the whole sweep is reproducible
    from the single seed.
    """
    p_values = [as_exponent(p) for p in p_values]
    ids = [coerce_id(i) for i in ids]
    for t in range(int(count)):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_SWEEP_STREAM, t))
        rng = np.random.Generator(np.random.Philox(ss))
        depth = int(rng.integers(1, int(max_depth) + 1))
        dim = int(rng.integers(1, int(max_dim) + 1))
        tree = ptree.random_tree(depth, dim, ss.spawn(1)[0])
        for n in range(tree.depth + 1):
            for p in p_values:
                for iid in ids:
                    report = eval_discrete(tree, n, p, iid)
                    yield InequalityReport(
                        id=report.id, p=report.p, n_or_t=report.n_or_t,
                        lhs=report.lhs, rhs=report.rhs, constant=report.constant,
                        ratio=report.ratio, satisfied=report.satisfied,
                        verdict=report.verdict, seed=int(seed),
                        notes=f"tree={t} depth={depth} dim={dim}")
