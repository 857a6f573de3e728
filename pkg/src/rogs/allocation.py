"""Confidence bounds over group weights and their minimisation on the simplex.

Every supported bound has the form

    delta(w) = 2 * sum_k exp(-(B w)_k)

for a non-negative exponent matrix ``B`` (rows are terms, or groups for the
per-group bound).  We minimise ``log sum_k exp(-(B w)_k)``, which has the
same minimiser, is convex, and does not underflow when ``eps^2 M`` is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp, softmax

from .grouping import GroupSet
from .pauli import Hamiltonian

SIMPLEX_TOL = 1e-9


class BoundKind(str, Enum):
    PER_OPERATOR = "per-op"
    PER_GROUP = "per-group"
    BERNSTEIN = "bernstein"


class AllocationError(RuntimeError):
    """Solver did not converge; ``best`` holds the best iterate found."""

    def __init__(self, message: str, best: "Allocation | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class OperatorStats:
    variance: np.ndarray
    max_abs: np.ndarray


@dataclass(frozen=True)
class BoundSpec:
    kind: BoundKind
    epsilon: float
    budget: int
    overlap_weights: np.ndarray | None = None  # (L, A), per-group bound only
    stats: OperatorStats | None = None  # bernstein only
    max_scope: str = "per_term"  # or "global": max over all terms

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundKind(self.kind))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.budget < 1:
            raise ValueError("budget must be a positive integer")
        if self.max_scope not in ("per_term", "global"):
            raise ValueError("max_scope must be 'per_term' or 'global'")
        if self.overlap_weights is not None:
            wo = np.asarray(self.overlap_weights, dtype=float)
            if np.any(wo < 0):
                raise ValueError("overlap weights must be non-negative")
            object.__setattr__(self, "overlap_weights", wo)
        if self.stats is not None and np.any(np.asarray(self.stats.variance) < 0):
            raise ValueError("variances must be non-negative")


def overlap_weights(groups: GroupSet, scheme: str = "inverse_count", low_fraction: float = 0.1) -> np.ndarray:
    """Split of each term across the groups containing it (rows sum to 1).

    ``inverse_count``: 1 / (number of groups holding the term)
    ``group_size``: proportional to the size of each holding group
    ``zero_low``: like ``inverse_count`` but groups smaller than
    ``low_fraction`` of the largest group get nothing, unless a term lives
    only in such groups
    """
    idx = groups.membership.astype(float)
    if scheme == "inverse_count":
        raw = idx
    elif scheme == "group_size":
        raw = idx * idx.sum(axis=0)[None, :]
    elif scheme == "zero_low":
        sizes = idx.sum(axis=0)
        keep = sizes >= low_fraction * sizes.max()
        raw = idx * keep[None, :]
        orphan = raw.sum(axis=1) == 0
        raw[orphan] = idx[orphan]
    else:
        raise ValueError(f"unknown overlap weight scheme {scheme!r}")
    return raw / raw.sum(axis=1, keepdims=True)


def exponent_matrix(spec: BoundSpec, groups: GroupSet, h: Hamiltonian) -> np.ndarray:
    """``B`` with ``delta(w) = 2 sum_k exp(-(B w)_k)`` for the chosen bound."""
    idx = groups.membership.astype(float)
    if idx.shape[0] != len(h):
        raise ValueError("group set does not match the Hamiltonian")
    scale = h.abs_coeff_sum
    if scale <= 0:
        raise ValueError("Hamiltonian has no non-identity weight to estimate")
    e2m = spec.epsilon**2 * spec.budget

    if spec.kind is BoundKind.PER_OPERATOR:
        return idx * (e2m / (2.0 * scale**2))

    if spec.kind is BoundKind.BERNSTEIN:
        if spec.stats is None:
            raise ValueError("bernstein bound needs operator variance statistics")
        var = np.asarray(spec.stats.variance, dtype=float)
        mx = np.asarray(spec.stats.max_abs, dtype=float)
        if var.shape != (len(h),) or mx.shape != (len(h),):
            raise ValueError("operator statistics must have one entry per term")
        if spec.max_scope == "global":
            mx = np.full_like(mx, mx.max())
        denom = np.maximum(var + spec.epsilon * mx / 3.0, 1e-12)
        return idx * (e2m / (2.0 * scale**2 * denom))[:, None]

    wo = spec.overlap_weights
    if wo is None:
        raise ValueError("per-group bound needs overlap weights")
    if wo.shape != idx.shape:
        raise ValueError("overlap weights must have shape (terms, groups)")
    if np.any(np.abs((wo * idx).sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("overlap weights must sum to 1 over each term's groups")
    A = idx.shape[1]
    coeffs = np.abs(h.coefficients)
    group_scale = A * (idx * wo * coeffs[:, None]).sum(axis=0)
    # a group whose weighted coefficients are all zero has a constant
    # estimator and can never exceed eps / A: drop its row
    live = group_scale > 0
    B = np.zeros((A, A))
    B[live, live] = e2m / (2.0 * group_scale[live] ** 2)
    return B[live]


def _check_simplex(w: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weight vector must have length {n}")
    if np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("weights are not on the probability simplex")
    return w


def _log_objective(B: np.ndarray, w: np.ndarray) -> float:
    return float(logsumexp(-(B @ w)))


def conf_bound(spec: BoundSpec, groups: GroupSet, h: Hamiltonian, w) -> float:
    """Failure probability bound ``delta`` for weights ``w`` (not clamped to 1)."""
    B = exponent_matrix(spec, groups, h)
    w = _check_simplex(w, B.shape[1])
    return 2.0 * math.exp(_log_objective(B, w))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum w = 1}`` by sorting."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, n + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class SolverReport:
    iterations: int
    stationarity: float
    converged: bool


@dataclass
class Allocation:
    weights: np.ndarray
    shots: np.ndarray
    epsilon: float
    budget: int
    bound_value: float
    kind: str = BoundKind.PER_OPERATOR.value
    report: SolverReport | None = field(default=None, repr=False)

    @property
    def support_size(self) -> int:
        """Groups that get at least one shot, i.e. distinct circuits run."""
        return int(np.count_nonzero(self.shots >= 1))

    n_circuit = support_size

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "epsilon": self.epsilon,
            "budget": self.budget,
            "weights": [float(x) for x in self.weights],
            "shots": [int(x) for x in self.shots],
            "delta": self.bound_value,
            "support_size": self.support_size,
        }


def weights_to_shots(w, M: int) -> np.ndarray:
    """Floor ``w * M``; hand the remainder to the largest fractional parts (lower index on ties)."""
    w = np.asarray(w, dtype=float)
    if M < 1:
        raise ValueError("budget must be at least 1")
    raw = np.clip(w, 0.0, None) * M
    shots = np.floor(raw).astype(np.int64)
    frac = raw - shots
    rest = M - int(shots.sum())
    if rest > 0:
        order = np.argsort(-frac, kind="stable")
        shots[order[:rest]] += 1
    elif rest < 0:
        # only reachable if w sums above 1 by rounding; trim the smallest fractions
        order = np.argsort(frac, kind="stable")
        for a in order:
            if rest == 0:
                break
            if shots[a] > 0:
                shots[a] -= 1
                rest += 1
    return shots


def minimize_on_simplex(
    B: np.ndarray,
    tol: float = 1e-8,
    rel_tol: float = 1e-12,
    window: int = 50,
    max_iters: int = 100_000,
    w0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Projected gradient descent on ``log sum exp(-B w)``.

    Steps start from a Barzilai-Borwein estimate and are backtracked until
    the Armijo condition holds along the projected direction.  Stops when
    ``|| P(w - grad) - w ||_inf <= tol`` or when the objective has dropped
    by at most ``rel_tol`` (relative) over the last ``window`` iterations.
    """
    A = B.shape[1]
    w = np.full(A, 1.0 / A) if w0 is None else project_simplex(np.asarray(w0, float))
    if A == 1:
        return w, SolverReport(0, 0.0, True)

    def value_grad(x):
        z = -(B @ x)
        return float(logsumexp(z)), -(B.T @ softmax(z))

    f, g = value_grad(w)
    history = [f]
    step = 1.0
    stat = float(np.max(np.abs(project_simplex(w - g) - w)))
    for it in range(1, max_iters + 1):
        if stat <= tol:
            return w, SolverReport(it - 1, stat, True)
        d = project_simplex(w - step * g) - w
        slope = float(g @ d)
        t = 1.0
        while True:
            w_new = w + t * d
            f_new, g_new = value_grad(w_new)
            if f_new <= f + 1e-4 * t * slope or t < 1e-16:
                break
            t *= 0.5
        s = w_new - w
        y = g_new - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 1e-300 else 1e3
        step = min(max(step, 1e-10), 1e10)
        w, f, g = w_new, f_new, g_new
        history.append(f)
        stat = float(np.max(np.abs(project_simplex(w - g) - w)))
        if len(history) > window:
            old = history[-1 - window]
            if old - f <= rel_tol * max(abs(f), 1e-300):
                return w, SolverReport(it, stat, True)
    return w, SolverReport(max_iters, stat, stat <= tol)


def optimize_weights(
    spec: BoundSpec,
    groups: GroupSet,
    h: Hamiltonian,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> Allocation:
    """Weights minimising the confidence bound, plus their integer shot split."""
    if len(groups) < 1:
        raise ValueError("need at least one group")
    B = exponent_matrix(spec, groups, h)
    w, report = minimize_on_simplex(B, tol=tol, max_iters=max_iters)
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    delta = 2.0 * math.exp(_log_objective(B, w))
    alloc = Allocation(
        weights=w,
        shots=weights_to_shots(w, spec.budget),
        epsilon=spec.epsilon,
        budget=spec.budget,
        bound_value=delta,
        kind=spec.kind.value,
        report=report,
    )
    if not report.converged:
        raise AllocationError(
            f"no convergence after {report.iterations} iterations "
            f"(stationarity {report.stationarity:.3g})",
            best=alloc,
        )
    return alloc


def naive_epsilon(h: Hamiltonian, M: int, m0: float = 1.0) -> float:
    """``2 sum|a_l| sqrt(m0 / M)``: fixes ``eps^2 M = 4 (sum|a_l|)^2 m0``."""
    if M < 1 or m0 <= 0:
        raise ValueError("need M >= 1 and m0 > 0")
    return 2.0 * h.abs_coeff_sum * math.sqrt(m0 / M)


def even_shots(n_groups: int, M: int) -> np.ndarray:
    """``floor(M / A)`` shots per group, remainder one each from the lowest index."""
    shots = np.full(n_groups, M // n_groups, dtype=np.int64)
    shots[: M % n_groups] += 1
    return shots
