"""Simulation-driven allocation: coarse-grained epsilon search and adaptive rounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    Allocation,
    BoundKind,
    BoundSpec,
    OperatorStats,
    naive_epsilon,
    optimize_weights,
)
from .estimation import EnergyEstimate, MoMConfig, estimate_energy, extract_signs
from .grouping import GroupSet
from .pauli import Hamiltonian
from .simulator import StateVector, as_seed_sequence, child_seeds, energy_expectation, execute_recipe, make_rng

M0_RANGE = (0.1, 10.0)


def simulated_rmse(
    h: Hamiltonian,
    groups: GroupSet,
    psi: StateVector,
    alloc: Allocation,
    seed,
    n_rep: int = 10,
    mom: MoMConfig | None = None,
    truth: float | None = None,
) -> float:
    """Root mean squared error of the estimator over ``n_rep`` simulated runs of one recipe."""
    truth = energy_expectation(psi, h) if truth is None else truth
    mom = mom or MoMConfig(epsilon=alloc.epsilon)
    errs = []
    for s in child_seeds(seed, n_rep):
        records = execute_recipe(psi, groups, alloc.shots, s)
        errs.append(estimate_energy(records, groups, h, mom).value - truth)
    return math.sqrt(float(np.mean(np.square(errs))))


@dataclass
class CoarseGrainResult:
    epsilon: float  # rescaled for the final budget
    epsilon_cg: float
    sub_budget: int
    candidates: list[dict] = field(default_factory=list)


def coarse_grain_search(
    h: Hamiltonian,
    groups: GroupSet,
    psi: StateVector,
    M: int,
    M_test: int,
    n_rounds: int,
    seed,
    n_rep: int = 10,
    kind: BoundKind | str = BoundKind.PER_OPERATOR,
    stats: OperatorStats | None = None,
    overlap: np.ndarray | None = None,
    truth: float | None = None,
) -> CoarseGrainResult:
    """Random search over ``m0`` in [0.1, 10] at sub-budget ``M_test / n_rounds``.

    Each round sets ``eps_cg = 2 sum|a| sqrt(m0 / M_cg)``, optimises the
    allocation, and scores it by simulated RMSE.  The winner is carried to
    the full budget as ``eps_cg * sqrt(M_cg / M)``, which keeps ``eps^2 M``
    and therefore the weights unchanged.
    """
    if n_rounds < 1 or M_test % n_rounds:
        raise ValueError("M_test must split evenly into n_rounds sub-budgets")
    m_cg = M_test // n_rounds
    if m_cg < 1:
        raise ValueError("sub-budget must hold at least one shot")
    truth = energy_expectation(psi, h) if truth is None else truth
    draw_seed, sim_seed = child_seeds(seed, 2)
    rng = make_rng(draw_seed)
    sims = child_seeds(sim_seed, n_rounds)
    candidates = []
    for r in range(n_rounds):
        m0 = float(rng.uniform(*M0_RANGE))
        eps_cg = naive_epsilon(h, m_cg, m0)
        spec = BoundSpec(kind, eps_cg, m_cg, overlap_weights=overlap, stats=stats)
        alloc = optimize_weights(spec, groups, h)
        rmse = simulated_rmse(h, groups, psi, alloc, sims[r], n_rep, truth=truth)
        candidates.append({"m0": m0, "epsilon_cg": eps_cg, "rmse": rmse, "support_size": alloc.support_size})
    best = min(candidates, key=lambda c: c["rmse"])
    eps = best["epsilon_cg"] * math.sqrt(m_cg / M)
    return CoarseGrainResult(eps, best["epsilon_cg"], m_cg, candidates)


def operator_stats(samples) -> OperatorStats:
    """Empirical variance and ``|mean|`` per term; unmeasured terms get the ±1 worst case."""
    var = np.ones(len(samples))
    mx = np.ones(len(samples))
    for l, s in enumerate(samples.samples):
        if len(s):
            m = float(s.mean(dtype=float))
            var[l] = float(s.var(dtype=float))
            mx[l] = min(abs(m), 1.0)
    return OperatorStats(var, mx)


def split_budget(M: int, T: int) -> list[int]:
    """``M`` into ``T`` near-equal parts, larger parts first."""
    if T < 1 or M < T:
        raise ValueError("need 1 <= T <= M")
    return [M // T + (1 if t < M % T else 0) for t in range(T)]


@dataclass
class AdaptiveRound:
    allocation: Allocation
    estimate: EnergyEstimate
    records: list


@dataclass
class AdaptiveResult:
    rounds: list[AdaptiveRound]
    estimate: EnergyEstimate  # from every record of every round

    @property
    def n_circuit(self) -> int:
        """Distinct bases executed across all rounds."""
        return len({rec.basis for r in self.rounds for rec in r.records})


def adaptive_rounds(
    h: Hamiltonian,
    groups: GroupSet,
    M: int,
    T: int,
    psi: StateVector,
    seed,
    m0: float = 1.0,
    max_scope: str = "per_term",
    mom: MoMConfig | None = None,
    search_rounds: int = 0,
    n_rep: int = 10,
) -> AdaptiveResult:
    """Round 1 uses the Hoeffding bound; later rounds the Bernstein bound
    with variances pooled from every earlier record.

    With ``search_rounds > 0`` each round's epsilon comes from
    :func:`coarse_grain_search` (``search_rounds`` candidates at the round's
    budget) instead of the fixed ``m0`` rule.
    """
    budgets = split_budget(M, T)
    # round 1 samples on the root seed so T = 1 reproduces plain ROGS exactly
    seeds = [as_seed_sequence(seed)] + child_seeds(seed, T)[1:]
    search_seeds = child_seeds(child_seeds(seed, T + 1)[T], T)
    truth = energy_expectation(psi, h) if search_rounds else None
    history: list = []
    rounds = []
    for t, m_t in enumerate(budgets):
        stats = None if t == 0 else operator_stats(extract_signs(history, groups, h))
        kind = BoundKind.PER_OPERATOR if t == 0 else BoundKind.BERNSTEIN
        if search_rounds:
            eps = coarse_grain_search(
                h, groups, psi, m_t, search_rounds * m_t, search_rounds, search_seeds[t],
                n_rep=n_rep, kind=kind, stats=stats, truth=truth,
            ).epsilon
        else:
            eps = naive_epsilon(h, m_t, m0)
        spec = BoundSpec(kind, eps, m_t, stats=stats, max_scope=max_scope)
        alloc = optimize_weights(spec, groups, h)
        records = execute_recipe(psi, groups, alloc.shots, seeds[t])
        cfg = mom or MoMConfig(epsilon=eps)
        rounds.append(AdaptiveRound(alloc, estimate_energy(records, groups, h, cfg), records))
        history.extend(records)
    total_cfg = mom or MoMConfig(epsilon=naive_epsilon(h, M, m0))
    return AdaptiveResult(rounds, estimate_energy(history, groups, h, total_cfg))
