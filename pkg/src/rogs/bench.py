"""Benchmark harness: Hamiltonian generators, method runners, RMSE tables."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .allocation import (
    Allocation,
    BoundKind,
    BoundSpec,
    OperatorStats,
    even_shots,
    naive_epsilon,
    optimize_weights,
    overlap_weights,
)
from .estimation import MoMConfig, estimate_energy
from .grouping import GroupSet, maxmin_grouping
from .pauli import Hamiltonian, PauliString, load_hamiltonian
from .simulator import (
    MeasurementRecord,
    StateVector,
    child_seeds,
    execute_recipe,
    ground_state,
    make_rng,
    sample_basis,
)
from .tuning import adaptive_rounds, coarse_grain_search

METHODS = ("rogs_naive", "rogs_coarse", "rogs_adaptive", "even_distribution", "uniform_shadow")
AX = "XYZ"
CSV_COLUMNS = ("method", "hamiltonian", "M", "repeats", "rmse", "mae", "n_circuit", "n_groups", "seed", "wall_ms")


def toy_model(n: int) -> Hamiltonian:
    """``Z...Z + 2^-2n * sum over {I, X}^n``; the all-identity string becomes the offset."""
    if not 2 <= n <= 10:
        raise ValueError("toy model needs 2 <= n <= 10")
    small = 2.0 ** (-2 * n)
    pairs = [(1.0, "Z" * n)]
    for k in range(1, 1 << n):
        pairs.append((small, format(k, f"0{n}b").replace("0", "I").replace("1", "X")))
    pairs.append((small, "I" * n))
    return Hamiltonian.from_terms(pairs, n_qubits=n)


def random_structured_hamiltonian(n: int, L: int, seed: int, diagonal_fraction: float = 0.4) -> Hamiltonian:
    """Seeded sum of ``L`` distinct low-weight Pauli strings.

    About ``diagonal_fraction`` of the terms are Z-type (weight 1 to 4, like
    number and Coulomb terms); the rest have weight 2 to 4 with random axes.
    Coefficients are log-uniform in [1e-3, 1] with a random sign.
    """
    rng = make_rng(seed)
    max_w = min(n, 4)
    seen: dict[str, float] = {}
    attempts = 0
    while len(seen) < L:
        attempts += 1
        if attempts > 100 * L:
            raise ValueError(f"cannot draw {L} distinct terms on {n} qubits")
        if rng.random() < diagonal_fraction:
            w = int(rng.integers(1, max_w + 1))
            axes = ["Z"] * w
        else:
            w = int(rng.integers(min(2, max_w), max_w + 1))
            axes = [AX[i] for i in rng.integers(0, 3, size=w)]
        qubits = rng.choice(n, size=w, replace=False)
        label = ["I"] * n
        for q, a in zip(qubits, axes):
            label[int(q)] = a
        label = "".join(label)
        coeff = float(10.0 ** rng.uniform(-3.0, 0.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        if label not in seen:
            seen[label] = coeff
    return Hamiltonian.from_terms(list((c, lab) for lab, c in seen.items()), n_qubits=n)


@dataclass(frozen=True)
class MethodOptions:
    bound: BoundKind = BoundKind.PER_OPERATOR
    epsilon: float | None = None  # None: naive rule from m0
    m0: float = 1.0
    adaptive_rounds: int = 3
    coarse_rounds: int = 10
    coarse_reps: int = 10
    tol: float = 1e-8
    max_iters: int = 100_000
    mom: MoMConfig | None = None


@dataclass
class Problem:
    """A Hamiltonian with its grouping and exact ground state, shared by all repeats."""

    name: str
    hamiltonian: Hamiltonian
    groups: GroupSet
    energy: float
    psi: StateVector

    @classmethod
    def build(cls, h: Hamiltonian, name: str = "H") -> "Problem":
        e0, psi = ground_state(h)
        return cls(name, h, maxmin_grouping(h), e0, psi)

    @classmethod
    def load(cls, path) -> "Problem":
        return cls.build(load_hamiltonian(path), Path(path).stem)


def rogs_allocation(h: Hamiltonian, groups: GroupSet, M: int, opts: MethodOptions) -> Allocation:
    eps = opts.epsilon if opts.epsilon is not None else naive_epsilon(h, M, opts.m0)
    wo = overlap_weights(groups) if opts.bound is BoundKind.PER_GROUP else None
    # without prior data the Bernstein bound uses the worst case for ±1 outcomes
    stats = OperatorStats(np.ones(len(h)), np.ones(len(h))) if opts.bound is BoundKind.BERNSTEIN else None
    spec = BoundSpec(opts.bound, eps, M, overlap_weights=wo, stats=stats)
    return optimize_weights(spec, groups, h, tol=opts.tol, max_iters=opts.max_iters)


def uniform_shadow_records(psi: StateVector, M: int, seed) -> list[MeasurementRecord]:
    """``M`` single shots in bases with i.i.d. uniform axes, grouped by distinct basis."""
    axes_seed, sample_seed = child_seeds(seed, 2)
    n = psi.n_qubits
    draws = make_rng(axes_seed).integers(0, 3, size=(M, n))
    bases, counts = np.unique(draws, axis=0, return_counts=True)
    seeds = child_seeds(sample_seed, len(bases))
    records = []
    for row, m, s in zip(bases, counts, seeds):
        basis = PauliString.from_label("".join(AX[i] for i in row))
        records.append(sample_basis(psi, basis, int(m), make_rng(s)))
    return records


@dataclass
class RunOutcome:
    estimate: float
    n_circuit: int
    shots: list[int] = field(default_factory=list)
    epsilon: float | None = None


def run_method(method: str, problem: Problem, M: int, seed, opts: MethodOptions | None = None) -> RunOutcome:
    """One seeded trial of ``method`` at budget ``M``."""
    opts = opts or MethodOptions()
    h, groups, psi = problem.hamiltonian, problem.groups, problem.psi
    if method == "rogs_naive":
        alloc = rogs_allocation(h, groups, M, opts)
        records = execute_recipe(psi, groups, alloc.shots, seed)
        est = estimate_energy(records, groups, h, opts.mom or MoMConfig(epsilon=alloc.epsilon))
        return RunOutcome(est.value, alloc.n_circuit, alloc.shots.tolist(), alloc.epsilon)
    if method == "rogs_coarse":
        search_seed, run_seed = child_seeds(seed, 2)
        found = coarse_grain_search(
            h, groups, psi, M, opts.coarse_rounds * M, opts.coarse_rounds, search_seed,
            n_rep=opts.coarse_reps, kind=opts.bound,
            overlap=overlap_weights(groups) if opts.bound is BoundKind.PER_GROUP else None,
            stats=OperatorStats(np.ones(len(h)), np.ones(len(h))) if opts.bound is BoundKind.BERNSTEIN else None,
            truth=problem.energy,
        )
        tuned = replace(opts, epsilon=found.epsilon)
        alloc = rogs_allocation(h, groups, M, tuned)
        records = execute_recipe(psi, groups, alloc.shots, run_seed)
        est = estimate_energy(records, groups, h, opts.mom or MoMConfig(epsilon=alloc.epsilon))
        return RunOutcome(est.value, alloc.n_circuit, alloc.shots.tolist(), alloc.epsilon)
    if method == "rogs_adaptive":
        res = adaptive_rounds(h, groups, M, opts.adaptive_rounds, psi, seed, m0=opts.m0, mom=opts.mom)
        shots = np.sum([r.allocation.shots for r in res.rounds], axis=0)
        return RunOutcome(res.estimate.value, res.n_circuit, shots.tolist())
    if method == "even_distribution":
        shots = even_shots(len(groups), M)
        records = execute_recipe(psi, groups, shots, seed)
        eps = naive_epsilon(h, M, opts.m0)
        est = estimate_energy(records, groups, h, opts.mom or MoMConfig(epsilon=eps))
        return RunOutcome(est.value, int(np.count_nonzero(shots)), shots.tolist(), eps)
    if method == "uniform_shadow":
        records = uniform_shadow_records(psi, M, seed)
        est = estimate_energy(records, None, h, MoMConfig(rule="mean"))
        return RunOutcome(est.value, len(records))
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


@dataclass(frozen=True)
class ExperimentSpec:
    hamiltonians: tuple[str, ...]
    budgets: tuple[int, ...]
    repeats: int
    seed: int
    methods: tuple[str, ...] = ("rogs_naive", "even_distribution")
    options: MethodOptions = MethodOptions()
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.seed is None or self.seed < 0:
            raise ValueError("a non-negative seed is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method {bad[0]!r}; choose from {', '.join(METHODS)}")
        if any(M < 1 for M in self.budgets):
            raise ValueError("budgets must be positive")
        if not self.hamiltonians:
            raise ValueError("no Hamiltonians given")


@dataclass
class BenchRow:
    method: str
    hamiltonian: str
    M: int
    repeats: int
    seed: int
    n_groups: int
    truth: float
    estimates: list[float]
    n_circuits: list[int]
    wall_ms: float | None = None

    @property
    def errors(self) -> np.ndarray:
        return np.asarray(self.estimates) - self.truth

    @property
    def rmse(self) -> float:
        return math.sqrt(float(np.mean(np.square(self.errors))))

    @property
    def mae(self) -> float:
        return float(np.mean(np.abs(self.errors)))

    @property
    def n_circuit(self) -> int:
        return max(self.n_circuits)

    def csv_fields(self) -> list[str]:
        wall = "" if self.wall_ms is None else repr(round(self.wall_ms, 3))
        return [
            self.method, self.hamiltonian, str(self.M), str(self.repeats),
            repr(self.rmse), repr(self.mae), str(self.n_circuit), str(self.n_groups),
            str(self.seed), wall,
        ]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "hamiltonian": self.hamiltonian,
            "M": self.M,
            "repeats": self.repeats,
            "seed": self.seed,
            "ground_energy": self.truth,
            "rmse": self.rmse,
            "mae": self.mae,
            "n_circuit": self.n_circuit,
            "n_groups": self.n_groups,
            "estimates": self.estimates,
            "n_circuits": self.n_circuits,
            "wall_ms": self.wall_ms,
        }


@dataclass
class BenchResult:
    rows: list[BenchRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows]}

    def row(self, method: str, hamiltonian: str, M: int) -> BenchRow:
        for r in self.rows:
            if (r.method, r.hamiltonian, r.M) == (method, hamiltonian, M):
                return r
        raise KeyError((method, hamiltonian, M))


def repeat_seed(seed: int, h_index: int, m_index: int, method: str, repeat: int) -> np.random.SeedSequence:
    """Independent stream per (Hamiltonian, budget, method, repeat), stable under reordering."""
    return np.random.SeedSequence(seed, spawn_key=(h_index, m_index, METHODS.index(method), repeat))


def run_bench(spec: ExperimentSpec, problems: list[Problem] | None = None) -> BenchResult:
    if problems is None:
        problems = [Problem.load(p) for p in spec.hamiltonians]
    rows = []
    with ThreadPoolExecutor(max_workers=max(1, spec.workers)) as pool:
        for hi, prob in enumerate(problems):
            for mi, M in enumerate(spec.budgets):
                for method in spec.methods:
                    seeds = [repeat_seed(spec.seed, hi, mi, method, r) for r in range(spec.repeats)]
                    start = time.perf_counter()
                    outs = list(pool.map(lambda s: run_method(method, prob, M, s, spec.options), seeds))
                    wall = (time.perf_counter() - start) * 1e3 if spec.timing else None
                    rows.append(BenchRow(
                        method=method,
                        hamiltonian=prob.name,
                        M=M,
                        repeats=spec.repeats,
                        seed=spec.seed,
                        n_groups=len(prob.groups),
                        truth=prob.energy,
                        estimates=[o.estimate for o in outs],
                        n_circuits=[o.n_circuit for o in outs],
                        wall_ms=wall,
                    ))
    return BenchResult(rows)
