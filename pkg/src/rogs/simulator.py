"""Dense state-vector simulation: ground states and Pauli-basis sampling.

Basis index bit ``n - 1 - i`` is qubit ``i`` (big-endian, matching the
Pauli masks).  A Pauli string acts on a basis state as

    P |b> = i^{#Y} (-1)^{popcount(b & z_mask)} |b XOR x_mask>

which is all we need to build Hamiltonian matrices and exact expectations
without forming Kronecker products.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .pauli import Hamiltonian, PauliString

MAX_QUBITS = 14
DENSE_QUBITS = 11  # above this, sparse Lanczos instead of full eigh
NORM_TOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
# Rotation taking the +1 eigenvector of each axis to |0>.
ROTATIONS = {"X": _H, "Y": _H @ _SDG, "Z": np.eye(2, dtype=complex)}


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox generator; ``seed`` may be an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """First ``n`` children of ``seed``; the same answer on every call."""
    ss = as_seed_sequence(seed)
    return [
        np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,), pool_size=ss.pool_size)
        for i in range(n)
    ]


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude vector has wrong length")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalised (|psi|^2 = {norm})")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, bits: str) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(len(bits), amps)

    @classmethod
    def product(cls, singles: Iterable[np.ndarray]) -> "StateVector":
        singles = [np.asarray(s, dtype=complex) for s in singles]
        amps = np.array([1.0 + 0j])
        for s in singles:
            amps = np.kron(amps, s / np.linalg.norm(s))
        return cls(len(singles), amps)


def _phase_and_flip(op: PauliString, n: int):
    b = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(b.shape, dtype=np.int64)
    zb = b & op.z_mask
    while np.any(zb):
        parity ^= zb & 1
        zb >>= 1
    n_y = bin(op.x_mask & op.z_mask).count("1")
    phase = (1j) ** n_y * (1 - 2 * parity)
    return b, b ^ op.x_mask, phase


def pauli_expectation(psi: StateVector, op: PauliString) -> float:
    """Exact ``<psi|P|psi>``."""
    b, flipped, phase = _phase_and_flip(op, psi.n_qubits)
    amps = psi.amplitudes
    return float(np.real(np.sum(np.conj(amps[flipped]) * phase * amps[b])))


def energy_expectation(psi: StateVector, h: Hamiltonian) -> float:
    return h.identity_offset + sum(c * pauli_expectation(psi, op) for c, op in h.terms)


def hamiltonian_matrix(h: Hamiltonian, sparse: bool = False):
    n = h.n_qubits
    dim = 1 << n
    rows, cols, vals = [], [], []
    for c, op in h.terms:
        b, flipped, phase = _phase_and_flip(op, n)
        rows.append(flipped)
        cols.append(b)
        vals.append(c * phase)
    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(np.full(dim, h.identity_offset, dtype=complex))
    mat = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    return mat if sparse else mat.toarray()


def _canonical_ground_vector(vecs: np.ndarray) -> np.ndarray:
    """Deterministic representative of the span of ``vecs`` (orthonormal columns).

    Project the lowest-index basis state with non-negligible weight in the
    span, normalise, and rotate the first non-zero amplitude to be real
    positive.
    """
    weights = np.sum(np.abs(vecs) ** 2, axis=1)
    k = int(np.flatnonzero(weights > 1e-12)[0])
    psi = vecs @ np.conj(vecs[k])
    psi /= np.linalg.norm(psi)
    first = psi[np.flatnonzero(np.abs(psi) > 1e-12)[0]]
    psi *= np.conj(first) / abs(first)
    return psi


def ground_state(h: Hamiltonian, degeneracy_tol: float = 1e-9) -> tuple[float, StateVector]:
    """Lowest eigenvalue (offset included) and a canonical ground vector."""
    n = h.n_qubits
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense simulation limit of {MAX_QUBITS}")
    if n <= DENSE_QUBITS:
        evals, evecs = scipy.linalg.eigh(hamiltonian_matrix(h))
    else:
        k = 8
        evals, evecs = scipy.sparse.linalg.eigsh(hamiltonian_matrix(h, sparse=True), k=k, which="SA", tol=1e-12)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    e0 = float(evals[0])
    scale = max(1.0, abs(e0))
    ground = evecs[:, np.abs(evals - e0) <= degeneracy_tol * scale]
    psi = _canonical_ground_vector(ground)
    return e0, StateVector(n, psi)


def rotate_to_basis(psi: StateVector, basis: PauliString) -> np.ndarray:
    n = psi.n_qubits
    tensor = psi.amplitudes.reshape((2,) * n)
    for q in range(n):
        axis = basis.axis(q)
        if axis in ("I", "Z"):
            continue
        tensor = np.moveaxis(np.tensordot(ROTATIONS[axis], tensor, axes=([1], [q])), 0, q)
    return tensor.reshape(-1)


@dataclass(frozen=True)
class MeasurementRecord:
    basis: PauliString
    outcomes: np.ndarray  # int8 (shots, n_qubits), entries +1/-1
    group_index: int | None = None

    @property
    def shots(self) -> int:
        return int(self.outcomes.shape[0])

    def to_json(self) -> dict:
        return {
            "basis": self.basis.label,
            "group_index": self.group_index,
            "outcomes": self.outcomes.astype(int).tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MeasurementRecord":
        basis = PauliString.from_label(data["basis"])
        outcomes = np.asarray(data["outcomes"], dtype=np.int8).reshape(-1, basis.n_qubits)
        return cls(basis, outcomes, data.get("group_index"))


def dump_records(records: Iterable[MeasurementRecord], fh) -> None:
    """One JSON object per line."""
    for rec in records:
        fh.write(json.dumps(rec.to_json(), separators=(",", ":")) + "\n")


def load_records(fh) -> list[MeasurementRecord]:
    return [MeasurementRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def _outcome_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> (n - 1 - np.arange(n))[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def basis_distribution(psi: StateVector, basis: PauliString) -> np.ndarray:
    probs = np.abs(rotate_to_basis(psi, basis)) ** 2
    return probs / probs.sum()


def sample_basis(psi: StateVector, basis: PauliString, shots: int, rng) -> MeasurementRecord:
    """Measure every qubit of ``psi`` in the product basis ``basis``, ``shots`` times."""
    if not basis.is_full_support:
        raise ValueError("measurement basis must act on every qubit")
    if shots < 0:
        raise ValueError("shots must be non-negative")
    rng = make_rng(rng)
    n = psi.n_qubits
    cdf = np.cumsum(basis_distribution(psi, basis))
    draws = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    draws = np.minimum(draws, (1 << n) - 1)
    return MeasurementRecord(basis, _outcome_table(n)[draws])


def execute_recipe(psi: StateVector, groups, shots, seed) -> list[MeasurementRecord]:
    """One record per group with at least one shot; per-group seeds are spawned from ``seed``."""
    shots = [int(s) for s in shots]
    if len(shots) != len(groups):
        raise ValueError("shot vector does not match number of groups")
    seeds = child_seeds(seed, len(shots))
    records = []
    for a, (grp, m) in enumerate(zip(groups, shots)):
        if m < 1:
            continue
        rec = sample_basis(psi, grp.basis, m, make_rng(seeds[a]))
        records.append(MeasurementRecord(rec.basis, rec.outcomes, a))
    return records
