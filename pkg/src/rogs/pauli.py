"""Bit-packed Pauli strings and Pauli-sum Hamiltonians.

A Pauli string on ``n`` qubits is stored as two integer masks.  Qubit ``i``
(the ``i``-th character of the label, counting from the left) lives in bit
``n - 1 - i`` of each mask, so ``int(label_bits, 2)`` reads a mask straight
off the label and the masks double as computational-basis index masks in the
big-endian (``kron(P_0, P_1, ...)``) ordering used by the simulator.

    axis   x  z
    I      0  0
    X      1  0
    Y      1  1
    Z      0  1
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

AXES = "IXYZ"
_AXIS_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_AXIS = {v: k for k, v in _AXIS_BITS.items()}


class HamiltonianParseError(ValueError):
    """Base class for Hamiltonian text-format errors; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class MalformedCoefficientError(HamiltonianParseError):
    pass


class InvalidAxisError(HamiltonianParseError):
    pass


class InconsistentLengthError(HamiltonianParseError):
    pass


class EmptyHamiltonianError(HamiltonianParseError):
    pass


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full or self.x_mask < 0 or self.z_mask < 0:
            raise ValueError("mask wider than n_qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        if not label:
            raise ValueError("empty Pauli label")
        x = z = 0
        for ch in label:
            try:
                bx, bz = _AXIS_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli axis {ch!r} in {label!r}") from None
            x = (x << 1) | bx
            z = (z << 1) | bz
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    @property
    def label(self) -> str:
        n = self.n_qubits
        return "".join(
            _BITS_AXIS[((self.x_mask >> (n - 1 - i)) & 1, (self.z_mask >> (n - 1 - i)) & 1)]
            for i in range(n)
        )

    def axis(self, qubit: int) -> str:
        shift = self.n_qubits - 1 - qubit
        return _BITS_AXIS[((self.x_mask >> shift) & 1, (self.z_mask >> shift) & 1)]

    @property
    def support_mask(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits carrying a non-identity axis, in increasing order."""
        s, n = self.support_mask, self.n_qubits
        return tuple(i for i in range(n) if (s >> (n - 1 - i)) & 1)

    @property
    def weight(self) -> int:
        return bin(self.support_mask).count("1")

    @property
    def is_identity(self) -> bool:
        return self.support_mask == 0

    @property
    def is_full_support(self) -> bool:
        return self.support_mask == (1 << self.n_qubits) - 1

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def _check_width(p: PauliString, q: PauliString) -> None:
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"qubit count mismatch: {p.n_qubits} vs {q.n_qubits}")


def qwc(p: PauliString, q: PauliString) -> bool:
    """True iff ``p`` and ``q`` commute qubit-wise.

    Two single-qubit Paulis commute iff they are equal or one is the
    identity, so the strings clash exactly on qubits in both supports whose
    axis bits differ.
    """
    _check_width(p, q)
    both = p.support_mask & q.support_mask
    differ = (p.x_mask ^ q.x_mask) | (p.z_mask ^ q.z_mask)
    return both & differ == 0


def covered_by(op: PauliString, basis: PauliString) -> bool:
    """True iff measuring in ``basis`` yields a valid sample of ``op``."""
    _check_width(op, basis)
    differ = (op.x_mask ^ basis.x_mask) | (op.z_mask ^ basis.z_mask)
    return op.support_mask & differ == 0


def pack_masks(ops: Iterable[PauliString]) -> tuple[np.ndarray, np.ndarray]:
    """Stack masks into uint64 arrays; only valid for n_qubits <= 64."""
    ops = list(ops)
    x = np.array([p.x_mask for p in ops], dtype=np.uint64)
    z = np.array([p.z_mask for p in ops], dtype=np.uint64)
    return x, z


@dataclass(frozen=True)
class Hamiltonian:
    """``identity_offset * I + sum_l coefficient_l * operator_l``.

    ``terms`` never holds the all-identity string and never repeats an
    operator; both are normalised by :func:`from_terms`.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...]
    identity_offset: float = 0.0
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        seen = {}
        for i, (_, op) in enumerate(self.terms):
            if op.n_qubits != self.n_qubits:
                raise ValueError("term width does not match n_qubits")
            if op.is_identity:
                raise ValueError("identity term must go in identity_offset")
            if op in seen:
                raise ValueError(f"duplicate operator {op.label}")
            seen[op] = i
        object.__setattr__(self, "_index", seen)

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[float, str | PauliString]], n_qubits: int | None = None) -> "Hamiltonian":
        """Merge duplicates, split off the identity, keep first-appearance order."""
        acc: dict[PauliString, float] = {}
        offset = 0.0
        width = n_qubits
        for coeff, op in pairs:
            if isinstance(op, str):
                op = PauliString.from_label(op)
            if width is None:
                width = op.n_qubits
            elif op.n_qubits != width:
                raise ValueError("inconsistent Pauli string lengths")
            if op.is_identity:
                offset += float(coeff)
            else:
                acc[op] = acc.get(op, 0.0) + float(coeff)
        if width is None:
            raise ValueError("cannot infer n_qubits from an empty term list")
        terms = tuple((c, op) for op, c in acc.items() if c != 0.0)
        return cls(width, terms, offset)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def operators(self) -> list[PauliString]:
        return [op for _, op in self.terms]

    @property
    def abs_coeff_sum(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def index_of(self, op: PauliString | str) -> int:
        if isinstance(op, str):
            op = PauliString.from_label(op)
        return self._index[op]


def parse_hamiltonian(text: str) -> Hamiltonian:
    """Parse ``<coefficient> <axis string>`` lines; ``#`` starts a comment."""
    pairs = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError(f"expected '<coefficient> <pauli string>', got {raw.strip()!r}", lineno)
        coeff_txt, label = parts
        try:
            coeff = float(coeff_txt)
        except ValueError:
            raise MalformedCoefficientError(f"malformed coefficient {coeff_txt!r}", lineno) from None
        if not math.isfinite(coeff):
            raise MalformedCoefficientError(f"non-finite coefficient {coeff_txt!r}", lineno)
        bad = [ch for ch in label if ch not in _AXIS_BITS]
        if bad:
            raise InvalidAxisError(f"axis {bad[0]!r} not in {{I, X, Y, Z}}", lineno)
        if width is None:
            width = len(label)
        elif len(label) != width:
            raise InconsistentLengthError(
                f"inconsistent string lengths: {len(label)} vs {width}", lineno
            )
        pairs.append((coeff, PauliString.from_label(label)))
    if not pairs:
        raise EmptyHamiltonianError("no terms in input")
    return Hamiltonian.from_terms(pairs, n_qubits=width)


def load_hamiltonian(path) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def serialize_hamiltonian(h: Hamiltonian) -> str:
    lines = [f"{c:.17g} {op.label}" for c, op in h.terms]
    lines.append(f"{h.identity_offset:.17g} {'I' * h.n_qubits}")
    return "\n".join(lines) + "\n"
