"""Max-Min grouping of Pauli terms into overlapping qubit-wise commuting groups.

The QWC graph is partitioned into disjoint cliques (cores) by greedy colouring
of its complement.  Each core is then grown by a maximum clique of outside
terms compatible with it, so groups overlap while their number stays equal to
the number of cores.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .pauli import Hamiltonian, PauliString, pack_masks, qwc

DEFAULT_EXACT_CUTOFF = 40


@dataclass(frozen=True)
class QwcGraph:
    n_terms: int
    adjacency: np.ndarray  # bool (n_terms, n_terms), symmetric, zero diagonal

    @cached_property
    def neighbor_bits(self) -> list[int]:
        """Row ``i`` as a Python-int bitset (bit ``j`` set iff edge i-j)."""
        rows = []
        for i in range(self.n_terms):
            bits = 0
            for j in np.flatnonzero(self.adjacency[i]):
                bits |= 1 << int(j)
            rows.append(bits)
        return rows

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def is_clique(self, nodes) -> bool:
        nodes = list(nodes)
        sub = self.adjacency[np.ix_(nodes, nodes)]
        return bool(sub.sum() == len(nodes) * (len(nodes) - 1))


def build_qwc_graph(h: Hamiltonian) -> QwcGraph:
    ops = h.operators
    L = len(ops)
    if L == 0:
        raise ValueError("Hamiltonian has no non-identity terms")
    if h.n_qubits <= 64:
        x, z = pack_masks(ops)
        s = x | z
        clash = (s[:, None] & s[None, :]) & ((x[:, None] ^ x[None, :]) | (z[:, None] ^ z[None, :]))
        adj = clash == 0
    else:
        adj = np.array([[qwc(p, q) for q in ops] for p in ops], dtype=bool)
    np.fill_diagonal(adj, False)
    return QwcGraph(L, adj)


def min_clique_cover(g: QwcGraph) -> list[list[int]]:
    """Greedy largest-degree-first colouring of the complement graph.

    Colour classes of the complement are cliques of ``g``.  Vertices are
    visited by decreasing complement degree (ties by index) and placed in the
    first class they are fully adjacent to.
    """
    if g.n_terms == 0:
        raise ValueError("empty graph")
    comp_degree = (g.n_terms - 1) - g.degree()
    order = sorted(range(g.n_terms), key=lambda i: (-comp_degree[i], i))
    nb = g.neighbor_bits
    classes: list[int] = []  # member bitsets
    members: list[list[int]] = []
    for v in order:
        vbit = nb[v]
        for c, cbits in enumerate(classes):
            if cbits & ~vbit == 0:
                classes[c] |= 1 << v
                members[c].append(v)
                break
        else:
            classes.append(1 << v)
            members.append([v])
    return [sorted(m) for m in members]


def _bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def _color_bound(cand: int, nb: list[int]) -> tuple[list[int], list[int]]:
    """Greedy sequential colouring of ``cand``; returns vertices and their colour numbers.

    Vertices come back sorted by colour, so scanning from the end visits the
    highest colour first (the standard MCQ ordering).
    """
    order, colors = [], []
    uncolored = cand
    k = 0
    while uncolored:
        k += 1
        avail = uncolored
        while avail:
            low = avail & -avail
            v = low.bit_length() - 1
            uncolored &= ~low
            avail &= ~low
            avail &= ~nb[v]
            order.append(v)
            colors.append(k)
    return order, colors


def _exact_max_clique(cand: int, nb: list[int]) -> int:
    best = 0
    best_size = 0

    def expand(clique: int, size: int, P: int):
        nonlocal best, best_size
        order, colors = _color_bound(P, nb)
        for idx in range(len(order) - 1, -1, -1):
            if size + colors[idx] <= best_size:
                return
            v = order[idx]
            newP = P & nb[v]
            newC = clique | (1 << v)
            if newP:
                expand(newC, size + 1, newP)
            elif size + 1 > best_size:
                best, best_size = newC, size + 1
            P &= ~(1 << v)

    expand(0, 0, cand)
    return best


def _greedy_max_clique(cand: int, nb: list[int]) -> int:
    """Clique grown along a degeneracy ordering, densest core first."""
    remaining = cand
    deg = {v: bin(nb[v] & cand).count("1") for v in _bits(cand)}
    removal = []
    while remaining:
        v = min(_bits(remaining), key=lambda u: (deg[u], u))
        removal.append(v)
        remaining &= ~(1 << v)
        for u in _bits(nb[v] & remaining):
            deg[u] -= 1
    clique = 0
    for v in reversed(removal):
        if clique & ~nb[v] == 0:
            clique |= 1 << v
    return clique


def max_clique(candidates, g: QwcGraph, exact_cutoff: int = DEFAULT_EXACT_CUTOFF) -> list[int]:
    """Largest clique of ``g`` inside ``candidates``.

    Exact branch and bound with a greedy-colouring bound for at most
    ``exact_cutoff`` candidates; a degeneracy-ordered greedy clique above.
    """
    cand = 0
    for v in candidates:
        cand |= 1 << int(v)
    if cand == 0:
        return []
    nb = g.neighbor_bits
    if bin(cand).count("1") <= exact_cutoff:
        found = _exact_max_clique(cand, nb)
    else:
        found = _greedy_max_clique(cand, nb)
    return _bits(found)


def merged_basis(ops, n_qubits: int, default_axis: str | None = "Z") -> PauliString:
    """Per qubit, the unique non-identity axis among ``ops``.

    Qubits no operator touches get ``default_axis`` (or stay ``I`` when it is
    None).  Raises if two operators disagree on a qubit.
    """
    x = z = s = 0
    for op in ops:
        overlap = s & op.support_mask
        if overlap & ((x ^ op.x_mask) | (z ^ op.z_mask)):
            raise ValueError("operators do not commute qubit-wise")
        x |= op.x_mask
        z |= op.z_mask
        s |= op.support_mask
    if default_axis is not None and default_axis != "I":
        free = ((1 << n_qubits) - 1) & ~s
        d = PauliString.from_label(default_axis)
        if d.x_mask:
            x |= free
        if d.z_mask:
            z |= free
    return PauliString(n_qubits, x, z)


@dataclass(frozen=True)
class Group:
    core: tuple[int, ...]
    added: tuple[int, ...]
    basis: PauliString
    core_basis: PauliString  # identity on qubits the core leaves free

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(sorted(self.core + self.added))


@dataclass(frozen=True)
class GroupSet:
    n_terms: int
    groups: tuple[Group, ...]
    default_axis: str = "Z"

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, i) -> Group:
        return self.groups[i]

    @cached_property
    def membership(self) -> np.ndarray:
        """``idx[l, a]``: term ``l`` belongs to group ``a``."""
        idx = np.zeros((self.n_terms, len(self.groups)), dtype=bool)
        for a, grp in enumerate(self.groups):
            idx[list(grp.members), a] = True
        return idx

    @property
    def bases(self) -> list[PauliString]:
        return [g.basis for g in self.groups]

    def unique_member_counts(self) -> np.ndarray:
        """Members of each group that no other group contains."""
        idx = self.membership
        single = idx.sum(axis=1) == 1
        return (idx & single[:, None]).sum(axis=0)

    def to_json(self) -> dict:
        return {
            "n_terms": self.n_terms,
            "n_groups": len(self.groups),
            "default_axis": self.default_axis,
            "groups": [
                {
                    "basis": g.basis.label,
                    "core_basis": g.core_basis.label,
                    "members": list(g.members),
                    "core": list(g.core),
                    "added": list(g.added),
                }
                for g in self.groups
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupSet":
        groups = tuple(
            Group(
                core=tuple(g["core"]),
                added=tuple(g["added"]),
                basis=PauliString.from_label(g["basis"]),
                core_basis=PauliString.from_label(g["core_basis"]),
            )
            for g in data["groups"]
        )
        return cls(data["n_terms"], groups, data.get("default_axis", "Z"))


def maxmin_grouping(
    h: Hamiltonian,
    exact_cutoff: int = DEFAULT_EXACT_CUTOFF,
    default_axis: str = "Z",
    graph: QwcGraph | None = None,
) -> GroupSet:
    """Minimum clique cover of the QWC graph, each clique grown by a maximum clique.

    A term joins the candidate pool of a core when it commutes qubit-wise
    with the core's merged basis, where qubits the core leaves as identity
    accept any axis.  That is the same as commuting with every core member.
    """
    g = graph if graph is not None else build_qwc_graph(h)
    ops = h.operators
    n = h.n_qubits
    groups = []
    for core in min_clique_cover(g):
        core_basis = merged_basis((ops[i] for i in core), n, default_axis=None)
        in_core = set(core)
        pool = [l for l in range(len(ops)) if l not in in_core and qwc(ops[l], core_basis)]
        added = max_clique(pool, g, exact_cutoff) if pool else []
        members = sorted(core + added)
        basis = merged_basis((ops[i] for i in members), n, default_axis=default_axis)
        groups.append(Group(tuple(core), tuple(sorted(added)), basis, core_basis))
    return GroupSet(len(ops), tuple(groups), default_axis)
