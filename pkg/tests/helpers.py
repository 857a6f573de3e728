"""Shared generators for fuzz tests."""

import numpy as np

from rogs.pauli import Hamiltonian


def random_hamiltonian(rng: np.random.Generator, n: int, L: int, p_identity: float = 0.4) -> Hamiltonian:
    """``L`` distinct non-identity strings on ``n`` qubits with Gaussian coefficients."""
    L = min(L, 4**n - 1)
    seen = {}
    while len(seen) < L:
        axes = rng.choice(list("XYZ"), size=n)
        mask = rng.random(n) < p_identity
        lab = "".join("I" if m else a for a, m in zip(axes, mask))
        if set(lab) != {"I"} and lab not in seen:
            seen[lab] = float(rng.normal())
    return Hamiltonian.from_terms([(c, lab) for lab, c in seen.items()], n_qubits=n)


def check_groupset(h, gs):
    """Raise AssertionError unless every GroupSet invariant holds."""
    from rogs.pauli import covered_by, qwc

    ops = h.operators
    L = len(ops)
    covered = set()
    cores = []
    for g in gs:
        members = g.members
        covered.update(members)
        cores.extend(g.core)
        assert set(g.core) <= set(members)
        for i in members:
            assert covered_by(ops[i], g.basis), (ops[i].label, g.basis.label)
            for j in members:
                assert qwc(ops[i], ops[j])
        assert g.basis.is_full_support
    assert covered == set(range(L))
    assert sorted(cores) == list(range(L))
