"""From measurement records to operator and energy estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import Hamiltonian, covered_by

MOM_RULES = ("variance_ratio", "variance_scaled", "sqrt_m", "fixed", "mean")


class IntegrityError(RuntimeError):
    """A record's basis does not cover an operator its group claims."""


@dataclass
class OperatorSamples:
    """Per-term ±1 signs pooled over every record that measured the term."""

    samples: list[np.ndarray]

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(s) for s in self.samples], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.samples)


def _signs(outcomes: np.ndarray, support: tuple[int, ...]) -> np.ndarray:
    if not support:
        return np.ones(outcomes.shape[0], dtype=np.int8)
    return np.prod(outcomes[:, list(support)], axis=1, dtype=np.int8)


def extract_signs(records, groups, h: Hamiltonian) -> OperatorSamples:
    """Signs ``prod_{j in supp(O_l)} q_j`` for every member of each record's group.

    Records without a group index (uniformly random bases) contribute to
    every term their basis covers.
    """
    ops = h.operators
    supports = [op.support for op in ops]
    chunks: list[list[np.ndarray]] = [[] for _ in ops]
    for rec in records:
        if rec.group_index is None:
            targets = [l for l, op in enumerate(ops) if covered_by(op, rec.basis)]
        else:
            if groups is None or not 0 <= rec.group_index < len(groups):
                raise IntegrityError(f"record refers to unknown group {rec.group_index}")
            targets = groups[rec.group_index].members
            for l in targets:
                if not covered_by(ops[l], rec.basis):
                    raise IntegrityError(
                        f"basis {rec.basis.label} does not cover member {ops[l].label} "
                        f"of group {rec.group_index}"
                    )
        for l in targets:
            chunks[l].append(_signs(rec.outcomes, supports[l]))
    samples = [np.concatenate(c) if c else np.zeros(0, dtype=np.int8) for c in chunks]
    return OperatorSamples(samples)


def hit_rate(records, groups, h: Hamiltonian) -> np.ndarray:
    return extract_signs(records, groups, h).counts


def mean_estimate(samples: OperatorSamples) -> tuple[np.ndarray, np.ndarray]:
    """Sample means and a ``measured`` mask; unmeasured terms read 0."""
    counts = samples.counts
    means = np.array([s.mean(dtype=float) if len(s) else 0.0 for s in samples.samples])
    return means, counts > 0


def _median(values: np.ndarray) -> float:
    # np.median averages the two middle values for even lengths
    return float(np.median(values))


def mom_single(x: np.ndarray, k: int) -> float:
    """Median of ``k`` equal-block means; trailing ``len(x) % k`` samples dropped."""
    m = len(x)
    if m == 0:
        return 0.0
    k = min(max(int(k), 1), m)
    size = m // k
    blocks = np.asarray(x[: k * size], dtype=float).reshape(k, size).mean(axis=1)
    return _median(blocks)


@dataclass(frozen=True)
class MoMConfig:
    """How many median-of-means blocks each term gets.

    ``variance_ratio``: K = M_l * eps_l^2 / sigma_l^2
    ``variance_scaled``: K = M_l * sqrt(sigma_l^2 / eps_l^2)
    ``sqrt_m``: K = ceil(sqrt(M_l))
    ``fixed``: K = ``k``
    ``mean``: plain sample mean (K = 1)

    ``eps_l = epsilon / sum|a_l|``.  When ``epsilon`` is None it defaults to
    ``2 sum|a_l| / sqrt(total shots)``, i.e. ``eps_l = 2 / sqrt(total shots)``.
    """

    rule: str = "variance_ratio"
    epsilon: float | None = None
    k: int = 1

    def __post_init__(self):
        if self.rule not in MOM_RULES:
            raise ValueError(f"unknown median-of-means rule {self.rule!r}")


def block_counts(samples: OperatorSamples, cfg: MoMConfig, h: Hamiltonian, total_shots: int) -> np.ndarray:
    counts = samples.counts
    if cfg.rule == "mean":
        k = np.ones_like(counts)
    elif cfg.rule == "fixed":
        k = np.full_like(counts, cfg.k)
    elif cfg.rule == "sqrt_m":
        k = np.ceil(np.sqrt(counts)).astype(np.int64)
    else:
        if cfg.epsilon is not None:
            eps_l = cfg.epsilon / h.abs_coeff_sum
        else:
            eps_l = 2.0 / math.sqrt(max(total_shots, 1))
        var = np.array([s.var(dtype=float) if len(s) else 1.0 for s in samples.samples])
        with np.errstate(divide="ignore"):
            if cfg.rule == "variance_ratio":
                raw = counts * eps_l**2 / var
            else:
                raw = counts * np.sqrt(var) / eps_l
        raw = np.where(np.isfinite(raw), raw, counts)
        k = np.rint(raw).astype(np.int64)
    return np.clip(k, 1, np.maximum(counts, 1))


def median_of_means(samples: OperatorSamples, cfg: MoMConfig, h: Hamiltonian | None = None, total_shots: int = 0) -> np.ndarray:
    if cfg.rule in ("variance_ratio", "variance_scaled") and h is None:
        raise ValueError("variance-based block rules need the Hamiltonian for eps_l")
    k = block_counts(samples, cfg, h, total_shots)
    return np.array([mom_single(s, kk) for s, kk in zip(samples.samples, k)])


@dataclass
class EnergyEstimate:
    value: float
    identity_offset: float
    term_estimates: np.ndarray
    term_counts: np.ndarray
    term_variances: np.ndarray
    estimator: str
    labels: list[str] = field(default_factory=list)
    coefficients: np.ndarray | None = None

    @property
    def measured(self) -> np.ndarray:
        return self.term_counts > 0

    @property
    def unmeasured(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.term_counts == 0)]

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "identity_offset": self.identity_offset,
            "estimator": self.estimator,
            "terms": [
                {
                    "index": i,
                    "label": self.labels[i] if self.labels else None,
                    "coefficient": float(self.coefficients[i]) if self.coefficients is not None else None,
                    "estimate": float(self.term_estimates[i]),
                    "hits": int(self.term_counts[i]),
                    "variance": float(self.term_variances[i]),
                    "measured": bool(self.term_counts[i] > 0),
                }
                for i in range(len(self.term_estimates))
            ],
            "unmeasured": self.unmeasured,
        }


def estimate_energy(records, groups, h: Hamiltonian, cfg: MoMConfig | None = None) -> EnergyEstimate:
    """``identity_offset + sum_l a_l O_l`` with per-term median-of-means (or mean).

    Terms no record touched contribute 0 and are listed in ``unmeasured``.
    """
    cfg = cfg or MoMConfig()
    records = list(records)
    samples = extract_signs(records, groups, h)
    total = sum(r.shots for r in records)
    if cfg.rule == "mean":
        est, _ = mean_estimate(samples)
    else:
        est = median_of_means(samples, cfg, h, total)
    counts = samples.counts
    var = np.array([s.var(dtype=float) if len(s) else 0.0 for s in samples.samples])
    coeffs = h.coefficients
    value = h.identity_offset + float(np.dot(coeffs, est)) if len(coeffs) else h.identity_offset
    result = EnergyEstimate(
        value=value,
        identity_offset=h.identity_offset,
        term_estimates=est,
        term_counts=counts,
        term_variances=var,
        estimator=cfg.rule,
        labels=[op.label for op in h.operators],
        coefficients=coeffs,
    )
    return result
