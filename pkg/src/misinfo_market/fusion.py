"""Multi-source Gaussian belief fusion.

Combines a normal prior with K normal signals into a normal posterior.
Internally everything is precision (inverse-variance) pooling, which is
O(K) and numerically robust for hub nodes with hundreds of sources; the
equivalent combinatorial form built from elementary symmetric sums is
exposed only through :func:`elementary_symmetric_sum` so tests can check
the two routes against each other.

Zero-variance signals are dogmatic: a single fully trusted source pins
the posterior to that source.  Sources an agent wants to ignore entirely
carry a ``discard`` flag rather than an IEEE infinity, keeping all
arithmetic finite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .params import GaussianBelief

__all__ = [
    "ContradictionError",
    "SourceSignal",
    "elementary_symmetric_sum",
    "fuse_many",
    "fuse_two",
    "kalman_gain",
]


class ContradictionError(ValueError):
    """Two or more fully trusted sources disagree; no posterior exists."""


@dataclass(frozen=True)
class SourceSignal:
    """One observed signal: a mean and the variance the observer implies
    for it.  ``discard=True`` marks a source treated as totally
    unreliable (the infinite-variance limit); its mean is ignored."""

    mean: float
    variance: float
    discard: bool = False

    def __post_init__(self) -> None:
        if self.discard:
            return
        if not math.isfinite(self.mean):
            raise ValueError(f"signal mean must be finite, got {self.mean}")
        if not (math.isfinite(self.variance) and self.variance >= 0.0):
            raise ValueError(
                f"signal variance must be finite and >= 0, got {self.variance}"
            )


def _pool(means: Sequence[float], variances: Sequence[float]) -> GaussianBelief:
    """Precision-weighted pooling of strictly positive-variance inputs."""
    precisions = [1.0 / v for v in variances]
    total = sum(precisions)
    mean = sum(p * m for p, m in zip(precisions, means)) / total
    return GaussianBelief(mean=mean, variance=1.0 / total)


def _fuse(means: Sequence[float], variances: Sequence[float]) -> GaussianBelief:
    """Fuse inputs allowing zero variances (dogmatic sources)."""
    certain = [m for m, v in zip(means, variances) if v == 0.0]
    if certain:
        first = certain[0]
        if any(m != first for m in certain[1:]):
            raise ContradictionError(
                f"conflicting zero-variance sources: means {sorted(set(certain))}"
            )
        return GaussianBelief(mean=first, variance=0.0)
    return _pool(means, variances)


def fuse_two(prior: GaussianBelief, signal: SourceSignal) -> GaussianBelief:
    """Posterior from one prior and one signal.

    With both variances positive this is the textbook conjugate-normal
    update; a zero-variance input dominates entirely; a discarded signal
    leaves the prior untouched.
    """
    if signal.discard:
        return prior
    return _fuse((prior.mean, signal.mean), (prior.variance, signal.variance))


def fuse_many(
    prior: GaussianBelief, signals: Iterable[SourceSignal]
) -> GaussianBelief:
    """Posterior from a prior and any number of signals.

    Equivalent to folding :func:`fuse_two` over the signals in any order.
    Raises :class:`ContradictionError` when several zero-variance inputs
    disagree on the mean.
    """
    means = [prior.mean]
    variances = [prior.variance]
    for s in signals:
        if s.discard:
            continue
        means.append(s.mean)
        variances.append(s.variance)
    if len(means) == 1:
        return prior
    return _fuse(means, variances)


def elementary_symmetric_sum(variances: Sequence[float], size: int) -> float:
    """Sum over all ``size``-subsets of ``variances`` of the subset product.

    ``size = 0`` returns 1 (empty-product convention).  Exhaustive
    enumeration: this is the combinatorial form of the fusion weights and
    is kept as an independent test oracle, not a production path.
    """
    if not 0 <= size <= len(variances):
        raise ValueError(
            f"subset size {size} out of range for {len(variances)} variances"
        )
    return sum(
        math.prod(combo) for combo in itertools.combinations(variances, size)
    )


def kalman_gain(prior_variance: float, signal_variance: float) -> float:
    """Weight on the innovation in the single-signal update.

    Equals prior_variance / (prior_variance + signal_variance); the
    one-signal posterior mean is prior + gain * (signal - prior).
    """
    denom = prior_variance + signal_variance
    if denom <= 0.0:
        raise ValueError("prior and signal variances cannot both be zero")
    return prior_variance / denom
