"""Model parameters, primitive belief types, and seeded RNG streams.

Everything downstream (networks, market loop, experiment drivers) consumes
the immutable :class:`ModelParams` defined here.  All randomness in a run
flows from a single 64-bit seed, split into named independent streams so
results are bit-reproducible regardless of evaluation order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace

import numpy as np

__all__ = [
    "AgentCategory",
    "GaussianBelief",
    "ModelParams",
    "ParamError",
    "STREAM_NAMES",
    "seed_streams",
    "validate",
]


class ParamError(ValueError):
    """Raised when one or more parameter invariants are violated."""


class AgentCategory(enum.IntEnum):
    """Fixed trader category: private clean signal, private corrupted
    signal, or network-only information access."""

    INFORMED = 0
    MISINFORMED = 1
    UNINFORMED = 2

    @property
    def letter(self) -> str:
        return {0: "I", 1: "M", 2: "U"}[int(self)]

    @classmethod
    def from_letter(cls, letter: str) -> "AgentCategory":
        table = {"I": cls.INFORMED, "M": cls.MISINFORMED, "U": cls.UNINFORMED}
        try:
            return table[letter]
        except KeyError:
            raise ParamError(f"unknown category letter {letter!r}") from None


@dataclass(frozen=True)
class GaussianBelief:
    """A normal belief (mean, variance) over the next-step information
    component of dividends."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.mean):
            raise ParamError(f"belief mean must be finite, got {self.mean}")
        if not np.isfinite(self.variance) or self.variance < 0:
            raise ParamError(
                f"belief variance must be finite and >= 0, got {self.variance}"
            )


@dataclass(frozen=True)
class ModelParams:
    """All scalar constants of the market model.

    Defaults are the calibrated baseline: desk-size population, daily
    risk-free rate, and the estimated shock scales for the information
    and misinformation processes.
    """

    n_steps: int = 1500           # simulated trading periods
    n_agents: int = 200           # population size
    gross_rate: float = 1.0001    # gross risk-free rate per period, > 1
    dividend_const: float = 0.021  # constant dividend component
    risk_aversion: float = 1.0    # CARA coefficient, > 0
    sigma_noise: float = 1.0      # std of unobservable dividend noise
    ema_weight: float = 0.9       # memory weight of the forecast-error EMA
    frac_informed: float = 0.05   # share of informed agents
    frac_misinformed: float = 0.05  # share of misinformed agents
    persistence: float = 0.5      # AR(1) coefficient of the information process
    sigma_info: float = 0.84      # std of information shocks
    sigma_misinfo: float = 1.36   # std of misinformation shocks
    endowment: float = 0.0        # per-period endowment; cancels from demand

    # Derived quantities -------------------------------------------------

    @property
    def net_rate(self) -> float:
        """Net risk-free rate r = R - 1."""
        return self.gross_rate - 1.0

    @property
    def fundamental_price(self) -> float:
        """Discounted value of the constant dividend stream, d / r."""
        return self.dividend_const / self.net_rate

    @property
    def payoff_slope(self) -> float:
        """Sensitivity R / (R - beta) of expected payoff to the belief mean."""
        return self.gross_rate / (self.gross_rate - self.persistence)

    @property
    def payoff_intercept(self) -> float:
        """Belief-free part dR / r of the expected payoff."""
        return self.dividend_const * self.gross_rate / self.net_rate

    def counts(self) -> tuple[int, int, int]:
        """(informed, misinformed, uninformed) head-counts."""
        n_inf = round(self.frac_informed * self.n_agents)
        n_mis = round(self.frac_misinformed * self.n_agents)
        return n_inf, n_mis, self.n_agents - n_inf - n_mis

    def with_overrides(self, **kwargs) -> "ModelParams":
        return validate(replace(self, **kwargs))


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged iff every invariant holds.

    Raises :class:`ParamError` naming every violated field at once so a
    bad config surfaces all problems in one pass.
    """
    p = params
    problems: list[str] = []
    if p.n_steps < 1:
        problems.append(f"n_steps must be >= 1, got {p.n_steps}")
    if p.n_agents < 2:
        problems.append(f"n_agents must be >= 2, got {p.n_agents}")
    if not p.gross_rate > 1.0:
        problems.append(f"gross_rate must be > 1, got {p.gross_rate}")
    if not p.risk_aversion > 0.0:
        problems.append(f"risk_aversion must be > 0, got {p.risk_aversion}")
    if not 0.0 < p.ema_weight < 1.0:
        problems.append(f"ema_weight must be in (0, 1), got {p.ema_weight}")
    if not 0.0 < p.persistence < 1.0:
        problems.append(f"persistence must be in (0, 1), got {p.persistence}")
    for name in ("sigma_noise", "sigma_info", "sigma_misinfo"):
        value = getattr(p, name)
        if not (np.isfinite(value) and value >= 0.0):
            problems.append(f"{name} must be finite and >= 0, got {value}")
    if p.frac_informed < 0.0:
        problems.append(f"frac_informed must be >= 0, got {p.frac_informed}")
    if p.frac_misinformed < 0.0:
        problems.append(f"frac_misinformed must be >= 0, got {p.frac_misinformed}")
    if p.frac_informed + p.frac_misinformed > 1.0:
        problems.append(
            "frac_informed + frac_misinformed must be <= 1, got "
            f"{p.frac_informed + p.frac_misinformed}"
        )
    if not np.isfinite(p.endowment):
        problems.append(f"endowment must be finite, got {p.endowment}")
    if problems:
        raise ParamError("; ".join(problems))
    return params


# Named independent randomness streams, in fixed spawn order.  "eta" drives
# information shocks, "nu" misinformation shocks, "eps" dividend noise,
# "network" graph construction, and "placement" category assignment.
STREAM_NAMES = ("eta", "nu", "eps", "network", "placement")


def seed_streams(seed: int) -> dict[str, np.random.Generator]:
    """Split one 64-bit seed into the named independent generator streams."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(STREAM_NAMES, children)
    }


def params_as_dict(params: ModelParams) -> dict[str, float]:
    """Flat field -> value mapping, used for config round-trips and hashing."""
    return {f.name: getattr(params, f.name) for f in fields(params)}
