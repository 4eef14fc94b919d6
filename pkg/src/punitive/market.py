"""Economy primitives and perfect-information Stackelberg equilibria.

The supplier (leader) quotes a raw-material price ``q``; the manufacturer
(follower) sets a selling price ``p`` against the linear demand curve
``D(p, phi) = (phi - alpha * p)^+``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AssumptionError, ModelError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class MarketModel:
    """Costs, price sensitivity and the finite market-potential distribution.

    Parameters
    ----------
    alpha : float
        Price sensitivity in (0, 1].
    cs, cm : float
        Per-unit supplier procurement cost and manufacturer production cost.
    support : sequence of float
        Strictly increasing market potentials ``phi_1 < ... < phi_L``.
    probs : sequence of float
        Positive probabilities of each potential, summing to one.
    allow_boundary : bool
        Accept ``phi_1 == alpha * (cs + cm)``, a state whose equilibrium
        margin is exactly zero. Strict inequality is required otherwise.
    """

    alpha: float
    cs: float
    cm: float
    support: tuple[float, ...]
    probs: tuple[float, ...]
    allow_boundary: bool = field(default=False, compare=False)

    def __post_init__(self):
        support = tuple(float(x) for x in self.support)
        probs = tuple(float(x) for x in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "cs", float(self.cs))
        object.__setattr__(self, "cm", float(self.cm))

        if not 0.0 < self.alpha <= 1.0:
            raise ModelError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.cs < 0 or self.cm < 0:
            raise ModelError("costs must be non-negative")
        if len(support) < 1:
            raise ModelError("support must contain at least one potential")
        if len(support) != len(probs):
            raise ModelError(
                f"support has {len(support)} states but probs has {len(probs)}"
            )
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ModelError("support must be strictly increasing")
        if any(not math.isfinite(x) for x in support + probs):
            raise ModelError("support and probs must be finite")
        if any(p <= 0 for p in probs):
            raise ModelError("probs must be strictly positive")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ModelError(f"probs must sum to 1, got {math.fsum(probs)!r}")

        floor = self.alpha * (self.cs + self.cm)
        low = support[0]
        if low < floor or (low == floor and not self.allow_boundary):
            raise AssumptionError(
                f"smallest potential {low} must exceed alpha*(cs+cm) = {floor}"
            )

    @classmethod
    def from_arrays(cls, alpha, cs, cm, support: Sequence[float], probs: Sequence[float],
                    allow_boundary: bool = False) -> "MarketModel":
        return cls(alpha, cs, cm, tuple(support), tuple(probs), allow_boundary)

    @property
    def n_states(self) -> int:
        return len(self.support)

    @property
    def phi(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def cost_floor(self) -> float:
        """``alpha * (cs + cm)``, the potential below which nobody profits."""
        return self.alpha * (self.cs + self.cm)

    @property
    def mean_potential(self) -> float:
        return float(np.dot(self.sigma, self.phi))

    def supplier_prices(self) -> np.ndarray:
        """Equilibrium quotes ``q*(phi_j)`` for every state."""
        return (self.phi + self.alpha * (self.cs - self.cm)) / (2.0 * self.alpha)

    def truthful_demands(self) -> np.ndarray:
        """Equilibrium demand ``(phi_j - alpha*(cs+cm)) / 4`` for every state."""
        return (self.phi - self.cost_floor) / 4.0


@dataclass(frozen=True)
class SbeOutcome:
    """Per-state equilibrium prices and utilities plus their expectations."""

    p_star: np.ndarray
    q_star: np.ndarray
    u_m: np.ndarray
    u_s: np.ndarray
    expected_u_m: float
    expected_u_s: float


def _check_price(value: float, name: str) -> None:
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")


def demand(p: float, phi: float, alpha: float) -> float:
    """Customers attracted at selling price ``p``: ``(phi - alpha*p)^+``."""
    _check_price(p, "price")
    if phi <= 0:
        raise ValueError(f"market potential must be positive, got {phi}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return max(phi - alpha * p, 0.0)


def manufacturer_utility(p: float, q: float, phi: float, model: MarketModel) -> float:
    _check_price(q, "supplier price")
    return demand(p, phi, model.alpha) * (p - q - model.cm)


def supplier_utility(p: float, q: float, phi: float, model: MarketModel) -> float:
    _check_price(q, "supplier price")
    return demand(p, phi, model.alpha) * (q - model.cs)


def best_response_price(phi: float, q: float, model: MarketModel) -> float:
    """Manufacturer's optimal selling price against the quote ``q``.

    Returns the interior optimum ``(phi + alpha*(q + cm)) / (2*alpha)``. When
    no price earns a positive margin the market is shut down by pricing at
    ``phi / alpha`` (zero demand, zero utility).
    """
    alpha = model.alpha
    cost = q + model.cm
    if phi - alpha * cost <= 0.0:
        p = phi / alpha
        # rounding can leave a sliver of demand at phi / alpha
        while phi - alpha * p > 0.0:
            p = math.nextafter(p, math.inf)
        return p
    p = (phi + alpha * cost) / (2.0 * alpha)
    # only reachable with a negative quote; the maximiser over [0, inf) is then 0
    return p if p > 0.0 else 0.0


def _require_assumption(phi: float, model: MarketModel) -> None:
    floor = model.cost_floor
    if phi < floor or (phi == floor and not model.allow_boundary):
        raise AssumptionError(
            f"potential {phi} must exceed alpha*(cs+cm) = {floor}"
        )


def sbe_single(phi: float, model: MarketModel) -> tuple[float, float, float, float]:
    """Unique Stackelberg equilibrium for a known potential ``phi``.

    Returns ``(p_star, q_star, u_m, u_s)`` with ``u_s == 2 * u_m``.
    """
    _require_assumption(phi, model)
    alpha = model.alpha
    q_star = (phi + alpha * (model.cs - model.cm)) / (2.0 * alpha)
    p_star = (phi + alpha * (q_star + model.cm)) / (2.0 * alpha)
    gap = phi - model.cost_floor
    u_m = gap * gap / (16.0 * alpha)
    return p_star, q_star, u_m, 2.0 * u_m


def sbe_dynamic(model: MarketModel) -> SbeOutcome:
    """Equilibrium of the limit game: the single-stage SBE applied per state."""
    rows = [sbe_single(phi, model) for phi in model.support]
    p_star, q_star, u_m, u_s = (np.array(col, dtype=float) for col in zip(*rows))
    sigma = model.sigma
    return SbeOutcome(
        p_star=p_star,
        q_star=q_star,
        u_m=u_m,
        u_s=u_s,
        expected_u_m=float(np.dot(sigma, u_m)),
        expected_u_s=float(np.dot(sigma, u_s)),
    )


def example_one() -> MarketModel:
    """Three-state market used for the penalty-sweep experiment."""
    return MarketModel(0.5, 10.0, 10.0, (40.0, 60.0, 80.0), (0.2, 0.5, 0.3))


def example_two() -> MarketModel:
    """Five-state market with a zero-margin lowest state (boundary allowed)."""
    return MarketModel(
        0.5, 10.0, 10.0,
        (10.0, 40.0, 60.0, 70.0, 80.0),
        (0.1, 0.2, 0.3, 0.2, 0.2),
        allow_boundary=True,
    )
