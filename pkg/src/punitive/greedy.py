"""Limit-game analysis of the deviation-based punitive policy.

The supplier observes only the long-run gap ``f(r)`` between the mean true
potential and the mean reported potential and adds ``(pi / sqrt(alpha)) f(r)``
to the equilibrium quote of the reported state. Against greedy (under-
reporting) manufacturers, a large enough ``pi`` makes truthful reporting the
strict unique best strategy; :func:`find_pi_bar` locates that threshold by an
exhaustive grid over the greedy policy class.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import PolicyError
from .market import MarketModel
from .misreport import ReportPolicy, expected_deviation, identity_policy

TIE_TOL = 1e-9
MAX_GRID_POLICIES = 5_000_000
_CHUNK = 50_000


def h_matrix(model: MarketModel) -> np.ndarray:
    """``h[i, j] = (2 phi_i - phi_j - alpha (cm + cs)) / (4 sqrt(alpha))``.

    ``h[i, j]**2`` is the manufacturer's best-response utility when the true
    potential is ``phi_i`` and the supplier quotes ``q*(phi_j)``.
    """
    phi = model.phi
    return (2.0 * phi[:, None] - phi[None, :] - model.cost_floor) / (4.0 * math.sqrt(model.alpha))


@dataclass(frozen=True)
class PolicyIAnalysis:
    """Penalty, ``h`` table and deviation for one (policy, pi) pair."""

    pi: float
    h: np.ndarray
    f_value: float

    def conditional(self) -> np.ndarray:
        """Matrix of :func:`conditional_utility` values for every (i, j)."""
        return _conditional(self.h, self.pi, self.f_value)


def analyze(policy: ReportPolicy, pi: float, model: MarketModel) -> PolicyIAnalysis:
    return PolicyIAnalysis(pi=float(pi), h=h_matrix(model),
                           f_value=expected_deviation(policy, model))


def punitive_quote(reported: int, pi: float, f_value: float, model: MarketModel) -> float:
    """Supplier price ``q*(phi_j) + (pi / sqrt(alpha)) * f`` for reported state ``j``."""
    q_star = model.supplier_prices()[reported]
    return float(q_star + pi / math.sqrt(model.alpha) * f_value)


def _conditional(h, pi, f_value):
    # best response to the punitive quote shifts h by half the scaled penalty
    return np.maximum(h - 0.5 * pi * f_value, 0.0) ** 2


def conditional_utility(i: int, j: int, pi: float, f_value: float, model: MarketModel) -> float:
    """Best-response utility with true state ``i`` and reported state ``j``.

    Equals ``([h_ij - pi * f / 2]^+)^2``, the supremum over selling prices of
    the manufacturer's utility against :func:`punitive_quote`.
    """
    h = h_matrix(model)
    return float(_conditional(h[i, j], pi, f_value))


def _require_greedy(policy: ReportPolicy) -> None:
    if np.any(np.triu(policy.r, k=1) > 0):
        raise PolicyError(
            "policy over-reports; the deviation-based penalty is only analysed for "
            "under-reporting policies, use punitive.strategic for general ones"
        )


def partial_info_utility(policy: ReportPolicy, pi: float, model: MarketModel) -> float:
    """Manufacturer's limit utility ``sum_{i>=j} sigma_i r_ij C(i, j)``."""
    _require_greedy(policy)
    f_value = expected_deviation(policy, model)
    cond = _conditional(h_matrix(model), pi, f_value)
    return float(np.sum(model.sigma[:, None] * policy.r * cond))


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    # lexicographic order over all ways to split ``total`` units into ``parts`` bins
    out = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        out.append(tuple(edges[k + 1] - edges[k] - 1 for k in range(parts)))
    out.sort()
    return out


def greedy_grid_size(n_states: int, grid_step: float) -> int:
    units = _grid_units(grid_step)
    return math.prod(math.comb(units + i, i) for i in range(n_states))


def _grid_units(grid_step: float) -> int:
    if not 0.0 < grid_step <= 0.5:
        raise ValueError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    units = round(1.0 / grid_step)
    if abs(units * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid_step must divide 1 exactly, got {grid_step}")
    return units


class GreedyGrid:
    """All greedy policies whose rows are multiples of ``grid_step``.

    Row ``i`` spreads its mass over states ``0..i``; the full class is the
    product of these simplices, enumerated in lexicographic order.
    """

    def __init__(self, model: MarketModel, grid_step: float):
        L = model.n_states
        if L > 6 and grid_step < 0.1:
            raise ValueError("refusing grid enumeration with more than 6 states at grid_step < 0.1")
        size = greedy_grid_size(L, grid_step)
        if size > MAX_GRID_POLICIES:
            raise ValueError(f"greedy grid has {size} policies, limit is {MAX_GRID_POLICIES}")
        units = _grid_units(grid_step)
        self.model = model
        self.grid_step = grid_step
        self.row_options = []
        for i in range(L):
            opts = np.zeros((math.comb(units + i, i), L))
            for k, comp in enumerate(_compositions(units, i + 1)):
                opts[k, : i + 1] = np.array(comp) / units
            self.row_options.append(opts)
        self.shape = tuple(len(o) for o in self.row_options)
        self.size = size

        # per-row contributions to f(r) and to the utility weights
        sigma, phi = model.sigma, model.phi
        gaps = phi[:, None] - phi[None, :]
        self._row_f = [opts @ (sigma[i] * gaps[i]) for i, opts in enumerate(self.row_options)]
        self._h = h_matrix(model)
        truthful_rows = tuple(int(np.nonzero(o[:, i] == 1.0)[0][0])
                              for i, o in enumerate(self.row_options))
        self.identity_flat = int(np.ravel_multi_index(truthful_rows, self.shape))

    def policy(self, flat_index: int) -> np.ndarray:
        idx = np.unravel_index(flat_index, self.shape)
        return np.stack([self.row_options[i][k] for i, k in enumerate(idx)])

    def _chunks(self):
        for start in range(0, self.size, _CHUNK):
            flat = np.arange(start, min(start + _CHUNK, self.size))
            idx = np.unravel_index(flat, self.shape)
            f = np.zeros(len(flat))
            for i, k in enumerate(idx):
                f += self._row_f[i][k]
            yield flat, idx, f

    def utilities(self, pi: float) -> np.ndarray:
        """Partial-information utility of every grid policy, in flat order."""
        sigma = self.model.sigma
        out = np.empty(self.size)
        for flat, idx, f in self._chunks():
            total = np.zeros(len(flat))
            shifted = self._h[None, :, :] - 0.5 * pi * f[:, None, None]
            cond = np.maximum(shifted, 0.0) ** 2
            for i, k in enumerate(idx):
                total += sigma[i] * np.einsum("nj,nj->n", self.row_options[i][k], cond[:, i, :])
            out[flat] = total
        return out


@dataclass(frozen=True)
class TruthCheck:
    """Outcome of an exhaustive truth-revelation test at one penalty."""

    pi: float
    truth_revealing: bool
    truthful_utility: float
    best_deviation_utility: float
    offender: np.ndarray | None
    n_policies: int

    @property
    def margin(self) -> float:
        """Truthful utility minus the best non-truthful utility."""
        return self.truthful_utility - self.best_deviation_utility


def _check(grid: GreedyGrid, pi: float) -> TruthCheck:
    utils = grid.utilities(pi)
    truthful = utils[grid.identity_flat]
    if grid.size == 1:
        return TruthCheck(pi, True, float(truthful), -math.inf, None, 1)
    others = utils.copy()
    others[grid.identity_flat] = -np.inf
    k = int(np.argmax(others))
    best = float(others[k])
    ok = bool(best < truthful - TIE_TOL)
    return TruthCheck(pi, ok, float(truthful), best, grid.policy(k), grid.size)


def verify_truth_revealing(pi: float, model: MarketModel, grid_step: float = 0.1) -> TruthCheck:
    """Is truthful reporting the strict unique maximiser over the greedy grid?

    Ties within ``1e-9`` count as failure. The returned offender is the best
    non-truthful policy (first in lexicographic order on ties).
    """
    return _check(GreedyGrid(model, grid_step), float(pi))


@dataclass(frozen=True)
class PiBarResult:
    """Empirical penalty threshold from a scan over ``pis``."""

    found: bool
    pi_bar: float | None
    pis: tuple[float, ...]
    verdicts: tuple[bool, ...]
    checks: tuple[TruthCheck, ...]


def find_pi_bar(model: MarketModel, grid_step: float = 0.1, pi_max: float = 20.0,
                pi_step: float = 0.5) -> PiBarResult:
    """Smallest scanned penalty above which every scanned penalty is truth revealing.

    The scan is ``pi_step, 2*pi_step, ..., pi_max``. When the largest scanned
    penalty still fails, ``found`` is False and ``pi_bar`` is None.
    """
    if pi_step <= 0 or pi_max < pi_step:
        raise ValueError("need 0 < pi_step <= pi_max")
    grid = GreedyGrid(model, grid_step)
    n = int(math.floor(pi_max / pi_step + 1e-9))
    pis = tuple(pi_step * k for k in range(1, n + 1))
    checks = tuple(_check(grid, pi) for pi in pis)
    verdicts = tuple(c.truth_revealing for c in checks)
    pi_bar = None
    for k in range(len(pis) - 1, -1, -1):
        if not verdicts[k]:
            break
        pi_bar = pis[k]
    return PiBarResult(pi_bar is not None, pi_bar, pis, verdicts, checks)


def truthful_value(model: MarketModel) -> float:
    """Utility of truthful reporting, independent of the penalty."""
    return partial_info_utility(identity_policy(model.n_states), 0.0, model)


__all__ = [
    "GreedyGrid", "PiBarResult", "PolicyIAnalysis", "TruthCheck", "analyze",
    "conditional_utility", "find_pi_bar", "greedy_grid_size", "h_matrix",
    "partial_info_utility", "punitive_quote", "truthful_value",
    "verify_truth_revealing",
]
