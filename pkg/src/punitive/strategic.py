"""Limit analysis of the demand-feedback punitive policy.

For each reported state ``j`` the supplier tracks the average demand seen in
slots where ``j`` was reported and quotes

    Q = q*(phi_j) + 2 pi (Dbar_j - sqrt(alpha) h_jj).

The running average is a stochastic-approximation recursion whose mean drift
``g(d)`` is piecewise linear and strictly decreasing, so it has a unique zero
``d*_j`` on ``[0, phi_L]`` that attracts the recursion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PolicyError
from .greedy import h_matrix
from .market import MarketModel
from .misreport import ReportPolicy

BISECT_TOL = 1e-12
RESIDUAL_TOL = 1e-10
SELF_CONSISTENCY_TOL = 1e-8


def _report_weights(j: int, policy: ReportPolicy, model: MarketModel) -> tuple[np.ndarray, float]:
    w = model.sigma * policy.r[:, j]
    total = float(w.sum())
    if total <= 0.0:
        raise PolicyError(f"state {j} is never reported (zero report probability)")
    return w, total


def _threshold(d: float, j: int, pi: float, h: np.ndarray, alpha: float) -> float:
    sa = math.sqrt(alpha)
    return sa * pi * (d - sa * h[j, j])


def n_index(d: float, j: int, pi: float, model: MarketModel) -> int | None:
    """Smallest true state ``i`` whose best response still sells at average ``d``.

    That is ``min {i : h_ij > sqrt(alpha) pi (d - sqrt(alpha) h_jj)}``; None when
    no state qualifies. Because ``h_ij`` increases in ``i``, every ``i`` at or
    above the returned index qualifies.
    """
    h = h_matrix(model)
    hits = np.nonzero(h[:, j] > _threshold(d, j, pi, h, model.alpha))[0]
    return int(hits[0]) if hits.size else None


def pair_demands(d: float, j: int, pi: float, model: MarketModel) -> np.ndarray:
    """Mean demand for each true state when ``j`` is reported and the average is ``d``."""
    h = h_matrix(model)
    sa = math.sqrt(model.alpha)
    raw = sa * h[:, j] - pi * model.alpha * (d - sa * h[j, j])
    return np.maximum(raw, 0.0)


def ode_rhs(d: float, j: int, policy: ReportPolicy, pi: float, model: MarketModel) -> float:
    """Mean drift of the per-report demand average at level ``d``."""
    w, total = _report_weights(j, policy, model)
    return float(np.dot(w, pair_demands(d, j, pi, model)) / total - d)


def closed_form(j: int, cutoff: int | None, policy: ReportPolicy, pi: float,
                model: MarketModel) -> float:
    """Zero of the drift on the linear piece where states ``>= cutoff`` sell."""
    if cutoff is None:
        return 0.0
    h = h_matrix(model)
    alpha = model.alpha
    w, total = _report_weights(j, policy, model)
    active = w[cutoff:]
    num = math.sqrt(alpha) * float(np.dot(active, h[cutoff:, j] + pi * alpha * h[j, j]))
    den = total + pi * alpha * float(active.sum())
    return num / den


@dataclass(frozen=True)
class Attractor:
    """Attractor of one reported state."""

    j: int
    d_star: float
    n_index: int | None
    report_prob: float
    residual: float
    closed_form_gap: float


@dataclass(frozen=True)
class FixedPointResult:
    """Attractors for every state; NaN / None where a state is never reported."""

    d_star: np.ndarray
    n_index: tuple[int | None, ...]
    report_prob: np.ndarray
    residual: np.ndarray
    entries: tuple[Attractor | None, ...]


def fixed_point(j: int, policy: ReportPolicy, pi: float, model: MarketModel) -> Attractor:
    """Unique zero of the drift for reported state ``j``.

    Bisection on ``[0, phi_L]`` to ``1e-12`` locates the linear piece holding
    the root; the closed form on that piece then gives the root exactly.
    """
    w, total = _report_weights(j, policy, model)
    g = lambda d: ode_rhs(d, j, policy, pi, model)  # noqa: E731
    lo, hi = 0.0, model.support[-1]
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0 and model.allow_boundary and g_hi < 0.0:
        # zero-margin state: demand and its attractor sit exactly at zero
        cutoff = n_index(0.0, j, pi, model)
        return Attractor(j, 0.0, cutoff, total, 0.0,
                         abs(closed_form(j, cutoff, policy, pi, model)))
    if not (g_lo > 0.0 and g_hi < 0.0):
        raise PolicyError(
            f"drift sign condition fails for state {j}: g(0) = {g_lo}, g(phi_L) = {g_hi}"
        )
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    d_bis = 0.5 * (lo + hi)

    # polish on the piece found by bisection; at a kink either side is acceptable
    best = (abs(g(d_bis)), d_bis)
    for probe in (lo, hi, d_bis):
        cand = closed_form(j, n_index(probe, j, pi, model), policy, pi, model)
        if 0.0 <= cand <= model.support[-1]:
            best = min(best, (abs(g(cand)), cand))
    residual, d_star = best
    cutoff = n_index(d_star, j, pi, model)
    gap = abs(closed_form(j, cutoff, policy, pi, model) - d_star)
    return Attractor(j, d_star, cutoff, total, residual, gap)


def fixed_points(policy: ReportPolicy, pi: float, model: MarketModel) -> FixedPointResult:
    """Attractors for all states reported with positive probability."""
    L = model.n_states
    probs = policy.report_probs(model)
    entries = tuple(
        fixed_point(j, policy, pi, model) if probs[j] > 0 else None for j in range(L)
    )
    nan = float("nan")
    return FixedPointResult(
        d_star=np.array([e.d_star if e else nan for e in entries]),
        n_index=tuple(e.n_index if e else None for e in entries),
        report_prob=probs,
        residual=np.array([e.residual if e else nan for e in entries]),
        entries=entries,
    )


def margins(policy: ReportPolicy, pi: float, model: MarketModel,
            result: FixedPointResult | None = None) -> np.ndarray:
    """``W*_ij = sqrt(alpha) h_ij - pi alpha (d*_j - sqrt(alpha) h_jj)``.

    ``W*_ij`` is the limiting mean demand of pair (i, j) when positive; the
    per-unit margin of that pair is ``W*_ij / alpha``. Columns of unreported
    states are NaN.
    """
    if result is None:
        result = fixed_points(policy, pi, model)
    h = h_matrix(model)
    sa = math.sqrt(model.alpha)
    target = sa * np.diag(h)
    return sa * h - pi * model.alpha * (result.d_star - target)[None, :]


def asymptotic_utility(policy: ReportPolicy, pi: float, model: MarketModel) -> float:
    """Long-run revenue rate of the manufacturer under the demand-feedback policy.

    Pair (i, j) sells ``[W*_ij]^+`` units at margin ``W*_ij / alpha``, so the
    rate is ``sum_ij sigma_i r_ij ([W*_ij]^+)^2 / alpha``. Truthful reporting
    gives the perfect-information value for every ``pi``.
    """
    W = margins(policy, pi, model)
    weights = model.sigma[:, None] * policy.r
    active = weights > 0
    return float(np.sum(weights[active] * np.maximum(W[active], 0.0) ** 2) / model.alpha)


def attractor_utility(policy: ReportPolicy, pi: float, model: MarketModel) -> float:
    """``sum_ij sigma_i r_ij d*_j W*_ij / alpha``.

    Replaces each pair's own demand by the per-report attractor ``d*_j``. It
    coincides with :func:`asymptotic_utility` when every reported state is
    reached from a single true state, and falls short of it by
    ``sum_j P(j) Var(phi | j) / (4 alpha)`` when no pair is priced out.
    """
    result = fixed_points(policy, pi, model)
    W = margins(policy, pi, model, result)
    weights = model.sigma[:, None] * policy.r
    active = weights > 0
    dW = (result.d_star[None, :] * W)
    return float(np.sum(weights[active] * dW[active]) / model.alpha)


def attractor_bound(policy: ReportPolicy, pi: float, model: MarketModel) -> float:
    """``sum_ij sigma_i r_ij d*_j sqrt(alpha) h_ij / alpha`` (penalty-free margins)."""
    result = fixed_points(policy, pi, model)
    h = h_matrix(model)
    weights = model.sigma[:, None] * policy.r
    active = weights > 0
    term = result.d_star[None, :] * math.sqrt(model.alpha) * h
    return float(np.sum(weights[active] * term[active]) / model.alpha)


def truthful_value(model: MarketModel) -> float:
    """``sum_i sigma_i (phi_i - alpha (cs + cm))^2 / (16 alpha)``."""
    gap = model.phi - model.cost_floor
    return float(np.dot(model.sigma, gap * gap) / (16.0 * model.alpha))


@dataclass(frozen=True)
class StrategicThreshold:
    found: bool
    pi_bar: float | None
    scanned: tuple[float, ...]
    utilities: tuple[float, ...]
    truthful: float


def find_pi_bar_strategic(policy: ReportPolicy, model: MarketModel, pi_max: float = 1e4,
                          tol: float = 1e-3) -> StrategicThreshold:
    """Smallest penalty at which misreporting with ``policy`` earns less than truth.

    Scans ``1, 2, 4, ... <= pi_max`` for the first penalty with
    ``asymptotic_utility < truthful_value`` and bisects the bracketing
    interval to ``tol``. The scan reports ``found=False`` if no penalty works.
    """
    if policy.is_identity():
        raise PolicyError("truthful reporting has no threshold: its utility never drops")
    truth = truthful_value(model)
    below = lambda pi: asymptotic_utility(policy, pi, model) < truth  # noqa: E731

    scanned, utils = [], []
    pi, prev = 1.0, 0.0
    hit = None
    while pi <= pi_max * (1 + 1e-12):
        scanned.append(pi)
        utils.append(asymptotic_utility(policy, pi, model))
        if utils[-1] < truth:
            hit = pi
            break
        prev, pi = pi, 2.0 * pi
    if hit is None:
        return StrategicThreshold(False, None, tuple(scanned), tuple(utils), truth)
    if prev == 0.0 and below(0.0):
        return StrategicThreshold(True, 0.0, tuple(scanned), tuple(utils), truth)
    lo, hi = prev, hit
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return StrategicThreshold(True, hi, tuple(scanned), tuple(utils), truth)


def identity_check(model: MarketModel) -> float:
    """Largest ``|16 alpha (h_jj h_ij - h_ii^2) + (phi_j - phi_i)^2|`` over all pairs."""
    h = h_matrix(model)
    d = np.diag(h)
    phi = model.phi
    lhs = 16.0 * model.alpha * (d[None, :] * h - (d * d)[:, None])
    return float(np.max(np.abs(lhs + (phi[None, :] - phi[:, None]) ** 2)))
