"""Seeded Monte-Carlo simulation of the slot-by-slot supply chain.

Each slot draws the true potential, the manufacturer's report, the supplier's
punitive quote, the manufacturer's best-response selling price and the
realised demand, then updates the running averages the supplier relies on.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from . import kernels
from .greedy import h_matrix
from .market import MarketModel
from .misreport import ReportPolicy, sample_reports

MAX_SEED = 2**64


@dataclass(frozen=True)
class PunitiveSpec:
    """Which punitive policy the supplier runs and its penalty ``pi``.

    ``"I"`` penalises the gap between expected and average reported
    potential; ``"II"`` penalises per-report demand averages.
    """

    kind: str
    pi: float

    def __post_init__(self):
        if self.kind not in ("I", "II"):
            raise ValueError(f"policy kind must be 'I' or 'II', got {self.kind!r}")
        if not math.isfinite(self.pi) or self.pi < 0:
            raise ValueError(f"penalty must be finite and non-negative, got {self.pi}")


@dataclass(frozen=True)
class SimConfig:
    model: MarketModel
    report: ReportPolicy
    policy: PunitiveSpec
    horizon: int
    seed: int = 0
    noise_halfwidth: float = 0.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.noise_halfwidth < 0:
            raise ValueError("noise half-width must be non-negative")
        if self.policy.kind == "I" and self.noise_halfwidth != 0:
            raise ValueError("demand noise is only modelled for policy II")
        if self.report.n_states != self.model.n_states:
            raise ValueError("report matrix size does not match the model")

    def with_seed(self, seed: int) -> "SimConfig":
        return SimConfig(self.model, self.report, self.policy, self.horizon, seed,
                         self.noise_halfwidth)


@dataclass(frozen=True)
class SlotRecord:
    t: int
    true_state: int
    reported_state: int
    quote: float
    price: float
    demand: float
    u_m: float
    u_s: float


@dataclass(frozen=True)
class TraceSummary:
    """Running averages at the end of the horizon.

    ``u_m_bar`` averages realised revenue; ``u_m_bar_clairvoyant`` (policy I
    only) averages ``([h_ij - pi f_t]^+)^2`` instead.
    """

    phi_bar: float
    f_t: float
    u_m_bar: float
    u_s_bar: float
    d_bar: np.ndarray | None = None
    u_m_bar_clairvoyant: float | None = None

    def as_dict(self) -> dict[str, float]:
        out = {"u_m_bar": self.u_m_bar, "u_s_bar": self.u_s_bar,
               "phi_bar": self.phi_bar, "f_t": self.f_t}
        if self.u_m_bar_clairvoyant is not None:
            out["u_m_bar_clairvoyant"] = self.u_m_bar_clairvoyant
        if self.d_bar is not None:
            for k, v in enumerate(self.d_bar):
                out[f"d_bar_{k + 1}"] = float(v)
        return out


@dataclass
class Trace:
    """Per-slot arrays of one run (0-based slot index ``t`` maps to slot ``t + 1``)."""

    config: SimConfig
    true_state: np.ndarray
    reported_state: np.ndarray
    quote: np.ndarray
    price: np.ndarray
    demand: np.ndarray
    u_m: np.ndarray
    u_s: np.ndarray
    phi_bar: np.ndarray
    f_t: np.ndarray
    u_m_bar: np.ndarray
    u_s_bar: np.ndarray
    u_m_bar_clairvoyant: np.ndarray | None = None
    d_bar: np.ndarray | None = None
    report_counts: np.ndarray | None = None

    @property
    def summary(self) -> TraceSummary:
        return TraceSummary(
            phi_bar=float(self.phi_bar[-1]),
            f_t=float(self.f_t[-1]),
            u_m_bar=float(self.u_m_bar[-1]),
            u_s_bar=float(self.u_s_bar[-1]),
            d_bar=None if self.d_bar is None else self.d_bar[-1].copy(),
            u_m_bar_clairvoyant=(None if self.u_m_bar_clairvoyant is None
                                 else float(self.u_m_bar_clairvoyant[-1])),
        )

    def record(self, t: int) -> SlotRecord:
        return SlotRecord(t + 1, int(self.true_state[t]), int(self.reported_state[t]),
                          float(self.quote[t]), float(self.price[t]), float(self.demand[t]),
                          float(self.u_m[t]), float(self.u_s[t]))

    def records(self) -> Iterator[SlotRecord]:
        for t in range(len(self.quote)):
            yield self.record(t)


def _streams(seed: int) -> tuple[np.random.Generator, ...]:
    # independent market / report / noise streams keep policy I and II runs comparable
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


def draw_inputs(config: SimConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """True states, reported states and demand noise for every slot."""
    market_rng, report_rng, noise_rng = _streams(config.seed)
    T = config.horizon
    cdf = np.cumsum(config.model.sigma)
    cdf[-1] = 1.0
    true_idx = np.searchsorted(cdf, market_rng.random(T), side="right").astype(np.int64)
    rep_idx = sample_reports(true_idx, config.report, report_rng)
    n = config.noise_halfwidth
    noise = noise_rng.uniform(-n, n, T) if n > 0 else np.zeros(T)
    return true_idx, rep_idx, noise


def _alloc(T: int, k: int) -> list[np.ndarray]:
    return [np.empty(T) for _ in range(k)]


def run_policy_one(config: SimConfig, backend: str | None = None) -> Trace:
    """Simulate the deviation-based policy with online estimates.

    Quote ``Q_t = q*(phihat_t) + pi f_t`` with
    ``f_t = (E[phi] - mean(phihat_1..phihat_t))^+``.
    """
    if config.policy.kind != "I":
        raise ValueError("run_policy_one needs a policy I configuration")
    model = config.model
    true_idx, rep_idx, _ = draw_inputs(config)
    T = config.horizon
    Q, P, D, um, us, pb, f, umb, ume, usb = _alloc(T, 10)
    kernels.get(backend).policy_one_loop(
        true_idx, rep_idx, model.phi, model.supplier_prices(), h_matrix(model),
        model.alpha, model.cs, model.cm, float(config.policy.pi), model.mean_potential,
        Q, P, D, um, us, pb, f, umb, ume, usb,
    )
    return Trace(config, true_idx, rep_idx, Q, P, D, um, us, pb, f, umb, usb,
                 u_m_bar_clairvoyant=ume)


def run_policy_two(config: SimConfig, backend: str | None = None) -> Trace:
    """Simulate the demand-feedback policy.

    Quote ``Q_t = q*(phi_j) + 2 pi (Dbar_j - sqrt(alpha) h_jj)`` where
    ``Dbar_j`` averages demand over earlier slots that reported ``j`` and
    starts at ``sqrt(alpha) h_jj``. Demand gets uniform noise on ``[-n, n]``
    while the market is open and is floored at zero.
    """
    if config.policy.kind != "II":
        raise ValueError("run_policy_two needs a policy II configuration")
    model = config.model
    true_idx, rep_idx, noise = draw_inputs(config)
    T, L = config.horizon, model.n_states
    Q, P, D, um, us, pb, f, umb, usb = _alloc(T, 9)
    d_bar = np.empty((T, L))
    counts = np.zeros(L, dtype=np.int64)
    kernels.get(backend).policy_two_loop(
        true_idx, rep_idx, noise, model.phi, model.supplier_prices(),
        model.truthful_demands(), model.alpha, model.cs, model.cm,
        float(config.policy.pi), model.mean_potential,
        Q, P, D, um, us, pb, f, umb, usb, d_bar, counts,
    )
    return Trace(config, true_idx, rep_idx, Q, P, D, um, us, pb, f, umb, usb,
                 d_bar=d_bar, report_counts=counts)


def run(config: SimConfig, backend: str | None = None) -> Trace:
    if config.policy.kind == "I":
        return run_policy_one(config, backend)
    return run_policy_two(config, backend)


@dataclass(frozen=True)
class Replication:
    """Across-seed mean and standard error of each summary statistic."""

    n_seeds: int
    mean: dict[str, float]
    stderr: dict[str, float]


def replicate(config: SimConfig, n_seeds: int, backend: str | None = None) -> Replication:
    """Run seeds ``seed, seed + 1, ...`` and aggregate the final running averages."""
    if n_seeds < 2:
        raise ValueError("need at least two seeds for a standard error")
    rows = [run(config.with_seed(config.seed + k), backend).summary.as_dict()
            for k in range(n_seeds)]
    mean, stderr = {}, {}
    for key in rows[0]:
        vals = np.array([r[key] for r in rows])
        mean[key] = float(vals.mean())
        stderr[key] = float(vals.std(ddof=1) / math.sqrt(n_seeds))
    return Replication(n_seeds, mean, stderr)


TRACE_COLUMNS = ("t", "phi", "phi_hat", "Q", "P", "D", "u_m", "u_s", "phi_bar", "f_t")


def trace_header(trace: Trace) -> list[str]:
    cols = list(TRACE_COLUMNS)
    if trace.d_bar is not None:
        cols += [f"d_bar_{k + 1}" for k in range(trace.d_bar.shape[1])]
    return cols


def write_trace_csv(trace: Trace, out: TextIO) -> None:
    """Per-slot CSV with a mandatory header and fixed column order."""
    phi = trace.config.model.phi
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(trace_header(trace))
    for t in range(len(trace.quote)):
        row = [t + 1, repr(float(phi[trace.true_state[t]])),
               repr(float(phi[trace.reported_state[t]]))]
        row += [repr(float(a[t])) for a in (trace.quote, trace.price, trace.demand,
                                           trace.u_m, trace.u_s, trace.phi_bar, trace.f_t)]
        if trace.d_bar is not None:
            row += [repr(float(v)) for v in trace.d_bar[t]]
        writer.writerow(row)


def trace_csv_text(trace: Trace) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()
