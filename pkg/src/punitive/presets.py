"""Named experiments reproducing the two penalty studies.

``fig2-left`` sweeps a common under-reporting probability ``r21 = r31`` on
the three-state market and reports the across-seed mean of the final
manufacturer revenue average. ``fig2-right`` follows the revenue average over
time on the five-state market for truthful and misreporting manufacturers.
Both use the deviation-based penalty (policy I).
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .market import MarketModel, example_one, example_two
from .misreport import ReportPolicy, identity_policy, validate
from .sim import PunitiveSpec, SimConfig, run

PIS = (1.0, 5.0, 10.0)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    model: MarketModel
    horizon: int
    pis: tuple[float, ...]
    sweep: tuple[float, ...]
    columns: tuple[str, ...]


def sweep_policy(r21: float) -> ReportPolicy:
    """Three-state greedy policy with ``r21 = r31`` and ``r32 = 0``."""
    return validate([[1.0, 0.0, 0.0],
                     [r21, 1.0 - r21, 0.0],
                     [r21, 0.0, 1.0 - r21]], "greedy")


def step_down_policy(n_states: int, prob: float = 0.5) -> ReportPolicy:
    """Each state above the lowest reports the next lower one with ``prob``."""
    r = np.eye(n_states)
    for i in range(1, n_states):
        r[i, i] = 1.0 - prob
        r[i, i - 1] = prob
    return validate(r, "greedy")


FIG2_LEFT = ExperimentPreset(
    name="fig2-left",
    description="final revenue average vs common under-reporting probability",
    model=example_one(),
    horizon=10_000,
    pis=PIS,
    sweep=tuple(k / 10 for k in range(11)),
    columns=("r21", "pi", "u_m_bar_mean", "u_m_bar_stderr"),
)

FIG2_RIGHT = ExperimentPreset(
    name="fig2-right",
    description="revenue average over time, truthful vs step-down misreporting",
    model=example_two(),
    horizon=400,
    pis=PIS,
    sweep=(),
    columns=("t", "pi", "policy_label", "u_m_bar"),
)

PRESETS = {p.name: p for p in (FIG2_LEFT, FIG2_RIGHT)}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}") from None


def _fmt(x: float) -> str:
    return repr(float(x))


def _collect(tasks: list[Callable[[], object]], workers: int | None) -> list:
    # the compiled kernels release the GIL, so threads give real parallelism;
    # map() keeps results in task order regardless of completion order
    if workers == 1 or len(tasks) == 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: task(), tasks))


@dataclass(frozen=True)
class LeftRow:
    r21: float
    pi: float
    mean: float
    stderr: float


def run_fig2_left(seed: int = 0, replications: int = 10, workers: int | None = None,
                  backend: str | None = None) -> list[LeftRow]:
    """Sweep cells in (pi, r21) order; every cell uses seeds ``seed .. seed+N-1``."""
    p = FIG2_LEFT
    cells = [(pi, r21) for pi in p.pis for r21 in p.sweep]
    tasks = [
        (lambda pi=pi, r21=r21, k=k: run(
            SimConfig(p.model, sweep_policy(r21), PunitiveSpec("I", pi), p.horizon, seed + k),
            backend).summary.u_m_bar)
        for pi, r21 in cells for k in range(replications)
    ]
    finals = np.array(_collect(tasks, workers)).reshape(len(cells), replications)
    rows = []
    for (pi, r21), vals in zip(cells, finals):
        err = float(vals.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
        rows.append(LeftRow(r21, pi, float(vals.mean()), err))
    return rows


def write_fig2_left(rows: list[LeftRow], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(FIG2_LEFT.columns)
    for row in rows:
        w.writerow([_fmt(row.r21), _fmt(row.pi), _fmt(row.mean), _fmt(row.stderr)])


@dataclass(frozen=True)
class RightCurve:
    pi: float
    label: str
    u_m_bar: np.ndarray  # across-seed mean of the running average, slot 1..T


def run_fig2_right(seed: int = 0, replications: int = 10, workers: int | None = None,
                   backend: str | None = None) -> list[RightCurve]:
    """Curves in (pi, label) order, labels ``truthful`` then ``misreport``."""
    p = FIG2_RIGHT
    policies = (("truthful", identity_policy(p.model.n_states)),
                ("misreport", step_down_policy(p.model.n_states)))
    cells = [(pi, label, pol) for pi in p.pis for label, pol in policies]
    tasks = [
        (lambda pi=pi, pol=pol, k=k: run(
            SimConfig(p.model, pol, PunitiveSpec("I", pi), p.horizon, seed + k),
            backend).u_m_bar)
        for pi, _, pol in cells for k in range(replications)
    ]
    traces = _collect(tasks, workers)
    curves = []
    for c, (pi, label, _) in enumerate(cells):
        block = np.stack(traces[c * replications:(c + 1) * replications])
        curves.append(RightCurve(pi, label, block.mean(axis=0)))
    return curves


def write_fig2_right(curves: list[RightCurve], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(FIG2_RIGHT.columns)
    for curve in curves:
        for t, value in enumerate(curve.u_m_bar, start=1):
            w.writerow([t, _fmt(curve.pi), curve.label, _fmt(value)])
