"""Manufacturer misreporting strategies.

A report policy is a row-stochastic matrix ``r`` with
``r[i, j] = P(report phi_j | true phi_i)``. The greedy class only ever
under-reports, i.e. it is lower triangular.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PolicyError
from .market import MarketModel

ROW_TOL = 1e-12
CLASS_TAGS = ("identity", "greedy", "general")


@dataclass(frozen=True, eq=False)
class ReportPolicy:
    """Validated misreporting matrix. Build through :func:`validate`."""

    r: np.ndarray
    class_tag: str

    @property
    def n_states(self) -> int:
        return self.r.shape[0]

    def report_probs(self, model: MarketModel) -> np.ndarray:
        """Marginal probability that each state is reported."""
        return model.sigma @ self.r

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.r, np.eye(self.n_states)))

    def rows(self) -> list[list[float]]:
        return self.r.tolist()

    def __eq__(self, other):
        if not isinstance(other, ReportPolicy):
            return NotImplemented
        return self.class_tag == other.class_tag and np.array_equal(self.r, other.r)

    def __hash__(self):
        return hash((self.class_tag, self.r.tobytes()))


def identity_policy(n_states: int) -> ReportPolicy:
    """Truthful reporting."""
    if n_states < 1:
        raise PolicyError("need at least one state")
    r = np.eye(n_states)
    r.setflags(write=False)
    return ReportPolicy(r, "identity")


def policy_violations(r: np.ndarray, class_tag: str) -> list[str]:
    """Human-readable list of every constraint ``r`` breaks (1-based indices)."""
    problems = []
    L = r.shape[0]
    for i, j in zip(*np.nonzero(r < 0)):
        problems.append(f"r[{i + 1},{j + 1}] = {r[i, j]} is negative")
    for i, j in zip(*np.nonzero(r > 1)):
        problems.append(f"r[{i + 1},{j + 1}] = {r[i, j]} exceeds 1")
    sums = r.sum(axis=1)
    for i in np.nonzero(np.abs(sums - 1.0) > ROW_TOL)[0]:
        problems.append(f"row {i + 1} sums to {sums[i]!r}, not 1")
    if class_tag == "greedy":
        for i, j in zip(*np.nonzero(np.triu(r, k=1))):
            problems.append(
                f"r[{i + 1},{j + 1}] = {r[i, j]} over-reports, not allowed for greedy"
            )
    elif class_tag == "identity" and not np.array_equal(r, np.eye(L)):
        problems.append("identity tag requires the identity matrix")
    return problems


def validate(r: Sequence[Sequence[float]] | np.ndarray, class_tag: str = "general") -> ReportPolicy:
    """Check a misreporting matrix and wrap it in a :class:`ReportPolicy`.

    Rows are never renormalised; any violation raises :class:`PolicyError`
    listing all broken constraints.
    """
    if class_tag not in CLASS_TAGS:
        raise PolicyError(f"class_tag must be one of {CLASS_TAGS}, got {class_tag!r}")
    arr = np.array(r, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise PolicyError(f"report matrix must be square and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PolicyError("report matrix has non-finite entries")
    problems = policy_violations(arr, class_tag)
    if problems:
        raise PolicyError("invalid report matrix: " + "; ".join(problems))
    arr.setflags(write=False)
    return ReportPolicy(arr, class_tag)


def expected_deviation(policy: ReportPolicy, model: MarketModel) -> float:
    """Long-run gap between the mean true and the mean reported potential.

    ``f(r) = sum_ij sigma_i (phi_i - phi_j) r_ij``. Non-negative for greedy
    policies; signed for general ones.
    """
    _check_size(policy, model)
    phi = model.phi
    gaps = phi[:, None] - phi[None, :]
    return float(np.sum(model.sigma[:, None] * gaps * policy.r))


def _check_size(policy: ReportPolicy, model: MarketModel) -> None:
    if policy.n_states != model.n_states:
        raise PolicyError(
            f"policy has {policy.n_states} states, model has {model.n_states}"
        )


def _row_cdf(r: np.ndarray) -> np.ndarray:
    # pin each row's tail to exactly 1 so rounding can never select a zero-mass state
    cdf = np.cumsum(r, axis=1)
    for i in range(r.shape[0]):
        last = np.nonzero(r[i] > 0)[0][-1]
        cdf[i, last:] = 1.0
    return cdf


def sample_report(true_index: int, policy: ReportPolicy, rng: np.random.Generator) -> int:
    """Draw the reported state index for one slot whose true state is ``true_index``."""
    if not 0 <= true_index < policy.n_states:
        raise IndexError(f"state index {true_index} out of range")
    cdf = _row_cdf(policy.r)[true_index]
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def sample_reports(true_indices: np.ndarray, policy: ReportPolicy,
                   rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_report` over a whole sequence of true states."""
    cdf = _row_cdf(policy.r)
    u = rng.random(len(true_indices))
    return (u[:, None] >= cdf[true_indices]).sum(axis=1).astype(np.int64)
