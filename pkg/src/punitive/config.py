"""Line-oriented experiment files.

A file is a sequence of named blocks. ``key = value`` lines set scalars,
whitespace- or comma-separated lists give vectors, and the ``[report]``
block holds one matrix row per line::

    # example 1 with a greedy misreporter
    [model]
    alpha = 0.5
    cs = 10
    cm = 10
    support = 40 60 80
    probs = 0.2 0.5 0.3

    [report]
    tag = greedy
    1   0   0
    0.3 0.7 0
    0.3 0   0.7

    [policy]
    kind = I
    pi = 5

    [sim]
    horizon = 10000
    seed = 0

Only ``[model]`` is mandatory. A missing ``[report]`` means truthful
reporting; ``[policy]`` and ``[sim]`` are needed to run a simulation and
``[analysis]`` tunes the threshold searches.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AssumptionError, ConfigError, ModelError, PolicyError
from .market import PROB_TOL, MarketModel
from .misreport import CLASS_TAGS, ReportPolicy, identity_policy, policy_violations, validate
from .sim import MAX_SEED, PunitiveSpec, SimConfig

BLOCKS = ("model", "report", "policy", "sim", "analysis")
_KEYS = {
    "model": {"alpha", "cs", "cm", "support", "probs", "allow_boundary"},
    "report": {"tag"},
    "policy": {"kind", "pi"},
    "sim": {"horizon", "seed", "noise", "replications"},
    "analysis": {"grid_step", "pi_max", "pi_step", "tol", "pi"},
}
_REQUIRED = {
    "model": ("alpha", "cs", "cm", "support", "probs"),
    "policy": ("kind", "pi"),
    "sim": ("horizon",),
}
_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_SPLIT = re.compile(r"[\s,]+")


@dataclass
class _Block:
    name: str
    line: int
    values: dict[str, tuple[str, int]] = field(default_factory=dict)
    rows: list[tuple[list[str], int]] = field(default_factory=list)


@dataclass(frozen=True)
class Experiment:
    """Validated contents of a configuration file."""

    model: MarketModel
    report: ReportPolicy
    policy: PunitiveSpec | None
    horizon: int | None
    seed: int
    noise_halfwidth: float
    replications: int
    analysis: dict[str, float]

    def sim_config(self, seed: int | None = None) -> SimConfig:
        if self.policy is None or self.horizon is None:
            raise ConfigError("a simulation needs both [policy] and [sim] blocks")
        return SimConfig(self.model, self.report, self.policy, self.horizon,
                         self.seed if seed is None else seed, self.noise_halfwidth)


def _tokenize(text: str) -> dict[str, _Block]:
    blocks: dict[str, _Block] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            name = m.group(1).lower()
            if name not in BLOCKS:
                raise ConfigError(f"unknown block [{name}], expected one of {BLOCKS}", lineno)
            if name in blocks:
                raise ConfigError(f"block [{name}] appears twice", lineno)
            current = blocks[name] = _Block(name, lineno)
            continue
        if current is None:
            raise ConfigError("entry outside any block", lineno)
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in _KEYS[current.name]:
                raise ConfigError(f"unknown key {key!r} in [{current.name}]", lineno, key)
            if key in current.values:
                raise ConfigError(f"key {key!r} set twice", lineno, key)
            current.values[key] = (value.strip(), lineno)
        elif current.name == "report":
            current.rows.append(([t for t in _SPLIT.split(line) if t], lineno))
        else:
            raise ConfigError(f"expected 'key = value' in [{current.name}]", lineno)
    return blocks


def _number(block: _Block, key: str, cast=float):
    text, line = block.values[key]
    try:
        value = cast(text)
    except ValueError:
        raise ConfigError(f"{key} must be a {cast.__name__}, got {text!r}", line, key) from None
    if cast is float and not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", line, key)
    return value


def _vector(block: _Block, key: str) -> list[float]:
    text, line = block.values[key]
    try:
        out = [float(t) for t in _SPLIT.split(text) if t]
    except ValueError:
        raise ConfigError(f"{key} must be a list of numbers, got {text!r}", line, key) from None
    if not out:
        raise ConfigError(f"{key} is empty", line, key)
    return out


def _flag(block: _Block, key: str) -> bool:
    text, line = block.values[key]
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be true or false, got {text!r}", line, key)


def _require(block: _Block) -> None:
    for key in _REQUIRED.get(block.name, ()):
        if key not in block.values:
            raise ConfigError(f"[{block.name}] is missing {key!r}", block.line, key)


def _line_of(block: _Block, key: str) -> int:
    return block.values[key][1] if key in block.values else block.line


def _parse_model(block: _Block) -> MarketModel:
    _require(block)
    alpha = _number(block, "alpha")
    cs, cm = _number(block, "cs"), _number(block, "cm")
    support, probs = _vector(block, "support"), _vector(block, "probs")
    boundary = _flag(block, "allow_boundary") if "allow_boundary" in block.values else False

    # field-level checks first so the message points at the right line
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}", _line_of(block, "alpha"), "alpha")
    for key, value in (("cs", cs), ("cm", cm)):
        if value < 0:
            raise ConfigError(f"{key} must be non-negative", _line_of(block, key), key)
    if any(p <= 0 for p in probs):
        raise ConfigError("probs must be strictly positive", _line_of(block, "probs"), "probs")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise ConfigError(f"probs must sum to 1, got {total!r}", _line_of(block, "probs"), "probs")
    if len(support) != len(probs):
        raise ConfigError(f"support has {len(support)} states but probs has {len(probs)}",
                          _line_of(block, "probs"), "probs")
    try:
        return MarketModel.from_arrays(alpha, cs, cm, support, probs, boundary)
    except AssumptionError as exc:
        raise AssumptionError(f"line {_line_of(block, 'support')}: {exc}") from None
    except ModelError as exc:
        raise ConfigError(str(exc), _line_of(block, "support"), "support") from None


def _parse_report(block: _Block | None, n_states: int) -> ReportPolicy:
    if block is None:
        return identity_policy(n_states)
    tag = block.values.get("tag", ("general", block.line))[0].lower()
    if tag not in CLASS_TAGS:
        raise ConfigError(f"tag must be one of {CLASS_TAGS}, got {tag!r}",
                          _line_of(block, "tag"), "tag")
    if not block.rows:
        if tag == "identity":
            return identity_policy(n_states)
        raise ConfigError("[report] has no matrix rows", block.line, "report")
    if len(block.rows) != n_states:
        raise ConfigError(f"report matrix has {len(block.rows)} rows, model has {n_states} states",
                          block.rows[-1][1], "report")
    matrix = []
    for tokens, line in block.rows:
        if len(tokens) != n_states:
            raise ConfigError(f"report row has {len(tokens)} entries, expected {n_states}",
                              line, "report")
        try:
            matrix.append([float(t) for t in tokens])
        except ValueError:
            raise ConfigError(f"report row is not numeric: {' '.join(tokens)}", line,
                              "report") from None
    arr = np.array(matrix)
    problems = policy_violations(arr, tag)
    if problems:
        # point at the first row mentioned in the diagnostics
        first = int(re.search(r"(?:r\[|row )(\d+)", problems[0]).group(1))
        raise ConfigError("invalid report matrix: " + "; ".join(problems),
                          block.rows[first - 1][1], "report")
    try:
        return validate(arr, tag)
    except PolicyError as exc:
        raise ConfigError(str(exc), block.line, "report") from None


def parse_text(text: str) -> Experiment:
    """Parse and validate a configuration held in memory."""
    blocks = _tokenize(text)
    if "model" not in blocks:
        raise ConfigError("missing [model] block", field="model")
    model = _parse_model(blocks["model"])
    report = _parse_report(blocks.get("report"), model.n_states)

    policy = None
    if "policy" in blocks:
        b = blocks["policy"]
        _require(b)
        kind = b.values["kind"][0].upper()
        try:
            policy = PunitiveSpec(kind, _number(b, "pi"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), b.line, "policy") from None

    horizon, seed, noise, reps = None, 0, 0.0, 1
    if "sim" in blocks:
        b = blocks["sim"]
        _require(b)
        horizon = _number(b, "horizon", int)
        if horizon < 1:
            raise ConfigError("horizon must be at least 1", _line_of(b, "horizon"), "horizon")
        if "seed" in b.values:
            seed = _number(b, "seed", int)
            if not 0 <= seed < MAX_SEED:
                raise ConfigError("seed must be an unsigned 64-bit integer",
                                  _line_of(b, "seed"), "seed")
        if "noise" in b.values:
            noise = _number(b, "noise")
            if noise < 0:
                raise ConfigError("noise must be non-negative", _line_of(b, "noise"), "noise")
            if policy is not None and policy.kind == "I" and noise != 0:
                raise ConfigError("demand noise is only modelled for policy II",
                                  _line_of(b, "noise"), "noise")
        if "replications" in b.values:
            reps = _number(b, "replications", int)
            if reps < 1:
                raise ConfigError("replications must be at least 1",
                                  _line_of(b, "replications"), "replications")

    analysis = {}
    if "analysis" in blocks:
        b = blocks["analysis"]
        for key in b.values:
            analysis[key] = _number(b, key)
            if analysis[key] <= 0:
                raise ConfigError(f"{key} must be positive", _line_of(b, key), key)

    return Experiment(model, report, policy, horizon, seed, noise, reps, analysis)


def load(path: str | Path) -> Experiment:
    """Read and validate a configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text)
