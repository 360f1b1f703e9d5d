"""Attack layer: bounded false-data injection and budgeted denial schedules.

An attacked output is ``y^a = y + delta`` on live channels; a denied channel
delivers nothing, represented as NaN.  Denial is therefore detectable by the
receiver (which is what makes hold-based compensation implementable) while
the injected data remains indistinguishable from a true measurement.

Denial schedules are per agent and per output channel: ordered half-open
step intervals [on, off).  Frequency and duration budgets are affine in the
window length: at most ``kappa_a + rate_a * (k - k0)`` attack onsets and at
most ``xi_a + rate_xi * (k - k0)`` denied steps in any window [k0, k].
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetInfeasibleError

_DOS_SALT = 0x0D05


@dataclass(frozen=True)
class FdiSpec:
    """False-data waveform: two bounded terms per channel.

    delta_1 = A cos(f1 pi k/T) sin(y1) + A cos(f2 pi k/T) sin(y1) cos(y2)
    delta_2 = A cos(f1 pi k/T) cos(y1) + A sin(f3 pi k/T) sin(y1) cos(y2)

    Each channel is bounded by 2A for every (k, y).
    """

    amplitude: float = 0.5
    horizon: int = 1500
    freq_multipliers: tuple[float, float, float] = (5.0, 4.0, 2.0)

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


def fdi_signal(spec: FdiSpec, k: int, y: np.ndarray) -> np.ndarray:
    """Evaluate the injected false-data vector at step k for output y."""
    y = np.asarray(y, dtype=float)
    if y.shape != (2,):
        raise ValueError("false-data waveform is defined for 2-channel outputs")
    a = spec.amplitude
    f1, f2, f3 = spec.freq_multipliers
    t = np.pi * k / spec.horizon
    cross = np.sin(y[0]) * np.cos(y[1])
    d1 = a * np.cos(f1 * t) * np.sin(y[0]) + a * np.cos(f2 * t) * cross
    d2 = a * np.cos(f1 * t) * np.cos(y[0]) + a * np.sin(f3 * t) * cross
    return np.array([d1, d2])


@dataclass(frozen=True)
class DosBudget:
    """Affine frequency/duration budget plus generator shape parameters."""

    kappa_a: int = 10
    rate_a: float = 0.01
    xi_a: float = 100.0
    rate_xi: float = 0.15
    min_len: int = 5
    max_len: int = 25
    min_gap: int = 30
    max_gap: int = 250

    def __post_init__(self):
        if self.kappa_a < 0 or self.rate_a < 0 or self.xi_a < 0 or self.rate_xi < 0:
            raise ValueError("budget parameters must be non-negative")
        if self.min_len < 1 or self.max_len < self.min_len:
            raise ValueError("interval length bounds invalid")
        if self.min_gap < 1 or self.max_gap < self.min_gap:
            raise ValueError("gap bounds invalid")


Interval = tuple[int, int]


@dataclass(frozen=True)
class DosSchedule:
    """Immutable per-agent, per-channel denial intervals.

    ``intervals[agent][channel]`` is an ordered tuple of half-open [on, off)
    step intervals.
    """

    intervals: tuple[tuple[tuple[Interval, ...], ...], ...]
    horizon: int
    budget: DosBudget | None = None

    def __post_init__(self):
        canon = tuple(
            tuple(tuple((int(on), int(off)) for on, off in channel) for channel in agent)
            for agent in self.intervals
        )
        object.__setattr__(self, "intervals", canon)

    @property
    def n_agents(self) -> int:
        return len(self.intervals)

    @property
    def n_channels(self) -> int:
        return len(self.intervals[0]) if self.intervals else 0

    def intervals_for(self, agent: int, channel: int) -> tuple[Interval, ...]:
        return self.intervals[agent][channel]

    @staticmethod
    def empty(n_agents: int, n_channels: int, horizon: int,
              budget: DosBudget | None = None) -> "DosSchedule":
        blank = tuple(tuple(() for _ in range(n_channels)) for _ in range(n_agents))
        return DosSchedule(blank, horizon, budget)


def dos_coefficient(schedule: DosSchedule, agent: int, channel: int, k: int) -> int:
    """1 when the channel is delivered at step k, 0 inside a denial interval."""
    if k < 0:
        raise ValueError("step index must be non-negative")
    spans = schedule.intervals_for(agent, channel)
    idx = bisect_right(spans, k, key=lambda span: span[0]) - 1
    if idx >= 0 and spans[idx][0] <= k < spans[idx][1]:
        return 0
    return 1


def dos_bits(schedule: DosSchedule | None, n_agents: int, n_channels: int, k: int) -> np.ndarray:
    """Delivery bits for all agents/channels at step k (all ones without a schedule)."""
    bits = np.ones((n_agents, n_channels), dtype=int)
    if schedule is not None:
        for i in range(n_agents):
            for m in range(n_channels):
                bits[i, m] = dos_coefficient(schedule, i, m, k)
    return bits


def apply_attack(y: np.ndarray, delta: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Attacked output: y + delta on live channels, NaN (absent) on denied ones."""
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if y.shape != delta.shape:
        raise ValueError("output/injection dimension mismatch")
    h = np.asarray(h)
    if h.shape != y.shape:
        raise ValueError("denial bits dimension mismatch")
    return np.where(h.astype(bool), y + delta, np.nan)


@dataclass(frozen=True)
class DosViolation:
    agent: int
    channel: int
    kind: str  # "structure" | "frequency" | "duration"
    window: tuple[int, int]
    observed: float
    allowed: float


@dataclass(frozen=True)
class DosValidation:
    ok: bool
    violations: tuple[DosViolation, ...] = field(default=())


def _sequence_violation(
    spans: tuple[Interval, ...], budget: DosBudget | None, horizon: int
) -> tuple[str, tuple[int, int], float, float] | None:
    """First violated window of one interval sequence, or None.

    Budget extrema over windows [k0, k] occur with k0 at an onset (or 0) and
    k at an onset, an interval end, or the horizon, so checking those
    anchors suffices.
    """
    prev_off = None
    for on, off in spans:
        if not 0 <= on < off:
            return ("structure", (on, off), float(off - on), 0.0)
        if prev_off is not None and on < prev_off:
            return ("structure", (on, off), float(on), float(prev_off))
        prev_off = off
    if budget is None or not spans:
        return None
    onsets = [on for on, _ in spans]
    starts = [0] + onsets
    ends = sorted({*onsets, *[off - 1 for _, off in spans], horizon})
    for k0 in starts:
        for k in ends:
            if k < k0:
                continue
            count = sum(1 for on in onsets if k0 <= on <= k)
            allowed_count = budget.kappa_a + budget.rate_a * (k - k0)
            if count > allowed_count:
                return ("frequency", (k0, k), float(count), allowed_count)
            duration = sum(
                max(0, min(off, k + 1) - max(on, k0)) for on, off in spans
            )
            allowed_duration = budget.xi_a + budget.rate_xi * (k - k0)
            if duration > allowed_duration:
                return ("duration", (k0, k), float(duration), allowed_duration)
    return None


def validate_dos_schedule(schedule: DosSchedule, horizon: int | None = None) -> DosValidation:
    """Check interval structure and both affine budgets for every channel.

    The result is data, never an exception: each offending channel reports
    its first violated window.
    """
    horizon = schedule.horizon if horizon is None else horizon
    violations = []
    for i in range(schedule.n_agents):
        for m in range(schedule.n_channels):
            hit = _sequence_violation(schedule.intervals_for(i, m), schedule.budget, horizon)
            if hit is not None:
                kind, window, observed, allowed = hit
                violations.append(DosViolation(i, m, kind, window, observed, allowed))
    return DosValidation(ok=not violations, violations=tuple(violations))


def _max_feasible_length(budget: DosBudget) -> int:
    """Longest single interval allowed by the duration budget."""
    if budget.rate_xi >= 1.0:
        return budget.max_len
    cap = (budget.xi_a - budget.rate_xi) / (1.0 - budget.rate_xi)
    return min(budget.max_len, int(math.floor(cap)))


def generate_dos_schedule(
    budget: DosBudget,
    n_agents: int,
    n_channels: int,
    horizon: int,
    seed: int,
) -> DosSchedule:
    """Draw a budget-conforming schedule, identical for identical seeds.

    Every (agent, channel) sequence uses its own PCG64 stream seeded by
    (salt, seed, agent, channel).  Intervals are proposed left to right and
    kept only if the running sequence still validates, so the result always
    passes ``validate_dos_schedule``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if budget.kappa_a == 0:
        return DosSchedule.empty(n_agents, n_channels, horizon, budget)
    max_len = _max_feasible_length(budget)
    if max_len < budget.min_len:
        raise BudgetInfeasibleError(
            "duration budget cannot fit one minimum-length interval "
            f"(min_len={budget.min_len}, allowed={max_len})"
        )
    agents = []
    for i in range(n_agents):
        channels = []
        for m in range(n_channels):
            rng = np.random.default_rng(np.random.SeedSequence([_DOS_SALT, seed, i, m]))
            spans: list[Interval] = []
            cursor = int(rng.integers(budget.min_gap, budget.max_gap + 1))
            while cursor + budget.min_len <= horizon:
                length = int(rng.integers(budget.min_len, max_len + 1))
                off = min(cursor + length, horizon)
                candidate = tuple(spans + [(cursor, off)])
                if _sequence_violation(candidate, budget, horizon) is None:
                    spans.append((cursor, off))
                    cursor = off
                cursor += int(rng.integers(budget.min_gap, budget.max_gap + 1))
            channels.append(tuple(spans))
        agents.append(tuple(channels))
    return DosSchedule(tuple(agents), horizon, budget)
