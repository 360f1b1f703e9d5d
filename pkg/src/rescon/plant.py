"""Benchmark two-channel nonlinear agent dynamics and disturbance signals.

The benchmark map is

    y1+ = y1 u1 / (1 + y1^w1) + w2 u1 + d1
    y2+ = y2 u2 / (1 + y1^w3 + y2^w4) + w5 u2 + d2

with positive constants w1..w5.  Powers with integral exponents are
evaluated sign-safely so negative outputs stay well defined.  Step
functions are pure; callers own the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceFault, SingularityFault

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class PlantParams:
    """Constants of the benchmark dynamics."""

    w1: float = 2.0
    w2: float = 1.0
    w3: float = 2.0
    w4: float = 2.0
    w5: float = 1.0
    output_dim: int = 2
    input_dim: int = 2

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "w5"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.output_dim < 1 or self.input_dim < 1:
            raise ValueError("dimensions must be positive")

    @property
    def w(self) -> tuple[float, float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4, self.w5)


@dataclass
class PlantState:
    """Output, previous input, and step index of one agent."""

    y: np.ndarray
    u_prev: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class DisturbanceSpec:
    """Sinusoidal external disturbance: cosine on channel 1, sine on channel 2."""

    amplitude: float
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")


def disturbance_at(spec: DisturbanceSpec, k: int, period: float | None = None) -> np.ndarray:
    """d(k) = (A cos(2 pi k / T), A sin(2 pi k / T))."""
    T = spec.period if period is None else period
    if T <= 0:
        raise ValueError("period must be positive")
    phase = 2.0 * np.pi * k / T
    return np.array([spec.amplitude * np.cos(phase), spec.amplitude * np.sin(phase)])


def _power(base: float, exponent: float) -> float:
    """Sign-safe power: integral exponents use integer power semantics."""
    if float(exponent).is_integer():
        return float(base) ** int(exponent)
    return float(base) ** float(exponent)


def step_benchmark_plant(
    state: PlantState,
    u: np.ndarray,
    d: np.ndarray,
    params: PlantParams,
    agent: int | None = None,
) -> np.ndarray:
    """Advance the benchmark dynamics one step and return the next output."""
    y = np.asarray(state.y, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    if y.shape != (params.output_dim,) or u.shape != (params.input_dim,):
        raise ValueError("state/input dimension mismatch")
    if d.shape != (params.output_dim,):
        raise ValueError("disturbance dimension mismatch")
    y1, y2 = float(y[0]), float(y[1])
    den1 = 1.0 + _power(y1, params.w1)
    den2 = 1.0 + _power(y1, params.w3) + _power(y2, params.w4)
    if abs(den1) < DENOMINATOR_FLOOR or abs(den2) < DENOMINATOR_FLOOR:
        raise SingularityFault(
            f"plant denominator below {DENOMINATOR_FLOOR:g} at step {state.k}",
            step=state.k,
            agent=agent,
        )
    out = np.array(
        [
            y1 * u[0] / den1 + params.w2 * u[0] + d[0],
            y2 * u[1] / den2 + params.w5 * u[1] + d[1],
        ]
    )
    if not np.isfinite(out).all():
        raise DivergenceFault(
            f"plant output non-finite at step {state.k}", step=state.k, agent=agent
        )
    return out


class BenchmarkPlant:
    """Plant interface binding params to one agent: step(state, u, d) -> next y.

    Any object with this ``step`` signature can replace it in the engine.
    """

    def __init__(self, params: PlantParams, agent: int | None = None):
        self.params = params
        self.agent = agent

    def step(self, state: PlantState, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        return step_benchmark_plant(state, u, d, self.params, agent=self.agent)


@dataclass(frozen=True)
class LipschitzProbe:
    """Empirical statistics of ||dy(k+1)|| / ||du(k)|| over a trace."""

    max_ratio: float
    mean_ratio: float
    p95_ratio: float
    n_eligible: int
    growth_flag: bool


def lipschitz_probe(pairs, eps_input: float) -> LipschitzProbe:
    """Ratio statistics over (dy_next, du) pairs with ||du|| above eps_input.

    ``growth_flag`` is set when the largest ratio in the final quarter of
    eligible steps exceeds twice the largest ratio seen before it, a
    late-time blow-up indicator.
    """
    ratios = []
    for dy, du in pairs:
        du_norm = float(np.linalg.norm(du))
        if du_norm > eps_input:
            ratios.append(float(np.linalg.norm(dy)) / du_norm)
    if not ratios:
        raise ValueError("no eligible steps: all input increments below eps_input")
    arr = np.asarray(ratios)
    split = max(1, int(len(arr) * 0.75))
    head_max = float(arr[:split].max())
    tail_max = float(arr[split:].max()) if split < len(arr) else head_max
    return LipschitzProbe(
        max_ratio=float(arr.max()),
        mean_ratio=float(arr.mean()),
        p95_ratio=float(np.percentile(arr, 95)),
        n_eligible=len(arr),
        growth_flag=bool(tail_max > 2.0 * head_max),
    )
