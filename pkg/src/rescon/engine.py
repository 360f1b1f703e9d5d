"""Synchronous simulation loop, consensus metrics, and testing probes.

Each step k executes a fixed nine-phase order: read true outputs, apply
attacks, form neighborhood errors from received signals, hold-compensate
denied channels, form the observer innovation, update the sensitivity
estimate, compute the input, advance the observers, then step the plants.
All agents read a snapshot of step-k data before any state mutates, so the
loop is deterministic and per-agent phases could run concurrently.

Metrics are computed from true (unattacked) outputs; controllers only ever
see received signals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .controller import (
    CompensatedError,
    ControllerGains,
    ObserverState,
    PpjmEstimate,
    baseline_mfac_update,
    control_update,
    default_phi_init,
    dos_compensate,
    gamma_matrix,
    observer_step,
    spectral_norm,
    update_ppjm,
)
from .errors import DivergenceFault
from .plant import BenchmarkPlant, DisturbanceSpec, PlantParams, PlantState, disturbance_at
from .threat import DosSchedule, FdiSpec, apply_attack, dos_bits, fdi_signal
from .topology import Topology, neighborhood_error

DIVERGENCE_CAP = 1e12

N_CHANNELS = 2

VARIANT_PROPOSED = "proposed"
VARIANT_BASELINE = "baseline-mfac"


@dataclass(frozen=True)
class LeaderSegment:
    """Piecewise-constant reference: value holds from ``start`` onward."""

    start: int
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.array(self.value, dtype=float))


def leader_value(segments: Sequence[LeaderSegment], k: int) -> np.ndarray:
    """Reference vector active at step k."""
    active = segments[0].value
    for seg in segments:
        if seg.start <= k:
            active = seg.value
        else:
            break
    return active


@dataclass(frozen=True)
class ThreatProfile:
    """Attack configuration for one run; either part may be absent."""

    fdi: FdiSpec | None = None
    dos: DosSchedule | None = None


@dataclass(frozen=True)
class Scenario:
    """Complete, resolved description of one simulation run."""

    topology: Topology
    plant_params: tuple[PlantParams, ...]
    init_y: np.ndarray
    leader: tuple[LeaderSegment, ...] | None
    threat: ThreatProfile
    gains: ControllerGains
    horizon: int
    disturbance: DisturbanceSpec | None = None
    variant: str = VARIANT_PROPOSED
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        n = self.topology.n_agents
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if len(self.plant_params) != n:
            raise ValueError("one PlantParams per agent required")
        init = np.array(self.init_y, dtype=float)
        if init.shape != (n, N_CHANNELS):
            raise ValueError(f"init_y must have shape ({n}, {N_CHANNELS})")
        object.__setattr__(self, "init_y", init)
        if self.topology.has_leader != (self.leader is not None):
            raise ValueError("leader trajectory present iff some agent is pinned")
        if self.variant not in (VARIANT_PROPOSED, VARIANT_BASELINE):
            raise ValueError(f"unknown controller variant {self.variant!r}")


@dataclass(frozen=True)
class FaultRecord:
    step: int
    agent: int | None
    kind: str
    detail: str


@dataclass
class SimTrace:
    """Per-step, per-agent log of one run.

    Arrays are indexed [k, agent, channel] (or [k, agent] for scalars) and
    truncated at the faulting step when a run diverges.
    """

    n_agents: int
    steps: int
    y: np.ndarray
    ya: np.ndarray
    u: np.ndarray
    xi: np.ndarray        # from true signals (evaluation side)
    xi_recv: np.ndarray | None
    chi: np.ndarray
    chi_hat: np.ndarray
    chi_tilde: np.ndarray
    theta_hat: np.ndarray
    d_hat: np.ndarray
    delta_hat: np.ndarray
    phi_norm: np.ndarray
    gamma_radius: np.ndarray
    reset: np.ndarray
    h: np.ndarray
    leader: np.ndarray | None = None
    fault: FaultRecord | None = None


class _ScheduledAttacks:
    """Default attack source: evaluate the threat profile at each step."""

    def __init__(self, scn: Scenario):
        self._fdi = scn.threat.fdi
        self._dos = scn.threat.dos
        self._n = scn.topology.n_agents

    def at(self, k: int, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = dos_bits(self._dos, self._n, N_CHANNELS, k)
        ya = np.empty_like(y)
        for i in range(self._n):
            delta = (
                fdi_signal(self._fdi, k, y[i])
                if self._fdi is not None
                else np.zeros(N_CHANNELS)
            )
            ya[i] = apply_attack(y[i], delta, h[i])
        return ya, h


class _ReplayedAttacks:
    """Replay attack source: feed logged received outputs and denial bits back."""

    def __init__(self, trace: SimTrace):
        self._ya = trace.ya
        self._h = trace.h

    def at(self, k: int, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._ya[k].copy(), self._h[k].copy()


def _check_finite(label: str, value: np.ndarray, k: int, agent: int | None):
    arr = np.asarray(value, dtype=float)
    if not np.isfinite(arr).all() or (np.abs(arr) > DIVERGENCE_CAP).any():
        raise DivergenceFault(
            f"{label} diverged at step {k}" + (f" (agent {agent})" if agent is not None else ""),
            step=k,
            agent=agent,
        )


def run_scenario(scn: Scenario) -> SimTrace:
    """Execute a scenario and return its trace.

    Deterministic: identical scenario and seed give an identical trace.  A
    divergence fault stops the run, truncates the trace before the faulting
    step, and records the fault instead of raising.
    """
    return _simulate(scn, _ScheduledAttacks(scn))


def replay_trace(scn: Scenario, trace: SimTrace) -> SimTrace:
    """Re-run the controller pipeline on logged attacks.

    Feeding the logged (received outputs, denial bits) back through the
    same pure update functions reproduces the logged run bit-exactly.
    """
    return _simulate(scn, _ReplayedAttacks(trace), horizon=trace.steps)


def _simulate(scn: Scenario, attacks, horizon: int | None = None) -> SimTrace:
    topo = scn.topology
    n = topo.n_agents
    T = scn.horizon if horizon is None else horizon
    gains = scn.gains
    proposed = scn.variant == VARIANT_PROPOSED

    plants = [BenchmarkPlant(scn.plant_params[i], agent=i) for i in range(n)]
    neighbors = [topo.in_neighbors(i) for i in range(n)]

    vec = lambda: np.zeros((T, n, N_CHANNELS))
    log = {
        "y": vec(), "ya": vec(), "u": vec(), "xi": vec(), "xi_recv": vec(),
        "chi": vec(), "chi_hat": vec(), "chi_tilde": vec(), "theta_hat": vec(),
        "d_hat": vec(), "delta_hat": vec(),
    }
    phi_norm = np.zeros((T, n))
    gamma_rad = np.zeros((T, n))
    reset_log = np.zeros((T, n), dtype=int)
    h_log = np.ones((T, n, N_CHANNELS), dtype=int)
    leader_log = np.zeros((T, N_CHANNELS)) if scn.leader is not None else None

    y = scn.init_y.copy()
    u_prev = np.zeros((n, N_CHANNELS))
    du_prev = np.zeros((n, N_CHANNELS))
    est = [PpjmEstimate.initial(default_phi_init(N_CHANNELS, N_CHANNELS)) for _ in range(n)]
    obs = [ObserverState.zeros(N_CHANNELS) for _ in range(n)]
    comp = [CompensatedError.zeros(N_CHANNELS) for _ in range(n)]

    fault: FaultRecord | None = None
    completed = 0
    for k in range(T):
        try:
            y0 = leader_value(scn.leader, k) if scn.leader is not None else None
            ya, h = attacks.at(k, y)
            xi_true = neighborhood_error(topo, y, y0)
            if proposed:
                # absence-aware receiver: a xi channel is computable only if
                # the agent and all its in-neighbors delivered that channel
                xi_recv = neighborhood_error(topo, ya, y0)
                h_eff = h.copy()
                for i in range(n):
                    if neighbors[i].size:
                        h_eff[i] &= h[neighbors[i]].min(axis=0)
            else:
                # conventional receiver: denial is undetected, a denied
                # channel simply delivers zero
                xi_recv = neighborhood_error(topo, np.nan_to_num(ya, nan=0.0), y0)
                h_eff = np.ones_like(h)

            d = (
                disturbance_at(scn.disturbance, k)
                if scn.disturbance is not None
                else np.zeros(N_CHANNELS)
            )

            u_now = np.empty((n, N_CHANNELS))
            for i in range(n):
                chi = dos_compensate(xi_recv[i], comp[i].xi_held, h_eff[i])
                comp[i].xi_held = np.where(h_eff[i].astype(bool), xi_recv[i], comp[i].xi_held)
                d_chi = chi - comp[i].chi_prev
                comp[i].chi_prev = chi
                comp[i].chi = chi

                est[i], fired = update_ppjm(est[i], d_chi, du_prev[i], gains)
                if proposed:
                    if k == 0:
                        obs[i] = replace(obs[i], chi_hat=chi.copy())
                    chi_tilde = chi - obs[i].chi_hat
                    u_i = control_update(
                        u_prev[i], est[i].phi, obs[i].chi_hat, chi_tilde,
                        obs[i].delta_hat, obs[i].d_hat, gains,
                    )
                else:
                    chi_tilde = np.zeros(N_CHANNELS)
                    u_i = baseline_mfac_update(u_prev[i], est[i].phi, chi, gains)
                _check_finite("input", u_i, k, i)
                du_i = u_i - u_prev[i]

                log["chi"][k, i] = chi
                log["chi_hat"][k, i] = obs[i].chi_hat
                log["chi_tilde"][k, i] = chi_tilde
                log["theta_hat"][k, i] = obs[i].theta_hat
                log["d_hat"][k, i] = obs[i].d_hat
                log["delta_hat"][k, i] = obs[i].delta_hat
                phi_norm[k, i] = spectral_norm(est[i].phi)
                _, gamma_rad[k, i] = gamma_matrix(est[i].phi, gains.eta, gains.mu)
                reset_log[k, i] = int(fired)

                if proposed:
                    obs[i] = observer_step(obs[i], est[i].phi, du_i, chi_tilde, gains)
                    _check_finite("observer", obs[i].chi_hat, k, i)
                u_now[i] = u_i
                du_prev[i] = du_i

            log["y"][k] = y
            log["ya"][k] = ya
            log["u"][k] = u_now
            log["xi"][k] = xi_true
            log["xi_recv"][k] = xi_recv
            h_log[k] = h
            if leader_log is not None:
                leader_log[k] = y0
            u_prev = u_now

            y_next = np.empty_like(y)
            for i in range(n):
                state = PlantState(y=y[i], u_prev=u_prev[i], k=k)
                y_next[i] = plants[i].step(state, u_prev[i], d)
                _check_finite("output", y_next[i], k, i)
            y = y_next
        except DivergenceFault as exc:
            fault = FaultRecord(
                step=exc.step if exc.step is not None else k,
                agent=exc.agent,
                kind="divergence",
                detail=str(exc),
            )
            break
        completed = k + 1

    if completed < T:
        for key in log:
            log[key] = log[key][:completed]
        phi_norm = phi_norm[:completed]
        gamma_rad = gamma_rad[:completed]
        reset_log = reset_log[:completed]
        h_log = h_log[:completed]
        if leader_log is not None:
            leader_log = leader_log[:completed]

    return SimTrace(
        n_agents=n,
        steps=completed,
        y=log["y"], ya=log["ya"], u=log["u"], xi=log["xi"], xi_recv=log["xi_recv"],
        chi=log["chi"], chi_hat=log["chi_hat"], chi_tilde=log["chi_tilde"],
        theta_hat=log["theta_hat"], d_hat=log["d_hat"], delta_hat=log["delta_hat"],
        phi_norm=phi_norm, gamma_radius=gamma_rad, reset=reset_log, h=h_log,
        leader=leader_log, fault=fault,
    )


@dataclass(frozen=True)
class ConsensusMetrics:
    """Window statistics of the true neighborhood error and disagreement."""

    window: tuple[int, int]
    rms_xi: np.ndarray        # per agent
    mean_xi: np.ndarray       # per agent
    rms_xi_overall: float
    max_disagreement: float   # sup over the window of max pairwise ||y_i - y_j||


def consensus_metrics(trace: SimTrace, window: tuple[int, int]) -> ConsensusMetrics:
    """Summarize true-output consensus quality over [start, stop)."""
    start, stop = window
    if not 0 <= start < stop <= trace.steps:
        raise ValueError(f"window {window} outside trace of {trace.steps} steps")
    xi_norms = np.linalg.norm(trace.xi[start:stop], axis=2)  # (W, n)
    rms = np.sqrt((xi_norms ** 2).mean(axis=0))
    disagreement = 0.0
    y = trace.y[start:stop]
    for i in range(trace.n_agents):
        for j in range(i + 1, trace.n_agents):
            gap = np.linalg.norm(y[:, i] - y[:, j], axis=1).max()
            disagreement = max(disagreement, float(gap))
    return ConsensusMetrics(
        window=(start, stop),
        rms_xi=rms,
        mean_xi=xi_norms.mean(axis=0),
        rms_xi_overall=float(np.sqrt((xi_norms ** 2).mean())),
        max_disagreement=disagreement,
    )


def pairwise_disagreement(trace: SimTrace) -> np.ndarray:
    """Max pairwise ||y_i(k) - y_j(k)|| at every step."""
    out = np.zeros(trace.steps)
    for i in range(trace.n_agents):
        for j in range(i + 1, trace.n_agents):
            out = np.maximum(out, np.linalg.norm(trace.y[:, i] - trace.y[:, j], axis=1))
    return out


@dataclass(frozen=True)
class DcfdlProbe:
    """Finite-difference estimate of a map's input sensitivity at one point."""

    jacobian: np.ndarray
    base: np.ndarray
    eps: float

    def reconstruct(self, du: np.ndarray) -> np.ndarray:
        return self.jacobian @ np.asarray(du, dtype=float)

    def residual(self, du: np.ndarray, observed_delta: np.ndarray) -> np.ndarray:
        return np.asarray(observed_delta, dtype=float) - self.reconstruct(du)


def dcfdl_probe(
    map_fn: Callable[[np.ndarray], np.ndarray],
    operating_point: np.ndarray,
    eps: float = 1e-6,
) -> DcfdlProbe:
    """Estimate d(map)/d(input) column by column with forward differences."""
    if eps <= 0:
        raise ValueError("perturbation size must be positive")
    u0 = np.asarray(operating_point, dtype=float)
    base = np.asarray(map_fn(u0), dtype=float)
    if not np.isfinite(base).all():
        raise ValueError("map not finite at the operating point")
    jac = np.zeros((base.shape[0], u0.shape[0]))
    for j in range(u0.shape[0]):
        bumped = u0.copy()
        bumped[j] += eps
        out = np.asarray(map_fn(bumped), dtype=float)
        if not np.isfinite(out).all():
            raise ValueError("map not finite at a perturbed point")
        jac[:, j] = (out - base) / eps
    return DcfdlProbe(jacobian=jac, base=base, eps=eps)


def decay_harness(l3: float, c: float = 0.0, steps: int = 40) -> float:
    """Measured geometric ratio of x+ = (1 - l3) x - c toward its fixed point.

    The recurrence contracts to x* = -c/l3 at ratio |1 - l3| per step; the
    returned value is the median of the per-step distance ratios.
    """
    if not 0.0 < l3 <= 2.0:
        raise ValueError("l3 must lie in (0, 2]")
    if l3 == 1.0:
        raise ValueError("l3 = 1 converges in one step; the ratio is undefined")
    fixed = -c / l3
    x = 1.0
    prev = abs(x - fixed)
    if prev == 0.0:
        x += 1.0
        prev = abs(x - fixed)
    ratios = []
    for _ in range(steps):
        x = (1.0 - l3) * x - c
        dist = abs(x - fixed)
        if prev > 1e-12:
            ratios.append(dist / prev)
        prev = dist
        if dist <= 1e-12:
            break
    return float(np.median(ratios))


def lifted_error_map(
    scn: Scenario,
    y_snapshot: np.ndarray,
    u_snapshot: np.ndarray,
    agent: int,
    k: int,
    attacked: bool = False,
) -> Callable[[np.ndarray], np.ndarray]:
    """One agent's input-to-next-neighborhood-error map at a frozen snapshot.

    All other agents' inputs stay fixed; denial is excluded so the map is
    smooth.  With ``attacked`` the injected false data rides on the outputs.
    """
    topo = scn.topology
    n = topo.n_agents
    d = (
        disturbance_at(scn.disturbance, k)
        if scn.disturbance is not None
        else np.zeros(N_CHANNELS)
    )
    y0_next = leader_value(scn.leader, k + 1) if scn.leader is not None else None

    def the_map(u_agent: np.ndarray) -> np.ndarray:
        y_next = np.empty((n, N_CHANNELS))
        for i in range(n):
            u_i = u_agent if i == agent else u_snapshot[i]
            state = PlantState(y=y_snapshot[i], u_prev=u_snapshot[i], k=k)
            y_next[i] = step_plant(scn, i, state, u_i, d)
        if attacked and scn.threat.fdi is not None:
            for i in range(n):
                y_next[i] = y_next[i] + fdi_signal(scn.threat.fdi, k + 1, y_next[i])
        return neighborhood_error(topo, y_next, y0_next)[agent]

    return the_map


def step_plant(scn: Scenario, agent: int, state: PlantState, u, d) -> np.ndarray:
    """Step one agent's plant using its scenario parameters."""
    return BenchmarkPlant(scn.plant_params[agent], agent=agent).step(state, u, d)
