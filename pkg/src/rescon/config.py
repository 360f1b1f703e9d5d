"""Scenario configuration: YAML documents, shipped presets, validation.

A document has six sections (topology, plants, leader, attacks, controller,
run); every field has a default.  Parsing normalizes a document into a
canonical dict that serializes back to an identical scenario, applies hard
validation (anything that would make a run meaningless fails loudly), and
collects advisory warnings (spanning-tree check, gain stability ranges,
denial budgets) so ablation configs remain runnable.

All run randomness flows from ``run.seed`` through named PCG64 streams:
initial conditions use SeedSequence([0x1217, seed]); denial schedules use
SeedSequence([0x0D05, seed, agent, channel]).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .controller import ControllerGains
from .engine import (
    VARIANT_BASELINE,
    VARIANT_PROPOSED,
    LeaderSegment,
    Scenario,
    ThreatProfile,
)
from .errors import ConfigError
from .plant import DisturbanceSpec, PlantParams
from .threat import DosBudget, DosSchedule, FdiSpec, generate_dos_schedule, validate_dos_schedule
from .topology import Topology, has_spanning_tree

_INIT_SALT = 0x1217

_GAIN_KEYS = (
    "eta", "rho", "lambda", "mu", "eps_norm", "eps_input",
    "l1", "l2", "l3", "l4", "l5", "l6", "l7", "l8",
)

DEFAULT_GAINS = {
    "eta": 0.1, "rho": 0.1, "lambda": 1.0, "mu": 1.0,
    "eps_norm": 1e-4, "eps_input": 1e-4,
    "l1": 0.1, "l2": 0.1, "l3": 1.2, "l4": 0.1, "l5": 0.1, "l6": 1.2,
    "l7": 0.05, "l8": 0.05,
}

DEFAULT_BUDGET = {
    "kappa_a": 10, "rate_a": 0.01, "xi_a": 100.0, "rate_xi": 0.15,
    "min_len": 5, "max_len": 25, "min_gap": 30, "max_gap": 250,
}

DEFAULT_W = [2.0, 1.0, 2.0, 2.0, 1.0]

_VARIANTS = {
    "proposed": VARIANT_PROPOSED,
    "baseline": VARIANT_BASELINE,
    "baseline-mfac": VARIANT_BASELINE,
}

PRESET_NAMES = ("scenario1", "scenario2", "reference")


def _fail(where: str, message: str):
    raise ConfigError(f"{where}: {message}")


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        _fail(key, "expected a mapping")
    return value


def parse_config(raw: dict) -> dict:
    """Normalize a raw document: apply defaults, coerce types, hard-validate.

    The result is canonical: parsing its serialization gives it back.
    """
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")

    topo_sec = _section(raw, "topology")
    adjacency = topo_sec.get("adjacency")
    if adjacency is None:
        _fail("topology.adjacency", "missing")
    try:
        adj = np.array(adjacency, dtype=float)
    except (TypeError, ValueError) as exc:
        _fail("topology.adjacency", f"not numeric: {exc}")
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        _fail("topology.adjacency", "must be a square matrix")
    n = adj.shape[0]
    pinning = topo_sec.get("pinning", [0] * n)
    try:
        Topology(adj, np.array(pinning, dtype=float))
    except ValueError as exc:
        _fail("topology", str(exc))

    run_sec = _section(raw, "run")
    horizon = int(run_sec.get("horizon", 1500))
    if horizon < 1:
        _fail("run.horizon", "must be a positive step count")
    seed = int(run_sec.get("seed", 0))
    if seed < 0:
        _fail("run.seed", "must be non-negative")
    out_dir = run_sec.get("out_dir")

    plants_sec = _section(raw, "plants")
    w = plants_sec.get("w", DEFAULT_W)
    w_rows = w if w and isinstance(w[0], (list, tuple)) else [w] * n
    if len(w_rows) != n:
        _fail("plants.w", f"expected {n} rows or one shared row of 5 constants")
    w_norm = []
    for row in w_rows:
        if len(row) != 5:
            _fail("plants.w", "each row needs exactly 5 constants")
        if any(float(v) <= 0 for v in row):
            _fail("plants.w", "constants must be positive")
        w_norm.append([float(v) for v in row])
    initial_y = plants_sec.get("initial_y", "seeded")
    if initial_y != "seeded":
        try:
            init = np.array(initial_y, dtype=float)
        except (TypeError, ValueError) as exc:
            _fail("plants.initial_y", f"not numeric: {exc}")
        if init.shape != (n, 2):
            _fail("plants.initial_y", f"expected shape ({n}, 2)")
        initial_y = [[float(v) for v in row] for row in init]
    dist_sec = plants_sec.get("disturbance") or {}
    disturbance = {
        "amplitude": float(dist_sec.get("amplitude", 0.1)),
        "period": None if dist_sec.get("period") is None else int(dist_sec["period"]),
    }

    leader_sec = raw.get("leader")
    leader = None
    if leader_sec is not None:
        segments = leader_sec.get("segments") if isinstance(leader_sec, dict) else None
        if not segments:
            _fail("leader.segments", "missing or empty")
        norm_segments = []
        prev_start = None
        for seg in segments:
            start = int(seg.get("start", 0))
            value = [float(v) for v in seg.get("value", ())]
            if len(value) != 2:
                _fail("leader.segments", "each value needs 2 channels")
            if prev_start is not None and start <= prev_start:
                _fail("leader.segments", "segment starts must increase")
            prev_start = start
            norm_segments.append({"start": start, "value": value})
        if norm_segments[0]["start"] != 0:
            _fail("leader.segments", "first segment must start at 0")
        leader = {"segments": norm_segments}
    pinned_any = bool(np.array(pinning, dtype=float).any())
    if pinned_any and leader is None:
        _fail("leader", "pinned agents present but no leader trajectory")
    if not pinned_any and leader is not None:
        _fail("leader", "leader trajectory given but no agent is pinned")

    attacks_sec = _section(raw, "attacks")
    fdi_sec = attacks_sec.get("fdi")
    fdi = None
    if fdi_sec is not None:
        freqs = fdi_sec.get("freq_multipliers", [5.0, 4.0, 2.0])
        if len(freqs) != 3:
            _fail("attacks.fdi.freq_multipliers", "expected 3 multipliers")
        amplitude = float(fdi_sec.get("amplitude", 0.5))
        if amplitude < 0:
            _fail("attacks.fdi.amplitude", "must be non-negative")
        fdi = {"amplitude": amplitude, "freq_multipliers": [float(f) for f in freqs]}
    dos_sec = attacks_sec.get("dos")
    dos = None
    if dos_sec is not None:
        if "intervals" in dos_sec:
            rows = dos_sec["intervals"]
            if len(rows) != n:
                _fail("attacks.dos.intervals", f"expected {n} agents")
            norm = []
            for agent_rows in rows:
                if len(agent_rows) != 2:
                    _fail("attacks.dos.intervals", "expected 2 channels per agent")
                norm.append(
                    [[[int(on), int(off)] for on, off in channel] for channel in agent_rows]
                )
            dos = {"intervals": norm}
        else:
            budget = {**DEFAULT_BUDGET, **(dos_sec.get("budget") or {})}
            budget = {
                key: (int(budget[key]) if key in ("kappa_a", "min_len", "max_len", "min_gap", "max_gap")
                      else float(budget[key]))
                for key in DEFAULT_BUDGET
            }
            dos = {"budget": budget}
            if dos_sec.get("seed") is not None:
                dos["seed"] = int(dos_sec["seed"])

    controller_sec = _section(raw, "controller")
    variant = str(controller_sec.get("variant", "proposed"))
    if variant not in _VARIANTS:
        _fail("controller.variant", f"unknown variant {variant!r}")
    gains_sec = controller_sec.get("gains") or {}
    unknown = set(gains_sec) - set(_GAIN_KEYS)
    if unknown:
        _fail("controller.gains", f"unknown keys {sorted(unknown)}")
    gains = {key: float(gains_sec.get(key, DEFAULT_GAINS[key])) for key in _GAIN_KEYS}

    return {
        "name": str(raw.get("name", "scenario")),
        "topology": {
            "adjacency": [[float(v) for v in row] for row in adj],
            "pinning": [int(v) for v in pinning],
        },
        "plants": {
            "w": w_norm,
            "initial_y": initial_y,
            "disturbance": disturbance,
        },
        "leader": leader,
        "attacks": {"fdi": fdi, "dos": dos},
        "controller": {"variant": _VARIANTS[variant], "gains": gains},
        "run": {
            "horizon": horizon,
            "seed": seed,
            "out_dir": None if out_dir is None else str(out_dir),
        },
    }


def serialize_config(document: dict) -> str:
    """YAML text for a normalized document, stable field order."""
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None)


def save_config(document: dict, path) -> None:
    Path(path).write_text(serialize_config(document))


def _sample_initial_y(n: int, tracking: bool, seed: int) -> np.ndarray:
    """Seeded start: uniform [0,1)^2, offset by distinct per-agent levels when tracking."""
    rng = np.random.default_rng(np.random.SeedSequence([_INIT_SALT, seed]))
    u = rng.uniform(0.0, 1.0, (n, 2))
    if tracking:
        return np.arange(n)[:, None] + u
    return u


def build_scenario(document: dict) -> tuple[Scenario, list[str]]:
    """Resolve a normalized document into a runnable scenario plus warnings."""
    doc = parse_config(document)
    warnings: list[str] = []

    topo = Topology(
        np.array(doc["topology"]["adjacency"], dtype=float),
        np.array(doc["topology"]["pinning"], dtype=float),
    )
    n = topo.n_agents
    if not has_spanning_tree(topo):
        warnings.append("topology has no spanning tree; consensus may be unreachable")

    horizon = doc["run"]["horizon"]
    seed = doc["run"]["seed"]

    plant_params = tuple(
        PlantParams(w1=row[0], w2=row[1], w3=row[2], w4=row[3], w5=row[4])
        for row in doc["plants"]["w"]
    )
    init_doc = doc["plants"]["initial_y"]
    tracking = doc["leader"] is not None
    if init_doc == "seeded":
        init_y = _sample_initial_y(n, tracking, seed)
    else:
        init_y = np.array(init_doc, dtype=float)

    dist_doc = doc["plants"]["disturbance"]
    disturbance = None
    if dist_doc["amplitude"] != 0.0:
        period = dist_doc["period"] if dist_doc["period"] is not None else horizon
        disturbance = DisturbanceSpec(amplitude=dist_doc["amplitude"], period=period)

    leader = None
    if doc["leader"] is not None:
        leader = tuple(
            LeaderSegment(seg["start"], np.array(seg["value"]))
            for seg in doc["leader"]["segments"]
        )

    fdi = None
    fdi_doc = doc["attacks"]["fdi"]
    if fdi_doc is not None and fdi_doc["amplitude"] > 0:
        fdi = FdiSpec(
            amplitude=fdi_doc["amplitude"],
            horizon=horizon,
            freq_multipliers=tuple(fdi_doc["freq_multipliers"]),
        )

    dos = None
    dos_doc = doc["attacks"]["dos"]
    if dos_doc is not None:
        if "intervals" in dos_doc:
            dos = DosSchedule(
                tuple(
                    tuple(tuple((on, off) for on, off in channel) for channel in agent)
                    for agent in dos_doc["intervals"]
                ),
                horizon,
                budget=DosBudget(**DEFAULT_BUDGET),
            )
            report = validate_dos_schedule(dos)
            if not report.ok:
                first = report.violations[0]
                warnings.append(
                    f"denial schedule violates its budget: {first.kind} on agent "
                    f"{first.agent} channel {first.channel} window {first.window}"
                )
        else:
            budget = DosBudget(**dos_doc["budget"])
            dos = generate_dos_schedule(
                budget, n, 2, horizon, seed=dos_doc.get("seed", seed)
            )

    gains_doc = dict(doc["controller"]["gains"])
    gains_doc["lam"] = gains_doc.pop("lambda")
    try:
        gains = ControllerGains(**gains_doc)
    except ValueError as exc:
        raise ConfigError(f"controller.gains: {exc}") from exc
    warnings.extend(gains.range_warnings())

    scenario = Scenario(
        topology=topo,
        plant_params=plant_params,
        init_y=init_y,
        leader=leader,
        threat=ThreatProfile(fdi=fdi, dos=dos),
        gains=gains,
        horizon=horizon,
        disturbance=disturbance,
        variant=doc["controller"]["variant"],
        seed=seed,
        name=doc["name"],
    )
    return scenario, warnings


@dataclass
class LoadResult:
    scenario: Scenario
    warnings: list[str]
    document: dict


def preset_path(name: str):
    """Traversable for a shipped preset; accepts 'scenario2' or 'presets/scenario2'."""
    stem = name.replace("presets/", "").removesuffix(".yaml")
    if stem not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; shipped presets: {PRESET_NAMES}")
    return resources.files("rescon").joinpath(f"presets/{stem}.yaml")


def resolve_config_source(value: str):
    """Interpret a --config argument as a filesystem path or a preset name."""
    path = Path(value)
    if path.exists():
        return path
    try:
        return preset_path(value)
    except ConfigError:
        raise ConfigError(f"config {value!r} is neither an existing file nor a preset")


def load_config(source) -> LoadResult:
    """Read, normalize, and resolve a scenario document from a file or preset."""
    if isinstance(source, str):
        source = resolve_config_source(source)
    try:
        text = source.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error in {source}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"parse error in {source}: empty document")
    document = parse_config(raw)
    scenario, warnings = build_scenario(document)
    return LoadResult(scenario=scenario, warnings=warnings, document=document)
