"""Command-line entry point.

Subcommands: ``run`` executes a scenario and writes trace + summary;
``validate`` checks a config without running; ``plot`` renders charts from
a trace file; ``compare`` runs both controller variants on one attack
realization and writes a side-by-side summary.

Exit codes: 0 success, 1 validation failure, 2 divergence fault.
Diagnostics go to stderr; data goes to files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .charts import render_charts
from .config import LoadResult, load_config
from .engine import (
    VARIANT_BASELINE,
    VARIANT_PROPOSED,
    Scenario,
    SimTrace,
    consensus_metrics,
    leader_value,
    run_scenario,
)
from .errors import ResconError
from .trace import read_trace, write_trace

_CLI_VARIANTS = {"proposed": VARIANT_PROPOSED, "baseline": VARIANT_BASELINE}


def _say(message: str):
    print(message, file=sys.stderr)


def _emit_warnings(warnings):
    for line in warnings:
        _say(f"warning: {line}")


def _with_overrides(loaded: LoadResult, seed, variant) -> Scenario:
    from dataclasses import replace

    scn = loaded.scenario
    if seed is not None:
        document = dict(loaded.document)
        document["run"] = {**document["run"], "seed": int(seed)}
        from .config import build_scenario

        scn, _ = build_scenario(document)
    if variant is not None:
        scn = replace(scn, variant=_CLI_VARIANTS[variant])
    return scn


def _metrics_payload(trace: SimTrace) -> dict | None:
    if trace.steps < 3:
        return None
    window = (2 * trace.steps // 3, trace.steps)
    m = consensus_metrics(trace, window)
    return {
        "window": list(m.window),
        "rms_xi": [float(v) for v in m.rms_xi],
        "mean_xi": [float(v) for v in m.mean_xi],
        "rms_xi_overall": m.rms_xi_overall,
        "max_disagreement": m.max_disagreement,
    }


def _fault_payload(trace: SimTrace) -> dict | None:
    if trace.fault is None:
        return None
    return {
        "step": trace.fault.step,
        "agent": trace.fault.agent,
        "kind": trace.fault.kind,
        "detail": trace.fault.detail,
    }


def _run_summary(scn: Scenario, trace: SimTrace, runtime: float) -> dict:
    return {
        "name": scn.name,
        "variant": scn.variant,
        "seed": scn.seed,
        "horizon": scn.horizon,
        "steps_completed": trace.steps,
        "fault": _fault_payload(trace),
        "metrics": _metrics_payload(trace) if trace.fault is None else None,
        "runtime_s": round(runtime, 3),
    }


def _cmd_run(args) -> int:
    loaded = load_config(args.config)
    _emit_warnings(loaded.warnings)
    scn = _with_overrides(loaded, args.seed, args.variant)
    out = Path(args.out or loaded.document["run"]["out_dir"] or f"runs/{scn.name}")
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    trace = run_scenario(scn)
    runtime = time.perf_counter() - start
    write_trace(trace, out / "trace.csv")
    (out / "summary.json").write_text(
        json.dumps(_run_summary(scn, trace, runtime), indent=2) + "\n"
    )
    _say(f"wrote {out / 'trace.csv'} and {out / 'summary.json'}")
    if trace.fault is not None:
        _say(f"divergence fault at step {trace.fault.step}: {trace.fault.detail}")
        return 2
    return 0


def _cmd_validate(args) -> int:
    loaded = load_config(args.config)
    _emit_warnings(loaded.warnings)
    scn = loaded.scenario
    _say(
        f"ok: {scn.name} ({scn.topology.n_agents} agents, horizon {scn.horizon}, "
        f"variant {scn.variant}, {len(loaded.warnings)} warning(s))"
    )
    return 0


def _cmd_plot(args) -> int:
    trace = read_trace(args.trace)
    leader = None
    if args.config is not None:
        loaded = load_config(args.config)
        if loaded.scenario.leader is not None:
            leader = np.array(
                [leader_value(loaded.scenario.leader, k) for k in range(trace.steps)]
            )
    paths = render_charts(trace, args.out, leader=leader)
    _say("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_compare(args) -> int:
    loaded = load_config(args.config)
    _emit_warnings(loaded.warnings)
    out = Path(args.out or loaded.document["run"]["out_dir"] or f"runs/{loaded.scenario.name}-compare")
    out.mkdir(parents=True, exist_ok=True)
    summaries = {}
    traces = {}
    for label, variant in (("proposed", "proposed"), ("baseline", "baseline")):
        scn = _with_overrides(loaded, args.seed, variant)
        start = time.perf_counter()
        trace = run_scenario(scn)
        runtime = time.perf_counter() - start
        write_trace(trace, out / f"trace_{label}.csv")
        summaries[label] = _run_summary(scn, trace, runtime)
        traces[label] = trace
    tp, tb = traces["proposed"], traces["baseline"]
    same_attacks = bool(
        tp.steps == tb.steps and np.array_equal(tp.h, tb.h)
    )
    ratio = None
    if summaries["proposed"]["metrics"] and summaries["baseline"]["metrics"]:
        denom = summaries["baseline"]["metrics"]["rms_xi_overall"]
        if denom > 0:
            ratio = summaries["proposed"]["metrics"]["rms_xi_overall"] / denom
    payload = {
        "proposed": summaries["proposed"],
        "baseline": summaries["baseline"],
        "rms_xi_ratio_proposed_over_baseline": ratio,
        "attack_columns_identical": same_attacks,
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    _say(f"wrote {out / 'summary.json'}")
    if tp.fault is not None or tb.fault is not None:
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rescon",
        description="Attack-resilient data-driven consensus control simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario, write trace and summary")
    run.add_argument("--config", required=True, help="config file or preset name")
    run.add_argument("--seed", type=int, default=None, help="override run.seed")
    run.add_argument("--variant", choices=sorted(_CLI_VARIANTS), default=None)
    run.add_argument("--out", default=None, help="output directory")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config without running")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    plot = sub.add_parser("plot", help="render charts from a trace file")
    plot.add_argument("--trace", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--config", default=None, help="optional, for the leader overlay")
    plot.set_defaults(func=_cmd_plot)

    cmp_ = sub.add_parser("compare", help="run both variants on one attack realization")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--out", default=None)
    cmp_.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResconError as exc:
        _say(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
