"""Trace file format: one CSV row per (step, agent), fixed column order.

Numbers are serialized with full round-trip precision (``repr``), so
identical runs produce byte-identical files.  Absent attacked channels are
written as the literal token ``NA``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .engine import SimTrace
from .errors import TraceError

TRACE_COLUMNS = (
    "k", "agent",
    "y_1", "y_2", "ya_1", "ya_2", "u_1", "u_2", "xi_1", "xi_2",
    "chi_1", "chi_2", "chihat_1", "chihat_2", "chitil_1", "chitil_2",
    "thetahat_1", "thetahat_2", "dhat_1", "dhat_2", "deltahat_1", "deltahat_2",
    "phinorm", "gammarad", "reset", "h_1", "h_2",
)

NA_TOKEN = "NA"


def _num(value: float) -> str:
    return repr(float(value))


def _na_num(value: float) -> str:
    return NA_TOKEN if math.isnan(value) else repr(float(value))


def trace_rows(trace: SimTrace):
    """Yield one list of serialized fields per (step, agent)."""
    for k in range(trace.steps):
        for i in range(trace.n_agents):
            yield [
                str(k), str(i),
                _num(trace.y[k, i, 0]), _num(trace.y[k, i, 1]),
                _na_num(trace.ya[k, i, 0]), _na_num(trace.ya[k, i, 1]),
                _num(trace.u[k, i, 0]), _num(trace.u[k, i, 1]),
                _num(trace.xi[k, i, 0]), _num(trace.xi[k, i, 1]),
                _num(trace.chi[k, i, 0]), _num(trace.chi[k, i, 1]),
                _num(trace.chi_hat[k, i, 0]), _num(trace.chi_hat[k, i, 1]),
                _num(trace.chi_tilde[k, i, 0]), _num(trace.chi_tilde[k, i, 1]),
                _num(trace.theta_hat[k, i, 0]), _num(trace.theta_hat[k, i, 1]),
                _num(trace.d_hat[k, i, 0]), _num(trace.d_hat[k, i, 1]),
                _num(trace.delta_hat[k, i, 0]), _num(trace.delta_hat[k, i, 1]),
                _num(trace.phi_norm[k, i]), _num(trace.gamma_radius[k, i]),
                str(int(trace.reset[k, i])),
                str(int(trace.h[k, i, 0])), str(int(trace.h[k, i, 1])),
            ]


def write_trace(trace: SimTrace, path) -> Path:
    path = Path(path)
    lines = [",".join(TRACE_COLUMNS)]
    lines.extend(",".join(row) for row in trace_rows(trace))
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse(token: str) -> float:
    return math.nan if token == NA_TOKEN else float(token)


def read_trace(path) -> SimTrace:
    """Load a trace file back into arrays (received-side extras stay unset)."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise TraceError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise TraceError(f"{path}: empty file")
    header = tuple(lines[0].split(","))
    if header != TRACE_COLUMNS:
        raise TraceError(f"{path}: unexpected header {header}")
    body = [line.split(",") for line in lines[1:] if line]
    if not body:
        raise TraceError(f"{path}: no data rows")
    for row in body:
        if len(row) != len(TRACE_COLUMNS):
            raise TraceError(f"{path}: row with {len(row)} fields")
    n = max(int(row[1]) for row in body) + 1
    steps = max(int(row[0]) for row in body) + 1
    if len(body) != n * steps:
        raise TraceError(f"{path}: expected {n * steps} rows, found {len(body)}")

    vec = lambda: np.zeros((steps, n, 2))
    y, ya, u, xi = vec(), vec(), vec(), vec()
    chi, chi_hat, chi_tilde = vec(), vec(), vec()
    theta_hat, d_hat, delta_hat = vec(), vec(), vec()
    phi_norm = np.zeros((steps, n))
    gamma_radius = np.zeros((steps, n))
    reset = np.zeros((steps, n), dtype=int)
    h = np.zeros((steps, n, 2), dtype=int)
    for row in body:
        k, i = int(row[0]), int(row[1])
        values = row[2:]
        y[k, i] = [_parse(values[0]), _parse(values[1])]
        ya[k, i] = [_parse(values[2]), _parse(values[3])]
        u[k, i] = [_parse(values[4]), _parse(values[5])]
        xi[k, i] = [_parse(values[6]), _parse(values[7])]
        chi[k, i] = [_parse(values[8]), _parse(values[9])]
        chi_hat[k, i] = [_parse(values[10]), _parse(values[11])]
        chi_tilde[k, i] = [_parse(values[12]), _parse(values[13])]
        theta_hat[k, i] = [_parse(values[14]), _parse(values[15])]
        d_hat[k, i] = [_parse(values[16]), _parse(values[17])]
        delta_hat[k, i] = [_parse(values[18]), _parse(values[19])]
        phi_norm[k, i] = _parse(values[20])
        gamma_radius[k, i] = _parse(values[21])
        reset[k, i] = int(values[22])
        h[k, i] = [int(values[23]), int(values[24])]

    return SimTrace(
        n_agents=n, steps=steps, y=y, ya=ya, u=u, xi=xi, xi_recv=None,
        chi=chi, chi_hat=chi_hat, chi_tilde=chi_tilde, theta_hat=theta_hat,
        d_hat=d_hat, delta_hat=delta_hat, phi_norm=phi_norm,
        gamma_radius=gamma_radius, reset=reset, h=h, leader=None, fault=None,
    )
