"""CSV and JSON outputs of a run.

Files written into the output directory:

``timeseries.csv``
    Header ``t,S_mean,I_mean,C_mean,A_mean,S_total,I_total,C_total,A_total,u_mean,N_total``;
    one row per time level. Means are spatial averages, totals are
    trapezoidal integrals over the domain (people).
``snap_<comp>_<n>.csv``
    Field of compartment ``comp`` (S, I, C or A) at level ``n``; line ``j``
    holds nodes ``(0, j) ... (nx-1, j)``. Levels ``0, k, 2k, ...`` for stride
    ``k``, plus the final level. Optimizations also write ``snap_u_<n>.csv``.
``j_history.csv``
    Optimizations only: ``iteration,J``.
``report.json``
    Run report: resolved scenario, J, invariant summary and this manifest.

All numbers are written with 12 significant digits, independent of locale.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forward import COMPARTMENTS, ControlTrajectory, StateTrajectory
from .grid import integrate_field

REPORT_SCHEMA_VERSION = 1
TIMESERIES_HEADER = ("t,S_mean,I_mean,C_mean,A_mean,S_total,I_total,C_total,A_total,"
                     "u_mean,N_total")


def fmt(x: float) -> str:
    return f"{x:.12g}"


def snapshot_levels(nt: int, stride: int) -> list[int]:
    levels = list(range(0, nt + 1, stride))
    if levels[-1] != nt:
        levels.append(nt)
    return levels


def timeseries_rows(states: StateTrajectory, controls: ControlTrajectory) -> np.ndarray:
    """Rows of ``timeseries.csv`` as an array of shape ``(nt + 1, 11)``."""
    g = states.grid
    totals = states.totals()
    u_mean = np.array([integrate_field(controls[n], g) for n in range(len(states))]) / g.area
    return np.column_stack([
        states.time.times, totals / g.area, totals, u_mean, totals.sum(axis=1),
    ])


def write_csv_rows(path: Path, header: str | None, rows) -> None:
    lines = [] if header is None else [header]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_field(path: Path, field: np.ndarray) -> None:
    """Grid to CSV with line ``j`` holding the nodes ``(i, j)``."""
    write_csv_rows(path, None, np.asarray(field).T)


def write_outputs(out_dir, states: StateTrajectory, controls: ControlTrajectory,
                  snapshot_stride: int, J_history: list[float] | None = None,
                  write_control_snapshots: bool = False) -> list[str]:
    """Write the CSV outputs and return the manifest of created paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest = []

        path = out / "timeseries.csv"
        write_csv_rows(path, TIMESERIES_HEADER, timeseries_rows(states, controls))
        manifest.append(path)

        for n in snapshot_levels(states.time.nt, snapshot_stride):
            for k, comp in enumerate(COMPARTMENTS):
                path = out / f"snap_{comp}_{n}.csv"
                write_field(path, states[n][k])
                manifest.append(path)
            if write_control_snapshots:
                path = out / f"snap_u_{n}.csv"
                write_field(path, controls[n])
                manifest.append(path)

        if J_history is not None:
            path = out / "j_history.csv"
            write_csv_rows(path, "iteration,J", [(i, J) for i, J in enumerate(J_history)])
            manifest.append(path)
    except OSError as exc:
        raise OSError(f"failed writing outputs to {out}: {exc}") from exc
    return [str(p) for p in manifest]


def write_report(out_dir, report: dict) -> str:
    path = Path(out_dir) / "report.json"
    report = dict(report)
    report["manifest"] = list(report.get("manifest", [])) + [str(path)]
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return str(path)
