"""Artifact emission: deterministic JSON reports and CSV tables.

Every float is written with repr (round-trip decimal), so two runs of the
same scenario and seed on one platform produce bit-identical report.json,
state.csv, frame.csv and summary.csv.  Wall-clock timings are the one
non-deterministic output and live in their own timings.json.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .state import write_state_csv

FRAME_COLUMNS = (
    "u", "ubar", "L0", "L1", "Lb0", "Lb1", "Omega", "t", "x", "detj",
)

SUMMARY_COLUMNS = (
    "run", "name", "seed", "h", "radius", "eps", "ok", "n_errors",
    "eps_bar", "gamma_bar", "delta",
    "envelope_delta", "sigma_wave_residual_sup", "backend",
    "picard_iterations", "metric_vs_march", "contraction_max",
    "curl_sup", "nullity_sup", "degeneracy_ok", "min_abs_detj",
    "flux_residual", "sup_diff", "l1_diff", "phase_shift",
    "error",
)


def _jsonable(obj):
    """Recursively convert to strict-JSON types (no NaN/Infinity literals)."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, obj) -> None:
    """Strict JSON, sorted keys, trailing newline."""
    with open(path, "w") as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")


def write_frame_csv(frame, coords, path) -> None:
    """Frame components and reconstructed coordinates, row-major in (u, ubar)."""
    g = frame.grid
    n = g.n_nodes
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(FRAME_COLUMNS)
        for i in range(n):
            for j in range(n):
                wr.writerow(
                    [repr(float(v)) for v in (
                        g.u[i], g.ub[j],
                        frame.L0[i, j], frame.L1[i, j],
                        frame.Lb0[i, j], frame.Lb1[i, j],
                        frame.Omega[i, j],
                        coords.t[i, j], coords.x[i, j], coords.detj[i, j],
                    )]
                )


def write_run_outputs(out_dir, result) -> dict:
    """Emit every artifact a run produced; returns {kind: path}.

    report.json and the CSVs are deterministic; timings.json is wall-clock
    and is the only file expected to differ between identical runs.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    paths["report"] = os.path.join(out_dir, "report.json")
    write_json(paths["report"], result.report)

    paths["timings"] = os.path.join(out_dir, "timings.json")
    write_json(paths["timings"], result.timings)

    if result.state is not None:
        paths["state"] = os.path.join(out_dir, "state.csv")
        write_state_csv(result.state, paths["state"])
    if result.frame is not None and result.coords is not None:
        paths["frame"] = os.path.join(out_dir, "frame.csv")
        write_frame_csv(result.frame, result.coords, paths["frame"])
    return paths


def _dig(report: dict, stage: str, *keys):
    node = report["stages"].get(stage)
    for key in keys:
        if not isinstance(node, dict):
            return None
        node = node.get(key)
    return node


def _sup_over_fields(diffs) -> float | None:
    """Comparison diffs are per-field dicts; the summary keeps their max."""
    if not diffs:
        return None
    return max(diffs.values())


def summary_row(report: dict) -> dict:
    """Flatten one run report to the fixed summary-table columns."""
    sc = report["scenario"]
    pert = sc["perturbation"]
    contraction = _dig(report, "picard", "contraction", "ratios")
    nullity = _dig(report, "geometry", "nullity")
    row = {
        "name": sc["name"],
        "seed": sc["seed"],
        "h": sc["grid"]["h"],
        "radius": sc["grid"]["radius"],
        "eps": 0.0 if pert is None else pert["eps"],
        "ok": report["ok"],
        "n_errors": len(report["errors"]),
        "eps_bar": _dig(report, "data_gauge", "eps_bar"),
        "gamma_bar": _dig(report, "data_gauge", "gamma_bar"),
        "delta": _dig(report, "data_gauge", "delta"),
        "envelope_delta": _dig(report, "march", "envelope_fits", "delta"),
        "sigma_wave_residual_sup": _dig(report, "march",
                                        "sigma_wave_residual_sup"),
        "backend": _dig(report, "march", "backend"),
        "picard_iterations": _dig(report, "picard", "iterations"),
        "metric_vs_march": _dig(report, "picard", "metric_vs_march"),
        "contraction_max": max(contraction) if contraction else None,
        "curl_sup": _dig(report, "geometry", "curl_sup"),
        "nullity_sup": max(nullity.values()) if nullity else None,
        "degeneracy_ok": _dig(report, "geometry", "degeneracy", "ok"),
        "min_abs_detj": _dig(report, "geometry", "degeneracy", "min_abs_detj"),
        "flux_residual": _dig(report, "crossval", "flux_residual"),
        "sup_diff": _sup_over_fields(
            _dig(report, "crossval", "comparison", "sup_diff")),
        "l1_diff": _sup_over_fields(
            _dig(report, "crossval", "comparison", "l1_diff")),
        "phase_shift": _dig(report, "crossval", "comparison", "phase_shift"),
        "error": "; ".join(
            f"{e['stage']}: {e['type']}" for e in report["errors"]),
    }
    return row


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_summary_csv(path, rows) -> None:
    """One row per run; header is written even for an empty sweep."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SUMMARY_COLUMNS)
        for row in rows:
            wr.writerow([_cell(row.get(col)) for col in SUMMARY_COLUMNS])
