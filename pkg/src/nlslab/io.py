"""Serialization of results: JSON-lines records, CSV summaries, manifests.

Outputs are deterministic byte-for-byte given identical inputs: keys are
sorted, no timestamps are embedded, and floats use repr round-tripping.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .measures import MollifiedMeasure, SampledMeasure
from .solvers import DifferenceTable, Trajectory

__all__ = [
    "canonical_json",
    "write_jsonl",
    "write_csv",
    "write_manifest",
    "write_ensemble",
    "write_measure_csv",
    "write_field_csv",
    "write_diagnostics_csv",
    "write_trajectory_csvs",
    "write_difference_csv",
]

SUMMARY_COLUMNS = ["epsilon", "h", "metric", "value", "se", "exact", "n"]


def _clean(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def write_jsonl(records: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(canonical_json(rec))
            fh.write("\n")


def write_csv(rows: list[dict], path, columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            cleaned = {k: ("" if _clean(v) is None else _clean(v)) for k, v in row.items()}
            writer.writerow(cleaned)


def write_manifest(outdir: Path, *, experiment: str, config_text: str, master_seed: int, files: list[str]) -> None:
    from . import __version__

    manifest = {
        "experiment": experiment,
        "package_version": __version__,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "master_seed": master_seed,
        "files": sorted(files),
    }
    (outdir / "manifest.json").write_text(canonical_json(manifest) + "\n", encoding="utf-8")


def write_ensemble(result, outdir, config_text: str, master_seed: int) -> list[Path]:
    """Standard experiment output: records.jsonl, summary.csv, extras.json,
    config.toml copy, and a manifest binding them together."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records_path = outdir / "records.jsonl"
    summary_path = outdir / "summary.csv"
    extras_path = outdir / "extras.json"
    config_path = outdir / "config.toml"
    write_jsonl(result.records, records_path)
    write_csv(result.aggregates, summary_path, SUMMARY_COLUMNS)
    extras_payload = dict(result.extras)
    extras_payload["experiment"] = result.experiment
    extras_path.write_text(canonical_json(extras_payload) + "\n", encoding="utf-8")
    config_path.write_text(config_text, encoding="utf-8")
    files = [p.name for p in (records_path, summary_path, extras_path, config_path)]
    write_manifest(
        outdir,
        experiment=result.experiment,
        config_text=config_text,
        master_seed=master_seed,
        files=files,
    )
    return [records_path, summary_path, extras_path, config_path, outdir / "manifest.json"]


def write_measure_csv(measure: SampledMeasure, path) -> None:
    grid = measure.grid
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            f"# c={measure.lebesgue_density!r} epsilon={measure.epsilon!r} L={grid.length!r}\n"
        )
        writer = csv.writer(fh)
        writer.writerow(["position", "weight"])
        for pos, w in zip(measure.atom_positions, measure.atom_weights):
            writer.writerow([repr(float(pos)), repr(float(w))])


def write_density_csv(measure: SampledMeasure | MollifiedMeasure, path) -> None:
    grid = measure.grid
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "density"])
        for x, d in zip(grid.x, measure.cell_density):
            writer.writerow([repr(float(x)), repr(float(d))])


def write_field_csv(field, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "Re", "Im"])
        for x, v in zip(field.grid.x, field.values):
            writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def write_diagnostics_csv(traj: Trajectory, path, extra_columns: dict[str, np.ndarray] | None = None) -> None:
    """Per-stored-time diagnostics: t, mass, energy, H1, Xn1, Yns1, leakage."""
    extra = extra_columns or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mass", "energy", "H1", "Xn1", "Yns1", "leakage"])
        for i, t in enumerate(traj.times):
            row = [
                repr(float(t)),
                repr(float(traj.diagnostics["mass"][i])),
                repr(float(traj.diagnostics["energy"][i])),
                repr(float(traj.diagnostics["h1"][i])),
            ]
            for key in ("xn1", "yns1"):
                row.append(repr(float(extra[key][i])) if key in extra else "")
            row.append(repr(float(traj.diagnostics["leakage"][i])))
            writer.writerow(row)


def write_trajectory_csvs(traj: Trajectory, outdir) -> list[Path]:
    """One field CSV per stored time, named by the snapshot index."""
    from .grid import GridField

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, t in enumerate(traj.times):
        path = outdir / f"state_{i:04d}_t={t:.6g}.csv"
        write_field_csv(GridField(traj.grid, traj.states[i]), path)
        paths.append(path)
    return paths


def write_difference_csv(table: DifferenceTable, path) -> None:
    names = list(table.columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *names])
        for i, t in enumerate(table.times):
            writer.writerow([repr(float(t))] + [repr(float(table.columns[n][i])) for n in names])
