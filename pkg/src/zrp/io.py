"""CSV/JSON artifact writing.

Every CSV is RFC-4180 (CRLF, header row first) and is accompanied by a
sibling ``<name>.meta.json`` carrying the full configuration echo, the
seed, and any derived quantities the plotting side needs; together the
pair is sufficient to re-run the experiment that produced it.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

__all__ = ["meta_path", "write_csv", "write_meta", "write_json",
           "write_trajectory_csv", "read_csv"]


def meta_path(csv_file: str) -> str:
    root, ext = os.path.splitext(csv_file)
    return root + ".meta.json"


def _plain(value):
    """JSON-safe copy of numpy scalars/arrays and nested containers."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def write_csv(path: str, header: list[str], rows) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)  # csv defaults are RFC-4180 (CRLF rows)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_json(path: str, doc: dict) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_meta(csv_file: str, meta: dict) -> str:
    return write_json(meta_path(csv_file), meta)


def write_trajectory_csv(traj, path: str, meta: dict | None = None) -> str:
    """Observable trace of one run: (t, max_occ, zeta, solid_mass, top1..topk)."""
    k = traj.top.shape[1]
    header = ["t", "max_occ", "zeta", "solid_mass"] + [f"top{i + 1}" for i in range(k)]
    rows = [
        [traj.times[g], traj.max_occupancy[g], traj.zeta[g], traj.solid_mass[g],
         *traj.top[g]]
        for g in range(traj.times.size)
    ]
    write_csv(path, header, rows)
    base = {
        "kind": "trajectory",
        "seed": repr(traj.seed),
        "n": traj.n,
        "m": traj.m,
        "grid": traj.times,
        "horizon": float(traj.times[-1]) if traj.times.size else 0.0,
        "events_drawn": traj.events_drawn,
        "events_applied": traj.events_applied,
        "columns": header,
    }
    if meta:
        base.update(meta)
    write_meta(path, base)
    return path


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
