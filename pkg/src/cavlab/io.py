"""Result files: summary JSON, CSV tables and profiles, legacy VTK meshes."""
from __future__ import annotations

import csv
import json
import platform
from importlib import metadata
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """Nine significant digits."""
    return format(float(x), ".9g")


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return str(x)
        return float(fmt(x))
    return obj


def versions() -> dict:
    def ver(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return "unknown"
    return {"cavlab": ver("artifact"), "numpy": np.__version__, "scipy": ver("scipy"),
            "python": platform.python_version()}


def ensure_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def write_summary(path, data: dict) -> None:
    Path(path).write_text(json.dumps(_round(data), indent=2, sort_keys=True) + "\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def write_profile(path, R, values) -> None:
    write_csv(path, ["R", "value"], zip(np.asarray(R, float), np.asarray(values, float)))


def write_radial_field(out_dir, field) -> None:
    out = Path(out_dir)
    write_profile(out / "profile_r.csv", field.grid.nodes, field.r)
    write_profile(out / "profile_v.csv", field.grid.nodes, field.v)


def write_vtk(path, mesh, u, v, detu, title="cavlab fluid field") -> None:
    """Legacy ASCII unstructured grid with point data ``v``, ``detu`` and ``u``."""
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in mesh.vertices]
    nt = mesh.n_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    for name, data in (("v", v), ("detu", detu)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(x) for x in data]
    lines.append("VECTORS u double")
    lines += [f"{fmt(a)} {fmt(b)} 0" for a, b in u]
    Path(path).write_text("\n".join(lines) + "\n")


def write_fluid_field(out_dir, mesh, u, v, detu) -> None:
    out = Path(out_dir)
    write_vtk(out / "field.vtk", mesh, u, v, detu)
    rows = (tuple(p) + tuple(q) + (w,) for p, q, w in zip(mesh.vertices, u, v))
    write_csv(out / "field.csv", ["x", "y", "u1", "u2", "v"], rows)
