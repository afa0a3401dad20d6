"""File formats: point files, result CSVs, benchmark CSVs, mesh dumps.

Floats are written with repr-level precision so every CSV parses back to the
exact same doubles.
"""

from __future__ import annotations

import csv
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np

from .tree import FmmTree, ParticleSet

_FLOAT = "{:.17g}".format


def _open_w(path_or_file):
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", newline="")


def read_points(path) -> ParticleSet:
    """Read a text point file: one ``x y gamma`` triple per line, ``#`` comments."""
    data = np.loadtxt(path, comments="#", ndmin=2, dtype=np.float64)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns (x y gamma), "
                         f"got {data.shape[1]}")
    return ParticleSet(positions=data[:, 0] + 1j * data[:, 1],
                       strengths=data[:, 2])


def write_points(points: ParticleSet, path) -> None:
    with _open_w(path) as fh:
        fh.write("# x y gamma\n")
        for z, g in zip(points.positions, points.strengths):
            fh.write(f"{_FLOAT(z.real)} {_FLOAT(z.imag)} {_FLOAT(g)}\n")


def write_result(values: np.ndarray, path) -> None:
    """Result CSV ``index,re,im`` in input order."""
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im"])
        for i, v in enumerate(values):
            writer.writerow([i, _FLOAT(v.real), _FLOAT(v.imag)])


def read_result(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = np.empty(len(rows), dtype=np.complex128)
    for row in rows:
        out[int(row["index"])] = complex(float(row["re"]), float(row["im"]))
    return out


@dataclass
class BenchmarkRow:
    """One measurement row of the benchmark CSV."""

    experiment: str
    n: int
    m: int
    p: int
    nd: int
    theta: float
    levels: int
    phase: str
    seconds: float
    tol: float | None = None

    def __post_init__(self):
        if self.seconds < 0:
            raise ValueError("seconds must be >= 0")


BENCH_FIELDS = ("experiment", "n", "m", "p", "nd", "theta", "levels",
                "phase", "seconds", "tol")


def write_benchmark(rows, path) -> None:
    """Benchmark CSV with the fixed 10-column schema."""
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_FIELDS)
        for r in rows:
            writer.writerow([
                r.experiment, r.n, r.m, r.p, r.nd, _FLOAT(r.theta), r.levels,
                r.phase, _FLOAT(r.seconds),
                "" if r.tol is None else _FLOAT(r.tol),
            ])


def read_benchmark(path) -> list[BenchmarkRow]:
    with open(path, newline="") as fh:
        rows = []
        for rec in csv.DictReader(fh):
            rows.append(BenchmarkRow(
                experiment=rec["experiment"], n=int(rec["n"]), m=int(rec["m"]),
                p=int(rec["p"]), nd=int(rec["nd"]), theta=float(rec["theta"]),
                levels=int(rec["levels"]), phase=rec["phase"],
                seconds=float(rec["seconds"]),
                tol=float(rec["tol"]) if rec["tol"] else None,
            ))
    return rows


def write_boxes_csv(tree: FmmTree, path) -> None:
    """Box-corner dump ``level,box,x0,y0,x1,y1`` for external plotting."""
    with _open_w(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "box", "x0", "y0", "x1", "y1"])
        for lev, lv in enumerate(tree.levels):
            for k in range(lv.n_boxes):
                cx, cy = lv.center[k].real, lv.center[k].imag
                hw, hh = lv.half_width[k], lv.half_height[k]
                writer.writerow([
                    lev, k, _FLOAT(cx - hw), _FLOAT(cy - hh),
                    _FLOAT(cx + hw), _FLOAT(cy + hh),
                ])
