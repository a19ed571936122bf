"""CSV emitters. Floats are written with ``repr`` so they round-trip exactly."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .domains import QuadratureGrid
from .modulus import ValidationReport
from .recovery import RecoveryMethod

AXIOMS = ("zero", "monotone", "nonnegative", "subadditive")
VALIDATE_HEADER = ("class", "axiom", "t1", "t2", "lhs", "rhs", "pass")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_table(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path


def coordinate_header(dim: int) -> list[str]:
    return [f"x{i}" for i in range(dim)]


def tau_rows(method: RecoveryMethod, grid: QuadratureGrid):
    """``(header, rows)`` of the extremal function (``tau`` or ``tau~`` by variant) on the grid nodes."""
    vals = np.atleast_1d(method.phi(grid.nodes))
    return coordinate_header(grid.dim) + ["tau"], [[*p, v] for p, v in zip(grid.nodes, vals)]


def partition_rows(method: RecoveryMethod, grid: QuadratureGrid):
    cells = np.atleast_1d(method.assign_cell(grid.nodes))
    return coordinate_header(grid.dim) + ["cell_index"], [[*p, int(c)] for p, c in zip(grid.nodes, cells)]


def recovered_rows(method: RecoveryMethod, z, grid: QuadratureGrid):
    vals = method.recovered_values(z, grid)
    return coordinate_header(grid.dim) + ["value"], [[*p, v] for p, v in zip(grid.nodes, vals)]


def validation_rows(reports):
    """One row per class and axiom; the witness pair is filled in when the axiom fails."""
    rows = []
    for k, rep in enumerate(reports):
        rep: ValidationReport
        for axiom in AXIOMS:
            v = rep.witness(axiom)
            if v is None:
                rows.append([k, axiom, "", "", "", "", 1])
            else:
                rows.append([k, axiom, v.t1, v.t2, v.lhs, v.rhs, 0])
    return VALIDATE_HEADER, rows
