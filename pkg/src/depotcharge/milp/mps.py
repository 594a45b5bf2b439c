"""MPS file writer and reader.

Writes models in the classic sectioned layout (NAME, OBJSENSE, ROWS,
COLUMNS with INTORG/INTEND markers, RHS, BOUNDS, ENDATA) with names mapped
deterministically onto at most eight characters: uppercase alphanumeric
truncation first, then a numeric suffix when truncations collide. Every
variable gets explicit bound lines so reader-side defaults never apply.

The reader accepts the writer's output plus the common bound types
(LO, UP, FX, FR, MI, PL, BV, LI, UI) and reconstructs a MilpModel.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, TextIO

from .model import EQ, GE, LE, MilpModel

_OBJ_NAME = "COST"
_SENSE_TO_TAG = {LE: "L", GE: "G", EQ: "E"}
_TAG_TO_SENSE = {"L": LE, "G": GE, "E": EQ}


class MpsFormatError(ValueError):
    pass


def _short_names(names: Iterable[str], reserved: set[str]) -> list[str]:
    """Deterministic mapping onto unique names of at most 8 characters."""
    used = set(reserved)
    out = []
    for name in names:
        base = re.sub(r"[^A-Za-z0-9]", "", name).upper()[:8] or "X"
        cand = base
        k = 0
        while cand in used:
            suffix = str(k)
            cand = base[: 8 - len(suffix)] + suffix
            k += 1
        used.add(cand)
        out.append(cand)
    return out


def _fmt(value: float) -> str:
    return f"{value:.15g}"


def write_mps(model: MilpModel, path: str, name: str = "DEPOTCHG") -> None:
    with open(path, "w", encoding="ascii") as fh:
        _write(model, fh, name)


def _write(model: MilpModel, fh: TextIO, name: str) -> None:
    row_names = _short_names((r.name for r in model.rows), {_OBJ_NAME})
    col_names = _short_names((v.name for v in model.variables), set())

    fh.write(f"NAME          {name[:8]}\n")
    fh.write("OBJSENSE\n    MIN\n")
    fh.write("ROWS\n")
    fh.write(f" N  {_OBJ_NAME}\n")
    for row, rn in zip(model.rows, row_names):
        fh.write(f" {_SENSE_TO_TAG[row.sense]}  {rn}\n")

    # column-major coefficient lists
    by_col: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for row, rn in zip(model.rows, row_names):
        for idx, coef in row.coeffs:
            by_col[idx].append((rn, coef))

    fh.write("COLUMNS\n")
    in_int = False
    marker = 0
    for var, cn in zip(model.variables, col_names):
        if var.integer and not in_int:
            fh.write(f"    M{marker:07d}  'MARKER'                 'INTORG'\n")
            marker += 1
            in_int = True
        elif not var.integer and in_int:
            fh.write(f"    M{marker:07d}  'MARKER'                 'INTEND'\n")
            marker += 1
            in_int = False
        obj = model.objective[var.index]
        if obj != 0.0:
            fh.write(f"    {cn:<8}  {_OBJ_NAME:<8}  {_fmt(obj)}\n")
        for rn, coef in by_col[var.index]:
            fh.write(f"    {cn:<8}  {rn:<8}  {_fmt(coef)}\n")
        if obj == 0.0 and not by_col[var.index]:
            # keep the column present so the reader sees every variable
            fh.write(f"    {cn:<8}  {_OBJ_NAME:<8}  0\n")
    if in_int:
        fh.write(f"    M{marker:07d}  'MARKER'                 'INTEND'\n")

    fh.write("RHS\n")
    if model.objective_constant != 0.0:
        fh.write(f"    RHS       {_OBJ_NAME:<8}  {_fmt(-model.objective_constant)}\n")
    for row, rn in zip(model.rows, row_names):
        if row.rhs != 0.0:
            fh.write(f"    RHS       {rn:<8}  {_fmt(row.rhs)}\n")

    fh.write("BOUNDS\n")
    for var, cn in zip(model.variables, col_names):
        lb, ub = var.lb, var.ub
        if lb == ub:
            fh.write(f" FX BND       {cn:<8}  {_fmt(lb)}\n")
            continue
        if math.isinf(lb):
            fh.write(f" MI BND       {cn:<8}\n")
        else:
            fh.write(f" LO BND       {cn:<8}  {_fmt(lb)}\n")
        if math.isinf(ub):
            fh.write(f" PL BND       {cn:<8}\n")
        else:
            fh.write(f" UP BND       {cn:<8}  {_fmt(ub)}\n")
    fh.write("ENDATA\n")


def read_mps(path: str) -> MilpModel:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    return _read(lines)


def _read(lines: list[str]) -> MilpModel:
    model = MilpModel()
    section = None
    obj_row: str | None = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_coeffs: dict[str, dict[str, float]] = {}
    col_int: dict[str, bool] = {}
    col_order: list[str] = []
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float | None]] = {}
    explicit_int_bounds: dict[str, bool] = {}
    in_int = False
    minimize = True

    for raw in lines:
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                continue
            if section == "ENDATA":
                break
            if section == "OBJSENSE" and len(head) > 1:
                minimize = head[1].upper() != "MAX"
            continue
        tokens = raw.split()
        if section == "OBJSENSE":
            minimize = tokens[0].upper() != "MAX"
        elif section == "ROWS":
            tag, rname = tokens[0].upper(), tokens[1]
            if tag == "N":
                if obj_row is None:
                    obj_row = rname
            elif tag in _TAG_TO_SENSE:
                row_sense[rname] = _TAG_TO_SENSE[tag]
                row_order.append(rname)
            else:
                raise MpsFormatError(f"unknown row tag {tag!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                in_int = tokens[2].strip("'").upper() == "INTORG"
                continue
            cname = tokens[0]
            if cname not in col_coeffs:
                col_coeffs[cname] = {}
                col_int[cname] = in_int
                col_order.append(cname)
            pairs = tokens[1:]
            if len(pairs) % 2 != 0:
                raise MpsFormatError(f"odd token count in COLUMNS line: {raw!r}")
            for rname, val in zip(pairs[::2], pairs[1::2]):
                col_coeffs[cname][rname] = col_coeffs[cname].get(rname, 0.0) + float(val)
        elif section == "RHS":
            pairs = tokens[1:]
            if len(pairs) % 2 != 0:
                raise MpsFormatError(f"odd token count in RHS line: {raw!r}")
            for rname, val in zip(pairs[::2], pairs[1::2]):
                rhs[rname] = float(val)
        elif section == "RANGES":
            raise MpsFormatError("RANGES section is not supported")
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            cname = tokens[2]
            if cname not in bounds:
                bounds[cname] = [None, None]
            lo_up = bounds[cname]
            if btype in ("LO", "UP", "FX", "LI", "UI"):
                if len(tokens) < 4:
                    raise MpsFormatError(f"bound line missing value: {raw!r}")
                val = float(tokens[3])
            if btype == "LO" or btype == "LI":
                lo_up[0] = val
            elif btype == "UP" or btype == "UI":
                lo_up[1] = val
            elif btype == "FX":
                lo_up[0] = lo_up[1] = val
            elif btype == "FR":
                lo_up[0], lo_up[1] = -math.inf, math.inf
            elif btype == "MI":
                lo_up[0] = -math.inf
            elif btype == "PL":
                lo_up[1] = math.inf
            elif btype == "BV":
                lo_up[0], lo_up[1] = 0.0, 1.0
                explicit_int_bounds[cname] = True
            else:
                raise MpsFormatError(f"unknown bound type {btype!r}")
        elif section is None:
            raise MpsFormatError(f"data line before any section: {raw!r}")

    if obj_row is None:
        raise MpsFormatError("no objective row declared")

    for cname in col_order:
        lo, hi = bounds.get(cname, [None, None])
        lb = 0.0 if lo is None else lo
        ub = math.inf if hi is None else hi
        obj = col_coeffs[cname].pop(obj_row, 0.0)
        model.add_variable(cname, lb=lb, ub=ub,
                           integer=col_int[cname] or explicit_int_bounds.get(cname, False),
                           obj=obj if minimize else -obj)
    row_coeffs: dict[str, dict[int, float]] = {rname: {} for rname in row_order}
    for cname in col_order:
        ci = model.variable_index(cname)
        for rname, val in col_coeffs[cname].items():
            if rname not in row_coeffs:
                raise MpsFormatError(f"column {cname!r} references unknown row {rname!r}")
            row_coeffs[rname][ci] = val
    for rname in row_order:
        model.add_constraint(rname, row_coeffs[rname], row_sense[rname], rhs.get(rname, 0.0))
    model.objective_constant = -rhs.get(obj_row, 0.0)
    return model
