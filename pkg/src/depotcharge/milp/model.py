"""In-memory mixed-integer linear program with symbolic, decodable names.

A model is a minimization problem

    min  c'x + const
    s.t. row_i: a_i'x  (<= | == | >=)  b_i        for every row
         lb <= x <= ub,  x_j integer for flagged j

Variable and row names follow ``kind(key1,key2,...)`` so tooling can map any
column or row back to the entity and indices it encodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import sparse

LE, EQ, GE = "<=", "==", ">="
_SENSES = (LE, EQ, GE)


def encode_symbol(kind: str, *keys: object) -> str:
    """Build a symbolic name like ``Y(t001,2,c60,45)``."""
    for key in keys:
        text = str(key)
        if any(ch in text for ch in ",()"):
            raise ValueError(f"key {text!r} may not contain ',', '(' or ')'")
    return f"{kind}({','.join(str(k) for k in keys)})"


def decode_symbol(name: str) -> tuple[str, tuple[str, ...]]:
    """Inverse of :func:`encode_symbol`; returns (kind, keys)."""
    if not name.endswith(")") or "(" not in name:
        raise ValueError(f"not a symbolic name: {name!r}")
    kind, _, rest = name.partition("(")
    body = rest[:-1]
    keys = tuple(body.split(",")) if body else ()
    return kind, keys


@dataclass(slots=True)
class Variable:
    index: int
    name: str
    lb: float
    ub: float
    integer: bool


@dataclass(slots=True)
class LinearRow:
    index: int
    name: str
    coeffs: tuple[tuple[int, float], ...]  # (variable index, coefficient)
    sense: str
    rhs: float


class MilpModel:
    def __init__(self, name: str = "model") -> None:
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[LinearRow] = []
        self.objective: list[float] = []
        self.objective_constant: float = 0.0
        self.metadata: dict = {}
        self._var_index: dict[str, int] = {}
        self._row_index: dict[str, int] = {}

    # -- construction -------------------------------------------------------

    def add_variable(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = math.inf,
        integer: bool = False,
        obj: float = 0.0,
    ) -> int:
        if name in self._var_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb {lb} exceeds ub {ub}")
        idx = len(self.variables)
        self.variables.append(Variable(idx, name, float(lb), float(ub), bool(integer)))
        self.objective.append(float(obj))
        self._var_index[name] = idx
        return idx

    def add_constraint(
        self,
        name: str,
        coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
        sense: str,
        rhs: float,
    ) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if name in self._row_index:
            raise ValueError(f"duplicate row name {name!r}")
        if isinstance(coeffs, Mapping):
            items = tuple(sorted(coeffs.items()))
        else:
            items = tuple(sorted(coeffs))
        for j, _ in items:
            if not 0 <= j < len(self.variables):
                raise ValueError(f"row {name!r} references unknown variable index {j}")
        idx = len(self.rows)
        self.rows.append(LinearRow(idx, name, items, sense, float(rhs)))
        self._row_index[name] = idx
        return idx

    def add_objective_term(self, var_index: int, coeff: float) -> None:
        self.objective[var_index] += float(coeff)

    # -- lookup --------------------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def variable_index(self, name: str) -> int:
        return self._var_index[name]

    def has_variable(self, name: str) -> bool:
        return name in self._var_index

    def row_index(self, name: str) -> int:
        return self._row_index[name]

    def variables_of_kind(self, kind: str) -> list[Variable]:
        prefix = kind + "("
        return [v for v in self.variables if v.name.startswith(prefix)]

    def family_counts(self) -> dict[str, int]:
        """Row counts keyed by the name's kind prefix."""
        out: dict[str, int] = {}
        for row in self.rows:
            kind = row.name.partition("(")[0]
            out[kind] = out.get(kind, 0) + 1
        return out

    def variable_family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for var in self.variables:
            kind = var.name.partition("(")[0]
            out[kind] = out.get(kind, 0) + 1
        return out

    # -- array views ---------------------------------------------------------

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def integer_mask(self) -> np.ndarray:
        return np.array([v.integer for v in self.variables], dtype=bool)

    def objective_array(self) -> np.ndarray:
        return np.asarray(self.objective, dtype=float)

    def constraint_matrix(self) -> tuple[sparse.csr_matrix, list[str], np.ndarray]:
        """Rows as a CSR matrix plus per-row senses and right-hand sides."""
        data: list[float] = []
        indices: list[int] = []
        indptr = [0]
        senses: list[str] = []
        rhs: list[float] = []
        for row in self.rows:
            for j, a in row.coeffs:
                indices.append(j)
                data.append(a)
            indptr.append(len(data))
            senses.append(row.sense)
            rhs.append(row.rhs)
        mat = sparse.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
            shape=(len(self.rows), len(self.variables)),
        )
        return mat, senses, np.asarray(rhs, dtype=float)

    def evaluate_objective(self, x: np.ndarray) -> float:
        return float(np.dot(self.objective_array(), x) + self.objective_constant)

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"MilpModel({self.name!r}, {self.n_variables} vars "
            f"({int(self.integer_mask().sum())} integer), {self.n_rows} rows)"
        )
