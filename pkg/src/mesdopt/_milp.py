# SPDX-License-Identifier: Apache-2.0

"""Mixed-integer linear program container shared by every solver path."""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
import logging
import math
from typing import Dict
from typing import Hashable
from typing import Iterable
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import scipy.sparse as sp

from ._enums import RowSense
from ._enums import SolveStatus
from ._enums import VarKind
from .exceptions import ModelError

LOGGER = logging.getLogger(__name__)

INF = math.inf

VarKey = Tuple[Hashable, ...]
VarRef = Union[int, str]

# index letters used when turning a variable key into a model name
_KEY_LABELS = {
    "m": "sik",
    "e": "sijk",
    "y": "sk",
    "z": "sk",
    "es": "s",
    "w": "sk",
    "E": "sk",
    "P": "sik",
    "Q": "sik",
    "Pc": "sik",
    "Pd": "sik",
    "dPloss": "k",
}


def key_name(key: VarKey) -> str:
    """Model name of a variable key, e.g. ``("m", 0, 2, 5)`` -> ``m_s0_i2_k5``."""
    kind = str(key[0])
    labels = _KEY_LABELS.get(kind, "x" * (len(key) - 1))
    return kind + "".join(f"_{label}{value}" for label, value in zip(labels, key[1:]))


@dataclass(frozen=True)
class VariableDecl:
    key: VarKey
    lower: float = 0.0
    upper: float = INF
    kind: VarKind = VarKind.CONTINUOUS


@dataclass(frozen=True)
class LinearRow:
    """One linear constraint over variable keys."""

    name: str
    coefficients: Tuple[Tuple[VarKey, float], ...]
    sense: RowSense
    rhs: float

    def activity(self, values: Mapping[VarKey, float]) -> float:
        return sum(coef * values.get(key, 0.0) for key, coef in self.coefficients)

    def violation(self, values: Mapping[VarKey, float]) -> float:
        lhs = self.activity(values)
        if self.sense is RowSense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense is RowSense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def is_satisfied(self, values: Mapping[VarKey, float], tol: float = 1e-9) -> bool:
        return self.violation(values) <= tol


class ModelArrays(NamedTuple):
    """Column-oriented numeric view of a model.

    Rows are expressed as ``row_lower <= A x <= row_upper``.
    """

    c: np.ndarray
    a: sp.csr_matrix
    row_lower: np.ndarray
    row_upper: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    binary: np.ndarray
    objective_constant: float


def row_bounds(sense: RowSense, rhs: float) -> Tuple[float, float]:
    if sense is RowSense.LE:
        return -INF, rhs
    if sense is RowSense.GE:
        return rhs, INF
    return rhs, rhs


class MilpModel:
    """A minimization MILP with continuous and binary variables.

    The model is built by a single owner with `add_variable`,
    `add_constraint` and `set_objective`; `freeze` makes it immutable, after
    which it may be shared with concurrent solves.
    """

    def __init__(self, name: str = "mesdopt") -> None:
        self.name = name
        self._names: List[str] = []
        self._index: Dict[str, int] = {}
        self._lower: List[float] = []
        self._upper: List[float] = []
        self._binary: List[bool] = []
        self._row_coefs: List[Dict[int, float]] = []
        self._row_sense: List[RowSense] = []
        self._row_rhs: List[float] = []
        self._row_names: List[str] = []
        self._row_index: Dict[str, int] = {}
        self._objective: Dict[int, float] = {}
        self._objective_constant = 0.0
        self._frozen = False
        self._arrays: Optional[ModelArrays] = None

    # -- building ---------------------------------------------------------

    def _check_mutable(self) -> None:
        if self._frozen:
            raise ModelError(f"model {self.name!r} is frozen")

    def add_variable(
        self,
        name: str,
        lower: Optional[float] = None,
        upper: Optional[float] = None,
        kind: VarKind = VarKind.CONTINUOUS,
    ) -> int:
        self._check_mutable()
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY:
            lower = 0.0 if lower is None else float(lower)
            upper = 1.0 if upper is None else float(upper)
            if not (0.0 <= lower <= upper <= 1.0):
                raise ModelError(f"binary {name!r} needs bounds within [0, 1]")
        else:
            lower = 0.0 if lower is None else float(lower)
            upper = INF if upper is None else float(upper)
        if lower > upper:
            raise ModelError(f"variable {name!r} has lower bound above upper bound")
        index = len(self._names)
        self._names.append(name)
        self._index[name] = index
        self._lower.append(lower)
        self._upper.append(upper)
        self._binary.append(kind is VarKind.BINARY)
        return index

    def _resolve(self, ref: VarRef) -> int:
        if isinstance(ref, str):
            try:
                return self._index[ref]
            except KeyError:
                raise ModelError(f"unknown variable {ref!r}")
        if not 0 <= ref < len(self._names):
            raise ModelError(f"variable index {ref} out of range")
        return int(ref)

    def add_constraint(
        self,
        coefficients: Mapping[VarRef, float],
        sense: RowSense,
        rhs: float,
        name: Optional[str] = None,
    ) -> int:
        self._check_mutable()
        row: Dict[int, float] = {}
        for ref, coef in coefficients.items():
            if coef == 0.0:
                continue
            index = self._resolve(ref)
            row[index] = row.get(index, 0.0) + float(coef)
        if name is None:
            name = f"c{len(self._row_names)}"
        if name in self._row_index:
            raise ModelError(f"duplicate constraint name {name!r}")
        self._row_index[name] = len(self._row_names)
        self._row_names.append(name)
        self._row_coefs.append(row)
        self._row_sense.append(sense)
        self._row_rhs.append(float(rhs))
        return len(self._row_names) - 1

    def set_objective(
        self, coefficients: Mapping[VarRef, float], constant: float = 0.0
    ) -> None:
        self._check_mutable()
        objective: Dict[int, float] = {}
        for ref, coef in coefficients.items():
            index = self._resolve(ref)
            objective[index] = objective.get(index, 0.0) + float(coef)
        self._objective = {i: c for i, c in objective.items() if c != 0.0}
        self._objective_constant = float(constant)

    def set_bounds(self, ref: VarRef, lower: float, upper: float) -> None:
        self._check_mutable()
        index = self._resolve(ref)
        if lower > upper:
            raise ModelError(f"{self._names[index]!r}: lower bound above upper bound")
        self._lower[index] = float(lower)
        self._upper[index] = float(upper)

    def add_declarations(self, decls: Iterable[VariableDecl]) -> Dict[VarKey, int]:
        return {
            decl.key: self.add_variable(
                key_name(decl.key), decl.lower, decl.upper, decl.kind
            )
            for decl in decls
        }

    def add_rows(self, rows: Iterable[LinearRow]) -> None:
        """Add key-level rows; every key must name an existing variable."""
        for row in rows:
            coefs: Dict[VarRef, float] = {}
            for key, coef in row.coefficients:
                name = key_name(key)
                coefs[name] = coefs.get(name, 0.0) + coef
            self.add_constraint(coefs, row.sense, row.rhs, row.name)

    def freeze(self) -> MilpModel:
        self._frozen = True
        return self

    # -- inspection -------------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def n_variables(self) -> int:
        return len(self._names)

    @property
    def n_constraints(self) -> int:
        return len(self._row_names)

    @property
    def n_binaries(self) -> int:
        return sum(self._binary)

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(self._names)

    @property
    def constraint_names(self) -> Tuple[str, ...]:
        return tuple(self._row_names)

    def index_of(self, name: str) -> int:
        return self._resolve(name)

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def bounds(self, ref: VarRef) -> Tuple[float, float]:
        index = self._resolve(ref)
        return self._lower[index], self._upper[index]

    def is_binary(self, ref: VarRef) -> bool:
        return self._binary[self._resolve(ref)]

    def constraint(
        self, ref: Union[int, str]
    ) -> Tuple[Dict[int, float], RowSense, float, str]:
        index = self._row_index[ref] if isinstance(ref, str) else ref
        return (
            dict(self._row_coefs[index]),
            self._row_sense[index],
            self._row_rhs[index],
            self._row_names[index],
        )

    @property
    def objective(self) -> Dict[int, float]:
        return dict(self._objective)

    @property
    def objective_constant(self) -> float:
        return self._objective_constant

    def arrays(self) -> ModelArrays:
        if self._arrays is not None:
            return self._arrays
        n = self.n_variables
        m = self.n_constraints
        c = np.zeros(n)
        for index, coef in self._objective.items():
            c[index] = coef
        indptr = [0]
        indices: List[int] = []
        data: List[float] = []
        for row in self._row_coefs:
            for index in sorted(row):
                indices.append(index)
                data.append(row[index])
            indptr.append(len(indices))
        a = sp.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64), indptr),
            shape=(m, n),
        )
        bounds = [row_bounds(s, b) for s, b in zip(self._row_sense, self._row_rhs)]
        arrays = ModelArrays(
            c=c,
            a=a,
            row_lower=np.array([b[0] for b in bounds], dtype=float).reshape(m),
            row_upper=np.array([b[1] for b in bounds], dtype=float).reshape(m),
            lower=np.array(self._lower, dtype=float).reshape(n),
            upper=np.array(self._upper, dtype=float).reshape(n),
            binary=np.array(self._binary, dtype=bool).reshape(n),
            objective_constant=self._objective_constant,
        )
        if self._frozen:
            self._arrays = arrays
        return arrays

    def copy(self) -> MilpModel:
        """Unfrozen deep copy."""
        other = MilpModel(self.name)
        other._names = list(self._names)
        other._index = dict(self._index)
        other._lower = list(self._lower)
        other._upper = list(self._upper)
        other._binary = list(self._binary)
        other._row_coefs = [dict(r) for r in self._row_coefs]
        other._row_sense = list(self._row_sense)
        other._row_rhs = list(self._row_rhs)
        other._row_names = list(self._row_names)
        other._row_index = dict(self._row_index)
        other._objective = dict(self._objective)
        other._objective_constant = self._objective_constant
        return other

    def with_bounds(self, bounds: Mapping[VarRef, Tuple[float, float]]) -> MilpModel:
        """Unfrozen copy with some variable bounds replaced."""
        other = self.copy()
        for ref, (lower, upper) in bounds.items():
            other.set_bounds(ref, lower, upper)
        return other

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of a point."""
        arrays = self.arrays()
        activity = arrays.a @ x
        worst = 0.0
        for values, lo, hi in (
            (x, arrays.lower, arrays.upper),
            (activity, arrays.row_lower, arrays.row_upper),
        ):
            if values.size:
                worst = max(worst, float(np.max(lo - values, initial=0.0)))
                worst = max(worst, float(np.max(values - hi, initial=0.0)))
        return worst

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.arrays().c @ x) + self._objective_constant

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MilpModel):
            return False
        return (
            self._names == other._names
            and self._lower == other._lower
            and self._upper == other._upper
            and self._binary == other._binary
            and self._row_names == other._row_names
            and self._row_coefs == other._row_coefs
            and self._row_sense == other._row_sense
            and self._row_rhs == other._row_rhs
            and self._objective == other._objective
            and self._objective_constant == other._objective_constant
        )

    def __ne__(self, other: object) -> bool:
        return not self == other

    def __repr__(self) -> str:
        return (
            f"MilpModel({self.name!r}, variables={self.n_variables},"
            f" binaries={self.n_binaries}, constraints={self.n_constraints})"
        )


@dataclass(frozen=True)
class MilpSolution:
    """Outcome of `mesdopt.solve`.

    ``x`` is `None` unless the status carries a solution.  ``gap`` is the
    relative gap between the incumbent and the best remaining bound.
    """

    status: SolveStatus
    x: Optional[np.ndarray]
    objective: float
    bound: float
    gap: float
    node_count: int
    wall_time: float
    variable_names: Tuple[str, ...] = ()
    incumbent_history: Tuple[float, ...] = field(default=())

    def __getitem__(self, name: str) -> float:
        if self.x is None:
            raise KeyError(f"{self.status.value} solve has no values")
        return float(self.x[self.variable_names.index(name)])

    def values_by_name(self) -> Dict[str, float]:
        if self.x is None:
            return {}
        return {name: float(v) for name, v in zip(self.variable_names, self.x)}

