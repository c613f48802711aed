# SPDX-License-Identifier: Apache-2.0

from enum import Enum


class SolveStatus(Enum):
    """An enum representing the outcome of an LP or MILP solve

    Only `SolveStatus.OPTIMAL` and `SolveStatus.GAP_LIMIT` come with a
    solution vector.
    """

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    GAP_LIMIT = "gap-limit"
    """A node or time limit stopped the search with an incumbent in hand"""
    NODE_LIMIT = "node-limit"
    TIME_LIMIT = "time-limit"

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.GAP_LIMIT)

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}.{self.name}>"


class RowSense(Enum):
    """Relation of a linear row to its right-hand side"""

    LE = "<="
    GE = ">="
    EQ = "="

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}.{self.name}>"


class VarKind(Enum):
    """Integrality of a model variable"""

    CONTINUOUS = object()
    BINARY = object()

    def __repr__(self) -> str:
        # hide the unimportant value of `object()`
        return f"<{self.__class__.__name__}.{self.name}>"


class Strategy(Enum):
    """The scheduling strategies that can be compared"""

    CO_OPTIMIZED = 1
    STATIONARY = 2
    FIXED_PATH = 3
    NO_STORAGE = 0

    @property
    def label(self) -> str:
        return _STRATEGY_LABELS[self]

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}.{self.name}>"


_STRATEGY_LABELS = {
    Strategy.CO_OPTIMIZED: "case1",
    Strategy.STATIONARY: "case2",
    Strategy.FIXED_PATH: "case3",
    Strategy.NO_STORAGE: "no-esd",
}
