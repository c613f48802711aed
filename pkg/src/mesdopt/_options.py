# SPDX-License-Identifier: Apache-2.0

from __future__ import annotations

import os
from typing import Any
from typing import Dict
from typing import Mapping
from typing import NamedTuple
from typing import Optional

THREADS_ENV_VAR = "MESDOPT_THREADS"

_SOLVERS = ("bnb", "highs")
_LP_METHODS = ("simplex", "highs")


def _repr_set_fields(obj: object, attrs: tuple) -> str:
    params = []
    for attr in attrs:
        value = getattr(obj, attr)
        if value is not None:
            params.append(f"{attr}={value!r}")
    return f"{obj.__class__.__name__}({', '.join(params)})"


class SolverOptions:
    """A value semantic type representing optimization engine options.

    Each option can be set either by passing it as a keyword argument when
    constructing a *SolverOptions* instance, or by setting it as an
    attribute on a constructed instance.

    The default for every option is `None`, meaning the ``DEFAULT_*``
    class attribute of the same name applies when the options are
    resolved for a solve.

    Args:
        gap:
            Relative optimality gap at which branch-and-bound stops.
        node_limit:
            Maximum number of LP relaxations branch-and-bound may solve.
        time_limit:
            Wall-clock budget in seconds for one MILP solve.
        threads:
            Worker threads for per-step power flows; 0 picks
            ``os.cpu_count()``.  The ``MESDOPT_THREADS`` environment
            variable overrides this value.
        solver:
            ``"bnb"`` for the embedded branch-and-bound or ``"highs"`` to
            delegate to `scipy.optimize.milp`.
        lp_method:
            ``"highs"`` solves the relaxations with `scipy.optimize.linprog`;
            ``"simplex"`` uses the embedded revised simplex, which warm
            starts from the parent node and suits small models.
        max_transits:
            Cap on the number of journeys of each device over the day.
        pin_start:
            Mapping of device name to the station id it must start at.
        case3_seed:
            Seed of the pseudo-random path generator of the fixed-path
            strategy.
    """

    DEFAULT_GAP = 1e-6
    DEFAULT_THREADS = 1
    DEFAULT_SOLVER = "bnb"
    DEFAULT_LP_METHOD = "highs"
    DEFAULT_CASE3_SEED = 7

    _ATTRS = (
        "gap",
        "node_limit",
        "time_limit",
        "threads",
        "solver",
        "lp_method",
        "max_transits",
        "pin_start",
        "case3_seed",
    )

    def __init__(
        self,
        gap: Optional[float] = None,
        node_limit: Optional[int] = None,
        time_limit: Optional[float] = None,
        threads: Optional[int] = None,
        solver: Optional[str] = None,
        lp_method: Optional[str] = None,
        max_transits: Optional[int] = None,
        pin_start: Optional[Mapping[str, Any]] = None,
        case3_seed: Optional[int] = None,
    ) -> None:
        self.gap = gap
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.threads = threads
        self.solver = solver
        self.lp_method = lp_method
        self.max_transits = max_transits
        self.pin_start = None if pin_start is None else dict(pin_start)
        self.case3_seed = case3_seed

    def updated(self, **overrides: Any) -> SolverOptions:
        """Return a copy with every non-`None` override applied."""
        values = {attr: getattr(self, attr) for attr in self._ATTRS}
        for key, value in overrides.items():
            if key not in values:
                raise TypeError(f"unknown solver option {key!r}")
            if value is not None:
                values[key] = value
        return SolverOptions(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            attr: getattr(self, attr)
            for attr in self._ATTRS
            if getattr(self, attr) is not None
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SolverOptions):
            return False
        return all(getattr(self, a) == getattr(other, a) for a in self._ATTRS)

    def __ne__(self, other: object) -> bool:
        return not self == other

    def __repr__(self) -> str:
        return _repr_set_fields(self, self._ATTRS)


class ResolvedSolverOptions(NamedTuple):
    gap: float
    node_limit: Optional[int]
    time_limit: Optional[float]
    threads: int
    solver: str
    lp_method: str
    max_transits: Optional[int]
    pin_start: Dict[str, Any]
    case3_seed: int


def _convert_threads(value: Any) -> int:
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"thread count must be an integer, not {value!r}")
    if threads < 0:
        raise ValueError(f"thread count must be >= 0, not {threads}")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def resolve_solver_options(
    options: Optional[SolverOptions] = None,
) -> ResolvedSolverOptions:
    """Fill in defaults and check every option value.

    Raises:
        ValueError: if any option is out of its domain.
    """
    options = options or SolverOptions()

    gap = SolverOptions.DEFAULT_GAP if options.gap is None else float(options.gap)
    if not gap >= 0.0:
        raise ValueError(f"gap must be >= 0, not {options.gap!r}")
    if options.node_limit is not None and options.node_limit < 1:
        raise ValueError(f"node_limit must be >= 1, not {options.node_limit!r}")
    if options.time_limit is not None and not options.time_limit > 0:
        raise ValueError(f"time_limit must be > 0, not {options.time_limit!r}")

    env_threads = os.environ.get(THREADS_ENV_VAR)
    if env_threads is not None:
        threads = _convert_threads(env_threads)
    elif options.threads is not None:
        threads = _convert_threads(options.threads)
    else:
        threads = SolverOptions.DEFAULT_THREADS

    solver = options.solver or SolverOptions.DEFAULT_SOLVER
    if solver not in _SOLVERS:
        raise ValueError(f"solver must be one of {_SOLVERS}, not {solver!r}")
    lp_method = options.lp_method or SolverOptions.DEFAULT_LP_METHOD
    if lp_method not in _LP_METHODS:
        raise ValueError(f"lp_method must be one of {_LP_METHODS}, not {lp_method!r}")
    if options.max_transits is not None and options.max_transits < 0:
        raise ValueError(f"max_transits must be >= 0, not {options.max_transits!r}")
    seed = options.case3_seed
    if seed is None:
        seed = SolverOptions.DEFAULT_CASE3_SEED

    return ResolvedSolverOptions(
        gap=gap,
        node_limit=options.node_limit,
        time_limit=options.time_limit,
        threads=threads,
        solver=solver,
        lp_method=lp_method,
        max_transits=options.max_transits,
        pin_start=dict(options.pin_start or {}),
        case3_seed=int(seed),
    )


class GridLimits:
    """A value semantic type representing grid-side limit settings.

    Args:
        dv_max_pu:
            Largest allowed linearized voltage rise at every bus.
        dv_min_pu:
            Largest allowed linearized voltage drop at every bus (negative).
        dl_max_frac:
            Allowed apparent-flow change of every line, as a fraction of its
            rating; the lower limit is the negated value.
        v_min_pu:
            Absolute lower voltage limit enforced on AC replay only.
        v_max_pu:
            Absolute upper voltage limit enforced on AC replay only.
        loss_discrepancy_frac:
            Relative difference between linearized and AC loss changes above
            which replay raises a warning.
    """

    DEFAULT_DV_MAX_PU = 0.01
    DEFAULT_DV_MIN_PU = -0.01
    DEFAULT_DL_MAX_FRAC = 0.2
    DEFAULT_LOSS_DISCREPANCY_FRAC = 0.05

    _ATTRS = (
        "dv_max_pu",
        "dv_min_pu",
        "dl_max_frac",
        "v_min_pu",
        "v_max_pu",
        "loss_discrepancy_frac",
    )

    def __init__(
        self,
        dv_max_pu: Optional[float] = None,
        dv_min_pu: Optional[float] = None,
        dl_max_frac: Optional[float] = None,
        v_min_pu: Optional[float] = None,
        v_max_pu: Optional[float] = None,
        loss_discrepancy_frac: Optional[float] = None,
    ) -> None:
        self.dv_max_pu = dv_max_pu
        self.dv_min_pu = dv_min_pu
        self.dl_max_frac = dl_max_frac
        self.v_min_pu = v_min_pu
        self.v_max_pu = v_max_pu
        self.loss_discrepancy_frac = loss_discrepancy_frac

    @property
    def effective_dv_max(self) -> float:
        if self.dv_max_pu is None:
            return self.DEFAULT_DV_MAX_PU
        return float(self.dv_max_pu)

    @property
    def effective_dv_min(self) -> float:
        if self.dv_min_pu is None:
            return self.DEFAULT_DV_MIN_PU
        return float(self.dv_min_pu)

    @property
    def effective_dl_max_frac(self) -> float:
        if self.dl_max_frac is None:
            return self.DEFAULT_DL_MAX_FRAC
        return float(self.dl_max_frac)

    @property
    def effective_loss_discrepancy_frac(self) -> float:
        if self.loss_discrepancy_frac is None:
            return self.DEFAULT_LOSS_DISCREPANCY_FRAC
        return float(self.loss_discrepancy_frac)

    def updated(self, **overrides: Any) -> GridLimits:
        """Return a copy with every non-`None` override applied."""
        values = {attr: getattr(self, attr) for attr in self._ATTRS}
        for key, value in overrides.items():
            if key not in values:
                raise TypeError(f"unknown grid limit {key!r}")
            if value is not None:
                values[key] = value
        return GridLimits(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            attr: getattr(self, attr)
            for attr in self._ATTRS
            if getattr(self, attr) is not None
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridLimits):
            return False
        return all(getattr(self, a) == getattr(other, a) for a in self._ATTRS)

    def __ne__(self, other: object) -> bool:
        return not self == other

    def __repr__(self) -> str:
        return _repr_set_fields(self, self._ATTRS)
