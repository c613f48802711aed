# SPDX-License-Identifier: Apache-2.0

"""CPLEX-LP export and import of `MilpModel` through python-mip.

Files are read by CBC's LP reader.  Models are mapped to a `mip.Model`
and written from it with full floating-point precision.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Dict
from typing import List
from typing import Union

import mip
from mip.exceptions import MipBaseException

from ._enums import RowSense
from ._enums import VarKind
from ._milp import MilpModel
from .exceptions import ModelError

LOGGER = logging.getLogger(__name__)

OBJECTIVE_CONSTANT = "_objective_constant"
"""Variable fixed at 1 that carries the objective constant in the file."""

# CBC reports missing bounds as +-DBL_MAX
_INFINITE_BOUND = 1e30
_RESERVED = ("inf", "infinity", "free")
_FORBIDDEN = set(" \t+-*/<>=:\\^[]{}()!\"',;")
_MAX_LINE = 200
_SENSE = {RowSense.LE: "<", RowSense.GE: ">", RowSense.EQ: "="}
_SENSE_TEXT = {"<": "<=", ">": ">=", "=": "="}
_FROM_MIP_SENSE = {sense: row for row, sense in _SENSE.items()}


def _check_name(name: str) -> str:
    if (
        not name
        or name[0].isdigit()
        or name[0] == "."
        or _FORBIDDEN.intersection(name)
        or name.lower() in _RESERVED
    ):
        raise ModelError(f"{name!r} is not a valid LP-format name")
    return name


def _bound(value: float) -> float:
    if value >= _INFINITE_BOUND:
        return math.inf
    if value <= -_INFINITE_BOUND:
        return -math.inf
    return float(value)


def _new_mip_model(name: str) -> mip.Model:
    model = mip.Model(name, sense=mip.MINIMIZE, solver_name=mip.CBC)
    model.verbose = 0
    return model


def to_mip(model: MilpModel) -> mip.Model:
    """A `mip.Model` with the variables, rows and objective of ``model``."""
    if model.has_variable(OBJECTIVE_CONSTANT):
        raise ModelError(f"variable name {OBJECTIVE_CONSTANT!r} is reserved")
    target = _new_mip_model(model.name)
    variables = []
    for index, name in enumerate(model.variable_names):
        lower, upper = model.bounds(index)
        kind = mip.BINARY if model.is_binary(index) else mip.CONTINUOUS
        variables.append(
            target.add_var(name=_check_name(name), lb=lower, ub=upper, var_type=kind)
        )

    for index in range(model.n_constraints):
        coefficients, sense, rhs, name = model.constraint(index)
        if not coefficients:
            raise ModelError(f"row {name!r} has no variables to reference")
        expr = mip.LinExpr(
            [variables[j] for j in coefficients],
            list(coefficients.values()),
            const=-rhs,
            sense=_SENSE[sense],
        )
        target.add_constr(expr, name=_check_name(name))

    objective = mip.LinExpr(
        [variables[j] for j in model.objective], list(model.objective.values())
    )
    if model.objective_constant:
        carrier = target.add_var(name=OBJECTIVE_CONSTANT, lb=1.0, ub=1.0)
        objective.add_var(carrier, model.objective_constant)
    target.objective = mip.minimize(objective)
    return target


def from_mip(source: mip.Model, name: str) -> MilpModel:
    """Rebuild a `MilpModel` from a minimization `mip.Model`."""
    if source.sense != mip.MINIMIZE:
        raise ModelError("maximization models are not supported")
    model = MilpModel(name)
    constant_column = None
    for var in source.vars:
        lower, upper = _bound(var.lb), _bound(var.ub)
        if var.name == OBJECTIVE_CONSTANT and lower == upper == 1.0:
            constant_column = var.idx
            continue
        if var.var_type == mip.CONTINUOUS:
            kind = VarKind.CONTINUOUS
        elif lower >= 0.0 and upper <= 1.0:
            kind = VarKind.BINARY
        else:
            raise ModelError(f"general integer {var.name!r} is not supported")
        model.add_variable(var.name, lower, upper, kind)

    for constr in source.constrs:
        expr = constr.expr
        coefficients: Dict[Union[int, str], float] = {
            var.name: coef for var, coef in expr.expr.items()
        }
        sense = _FROM_MIP_SENSE.get(expr.sense)
        if sense is None:
            raise ModelError(f"row {constr.name!r} has no relational operator")
        model.add_constraint(coefficients, sense, -expr.const, constr.name)

    objective: Dict[Union[int, str], float] = {}
    constant = float(source.objective.const)
    for var, coef in source.objective.expr.items():
        if var.idx == constant_column:
            constant += coef
        else:
            objective[var.name] = coef
    model.set_objective(objective, constant)
    return model


def _number(value: float) -> str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return repr(float(value))


def _term(var: mip.Var, coef: float) -> str:
    return f"{'-' if coef < 0 else '+'} {_number(abs(coef))} {var.name}"


def _wrap(head: str, tokens: List[str]) -> List[str]:
    lines = []
    line = head
    for token in tokens:
        if len(line) + len(token) + 1 > _MAX_LINE:
            lines.append(line)
            line = "   "
        line += " " + token
    lines.append(line)
    return lines


def lp_text(source: mip.Model) -> str:
    """CPLEX-LP text of a minimization `mip.Model`.

    Numbers are written with ``repr`` so they read back bit for bit.  The
    objective lists every column, zeros included, in column order: readers
    number columns as they first meet them.
    """
    lines = [f"\\ Model {source.name}", "Minimize"]
    coefs = {var.idx: coef for var, coef in source.objective.expr.items()}
    objective = [_term(var, coefs.get(var.idx, 0.0)) for var in source.vars]
    lines.extend(_wrap(" obj:", objective))
    lines.append("Subject To")
    for constr in source.constrs:
        expr = constr.expr
        tokens = [_term(var, coef) for var, coef in expr.expr.items()]
        tokens += [_SENSE_TEXT[expr.sense], _number(-expr.const)]
        lines.extend(_wrap(f" {constr.name}:", tokens))
    lines.append("Bounds")
    binaries = []
    for var in source.vars:
        lower, upper = _bound(var.lb), _bound(var.ub)
        if var.var_type != mip.CONTINUOUS:
            binaries.append(var.name)
        if math.isinf(lower) and math.isinf(upper):
            lines.append(f" {var.name} free")
        elif lower == upper:
            lines.append(f" {var.name} = {_number(lower)}")
        elif math.isinf(upper):
            lines.append(f" {var.name} >= {_number(lower)}")
        else:
            lines.append(f" {_number(lower)} <= {var.name} <= {_number(upper)}")
    if binaries:
        lines.append("Binaries")
        lines.extend(_wrap("", binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_model(model: MilpModel, path: Union[str, Path]) -> None:
    """Write ``model`` as a CPLEX-LP file.

    A nonzero objective constant is written as the coefficient of a
    variable named `OBJECTIVE_CONSTANT` fixed at 1, which `import_model`
    folds back.  CBC's own LP writer rounds coefficients within 1e-5 of an
    integer, so the text comes from `lp_text`.
    """
    Path(path).write_text(lp_text(to_mip(model)), encoding="ascii")
    LOGGER.info(
        "Wrote %s: %d variables, %d rows", path, model.n_variables, model.n_constraints
    )


def import_model(path: Union[str, Path]) -> MilpModel:
    """Read a CPLEX-LP file written by `export_model` (or compatible).

    Variables come in the order CBC's reader first meets them.  Only
    minimization with continuous and binary variables is supported.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no LP file at {path}")
    source = _new_mip_model(path.stem)
    try:
        source.read(str(path))
    except MipBaseException as error:
        raise ModelError(f"cannot read {path}: {error}") from error
    model = from_mip(source, path.stem)
    LOGGER.debug(
        "Read %s: %d variables, %d rows", path, model.n_variables, model.n_constraints
    )
    return model

