# SPDX-License-Identifier: Apache-2.0

from typing import Optional


class Error(Exception):
    """Generic mesdopt exception type"""


class ScenarioError(Error):
    """A scenario document could not be turned into a `Scenario`"""


class ScenarioParseError(ScenarioError):
    """The scenario file or one of its CSV profiles is malformed"""


class ScenarioValidationError(ScenarioError):
    """A scenario field violates a structural or physical invariant

    Args:
        field: dotted path of the offending field, e.g. ``stations[2].bus``
        message: what is wrong with it
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class HorizonCoverageError(ScenarioValidationError):
    """A time series does not cover the whole scheduling horizon"""


class TransitError(Error):
    """Generic road-side error"""


class UnreachableStationError(TransitError):
    """No road path links two stations at a departure step"""

    def __init__(self, origin: int, destination: int, step: int) -> None:
        super().__init__(
            f"station {destination} is unreachable from station {origin}"
            f" when departing at step {step}"
        )
        self.origin = origin
        self.destination = destination
        self.step = step


class InfeasiblePathError(TransitError):
    """Supplied connection/departure flags are not physically realizable"""

    def __init__(self, device: str, step: Optional[int], reason: str) -> None:
        where = "" if step is None else f" at step {step}"
        super().__init__(f"path of {device} is infeasible{where}: {reason}")
        self.device = device
        self.step = step
        self.reason = reason


class PowerFlowError(Error):
    """Generic power flow failure"""


class NonConvergenceError(PowerFlowError):
    """Newton-Raphson did not reach the mismatch tolerance"""

    def __init__(self, mismatch: float, iterations: int) -> None:
        super().__init__(
            f"power flow did not converge: mismatch {mismatch:.3e} pu"
            f" after {iterations} iterations"
        )
        self.mismatch = mismatch
        self.iterations = iterations


class SingularJacobianError(PowerFlowError):
    """The power flow Jacobian cannot be factorized"""


class SolverError(Error):
    """Generic optimization engine failure"""


class ModelError(SolverError):
    """A model is malformed or was modified after being frozen"""


class NumericalError(SolverError):
    """The simplex method broke down numerically

    Args:
        message: description of the breakdown
        condition: condition number estimate of the basis, when known
    """

    def __init__(self, message: str, condition: Optional[float] = None) -> None:
        if condition is not None:
            message = f"{message} (basis condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class AssemblyError(Error):
    """Inputs to model assembly have inconsistent dimensions"""


class ConsistencyError(Error):
    """A decoded solution violates an invariant the model should enforce"""


class ScheduleParseError(Error):
    """A schedule CSV file is malformed

    Args:
        row: 1-based line number of the offending row (header is line 1)
        message: what is wrong with it
    """

    def __init__(self, row: int, message: str) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row
