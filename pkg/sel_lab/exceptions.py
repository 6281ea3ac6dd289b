"""
exceptions.py - Semantic error hierarchy of sel_lab.

Every error carries the exit status the command line front door uses for it and,
where one applies, the mathematical statement the failure reflects.
"""
import typing

import numpy as np


class SelLabError(Exception):
    """Base class of every error raised by sel_lab."""

    exit_code = 3

    def __init__(self, message: str, result: str = None, **details):
        super().__init__(message)
        self.message = message
        self.result = result
        self.details = details

    def to_payload(self) -> dict:
        payload = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        if self.result:
            payload["result"] = self.result
        for key, value in self.details.items():
            if isinstance(value, (bool, int, float, str)) or value is None:
                payload[key] = value
        return payload


class DomainError(SelLabError, ValueError):
    """Invalid domain extents, or a point outside the closure of the domain."""

    exit_code = 2


class ResolutionError(SelLabError, ValueError):
    exit_code = 2


class GridError(SelLabError, ValueError):
    """Grid mismatch or degenerate spacing next to the boundary."""


class ContractViolation(SelLabError, ValueError):
    """An input broke the documented contract (e.g. a non-symmetric Hessian)."""


class PreconditionError(SelLabError, ValueError):
    """A quantitative precondition (an inequality on the inputs) does not hold."""


class RangeError(SelLabError, ValueError):
    """A composition left the tabulated range of a barrier profile."""


class ConfigError(SelLabError, ValueError):
    exit_code = 2


class InfeasibleConeError(SelLabError, ValueError):
    pass


class LayerError(SelLabError, ValueError):
    """Too few nodes in the boundary layer for a rate fit."""


class UnsupportedRegimeError(SelLabError, ValueError):
    """The exponents fall outside every regime the solvers are built for."""

    exit_code = 4


class IterationError(SelLabError, RuntimeError):
    """An iteration stopped without converging. ``last_iterate`` keeps its final state."""

    def __init__(self, message: str, last_iterate: typing.Any = None, result: str = None, **details):
        super().__init__(message, result=result, **details)
        self.last_iterate = last_iterate


class NewtonDivergenceError(IterationError):
    pass


class PositivityBreachError(IterationError):
    """An interior value reached zero; the singular right-hand side is no longer defined."""


class ShootingError(SelLabError, RuntimeError):
    pass


class SingularityError(ShootingError):
    """The shot profile vanished at an interior point."""


NO_SOLUTION_WEIGHT = (
    "no positive solution exists when the weight k satisfies "
    "integral_0^A t k(t) dt = infinity; for k = d^-q this is every p >= 0, q >= 2"
)


def finite_or_raise(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise IterationError(f"{what} has a non-finite value at node {bad}.", last_iterate=values)
    return values
