"""Exception taxonomy shared by the whole package.

The CLI maps these onto its exit-code contract: config problems exit 2,
contract violations exit 3, flow blow-up exits 4, and a failed
direction-order check exits 5.
"""


class KContactError(Exception):
    """Base class for all package errors."""


class ShapeError(KContactError):
    """An array does not conform to the chart dimensions."""


class DomainError(KContactError):
    """A point violates the declared domain predicate of a field or section."""


class ContractError(KContactError):
    """A documented precondition does not hold (non-holonomic section,
    bad gauge-matrix trace, non-affine Hamiltonian, ...)."""


class RegularityError(KContactError):
    """A fibre Hessian is numerically singular where invertibility is required."""


class SolverError(KContactError):
    """An iterative solve failed to converge.

    Carries the last residual in ``residual`` when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoSolutionError(SolverError):
    """The diagonal gauge-matrix system is inconsistent at the given point."""


class DivergenceError(KContactError):
    """An integrated trajectory exceeded the blow-up guard."""


class IntegrabilityError(KContactError):
    """Re-integrating with the directions reordered gave a different endpoint."""


class ConfigError(KContactError):
    """A run configuration could not be resolved into a plan."""
