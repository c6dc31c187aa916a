"""Exception hierarchy shared by all modules."""


class CpGratingError(Exception):
    """Base class for package errors."""


class InputError(CpGratingError):
    """Invalid user input (geometry, material data, config values)."""


class SingularNodeError(CpGratingError):
    """Quadrature node where the polarization basis is singular (xi = 0 with ky = 0)."""


class RegionError(CpGratingError):
    """Evaluation requested outside the validity region of the Rayleigh expansion."""


class SolverError(CpGratingError):
    """Eigen-decomposition or matching-system failure; carries node metadata."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConvergenceError(CpGratingError):
    """Quadrature doubling test exceeded tolerance; carries both estimates."""

    def __init__(self, message, coarse=None, fine=None, rel_dev=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine
        self.rel_dev = rel_dev


class AmbiguousBranchError(CpGratingError):
    """x_A sits on a groove edge where the PFA branch is ambiguous; carries both values."""

    def __init__(self, message, groove_value=None, plateau_value=None):
        super().__init__(message)
        self.groove_value = groove_value
        self.plateau_value = plateau_value
