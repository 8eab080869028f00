"""
Exceptions raised by lsv_metrology.

Precondition violations derive from ValueError, numerical failures from RuntimeError,
so callers (and the CLI exit codes) can tell bad input from failed computation.
"""

# SPDX-License-Identifier: Apache-2.0


class BasisMismatchError(ValueError):
    """State and operator live on different Fock bases."""


class NonHermitianError(ValueError):
    """Operator is not Hermitian where an observable is required."""


class DegenerateGeneratorError(ValueError):
    """Generator has equal extreme eigenvalues, so kappa is not identifiable."""


class ClosedFormUndefinedError(ValueError):
    """Closed-form expression is not defined for the given arguments."""


class ConvergenceError(RuntimeError):
    """Iterative method failed to reach the requested tolerance."""


class UndefinedPrecisionError(RuntimeError):
    """Fisher information is not positive, the bound is undefined."""


class UnboundedPrecisionError(RuntimeError):
    """Signal slope vanishes, error propagation gives no finite precision."""
