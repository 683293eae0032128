"""Exception types shared across the package."""


class TwistboundError(Exception):
    """Base class for all package errors."""


class InvalidSpec(TwistboundError):
    """A shape specification violates its invariants."""


class EmptyMask(TwistboundError):
    """Rasterization produced no interior nodes."""


class NoConvergence(TwistboundError):
    """Iterative eigensolver ran out of iterations.

    Carries the iteration count and the worst residual; callers may retry
    with a larger block.
    """

    def __init__(self, iterations, worst_residual):
        self.iterations = iterations
        self.worst_residual = worst_residual
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(worst residual {worst_residual:.3e}); retry with a larger block"
        )


class NonPositiveGroundState(TwistboundError):
    """The computed ground state is not positive beyond roundoff.

    Signals a discretization too coarse or a solver failure; the continuum
    ground state is strictly positive.
    """

    def __init__(self, margin):
        self.margin = margin
        super().__init__(f"ground state has node values down to {margin:.3e}")


class CapExceeded(TwistboundError):
    """More eigenvalues found than the caller's cap allows."""


class InvalidC(TwistboundError):
    """c outside the open interval (0, gamma/3)."""


class SigmaOutOfRange(TwistboundError):
    """Moment order sigma below 1/2."""


class TruncationTooSmall(TwistboundError):
    """Axial truncation does not contain the perturbation support."""


class QuadratureTooCoarse(TwistboundError):
    """The s-integrand oscillates faster than the quadrature resolves."""


class MemoryBudgetExceeded(TwistboundError):
    """Estimated assembly size exceeds the configured budget."""

    def __init__(self, estimate_bytes, budget_bytes):
        self.estimate_bytes = estimate_bytes
        self.budget_bytes = budget_bytes
        super().__init__(
            f"estimated {estimate_bytes / 1e9:.2f} GB exceeds "
            f"budget {budget_bytes / 1e9:.2f} GB"
        )


class ConfigError(TwistboundError):
    """Config file failed validation; message names the offending fields."""
