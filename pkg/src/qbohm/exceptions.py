"""Exception types shared across the package."""


class QbohmError(Exception):
    """Base class for package errors."""


class DegenerateGridError(QbohmError, ValueError):
    """An axis has too few points for the requested stencil."""


class GridMismatchError(QbohmError, ValueError):
    """Fields that must share a grid do not."""


class ZeroDensityError(QbohmError, ValueError):
    """Normalization requested for a field with (numerically) zero density."""


class FullySingularError(QbohmError, ValueError):
    """Every grid point is masked as singular for the requested evaluation."""


class InsufficientSupportError(QbohmError, ValueError):
    """Too few unmasked points to form a meaningful residual norm."""


class ProbeGenerationError(QbohmError, RuntimeError):
    """Repeated probe-field regeneration failed to produce usable support."""


class NodeBreakdownError(QbohmError, RuntimeError):
    """Polar-variable stepping hit a (near-)node of the amplitude field.

    The wavefunction-evolution path handles nodal states; the polar
    integrator deliberately refuses them.
    """


class StepSizeError(QbohmError, RuntimeError):
    """Energy relaxation diverged even after automatic step-size reduction."""


class UnsupportedAnsatzError(QbohmError, ValueError):
    """The energy minimizer only handles the constant and Laplacian-ratio forms."""


class ConfigError(QbohmError, ValueError):
    """Scenario configuration failed validation; carries the full error list."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
