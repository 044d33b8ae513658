"""Exception hierarchy.

The CLI maps each family onto an exit code: configuration problems exit 1,
numerical failures exit 2 and infeasible design requests exit 3.
"""


class KerrForgeError(Exception):
    exit_code = 2


class ConfigError(KerrForgeError, ValueError):
    """Structurally invalid circuit or unreadable configuration."""

    exit_code = 1


class NumericalError(KerrForgeError):
    exit_code = 2


class DegenerateIntermediate(NumericalError):
    def __init__(self, start, intermediate, gap):
        self.start = start
        self.intermediate = intermediate
        self.gap = gap
        super().__init__(
            f"intermediate state {intermediate} is degenerate with {start} "
            f"(energy gap {gap:.3e} GHz)"
        )


class TruncationClipped(NumericalError):
    pass


class PoleProximity(NumericalError):
    pass


class TruncationError(NumericalError):
    """A state does not fit in the requested Fock truncation."""


class AmbiguousLabeling(NumericalError):
    pass


class WeakOverlap(NumericalError):
    pass


class SizeLimitExceeded(NumericalError):
    pass


class DesignError(KerrForgeError):
    exit_code = 3


class NoRootInBounds(DesignError):
    pass


class DispersiveViolation(DesignError):
    pass


class InfeasibleTarget(DesignError):
    pass


class FrequencyCollision(DesignError):
    pass


class GateTooSlow(DesignError):
    pass
