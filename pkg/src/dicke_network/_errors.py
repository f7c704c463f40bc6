"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UninformativeHeraldError(DomainError):
    """The detection pattern carries no heralding information (vacuum or zero probability)."""


class UnsupportedPatternError(DomainError):
    """The operation is not defined for this detection pattern."""


class FidelityCeilingError(DomainError):
    """A requested fidelity exceeds what the setup can reach."""

    def __init__(self, target, max_fidelity, r_at_max):
        self.target = target
        self.max_fidelity = max_fidelity
        self.r_at_max = r_at_max
        super().__init__(
            f"target fidelity {target:.6g} unreachable; maximum is {max_fidelity:.6g} at r={r_at_max:.4g}"
        )
