"""Exception types shared across the package."""


class InvalidGeometryError(ValueError):
    """Raised for non-positive distances or inconsistent array geometry."""


class DegenerateChannelError(ValueError):
    """Raised when a user channel has zero norm and a required normalization fails."""


class InfeasibleError(RuntimeError):
    """Raised when a QoS instance admits no feasible beamformer under the solver's scheme."""
