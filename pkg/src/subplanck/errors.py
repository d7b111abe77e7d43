"""Exception types raised by the library."""


class SubPlanckError(Exception):
    """Base class for all library errors."""


class TruncationOverflow(SubPlanckError):
    """The Fock cutoff needed to hold a state exceeds the configured cap."""


class DegenerateParams(SubPlanckError, ValueError):
    """Gauss-Hermite parameters outside the domain of the closed forms."""


class InvalidState(SubPlanckError, ValueError):
    """A state specification violates its parameter constraints."""


class OutsideMonotoneWindow(SubPlanckError, ValueError):
    """Shift lies beyond the first zero of the overlap curve."""


class ZeroEnergyProbe(SubPlanckError, ValueError):
    """Probe state carries no photons, so the damping error is undefined."""


class UnstableRegime(SubPlanckError, ValueError):
    """Hamiltonian parameters admit no bounded spectrum / real squeezing."""


class ZeroProbabilityBranch(SubPlanckError):
    """A projective measurement branch has vanishing probability."""
