"""Exception and warning classes raised by the halfline solvers."""


class HalflineError(Exception):
    """Base class for all library errors."""


class MalformedGrid(HalflineError):
    """A grid is not strictly increasing, is empty, or has wrong shape."""


class ZeroCrossing(HalflineError):
    """A function whose argument is being tracked passes through zero."""


class NonIntegerWinding(HalflineError):
    """The winding number is not close enough to an integer."""


class TailNotResolved(HalflineError):
    """An integrand has not decayed at the end of the grid and no tail model was given."""


class NoDecay(HalflineError):
    """A potential is not negligible at the end of its grid."""


class NonSimpleZero(HalflineError):
    """A bound-state zero of the Jost function has a vanishing derivative."""


class UnwrapAmbiguity(HalflineError):
    """The phase jumps by more than pi between neighbouring nodes."""


class KappaCollision(HalflineError):
    """The auxiliary factor parameter coincides with a bound-state wavenumber."""


class GammaCollision(KappaCollision):
    """The index-reduction parameter coincides with a bound-state wavenumber."""


class IndexMismatch(HalflineError):
    """The winding index of S is inconsistent with the number of bound states."""


class BranchError(HalflineError):
    """The logarithm of S could not be followed continuously."""


class ZeroModulus(HalflineError):
    """A modulus that must be positive vanishes on the grid interior."""


class NonHerglotz(HalflineError):
    """Im I(k) is not positive for some k > 0."""


class SingularOperator(HalflineError):
    """A discretized integral operator is numerically singular."""


class ContractionFailed(HalflineError):
    """No starting point was found where the iterated operator contracts."""


class DivergentTail(HalflineError):
    """The spectral-measure difference does not decay fast enough to integrate."""


class IterationDiverged(HalflineError):
    """A fixed-point iteration failed to converge."""


class PositivityViolated(HalflineError):
    """1 + H~(k) is not positive, so the Krein equation is not uniquely solvable."""


class RecursionBreakdown(HalflineError):
    """A leading minor in the Levinson recursion is numerically singular."""


class Underflow(HalflineError):
    """Phase shifts vanish before the tail of the sequence is usable."""


class SingularSystem(HalflineError):
    """The degenerate-kernel linear system is numerically singular."""


class ZeroResponse(HalflineError):
    """The transformed boundary response vanishes at some wavenumber."""


class ConfigError(HalflineError):
    """A pipeline configuration is invalid; the message names the field path."""


class ResonanceAtZero(UserWarning):
    """The Jost function (nearly) vanishes at k = 0."""
