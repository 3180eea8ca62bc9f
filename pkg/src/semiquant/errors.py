"""Exception hierarchy for semiquant.

Every failure mode raised by the library derives from :class:`SemiquantError`
so callers can catch computation failures with a single handler.
"""


class SemiquantError(Exception):
    """Base class for all semiquant errors."""


# --- potential construction ------------------------------------------------

class BadParams(SemiquantError):
    """A family parameter is outside its physical range."""


class UnknownFamily(SemiquantError):
    """Catalog name not recognised."""


class NoWell(SemiquantError):
    """The requested potential has no interior minimum."""


class BranchEscape(SemiquantError):
    """The auxiliary flow degenerates: s0 sits on a stationary point of the
    flow, so s(x) never reaches the turning regions."""


class NonMonotoneX(SemiquantError):
    """Tabulated abscissae are not strictly increasing."""


class MultiWell(SemiquantError):
    """Tabulated potential has more than one local minimum."""


class TooFewSamples(SemiquantError):
    """Tabulated potential needs at least 8 samples."""


# --- quadrature and differentiation ----------------------------------------

class NoTurningPoint(SemiquantError):
    """Energy at or below the potential minimum."""


class EdgeEnergy(SemiquantError):
    """Energy coincides with a finite asymptote; use the edge-phase routine."""


class QuadratureNonConvergence(SemiquantError):
    """Integral error target not met within the evaluation budget."""


class StencilOutOfRange(SemiquantError):
    """Finite-difference stencil leaves the valid energy window."""


# --- correction maps --------------------------------------------------------

class SeriesDiverges(SemiquantError):
    """Cubic-order expansion requested where 16*delta1^2 >= 1."""


class DegenerateDenominator(SemiquantError):
    """Two-parameter map denominator vanished (defensive; unreachable for
    real inputs, where the denominator is >= 2)."""


class BadCount(SemiquantError):
    """Bound-state count must be a positive integer."""


class BadRatio(SemiquantError):
    """Asymmetry ratio r must satisfy r >= 1 (and shape factor k in (0, 1])."""


# --- level and threshold solving --------------------------------------------

class NoSuchLevel(SemiquantError):
    """The well does not hold a bound state with this quantum number."""


class NonMonotoneCondition(SemiquantError):
    """The quantization condition changed sign more than once on the scan;
    reported rather than silently picking a root."""


class NoRealRoot(SemiquantError):
    """Threshold quadratic has no real solution (no positive threshold)."""


class NonConvergence(SemiquantError):
    """Root solve failed to bracket or converge."""


class TailNonConvergent(SemiquantError):
    """Potential approaches its asymptote slower than exponentially."""


# --- oracle ------------------------------------------------------------------

class NoClosedForm(SemiquantError):
    """Model carries no closed-form spectrum."""


class DomainTooSmall(SemiquantError):
    """Grid half-width does not reach the asymptotic region."""


class NotConverged(SemiquantError):
    """Two-grid eigenvalue difference exceeds the tolerance."""


class BracketNotFound(SemiquantError):
    """No bound-state-count transition inside the configured strength range."""
