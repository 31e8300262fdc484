"""Exception hierarchy for g2lab."""


class G2LabError(Exception):
    """Base class for every error raised by g2lab."""


# core_space
class RowSumViolation(G2LabError):
    """A generator row does not sum to zero."""


class DetailedBalanceViolation(G2LabError):
    """m_i L_ij differs from m_j L_ji beyond tolerance."""


class NonpositiveMass(G2LabError):
    """A measure weight is zero, negative or not finite."""


class DegenerateGrid(G2LabError):
    """Grid parameters do not describe a usable grid."""


class PotentialOverflow(G2LabError):
    """exp(-V) under- or overflows on the grid."""


class SizeMismatch(G2LabError):
    """Field or matrix dimensions do not match the state space."""


class NegativeRate(G2LabError):
    """An off-diagonal rate is negative."""


class GridRequired(G2LabError):
    """The operation needs a 1D grid space with positions."""


# gamma_calculus
class IndefiniteGamma(G2LabError):
    """The carre du champ form has a clearly negative eigenvalue."""


class PremiseViolation(G2LabError):
    """The hypotheses of an energy estimate do not hold."""


# poly_exact
class DegreeOverflow(G2LabError):
    """A polynomial exceeded the supported degree."""


class CurvaturePremiseViolation(G2LabError):
    """V'' falls below K somewhere on the interval."""


# semigroup
class EigensolverNoConvergence(G2LabError):
    """The symmetric eigensolver failed."""


class NegativeTime(G2LabError):
    """A negative time was requested."""


class NonpositiveEpsilon(G2LabError):
    """Mollification parameter must be positive."""


class AlphaOutOfRange(G2LabError):
    """Gradient exponent outside [1/2, 1]."""


class KExceedsCurvature(G2LabError):
    """The claimed curvature exceeds what the generator supports."""


# transport
class UnsortedSupport(G2LabError):
    """Support positions are not sorted increasingly."""


class Infeasible(G2LabError):
    """The transport problem has no feasible plan."""


class SizeOverflow(G2LabError):
    """Too many atoms for the dense transport solver."""


class SupportMismatch(G2LabError):
    """Measure supports are not aligned with the state space."""


class ExcessClamp(G2LabError):
    """Clamping removed more mass than allowed."""


class StepTooLarge(G2LabError):
    """Finite-difference step larger than half the smallest time."""


class OptimalityCertificateError(G2LabError):
    """Dual potentials do not certify the returned plan."""


# cli
class ConfigParse(G2LabError):
    """The experiment configuration is invalid."""


class MalformedReport(G2LabError):
    """A report CSV does not follow the shared schema."""
