"""Error types shared across the package."""


class ConicCensusError(Exception):
    pass


class CharTwoUnsupported(ConicCensusError):
    pass


class NotPrime(ConicCensusError):
    pass


class FieldTooLarge(ConicCensusError):
    pass


class ZeroPolynomial(ConicCensusError):
    pass


class ZeroElement(ConicCensusError):
    pass


class OutsideConvergenceRegion(ConicCensusError):
    pass


class NonReducedFiber(ConicCensusError):
    pass


class SingularTotalSpace(ConicCensusError):
    pass


class BundleMismatch(ConicCensusError):
    pass


class NotASplitFiber(ConicCensusError):
    pass


class ParityViolation(ConicCensusError):
    pass


class EmptySpace(ConicCensusError):
    pass


class ZeroSection(ConicCensusError):
    pass


class EnumerationBudgetExceeded(ConicCensusError):
    pass


class OddDegreeUnsupported(ConicCensusError):
    pass


class BOutOfRange(ConicCensusError):
    pass


class ConfigError(ConicCensusError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
