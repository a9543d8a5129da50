"""Exception types shared across the package."""


class WideBnnError(Exception):
    pass


class NotPositiveDefinite(WideBnnError, ValueError):
    """A Cholesky pivot was non-positive."""


class DimensionMismatch(WideBnnError, ValueError):
    pass


class ShapeMismatch(WideBnnError, ValueError):
    pass


class NoConvergence(WideBnnError, RuntimeError):
    pass


class ZeroVector(WideBnnError, ValueError):
    pass


class AntipodalVectors(WideBnnError, ValueError):
    pass


class PathUnavailable(WideBnnError, ValueError):
    pass


class NonFinite(WideBnnError, FloatingPointError):
    pass


class NonFiniteDensity(NonFinite):
    pass


class TooFewSamples(WideBnnError, ValueError):
    pass


class ConstantSeries(WideBnnError, ValueError):
    pass


class DegenerateChains(WideBnnError, ValueError):
    pass


class UnsupportedNonlinearity(WideBnnError, ValueError):
    pass


class MalformedCsv(WideBnnError, ValueError):
    pass


class LabelOutOfRange(WideBnnError, ValueError):
    pass


class ConfigError(WideBnnError, ValueError):
    pass
