"""Exception hierarchy shared by all modules."""


class MMGeoError(Exception):
    """Base class for every error raised by mmgeo."""


class SpaceError(MMGeoError, ValueError):
    """A distance matrix / weight vector does not describe a valid mm-space."""


class TriangleViolation(SpaceError):
    def __init__(self, i, j, k, excess):
        self.i, self.j, self.k, self.excess = int(i), int(j), int(k), float(excess)
        super().__init__(
            f"triangle inequality violated: d[{i},{j}] exceeds d[{i},{k}] + d[{k},{j}] by {excess:.3g}"
        )


class AsymmetricMatrix(SpaceError):
    pass


class NegativeDistance(SpaceError):
    pass


class DegenerateDistance(SpaceError):
    """Two distinct points at distance zero (or a nonzero diagonal)."""


class BadWeights(SpaceError):
    pass


class BudgetExceeded(MMGeoError):
    pass


class DimensionMismatch(MMGeoError, ValueError):
    pass


class InvalidAlignment(MMGeoError, ValueError):
    pass


class CertRejected(MMGeoError, ValueError):
    pass


class TooLarge(MMGeoError, ValueError):
    pass


class MetricViolation(MMGeoError):
    """A transformed distance matrix is no longer a metric."""


class NotNondecreasing(MMGeoError, ValueError):
    pass


class InconclusiveTrend(MMGeoError):
    def __init__(self, condition, values):
        self.condition = condition
        self.values = list(values)
        super().__init__(f"trend for condition {condition!r} is inconclusive: {self.values}")


class ImplicationViolation(MMGeoError, AssertionError):
    """A condition report broke (i) => (ii) => (b) => (iii); always a bug."""


class ConfigError(MMGeoError, ValueError):
    pass
