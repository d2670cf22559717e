"""Exception hierarchy shared by all modules."""


class CpiModelError(Exception):
    """Base class for every error raised by this package."""


class DataError(CpiModelError):
    """Input data is malformed or does not cover what an operation needs."""


class MalformedRow(DataError):
    pass


class NonMonotoneDates(DataError):
    pass


class InteriorGap(DataError):
    pass


class DuplicateCode(DataError):
    pass


class TooShort(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class NonPositivePeak(DataError):
    pass


class MissingMonth(DataError):
    pass


class UnknownCode(DataError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return Exception.__str__(self)


class EmptyCatalog(DataError):
    pass


class SpanTooShort(DataError):
    pass


class FitError(CpiModelError):
    """A single regression could not be estimated."""


class RankDeficient(FitError):
    pass


class InsufficientData(FitError):
    pass


class NoFeasibleCandidate(CpiModelError):
    """No candidate in a search could be fitted."""


class StatsError(CpiModelError):
    pass


class InsufficientOverlap(StatsError):
    pass


class DegenerateVariance(StatsError):
    pass


class DegenerateSeries(StatsError):
    pass


class ScenarioError(CpiModelError):
    pass


class ZeroDenominator(ScenarioError):
    pass


class NonPositivePrice(ScenarioError):
    pass
