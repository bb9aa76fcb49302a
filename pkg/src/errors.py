class PortfolioQaError(Exception):
    """Base class for every error raised by the benchmark pipeline."""

    code = "error"
    exit_code = 3


class InputError(PortfolioQaError):
    """Invalid parameters or inputs. The CLI exits with status 2."""

    code = "validation"
    exit_code = 2


class RuntimeFailure(PortfolioQaError):
    """Failure while executing a valid request. The CLI exits with status 3."""

    code = "runtime"
    exit_code = 3


# market-sim
class NotPositiveDefinite(InputError):
    pass


class ZeroVolatility(InputError):
    pass


class InsufficientObservations(InputError):
    pass


# portfolio-qubo
class DegenerateRange(InputError):
    pass


class LengthMismatch(InputError):
    pass


class TooLarge(InputError):
    pass


class MalformedInstance(InputError):
    pass


# chimera-embed
class InvalidDefectId(InputError):
    pass


class InfeasibleWithDefects(InputError):
    pass


class MissingCoupler(InputError):
    pass


class EmbeddingInvariantViolated(RuntimeFailure):
    pass


# anneal-engine
class MalformedSchedule(InputError):
    pass


class InvalidFraction(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class MissingInitialState(InputError):
    pass


# solvers / harness
class InvalidConfig(InputError):
    pass


class UndefinedTts(InputError):
    pass


class ReportIoError(RuntimeFailure):
    pass
