"""Exception hierarchy shared by every boostlab module."""


class BoostlabError(Exception):
    pass


class ZeroWeight(BoostlabError, ValueError):
    """A measure with total weight 0 cannot be normalized."""


class SupportViolation(BoostlabError, ValueError):
    """First argument puts mass where the second has none."""


class Infeasible(BoostlabError, ValueError):
    """No scaling of the measure reaches the requested density."""


class EstimatorFailure(BoostlabError, RuntimeError):
    def __init__(self, message, step=None, iteration=None):
        super().__init__(message)
        self.step = step
        self.iteration = iteration


class FloorViolation(BoostlabError, RuntimeError):
    """A promised lower bound on a weight or mean was observed to be broken."""


class SizeLimit(BoostlabError, ValueError):
    pass


class ConfigError(BoostlabError, ValueError):
    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


class WeakLearnerContractViolation(BoostlabError, RuntimeError):
    def __init__(self, message, iteration=None, record=None):
        super().__init__(message)
        self.iteration = iteration
        self.record = record


class BoundViolation(BoostlabError, AssertionError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
