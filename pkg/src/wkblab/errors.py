"""Exception hierarchy shared by every module.

Errors split into two families so the CLI can map them to exit codes:
``InputError`` for bad configurations or violated preconditions and
``NumericalError`` for computations that ran but could not certify a result.
"""


class WkbLabError(Exception):
    pass


class InputError(WkbLabError, ValueError):
    pass


class NumericalError(WkbLabError, ArithmeticError):
    pass


# curve model
class BadDegree(InputError):
    pass


class RepeatedRoots(InputError):
    pass


class PathTooClose(InputError):
    pass


class DegenerateConfiguration(InputError):
    pass


# differentials
class ZeroOnPath(InputError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


# monodromy / wkb
class StepUnderflow(NumericalError):
    pass


class RelationViolation(NumericalError):
    pass


class VanishingTrace(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


# flat dynamics
class MismatchedEdges(InputError):
    pass


class Disconnected(InputError):
    pass


class HitsConePoint(NumericalError):
    pass


class NotCloseEnough(InputError):
    pass


class InsertTooSteep(InputError):
    pass


class SearchExhausted(NumericalError):
    def __init__(self, message, best_margin=None):
        super().__init__(message)
        self.best_margin = best_margin


# det fiber
class NoConvergence(NumericalError):
    pass


class JacobianSingular(NumericalError):
    pass


# semiflat
class NotPositiveDefinite(InputError):
    pass


class OutsideDomain(InputError):
    pass


class StencilOutsideDomain(InputError):
    pass


class ZeroCollision(InputError):
    pass


# cli
class ConfigParse(InputError):
    pass


class CheckFailed(WkbLabError):
    def __init__(self, failures):
        super().__init__(f"{len(failures)} check(s) failed")
        self.failures = failures
