"""Exception hierarchy.

The CLI maps these onto exit codes: usage problems exit 1, numerical and
convergence failures exit 2, IO failures exit 3.
"""


class LassoLabError(Exception):
    """Base class for all package errors."""


class InputDataError(LassoLabError):
    """Invalid input data: wrong shapes, non-finite entries, bad parameters."""


class ZeroColumnError(InputDataError):
    """The design matrix contains one or more (numerically) zero columns."""

    def __init__(self, columns):
        self.columns = tuple(int(k) for k in columns)
        super().__init__(
            "design matrix has zero columns at indices %s" % (self.columns,)
        )


class CollinearDesignError(LassoLabError):
    """Refusal to run a path algorithm on a design flagged as collinear."""

    def __init__(self, pairs):
        self.pairs = tuple((int(i), int(j)) for i, j in pairs)
        super().__init__(
            "design has collinear column pairs %s; pass force=True to proceed"
            % (self.pairs,)
        )


class ConvergenceError(LassoLabError):
    """Solver failed to converge; carries the last duality gap."""

    def __init__(self, message, last_gap):
        self.last_gap = float(last_gap)
        super().__init__("%s (last duality gap %.3e)" % (message, self.last_gap))


class SingularSystemError(LassoLabError):
    """A linear system over a column subset is singular; names the columns."""

    def __init__(self, columns, context=""):
        self.columns = tuple(int(k) for k in columns)
        msg = "singular system over columns %s" % (self.columns,)
        if context:
            msg += " (%s)" % context
        super().__init__(msg)


class DegeneratePathError(LassoLabError):
    """Path construction hit a degenerate state (singular system, event blowup)."""


class InfeasibleTargetError(LassoLabError):
    """Target vector is not in the column span of the design."""


class BoundUndefinedError(LassoLabError):
    """A theoretical bound is undefined, e.g. a vanishing sparse eigenvalue."""


class UsageError(LassoLabError):
    """Bad command line or config file usage; names the offending key."""
