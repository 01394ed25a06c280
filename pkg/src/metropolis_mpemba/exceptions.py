"""Exception types raised by the library."""


class DisconnectedGraphError(ValueError):
    """The adjacency graph has more than one communicating class."""


class DetailedBalanceError(ValueError):
    """A rate matrix is not reversible with respect to the given distribution."""


class ConvergenceError(RuntimeError):
    """An iterative eigensolver did not converge."""
