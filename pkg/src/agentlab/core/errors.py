"""Exception hierarchy shared by all services.

Services raise these; only the command-line entrypoint turns them into exit codes.
"""


class AgentLabError(Exception):
    """Base class for all expected failures."""

    exit_code = 1


class ConfigurationError(AgentLabError):
    """Invalid settings, scenario definition or agent parameters."""

    exit_code = 2


class DataError(AgentLabError):
    """Missing, corrupt or unusable data and artifacts."""

    exit_code = 3


class OrderRejected(DataError):
    """The matching engine refused an order (duplicate id, bad size or price)."""


class SolverError(AgentLabError):
    """A model could not be fitted or explained with the given input."""

    exit_code = 4


class SchedulingError(AgentLabError):
    """An event was scheduled in the past. Always a programming error."""
