"""Exception types shared across the package."""


class FormationMpcError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FormationMpcError):
    """A scenario, model, or parameter set is structurally invalid."""


class ScenarioError(ConfigurationError):
    """A scenario document failed parsing or schema validation."""


class TopologyError(FormationMpcError):
    """A graph operation required leader-to-follower reachability and did not have it."""


class NumericDomainError(FormationMpcError):
    """A dynamics or solver evaluation produced non-finite values.

    Carries optional agent index and simulation time for error reports.
    """

    def __init__(self, message: str, agent: int | None = None, t: float | None = None):
        self.agent = agent
        self.t = t
        ctx = []
        if agent is not None:
            ctx.append(f"agent {agent}")
        if t is not None:
            ctx.append(f"t={t:.6g}")
        super().__init__(message + (f" ({', '.join(ctx)})" if ctx else ""))


class SingularGainError(FormationMpcError):
    """The input-gain matrix is singular or too ill-conditioned to invert."""

    def __init__(self, message: str, agent: int | None = None):
        self.agent = agent
        super().__init__(message + (f" (agent {agent})" if agent is not None else ""))


class EngineError(FormationMpcError):
    """A closed-loop run aborted; carries the partially filled log."""

    def __init__(self, message: str, partial_log=None):
        self.partial_log = partial_log
        super().__init__(message)
