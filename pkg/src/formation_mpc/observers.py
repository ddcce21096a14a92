"""Per-agent adaptive distributed observers for the leader's state, dynamics
matrix, and desired formation displacement.

Each agent integrates three coupled estimators driven by weighted disagreement
with its in-neighbors (and with the leader itself, when pinned). The dynamics-
and displacement-estimator gains grow with the observed disagreement, so they
are nondecreasing along every trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .models import FormationSpec, LeaderModel

__all__ = [
    "ObserverState",
    "ObserverRates",
    "NeighborEstimate",
    "NeighborhoodSnapshot",
    "LocalErrors",
    "EstimationErrors",
    "vec",
    "local_errors",
    "observer_derivative",
    "global_estimation_errors",
    "stacked_local_errors",
]


@dataclass
class ObserverState:
    """Estimates held by one agent plus its adaptive gains (both >= 1)."""

    xi_hat: np.ndarray
    s_hat: np.ndarray
    delta_hat: np.ndarray
    c_s: float = 1.0
    c_delta: float = 1.0

    def __post_init__(self):
        self.xi_hat = np.asarray(self.xi_hat, dtype=float)
        self.s_hat = np.asarray(self.s_hat, dtype=float)
        self.delta_hat = np.asarray(self.delta_hat, dtype=float)
        d = self.xi_hat.shape[0]
        if self.s_hat.shape != (d, d) or self.delta_hat.shape != (d,):
            raise ConfigurationError("observer estimate dimensions are inconsistent")
        if self.c_s < 1.0 or self.c_delta < 1.0:
            raise ConfigurationError("adaptive gains must start at 1 or above")

    @classmethod
    def zero(cls, dim: int) -> "ObserverState":
        return cls(np.zeros(dim), np.zeros((dim, dim)), np.zeros(dim))


@dataclass(frozen=True)
class ObserverRates:
    """Time derivative of an ObserverState."""

    xi_hat: np.ndarray
    s_hat: np.ndarray
    delta_hat: np.ndarray
    c_s: float
    c_delta: float


@dataclass(frozen=True)
class NeighborEstimate:
    """One in-neighbor's transmitted estimates and the faulted edge weight."""

    xi_hat: np.ndarray
    s_hat: np.ndarray
    delta_hat: np.ndarray
    delta_rel: np.ndarray
    weight: float


@dataclass(frozen=True)
class NeighborhoodSnapshot:
    """Everything one agent can see at a single instant.

    Pinned agents additionally carry the leader's state, dynamics matrix, and
    their own true displacement, scaled by the faulted pinning gain.
    """

    neighbors: tuple[NeighborEstimate, ...] = ()
    pin_weight: float = 0.0
    leader_state: np.ndarray | None = None
    leader_dynamics: np.ndarray | None = None
    displacement: np.ndarray | None = None

    def __post_init__(self):
        if self.pin_weight > 0 and (
            self.leader_state is None
            or self.leader_dynamics is None
            or self.displacement is None
        ):
            raise ConfigurationError("pinned snapshot must carry the leader data")


@dataclass(frozen=True)
class LocalErrors:
    eps_xi: np.ndarray
    eps_s: np.ndarray
    eps_delta: np.ndarray


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stack a matrix (column 1 first). The order is frozen so logged
    values stay comparable across runs; any fixed order preserves norms."""
    return np.asarray(m).ravel(order="F")


def local_errors(state: ObserverState, nbhd: NeighborhoodSnapshot) -> LocalErrors:
    """Weighted disagreement of one agent's estimates with its neighborhood.

    Unpinned agents contribute no leader terms; an agent with no in-neighbors
    and no pinning sees identically zero errors.
    """
    eps_xi = np.zeros_like(state.xi_hat)
    eps_s = np.zeros_like(state.s_hat)
    eps_delta = np.zeros_like(state.delta_hat)
    for nb in nbhd.neighbors:
        eps_xi += nb.weight * (state.xi_hat - nb.xi_hat)
        eps_s += nb.weight * (state.s_hat - nb.s_hat)
        eps_delta += nb.weight * (state.delta_hat - nb.delta_hat - nb.delta_rel)
    if nbhd.pin_weight > 0:
        eps_xi += nbhd.pin_weight * (state.xi_hat - nbhd.leader_state)
        eps_s += nbhd.pin_weight * (state.s_hat - nbhd.leader_dynamics)
        eps_delta += nbhd.pin_weight * (state.delta_hat - nbhd.displacement)
    return LocalErrors(eps_xi, eps_s, eps_delta)


def observer_derivative(
    state: ObserverState, errors: LocalErrors, c_xi: float
) -> ObserverRates:
    """Estimator right-hand sides for one agent.

    The adaptive-gain rates are evaluated first and reused inside the matrix
    and displacement updates, whose laws reference them directly.
    """
    if c_xi <= 0:
        raise ConfigurationError("leader-state observer gain must be positive")
    eps_s_vec = vec(errors.eps_s)
    c_s_dot = float(eps_s_vec @ eps_s_vec)
    c_delta_dot = float(errors.eps_delta @ errors.eps_delta)
    return ObserverRates(
        xi_hat=state.s_hat @ state.xi_hat - c_xi * errors.eps_xi,
        s_hat=-(state.c_s + c_s_dot) * errors.eps_s,
        delta_hat=-(state.c_delta + c_delta_dot) * errors.eps_delta,
        c_s=c_s_dot,
        c_delta=c_delta_dot,
    )


@dataclass(frozen=True)
class EstimationErrors:
    """Norms of the gaps between estimates and ground truth, for logging."""

    xi: np.ndarray
    s: np.ndarray
    delta: np.ndarray
    xi_stacked: float
    s_stacked: float
    delta_stacked: float


def global_estimation_errors(
    states: list[ObserverState] | tuple[ObserverState, ...],
    leader: LeaderModel,
    formation: FormationSpec,
) -> EstimationErrors:
    xi = np.array([np.linalg.norm(st.xi_hat - leader.xi0) for st in states])
    s = np.array([np.linalg.norm(vec(st.s_hat - leader.s0)) for st in states])
    delta = np.array(
        [
            np.linalg.norm(st.delta_hat - formation.displacements[i])
            for i, st in enumerate(states)
        ]
    )
    return EstimationErrors(
        xi=xi,
        s=s,
        delta=delta,
        xi_stacked=float(np.linalg.norm(xi)),
        s_stacked=float(np.linalg.norm(s)),
        delta_stacked=float(np.linalg.norm(delta)),
    )


def stacked_local_errors(
    adjacency_f: np.ndarray,
    pinning_f: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
    leader_state: np.ndarray,
    leader_s0: np.ndarray,
    displacements: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All agents' local errors at once from the faulted weight matrices.

    Algebraically identical to applying :func:`local_errors` per agent: the
    mixing matrix multiplies the gaps to ground truth, and rows of unpinned
    agents carry an exactly-zero leader contribution.

    Shapes: ``xi_hat (M, d)``, ``s_hat (M, d, d)``, ``delta_hat (M, d)``.
    """
    lap = np.diag(adjacency_f.sum(axis=1)) - adjacency_f
    l_b = lap + np.diag(pinning_f)
    eps_xi = l_b @ (xi_hat - leader_state[None, :])
    eps_s = np.einsum("ij,jkl->ikl", l_b, s_hat - leader_s0[None, :, :])
    eps_delta = l_b @ (delta_hat - displacements)
    return eps_xi, eps_s, eps_delta
