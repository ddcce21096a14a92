"""Leader and follower dynamical models, the two built-in example systems, and
the fixed-step RK4 integrator used throughout the package.

State convention: a follower state stacks ``r`` segments of length ``n``,
``x = [x_1; x_2; ...; x_r]``, where segment ``l+1`` is the l-th derivative of
the output. Drift maps ``f`` and input-gain maps ``g`` accept arbitrary
leading batch axes: ``f: (..., r*n) -> (..., n)`` and
``g: (..., r*n) -> (..., n, n_in)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, NumericDomainError
from .graph import FaultProfile, FaultSpec, GraphSpec

__all__ = [
    "FollowerModel",
    "LeaderModel",
    "FormationSpec",
    "ExampleSystem",
    "follower_derivative",
    "leader_derivative",
    "rk4_step",
    "builtin_example1",
    "builtin_example2",
    "thrust_direction",
    "builtin_system",
]

GRAVITY = 9.81
UAV_MASS = 2.618


@dataclass(frozen=True)
class FollowerModel:
    """Integrator-chain nonlinear follower with box-bounded inputs.

    ``u_lo``/``u_hi`` are positive magnitudes: the admissible box is
    ``-u_lo <= u <= u_hi``. ``accel_to_input`` maps a demanded top-derivative
    vector (length ``n``) at state ``x`` to a raw physical input (length
    ``n_in``); when ``None`` the gain matrix is square and is inverted
    directly.
    """

    r: int
    n: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    u_lo: np.ndarray
    u_hi: np.ndarray
    name: str = ""
    accel_to_input: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    g_const: np.ndarray | None = None

    def __post_init__(self):
        if self.r < 1 or self.n < 1:
            raise ConfigurationError("chain order r and channel dimension n must be >= 1")
        lo = np.atleast_1d(np.asarray(self.u_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.u_hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigurationError("u_lo and u_hi must be vectors of equal length")
        if np.any(lo <= 0) or np.any(hi <= 0):
            raise ConfigurationError("input bounds must be strictly positive")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "u_lo", lo)
        object.__setattr__(self, "u_hi", hi)
        if self.g_const is not None:
            gc = np.asarray(self.g_const, dtype=float)
            if gc.shape != (self.n, lo.shape[0]):
                raise ConfigurationError("g_const must have shape (n, n_in)")
            gc.setflags(write=False)
            object.__setattr__(self, "g_const", gc)

    @property
    def dim(self) -> int:
        return self.r * self.n

    @property
    def n_in(self) -> int:
        return self.u_lo.shape[0]

    def drift_vanishes_at_origin(self, tol: float = 1e-12) -> bool:
        """Whether f(0) = 0; reported as a load-time warning when it fails."""
        return bool(np.max(np.abs(self.f(np.zeros(self.dim)))) <= tol)


@dataclass(frozen=True)
class LeaderModel:
    """Linear virtual leader ``xi' = S0 xi`` with initial state ``xi0``."""

    s0: np.ndarray
    xi0: np.ndarray

    def __post_init__(self):
        s0 = np.asarray(self.s0, dtype=float)
        xi0 = np.asarray(self.xi0, dtype=float)
        if s0.ndim != 2 or s0.shape[0] != s0.shape[1] or xi0.shape != (s0.shape[0],):
            raise ConfigurationError("leader S0 must be square and match xi0")
        s0.setflags(write=False)
        xi0.setflags(write=False)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "xi0", xi0)

    @property
    def dim(self) -> int:
        return self.s0.shape[0]


@dataclass(frozen=True)
class FormationSpec:
    """Per-agent displacement from the leader state, stacked like the states.

    Row ``i`` is ``[d_y; d_y'; ...]``; constant formations carry zeros in every
    derivative segment.
    """

    displacements: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=float)
        if d.ndim != 2:
            raise ConfigurationError("displacements must be an (M, r*n) array")
        d.setflags(write=False)
        object.__setattr__(self, "displacements", d)

    @property
    def n_agents(self) -> int:
        return self.displacements.shape[0]

    def relative(self, i: int, j: int) -> np.ndarray:
        """Displacement of agent i relative to agent j."""
        return self.displacements[i] - self.displacements[j]


@dataclass(frozen=True)
class ExampleSystem:
    """A fully instantiated multi-agent system ready to simulate."""

    followers: tuple[FollowerModel, ...]
    leader: LeaderModel
    formation: FormationSpec
    graph: GraphSpec
    faults: FaultProfile
    x0: np.ndarray


def follower_derivative(model: FollowerModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Chain shift plus actuated top derivative: ``[x_2; ...; x_r; f + G u]``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = model.n
    if model.g_const is not None:
        top = model.f(x) + u @ model.g_const.T
    else:
        top = model.f(x) + np.einsum("...ij,...j->...i", model.g(x), u)
    if not np.isfinite(top).all():
        raise NumericDomainError("follower dynamics produced non-finite values")
    out = np.empty_like(x)
    out[..., : x.shape[-1] - n] = x[..., n:]
    out[..., x.shape[-1] - n :] = top
    return out


def leader_derivative(leader: LeaderModel, xi: np.ndarray) -> np.ndarray:
    return np.asarray(xi, dtype=float) @ leader.s0.T


def rk4_step(deriv: Callable[[float, np.ndarray], np.ndarray],
             t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``y' = deriv(t, y)``."""
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    k1 = deriv(t, y)
    k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = deriv(t + h, y + h * k3)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericDomainError("integration step produced non-finite values")
    return out


def _example1_f1(x):
    return (x[..., 0] * x[..., 1] + x[..., 2] - x[..., 0] ** 3)[..., None]


def _example1_f2(x):
    return (x[..., 0] * np.sin(x[..., 1]) + np.cos(x[..., 2]) ** 2)[..., None]


def _example1_f3(x):
    return (-0.5 * (x[..., 0] + x[..., 1] - 1.0) ** 2 * (x[..., 2] - 1.0))[..., None]


def _unit_gain(x):
    return np.ones(x.shape[:-1] + (1, 1))


def builtin_example1(fault_seed: int = 0) -> ExampleSystem:
    """Three scalar-output third-order followers tracking an oscillatory leader.

    The communication graph pins agent 1 to the leader and feeds agents 2 and 3
    from agent 1; the pinning gain and the 2<-1 edge carry sinusoidal faults
    modulated by a held random factor.
    """
    bound = np.array([3.0])
    followers = tuple(
        FollowerModel(
            r=3,
            n=1,
            f=f,
            g=_unit_gain,
            u_lo=bound,
            u_hi=bound,
            name=name,
            g_const=np.array([[1.0]]),
        )
        for f, name in (
            (_example1_f1, "cubic"),
            (_example1_f2, "trigonometric"),
            (_example1_f3, "polynomial"),
        )
    )
    leader = LeaderModel(
        s0=np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.16, -2.0]]),
        xi0=np.array([1.0, 0.0, 0.0]),
    )
    formation = FormationSpec(
        np.array([[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [-0.2, 0.0, 0.0]])
    )
    graph = GraphSpec(
        adjacency=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        pinning=np.array([1.0, 0.0, 0.0]),
    )
    faults = FaultProfile(
        edge_faults={(1, 0): FaultSpec(0.5, "sin")},
        pin_faults={0: FaultSpec(0.3, "sin")},
        hold_period=0.2,
        seed=fault_seed,
    )
    faults.validate_against(graph)
    x0 = np.array([[1.3, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return ExampleSystem(followers, leader, formation, graph, faults, x0)


def thrust_direction(u_eta: np.ndarray) -> np.ndarray:
    """Body-thrust direction for ZYX (yaw-pitch-roll) attitude angles.

    ``u_eta = [phi, theta, psi]``; returns the third column of the rotation
    matrix, i.e. the unit vector along which the rotor thrust acts.
    """
    phi, theta, psi = u_eta
    return np.array(
        [
            np.cos(phi) * np.sin(theta) * np.cos(psi) + np.sin(phi) * np.sin(psi),
            np.cos(phi) * np.sin(theta) * np.sin(psi) - np.sin(phi) * np.cos(psi),
            np.cos(phi) * np.cos(theta),
        ]
    )


# Input channel order for the translational UAV model: [u_F, u_phi, u_theta, u_psi],
# with u_F the thrust deviation from hover (total thrust = m*g + u_F). The gain
# matrix is the Jacobian at hover of a = -g*e3 + (1/m)*thrust_direction(eta)*(m*g + u_F),
# which makes the model control-affine with zero drift.
_UAV_GAIN = np.array(
    [
        [0.0, 0.0, GRAVITY, 0.0],
        [0.0, -GRAVITY, 0.0, 0.0],
        [1.0 / UAV_MASS, 0.0, 0.0, 0.0],
    ]
)


def _uav_f(x):
    return np.zeros(x.shape[:-1] + (3,))


def _uav_g(x):
    return np.broadcast_to(_UAV_GAIN, x.shape[:-1] + (3, 4)).copy()


def _uav_accel_to_input(accel: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Right inverse of the hover Jacobian; yaw is never commanded."""
    accel = np.asarray(accel, dtype=float)
    return np.stack(
        [
            UAV_MASS * accel[..., 2],
            -accel[..., 1] / GRAVITY,
            accel[..., 0] / GRAVITY,
            np.zeros(accel.shape[:-1]),
        ],
        axis=-1,
    )


def builtin_example2(fault_seed: int = 0) -> ExampleSystem:
    """Five-vehicle translational UAV system (r=2, n=3) with four physical inputs.

    Each vehicle's position/velocity subsystem is steered through the thrust
    deviation and the commanded attitude angles; the box bounds apply to the
    physical inputs ``[u_F, u_phi, u_theta, u_psi]``.
    """
    u_bound = np.array([4.0, 0.5, 0.5, 0.1])
    followers = tuple(
        FollowerModel(
            r=2,
            n=3,
            f=_uav_f,
            g=_uav_g,
            u_lo=u_bound,
            u_hi=u_bound,
            name=f"uav{i+1}",
            accel_to_input=_uav_accel_to_input,
            g_const=_UAV_GAIN,
        )
        for i in range(5)
    )
    leader = LeaderModel(
        s0=np.array(
            [
                [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
                [-0.0676, 0.0, 0.0, -0.1040, 0.0, 0.0],
                [0.0, -0.0676, 0.0, 0.0, -0.1040, 0.0],
                [0.0, 0.0, -0.0025, 0.0, 0.0, -0.02],
            ]
        ),
        xi0=np.array([10.0, 0.0, 0.0, 0.0, 3.0, 1.2]),
    )
    formation = FormationSpec(
        np.array(
            [
                [0.0, 1.1, 0.0, 0.0, 0.0, 0.0],
                [-1.5, 0.0, 0.0, 0.0, 0.0, 0.0],
                [1.5, 0.0, 0.0, 0.0, 0.0, 0.0],
                [-0.95, -1.8, 0.0, 0.0, 0.0, 0.0],
                [0.95, -1.8, 0.0, 0.0, 0.0, 0.0],
            ]
        )
    )
    adjacency = np.zeros((5, 5))
    adjacency[1, 0] = 1.0
    adjacency[2, 0] = 1.0
    adjacency[3, 1] = 1.0
    adjacency[3, 2] = 1.0
    adjacency[4, 2] = 1.0
    adjacency[4, 3] = 1.0
    graph = GraphSpec(adjacency=adjacency, pinning=np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    faults = FaultProfile(
        edge_faults={(1, 0): FaultSpec(0.5, "sin"), (3, 2): FaultSpec(0.5, "sin")},
        pin_faults={0: FaultSpec(0.3, "sin")},
        hold_period=0.2,
        seed=fault_seed,
    )
    faults.validate_against(graph)
    positions = np.array(
        [[10.0, 0.0, 0.0], [7.0, 0.0, 0.0], [13.0, 0.0, 0.0], [8.5, 0.0, 0.0], [11.5, 0.0, 0.0]]
    )
    x0 = np.hstack([positions, np.zeros((5, 3))])
    return ExampleSystem(followers, leader, formation, graph, faults, x0)


_BUILTINS = {"example1": builtin_example1, "example2": builtin_example2}


def builtin_system(name: str, fault_seed: int = 0) -> ExampleSystem:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown builtin system {name!r}; available: {sorted(_BUILTINS)}"
        ) from None
    return factory(fault_seed=fault_seed)
