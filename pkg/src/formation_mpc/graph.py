"""Directed weighted communication topology, leader pinning, link-fault injection,
and the graph-derived diagnostics used to judge observer gain choices.

Conventions
-----------
- ``adjacency[i, j] = a_ij > 0`` means agent ``j`` transmits to agent ``i``.
- ``pinning[i] = b_i > 0`` means agent ``i`` receives the leader's data directly.
- Fault generators are pure functions of ``(t, seed)``: every evaluation at the
  same time with the same profile returns bit-identical weights.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, TopologyError

__all__ = [
    "GraphSpec",
    "FaultSpec",
    "FaultProfile",
    "ValidationReport",
    "GraphDiagnostics",
    "validate_topology",
    "effective_weights",
    "laplacian_pinned",
    "p_matrix",
    "q_matrix",
    "gain_condition_report",
]

_WAVEFORMS = ("sin", "cos", "const")


@dataclass(frozen=True)
class GraphSpec:
    """Nominal follower graph weights plus leader pinning gains."""

    adjacency: np.ndarray
    pinning: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        pin = np.array(self.pinning, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ConfigurationError("adjacency must be a square matrix")
        if pin.shape != (adj.shape[0],):
            raise ConfigurationError("pinning must be a length-M vector")
        if np.any(np.diag(adj) != 0.0):
            raise ConfigurationError("adjacency diagonal must be zero (no self-loops)")
        if np.any(adj < 0.0) or np.any(pin < 0.0):
            raise ConfigurationError("edge and pinning weights must be nonnegative")
        if not np.any(pin > 0.0):
            raise ConfigurationError("at least one agent must be pinned to the leader")
        adj.setflags(write=False)
        pin.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "pinning", pin)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class FaultSpec:
    """Single-channel fault generator: amplitude * waveform(t) * held uniform draw."""

    amplitude: float
    waveform: str = "sin"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError("fault amplitude must be nonnegative")
        if self.waveform not in _WAVEFORMS:
            raise ConfigurationError(f"unknown fault waveform {self.waveform!r}")


@functools.lru_cache(maxsize=1 << 16)
def _held_uniform(seed: int, kind: int, i: int, j: int, k: int) -> float:
    """Uniform [0,1] draw held constant over one hold interval, keyed by channel."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, kind, i, j, k])
    return float(np.random.default_rng(ss).uniform())


def _wave(waveform: str, t: float) -> float:
    if waveform == "sin":
        return math.sin(t)
    if waveform == "cos":
        return math.cos(t)
    return 1.0


@dataclass(frozen=True)
class FaultProfile:
    """Time-varying additive corruptions of edge and pinning weights.

    ``edge_faults`` is keyed by (receiver, sender) in 0-based indices; a key may
    only name an edge whose nominal weight is positive. The held random factor
    is redrawn once per ``hold_period`` so the corruption has a bounded rate of
    change inside each hold interval and is replayable from the seed.
    """

    edge_faults: dict[tuple[int, int], FaultSpec] = field(default_factory=dict)
    pin_faults: dict[int, FaultSpec] = field(default_factory=dict)
    hold_period: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.hold_period <= 0:
            raise ConfigurationError("fault hold period must be positive")

    def validate_against(self, spec: GraphSpec) -> None:
        """Reject profiles that could flip or zero a weight (sign preservation)."""
        for (i, j), fs in self.edge_faults.items():
            if not (0 <= i < spec.n_agents and 0 <= j < spec.n_agents):
                raise ConfigurationError(f"edge fault ({i},{j}) out of range")
            nominal = spec.adjacency[i, j]
            if nominal == 0.0:
                raise ConfigurationError(
                    f"edge fault on ({i},{j}) but the nominal weight is zero"
                )
            if fs.amplitude >= nominal:
                raise ConfigurationError(
                    f"edge fault amplitude {fs.amplitude} on ({i},{j}) reaches the "
                    f"nominal weight {nominal}; sign preservation would be violated"
                )
        for i, fs in self.pin_faults.items():
            if not (0 <= i < spec.n_agents):
                raise ConfigurationError(f"pin fault on agent {i} out of range")
            nominal = spec.pinning[i]
            if nominal == 0.0:
                raise ConfigurationError(f"pin fault on agent {i} but b_{i} is zero")
            if fs.amplitude >= nominal:
                raise ConfigurationError(
                    f"pin fault amplitude {fs.amplitude} on agent {i} reaches the "
                    f"nominal gain {nominal}; sign preservation would be violated"
                )

    def _hold_index(self, t: float) -> int:
        return int(math.floor(t / self.hold_period))

    def theta_edge(self, i: int, j: int, t: float) -> float:
        fs = self.edge_faults.get((i, j))
        if fs is None:
            return 0.0
        u = _held_uniform(self.seed, 0, i, j, self._hold_index(t))
        return fs.amplitude * _wave(fs.waveform, t) * u

    def theta_pin(self, i: int, t: float) -> float:
        fs = self.pin_faults.get(i)
        if fs is None:
            return 0.0
        u = _held_uniform(self.seed, 1, i, 0, self._hold_index(t))
        return fs.amplitude * _wave(fs.waveform, t) * u


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the reachability check; failure is carried, not raised."""

    reachable: bool
    unreachable: tuple[int, ...]
    message: str


def validate_topology(spec: GraphSpec) -> ValidationReport:
    """Check that the leader has a directed path to every follower.

    The leader reaches the pinned agents directly; from there information flows
    along edges ``j -> i`` whenever ``a_ij > 0``.
    """
    m = spec.n_agents
    reached = [bool(b > 0) for b in spec.pinning]
    frontier = [i for i in range(m) if reached[i]]
    while frontier:
        j = frontier.pop()
        for i in range(m):
            if not reached[i] and spec.adjacency[i, j] > 0:
                reached[i] = True
                frontier.append(i)
    unreachable = tuple(i for i in range(m) if not reached[i])
    if unreachable:
        msg = "leader cannot reach agents: " + ", ".join(str(i) for i in unreachable)
    else:
        msg = "every follower is reachable from the leader"
    return ValidationReport(not unreachable, unreachable, msg)


def effective_weights(
    spec: GraphSpec, faults: FaultProfile | None, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Faulted adjacency and pinning weights at time ``t``.

    Zero nominal weights stay exactly zero; faulted weights keep the nominal sign.
    """
    adj = spec.adjacency.copy()
    pin = spec.pinning.copy()
    if faults is not None:
        for (i, j) in faults.edge_faults:
            adj[i, j] += faults.theta_edge(i, j, t)
        for i in faults.pin_faults:
            pin[i] += faults.theta_pin(i, t)
    return adj, pin


def laplacian_pinned(adjacency: np.ndarray, pinning: np.ndarray) -> np.ndarray:
    """In-degree Laplacian of the follower graph plus the pinning diagonal."""
    adjacency = np.asarray(adjacency, dtype=float)
    pinning = np.asarray(pinning, dtype=float)
    lap = np.diag(adjacency.sum(axis=1)) - adjacency
    return lap + np.diag(pinning)


def p_matrix(l_b: np.ndarray, construction: str = "reciprocal") -> np.ndarray:
    """Diagonal of the positive weighting matrix built from ``L_B``.

    ``reciprocal`` (default) returns ``p_i = 1 / q_i`` with ``q = L_B^{-1} 1``;
    it makes ``q_matrix`` positive definite on both bundled example graphs but
    not on every reachable directed graph (weakly pinned chains with strong
    downstream edges break it). ``literal`` returns ``p = q`` itself; it can
    make ``q_matrix`` singular even on the first example graph. ``two_sided``
    returns ``p_i = v_i / q_i`` with ``v = L_B^{-T} 1``, the diagonal-stability
    construction for nonsingular M-matrices, which is positive definite on
    every reachable graph.
    """
    if construction not in ("reciprocal", "literal", "two_sided"):
        raise ConfigurationError(f"unknown P construction {construction!r}")
    l_b = np.asarray(l_b, dtype=float)
    try:
        q = np.linalg.solve(l_b, np.ones(l_b.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise TopologyError(
            "pinned Laplacian is singular; the leader-reachability condition "
            "(every follower on a directed path from the leader) does not hold"
        ) from exc
    if np.any(q <= 0):
        raise TopologyError(
            "L_B^{-1} 1 has nonpositive entries; the leader-reachability "
            "condition does not hold"
        )
    if construction == "literal":
        return q
    if construction == "two_sided":
        v = np.linalg.solve(l_b.T, np.ones(l_b.shape[0]))
        if np.any(v <= 0):
            raise TopologyError(
                "L_B^{-T} 1 has nonpositive entries; the leader-reachability "
                "condition does not hold"
            )
        return v / q
    return 1.0 / q


def q_matrix(l_b: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Symmetric form ``diag(p) L_B + L_B^T diag(p)``."""
    pm = np.diag(np.asarray(p, dtype=float))
    l_b = np.asarray(l_b, dtype=float)
    return pm @ l_b + l_b.T @ pm


@dataclass(frozen=True)
class GraphDiagnostics:
    """Numerical gain-condition report over a set of sample times.

    ``kappa5`` needs a bound on the leader-dynamics estimation error, which is
    not known a priori; it stays ``None`` (and is excluded from ``kappa_star``)
    unless the caller supplies one.
    """

    lb_min_eig_real: float
    lb_min_singular: float
    p_vec: np.ndarray
    q_min_eig: float
    kappa0: float
    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    kappa5: float | None
    kappa_star: float
    condition_theorem1_holds: bool
    notes: tuple[str, ...] = ()

    def as_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("lb_min_eig_real", repr(self.lb_min_eig_real)),
            ("lb_min_singular", repr(self.lb_min_singular)),
            ("p_vec", " ".join(repr(v) for v in self.p_vec)),
            ("q_min_eig", repr(self.q_min_eig)),
            ("kappa0", repr(self.kappa0)),
            ("kappa1", repr(self.kappa1)),
            ("kappa2", repr(self.kappa2)),
            ("kappa3", repr(self.kappa3)),
            ("kappa4", repr(self.kappa4)),
            ("kappa5", "not evaluated" if self.kappa5 is None else repr(self.kappa5)),
            ("kappa_star", repr(self.kappa_star)),
            ("condition_theorem1_holds", str(self.condition_theorem1_holds)),
        ]
        for k, note in enumerate(self.notes):
            rows.append((f"note_{k}", note))
        return rows


def _sym_max_eig(mat: np.ndarray) -> float:
    return float(np.max(np.real(np.linalg.eigvals(mat))))


def gain_condition_report(
    spec: GraphSpec,
    faults: FaultProfile | None,
    leader_s0: np.ndarray,
    c_xi: np.ndarray,
    sample_times: np.ndarray,
    construction: str = "reciprocal",
    fd_step: float | None = None,
    s_tilde_bound: float | None = None,
) -> GraphDiagnostics:
    """Evaluate the observer gain condition numerically on sampled times.

    The curvature constants are taken as extrema over ``sample_times``; the
    rates of change of the weighting vector and of ``L_B`` come from central
    finite differences with step ``fd_step`` (default: a tenth of the fault
    hold period), because the faulted weights are defined pointwise. Samples
    near hold-interval boundaries see the held random factor jump, so the
    difference quotients there overestimate the true in-interval rates.
    """
    c_xi = np.atleast_1d(np.asarray(c_xi, dtype=float))
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size == 0:
        raise ConfigurationError("sample_times must be nonempty")
    hold = faults.hold_period if faults is not None else 0.2
    h = fd_step if fd_step is not None else hold / 10.0

    notes: list[str] = []
    min_eig_real = math.inf
    min_sing = math.inf
    kappa0 = math.inf
    kappa1 = 0.0
    kappa2 = 0.0
    kappa3 = 0.0
    kappa4 = 0.0
    p_first: np.ndarray | None = None

    s0_gram_max = _sym_max_eig(leader_s0.T @ leader_s0) if leader_s0.size else 0.0

    for t in sample_times:
        l_b = laplacian_pinned(*effective_weights(spec, faults, t))
        eigs = np.linalg.eigvals(l_b)
        min_eig_real = min(min_eig_real, float(np.min(np.real(eigs))))
        min_sing = min(min_sing, float(np.min(np.linalg.svd(l_b, compute_uv=False))))
        p = p_matrix(l_b, construction)
        if p_first is None:
            p_first = p
        q = q_matrix(l_b, p)
        kappa0 = min(kappa0, float(np.min(np.linalg.eigvalsh(q))))
        kappa1 = max(kappa1, float(np.max(p**2)))

        t_lo = max(t - h, 0.0)
        l_lo = laplacian_pinned(*effective_weights(spec, faults, t_lo))
        l_hi = laplacian_pinned(*effective_weights(spec, faults, t + h))
        dt = (t + h) - t_lo
        l_dot = (l_hi - l_lo) / dt
        p_dot = (p_matrix(l_hi, construction) - p_matrix(l_lo, construction)) / dt
        kappa2 = max(kappa2, float(np.max(p_dot**2)))
        p2 = np.diag(p**2)
        k3_mat = p2 @ np.linalg.inv(l_b).T @ l_dot.T @ l_dot @ l_b
        kappa3 = max(kappa3, _sym_max_eig(k3_mat))
        kappa4 = max(kappa4, float(np.max(p**2)) * s0_gram_max)

    kappa5 = None if s_tilde_bound is None else kappa1 * float(s_tilde_bound) ** 2
    if kappa0 <= 0:
        notes.append("Q(t) is not positive definite on the sampled times")
        condition = False
        kappa_star = math.inf
    else:
        kappa_star = (
            5 * kappa2 / (4 * kappa0) + 5 * kappa3 / kappa0 + 5 * kappa4 / kappa0
        )
        if kappa5 is not None:
            kappa_star += 5 * kappa5 / kappa0
        else:
            notes.append("kappa5 not evaluated (no estimation-error bound supplied)")
        condition = bool(np.min(c_xi) > 1.0 + kappa_star / kappa0)

    return GraphDiagnostics(
        lb_min_eig_real=min_eig_real,
        lb_min_singular=min_sing,
        p_vec=p_first,
        q_min_eig=kappa0,
        kappa0=kappa0,
        kappa1=kappa1,
        kappa2=kappa2,
        kappa3=kappa3,
        kappa4=kappa4,
        kappa5=kappa5,
        kappa_star=kappa_star,
        condition_theorem1_holds=condition,
        notes=tuple(notes),
    )
