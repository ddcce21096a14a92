"""Closed-loop simulation: monolithic continuous-time integration of plant,
leader, and observers, with controller updates at the control instants and a
structured log of everything the acceptance checks and reports need.

The plant, the leader, and every agent's observer form one stacked ODE that a
fixed-step RK4 scheme advances between control instants; controls are sampled
and held. By default neighbor estimates are exact at every integrator stage
(monolithic coupling); an optional snapshot mode freezes transmitted data over
each substep instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConfigurationError,
    EngineError,
    NumericDomainError,
    SingularGainError,
    TopologyError,
)
from .graph import (
    FaultProfile,
    GraphSpec,
    effective_weights,
    gain_condition_report,
    validate_topology,
)
from .models import FollowerModel, FormationSpec, LeaderModel, follower_derivative
from .mpc import AgentController, MpcSetup, SlidingParams
from .observers import ObserverState, stacked_local_errors

__all__ = [
    "Scenario",
    "SimLog",
    "Theorem2Report",
    "run",
    "formation_error",
    "theorem2_report",
]


@dataclass
class Scenario:
    """Everything needed for one closed-loop run."""

    name: str
    graph: GraphSpec
    faults: FaultProfile
    leader: LeaderModel
    followers: tuple[FollowerModel, ...]
    formation: FormationSpec
    x0: np.ndarray
    c_xi: np.ndarray
    sliding: tuple[SlidingParams, ...]
    setup: tuple[MpcSetup, ...]
    t_final: float
    substeps: int = 20
    seed: int = 0
    snapshot_mode: bool = False
    p_construction: str = "reciprocal"
    predict_true_leader: bool = False
    observer_init: tuple[ObserverState, ...] | None = None
    theorem2: dict | None = None

    @property
    def n_agents(self) -> int:
        return self.graph.n_agents

    @property
    def delta(self) -> float:
        return self.setup[0].period

    @property
    def h(self) -> float:
        return self.delta / self.substeps

    def validate(self) -> None:
        m = self.n_agents
        if len(self.followers) != m:
            raise ConfigurationError("follower count does not match the graph")
        d = self.leader.dim
        for i, mdl in enumerate(self.followers):
            if mdl.dim != d:
                raise ConfigurationError(f"follower {i} dimension differs from leader")
        if self.formation.displacements.shape != (m, d):
            raise ConfigurationError("formation displacements have wrong shape")
        if np.asarray(self.x0).shape != (m, d):
            raise ConfigurationError("initial states have wrong shape")
        if np.asarray(self.c_xi).shape != (m,):
            raise ConfigurationError("c_xi must have one gain per agent")
        if np.any(np.asarray(self.c_xi) <= 0):
            raise ConfigurationError("c_xi gains must be positive")
        if len(self.sliding) != m or len(self.setup) != m:
            raise ConfigurationError("need sliding params and an MPC setup per agent")
        periods = {s.period for s in self.setup}
        if len(periods) != 1:
            raise ConfigurationError("all agents must share one control period")
        n_ins = {mdl.n_in for mdl in self.followers}
        if len(n_ins) != 1:
            raise ConfigurationError("all followers must share one input dimension")
        if self.substeps < 1:
            raise ConfigurationError("substeps must be >= 1")
        if self.t_final < 0:
            raise ConfigurationError("t_final must be nonnegative")
        n_steps = self.t_final / self.h
        if abs(n_steps - round(n_steps)) > 1e-6:
            raise ConfigurationError("t_final must be a multiple of the substep")
        self.faults.validate_against(self.graph)
        report = validate_topology(self.graph)
        if not report.reachable:
            raise TopologyError(report.message)
        if self.observer_init is not None and len(self.observer_init) != m:
            raise ConfigurationError("observer_init must have one entry per agent")


class _StateLayout:
    """Offsets of the stacked state vector: followers, leader, observers, gains."""

    def __init__(self, m: int, d: int):
        self.m, self.d = m, d
        sizes = [m * d, d, m * d, m * d * d, m * d, m, m]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.total = int(self.offsets[-1])

    def views(self, y: np.ndarray):
        m, d, o = self.m, self.d, self.offsets
        return (
            y[o[0] : o[1]].reshape(m, d),
            y[o[1] : o[2]],
            y[o[2] : o[3]].reshape(m, d),
            y[o[3] : o[4]].reshape(m, d, d),
            y[o[4] : o[5]].reshape(m, d),
            y[o[5] : o[6]],
            y[o[6] : o[7]],
        )

    def pack(self, x, xi0, xi_hat, s_hat, delta_hat, c_s, c_delta) -> np.ndarray:
        return np.concatenate(
            [
                np.ravel(x),
                np.ravel(xi0),
                np.ravel(xi_hat),
                np.ravel(s_hat),
                np.ravel(delta_hat),
                np.ravel(c_s),
                np.ravel(c_delta),
            ]
        )


@dataclass
class SimLog:
    """Time-indexed record of a run plus per-solve telemetry and diagnostics.

    State-rate arrays have one row per integration substep; telemetry has one
    entry per agent per control instant. ``write_csv`` serializes the three
    files with full round-trip float precision so identical runs produce
    byte-identical output.
    """

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    xi0: np.ndarray
    xi_hat: np.ndarray
    s_hat_obs: np.ndarray
    delta_hat: np.ndarray
    c_s: np.ndarray
    c_delta: np.ndarray
    err_xi: np.ndarray
    err_s: np.ndarray
    err_delta: np.ndarray
    leps_xi: np.ndarray
    leps_s: np.ndarray
    leps_delta: np.ndarray
    track_est: np.ndarray
    track_true: np.ndarray
    s_norm: np.ndarray
    v_total: np.ndarray
    fault_traces: dict[str, np.ndarray]
    telemetry: list[dict]
    diagnostics: list[tuple[str, str]]
    meta: dict
    error: str | None = None

    @property
    def track_true_stacked(self) -> np.ndarray:
        return np.linalg.norm(self.track_true, axis=1)

    @property
    def rho_hat(self) -> float:
        """Plateau estimate: max surface energy over the final fifth of the run."""
        tail = max(1, int(0.2 * self.v_total.shape[0]))
        return float(np.max(self.v_total[-tail:]))

    def summary(self) -> dict:
        tele_rows = self.telemetry
        violations = sum(
            1
            for row in tele_rows
            if row["constraint_lhs"] > row["constraint_rhs"] + 1e-9
        )
        fallback_steps = sum(1 for row in tele_rows if row["fallback_used"])
        worse = sum(
            1 for row in tele_rows if row["cost"] > row["fallback_cost"] + 1e-12
        )
        return {
            "name": self.meta.get("name"),
            "seed": self.meta.get("seed"),
            "t_final": self.meta.get("t_final"),
            "rows": int(self.t.shape[0]),
            "constraint_violations": violations,
            "fallback_steps": fallback_steps,
            "solver_cost_above_fallback": worse,
            "max_abs_u": [float(v) for v in np.max(np.abs(self.u), axis=(0, 1))],
            "final_track_true": [float(v) for v in self.track_true[-1]],
            "final_track_est": [float(v) for v in self.track_est[-1]],
            "final_err_xi": [float(v) for v in self.err_xi[-1]],
            "final_err_s": [float(v) for v in self.err_s[-1]],
            "final_err_delta": [float(v) for v in self.err_delta[-1]],
            "rho_hat": self.rho_hat,
            "v_initial": float(self.v_total[0]),
            "error": self.error,
        }

    def _states_header_and_rows(self):
        m = self.x.shape[1]
        d = self.x.shape[2]
        n_in = self.u.shape[2]
        cols = ["t"]
        for i in range(m):
            cols += [f"x_{i+1}_{k+1}" for k in range(d)]
        for i in range(m):
            cols += [f"u_{i+1}_{k+1}" for k in range(n_in)]
        cols += [f"xi0_{k+1}" for k in range(d)]
        for i in range(m):
            cols += [f"xi_hat_{i+1}_{k+1}" for k in range(d)]
        for label in ("err_xi", "err_s", "err_delta", "leps_xi", "leps_s",
                      "leps_delta", "track_est", "track_true", "s_norm",
                      "c_s", "c_delta"):
            cols += [f"{label}_{i+1}" for i in range(m)]
        cols += ["track_true_all", "v_total"]
        cols += list(self.fault_traces.keys())
        blocks = [
            self.t[:, None],
            self.x.reshape(self.t.shape[0], -1),
            self.u.reshape(self.t.shape[0], -1),
            self.xi0,
            self.xi_hat.reshape(self.t.shape[0], -1),
            self.err_xi, self.err_s, self.err_delta,
            self.leps_xi, self.leps_s, self.leps_delta,
            self.track_est, self.track_true, self.s_norm,
            self.c_s, self.c_delta,
            self.track_true_stacked[:, None],
            self.v_total[:, None],
        ]
        blocks += [trace[:, None] for trace in self.fault_traces.values()]
        data = np.hstack(blocks)
        return cols, data

    def write_csv(self, out_dir) -> dict:
        """Write states.csv, telemetry.csv, diagnostics.csv; returns the paths."""
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}

        cols, data = self._states_header_and_rows()
        states_path = out / "states.csv"
        with states_path.open("w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        paths["states"] = states_path

        tele_path = out / "telemetry.csv"
        tele_cols = [
            "t", "agent", "iterations", "cost", "fallback_cost",
            "fallback_used", "constraint_lhs", "constraint_rhs", "slack",
        ]
        with tele_path.open("w") as fh:
            fh.write(",".join(tele_cols) + "\n")
            for row in self.telemetry:
                slack = row["constraint_lhs"] - row["constraint_rhs"]
                fh.write(
                    ",".join(
                        [
                            repr(float(row["t"])),
                            str(row["agent"]),
                            str(row["iterations"]),
                            repr(float(row["cost"])),
                            repr(float(row["fallback_cost"])),
                            str(int(row["fallback_used"])),
                            repr(float(row["constraint_lhs"])),
                            repr(float(row["constraint_rhs"])),
                            repr(float(slack)),
                        ]
                    )
                    + "\n"
                )
        paths["telemetry"] = tele_path

        diag_path = out / "diagnostics.csv"
        with diag_path.open("w") as fh:
            fh.write("key,value\n")
            for key, value in self.diagnostics:
                fh.write(f"{key},{value}\n")
        paths["diagnostics"] = diag_path
        return paths


def formation_error(
    x: np.ndarray, xi0: np.ndarray, formation: FormationSpec
) -> tuple[np.ndarray, float]:
    """Per-agent and stacked tracking error against the true leader.

    Ground truth is simulator-side only; agents never see it unless pinned.
    """
    diff = np.asarray(x, float) - np.asarray(xi0, float)[None, :] - formation.displacements
    per_agent = np.linalg.norm(diff, axis=1)
    return per_agent, float(np.linalg.norm(per_agent))


@dataclass(frozen=True)
class Theorem2Report:
    """Sampled-data gain condition check from user-supplied surrogate constants."""

    lhs: float | None
    holds: bool | None
    rho_floor: float
    rho_s: float | None
    rho_hat: float | None = None


def theorem2_report(
    c_gains: np.ndarray,
    delta: float,
    kappa1: float,
    kappa2: float,
    rho_s: float | None = None,
    v_trace: np.ndarray | None = None,
) -> Theorem2Report:
    """Evaluate ``-2 rho_s min(c) + (kappa1 + max(c) kappa2) delta <= 0``.

    ``kappa1``/``kappa2`` are Lipschitz-style surrogates the caller supplies;
    the report also gives the smallest plateau radius the inequality allows.
    """
    c = np.atleast_1d(np.asarray(c_gains, dtype=float))
    cmin, cmax = float(np.min(c)), float(np.max(c))
    if cmin <= 0:
        raise ConfigurationError("control gains must be positive")
    rho_floor = (kappa1 + cmax * kappa2) * delta / (2.0 * cmin)
    lhs = None
    holds = None
    if rho_s is not None:
        lhs = -2.0 * rho_s * cmin + (kappa1 + cmax * kappa2) * delta
        holds = bool(lhs <= 0)
    rho_hat = None
    if v_trace is not None and len(v_trace):
        tail = max(1, int(0.2 * len(v_trace)))
        rho_hat = float(np.max(np.asarray(v_trace)[-tail:]))
    return Theorem2Report(lhs, holds, rho_floor, rho_s, rho_hat)


def _initial_observers(scenario: Scenario) -> tuple[np.ndarray, ...]:
    m, d = scenario.n_agents, scenario.leader.dim
    if scenario.observer_init is None:
        return (
            np.zeros((m, d)),
            np.zeros((m, d, d)),
            np.zeros((m, d)),
            np.ones(m),
            np.ones(m),
        )
    xi = np.stack([st.xi_hat for st in scenario.observer_init])
    s = np.stack([st.s_hat for st in scenario.observer_init])
    delta = np.stack([st.delta_hat for st in scenario.observer_init])
    c_s = np.array([st.c_s for st in scenario.observer_init])
    c_d = np.array([st.c_delta for st in scenario.observer_init])
    return xi, s, delta, c_s, c_d


def run(scenario: Scenario, diagnostics_times: np.ndarray | None = None) -> SimLog:
    """Execute the closed loop and return the filled log.

    Raises :class:`EngineError` (carrying the partial log) if a dynamics or
    solver evaluation fails mid-run.
    """
    scenario.validate()
    m = scenario.n_agents
    d = scenario.leader.dim
    n_in = scenario.followers[0].n_in
    delta = scenario.delta
    h = scenario.h
    substeps = scenario.substeps
    n_steps = int(round(scenario.t_final / h))
    rows = n_steps + 1

    layout = _StateLayout(m, d)
    xi_hat0, s_hat0, delta_hat0, c_s0, c_d0 = _initial_observers(scenario)
    y = layout.pack(
        np.asarray(scenario.x0, float),
        scenario.leader.xi0,
        xi_hat0,
        s_hat0,
        delta_hat0,
        c_s0,
        c_d0,
    )

    controllers = [
        AgentController(scenario.followers[i], scenario.sliding[i], scenario.setup[i])
        for i in range(m)
    ]

    graph = scenario.graph
    faults = scenario.faults
    leader = scenario.leader
    displacements = scenario.formation.displacements
    c_xi = np.asarray(scenario.c_xi, dtype=float)
    s0 = leader.s0
    u_current = np.zeros((m, n_in))

    def rhs(t: float, state: np.ndarray, frozen=None) -> np.ndarray:
        x, xi0, xi_h, s_h, d_h, c_s, c_d = layout.views(state)
        adj_f, pin_f = effective_weights(graph, faults, t)
        if frozen is None:
            eps_xi, eps_s, eps_d = stacked_local_errors(
                adj_f, pin_f, xi_h, s_h, d_h, xi0, s0, displacements
            )
        else:
            fx, fxi0, fxh, fsh, fdh = frozen
            wsum = adj_f.sum(axis=1) + pin_f
            eps_xi = (
                wsum[:, None] * xi_h
                - adj_f @ fxh
                - pin_f[:, None] * fxi0[None, :]
            )
            eps_s = (
                wsum[:, None, None] * (s_h - s0[None])
                - np.einsum("ij,jkl->ikl", adj_f, fsh - s0[None])
            )
            eps_d = wsum[:, None] * (d_h - displacements) - adj_f @ (fdh - displacements)
        dc_s = (eps_s**2).sum(axis=(1, 2))
        dc_d = (eps_d**2).sum(axis=1)
        d_xi_h = np.einsum("ikl,il->ik", s_h, xi_h) - c_xi[:, None] * eps_xi
        d_s_h = -(c_s + dc_s)[:, None, None] * eps_s
        d_d_h = -(c_d + dc_d)[:, None] * eps_d
        dx = np.empty_like(x)
        for i in range(m):
            dx[i] = follower_derivative(scenario.followers[i], x[i], u_current[i])
        d_xi0 = s0 @ xi0
        return layout.pack(dx, d_xi0, d_xi_h, d_s_h, d_d_h, dc_s, dc_d)

    t_grid = np.empty(rows)
    x_log = np.empty((rows, m, d))
    u_log = np.empty((rows, m, n_in))
    xi0_log = np.empty((rows, d))
    xi_hat_log = np.empty((rows, m, d))
    s_hat_log = np.empty((rows, m, d, d))
    delta_hat_log = np.empty((rows, m, d))
    c_s_log = np.empty((rows, m))
    c_d_log = np.empty((rows, m))
    telemetry: list[dict] = []

    error_msg = None
    filled = 0
    try:
        for step in range(rows):
            t = step * h
            x, xi0, xi_h, s_h, d_h, c_s, c_d = layout.views(y)
            if step < n_steps and step % substeps == 0:
                for i in range(m):
                    xi_ref = xi0.copy() if scenario.predict_true_leader else xi_h[i].copy()
                    try:
                        u_i, info = controllers[i].step(
                            x[i].copy(), xi_ref, s_h[i].copy(), d_h[i].copy()
                        )
                    except (NumericDomainError, SingularGainError) as exc:
                        raise EngineError(
                            f"controller failed at t={t:.4f} for agent {i}: {exc}"
                        ) from exc
                    u_current[i] = u_i
                    telemetry.append(
                        {
                            "t": t,
                            "agent": i,
                            "iterations": info.iterations,
                            "cost": info.cost,
                            "fallback_cost": info.fallback_cost,
                            "fallback_used": info.fallback_used,
                            "constraint_lhs": info.constraint_lhs,
                            "constraint_rhs": info.constraint_rhs,
                        }
                    )
            t_grid[step] = t
            x_log[step] = x
            u_log[step] = u_current
            xi0_log[step] = xi0
            xi_hat_log[step] = xi_h
            s_hat_log[step] = s_h
            delta_hat_log[step] = d_h
            c_s_log[step] = c_s
            c_d_log[step] = c_d
            filled = step + 1
            if step < n_steps:
                if scenario.snapshot_mode:
                    frozen = (x.copy(), xi0.copy(), xi_h.copy(), s_h.copy(), d_h.copy())
                    y = _rk4(lambda tt, yy: rhs(tt, yy, frozen), t, y, h)
                else:
                    y = _rk4(rhs, t, y, h)
    except (EngineError, NumericDomainError) as exc:
        error_msg = str(exc)
        rows = filled
        t_grid = t_grid[:rows]
        x_log, u_log = x_log[:rows], u_log[:rows]
        xi0_log, xi_hat_log = xi0_log[:rows], xi_hat_log[:rows]
        s_hat_log, delta_hat_log = s_hat_log[:rows], delta_hat_log[:rows]
        c_s_log, c_d_log = c_s_log[:rows], c_d_log[:rows]

    log = _finalize_log(
        scenario,
        t_grid,
        x_log,
        u_log,
        xi0_log,
        xi_hat_log,
        s_hat_log,
        delta_hat_log,
        c_s_log,
        c_d_log,
        telemetry,
        diagnostics_times,
        error_msg,
    )
    if error_msg is not None:
        raise EngineError(error_msg, partial_log=log)
    return log


def _rk4(fn, t, y, h):
    k1 = fn(t, y)
    k2 = fn(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fn(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fn(t + h, y + h * k3)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericDomainError("stacked integration produced non-finite values", t=t)
    return out


def _finalize_log(
    scenario,
    t_grid,
    x_log,
    u_log,
    xi0_log,
    xi_hat_log,
    s_hat_log,
    delta_hat_log,
    c_s_log,
    c_d_log,
    telemetry,
    diagnostics_times,
    error_msg,
):
    rows = t_grid.shape[0]
    m = scenario.n_agents
    d = scenario.leader.dim
    displacements = scenario.formation.displacements
    s0 = scenario.leader.s0

    err_xi = np.linalg.norm(xi_hat_log - xi0_log[:, None, :], axis=2)
    err_s = np.linalg.norm((s_hat_log - s0).reshape(rows, m, d * d), axis=2)
    err_delta = np.linalg.norm(delta_hat_log - displacements[None], axis=2)
    track_est = np.linalg.norm(x_log - xi_hat_log - delta_hat_log, axis=2)
    track_true = np.linalg.norm(
        x_log - xi0_log[:, None, :] - displacements[None], axis=2
    )

    s_norm = np.empty((rows, m))
    for i in range(m):
        params = scenario.sliding[i]
        r = params.lam.size + 1
        n = d // r
        e = (x_log[:, i] - xi_hat_log[:, i] - delta_hat_log[:, i]).reshape(rows, r, n)
        s = e[:, r - 1, :].copy()
        for l in range(r - 1):
            s += params.lam[l] * e[:, l, :]
        s_norm[:, i] = np.linalg.norm(s, axis=1)
    v_total = 0.5 * (s_norm**2).sum(axis=1)

    leps_xi = np.empty((rows, m))
    leps_s = np.empty((rows, m))
    leps_delta = np.empty((rows, m))
    for k in range(rows):
        adj_f, pin_f = effective_weights(scenario.graph, scenario.faults, t_grid[k])
        e_xi, e_s, e_d = stacked_local_errors(
            adj_f,
            pin_f,
            xi_hat_log[k],
            s_hat_log[k],
            delta_hat_log[k],
            xi0_log[k],
            s0,
            displacements,
        )
        leps_xi[k] = np.linalg.norm(e_xi, axis=1)
        leps_s[k] = np.linalg.norm(e_s.reshape(m, d * d), axis=1)
        leps_delta[k] = np.linalg.norm(e_d, axis=1)

    fault_traces = {}
    for (i, j) in sorted(scenario.faults.edge_faults):
        trace = np.array(
            [scenario.faults.theta_edge(i, j, t) for t in t_grid]
        )
        fault_traces[f"theta_a_{i+1}_{j+1}"] = trace
    for i in sorted(scenario.faults.pin_faults):
        trace = np.array([scenario.faults.theta_pin(i, t) for t in t_grid])
        fault_traces[f"theta_b_{i+1}"] = trace

    diag_rows: list[tuple[str, str]] = [
        ("scenario", scenario.name),
        ("seed", str(scenario.seed)),
        ("t_final", repr(float(scenario.t_final))),
        ("period", repr(float(scenario.delta))),
        ("substep", repr(float(scenario.h))),
        ("p_construction", scenario.p_construction),
        ("snapshot_mode", str(scenario.snapshot_mode)),
    ]
    if diagnostics_times is None:
        horizon = min(scenario.t_final, 20.0) if scenario.t_final > 0 else 2.0
        hold = scenario.faults.hold_period
        diagnostics_times = np.arange(0.5 * hold, horizon, hold)
    try:
        report = gain_condition_report(
            scenario.graph,
            scenario.faults,
            scenario.leader.s0,
            np.asarray(scenario.c_xi, dtype=float),
            diagnostics_times,
            construction=scenario.p_construction,
        )
        diag_rows += report.as_rows()
    except TopologyError as exc:
        diag_rows.append(("gain_condition_error", str(exc)))
    if scenario.theorem2:
        rep = theorem2_report(
            np.array([sp.c for sp in scenario.sliding]),
            scenario.delta,
            scenario.theorem2.get("kappa1", 0.0),
            scenario.theorem2.get("kappa2", 0.0),
            scenario.theorem2.get("rho_s"),
            v_trace=v_total,
        )
        diag_rows += [
            ("theorem2_lhs", "not evaluated" if rep.lhs is None else repr(rep.lhs)),
            ("theorem2_holds", "not evaluated" if rep.holds is None else str(rep.holds)),
            ("theorem2_rho_floor", repr(rep.rho_floor)),
            ("theorem2_rho_hat", "" if rep.rho_hat is None else repr(rep.rho_hat)),
        ]

    meta = {
        "name": scenario.name,
        "seed": scenario.seed,
        "t_final": scenario.t_final,
        "period": scenario.delta,
        "substep": scenario.h,
    }
    return SimLog(
        t=t_grid,
        x=x_log,
        u=u_log,
        xi0=xi0_log,
        xi_hat=xi_hat_log,
        s_hat_obs=s_hat_log,
        delta_hat=delta_hat_log,
        c_s=c_s_log,
        c_delta=c_d_log,
        err_xi=err_xi,
        err_s=err_s,
        err_delta=err_delta,
        leps_xi=leps_xi,
        leps_s=leps_s,
        leps_delta=leps_delta,
        track_est=track_est,
        track_true=track_true,
        s_norm=s_norm,
        v_total=v_total,
        fault_traces=fault_traces,
        telemetry=telemetry,
        diagnostics=diag_rows,
        meta=meta,
        error=error_msg,
    )
