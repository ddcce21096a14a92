"""Per-agent Lyapunov-constrained model predictive control.

The controller minimizes a finite-horizon quadratic cost over a small set of
piecewise-constant input samples, subject to a hard input box and a pointwise
decrease condition on the sliding-surface energy at the current instant. The
decrease condition is linear in the first sample, so it is enforced by exact
projection (box intersected with a half-space); the remaining samples see only
the box. A saturation-based feedback law provides a feasible profile that both
warm-starts and upper-bounds the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, NumericDomainError, SingularGainError
from .models import FollowerModel, follower_derivative

__all__ = [
    "SlidingParams",
    "MpcSetup",
    "ControlProfile",
    "SolveInfo",
    "StateRegion",
    "AgentController",
    "hurwitz_ok",
    "sliding_surface",
    "saturate",
    "constraint_terms",
    "stability_constraint_lhs",
    "fallback_control",
    "fallback_profile",
    "predict",
    "horizon_cost",
    "project_box_halfspace",
    "solve_ocp",
    "receding_horizon_step",
    "autotune_k_s",
    "autotune_chi_lower",
]


def hurwitz_ok(lam) -> bool:
    """Whether z^{r-1} + lam[r-2] z^{r-2} + ... + lam[0] has only stable roots."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.size == 0:
        return True
    poly = np.concatenate([[1.0], lam[::-1]])
    return bool(np.all(np.real(np.roots(poly)) < 0))


@dataclass(frozen=True)
class SlidingParams:
    """Sliding-surface coefficients and the gains of the feasible fallback law.

    ``lam`` holds the r-1 surface coefficients (empty for first-order chains);
    the associated polynomial must be Hurwitz. ``chi_lower`` is the per-channel
    lower bound on the saturation degree, in (0, 1].
    """

    lam: np.ndarray
    c: float
    k_s: float
    chi_lower: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        chi = np.atleast_1d(np.asarray(self.chi_lower, dtype=float))
        if lam.size and np.any(lam <= 0):
            raise ConfigurationError("sliding coefficients must be positive")
        if not hurwitz_ok(lam):
            raise ConfigurationError(
                "sliding coefficients do not form a Hurwitz polynomial"
            )
        if self.c <= 0:
            raise ConfigurationError("decay gain c must be positive")
        if self.k_s <= 0:
            raise ConfigurationError("fallback robustness gain k_s must be positive")
        if np.any(chi <= 0) or np.any(chi > 1):
            raise ConfigurationError("chi_lower entries must lie in (0, 1]")
        lam.setflags(write=False)
        chi.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "chi_lower", chi)


@dataclass(frozen=True)
class MpcSetup:
    """Horizon, weights, and solver options for one agent's controller."""

    horizon: float
    period: float
    q_weight: object
    r_weight: object
    n_samples: int | None = None
    max_iter: int = 30
    tol: float = 1e-6
    fd_step: float = 1e-6
    pred_substeps: int = 5
    dykstra_max_iter: int = 100
    dykstra_tol: float = 1e-10

    def __post_init__(self):
        if self.period <= 0 or self.horizon <= self.period:
            raise ConfigurationError("need 0 < period < horizon")
        n = self.n_samples
        if n is None:
            n = self.horizon / self.period
            if abs(n - round(n)) > 1e-9:
                raise ConfigurationError("horizon must be a multiple of the period")
            n = int(round(n))
        if n < 1:
            raise ConfigurationError("need at least one control sample")
        if abs(self.horizon - n * self.period) > 1e-9:
            raise ConfigurationError("horizon must equal n_samples * period")
        object.__setattr__(self, "n_samples", int(n))
        if self.pred_substeps < 1:
            raise ConfigurationError("pred_substeps must be >= 1")

    def weights(self, n: int, n_in: int) -> tuple[np.ndarray, np.ndarray]:
        qm = _weight_matrix(self.q_weight, n, "Q")
        rm = _weight_matrix(self.r_weight, n_in, "R")
        if np.min(np.linalg.eigvalsh(qm)) < -1e-12:
            raise ConfigurationError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(rm)) <= 0:
            raise ConfigurationError("R must be positive definite")
        return qm, rm


def _weight_matrix(w, dim: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(dim)
    if w.ndim == 1:
        if w.shape[0] != dim:
            raise ConfigurationError(f"{name} diagonal has wrong length")
        return np.diag(w)
    if w.shape != (dim, dim):
        raise ConfigurationError(f"{name} matrix has wrong shape")
    return 0.5 * (w + w.T)


@dataclass(frozen=True)
class ControlProfile:
    """Piecewise-constant input samples, each held for one period."""

    samples: np.ndarray
    period: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ConfigurationError("profile samples must be an (N, n_in) array")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def _segments(vec: np.ndarray, r: int, n: int) -> np.ndarray:
    return vec.reshape(vec.shape[:-1] + (r, n))


def _surface_and_drift(
    model: FollowerModel,
    lam: np.ndarray,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
):
    """Shared arithmetic for the surface, its drift, and the input gain.

    Accepts arbitrary leading batch axes on ``x``/``xi_hat``/``s_hat``.
    """
    r, n = model.r, model.n
    e = _segments(np.asarray(x, float) - xi_hat - delta_hat, r, n)
    s = e[..., r - 1, :].copy()
    for l in range(r - 1):
        s += lam[l] * e[..., l, :]
    xi_rate = np.einsum("...ij,...j->...i", s_hat, xi_hat)
    # drift uses segments l+2 of the frozen estimates, matching the surface rate
    drift = model.f(x) - xi_rate[..., (r - 1) * n :]
    for l in range(r - 1):
        drift += lam[l] * e[..., l + 1, :]
    return s, drift, model.g(x)


def sliding_surface(
    params: SlidingParams,
    x: np.ndarray,
    xi_hat: np.ndarray,
    delta_hat: np.ndarray,
    r: int | None = None,
    n: int | None = None,
) -> np.ndarray:
    """Weighted combination of tracking-error segments; zero on target."""
    lam = params.lam
    x = np.asarray(x, dtype=float)
    if r is None:
        r = lam.size + 1
    if n is None:
        n = x.shape[-1] // r
    e = _segments(x - xi_hat - delta_hat, r, n)
    s = e[..., r - 1, :].copy()
    for l in range(r - 1):
        s += lam[l] * e[..., l, :]
    return s


def saturate(
    v: np.ndarray, u_lo: np.ndarray, u_hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Clamp to the box [-u_lo, u_hi]; also return the per-channel ratio chi.

    ``chi`` is the diagonal of the saturation-degree matrix: the clamped value
    divided by the request, 1 inside the box, and always in (0, 1].
    """
    v = np.asarray(v, dtype=float)
    hi = np.broadcast_to(np.asarray(u_hi, float), v.shape)
    lo = np.broadcast_to(-np.asarray(u_lo, float), v.shape)
    u = np.clip(v, lo, hi)
    above = v >= hi
    below = v <= lo
    chi = np.ones_like(v)
    chi = np.where(above, np.divide(hi, v, out=np.ones_like(v), where=above), chi)
    chi = np.where(below, np.divide(lo, v, out=np.ones_like(v), where=below), chi)
    return u, chi


def constraint_terms(
    model: FollowerModel,
    params: SlidingParams,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
):
    """Surface, drift vector, and input gain at one state: the decrease
    condition reads ``s @ (drift + G u) <= -c ||s||^2``."""
    return _surface_and_drift(model, params.lam, x, xi_hat, s_hat, delta_hat)


def stability_constraint_lhs(
    model: FollowerModel,
    params: SlidingParams,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
    u: np.ndarray,
) -> float:
    """Left-hand side of the pointwise decrease condition; linear in ``u``."""
    s, drift, g = constraint_terms(model, params, x, xi_hat, s_hat, delta_hat)
    return float(s @ (drift + g @ np.asarray(u, dtype=float)))


def _raw_input_for(
    model: FollowerModel, accel: np.ndarray, x: np.ndarray, g: np.ndarray
) -> np.ndarray:
    """Physical input realizing a demanded top-derivative vector (pre-saturation)."""
    if model.accel_to_input is not None:
        return model.accel_to_input(accel, x)
    if np.linalg.cond(g) > 1e12:
        raise SingularGainError("input gain matrix is singular or near-singular")
    return np.linalg.solve(g, accel)


def fallback_control(
    model: FollowerModel,
    params: SlidingParams,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
) -> np.ndarray:
    """Saturation-safe feedback law that satisfies the decrease condition.

    Composes a cancel-and-decay term with a discontinuous robustness term
    (sign of the surface, sgn(0) = 0), maps the demanded top-derivative vector
    to a physical input, and clamps to the box.
    """
    s, drift, g = constraint_terms(model, params, x, xi_hat, s_hat, delta_hat)
    v_a = -params.c * s - drift
    v_d = -(params.k_s / params.chi_lower) * np.sign(s)
    raw = _raw_input_for(model, v_a + v_d, x, g)
    u, _ = saturate(raw, model.u_lo, model.u_hi)
    return u


def predict(
    model: FollowerModel,
    s_hat: np.ndarray,
    x0: np.ndarray,
    xi0: np.ndarray,
    profiles: np.ndarray,
    n_sub: int,
    h_sub: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate follower and estimated leader over the horizon.

    ``profiles`` is ``(N, n_in)`` or batched ``(B, N, n_in)``; each sample is
    held for ``n_sub`` RK4 substeps of length ``h_sub``. Returns the state and
    leader trajectories on the substep grid, shape ``(B, N*n_sub+1, dim)``.
    """
    profiles = np.asarray(profiles, dtype=float)
    single = profiles.ndim == 2
    if single:
        profiles = profiles[None]
    b, n_samples, _ = profiles.shape
    d = model.dim
    n = model.n
    chain = d - n
    x = np.broadcast_to(np.asarray(x0, float), (b, d)).copy()
    xi = np.broadcast_to(np.asarray(xi0, float), (b, d)).copy()
    st = np.asarray(s_hat, dtype=float).T
    k_total = n_samples * n_sub
    xs = np.empty((b, k_total + 1, d))
    xis = np.empty((b, k_total + 1, d))
    xs[:, 0] = x
    xis[:, 0] = xi

    f = model.f
    g_const = model.g_const

    def deriv(state, gu, u):
        out = np.empty_like(state)
        out[..., :chain] = state[..., n:]
        if gu is not None:
            out[..., chain:] = f(state) + gu
        else:
            out[..., chain:] = f(state) + np.einsum(
                "...ij,...j->...i", model.g(state), u
            )
        return out

    k = 0
    for j in range(n_samples):
        u = profiles[:, j, :]
        gu = u @ g_const.T if g_const is not None else None
        for _ in range(n_sub):
            k1x = deriv(x, gu, u)
            k1e = xi @ st
            k2x = deriv(x + 0.5 * h_sub * k1x, gu, u)
            k2e = (xi + 0.5 * h_sub * k1e) @ st
            k3x = deriv(x + 0.5 * h_sub * k2x, gu, u)
            k3e = (xi + 0.5 * h_sub * k2e) @ st
            k4x = deriv(x + h_sub * k3x, gu, u)
            k4e = (xi + h_sub * k3e) @ st
            x = x + (h_sub / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            xi = xi + (h_sub / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
            k += 1
            xs[:, k] = x
            xis[:, k] = xi
    if not (np.isfinite(xs).all() and np.isfinite(xis).all()):
        raise NumericDomainError("prediction produced non-finite values")
    if single:
        return xs[0], xis[0]
    return xs, xis


def horizon_cost(
    params: SlidingParams,
    delta_hat: np.ndarray,
    q_mat: np.ndarray,
    r_mat: np.ndarray,
    x_nodes: np.ndarray,
    xi_nodes: np.ndarray,
    profiles: np.ndarray,
    n_sub: int,
    h_sub: float,
) -> np.ndarray:
    """Quadrature of the weighted surface and input energies over the horizon.

    The surface term uses the composite trapezoid rule on the substep grid;
    the input term is integrated exactly (the profile is piecewise constant).
    The displacement estimate is frozen at the solve instant.
    """
    single = x_nodes.ndim == 2
    if single:
        x_nodes = x_nodes[None]
        xi_nodes = xi_nodes[None]
        profiles = profiles[None]
    n = q_mat.shape[0]
    r = x_nodes.shape[-1] // n
    lam = params.lam
    e = _segments(x_nodes - xi_nodes - delta_hat, r, n)
    s = e[..., r - 1, :].copy()
    for l in range(r - 1):
        s += lam[l] * e[..., l, :]
    sq = np.einsum("bki,ij,bkj->bk", s, q_mat, s)
    k1 = sq.shape[1]
    w = np.full(k1, h_sub)
    w[0] = w[-1] = 0.5 * h_sub
    s_int = sq @ w
    u_quad = np.einsum("bjn,nm,bjm->b", profiles, r_mat, profiles) * (n_sub * h_sub)
    total = s_int + u_quad
    return total[0] if single else total


def fallback_profile(
    model: FollowerModel,
    params: SlidingParams,
    setup: MpcSetup,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
) -> ControlProfile:
    """Fallback law sampled along its own predicted closed-loop trajectory."""
    n_sub = setup.pred_substeps
    h_sub = setup.period / n_sub
    xk = np.asarray(x, dtype=float).copy()
    xik = np.asarray(xi_hat, dtype=float).copy()
    samples = np.empty((setup.n_samples, model.n_in))
    for j in range(setup.n_samples):
        u = fallback_control(model, params, xk, xik, s_hat, delta_hat)
        samples[j] = u
        xs, xis = predict(model, s_hat, xk, xik, u[None, None, :], n_sub, h_sub)
        xk = xs[0, -1]
        xik = xis[0, -1]
    return ControlProfile(samples, setup.period)


def _project_halfspace(z: np.ndarray, a: np.ndarray, rhs: float, a_norm2: float) -> np.ndarray:
    gap = float(a @ z) - rhs
    if gap <= 0:
        return z
    return z - (gap / a_norm2) * a


def project_box_halfspace(
    u: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    a: np.ndarray,
    rhs: float,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> np.ndarray:
    """Dykstra alternating projection onto box intersected with a half-space.

    Returns a point satisfying the box exactly; if the half-space can be met
    inside the box, the result satisfies it up to a one-dimensional polish.
    """
    a = np.asarray(a, dtype=float)
    a_norm2 = float(a @ a)
    x = np.clip(np.asarray(u, dtype=float), lo, hi)
    if a_norm2 <= 1e-30 or float(a @ x) <= rhs:
        return x
    box_min = float(np.minimum(a * lo, a * hi).sum())
    if box_min > rhs:
        # empty intersection: return the box point closest to the half-space
        return np.where(a > 0, lo, np.where(a < 0, hi, x))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        y = _project_halfspace(x + p, a, rhs, a_norm2)
        p = x + p - y
        x_new = np.clip(y + q, lo, hi)
        q = y + q - x_new
        if np.max(np.abs(x_new - x)) < tol and float(a @ x_new) <= rhs + tol:
            x = x_new
            break
        x = x_new
    x = np.clip(x, lo, hi)
    if float(a @ x) > rhs:
        x = _halfspace_polish(x, lo, hi, a, rhs)
    return x


def _halfspace_polish(x, lo, hi, a, rhs):
    """Exact one-dimensional correction along -a, staying inside the box."""

    def gap(mu):
        return float(a @ np.clip(x - mu * a, lo, hi)) - rhs

    if gap(0.0) <= 0:
        return x
    mu_hi = 1.0
    for _ in range(80):
        if gap(mu_hi) <= 0:
            break
        mu_hi *= 2.0
    else:
        # half-space unreachable inside the box; caller will fall back
        return np.clip(x - mu_hi * a, lo, hi)
    mu_lo = 0.0
    for _ in range(100):
        mid = 0.5 * (mu_lo + mu_hi)
        if gap(mid) <= 0:
            mu_hi = mid
        else:
            mu_lo = mid
    return np.clip(x - mu_hi * a, lo, hi)


@dataclass(frozen=True)
class SolveInfo:
    """Per-solve telemetry recorded in the run log."""

    iterations: int
    cost: float
    fallback_cost: float
    fallback_used: bool
    constraint_lhs: float
    constraint_rhs: float


def _fd_gradient(cost_fn: Callable, prof: np.ndarray, fd_step: float) -> np.ndarray:
    flat = prof.ravel()
    m = flat.size
    steps = fd_step * (1.0 + np.abs(flat))
    batch = np.repeat(flat[None, :], 2 * m, axis=0)
    idx = np.arange(m)
    batch[2 * idx, idx] += steps
    batch[2 * idx + 1, idx] -= steps
    vals = cost_fn(batch.reshape((2 * m,) + prof.shape))
    return ((vals[0::2] - vals[1::2]) / (2.0 * steps)).reshape(prof.shape)


def solve_ocp(
    model: FollowerModel,
    params: SlidingParams,
    setup: MpcSetup,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
    warm_start: ControlProfile | None = None,
) -> tuple[ControlProfile, SolveInfo]:
    """Projected-gradient solve of the horizon problem at one control instant.

    Gradients come from central finite differences on the quadrature cost; the
    first sample is projected onto box-and-half-space, the rest onto the box.
    The warm start is the previous solution shifted by one period with the last
    slot taken from the fallback profile. If the optimized profile violates the
    box or the decrease condition, or fails to beat the fallback's cost, the
    fallback profile is returned instead.
    """
    n_sub = setup.pred_substeps
    h_sub = setup.period / n_sub
    q_mat, r_mat = setup.weights(model.n, model.n_in)
    x = np.asarray(x, dtype=float)
    xi_hat = np.asarray(xi_hat, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    delta_hat = np.asarray(delta_hat, dtype=float)

    s, drift, g = constraint_terms(model, params, x, xi_hat, s_hat, delta_hat)
    a = g.T @ s
    rhs = -params.c * float(s @ s) - float(s @ drift)
    lo = -model.u_lo
    hi = model.u_hi

    def proj(prof: np.ndarray) -> np.ndarray:
        out = np.clip(prof, lo, hi)
        out[0] = project_box_halfspace(
            prof[0], lo, hi, a, rhs, setup.dykstra_max_iter, setup.dykstra_tol
        )
        return out

    def costs(batch: np.ndarray) -> np.ndarray:
        xs, xis = predict(model, s_hat, x, xi_hat, batch, n_sub, h_sub)
        return np.atleast_1d(
            horizon_cost(params, delta_hat, q_mat, r_mat, xs, xis, batch, n_sub, h_sub)
        )

    fb = fallback_profile(model, params, setup, x, xi_hat, s_hat, delta_hat)
    starts = [proj(fb.samples.copy())]
    if warm_start is not None:
        shifted = np.vstack([warm_start.samples[1:], fb.samples[-1:]])
        starts.append(proj(shifted))
    batch0 = np.stack([fb.samples] + starts)
    vals0 = costs(batch0)
    fb_cost = float(vals0[0])
    pick = int(np.argmin(vals0[1:]))
    prof = starts[pick].copy()
    j_cur = float(vals0[1 + pick])

    iterations = 0
    step = 1.0
    for it in range(setup.max_iter):
        iterations = it + 1
        if j_cur < 1e-10:
            break
        grad = _fd_gradient(costs, prof, setup.fd_step)
        if float(np.max(np.abs(grad))) < 1e-14:
            break
        alphas = step * (0.5 ** np.arange(6))
        raw = np.clip(prof[None] - alphas[:, None, None] * grad[None], lo, hi)
        cands = []
        for k, al in enumerate(alphas):
            cand = raw[k].copy()
            cand[0] = project_box_halfspace(
                prof[0] - al * grad[0], lo, hi, a, rhs,
                setup.dykstra_max_iter, setup.dykstra_tol,
            )
            cands.append(cand)
        cvals = costs(np.stack(cands))
        improvement = 0.0
        for al, cand, cv in zip(alphas, cands, cvals):
            decrease = float(np.sum(grad * (prof - cand)))
            if cv <= j_cur - 1e-4 * decrease and cv < j_cur:
                improvement = j_cur - float(cv)
                prof = cand
                j_cur = float(cv)
                step = al * 1.5
                break
        if improvement <= setup.tol * (1.0 + abs(j_cur)):
            break

    u0 = prof[0]
    lhs = float(s @ (drift + g @ u0))
    c_rhs = -params.c * float(s @ s)
    box_ok = bool(np.all(prof >= lo) and np.all(prof <= hi))
    feas_ok = lhs <= c_rhs + 1e-9
    cost_ok = j_cur <= fb_cost + 1e-12
    if box_ok and feas_ok and cost_ok:
        return ControlProfile(prof, setup.period), SolveInfo(
            iterations, j_cur, fb_cost, False, lhs, c_rhs
        )
    fb_lhs = float(s @ (drift + g @ fb.samples[0]))
    return fb, SolveInfo(iterations, fb_cost, fb_cost, True, fb_lhs, c_rhs)


class AgentController:
    """Receding-horizon execution: solve at each control instant, hold the
    first sample for one period, keep the solution for warm starting."""

    def __init__(self, model: FollowerModel, params: SlidingParams, setup: MpcSetup):
        self.model = model
        self.params = params
        self.setup = setup
        self.last_profile: ControlProfile | None = None

    def step(
        self,
        x: np.ndarray,
        xi_hat: np.ndarray,
        s_hat: np.ndarray,
        delta_hat: np.ndarray,
    ) -> tuple[np.ndarray, SolveInfo]:
        profile, info = solve_ocp(
            self.model,
            self.params,
            self.setup,
            x,
            xi_hat,
            s_hat,
            delta_hat,
            warm_start=self.last_profile,
        )
        self.last_profile = profile
        return profile.samples[0].copy(), info


def receding_horizon_step(
    controller: AgentController,
    x: np.ndarray,
    xi_hat: np.ndarray,
    s_hat: np.ndarray,
    delta_hat: np.ndarray,
) -> tuple[np.ndarray, SolveInfo]:
    """The control applied over the coming period: the solution's first sample."""
    return controller.step(x, xi_hat, s_hat, delta_hat)


@dataclass(frozen=True)
class StateRegion:
    """Axis-aligned sampling region for gain autotuning.

    States are drawn as ``x = xi_hat + delta_hat + offset`` so the tracking
    offset, the estimates, and the dynamics-estimate perturbation are bounded
    independently.
    """

    offset_lo: np.ndarray
    offset_hi: np.ndarray
    xi_hat_lo: np.ndarray
    xi_hat_hi: np.ndarray
    delta_hat_lo: np.ndarray
    delta_hat_hi: np.ndarray
    s_hat_center: np.ndarray
    s_hat_spread: float = 0.0

    def __post_init__(self):
        for attr in (
            "offset_lo",
            "offset_hi",
            "xi_hat_lo",
            "xi_hat_hi",
            "delta_hat_lo",
            "delta_hat_hi",
            "s_hat_center",
        ):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))

    def is_empty(self) -> bool:
        return bool(
            np.any(self.offset_lo > self.offset_hi)
            or np.any(self.xi_hat_lo > self.xi_hat_hi)
            or np.any(self.delta_hat_lo > self.delta_hat_hi)
        )

    def sample(self, rng: np.random.Generator, size: int):
        d = self.offset_lo.shape[0]
        xi = rng.uniform(self.xi_hat_lo, self.xi_hat_hi, (size, d))
        delta = rng.uniform(self.delta_hat_lo, self.delta_hat_hi, (size, d))
        offset = rng.uniform(self.offset_lo, self.offset_hi, (size, d))
        s_hat = self.s_hat_center[None] + rng.uniform(
            -self.s_hat_spread, self.s_hat_spread, (size, d, d)
        )
        return xi + delta + offset, xi, s_hat, delta


def _batched_raw_input(model, accel, x, g):
    if model.accel_to_input is not None:
        return model.accel_to_input(accel, x)
    return np.linalg.solve(g, accel[..., None])[..., 0]


def autotune_k_s(
    model: FollowerModel,
    lam: np.ndarray,
    c: float,
    region: StateRegion,
    n_samples: int = 10_000,
    seed: int = 0,
    safety: float = 1.5,
) -> float:
    """Conservative robustness gain from sampled saturation mismatch.

    Samples the cancel-and-decay demand over the declared region, measures the
    worst 1-norm gap between the demanded and the saturated-achievable top
    derivative, and applies a safety factor.
    """
    if n_samples < 1 or region.is_empty():
        raise ConfigurationError(
            "autotune needs a nonempty state region and sample budget; "
            "declare one or set k_s explicitly"
        )
    rng = np.random.default_rng(seed)
    x, xi, s_hat, delta = region.sample(rng, n_samples)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    s, drift, g = _surface_and_drift(model, lam, x, xi, s_hat, delta)
    v_a = -c * s - drift
    raw = _batched_raw_input(model, v_a, x, g)
    u_sat, _ = saturate(raw, model.u_lo, model.u_hi)
    achieved = np.einsum("...ij,...j->...i", g, u_sat)
    worst = float(np.max(np.abs(achieved - v_a).sum(axis=-1)))
    return max(safety * worst, 1e-6)


def autotune_chi_lower(
    model: FollowerModel,
    lam: np.ndarray,
    c: float,
    k_s: float,
    region: StateRegion,
    n_samples: int = 10_000,
    seed: int = 0,
    rounds: int = 3,
) -> np.ndarray:
    """Per-channel lower bound on the saturation degree over the region.

    The bound feeds back into the discontinuous term's magnitude, so a few
    fixed-point rounds are taken; the result is clipped into (0, 1].
    """
    if n_samples < 1 or region.is_empty():
        raise ConfigurationError(
            "autotune needs a nonempty state region and sample budget; "
            "declare chi_lower explicitly otherwise"
        )
    rng = np.random.default_rng(seed)
    x, xi, s_hat, delta = region.sample(rng, n_samples)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    s, drift, g = _surface_and_drift(model, lam, x, xi, s_hat, delta)
    v_a = -c * s - drift
    chi = np.ones(model.n)
    for _ in range(rounds):
        v = v_a - (k_s / chi) * np.sign(s)
        raw = _batched_raw_input(model, v, x, g)
        u_sat, _ = saturate(raw, model.u_lo, model.u_hi)
        achieved = np.einsum("...ij,...j->...i", g, u_sat)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.abs(v) > 1e-12, achieved / v, 1.0)
        chi = np.clip(np.min(ratio, axis=0), 1e-3, 1.0)
    return chi
