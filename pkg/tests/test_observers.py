import numpy as np
import pytest

from formation_mpc import (
    ConfigurationError,
    NeighborEstimate,
    NeighborhoodSnapshot,
    ObserverState,
    builtin_example1,
    effective_weights,
    global_estimation_errors,
    local_errors,
    observer_derivative,
    stacked_local_errors,
    vec,
)

from conftest import random_faults, random_pinned_graph


def _snapshot_from_arrays(i, adj, pin, xi_hat, s_hat, d_hat, xi0, s0, disp):
    neighbors = []
    for j in range(adj.shape[0]):
        if adj[i, j] > 0:
            neighbors.append(
                NeighborEstimate(
                    xi_hat=xi_hat[j],
                    s_hat=s_hat[j],
                    delta_hat=d_hat[j],
                    delta_rel=disp[i] - disp[j],
                    weight=float(adj[i, j]),
                )
            )
    if pin[i] > 0:
        return NeighborhoodSnapshot(
            neighbors=tuple(neighbors),
            pin_weight=float(pin[i]),
            leader_state=xi0,
            leader_dynamics=s0,
            displacement=disp[i],
        )
    return NeighborhoodSnapshot(neighbors=tuple(neighbors))


def test_exact_estimates_give_zero_errors():
    sys1 = builtin_example1()
    d = 3
    xi0 = sys1.leader.xi0
    s0 = sys1.leader.s0
    disp = sys1.formation.displacements
    adj, pin = effective_weights(sys1.graph, sys1.faults, 4.2)
    for i in range(3):
        state = ObserverState(xi0.copy(), s0.copy(), disp[i].copy())
        xi_all = np.tile(xi0, (3, 1))
        s_all = np.tile(s0, (3, 1, 1))
        snap = _snapshot_from_arrays(i, adj, pin, xi_all, s_all, disp.copy(), xi0, s0, disp)
        errs = local_errors(state, snap)
        assert np.array_equal(errs.eps_xi, np.zeros(d))
        assert np.array_equal(errs.eps_s, np.zeros((d, d)))
        assert np.array_equal(errs.eps_delta, np.zeros(d))


def test_isolated_pinned_agent_error_is_gap():
    e = np.array([0.1, -0.2, 0.3])
    state = ObserverState(e.copy(), np.zeros((3, 3)), np.zeros(3))
    snap = NeighborhoodSnapshot(
        pin_weight=1.0,
        leader_state=np.zeros(3),
        leader_dynamics=np.zeros((3, 3)),
        displacement=np.zeros(3),
    )
    errs = local_errors(state, snap)
    assert np.allclose(errs.eps_xi, e)


def test_two_agent_chain_errors():
    d = np.array([1.0, 0.0])
    st1 = ObserverState(np.zeros(2), np.zeros((2, 2)), np.zeros(2))
    st2 = ObserverState(d.copy(), np.zeros((2, 2)), np.zeros(2))
    # agent 2 hears agent 1 with weight 1; agent 1 hears nothing
    snap2 = NeighborhoodSnapshot(
        neighbors=(
            NeighborEstimate(st1.xi_hat, st1.s_hat, st1.delta_hat, np.zeros(2), 1.0),
        )
    )
    snap1 = NeighborhoodSnapshot()
    assert np.allclose(local_errors(st2, snap2).eps_xi, d)
    assert np.array_equal(local_errors(st1, snap1).eps_xi, np.zeros(2))


def test_observer_derivative_zero_errors_is_fixed_point():
    rng = np.random.default_rng(5)
    s_hat = rng.normal(size=(3, 3))
    xi_hat = rng.normal(size=3)
    state = ObserverState(xi_hat, s_hat, rng.normal(size=3), 1.5, 2.0)
    from formation_mpc.observers import LocalErrors

    zero = LocalErrors(np.zeros(3), np.zeros((3, 3)), np.zeros(3))
    rates = observer_derivative(state, zero, c_xi=2.0)
    assert rates.c_s == 0.0 and rates.c_delta == 0.0
    assert np.array_equal(rates.s_hat, np.zeros((3, 3)))
    assert np.array_equal(rates.delta_hat, np.zeros(3))
    assert np.allclose(rates.xi_hat, s_hat @ xi_hat)


def test_observer_derivative_unit_displacement_error():
    from formation_mpc.observers import LocalErrors

    e = np.array([1.0, 0.0, 0.0])
    state = ObserverState(np.zeros(3), np.zeros((3, 3)), np.zeros(3), 1.0, 1.0)
    rates = observer_derivative(state, LocalErrors(np.zeros(3), np.zeros((3, 3)), e), 2.0)
    assert rates.c_delta == 1.0
    assert np.allclose(rates.delta_hat, -2.0 * e)


def test_adaptive_gains_must_start_at_one():
    with pytest.raises(ConfigurationError):
        ObserverState(np.zeros(2), np.zeros((2, 2)), np.zeros(2), c_s=0.5)


def test_vec_column_major():
    assert np.array_equal(vec(np.array([[1.0, 2.0], [3.0, 4.0]])), [1.0, 3.0, 2.0, 4.0])
    assert np.array_equal(vec(np.zeros((3, 2))), np.zeros(6))
    rng = np.random.default_rng(1)
    m = rng.normal(size=(4, 5))
    assert np.linalg.norm(vec(m)) == pytest.approx(np.linalg.norm(m, "fro"), rel=1e-14)


def test_global_estimation_errors():
    sys1 = builtin_example1()
    leader, formation = sys1.leader, sys1.formation
    exact = [
        ObserverState(leader.xi0.copy(), leader.s0.copy(), formation.displacements[i].copy())
        for i in range(3)
    ]
    errs = global_estimation_errors(exact, leader, formation)
    assert errs.xi_stacked == 0.0 and errs.s_stacked == 0.0 and errs.delta_stacked == 0.0

    bumped = [
        ObserverState(
            leader.xi0 + np.array([1.0, 0.0, 0.0]),
            leader.s0.copy(),
            formation.displacements[0].copy(),
        )
    ]
    errs = global_estimation_errors(bumped, leader, formation)
    assert errs.xi[0] == pytest.approx(1.0)

    zero_init = [ObserverState.zero(3) for _ in range(3)]
    errs = global_estimation_errors(zero_init, leader, formation)
    # estimates start at zero, so the state gap equals the leader's initial norm
    assert np.allclose(errs.xi, 1.0)


def test_stacked_errors_match_per_agent_computation():
    rng = np.random.default_rng(9)
    for _ in range(20):
        m = int(rng.integers(2, 6))
        d = int(rng.integers(1, 4))
        spec = random_pinned_graph(rng, m)
        faults = random_faults(rng, spec, seed=1)
        adj, pin = effective_weights(spec, faults, float(rng.uniform(0, 5)))
        xi_hat = rng.normal(size=(m, d))
        s_hat = rng.normal(size=(m, d, d))
        d_hat = rng.normal(size=(m, d))
        xi0 = rng.normal(size=d)
        s0 = rng.normal(size=(d, d))
        disp = rng.normal(size=(m, d))
        exi, es, ed = stacked_local_errors(adj, pin, xi_hat, s_hat, d_hat, xi0, s0, disp)
        for i in range(m):
            st = ObserverState(xi_hat[i], s_hat[i], d_hat[i])
            snap = _snapshot_from_arrays(i, adj, pin, xi_hat, s_hat, d_hat, xi0, s0, disp)
            errs = local_errors(st, snap)
            assert np.allclose(errs.eps_xi, exi[i], atol=1e-12)
            assert np.allclose(errs.eps_s, es[i], atol=1e-12)
            assert np.allclose(errs.eps_delta, ed[i], atol=1e-12)
