"""Shared fixtures: full bundled runs (reused by many tests) and random-graph
generators for the property suites."""

from __future__ import annotations

import time

import numpy as np
import pytest

from formation_mpc import FaultProfile, FaultSpec, GraphSpec, run
from formation_mpc.scenario import bundled_document_path, load_scenario


@pytest.fixture(scope="session")
def example1_result():
    """Scenario, log, and wall time of one full bundled example1 run."""
    scenario = load_scenario(bundled_document_path("example1"))
    start = time.perf_counter()
    log = run(scenario)
    runtime = time.perf_counter() - start
    return scenario, log, runtime


@pytest.fixture(scope="session")
def example1_second_log():
    """Independent second run with the same seed, for determinism checks."""
    scenario = load_scenario(bundled_document_path("example1"))
    return run(scenario)


@pytest.fixture(scope="session")
def example2_result():
    scenario = load_scenario(bundled_document_path("example2"))
    start = time.perf_counter()
    log = run(scenario)
    runtime = time.perf_counter() - start
    return scenario, log, runtime


def random_pinned_graph(rng: np.random.Generator, m: int) -> GraphSpec:
    """Random directed graph in which the leader reaches every follower."""
    adjacency = np.zeros((m, m))
    pinning = np.zeros(m)
    n_pinned = int(rng.integers(1, max(2, m // 2 + 1)))
    pinned = rng.choice(m, size=n_pinned, replace=False)
    pinning[pinned] = rng.uniform(0.5, 2.0, n_pinned)
    reached = list(pinned)
    rest = [i for i in range(m) if i not in set(int(p) for p in pinned)]
    rng.shuffle(rest)
    for i in rest:
        j = reached[int(rng.integers(0, len(reached)))]
        adjacency[i, j] = rng.uniform(0.5, 2.0)
        reached.append(i)
    for _ in range(int(rng.integers(0, m))):
        i, j = int(rng.integers(0, m)), int(rng.integers(0, m))
        if i != j and adjacency[i, j] == 0.0:
            adjacency[i, j] = rng.uniform(0.1, 1.5)
    return GraphSpec(adjacency=adjacency, pinning=pinning)


def random_faults(rng: np.random.Generator, spec: GraphSpec, seed: int) -> FaultProfile:
    """Random sign-preserving fault profile on a subset of the live edges."""
    edge_faults = {}
    for i, j in zip(*np.nonzero(spec.adjacency)):
        if rng.uniform() < 0.6:
            amp = float(rng.uniform(0.1, 0.9) * spec.adjacency[i, j])
            edge_faults[(int(i), int(j))] = FaultSpec(amp, "sin")
    pin_faults = {}
    for i in np.nonzero(spec.pinning)[0]:
        if rng.uniform() < 0.6:
            amp = float(rng.uniform(0.1, 0.9) * spec.pinning[i])
            pin_faults[int(i)] = FaultSpec(amp, "sin")
    profile = FaultProfile(
        edge_faults=edge_faults, pin_faults=pin_faults, hold_period=0.2, seed=seed
    )
    profile.validate_against(spec)
    return profile
