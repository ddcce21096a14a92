"""Scenario documents: a YAML schema describing one closed-loop run.

Sections and fields are fixed; unknown keys are rejected with their path.
Follower dynamics are selected by builtin name (custom dynamics are built
through the library API, not through documents); all matrices, gains, and
controller parameters live in the document. Agent indices in documents are
1-based to match the usual problem statements; arrays are 0-based internally.
"""

from __future__ import annotations

import copy
import dataclasses
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .engine import Scenario
from .exceptions import ScenarioError
from .graph import FaultProfile, FaultSpec, GraphSpec
from .models import FormationSpec, LeaderModel, builtin_system
from .mpc import MpcSetup, SlidingParams, StateRegion, autotune_k_s
from .observers import ObserverState

__all__ = [
    "load_document",
    "save_document",
    "document_to_scenario",
    "load_scenario",
    "bundled_document_path",
    "documents_equivalent",
    "BUNDLED_SCENARIOS",
]

BUNDLED_SCENARIOS = ("example1", "example2")

_SOLVER_KEYS = {
    "max_iter",
    "tol",
    "fd_step",
    "pred_substeps",
    "dykstra_max_iter",
    "dykstra_tol",
}

_REGION_KEYS = {
    "offset_lo",
    "offset_hi",
    "xi_hat_lo",
    "xi_hat_hi",
    "delta_hat_lo",
    "delta_hat_hi",
    "s_hat_spread",
}

_SCHEMA: dict[str, set[str] | dict] = {
    "meta": {
        "name",
        "seed",
        "t_final",
        "substeps",
        "snapshot_mode",
        "p_construction",
        "predict_true_leader",
    },
    "graph": {"adjacency", "pinning"},
    "faults": {"hold_period", "seed", "edges", "pins"},
    "leader": {"S0", "xi0"},
    "followers": {"builtin", "x0", "u_lo", "u_hi"},
    "formation": {"displacements"},
    "observers": {"c_xi", "xi_hat0", "s_hat0", "delta_hat0", "c_s0", "c_delta0"},
    "controller": {
        "lambda",
        "c",
        "k_s",
        "chi_lower",
        "horizon",
        "period",
        "Q",
        "R",
        "solver",
        "autotune_region",
    },
    "theorem2": {"kappa1", "kappa2", "rho_s"},
}

_REQUIRED_SECTIONS = (
    "meta",
    "graph",
    "faults",
    "leader",
    "followers",
    "formation",
    "observers",
    "controller",
)
_EDGE_KEYS = {"to", "from", "amplitude", "waveform"}
_PIN_KEYS = {"agent", "amplitude", "waveform"}


def load_document(path) -> dict:
    """Parse and schema-check a scenario document."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"YAML parse error in {path}{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    validate_schema(doc)
    return doc


def validate_schema(doc: dict) -> None:
    for section in doc:
        if section not in _SCHEMA:
            raise ScenarioError(f"unknown section {section!r}")
        allowed = _SCHEMA[section]
        body = doc[section]
        if not isinstance(body, dict):
            raise ScenarioError(f"section {section!r} must be a mapping")
        for key in body:
            if key not in allowed:
                raise ScenarioError(f"unknown key {section}.{key}")
    for section in _REQUIRED_SECTIONS:
        if section not in doc:
            raise ScenarioError(f"missing required section {section!r}")
    for k, edge in enumerate(doc["faults"].get("edges") or []):
        if not isinstance(edge, dict):
            raise ScenarioError(f"faults.edges[{k}] must be a mapping")
        for key in edge:
            if key not in _EDGE_KEYS:
                raise ScenarioError(f"unknown key faults.edges[{k}].{key}")
        for key in ("to", "from", "amplitude"):
            if key not in edge:
                raise ScenarioError(f"faults.edges[{k}] needs '{key}'")
    for k, pin in enumerate(doc["faults"].get("pins") or []):
        if not isinstance(pin, dict):
            raise ScenarioError(f"faults.pins[{k}] must be a mapping")
        for key in pin:
            if key not in _PIN_KEYS:
                raise ScenarioError(f"unknown key faults.pins[{k}].{key}")
        for key in ("agent", "amplitude"):
            if key not in pin:
                raise ScenarioError(f"faults.pins[{k}] needs '{key}'")
    solver = doc["controller"].get("solver") or {}
    for key in solver:
        if key not in _SOLVER_KEYS:
            raise ScenarioError(f"unknown key controller.solver.{key}")
    region = doc["controller"].get("autotune_region") or {}
    for key in region:
        if key not in _REGION_KEYS:
            raise ScenarioError(f"unknown key controller.autotune_region.{key}")


def save_document(doc: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def _normalize(value):
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return value


def documents_equivalent(a: dict, b: dict) -> bool:
    """Field-by-field equality up to numeric type (int vs float)."""
    return _normalize(a) == _normalize(b)


def _broadcast(value, m: int, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape == (1,):
        return np.full(m, arr[0])
    if arr.shape != (m,):
        raise ScenarioError(f"{what} must be a scalar or a length-{m} list")
    return arr


def document_to_scenario(doc: dict, overrides: dict | None = None) -> Scenario:
    """Build a runnable Scenario out of a schema-checked document.

    ``overrides`` may carry seed, t_final, substeps, snapshot_mode, and
    p_construction; they take precedence over the document and are the
    command-line flags' hook.
    """
    doc = copy.deepcopy(doc)
    overrides = dict(overrides or {})
    meta = doc["meta"]
    for key in ("seed", "t_final", "substeps", "snapshot_mode", "p_construction"):
        if overrides.get(key) is not None:
            meta[key] = overrides[key]

    name = str(meta.get("name", "scenario"))
    seed = int(meta.get("seed", 0))
    t_final = float(meta.get("t_final", 10.0))
    substeps = int(meta.get("substeps", 20))

    try:
        graph = GraphSpec(
            adjacency=np.asarray(doc["graph"]["adjacency"], dtype=float),
            pinning=np.asarray(doc["graph"]["pinning"], dtype=float),
        )
    except KeyError as exc:
        raise ScenarioError(f"graph section needs {exc}") from exc
    m = graph.n_agents

    fsec = doc["faults"]
    edge_faults = {}
    for edge in fsec.get("edges") or []:
        i = int(edge["to"]) - 1
        j = int(edge["from"]) - 1
        edge_faults[(i, j)] = FaultSpec(
            float(edge["amplitude"]), str(edge.get("waveform", "sin"))
        )
    pin_faults = {}
    for pin in fsec.get("pins") or []:
        pin_faults[int(pin["agent"]) - 1] = FaultSpec(
            float(pin["amplitude"]), str(pin.get("waveform", "sin"))
        )
    faults = FaultProfile(
        edge_faults=edge_faults,
        pin_faults=pin_faults,
        hold_period=float(fsec.get("hold_period", 0.2)),
        seed=int(fsec.get("seed", seed)),
    )

    leader = LeaderModel(
        s0=np.asarray(doc["leader"]["S0"], dtype=float),
        xi0=np.asarray(doc["leader"]["xi0"], dtype=float),
    )
    formation = FormationSpec(np.asarray(doc["formation"]["displacements"], dtype=float))

    fsec = doc["followers"]
    builtin_name = fsec.get("builtin")
    if builtin_name is None:
        raise ScenarioError("followers.builtin is required (documents select builtins)")
    system = builtin_system(str(builtin_name), fault_seed=faults.seed)
    followers = list(system.followers)
    if len(followers) != m:
        raise ScenarioError(
            f"builtin {builtin_name!r} has {len(followers)} followers, graph has {m}"
        )
    if fsec.get("u_lo") is not None or fsec.get("u_hi") is not None:
        u_lo = np.asarray(fsec.get("u_lo", followers[0].u_lo), dtype=float)
        u_hi = np.asarray(fsec.get("u_hi", followers[0].u_hi), dtype=float)
        followers = [
            dataclasses.replace(mdl, u_lo=u_lo, u_hi=u_hi) for mdl in followers
        ]
    x0 = (
        np.asarray(fsec["x0"], dtype=float) if fsec.get("x0") is not None else system.x0
    )

    osec = doc["observers"]
    c_xi = _broadcast(osec.get("c_xi", 1.0), m, "observers.c_xi")
    observer_init = None
    if any(
        osec.get(k) is not None
        for k in ("xi_hat0", "s_hat0", "delta_hat0", "c_s0", "c_delta0")
    ):
        d = leader.dim
        xi_hat0 = (
            np.asarray(osec["xi_hat0"], dtype=float)
            if osec.get("xi_hat0") is not None
            else np.zeros((m, d))
        )
        s_hat0 = (
            np.asarray(osec["s_hat0"], dtype=float)
            if osec.get("s_hat0") is not None
            else np.zeros((m, d, d))
        )
        delta_hat0 = (
            np.asarray(osec["delta_hat0"], dtype=float)
            if osec.get("delta_hat0") is not None
            else np.zeros((m, d))
        )
        c_s0 = _broadcast(osec.get("c_s0", 1.0), m, "observers.c_s0")
        c_d0 = _broadcast(osec.get("c_delta0", 1.0), m, "observers.c_delta0")
        observer_init = tuple(
            ObserverState(xi_hat0[i], s_hat0[i], delta_hat0[i], c_s0[i], c_d0[i])
            for i in range(m)
        )

    csec = doc["controller"]
    lam = np.atleast_1d(np.asarray(csec.get("lambda", []), dtype=float))
    c_gain = _broadcast(csec.get("c", 1.0), m, "controller.c")
    n = followers[0].n
    chi_raw = csec.get("chi_lower", 1.0)
    chi = np.atleast_1d(np.asarray(chi_raw, dtype=float))
    if chi.shape == (1,):
        chi = np.full(n, chi[0])
    elif chi.shape != (n,):
        raise ScenarioError(f"controller.chi_lower must be scalar or length-{n}")

    k_s_raw = csec.get("k_s", 0.1)
    solver = dict(csec.get("solver") or {})
    setup = MpcSetup(
        horizon=float(csec.get("horizon", 0.8)),
        period=float(csec.get("period", 0.2)),
        q_weight=csec.get("Q", 1.0),
        r_weight=csec.get("R", 0.1),
        **{k: solver[k] for k in solver},
    )

    if isinstance(k_s_raw, str):
        if k_s_raw != "auto":
            raise ScenarioError("controller.k_s must be a number or 'auto'")
        region_doc = csec.get("autotune_region")
        if not region_doc:
            raise ScenarioError(
                "controller.k_s is 'auto' but no autotune_region was declared; "
                "declare one or set k_s explicitly"
            )
        d = leader.dim
        region = StateRegion(
            offset_lo=np.asarray(region_doc["offset_lo"], dtype=float),
            offset_hi=np.asarray(region_doc["offset_hi"], dtype=float),
            xi_hat_lo=np.asarray(region_doc["xi_hat_lo"], dtype=float),
            xi_hat_hi=np.asarray(region_doc["xi_hat_hi"], dtype=float),
            delta_hat_lo=np.asarray(region_doc["delta_hat_lo"], dtype=float),
            delta_hat_hi=np.asarray(region_doc["delta_hat_hi"], dtype=float),
            s_hat_center=leader.s0,
            s_hat_spread=float(region_doc.get("s_hat_spread", 0.0)),
        )
        k_s_values = [
            autotune_k_s(mdl, lam, float(c_gain[i]), region, seed=seed)
            for i, mdl in enumerate(followers)
        ]
    else:
        k_s_values = [float(k_s_raw)] * m

    sliding = tuple(
        SlidingParams(lam=lam, c=float(c_gain[i]), k_s=k_s_values[i], chi_lower=chi)
        for i in range(m)
    )

    theorem2 = dict(doc["theorem2"]) if doc.get("theorem2") else None

    return Scenario(
        name=name,
        graph=graph,
        faults=faults,
        leader=leader,
        followers=tuple(followers),
        formation=formation,
        x0=x0,
        c_xi=c_xi,
        sliding=sliding,
        setup=tuple([setup] * m),
        t_final=t_final,
        substeps=substeps,
        seed=seed,
        snapshot_mode=bool(meta.get("snapshot_mode", False)),
        p_construction=str(meta.get("p_construction", "reciprocal")),
        predict_true_leader=bool(meta.get("predict_true_leader", False)),
        observer_init=observer_init,
        theorem2=theorem2,
    )


def bundled_document_path(name: str):
    if name not in BUNDLED_SCENARIOS:
        raise ScenarioError(
            f"unknown bundled scenario {name!r}; available: {BUNDLED_SCENARIOS}"
        )
    return resources.files("formation_mpc").joinpath(f"scenarios/{name}.yaml")


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    return document_to_scenario(load_document(path), overrides)
