"""JSON scenario files: schema checks, the built-in six-arm reference scenario,
dotted-key overrides, and conversion to :class:`~synclab.sim.SimConfig`."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .controller import ControllerGains
from .errors import InvalidGain, SchemaError
from .graph import build_graph
from .lagrange import GRAVITY, TwoLinkArmParams, validate_inertia
from .leader import polynomial_leader, van_der_pol
from .observer import RhoSpec, default_rho_for_polynomial_leader
from .sim import SimConfig

REFERENCE_SCENARIO = {
    "graph": {
        "followers": 6,
        "edges": [[7, 1], [7, 4], [1, 2], [2, 1], [2, 3], [3, 2], [3, 4], [4, 3], [4, 5], [5, 4], [5, 6], [6, 5]],
    },
    "leader": {"type": "van_der_pol", "omega": [1.0, 1.0, 1.0], "v0": [2.0, 2.0], "E": [[1.0, 0.0], [0.0, 1.0]]},
    "observer": {
        "mu": 10.0,
        "rho": {"coefficients": [0.0, 6.0, 6.0, 6.0, 6.0], "offset": 2.0},
        "kappa0": [3.3689, 3.4607, 3.9816, 3.1564, 3.8555, 3.6448],
        "v_hat0": "leader",
        "omega_hat0": [[0.0, 0.0, 0.0]] * 6,
    },
    "agents": {
        "theta": [
            [0.64, 1.10, 0.08, 0.64, 0.32],
            [0.76, 1.17, 0.14, 0.93, 0.44],
            [0.91, 1.26, 0.22, 1.27, 0.58],
            [1.10, 1.36, 0.32, 1.67, 0.73],
            [1.21, 1.16, 0.12, 1.45, 1.03],
            [1.31, 1.56, 0.22, 1.65, 1.33],
        ],
        "q0": [[-1.0, 2.0], [-2.0, -1.0], [1.0, -1.0], [2.0, -1.0], [-3.0, 2.0], [-1.0, 1.0]],
        "qd0": [[0.0, 0.0]] * 6,
        "theta_hat0": [[0.0] * 5] * 6,
        "g": GRAVITY,
    },
    "controller": {"K": 20.0, "Gamma": 10.0, "alpha": 2.0},
    "sim": {"dt": 1e-3, "t_end": 50.0, "log_stride": 10, "observer_only": False, "seed": 0},
}

_SECTIONS = {
    "graph": {"followers", "edges"},
    "leader": {"type", "omega", "v0", "E", "state_dim", "terms"},
    "observer": {"mu", "rho", "kappa0", "v_hat0", "omega_hat0"},
    "agents": {"theta", "q0", "qd0", "theta_hat0", "g"},
    "controller": {"K", "Gamma", "alpha"},
    "sim": {"dt", "t_end", "log_stride", "observer_only", "seed"},
}
_REQUIRED = {"graph", "leader", "observer", "sim"}
MAX_REFERENCE_DT = 0.01


def reference_scenario() -> dict:
    return copy.deepcopy(REFERENCE_SCENARIO)


def reference_json() -> str:
    return json.dumps(REFERENCE_SCENARIO, indent=2, sort_keys=True) + "\n"


def load_scenario(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    return doc


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, key: str, value) -> dict:
    """Set a dotted key such as ``observer.mu`` in place; ``value`` may be a JSON string."""
    if isinstance(value, str):
        value = _parse_value(value)
    parts = key.split(".")
    if len(parts) < 2 or parts[0] not in _SECTIONS or parts[1] not in _SECTIONS[parts[0]]:
        raise SchemaError(f"unknown config key {key!r}")
    node = doc.setdefault(parts[0], {})
    for p in parts[1:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise SchemaError(f"config key {key!r} does not address a field")
    node[parts[-1]] = value
    return doc


def _matrix(value, shape, what):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what} must be numeric") from exc
    if shape is not None and arr.shape != shape:
        raise SchemaError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise SchemaError(f"{what} must be finite")
    return arr


def _positive(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{what} must be a number")
    if not value > 0:
        raise SchemaError(f"{what} must be positive")
    return float(value)


def _check_keys(doc: dict):
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise SchemaError(f"unknown top-level keys: {sorted(unknown)}")
    missing = _REQUIRED - set(doc)
    if missing:
        raise SchemaError(f"missing sections: {sorted(missing)}")
    for name, sec in doc.items():
        if not isinstance(sec, dict):
            raise SchemaError(f"section {name!r} must be an object")
        extra = set(sec) - _SECTIONS[name]
        if extra:
            raise SchemaError(f"unknown keys in {name}: {sorted(extra)}")


def _leader(sec: dict):
    kind = sec.get("type", "van_der_pol")
    E = sec.get("E")
    if kind == "van_der_pol":
        omega = _matrix(sec.get("omega", [1.0, 1.0, 1.0]), (3,), "leader.omega")
        model = van_der_pol(omega)
    elif kind == "polynomial":
        m = sec.get("state_dim")
        if not isinstance(m, int) or m < 1:
            raise SchemaError("leader.state_dim must be a positive integer for polynomial leaders")
        omega = _matrix(sec.get("omega"), None, "leader.omega").reshape(-1)
        terms: dict = {}
        for entry in sec.get("terms", []):
            try:
                r, c, coef, exps = entry
            except (TypeError, ValueError) as exc:
                raise SchemaError("leader.terms entries must be [row, col, coef, exponents]") from exc
            terms.setdefault((int(r), int(c)), []).append((float(coef), exps))
        if not terms:
            raise SchemaError("leader.terms must list at least one monomial")
        try:
            model = polynomial_leader(m, omega.size, terms, omega)
        except ValueError as exc:
            raise SchemaError(f"leader.terms: {exc}") from exc
    else:
        raise SchemaError(f"unknown leader type {kind!r}")
    if E is not None:
        model = model.with_output_matrix(_matrix(E, None, "leader.E"))
        if model.output_matrix.shape[1] != model.state_dim:
            raise SchemaError(f"leader.E must have {model.state_dim} columns")
    if "v0" not in sec:
        raise SchemaError("leader.v0 is required")
    v0 = _matrix(sec["v0"], (model.state_dim,), "leader.v0")
    return model, v0


def _rho(value, m0, n):
    if value is None:
        value = {"a": 6.0, "b": 2.0}
    specs = value if isinstance(value, list) else [value] * n
    if len(specs) != n:
        raise SchemaError(f"observer.rho list must have {n} entries")
    out = []
    for spec in specs:
        if not isinstance(spec, dict):
            raise SchemaError("observer.rho must be an object or a list of objects")
        extra = set(spec) - {"a", "b", "coefficients", "offset"}
        if extra:
            raise SchemaError(f"unknown keys in observer.rho: {sorted(extra)}")
        try:
            if "coefficients" in spec:
                out.append(RhoSpec(tuple(spec["coefficients"]), spec.get("offset", 0.0)))
            else:
                out.append(default_rho_for_polynomial_leader(m0, spec.get("a", 6.0), spec.get("b", 2.0)))
        except InvalidGain as exc:
            raise SchemaError(f"observer.rho: {exc}") from exc
    return out


def build_config(doc: dict, observer_only: bool | None = None) -> SimConfig:
    """Validate a scenario document and build the simulator configuration."""
    _check_keys(doc)
    g = doc["graph"]
    if "followers" not in g or "edges" not in g:
        raise SchemaError("graph needs 'followers' and 'edges'")
    if not isinstance(g["followers"], int) or isinstance(g["followers"], bool):
        raise SchemaError("graph.followers must be an integer")
    graph = build_graph(g["followers"], g["edges"])
    n = graph.num_followers

    model, v0 = _leader(doc["leader"])
    m, l = model.state_dim, model.param_dim

    ob = doc["observer"]
    mu = _positive(ob.get("mu", 10.0), "mu")
    rho = _rho(ob.get("rho"), model.poly_degree, n)
    kappa0 = _matrix(ob.get("kappa0", [1.0] * n), (n,), "observer.kappa0")
    v_hat0 = ob.get("v_hat0", "leader")
    v_hat0 = np.tile(v0, (n, 1)) if v_hat0 == "leader" else _matrix(v_hat0, (n, m), "observer.v_hat0")
    omega_hat0 = _matrix(ob.get("omega_hat0", np.zeros((n, l)).tolist()), (n, l), "observer.omega_hat0")

    sim = doc["sim"]
    dt = _positive(sim.get("dt", 1e-3), "sim.dt")
    t_end = _positive(sim.get("t_end", 50.0), "sim.t_end")
    if dt > MAX_REFERENCE_DT:
        raise SchemaError(f"sim.dt must not exceed {MAX_REFERENCE_DT}")
    stride = sim.get("log_stride", 10)
    if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
        raise SchemaError("sim.log_stride must be a positive integer")
    only = bool(sim.get("observer_only", False)) if observer_only is None else observer_only
    seed = sim.get("seed", 0)
    if not isinstance(seed, int):
        raise SchemaError("sim.seed must be an integer")

    cfg = SimConfig(graph=graph, leader=model, v0=v0, mu=mu, rho=rho, kappa0=kappa0, v_hat0=v_hat0,
                    omega_hat0=omega_hat0, dt=dt, t_end=t_end, log_stride=stride, observer_only=only,
                    seed=seed, source=copy.deepcopy(doc))
    cfg.n_steps  # t_end / dt integrality

    if "agents" in doc:
        ag = doc["agents"]
        if "controller" not in doc:
            raise SchemaError("controller section is required when agents are given")
        if model.output_dim != 2:
            raise SchemaError("leader output (rows of E) must be 2-dimensional to drive two-link arms")
        theta = _matrix(ag.get("theta"), (n, 5), "agents.theta")
        g_acc = ag.get("g", GRAVITY)
        g_acc = float(g_acc) if isinstance(g_acc, (int, float)) and not isinstance(g_acc, bool) else None
        if g_acc is None:
            raise SchemaError("agents.g must be a number")
        arms = TwoLinkArmParams(theta, g_acc)
        validate_inertia(arms)
        cfg.arms = arms
        cfg.q0 = _matrix(ag.get("q0"), (n, 2), "agents.q0")
        cfg.qd0 = _matrix(ag.get("qd0", np.zeros((n, 2)).tolist()), (n, 2), "agents.qd0")
        cfg.theta_hat0 = _matrix(ag.get("theta_hat0", np.zeros((n, 5)).tolist()), (n, 5), "agents.theta_hat0")
        ct = doc["controller"]
        try:
            cfg.gains = ControllerGains(
                _matrix(ct.get("K", 20.0), None, "controller.K"),
                _matrix(ct.get("Gamma", 10.0), None, "controller.Gamma"),
                _positive(ct.get("alpha", 2.0), "alpha"),
            )
        except (InvalidGain, ValueError) as exc:
            raise SchemaError(f"controller: {exc}") from exc
    elif not only:
        cfg.observer_only = True
    return cfg
