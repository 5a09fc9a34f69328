"""Fixed-step RK4 integration of leader + observer bank + arms + controllers.

The global state is stacked as

    [v (m) | v_hat (N m) | omega_hat (N l) | kappa_hat (N) | q (2N) | qd (2N) | theta_hat (5N)]

with the arm blocks dropped in observer-only mode.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .controller import ControllerGains
from .errors import DimensionMismatch, NonFiniteDerivative, NonFiniteState, SchemaError
from .graph import CommGraph, h_matrix
from .lagrange import TwoLinkArmParams, arm_acceleration, regressor_Y
from .leader import LeaderModel
from .observer import RhoSpec, observer_rates, rho_table

try:
    from ._fast import vdp_closed_loop_rhs as _vdp_rhs
except ImportError:  # numba missing: numpy path only
    _vdp_rhs = None

log = logging.getLogger(__name__)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], x, t: float, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``x' = f(t, x)``."""
    x = np.asarray(x, dtype=float)
    # overflow surfaces as NonFiniteDerivative below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        k1 = f(t, x)
        k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = f(t + dt, x + dt * k3)
        incr = k1 + 2.0 * k2 + 2.0 * k3 + k4
    if not np.isfinite(incr).all():
        raise NonFiniteDerivative(f"non-finite derivative in RK4 stage near t={t:.6g}")
    return x + (dt / 6.0) * incr


@dataclass
class SimConfig:
    graph: CommGraph
    leader: LeaderModel
    v0: np.ndarray
    mu: float
    rho: list[RhoSpec]
    kappa0: np.ndarray
    v_hat0: np.ndarray
    omega_hat0: np.ndarray
    arms: TwoLinkArmParams | None = None
    q0: np.ndarray | None = None
    qd0: np.ndarray | None = None
    theta_hat0: np.ndarray | None = None
    gains: ControllerGains | None = None
    dt: float = 1e-3
    t_end: float = 50.0
    log_stride: int = 10
    observer_only: bool = False
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False)

    @property
    def num_followers(self) -> int:
        return self.graph.num_followers

    @property
    def n_steps(self) -> int:
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise SchemaError(f"t_end / dt must be a positive integer, got {self.t_end} / {self.dt}")
        return n

    @property
    def with_arms(self) -> bool:
        return not self.observer_only and self.arms is not None


class CoupledSystem:
    """Right-hand side of the stacked closed-loop ODE."""

    def __init__(self, cfg: SimConfig, compiled: bool | None = None):
        self.cfg = cfg
        m, l, n = cfg.leader.state_dim, cfg.leader.param_dim, cfg.num_followers
        self.m, self.l, self.n = m, l, n
        self.H = h_matrix(cfg.graph)
        self.rho_coef, self.rho_offset = rho_table(cfg.rho)
        self.E = cfg.leader.output_matrix
        self.omega = cfg.leader.true_params
        self.arms_on = cfg.with_arms
        if self.arms_on:
            if cfg.gains is None:
                raise SchemaError("controller gains are required when arms are simulated")
            if self.E.shape[0] != 2:
                raise DimensionMismatch("leader output dimension must be 2 to drive two-link arms")
            self.K = cfg.gains.K
            self.Gamma = cfg.gains.Gamma
            self.alpha = cfg.gains.alpha
            self.theta = cfg.arms.theta
            self.g = cfg.arms.g
        sizes = [m, n * m, n * l, n] + ([2 * n, 2 * n, 5 * n] if self.arms_on else [])
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.dim = int(self.offsets[-1])
        if compiled is None:
            compiled = cfg.leader.name == "van_der_pol" and _vdp_rhs is not None
        if compiled and cfg.leader.name != "van_der_pol":
            raise ValueError("the compiled right-hand side only covers the Van der Pol leader")
        self.compiled = bool(compiled)
        if self.compiled:
            empty2, empty5 = np.zeros((2, 2)), np.zeros(5)
            arms = self.arms_on
            self._fast_args = (
                n, np.ascontiguousarray(self.H), np.ascontiguousarray(self.rho_coef),
                np.ascontiguousarray(self.rho_offset), float(cfg.mu), np.ascontiguousarray(self.omega), arms,
                np.ascontiguousarray(self.E) if arms else empty2,
                np.ascontiguousarray(self.K) if arms else empty2,
                np.ascontiguousarray(self.Gamma) if arms else empty5,
                float(self.alpha) if arms else 0.0,
                np.ascontiguousarray(self.theta) if arms else np.zeros((n, 5)),
                float(self.g) if arms else 0.0,
            )

    def split(self, x):
        o = self.offsets
        n = self.n
        parts = [
            x[o[0]:o[1]],
            x[o[1]:o[2]].reshape(n, self.m),
            x[o[2]:o[3]].reshape(n, self.l),
            x[o[3]:o[4]],
        ]
        if self.arms_on:
            parts += [x[o[4]:o[5]].reshape(n, 2), x[o[5]:o[6]].reshape(n, 2), x[o[6]:o[7]].reshape(n, 5)]
        return parts

    def initial_state(self) -> np.ndarray:
        c = self.cfg
        parts = [c.v0, c.v_hat0, c.omega_hat0, c.kappa0]
        if self.arms_on:
            parts += [c.q0, c.qd0, c.theta_hat0]
        x = np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"initial state has size {x.size}, expected {self.dim}")
        return x

    def evaluate(self, x, detail: bool = False):
        model = self.cfg.leader
        parts = self.split(x)
        v, v_hat, omega_hat, kappa = parts[:4]
        phi_v = model.regressor(v)
        v_dot = phi_v @ self.omega
        ob = observer_rates(model, self.H, self.rho_coef, self.rho_offset, self.cfg.mu,
                            v, v_hat, omega_hat, kappa)
        out = [v_dot, ob.v_hat_dot.ravel(), ob.omega_hat_dot.ravel(), ob.kappa_hat_dot]
        info = {"v_dot": v_dot, "z": ob.z, "rho": ob.rho, "v_hat_dot": ob.v_hat_dot,
                "omega_hat_dot": ob.omega_hat_dot}
        if self.arms_on:
            q, qd, theta_hat = parts[4:]
            E, a = self.E, self.alpha
            phi = ob.phi
            phi_rate = model.regressor_rate(v_hat, ob.v_hat_dot)
            est_rate = np.einsum("nij,nj->ni", phi, omega_hat)
            q_hat_dot = est_rate @ E.T - a * (q - v_hat @ E.T)
            q_hat_dd = (np.einsum("nij,nj->ni", phi, ob.omega_hat_dot)
                        + np.einsum("nij,nj->ni", phi_rate, omega_hat)) @ E.T - a * (qd - ob.v_hat_dot @ E.T)
            s = qd - q_hat_dot
            Y = regressor_Y(q, qd, q_hat_dd, q_hat_dot, self.g)
            tau = -s @ self.K.T + np.einsum("nij,nj->ni", Y, theta_hat)
            theta_hat_dot = -self.Gamma * np.einsum("nji,nj->ni", Y, s)
            qdd = arm_acceleration(self.theta, self.g, q, qd, tau)
            out += [qd.ravel(), qdd.ravel(), theta_hat_dot.ravel()]
            info.update(s=s, tau=tau, q_hat_dot=q_hat_dot, q_hat_dd=q_hat_dd, qdd=qdd)
        dx = np.concatenate(out)
        return (dx, info) if detail else dx

    def __call__(self, t, x):
        if self.compiled:
            return _vdp_rhs(x, *self._fast_args)
        return self.evaluate(x)


@dataclass
class SimLog:
    t: np.ndarray
    v: np.ndarray
    v_hat: np.ndarray
    omega_hat: np.ndarray
    kappa_hat: np.ndarray
    z: np.ndarray
    v_hat_dot: np.ndarray
    q: np.ndarray | None = None
    qd: np.ndarray | None = None
    theta_hat: np.ndarray | None = None
    tau: np.ndarray | None = None
    s: np.ndarray | None = None
    e: np.ndarray | None = None
    e_dot: np.ndarray | None = None
    config: SimConfig | None = field(default=None, repr=False)

    @property
    def num_followers(self) -> int:
        return self.v_hat.shape[1]

    @property
    def has_arms(self) -> bool:
        return self.q is not None

    @property
    def v_err(self) -> np.ndarray:
        return self.v_hat - self.v[:, None, :]

    @property
    def omega_err_norm(self) -> np.ndarray:
        w = self.config.leader.true_params
        return np.linalg.norm(self.omega_hat - w, axis=-1)

    @property
    def theta_err_norm(self) -> np.ndarray | None:
        if not self.has_arms:
            return None
        return np.linalg.norm(self.theta_hat - self.config.arms.theta, axis=-1)

    def until(self, t_stop: float) -> "SimLog":
        """Prefix of the log with ``t <= t_stop``."""
        k = int(np.searchsorted(self.t, t_stop + 1e-9, side="right"))
        kw = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            kw[name] = val[:k] if isinstance(val, np.ndarray) else val
        return SimLog(**kw)

    def columns(self) -> tuple[list[str], np.ndarray]:
        """CSV header names and the matching 2-D data block."""
        m = self.v.shape[1]
        names = ["t"] + [f"v[{k}]" for k in range(m)]
        cols = [self.t[:, None], self.v]
        for i in range(self.num_followers):
            tag = i + 1
            blocks = [("vhat", self.v_hat[:, i]), ("omegahat", self.omega_hat[:, i]),
                      ("kappa", self.kappa_hat[:, i, None])]
            if self.has_arms:
                blocks += [("q", self.q[:, i]), ("qd", self.qd[:, i]), ("thetahat", self.theta_hat[:, i]),
                           ("tau", self.tau[:, i]), ("e", self.e[:, i]), ("s", self.s[:, i])]
            for name, arr in blocks:
                if name == "kappa":
                    names.append(f"kappa_{tag}")
                else:
                    names += [f"{name}_{tag}[{k}]" for k in range(arr.shape[1])]
                cols.append(arr)
        return names, np.hstack(cols)

    def to_csv(self, path) -> Path:
        path = Path(path)
        names, data = self.columns()
        np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
        return path


def _state_labels(system: CoupledSystem) -> list[str]:
    n, m, l = system.n, system.m, system.l
    labels = [f"v[{k}]" for k in range(m)]
    labels += [f"vhat_{i + 1}[{k}]" for i in range(n) for k in range(m)]
    labels += [f"omegahat_{i + 1}[{k}]" for i in range(n) for k in range(l)]
    labels += [f"kappa_{i + 1}" for i in range(n)]
    if system.arms_on:
        labels += [f"q_{i + 1}[{k}]" for i in range(n) for k in range(2)]
        labels += [f"qd_{i + 1}[{k}]" for i in range(n) for k in range(2)]
        labels += [f"thetahat_{i + 1}[{k}]" for i in range(n) for k in range(5)]
    return labels


def run(config: SimConfig) -> SimLog:
    """Integrate the coupled system from 0 to ``t_end`` and return the dense log."""
    system = CoupledSystem(config)
    dt = float(config.dt)
    n_steps = config.n_steps
    stride = int(config.log_stride)
    if stride < 1:
        raise SchemaError("log_stride must be a positive integer")
    log_idx = list(range(0, n_steps + 1, stride))
    if log_idx[-1] != n_steps:
        log_idx.append(n_steps)
    n_log = len(log_idx)
    n, m, l = system.n, system.m, system.l

    buf = {
        "t": np.empty(n_log), "v": np.empty((n_log, m)), "v_hat": np.empty((n_log, n, m)),
        "omega_hat": np.empty((n_log, n, l)), "kappa_hat": np.empty((n_log, n)),
        "z": np.empty((n_log, n, m)), "v_hat_dot": np.empty((n_log, n, m)),
    }
    if system.arms_on:
        for name, width in (("q", 2), ("qd", 2), ("theta_hat", 5), ("tau", 2), ("s", 2), ("e", 2), ("e_dot", 2)):
            buf[name] = np.empty((n_log, n, width))

    E = system.E

    def record(slot, t, x):
        _, info = system.evaluate(x, detail=True)
        parts = system.split(x)
        buf["t"][slot] = t
        buf["v"][slot], buf["v_hat"][slot], buf["omega_hat"][slot], buf["kappa_hat"][slot] = parts[:4]
        buf["z"][slot] = info["z"]
        buf["v_hat_dot"][slot] = info["v_hat_dot"]
        if system.arms_on:
            q, qd, th = parts[4:]
            buf["q"][slot], buf["qd"][slot], buf["theta_hat"][slot] = q, qd, th
            buf["tau"][slot] = info["tau"]
            buf["s"][slot] = info["s"]
            buf["e"][slot] = q - E @ parts[0]
            buf["e_dot"][slot] = qd - E @ info["v_dot"]

    x = system.initial_state()
    labels = _state_labels(system)
    record(0, 0.0, x)
    slot = 1
    next_log = log_idx[1] if n_log > 1 else None
    log.debug("integrating %d steps of dt=%g (state dim %d)", n_steps, dt, system.dim)
    for k in range(1, n_steps + 1):
        t_prev = (k - 1) * dt
        try:
            x = rk4_step(system, x, t_prev, dt)
        except NonFiniteDerivative as exc:
            raise NonFiniteState(f"{exc}; state diverged after t={t_prev:.6g}", time=t_prev) from exc
        if not np.isfinite(x).all():
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise NonFiniteState(
                f"non-finite state component {labels[bad]} at t={k * dt:.6g}", time=k * dt, component=labels[bad]
            )
        if k == next_log:
            record(slot, k * dt, x)
            slot += 1
            next_log = log_idx[slot] if slot < n_log else None
    return SimLog(config=config, **buf)


def leader_trajectory(model: LeaderModel, v0, t_end: float, dt: float = 1e-3, stride: int = 1):
    """Integrate the leader alone; returns ``(t, v)`` sampled every ``stride`` steps."""
    n_steps = round(t_end / dt)
    x = np.asarray(v0, dtype=float).copy()
    w = model.true_params

    def f(t, y):
        return model.regressor(y) @ w

    ts, vs = [0.0], [x.copy()]
    for k in range(1, n_steps + 1):
        x = rk4_step(f, x, (k - 1) * dt, dt)
        if k % stride == 0:
            ts.append(k * dt)
            vs.append(x.copy())
    return np.array(ts), np.array(vs)
