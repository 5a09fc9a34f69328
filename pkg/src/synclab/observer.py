"""Learning-based fully distributed observer.

Each follower i runs

    v_hat_i'     = phi(v_hat_i) omega_hat_i + kappa_hat_i rho_i(z_i) z_i
    omega_hat_i' = mu phi(v_hat_i)^T z_i
    kappa_hat_i' = rho_i(z_i) z_i^T z_i

with the neighborhood error ``z_i = sum_{j in N_i} (v_hat_j - v_hat_i)`` and
``v_hat_{N+1} = v`` (the leader state).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InvalidGain
from .graph import CommGraph
from .leader import LeaderModel


@dataclass(frozen=True)
class RhoSpec:
    """Gain function ``rho(z) = offset + sum_k coefficients[k] * |z|^k``."""

    coefficients: tuple[float, ...]
    offset: float = 0.0

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "offset", float(self.offset))
        if not c or min(c) < 0 or max(c) <= 0:
            raise InvalidGain("rho coefficients must be nonnegative with at least one positive entry")
        if self.offset < 0:
            raise InvalidGain("rho offset must be nonnegative")
        if self.offset + c[0] < 1.0:
            raise InvalidGain(f"rho must satisfy rho(z) >= 1, but rho(0) = {self.offset + c[0]}")

    def __call__(self, z) -> np.ndarray:
        return rho_eval(self, z)

    def to_dict(self) -> dict:
        return {"coefficients": list(self.coefficients), "offset": self.offset}


def rho_eval(spec: RhoSpec, z) -> np.ndarray | float:
    n = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
    # Horner in |z|
    acc = np.zeros_like(n)
    for c in reversed(spec.coefficients):
        acc = acc * n + c
    out = acc + spec.offset
    return float(out) if np.ndim(out) == 0 else out


def default_rho_for_polynomial_leader(m0: int, a: float = 6.0, b: float = 2.0) -> RhoSpec:
    """``rho(z) = a * sum_{k=0}^{2 m0 - 2} |z|^k + b`` for a degree-``m0`` leader."""
    if a <= 0 or b <= 0:
        raise InvalidGain(f"rho gains must be positive, got a={a}, b={b}")
    if int(m0) != m0 or m0 < 1:
        raise InvalidGain(f"polynomial degree must be a positive integer, got {m0}")
    return RhoSpec((float(a),) * (2 * int(m0) - 1), float(b))


def reference_rho() -> RhoSpec:
    """``2 + 6(|z| + |z|^2 + |z|^3 + |z|^4)``, the gain used in the six-arm scenario."""
    return RhoSpec((0.0, 6.0, 6.0, 6.0, 6.0), 2.0)


@dataclass
class ObserverNodeState:
    v_hat: np.ndarray
    omega_hat: np.ndarray
    kappa_hat: float


@dataclass
class ObserverBank:
    nodes: list[ObserverNodeState]
    mu: float
    rho: Sequence[RhoSpec]

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidGain("mu must be positive")
        if isinstance(self.rho, RhoSpec):
            self.rho = [self.rho] * len(self.nodes)
        if len(self.rho) != len(self.nodes):
            raise DimensionMismatch(f"{len(self.rho)} rho specs for {len(self.nodes)} nodes")

    @classmethod
    def from_arrays(cls, v_hat, omega_hat, kappa_hat, mu, rho) -> "ObserverBank":
        v_hat = np.asarray(v_hat, dtype=float)
        omega_hat = np.asarray(omega_hat, dtype=float)
        kappa_hat = np.asarray(kappa_hat, dtype=float).reshape(-1)
        nodes = [ObserverNodeState(v_hat[i].copy(), omega_hat[i].copy(), float(kappa_hat[i]))
                 for i in range(v_hat.shape[0])]
        return cls(nodes, float(mu), rho)

    @property
    def v_hat(self) -> np.ndarray:
        return np.array([n.v_hat for n in self.nodes], dtype=float)

    @property
    def omega_hat(self) -> np.ndarray:
        return np.array([n.omega_hat for n in self.nodes], dtype=float)

    @property
    def kappa_hat(self) -> np.ndarray:
        return np.array([n.kappa_hat for n in self.nodes], dtype=float)


def neighborhood_error(bank: ObserverBank, graph: CommGraph, leader_v, i: int) -> np.ndarray:
    """``z_i`` for follower ``i`` (1-based)."""
    if not 1 <= i <= graph.num_followers:
        raise IndexOutOfRange(f"follower index {i} outside 1..{graph.num_followers}")
    v = np.asarray(leader_v, dtype=float)
    own = np.asarray(bank.nodes[i - 1].v_hat, dtype=float)
    z = np.zeros_like(own)
    for j in graph.neighbors(i):
        other = v if j == graph.leader else bank.nodes[j - 1].v_hat
        z += other - own
    return z


def neighborhood_errors(graph: CommGraph, v_hat, leader_v) -> np.ndarray:
    """All ``z_i`` at once via adjacency sums; shape ``(N, m)``."""
    v_hat = np.asarray(v_hat, dtype=float)
    ext = np.vstack([v_hat, np.asarray(leader_v, dtype=float)[None, :]])
    a = graph.adjacency[:-1]
    return a @ ext - a.sum(axis=1)[:, None] * v_hat


def rho_table(specs: Sequence[RhoSpec]) -> tuple[np.ndarray, np.ndarray]:
    """Pack rho specs into a zero-padded ``(N, K)`` coefficient array and offsets."""
    k = max(len(s.coefficients) for s in specs)
    coef = np.zeros((len(specs), k))
    for i, s in enumerate(specs):
        coef[i, : len(s.coefficients)] = s.coefficients
    return coef, np.array([s.offset for s in specs])


class ObserverRates(NamedTuple):
    v_hat_dot: np.ndarray
    omega_hat_dot: np.ndarray
    kappa_hat_dot: np.ndarray
    z: np.ndarray
    rho: np.ndarray
    phi: np.ndarray


def observer_rates(model: LeaderModel, H, rho_coef, rho_offset, mu, v, v_hat, omega_hat, kappa_hat) -> ObserverRates:
    """Array-level observer right-hand side used by the simulator.

    ``z`` is computed as ``-H (v_hat - 1 v^T)``, which equals the neighbor sum.
    """
    z = H @ (v - v_hat)
    nz = np.sqrt(np.einsum("ij,ij->i", z, z))
    acc = rho_coef[:, -1].copy()
    for k in range(rho_coef.shape[1] - 2, -1, -1):
        acc = acc * nz + rho_coef[:, k]
    rho = acc + rho_offset
    phi = model.regressor(v_hat)
    v_hat_dot = np.einsum("nij,nj->ni", phi, omega_hat) + (kappa_hat * rho)[:, None] * z
    omega_hat_dot = mu * np.einsum("nij,ni->nj", phi, z)
    kappa_hat_dot = rho * nz * nz
    return ObserverRates(v_hat_dot, omega_hat_dot, kappa_hat_dot, z, rho, phi)


def observer_derivatives(bank: ObserverBank, graph: CommGraph, model: LeaderModel, leader_v):
    """Per-node ``(v_hat', omega_hat', kappa_hat')`` as three stacked arrays."""
    v_hat, omega_hat = bank.v_hat, bank.omega_hat
    v = np.asarray(leader_v, dtype=float)
    if v_hat.shape[1:] != (model.state_dim,) or v.shape != (model.state_dim,):
        raise DimensionMismatch("observer state dimension does not match the leader model")
    if omega_hat.shape[1:] != (model.param_dim,):
        raise DimensionMismatch("parameter estimate dimension does not match the leader model")
    if len(bank.nodes) != graph.num_followers:
        raise DimensionMismatch(f"bank has {len(bank.nodes)} nodes, graph has {graph.num_followers}")
    z = neighborhood_errors(graph, v_hat, v)
    rho = np.array([rho_eval(s, zi) for s, zi in zip(bank.rho, z)])
    phi = model.regressor(v_hat)
    v_hat_dot = np.einsum("nij,nj->ni", phi, omega_hat) + (bank.kappa_hat * rho)[:, None] * z
    omega_hat_dot = bank.mu * np.einsum("nij,ni->nj", phi, z)
    kappa_hat_dot = rho * np.einsum("ij,ij->i", z, z)
    return v_hat_dot, omega_hat_dot, kappa_hat_dot
