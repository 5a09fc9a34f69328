"""Two-link planar elbow arm in Euler-Lagrange form ``M q'' + C q' + G = tau``.

The five lumped parameters enter linearly:

    M = [[t1 + t2 + 2 t3 cos q2, t2 + t3 cos q2], [t2 + t3 cos q2, t2]]
    C = [[-t3 qd2 sin q2, -t3 (qd1 + qd2) sin q2], [t3 qd1 sin q2, 0]]
    G = [t4 g cos q1 + t5 g cos(q1 + q2), t5 g cos(q1 + q2)]

Functions broadcast over leading batch axes, so ``theta`` of shape ``(N, 5)``
pairs with ``q`` of shape ``(N, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularInertia

GRAVITY = 9.8
DET_MIN = 1e-10


@dataclass(frozen=True, eq=False)
class TwoLinkArmParams:
    theta: np.ndarray
    g: float = GRAVITY

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.shape[-1] != 5:
            raise DimensionMismatch(f"theta must have 5 entries per arm, got shape {th.shape}")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "g", float(self.g))


@dataclass
class ArmState:
    q: np.ndarray
    qd: np.ndarray


def _split(theta):
    return (theta[..., k] for k in range(5))


def mass_matrix(params: TwoLinkArmParams, q) -> np.ndarray:
    t1, t2, t3, _, _ = _split(params.theta)
    c2 = np.cos(np.asarray(q, dtype=float)[..., 1])
    off = t2 + t3 * c2
    return np.stack([np.stack([t1 + t2 + 2 * t3 * c2, off], -1), np.stack([off, t2 + 0 * c2], -1)], -2)


def mass_matrix_rate(params: TwoLinkArmParams, q, qd) -> np.ndarray:
    """Analytic ``dM/dt``; depends on ``q2`` and ``qd2`` only."""
    t3 = params.theta[..., 2]
    q = np.asarray(q, dtype=float)
    r = -t3 * np.sin(q[..., 1]) * np.asarray(qd, dtype=float)[..., 1]
    return np.stack([np.stack([2 * r, r], -1), np.stack([r, 0 * r], -1)], -2)


def coriolis_matrix(params: TwoLinkArmParams, q, qd) -> np.ndarray:
    t3 = params.theta[..., 2]
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    h = t3 * np.sin(q[..., 1])
    return np.stack(
        [
            np.stack([-h * qd[..., 1], -h * (qd[..., 0] + qd[..., 1])], -1),
            np.stack([h * qd[..., 0], 0 * h], -1),
        ],
        -2,
    )


def gravity_vector(params: TwoLinkArmParams, q) -> np.ndarray:
    _, _, _, t4, t5 = _split(params.theta)
    q = np.asarray(q, dtype=float)
    c1 = np.cos(q[..., 0])
    c12 = np.cos(q[..., 0] + q[..., 1])
    g = params.g
    return np.stack([t4 * g * c1 + t5 * g * c12, t5 * g * c12], -1)


def regressor_Y(q, qd, a, ad, g: float = GRAVITY) -> np.ndarray:
    """``Y`` with ``Y @ theta == M(q) a + C(q, qd) ad + G(q)`` for every ``theta``."""
    q, qd, a, ad = (np.asarray(x, dtype=float) for x in (q, qd, a, ad))
    c2 = np.cos(q[..., 1])
    s2 = np.sin(q[..., 1])
    gc1 = g * np.cos(q[..., 0])
    gc12 = g * np.cos(q[..., 0] + q[..., 1])
    a1, a2 = a[..., 0], a[..., 1]
    sum_a = a1 + a2
    y = np.zeros(np.broadcast_shapes(q.shape, qd.shape, a.shape, ad.shape)[:-1] + (2, 5))
    y[..., 0, 0] = a1
    y[..., 0, 1] = sum_a
    y[..., 0, 2] = c2 * (2 * a1 + a2) - s2 * (qd[..., 1] * ad[..., 0] + (qd[..., 0] + qd[..., 1]) * ad[..., 1])
    y[..., 0, 3] = gc1
    y[..., 0, 4] = gc12
    y[..., 1, 1] = sum_a
    y[..., 1, 2] = c2 * a1 + s2 * qd[..., 0] * ad[..., 0]
    y[..., 1, 4] = gc12
    return y


def forward_dynamics(params: TwoLinkArmParams, state: ArmState, tau) -> np.ndarray:
    """Joint accelerations ``M^{-1} (tau - C qd - G)`` via the closed-form 2x2 inverse."""
    q = np.asarray(state.q, dtype=float)
    qd = np.asarray(state.qd, dtype=float)
    m = mass_matrix(params, q)
    rhs = np.asarray(tau, dtype=float) - np.einsum("...ij,...j->...i", coriolis_matrix(params, q, qd), qd)
    rhs = rhs - gravity_vector(params, q)
    return solve_2x2(m, rhs)


def solve_2x2(m, b) -> np.ndarray:
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(det <= DET_MIN):
        raise SingularInertia(f"inertia matrix determinant {np.min(det):.3e} is not positive")
    x0 = (m[..., 1, 1] * b[..., 0] - m[..., 0, 1] * b[..., 1]) / det
    x1 = (m[..., 0, 0] * b[..., 1] - m[..., 1, 0] * b[..., 0]) / det
    return np.stack([x0, x1], -1)


def inertia_bounds(params: TwoLinkArmParams, n_grid: int = 721) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest eigenvalue of ``M`` over ``q2`` in ``[0, 2 pi]``, per arm."""
    q2 = np.linspace(0.0, 2 * np.pi, n_grid)
    theta = np.atleast_2d(params.theta)
    q = np.stack([np.zeros_like(q2), q2], -1)
    eig = np.linalg.eigvalsh(mass_matrix(TwoLinkArmParams(theta[:, None, :], params.g), q[None]))
    return eig[..., 0].min(axis=-1), eig[..., 1].max(axis=-1)


def validate_inertia(params: TwoLinkArmParams, n_grid: int = 721) -> None:
    """Raise :class:`SingularInertia` if ``M`` fails to be positive definite on a ``q2`` grid."""
    lo, _ = inertia_bounds(params, n_grid)
    bad = np.flatnonzero(lo <= DET_MIN)
    if bad.size:
        raise SingularInertia(
            f"inertia matrix is not positive definite for arm(s) {(bad + 1).tolist()} "
            f"(min eigenvalue {lo.min():.3e}); check theta1*theta2 > theta3^2"
        )


def arm_acceleration(theta, g: float, q, qd, tau) -> np.ndarray:
    """Batched ``M^{-1}(tau - C qd - G)`` written out elementwise for the simulator.

    Same result as :func:`forward_dynamics` without building the matrices.
    """
    t1, t2, t3, t4, t5 = theta.T
    q1, q2 = q[:, 0], q[:, 1]
    w1, w2 = qd[:, 0], qd[:, 1]
    c2 = np.cos(q2)
    h = t3 * np.sin(q2)
    c12 = g * np.cos(q1 + q2)
    m11 = t1 + t2 + 2 * t3 * c2
    m12 = t2 + t3 * c2
    det = m11 * t2 - m12 * m12
    if np.any(det <= DET_MIN):
        raise SingularInertia(f"inertia matrix determinant {np.min(det):.3e} is not positive")
    r1 = tau[:, 0] + h * w2 * w1 + h * (w1 + w2) * w2 - t4 * g * np.cos(q1) - t5 * c12
    r2 = tau[:, 1] - h * w1 * w1 - t5 * c12
    out = np.empty_like(q)
    out[:, 0] = (t2 * r1 - m12 * r2) / det
    out[:, 1] = (m11 * r2 - m12 * r1) / det
    return out
