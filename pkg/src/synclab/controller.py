"""Observer-based adaptive synchronization law for Euler-Lagrange followers.

Reference velocity shifts the estimated leader output rate by the tracking
error, ``s`` is the velocity error against it, and the torque combines a
damping term with a certainty-equivalence feedforward ``Y theta_hat``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidGain
from .leader import LeaderModel


@dataclass(frozen=True, eq=False)
class ControllerGains:
    K: np.ndarray
    Gamma: np.ndarray
    alpha: float

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        K = K * np.eye(2) if K.ndim == 0 else K
        G = np.asarray(self.Gamma, dtype=float)
        G = np.full(5, float(G)) if G.ndim == 0 else (np.diag(G).copy() if G.ndim == 2 else G)
        if K.shape != (2, 2):
            raise DimensionMismatch(f"K must be 2x2, got {K.shape}")
        if G.shape != (5,):
            raise DimensionMismatch(f"Gamma must have 5 diagonal entries, got {G.shape}")
        if not np.allclose(K, K.T) or np.linalg.eigvalsh(K)[0] <= 0:
            raise InvalidGain("K must be symmetric positive definite")
        if np.any(G <= 0):
            raise InvalidGain("Gamma diagonal entries must be positive")
        if not self.alpha > 0:
            raise InvalidGain("alpha must be positive")
        K.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def Gamma_matrix(self) -> np.ndarray:
        return np.diag(self.Gamma)


@dataclass
class ControllerState:
    theta_hat: np.ndarray


def _mv(a, x):
    return np.einsum("...ij,...j->...i", a, x)


def _check_output(model: LeaderModel):
    if model.output_dim != 2:
        raise DimensionMismatch(f"leader output dimension {model.output_dim} does not match the 2 arm joints")


def ref_velocity(model: LeaderModel, v_hat, omega_hat, q, alpha: float) -> np.ndarray:
    """``E phi(v_hat) omega_hat - alpha (q - E v_hat)``."""
    _check_output(model)
    E = model.output_matrix
    v_hat = np.asarray(v_hat, dtype=float)
    phi = model.regressor(v_hat)
    return _mv(E, _mv(phi, np.asarray(omega_hat, dtype=float))) - alpha * (np.asarray(q, dtype=float) - _mv(E, v_hat))


def ref_acceleration(model: LeaderModel, v_hat, omega_hat, omega_hat_dot, v_hat_dot, qd, alpha: float) -> np.ndarray:
    """Time derivative of :func:`ref_velocity` given the observer rates."""
    _check_output(model)
    E = model.output_matrix
    v_hat = np.asarray(v_hat, dtype=float)
    v_hat_dot = np.asarray(v_hat_dot, dtype=float)
    phi = model.regressor(v_hat)
    phi_dot = model.regressor_rate(v_hat, v_hat_dot)
    w = np.asarray(omega_hat, dtype=float)
    wd = np.asarray(omega_hat_dot, dtype=float)
    return _mv(E, _mv(phi, wd) + _mv(phi_dot, w)) - alpha * (np.asarray(qd, dtype=float) - _mv(E, v_hat_dot))


def sliding_error(qd, q_hat_dot) -> np.ndarray:
    return np.asarray(qd, dtype=float) - np.asarray(q_hat_dot, dtype=float)


def control_torque(gains: ControllerGains, Y, s, theta_hat) -> np.ndarray:
    return -_mv(gains.K, np.asarray(s, dtype=float)) + _mv(np.asarray(Y, dtype=float), np.asarray(theta_hat, dtype=float))


def theta_hat_derivative(gains: ControllerGains, Y, s) -> np.ndarray:
    return -gains.Gamma * np.einsum("...ji,...j->...i", np.asarray(Y, dtype=float), np.asarray(s, dtype=float))
