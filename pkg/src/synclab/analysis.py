"""Diagnostics over simulation logs: persistent excitation, Lyapunov
functions, and trailing-window convergence metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerGains
from .errors import DimensionMismatch, InsufficientSamples
from .lagrange import TwoLinkArmParams, mass_matrix
from .leader import LeaderModel
from .sim import SimLog


@dataclass
class PEReport:
    window: float
    start: float
    min_gram_eigenvalue: float
    window_starts: np.ndarray
    eigenvalues: np.ndarray

    def to_csv(self, path) -> None:
        data = np.column_stack([self.window_starts, self.eigenvalues])
        np.savetxt(path, data, delimiter=",", header="window_start,min_eigenvalue", comments="", fmt="%.17g")


def _cumulative_gram(t, f):
    prod = np.einsum("kij,klj->kil", f, f)
    steps = 0.5 * (prod[1:] + prod[:-1]) * np.diff(t)[:, None, None]
    cum = np.zeros_like(prod)
    np.cumsum(steps, axis=0, out=cum[1:])
    return cum


def window_grams(t, f, T0: float, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid-rule ``(1/T0) int_s^{s+T0} f f^T`` for each grid start ``s >= t0``.

    ``f`` has shape ``(K, n, m)`` sampled on the increasing grid ``t``.  The
    window end is located by linear interpolation of the cumulative integral,
    so ``T0`` need not be a multiple of the sample spacing.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        f = f[:, :, None]
    if f.shape[0] != t.shape[0]:
        raise DimensionMismatch(f"{f.shape[0]} samples for {t.shape[0]} time points")
    if not T0 > 0:
        raise InsufficientSamples("window length must be positive")
    if t0 < t[0] - 1e-12 or T0 > t[-1] - t0 + 1e-9:
        raise InsufficientSamples(f"samples cover [{t[0]}, {t[-1]}], need [{t0}, {t0 + T0}]")
    starts = np.flatnonzero((t >= t0 - 1e-12) & (t + T0 <= t[-1] + 1e-9))
    if starts.size == 0 or np.count_nonzero((t >= t[starts[0]]) & (t <= t[starts[0]] + T0)) < 2:
        raise InsufficientSamples("window contains fewer than two samples")
    cum = _cumulative_gram(t, f)
    ends = np.minimum(t[starts] + T0, t[-1])
    flat = cum.reshape(len(t), -1)
    end_vals = np.stack([np.interp(ends, t, flat[:, c]) for c in range(flat.shape[1])], -1)
    grams = (end_vals.reshape((len(starts),) + cum.shape[1:]) - cum[starts]) / T0
    return t[starts], grams


def pe_measure(t, f, T0: float, t0: float = 0.0) -> PEReport:
    """Sliding-window persistent-excitation estimate of a sampled matrix signal."""
    starts, grams = window_grams(t, f, T0, t0)
    sym = 0.5 * (grams + np.swapaxes(grams, -1, -2))
    eig = np.linalg.eigvalsh(sym)[:, 0]
    return PEReport(float(T0), float(t0), float(eig.min()), starts, eig)


def estimate_period(t, x, t_min: float = 0.0) -> float:
    """Mean spacing of upward zero crossings of ``x`` after ``t_min``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    mask = t >= t_min
    t, x = t[mask], x[mask]
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    if idx.size < 2:
        raise InsufficientSamples("need at least two upward zero crossings to estimate a period")
    frac = -x[idx] / (x[idx + 1] - x[idx])
    crossings = t[idx] + frac * (t[idx + 1] - t[idx])
    return float(np.mean(np.diff(crossings)))


def regressor_signal(model: LeaderModel, v) -> np.ndarray:
    """``phi(v(t))^T`` stacked over samples, shape ``(K, l, m)``."""
    return np.swapaxes(model.regressor(np.asarray(v, dtype=float)), -1, -2)


def observer_lyapunov(log: SimLog, H, mu: float, kappa_bar=None) -> np.ndarray:
    """``V = 1/2 [v_err^T (H kron I) v_err + omega_err^T omega_err / mu + sum (kappa - kappa_bar)^2]``.

    ``kappa_bar`` is a proxy for the unknown sufficient gain and defaults to
    the final ``kappa_hat``, so ``V`` is a diagnostic rather than a certificate.
    """
    H = np.asarray(H, dtype=float)
    n = log.num_followers
    if H.shape != (n, n):
        raise DimensionMismatch(f"H has shape {H.shape}, expected ({n}, {n})")
    kb = log.kappa_hat[-1] if kappa_bar is None else np.asarray(kappa_bar, dtype=float)
    if kb.shape != (n,):
        raise DimensionMismatch(f"kappa_bar must have {n} entries")
    ve = log.v_err
    quad = np.einsum("kim,ij,kjm->k", ve, H, ve)
    w = log.omega_hat - log.config.leader.true_params
    return 0.5 * (quad + np.einsum("kil,kil->k", w, w) / mu + ((log.kappa_hat - kb) ** 2).sum(axis=1))


def agent_lyapunov(log: SimLog, arms: TwoLinkArmParams | None = None, gains: ControllerGains | None = None):
    """Per-arm ``V_i = 1/2 (s^T M s + theta_err^T Gamma^{-1} theta_err)``, shape ``(K, N)``."""
    if not log.has_arms:
        raise DimensionMismatch("log has no arm states")
    arms = log.config.arms if arms is None else arms
    gains = log.config.gains if gains is None else gains
    m = mass_matrix(TwoLinkArmParams(arms.theta[None], arms.g), log.q)
    s = log.s
    th = log.theta_hat - arms.theta
    return 0.5 * (np.einsum("kni,knij,knj->kn", s, m, s) + np.einsum("kni,kni->kn", th / gains.Gamma, th))


def convergence_metrics(log: SimLog, window_fraction: float = 0.1) -> dict:
    """Maxima of the error signals over the trailing ``window_fraction`` of the run."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    t = log.t
    t_from = t[-1] - window_fraction * (t[-1] - t[0])
    w = t >= t_from - 1e-12
    per = lambda a: a[w].max(axis=0).tolist()  # noqa: E731
    kap = log.kappa_hat[w]
    out = {
        "t_end": float(t[-1]),
        "window_start": float(t[w][0]),
        "window_fraction": float(window_fraction),
        "max_v_err": per(np.linalg.norm(log.v_err, axis=-1)),
        "max_omega_err": per(log.omega_err_norm),
        "kappa_final": log.kappa_hat[-1].tolist(),
        "kappa_total_variation": np.abs(np.diff(kap, axis=0)).sum(axis=0).tolist(),
        "kappa_nondecreasing": bool(np.all(np.diff(log.kappa_hat, axis=0) >= 0)),
        "all_finite": bool(all(np.isfinite(a).all() for a in (log.v, log.v_hat, log.omega_hat, log.kappa_hat))),
    }
    if log.has_arms:
        out.update(
            max_e=per(np.linalg.norm(log.e, axis=-1)),
            max_e_dot=per(np.linalg.norm(log.e_dot, axis=-1)),
            max_s=per(np.linalg.norm(log.s, axis=-1)),
            max_theta_err=per(log.theta_err_norm),
        )
        out["all_finite"] = out["all_finite"] and bool(np.isfinite(log.q).all() and np.isfinite(log.qd).all())
    return out
