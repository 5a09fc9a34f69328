"""Uncertain nonlinear leader models ``v' = phi(v) @ omega`` with output ``E v``.

Every function accepts a single state of shape ``(m,)`` or a batch of shape
``(..., m)``; regressors come back with shape ``(..., m, l)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class LeaderModel:
    state_dim: int
    param_dim: int
    output_matrix: np.ndarray
    true_params: np.ndarray
    regressor: Callable[[np.ndarray], np.ndarray]
    regressor_rate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    poly_degree: int
    name: str = "custom"
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.output_matrix, dtype=float))
        w = np.asarray(self.true_params, dtype=float).reshape(-1)
        if E.shape[1] != self.state_dim:
            raise DimensionMismatch(f"output matrix has {E.shape[1]} columns, state dim is {self.state_dim}")
        if w.shape[0] != self.param_dim:
            raise DimensionMismatch(f"true_params has length {w.shape[0]}, expected {self.param_dim}")
        if self.poly_degree < 1:
            raise ValueError("poly_degree must be >= 1")
        E.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "output_matrix", E)
        object.__setattr__(self, "true_params", w)

    @property
    def output_dim(self) -> int:
        return self.output_matrix.shape[0]

    def with_params(self, omega) -> "LeaderModel":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["true_params"] = omega
        return LeaderModel(**kw)

    def with_output_matrix(self, E) -> "LeaderModel":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["output_matrix"] = E
        return LeaderModel(**kw)


def _check_state(model: LeaderModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] != model.state_dim:
        raise DimensionMismatch(f"state has shape {v.shape}, expected (..., {model.state_dim})")
    return v


def eval_phi(model: LeaderModel, v) -> np.ndarray:
    return model.regressor(_check_state(model, v))


def eval_p(model: LeaderModel, v, omega=None) -> np.ndarray:
    """Vector field ``phi(v) @ omega``; ``omega`` defaults to the true parameters."""
    w = model.true_params if omega is None else np.asarray(omega, dtype=float)
    if w.shape[-1] != model.param_dim:
        raise DimensionMismatch(f"omega has shape {w.shape}, expected (..., {model.param_dim})")
    phi = eval_phi(model, v)
    return np.einsum("...ij,...j->...i", phi, w)


def eval_phi_rate(model: LeaderModel, v, vdot) -> np.ndarray:
    """Time derivative of ``phi(v(t))`` given ``v`` and ``v'``."""
    v = _check_state(model, v)
    vdot = _check_state(model, vdot)
    return model.regressor_rate(v, vdot)


def leader_output(model: LeaderModel, v) -> np.ndarray:
    v = _check_state(model, v)
    return v @ model.output_matrix.T


# -- Van der Pol --------------------------------------------------------------


def _vdp_phi(v):
    out = np.zeros(v.shape[:-1] + (2, 3))
    v1 = v[..., 0]
    v2 = v[..., 1]
    out[..., 0, 0] = v2
    out[..., 1, 1] = -v1
    out[..., 1, 2] = (1.0 - v1 * v1) * v2
    return out


def _vdp_phi_rate(v, vd):
    out = np.zeros(v.shape[:-1] + (2, 3))
    v1 = v[..., 0]
    v2 = v[..., 1]
    out[..., 0, 0] = vd[..., 1]
    out[..., 1, 1] = -vd[..., 0]
    out[..., 1, 2] = -2.0 * v1 * vd[..., 0] * v2 + (1.0 - v1 * v1) * vd[..., 1]
    return out


def van_der_pol(omega=(1.0, 1.0, 1.0), output_matrix=None) -> LeaderModel:
    """Van der Pol leader ``(a v2, -b v1 + c (1 - v1^2) v2)`` with ``omega = (a, b, c)``."""
    E = np.eye(2) if output_matrix is None else output_matrix
    return LeaderModel(
        state_dim=2,
        param_dim=3,
        output_matrix=E,
        true_params=omega,
        regressor=_vdp_phi,
        regressor_rate=_vdp_phi_rate,
        poly_degree=3,
        name="van_der_pol",
    )


# -- generic polynomial leader -------------------------------------------------


def polynomial_leader(
    state_dim: int,
    param_dim: int,
    terms: Mapping[tuple[int, int], Sequence[tuple[float, Sequence[int]]]],
    omega,
    output_matrix=None,
) -> LeaderModel:
    """Leader whose regressor entries are polynomials in ``v``.

    ``terms[(row, col)]`` is a list of ``(coefficient, exponents)`` monomials,
    ``exponents`` having one nonnegative integer per state coordinate.  Constant
    monomials are rejected since the vector field must vanish at the origin.
    The polynomial degree used by the gain recipe is the largest total degree.
    """
    m, l = int(state_dim), int(param_dim)
    table = []
    degree = 1
    for (r, c), monos in terms.items():
        if not (0 <= r < m and 0 <= c < l):
            raise DimensionMismatch(f"regressor entry ({r}, {c}) outside {m}x{l}")
        for coef, exps in monos:
            exps = tuple(int(e) for e in exps)
            if len(exps) != m or min(exps) < 0:
                raise DimensionMismatch(f"exponent tuple {exps} must have {m} nonnegative entries")
            if sum(exps) == 0:
                raise ValueError("constant monomials violate phi(0) = 0")
            degree = max(degree, sum(exps))
            table.append((r, c, float(coef), np.array(exps)))

    def phi(v):
        out = np.zeros(v.shape[:-1] + (m, l))
        for r, c, coef, e in table:
            out[..., r, c] += coef * np.prod(v ** e, axis=-1)
        return out

    def phi_rate(v, vd):
        out = np.zeros(v.shape[:-1] + (m, l))
        for r, c, coef, e in table:
            for k in np.flatnonzero(e):
                ek = e.copy()
                ek[k] -= 1
                out[..., r, c] += coef * e[k] * np.prod(v ** ek, axis=-1) * vd[..., k]
        return out

    E = np.eye(m) if output_matrix is None else output_matrix
    spec = {"terms": [[r, c, coef, e.tolist()] for r, c, coef, e in table]}
    return LeaderModel(m, l, E, omega, phi, phi_rate, degree, name="polynomial", spec=spec)
