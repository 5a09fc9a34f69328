import numpy as np
import pytest

from synclab.errors import DimensionMismatch
from synclab.leader import (
    eval_p,
    eval_phi,
    eval_phi_rate,
    leader_output,
    polynomial_leader,
    van_der_pol,
)
from synclab.sim import rk4_step

VDP = van_der_pol((1.0, 1.0, 1.0))


def test_eval_p_examples():
    np.testing.assert_array_equal(eval_p(VDP, [2, 2], [1, 1, 1]), [2, -8])
    np.testing.assert_array_equal(eval_p(VDP, [1, 0], [1, 1, 1]), [0, -1])
    np.testing.assert_array_equal(eval_p(VDP, [0, 0], [3, -2, 5]), [0, 0])


def test_eval_phi_examples():
    np.testing.assert_array_equal(eval_phi(VDP, [2, 2]), [[2, 0, 0], [0, -2, -6]])
    np.testing.assert_array_equal(eval_phi(VDP, [0, 1]), [[1, 0, 0], [0, 0, 1]])
    np.testing.assert_array_equal(eval_phi(VDP, [0, 0]), np.zeros((2, 3)))


def test_leader_output_examples():
    np.testing.assert_array_equal(leader_output(VDP, [2, 2]), [2, 2])
    np.testing.assert_array_equal(leader_output(VDP.with_output_matrix([[1, 0]]), [2, 3]), [2])
    np.testing.assert_array_equal(leader_output(VDP, [0, 0]), [0, 0])


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        eval_phi(VDP, [1, 2, 3])
    with pytest.raises(DimensionMismatch):
        eval_p(VDP, [1, 2], [1, 1])
    with pytest.raises(DimensionMismatch):
        van_der_pol(output_matrix=np.eye(3))


def test_vector_field_factorizes(rng):
    v = rng.uniform(-5, 5, (1000, 2))
    w = rng.uniform(-3, 3, (1000, 3))
    a, b, c = w.T
    direct = np.stack([a * v[:, 1], -b * v[:, 0] + c * (1 - v[:, 0] ** 2) * v[:, 1]], -1)
    np.testing.assert_allclose(eval_p(VDP, v, w), direct, atol=1e-13, rtol=0)
    via_phi = np.einsum("kij,kj->ki", eval_phi(VDP, v), w)
    assert np.abs(eval_p(VDP, v, w) - via_phi).max() <= 1e-13


def _fd_rate(model, v, vd, h=1e-5):
    return (eval_phi(model, v + h * vd) - eval_phi(model, v - h * vd)) / (2 * h)


@pytest.mark.parametrize("model", [VDP, polynomial_leader(
    3, 2, {(0, 0): [(1.0, (0, 1, 0))], (1, 1): [(2.0, (1, 0, 2)), (-1.0, (0, 0, 1))],
           (2, 0): [(0.5, (2, 1, 1))]}, [1.0, 0.5])], ids=["vdp", "poly3"])
def test_regressor_rate_matches_finite_differences(model, rng):
    m = model.state_dim
    for _ in range(200):
        v = rng.uniform(-2, 2, m)
        vd = rng.uniform(-2, 2, m)
        exact = eval_phi_rate(model, v, vd)
        fd = _fd_rate(model, v, vd)
        scale = max(np.abs(exact).max(), 1e-3)
        assert np.abs(exact - fd).max() / scale <= 1e-6


def test_polynomial_leader_reproduces_van_der_pol(rng):
    terms = {
        (0, 0): [(1.0, (0, 1))],
        (1, 1): [(-1.0, (1, 0))],
        (1, 2): [(1.0, (0, 1)), (-1.0, (2, 1))],
    }
    poly = polynomial_leader(2, 3, terms, [1.0, 1.0, 1.0])
    assert poly.poly_degree == 3
    v = rng.normal(size=(50, 2))
    vd = rng.normal(size=(50, 2))
    np.testing.assert_allclose(eval_phi(poly, v), eval_phi(VDP, v), atol=1e-13)
    np.testing.assert_allclose(eval_phi_rate(poly, v, vd), eval_phi_rate(VDP, v, vd), atol=1e-13)


def test_polynomial_leader_rejects_constant_term():
    with pytest.raises(ValueError, match="phi\\(0\\)"):
        polynomial_leader(1, 1, {(0, 0): [(1.0, (0,))]}, [1.0])


def test_trajectories_from_initial_ball_stay_bounded():
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    ring = np.stack([np.cos(ang), np.sin(ang)], 1)
    v = np.concatenate([8 * ring, 3 * ring, [[0.1, 0.0]]])
    dt = 5e-3
    peak = np.linalg.norm(v, axis=1)
    f = lambda t, y: eval_p(VDP, y)  # noqa: E731
    for k in range(int(200 / dt)):
        v = rk4_step(f, v, k * dt, dt)
        peak = np.maximum(peak, np.linalg.norm(v, axis=1))
    assert peak.max() < 10.0
