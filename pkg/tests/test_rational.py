import numpy as np
import pytest

from dlekrylov.dense import SolvabilityError, frob_norm
from dlekrylov.rational import eval_rational_exp, rational_exp_coefficients
from dlekrylov.solvers import expm_action_rational, expm_action_small


@pytest.mark.parametrize("degree,sup_tol", [(10, 1e-9), (14, 1e-12), (16, 1e-12)])
def test_coefficients_sup_error(degree, sup_tol):
    a0, poles, residues = rational_exp_coefficients(degree)
    xs = np.linspace(-60.0, 0.0, 5001)
    err = np.max(np.abs(eval_rational_exp(a0, poles, residues, xs) - np.exp(xs)))
    assert err <= sup_tol


def test_coefficients_conjugate_closed():
    _, poles, residues = rational_exp_coefficients(12)
    assert np.allclose(np.sort_complex(poles), np.sort_complex(poles.conj()))
    # real evaluation without taking real parts explicitly
    x = -3.7
    total = sum(c / (x - z) for z, c in zip(poles, residues))
    assert abs(total.imag) <= 1e-13 * max(abs(total.real), 1.0)


def test_poles_avoid_negative_axis():
    _, poles, _ = rational_exp_coefficients(16)
    on_axis = (np.abs(poles.imag) < 1e-10) & (poles.real <= 0)
    assert not on_axis.any()


def test_rational_action_constant_coeffs():
    B = np.arange(6.0).reshape(3, 2)
    out = expm_action_rational(np.eye(3), B, 1.0, (1.0, [], []))
    np.testing.assert_array_equal(out, B)


def test_rational_action_single_pole_scalar():
    # r(x) = a0 + a1/(x - theta) evaluated at x = s*t
    a0, a1, theta = 0.3, -1.2, 2.5
    t_val, s = -0.8, 1.7
    T = np.array([[t_val]])
    B = np.array([[2.0]])
    out = expm_action_rational(T, B, s, (a0, [theta], [a1]))
    expected = (a0 + a1 / (s * t_val - theta)) * 2.0
    assert out[0, 0] == pytest.approx(expected, rel=1e-14)


def test_rational_action_matches_expm_degree16():
    rng = np.random.default_rng(0)
    S = rng.standard_normal((12, 12))
    T = -(S @ S.T) / 12.0 - 0.5 * np.eye(12)      # stable symmetric
    B = rng.standard_normal((12, 2))
    coeffs = rational_exp_coefficients(16)
    s = 1.3
    approx = expm_action_rational(T, B, s, coeffs)
    exact = expm_action_small(T, B, s)
    assert frob_norm(approx - exact) <= 1e-10 * frob_norm(B)


def test_rational_action_singular_shift_raises():
    T = np.array([[2.0]])
    B = np.array([[1.0]])
    with pytest.raises(SolvabilityError):
        expm_action_rational(T, B, 1.0, (0.0, [2.0], [1.0]))
