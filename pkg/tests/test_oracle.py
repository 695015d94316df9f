from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlmc import oracle
from rlmc.oracle import GaussianLaw
from rlmc.potential import Potential
from rlmc.schedule import StepSchedule


def _stationary_variance_exact(lam, eta):
    h = Fraction(eta) * Fraction(lam)
    ea2 = (1 - h) ** 2 + (1 - h) * h ** 2 + h ** 4 / 3
    return (2 * Fraction(eta) + Fraction(eta) ** 3 * Fraction(lam) ** 2) / (1 - ea2)


def test_stationary_variance_exact_rational():
    exact = _stationary_variance_exact(1, Fraction(1, 10))
    assert exact == Fraction(6030, 5429)
    assert oracle.rlmc_stationary_variance([1.0], 0.1)[0] == pytest.approx(float(exact), rel=1e-14)
    assert float(exact) == pytest.approx(1.11071, abs=1e-5)


@pytest.mark.parametrize("lam, eta", [(1.0, 0.4), (2.0, 0.05), (0.5, 1e-6), (3.0, 0.3)])
def test_stationary_variance_matches_rational(lam, eta):
    exact = float(_stationary_variance_exact(Fraction(lam), Fraction(eta)))
    assert oracle.rlmc_stationary_variance([lam], eta)[0] == pytest.approx(exact, rel=1e-12)


def test_stationary_variance_diffusion_limit():
    assert oracle.rlmc_stationary_variance([1.0, 4.0], 1e-9) == pytest.approx([1.0, 0.25], rel=1e-6)


@pytest.mark.parametrize("eta", [0.4, 0.1, 0.025])
def test_stationary_variance_fixed_point(eta):
    A = np.array([1.0, 2.5])
    s2 = oracle.rlmc_stationary_variance(A, eta)
    np.testing.assert_allclose(oracle.second_moment_step(A, s2, eta), s2, rtol=1e-12)


def test_stationary_variance_non_contracting():
    with pytest.raises(ValueError, match="eigenvalue"):
        oracle.rlmc_stationary_variance([1.0, 30.0], 0.1)


def test_bias_example():
    law = oracle.stationary_law([1.0], 0.1)
    assert oracle.gaussian_w2(law, oracle.target_law([1.0])) == pytest.approx(0.0539, abs=1e-4)


def test_moment_recursion_examples():
    A = [1.0]
    assert oracle.moment_recursion(A, StepSchedule.constant(0.1), [0.0], 0).tolist() == [0.0]
    m = oracle.moment_recursion(A, StepSchedule.constant(0.1), [0.0], 2000)
    assert m[-1] == pytest.approx(oracle.rlmc_stationary_variance(A, 0.1)[0], rel=1e-12)
    m = oracle.moment_recursion([1.0, 2.0], StepSchedule.constant(0.1), [1.0, -1.0], 1)
    assert m[1] == pytest.approx(oracle.one_step_second_moment([1.0, 2.0], [1.0, -1.0], 0.1))


def test_moment_recursion_decreasing_bounded():
    s = StepSchedule.polynomial(2, 1)
    m = oracle.moment_recursion([1.0], s, [0.0], 10 ** 5)
    g = s.gammas(10 ** 5)
    assert m.max() == m[1] == 12.0  # gamma_1 = 2: 0 * E[a^2] + 2*2 + 2^3
    ratio = (m[1:] - 1) / g
    assert ratio[-1] == pytest.approx(ratio[10 ** 4 - 1], rel=0.01)


@pytest.mark.parametrize("a, b, expected", [
    (GaussianLaw([0.0], [1.0]), GaussianLaw([0.0], [1.0]), 0.0),
    (GaussianLaw([0.0], [1.0]), GaussianLaw([0.0], [2.25]), 0.5),
    (GaussianLaw([1.0, 2.0], [1.0, 3.0]), GaussianLaw([4.0, -2.0], [1.0, 3.0]), 5.0),
])
def test_gaussian_w2_examples(a, b, expected):
    assert oracle.gaussian_w2(a, b) == pytest.approx(expected, abs=1e-15)


def test_gaussian_w2_dimension_mismatch():
    with pytest.raises(ValueError):
        oracle.gaussian_w2(GaussianLaw([0.0], [1.0]), GaussianLaw([0.0, 0.0], [1.0, 1.0]))


law = st.tuples(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
                st.lists(st.floats(0, 5), min_size=2, max_size=2)).map(lambda t: GaussianLaw(*t))


@settings(max_examples=100, deadline=None)
@given(a=law, b=law, c=law)
def test_gaussian_w2_triangle(a, b, c):
    assert oracle.gaussian_w2(a, c) <= oracle.gaussian_w2(a, b) + oracle.gaussian_w2(b, c) + 1e-12


def test_ou_transition_examples():
    t0 = oracle.ou_transition([1.0, 2.0], [1.0, -3.0], 0.0)
    assert t0.mean.tolist() == [1.0, -3.0] and t0.var.tolist() == [0.0, 0.0]
    inf = oracle.ou_transition([1.0, 2.0], [1.0, -3.0], np.inf)
    assert inf.var.tolist() == [1.0, 0.5] and inf.mean.tolist() == [0.0, 0.0]
    m, t, x = 2.0, 0.7, np.array([1.0, 2.0, -1.0])
    law3 = oracle.ou_transition([m] * 3, x, t)
    expected = x @ x * np.exp(-2 * m * t) + 3 / m * (1 - np.exp(-2 * m * t))
    assert law3.second_moment() == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        oracle.ou_transition([1.0], [0.0], -1.0)


def test_ou_variance_monotone_in_time():
    v = np.array([oracle.ou_transition([0.5, 3.0], [1.0, 1.0], t).var for t in np.linspace(0, 5, 50)])
    assert np.all(np.diff(v, axis=0) > 0)


def test_diagonal_only():
    with pytest.raises(ValueError):
        oracle.target_law([[1.0, 0.2], [0.2, 1.0]])


def test_coupled_error_small_step_order():
    # leading order 2 Var(S - B) ~ (2/3) lam^2 gamma^3 + h^2 gamma, so ratio to gamma^3 stays bounded
    vals = [oracle.coupled_error_second_moment(1.0, 3.0, g) / g ** 3 for g in (1e-2, 1e-3, 1e-4)]
    assert vals[-1] == pytest.approx(vals[-2], rel=0.02)


UNIT = Potential.quadratic([1.0])


def test_transition_density_matches_u_mixture():
    grid = np.linspace(0.9 - 6 * 0.45, 0.9 + 6 * 0.45, 101)
    q = oracle.transition_density(UNIT, 1.0, grid, 0.1)
    ref = oracle.transition_density_quadratic(1.0, 1.0, grid, 0.1)
    assert np.max(np.abs(q - ref)) < 1e-8
    assert np.all(q > 0)


def test_transition_density_node_doubling():
    p = Potential.logcosh_ridge(1.0, 2.0)
    grid = np.linspace(-2, 3, 41)
    a = oracle.transition_density(p, 1.0, grid, 0.1)
    b = oracle.transition_density(p, 1.0, grid, 0.1, n_u=128, n_y=128)
    assert np.max(np.abs(a - b)) < 1e-8


@pytest.mark.parametrize("p", [UNIT, Potential.logcosh_ridge(1.0, 2.0)])
def test_transition_density_normalized(p):
    edges = np.linspace(-8, 10, 361)
    assert oracle.transition_bin_probabilities(p, 1.0, edges, 0.1).sum() == pytest.approx(1.0, abs=1e-6)


def test_transition_density_scalar_and_far_tail_positive():
    assert isinstance(oracle.transition_density(UNIT, 1.0, 0.5, 0.1), float)
    assert oracle.transition_density(UNIT, 1.0, 3.0, 0.1) > 0


def test_transition_density_rejects_multivariate():
    with pytest.raises(ValueError):
        oracle.transition_density(Potential.quadratic([1.0, 1.0]), 1.0, 0.0, 0.1)
