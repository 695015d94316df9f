import math

import numpy as np
import pytest

from rlmc import oracle
from rlmc.potential import Potential
from rlmc.sampler import (coupled_one_step, ou_exact_step, rlmc_step, run_constant,
                          run_decreasing, run_ensemble, ula_step)
from rlmc.schedule import ScheduleError, StepSchedule
from rlmc.streams import RngStreams


def test_zero_noise_step(unit_quadratic):
    x_next, mid = rlmc_step(unit_quadratic, np.array([1.0]), 0.1, 0.5, np.zeros(1), np.zeros(1))
    assert mid[0] == pytest.approx(0.95, abs=1e-15)
    assert x_next[0] == pytest.approx(0.905, abs=1e-15)


@pytest.mark.parametrize("p", [Potential.quadratic([1.0, 3.0]), Potential.logcosh_ridge(1.0, 2.0, dim=2)])
def test_u_zero_is_ula(p):
    r = np.random.default_rng(0)
    x = r.standard_normal((20, 2))
    xi, xi_p = r.standard_normal((2, 20, 2))
    y, mid = rlmc_step(p, x, 0.07, np.zeros(20), xi, xi_p)
    np.testing.assert_array_equal(mid, x)
    np.testing.assert_array_equal(y, ula_step(p, x, 0.07, xi))


def test_step_continuity_in_gamma(unit_quadratic):
    x = np.array([1.3])
    for g in (1e-4, 1e-8, 1e-12):
        y, _ = rlmc_step(unit_quadratic, x, g, 0.3, np.ones(1), np.ones(1))
        assert abs(y[0] - x[0]) < 10 * math.sqrt(g)


@pytest.mark.parametrize("gamma", [0.0, -0.1])
def test_nonpositive_step_rejected(unit_quadratic, gamma):
    with pytest.raises(ValueError):
        rlmc_step(unit_quadratic, [1.0], gamma, 0.5, [0.0], [0.0])
    with pytest.raises(ValueError):
        ula_step(unit_quadratic, [1.0], gamma, [0.0])


def test_conditional_mean_mc(unit_quadratic, rng):
    n, g = 10 ** 6, 0.1
    y, _ = rlmc_step(unit_quadratic, np.ones((n, 1)), g, rng.draw_u(n),
                     rng.draw_xi((n, 1)), rng.draw_xi_prime((n, 1)))
    se = y.std() / math.sqrt(n)
    assert abs(y.mean() - (1 - g + g * g / 2)) < 4 * se


def test_ula_examples(unit_quadratic, rng):
    assert ula_step(unit_quadratic, [1.0], 0.1, [0.0])[0] == pytest.approx(0.9)
    assert ula_step(unit_quadratic, [0.0], 0.1, [0.0])[0] == 0.0
    n = 10 ** 6
    y = ula_step(unit_quadratic, np.ones((n, 1)), 0.1, rng.draw_xi((n, 1)))
    v = y[:, 0] ** 2
    assert abs(v.mean() - 1.01) < 4 * v.std() / math.sqrt(n)


def test_run_constant_zero_steps(unit_quadratic, rng):
    run = run_constant(unit_quadratic, 0.1, [2.0], 0, rng)
    assert run.states.shape == (1, 1) and run.states[0, 0] == 2.0 and run.n_steps == 0


def test_run_deterministic_and_chunk_invariant():
    p = Potential.logcosh_ridge(1.0, 2.0, dim=3)
    a = run_constant(p, 0.05, [1.0, -1.0, 0.5], 5000, RngStreams(8), keep_midpoints=True)
    b = run_constant(p, 0.05, [1.0, -1.0, 0.5], 5000, RngStreams(8), keep_midpoints=True, chunk=333)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.midpoints, b.midpoints)
    assert a.states[0].tolist() == [1.0, -1.0, 0.5]


def test_run_prefix_invariant(unit_quadratic):
    short = run_constant(unit_quadratic, 0.1, [0.0], 100, RngStreams(3), chunk=64)
    long = run_constant(unit_quadratic, 0.1, [0.0], 1000, RngStreams(3), chunk=64)
    np.testing.assert_array_equal(short.states, long.states[:101])


def test_run_matches_single_steps(unit_quadratic):
    run = run_constant(unit_quadratic, 0.1, [1.0], 50, RngStreams(4), keep_midpoints=True)
    r = RngStreams(4)
    u, xp, xi = r.draw_u(50), r.draw_xi_prime((50, 1)), r.draw_xi((50, 1))
    x = np.array([1.0])
    for k in range(50):
        x, mid = rlmc_step(unit_quadratic, x, 0.1, u[k], xi[k], xp[k])
        assert x[0] == pytest.approx(run.states[k + 1, 0], rel=1e-14, abs=1e-15)
        assert mid[0] == pytest.approx(run.midpoints[k, 0], rel=1e-14, abs=1e-15)


def test_decreasing_zero_noise_is_product(unit_quadratic, zero_noise):
    s = StepSchedule.polynomial(2, 1)
    run = run_decreasing(unit_quadratic, s, [1.0], 200, zero_noise)
    u = RngStreams(zero_noise.seed).draw_u(200)
    g = s.gammas(200)
    expected = np.concatenate(([1.0], np.cumprod(1 - g + u * g * g)))
    np.testing.assert_allclose(run.states[:, 0], expected, rtol=1e-13)


def test_decreasing_rejects_invalid_schedule(unit_quadratic, rng):
    with pytest.raises(ScheduleError, match="omega"):
        run_decreasing(unit_quadratic, StepSchedule.polynomial(0.5, 1), [0.0], 10, rng)


def test_ensemble_second_moment_matches_recursion(unit_quadratic):
    s = StepSchedule.polynomial(2, 1)
    n = 20000
    out = run_ensemble(unit_quadratic, s, [1.0], n, [0, 10, 100], RngStreams(11))
    exact = oracle.moment_recursion(unit_quadratic, s, [1.0], 100)
    assert np.all(out[0] == 1.0)
    for k in (10, 100):
        v = out[k][:, 0] ** 2
        assert abs(v.mean() - exact[k]) < 4 * v.std() / math.sqrt(n)


def test_ou_second_moment(rng):
    p = Potential.quadratic([2.0, 2.0])
    x, t, n = np.array([1.0, -1.0]), 0.3, 10 ** 6
    y = ou_exact_step(p, x, t, rng, n=n)
    v = np.sum(y * y, axis=1)
    exact = 2 * math.exp(-4 * t) + (2 / 2) * (1 - math.exp(-4 * t))
    assert abs(v.mean() - exact) < 4 * v.std() / math.sqrt(n)


def test_ou_time_zero_and_large(unit_quadratic, rng):
    np.testing.assert_array_equal(ou_exact_step(unit_quadratic, [1.5], 0.0, rng), [1.5])
    y = ou_exact_step(unit_quadratic, [5.0], 50.0, rng, n=10 ** 5)
    assert abs(y.mean()) < 0.02 and abs(y.var() - 1) < 0.02


def test_ou_dense_matrix_covariance(rng):
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    p = Potential.quadratic(A)
    y = ou_exact_step(p, [0.0, 0.0], 100.0, rng, n=10 ** 5)
    np.testing.assert_allclose(np.cov(y.T), np.linalg.inv(A), atol=0.03)


def test_ou_rejects_nonquadratic(rng):
    with pytest.raises(ValueError):
        ou_exact_step(Potential.logcosh_ridge(1, 1), [0.0], 1.0, rng)


def test_coupled_zero_noise_mean(unit_quadratic, zero_noise):
    g, x, n = 1e-2, 1.0, 10 ** 6
    xe, y = coupled_one_step(unit_quadratic, [x], g, zero_noise, n=n)
    diff = (xe - y)[:, 0]
    expected = (math.exp(-g) - (1 - g + g * g / 2)) * x
    assert abs(diff.mean() - expected) < 4 * diff.std() / math.sqrt(n)
    np.testing.assert_allclose(xe, math.exp(-g) * x, rtol=1e-15)


@pytest.mark.parametrize("lam, x, g", [(1.0, 1.0, 0.1), (2.0, -3.0, 0.05)])
def test_coupled_error_matches_closed_form(lam, x, g, rng):
    n = 10 ** 6
    xe, y = coupled_one_step(Potential.quadratic([lam]), [x], g, rng, n=n)
    v = (xe - y)[:, 0] ** 2
    assert abs(v.mean() - oracle.coupled_error_second_moment(lam, x, g)) < 4 * v.std() / math.sqrt(n)


def test_coupled_marginals(unit_quadratic, rng):
    n = 10 ** 6
    xe, y = coupled_one_step(unit_quadratic, [1.0], 0.2, rng, n=n)
    law = oracle.ou_transition(unit_quadratic, [1.0], 0.2)
    assert abs(xe.mean() - law.mean[0]) < 4 * math.sqrt(law.var[0] / n)
    assert xe.var() == pytest.approx(law.var[0], rel=0.01)
    exact = oracle.one_step_second_moment(unit_quadratic, [1.0], 0.2)
    assert float(np.mean(y ** 2)) == pytest.approx(exact, rel=0.01)


def test_coupled_step_range(unit_quadratic, rng):
    with pytest.raises(ValueError):
        coupled_one_step(unit_quadratic, [1.0], 1.0, rng)


def test_trajectory_csv(tmp_path, unit_quadratic):
    run = run_decreasing(unit_quadratic, StepSchedule.polynomial(2, 1), [1.0], 5, RngStreams(1))
    path = tmp_path / "traj.csv"
    run.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,t_k,gamma_k,x_1"
    assert len(lines) == 7
    k, t, g, x = lines[2].split(",")
    assert (int(k), float(t), float(g)) == (1, 2.0, 2.0)
