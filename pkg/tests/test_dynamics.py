import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treesync.bounds import sufficient_kappa
from treesync.dynamics import (
    SimConfig,
    cohesiveness_check,
    edge_dynamics_residual,
    frequency_sync_metric,
    integrate,
    integrate_many,
    level_set_c,
    lyapunov_rate,
    lyapunov_rate_residual,
    lyapunov_v,
    phase_derivative,
    relative_phases,
    sync_metric_series,
    sync_time,
    write_trajectory_csv,
)
from treesync.errors import DegenerateEpsilon, DimensionMismatch, NonFiniteState, ValidationError
from treesync.graph import build_tree, random_tree, star

from conftest import OMEGA, OMEGA_BAR, THETA0, theta_from_deltas

PAIR = build_tree(2, [(0, 1)])


def elementwise_derivative(g, omega, kappa, theta):
    """theta_i' = omega_i (1 - kappa sum_{j in N_i} sin(theta_i - theta_j)), neighbour by neighbour."""
    out = np.empty(g.n)
    for i in range(g.n):
        out[i] = omega[i] * (1 - kappa * sum(math.sin(theta[i] - theta[j]) for j in g.neighbors(i)))
    return out


class TestPhaseDerivative:
    def test_uniform_phases(self, star4):
        np.testing.assert_allclose(phase_derivative(star4, OMEGA, 3.0, np.full(4, 0.7)), OMEGA)

    def test_uncoupled(self, star4):
        np.testing.assert_allclose(phase_derivative(star4, OMEGA, 0.0, THETA0), OMEGA)

    def test_pair(self):
        np.testing.assert_allclose(phase_derivative(PAIR, [1.0, 2.0], 1.0, [math.pi / 2, 0.0]), [0.0, 4.0], atol=1e-15)

    def test_matches_elementwise(self, rng):
        g = random_tree(9, rng)
        omega, theta = rng.uniform(1, 5, 9), rng.uniform(-2, 2, 9)
        np.testing.assert_allclose(phase_derivative(g, omega, 0.7, theta), elementwise_derivative(g, omega, 0.7, theta))

    def test_dimension_mismatch(self, star4):
        with pytest.raises(DimensionMismatch):
            phase_derivative(star4, OMEGA, 1.0, [0.0, 1.0])


class TestRelativePhases:
    def test_uniform(self, star4):
        np.testing.assert_array_equal(relative_phases(star4, np.full(4, 2.0)), 0)

    def test_pair(self):
        np.testing.assert_allclose(relative_phases(PAIR, [0.3, 1.1]), [0.3 - 1.1])

    def test_star_initial(self, star4):
        expected = [math.pi / 4 - math.pi / 10, math.pi / 4 - math.pi / 2, math.pi / 4 - math.pi / 5]
        np.testing.assert_allclose(relative_phases(star4, THETA0), expected)


class TestLyapunov:
    def test_uniform(self, star4):
        assert lyapunov_v(star4, np.full(4, 1.0)) == 0

    def test_single_edge_pi(self):
        assert lyapunov_v(PAIR, [math.pi, 0.0]) == pytest.approx(2.0)

    def test_single_edge_half_pi(self):
        assert lyapunov_v(PAIR, [math.pi / 2, 0.0]) == pytest.approx(1.0)

    def test_multiples_of_two_pi(self, star4):
        assert lyapunov_v(star4, [0.0, 2 * math.pi, -4 * math.pi, 0.0]) == pytest.approx(0, abs=1e-24)


class TestLevelSet:
    def test_shrinks_to_zero(self):
        assert level_set_c(math.pi / 2 - 1e-9) == pytest.approx(0, abs=1e-17)

    def test_epsilon_zero(self):
        assert level_set_c(0.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("eps", [0.05, math.pi / 10, 0.7, 1.3])
    def test_single_edge_grid(self, eps):
        # grid oracle: the sublevel set of one edge is exactly |delta| <= eta
        eta = math.pi / 2 - eps
        grid = np.linspace(-math.pi, math.pi, 200001)
        inside = 2 * np.sin(grid / 2) ** 2 <= level_set_c(eps)
        assert np.all(np.abs(grid[inside]) <= eta + 1e-4)
        assert np.all(inside[np.abs(grid) <= eta - 1e-4])

    def test_sublevel_set_inside_cohesive_set(self, rng):
        eps = math.pi / 10
        eta, c = math.pi / 2 - eps, level_set_c(eps)
        d = rng.uniform(-math.pi, math.pi, size=(100000, 5))
        V = 2 * np.sum(np.sin(d / 2) ** 2, axis=1)
        assert np.all(np.abs(d[V <= c]) <= eta + 1e-12)

    def test_maximal(self):
        # one edge just past eta and the rest at zero sits just above the level
        eps = math.pi / 10
        eta = math.pi / 2 - eps
        g = star(5)
        theta = theta_from_deltas(g, [eta + 1e-6, 0, 0, 0])
        assert lyapunov_v(g, theta) > level_set_c(eps)

    @pytest.mark.parametrize("eps", [-0.1, math.pi / 2])
    def test_degenerate(self, eps):
        with pytest.raises(DegenerateEpsilon):
            level_set_c(eps)


class TestIntegrate:
    def test_uncoupled_is_linear(self, star4):
        traj = integrate(star4, OMEGA, 0.0, THETA0, SimConfig(kappa=0.0, dt=1e-3, t_end=2.0, sample_stride=100))
        expected = THETA0 + np.outer(traj.times, OMEGA)
        assert np.abs(traj.thetas - expected).max() < 1e-10

    def test_identical_frequencies_phase_sync(self, rng):
        g = random_tree(6, rng)
        theta0 = theta_from_deltas(g, rng.uniform(-1, 1, 5))
        traj = integrate(g, np.full(6, 2.0), 0.5, theta0, SimConfig(kappa=0.5, dt=1e-3, t_end=30.0, sample_stride=50))
        assert np.abs(traj.relative_phases[-1]).max() < 1e-4
        np.testing.assert_allclose(traj.theta_dots[-1], 2.0, atol=1e-4)

    def test_star_sync_with_offsets(self, star4):
        traj = integrate(star4, OMEGA, 5.0, THETA0, SimConfig(kappa=5.0, dt=1e-3, t_end=5.0))
        assert sync_metric_series(star4, traj)[-1] < 1e-3
        assert np.abs(traj.relative_phases[-1]).max() > 1e-3

    def test_recorded_derivative_is_field(self, star4):
        traj = integrate(star4, OMEGA_BAR, 2.0, THETA0, SimConfig(kappa=2.0, dt=1e-3, t_end=1.0, sample_stride=37))
        for s in (0, 5, -1):
            np.testing.assert_allclose(traj.theta_dots[s], phase_derivative(star4, OMEGA_BAR, 2.0, traj.thetas[s]))

    def test_sampling(self, star4):
        traj = integrate(star4, OMEGA, 1.0, THETA0, SimConfig(kappa=1.0, dt=0.01, t_end=1.0, sample_stride=30))
        assert traj.times.tolist() == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
        assert traj.thetas.shape == traj.theta_dots.shape == (5, 4)
        assert traj.relative_phases.shape == (5, 3) and traj.lyapunov_v.shape == (5,)
        assert traj.times[-1] >= 1.0 - 0.01

    def test_fourth_order(self, star4):
        def final(dt):
            return integrate(star4, OMEGA, 5.0, THETA0, SimConfig(kappa=5.0, dt=dt, t_end=1.0, sample_stride=10**6)).final_theta

        h = 1e-3
        ref = final(h / 16)
        ratio = np.abs(final(h) - ref).max() / np.abs(final(h / 2) - ref).max()
        assert 12 <= ratio <= 20

    def test_divergence_guard(self, star4):
        with pytest.raises(NonFiniteState) as info:
            integrate(star4, [1e7, 1, 1, 1], 0.0, THETA0, SimConfig(kappa=0.0, dt=1e-3, t_end=1.0))
        assert info.value.time == 0.0

    def test_bad_config(self):
        with pytest.raises(ValidationError):
            SimConfig(kappa=1.0, dt=0.1, t_end=0.01)
        with pytest.raises(ValidationError):
            SimConfig(kappa=1.0, dt=0.1, t_end=1.0, sample_stride=0)

    def test_batch_matches_single(self, rng):
        cfg = SimConfig(kappa=1.0, dt=1e-3, t_end=2.0, sample_stride=100)
        instances = []
        for n in (2, 5, 8):
            g = random_tree(n, rng)
            instances.append((g, rng.uniform(1, 20, n), float(rng.uniform(0.5, 3)), rng.uniform(-0.5, 0.5, n)))
        for inst, traj in zip(instances, integrate_many(instances, cfg)):
            single = integrate(*inst, cfg)
            np.testing.assert_allclose(traj.thetas, single.thetas, rtol=0, atol=1e-12)
            np.testing.assert_allclose(traj.lyapunov_v, single.lyapunov_v, rtol=0, atol=1e-12)


class TestSyncMetric:
    def test_uniform_identical(self, star4):
        assert frequency_sync_metric(star4, np.full(4, 3.0), 2.0, np.zeros(4)) == 0

    def test_uncoupled(self, path4):
        assert frequency_sync_metric(path4, OMEGA_BAR, 0.0, THETA0) == 9

    def test_sync_time_requires_hold(self):
        times = np.arange(0, 3.01, 0.5)
        metric = np.array([1, 0, 0, 1, 0, 0, 0])
        assert sync_time(times, metric, threshold=0.5, hold=1.0) == 2.0
        assert sync_time(times, metric, threshold=0.5, hold=1.5) is None


class TestCohesiveness:
    def test_uniform(self, star4):
        assert cohesiveness_check(star4, np.ones(4), 0.0)

    def test_violation(self):
        eta = 0.8
        assert not cohesiveness_check(PAIR, [eta + 0.01, 0.0], eta)

    def test_initial_condition(self, star4):
        assert cohesiveness_check(star4, THETA0, math.pi / 2)


class TestEdgeDynamics:
    def test_zero_at_sync(self, star4):
        assert edge_dynamics_residual(star4, np.full(4, 2.0), 1.5, np.zeros(4)) == 0

    def test_uncoupled(self, star4):
        assert edge_dynamics_residual(star4, OMEGA, 0.0, THETA0) < 1e-9

    def test_random_states(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            g = random_tree(n, rng)
            theta = theta_from_deltas(g, rng.uniform(-1.2, 1.2, n - 1))
            assert edge_dynamics_residual(g, rng.uniform(1, 20, n), rng.uniform(0, 5), theta) < 1e-6


def test_lyapunov_rate_matches_finite_difference(rng):
    g = random_tree(7, rng)
    omega = rng.uniform(1, 20, 7)
    theta = theta_from_deltas(g, rng.uniform(-1, 1, 6))
    h = 1e-6
    f = phase_derivative(g, omega, 2.0, theta)
    # straight-line difference in the direction of the field, independent of the library helper
    fd = (lyapunov_v(g, theta + h * f) - lyapunov_v(g, theta - h * f)) / (2 * h)
    assert fd == pytest.approx(lyapunov_rate(g, omega, 2.0, theta), abs=1e-6)


def test_lyapunov_rate_residual(rng):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        g = random_tree(n, rng)
        theta = theta_from_deltas(g, rng.uniform(-math.pi, math.pi, n - 1))
        assert lyapunov_rate_residual(g, rng.uniform(0.1, 20, n), rng.uniform(0, 5), theta) < 1e-6


def test_lyapunov_rate_sign_in_cohesive_set(rng):
    # identical frequencies: V never increases while every edge is within pi/2
    g = random_tree(6, rng)
    for _ in range(20):
        theta = theta_from_deltas(g, rng.uniform(-1.5, 1.5, 5))
        assert lyapunov_rate(g, np.full(6, 4.0), 1.0, theta) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kappa=st.floats(0.05, 3.0))
def test_identical_frequencies_never_leave_cohesive_set(seed, kappa):
    # identical frequencies: any positive coupling keeps the phases cohesive
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    g = random_tree(n, rng)
    eta = math.pi / 2 - math.pi / 10
    d = rng.uniform(-1, 1, n - 1)
    while 2 * np.sum(np.sin(d / 2) ** 2) > level_set_c(math.pi / 10):
        d *= 0.9
    traj = integrate(g, np.full(n, 5.0), kappa, theta_from_deltas(g, d), SimConfig(kappa=kappa, dt=2e-3, t_end=5.0, sample_stride=5))
    assert np.all(np.abs(traj.relative_phases) <= eta)
    assert np.all(np.diff(traj.lyapunov_v) <= 1e-12)


def test_trajectory_csv(star4):
    traj = integrate(star4, OMEGA, 1.0, THETA0, SimConfig(kappa=1.0, dt=0.01, t_end=0.05))
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ("time,theta_1,theta_2,theta_3,theta_4,theta_dot_1,theta_dot_2,theta_dot_3,theta_dot_4,"
                        "delta_1,delta_2,delta_3,V")
    assert len(lines) == len(traj) + 1
    row = [float(x) for x in lines[1].split(",")]
    assert row[1:5] == THETA0.tolist()
    assert row[-1] == traj.lyapunov_v[0]


def test_edge_frequency_energy_decreases(rng):
    # z = B^T theta' obeys z' = -kappa A W z, so z^T A^{-1} z falls while cos(delta) > 0
    from treesync.graph import weighted_edge_laplacian

    for _ in range(5):
        n = int(rng.integers(3, 9))
        g = random_tree(n, rng)
        omega = rng.uniform(1, 20, n)
        kappa = 1.05 * sufficient_kappa(g, omega, math.pi / 10)
        d = rng.uniform(-0.3, 0.3, n - 1)
        traj = integrate(g, omega, kappa, theta_from_deltas(g, d), SimConfig(kappa=kappa, dt=1e-4, t_end=0.5, sample_stride=10))
        assert np.all(np.abs(traj.relative_phases) < math.pi / 2)
        A_inv = np.linalg.inv(weighted_edge_laplacian(g, omega))
        z = np.array([relative_phases(g, row) for row in traj.theta_dots])
        energy = np.einsum("ti,ij,tj->t", z, A_inv, z)
        assert np.all(np.diff(energy) <= 1e-9 * energy[0])
