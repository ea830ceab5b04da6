"""Split-step integrator: conservation, consistency, convergence order,
time reversal, rescaling and trajectory persistence."""

import math

import numpy as np
import pytest

from cnls.norms import energy, mass, sobolev_norm
from cnls.solver import (
    BlowupSuspected,
    SolverConfig,
    evolve,
    gaussian_data,
    load_trajectory,
    nonlinearity,
    random_phase_data,
    rescale_initial_data,
    save_trajectory,
    strang_step,
)
from cnls.spectral import field_from_physical, free_propagate, make_grid
from conftest import rel_err


@pytest.fixture
def small_grid():
    return make_grid(3, 16, 16.0)


class TestNonlinearity:
    def test_constant(self, small_grid):
        c = 0.5 + 0.3j
        f = field_from_physical(small_grid, np.full(small_grid.shape, c))
        out = nonlinearity(f, dealias="none")
        assert rel_err(out.values, abs(c) ** 2 * c * np.ones(small_grid.shape)) <= 1e-13

    def test_zero(self, small_grid):
        z = field_from_physical(small_grid, np.zeros(small_grid.shape))
        assert np.all(nonlinearity(z).values == 0.0)

    def test_plane_wave(self, small_grid):
        a, mode = 0.7, 2
        k0 = 2 * math.pi / small_grid.box_length * mode
        x = small_grid.coord_arrays()[0]
        f = field_from_physical(small_grid, a * np.exp(1j * k0 * x))
        out = nonlinearity(f, dealias="none")
        assert rel_err(out.values, a**3 * np.exp(1j * k0 * x)) <= 1e-12

    def test_dealias_projects_intensity(self, small_grid):
        f = field_from_physical(
            small_grid, np.random.default_rng(0).standard_normal(small_grid.shape) + 0j
        )
        out = nonlinearity(f, dealias="two_thirds")
        g_hat = np.fft.fftn(np.abs(f.values) ** 2)
        m = np.fft.fftfreq(small_grid.n, d=1.0 / small_grid.n)
        keep = np.abs(m) <= small_grid.n / 3.0
        mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
        g = np.fft.ifftn(g_hat * mask).real
        assert rel_err(out.values, g * f.values) <= 1e-13
        # raw form keeps the full product
        raw = nonlinearity(f, dealias="none")
        assert rel_err(raw.values, np.abs(f.values) ** 2 * f.values) <= 1e-13


class TestStrangStep:
    def test_consistency_small_dt(self, small_grid):
        f = gaussian_data(small_grid, amplitude=0.5, sigma=1.5)
        dt = 1e-4
        out = strang_step(f, dt)
        assert rel_err(out.values, f.values) <= 10 * dt

    def test_linear_regime_matches_free_flow(self, small_grid):
        f = gaussian_data(small_grid, amplitude=1e-8, sigma=1.5)
        dt = 1e-3
        out = strang_step(f, dt)
        ref = free_propagate(f, dt)
        assert rel_err(out.values, ref.values) <= 1e-14

    def test_mass_exact_per_step(self, small_grid):
        f = gaussian_data(small_grid, amplitude=1.0, sigma=1.5)
        m0 = mass(f)
        for _ in range(50):
            f = strang_step(f, 1e-3)
        assert abs(mass(f) - m0) / m0 <= 1e-13

    def test_global_second_order(self, small_grid):
        u0 = gaussian_data(small_grid, amplitude=1.0, sigma=1.5)
        t_end = 0.08
        ref = evolve(u0, SolverConfig(dt=t_end / 512, t_end=t_end, snapshot_stride=512)).snapshots[-1]
        errs = []
        for steps in (16, 32, 64):
            traj = evolve(u0, SolverConfig(dt=t_end / steps, t_end=t_end, snapshot_stride=steps))
            errs.append(rel_err(traj.snapshots[-1].values, ref.values))
        slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(abs(s - 2.0) <= 0.1 for s in slopes)


class TestEvolve:
    def test_zero_data(self, small_grid):
        z = field_from_physical(small_grid, np.zeros(small_grid.shape))
        traj = evolve(z, SolverConfig(dt=1e-3, t_end=0.01))
        assert all(np.all(s.values == 0.0) for s in traj.snapshots)

    def test_snapshot_times(self, small_grid):
        u0 = gaussian_data(small_grid, amplitude=0.1)
        traj = evolve(u0, SolverConfig(dt=1e-3, t_end=0.02, snapshot_stride=5))
        assert traj.times == pytest.approx(tuple(np.arange(5) * 5e-3))

    def test_tiny_amplitude_matches_free_evolution(self, small_grid):
        u0 = gaussian_data(small_grid, amplitude=1e-5, sigma=1.5)
        t_end = 0.1
        traj = evolve(u0, SolverConfig(dt=1e-3, t_end=t_end, snapshot_stride=100))
        ref = free_propagate(u0, t_end)
        assert rel_err(traj.snapshots[-1].values, ref.values) <= 1e-10

    def test_mass_conserved_energy_drift_second_order(self, small_grid):
        # dealiasing perturbs the conserved functional by a dt-independent
        # amount, so the convergence study runs without it
        u0 = gaussian_data(small_grid, amplitude=1.0, sigma=1.5)
        e0 = energy(u0)
        drifts = []
        for dt in (2e-3, 1e-3):
            traj = evolve(u0, SolverConfig(dt=dt, t_end=0.1, snapshot_stride=10, dealias="none"))
            assert traj.mass_drift() <= 1e-10
            drifts.append(max(abs(energy(s) - e0) for s in traj.snapshots) / e0)
        assert drifts[0] / drifts[1] == pytest.approx(4.0, abs=0.5)

    def test_time_reversal(self, small_grid):
        # conjugation inverts every substep exactly, so the round trip sits
        # at roundoff, well inside the O(dt^2) envelope
        u0 = gaussian_data(small_grid, amplitude=0.8, sigma=1.5)
        t_end = 0.05
        for dt in (1e-3, 5e-4):
            fwd = evolve(u0, SolverConfig(dt=dt, t_end=t_end, snapshot_stride=round(t_end / dt)))
            mirrored = field_from_physical(small_grid, np.conj(fwd.snapshots[-1].values))
            back = evolve(mirrored, SolverConfig(dt=dt, t_end=t_end, snapshot_stride=round(t_end / dt)))
            err = rel_err(np.conj(back.snapshots[-1].values), u0.values)
            assert err <= 100.0 * dt**2
            assert err <= 1e-11

    def test_rejects_oversized_dt(self, small_grid):
        u0 = gaussian_data(small_grid, amplitude=0.1)
        with pytest.raises(ValueError, match="t_valid"):
            evolve(u0, SolverConfig(dt=small_grid.t_valid / 10, t_end=small_grid.t_valid))

    def test_guard_trip_carries_partial_trajectory(self, small_grid):
        u0 = gaussian_data(small_grid, amplitude=0.5, sigma=1.5)
        cfg = SolverConfig(dt=1e-3, t_end=0.05, amplitude_guard=0.4)
        with pytest.raises(BlowupSuspected) as exc:
            evolve(u0, cfg)
        assert exc.value.t > 0
        assert exc.value.partial.times[-1] == pytest.approx(exc.value.t)

    def test_deterministic(self, small_grid):
        u0 = random_phase_data(small_grid, amplitude=0.3, alpha=1.0, seed=5)
        a = evolve(u0, SolverConfig(dt=1e-3, t_end=0.02))
        b = evolve(u0, SolverConfig(dt=1e-3, t_end=0.02))
        for sa, sb in zip(a.snapshots, b.snapshots):
            np.testing.assert_array_equal(sa.values, sb.values)


class TestRescale:
    def test_identity(self, small_grid):
        f = gaussian_data(small_grid, amplitude=0.5)
        assert rescale_initial_data(f, 1.0) is f

    def test_rejects_non_dyadic(self, small_grid):
        with pytest.raises(ValueError, match="power of two"):
            rescale_initial_data(gaussian_data(small_grid), 3.0)

    def test_h_half_invariant(self, small_grid):
        f = random_phase_data(small_grid, amplitude=1.0, alpha=1.0, seed=6)
        g = rescale_initial_data(f, 2.0)
        assert sobolev_norm(g, 0.5, 2.0) == pytest.approx(sobolev_norm(f, 0.5, 2.0), rel=1e-6)

    def test_mass_scaling(self, small_grid):
        f = random_phase_data(small_grid, amplitude=1.0, alpha=1.0, seed=7)
        g = rescale_initial_data(f, 2.0)
        assert mass(g) == pytest.approx(0.5 * mass(f), rel=1e-12)

    def test_downscale_box_grows(self, small_grid):
        g = rescale_initial_data(gaussian_data(small_grid), 0.5)
        assert g.grid.box_length == pytest.approx(2 * small_grid.box_length)


class TestPersistence:
    def test_round_trip(self, tmp_path, small_grid):
        u0 = gaussian_data(small_grid, amplitude=0.3, sigma=1.2)
        traj = evolve(u0, SolverConfig(dt=1e-3, t_end=0.01, snapshot_stride=5))
        save_trajectory(tmp_path / "run", traj, config_hash="deadbeef")
        back = load_trajectory(tmp_path / "run")
        assert back.times == traj.times
        assert back.config == traj.config
        for sa, sb in zip(back.snapshots, traj.snapshots):
            np.testing.assert_array_equal(sa.values, sb.values)
