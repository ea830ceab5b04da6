"""Duhamel reconstruction, the early/recent split, the global free-wave
remainder, and the modified-energy ledger."""

import math

import numpy as np
import pytest

from cnls.decomposition import (
    EnergyLedger,
    NonlinearityCache,
    duhamel_integral,
    ledger_series,
    modified_energy,
    read_ledger_csv,
    split_v_w,
    tilde_v,
    w_global,
    write_ledger_csv,
)
from cnls.norms import mass
from cnls.solver import SolverConfig, Trajectory, evolve, gaussian_data
from cnls.spectral import field_from_physical, free_propagate, make_grid
from conftest import random_field, rel_err


@pytest.fixture(scope="module")
def grid():
    return make_grid(3, 16, 16.0)


@pytest.fixture(scope="module")
def nls_traj(grid):
    u0 = gaussian_data(grid, amplitude=0.8, sigma=1.2)
    cfg = SolverConfig(dt=2.5e-3, t_end=1.5, snapshot_stride=1)
    return evolve(u0, cfg)


def _zero_traj(grid, times):
    z = field_from_physical(grid, np.zeros(grid.shape))
    return Trajectory(grid, tuple(times), [z for _ in times], SolverConfig(dt=1e-3, t_end=float(times[-1])), {})


def _free_traj(grid, u0, times):
    return Trajectory(
        grid,
        tuple(times),
        [free_propagate(u0, t) for t in times],
        SolverConfig(dt=1e-3, t_end=float(times[-1])),
        {},
    )


class TestDuhamelIntegral:
    def test_zero_trajectory(self, grid):
        traj = _zero_traj(grid, np.linspace(0, 1, 11))
        out = duhamel_integral(traj, 0.0, 1.0, 1.0)
        assert np.all(out.values == 0.0)

    def test_empty_interval(self, nls_traj):
        out = duhamel_integral(nls_traj, 0.5, 0.5, 1.0)
        assert np.all(out.values == 0.0)

    def test_uncovered_interval_rejected(self, nls_traj):
        with pytest.raises(ValueError):
            duhamel_integral(nls_traj, 0.0, 2.5, 2.5)

    def test_off_node_window_rejected(self, nls_traj):
        with pytest.raises(ValueError, match="snapshot times"):
            duhamel_integral(nls_traj, 0.0, 0.5021, 1.0)

    def test_full_residual_second_order_in_stride(self, nls_traj):
        # subsample the same run: the reconstruction error is quadrature
        # dominated and drops 4x per stride halving
        t = 1.0
        errs = []
        for stride in (40, 20, 10):
            sub = Trajectory(
                nls_traj.grid,
                nls_traj.times[::stride],
                nls_traj.snapshots[::stride],
                nls_traj.config,
                {},
            )
            u_l = free_propagate(sub.snapshots[0], t)
            unl = duhamel_integral(sub, 0.0, t, t)
            u_t = nls_traj.snapshot_at(t)
            errs.append(rel_err(u_l.to_physical().values + unl.values, u_t.values))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        assert all(2.5 <= r <= 6.0 for r in ratios)


class TestSplitVW:
    def test_near_zero_time(self, nls_traj):
        split = split_v_w(nls_traj, 0.0, 0.1)
        assert np.all(split.v.values == 0.0)
        assert np.all(split.w.values == 0.0)
        assert rel_err(split.u_l.values, nls_traj.snapshots[0].values) <= 1e-12

    def test_reconstruction_residual_small(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        assert split.residual < 1e-4

    def test_delta_degenerates_to_full_integral(self, nls_traj):
        # delta -> 1 pushes everything into w
        t = 1.0
        split = split_v_w(nls_traj, t, 0.995)
        full = duhamel_integral(nls_traj, 0.0, t, t)
        v_mass = mass(split.v)
        assert v_mass <= 0.05 * mass(full)

    def test_delta_additivity_on_shared_nodes(self, nls_traj):
        t = 1.0
        cache = NonlinearityCache(nls_traj)
        s_big = split_v_w(nls_traj, t, 0.2, cache)
        s_small = split_v_w(nls_traj, t, 0.1, cache)
        bridge = duhamel_integral(nls_traj, 0.8 * t, 0.9 * t, t, cache)
        recomposed = s_big.v.values + bridge.values
        assert rel_err(recomposed, s_small.v.values) <= 1e-12

    def test_rejects_bad_delta(self, nls_traj):
        with pytest.raises(ValueError):
            split_v_w(nls_traj, 1.0, 0.0)
        with pytest.raises(ValueError):
            split_v_w(nls_traj, 1.0, 1.0)


class TestTildeV:
    def test_anchor_identity(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        tv = tilde_v(split, 1.0)
        seed = split.u_l.to_physical().values + split.v.values
        assert rel_err(tv.values, seed) <= 1e-13

    def test_mass_constant(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        m1 = mass(tilde_v(split, 1.0))
        for t in (1.1, 1.25, 1.5):
            assert mass(tilde_v(split, t)) == pytest.approx(m1, rel=1e-12)

    def test_rejects_pre_anchor_times(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        with pytest.raises(ValueError, match=">= 1"):
            tilde_v(split, 0.5)

    def test_requires_anchor_at_one(self, nls_traj):
        split = split_v_w(nls_traj, 0.5, 0.1)
        with pytest.raises(ValueError, match="anchored"):
            tilde_v(split, 1.0)

    def test_solves_free_equation(self, nls_traj):
        # centered (i d_t + Lap) residual of the free wave is O(dt^2)
        split = split_v_w(nls_traj, 1.0, 0.1)
        errs = []
        for dt in (0.02, 0.01):
            tm = tilde_v(split, 1.2 - dt).values
            t0 = tilde_v(split, 1.2)
            tp = tilde_v(split, 1.2 + dt).values
            dt_term = 1j * (tp - tm) / (2 * dt)
            lap = np.fft.ifftn(-t0.grid.k_squared * np.fft.fftn(t0.values))
            errs.append(float(np.linalg.norm((dt_term + lap).ravel())))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


class TestWGlobal:
    def test_linear_trajectory_has_zero_remainder(self, grid):
        u0 = gaussian_data(grid, amplitude=0.5, sigma=1.5)
        times = np.linspace(0.0, 1.5, 31)
        traj = _free_traj(grid, u0, times)
        for t in (1.0, 1.25, 1.5):
            tv = free_propagate(traj.snapshot_at(1.0), t - 1.0)
            w = w_global(traj, t, tv)
            assert float(np.abs(w.values).max()) <= 1e-12 * float(np.abs(u0.values).max())

    def test_split_consistency_at_anchor(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        tv = tilde_v(split, 1.0)
        w = w_global(nls_traj, 1.0, tv)
        # differs from the split's recent piece by exactly the recorded
        # reconstruction residual (which is relative to ||u||)
        diff = float(np.linalg.norm((w.values - split.w.values).ravel()))
        u_norm = float(np.linalg.norm(nls_traj.snapshot_at(1.0).values.ravel()))
        assert diff <= split.residual * u_norm * (1.0 + 1e-9) + 1e-15

    def test_bilinear_mass_identity(self, nls_traj):
        split = split_v_w(nls_traj, 1.0, 0.1)
        for t in (1.0, 1.3):
            tv = tilde_v(split, t)
            w = w_global(nls_traj, t, tv)
            cross = 2.0 * float(
                np.sum((tv.values * np.conj(w.values)).real)
            ) * nls_traj.grid.cell_volume
            total = mass(tv) + mass(w) + cross
            assert total == pytest.approx(mass(nls_traj.snapshot_at(t)), rel=1e-10)


class TestModifiedEnergy:
    def test_zero_free_wave(self, grid):
        w = random_field(grid, 1, scale=0.2)
        z = field_from_physical(grid, np.zeros(grid.shape))
        led = modified_energy(w, z)
        assert led.corrections == (0.0, 0.0, 0.0, 0.0)
        assert led.modified_e == led.e

    def test_zero_remainder(self, grid):
        z = field_from_physical(grid, np.zeros(grid.shape))
        tv = random_field(grid, 2, scale=0.2)
        led = modified_energy(z, tv)
        assert led.e == 0.0
        assert led.corrections == (0.0, 0.0, 0.0, 0.0)
        assert led.modified_e == 0.0

    def test_pairings_match_direct_summation(self, grid):
        # independent oracle: naive real-space sums of the four pairings
        w = random_field(grid, 3, scale=0.3)
        tv = random_field(grid, 4, scale=0.5)
        led = modified_energy(w, tv)
        cell = grid.cell_volume
        wv, tt = w.values, tv.values
        ip = lambda f, g: float(np.sum((f * np.conj(g)).real)) * cell
        c1 = ip(np.abs(wv) ** 2 * wv, tt)
        c2 = ip(np.abs(tt) ** 2, np.abs(wv) ** 2)
        c3 = 0.5 * float(np.sum((wv**2 * np.conj(tt) ** 2).real)) * cell
        c4 = ip(wv, np.abs(tt) ** 2 * tt)
        for got, want in zip(led.corrections, (c1, c2, c3, c4)):
            assert got == pytest.approx(want, rel=1e-12)
        assert led.modified_e == pytest.approx(led.e - (c1 + c2 + c3 + c4), rel=1e-12)

    def test_rejects_mismatched_grids(self, grid):
        other = make_grid(3, 16, 8.0)
        with pytest.raises(ValueError, match="grid"):
            modified_energy(random_field(grid, 5), random_field(other, 6))


class TestLedgerSeries:
    def test_zero_run(self, grid):
        traj = _zero_traj(grid, np.linspace(0.0, 1.5, 61))
        ledgers = ledger_series(traj, 0.1, [1.0, 1.25, 1.5])
        assert all(led.e == 0.0 and led.modified_e == 0.0 for led in ledgers)

    def test_envelope_constant_recorded(self, nls_traj):
        ledgers = ledger_series(nls_traj, 0.1, np.arange(1.0, 1.51, 0.05))
        for led in ledgers:
            c = led.envelope_constant()
            assert math.isfinite(c)
            assert abs(led.modified_e - led.e) <= c * (led.e**0.75 + led.e**0.25) + 1e-15

    def test_derivative_refines_at_second_order(self, nls_traj):
        cache = NonlinearityCache(nls_traj)
        t_probe = 1.25
        derivs = {}
        for step in (0.1, 0.05, 0.025):
            times = np.arange(1.0, 1.5 + 1e-12, step)
            ledgers = ledger_series(nls_traj, 0.1, times, cache)
            i = int(np.argmin(np.abs(times - t_probe)))
            derivs[step] = ledgers[i].de_dt_fd
        ref = derivs[0.025]
        e1, e2 = abs(derivs[0.1] - ref), abs(derivs[0.05] - ref)
        assert e1 / e2 > 2.5

    def test_rejects_pre_anchor_samples(self, nls_traj):
        with pytest.raises(ValueError, match="beyond t = 1"):
            ledger_series(nls_traj, 0.1, [0.5, 1.0])


class TestLedgerCSV:
    def test_round_trip(self, tmp_path):
        ledgers = [
            EnergyLedger(t=1.0, e=2.0, corr1=0.1, corr2=0.2, corr3=-0.05, corr4=0.01, modified_e=1.74, de_dt_fd=0.0, residual=1e-5),
            EnergyLedger(t=1.5, e=2.1, corr1=0.12, corr2=0.18, corr3=-0.04, corr4=0.02, modified_e=1.82, de_dt_fd=0.16, residual=1e-5),
        ]
        path = tmp_path / "ledger.csv"
        write_ledger_csv(path, ledgers, config_hash="cafe01")
        back = read_ledger_csv(path)
        assert back == ledgers

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "ledger.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            read_ledger_csv(path)
