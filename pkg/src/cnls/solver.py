"""Strang-split pseudospectral integrator for i u_t + Lap u = |u|^2 u.

Each step is an exact nonlinear half phase exp(-i |u|^2 dt/2), the exact
linear flow, and a second half phase.  Both substeps preserve |u| pointwise,
so mass is conserved to roundoff regardless of dt.  With two-thirds
dealiasing enabled the intensity entering the phase is low-pass projected
(the projection of a real field is real, so the kick stays unitary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import (
    Field,
    Grid,
    field_from_physical,
    make_grid,
    read_snapshot,
    write_snapshot,
)

__all__ = [
    "SolverConfig",
    "Trajectory",
    "BlowupSuspected",
    "default_dt",
    "nonlinearity",
    "strang_step",
    "evolve",
    "rescale_initial_data",
    "gaussian_data",
    "random_phase_data",
    "save_trajectory",
    "load_trajectory",
]

DEALIAS_MODES = ("two_thirds", "none")

# default guard multiplier on the initial sup norm, a numerical stand-in for
# the space-time blowup criterion
GUARD_FACTOR = 1e4


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: str = "two_thirds"
    amplitude_guard: float | None = None

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0):
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.dealias not in DEALIAS_MODES:
            raise ValueError(f"dealias must be one of {DEALIAS_MODES}")
        if self.amplitude_guard is not None and self.amplitude_guard <= 0:
            raise ValueError("amplitude_guard must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered snapshots of one solver run, starting at t = 0."""

    grid: Grid
    times: tuple[float, ...]
    snapshots: list[Field]
    config: SolverConfig
    provenance: dict

    def __post_init__(self) -> None:
        if len(self.times) != len(self.snapshots):
            raise ValueError("times and snapshots must align")
        if self.times and abs(self.times[0]) > 1e-12:
            raise ValueError("trajectories start at t = 0")
        if any(s.grid != self.grid for s in self.snapshots):
            raise ValueError("all snapshots must share the trajectory grid")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    def snapshot_at(self, t: float, tol: float = 1e-9) -> Field:
        i = self.index_at(t, tol)
        return self.snapshots[i]

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        times = np.asarray(self.times)
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > tol:
            raise ValueError(f"no snapshot at t={t} (nearest {times[i]})")
        return i

    def mass_drift(self) -> float:
        """Max relative mass deviation across the stored snapshots."""
        from .norms import mass

        m0 = mass(self.snapshots[0])
        if m0 == 0:
            return 0.0
        return max(abs(mass(s) - m0) / m0 for s in self.snapshots)


class BlowupSuspected(RuntimeError):
    """Amplitude guard tripped: carries the partial trajectory and diagnostics."""

    def __init__(self, t: float, sup_norm: float, partial: Trajectory):
        super().__init__(f"amplitude guard tripped at t={t:.6g} with sup|u|={sup_norm:.6g}")
        self.t = t
        self.sup_norm = sup_norm
        self.partial = partial


def default_dt(grid: Grid) -> float:
    """Step size from the phase-resolution heuristic dt * k_max^2 <= 1/2,
    capped by the wrap-around constraint dt <= t_valid/100."""
    return min(0.5 / grid.k_max**2, grid.t_valid / 100.0)


def _dealias_mask(grid: Grid) -> np.ndarray:
    # keep |m| <= N/3 per axis; the cubic term triples bandwidth
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    keep_1d = np.abs(m) <= grid.n / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.n
        mask &= keep_1d.reshape(shape)
    return mask


def _intensity(values: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    g = values.real**2 + values.imag**2
    if mask is None:
        return g
    return np.fft.ifftn(np.fft.fftn(g) * mask).real


def nonlinearity(f: Field, dealias: str = "two_thirds") -> Field:
    """F(u) = |u|^2 u with two-thirds dealiasing of the intensity factor.

    Projecting |u|^2 (rather than the full cubic product) keeps the operator
    identical to the phase the integrator applies, so Duhamel reconstructions
    of solver trajectories close at quadrature order.
    """
    if dealias not in DEALIAS_MODES:
        raise ValueError(f"dealias must be one of {DEALIAS_MODES}")
    phys = f.to_physical()
    mask = _dealias_mask(f.grid) if dealias == "two_thirds" else None
    out = _intensity(phys.values, mask) * phys.values
    return field_from_physical(f.grid, out)


def strang_step(f: Field, dt: float, dealias: str = "two_thirds") -> Field:
    """One split step: half nonlinear phase, full linear flow, half phase."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = f.grid
    mask = _dealias_mask(grid) if dealias == "two_thirds" else None
    linear = np.exp(-1j * grid.k_squared * dt)
    u = f.to_physical().values
    u = u * np.exp(-0.5j * dt * _intensity(u, mask))
    u = np.fft.ifftn(np.fft.fftn(u) * linear)
    u = u * np.exp(-0.5j * dt * _intensity(u, mask))
    return field_from_physical(grid, u)


def evolve(u0: Field, cfg: SolverConfig, provenance: dict | None = None) -> Trajectory:
    """Integrate to t_end, recording every snapshot_stride-th step.

    `provenance` (initial-data descriptor, seed, ...) is stored on the
    trajectory verbatim.  Raises BlowupSuspected (carrying the partial
    trajectory) if the grid sup norm crosses the amplitude guard.
    """
    grid = u0.grid
    if cfg.dt > grid.t_valid / 100.0 * (1 + 1e-12):
        raise ValueError(f"dt={cfg.dt} exceeds t_valid/100={grid.t_valid / 100.0:.3e}")
    n_steps = round(cfg.t_end / cfg.dt)
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        raise ValueError(f"t_end={cfg.t_end} is not a multiple of dt={cfg.dt}")
    if n_steps % cfg.snapshot_stride != 0:
        raise ValueError("snapshot_stride must divide the step count")

    mask = _dealias_mask(grid) if cfg.dealias == "two_thirds" else None
    linear = np.exp(-1j * grid.k_squared * cfg.dt)

    u = u0.to_physical().values.copy()
    sup0 = float(np.abs(u).max())
    guard = cfg.amplitude_guard if cfg.amplitude_guard is not None else (GUARD_FACTOR * sup0 if sup0 > 0 else math.inf)

    times = [0.0]
    snaps = [field_from_physical(grid, u)]
    # the phase intensity survives each kick (|u| is unchanged), so the
    # second half kick of one step provides the first of the next
    g = _intensity(u, mask)
    for step in range(1, n_steps + 1):
        u = u * np.exp(-0.5j * cfg.dt * g)
        u = np.fft.ifftn(np.fft.fftn(u) * linear)
        g = _intensity(u, mask)
        u = u * np.exp(-0.5j * cfg.dt * g)
        t = step * cfg.dt
        sup = float(np.abs(u).max())
        record = step % cfg.snapshot_stride == 0
        if record:
            times.append(t)
            snaps.append(field_from_physical(grid, u))
        if sup > guard:
            if not record:
                times.append(t)
                snaps.append(field_from_physical(grid, u))
            info = dict(provenance or {})
            info["guard_trip_t"] = t
            partial = Trajectory(grid, tuple(times), snaps, cfg, info)
            raise BlowupSuspected(t, sup, partial)
    return Trajectory(grid, tuple(times), snaps, cfg, dict(provenance or {}))


def rescale_initial_data(u0: Field, lam: float) -> Field:
    """u0 -> lam * u0(lam x) with the box rescaled L -> L/lam.

    Only dyadic lam = 2**m keeps the lattice mapping onto itself; the sample
    array is unchanged up to the amplitude factor.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    m = math.log2(lam)
    if abs(m - round(m)) > 1e-12:
        raise ValueError(f"lam={lam} is not a power of two")
    if lam == 1.0:
        return u0
    new_grid = make_grid(u0.grid.dim, u0.grid.n, u0.grid.box_length / lam)
    return field_from_physical(new_grid, lam * u0.to_physical().values)


# ---------------------------------------------------------------------------
# Initial data library
# ---------------------------------------------------------------------------


def gaussian_data(grid: Grid, amplitude: float = 1.0, sigma: float = 1.0) -> Field:
    """a * exp(-|x|^2 / (2 sigma^2)) centered in the box."""
    r2 = np.zeros(grid.shape)
    for x in grid.coord_arrays():
        r2 = r2 + x**2
    return field_from_physical(grid, amplitude * np.exp(-r2 / (2.0 * sigma**2)) + 0j)


def random_phase_data(
    grid: Grid,
    amplitude: float,
    alpha: float,
    k_cutoff: float | None = None,
    seed: int = 0,
) -> Field:
    """Randomized-phase data with |k|^(-alpha) Fourier amplitudes below k_cutoff.

    Emulates rough profiles; roughness is controlled by alpha.  The field is
    rescaled so its grid sup norm equals `amplitude`.
    """
    if k_cutoff is None:
        k_cutoff = (2.0 / 3.0) * grid.k_max
    rng = np.random.default_rng(seed)
    k_abs = grid.k_abs
    active = (k_abs > 0) & (k_abs <= k_cutoff)
    fhat = np.zeros(grid.shape, dtype=np.complex128)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=grid.shape)
    fhat[active] = k_abs[active] ** (-alpha) * np.exp(1j * phases[active])
    phys = np.fft.ifftn(fhat)
    sup = float(np.abs(phys).max())
    if sup > 0:
        phys = phys * (amplitude / sup)
    return field_from_physical(grid, phys)


# ---------------------------------------------------------------------------
# Trajectory persistence: a directory of snapshot files plus a flat index
# ---------------------------------------------------------------------------

_INDEX_NAME = "trajectory.txt"


def save_trajectory(directory, traj: Trajectory, config_hash: str = "") -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        "schema_version = 1",
        f"config_hash = {config_hash}",
        f"dim = {traj.grid.dim}",
        f"n = {traj.grid.n}",
        f"box_length = {traj.grid.box_length!r}",
        f"dt = {traj.config.dt!r}",
        f"t_end = {traj.config.t_end!r}",
        f"snapshot_stride = {traj.config.snapshot_stride}",
        f"dealias = {traj.config.dealias}",
        f"amplitude_guard = {'' if traj.config.amplitude_guard is None else repr(traj.config.amplitude_guard)}",
        f"snapshots = {len(traj.times)}",
    ]
    for key, val in sorted(traj.provenance.items()):
        lines.append(f"provenance.{key} = {val}")
    (out / _INDEX_NAME).write_text("\n".join(lines) + "\n")
    for i, (t, snap) in enumerate(zip(traj.times, traj.snapshots)):
        write_snapshot(out / f"snap_{i:06d}.cnls", snap, t)


def load_trajectory(directory) -> Trajectory:
    src = Path(directory)
    index = src / _INDEX_NAME
    if not index.is_file():
        raise FileNotFoundError(f"{index} missing")
    meta: dict[str, str] = {}
    for line in index.read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    count = int(meta["snapshots"])
    guard = meta.get("amplitude_guard", "")
    cfg = SolverConfig(
        dt=float(meta["dt"]),
        t_end=float(meta["t_end"]),
        snapshot_stride=int(meta["snapshot_stride"]),
        dealias=meta["dealias"],
        amplitude_guard=float(guard) if guard else None,
    )
    times: list[float] = []
    snaps: list[Field] = []
    grid: Grid | None = None
    for i in range(count):
        snap, t = read_snapshot(src / f"snap_{i:06d}.cnls")
        if grid is None:
            grid = snap.grid
        times.append(t)
        snaps.append(snap.to_physical())
    if grid is None:
        raise ValueError(f"{directory}: empty trajectory")
    provenance = {k[len("provenance.") :]: v for k, v in meta.items() if k.startswith("provenance.")}
    return Trajectory(grid, tuple(times), snaps, cfg, provenance)
