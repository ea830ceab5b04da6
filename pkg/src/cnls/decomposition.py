"""Constructive decompositions of a solver trajectory.

u(t) splits into the free evolution of the data plus a propagated time
integral of the nonlinearity; that integral splits again at a fraction
delta of the elapsed time into an early piece v and a recent piece w.
Past t = 1 the solution is tracked as a free wave started from the t = 1
linear-plus-early part, with remainder w, whose energy ledger carries the
four cross pairings that turn the energy into a slowly varying quantity.

All time integrals are composite trapezoid sums over stored snapshots: no
resimulation, so results are replayable from files at a documented
quadrature order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .norms import TIME_TOL, energy
from .solver import Trajectory, nonlinearity
from .spectral import Field, field_from_fourier, field_from_physical, free_propagate

__all__ = [
    "DuhamelSplit",
    "EnergyLedger",
    "duhamel_integral",
    "split_v_w",
    "tilde_v",
    "w_global",
    "modified_energy",
    "ledger_series",
    "write_ledger_csv",
    "read_ledger_csv",
    "NonlinearityCache",
]


@dataclass(frozen=True)
class DuhamelSplit:
    """u(t) = u_l + v + w with the relative reconstruction error recorded."""

    t: float
    u_l: Field
    v: Field
    w: Field
    delta: float
    quadrature_points: int
    residual: float


@dataclass(frozen=True)
class EnergyLedger:
    """Energy of w plus the four w/free-wave pairings at one time.

    corr1 = <|w|^2 w, vt>, corr2 = <|vt|^2, |w|^2>,
    corr3 = (1/2) Re int w^2 conj(vt)^2, corr4 = <w, |vt|^2 vt>,
    with <f, g> = Re int f conj(g).  modified_e = e - (corr1+..+corr4).
    """

    t: float
    e: float
    corr1: float
    corr2: float
    corr3: float
    corr4: float
    modified_e: float
    de_dt_fd: float = math.nan
    residual: float = 0.0

    @property
    def corrections(self) -> tuple[float, float, float, float]:
        return (self.corr1, self.corr2, self.corr3, self.corr4)

    def envelope_constant(self) -> float:
        """|modified_e - e| / (e^{3/4} + e^{1/4}), the recorded envelope ratio."""
        denom = self.e**0.75 + self.e**0.25
        if denom == 0.0:
            return 0.0
        return abs(self.modified_e - self.e) / denom


class NonlinearityCache:
    """Per-snapshot Fourier transforms of |u|^2 u, shared across quadratures."""

    def __init__(self, traj: Trajectory):
        self.traj = traj
        self.times = np.asarray(traj.times)
        self._spectra: dict[int, np.ndarray] = {}

    def spectrum(self, i: int) -> np.ndarray:
        if i not in self._spectra:
            f = nonlinearity(self.traj.snapshots[i], dealias=self.traj.config.dealias)
            self._spectra[i] = f.to_fourier().values
        return self._spectra[i]


def _quadrature_nodes(times: np.ndarray, t_lo: float, t_hi: float) -> np.ndarray:
    if t_hi < t_lo - TIME_TOL:
        raise ValueError(f"empty integration window [{t_lo}, {t_hi}]")
    idx = np.nonzero((times >= t_lo - TIME_TOL) & (times <= t_hi + TIME_TOL))[0]
    if idx.size < 2:
        raise ValueError(f"window [{t_lo}, {t_hi}] contains fewer than two snapshots")
    if abs(times[idx[0]] - t_lo) > TIME_TOL or abs(times[idx[-1]] - t_hi) > TIME_TOL:
        raise ValueError(
            f"window [{t_lo}, {t_hi}] must start and end on snapshot times "
            f"(found [{times[idx[0]]}, {times[idx[-1]]}])"
        )
    return idx


def duhamel_integral(
    traj: Trajectory,
    t_lo: float,
    t_hi: float,
    t_eval: float,
    cache: NonlinearityCache | None = None,
) -> Field:
    """-i * int_{t_lo}^{t_hi} exp(i (t_eval - tau) Lap) F(u(tau)) dtau.

    Trapezoid over the stored snapshots; every integrand term is propagated
    exactly.  t_eval may lie at or beyond t_hi.
    """
    grid = traj.grid
    if abs(t_hi - t_lo) <= TIME_TOL:
        return field_from_physical(grid, np.zeros(grid.shape))
    times = np.asarray(traj.times)
    idx = _quadrature_nodes(times, t_lo, t_hi)
    if cache is None:
        cache = NonlinearityCache(traj)
    t_nodes = times[idx]
    weights = np.empty(t_nodes.size)
    weights[0] = 0.5 * (t_nodes[1] - t_nodes[0])
    weights[-1] = 0.5 * (t_nodes[-1] - t_nodes[-2])
    if t_nodes.size > 2:
        weights[1:-1] = 0.5 * (t_nodes[2:] - t_nodes[:-2])
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for w, i, tau in zip(weights, idx, t_nodes):
        acc += w * np.exp(-1j * grid.k_squared * (t_eval - tau)) * cache.spectrum(int(i))
    return field_from_fourier(grid, -1j * acc).to_physical()


def split_v_w(
    traj: Trajectory,
    t: float,
    delta: float,
    cache: NonlinearityCache | None = None,
) -> DuhamelSplit:
    """Split u(t) into free flow, early Duhamel piece over [0, (1-delta) t]
    and recent piece over [(1-delta) t, t]."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if cache is None:
        cache = NonlinearityCache(traj)
    t_idx = traj.index_at(t)
    t = traj.times[t_idx]
    t_mid = (1.0 - delta) * t
    u_l = free_propagate(traj.snapshots[0], t)
    if t <= TIME_TOL:
        zero = field_from_physical(traj.grid, np.zeros(traj.grid.shape))
        return DuhamelSplit(t, u_l, zero, zero, delta, 1, 0.0)
    v = duhamel_integral(traj, 0.0, t_mid, t, cache)
    w = duhamel_integral(traj, t_mid, t, t, cache)
    u_t = traj.snapshots[t_idx].to_physical().values
    recon = u_l.to_physical().values + v.values + w.values
    denom = float(np.linalg.norm(u_t.ravel()))
    residual = float(np.linalg.norm((u_t - recon).ravel())) / denom if denom > 0 else 0.0
    n_points = int(np.count_nonzero((np.asarray(traj.times) >= -TIME_TOL) & (np.asarray(traj.times) <= t + TIME_TOL)))
    return DuhamelSplit(t, u_l, v, w, delta, n_points, residual)


def tilde_v(split_at_1: DuhamelSplit, t: float) -> Field:
    """Free evolution, from time 1, of the linear-plus-early part at time 1."""
    if abs(split_at_1.t - 1.0) > TIME_TOL:
        raise ValueError(f"split must be anchored at t=1, got t={split_at_1.t}")
    if t < 1.0 - TIME_TOL:
        raise ValueError(f"tilde_v is defined for t >= 1, got {t}")
    seed = split_at_1.u_l.to_physical().values + split_at_1.v.to_physical().values
    return free_propagate(field_from_physical(split_at_1.u_l.grid, seed), t - 1.0)


def w_global(traj: Trajectory, t: float, tv: Field) -> Field:
    """Pointwise remainder u(t) - tv; exact apart from tv's own quadrature."""
    if t < 1.0 - TIME_TOL:
        raise ValueError(f"the global remainder is defined for t >= 1, got {t}")
    u_t = traj.snapshot_at(t).to_physical()
    return field_from_physical(traj.grid, u_t.values - tv.to_physical().values)


def _pairing(f: np.ndarray, g: np.ndarray, cell: float) -> float:
    # Re int f conj(g)
    return float(np.sum(f.real * g.real + f.imag * g.imag)) * cell


def modified_energy(w: Field, tv: Field) -> EnergyLedger:
    """Energy of w and the four pairings against the free wave tv."""
    if w.grid != tv.grid:
        raise ValueError("w and tv must share a grid")
    cell = w.grid.cell_volume
    wv = w.to_physical().values
    tt = tv.to_physical().values
    w_sq = wv.real**2 + wv.imag**2
    t_sq = tt.real**2 + tt.imag**2
    e = energy(w)
    corr1 = _pairing(w_sq * wv, tt, cell)
    corr2 = float(np.sum(t_sq * w_sq)) * cell
    corr3 = 0.5 * float(np.sum((wv**2 * np.conj(tt) ** 2).real)) * cell
    corr4 = _pairing(wv, t_sq * tt, cell)
    total = corr1 + corr2 + corr3 + corr4
    return EnergyLedger(t=math.nan, e=e, corr1=corr1, corr2=corr2, corr3=corr3, corr4=corr4, modified_e=e - total)


def ledger_series(
    traj: Trajectory,
    delta: float,
    sample_times,
    cache: NonlinearityCache | None = None,
) -> list[EnergyLedger]:
    """Ledger at each sample time >= 1, with centered finite differences of
    the modified energy filled in afterwards."""
    sample_times = [float(t) for t in sample_times]
    if len(sample_times) == 0:
        return []
    if any(t < 1.0 - TIME_TOL for t in sample_times):
        raise ValueError("sample times must lie at or beyond t = 1")
    if cache is None:
        cache = NonlinearityCache(traj)
    split1 = split_v_w(traj, 1.0, delta, cache)
    ledgers: list[EnergyLedger] = []
    for t in sample_times:
        tv = tilde_v(split1, t)
        w = w_global(traj, t, tv)
        led = modified_energy(w, tv)
        ledgers.append(replace(led, t=t, residual=split1.residual))
    if len(ledgers) >= 2:
        ts = np.array([led.t for led in ledgers])
        es = np.array([led.modified_e for led in ledgers])
        dd = np.gradient(es, ts)  # centered interior, one-sided ends
        ledgers = [replace(led, de_dt_fd=float(d)) for led, d in zip(ledgers, dd)]
    return ledgers


# ---------------------------------------------------------------------------
# Ledger CSV: t,E,corr1,corr2,corr3,corr4,modE,dmodE_dt,residual
# ---------------------------------------------------------------------------

_LEDGER_HEADER = "t,E,corr1,corr2,corr3,corr4,modE,dmodE_dt,residual"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_ledger_csv(path, ledgers: list[EnergyLedger], config_hash: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write(_LEDGER_HEADER + "\n")
        for led in ledgers:
            row = (led.t, led.e, led.corr1, led.corr2, led.corr3, led.corr4, led.modified_e, led.de_dt_fd, led.residual)
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_ledger_csv(path) -> list[EnergyLedger]:
    out: list[EnergyLedger] = []
    with open(path) as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != _LEDGER_HEADER:
                    raise ValueError(f"{path}:{lineno}: bad header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ValueError(f"{path}:{lineno}: expected 9 columns, got {len(parts)}")
            t, e, c1, c2, c3, c4, mod_e, de, res = (float(x) for x in parts)
            out.append(
                EnergyLedger(t=t, e=e, corr1=c1, corr2=c2, corr3=c3, corr4=c4, modified_e=mod_e, de_dt_fd=de, residual=res)
            )
    if not header_seen:
        raise ValueError(f"{path}: missing header")
    return out
