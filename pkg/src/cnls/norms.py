"""Norm functionals: spatial L^p, fractional Sobolev, mixed space-time
Lebesgue norms, mass, energy, and the interaction inequality sides.

Space-time integrals use the composite trapezoid rule on stored snapshots;
sup-in-time norms are maxima over snapshots (a deterministic lower bound on
the true supremum, so boundedness checks always premultiply).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .spectral import Field, fractional_derivative, upsampled_abs_max

if TYPE_CHECKING:  # pragma: no cover
    from .solver import Trajectory

__all__ = [
    "NormDescriptor",
    "NormSeries",
    "lp_norm",
    "sobolev_norm",
    "spacetime_norm",
    "mass",
    "energy",
    "morawetz_check",
    "write_norm_series",
    "read_norm_series",
]

_KINDS = ("lebesgue", "sobolev", "spacetime", "mass", "energy")

# snapshot times are trusted to this absolute slack when matching windows
TIME_TOL = 1e-9


def _check_exponent(name: str, value: float) -> None:
    if not (value >= 1.0):
        raise ValueError(f"{name} must lie in [1, inf], got {value}")


@dataclass(frozen=True)
class NormDescriptor:
    """Names one norm functional: which kind plus its exponents.

    Exponents a kind does not use stay at 0 so descriptors compare equal."""

    kind: str
    s: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lebesgue":
            _check_exponent("p", self.p)
        elif self.kind == "sobolev":
            _check_exponent("p", self.p)
            if self.s < 0:
                raise ValueError("sobolev order s must be >= 0")
        elif self.kind == "spacetime":
            _check_exponent("q", self.q)
            _check_exponent("r", self.r)

    def label(self) -> str:
        if self.kind == "lebesgue":
            return f"L{self.p:g}"
        if self.kind == "sobolev":
            return f"W{self.s:g},{self.p:g}"
        if self.kind == "spacetime":
            return f"L{self.q:g}_t L{self.r:g}_x"
        return self.kind


@dataclass(frozen=True)
class NormSeries:
    """A sampled time series of one norm functional."""

    descriptor: NormDescriptor
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1d and equally long")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and non-negative")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))


def lp_norm(f: Field, p: float) -> float:
    """Spatial L^p norm; p = inf uses the 2x-refined grid maximum."""
    if not (p >= 1.0):
        raise ValueError(f"p must lie in [1, inf], got {p}")
    if math.isinf(p):
        return upsampled_abs_max(f)
    phys = np.abs(f.to_physical().values)
    total = float(np.sum(phys**p)) * f.grid.cell_volume
    return total ** (1.0 / p)


def sobolev_norm(f: Field, s: float, p: float) -> float:
    """|| |grad|^s f ||_{L^p}."""
    return lp_norm(fractional_derivative(f, s), p)


def mass(f: Field) -> float:
    """Integral of |f|^2."""
    phys = f.to_physical().values
    return float(np.sum(phys.real**2 + phys.imag**2)) * f.grid.cell_volume


def energy(f: Field) -> float:
    """(1/2) int |grad f|^2 + (1/4) int |f|^4, gradient term computed spectrally."""
    grid = f.grid
    fhat = f.to_fourier().values
    kinetic = 0.5 * float(np.sum(grid.k_squared * (fhat.real**2 + fhat.imag**2))) * grid.parseval_factor
    phys = f.to_physical().values
    quartic = 0.25 * float(np.sum((phys.real**2 + phys.imag**2) ** 2)) * grid.cell_volume
    return kinetic + quartic


def _window_indices(times: Sequence[float], t_lo: float, t_hi: float) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t_hi < t_lo:
        raise ValueError(f"empty window [{t_lo}, {t_hi}]")
    if t.size == 0 or t[0] > t_lo + TIME_TOL or t[-1] < t_hi - TIME_TOL:
        raise ValueError(
            f"window [{t_lo}, {t_hi}] not covered by snapshots on [{t[0] if t.size else None}, {t[-1] if t.size else None}]"
        )
    idx = np.nonzero((t >= t_lo - TIME_TOL) & (t <= t_hi + TIME_TOL))[0]
    if idx.size == 0:
        raise ValueError(f"no snapshots inside [{t_lo}, {t_hi}]")
    return idx


def spacetime_norm(traj: "Trajectory", q: float, r: float, t_lo: float, t_hi: float) -> float:
    """Mixed norm ( int_{t_lo}^{t_hi} ||u(t)||_{L^r}^q dt )^{1/q}; q = inf is a max."""
    _check_exponent("q", q)
    _check_exponent("r", r)
    idx = _window_indices(traj.times, t_lo, t_hi)
    vals = np.array([lp_norm(traj.snapshots[i], r) for i in idx])
    if math.isinf(q):
        return float(vals.max())
    t = np.asarray(traj.times, dtype=float)[idx]
    if t.size == 1:
        return 0.0
    integral = float(np.trapezoid(vals**q, t))
    return integral ** (1.0 / q)


def morawetz_check(traj: "Trajectory", t_lo: float, t_hi: float) -> dict[str, float]:
    """Both sides of the interaction inequality on a window.

    lhs = ||u||_{L^4_{t,x}}^4, rhs = (sup_t ||u||_2)^2 * (sup_t ||u||_{H^{1/2}})^2.
    The caller compares lhs <= C * rhs with a measured constant.
    """
    lhs = spacetime_norm(traj, 4.0, 4.0, t_lo, t_hi) ** 4
    idx = _window_indices(traj.times, t_lo, t_hi)
    sup_mass = max(mass(traj.snapshots[i]) for i in idx)
    sup_h_half = max(sobolev_norm(traj.snapshots[i], 0.5, 2.0) for i in idx)
    return {"lhs": lhs, "rhs": sup_mass * sup_h_half**2}


# ---------------------------------------------------------------------------
# Norm series CSV: columns t,value,kind,s,p,q,r, one descriptor per file.
# A leading '# key=value' comment line may carry provenance.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_norm_series(path, series: NormSeries, config_hash: str = "") -> None:
    d = series.descriptor
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write("t,value,kind,s,p,q,r\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{_fmt(t)},{_fmt(v)},{d.kind},{_fmt(d.s)},{_fmt(d.p)},{_fmt(d.q)},{_fmt(d.r)}\n")


def read_norm_series(path) -> NormSeries:
    times: list[float] = []
    values: list[float] = []
    descriptor: NormDescriptor | None = None
    with open(path) as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != "t,value,kind,s,p,q,r":
                    raise ValueError(f"{path}:{lineno}: bad header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ValueError(f"{path}:{lineno}: expected 7 columns, got {len(parts)}")
            t, v, kind, s, p, q, r = parts
            d = NormDescriptor(kind=kind, s=float(s), p=float(p), q=float(q), r=float(r))
            if descriptor is None:
                descriptor = d
            elif d != descriptor:
                raise ValueError(f"{path}:{lineno}: mixed descriptors in one file")
            times.append(float(t))
            values.append(float(v))
    if descriptor is None:
        raise ValueError(f"{path}: no data rows")
    return NormSeries(descriptor=descriptor, times=tuple(times), values=tuple(values))
