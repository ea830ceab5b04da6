"""Experiment orchestration: flat-text configs, named suites, reproducible
artifact trees.

Exit codes: 0 success, 1 config error, 2 amplitude-guard trip (suspected
blowup), 3 check failure or replay mismatch.

Config files are flat ``key = value`` lines ('#' starts a comment).  The
canonical serialization is hashed (sha256) and the hash is stamped into
every output file, so artifacts name the configuration that produced them.
The manifest isolates its timestamp on a single line; all other outputs are
byte-deterministic for a fixed (config, seed, thread count).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

from . import decomposition, verification
from .norms import spacetime_norm, write_norm_series
from .solver import (
    BlowupSuspected,
    SolverConfig,
    Trajectory,
    evolve,
    gaussian_data,
    load_trajectory,
    random_phase_data,
    save_trajectory,
)
from .spectral import Field, make_grid
from .verification import CheckReport, evaluate_passed, read_report_csv, write_report_csv

__all__ = ["ExperimentConfig", "ConfigError", "run_suite", "replay_report", "main", "SUITES"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GUARD = 2
EXIT_CHECK = 3


class ConfigError(ValueError):
    pass


_DATA_FAMILIES = ("gaussian", "random_phase")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, serializable to flat text."""

    dim: int = 3
    n: int = 64
    box_length: float = 32.0
    data_family: str = "gaussian"
    amplitude: float = 0.8
    sigma: float = 0.4
    alpha: float = 1.0
    k_cutoff: float = 0.0  # 0 means the two-thirds default
    seed: int = 0
    dt: float = 2.5e-3
    t_end: float = 0.65
    snapshot_stride: int = 2
    dealias: str = "two_thirds"
    amplitude_guard: float = 0.0  # 0 means the automatic guard
    delta: float = 0.1
    delta_sweep: tuple[float, ...] = ()
    suites: tuple[str, ...] = ()
    schema_version: int = 1

    def __post_init__(self) -> None:
        if self.schema_version != 1:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.data_family not in _DATA_FAMILIES:
            raise ConfigError(f"data_family must be one of {_DATA_FAMILIES}")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        for d in self.delta_sweep:
            if not (0.0 < d < 1.0):
                raise ConfigError("delta_sweep entries must lie in (0, 1)")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suites {sorted(unknown)}; available: {sorted(SUITES)}")

    def solver_config(self) -> SolverConfig:
        from .solver import default_dt

        return SolverConfig(
            dt=self.dt if self.dt > 0 else default_dt(self.grid()),
            t_end=self.t_end,
            snapshot_stride=self.snapshot_stride,
            dealias=self.dealias,
            amplitude_guard=self.amplitude_guard or None,
        )

    def grid(self):
        try:
            return make_grid(self.dim, self.n, self.box_length)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def initial_data(self) -> Field:
        grid = self.grid()
        if self.data_family == "gaussian":
            return gaussian_data(grid, amplitude=self.amplitude, sigma=self.sigma)
        return random_phase_data(
            grid,
            amplitude=self.amplitude,
            alpha=self.alpha,
            k_cutoff=self.k_cutoff or None,
            seed=self.seed,
        )

    def deltas(self) -> tuple[float, ...]:
        return self.delta_sweep if self.delta_sweep else (self.delta,)

    def data_provenance(self) -> dict:
        keys = ("data_family", "amplitude", "sigma", "alpha", "k_cutoff", "seed")
        return {k: getattr(self, k) for k in keys}


_LIST_FIELDS = {"delta_sweep", "suites"}


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if f.name in _LIST_FIELDS:
            text = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        f = known[key]
        try:
            if key == "suites":
                values[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "delta_sweep":
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif f.type in ("int", int):
                values[key] = int(value)
            elif f.type in ("float", float):
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _ensure_trajectory(cfg: ExperimentConfig, out: Path) -> Trajectory:
    run_dir = out / "trajectory"
    if (run_dir / "trajectory.txt").is_file():
        return load_trajectory(run_dir)
    traj = evolve(cfg.initial_data(), cfg.solver_config(), provenance=cfg.data_provenance())
    save_trajectory(run_dir, traj, config_hash=config_hash(cfg))
    return traj


def _suite_dispersive(cfg, out, ctx):
    reports, series = verification.check_dispersive(cfg.initial_data())
    for name, s in series.items():
        write_norm_series(out / f"dispersive_{name}.csv", s, config_hash=ctx["hash"])
    return reports


def _suite_lemma31(cfg, out, ctx):
    reports, series = verification.check_lemma_3_1(cfg.initial_data())
    for name, s in series.items():
        write_norm_series(out / f"lemma31_{name}.csv", s, config_hash=ctx["hash"])
    return reports


def _suite_scaling(cfg, out, ctx):
    return verification.check_scaling(cfg.initial_data())


def _suite_bilinear(cfg, out, ctx):
    grid = cfg.grid()
    j_top = int(math.floor(math.log2(grid.k_max))) + 1
    reports = []
    for gap in (2, 3, 4, 5, 6):
        js = [j for j in range(gap, j_top + 1)]
        reports.extend(verification.bilinear_sweep(grid, gap, js, trials=3, seed=cfg.seed))
    return reports


def _suite_besov(cfg, out, ctx):
    traj = _ensure_trajectory(cfg, out)
    window = (0.0, min(1.0, cfg.t_end))
    report, band_sums = verification.check_besov_sum(traj, window=window)
    with open(out / "besov_bands.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={ctx['hash']}\n")
        fh.write("j,weighted_l1l2\n")
        for j, s in band_sums:
            fh.write(f"{j},{s!r}\n")
    return [report]


def _lemma_suite(check):
    def suite(cfg, out, ctx):
        traj = _ensure_trajectory(cfg, out)
        cache = ctx.setdefault("nl_cache", decomposition.NonlinearityCache(traj))
        reports = []
        for delta in cfg.deltas():
            rows, series = check(traj, delta, cache)
            tag = f"@d{delta:g}"
            reports.extend(replace(r, name=r.name + tag) for r in rows)
            for name, s in series.items():
                write_norm_series(out / f"{name}{tag}.csv", s, config_hash=ctx["hash"])
        return reports

    return suite


def _suite_gronwall(cfg, out, ctx):
    traj = _ensure_trajectory(cfg, out)
    times = [t for t in traj.times if t >= 1.0 - 1e-9]
    if len(times) < 8:
        raise ConfigError("gronwall suite needs a trajectory reaching well past t = 1")
    ledgers = decomposition.ledger_series(traj, cfg.delta, times)
    decomposition.write_ledger_csv(out / "ledger.csv", ledgers, config_hash=ctx["hash"])
    return verification.check_gronwall(ledgers)


def _suite_morawetz(cfg, out, ctx):
    from .norms import NormDescriptor, NormSeries, sobolev_norm

    traj = _ensure_trajectory(cfg, out)
    # the sup-in-time critical norm is only reported, never bounded a priori
    series = NormSeries(
        NormDescriptor("sobolev", s=0.5, p=2.0),
        traj.times,
        tuple(sobolev_norm(s, 0.5, 2.0) for s in traj.snapshots),
    )
    write_norm_series(out / "h_half_series.csv", series, config_hash=ctx["hash"])
    return verification.check_morawetz(traj, 0.0, cfg.t_end / 2.0, cfg.t_end)


SUITES = {
    "dispersive": _suite_dispersive,
    "lemma21": _suite_besov,
    "lemma22": _lemma_suite(verification.check_lemma_2_2),
    "lemma23": _lemma_suite(verification.check_lemma_2_3),
    "lemma24": _lemma_suite(verification.check_lemma_2_4),
    "lemma31": _suite_lemma31,
    "bilinear": _suite_bilinear,
    "morawetz": _suite_morawetz,
    "gronwall": _suite_gronwall,
    "scaling": _suite_scaling,
}


def _write_manifest(out: Path, cfg: ExperimentConfig, artifacts: list[str], extra: dict) -> None:
    lines = [
        "schema_version = 1",
        f"config_hash = {config_hash(cfg)}",
        f"timestamp = {datetime.now(timezone.utc).isoformat()}",
    ]
    lines.extend(f"config.{line}" for line in serialize_config(cfg).strip().splitlines())
    for key, value in sorted(extra.items()):
        lines.append(f"measured.{key} = {value!r}")
    lines.extend(f"artifact = {a}" for a in sorted(artifacts))
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_suite(cfg: ExperimentConfig, out_dir) -> int:
    """Run every suite named in the config; returns the process exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx: dict = {"hash": config_hash(cfg)}
    reports: list[CheckReport] = []
    measured: dict[str, float] = {}
    try:
        for name in cfg.suites:
            reports.extend(SUITES[name](cfg, out, ctx))
        needs_traj = (out / "trajectory" / "trajectory.txt").is_file()
        if needs_traj:
            traj = load_trajectory(out / "trajectory")
            window_hi = min(1.0, cfg.t_end)
            measured["l5_spacetime_norm"] = spacetime_norm(traj, 5.0, 5.0, 0.0, window_hi)
            measured["mass_drift"] = traj.mass_drift()
            measured["energy_drift"] = _energy_drift(traj)
    except BlowupSuspected as exc:
        _write_manifest(out, cfg, _artifact_list(out), {"guard_trip_t": exc.t, "guard_trip_sup": exc.sup_norm})
        print(f"guard trip: {exc}", file=sys.stderr)
        return EXIT_GUARD
    if reports:
        write_report_csv(out / "report.csv", reports, config_hash=ctx["hash"])
    _write_manifest(out, cfg, _artifact_list(out), measured)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _energy_drift(traj: Trajectory) -> float:
    from .norms import energy

    e0 = energy(traj.snapshots[0])
    if e0 == 0.0:
        return 0.0
    return max(abs(energy(s) - e0) for s in traj.snapshots) / e0


def _artifact_list(out: Path) -> list[str]:
    return sorted(
        str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.txt"
    )


def replay_report(path) -> tuple[list[CheckReport], list[str]]:
    """Re-derive every pass flag from the stored numbers; returns the rows
    and a list of mismatch descriptions."""
    rows = read_report_csv(path)
    mismatches = []
    for i, r in enumerate(rows, start=2):  # header is line 1
        expected = evaluate_passed(r.name.split("@")[0], r.fitted_exponent, r.premultiplied_sup)
        if expected != r.passed:
            mismatches.append(f"line {i}: {r.name}: stored={r.passed} recomputed={expected}")
    return rows, mismatches


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj = evolve(cfg.initial_data(), cfg.solver_config(), provenance=cfg.data_provenance())
    except BlowupSuspected as exc:
        save_trajectory(out / "trajectory", exc.partial, config_hash=config_hash(cfg))
        _write_manifest(out, cfg, _artifact_list(out), {"guard_trip_t": exc.t, "guard_trip_sup": exc.sup_norm})
        print(f"guard trip: {exc}", file=sys.stderr)
        return EXIT_GUARD
    save_trajectory(out / "trajectory", traj, config_hash=config_hash(cfg))
    _write_manifest(
        out, cfg, _artifact_list(out), {"mass_drift": traj.mass_drift(), "energy_drift": _energy_drift(traj)}
    )
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.suites:
        cfg = replace(cfg, suites=tuple(args.suites.split(",")))
    return run_suite(cfg, args.out)


def _cmd_decompose(args) -> int:
    traj = load_trajectory(Path(args.traj) / "trajectory" if (Path(args.traj) / "trajectory").is_dir() else args.traj)
    times = [float(t) for t in args.times.split(",")]
    ledgers = decomposition.ledger_series(traj, args.delta, times)
    decomposition.write_ledger_csv(args.out, ledgers)
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    cfg = replace(cfg, suites=tuple(args.suite.split(",")))
    return run_suite(cfg, args.out)


def _cmd_fit(args) -> int:
    from .norms import read_norm_series

    series = read_norm_series(args.series)
    fit = verification.fit_decay_rate(series, args.t_lo, args.t_hi)
    print(
        f"exponent = {fit.exponent!r}\nlog_prefactor = {fit.log_prefactor!r}\n"
        f"residual_rms = {fit.residual_rms!r}\nn_samples = {fit.n_samples}"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    rows = read_report_csv(args.report)
    width = max((len(r.name) for r in rows), default=4)
    for r in rows:
        fitted = "" if r.fitted_exponent is None else f"{r.fitted_exponent:+.4f}"
        print(f"{r.name:<{width}}  fitted={fitted:>8}  sup={r.premultiplied_sup:.6g}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK


def _cmd_replay(args) -> int:
    rows, mismatches = replay_report(args.report)
    for m in mismatches:
        print(m, file=sys.stderr)
    print(f"{len(rows)} rows, {len(mismatches)} mismatches")
    return EXIT_OK if not mismatches else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cnls", description=__doc__)
    parser.add_argument("--threads", type=int, default=1, help="recorded for provenance; execution is single threaded")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="integrate one trajectory and store snapshots")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("run", help="run the suites named in the config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--suites", default="", help="comma list overriding the config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("decompose", help="energy ledger along a stored trajectory")
    p.add_argument("--traj", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--times", required=True, help="comma list of sample times >= 1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("verify", help="run one suite against a config")
    p.add_argument("--suite", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("fit", help="fit a decay exponent to a stored norm series")
    p.add_argument("--series", required=True)
    p.add_argument("--t-lo", type=float, required=True)
    p.add_argument("--t-hi", type=float, required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("report", help="pretty-print a report CSV")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("replay", help="recompute pass flags from a report CSV")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
