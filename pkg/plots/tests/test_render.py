"""Rendering determinism, digest fidelity against the CSV fixtures, guide
slopes, and schema validation."""

import hashlib
import math
from pathlib import Path

import numpy as np
import pytest

from cnls_plots import PlotSpec, SchemaError, array_digest, render
from cnls_plots.cli import main, parse_spec_file
from cnls_plots.schemas import read_bands, read_ledger, read_norm_series

DATA = Path(__file__).parent / "data"


def _csv_digest_norm_series(path):
    cols = read_norm_series(path)
    return array_digest(cols["t"]), array_digest(cols["value"])


class TestLoglogDecay:
    def test_digests_match_csv(self, tmp_path):
        src = DATA / "dispersive_linf.csv"
        spec = PlotSpec(
            kind="loglog_decay",
            inputs=(str(src),),
            output=str(tmp_path / "linf.png"),
            guide_slopes=(-1.5,),
        )
        result = render(spec)
        want_x, want_y = _csv_digest_norm_series(src)
        assert result.digests["dispersive_linf.x"] == want_x
        assert result.digests["dispersive_linf.y"] == want_y
        for f in result.files:
            assert Path(f).is_file()

    def test_guide_slope_exact(self, tmp_path):
        spec = PlotSpec(
            kind="loglog_decay",
            inputs=(str(DATA / "dispersive_linf.csv"),),
            output=str(tmp_path / "linf.png"),
            guide_slopes=(-1.5, -15.0 / 14.0),
        )
        result = render(spec)
        assert result.guide_slopes == (-1.5, -15.0 / 14.0)
        sidecar = (tmp_path / "linf.digest.txt").read_text()
        assert f"guide_slope = {repr(-1.5)}" in sidecar
        assert f"guide_slope = {repr(-15.0 / 14.0)}" in sidecar

    def test_synthetic_power_law_parallel_to_guide(self, tmp_path):
        # a t^{-3/2} series: the plotted curve and guide endpoints agree
        t = np.geomspace(0.1, 1.0, 9)
        v = 2.0 * t**-1.5
        src = tmp_path / "series.csv"
        with open(src, "w") as fh:
            fh.write("t,value,kind,s,p,q,r\n")
            for a, b in zip(t, v):
                fh.write(f"{float(a)!r},{float(b)!r},lebesgue,0.0,inf,0.0,0.0\n")
        spec = PlotSpec(kind="loglog_decay", inputs=(str(src),), output=str(tmp_path / "p.png"), guide_slopes=(-1.5,))
        result = render(spec)
        x, y = result.arrays["series.x"], result.arrays["series.y"]
        measured = (math.log(y[-1]) - math.log(y[0])) / (math.log(x[-1]) - math.log(x[0]))
        assert measured == pytest.approx(-1.5, abs=1e-12)

    def test_empty_series_renders_empty_axes(self, tmp_path):
        src = tmp_path / "empty.csv"
        src.write_text("t,value,kind,s,p,q,r\n")
        spec = PlotSpec(kind="loglog_decay", inputs=(str(src),), output=str(tmp_path / "e.png"))
        result = render(spec)
        assert (tmp_path / "e.png").is_file()
        assert result.arrays["empty.x"].size == 0


class TestPremultiplied:
    def test_declared_transform_applied(self, tmp_path):
        src = DATA / "dispersive_linf.csv"
        spec = PlotSpec(
            kind="premultiplied",
            inputs=(str(src),),
            output=str(tmp_path / "flat.png"),
            premultiply_exponent=1.5,
        )
        result = render(spec)
        cols = read_norm_series(src)
        expected = cols["t"] ** 1.5 * cols["value"]
        assert result.digests["dispersive_linf.y"] == array_digest(expected)


class TestEnergyOverlay:
    def test_ledger_fixture(self, tmp_path):
        src = DATA / "ledger_gronwall.csv"
        spec = PlotSpec(kind="energy_overlay", inputs=(str(src),), output=str(tmp_path / "energy.png"))
        result = render(spec)
        cols = read_ledger(src)
        assert result.digests["ledger.E"] == array_digest(cols["E"])
        assert result.digests["ledger.modE"] == array_digest(cols["modE"])
        assert (tmp_path / "energy.svg").is_file()

    def test_rejects_multiple_inputs(self, tmp_path):
        with pytest.raises(ValueError, match="exactly one"):
            render(
                PlotSpec(
                    kind="energy_overlay",
                    inputs=(str(DATA / "ledger_gronwall.csv"),) * 2,
                    output=str(tmp_path / "x.png"),
                )
            )


class TestDyadicBars:
    def test_band_fixture(self, tmp_path):
        src = DATA / "besov_bands.csv"
        spec = PlotSpec(kind="dyadic_bars", inputs=(str(src),), output=str(tmp_path / "bands.png"))
        result = render(spec)
        cols = read_bands(src)
        assert result.digests["bands.y"] == array_digest(cols["weighted_l1l2"])


class TestSchemas:
    def test_missing_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,val\n0.1,1.0\n")
        with pytest.raises(SchemaError, match="'value'"):
            read_norm_series(bad)

    def test_unexpected_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,E,corr1,corr2,corr3,corr4,modE,dmodE_dt,residual,bonus\n")
        with pytest.raises(SchemaError, match="'bonus'"):
            read_ledger(bad)

    def test_non_numeric_entry_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("j,weighted_l1l2\n1,lots\n")
        with pytest.raises(SchemaError, match="weighted_l1l2"):
            read_bands(bad)


class TestDeterminismAndCli:
    def test_repeat_renders_identical_bytes(self, tmp_path):
        spec_kwargs = dict(
            kind="loglog_decay",
            inputs=(str(DATA / "dispersive_linf.csv"),),
            guide_slopes=(-1.5,),
        )
        render(PlotSpec(output=str(tmp_path / "a.png"), **spec_kwargs))
        render(PlotSpec(output=str(tmp_path / "b.png"), **spec_kwargs))
        for ext in (".png", ".svg"):
            a = (tmp_path / "a").with_suffix(ext).read_bytes()
            b = (tmp_path / "b").with_suffix(ext).read_bytes()
            assert hashlib.sha256(a).hexdigest() == hashlib.sha256(b).hexdigest()

    def test_cli_spec_file(self, tmp_path, capsys):
        spec_file = tmp_path / "plot.spec"
        spec_file.write_text(
            "kind = energy_overlay\n"
            f"input = {DATA / 'ledger_gronwall.csv'}\n"
            f"output = {tmp_path / 'fig.png'}\n"
            "title = ledger overlay\n"
        )
        assert main(["--spec", str(spec_file)]) == 0
        out = capsys.readouterr().out
        assert "fig.png" in out and "fig.svg" in out

    def test_cli_flags(self, tmp_path):
        code = main(
            [
                "--kind",
                "loglog_decay",
                "--input",
                str(DATA / "dispersive_linf.csv"),
                "--out",
                str(tmp_path / "cli.png"),
                "--guide-slope",
                "-1.5",
            ]
        )
        assert code == 0
        assert (tmp_path / "cli.digest.txt").is_file()

    def test_cli_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n1\n")
        code = main(["--kind", "dyadic_bars", "--input", str(bad), "--out", str(tmp_path / "x.png")])
        assert code == 1

    def test_spec_file_unknown_key(self, tmp_path):
        spec_file = tmp_path / "plot.spec"
        spec_file.write_text("kind = dyadic_bars\nmystery = 3\noutput = x.png\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_spec_file(spec_file)
