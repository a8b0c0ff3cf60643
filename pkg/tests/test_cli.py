import os

import numpy as np
import pytest

from coexsim import cli, fec
from coexsim.selftest import run_selftest

GOLDEN_PLOT = """\
# Packet error rate vs Eb/N0, one panel per data rate.
# Generated alongside results.csv; run: gnuplot plot.gp
set datafile separator ","
set terminal pngcairo size 1400,900
set output "per_curves.png"
set multiplot layout 1,2
set logscale y
set grid
set xlabel "Eb/N0 (dB)"
set ylabel "PER"
set yrange [1e-4:1]
set key bottom left
set title "12 Mb/s"
plot 'results.csv' skip 1 using ($1==12 && $3==0 ? $2 : 1/0):7 with linespoints title 'E=0', \\
     'results.csv' skip 1 using ($1==12 && $3==5 ? $2 : 1/0):7 with linespoints title 'E=5'
set title "24 Mb/s"
plot 'results.csv' skip 1 using ($1==24 && $3==0 ? $2 : 1/0):7 with linespoints title 'E=0', \\
     'results.csv' skip 1 using ($1==24 && $3==5 ? $2 : 1/0):7 with linespoints title 'E=5'
unset multiplot
"""


class TestConfigFile:
    def test_defaults(self):
        config = cli.load_config(None, {})
        assert config.rates == [12, 24, 36, 48, 54]
        assert config.ebn0 == [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
        assert config.erasures == [0, 5, 7]
        assert config.sir_db == 0.0
        assert config.payload_bytes == 100
        assert config.tau_rms_ns == 100.0
        assert config.bt_enabled is True
        assert config.seed == 1
        assert config.min_errors == 100
        assert config.max_trials == 200_000

    def test_file_parsing(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text(
            "# comment line\n"
            "rates = 12,54\n"
            "ebn0 = 5, 10\n"
            "bt_enabled = false   # inline comment\n"
            "\n"
            "seed = 42\n"
        )
        config = cli.load_config(str(path), {})
        assert config.rates == [12, 54]
        assert config.ebn0 == [5.0, 10.0]
        assert config.bt_enabled is False
        assert config.seed == 42

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("paylod_bytes = 100\n")
        with pytest.raises(cli.ConfigError, match="paylod_bytes"):
            cli.load_config(str(path), {})

    def test_bad_value_named(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("seed = banana\n")
        with pytest.raises(cli.ConfigError, match="seed"):
            cli.load_config(str(path), {})

    def test_flag_overrides_file(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("rates = 12,54\n")
        config = cli.load_config(str(path), {"rates": [24]})
        assert config.rates == [24]

    def test_validation_names_key(self):
        with pytest.raises(cli.ConfigError, match="payload_bytes"):
            cli.load_config(None, {"payload_bytes": 0})
        with pytest.raises(cli.ConfigError, match="rates"):
            cli.load_config(None, {"rates": [13]})
        with pytest.raises(cli.ConfigError, match="erasures"):
            cli.load_config(None, {"erasures": [49]})
        with pytest.raises(cli.ConfigError, match="workers"):
            cli.load_config(None, {"workers": 0})


class TestPointGrid:
    def test_default_grid_size(self):
        points = cli.build_points(cli.load_config(None, {}))
        assert len(points) == 120  # 5 rates x 3 erasure counts x 8 Eb/N0

    def test_ordering_rate_major(self):
        config = cli.load_config(
            None, {"rates": [12, 24], "erasures": [0, 5], "ebn0": [5.0, 10.0]}
        )
        points = cli.build_points(config)
        key = [(p.mode.rate_mbps, p.n_erasures, p.ebn0_db) for p in points]
        assert key == [
            (12, 0, 5.0), (12, 0, 10.0), (12, 5, 5.0), (12, 5, 10.0),
            (24, 0, 5.0), (24, 0, 10.0), (24, 5, 5.0), (24, 5, 10.0),
        ]

    def test_tau_flows_into_channel_config(self):
        config = cli.load_config(None, {"tau_rms_ns": 50.0})
        points = cli.build_points(config)
        assert points[0].channel.tau_rms_s == pytest.approx(50e-9)


class TestPlotScript:
    def test_golden_text(self):
        config = cli.load_config(
            None, {"rates": [12, 24], "erasures": [0, 5], "ebn0": [5.0]}
        )
        assert cli.render_plot_script(config) == GOLDEN_PLOT

    def test_five_panel_layout(self):
        script = cli.render_plot_script(cli.load_config(None, {}))
        assert "set multiplot layout 2,3" in script
        assert script.count("set title") == 5
        assert script.count("E=7") == 5


def write_small_config(tmp_path, **extra):
    lines = [
        "rates = 12",
        "ebn0 = -40, 0",
        "erasures = 0",
        "bt_enabled = false",
        "min_errors = 3",
        "max_trials = 6",
        "seed = 5",
    ]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path = tmp_path / "small.cfg"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestRun:
    def test_end_to_end_and_determinism(self, tmp_path, capsys):
        config_path = write_small_config(tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert cli.main(["--config", config_path, "--out", str(out_a), "--workers", "1"]) == 0
        assert cli.main(["--config", config_path, "--out", str(out_b), "--workers", "2"]) == 0
        csv_a = (out_a / "results.csv").read_bytes()
        csv_b = (out_b / "results.csv").read_bytes()
        assert csv_a == csv_b  # seed- and worker-independent

        text = csv_a.decode()
        lines = text.strip().split("\n")
        assert lines[0] == (
            "rate_mbps,ebn0_db,erasures,sir_db,trials,errors,per,ci_lo,ci_hi,norm_throughput"
        )
        assert len(lines) == 3  # header + 2 points
        for line in lines[1:]:
            fields = line.split(",")
            per, lo, hi = float(fields[6]), float(fields[7]), float(fields[8])
            assert lo <= per <= hi
        assert (out_a / "plot.gp").exists()
        out = capsys.readouterr().out
        assert out.count("rate=12") >= 2  # one summary line per point

    def test_unwritable_output_is_io_error(self, tmp_path):
        config_path = write_small_config(tmp_path)
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        code = cli.main(
            ["--config", config_path, "--out", str(blocker / "sub"), "--workers", "1"]
        )
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["--config", str(tmp_path / "absent.cfg")]) == 2

    def test_bad_flag_value(self):
        assert cli.main(["--payload", "zero"]) == 1
        assert cli.main(["--bt-enabled", "maybe"]) == 1
        assert cli.main(["--no-such-flag"]) == 1

    def test_invalid_config_value(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("payload_bytes = 0\n")
        assert cli.main(["--config", str(path)]) == 1


class TestSelftest:
    def test_passes_and_prints_each_check(self, capsys):
        assert cli.main(["selftest"]) == 0
        out = capsys.readouterr().out
        for name in (
            "codec_oracle",
            "interleaver_bijective",
            "collision_probability",
            "uncoded_ber",
        ):
            assert f"{name}: PASS" in out

    def test_corrupted_generator_fails_codec_check(self, capsys):
        corrupted = fec.CodeConfig(g0=0o133, g1=0o133)
        assert run_selftest(code=corrupted) == 3
        out = capsys.readouterr().out
        assert "codec_oracle: FAIL" in out

    def test_selftest_takes_no_arguments(self):
        assert cli.main(["selftest", "--fast"]) == 1
