"""Command-line front end: config parsing, sweep execution, CSV and
gnuplot-script output.

Exit codes: 0 success, 1 config error, 2 I/O error, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

from .channel import ChannelConfig
from .engine import (
    PerPoint,
    SimPoint,
    StopRule,
    normalized_throughput,
    sweep,
)
from .ofdm import MODES
from .selftest import run_selftest

CSV_NAME = "results.csv"
PLOT_NAME = "plot.gp"
MAX_PAYLOAD_BYTES = 2304


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    """A validated sweep description; defaults reproduce the headline
    experiment (100-byte packets, 100 ns delay spread, HV1 at 0 dB SIR)."""

    rates: list = dataclasses.field(default_factory=lambda: [12, 24, 36, 48, 54])
    ebn0: list = dataclasses.field(
        default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
    )
    erasures: list = dataclasses.field(default_factory=lambda: [0, 5, 7])
    sir_db: float = 0.0
    payload_bytes: int = 100
    tau_rms_ns: float = 100.0
    bt_enabled: bool = True
    seed: int = 1
    min_errors: int = 100
    max_trials: int = 200_000
    workers: int | None = None
    out: str = "."


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> list:
    return [int(part) for part in str(text).split(",") if part.strip() != ""]


def _parse_float_list(text: str) -> list:
    return [float(part) for part in str(text).split(",") if part.strip() != ""]


_PARSERS = {
    "rates": _parse_int_list,
    "ebn0": _parse_float_list,
    "erasures": _parse_int_list,
    "sir_db": float,
    "payload_bytes": int,
    "tau_rms_ns": float,
    "bt_enabled": _parse_bool,
    "seed": int,
    "min_errors": int,
    "max_trials": int,
    "workers": int,
    "out": str,
}


def read_config_file(path: str) -> dict:
    """Parse a `key = value` file (one pair per line, `#` comments).

    Unknown keys and unparsable values raise ConfigError naming the key;
    a missing file raises the underlying OSError.
    """
    values = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, text = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
            try:
                values[key] = _PARSERS[key](text.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {exc}") from None
    return values


def _validate(config: RunConfig) -> RunConfig:
    if not config.rates:
        raise ConfigError("rates: need at least one rate")
    for rate in config.rates:
        if rate not in MODES:
            raise ConfigError(f"rates: {rate} is not one of {sorted(MODES)}")
    if not config.ebn0:
        raise ConfigError("ebn0: need at least one point")
    for value in config.ebn0:
        if not math.isfinite(value):
            raise ConfigError(f"ebn0: {value} is not finite")
    if not config.erasures:
        raise ConfigError("erasures: need at least one count")
    for count in config.erasures:
        if not 0 <= count <= 48:
            raise ConfigError(f"erasures: {count} outside [0, 48]")
    if not 1 <= config.payload_bytes <= MAX_PAYLOAD_BYTES:
        raise ConfigError(
            f"payload_bytes: {config.payload_bytes} outside [1, {MAX_PAYLOAD_BYTES}]"
        )
    if config.tau_rms_ns < 0:
        raise ConfigError(f"tau_rms_ns: {config.tau_rms_ns} is negative")
    if config.min_errors < 1:
        raise ConfigError(f"min_errors: {config.min_errors} must be at least 1")
    if config.max_trials < config.min_errors:
        raise ConfigError("max_trials: must be at least min_errors")
    if config.workers is not None and config.workers < 1:
        raise ConfigError(f"workers: {config.workers} must be at least 1")
    return config


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults, then file values, then flag overrides; validated."""
    values = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - set(_PARSERS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    return _validate(RunConfig(**values))


def build_points(config: RunConfig) -> list:
    """The sweep grid, rate-major, then erasure count, then Eb/N0."""
    channel = ChannelConfig(tau_rms_s=config.tau_rms_ns * 1e-9)
    return [
        SimPoint(
            mode=MODES[rate],
            ebn0_db=ebn0,
            n_erasures=erasures,
            bt_enabled=config.bt_enabled,
            sir_db=config.sir_db,
            seed=config.seed,
            payload_bytes=config.payload_bytes,
            channel=channel,
        )
        for rate in config.rates
        for erasures in config.erasures
        for ebn0 in config.ebn0
    ]


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_results_csv(path: str, results: list) -> None:
    """One row per point; LF endings, '.' decimal separator, deterministic."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(
            "rate_mbps,ebn0_db,erasures,sir_db,trials,errors,per,ci_lo,ci_hi,norm_throughput\n"
        )
        for r in results:
            p = r.point
            handle.write(
                ",".join(
                    [
                        str(p.mode.rate_mbps),
                        _fmt(p.ebn0_db),
                        str(p.n_erasures),
                        _fmt(p.sir_db),
                        str(r.trials),
                        str(r.packet_errors),
                        _fmt(r.per),
                        _fmt(r.ci_lo),
                        _fmt(r.ci_hi),
                        _fmt(normalized_throughput(r)),
                    ]
                )
                + "\n"
            )


def render_plot_script(config: RunConfig, csv_name: str = CSV_NAME) -> str:
    """Gnuplot script: one log-scale PER panel per rate, one curve per
    erasure count, reading straight from the results CSV."""
    n = len(config.rates)
    cols = min(n, 3)
    rows = -(-n // cols)
    lines = [
        "# Packet error rate vs Eb/N0, one panel per data rate.",
        f"# Generated alongside {csv_name}; run: gnuplot {PLOT_NAME}",
        'set datafile separator ","',
        "set terminal pngcairo size 1400,900",
        'set output "per_curves.png"',
        f"set multiplot layout {rows},{cols}",
        "set logscale y",
        "set grid",
        'set xlabel "Eb/N0 (dB)"',
        'set ylabel "PER"',
        "set yrange [1e-4:1]",
        "set key bottom left",
    ]
    for rate in config.rates:
        lines.append(f'set title "{rate} Mb/s"')
        curves = [
            f"'{csv_name}' skip 1 using ($1=={rate} && $3=={e} ? $2 : 1/0):7 "
            f"with linespoints title 'E={e}'"
            for e in config.erasures
        ]
        lines.append("plot " + ", \\\n     ".join(curves))
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def _print_point(result: PerPoint) -> None:
    p = result.point
    print(
        f"rate={p.mode.rate_mbps:<2d} Mb/s  ebn0={p.ebn0_db:>5.1f} dB  "
        f"E={p.n_erasures:<2d} per={result.per:.3e} "
        f"ci=[{result.ci_lo:.3e},{result.ci_hi:.3e}] "
        f"trials={result.trials} errors={result.packet_errors}"
    )
    sys.stdout.flush()


def run(config: RunConfig) -> int:
    """Run the configured sweep and write results.csv and plot.gp."""
    points = build_points(config)
    stop = StopRule(min_errors=config.min_errors, max_trials=config.max_trials)
    results = sweep(points, stop, workers=config.workers, progress=_print_point)
    try:
        os.makedirs(config.out, exist_ok=True)
        csv_path = os.path.join(config.out, CSV_NAME)
        write_results_csv(csv_path, results)
        with open(
            os.path.join(config.out, PLOT_NAME), "w", encoding="utf-8", newline="\n"
        ) as handle:
            handle.write(render_plot_script(config))
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {csv_path} ({len(results)} points)")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; config errors are exit 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="coexsim",
        description="802.11g PER under Bluetooth HV1 interference, "
        "with symbol-erasure mitigation.",
    )
    parser.add_argument("--config", metavar="PATH", help="key = value config file")
    parser.add_argument("--rates", metavar="LIST", help="comma-separated Mb/s values")
    parser.add_argument("--ebn0", metavar="LIST", help="comma-separated Eb/N0 dB values")
    parser.add_argument("--erasures", metavar="LIST", help="comma-separated erasure counts")
    parser.add_argument("--sir", metavar="DB", help="signal-to-interference ratio in dB")
    parser.add_argument("--payload", metavar="BYTES", help="payload size in octets")
    parser.add_argument("--bt-enabled", metavar="BOOL", help="enable the BT interferer")
    parser.add_argument("--seed", metavar="INT", help="master seed")
    parser.add_argument("--workers", metavar="N", help="worker processes (cannot change results)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    return parser


_FLAG_KEYS = {
    "rates": "rates",
    "ebn0": "ebn0",
    "erasures": "erasures",
    "sir": "sir_db",
    "payload": "payload_bytes",
    "bt_enabled": "bt_enabled",
    "seed": "seed",
    "workers": "workers",
    "out": "out",
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "selftest":
        if argv[1:]:
            print("selftest takes no arguments", file=sys.stderr)
            return 1
        return run_selftest()
    try:
        args = _build_parser().parse_args(argv)
        overrides = {}
        for flag, key in _FLAG_KEYS.items():
            raw = getattr(args, flag)
            if raw is None:
                continue
            try:
                overrides[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for --{flag.replace('_', '-')}: {exc}") from None
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return run(config)


def console_main() -> None:
    sys.exit(main())
