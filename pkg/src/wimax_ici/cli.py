"""Command line front end: ``simulate``, ``cir`` and ``profile``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from fractions import Fraction

import numpy as np

from .cfo_est import CfoEstimationError
from .channel import TERRAIN, sui_profile
from .ici import scheme_for, theoretical_cir
from .ofdm import wimax_allocation
from .sim import ConfigError, LinkConfig, NumericalError, measure_cir, run_link, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# config-file keys -> argparse dest
_FILE_KEYS = {
    "scheme": "scheme", "mod": "mod", "modulation": "mod", "channel": "channel",
    "cfo": "cfo", "epsilon": "cfo", "correct_cfo": "correct_cfo", "snr": "snr",
    "frames": "frames", "n_frames": "frames", "seed": "seed", "out": "out",
    "cp": "cp", "cp_fraction": "cp", "sample_rate": "sample_rate", "carrier": "carrier",
    "cfo_grid": "cfo_grid", "model": "model",
}


def parse_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0 or parts[2] < parts[0]:
            raise ConfigError(f"bad grid {text!r}, expected start:step:stop with step > 0")
        start, step, stop = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}") from exc
    if not vals:
        raise ConfigError("grid is empty")
    return vals


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[_FILE_KEYS[key]] = value
    return out


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI flags win over the config file, which wins over defaults."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config", "verbose"):
            merged[k] = v
    return merged


def _link_config(opts: dict) -> LinkConfig:
    try:
        return LinkConfig(
            scheme=opts["scheme"],
            modulation=opts["mod"],
            channel=opts["channel"],
            epsilon=float(opts["cfo"]),
            cfo_correction=_bool(opts["correct_cfo"]),
            snr_grid_db=tuple(parse_grid(str(opts["snr"]))),
            n_frames=int(opts["frames"]),
            cp_fraction=Fraction(str(opts["cp"])),
            sample_rate_hz=float(opts["sample_rate"]),
            carrier_hz=float(opts["carrier"]),
            seed=int(opts["seed"]),
        )
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


_SIM_DEFAULTS = dict(
    scheme="pascs", mod="qam16", channel="sui1", cfo=0.2, correct_cfo=False, snr="0:2:20",
    frames=100, seed=42, out=None, cp="1/4", sample_rate=4e6, carrier=5e9,
)


def cmd_simulate(args) -> int:
    opts = _merge(args, _SIM_DEFAULTS)
    cfg = _link_config(opts)
    result = run_link(cfg)
    _emit(opts["out"], lambda f: write_csv(result, f))
    return EXIT_OK


def cmd_cir(args) -> int:
    opts = _merge(args, dict(_SIM_DEFAULTS, cfo_grid="0:0.02:0.4", channel="ideal", cfo=0.0))
    cfg = _link_config(dict(opts, snr="0"))
    grid = parse_grid(str(opts["cfo_grid"]))
    measured = measure_cir(cfg, grid)
    plan = wimax_allocation(cfg.n_fft, cfg.n_used)
    scheme = scheme_for(cfg.scheme, plan)

    def write(f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "epsilon", "theoretical_cir_db", "measured_cir_db",
                    "signal_power", "ici_data_power", "ici_pilot_power"])
        for eps, m in zip(grid, measured):
            t = theoretical_cir(cfg.n_fft, eps, scheme, plan)
            w.writerow([cfg.scheme, repr(eps), repr(t.cir_db), repr(m), repr(t.signal_power),
                        repr(t.ici_data_power), repr(t.ici_pilot_power)])

    _emit(opts["out"], write)
    return EXIT_OK


def cmd_profile(args) -> int:
    model = str(args.model).lower().removeprefix("sui")
    try:
        p = sui_profile(int(model))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [
        ("model", p.name.upper()),
        ("terrain", f"{p.terrain} ({TERRAIN[p.terrain]})"),
        ("tap_power_db", list(p.tap_power_db)),
        ("k_factor", list(p.k_factor)),
        ("tap_delay_us", list(p.tap_delay_us)),
        ("max_doppler_hz", list(p.max_doppler_hz)),
        ("antenna_corr", p.antenna_corr),
        ("gain_norm_db", p.gain_norm_db),
    ]
    for k, v in rows:
        print(f"{k:16s} {v}")
    return EXIT_OK


def _emit(path, writer) -> None:
    if path in (None, "-"):
        writer(sys.stdout)
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer(f)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wimax-ici", description="ICI self-cancellation link simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def link_flags(sp):
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--scheme", choices=("standard", "scm", "pascs"))
        sp.add_argument("--mod", choices=("qpsk", "qam16", "qam64"))
        sp.add_argument("--cp", help="cyclic prefix fraction: 1/4, 1/8, 1/16 or 1/32")
        sp.add_argument("--sample-rate", dest="sample_rate", type=float, help="Hz")
        sp.add_argument("--carrier", type=float, help="Hz, metadata only")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="CSV path (default stdout)")

    s = sub.add_parser("simulate", help="Monte Carlo BER over an SNR grid")
    link_flags(s)
    s.add_argument("--channel", help="ideal, awgn, rayleigh or sui1..sui6")
    s.add_argument("--cfo", type=float, help="CFO in subcarrier spacings")
    s.add_argument("--correct-cfo", dest="correct_cfo", action="store_const", const=True,
                   help="estimate CFO from pilots and correct it (pascs only)")
    s.add_argument("--no-correct-cfo", dest="correct_cfo", action="store_const", const=False)
    s.add_argument("--snr", help="dB grid, start:step:stop or comma list")
    s.add_argument("--frames", type=int)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("cir", help="analytic and measured CIR over a CFO grid")
    link_flags(c)
    c.add_argument("--cfo-grid", dest="cfo_grid", help="start:step:stop or comma list")
    c.set_defaults(func=cmd_cir)

    pr = sub.add_parser("profile", help="print an SUI profile")
    pr.add_argument("--model", required=True, help="1..6 or sui1..sui6")
    pr.set_defaults(func=cmd_profile)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, CfoEstimationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
