"""Config-driven command line: ``qcw simulate | fit | imbalance``.

Each command reads a single JSON config document, validates every parameter
before any computation starts, and writes plot-ready CSV tables plus a JSON
summary. Outputs embed the seed, a hash of the effective config and the tool
version, and every write is atomic (temp file + rename); re-running a command
with the same config and seed reproduces the outputs byte for byte.

Exit codes: 0 success, 2 validation error, 3 numeric abort (price positivity
guard), 4 I/O error. ``QCW_LOG_LEVEL`` controls log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    fit_spread_params,
    read_ohlc_csv,
    read_quotes_csv,
    spreads_from_ohlc,
    spreads_from_quotes,
)
from .errors import PricePositivityError, ValidationError
from .market_sim import (
    MODE_BALANCED,
    MODE_IMBALANCE_COUPLED,
    POST_TRADE_COLLAPSE,
    POST_TRADE_SCRAMBLE,
    SimConfig,
    imbalance_summary,
    q_of_i,
    simulate_ensemble,
    simulate_path,
)
from .spread_stats import Histogram, SpreadLaw, spread_pdf
from .stochastic_model import ModelParams
from .wave_dynamics import StateVector

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

PATH_CSV_HEADER = "t,s_bid,s_ask,s_trade,side,I"
QI_CSV_HEADER = "bin_left,bin_right,mass"
PDF_CSV_HEADER = "delta,empirical_density,model_density"

log = logging.getLogger("qcw")

_REQUIRED = object()


# ---------------------------------------------------------------------------
# config access with key-level error messages
# ---------------------------------------------------------------------------

def _get(cfg: dict, key: str, default=_REQUIRED):
    if key in cfg:
        return cfg[key]
    if default is _REQUIRED:
        raise ValidationError(f"config key {key!r} is required")
    return default


def _number(cfg: dict, key: str, default=_REQUIRED) -> float:
    value = _get(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"config key {key!r}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"config key {key!r}: must be finite")
    return float(value)


def _integer(cfg: dict, key: str, default=_REQUIRED) -> int:
    value = _get(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"config key {key!r}: expected an integer, got {value!r}")
    return value


def _choice(cfg: dict, key: str, choices: tuple, default=_REQUIRED) -> str:
    value = _get(cfg, key, default)
    if value not in choices:
        raise ValidationError(
            f"config key {key!r}: expected one of {', '.join(map(repr, choices))}, "
            f"got {value!r}"
        )
    return value


def _flag(cfg: dict, key: str, default: bool) -> bool:
    value = _get(cfg, key, default)
    if not isinstance(value, bool):
        raise ValidationError(f"config key {key!r}: expected true/false, got {value!r}")
    return value


def _model_params(cfg: dict) -> ModelParams:
    return ModelParams(
        sigma=_number(cfg, "sigma"),
        xi0=_number(cfg, "xi0", 0.0),
        xi1=_number(cfg, "xi1"),
        kappa0=_number(cfg, "kappa0", 0.0),
        kappa1=_number(cfg, "kappa1"),
        tau=_number(cfg, "tau"),
        s0=_number(cfg, "s0"),
        dt=_number(cfg, "dt"),
        complex_coupling=_flag(cfg, "complex_coupling", False),
    )


def _sim_config(cfg: dict, seed) -> SimConfig:
    initial_imbalance = _number(cfg, "initial_imbalance", 0.0)
    return SimConfig(
        n_steps=_integer(cfg, "n_steps"),
        initial_price=_number(cfg, "initial_price"),
        initial_state=StateVector.from_imbalance(initial_imbalance),
        mode=_choice(cfg, "mode", (MODE_BALANCED, MODE_IMBALANCE_COUPLED), MODE_BALANCED),
        c_i=_number(cfg, "c_i", 0.0),
        post_trade=_choice(
            cfg, "post_trade", (POST_TRADE_SCRAMBLE, POST_TRADE_COLLAPSE), POST_TRADE_SCRAMBLE
        ),
        seed=seed,
    )


def _load_config(path: str) -> dict:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        with open(cfg_path, encoding="utf-8") as handle:
            cfg = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# deterministic output formatting
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Full-precision, round-trippable float formatting."""
    return repr(float(x))


def _params_hash(effective_cfg: dict) -> str:
    canonical = json.dumps(effective_cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _meta_line(seed, params_hash: str) -> str:
    return f"# qcw={__version__} seed={seed} params_sha256={params_hash}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, meta: str, header: str, rows) -> None:
    lines = [meta, header]
    lines.extend(rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_tool_csv(path, header: str) -> list[list[str]]:
    """Read back a tool-written CSV, skipping '#' metadata lines."""
    rows = []
    with open(path, encoding="utf-8") as handle:
        header_seen = False
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.lstrip().startswith("#"):
                continue
            if not header_seen:
                if line != header:
                    raise ValidationError(
                        f"{path}: line {lineno}: expected header {header!r}, got {line!r}"
                    )
                header_seen = True
                continue
            rows.append(line.split(","))
        if not header_seen:
            raise ValidationError(f"{path}: missing header row")
    return rows


def read_path_csv(path) -> dict:
    """Round-trip reader for path.csv; returns column arrays."""
    rows = _read_tool_csv(path, PATH_CSV_HEADER)
    return {
        "t": np.array([int(r[0]) for r in rows]),
        "s_bid": np.array([float(r[1]) for r in rows]),
        "s_ask": np.array([float(r[2]) for r in rows]),
        "s_trade": np.array([float(r[3]) for r in rows]),
        "side": np.array([r[4] for r in rows]),
        "I": np.array([float(r[5]) for r in rows]),
    }


def read_qi_csv(path) -> Histogram:
    """Round-trip reader for the Q(I) histogram CSV."""
    rows = _read_tool_csv(path, QI_CSV_HEADER)
    edges = [float(r[0]) for r in rows] + [float(rows[-1][1])]
    masses = [float(r[2]) for r in rows]
    return Histogram(edges=np.array(edges), masses=np.array(masses), count=0)


def read_pdf_csv(path) -> dict:
    """Round-trip reader for the fitted-density table."""
    rows = _read_tool_csv(path, PDF_CSV_HEADER)
    return {
        "delta": np.array([float(r[0]) for r in rows]),
        "empirical_density": np.array([float(r[1]) for r in rows]),
        "model_density": np.array([float(r[2]) for r in rows]),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict, out_dir: Path, seed) -> None:
    params = _model_params(cfg)
    sim = _sim_config(cfg, seed)
    effective = dict(cfg, seed=seed)
    phash = _params_hash(effective)

    log.info("simulate: %d steps, mode=%s, seed=%s", sim.n_steps, sim.mode, seed)
    series = simulate_path(sim, params)

    rows = (
        f"{int(series.t[k])},{_fmt(series.s_bid[k])},{_fmt(series.s_ask[k])},"
        f"{_fmt(series.s_trade[k])},{series.side[k]},{_fmt(series.imbalance[k])}"
        for k in range(len(series))
    )
    _write_csv(out_dir / "path.csv", _meta_line(seed, phash), PATH_CSV_HEADER, rows)
    _write_json(
        out_dir / "summary.json",
        {
            "command": "simulate",
            "version": __version__,
            "seed": seed,
            "params_sha256": phash,
            "config": effective,
            "rows": len(series),
            "final_price": float(series.s_trade[-1]),
            "net_log_return": series.net_log_return(),
            "bid_fraction": series.bid_fraction(),
            "spread_residual_max": series.spread_residual_max,
        },
    )
    print(f"wrote {out_dir / 'path.csv'} and {out_dir / 'summary.json'}")


def _ingest_fit_input(cfg: dict, config_dir: Path):
    fmt = _choice(cfg, "format", ("quotes", "ohlc"))
    input_name = _get(cfg, "input")
    if not isinstance(input_name, str):
        raise ValidationError(f"config key 'input': expected a file name, got {input_name!r}")
    input_path = Path(input_name)
    if not input_path.is_absolute():
        input_path = config_dir / input_path
    if not input_path.is_file():
        raise ValidationError(f"config key 'input': file not found: {input_path}")
    if fmt == "quotes":
        ingest = spreads_from_quotes(read_quotes_csv(input_path))
        metadata = {"format": "quotes", "input": input_name}
    else:
        mode = _choice(cfg, "ohlc_mode", ("absolute", "relative"), "absolute")
        ingest = spreads_from_ohlc(read_ohlc_csv(input_path), mode=mode)
        metadata = {"format": "ohlc", "input": input_name, "ohlc_mode": mode}
        if mode == "relative":
            metadata["denominator"] = "close"
    return ingest, metadata


def cmd_fit(cfg: dict, out_dir: Path, seed, config_dir: Path) -> None:
    bins = _integer(cfg, "bins", 50)
    if bins < 1:
        raise ValidationError("config key 'bins': must be >= 1")
    init_cfg = _get(cfg, "init", None)
    init = None
    if init_cfg is not None:
        if (
            not isinstance(init_cfg, (list, tuple))
            or len(init_cfg) != 2
            or not all(isinstance(v, (int, float)) and v > 0 for v in init_cfg)
        ):
            raise ValidationError("config key 'init': expected two positive numbers")
        init = (float(init_cfg[0]), float(init_cfg[1]))

    ingest, metadata = _ingest_fit_input(cfg, config_dir)
    effective = dict(cfg, seed=seed)
    phash = _params_hash(effective)

    log.info("fit: %d usable samples from %d rows", len(ingest.samples), ingest.n_rows)
    fit = fit_spread_params(ingest.samples, init=init)
    law = SpreadLaw(xi1=fit.xi1_hat, kappa1=fit.kappa1_hat)

    values = np.array([s.value for s in ingest.samples])
    hist = Histogram.from_samples(values, bins=bins, value_range=(0.0, float(values.max())))
    centers = hist.centers()
    model = spread_pdf(centers, law)
    empirical = hist.densities()
    rows = (
        f"{_fmt(centers[k])},{_fmt(empirical[k])},{_fmt(model[k])}"
        for k in range(centers.size)
    )
    _write_csv(out_dir / "pdf.csv", _meta_line(seed, phash), PDF_CSV_HEADER, rows)
    _write_json(
        out_dir / "fit.json",
        {
            "command": "fit",
            "version": __version__,
            "seed": seed,
            "params_sha256": phash,
            "metadata": metadata,
            "xi1_hat": fit.xi1_hat,
            "kappa1_hat": fit.kappa1_hat,
            "loglik": fit.loglik,
            "n": fit.n,
            "converged": fit.converged,
            "iterations": fit.iterations,
            "ingestion": ingest.drop_counts(),
        },
    )
    print(f"wrote {out_dir / 'fit.json'} and {out_dir / 'pdf.csv'}")


def cmd_imbalance(cfg: dict, out_dir: Path, seed) -> None:
    params = _model_params(cfg)
    sim = _sim_config(cfg, seed)
    n_paths = _integer(cfg, "n_paths")
    bins = _integer(cfg, "bins", 41)
    if bins < 1:
        raise ValidationError("config key 'bins': must be >= 1")
    effective = dict(cfg, seed=seed)
    phash = _params_hash(effective)

    log.info("imbalance: %d paths x %d steps, mode=%s", n_paths, sim.n_steps, sim.mode)
    ensemble = simulate_ensemble(sim, params, n_paths)
    hist = q_of_i(ensemble, bins=bins)
    moments = imbalance_summary(ensemble)

    rows = (
        f"{_fmt(hist.edges[k])},{_fmt(hist.edges[k + 1])},{_fmt(hist.masses[k])}"
        for k in range(hist.masses.size)
    )
    _write_csv(out_dir / "qi.csv", _meta_line(seed, phash), QI_CSV_HEADER, rows)
    _write_json(
        out_dir / "moments.json",
        {
            "command": "imbalance",
            "version": __version__,
            "seed": seed,
            "params_sha256": phash,
            "config": effective,
            **moments,
        },
    )
    print(f"wrote {out_dir / 'qi.csv'} and {out_dir / 'moments.json'}")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcw",
        description="Coupled-wave bid/ask market model: simulate paths, fit the "
        "spread law, analyze execution imbalance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "generate one bid/ask/trade path"),
        ("fit", "fit the spread law to quote or OHLC data"),
        ("imbalance", "run a path ensemble and histogram the imbalance"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("QCW_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION

    _configure_logging()
    try:
        cfg = _load_config(args.config)
        config_dir = Path(args.config).resolve().parent
        out_dir = Path(args.out) if args.out is not None else Path(_get(cfg, "out_dir", "."))
        seed = args.seed if args.seed is not None else _integer(cfg, "seed", 0)
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate":
            cmd_simulate(cfg, out_dir, seed)
        elif args.command == "fit":
            cmd_fit(cfg, out_dir, seed, config_dir)
        else:
            cmd_imbalance(cfg, out_dir, seed)
        return EXIT_OK
    except ValidationError as exc:
        print(f"qcw: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PricePositivityError as exc:
        print(f"qcw: numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qcw: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
