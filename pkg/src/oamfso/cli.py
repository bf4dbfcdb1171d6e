"""Command-line orchestration: simulate campaigns, fit channels, sweep metrics.

Subcommands: simulate, fit, metrics, mimo, stc, regime.  Campaign configs are
JSON files (see presets/); every produced file embeds the tool version and
the campaign digest so downstream artifacts cannot be mixed across
incompatible campaigns.  Relative data paths resolve against $OAMFSO_DATA_DIR
when it is set.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 missing input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .field_grid import GridSpec, GridTooSmallError, ModeSet
from .ggd import DegenerateSamplesError, fit_ml
from .metrics import SnrModel, db_to_linear, metric_curves
from .mimo import diversity_report
from .propagation import (
    ChannelConfig,
    config_digest,
    read_store,
    run_monte_carlo,
    write_store,
)
from .stc import (
    CodeKind,
    CodeSpec,
    NonOrthogonalCodebookError,
    PepModel,
    build_codebook,
    channel_sampler_from_store,
    orthogonality_deviation,
    simulate_ber,
    union_bound_ber,
    ORTHOGONALITY_TOL,
)
from .turbulence import TurbulenceSpec, classify_regime, rytov_variance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_MISSING = 4

DATA_DIR_ENV = "OAMFSO_DATA_DIR"


class ConfigError(ValueError):
    """Invalid campaign configuration (reported with the offending key path)."""


class NumericFailureError(RuntimeError):
    """A fit or quadrature did not converge."""


def _resolve(path: str) -> str:
    base = os.environ.get(DATA_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _require(raw: dict, key: str, kind, path: str = ""):
    where = f"{path}.{key}" if path else key
    if key not in raw:
        raise ConfigError(f"{where}: missing required key")
    value = raw[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def load_campaign(path: str):
    """Parse and validate a campaign JSON file.

    Returns (ChannelConfig, n_realizations, master_seed).
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    grid_raw = _require(raw, "grid", dict)
    turb_raw = _require(raw, "turbulence", dict)
    try:
        grid = GridSpec(
            n_points=_require(grid_raw, "n_points", int, "grid"),
            dx=_require(grid_raw, "dx_m", float, "grid"),
        )
        turbulence = TurbulenceSpec(
            cn2=_require(turb_raw, "cn2", float, "turbulence"),
            l0=_require(turb_raw, "l0_m", float, "turbulence"),
            L0=_require(turb_raw, "outer_scale_m", float, "turbulence"),
        )
        tx = _require(raw, "tx_modes", list)
        rx = _require(raw, "rx_modes", list)
        cfg = ChannelConfig(
            lam=_require(raw, "lambda_m", float),
            w0=_require(raw, "w0_m", float),
            z_total=_require(raw, "z_total_m", float),
            n_screens=_require(raw, "n_screens", int),
            grid=grid,
            turbulence=turbulence,
            tx_modes=ModeSet(tuple(tx)),
            rx_modes=ModeSet(tuple(rx)),
            absorber=bool(raw.get("absorber", False)),
        )
    except (ValueError, TypeError, GridTooSmallError) as err:
        raise ConfigError(f"{path}: {err}") from err
    n_real = _require(raw, "n_realizations", int)
    seed = _require(raw, "master_seed", int)
    if n_real < 1:
        raise ConfigError(f"{path}: n_realizations: must be >= 1, got {n_real}")
    if seed < 0:
        raise ConfigError(f"{path}: master_seed: must be >= 0, got {seed}")
    return cfg, n_real, seed


def _parse_mu_grid(text: str) -> np.ndarray:
    """Either 'lo:hi:n' (inclusive linspace in dB) or a comma list of dB values."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return np.array([float(v) for v in text.split(",")])


def _parse_mode_sets(text: str):
    return [ModeSet(tuple(int(v) for v in part.split(","))) for part in text.split(";")]


def _header_lines(digest: str) -> str:
    return f"# oamfso {__version__}\n# config-digest: {digest}\n"


def cmd_simulate(args) -> int:
    cfg, n_real, seed = load_campaign(_resolve(args.config))
    if args.n_realizations is not None:
        n_real = args.n_realizations
    if args.seed is not None:
        seed = args.seed
    out = _resolve(args.out)
    start = 0
    if args.append and os.path.exists(out):
        existing = read_store(out)
        if existing.digest != config_digest(cfg, seed):
            raise ConfigError(f"{out}: existing store belongs to a different campaign")
        start = int(existing.realization_indices.max()) + 1
    t0 = time.perf_counter()
    sample_set = run_monte_carlo(cfg, n_real, seed, jobs=args.jobs, start_index=start)
    wall = time.perf_counter() - t0
    if start:
        from .propagation import append_store

        append_store(out, sample_set)
    else:
        write_store(out, sample_set)
    manifest = {
        "tool_version": __version__,
        "config_digest": sample_set.digest,
        "master_seed": seed,
        "n_realizations": n_real,
        "start_index": start,
        "excluded_count": len(sample_set.excluded),
        "excluded_indices": list(sample_set.excluded),
        "wall_time_s": round(wall, 3),
    }
    with open(out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {sample_set.n} realizations ({len(sample_set.excluded)} excluded) to {out}")
    return EXIT_OK


FIT_COLUMNS = "m, n, a, b, c, loglik, mse, n_samples"


def _fit_row(samples, m: int, n: int) -> str:
    report = fit_ml(samples.samples(m, n))
    if not report.converged:
        raise NumericFailureError(f"ML fit for channel ({m},{n}) did not converge")
    p = report.params
    return (
        f"{m}, {n}, {p.a:.12g}, {p.b:.12g}, {p.c:.12g}, "
        f"{report.log_likelihood:.12g}, {report.mse:.12g}, {report.n_samples}"
    )


def cmd_fit(args) -> int:
    samples = read_store(_resolve(args.store))
    if args.all:
        pairs = [(m, n) for m in samples.tx_modes for n in samples.rx_modes]
    else:
        if args.m is None or args.n is None:
            raise ConfigError("fit: provide --m and --n, or --all")
        pairs = [(args.m, args.n)]
    lines = [_fit_row(samples, m, n) for m, n in pairs]
    text = _header_lines(samples.digest) + FIT_COLUMNS + "\n" + "\n".join(lines) + "\n"
    if args.out:
        with open(_resolve(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def read_fit_table(path: str):
    """Parse a fit CSV back into {(m, n): (a, b, c)} plus the digest."""
    digest = ""
    table = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# config-digest:"):
                digest = line.split(":", 1)[1].strip()
                continue
            if not line or line.startswith("#") or line.startswith("m,"):
                continue
            parts = [p.strip() for p in line.split(",")]
            m, n = int(parts[0]), int(parts[1])
            table[(m, n)] = tuple(float(v) for v in parts[2:5])
    return table, digest


def cmd_metrics(args) -> int:
    from .ggd import GgdParams

    table, digest = read_fit_table(_resolve(args.fits))
    key = (args.m, args.n)
    if key not in table:
        raise KeyError(f"fit table has no channel pair {key}")
    a, b, c = table[key]
    params = GgdParams(a, b, c)
    normalized = SnrModel.from_irradiance(params, 1.0).params
    gamma_th = db_to_linear(args.gamma_th_db)
    rows = metric_curves(normalized, _parse_mu_grid(args.mu_db), gamma_th)
    out = [_header_lines(digest).rstrip("\n"), f"# gamma_th_db: {args.gamma_th_db:g}"]
    out.append("mu_db, capacity_nats, p_out, ber")
    for mu_db, cap, pout, ber in rows:
        out.append(f"{mu_db:.6g}, {cap:.12g}, {pout:.12g}, {ber:.12g}")
    text = "\n".join(out) + "\n"
    if args.out:
        with open(_resolve(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_mimo(args) -> int:
    samples = read_store(_resolve(args.store))
    sets = _parse_mode_sets(args.sets)
    gamma_th = db_to_linear(args.gamma_th_db)
    rows, correlations = diversity_report(sets, samples, _parse_mu_grid(args.mu_db), gamma_th)
    out = [_header_lines(samples.digest).rstrip("\n"), f"# gamma_th_db: {args.gamma_th_db:g}"]
    for (m, n), rho in sorted(correlations.items()):
        out.append(f"# rho I[{m},{m}] vs I[{m},{n}]: {rho:.6g}")
    out.append("set_id, mu_db, p_out, ber, a, b, c")
    for set_id, mu_db, pout, ber, a, b, c in rows:
        out.append(
            f"{set_id}, {mu_db:.6g}, {pout:.12g}, {ber:.12g}, {a:.12g}, {b:.12g}, {c:.12g}"
        )
    text = "\n".join(out) + "\n"
    if args.out:
        with open(_resolve(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


CODE_TOKENS = {
    "gl": CodeKind.GOLDEN_LIGHT,
    "alamouti": CodeKind.ALAMOUTI,
    "repetition": CodeKind.SPATIAL_REPETITION,
    "uncoded": CodeKind.SPATIAL_REPETITION,
}


def _parse_code_token(token: str, n_modes: int) -> tuple[str, CodeSpec]:
    for name, kind in CODE_TOKENS.items():
        if token.startswith(name):
            pam = int(token.removeprefix(name))
            modes = 1 if name == "uncoded" else n_modes
            return token, CodeSpec(kind=kind, pam_order=pam, n_modes=modes)
    raise ConfigError(f"unknown code token {token!r} (expect e.g. gl2, alamouti4, uncoded4)")


def cmd_stc(args) -> int:
    samples = read_store(_resolve(args.store))
    mode_set = ModeSet(tuple(int(v) for v in args.modes.split(",")))
    mu_grid = _parse_mu_grid(args.mu_db)
    rng = np.random.default_rng(args.seed)
    out = [_header_lines(samples.digest).rstrip("\n")]
    out.append("code, pam, mu_db, ber_sim, ber_bound")
    for token in args.codes.split(","):
        name, spec = _parse_code_token(token.strip(), len(mode_set))
        sub_set = ModeSet(mode_set.modes[: spec.n_modes])
        sampler = channel_sampler_from_store(samples, sub_set)
        sim_rows = simulate_ber(
            spec,
            sampler,
            mu_grid,
            rng,
            target_bit_errors=args.target_errors,
            max_codewords=args.max_codewords,
        )
        codebook = build_codebook(spec)
        orthogonal = orthogonality_deviation(codebook) <= ORTHOGONALITY_TOL
        for mu_db, ber, _, _, _ in sim_rows:
            if orthogonal:
                model = PepModel.from_samples(samples, sub_set, db_to_linear(mu_db))
                bound = f"{union_bound_ber(codebook, model):.12g}"
            else:
                bound = ""
            out.append(f"{name}, {spec.pam_order}, {mu_db:.6g}, {ber:.12g}, {bound}")
    text = "\n".join(out) + "\n"
    if args.out:
        with open(_resolve(args.out), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_regime(args) -> int:
    sigma = rytov_variance(args.cn2, args.lambda_m, args.z_m)
    label = classify_regime(sigma)
    print(f"rytov_variance = {sigma:.6g}")
    print(f"regime = {label.value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamfso",
        description="OAM free-space-optics turbulence campaigns and channel statistics",
    )
    parser.add_argument("--version", action="version", version=f"oamfso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign into a sample store")
    p.add_argument("--config", required=True, help="campaign JSON file")
    p.add_argument("--out", required=True, help="sample store path")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--n-realizations", type=int, default=None, help="override the config value")
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p.add_argument("--append", action="store_true", help="extend an existing store")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood channel fits from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--all", action="store_true", help="fit every channel pair")
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("metrics", help="capacity/outage/BER curves from a fit table")
    p.add_argument("--fits", required=True, help="fit CSV from the fit command")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu-db", default="0:40:21", help="'lo:hi:n' or comma list of dB values")
    p.add_argument("--gamma-th-db", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("mimo", help="diversity-set comparison from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--sets", required=True, help="e.g. '1,2;1,3;1,2,3;1'")
    p.add_argument("--mu-db", default="0:40:11")
    p.add_argument("--gamma-th-db", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mimo)

    p = sub.add_parser("stc", help="space-time code BER simulation and bounds")
    p.add_argument("--store", required=True)
    p.add_argument("--modes", default="1,2", help="mode set, e.g. '1,2'")
    p.add_argument("--codes", default="gl2,alamouti4,repetition4,uncoded4")
    p.add_argument("--mu-db", default="0:30:7")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--max-codewords", type=int, default=2_000_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stc)

    p = sub.add_parser("regime", help="Rytov variance and turbulence regime")
    p.add_argument("--cn2", type=float, required=True)
    p.add_argument("--lambda-m", type=float, default=850e-9)
    p.add_argument("--z-m", type=float, default=1000.0)
    p.set_defaults(func=cmd_regime)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except GridTooSmallError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"missing input: {err}", file=sys.stderr)
        return EXIT_MISSING
    except KeyError as err:
        print(f"missing input: {err.args[0]}", file=sys.stderr)
        return EXIT_MISSING
    except (DegenerateSamplesError, NumericFailureError, NonOrthogonalCodebookError, ArithmeticError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
