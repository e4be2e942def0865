"""Command-line experiment driver.

Every run resolves its configuration (flags, then an optional ``key=value``
file for anything not given on the command line, then defaults), computes
all results in memory, and only then writes its CSV artifacts followed by
``manifest.json``. Invalid configurations exit with status 2, estimator
failures with status 1; in either case nothing is written.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, analytic, moments, partition, stats
from ._backend import BACKEND
from .sampling import EnsembleParams, RngStream, map_replicas, sample_ensemble, sample_spectra

COMMANDS = (
    "sample", "moments", "partition", "theta", "spacings",
    "counting", "correlation", "stieltjes", "linstat", "tails",
)
ENSEMBLE_COMMANDS = {"sample", "spacings", "counting", "correlation", "stieltjes", "linstat", "tails"}
SCHEMA_VERSION = 1
# flags that change how a run executes but not what it computes
EXECUTION_KEYS = ("workers", "output_dir", "config")

LINSTAT_FUNCTIONS = {
    "square": lambda x: x * x,
    "lorentzian": lambda x: 1.0 / (x * x + 1.0),
    "constant": lambda x: np.ones_like(x),
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive, like linspace) or a comma list."""
    text = str(text)
    if ":" in text:
        try:
            a, b, n = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(n))]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:stop:num, got {text!r}")
    return _floats(text)


def _intervals(text: str) -> list[tuple[float, float]]:
    out = []
    for part in str(text).split(","):
        try:
            a, b = part.split(":")
            out.append((float(a), float(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a:b[,c:d...], got {text!r}")
    return out


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="betalab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key=value file; command-line flags win")
    p.add_argument("--output-dir", type=Path, default=Path("."))

    g = p.add_argument_group("ensemble")
    g.add_argument("--n", type=_ints, default=[1000], help="matrix size (comma list for partition)")
    g.add_argument("--gamma", type=_floats, help="bounded regime: beta = 2 gamma / N, alpha = gamma + 1")
    g.add_argument("--regime-exponent", type=float, help="growing regime: beta = N**c")
    g.add_argument("--alpha-offset", type=float, default=1.0,
                   help="growing regime: alpha = N beta / 2 + offset (default 1)")
    g.add_argument("--beta", type=float, help="explicit beta (with --alpha)")
    g.add_argument("--alpha", type=float, help="explicit alpha (with --beta)")

    r = p.add_argument_group("sampling")
    r.add_argument("--replicas", type=int, default=100)
    r.add_argument("--seed", type=_seed, help="falls back to $BETA_LAB_SEED, then 0")
    r.add_argument("--tol", type=float, help="eigenvalue tolerance (default: scaled to the matrix)")
    r.add_argument("--workers", type=int, default=1)

    s = p.add_argument_group("statistics")
    s.add_argument("--E", type=float, default=0.0, help="energy for local statistics")
    s.add_argument("--window", type=float, default=4.0, help="half-width W in rescaled units")
    s.add_argument("--subwindows", type=_intervals, help="counting intervals a:b,... (default [-W/2, W/2])")
    s.add_argument("--k", type=int, default=2, help="correlation order")
    s.add_argument("--k-max", type=int, default=8, help="largest moment order")
    s.add_argument("--unfold", choices=stats.SPACING_MODES, default="mu_gamma_unfold")
    s.add_argument("--bulk-trim", type=float, default=0.05)
    s.add_argument("--bins", type=int, default=50)
    s.add_argument("--e-grid", type=_grid, default=_grid("-1.9:1.9:39"))
    s.add_argument("--x-grid", type=_grid, default=_grid("-3:3:13"), help="real parts of z")
    s.add_argument("--eta", type=float, default=1.0, help="imaginary part of z")
    s.add_argument("--h", choices=sorted(LINSTAT_FUNCTIONS), default="square")
    s.add_argument("--thresholds", type=_floats, default=_floats("2.0,2.25,2.5,2.75,3.0"))
    return p


def _read_config_file(path: Path) -> dict[str, str]:
    out = {}
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        values = _read_config_file(args.config)
        known = {a.dest: a for a in parser._actions}
        for key in values:
            if key not in known or key in ("help", "config"):
                raise ConfigError(f"unknown config key {key!r}")
        # string defaults go through each action's type, so re-parsing with
        # the file as defaults lets explicit flags override it
        parser.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# config resolution


def _single(values, name):
    if values is None:
        return None
    if len(values) != 1:
        raise ConfigError(f"--{name} takes a single value for this command")
    return values[0]


def resolve_params(args, N: int) -> EnsembleParams:
    chosen = [
        name for name, given in (
            ("gamma", args.gamma is not None),
            ("regime-exponent", args.regime_exponent is not None),
            ("beta/alpha", args.beta is not None or args.alpha is not None),
        ) if given
    ]
    if len(chosen) != 1:
        raise ConfigError(
            "choose exactly one regime: --gamma, --regime-exponent, or --beta with --alpha"
            + (f" (got {', '.join(chosen)})" if chosen else "")
        )
    if args.gamma is not None:
        return EnsembleParams.fixed_gamma(N, _single(args.gamma, "gamma"))
    if args.regime_exponent is not None:
        return EnsembleParams.beta_exponent(N, args.regime_exponent, args.alpha_offset)
    if args.beta is None or args.alpha is None:
        raise ConfigError("explicit regime needs both --beta and --alpha")
    return EnsembleParams.explicit(N, args.beta, args.alpha)


def resolve_seed(args) -> tuple[int, str]:
    if args.seed is not None:
        return args.seed, "flag"
    env = os.environ.get("BETA_LAB_SEED")
    if env is not None:
        try:
            return _seed(env), "env"
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigError(f"BETA_LAB_SEED is not a valid seed: {env!r}")
    return 0, "default"


def validate(args):
    if args.replicas < 1:
        raise ConfigError("--replicas must be >= 1")
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    if args.tol is not None and not args.tol > 0:
        raise ConfigError("--tol must be > 0")
    if not args.window > 0:
        raise ConfigError("--window must be > 0")
    if any(n < 1 for n in args.n):
        raise ConfigError("--n must be >= 1")
    if args.command != "partition" and len(args.n) != 1:
        raise ConfigError("--n takes a single value for this command")
    if args.command == "moments":
        if args.gamma is None:
            args.gamma = [1.0]
        if not 0 <= args.k_max <= moments.K_MAX:
            raise ConfigError(f"--k-max must lie in [0, {moments.K_MAX}]")
        if any(not g >= 0 for g in args.gamma):
            raise ConfigError("--gamma must be >= 0")
    if args.command == "correlation" and not 1 <= args.k <= 3:
        raise ConfigError("--k must lie in [1, 3]")
    if not 0 <= args.bulk_trim < 0.5:
        raise ConfigError("--bulk-trim must lie in [0, 1/2)")
    if args.subwindows is not None:
        for a, b in args.subwindows:
            if not -args.window <= a < b <= args.window:
                raise ConfigError(f"subwindow {a}:{b} must lie inside [-W, W]")
    if args.bins < 1:
        raise ConfigError("--bins must be >= 1")


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


# ---------------------------------------------------------------------------
# CSV


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns (artifacts: {filename: text}, statistics: dict)


def _spectra(args, params, seed):
    return sample_spectra(params, seed, args.replicas, tol=args.tol, workers=args.workers)


def cmd_sample(args, params, seed):
    sp = _spectra(args, params, seed)
    rows = [(s.replica_id, i, v) for s in sp for i, v in enumerate(s.eigenvalues)]
    m2 = stats.pooled_moment(sp, 2)
    return (
        {"eigenvalues.csv": csv_text(("replica_id", "index", "eigenvalue"), rows)},
        {"second_moment": m2[0], "second_moment_se": m2[1]},
    )


def cmd_moments(args, params, seed):
    rows = []
    for g in args.gamma:
        for k in range(0, args.k_max + 1):
            if k % 2:
                rows.append((k, g, 0.0, "0"))
                continue
            rows.append((k, g, moments.moment_value(k, g),
                         str(moments.moment_polynomial(k).exact_value(Fraction(g)))))
    return {"moments.csv": csv_text(("k", "gamma", "m_k", "m_k_exact"), rows)}, {}


def cmd_partition(args, params, seed):
    rows = []
    for N in args.n:
        p = resolve_params(args, N)
        log_z = partition.log_partition(partition.PartitionQuery(N, p.alpha, p.beta))
        density = log_z / (N * N * p.beta) if p.beta > 0 else float("nan")
        rows.append((N, p.beta, p.alpha, log_z, density))
    text = csv_text(("N", "beta", "alpha", "logZ", "logZ_over_N2beta"), rows)
    return {"partition.csv": text}, {"free_energy_limit": partition.FREE_ENERGY_LIMIT}


def _z_grid(args):
    return [complex(x, args.eta) for x in args.x_grid]


def cmd_theta(args, params, seed):
    out = {}
    statistics = {}
    bulk = [E for E in args.e_grid if abs(E) < 2.0]
    header = ["E", "theta_semicircle", "theta_from_nu"]
    cols = [[analytic.theta_semicircle(E) for E in bulk], [analytic.theta_from_nu(E) for E in bulk]]
    grid = bulk
    if args.gamma is not None:
        p = resolve_params(args, args.n[0])
        sp = _spectra(args, p, seed)
        grid = list(args.e_grid)
        th, se = [], []
        for E in grid:
            lp, lp_se = stats.log_potential_mu_gamma(sp, E)
            t = analytic.theta_bounded_regime(E, p.gamma, lp)
            th.append(t)
            se.append(t * 2.0 * p.gamma * lp_se)
        pad = {E: i for i, E in enumerate(bulk)}
        cols = [[c[pad[E]] if E in pad else float("nan") for E in grid] for c in cols]
        cols += [th, se]
        header += ["theta_bounded", "theta_bounded_se"]
        statistics["gamma"] = p.gamma
    out["theta.csv"] = csv_text(header, zip(grid, *cols))
    rows = []
    for z in _z_grid(args):
        U = analytic.stieltjes_semicircle(z)
        nu = analytic.stieltjes_nu(z)
        rows.append((z.real, z.imag, U.real, U.imag, nu.real, nu.imag))
    out["transforms.csv"] = csv_text(("z_re", "z_im", "U_re", "U_im", "nu_re", "nu_im"), rows)
    return out, statistics


def cmd_spacings(args, params, seed):
    sp = _spectra(args, params, seed)
    x = stats.pooled_spacings(sp, args.unfold, args.bulk_trim)
    D, pval = stats.ks_exponential(x)
    hist = stats.spacing_histogram(x, bins=args.bins)
    return (
        {"spacings.csv": csv_text(("bin_left", "bin_right", "count", "expected_exp1"), hist)},
        {"ks_distance": D, "ks_pvalue": pval, "n_spacings": int(x.size),
         "unfold": args.unfold, "bulk_trim": args.bulk_trim},
    )


def _subwindows(args):
    if args.subwindows is not None:
        return args.subwindows
    return [(-args.window / 2.0, args.window / 2.0)]


def cmd_counting(args, params, seed):
    sp = _spectra(args, params, seed)
    pr = stats.local_processes(sp, args.E, args.window)
    rows, summary = [], []
    for wc in stats.counting_statistics(pr, _subwindows(args)):
        a, b = wc.interval
        hist = wc.histogram()
        pmf = _poisson_pmf(wc.mean, hist.size)
        for j, c in enumerate(hist):
            rows.append((a, b, j, int(c), wc.counts.size * pmf[j]))
        chi2, p_chi2, dof = stats.poisson_chi2_test(wc.counts)
        _, p_disp = stats.dispersion_test(wc.counts)
        summary.append({
            "interval": [a, b], "mean": wc.mean, "variance": wc.variance,
            "dispersion": wc.dispersion, "chi2": chi2, "chi2_dof": dof,
            "chi2_pvalue": p_chi2, "dispersion_pvalue": p_disp,
        })
    text = csv_text(("window_left", "window_right", "count", "replicas", "poisson_expected"), rows)
    return {"counting.csv": text}, {"windows": summary}


def _poisson_pmf(lam, size):
    from scipy.stats import poisson
    return poisson.pmf(np.arange(size), lam)


def cmd_correlation(args, params, seed):
    sp = _spectra(args, params, seed)
    pr = stats.local_processes(sp, args.E, args.window)
    boxes = stats.default_boxes(args.k, W=math.floor(args.window))
    ce = stats.correlation_estimate(pr, args.k, boxes)
    header = [f"b{j}_{side}" for j in range(1, args.k + 1) for side in ("left", "right")]
    rows = [
        tuple(v for iv in box for v in iv) + (e, s)
        for box, e, s in zip(ce.boxes, ce.estimates, ce.std_errors)
    ]
    return (
        {"correlation.csv": csv_text(header + ["estimate", "std_error"], rows)},
        {"k": args.k, "mean_estimate": float(ce.estimates.mean())},
    )


def cmd_stieltjes(args, params, seed):
    sp = _spectra(args, params, seed)
    nb = params.N * params.beta
    rows = []
    for z in _z_grid(args):
        vals = stats.stieltjes_replica_means(sp, z)
        est = complex(vals.mean())
        se = (float(vals.real.std(ddof=1)), float(vals.imag.std(ddof=1))) if vals.size > 1 else (math.inf,) * 2
        U = analytic.stieltjes_semicircle(z)
        nu = analytic.stieltjes_nu(z)
        corr = nb * (est - U)
        rows.append((
            z.real, z.imag, est.real, est.imag,
            se[0] / math.sqrt(vals.size), se[1] / math.sqrt(vals.size),
            U.real, U.imag, corr.real, corr.imag, nu.real, nu.imag,
        ))
    header = ("z_re", "z_im", "Re", "Im", "Re_se", "Im_se", "U_re", "U_im",
              "correction_re", "correction_im", "nu_re", "nu_im")
    return {"stieltjes.csv": csv_text(header, rows)}, {"N_beta": nb}


def cmd_linstat(args, params, seed):
    sp = _spectra(args, params, seed)
    h = LINSTAT_FUNCTIONS[args.h]
    ls = stats.linear_statistic(sp, h)
    se = stats.linear_statistic_bootstrap_se(sp, h, seed=seed % 2**32)
    return (
        {"linstat.csv": csv_text(("h", "lhs", "lhs_bootstrap_se", "rhs"), [(args.h, ls.lhs, se, ls.rhs)])},
        {"lhs": ls.lhs, "rhs": ls.rhs, "lhs_bootstrap_se": se},
    )


def _tail_hits(replica_id, params, seed, thresholds):
    T = sample_ensemble(params, RngStream(seed, replica_id))
    return stats._max_abs_exceeds(T, np.asarray(thresholds))


def cmd_tails(args, params, seed):
    fn = partial(_tail_hits, params=params, seed=seed, thresholds=tuple(args.thresholds))
    hits = map_replicas(fn, range(args.replicas), args.workers)
    total = np.sum(hits, axis=0)
    rows = []
    for x, h in zip(args.thresholds, total):
        lo, hi = stats.wilson_interval(int(h), args.replicas)
        rows.append((x, int(h), h / args.replicas, lo, hi))
    header = ("threshold", "exceedances", "frequency", "wilson_low", "wilson_high")
    return {"tails.csv": csv_text(header, rows)}, {}


HANDLERS = {
    "sample": cmd_sample, "moments": cmd_moments, "partition": cmd_partition,
    "theta": cmd_theta, "spacings": cmd_spacings, "counting": cmd_counting,
    "correlation": cmd_correlation, "stieltjes": cmd_stieltjes,
    "linstat": cmd_linstat, "tails": cmd_tails,
}


# ---------------------------------------------------------------------------


def prepare(args):
    """Validate and resolve everything that can be checked before computing."""
    validate(args)
    seed, seed_source = resolve_seed(args)
    params = None
    if args.command in ENSEMBLE_COMMANDS:
        params = resolve_params(args, args.n[0])
    elif args.command == "partition" or (args.command == "theta" and args.gamma is not None):
        for N in args.n:
            resolve_params(args, N)
    return seed, seed_source, params


def run(args, seed, seed_source, params) -> int:
    artifacts, statistics = HANDLERS[args.command](args, params, seed)

    config = {k: v for k, v in sorted(vars(args).items()) if k not in EXECUTION_KEYS}
    config["seed"] = seed
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "seed_source": seed_source,
        "params": params.to_dict() if params is not None else None,
        "artifacts": sorted(artifacts),
        "statistics": statistics,
        "execution": {"workers": args.workers, "backend": BACKEND, "version": __version__},
    }
    text = json.dumps(_jsonable(manifest), indent=2, sort_keys=True, allow_nan=False) + "\n"
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, body in artifacts.items():
        with open(out / name, "w", newline="\n") as fh:
            fh.write(body)
    with open(out / "manifest.json", "w", newline="\n") as fh:
        fh.write(text)
    return 0


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        resolved = prepare(args)
    except ValueError as exc:  # ConfigError and parameter validation
        print(f"betalab: error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(args, *resolved)
    except Exception as exc:  # noqa: BLE001 - any estimator failure is exit 1
        print(f"betalab: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
