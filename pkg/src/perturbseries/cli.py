"""Command-line entry point: ``analyze``, ``verify`` and ``experiment``.

Human-readable tables go to stdout; every machine-readable output (JSON,
CSV, curve files and the run manifest) is written under ``--out``.

Exit codes
----------
0  success
1  ``verify``: at least one applicable check failed
2  dimension mismatch (``analyze``) or configuration error (``verify``, ``experiment``)
3  input file missing or unreadable
4  eigenvalue index out of range
5  input matrix invalid (not symmetric, non-finite, or degenerate eigenvalue)
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, read_config_text
from .covariance import load_experiment_config, manifest_json, phase_transition_experiment
from .errors import DegenerateGapError, SpectralIndexError
from .expansion import partial_sums
from .matrix_io import read_matrix
from .oracles import exact_perturbed
from .series import make_instance
from .verify import load_verify_config, run_sweep, sweep_csv

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DIMENSION = 2
EXIT_CONFIG = 2
EXIT_UNREADABLE = 3
EXIT_INDEX = 4
EXIT_INVALID = 5

CURVES = ("rel_ev_err", "proj_err", "ref_ev", "ref_proj", "rel_ev_err_cv")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def bundled_config(name: str) -> str | None:
    res = resources.files("perturbseries") / "configs" / f"{name}.cfg"
    return res.read_text() if res.is_file() else None


def _config_text(spec: str) -> str:
    """Read a config file, falling back to a bundled config of that name."""
    path = Path(spec)
    if path.is_file():
        return read_config_text(path)
    text = bundled_config(spec)
    if text is None:
        raise ConfigError(f"no config file or bundled config named {spec!r}")
    return text


def _write_manifest(out: Path, command: str, config: dict, seed, outputs: list[str],
                    started: str, t0: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
        "started_at": started,
        "finished_at": _now(),
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    (out / "manifest.json").write_text(manifest_json(manifest))


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


# -- analyze -------------------------------------------------------------------


def _load(path: str) -> np.ndarray:
    try:
        return read_matrix(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(EXIT_UNREADABLE, f"cannot read matrix {path}: {exc}") from exc


def cmd_analyze(args) -> int:
    t0, started = time.perf_counter(), _now()
    Sigma, E = _load(args.matrix), _load(args.perturbation)
    if Sigma.shape != E.shape:
        raise CliError(EXIT_DIMENSION, f"dimension mismatch: {Sigma.shape} vs {E.shape}")
    if not 1 <= args.j <= Sigma.shape[0]:
        raise CliError(EXIT_INDEX, f"index j={args.j} outside 1..{Sigma.shape[0]}")
    if args.p < 1:
        raise CliError(EXIT_CONFIG, "p must be >= 1")
    try:
        inst = make_instance(Sigma, E)
        exp = partial_sums(inst, args.j, args.p, contour_constant=args.contour_constant)
    except SpectralIndexError as exc:
        raise CliError(EXIT_INDEX, str(exc)) from exc
    except (ValueError, DegenerateGapError) as exc:
        raise CliError(EXIT_INVALID, str(exc)) from exc
    exact = exact_perturbed(inst)
    P_hat, lam_hat = exact.projector(args.j), exact.eigenvalue(args.j)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "expansion.json").write_text(exp.to_json(indent=1) + "\n")

    rep = exp.delta
    lines = [
        f"index j = {args.j}   dimension = {inst.dim}   order p = {args.p}",
        f"gap g_j            {_fmt(rep.gap)}",
        f"delta              {_fmt(rep.delta)}",
        f"delta_prime        {_fmt(rep.delta_prime)}",
        f"  norm_rr          {_fmt(rep.norm_rr)}",
        f"  norm_rp          {_fmt(rep.norm_rp)}",
        f"  norm_pp          {_fmt(rep.norm_pp)}",
        f"exact eigenvalue   {lam_hat:.15g}",
        "",
        f"{'n':>3} {'||P^(n)||_2':>14} {'lambda^(n)':>14}",
    ]
    for n, (c, lv) in enumerate(zip(exp.proj_coeffs, exp.eval_coeffs)):
        lines.append(f"{n:>3} {np.linalg.norm(c):>14.6g} {lv:>14.6g}")
    lines += ["", f"{'p':>3} {'proj error':>14} {'eigenvalue error':>17}"]
    S = np.zeros_like(P_hat)
    for p in range(1, args.p + 1):
        S = S + exp.proj_coeffs[p - 1]
        ev_err = abs(lam_hat - float(np.sum(exp.eval_coeffs[:p])))
        lines.append(f"{p:>3} {np.linalg.norm(P_hat - S):>14.6g} {ev_err:>17.6g}")
    lines += ["", f"bounds at p = {args.p}", f"{'name':<18} {'value':>14}  applicable"]
    for name, b in exp.bounds.items():
        lines.append(f"{name:<18} {_fmt(b.value):>14}  {'yes' if b.applicable else 'no (' + b.note + ')'}")
    print("\n".join(lines))

    config = {"matrix": str(args.matrix), "perturbation": str(args.perturbation), "j": args.j,
              "p": args.p, "contour_constant": args.contour_constant}
    _write_manifest(out, "analyze", config, args.seed, ["expansion.json"], started, t0)
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def cmd_verify(args) -> int:
    t0, started = time.perf_counter(), _now()
    try:
        cfg = load_verify_config(_config_text(args.config), seed=args.seed,
                                 corrupt_check=args.corrupt_bound,
                                 corrupt_factor=0.0 if args.corrupt_bound else None)
    except (ConfigError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    result = run_sweep(cfg, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.csv").write_text(sweep_csv(result))

    lines = [f"instances = {cfg.instances}   d = {cfg.d}   seed = {cfg.seed}", "",
             f"{'check':<22} {'applicable':>10} {'passed':>8} {'failed':>8} {'n/a':>8}"]
    for name, (app, ok, na) in sorted(result.counts().items()):
        lines.append(f"{name:<22} {app:>10} {ok:>8} {app - ok:>8} {na:>8}")
    fails = result.failures
    lines += ["", f"failures: {len(fails)}"]
    print("\n".join(lines))

    config = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.__dict__.items()}
    _write_manifest(out, "verify", config, cfg.seed, ["verify.csv"], started, t0)
    return EXIT_CHECK_FAILED if fails else EXIT_OK


# -- experiment ----------------------------------------------------------------


def cmd_experiment(args) -> int:
    t0, started = time.perf_counter(), _now()
    try:
        cfg = load_experiment_config(_config_text(args.config), seed=args.seed)
    except (ConfigError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    table = phase_transition_experiment(cfg, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = ["phase.csv"]
    (out / "phase.csv").write_text(table.to_csv())
    if args.emit_gnuplot_style:
        for name in CURVES:
            if name == "rel_ev_err_cv" and cfg.dist != "gaussian":
                continue
            (out / f"{name}.dat").write_text(table.curve_text(name))
            outputs.append(f"{name}.dat")

    lines = [f"alpha = {cfg.alpha:g}   d = {cfg.d}   n = {cfg.n}   M = {cfg.m_replicates}   "
             f"dist = {cfg.dist}   seed = {cfg.seed}", "",
             f"{'j':>3} {'rel_ev_err':>11} {'ref_ev':>9} {'ratio_ev':>9} "
             f"{'proj_err':>9} {'ratio_proj':>10} {'P(delta>1/4)':>13}"]
    for r in table.rows:
        lines.append(f"{r['j']:>3} {r['rel_ev_err']:>11.5g} {r['ref_ev']:>9.4g} {r['ratio_ev']:>9.4g} "
                     f"{r['proj_err']:>9.4g} {r['ratio_proj']:>10.4g} {r['p_delta_gt_quarter']:>13.3g}")
    print("\n".join(lines))

    _write_manifest(out, "experiment", cfg.to_dict(), cfg.seed, outputs, started, t0)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=argparse.SUPPRESS,
                        help="base seed (overrides the config's seed)")
    common.add_argument("--threads", type=_positive, default=argparse.SUPPRESS,
                        help="worker threads for sweeps and Monte Carlo")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="output directory (default: current directory)")

    parser = argparse.ArgumentParser(prog="perturbseries", parents=[common],
                                     description="Perturbation series, bounds and oracles "
                                                 "for symmetric eigenproblems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="expand one eigenvalue/eigenprojection")
    a.add_argument("matrix", help="base matrix file (text or JSON)")
    a.add_argument("perturbation", help="perturbation matrix file (text or JSON)")
    a.add_argument("-j", type=int, required=True, help="1-based eigenvalue index")
    a.add_argument("-p", type=int, default=3, help="number of series terms (default 3)")
    a.add_argument("--contour-constant", type=float, default=None,
                   help="constant for the contour eigenvalue bound when p >= 2 (default 2d)")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", parents=[common], help="randomised bound and identity sweep")
    v.add_argument("config", help="config file or bundled name (verify_default, verify_smoke)")
    v.add_argument("--corrupt-bound", default=None, metavar="CHECK",
                   help="self-test hook: zero the right-hand side of CHECK")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", parents=[common], help="phase-transition Monte Carlo")
    e.add_argument("config", help="config file or bundled name (phase_alpha1, smoke)")
    e.add_argument("--emit-gnuplot-style", action="store_true",
                   help="also write one two-column data file per curve")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("seed", None), ("threads", 1), ("out", ".")):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
