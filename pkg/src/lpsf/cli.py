"""Command-line surface.

Subcommands build operators and fields from a TOML config, compute norms
and potential functionals, run propagation and decay experiments, and
run the acceptance suite. Every numeric result is also written as
canonical JSON when an output directory is given; timestamps live in a
separate .meta.json so the result files are byte-identical across runs
with the same config and seed.

Exit codes: 0 success / checks passed, 1 a validation check failed,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import datetime
import math
import os
import sys

import numpy as np

from . import _settings, decaylab, evolve, norms
from .config import (ConfigError, RunConfig, canonical_json, content_hash,
                     load_config)
from .dyadic import validate_dyadic, build_dyadic_system
from .funcalc import lp_decompose
from .lattice import load_field, save_field

PASS, FAIL, USAGE = 0, 1, 2


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_json(out_dir: str, stem: str, payload: dict) -> str:
    """Deterministic result file plus a timestamped sibling."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, stem + ".json")
    with open(path, "w") as fh:
        fh.write(canonical_json(payload) + "\n")
    with open(os.path.join(out_dir, stem + ".meta.json"), "w") as fh:
        fh.write(canonical_json({"timestamp": _now(),
                                 "content_hash": content_hash(payload)})
                 + "\n")
    return path


def _exponent_arg(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or 'inf', got {text!r}") from None


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("this command needs --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = RunConfig(cfg.dim, cfg.extent, cfg.points_per_axis, cfg.scheme,
                        cfg.potential, cfg.j_max, args.seed, cfg.threads,
                        cfg.out_dir, cfg.window_tol, cfg.phase_tol,
                        cfg.experiments)
    threads = args.threads if args.threads is not None else cfg.threads
    _settings.set_threads(threads)
    return cfg


def _out_dir(args, cfg: RunConfig | None) -> str:
    if args.out:
        return args.out
    if cfg is not None:
        return cfg.out_dir
    return "reports"


def _echo_config(cfg: RunConfig, out_dir: str):
    _write_json(out_dir, f"config-{cfg.hash()[:12]}", cfg.to_dict())


def _plan(args, lines) -> int:
    print("dry run; execution plan:")
    for line in lines:
        print("  -", line)
    return PASS


# -- subcommands ----------------------------------------------------------


def cmd_validate_dyadic(args) -> int:
    # the window system is grid-free, so --config is optional here; when
    # present it is still parsed (and can supply j_max)
    cfg = load_config(args.config) if args.config else None
    if args.threads is not None:
        _settings.set_threads(args.threads)
    j_max = args.j_max
    if j_max is None:
        j_max = cfg.j_max if cfg is not None and cfg.j_max is not None else 8
    if args.dry_run:
        return _plan(args, [
            f"build dyadic system with j_max = {j_max}",
            f"validate partition/support/derivatives at {args.samples} "
            f"samples per octave"])
    sys_ = build_dyadic_system(j_max)
    report = validate_dyadic(sys_, samples_per_octave=args.samples)
    print(f"partition defect   {report.partition_defect:.3e}")
    print(f"support violations {report.support_violations}")
    for row in report.derivative_table:
        print(f"derivative k={row['k']}: spread {row['spread']:.3f}")
    print("pass" if report.passed else "FAIL")
    if args.out:
        _write_json(args.out, f"dyadic-J{j_max}", report.to_json())
    return PASS if report.passed else FAIL


def cmd_potential_check(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    if args.dry_run:
        return _plan(args, [
            f"sample potential {cfg.potential.describe()} on the "
            f"{cfg.dim}d grid",
            f"Kato norm, profile, Rollnik ({args.samples} samples, "
            f"seed {cfg.seed})"])
    from .lattice import sample_potential
    v = sample_potential(cfg.potential, cfg.build_grid())
    report = norms.hypothesis_check(v, mc_samples=args.samples,
                                    seed=cfg.seed)
    print(report.summary())
    _echo_config(cfg, out)
    _write_json(out, f"potential-{cfg.hash()[:12]}", report.to_json())
    return PASS if report.hypotheses_met else FAIL


def _json_exp(x: float):
    # JSON has no infinity; store unbounded exponents as the string "inf"
    return "inf" if math.isinf(x) else x


def _norm_command(args, which: str) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    idx = norms.BesovIndex(args.alpha, args.p, args.q)
    if args.dry_run:
        return _plan(args, [
            f"assemble H ({cfg.scheme}) and dyadic system",
            f"load field {args.field}",
            f"compute the {which} norm at alpha={args.alpha}, p={args.p}, "
            f"q={args.q}"])
    h = cfg.build_hamiltonian()
    sys_ = cfg.build_system(h)
    f = load_field(h.grid, args.field)
    pieces = lp_decompose(h, sys_, f, cfg.window_tol)
    if which == "besov":
        value = norms.besov_from_pieces(pieces, idx)
    else:
        value = norms.triebel_from_pieces(pieces, idx)
    print(f"{value:.12g}")
    _echo_config(cfg, out)
    _write_json(out, f"{which}-{cfg.hash()[:12]}", {
        "norm": which, "alpha": args.alpha, "p": _json_exp(args.p),
        "q": _json_exp(args.q),
        "field": os.path.basename(args.field), "j_max": sys_.j_max,
        "value": value})
    return PASS


def cmd_besov(args) -> int:
    return _norm_command(args, "besov")


def cmd_triebel(args) -> int:
    return _norm_command(args, "triebel")


def cmd_kato(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    if args.dry_run:
        return _plan(args, ["sample potential", "Kato norm and profile"])
    from .lattice import sample_potential
    v = sample_potential(cfg.potential, cfg.build_grid())
    value = norms.kato_norm(v)
    ext = v.grid.extent / 2.0
    deltas = [ext / 2 ** k for k in range(4) if ext / 2 ** k > v.grid.h * 1.5]
    profile = norms.kato_profile(v, deltas) if deltas else []
    print(f"kato norm {value:.12g}  (threshold {norms.FOUR_PI:.12g})")
    for d, k in profile:
        print(f"  K({d:g}) = {k:.6g}")
    _echo_config(cfg, out)
    _write_json(out, f"kato-{cfg.hash()[:12]}", {
        "kato_norm": value, "threshold": norms.FOUR_PI,
        "profile": [[d, k] for d, k in profile]})
    return PASS


def cmd_rollnik(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    if args.dry_run:
        return _plan(args, [f"sample potential",
                            f"Rollnik Monte Carlo, {args.samples} samples, "
                            f"seed {cfg.seed}"])
    from .lattice import sample_potential
    v = sample_potential(cfg.potential, cfg.build_grid())
    est = norms.rollnik_functional(v, mc_samples=args.samples, seed=cfg.seed)
    print(f"rollnik {est.value:.12g} +/- {est.stderr:.6g}  "
          f"(threshold {norms.FOUR_PI ** 2:.12g})")
    _echo_config(cfg, out)
    _write_json(out, f"rollnik-{cfg.hash()[:12]}", {
        "rollnik": est.value, "stderr": est.stderr,
        "samples": est.samples, "seed": est.seed,
        "threshold": norms.FOUR_PI ** 2})
    return PASS


def cmd_propagate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    times = sorted(float(v) for v in args.times.split(","))
    if args.dry_run:
        return _plan(args, [
            f"assemble H ({cfg.scheme})",
            f"load field {args.field}",
            f"propagate to times {times}",
            f"write one field file per time plus a manifest under {out}"])
    h = cfg.build_hamiltonian()
    f = load_field(h.grid, args.field)
    result = evolve.propagate_series(h, f, times, tol=cfg.phase_tol)
    os.makedirs(out, exist_ok=True)
    entries = []
    for i, (t, state) in enumerate(zip(result.times, result.states)):
        name = f"state-{i:04d}.lpsf"
        save_field(state, os.path.join(out, name))
        entries.append({"index": i, "t": float(t), "file": name})
    print(f"wrote {len(entries)} states; L2 drift {result.l2_drift:.3e}; "
          f"converged {result.converged}")
    _echo_config(cfg, out)
    _write_json(out, "propagate-manifest", {
        "source_field": os.path.basename(args.field),
        "method": result.method, "l2_drift": result.l2_drift,
        "converged": result.converged, "states": entries})
    return PASS


def _run_experiment(cfg: RunConfig, exp, h, sys_, out: str) -> list:
    f = exp.field.build(h.grid)
    common = dict(field_label=exp.label)
    written = []
    if exp.type == "short-time":
        rep = decaylab.short_time_experiment(
            h, sys_, f, exp.p, exp.times, tol=cfg.window_tol,
            phase_tol=cfg.phase_tol, **common)
        written += decaylab.save_report(rep, out)
    elif exp.type == "long-time":
        rep = decaylab.long_time_experiment(
            h, sys_, f, exp.p, exp.times, exp.rhs_variant,
            fit_window=exp.fit_window, tol=cfg.window_tol,
            phase_tol=cfg.phase_tol, **common)
        written += decaylab.save_report(rep, out)
    elif exp.type == "dispersive":
        rep = decaylab.dispersive_scan(
            h, f, exp.p, exp.times, fit_window=exp.fit_window,
            phase_tol=cfg.phase_tol, **common)
        written += decaylab.save_report(rep, out)
    elif exp.type == "corollary":
        idx = norms.BesovIndex(exp.alpha, exp.p, exp.q)
        rep = decaylab.corollary_experiment(
            h, sys_, f, idx, exp.times, exp.space,
            fit_window=exp.fit_window, tol=cfg.window_tol,
            phase_tol=cfg.phase_tol, **common)
        written += decaylab.save_report(rep, out)
    elif exp.type == "lemma-theta":
        thetas = exp.thetas or tuple(2.0 ** -k for k in range(8, -1, -1))
        rep = decaylab.lemma_jn_scan(h, sys_, [f], exp.p, thetas,
                                     exp.times, tol=cfg.window_tol)
        payload = rep.to_json()
        written.append(_write_json(
            out, f"lemma-theta-{content_hash(payload)[:12]}", payload))
        print(f"[{exp.label}] sup ratio {rep.sup_ratio:.6g} at "
              f"{rep.sup_location}; theta spread {rep.spread:.4g}")
        return written
    elif exp.type == "dyadic-split":
        splits = [decaylab.dyadic_split_diagnostic(
            h, sys_, f, t, exp.p, tol=cfg.window_tol,
            phase_tol=cfg.phase_tol).to_json() for t in exp.times]
        payload = {"label": exp.label, "splits": splits}
        written.append(_write_json(
            out, f"dyadic-split-{content_hash(payload)[:12]}", payload))
        for s in splits:
            print(f"[{exp.label}] t={s['t']:g} j_t={s['j_t']} "
                  f"recon {s['reconstruction_rel']:.3e}")
        return written
    fitted = rep.fitted_exponent
    fit_str = ("no fit" if fitted is None
               else f"slope {fitted[0]:+.4f} +/- {fitted[1]:.4f}")
    print(f"[{exp.label}] {rep.experiment}: sup ratio {rep.sup_ratio:.6g}; "
          f"{fit_str}; theory {rep.theory_exponent:+.4f}; "
          f"flags {rep.flags}")
    return written


def cmd_experiment(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    if not cfg.experiments:
        raise ConfigError("config defines no [[experiment]] tables")
    if args.dry_run:
        return _plan(args, [
            f"assemble H ({cfg.scheme}, {cfg.dim}d, N={cfg.points_per_axis})",
        ] + [f"run {e.type} [{e.label}] at p={e.p} over {len(e.times)} times"
             for e in cfg.experiments] + [f"write reports under {out}"])
    h = cfg.build_hamiltonian()
    sys_ = cfg.build_system(h)
    _echo_config(cfg, out)
    for exp in cfg.experiments:
        _run_experiment(cfg, exp, h, sys_, out)
    return PASS


def cmd_suite(args) -> int:
    from . import acceptance
    if args.dry_run:
        return _plan(args, [f"run acceptance criterion {i + 1}: {name}"
                            for i, name in enumerate(acceptance.NAMES)])
    results = acceptance.run_all(progress=print)
    out = args.out
    if out:
        _write_json(out, "suite", {
            "results": [r.to_json() for r in results],
            "passed": all(r.passed for r in results)})
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return PASS if n_pass == len(results) else FAIL


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpsf",
        description="Spectrally adapted scale decompositions, norms, and "
                    "decay experiments for -Laplacian + V on periodic "
                    "grids.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (default from "
                                      "config, else ./reports)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int,
                        help="FFT worker threads (default from config)")
    common.add_argument("--dry-run", action="store_true",
                        help="validate inputs and print the plan only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-dyadic", parents=[common],
                       help="check the partition/support/derivative "
                            "contract of the dyadic windows")
    p.add_argument("--j-max", type=int, default=None,
                   help="window count override (default: config j_max or 8)")
    p.add_argument("--samples", type=int, default=256,
                   help="samples per octave")
    p.set_defaults(func=cmd_validate_dyadic)

    p = sub.add_parser("potential-check", parents=[common],
                       help="Kato norm, profile, Rollnik, and the 3d "
                            "smallness verdict")
    p.add_argument("--samples", type=int, default=200_000,
                   help="Rollnik Monte-Carlo samples")
    p.set_defaults(func=cmd_potential_check)

    for which in ("besov", "triebel"):
        p = sub.add_parser(which, parents=[common],
                           help=f"compute the {which} norm of a stored field")
        p.add_argument("--field", required=True, help="field file (.lpsf)")
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--p", type=_exponent_arg, default=2.0)
        p.add_argument("--q", type=_exponent_arg, default=2.0)
        p.set_defaults(func=cmd_besov if which == "besov" else cmd_triebel)

    p = sub.add_parser("kato", parents=[common],
                       help="Kato norm and radius profile of the config "
                            "potential")
    p.set_defaults(func=cmd_kato)

    p = sub.add_parser("rollnik", parents=[common],
                       help="Rollnik functional of the config potential")
    p.add_argument("--samples", type=int, default=200_000)
    p.set_defaults(func=cmd_rollnik)

    p = sub.add_parser("propagate", parents=[common],
                       help="evolve a stored field and write the states")
    p.add_argument("--field", required=True, help="initial field (.lpsf)")
    p.add_argument("--times", required=True,
                   help="comma-separated times, e.g. 0.5,1,2")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("experiment", parents=[common],
                       help="run every [[experiment]] in the config")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("suite", parents=[common],
                       help="run the full acceptance suite (long)")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return USAGE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return USAGE
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
