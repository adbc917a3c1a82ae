"""Command-line interface.

Subcommands: sweep (rate study over epsilon), compare (single-epsilon
reference vs approximation with a per-time error trace), lemma-check
(two-solver profile cross-check), corrections (expansion-residual sweeps),
validate (initial-profile assumption report).

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .amplitude import validate_initial_amplitude
from .config import ExperimentConfig, config_from_mapping, decode_config_text
from .errors import ConfigError, NumericalError
from .hartree import compare_evolution
from .sweep import (
    SweepError,
    emit_gnuplot_script,
    emit_report,
    lemma_check,
    render_report,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(args) -> ExperimentConfig:
    # overrides are merged into the raw document before validation so that
    # mode-dependent defaults (the corrections eps list) resolve correctly
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            raw = decode_config_text(fh.read())
    else:
        raw = {}
    if getattr(args, "mode", None):
        raw["mode"] = args.mode
    if getattr(args, "K", None):
        raw["mode"] = f"corrections-{args.K}"
    if getattr(args, "eps", None):
        try:
            raw["eps_list"] = [float(e) for e in args.eps.split(",")]
        except ValueError:
            raise ConfigError(f"could not parse --eps list {args.eps!r}")
    return config_from_mapping(raw)


def _progress(args):
    if getattr(args, "quiet", False):
        return None
    return lambda msg: print(msg, file=sys.stderr)


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    try:
        report = run_sweep(cfg, jobs=args.jobs, progress=_progress(args))
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.out:
            emit_report(exc.report, args.out)
        return EXIT_NUMERICAL
    text = render_report(report)
    if args.out:
        emit_report(report, args.out)
        if args.plot_script:
            emit_gnuplot_script(args.out, args.plot_script)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    eps = cfg.eps_list[0]
    result = compare_evolution(eps, cfg, trace_points=args.trace)
    lines = ["t,error"]
    for t, e in zip(result.times, result.errors):
        lines.append(f"{repr(float(t))},{repr(float(e))}")
    lines.append(f"# epsilon={repr(float(eps))} final_error={repr(result.final_error)} "
                 f"n={result.grid_n} dt={repr(result.dt_used)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


def _cmd_lemma_check(args) -> int:
    check = lemma_check(kappa=args.kappa, T=args.T, dt=args.dt)
    worst = max(check.deviations)
    if not args.quiet:
        for t, d in zip(check.probe_times, check.deviations):
            print(f"t={t:g} deviation={d:.3e}")
        if check.measured_order != check.measured_order:  # nan
            print("measured dt-order: n/a (agreement at roundoff floor)")
        else:
            print(f"measured dt-order: {check.measured_order:.2f}")
    if worst > args.tol:
        print(f"error: worst deviation {worst:.3e} exceeds {args.tol:g}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    if not check.order_ok:
        print(f"error: measured order {check.measured_order:.2f} below 1.8",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load_config(args)
    report = validate_initial_amplitude(cfg.initial_profile())
    if not args.quiet:
        print(f"norm defect:            {report.norm_defect:.3e}")
        print(f"first moment:           {report.first_moment:.3e}")
        print(f"spectral first moment:  {report.fourier_first_moment:.3e}")
        for m, v in enumerate(report.abs_moments):
            print(f"abs moment m={m}:         {v:.6f}")
        print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semihartree",
        description="Semiclassical coherent-state propagation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode_flag=True):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--quiet", action="store_true", help="suppress stdout")
        if mode_flag:
            p.add_argument("--mode", choices=(
                "physical", "rescaled", "corrections-1", "corrections-2"),
                help="override the configured mode")
        p.add_argument("--eps", help="override eps_list, comma separated")

    p_sweep = sub.add_parser("sweep", help="epsilon sweep with rate fit")
    common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel datapoints (default 1)")
    p_sweep.add_argument("--plot-script", dest="plot_script",
                         help="also write a gnuplot script (requires --out)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare",
                           help="single-epsilon reference vs approximation")
    common(p_cmp, mode_flag=False)
    p_cmp.add_argument("--trace", type=int, default=21,
                       help="number of per-time error samples (default 21)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_lem = sub.add_parser("lemma-check", help="two-solver profile cross-check")
    p_lem.add_argument("--kappa", type=float, default=-1.0)
    p_lem.add_argument("--T", type=float, default=1.0)
    p_lem.add_argument("--dt", type=float, default=2.5e-4)
    p_lem.add_argument("--tol", type=float, default=1e-6)
    p_lem.add_argument("--quiet", action="store_true")
    p_lem.set_defaults(func=_cmd_lemma_check)

    p_cor = sub.add_parser("corrections", help="expansion-residual sweep")
    common(p_cor, mode_flag=False)
    p_cor.add_argument("--K", type=int, choices=(1, 2), default=1,
                       help="expansion order (default 1)")
    p_cor.add_argument("--jobs", type=int, default=1)
    p_cor.add_argument("--plot-script", dest="plot_script")
    p_cor.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="initial-profile assumption report")
    common(p_val, mode_flag=False)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
