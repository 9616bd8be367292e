"""Command-line driver.

Subcommands: ``simulate``, ``estimate``, ``sweep scale|blur|noise``, ``bias``,
``crlb`` and ``interp-noise``. CSV goes to ``--out`` (or stdout). Exit codes:
0 success, 2 configuration error, 3 numeric error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimate import OBJECTIVES, ObjectiveSpec, estimate_sigma_r
from .exceptions import (
    ConfigurationError,
    DepthRangeError,
    DomainError,
    FormatError,
    InconsistentObservationError,
    NumericError,
)
from .experiments import (
    SweepConfig,
    run_bias_study,
    run_interp_noise_report,
    run_sweep,
    simulate_pair,
    sweep_csv,
    to_csv,
)
from .optics import relative_blur
from .pgm import load_pgm, save_pgm
from .textures import TEXTURE_KINDS, make_texture

log = logging.getLogger("dfdmag")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _parse_grid(text: str):
    try:
        lo, step, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:step:hi, got {text!r}")
    return lo, step, hi


def _shared(parser):
    parser.add_argument("--config", type=Path, help="JSON document with SweepConfig fields")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--out", type=Path, help="output file (default: stdout)")
    parser.add_argument("--deterministic", action="store_true", help="omit the timestamp provenance line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfdmag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated image pair as PGM plus JSON ground truth")
    _shared(p)
    p.add_argument("--texture", choices=TEXTURE_KINDS, default="fractal")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--s", type=float, default=0.9, dest="s_w", help="warp factor s1/s2")
    p.add_argument("--sigma1", type=float, default=0.7)
    p.add_argument("--sigma2", type=float, default=1.2)
    p.add_argument("--noise-var", type=float, default=0.0, help="noise variance on the 0-255 scale")
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("estimate", help="estimate the relative blur of two PGM images")
    _shared(p)
    p.add_argument("--g1", type=Path, required=True, help="less blurred image")
    p.add_argument("--g2", type=Path, required=True, help="more blurred image")
    p.add_argument("--s", type=float, default=1.0, dest="s_w", help="warp factor s1/s2")
    p.add_argument("--estimator", choices=OBJECTIVES, default="lse")
    p.add_argument("--grid", type=_parse_grid, default=(0.05, 0.05, 3.0), help="lo:step:hi in pixels")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--method", choices=("bilinear", "bicubic"), default="bilinear")

    p = sub.add_parser("sweep", help="estimator accuracy sweep over scale, blur or noise")
    p.add_argument("kind", choices=("scale", "blur", "noise"))
    _shared(p)

    for name, text in (
        ("bias", "Monte Carlo bias of scale-aware vs scale-ignorant LS"),
        ("crlb", "empirical covariance traces against the Cramer-Rao bound"),
        ("interp-noise", "histogram, kurtosis and autocorrelation of interpolation noise"),
    ):
        p = sub.add_parser(name, help=text)
        _shared(p)
        p.add_argument("--s", type=float, dest="s_w", help="warp factor s1/s2 (default 0.9)")
        if name != "interp-noise":
            p.add_argument("--trials", type=int)
    return parser


def _config(args) -> SweepConfig:
    cfg = SweepConfig.from_json(args.config) if getattr(args, "config", None) else SweepConfig()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "s_w", None) is not None and args.command in ("bias", "crlb", "interp-noise"):
        cfg.s_w = args.s_w
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    return cfg


def _provenance(args, cfg: SweepConfig, extra=None) -> dict:
    prov = {"dfdmag": f"{__version__} {args.command}" + (f" {args.kind}" if args.command == "sweep" else "")}
    prov["config"] = json.dumps(cfg.to_dict(), sort_keys=True)
    prov.update(extra or {})
    if not args.deterministic:
        prov["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return prov


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        log.info("wrote %s", path)


def _cmd_simulate(args):
    cfg = _config(args)
    scene = make_texture(args.texture, args.size, cfg.master_seed)
    sigma_r = relative_blur(args.sigma1, args.sigma2, args.s_w)
    g1, g2 = simulate_pair(scene, args.s_w, args.sigma1, args.sigma2, args.noise_var, cfg.master_seed)
    prefix = Path(args.out_prefix)
    save_pgm(g1, f"{prefix}_1.pgm")
    save_pgm(g2, f"{prefix}_2.pgm")
    truth = {
        "texture": args.texture,
        "size": args.size,
        "s_w": args.s_w,
        "sigma1": args.sigma1,
        "sigma2": args.sigma2,
        "sigma_r_true": sigma_r,
        "noise_var": args.noise_var,
        "seed": cfg.master_seed,
    }
    Path(f"{prefix}.json").write_text(json.dumps(truth, indent=2) + "\n")


def _cmd_estimate(args):
    lo, step, hi = args.grid
    spec = ObjectiveSpec(
        kind=args.estimator, sigma_lo=lo, sigma_hi=hi, sigma_step=step, refine=args.refine, method=args.method
    )
    report = estimate_sigma_r(load_pgm(args.g1), load_pgm(args.g2), args.s_w, spec)
    doc = {
        "estimator": report.kind,
        "s_w": args.s_w,
        "sigma_r_hat": report.sigma_r_hat,
        "objective_value": report.objective_value,
        "objective_curve": report.objective_curve.tolist(),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)


def _cmd_sweep(args):
    cfg = dataclasses.replace(_config(args), sweep_kind=args.kind).resolved()
    rows = run_sweep(cfg)
    _emit(sweep_csv(rows, _provenance(args, cfg)), args.out or (Path(cfg.out) if cfg.out else None))


def _cmd_bias(args):
    cfg = _config(args)
    aware, ignorant = run_bias_study(cfg)
    rows = []
    for rep in (aware, ignorant):
        for i in range(rep.empirical_bias.size):
            rows.append(
                (rep.label, i, rep.empirical_bias[i], rep.bias_std_err[i], rep.analytic_bias[i], rep.z_scores[i])
            )
    extra = {
        "trials": aware.trials,
        "bias_norm": f"scale-aware={aware.bias_norm:.9g} scale-ignorant={ignorant.bias_norm:.9g}",
        "analytic_bias_norm": format(float(np.linalg.norm(ignorant.analytic_bias)), ".9g"),
    }
    header = ["estimator", "component", "empirical_bias", "bias_std_err", "analytic_bias", "z_score"]
    _emit(to_csv(header, rows, _provenance(args, cfg, extra)), args.out)


def _cmd_crlb(args):
    cfg = _config(args)
    reports = run_bias_study(cfg)
    rows = [
        (r.label, r.trials, r.empirical_cov_trace, r.crlb_trace, r.empirical_cov_trace / r.crlb_trace)
        for r in reports
    ]
    header = ["estimator", "trials", "empirical_cov_trace", "crlb_trace", "trace_ratio"]
    _emit(to_csv(header, rows, _provenance(args, cfg)), args.out)


def _cmd_interp_noise(args):
    cfg = _config(args)
    _, diag = run_interp_noise_report(cfg)
    extra = {
        "samples": diag.n,
        "excess_kurtosis": format(diag.excess_kurtosis, ".9g"),
        "lag1_threshold": format(diag.correlation_threshold, ".9g"),
    }
    hist = to_csv(
        ["bin_lo", "bin_hi", "count"],
        zip(diag.bin_edges[:-1], diag.bin_edges[1:], (int(c) for c in diag.counts)),
        _provenance(args, cfg, extra),
    )
    acf = to_csv(["lag", "autocorr"], enumerate(diag.autocorr))
    if args.out is None:
        sys.stdout.write(hist + "\n" + acf)
    else:
        _emit(hist, args.out)
        _emit(acf, args.out.with_name(args.out.stem + "_autocorr.csv"))


COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
    "bias": _cmd_bias,
    "crlb": _cmd_crlb,
    "interp-noise": _cmd_interp_noise,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (FormatError, OSError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (NumericError, InconsistentObservationError, DepthRangeError) as exc:
        log.error("numeric error: %s", exc)
        return EXIT_NUMERIC
    except (ConfigurationError, DomainError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
