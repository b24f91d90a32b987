"""Command-line front end.

Subcommands:
  scan      separation scan, emits CSV/JSON rows
  validate  analytic-versus-Monte-Carlo comparison, writes a report
  fit-g2    rescale the beam to a target zero-separation correlation
  pnd       dump the joint photon-number distribution at one separation

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical-certification failure.  QGS_WORKERS overrides the worker
count.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .errors import CertificationError, ConfigError, QgsError
from .fock_stats import joint_pnd
from .scan import (
    config_from_dict,
    config_to_dict,
    default_config,
    default_workers,
    emit,
    fit_g2_zero,
    run_scan,
    validate,
)
from .source_model import two_point_params

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3


def _parse_pairs(text: str):
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"bad pair {chunk!r}; expected N,M")
        pairs.append((int(parts[0]), int(parts[1])))
    if not pairs:
        raise ConfigError("no pairs given")
    return tuple(pairs)


def _parse_complex_pair(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ConfigError(f"bad complex value {text!r}; expected re or re,im")


def _load_config(args) -> "ScanConfig":
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = config_from_dict(doc)
    else:
        cfg = default_config()

    profile = cfg.profile
    if getattr(args, "n_peak", None) is not None:
        profile = replace(profile, n_peak=args.n_peak)
    if getattr(args, "mu_peak", None) is not None:
        profile = replace(profile, mu_peak=_parse_complex_pair(args.mu_peak))
    if getattr(args, "sigma0", None) is not None:
        profile = replace(profile, sigma0=args.sigma0)
    if getattr(args, "sigma1", None) is not None:
        profile = replace(profile, sigma1=args.sigma1)
    cfg = replace(cfg, profile=profile)

    simple = {
        "fixed_position": "fixed_position",
        "scan_min": "scan_min",
        "scan_max": "scan_max",
        "steps": "steps",
        "n_max": "n_max",
        "tail_tol": "tail_tol",
        "format": "output_format",
        "out": "output_path",
    }
    updates = {}
    for arg_name, field in simple.items():
        val = getattr(args, arg_name, None)
        if val is not None:
            updates[field] = val
    if getattr(args, "pairs", None) is not None:
        updates["pairs"] = _parse_pairs(args.pairs)
    if updates:
        cfg = replace(cfg, **updates)

    mc = cfg.mc
    if getattr(args, "samples", None) is not None:
        mc = replace(mc, n_samples=args.samples)
    if getattr(args, "seed", None) is not None:
        mc = replace(mc, seed=args.seed)
    if getattr(args, "workers", None) is not None:
        mc = replace(mc, n_workers=args.workers)
    elif mc.n_workers == 1:
        mc = replace(mc, n_workers=default_workers())
    return replace(cfg, mc=mc)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--n-peak", dest="n_peak", type=float)
    parser.add_argument("--mu-peak", dest="mu_peak", help="re or re,im")
    parser.add_argument("--sigma0", type=float)
    parser.add_argument("--sigma1", type=float)
    parser.add_argument("--fixed-position", dest="fixed_position", type=float)
    parser.add_argument("--scan-min", dest="scan_min", type=float)
    parser.add_argument("--scan-max", dest="scan_max", type=float)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--pairs", help="semicolon-separated N,M pairs")
    parser.add_argument("--n-max", dest="n_max", type=int)
    parser.add_argument("--tail-tol", dest="tail_tol", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgs",
        description="Multiphoton coherence scans of partially coherent light",
    )
    parser.add_argument("--version", action="version", version=f"qgs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="run a separation scan")
    _add_common(p_scan)
    p_scan.add_argument("--out", help="output path")
    p_scan.add_argument("--format", choices=("csv", "json"))

    p_val = sub.add_parser("validate", help="compare analytic and Monte Carlo routes")
    _add_common(p_val)
    p_val.add_argument("--samples", type=int, help="Monte Carlo samples per separation")
    p_val.add_argument("--report", help="path for the JSON report")
    p_val.add_argument(
        "--perturb-cell",
        help="test hook: N,M,delta moves delta counts into cell (N, M)",
    )

    p_fit = sub.add_parser("fit-g2", help="fit n_peak to a target g2(0)")
    _add_common(p_fit)
    p_fit.add_argument("--target", type=float, required=True)

    p_pnd = sub.add_parser("pnd", help="dump the joint distribution at one separation")
    _add_common(p_pnd)
    p_pnd.add_argument("--separation", type=float, required=True)
    p_pnd.add_argument("--out", help="output path")
    p_pnd.add_argument("--format", choices=("csv", "json"))
    return parser


def _cmd_scan(args) -> int:
    cfg = _load_config(args)
    rows = run_scan(cfg, n_workers=cfg.mc.n_workers)
    emit(rows, cfg.output_format, cfg.output_path, cfg)
    hard = [r for r in rows if "truncation-unmet" in r.flags or "precision-loss" in r.flags]
    print(f"wrote {len(rows)} rows to {cfg.output_path}")
    if hard:
        print(f"{len(hard)} rows failed numerical certification", file=sys.stderr)
        return EXIT_CERTIFICATION
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load_config(args)
    perturb = None
    if args.perturb_cell:
        parts = args.perturb_cell.split(",")
        if len(parts) != 3:
            raise ConfigError("--perturb-cell expects N,M,delta")
        perturb = (int(parts[0]), int(parts[1]), int(parts[2]))
    passed, doc = validate(cfg, n_samples=args.samples, seed=args.seed, perturb=perturb)
    report_path = args.report or "validate_report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    for res in doc["results"]:
        rep = res["report"]
        print(
            "separation {separation:g}: {verdict} "
            "(tv={tv:.2e}, failing z cells {fail}/{qual})".format(
                separation=res["separation"],
                verdict="pass" if rep["passed"] else "FAIL",
                tv=rep["tv_distance"],
                fail=rep["n_failing"],
                qual=rep["n_qualifying"],
            )
        )
    print(f"report written to {report_path}")
    return EXIT_OK if passed else EXIT_VALIDATION


def _cmd_fit_g2(args) -> int:
    cfg = _load_config(args)
    fitted = fit_g2_zero(args.target, cfg.profile)
    print(
        json.dumps(
            {
                "n_peak": fitted.n_peak,
                "mu_peak": [fitted.mu_peak.real, fitted.mu_peak.imag],
                "sigma0": fitted.sigma0,
                "sigma1": fitted.sigma1,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_pnd(args) -> int:
    cfg = _load_config(args)
    params = two_point_params(
        cfg.profile, cfg.fixed_position, cfg.fixed_position + args.separation
    )
    pnd = joint_pnd(params, cfg.n_max, tail_tol=cfg.tail_tol)
    fmt = args.format or cfg.output_format
    path = args.out or cfg.output_path
    if fmt == "csv":
        lines = ["N,M,p"]
        for n in range(pnd.n_max + 1):
            for m in range(pnd.n_max + 1):
                lines.append(f"{n},{m},{format(pnd.p[n, m], '.17g')}")
        payload = "\n".join(lines) + "\n"
    else:
        payload = (
            json.dumps(
                {
                    "metadata": {
                        "version": __version__,
                        "separation": args.separation,
                        "config": config_to_dict(cfg),
                    },
                    "n_max": pnd.n_max,
                    "tail_mass": pnd.tail_mass,
                    "p": pnd.p.tolist(),
                },
                indent=2,
            )
            + "\n"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
    print(f"wrote joint distribution (n_max={pnd.n_max}) to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "scan": _cmd_scan,
        "validate": _cmd_validate,
        "fit-g2": _cmd_fit_g2,
        "pnd": _cmd_pnd,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"numerical certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except QgsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
