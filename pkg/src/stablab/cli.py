"""Command-line front end.

Subcommands: ``defect``, ``homdist``, ``solve``, ``rate``, ``compare``,
``check-metric``.  Every artifact embeds the resolved configuration, the
seed, and the tool version, and rerunning a command with identical flags
and seed reproduces its output files byte for byte.

Exit codes are a stable contract:

* 0 success
* 2 parse / validation / certificate errors
* 3 backend or numeric errors
* 4 enumeration caps exceeded with ``--exact``
* 5 solver did not converge (or not certified)
* 6 rate sampling produced only empty bins
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, core, metrics, rate, solver, words
from .errors import (
    BackendMismatchError,
    CapsExceededError,
    CertificateError,
    NumericError,
    ParseError,
    SearchError,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BACKEND = 3
EXIT_CAPS = 4
EXIT_NO_CONVERGENCE = 5
EXIT_EMPTY = 6

DESK_SCALE_NOTE = (
    "consistency check at fixed small degrees: the polynomial rate statement "
    "concerns degrees growing without bound and is not reproduced here"
)


def _read_arg_text(value: str) -> str:
    """Support the @file convention for long arguments."""
    if value.startswith("@"):
        with open(value[1:], "r", encoding="utf-8") as fh:
            return fh.read()
    return value


def _load_presentation(value: str) -> words.Presentation:
    text = _read_arg_text(value).strip()
    if text.startswith("{"):
        return words.Presentation.from_json(json.loads(text))
    return words.parse_presentation(text)


def _descriptor_from(args, n: int | None = None) -> metrics.MetricDescriptor:
    family = args.metric
    degree = n if n is not None else args.n
    if degree is None:
        raise ValueError("--n is required")
    p = getattr(args, "p", None)
    if family == metrics.U_SCHATTEN:
        return metrics.MetricDescriptor(family, degree, p)
    return metrics.MetricDescriptor(family, degree)


def _parse_degrees(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_grid(text: str) -> list[float]:
    """Grid syntax a:b:steps with an optional log/lin suffix on steps."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"grid must look like a:b:steps(log|lin), got '{text}'")
    a, b = float(parts[0]), float(parts[1])
    steps_text = parts[2].strip().lower().replace("(", "").replace(")", "")
    scale = "lin"
    for suffix in ("log", "lin"):
        if steps_text.endswith(suffix):
            scale = suffix
            steps_text = steps_text[: -len(suffix)]
    steps = int(steps_text)
    if steps < 2 or not 0 < a < b:
        raise ParseError(f"bad grid bounds in '{text}'")
    if scale == "log":
        values = np.geomspace(a, b, steps)
    else:
        values = np.linspace(a, b, steps)
    return [float(v) for v in values]


def _load_hom(args) -> core.AlmostHom:
    if getattr(args, "hom", None):
        return core.AlmostHom.from_json(json.loads(_read_arg_text(args.hom)))
    if args.presentation is None:
        raise ValueError("provide --hom or --presentation plus --images")
    p = _load_presentation(args.presentation)
    desc = _descriptor_from(args)
    if not desc.is_symmetric:
        raise ValueError("--images builds symmetric assignments; use --hom JSON for unitary input")
    if not getattr(args, "images", None):
        raise ValueError("--images is required when building an assignment from flags")
    blocks = [blk for blk in args.images.split(";") if blk.strip()]
    assignment = tuple(
        metrics.GroupElement(desc, [int(x) for x in blk.split(",")]) for blk in blocks
    )
    return core.AlmostHom(p, desc, assignment)


def _config_echo(args, keys: list[str]) -> dict:
    return {key: getattr(args, key) for key in keys if getattr(args, key, None) is not None}


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _envelope(args, echo_keys: list[str], result: dict) -> dict:
    return {
        "version": __version__,
        "seed": args.seed,
        "config": _config_echo(args, echo_keys),
        "result": result,
    }


def _apply_move_script(p: words.Presentation, script: list[dict]):
    """Apply a JSON move list; returns (presentation, forward, backward)."""
    forward = words.identity_transport(p.rank)
    backward = words.identity_transport(p.rank)
    current = p
    for entry in script:
        kind = entry["kind"]
        if kind == "add_generator":
            move = words.AddGenerator(
                entry["name"], words.parse_word(entry["word"], current.generators)
            )
        elif kind == "add_relator":
            move = words.AddRelator(
                words.parse_word(entry["word"], current.generators),
                _parse_certificate(entry["certificate"], current),
            )
        elif kind == "remove_relator":
            move = words.RemoveRelator(
                int(entry["index"]), _parse_certificate(entry["certificate"], current)
            )
        elif kind == "remove_generator":
            move = words.RemoveGenerator(int(entry["generator"]), int(entry["relator"]))
        else:
            raise ParseError(f"unknown move kind '{kind}'")
        current, fwd, bwd = words.apply_tietze(current, move)
        forward = words.compose_transports(forward, fwd)
        backward = words.compose_transports(bwd, backward)
    return current, forward, backward


def _parse_certificate(entries: list[dict], p: words.Presentation) -> words.NormalClosureCertificate:
    factors = tuple(
        (
            words.parse_word(e["conjugator"], p.generators),
            int(e["relator"]),
            int(e["sign"]),
        )
        for e in entries
    )
    return words.NormalClosureCertificate(factors)


def _read_config_file(path: str) -> dict:
    """key = value lines; '#' starts a comment.  Keys mirror the CLI flags."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key = value on line {line_no} of {path}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_defect(args) -> int:
    phi = _load_hom(args)
    report = core.defect(phi)
    _emit(_envelope(args, ["presentation", "metric", "n", "p", "images"], report.to_json()), args.out)
    return EXIT_OK


def cmd_homdist(args) -> int:
    phi = _load_hom(args)
    if args.upper:
        result = core.homdist_upper(phi, budget=args.budget)
    else:
        result = core.homdist_exact(phi, args.degree_cap, args.generator_cap)
    _emit(
        _envelope(
            args,
            ["presentation", "metric", "n", "p", "images", "upper", "budget"],
            result.to_json(),
        ),
        args.out,
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    phi = _load_hom(args)
    final_tol = args.final_tol
    if final_tol is None:
        final_tol = core.exactness_tolerance(phi.descriptor)
    cfg = solver.DiminishConfig(
        M=args.M,
        epsilon=args.epsilon,
        halving_factor=args.halving_factor,
        max_iterations=args.max_iter,
        final_tolerance=final_tol,
        strategy=args.strategy,
        degree_cap=args.degree_cap,
        generator_cap=args.generator_cap,
    )
    rng = np.random.default_rng(args.seed)
    final, trace = solver.iterate_to_homomorphism(phi, cfg, rng)
    audit = solver.certify_trace(trace, cfg)
    result = {
        "trace": trace.to_json(),
        "audit": audit.to_json(),
        "final": final.to_json(),
    }
    _emit(
        _envelope(
            args,
            ["presentation", "metric", "n", "p", "images", "M", "epsilon",
             "halving_factor", "max_iter", "strategy"],
            result,
        ),
        args.out,
    )
    return EXIT_OK if trace.converged and trace.certified else EXIT_NO_CONVERGENCE


def _rate_config(args):
    p = _load_presentation(args.presentation)
    degrees = _parse_degrees(args.n) if isinstance(args.n, str) else [args.n]
    descriptors = [
        metrics.MetricDescriptor(args.metric, n, args.p)
        if args.metric == metrics.U_SCHATTEN
        else metrics.MetricDescriptor(args.metric, n)
        for n in degrees
    ]
    grid = _parse_grid(args.grid)
    return p, descriptors, grid


def cmd_rate(args) -> int:
    p, descriptors, grid = _rate_config(args)
    method = "upper" if args.upper else "exact"
    curve = rate.sample_rate(
        p,
        descriptors,
        grid,
        samples_per_bin=args.samples,
        method=method,
        seed=args.seed,
        degree_cap=args.degree_cap,
        generator_cap=args.generator_cap,
        threads=args.threads,
    )
    warnings = []
    if curve.empty_bins:
        warnings.append(f"empty bins at grid indices {list(curve.empty_bins)}")
    if len(curve.empty_bins) == len(curve.grid):
        _emit(_envelope(args, ["presentation", "metric", "n", "p", "grid", "samples"],
                        {"error": "all bins empty", "curve": curve.to_json()}), args.out_json)
        return EXIT_EMPTY
    try:
        fit = rate.fit_exponent(curve).to_json()
    except ValueError as exc:
        fit = None
        warnings.append(f"exponent fit unavailable: {exc}")
    lower = rate.linear_lower_check(curve)
    result = {
        "curve": curve.to_json(),
        "exponent_fit": fit,
        "exponent_note": DESK_SCALE_NOTE,
        "linear_lower": lower.to_json(),
        "warnings": warnings,
    }
    csv_text = curve.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    _emit(
        _envelope(
            args,
            ["presentation", "metric", "n", "p", "grid", "samples", "threads", "upper"],
            result,
        ),
        args.out_json or (args.out + ".json" if args.out else None),
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    p1 = _load_presentation(args.presentation)
    script = json.loads(_read_arg_text(args.moves))
    p2, forward, _backward = _apply_move_script(p1, script)
    degrees = _parse_degrees(args.n)
    descs = [metrics.MetricDescriptor(args.metric, n) for n in degrees]
    grid = _parse_grid(args.grid)
    method = "upper" if args.upper else "exact"
    verdict, curve1, curve2 = rate.presentation_rate_compare(
        p1, p2, forward, descs, descs, grid,
        samples_per_bin=args.samples, method=method, seed=args.seed,
        degree_cap=args.degree_cap, generator_cap=args.generator_cap,
    )
    result = {
        "presentation_1": p1.to_json(),
        "presentation_2": p2.to_json(),
        "verdict": verdict.to_json(),
        "curve_1": curve1.to_json(),
        "curve_2": curve2.to_json(),
    }
    _emit(
        _envelope(
            args,
            ["presentation", "moves", "metric", "n", "grid", "samples"],
            result,
        ),
        args.out,
    )
    return EXIT_OK


def cmd_check_metric(args) -> int:
    desc = _descriptor_from(args)
    rng = np.random.default_rng(args.seed)
    report = metrics.audit_metric(desc, args.trials, rng)
    _emit(_envelope(args, ["metric", "n", "p", "trials"], report.to_json()), args.out)
    return EXIT_OK if report.passed else EXIT_BACKEND


# ---------------------------------------------------------------------------
# Argument wiring


def _add_common(sub, with_hom=False, with_caps=True):
    sub.add_argument("--seed", type=int, default=None, help="RNG seed (default: STABLAB_SEED or 0)")
    sub.add_argument("--out", default=None, help="output file path")
    sub.add_argument("--format", choices=["json", "csv"], default="json")
    if with_hom:
        sub.add_argument("--hom", default=None, help="AlmostHom JSON (inline or @file)")
        sub.add_argument("--presentation", default=None, help="presentation text/JSON (inline or @file)")
        sub.add_argument("--metric", choices=list(metrics.FAMILIES), default=metrics.SYM_HAMMING)
        sub.add_argument("--n", type=int, default=None)
        sub.add_argument("--p", type=float, default=None, help="Schatten exponent")
        sub.add_argument("--images", default=None,
                         help="semicolon-separated image arrays, e.g. '1,0,2;0,2,1'")
    if with_caps:
        sub.add_argument("--degree-cap", dest="degree_cap", type=int, default=core.DEGREE_CAP)
        sub.add_argument("--generator-cap", dest="generator_cap", type=int,
                         default=core.GENERATOR_CAP)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablab",
        description="Defects, homomorphism distances, certified defect halving, "
        "and empirical stability rates for finitely presented groups.",
    )
    parser.add_argument("--version", action="version", version=f"stablab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("defect", help="defect of a generator assignment")
    _add_common(s, with_hom=True, with_caps=False)
    s.set_defaults(func=cmd_defect)

    s = subs.add_parser("homdist", help="distance to the nearest exact homomorphism")
    _add_common(s, with_hom=True)
    group = s.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", default=True)
    group.add_argument("--upper", action="store_true", default=False)
    s.add_argument("--budget", type=int, default=200, help="local search rounds for --upper")
    s.set_defaults(func=cmd_homdist)

    s = subs.add_parser("solve", help="iterate defect-halving steps to a homomorphism")
    _add_common(s, with_hom=True)
    s.add_argument("--M", type=float, default=2.0, help="movement constant")
    s.add_argument("--epsilon", type=float, default=2.0, help="defect applicability threshold")
    s.add_argument("--halving-factor", dest="halving_factor", type=float, default=0.5)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=64)
    s.add_argument("--final-tol", dest="final_tol", type=float, default=None,
                   help="stop when the defect falls to this (default 0 sym, 1e-9 unitary)")
    s.add_argument("--strategy", choices=[solver.STRATEGY_SNAP, solver.STRATEGY_DESCENT],
                   default=solver.STRATEGY_SNAP)
    s.set_defaults(func=cmd_solve)

    s = subs.add_parser("rate", help="sample an empirical rate curve")
    _add_common(s)
    s.add_argument("--config", default=None, help="key = value config file")
    s.add_argument("--presentation", default=None)
    s.add_argument("--metric", choices=list(metrics.FAMILIES), default=metrics.SYM_HAMMING)
    s.add_argument("--n", default=None, help="degree or comma list, e.g. 4,5,6")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--grid", default="0.1:0.9:8log", help="a:b:steps(log|lin)")
    s.add_argument("--samples", type=int, default=100, help="samples per bin per degree")
    group = s.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", default=True)
    group.add_argument("--upper", action="store_true", default=False)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out-json", dest="out_json", default=None,
                   help="summary JSON path (default: --out with .json)")
    s.set_defaults(func=cmd_rate)

    s = subs.add_parser("compare", help="rate equivalence across a Tietze move script")
    _add_common(s)
    s.add_argument("--presentation", required=True)
    s.add_argument("--moves", required=True, help="move script JSON (inline or @file)")
    s.add_argument("--metric", choices=[metrics.SYM_HAMMING], default=metrics.SYM_HAMMING)
    s.add_argument("--n", default="4,5,6", help="degree comma list")
    s.add_argument("--grid", default="0.1:0.9:8log")
    s.add_argument("--samples", type=int, default=60)
    group = s.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", default=True)
    group.add_argument("--upper", action="store_true", default=False)
    s.set_defaults(func=cmd_compare)

    s = subs.add_parser("check-metric", help="randomized bi-invariance and axiom audit")
    _add_common(s, with_caps=False)
    s.add_argument("--metric", choices=list(metrics.FAMILIES), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_check_metric)

    return parser


def _apply_config_file(args):
    """Config file values fill in flags the command line left at defaults."""
    if not getattr(args, "config", None):
        return
    mapping = _read_config_file(args.config)
    casts = {"n": str, "samples": int, "seed": int, "threads": int,
             "degree_cap": int, "generator_cap": int}
    for key, value in mapping.items():
        attr = key.replace("-", "_").replace(" ", "_")
        if attr == "family":
            attr = "metric"
        if attr == "delta_grid":
            attr = "grid"
        if attr == "method":
            args.upper = value.strip() == "upper"
            continue
        if attr == "caps":
            args.degree_cap = int(value)
            continue
        if not hasattr(args, attr):
            raise ParseError(f"unknown config key '{key}'")
        cast = casts.get(attr, str)
        setattr(args, attr, cast(value))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        if args.seed is None:
            args.seed = int(os.environ.get("STABLAB_SEED", "0"))
        return args.func(args)
    except (ParseError, CertificateError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapsExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPS
    except (BackendMismatchError, NumericError, SearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
