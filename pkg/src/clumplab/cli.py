"""Command-line front end.

Every command writes one JSON report (to --out or stdout) that embeds the
resolved configuration. Exit codes: 0 success, 2 when the input does not
satisfy the hypothesis a command relies on, 1 on any other error.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ClumpLabError, HypothesisNotMet

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS = 0, 1, 2


# --- helpers --------------------------------------------------------------------------


def _floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _int_range(text: str) -> list:
    s = str(text)
    if ".." in s:
        a, b = s.split("..")
        return list(range(int(a), int(b) + 1))
    return _ints(s)


def _grid(text):
    from .signal_core import make_grid

    vals = _floats(text) if isinstance(text, str) else list(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("grid must be start,step,count")
    return make_grid(vals[0], vals[1], int(vals[2]))


def _points(text: str) -> list:
    """x,y pairs separated by ';' (e.g. '0.5,0.3;1,0.1')."""
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            x, y = _floats(chunk)
            out.append(complex(x, y))
    return out


def _clean(obj):
    """JSON-ready copy: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _emit(report: dict, args) -> None:
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolved(args) -> dict:
    skip = {"func", "config"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    cfg["version"] = __version__
    return cfg


def _load_corpus_signal(name: str):
    from .corpus import corpus_signal

    return corpus_signal(name)


def _read_input(path: str):
    from .signal_core import read_signal

    if path.startswith("corpus:"):
        return _load_corpus_signal(path.split(":", 1)[1])
    return read_signal(path)


# --- commands ---------------------------------------------------------------------------


def cmd_transform(args) -> dict:
    from .signal_core import forward_transform, inverse_transform, write_signal_csv, write_signal_json

    f = _read_input(args.input)
    op = inverse_transform if args.inverse else forward_transform
    F = op(f, args.grid, method=args.method)
    report = {"samples": F.grid.count, "grid": F.grid.to_dict(), "max_abs": float(np.max(np.abs(F.values)))}
    if args.out:
        # the transformed samples are the artifact; the JSON report goes to stdout
        fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
        (write_signal_json if fmt == "json" else write_signal_csv)(F, args.out)
        report["signal_out"] = args.out
        args.out = None
    else:
        report["values"] = [[float(x), float(v.real), float(v.imag)] for x, v in zip(F.x, F.values)]
    return report


def cmd_decay(args) -> dict:
    from .decay_clump import decay_profile, fit_stretched_decay

    f = _read_input(args.input)
    a, b, n = args.points
    prof = decay_profile(f, np.linspace(a, b, int(n)))
    c, ex, r2 = fit_stretched_decay(prof)
    return {"profile": prof.to_dict(), "fit": {"c": c, "a": ex, "r2": r2}}


def cmd_clumps(args) -> dict:
    from .decay_clump import detect_clumps

    f = _read_input(args.input)
    rep = detect_clumps(f, depth=args.depth, slope_threshold=args.slope_threshold)
    return rep.to_dict()


def cmd_outer(args) -> dict:
    from .hardy import BoundaryModulus, outer_function

    W = _read_input(args.input)
    mod = BoundaryModulus.from_modulus(W)
    rows = []
    for z in args.z:
        h = outer_function(mod, z)
        rows.append({"z": [z.real, z.imag], "value": [h.real, h.imag], "modulus": abs(h)})
    return {"log_integral": mod.log_integral, "flag": mod.integrability_flag, "values": rows}


def cmd_oscillate(args) -> dict:
    from .corpus import fat_cantor_context
    from .oscillation import default_c_sequence, splitting_conditions_report

    ctx = fat_cantor_context(step=args.step, p=args.p)
    cs = default_c_sequence(args.n) if args.c is None else args.c
    return splitting_conditions_report(ctx, args.n, cs)


def _weight(args):
    from .sparse_spectrum import make_concave_weight

    if args.weight == "sqrt-over-log" and args.x0 is not None:
        return make_concave_weight("sqrt-over-log", x0=args.x0)
    if args.weight == "power":
        return make_concave_weight("power", alpha=args.alpha)
    return make_concave_weight(args.weight)


def cmd_sparse_build(args) -> dict:
    from .sparse_spectrum import build_cantor_set

    M = None if args.geometric else _weight(args)
    spec = build_cantor_set(args.A, M, args.C, args.depth, args.margin)
    return {"spec": spec.to_dict()}


def cmd_sparse_im(args) -> dict:
    from .sparse_spectrum import laplace_tail_integral

    M = _weight(args)
    rows = []
    for y in args.y:
        v, b = laplace_tail_integral(M, y)
        rows.append({"y": y, "I_M": v, "bound": b, "holds": v <= b, "K": float(M.K(y)), "K_le_inv_y2": float(M.K(y)) <= 1 / y**2})
    return {"weight": M.to_dict(), "rows": rows}


def _load_spec(path: str):
    from .sparse_spectrum import CantorSpec

    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    d = d.get("result", d)
    return CantorSpec.from_dict(d.get("spec", d))


def cmd_sparse_hm(args) -> dict:
    from .sparse_spectrum import (
        base_target,
        build_tent_domain,
        harmonic_measure_mc,
        khrushchev_budget_sum,
        tent_side_target,
    )

    spec = _load_spec(args.spec)
    dom = build_tent_domain(spec, args.height)
    z = complex(*args.z)
    out = {"domain": {"gaps": len(dom.gaps), "area": dom.area()}}
    if args.target == "tent":
        k = int(np.argmax([b - a for a, b in dom.gaps]))
        a, b = dom.gaps[k]
        s = args.s if args.s is not None else (b - a) / 4
        est, se = harmonic_measure_mc(dom, z, tent_side_target(dom, k, s), args.paths, args.eps, args.seed)
        out.update(target={"gap": [a, b], "s": s}, estimate=est, std_err=se, bound=2 * s / z.imag)
    elif args.target == "base":
        a, b = max(dom.E.intervals, key=lambda p: p[1] - p[0])
        est, se = harmonic_measure_mc(dom, z, base_target((a, b)), args.paths, args.eps, args.seed)
        out.update(target={"base": [a, b]}, estimate=est, std_err=se, bound=(b - a) / (math.pi * z.imag))
    elif args.target == "budget":
        out.update(khrushchev_budget_sum(dom, z, _weight(args), args.C, args.paths, args.seed, args.eps))
    else:
        est, se = harmonic_measure_mc(dom, z, args.target, args.paths, args.eps, args.seed)
        out.update(target=args.target, estimate=est, std_err=se)
    return out


def cmd_subspace_condense(args) -> dict:
    from .subspace import condensation_experiment

    f = _read_input(args.input)
    return condensation_experiment(f, args.c, args.sizes)


def cmd_subspace_sparse(args) -> dict:
    from .signal_core import grid_from_span
    from .subspace import sparseness_experiment

    spec = _load_spec(args.spec)
    M = _weight(args)
    lo, hi = spec.E.intervals[0][0], spec.E.intervals[-1][1]
    pad = 0.25 * (hi - lo)
    xg = grid_from_span(lo - pad, hi + pad, args.step)
    kfun = {"exp": lambda z: np.exp(-z), "gauss": lambda z: np.exp(-0.5 * z * z)}[args.k]
    sparse = sparseness_experiment(spec.E.contains(xg.points), xg, lambda z: np.exp(-M.M(z)), kfun, args.sizes)
    out = {"sparse": sparse}
    if args.contrast_c is not None:
        c = args.contrast_c
        clumped = sparseness_experiment(
            (xg.points >= lo) & (xg.points <= hi), xg, lambda z: np.exp(-c * np.sqrt(z)), kfun, args.sizes
        )
        final = clumped["final_ratio"]
        out["clumped"] = clumped
        out["separation"] = sparse["floor_ratio"] / final if final > 0 else math.inf
    return out


def cmd_subspace_cyclic(args) -> dict:
    from .corpus import fat_cantor_indicator
    from .signal_core import grid_from_span
    from .subspace import cyclicity_experiment

    g = grid_from_span(-0.25, 1.25, args.step)
    f = fat_cantor_indicator(g)
    x = g.points
    target = f.with_values(np.where(x < 0.5, 1.0, -1.0) * f.values)
    grids = [np.arange(1, n + 1) * args.ds for n in args.sizes]
    return cyclicity_experiment(f, f, target, grids)


def cmd_multiplier(args) -> dict:
    from .multiplier import (
        TemperedInput,
        build_multiplier,
        distributional_clump_pipeline,
        multiplier_decay_check,
        phi_abs_integral,
    )
    from .signal_core import make_grid

    f = _read_input(args.input)
    inp = TemperedInput(f, args.n)
    zg = make_grid(0.0, args.zeta_step, int(round(args.zeta_max / args.zeta_step)) + 1)
    pts = np.linspace(args.fit_from, args.fit_to, 40)
    bundle = build_multiplier(inp)
    decay = multiplier_decay_check(inp, bundle, zg, pts)
    report = distributional_clump_pipeline(inp, zg, pts, depth=args.depth)
    return {
        "phi_abs_integral": phi_abs_integral(args.n),
        "growth_integral": inp.growth_integral(),
        "checks": bundle.checks,
        "decay": {k: v for k, v in decay.items() if k not in ("input", "output")}
        | {"input_fit": {k: decay["input"][k] for k in ("c", "a", "r2")}, "output_fit": {k: decay["output"][k] for k in ("c", "a", "r2")}},
        "pipeline": report.to_dict(),
    }


# --- parser -------------------------------------------------------------------------


GLOBAL_DEFAULTS = {"seed": 42, "threads": 1, "tolerance": 1e-6, "config": None, "out": None}


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults so that a
    # flag given before the subcommand is not reset by the subparser
    d = (lambda k: argparse.SUPPRESS) if suppress else GLOBAL_DEFAULTS.get
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=d("seed"), help="seed for all randomness (default 42)")
    g.add_argument("--threads", type=int, default=d("threads"), help="worker threads for transform sums")
    g.add_argument("--tolerance", type=float, default=d("tolerance"), help="slack for reported inequality checks")
    g.add_argument("--config", default=d("config"), help="JSON file with option values (command-line flags win)")
    g.add_argument("--out", default=d("out"), help="write the JSON report here instead of stdout")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)

    p = argparse.ArgumentParser(prog="clumplab", description="Spectral clumping experiments.", parents=[_global_flags(False)])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("transform", parents=[common], help="forward or inverse transform of a sampled signal")
    s.add_argument("--in", dest="input", required=True, help="signal file (.csv x,re,im or .json) or corpus:NAME")
    s.add_argument("--grid", type=_grid, required=True, help="output grid start,step,count")
    s.add_argument("--inverse", action="store_true")
    s.add_argument("--method", choices=("direct", "czt"), default="direct")
    s.add_argument("--format", choices=("json", "csv"), default=None, help="format of --out (default from extension, csv)")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("decay", parents=[common], help="one-sided tail mass and stretched-exponential fit")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--points", type=_floats, default=[1.0, 20.0, 40], help="start,stop,count of tail points")
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("clumps", parents=[common], help="dyadic clump detection")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--slope-threshold", type=float, default=0.02)
    s.set_defaults(func=cmd_clumps)

    s = sub.add_parser("outer", parents=[common], help="outer function with a sampled boundary modulus")
    s.add_argument("--in", dest="input", required=True, help="samples of W >= 0")
    s.add_argument("--z", type=_points, default=[1j], help="points x,y;x,y;...")
    s.set_defaults(func=cmd_outer)

    s = sub.add_parser("oscillate", parents=[common], help="splitting conditions on the fat Cantor context")
    s.add_argument("--n", type=_int_range, default=list(range(3, 9)), help="levels, e.g. 3..8")
    s.add_argument("--c", type=_floats, default=None, help="c_n values (default 2^(-n/2))")
    s.add_argument("--p", type=float, default=3.0)
    s.add_argument("--step", type=float, default=2.0**-12)
    s.set_defaults(func=cmd_oscillate)

    def weight_opts(q):
        q.add_argument("--weight", choices=("sqrt", "sqrt-over-log", "power"), default="sqrt-over-log")
        q.add_argument("--x0", type=float, default=None, help="splice point for sqrt-over-log")
        q.add_argument("--alpha", type=float, default=1.0 / 3.0, help="exponent for the power family")
        q.add_argument("--C", type=float, default=0.5)

    sp = sub.add_parser("sparse", parents=[common], help="concave weights, Cantor sets, harmonic measure")
    ssub = sp.add_subparsers(dest="sparse_command", required=True)
    s = ssub.add_parser("build-e", parents=[common], help="Cantor-type set with recorded condition sums")
    weight_opts(s)
    s.add_argument("--A", type=float, default=1.0)
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--margin", type=float, default=1.0)
    s.add_argument("--geometric", action="store_true", help="use L_n = A 8^-n without a weight")
    s.set_defaults(func=cmd_sparse_build)
    s = ssub.add_parser("im-bound", parents=[common], help="Laplace tail integral against its bound")
    weight_opts(s)
    s.add_argument("--y", type=_floats, default=[0.2, 0.1, 0.05, 0.01])
    s.set_defaults(func=cmd_sparse_im)
    s = ssub.add_parser("hm", parents=[common], help="walk-on-spheres harmonic measure on a tent domain")
    weight_opts(s)
    s.add_argument("--spec", required=True, help="JSON from sparse build-e")
    s.add_argument("--height", type=float, default=0.5)
    s.add_argument("--z", type=_floats, default=[0.5, 0.3], help="x,y")
    s.add_argument("--target", default="tent", help="tent, base, budget, all or a boundary tag")
    s.add_argument("--s", type=float, default=None, help="width of the tent-side target")
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--eps", type=float, default=1e-4)
    s.set_defaults(func=cmd_sparse_hm)

    sb = sub.add_parser("subspace", parents=[common], help="distance experiments in the product space")
    bsub = sb.add_subparsers(dest="subspace_command", required=True)
    s = bsub.add_parser("condense", parents=[common], help="residual-supported targets (h, 0)")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--sizes", type=_ints, default=[8, 16, 32, 64])
    s.set_defaults(func=cmd_subspace_condense)
    s = bsub.add_parser("sparse", parents=[common], help="spectral targets (0, k) against a Cantor set")
    weight_opts(s)
    s.add_argument("--spec", required=True)
    s.add_argument("--k", choices=("exp", "gauss"), default="exp")
    s.add_argument("--sizes", type=_ints, default=[8, 16, 32, 64])
    s.add_argument("--step", type=float, default=2.0**-12)
    s.add_argument("--contrast-c", type=float, default=None, help="also run the clumped contrast with rho = exp(-c sqrt)")
    s.set_defaults(func=cmd_subspace_sparse)
    s = bsub.add_parser("cyclic", parents=[common], help="modulation spans on the fat Cantor set")
    s.add_argument("--sizes", type=_ints, default=[2, 8, 32, 128])
    s.add_argument("--ds", type=float, default=1.0)
    s.add_argument("--step", type=float, default=2.0**-12)
    s.set_defaults(func=cmd_subspace_cyclic)

    s = sub.add_parser("multiplier", parents=[common], help="taming multiplier, decay check and clump pipeline")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--zeta-max", type=float, default=200.0)
    s.add_argument("--zeta-step", type=float, default=0.05)
    s.add_argument("--fit-from", type=float, default=5.0)
    s.add_argument("--fit-to", type=float, default=100.0)
    s.add_argument("--depth", type=int, default=6)
    s.set_defaults(func=cmd_multiplier)
    return p


def _subparsers(parser):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            for sp in act.choices.values():
                yield sp
                yield from _subparsers(sp)


def _apply_config(parser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ClumpLabError(f"cannot read config {known.config}: {e}")
    if not isinstance(cfg, dict):
        raise ClumpLabError("config must be a JSON object")
    converted = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest == "in":
            dest = "input"
        if dest == "grid" and not isinstance(val, str):
            val = _grid(val)
        converted[dest] = val
    parser.set_defaults(**{k: v for k, v in converted.items() if k in GLOBAL_DEFAULTS})
    local = {k: v for k, v in converted.items() if k not in GLOBAL_DEFAULTS}
    for sp in _subparsers(parser):
        sp.set_defaults(**local)
        for act in sp._actions:
            if act.dest in local:
                act.required = False


def _join_negative_values(argv: list) -> list:
    # "--grid -20,0.01,4001" would otherwise read the value as an option
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if a.startswith("--") and "=" not in a and nxt is not None and re.match(r"^-[\d.]", nxt):
            out.append(f"{a}={nxt}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except ClumpLabError as e:
        print(f"clumplab: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else EXIT_ERROR
    from .signal_core import set_threads

    set_threads(args.threads)
    config = _resolved(args)
    try:
        result = args.func(args)
    except HypothesisNotMet as e:
        _emit({"config": config, "status": "hypothesis-not-met", "message": str(e)}, args)
        print(f"clumplab: hypothesis not met: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ClumpLabError, OSError, ValueError, KeyError) as e:
        print(f"clumplab: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:  # still exit 1 with a message rather than a traceback
        print(f"clumplab: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    _emit({"config": config, "status": "ok", "result": result}, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
