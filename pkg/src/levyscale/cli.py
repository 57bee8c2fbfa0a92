"""``levy-scale`` command line front end.

Exit codes: 0 success, 1 a benchmark case failed, 2 configuration error,
3 numerical failure.  Numbers are printed with 17 significant digits so the
output is byte-stable for identical inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import bench, exact, factory
from .errors import ConfigError, NumericalError
from .inversion import FilonConfig, MpConfig, MP_METHODS
from .model import load_model, phi_q
from .scale import BACKENDS, QUANTITIES, canonical_backend, eval_scale

EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _to_json(obj) -> str:
    """JSON text with every float printed at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, type(None), str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    v = float(obj)
    return fmt(v) if math.isfinite(v) else "null"


def _emit(columns: list, rows: list, fmt_name: str, meta: dict | None = None) -> str:
    if fmt_name == "json":
        recs = [dict(zip(columns, r)) for r in rows]
        out = dict(meta or {})
        out["rows"] = recs
        return _to_json(out) + "\n"
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in r))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def parse_x(spec: str) -> np.ndarray:
    """``START:STOP:COUNT`` (inclusive, evenly spaced) or a comma list."""
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return np.linspace(start, stop, count)
        vals = [float(s) for s in spec.split(",") if s.strip()]
        if not vals:
            raise ValueError
        return np.array(vals)
    except ValueError:
        raise ConfigError(f"cannot parse --x {spec!r}; use START:STOP:COUNT or a comma list") \
            from None


def _backend_config(args, backend: str):
    if backend == "filon":
        kw = {}
        for name in ("b", "N", "n", "p", "c"):
            val = getattr(args, f"filon_{name}", None)
            if val is not None:
                kw[name] = val
        return FilonConfig(**kw)
    if backend in MP_METHODS:
        return MpConfig(args.M, args.digits)
    opts = {}
    if backend == "meromorphic":
        opts["J"] = args.J
        opts["digits"] = args.digits or 30
    return opts


def _refined_config(backend: str, cfg):
    """A more accurate configuration; the difference estimates the error."""
    if backend == "filon":
        return FilonConfig(cfg.c, cfg.b, cfg.n, cfg.p, 2 * cfg.N)
    if backend in MP_METHODS:
        M = math.ceil(1.25 * cfg.M)
        d = cfg.digits_for(backend)
        return MpConfig(M, math.ceil(d * M / cfg.M))
    if backend == "meromorphic":
        return {**cfg, "J": cfg["J"] + 100}
    return None


def _error_estimate(model, q, x, quantity, backend, cfg, value) -> np.ndarray:
    ref_cfg = _refined_config(backend, cfg)
    if ref_cfg is None:
        return np.zeros_like(value)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        other = eval_scale(model, q, x, quantity, backend, ref_cfg)[quantity]
    return np.abs(other - value)


def _add_model_args(p, with_backend=True):
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--q", type=float, default=0.0, help="killing rate q >= 0")
    if with_backend:
        p.add_argument("--backend", default="euler",
                       help="filon, gaver_stehfest, euler, talbot, rational or meromorphic")
        p.add_argument("--M", type=int, default=20, help="terms for the multi-precision methods")
        p.add_argument("--digits", type=int, default=None, help="working precision in digits")
        p.add_argument("--J", type=int, default=1000, help="roots for the meromorphic backend")
        for name, typ in (("b", float), ("N", int), ("n", int), ("p", float), ("c", float)):
            p.add_argument(f"--filon-{name}", dest=f"filon_{name}", type=typ, default=None,
                           help=f"Filon parameter {name}")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_eval(args) -> int:
    model = load_model(args.model)
    backend = canonical_backend(args.backend)
    if args.quantity not in QUANTITIES:
        raise ConfigError(f"unknown quantity {args.quantity!r}; choose from {', '.join(QUANTITIES)}")
    x = parse_x(args.x)
    cfg = _backend_config(args, backend)
    grid = eval_scale(model, args.q, x, args.quantity, backend, cfg)
    value = grid[args.quantity]
    if args.no_estimate:
        est = np.full_like(value, np.nan)
    else:
        est = _error_estimate(model, args.q, x, args.quantity, backend, cfg, value)
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(x, value, est)]
    meta = {"quantity": args.quantity, "q": args.q, "backend": backend, "config": grid.config}
    sys.stdout.write(_emit(["x", "value", "error_estimate"], rows, args.format, meta))
    return 0


def cmd_plotdata(args) -> int:
    model = load_model(args.model)
    backend = canonical_backend(args.backend)
    x = parse_x(args.x)
    grid = eval_scale(model, args.q, x, ("W", "Wprime", "Z"), backend,
                      _backend_config(args, backend))
    rows = [(float(xv), float(w), float(wp), float(z))
            for xv, w, wp, z in zip(x, grid["W"], grid["Wprime"], grid["Z"])]
    meta = {"q": args.q, "backend": backend, "config": grid.config}
    if grid.flags.get("one_sided_derivative"):
        meta["one_sided_derivative"] = grid.flags["one_sided_derivative"]
    sys.stdout.write(_emit(["x", "W", "Wprime", "Z"], rows, args.format, meta))
    return 0


def cmd_roots(args) -> int:
    model = load_model(args.model)
    source = args.source
    if source == "auto":
        kinds = {c.kind for c in model.components}
        source = "meromorphic" if kinds & {"theta", "beta"} else "rational"
    if source == "rational":
        rs = exact.rational_roots(model, args.q, digits=args.digits or 30)
    else:
        rs = exact.meromorphic_roots(model, args.q, args.count or 10, digits=args.digits or 30)
    rows = [("phi", 0, float(rs.phi), 0.0, 1)]
    zs = sorted(((complex(z), m) for z, m in rs.roots), key=lambda t: (t[0].real, t[0].imag))
    if args.count:
        zs = zs[:args.count]
    for i, (z, m) in enumerate(zs, 1):
        rows.append(("zeta", i, z.real, z.imag, m))
    meta = {"q": args.q, "source": rs.source, "digits": rs.digits}
    sys.stdout.write(_emit(["kind", "index", "re", "im", "multiplicity"],
                           [(k, str(i), a, b, str(m)) for k, i, a, b, m in rows]
                           if args.format == "csv" else rows, args.format, meta))
    return 0


def _params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"--param {k}: {v!r} is not a number") from None
    return out


def _need(p: dict, *names):
    missing = [n for n in names if n not in p]
    if missing:
        raise ConfigError(f"missing --param {', '.join(missing)}")
    return [p[n] for n in names]


def _ladder(p: dict):
    kind = p.pop("__ladder")
    if kind == "stable":
        return factory.stable_ladder(*_need(p, "b", "beta"))
    if kind == "sum-stable":
        return factory.sum_stable_ladder(*_need(p, "a", "b", "alpha", "beta"))
    if kind == "tempered-stable":
        return factory.tempered_stable_ladder(*_need(p, "kappa", "c", "alpha", "gamma"))
    if kind == "drift":
        return factory.drift_ladder(*_need(p, "delta"))
    raise ConfigError(f"unknown ladder {kind!r}")


CONSTRUCT_OPS = ("conjugate-pair", "tilt-conjugates", "conditioned-parent", "parent",
                 "t-transform", "shifted")


def cmd_construct(args) -> int:
    p = _params(args.param)
    op = args.op
    if op in ("conjugate-pair", "tilt-conjugates", "conditioned-parent", "parent"):
        if not args.ladder:
            raise ConfigError(f"{op} needs --ladder")
        p["__ladder"] = args.ladder
        spec = _ladder(p)
        if op == "conjugate-pair":
            w, ws = factory.conjugate_pair(spec)
            out = {"W": w.to_dict(), "W_conjugate": ws.to_dict()}
        elif op == "tilt-conjugates":
            w, ws = factory.tilt_conjugates(spec, *_need(p, "beta_tilt"))
            out = {"W": w.to_dict(), "W_conjugate": ws.to_dict()}
        elif op == "conditioned-parent":
            out = {"W": factory.conditioned_parent_form(spec, *_need(p, "beta_tilt")).to_dict()}
        else:
            parent = factory.parent_from_ladder(spec, p.get("phi_killrate", 0.0))
            if parent.scale is None:
                raise ConfigError("no closed form scale function for this parent")
            out = {"W": parent.scale.to_dict()}
            if parent.model is not None:
                from .model import model_to_dict
                out["model"] = model_to_dict(parent.model)
    elif op == "t-transform":
        alpha, delta = _need(p, "alpha", "delta")
        out = {"W": factory.t_transform_stable(alpha, delta).to_dict()}
    elif op == "shifted":
        res = factory.shifted_scale(stable_alpha=_need(p, "alpha")[0])
        out = {"W": res.closed_form.to_dict(), "W_tail": res.tail_form.to_dict()}
    else:
        raise ConfigError(f"unknown construction {op!r}; choose from {', '.join(CONSTRUCT_OPS)}")
    sys.stdout.write(_to_json(out) + "\n")
    return 0


def cmd_bench(args) -> int:
    suites = args.suite or list(bench.SUITES)
    reports = []
    for s in suites:
        if s not in bench.SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(bench.SUITES)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for s in suites:
            rep = bench.run_suite(s, jobs=args.jobs)
            reports.append(rep)
            if args.format == "csv":
                print(bench.format_table(rep), flush=True)
                print()
    doc = {"reports": reports, "passed": all(r["passed"] for r in reports)}
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(_to_json(doc) + "\n")
    if args.format == "json":
        sys.stdout.write(_to_json(doc) + "\n")
    return 0 if doc["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levy-scale", description="Scale functions of spectrally negative "
                     "Levy processes by numerical Laplace inversion.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate W, W', Z, u, u' or v on a grid")
    _add_model_args(p)
    p.add_argument("--quantity", default="W", help=", ".join(QUANTITIES))
    p.add_argument("--x", required=True, help="START:STOP:COUNT or comma separated list")
    p.add_argument("--no-estimate", action="store_true",
                   help="skip the error estimate (a second, refined evaluation)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plotdata", help="x, W, W', Z as CSV for external plotting")
    _add_model_args(p)
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("roots", help="Phi(q) and the roots zeta_j of psi(-z) = q")
    _add_model_args(p, with_backend=False)
    p.add_argument("--source", choices=("auto", "rational", "meromorphic"), default="auto")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--digits", type=int, default=None)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("construct", help="closed form scale functions as JSON")
    p.add_argument("op", help=", ".join(CONSTRUCT_OPS))
    p.add_argument("--ladder", choices=("stable", "sum-stable", "tempered-stable", "drift"))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("bench", help="reproduce the accuracy tables")
    p.add_argument("suite", nargs="*", help=", ".join(bench.SUITES) + " (default: all)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--json", help="also write the JSON report to this file")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="csv prints the human table, json the machine report")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "backend", None) is not None and \
                canonical_backend(args.backend) not in BACKENDS:
            raise ConfigError(f"unknown backend {args.backend!r}")
        return args.func(args)
    except ConfigError as exc:
        print(f"levy-scale: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"levy-scale: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"levy-scale: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
