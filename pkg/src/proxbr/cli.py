"""Command line entry point.

Exit codes: 0 success, 1 a certification failed, 2 usage or configuration
error (including a guarded lambda), 3 numerical failure (unbounded or
inconclusive).
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .br_engine import br_approximate, ekeland_conditions, ekeland_point, minty_surjectivity_check
from .catalog import catalog_get, catalog_names, resolve_function
from .errors import ConfigError, NumericalFailure, ProxbrError
from .harness import ScenarioConfig, run_scenario
from .monotone import default_slack, sample_graph, violation_certificate
from .normed_space import NormedSpace
from .prox_bounded import estimate_threshold
from .proximal import regularized_argmin

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _vector(text):
    try:
        return np.array([float(t) for t in str(text).split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number or comma-separated vector: {text!r}") from exc


def _fmt(v):
    v = np.atleast_1d(v)
    return repr(float(v[0])) if v.size == 1 else "(" + ", ".join(repr(float(t)) for t in v) + ")"


def _load_function(name):
    path = Path(name)
    if name.endswith(".json") and path.exists():
        return resolve_function(json.loads(path.read_text()))
    return catalog_get(name)


def _cmd_catalog(args):
    for name in catalog_names():
        f = catalog_get(name)
        kind = "convex" if f.convex else "nonconvex"
        print(f"{name:14s} dim={f.dim} {kind:9s} threshold={f.known_threshold!r}  {f.box_note}")
    return EXIT_OK


def _cmd_prox(args):
    f = _load_function(args.function)
    space = NormedSpace(f.dim, args.p)
    xstar = args.xstar if args.xstar is not None else np.zeros(f.dim)
    res = regularized_argmin(f, space, args.x, xstar, args.lam, args.tol)
    print(f"step y        {_fmt(res.minimizer)}")
    print(f"prox point    {_fmt(space.vec(args.x) + res.minimizer)}")
    print(f"value         {res.objective_value!r}")
    print(f"certified gap {res.certified_gap:.3g}")
    return EXIT_OK


def _cmd_threshold(args):
    f = _load_function(args.function)
    est = estimate_threshold(f, NormedSpace(f.dim, args.p), args.tol)
    print(f"bracket   [{est.lower!r}, {est.upper!r}]")
    print(f"estimate  {est.value!r}")
    if not est.prox_bounded:
        print("no probed lambda gave a bounded problem")
    if f.known_threshold is not None:
        print(f"known     {f.known_threshold!r}")
    return EXIT_OK


def _cmd_certify(args):
    f = _load_function(args.function)
    space = NormedSpace(f.dim, args.p)
    slack = default_slack(args.density) if args.slack is None else args.slack
    rec = br_approximate(f, space, args.x, args.xstar, args.eps, args.lam, args.tol, slack)
    print(rec.describe())
    if f.has_subdiff:
        sample = sample_graph(f, space, None, args.density)
        val, pair = violation_certificate(sample, args.x, args.xstar)
        print(f"sampled violation {val!r} at ({_fmt(pair.x)}, {_fmt(pair.xstar)})")
        if val < -args.eps - slack:
            print(f"certificate: <y* - x*, y - x> = {val!r} < -eps = {-args.eps!r} for a graph pair,"
                  f" so the query is not {args.eps!r}-monotonically related")
    return EXIT_OK if rec.passed else EXIT_FAIL


def _cmd_sweep(args):
    cfg = ScenarioConfig.load(args.config)
    report = run_scenario(cfg, threads=args.threads)
    prefix = args.out or Path(args.config).stem
    csv_path, json_path = report.write(prefix)
    s = report.summary
    print(f"function   {report.function}   threshold estimate {report.threshold!r}")
    print(f"lambdas    {', '.join(repr(v) for v in report.lambda_grid)}")
    print(f"admitted   {s['admitted']} of {s['attempts']} drawn queries")
    print(f"passed     {s['passed']}   pass rate {s['pass_rate']}")
    print(f"wrote      {csv_path}, {json_path}")
    return EXIT_OK if s["passed"] == s["admitted"] else EXIT_FAIL


def _cmd_ekeland(args):
    f = _load_function(args.function)
    space = NormedSpace(f.dim, 2.0 if args.p is None else args.p)
    if f.dim != 1:
        raise ConfigError("the ekeland subcommand works on 1-D entries")
    lo, hi = (args.grid if args.grid is not None else (f.box_lo[0], f.box_hi[0]))
    grid = np.linspace(lo, hi, args.points)
    xl = ekeland_point(f, space, args.xbar, args.eps, args.lam, grid)
    a, b, c = ekeland_conditions(f, space, args.xbar, xl, args.eps, args.lam, np.append(grid, args.xbar), 1e-9)
    print(f"x_lambda  {_fmt(xl)}")
    print(f"(a) {a}  (b) {b}  (c) {c}")
    return EXIT_OK if (a and b and c) else EXIT_FAIL


def _cmd_minty(args):
    f = _load_function(args.function)
    pair = minty_surjectivity_check(f, NormedSpace(f.dim, 2.0), args.xstar, args.tol)
    print(f"x         {_fmt(pair.x)}")
    print(f"x* - x    {_fmt(pair.xstar)}")
    print(f"residual  {pair.residual!r}")
    return EXIT_OK


def build_parser():
    ap = _Parser(prog="proxbr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("catalog", help="list catalog functions")
    c.add_argument("action", choices=["list"])
    c.set_defaults(run=_cmd_catalog)

    def fn(p):
        p.add_argument("function", help="catalog name (e.g. neg_quad_c:3) or a piecewise .json file")

    p = sub.add_parser("prox", help="regularized minimizer of f(x+y) - <x*,y> + lambda*j(y)")
    fn(p)
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--xstar", type=_vector)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(run=_cmd_prox)

    p = sub.add_parser("threshold", help="estimate the prox-boundedness threshold")
    fn(p)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--p", type=float, default=2.0)
    p.set_defaults(run=_cmd_threshold)

    p = sub.add_parser("certify", help="approximate a query pair by a subgradient pair")
    fn(p)
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--xstar", type=_vector, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--slack", type=float)
    p.add_argument("--density", type=float, default=50.0, help="graph sample density")
    p.set_defaults(run=_cmd_certify)

    p = sub.add_parser("sweep", help="run a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output prefix (default: config file stem)")
    p.add_argument("--threads", type=int)
    p.set_defaults(run=_cmd_sweep)

    p = sub.add_parser("ekeland", help="grid variational principle from an eps-minimizer")
    fn(p)
    p.add_argument("--xbar", type=_vector, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--grid", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--p", type=float)
    p.set_defaults(run=_cmd_ekeland)

    p = sub.add_parser("minty", help="solve x* in x + df(x) for convex f")
    fn(p)
    p.add_argument("--xstar", type=_vector, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(run=_cmd_minty)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.run(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ProxbrError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
