"""Command-line entry point.

Subcommands cover the whole workflow: ``train`` fits and saves a model,
``integrate`` and ``eval-grid`` read one back, ``compare`` puts the trained
definite integral next to the classical rules, ``galerkin`` solves a
boundary-value problem with either load strategy, ``case`` reruns a
registered study, and ``breakeven`` evaluates the cost-crossover formula.

Exit codes: 0 success, 1 usage error, 2 numerical failure.  Progress goes
to stderr; machine-readable output (CSV or a bare number) goes to stdout or
the --out path.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import cases as casesmod
from . import galerkin as galerkinmod
from . import quadrature
from .expr import ExprError, as_array_function, free_vars, parse
from .galerkin import BreakevenInputs, GalerkinError, GalerkinProblem
from .integral import Antiderivative, ModelFileError, load as load_model, save as save_model
from .net import NetError
from .quadrature import QuadratureError
from .train import TrainConfig, TrainError, train as train_model

__all__ = ["main", "parse_flags", "build_parser"]

USAGE_ERROR = 1
NUMERICAL_ERROR = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep 1 for usage
        raise _UsageError(message)


def _parse_domain(items: Sequence[str]) -> Dict[str, Tuple[float, float]]:
    domain: Dict[str, Tuple[float, float]] = {}
    for item in items:
        try:
            name, _, span = item.partition("=")
            lo_text, _, hi_text = span.partition(":")
            lo, hi = float(lo_text), float(hi_text)
        except ValueError:
            raise _UsageError(f"--domain expects name=lo:hi, got {item!r}") from None
        if not name or not name[0].isalpha() and name[0] != "_":
            raise _UsageError(f"bad variable name in --domain {item!r}")
        if not lo < hi:
            raise _UsageError(f"--domain {item!r}: need lo < hi")
        domain[name] = (lo, hi)
    return domain


def _parse_layers(text: str) -> List[int]:
    try:
        hidden = [int(w) for w in text.split(",") if w]
    except ValueError:
        raise _UsageError(f"--layers expects a comma list of widths, got {text!r}") from None
    if not hidden or any(w < 1 for w in hidden):
        raise _UsageError(f"--layers needs positive widths, got {text!r}")
    return hidden


def _parse_points(text: str) -> int | List[int]:
    parts = [p for p in text.split(",") if p]
    try:
        counts = [int(p) for p in parts]
    except ValueError:
        raise _UsageError(f"--points expects integers, got {text!r}") from None
    return counts[0] if len(counts) == 1 else counts


def _parse_params(items: Sequence[str]) -> Dict[str, float]:
    params: Dict[str, float] = {}
    for item in items:
        name, eq, value = item.partition("=")
        if not eq:
            raise _UsageError(f"--param expects name=value, got {item!r}")
        try:
            params[name] = float(value)
        except ValueError:
            raise _UsageError(f"--param {item!r}: bad number") from None
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dnni", description=__doc__.splitlines()[0],
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for grid quadrature (array math "
                             "already uses the BLAS thread pool)")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("train", help="fit an antiderivative network and save it",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--expr", required=True, help="integrand source text")
    p.add_argument("--domain", action="append", required=True, metavar="name=lo:hi",
                   help="training interval per variable; repeat for parameters, x first")
    p.add_argument("--anchor", type=float, default=None,
                   help="antiderivative zero point (default: lower end of x)")
    p.add_argument("--layers", default="10,10", help="hidden layer widths, comma list")
    p.add_argument("--activation", choices=["tanh", "sigmoid"], default="tanh")
    p.add_argument("--epochs", type=int, default=10000)
    p.add_argument("--points", default="100",
                   help="training points per axis (one count or a comma list)")
    p.add_argument("--sampling", choices=["uniform_grid", "uniform_random"],
                   default="uniform_grid")
    p.add_argument("--lr0", type=float, default=1e-2)
    p.add_argument("--lr-stages", type=int, default=5)
    p.add_argument("--lr-decay", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--zeta", type=float, default=None,
                   help="finite stand-in for an infinite upper limit, recorded in the model")
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("integrate", help="definite integral from a saved model",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--lower", type=float, required=True)
    p.add_argument("--upper", type=float, required=True)
    p.add_argument("--param", action="append", default=[], metavar="name=value")

    p = sub.add_parser("eval-grid", help="CSV of the antiderivative on a grid",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=1000, help="grid points")
    p.add_argument("--param", action="append", default=[], metavar="name=value")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("compare", help="trained integral next to classical rules",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--lower", type=float, required=True)
    p.add_argument("--upper", type=float, required=True)
    p.add_argument("--param", action="append", default=[], metavar="name=value")
    p.add_argument("--simpson-n", type=int, default=1_000_000,
                   help="subintervals for the composite rules")
    p.add_argument("--tol", type=float, default=1e-9, help="adaptive tolerance")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("galerkin", help="solve alpha*u'' + beta*u' + gamma*u = f",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--f", required=True, help="source term f(x)")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--xn", type=float, required=True)
    p.add_argument("--u0", type=float, default=0.0, help="Dirichlet value at x0")
    p.add_argument("--c", type=float, default=0.0, help="Neumann slope at xn")
    p.add_argument("--n", type=int, default=101, help="node count")
    p.add_argument("--strategy", choices=["quadrature", "dnni"], default="quadrature")
    p.add_argument("--n1", default=None, help="model file for the antiderivative of f")
    p.add_argument("--n2", default=None, help="model file for the antiderivative of x*f")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("case", help="rerun a registered case study",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("action", choices=["run", "list"])
    p.add_argument("id", type=int, nargs="?", default=None)
    p.add_argument("--variant", default=None, help="case variant, e.g. relativistic")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--points", default=None)
    p.add_argument("--out-dir", default="dnni-out")
    p.add_argument("--no-cache", action="store_true", help="retrain even if cached")

    p = sub.add_parser("breakeven", help="node count where substitution beats quadrature",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--T", type=float, required=True, help="seconds to train one antiderivative")
    p.add_argument("--t", type=float, required=True, help="seconds per quadrature integral")
    p.add_argument("--eps", type=float, required=True, help="seconds per limit substitution")
    p.add_argument("--m", type=int, default=2, help="distinct antiderivatives needed")

    return parser


def parse_flags(argv: Sequence[str]) -> argparse.Namespace:
    """Validated flags; raises on unknown flags or missing arguments."""
    parser = build_parser()
    args = parser.parse_args(list(argv))
    if args.subcommand is None:
        raise _UsageError("a subcommand is required (see --help)")
    if args.subcommand == "case" and args.action == "run" and args.id is None:
        raise _UsageError("case run needs a case id")
    return args


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(lines: List[str], out: Optional[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="ascii", newline="\n") as handle:
            handle.write(text)


def _cmd_train(args) -> int:
    domain = _parse_domain(args.domain)
    if "x" not in domain:
        raise _UsageError("--domain must include the integration variable x")
    if list(domain)[0] != "x":
        domain = {"x": domain.pop("x"), **domain}
    tree = parse(args.expr)
    unknown = [v for v in free_vars(tree) if v not in domain]
    if unknown:
        raise _UsageError(f"integrand uses variables without --domain intervals: {unknown}")
    hidden = _parse_layers(args.layers)
    cfg = TrainConfig(
        domain=domain,
        layer_sizes=[len(domain)] + hidden + [1],
        points_per_axis=_parse_points(args.points),
        sampling=args.sampling,
        activation=args.activation,
        epochs=args.epochs,
        lr0=args.lr0,
        lr_decay_factor=args.lr_decay,
        lr_stages=args.lr_stages,
        seed=args.seed,
    )
    anchor = args.anchor if args.anchor is not None else domain["x"][0]
    _say(f"# seed {args.seed}: training on {cfg.total_points()} points, "
         f"{args.epochs} epochs, layers {cfg.layer_sizes}")
    network, report = train_model(tree, cfg)
    ad = Antiderivative(network, cfg.variables(), anchor,
                        [domain[v] for v in cfg.variables()], args.expr, args.zeta,
                        metadata={"seed": args.seed, "epochs": report.epochs_run,
                                  "final_loss": report.final_loss})
    save_model(ad, args.out)
    _say(f"# final loss {report.final_loss!r} in {report.seconds:.1f}s -> {args.out}")
    return 0


def _cmd_integrate(args) -> int:
    ad = load_model(args.model)
    _say(f"# model {args.model} (seed {ad.metadata.get('seed')})")
    value = ad.definite(args.lower, args.upper, _parse_params(args.param))
    print(repr(value))
    return 0


def _cmd_eval_grid(args) -> int:
    ad = load_model(args.model)
    params = _parse_params(args.param)
    lo, hi = ad.domain[0]
    xs = np.linspace(lo, hi, args.n)
    values = ad.value_array(xs, params)
    seed = ad.metadata.get("seed")
    _say(f"# model {args.model} (seed {seed}) on [{lo!r}, {hi!r}]")
    lines = ["x,value"] + [f"{float(x)!r},{float(v)!r}" for x, v in zip(xs, values)]
    _emit(lines, args.out)
    return 0


def _cmd_compare(args) -> int:
    ad = load_model(args.model)
    _say(f"# model {args.model} (seed {ad.metadata.get('seed')})")
    params = _parse_params(args.param)
    f = as_array_function(parse(ad.integrand), "x", params)
    lo, hi = args.lower, args.upper
    rows = []
    value = ad.definite(lo, hi, params)
    rows.append(("trained", value, 2, 0.0))
    n13 = args.simpson_n if args.simpson_n % 2 == 0 else args.simpson_n + 1
    r = quadrature.simpson13(f, lo, hi, n13, threads=args.threads)
    rows.append((f"simpson13(n={n13})", r.value, r.evaluations, r.elapsed))
    n38 = args.simpson_n - args.simpson_n % 3
    r = quadrature.simpson38(f, lo, hi, max(n38, 3), threads=args.threads)
    rows.append((f"simpson38(n={max(n38, 3)})", r.value, r.evaluations, r.elapsed))
    r = quadrature.adaptive(f, lo, hi, args.tol)
    label = "adaptive" if r.flag is None else "adaptive[flagged]"
    rows.append((f"{label}(tol={args.tol!r})", r.value, r.evaluations, r.elapsed))
    lines = ["method,value,evaluations,seconds"]
    lines += [f"{name},{value!r},{evals},{secs!r}" for name, value, evals, secs in rows]
    _emit(lines, args.out)
    return 0


def _cmd_galerkin(args) -> int:
    problem = GalerkinProblem(args.alpha, args.beta, args.gamma, args.f,
                              args.x0, args.xn, args.u0, args.c, args.n)
    n1 = n2 = None
    if args.strategy == "dnni":
        if args.n1 and args.n2:
            n1, n2 = load_model(args.n1), load_model(args.n2)
            _say(f"# loaded antiderivatives {args.n1}, {args.n2}")
        else:
            _say("# no --n1/--n2 models given; training the load antiderivatives now")
            n1, n2, seconds = galerkinmod.train_load_antiderivatives(problem)
            _say(f"# trained both in {seconds:.1f}s")
    solution = galerkinmod.solve(problem, args.strategy, n1=n1, n2=n2)
    _say(f"# strategy {args.strategy}, {args.n} nodes, linear solver: {solution.solver}")
    lines = ["x,u"] + [f"{float(x)!r},{float(u)!r}"
                       for x, u in zip(solution.nodes, solution.nodal_values)]
    _emit(lines, args.out)
    return 0


def _cmd_case(args) -> int:
    if args.action == "list":
        for spec in casesmod.registry():
            print(f"{spec.id}\t{spec.description}")
            for name in spec.variants:
                print(f"{spec.id}\t  variant: {name}")
        return 0
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.points is not None:
        overrides["points_per_axis"] = _parse_points(args.points)
    spec = casesmod.get_case(args.id, args.variant)
    seed = overrides.get("seed", spec.config.seed)
    _say(f"# case {args.id}{' ' + args.variant if args.variant else ''} (seed {seed})")
    report = casesmod.run_case(args.id, overrides or None, variant=args.variant,
                               out_dir=args.out_dir, use_cache=not args.no_cache)
    print(f"l2,{report.l2!r}")
    print(f"max_abs,{report.max_abs!r}")
    print(f"max_rel,{report.max_rel!r}")
    print(f"csv,{report.csv_path}")
    if report.strategies:
        for name, sub in report.strategies.items():
            print(f"{name}:max_abs,{sub.max_abs!r}")
    return 0


def _cmd_breakeven(args) -> int:
    n_real, n_int = galerkinmod.breakeven(
        BreakevenInputs(args.T, args.t, args.eps, args.m))
    print(f"n_real,{n_real!r}")
    print(f"n_int,{n_int}")
    return 0


_HANDLERS = {
    "train": _cmd_train,
    "integrate": _cmd_integrate,
    "eval-grid": _cmd_eval_grid,
    "compare": _cmd_compare,
    "galerkin": _cmd_galerkin,
    "case": _cmd_case,
    "breakeven": _cmd_breakeven,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_flags(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except SystemExit as exc:  # --help / --version paths
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.subcommand](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ExprError, TrainError, NetError, QuadratureError, GalerkinError,
            casesmod.CaseError, ModelFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
