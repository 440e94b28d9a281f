"""Command-line entry point.

Data goes to stdout (or ``--out``), logs to stderr.  Exit codes:

    0  success
    1  a check failed (axioms, gradient check)
    2  usage error
    3  I/O error (unreadable KB, config or dataset, unwritable output)
    4  invalid configuration or generator spec
    5  knowledge-base parse or compile error
    6  numeric fault during evaluation or training
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .autodiff import NumericFault, backward, forward, grad_check, kink_margin
from .compiler import CompileError, CompileOptions, kb_loss, random_tables
from .data import DatasetError, kb_context
from .generators import AXIOM_TEST_GRID, check_axioms, parse_generator
from .logic import LogicError, parse_kb
from .training import ConfigError, ExperimentConfig, TrainingError, run_experiment, sweep, sweep_csv

log = logging.getLogger("tnormloss")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_CONFIG, EXIT_KB, EXIT_NUMERIC = range(7)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, *flags: str) -> None:
    if "kb" in flags:
        p.add_argument("--kb", help="knowledge-base file (default: bundled manifold example)")
    if "generator" in flags:
        p.add_argument("--generator", help="generator spec, e.g. luk, prod, ss:-1.0, frank:2.0")
    if "config" in flags:
        p.add_argument("--config", required=True, help="JSON experiment config")
    if "seed" in flags:
        p.add_argument("--seed", type=int, help="random seed (non-negative)")
    if "jobs" in flags:
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
    if "modes" in flags:
        p.add_argument("--quantifier-mode", choices=["generated", "minmax"])
        p.add_argument("--exists-mode", choices=["tconorm", "max"])
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tnormloss", description="Generator-based fuzzy-logic losses.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("check", help="run the t-norm axiom suite"), "generator")
    _common(sub.add_parser("compile", help="print the loss graph of a KB"), "kb", "generator", "modes")
    _common(sub.add_parser("train", help="train and write the trace CSV"),
            "config", "generator", "seed", "modes")
    _common(sub.add_parser("sweep", help="lambda x split sweep, write the sweep CSV"),
            "config", "jobs", "modes")
    _common(sub.add_parser("gradcheck", help="compare KB-loss gradients with finite differences"),
            "kb", "generator", "seed", "modes")
    return ap


class _Abort(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _generator(spec: Optional[str], default: str = "prod"):
    try:
        return parse_generator(spec or default)
    except ValueError as exc:
        raise _Abort(EXIT_CONFIG, str(exc)) from None


def _options(args, base: CompileOptions = CompileOptions()) -> CompileOptions:
    return CompileOptions(
        quantifier_mode=args.quantifier_mode or base.quantifier_mode,
        exists_mode=args.exists_mode or base.exists_mode,
    )


def _read_kb(path: Optional[str]):
    try:
        if path is None:
            text = resources.files("tnormloss").joinpath("kb/manifold.kb").read_text()
        else:
            text = Path(path).read_text()
    except OSError as exc:
        raise _Abort(EXIT_IO, f"cannot read knowledge base: {exc}") from None
    return parse_kb(text)


def _config(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.from_json(args.config)
    except OSError as exc:
        raise _Abort(EXIT_IO, f"cannot read config: {exc}") from None
    over = {}
    if getattr(args, "generator", None):
        over["generator"] = args.generator
    if getattr(args, "quantifier_mode", None):
        over["quantifier_mode"] = args.quantifier_mode
    if getattr(args, "exists_mode", None):
        over["exists_mode"] = args.exists_mode
    if over:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
    return cfg


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise _Abort(EXIT_IO, f"cannot write {out}: {exc}") from None
    log.info("wrote %s", out)


def cmd_check(args) -> int:
    specs = [args.generator] if args.generator else list(AXIOM_TEST_GRID)
    lines = ["generator\taxiom\tmax_violation\tresult"]
    ok = True
    for spec in specs:
        g = _generator(spec)
        for axiom, viol, passed in check_axioms(g):
            ok &= passed
            lines.append(f"{g.spec()}\t{axiom}\t{viol:.3e}\t{'pass' if passed else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compile(args) -> int:
    kb = _read_kb(args.kb)
    graph = kb_loss(kb, _generator(args.generator), kb_context(kb), _options(args))
    _emit(graph.listing(), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    seed = cfg.seed if args.seed is None else args.seed
    res = run_experiment(cfg, seed)
    log.info("beta=%g final test accuracy %.4f", res.beta, res.test_acc)
    _emit(res.trace.to_csv(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise _Abort(EXIT_USAGE, "--jobs must be at least 1")
    rows = sweep(_config(args), jobs=args.jobs)
    _emit(sweep_csv(rows), args.out)
    return EXIT_OK


def cmd_gradcheck(args, points: int = 20, tol: float = 1e-4) -> int:
    kb = _read_kb(args.kb)
    ctx = kb_context(kb)
    graph = kb_loss(kb, _generator(args.generator), ctx, _options(args))
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    symbols = sorted(graph.learnable)
    worst = 0.0
    for _ in range(points):
        # resample until every non-smooth node sits away from its kink
        for _ in range(100):
            tables = random_tables(graph, ctx, rng)
            if kink_margin(forward(graph, tables)) > 1e-3:
                break
        params = [tables[s] for s in symbols]

        def fn():
            tape = forward(graph, tables)
            gr = backward(tape)
            return tape.output, [gr.get(s, np.zeros_like(tables[s])) for s in symbols]

        worst = max(worst, grad_check(fn, params))
    _emit(f"max_relative_error\t{worst!r}\n", args.out)
    return EXIT_OK if worst < tol else EXIT_FAIL


COMMANDS = {
    "check": cmd_check,
    "compile": cmd_compile,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("tnormloss: error: --seed must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except _Abort as exc:
        print(f"tnormloss: error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"tnormloss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"tnormloss: dataset error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LogicError, CompileError) as exc:
        print(f"tnormloss: knowledge base error: {exc}", file=sys.stderr)
        return EXIT_KB
    except (NumericFault, TrainingError) as exc:
        print(f"tnormloss: numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
