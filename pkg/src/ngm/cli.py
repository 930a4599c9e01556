"""Command-line entry point: ``ngm <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import math
import sys

from . import __version__
from .datagen import EXAMPLES
from .errors import NGMError
from .metrics import MODES, PER_NODE_MEAN
from .pipeline import (RunConfig, cmd_embed, cmd_evaluate, cmd_fit, cmd_graphs, cmd_run,
                       cmd_simulate)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _delta(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _example(text: str) -> str:
    if text not in EXAMPLES:
        raise argparse.ArgumentTypeError(f"unknown example {text!r} (choose from {', '.join(EXAMPLES)})")
    return text


class _Parser(argparse.ArgumentParser):
    """Usage errors print one line and exit with status 2."""

    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--threads", type=int, help="worker processes for replications")
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--example", type=_example, help=f"one of {', '.join(EXAMPLES)}")
    data.add_argument("--n", type=int, help="number of nodes")
    data.add_argument("--d", type=int, help="observation dimension")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--lambda-grid", type=_float_list, help="comma-separated regularization values")
    model.add_argument("--sigma-x", type=float, help="fixed observation kernel bandwidth")
    model.add_argument("--sigma-b", type=float, help="fixed embedding kernel bandwidth")
    model.add_argument("--folds", type=int, help="cross-validation folds (default 5)")
    model.add_argument("--m", type=int, help="embedding dimension")
    model.add_argument("--embedding", choices=("ase", "given"), help="embedding source")

    graphs = argparse.ArgumentParser(add_help=False)
    graphs.add_argument("--delta-grid", type=_float_list, help="comma-separated thresholds")
    graphs.add_argument("--delta", type=_delta, help="fixed threshold ('inf' gives empty graphs)")
    graphs.add_argument("--eval-subsample", type=int, help="evaluation points for the Omega average")

    p = _Parser(prog="ngm", description="Node-specific conditional-independence graphs "
                                "for observations attached to network nodes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common, data], help="generate a synthetic dataset")
    s.set_defaults(func=_simulate)

    s = sub.add_parser("embed", parents=[common], help="spectral embedding of an edge list")
    s.add_argument("--edges", required=True, help="edge list file")
    s.add_argument("--m", type=int, required=True, help="embedding dimension")
    s.add_argument("--n", type=int, help="node count (else read from the file header)")
    s.set_defaults(func=_embed)

    s = sub.add_parser("fit", parents=[common, model], help="fit the score model on external data")
    s.add_argument("--x", dest="x_path", required=True, help="observations CSV (n rows, d columns)")
    s.add_argument("--edges", dest="edges_path", help="edge list for ASE")
    s.add_argument("--embedding-file", dest="embedding_path", help="embedding CSV")
    s.set_defaults(func=_fit)

    s = sub.add_parser("graphs", parents=[common, graphs], help="node-wise graphs from a saved model")
    s.add_argument("--model", required=True, help="model.bin from 'fit'")
    s.add_argument("--embedding-file", required=True, help="embedding CSV used for fitting")
    s.add_argument("--folds", type=int, help="folds for threshold selection (default 5)")
    s.set_defaults(func=_graphs)

    s = sub.add_parser("evaluate", parents=[common], help="score predicted graphs against truth")
    s.add_argument("--pred", nargs="+", required=True, help="predicted edges.jsonl per replication")
    s.add_argument("--truth", nargs="+", required=True, help="true edges.jsonl per replication")
    s.add_argument("--aggregation", choices=MODES, default=PER_NODE_MEAN)
    s.set_defaults(func=_evaluate)

    s = sub.add_parser("run", parents=[common, data, model, graphs], help="full replicated pipeline")
    s.add_argument("--replications", type=int, help="number of replications (default 1)")
    s.add_argument("--aggregation", choices=MODES, help="metric aggregation mode")
    s.add_argument("--resume", action="store_true", help="reuse replications whose outputs verify")
    s.add_argument("--no-omega", dest="save_omega", action="store_false", default=None,
                   help="skip writing omega.csv")
    s.add_argument("--x", dest="x_path", help="external observations CSV")
    s.add_argument("--edges", dest="edges_path", help="external edge list")
    s.add_argument("--embedding-file", dest="embedding_path", help="external embedding CSV")
    s.add_argument("--truth", dest="truth_path", help="external truth edges.jsonl")
    s.set_defaults(func=_run)
    return p


_CONFIG_FLAGS = {
    "seed": "seed", "out_dir": "out_dir", "threads": "threads", "example": "example",
    "n": "n", "d": "d", "lambda_grid": "lambda_grid", "sigma_x": "sigma_x",
    "sigma_b": "sigma_b", "folds": "folds", "m": "m", "embedding": "embedding",
    "delta_grid": "delta_grid", "delta": "delta", "eval_subsample": "eval_subsample",
    "replications": "replications", "aggregation": "aggregation", "save_omega": "save_omega",
    "x_path": "x_path", "edges_path": "edges_path", "embedding_path": "embedding_path",
    "truth_path": "truth_path",
}


def _config(args) -> RunConfig:
    base = RunConfig.from_json(args.config).to_dict() if args.config else RunConfig().to_dict()
    for attr, key in _CONFIG_FLAGS.items():
        val = getattr(args, attr, None)
        if val is not None:
            base[key] = val
    return RunConfig.from_dict(base)


def _simulate(args) -> int:
    cmd_simulate(_config(args))
    return 0


def _embed(args) -> int:
    cmd_embed(args.edges, args.m, args.out_dir or ".", n=args.n)
    return 0


def _fit(args) -> int:
    cmd_fit(_config(args))
    return 0


def _graphs(args) -> int:
    cmd_graphs(_config(args), args.model, args.embedding_file)
    return 0


def _evaluate(args) -> int:
    cmd_evaluate(args.pred, args.truth, args.aggregation, args.out_dir or ".")
    return 0


def _run(args) -> int:
    return cmd_run(_config(args), resume=args.resume)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (NGMError, ValueError, OSError) as exc:
        print(f"ngm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
