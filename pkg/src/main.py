import argparse
import logging
import sys

from src import __version__
from src.cli.commands import (
    cmd_analyze, cmd_bounds, cmd_corr, cmd_corr2omni, cmd_embed, cmd_omni, cmd_sample, parse_number,
)
from src.cli.pipeline import cmd_pipeline
from src.cli.repro import EXPERIMENTS, cmd_repro
from src.db import init_db
from src.graphs.store import MatrixFormat
from src.log_config import setup_logging
from src.omni.weights import SPECIAL_NAMES

logger = logging.getLogger(__name__)

FORMATS = [f.value for f in MatrixFormat]


def _common(parser, seed_default=None):
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--seed", type=int, default=seed_default)


def _weight_source(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--omni-weights", "--weights", dest="weights", help="C tensor (json-tensor)")
    group.add_argument("--alpha", help="WOMNI row-sum matrix (dense-csv)")
    group.add_argument("--special", choices=SPECIAL_NAMES, help="named layout, default classical")
    parser.add_argument("--params", help="comma separated layout parameters, e.g. 'a,b,c,d' for M5plus")


def _graph_source(parser, required=True):
    parser.add_argument("--graphs", required=required, help="directory of graph files")
    parser.add_argument("--format", choices=FORMATS, default=MatrixFormat.DENSE_CSV.value)


def build_parser():
    parser = argparse.ArgumentParser(prog="omnikit", description="Generalized Omnibus embeddings and corr2Omni.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample correlated RDPG graphs")
    _common(p, seed_default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--rho", type=parse_number, default=0.0, help="flat correlation, nu = sqrt(rho)")
    p.add_argument("--nu", help="comma separated generator correlations, overrides --m/--rho")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("omni", help="build, validate or emit Omnibus weights")
    omni_sub = p.add_subparsers(dest="omni_command", required=True)
    q = omni_sub.add_parser("build")
    _common(q)
    _graph_source(q)
    _weight_source(q)
    q.add_argument("--out", required=True)
    q = omni_sub.add_parser("validate")
    _common(q)
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--weights")
    src.add_argument("--alpha")
    q.add_argument("--slack", type=float, default=0.0, help="required strict dominance gap")
    q = omni_sub.add_parser("special")
    _common(q)
    q.add_argument("name", choices=SPECIAL_NAMES)
    q.add_argument("--m", type=int, default=3)
    q.add_argument("--params")
    q.add_argument("--out", required=True)
    q.add_argument("--alpha-out")
    p.set_defaults(func=cmd_omni)

    p = sub.add_parser("embed", help="ASE of the Omnibus matrix")
    _common(p)
    _graph_source(p)
    _weight_source(p)
    p.add_argument("--d", default="auto", help="'auto' or an integer")
    p.add_argument("--max-d", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("corr", help="induced correlation of a WOMNI weighting")
    _common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--R", dest="R")
    p.add_argument("--rho", type=parse_number, default=0.0, help="flat inherent correlation when --R is absent")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("bounds", help="flat-correlation bounds")
    _common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", type=parse_number, default=0.0)
    p.add_argument("--alpha-max", type=parse_number)
    p.add_argument("--m-grid", help="comma separated m values for the gap table")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("corr2omni", help="WOMNI weights inducing a target correlation")
    _common(p, seed_default=0)
    _graph_source(p, required=False)
    p.add_argument("--m", type=int)
    p.add_argument("--R", dest="R", default="identity", help="identity, flat:<v>, alignment or a csv path")
    p.add_argument("--target", default="same", help="same, identity, flat:<v>, alignment or a csv path")
    p.add_argument("--womni", action="store_true", default=True, help="restrict to WOMNI weights (always on)")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--eps-stress", type=float, default=0.0)
    p.add_argument("--eps-dom", type=float)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--out-alpha")
    p.add_argument("--out-c")
    p.add_argument("--out-log")
    p.add_argument("--out-induced")
    p.set_defaults(func=cmd_corr2omni)

    p = sub.add_parser("analyze", help="distances, clustering and CMDS of an embedding")
    _common(p)
    p.add_argument("--embedding", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--R", dest="R", help="correlation matrix to compare the block correlation against")
    p.add_argument("--cluster", type=int)
    p.add_argument("--truth")
    p.add_argument("--cmds-k", type=int, default=2)
    p.add_argument("--vertex-distances", help="directory for per-graph vertex distance matrices")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pipeline", help="run a toml/json pipeline config")
    _common(p)
    p.add_argument("config")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("repro", help="acceptance recipes with pass/fail report")
    _common(p)
    p.add_argument("experiment", help=", ".join(EXPERIMENTS))
    p.add_argument("--replicates", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=logging.DEBUG if args.verbose else None)
    init_db()
    logger.debug(f"omnikit {__version__}: {args.command} seed={args.seed}")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
