"""Config-driven pipeline: an ordered list of stages sharing one context.

    seed = 7
    out = "runs/m3"

    [[stages]]
    stage = "corr2omni"
    m = 3
    inherent = "identity"
    target = "flat:2/3"
"""
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np
import pandas as pd

from src.analysis.clustering import ari, cmds, cut_tree, pairwise_graph_distances, ward_cluster
from src.analysis.embedding_stats import empirical_block_correlation
from src.cli.commands import (
    CSV_FLOAT, EXIT_FAILED, EXIT_OK, EXIT_USAGE, correlation_source, embed_collection, handle_errors, parse_number,
    write_embedding,
)
from src.cli.manifest import RunManifest
from src.corr2omni.majorization import corr2omni
from src.db import record_run
from src.exceptions import OmnikitError, PipelineError
from src.graphs.jrdpg import GeneratorSpec, sample_dirichlet_latents, sample_jrdpg_gen, surrogate_collection
from src.graphs.store import PreprocessOptions, load_collection, preprocess, save_collection, save_matrix
from src.omni.weights import save_weights, special
from src.theory.correlation import correlation_gap
from src.theory.correlation_matrix import CorrelationRole

logger = logging.getLogger(__name__)


class PipelineContext:
    def __init__(self, out, base_dir, seed, manifest):
        self.out = Path(out)
        self.base_dir = Path(base_dir)
        self.seed = seed
        self.manifest = manifest
        self.collection = None
        self.labels = None
        self.result = None
        self.embedding = None

    def resolve(self, path):
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def require_graphs(self, stage):
        if self.collection is None:
            raise PipelineError(stage, "no graphs loaded; add a 'sample', 'surrogate' or 'load' stage first")
        return self.collection


def load_config(path):
    path = Path(path)
    with open(path, "rb") as f:
        if path.suffix == ".toml":
            config = tomllib.load(f)
        else:
            config = json.load(f)
    if not isinstance(config.get("stages", []), list):
        raise PipelineError("config", "'stages' must be a list")
    return config


def stage_sample(ctx, opts):
    m = int(opts["m"])
    nu = [parse_number(v) for v in opts["nu"]] if "nu" in opts else [np.sqrt(parse_number(opts.get("rho", 0)))] * m
    latents = sample_dirichlet_latents(int(opts["n"]), ctx.seed)
    ctx.collection = sample_jrdpg_gen(latents, GeneratorSpec(nu=tuple(nu), seed=ctx.seed), m)
    save_collection(ctx.collection, ctx.out / "graphs")
    save_matrix(latents.X, ctx.out / "latents.csv")


def stage_surrogate(ctx, opts):
    ctx.collection, ctx.labels = surrogate_collection(
        int(opts["m"]), int(opts["n"]), int(opts.get("blocks", 2)), ctx.seed, within=parse_number(opts.get("within", 0.5)))
    save_collection(ctx.collection, ctx.out / "graphs")
    pd.DataFrame({"graph": np.arange(1, ctx.collection.m + 1), "label": ctx.labels}).to_csv(
        ctx.out / "labels.csv", index=False, header=False)


def stage_load(ctx, opts):
    path = ctx.resolve(opts["path"])
    if not path.is_dir():
        raise PipelineError("load", f"missing input directory {path}", exit_code=EXIT_USAGE)
    ctx.manifest.add_input(path)
    ctx.collection = load_collection(path, opts.get("format", "dense-csv"), symmetrize=bool(opts.get("symmetrize", False)))


def stage_preprocess(ctx, opts):
    fields = PreprocessOptions.__dataclass_fields__
    ctx.collection = preprocess(ctx.require_graphs("preprocess"), PreprocessOptions(**{k: bool(v) for k, v in opts.items() if k in fields}))


def stage_corr2omni(ctx, opts):
    m = int(opts["m"]) if "m" in opts else ctx.require_graphs("corr2omni").m
    R = correlation_source(opts.get("inherent", "identity"), m=m, collection=ctx.collection, base_dir=ctx.base_dir)
    target_spec = opts.get("target", "same")
    if target_spec == "same":
        target = R.with_role(CorrelationRole.TARGET)
    else:
        target = correlation_source(target_spec, m=m, collection=ctx.collection, role=CorrelationRole.TARGET, base_dir=ctx.base_dir)
    ctx.result = corr2omni(
        R, target,
        max_iter=int(opts.get("max_iter", 5000)),
        eps_stress=float(opts.get("eps_stress", 0.0)),
        eps_dom=opts.get("eps_dom"),
        restarts=int(opts.get("restarts", 4)),
        seed=ctx.seed,
    )
    save_matrix(ctx.result.alpha, ctx.out / "A.csv")
    save_weights(ctx.result.weights, ctx.out / "C.json")
    save_matrix(ctx.result.induced.values, ctx.out / "induced.csv")
    ctx.result.stress_log.to_csv(ctx.out / "stress.csv", index=False, float_format=CSV_FLOAT)
    logger.info(f"corr2omni gap to target {correlation_gap(ctx.result.induced, target):.6f}")


def stage_embed(ctx, opts):
    collection = ctx.require_graphs("embed")
    source = opts.get("weights", "classical")
    if source == "corr2omni":
        if ctx.result is None:
            raise PipelineError("embed", "weights 'corr2omni' need a preceding corr2omni stage")
        weights = ctx.result.weights
    else:
        weights = special(source, collection.m)
    ctx.embedding = embed_collection(collection, weights, opts.get("d", "auto"), opts.get("max_d"))
    write_embedding(ctx.embedding, ctx.out / f"embedding_{source}.csv", collection.vertex_ids)


def stage_analyze(ctx, opts):
    if ctx.embedding is None:
        raise PipelineError("analyze", "no embedding; add an 'embed' stage first")
    blocks = ctx.embedding.blocks()
    D = pairwise_graph_distances(blocks)
    dend = ward_cluster(D)
    report = {"distances": D.tolist(), "merges": dend.merges(), "block_correlation": empirical_block_correlation(blocks).values.tolist()}
    if "cluster" in opts:
        labels = cut_tree(dend, int(opts["cluster"]))
        report["labels"] = labels.tolist()
        truth = ctx.labels if opts.get("truth", "subjects") == "subjects" else pd.read_csv(ctx.resolve(opts["truth"]), header=None).iloc[:, -1].to_numpy()
        if truth is not None:
            report["ari"] = ari(labels, truth)
    coords, scree = cmds(D, min(int(opts.get("cmds_k", 2)), len(blocks)))
    report["cmds"], report["scree"] = coords.tolist(), scree.tolist()
    (ctx.out / opts.get("report", "report.json")).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


STAGES = {
    "sample": stage_sample,
    "surrogate": stage_surrogate,
    "load": stage_load,
    "preprocess": stage_preprocess,
    "corr2omni": stage_corr2omni,
    "embed": stage_embed,
    "analyze": stage_analyze,
}


def run_pipeline(config_path, seed=None, out=None):
    config_path = Path(config_path)
    config = load_config(config_path)
    seed = int(config.get("seed", 0) if seed is None else seed)
    out_dir = Path(out or config.get("out", "out"))
    if not out_dir.is_absolute():
        out_dir = config_path.parent / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(command="pipeline", options=config, seed=seed)
    ctx = PipelineContext(out_dir, config_path.parent, seed, manifest)
    exit_code = EXIT_OK
    try:
        for index, stage in enumerate(config.get("stages", []), start=1):
            name = stage.get("stage")
            if name not in STAGES:
                raise PipelineError(name or f"#{index}", f"unknown stage, expected one of {', '.join(STAGES)}", exit_code=EXIT_USAGE)
            logger.info(f"pipeline stage {index}: {name}")
            try:
                STAGES[name](ctx, {k: v for k, v in stage.items() if k != "stage"})
            except PipelineError:
                raise
            except (OSError, KeyError) as err:
                raise PipelineError(name, str(err), exit_code=EXIT_USAGE) from err
            except OmnikitError as err:
                raise PipelineError(name, str(err), exit_code=EXIT_FAILED) from err
    except PipelineError as err:
        exit_code = err.exit_code
        raise
    finally:
        manifest.write(out_dir / "manifest.json")
        record_run(manifest, exit_code)
    return exit_code


@handle_errors
def cmd_pipeline(args):
    return run_pipeline(args.config, seed=args.seed)
