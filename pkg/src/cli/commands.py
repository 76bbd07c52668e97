import json
import logging
from fractions import Fraction
from functools import wraps
from pathlib import Path

import numpy as np
import pandas as pd

from src.analysis.alignment import alignment_strength_matrix
from src.analysis.clustering import ari, cmds, cut_tree, pairwise_graph_distances, vertex_distance_matrix, ward_cluster
from src.analysis.embedding_stats import empirical_block_correlation
from src.cli.manifest import RunManifest
from src.cli.templates import templates
from src.corr2omni.majorization import corr2omni
from src.exceptions import OmnikitError, PipelineError
from src.graphs.jrdpg import GeneratorSpec, sample_dirichlet_latents, sample_jrdpg_gen
from src.graphs.store import load_collection, load_matrix, save_collection, save_matrix
from src.omni.omnibus import build_omnibus
from src.omni.spectral import ase, select_dim, spectrum
from src.omni.weights import alpha_matrix, load_weights, save_weights, special, validate, womni_from_alpha
from src.theory.bounds import all_bounds, theta_gap_check
from src.theory.correlation import correlation_gap, flat_check, induced_correlation
from src.theory.correlation_matrix import CorrelationMatrix, CorrelationRole

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

CSV_FLOAT = "%.17g"

INPUT_OPTIONS = ("graphs", "weights", "alpha", "R", "target", "embedding", "truth")
SKIPPED_OPTIONS = {"func", "seed", "verbose"}


def handle_errors(func):
    """Map library errors onto exit codes: 1 for validation failures, 2 for I/O and usage errors."""
    @wraps(func)
    def wrapper(args):
        try:
            return func(args)
        except PipelineError as err:
            logger.error(f"{func.__name__}: {err}")
            return err.exit_code
        except (OSError, KeyError) as err:
            logger.error(f"{func.__name__}: {err}")
            return EXIT_USAGE
        except OmnikitError as err:
            logger.error(f"{func.__name__}: {err}")
            return EXIT_FAILED
    return wrapper


def write_run_manifest(args, out):
    """Write a RunManifest beside an output: inside it for a directory, as <name>.manifest.json for a file."""
    command = " ".join(v for v in (getattr(args, "command", None), getattr(args, "omni_command", None)) if v)
    options = {k: v for k, v in vars(args).items() if k not in SKIPPED_OPTIONS}
    manifest = RunManifest(command=command, options=options, seed=getattr(args, "seed", None))
    for key in INPUT_OPTIONS:
        value = getattr(args, key, None)
        if value and Path(value).exists():
            manifest.add_input(value)
    out = Path(out)
    path = out / "manifest.json" if out.is_dir() else out.with_name(f"{out.name}.manifest.json")
    logger.debug(f"run manifest at {path}")
    return manifest.write(path)


def parse_number(text):
    """Float from '0.72' or '2/3'."""
    return float(Fraction(str(text)))


def correlation_source(spec, m=None, collection=None, role=CorrelationRole.INHERENT, base_dir=None):
    """Resolve 'identity', 'flat:<v>', 'alignment' or a csv path to a CorrelationMatrix."""
    spec = str(spec)
    if spec == "identity":
        if m is None:
            raise PipelineError("correlation", "'identity' needs the number of graphs")
        return CorrelationMatrix.identity(m, role)
    if spec.startswith("flat:"):
        if m is None:
            raise PipelineError("correlation", "'flat:' needs the number of graphs")
        return CorrelationMatrix.flat(m, parse_number(spec[5:]), role)
    if spec == "alignment":
        if collection is None:
            raise PipelineError("correlation", "'alignment' needs loaded graphs")
        return alignment_strength_matrix(collection, role)
    path = Path(spec)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    return CorrelationMatrix(load_matrix(path), role)


def resolve_weights(args, m):
    if getattr(args, "weights", None):
        return load_weights(args.weights)
    if getattr(args, "alpha", None):
        return womni_from_alpha(load_matrix(args.alpha))
    name = getattr(args, "special", None) or "classical"
    params = [parse_number(p) for p in args.params.split(",")] if getattr(args, "params", None) else None
    return special(name, m, params)


def write_embedding(embedding, path, vertex_ids=None):
    n, d = embedding.n, embedding.d
    frame = pd.DataFrame(embedding.Xhat, columns=[f"x{j + 1}" for j in range(d)])
    frame.insert(0, "vertex", list(vertex_ids or range(1, n + 1)) * embedding.m)
    frame.insert(0, "block", np.repeat(np.arange(1, embedding.m + 1), n))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT)
    return path


def read_embedding(path, m=None, n=None):
    frame = pd.read_csv(path)
    coords = frame[[c for c in frame.columns if c.startswith("x")]].to_numpy(dtype=float)
    if m is None:
        m = int(frame["block"].max()) if "block" in frame else 1
    if n is None:
        n = coords.shape[0] // m
    if coords.shape[0] != m * n:
        raise PipelineError("analyze", f"embedding has {coords.shape[0]} rows, expected m*n = {m * n}")
    return [coords[s * n:(s + 1) * n] for s in range(m)]


def embed_collection(collection, weights, d="auto", max_d=None):
    omnibus = build_omnibus(collection, weights)
    if str(d) == "auto":
        d = select_dim(spectrum(omnibus), max_d=max_d)
        logger.info(f"selected embedding dimension d={d}")
    return ase(omnibus, int(d), m=collection.m)


@handle_errors
def cmd_sample(args):
    nu = [parse_number(v) for v in args.nu.split(",")] if args.nu else [np.sqrt(args.rho)] * args.m
    spec = GeneratorSpec(nu=tuple(nu), seed=args.seed)
    latents = sample_dirichlet_latents(args.n, args.seed)
    collection = sample_jrdpg_gen(latents, spec, len(nu))
    out = Path(args.out)
    save_collection(collection, out)
    # kept out of the graph directory listing
    save_matrix(latents.X, out / "latents" / "latents.csv")
    provenance = {"seed": args.seed, "nu": list(spec.nu), "n": args.n, "m": len(nu), "latents": "latents/latents.csv"}
    (out / "provenance.json").write_text(json.dumps(provenance, indent=2) + "\n", encoding="utf-8")
    write_run_manifest(args, out)
    print(f"wrote {collection.m} graphs on {collection.n} vertices to {out}")
    return EXIT_OK


@handle_errors
def cmd_omni(args):
    if args.omni_command == "special":
        params = [parse_number(p) for p in args.params.split(",")] if args.params else None
        w = special(args.name, args.m, params)
        save_weights(w, args.out)
        if args.alpha_out:
            save_matrix(alpha_matrix(w), args.alpha_out)
        write_run_manifest(args, args.out)
        print(f"wrote {args.name} weights for m={args.m} to {args.out}")
        return EXIT_OK

    if args.omni_command == "validate":
        w = load_weights(args.weights) if args.weights else womni_from_alpha(load_matrix(args.alpha))
        report = validate(w, dominance_slack=args.slack)
        print(report)
        return EXIT_OK if report.ok else EXIT_FAILED

    collection = load_collection(args.graphs, args.format)
    w = resolve_weights(args, collection.m)
    report = validate(w)
    if not report.ok:
        print(report)
        return EXIT_FAILED
    save_matrix(build_omnibus(collection, w), args.out)
    write_run_manifest(args, args.out)
    print(f"wrote {collection.m * collection.n} x {collection.m * collection.n} Omnibus matrix to {args.out}")
    return EXIT_OK


@handle_errors
def cmd_embed(args):
    collection = load_collection(args.graphs, args.format)
    w = resolve_weights(args, collection.m)
    embedding = embed_collection(collection, w, args.d, args.max_d)
    write_embedding(embedding, args.out, collection.vertex_ids)
    write_run_manifest(args, args.out)
    print(f"wrote {embedding.m} blocks of {embedding.n} x {embedding.d} to {args.out}")
    return EXIT_OK


@handle_errors
def cmd_corr(args):
    alpha = load_matrix(args.alpha)
    m = alpha.shape[0]
    R = correlation_source(args.R if args.R else f"flat:{args.rho}", m=m)
    induced = induced_correlation(alpha, R)
    save_matrix(induced.values, args.out)
    write_run_manifest(args, args.out)
    check = flat_check(induced, args.tol)
    print(f"flat={check.is_flat} value={check.value:.6f} max_dev={check.max_dev:.3g}")
    return EXIT_OK


@handle_errors
def cmd_bounds(args):
    bounds = all_bounds(args.m, args.rho, args.alpha_max)
    gaps = None
    if args.m_grid:
        gaps = theta_gap_check([int(v) for v in args.m_grid.split(",")], args.rho).to_dict("records")
    print(templates.get_template("bounds.txt.j2").render(b=bounds, gaps=gaps), end="")
    return EXIT_OK


@handle_errors
def cmd_corr2omni(args):
    collection = load_collection(args.graphs, args.format) if args.graphs else None
    m = args.m or (collection.m if collection is not None else None)
    if m is None and args.R and Path(args.R).is_file():
        m = load_matrix(args.R).shape[0]
    R = correlation_source(args.R, m=m, collection=collection, role=CorrelationRole.INHERENT)
    target = R.with_role(CorrelationRole.TARGET) if args.target == "same" else correlation_source(
        args.target, m=R.m, collection=collection, role=CorrelationRole.TARGET)

    result = corr2omni(
        R, target,
        max_iter=args.iters,
        eps_stress=args.eps_stress,
        eps_dom=args.eps_dom,
        restarts=args.restarts,
        seed=args.seed,
    )
    if args.out_alpha:
        save_matrix(result.alpha, args.out_alpha)
    if args.out_c:
        save_weights(result.weights, args.out_c)
    if args.out_log:
        Path(args.out_log).parent.mkdir(parents=True, exist_ok=True)
        result.stress_log.to_csv(args.out_log, index=False, float_format=CSV_FLOAT)
    if args.out_induced:
        save_matrix(result.induced.values, args.out_induced)
    written = [p for p in (args.out_alpha, args.out_c, args.out_log, args.out_induced) if p]
    if written:
        write_run_manifest(args, written[0])

    print(f"stress {result.stress:.6f} (classical OMNI {result.classical_stress:.6f}), ridge {result.eps_used:g}")
    print(f"gap to target {correlation_gap(result.induced, target):.6f}")
    print(np.array2string(result.report_alpha(), precision=4, suppress_small=True))
    return EXIT_OK


@handle_errors
def cmd_analyze(args):
    blocks = read_embedding(args.embedding, args.m, args.n)
    D = pairwise_graph_distances(blocks)
    report = {"m": len(blocks), "n": blocks[0].shape[0], "distances": D.tolist()}

    if len(blocks) >= 2:
        dend = ward_cluster(D)
        report["merges"] = dend.merges()
        block_corr = empirical_block_correlation(blocks)
        report["block_correlation"] = block_corr.values.tolist()
        if args.R:
            report["correlation_gap"] = correlation_gap(block_corr, CorrelationMatrix(load_matrix(args.R)))
        if args.cluster:
            labels = cut_tree(dend, args.cluster)
            report["labels"] = labels.tolist()
            if args.truth:
                truth = pd.read_csv(args.truth, header=None).iloc[:, -1].to_numpy()
                report["ari"] = ari(labels, truth)
        k = min(args.cmds_k, len(blocks))
        coords, scree = cmds(D, k)
        report["cmds"] = coords.tolist()
        report["scree"] = scree.tolist()

    if args.vertex_distances:
        out_dir = Path(args.vertex_distances)
        for s, block in enumerate(blocks, start=1):
            save_matrix(vertex_distance_matrix(block), out_dir / f"vertex_distances_{s}.csv")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    write_run_manifest(args, out)
    if "ari" in report:
        print(f"ARI {report['ari']:.4f}")
    print(f"wrote analysis of {report['m']} graphs to {out}")
    return EXIT_OK

