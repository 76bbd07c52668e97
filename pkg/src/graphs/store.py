import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from src.exceptions import GraphValidationError

logger = logging.getLogger(__name__)

# load-time asymmetry allowance; only decimal round-trip noise is absorbed
SYMMETRY_TOL = 1e-12

EDGE_LIST_SUFFIXES = (".txt", ".edges", ".edgelist", ".tsv")


class MatrixFormat(str, Enum):
    DENSE_CSV = "dense-csv"
    EDGE_LIST = "edge-list"
    JSON_TENSOR = "json-tensor"


@dataclass(frozen=True)
class MatrixFile:
    path: Path
    format: MatrixFormat
    shape: tuple


@dataclass(frozen=True)
class PreprocessOptions:
    binarize: bool = False
    symmetrize: bool = False
    drop_isolated: bool = False
    intersect_vertices: bool = False


@dataclass(frozen=True)
class GraphCollection:
    """m symmetric hollow n x n adjacency matrices on one shared vertex order."""

    graphs: tuple
    vertex_ids: tuple = field(default=None)

    def __post_init__(self):
        if len(self.graphs) == 0:
            raise GraphValidationError("a graph collection needs at least one graph")
        frozen = []
        n = None
        for k, raw in enumerate(self.graphs, start=1):
            a = np.array(raw, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise GraphValidationError(f"graph {k} is not square: shape {a.shape}")
            if n is None:
                n = a.shape[0]
            elif a.shape[0] != n:
                raise GraphValidationError(f"graph {k} has {a.shape[0]} vertices, expected {n}")
            if np.isnan(a).any():
                raise GraphValidationError(f"graph {k} contains NaN entries")
            if not np.array_equal(a, a.T):
                raise GraphValidationError(f"graph {k} is asymmetric")
            if np.any(np.diag(a) != 0):
                raise GraphValidationError(f"graph {k} is not hollow")
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "graphs", tuple(frozen))
        if self.vertex_ids is None:
            object.__setattr__(self, "vertex_ids", tuple(str(i) for i in range(1, n + 1)))
        else:
            ids = tuple(str(v) for v in self.vertex_ids)
            if len(ids) != n:
                raise GraphValidationError(f"{len(ids)} vertex ids for {n} vertices")
            object.__setattr__(self, "vertex_ids", ids)

    @property
    def m(self):
        return len(self.graphs)

    @property
    def n(self):
        return self.graphs[0].shape[0]

    def stacked(self):
        return np.stack(self.graphs)

    def subset(self, keep):
        keep = np.asarray(keep, dtype=bool)
        return GraphCollection(
            graphs=tuple(a[np.ix_(keep, keep)] for a in self.graphs),
            vertex_ids=tuple(v for v, k in zip(self.vertex_ids, keep) if k),
        )


def _clean_matrix(a, label, symmetrize=False):
    """Symmetry within SYMMETRY_TOL is snapped to exact symmetry; beyond it is an error."""
    if np.isnan(a).any():
        raise GraphValidationError(f"{label}: NaN entries")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphValidationError(f"{label}: not square, shape {a.shape}")
    if symmetrize:
        a = np.maximum(a, a.T)
    gap = np.max(np.abs(a - a.T)) if a.size else 0.0
    if gap > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(np.abs(a - a.T)), a.shape)
        raise GraphValidationError(f"{label}: asymmetric at ({i + 1},{j + 1}), gap {gap:.3g}")
    a = (a + a.T) / 2
    if np.any(np.diag(a) != 0):
        logger.warning(f"{label}: nonzero diagonal set to 0")
        np.fill_diagonal(a, 0.0)
    return a


def _vertex_sort_key(v):
    try:
        return (0, int(v), v)
    except ValueError:
        return (1, 0, v)


def _read_edge_list(path):
    frame = pd.read_csv(path, sep=r"\s+", header=None, dtype=str, comment="#")
    if frame.shape[1] < 2:
        raise GraphValidationError(f"{path.name}: edge list needs two vertex columns")
    weights = frame[2].astype(float) if frame.shape[1] > 2 else pd.Series(1.0, index=frame.index)
    return list(zip(frame[0], frame[1], weights))


def load_matrix(path, format=MatrixFormat.DENSE_CSV):
    path = Path(path)
    format = MatrixFormat(format)
    if format is MatrixFormat.DENSE_CSV:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if format is MatrixFormat.JSON_TENSOR:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        data = payload["data"] if isinstance(payload, dict) else payload
        return np.asarray(data, dtype=float)
    raise GraphValidationError("edge lists are loaded through load_collection")


def load_collection(dir_path, format=MatrixFormat.DENSE_CSV, symmetrize=False):
    """Load every matrix file of one format in a directory, sorted by file name."""
    dir_path = Path(dir_path)
    format = MatrixFormat(format)
    if format is MatrixFormat.DENSE_CSV:
        files = sorted(p for p in dir_path.iterdir() if p.suffix == ".csv")
    elif format is MatrixFormat.EDGE_LIST:
        files = sorted(p for p in dir_path.iterdir() if p.suffix in EDGE_LIST_SUFFIXES)
    else:
        raise GraphValidationError("json-tensor files hold Omnibus weights, not graphs")
    if not files:
        raise GraphValidationError(f"no {format.value} files in {dir_path}")

    if format is MatrixFormat.DENSE_CSV:
        graphs = [_clean_matrix(load_matrix(p), p.name, symmetrize) for p in files]
        shapes = {g.shape for g in graphs}
        if len(shapes) > 1:
            raise GraphValidationError(f"dimension mismatch across files: {sorted(shapes)}")
        collection = GraphCollection(graphs=tuple(graphs))
    else:
        edge_lists = [_read_edge_list(p) for p in files]
        vertices = sorted({str(v) for edges in edge_lists for e in edges for v in e[:2]}, key=_vertex_sort_key)
        index = {v: i for i, v in enumerate(vertices)}
        graphs = []
        for p, edges in zip(files, edge_lists):
            a = np.zeros((len(vertices), len(vertices)))
            for u, v, w in edges:
                if u == v:
                    logger.warning(f"{p.name}: self loop on {u} dropped")
                    continue
                i, j = index[str(u)], index[str(v)]
                a[i, j] = a[j, i] = max(a[i, j], float(w))
            graphs.append(_clean_matrix(a, p.name))
        collection = GraphCollection(graphs=tuple(graphs), vertex_ids=tuple(vertices))
    logger.info(f"loaded {collection.m} graphs on {collection.n} vertices from {dir_path}")
    return collection


def _drop_pass(stacked, keep, require_all):
    deg = (stacked[:, keep][:, :, keep] != 0).sum(axis=2)
    if require_all:
        alive = (deg > 0).all(axis=0)
    else:
        alive = (deg > 0).any(axis=0)
    new_keep = keep.copy()
    new_keep[np.flatnonzero(keep)[~alive]] = False
    return new_keep


def preprocess(c, opts):
    stacked = c.stacked()
    if opts.binarize:
        stacked = (stacked != 0).astype(float)
    if opts.symmetrize:
        stacked = np.maximum(stacked, stacked.transpose(0, 2, 1))
    keep = np.ones(c.n, dtype=bool)
    if opts.intersect_vertices:
        # removals lower other degrees, so repeat until nothing changes
        while True:
            new_keep = _drop_pass(stacked, keep, require_all=True)
            if np.array_equal(new_keep, keep):
                break
            keep = new_keep
    if opts.drop_isolated:
        keep = _drop_pass(stacked, keep, require_all=False)
    if not keep.any():
        raise GraphValidationError("preprocessing removed every vertex")
    if not keep.all():
        logger.info(f"preprocess kept {int(keep.sum())} of {c.n} vertices")
    result = GraphCollection(graphs=tuple(stacked), vertex_ids=c.vertex_ids)
    return result.subset(keep) if not keep.all() else result


def save_matrix(x, path, format=MatrixFormat.DENSE_CSV, is_womni=None):
    path = Path(path)
    format = MatrixFormat(format)
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise GraphValidationError(f"refusing to save non-finite values to {path.name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if format is MatrixFormat.DENSE_CSV:
        np.savetxt(path, np.atleast_2d(x), fmt="%.17g", delimiter=",")
    elif format is MatrixFormat.JSON_TENSOR:
        payload = {"format": format.value, "axes": ["k", "l", "q"], "shape": list(x.shape), "data": x.tolist()}
        if is_womni is not None:
            payload["is_womni"] = bool(is_womni)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)
    else:
        rows, cols = np.nonzero(np.triu(x, 1))
        lines = [f"{i + 1} {j + 1} {x[i, j]!r}" for i, j in zip(rows, cols)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return MatrixFile(path=path, format=format, shape=tuple(x.shape))


def save_collection(c, dir_path, prefix="graph"):
    dir_path = Path(dir_path)
    width = len(str(c.m))
    return [save_matrix(a, dir_path / f"{prefix}_{k:0{width}d}.csv") for k, a in enumerate(c.graphs, start=1)]
