"""Index directories: a verbatim graph copy, a JSON header and one ``.npz``.

Layout of ``DIR``::

    graph.tsv      the triple file the indexes were built from
    header.json    {"format": "eteq-index", "version": 1, depth, bloom_fpr,
                    n_nodes, n_edges, graph_sha256}
    index.npz      neighbourhood postings (flattened) and packed path filters

Postings are stored as parallel arrays ``post_label``, ``post_level`` and
``post_ptr`` (CSR offsets into ``post_nodes``/``post_cards``).  Path filters
are stored exactly as held in memory (``path_m``, ``path_k``,
``path_offsets``, ``path_items``, ``path_bits``), so a reload is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil

import numpy as np

from .graph import DataGraph, EteqError, load_graph
from .neighbourhood import InvertedNeighbourhoodIndex
from .pathindex import PathIndex

FORMAT = "eteq-index"
VERSION = 1


class IndexFormatError(EteqError):
    pass


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _flatten_postings(idx: InvertedNeighbourhoodIndex) -> dict[str, np.ndarray]:
    keys = sorted(idx.postings)
    ptr = [0]
    nodes, cards = [], []
    for key in keys:
        nd, cd = idx.postings[key]
        nodes.append(nd)
        cards.append(cd)
        ptr.append(ptr[-1] + nd.size)
    cat = lambda xs: np.concatenate(xs).astype(np.int64) if xs else np.zeros(0, dtype=np.int64)  # noqa: E731
    return {
        "post_label": np.array([k[0] for k in keys], dtype=np.int64),
        "post_level": np.array([k[1] for k in keys], dtype=np.int64),
        "post_ptr": np.array(ptr, dtype=np.int64),
        "post_nodes": cat(nodes),
        "post_cards": cat(cards),
    }


def save_index(out_dir: str, graph_path: str, g: DataGraph, nidx: InvertedNeighbourhoodIndex, pidx: PathIndex) -> None:
    if nidx.depth != pidx.depth:
        raise EteqError("neighbourhood and path index depths differ")
    os.makedirs(out_dir, exist_ok=True)
    target = os.path.join(out_dir, "graph.tsv")
    if os.path.abspath(graph_path) != os.path.abspath(target):
        shutil.copyfile(graph_path, target)
    header = {
        "format": FORMAT,
        "version": VERSION,
        "depth": nidx.depth,
        "bloom_fpr": pidx.fpr,
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "graph_sha256": file_sha256(target),
    }
    arrays = _flatten_postings(nidx)
    arrays.update(
        path_m=pidx.m, path_k=pidx.k, path_offsets=pidx.offsets, path_items=pidx.n_items, path_bits=pidx.bits
    )
    np.savez_compressed(os.path.join(out_dir, "index.npz"), **arrays)
    with open(os.path.join(out_dir, "header.json"), "w", encoding="utf-8") as f:
        json.dump(header, f, indent=2, sort_keys=True)
        f.write("\n")


def load_index(in_dir: str) -> tuple[DataGraph, InvertedNeighbourhoodIndex, PathIndex, dict]:
    try:
        with open(os.path.join(in_dir, "header.json"), encoding="utf-8") as f:
            header = json.load(f)
    except (OSError, ValueError) as exc:
        raise IndexFormatError(f"unreadable index header in {in_dir}: {exc}") from exc
    if header.get("format") != FORMAT:
        raise IndexFormatError(f"{in_dir} is not an index directory")
    if header.get("version") != VERSION:
        raise IndexFormatError(f"unsupported index version {header.get('version')}")
    graph_path = os.path.join(in_dir, "graph.tsv")
    if file_sha256(graph_path) != header["graph_sha256"]:
        raise IndexFormatError("graph file does not match the index header")
    g = load_graph(graph_path)
    if (g.n_nodes, g.n_edges) != (header["n_nodes"], header["n_edges"]):
        raise IndexFormatError("graph size does not match the index header")
    with np.load(os.path.join(in_dir, "index.npz")) as z:
        ptr = z["post_ptr"]
        nodes, cards = z["post_nodes"], z["post_cards"]
        postings = {
            (int(l), int(k)): (nodes[ptr[i] : ptr[i + 1]].copy(), cards[ptr[i] : ptr[i + 1]].copy())
            for i, (l, k) in enumerate(zip(z["post_label"], z["post_level"]))
        }
        nidx = InvertedNeighbourhoodIndex(header["depth"], g.n_nodes, postings)
        pidx = PathIndex(
            header["depth"], header["bloom_fpr"], z["path_m"], z["path_k"], z["path_offsets"], z["path_bits"], z["path_items"]
        )
    return g, nidx, pidx, header


def is_index_dir(path: str) -> bool:
    return os.path.isdir(path) and os.path.exists(os.path.join(path, "header.json"))
