"""Per-node Bloom filters over directed label paths, and path-based filtering.

Path keys look like ``2P+1-2``: a walk count, ``P``, then one signed token per
step (``+`` outgoing, ``-`` incoming) naming the edge label.  Inside the index
labels are written as their integer ids, which keeps the encoding injective.

For a label sequence walked ``c`` times from a node, the keys ``1P..`` through
``cP..`` are all inserted, so "at least r walks" is one membership test.

Hashing: the label-sequence part of a key is hashed with BLAKE2b-128 and split
into two 64-bit words ``a, b``; for count ``c`` the key hashes are
``h1 = mix64(a ^ c*G1)`` and ``h2 = mix64(b ^ c*G2) | 1`` (``mix64`` is the
SplitMix64 finalizer).  Bit ``j`` of a key is ``(h1 + j*h2) mod m`` in
wrapping 64-bit arithmetic.  All of this is stable across runs and platforms.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from itertools import combinations
from typing import Sequence

import numpy as np

from .graph import WILDCARD, DataGraph, EteqError
from .query import QueryGraph

DEFAULT_FPR = 0.01
_G1 = np.uint64(0x9E3779B97F4A7C15)
_G2 = np.uint64(0xC2B2AE3D27D4EB4F)
_LN2 = math.log(2.0)


def encode_path(count: int, steps: Sequence[tuple[str, str]]) -> str:
    """``(2, [("+", "1"), ("-", "2")]) -> "2P+1-2"``."""
    if count < 1:
        raise EteqError("path count must be >= 1")
    if not steps:
        raise EteqError("a path needs at least one step")
    parts = [f"{count}P"]
    for direction, label in steps:
        if direction not in ("+", "-"):
            raise EteqError(f"bad direction {direction!r}")
        label = str(label)
        if not label or "+" in label or "-" in label:
            raise EteqError(f"label {label!r} cannot be encoded unambiguously")
        parts.append(direction + label)
    return "".join(parts)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def seq_hash(seq: str) -> tuple[int, int]:
    digest = hashlib.blake2b(seq.encode("utf-8"), digest_size=16).digest()
    return int.from_bytes(digest[:8], "little"), int.from_bytes(digest[8:], "little")


def _count_hashes(a: np.ndarray, b: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = counts.astype(np.uint64)
    h1 = _mix64(a.astype(np.uint64) ^ (c * _G1))
    h2 = _mix64(b.astype(np.uint64) ^ (c * _G2)) | np.uint64(1)
    return h1, h2


def key_hashes(key: str) -> tuple[int, int]:
    count, sep, seq = key.partition("P")
    if not sep or not count.isdigit():
        raise EteqError(f"malformed path key {key!r}")
    a, b = seq_hash(seq)
    h1, h2 = _count_hashes(np.array([a], np.uint64), np.array([b], np.uint64), np.array([int(count)]))
    return int(h1[0]), int(h2[0])


def optimal_parameters(n_items: int, p: float) -> tuple[int, int]:
    """``m = ceil(n ln(1/p) / ln^2 2)`` bits and ``k = round(ln2 * m / n)`` hashes."""
    if not 0 < p < 1:
        raise EteqError("false-positive rate must be in (0, 1)")
    if n_items <= 0:
        return 0, 0
    m = math.ceil(n_items * -math.log(p) / _LN2**2)
    k = max(1, round(_LN2 * m / n_items))
    return m, k


def _bit_positions(h1: np.ndarray, h2: np.ndarray, j: int, m) -> np.ndarray:
    return (h1 + np.uint64(j) * h2) % np.asarray(m, dtype=np.uint64)


class PathBloomFilter:
    """A single Bloom filter; ``bits`` is little-endian packed, ``m`` bits long."""

    def __init__(self, m: int, k: int, n_items: int = 0, fpr: float = DEFAULT_FPR, bits: np.ndarray | None = None):
        self.m = int(m)
        self.k = int(k)
        self.n_items = n_items
        self.fpr = fpr
        nbytes = (self.m + 7) // 8
        self.bits = np.zeros(nbytes, dtype=np.uint8) if bits is None else np.asarray(bits, dtype=np.uint8)
        if self.bits.size != nbytes:
            raise EteqError("bit array size does not match m")

    @classmethod
    def with_capacity(cls, n_items: int, p: float = DEFAULT_FPR) -> "PathBloomFilter":
        m, k = optimal_parameters(n_items, p)
        return cls(m, k, n_items, p)

    def add_hashed(self, h1: np.ndarray, h2: np.ndarray) -> None:
        if self.m == 0:
            if len(h1):
                raise EteqError("cannot insert into a zero-size filter")
            return
        for j in range(self.k):
            pos = _bit_positions(h1, h2, j, self.m).astype(np.int64)
            np.bitwise_or.at(self.bits, pos >> 3, (1 << (pos & 7)).astype(np.uint8))

    def contains_hashed(self, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        h1 = np.asarray(h1, dtype=np.uint64)
        h2 = np.asarray(h2, dtype=np.uint64)
        if self.m == 0:
            return np.zeros(h1.shape, dtype=bool)
        ok = np.ones(h1.shape, dtype=bool)
        for j in range(self.k):
            pos = _bit_positions(h1, h2, j, self.m).astype(np.int64)
            ok &= ((self.bits[pos >> 3] >> (pos & 7)) & 1).astype(bool)
        return ok

    def add(self, key: str) -> None:
        h1, h2 = key_hashes(key)
        self.add_hashed(np.array([h1], np.uint64), np.array([h2], np.uint64))

    def __contains__(self, key: str) -> bool:
        h1, h2 = key_hashes(key)
        return bool(self.contains_hashed(np.array([h1], np.uint64), np.array([h2], np.uint64))[0])


# ---------------------------------------------------------------------------
# walk enumeration

def _half_edges(n_nodes: int, edges) -> list[list[tuple[int, int, int, int]]]:
    """Per node: ``(edge_id, direction, label, other_end)``; direction 0 is ``+``."""
    out: list[list[tuple[int, int, int, int]]] = [[] for _ in range(n_nodes)]
    for e, (s, d, l) in enumerate(edges):
        out[s].append((e, 0, l, d))
        if s != d:
            out[d].append((e, 1, l, s))
    return out


def _token(direction: int, label: int) -> str:
    return ("+" if direction == 0 else "-") + str(label)


def _walks(half: list[list[tuple[int, int, int, int]]], n: int, d: int):
    """Yield ``(edge_ids, seq_string)`` for walks of length 1..d from ``n``.

    A walk never leaves through the edge it just arrived on.  Walks through a
    wildcard edge are skipped.
    """
    stack = [(n, -1, (), "")]
    while stack:
        node, last, eids, seq = stack.pop()
        for e, direction, label, other in half[node]:
            if e == last or label == WILDCARD:
                continue
            neids = eids + (e,)
            nseq = seq + _token(direction, label)
            yield neids, nseq
            if len(neids) < d:
                stack.append((other, e, neids, nseq))


def node_path_counts(g: DataGraph, n: int, d: int) -> Counter:
    half = _half_edges(g.n_nodes, g.edges())
    return Counter(seq for _, seq in _walks(half, n, d))


def _keys_from_counts(counts: Counter) -> tuple[np.ndarray, np.ndarray]:
    a_list, b_list, c_list = [], [], []
    for seq in sorted(counts):
        a, b = seq_hash(seq)
        for c in range(1, counts[seq] + 1):
            a_list.append(a)
            b_list.append(b)
            c_list.append(c)
    return _count_hashes(
        np.array(a_list, dtype=np.uint64), np.array(b_list, dtype=np.uint64), np.array(c_list, dtype=np.int64)
    )


def build_path_filter(
    g: DataGraph, n: int, d: int = 3, p: float = DEFAULT_FPR, capacity: int | None = None
) -> PathBloomFilter:
    """Filter of all path keys of node ``n``; sized from the exact key count unless ``capacity`` is given."""
    if d < 1:
        raise EteqError("depth must be >= 1")
    counts = node_path_counts(g, n, d)
    n_keys = sum(counts.values())
    f = PathBloomFilter.with_capacity(capacity if capacity is not None else n_keys, p)
    f.n_items = n_keys
    h1, h2 = _keys_from_counts(counts)
    f.add_hashed(h1, h2)
    return f


def estimated_capacity(avg_degree: float, d: int) -> int:
    """Streaming-mode key budget: twice D^d, the count-prefix keys folded in."""
    return max(1, math.ceil(2 * avg_degree**d))


class PathIndex:
    """All per-node filters packed into one byte array.

    Node ``n`` owns bytes ``offsets[n] : offsets[n] + ceil(m[n] / 8)`` with
    ``k[n]`` hash functions.
    """

    def __init__(self, depth: int, fpr: float, m: np.ndarray, k: np.ndarray, offsets: np.ndarray, bits: np.ndarray, n_items: np.ndarray):
        self.depth = depth
        self.fpr = fpr
        self.m = np.asarray(m, dtype=np.int64)
        self.k = np.asarray(k, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.n_items = np.asarray(n_items, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return int(self.m.size)

    def filter(self, n: int) -> PathBloomFilter:
        nbytes = (int(self.m[n]) + 7) // 8
        start = int(self.offsets[n])
        return PathBloomFilter(self.m[n], self.k[n], int(self.n_items[n]), self.fpr, self.bits[start : start + nbytes].copy())

    def contains_all_nodes(self, h1: int, h2: int, nodes: np.ndarray | None = None) -> np.ndarray:
        """Membership of one key in the filters of ``nodes`` (default: all)."""
        if nodes is None:
            nodes = np.arange(self.n_nodes)
        m = self.m[nodes]
        k = self.k[nodes]
        live = m > 0
        ok = live.copy()
        if not live.any():
            return ok
        idx = np.nonzero(live)[0]
        mm = m[idx].astype(np.uint64)
        base = self.offsets[nodes][idx] * 8
        a = np.full(idx.size, h1, dtype=np.uint64)
        b = np.full(idx.size, h2, dtype=np.uint64)
        sub = np.ones(idx.size, dtype=bool)
        for j in range(int(k[idx].max())):
            pos = base + _bit_positions(a, b, j, mm).astype(np.int64)
            hit = ((self.bits[pos >> 3] >> (pos & 7)) & 1).astype(bool)
            sub &= hit | (k[idx] <= j)
        ok[idx] = sub
        return ok

    def contains(self, n: int, key: str) -> bool:
        h1, h2 = key_hashes(key)
        return bool(self.contains_all_nodes(h1, h2, np.array([n]))[0])


def _half_edge_csr(g: DataGraph):
    src, dst, lab = g.edge_arrays()
    e = np.arange(src.size, dtype=np.int64)
    loop = src == dst
    tail = np.concatenate([src, dst[~loop]])
    head = np.concatenate([dst, src[~loop]])
    tok = np.concatenate([2 * lab, 2 * lab[~loop] + 1])
    eid = np.concatenate([e, e[~loop]])
    order = np.lexsort((eid, tail))
    tail, head, tok, eid = tail[order], head[order], tok[order], eid[order]
    ptr = np.zeros(g.n_nodes + 1, dtype=np.int64)
    np.add.at(ptr, tail + 1, 1)
    ptr = np.cumsum(ptr)
    return ptr, tail, head, tok, eid


def _expand(ptr, heads_of_walk):
    """For each walk, the index range of out half-edges at its head."""
    starts = ptr[heads_of_walk]
    counts = ptr[heads_of_walk + 1] - starts
    rep = np.repeat(np.arange(heads_of_walk.size), counts)
    within = np.arange(rep.size) - np.repeat(np.cumsum(counts) - counts, counts)
    return rep, starts[rep] + within


def _decode_seq(code: int, length: int, n_tokens: int) -> str:
    toks = []
    for _ in range(length):
        code, t = divmod(code, n_tokens)
        toks.append(t)
    return "".join(_token(t & 1, t >> 1) for t in reversed(toks))


def build_path_index(
    g: DataGraph,
    d: int = 3,
    p: float = DEFAULT_FPR,
    sizing: str = "exact",
    chunk_nodes: int = 500,
) -> PathIndex:
    """Vectorized build of every node's filter.

    ``sizing="exact"`` sizes each filter from its own key count;
    ``sizing="estimate"`` uses :func:`estimated_capacity` for every node.
    Bits are identical to :func:`build_path_filter` on the same node.
    """
    if d < 1:
        raise EteqError("depth must be >= 1")
    if sizing not in ("exact", "estimate"):
        raise EteqError(f"unknown sizing {sizing!r}")
    n = g.n_nodes
    n_tokens = max(2 * len(g.labels), 2)
    if n_tokens ** d > 2**62 // max(n, 1):
        raise EteqError("label alphabet too large for packed path codes at this depth")
    ptr, tail, head, tok, eid = _half_edge_csr(g)
    fixed_cap = estimated_capacity(2.0 * g.n_edges / n if n else 0.0, d) if sizing == "estimate" else None
    seq_cache: dict[tuple[int, int], tuple[int, int]] = {}

    m_all = np.zeros(n, dtype=np.int64)
    k_all = np.zeros(n, dtype=np.int64)
    items_all = np.zeros(n, dtype=np.int64)
    offsets = np.zeros(n, dtype=np.int64)
    chunks: list[np.ndarray] = []
    byte_cursor = 0

    for lo in range(0, n, chunk_nodes):
        hi = min(n, lo + chunk_nodes)
        # level-1 walks are the half-edges leaving nodes in [lo, hi)
        cur = np.arange(ptr[lo], ptr[hi], dtype=np.int64)
        start = tail[cur]
        code = tok[cur].astype(np.int64)
        groups = []  # (start, length, code, count)
        for length in range(1, d + 1):
            if length > 1:
                rep, nxt = _expand(ptr, head[cur])
                keep = eid[nxt] != eid[cur[rep]]
                rep, nxt = rep[keep], nxt[keep]
                start = start[rep]
                code = code[rep] * n_tokens + tok[nxt]
                cur = nxt
            if cur.size == 0:
                break
            combined = (start - lo) * (n_tokens**length) + code
            uq, cnt = np.unique(combined, return_counts=True)
            groups.append((uq // (n_tokens**length) + lo, length, uq % (n_tokens**length), cnt))

        if groups:
            g_start = np.concatenate([x[0] for x in groups])
            g_len = np.concatenate([np.full(x[0].size, x[1]) for x in groups])
            g_code = np.concatenate([x[2] for x in groups])
            g_cnt = np.concatenate([x[3] for x in groups])
        else:
            g_start = g_len = g_code = g_cnt = np.zeros(0, dtype=np.int64)
        seq_a = np.zeros(g_code.size, dtype=np.uint64)
        seq_b = np.zeros(g_code.size, dtype=np.uint64)
        for length in np.unique(g_len).tolist():
            sel = np.nonzero(g_len == length)[0]
            uq, inv = np.unique(g_code[sel], return_inverse=True)
            ha = np.empty(uq.size, dtype=np.uint64)
            hb = np.empty(uq.size, dtype=np.uint64)
            for i, c in enumerate(uq.tolist()):
                h = seq_cache.get((length, c))
                if h is None:
                    h = seq_cache[(length, c)] = seq_hash(_decode_seq(c, length, n_tokens))
                ha[i], hb[i] = h
            seq_a[sel] = ha[inv]
            seq_b[sel] = hb[inv]

        per_node = np.bincount(g_start - lo, weights=g_cnt, minlength=hi - lo).astype(np.int64) if g_cnt.size else np.zeros(hi - lo, np.int64)
        for j in range(hi - lo):
            cap = fixed_cap if fixed_cap is not None else int(per_node[j])
            m, k = optimal_parameters(cap, p) if per_node[j] > 0 or fixed_cap else (0, 0)
            m_all[lo + j], k_all[lo + j] = m, k
        items_all[lo:hi] = per_node
        nbytes = (m_all[lo:hi] + 7) // 8
        offsets[lo:hi] = byte_cursor + np.cumsum(nbytes) - nbytes
        chunk_bits = np.zeros(int(nbytes.sum()) * 8, dtype=bool)

        if g_cnt.size:
            # one key per count value 1..c
            rep = np.repeat(np.arange(g_cnt.size), g_cnt)
            cval = np.arange(rep.size) - np.repeat(np.cumsum(g_cnt) - g_cnt, g_cnt) + 1
            h1, h2 = _count_hashes(seq_a[rep], seq_b[rep], cval)
            owner = g_start[rep]
            mm = m_all[owner].astype(np.uint64)
            kk = k_all[owner]
            base = (offsets[owner] - byte_cursor) * 8
            for j in range(int(kk.max())):
                sel = kk > j
                pos = base[sel] + _bit_positions(h1[sel], h2[sel], j, mm[sel]).astype(np.int64)
                chunk_bits[pos] = True
        chunks.append(np.packbits(chunk_bits, bitorder="little"))
        byte_cursor += int(nbytes.sum())

    bits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return PathIndex(d, p, m_all, k_all, offsets, bits, items_all)


# ---------------------------------------------------------------------------
# query side

class QueryPaths:
    """Walks of length 1..d from one query node, with the query edges each walk uses."""

    def __init__(self, q: QueryGraph, n: int, d: int):
        self.node = n
        self.depth = d
        self.walks = list(_walks(_half_edges(q.n_nodes, q.edges), n, d))
        self.edges_used = sorted({e for eids, _ in self.walks for e in eids})

    def keys(self, skip: frozenset = frozenset()) -> list[str]:
        """Keys required when the edges in ``skip`` may be substituted."""
        counts = Counter(seq for eids, seq in self.walks if not skip.intersection(eids))
        return [f"{c}P{seq}" for seq, c in sorted(counts.items())]

    def skip_sets(self, limit: int):
        """Edge subsets of size 0..limit that change the key set, smallest first."""
        for size in range(0, min(limit, len(self.edges_used)) + 1):
            for sub in combinations(self.edges_used, size):
                yield frozenset(sub)


def query_paths(q: QueryGraph, n: int, d: int = 3) -> QueryPaths:
    return QueryPaths(q, n, d)


def path_distance_lower_bound(f: PathBloomFilter, qp: QueryPaths, limit: int | None = None) -> int:
    """Fewest query edges whose substitution explains every key missing from ``f``.

    Each missing key must be covered by at least one substituted edge on one
    of its walks, so the result never exceeds the true substitution count of
    an embedding.  The search stops after ``limit`` edges and returns
    ``limit + 1`` if nothing smaller works.
    """
    cap = len(qp.edges_used) if limit is None else limit
    present: dict[str, bool] = {}
    for skip in qp.skip_sets(cap):
        ok = True
        for key in qp.keys(skip):
            hit = present.get(key)
            if hit is None:
                hit = present[key] = key in f
            if not hit:
                ok = False
                break
        if ok:
            return len(skip)
    return cap + 1


def path_candidates_for_node(
    index: PathIndex, q: QueryGraph, n: int, t: int, nodes: np.ndarray | None = None
) -> np.ndarray:
    """Data nodes (sorted) whose path lower bound for query node ``n`` is at most ``t``."""
    qp = QueryPaths(q, n, index.depth)
    universe = np.arange(index.n_nodes) if nodes is None else np.asarray(nodes, dtype=np.int64)
    accepted = np.zeros(universe.size, dtype=bool)
    cache: dict[str, np.ndarray] = {}
    for skip in qp.skip_sets(t):
        pending = ~accepted
        if not pending.any():
            break
        ok = pending.copy()
        for key in qp.keys(skip):
            hit = cache.get(key)
            if hit is None:
                hit = cache[key] = index.contains_all_nodes(*key_hashes(key), universe)
            ok &= hit
            if not ok.any():
                break
        accepted |= ok
    return universe[accepted]


def path_candidates(index: PathIndex, q: QueryGraph, t: int, query_nodes=None) -> dict[int, np.ndarray]:
    if query_nodes is None:
        query_nodes = range(q.n_nodes)
    return {n: path_candidates_for_node(index, q, n, t) for n in query_nodes}


def combine_filters(neigh: dict, path: dict) -> dict:
    """Per-query-node intersection of two candidate maps."""
    out = {}
    for n in neigh.keys() & path.keys():
        out[n] = np.intersect1d(np.asarray(list(neigh[n]) if isinstance(neigh[n], (set, frozenset)) else neigh[n], dtype=np.int64),
                                np.asarray(list(path[n]) if isinstance(path[n], (set, frozenset)) else path[n], dtype=np.int64))
    return out
