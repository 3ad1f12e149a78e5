"""Undirected attributed-graph containers and loaders.

Topology is stored in compressed sparse row form (``CsrGraph``): adjacency
rows are sorted, deduplicated and symmetric. Node features are plain dense
2-D float64 arrays, labels are 1-D int64 arrays; ``as_features`` /
``as_labels`` validate them at module boundaries. Everything is immutable
after construction (array buffers are marked read-only) so instances can be
shared freely across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlreadyAugmentedError, EdgeListParseError, NodeIdRangeError

# Node ids are packed into a single int64 key (u * n + v) during dedup.
_MAX_NODES = 2**31


@dataclass(frozen=True)
class CsrGraph:
    """Symmetric CSR adjacency with optional self-loop augmentation.

    ``n_edges`` counts undirected edges excluding self-loops, so
    ``len(col_indices)`` is ``2 * n_edges`` plus ``n_nodes`` when
    ``self_loops_added`` is set.
    """

    n_nodes: int
    n_edges: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    self_loops_added: bool = False

    def __post_init__(self):
        self.row_offsets.flags.writeable = False
        self.col_indices.flags.writeable = False

    @property
    def degrees(self) -> np.ndarray:
        """Per-node degree; a self-loop contributes 1."""
        return np.diff(self.row_offsets)

    def neighbors(self, u: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[u] : self.row_offsets[u + 1]]

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        offs, cols = self.row_offsets, self.col_indices
        if offs.shape != (self.n_nodes + 1,) or offs[0] != 0:
            raise ValueError("row_offsets must have length n_nodes+1 and start at 0")
        if np.any(np.diff(offs) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        expected_len = 2 * self.n_edges + (self.n_nodes if self.self_loops_added else 0)
        if offs[-1] != len(cols) or len(cols) != expected_len:
            raise ValueError("col_indices length inconsistent with edge count")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_nodes):
            raise ValueError("column index out of range")
        for u in range(self.n_nodes):
            row = cols[offs[u] : offs[u + 1]]
            if np.any(np.diff(row) <= 0):
                raise ValueError(f"row {u} not strictly sorted / has duplicates")
            has_loop = bool(np.any(row == u))
            if has_loop != self.self_loops_added:
                raise ValueError(f"self-loop state of row {u} inconsistent with flag")
        # symmetry: (u,v) present iff (v,u) present
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees)
        fwd = set(zip(rows.tolist(), cols.tolist()))
        if any((v, u) not in fwd for u, v in fwd):
            raise ValueError("adjacency is not symmetric")


def _csr_from_directed(n_nodes: int, src: np.ndarray, dst: np.ndarray,
                       self_loops_added: bool = False) -> CsrGraph:
    """Build a CsrGraph from already-symmetric directed pairs (dedup + sort)."""
    if n_nodes >= _MAX_NODES:
        raise ValueError(f"n_nodes must be < {_MAX_NODES}")
    keys = src.astype(np.int64) * n_nodes + dst.astype(np.int64)
    keys = np.unique(keys)
    src = keys // n_nodes
    dst = keys % n_nodes
    row_offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n_nodes), out=row_offsets[1:])
    n_loops = int(np.count_nonzero(src == dst))
    return CsrGraph(
        n_nodes=n_nodes,
        n_edges=(len(keys) - n_loops) // 2,
        row_offsets=row_offsets,
        col_indices=dst,
        self_loops_added=self_loops_added,
    )


def from_edge_array(n_nodes: int, u: np.ndarray, v: np.ndarray) -> CsrGraph:
    """Symmetrize, deduplicate and sort raw edge pairs; drops self-loops."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n_nodes):
        raise NodeIdRangeError("node id outside [0, n_nodes)")
    keep = u != v
    u, v = u[keep], v[keep]
    return _csr_from_directed(n_nodes, np.concatenate([u, v]), np.concatenate([v, u]))


def load_edge_list(path, n_nodes: int) -> CsrGraph:
    """Read whitespace-separated "u v" pairs (0-based ids) into a CsrGraph.

    The result is symmetric and deduplicated, with explicit self-loop lines
    dropped. Isolated nodes are kept. Malformed lines raise
    ``EdgeListParseError`` with the 1-based line number; out-of-range ids
    raise ``NodeIdRangeError``.
    """
    us, vs = [], []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise EdgeListParseError(path, line_no, f"expected 2 tokens, got {len(tokens)}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListParseError(path, line_no, f"non-integer token in {tokens!r}") from None
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise NodeIdRangeError(f"{path}:{line_no}: node id ({u}, {v}) outside [0, {n_nodes})")
            us.append(u)
            vs.append(v)
    return from_edge_array(n_nodes, np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64))


def save_edge_list(g: CsrGraph, path) -> None:
    """Write one "u v" line per undirected edge (u < v)."""
    if g.self_loops_added:
        raise ValueError("serialize the un-augmented graph")
    rows = np.repeat(np.arange(g.n_nodes, dtype=np.int64), g.degrees)
    keep = rows < g.col_indices
    pairs = np.stack([rows[keep], g.col_indices[keep]], axis=1)
    with open(path, "w") as fh:
        for u, v in pairs:
            fh.write(f"{u} {v}\n")


def augment_self_loops(g: CsrGraph) -> CsrGraph:
    """Return a copy of ``g`` with one self-loop per node (degree + 1)."""
    if g.self_loops_added:
        raise AlreadyAugmentedError("graph already has self-loops")
    n = g.n_nodes
    # insertion point of u in its sorted row = count of neighbors < u
    rows = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    less = g.col_indices < rows
    counts = np.zeros(n, dtype=np.int64)
    np.add.at(counts, rows[less], 1)
    positions = g.row_offsets[:-1] + counts
    new_cols = np.insert(g.col_indices, positions, np.arange(n, dtype=np.int64))
    new_offsets = g.row_offsets + np.arange(n + 1, dtype=np.int64)
    return CsrGraph(n, g.n_edges, new_offsets, new_cols, self_loops_added=True)


def graph_hash(g: CsrGraph) -> str:
    """Stable content hash used by filtered-feature cache headers."""
    h = hashlib.sha256()
    h.update(f"{g.n_nodes}:{g.n_edges}:{int(g.self_loops_added)}".encode())
    h.update(np.ascontiguousarray(g.row_offsets).tobytes())
    h.update(np.ascontiguousarray(g.col_indices).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# synthetic graphs


def rmat_generate(n_nodes: int, edge_factor: float, seed: int,
                  quadrants=(0.45, 0.22, 0.22, 0.11)) -> CsrGraph:
    """Recursive-matrix random graph with ~edge_factor * n_nodes undirected edges.

    Edges are sampled by the usual quadrant recursion, canonicalized,
    deduplicated, and topped up in batches until the target count (capped by
    the number of possible pairs) is met. Deterministic for a given seed.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    if edge_factor <= 0:
        raise ValueError("edge_factor must be positive")
    rng = np.random.default_rng(seed)
    n_bits = max(1, int(np.ceil(np.log2(n_nodes))))
    target = int(round(edge_factor * n_nodes))
    target = min(target, n_nodes * (n_nodes - 1) // 2)
    a, b, c, _ = quadrants
    seen = np.empty(0, dtype=np.int64)   # unique keys in first-sampled order
    for _ in range(200):
        deficit = target - len(seen)
        if deficit <= 0:
            break
        batch = max(1024, int(1.5 * deficit))
        u = np.zeros(batch, dtype=np.int64)
        v = np.zeros(batch, dtype=np.int64)
        for _level in range(n_bits):
            r = rng.random(batch)
            u = (u << 1) | (r >= a + b)
            v = (v << 1) | ((r >= a) & (r < a + b) | (r >= a + b + c))
        ok = (u < n_nodes) & (v < n_nodes) & (u != v)
        u, v = u[ok], v[ok]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = np.concatenate([seen, lo * n_nodes + hi])
        _, first = np.unique(keys, return_index=True)
        seen = keys[np.sort(first)]
    seen = seen[:target]
    return from_edge_array(n_nodes, seen // n_nodes, seen % n_nodes)


def disjoint_cliques(n_cliques: int, clique_size: int) -> CsrGraph:
    """Union of complete graphs; block k holds nodes [k*size, (k+1)*size)."""
    us, vs = [], []
    for k in range(n_cliques):
        base = k * clique_size
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                us.append(base + i)
                vs.append(base + j)
    return from_edge_array(n_cliques * clique_size,
                           np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64))


# ---------------------------------------------------------------------------
# features and labels


def as_features(values) -> np.ndarray:
    """Validate/convert a dense node-feature matrix: 2-D, float64, finite."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature matrix contains NaN or Inf")
    return x


def as_labels(values, n_clusters: int | None = None) -> np.ndarray:
    """Validate/convert a label vector: 1-D, int64, in [0, K)."""
    y = np.asarray(values, dtype=np.int64).reshape(-1)
    if len(y) and y.min() < 0:
        raise ValueError("labels must be non-negative")
    if n_clusters is not None and len(y) and y.max() >= n_clusters:
        raise ValueError(f"label {y.max()} >= n_clusters {n_clusters}")
    return y


def load_features(path) -> np.ndarray:
    """Dense matrix, one row per node; whitespace- or comma-separated."""
    path = Path(path)
    delimiter = None
    with open(path) as fh:
        for line in fh:
            if line.strip():
                if "," in line:
                    delimiter = ","
                break
    return as_features(np.loadtxt(path, delimiter=delimiter, ndmin=2))


def save_features(x: np.ndarray, path) -> None:
    np.savetxt(path, as_features(x), fmt="%.17g")


def load_labels(path) -> np.ndarray:
    return as_labels(np.loadtxt(path, dtype=np.int64, ndmin=1))


def save_labels(y: np.ndarray, path) -> None:
    np.savetxt(path, as_labels(y), fmt="%d")
