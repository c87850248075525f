"""
Communication topology and the matrix-free consensus operators.

The stacked node vector is an ``(N, n)`` array, one row per node. An edge
vector is a ``(2|E|, n)`` array with one row per directed slot ``(i, j)``.
Slots are grouped by source node, neighbors in increasing order, which is
the row ordering of the block matrix ``A``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform


MAX_REDRAWS = 100


class TopologyError(ValueError):
    """Raised when a graph is invalid or cannot be made connected."""


class Graph:
    """
    Undirected, connected graph with a directed slot index.

    Parameters
    ----------
    n_nodes : int
        Number of nodes ``N``.
    edges : iterable of (int, int)
        Unordered pairs; orientation and order are irrelevant.
    positions : ndarray, optional
        Node coordinates, kept only for reference.
    seed : int, optional
        Seed that produced the graph, if any.

    Raises
    ------
    TopologyError
        On self-loops, duplicate edges, out-of-range nodes or when the graph
        is not connected.
    """

    def __init__(self, n_nodes, edges, positions=None, seed=None):
        if n_nodes < 1:
            raise TopologyError("a graph needs at least one node")
        self.n_nodes = int(n_nodes)
        self.positions = positions
        self.seed = seed

        canon = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise TopologyError(f"self-loop on node {i}")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise TopologyError(f"edge ({i}, {j}) out of range")
            e = (min(i, j), max(i, j))
            if e in canon:
                raise TopologyError(f"duplicate edge {e}")
            canon.add(e)
        self.edges = sorted(canon)

        if not _is_connected(self.n_nodes, self.edges):
            msg = "graph is not connected"
            if seed is not None:
                msg += f" (seed {seed})"
            raise TopologyError(msg)

        nbrs = [[] for _ in range(self.n_nodes)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        self.neighbors = [sorted(ns) for ns in nbrs]
        self.degrees = np.array([len(ns) for ns in self.neighbors], dtype=int)

        src, dst = [], []
        for i, ns in enumerate(self.neighbors):
            src.extend([i] * len(ns))
            dst.extend(ns)
        self.slot_src = np.array(src, dtype=int)
        self.slot_dst = np.array(dst, dtype=int)
        self._slot = {(i, j): s for s, (i, j) in enumerate(zip(src, dst))}
        self.slot_rev = np.array([self._slot[(j, i)] for i, j in zip(src, dst)],
                                 dtype=int)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_slots(self):
        return 2 * len(self.edges)

    @property
    def max_degree(self):
        return int(self.degrees.max()) if self.n_nodes > 1 else 0

    def slot(self, i, j):
        """Index of the directed slot ``(i, j)``."""
        try:
            return self._slot[(i, j)]
        except KeyError:
            raise KeyError(f"({i}, {j}) is not an edge") from None

    def node_slots(self, i):
        """Slot indices ``(i, j)`` for ``j`` in the neighborhood of ``i``."""
        return np.flatnonzero(self.slot_src == i)

    def __repr__(self):
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _is_connected(n_nodes, edges):
    if n_nodes == 1:
        return True
    if not edges:
        return False
    e = np.asarray(edges)
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])),
                     shape=(n_nodes, n_nodes))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def build_random_geometric(n_nodes, radius=0.35, seed=0):
    """
    Random geometric graph in the unit square.

    Nodes are drawn uniformly from ``default_rng(seed)``, and ``i ~ j`` iff
    their distance is at most `radius`. A disconnected draw is retried with
    ``seed + 1``, up to ``MAX_REDRAWS`` redraws; the seed that produced the
    returned graph is stored in ``Graph.seed``. Radii above ``sqrt(2)``
    give the complete graph; a zero radius never connects and ends in a
    `TopologyError`.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    if not radius >= 0:
        raise ValueError("radius must be non-negative")

    s = seed
    for _ in range(MAX_REDRAWS + 1):
        pos = np.random.default_rng(s).uniform(0, 1, size=(n_nodes, 2))
        dist = squareform(pdist(pos))
        ii, jj = np.nonzero(np.triu(dist <= radius, k=1))
        edges = list(zip(ii.tolist(), jj.tolist()))
        if _is_connected(n_nodes, edges):
            return Graph(n_nodes, edges, positions=pos, seed=s)
        s += 1
    raise TopologyError(
        f"no connected geometric graph after {MAX_REDRAWS} redraws "
        f"(final seed {s - 1})")


def path_graph(n_nodes):
    return Graph(n_nodes, [(i, i + 1) for i in range(n_nodes - 1)])


def complete_graph(n_nodes):
    return Graph(n_nodes, [(i, j) for i in range(n_nodes)
                           for j in range(i + 1, n_nodes)])


# ---------------------------------------------------------------------------
# operators

def _as_blocks(v, rows, what):
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or v.shape[0] != rows:
        raise ValueError(f"{what} must have {rows} blocks, got shape {v.shape}")
    return v


def apply_A(g, x):
    """Copy each node block ``x_i`` into every slot ``(i, j)``."""
    x = _as_blocks(x, g.n_nodes, "node vector")
    return x[g.slot_src]


def apply_A_transpose(g, v):
    """Node block ``i`` receives the sum of ``v_ij`` over its neighbors."""
    v = _as_blocks(v, g.n_slots, "edge vector")
    out = np.zeros((g.n_nodes, v.shape[1]))
    np.add.at(out, g.slot_src, v)
    return out


def apply_P(g, v):
    """Swap slots ``(i, j)`` and ``(j, i)``."""
    v = _as_blocks(v, g.n_slots, "edge vector")
    return v[g.slot_rev]


def metropolis_weights(g):
    """
    Metropolis-Hastings mixing matrix.

    ``W_ij = 1 / (1 + max(d_i, d_j))`` on edges and the diagonal absorbs the
    remainder, so that ``W`` is symmetric and doubly stochastic.
    """
    N = g.n_nodes
    W = np.zeros((N, N))
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / (1 + max(g.degrees[i], g.degrees[j]))
    W[np.diag_indices(N)] = 1.0 - W.sum(axis=1)
    return W


def dense_A(g, n=1):
    """Assemble ``A`` explicitly (test and oracle use only)."""
    A = np.zeros((g.n_slots, g.n_nodes))
    A[np.arange(g.n_slots), g.slot_src] = 1.0
    return np.kron(A, np.eye(n))


def dense_P(g, n=1):
    P = np.zeros((g.n_slots, g.n_slots))
    P[np.arange(g.n_slots), g.slot_rev] = 1.0
    return np.kron(P, np.eye(n))


# ---------------------------------------------------------------------------
# edge-list files

def save_edge_list(g, path):
    """Write ``"N |E|"`` followed by one ``"i j"`` line per edge."""
    lines = [f"{g.n_nodes} {g.n_edges}"] + [f"{i} {j}" for i, j in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path):
    """Read a file written by `save_edge_list`, validating connectivity."""
    rows = [ln.split() for ln in Path(path).read_text().splitlines()
            if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise TopologyError("header must be 'N |E|'")
    n_nodes, n_edges = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != n_edges:
        raise TopologyError(f"header announces {n_edges} edges, found "
                            f"{len(body)}")
    edges = []
    for r in body:
        if len(r) != 2:
            raise TopologyError(f"malformed edge line: {' '.join(r)}")
        edges.append((int(r[0]), int(r[1])))
    return Graph(n_nodes, edges)
