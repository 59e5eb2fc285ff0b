"""k-nearest-neighbour graphs on a manifold model, searched with Dijkstra."""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from ._sampling import DEFAULT_SEED, threads


class DisconnectedGraphError(RuntimeError):
    pass


def _edge_lengths(model, a, b):
    if model.analytic_distance:
        return model.distance(a, b)
    return model.segment_length(a, b)


class MetricGraph:
    """Sobol nodes joined to their k nearest neighbours.

    Edge weights are geodesic distances for models with a closed-form
    distance and straight-chart-segment lengths otherwise, so every graph
    path length is an upper bound for the distance between its endpoints.
    """

    def __init__(self, model, size=10_000, k=12, seed=DEFAULT_SEED, nodes=None):
        self.model = model
        self.k = int(k)
        self.nodes = model.sample_points(size, seed) if nodes is None else np.asarray(nodes, float)
        coords, box = model.search_coords(self.nodes)
        self._box = box
        self.tree = cKDTree(coords, boxsize=box)
        _, idx = self.tree.query(coords, self.k + 1, workers=threads())
        rows = np.repeat(np.arange(len(self.nodes)), self.k)
        cols = idx[:, 1:].ravel()
        ij = np.unique(np.stack([np.minimum(rows, cols), np.maximum(rows, cols)], axis=1), axis=0)
        ij = ij[ij[:, 0] != ij[:, 1]]
        self.rows, self.cols = ij[:, 0], ij[:, 1]
        self.lengths = np.asarray(_edge_lengths(model, self.nodes[self.rows], self.nodes[self.cols]))

    def covering_radius(self, probes=2048, seed=DEFAULT_SEED + 7):
        """Largest distance from a probe point to its nearest node (chart terms)."""
        pts = self.model.sample_points(probes, seed)
        coords, _ = self.model.search_coords(pts)
        d, _ = self.tree.query(coords, 1)
        return float(d.max())

    def _augmented(self, extra, weights=None):
        """Sparse adjacency with extra points attached to their k nearest nodes."""
        n = len(self.nodes)
        rows = [self.rows]
        cols = [self.cols]
        w = [self.lengths if weights is None else weights]
        idx = []
        if len(extra):
            coords, _ = self.model.search_coords(extra)
            _, idx = self.tree.query(coords, self.k, workers=threads())
        for e, nbrs in enumerate(idx):
            a = np.repeat(extra[e][None, :], len(nbrs), axis=0)
            rows.append(np.full(len(nbrs), n + e))
            cols.append(nbrs)
            w.append(np.asarray(_edge_lengths(self.model, a, self.nodes[nbrs])))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        w = np.concatenate(w)
        size = n + len(extra)
        mat = coo_matrix((np.maximum(w, 1e-300), (rows, cols)), shape=(size, size)).tocsr()
        return mat

    def shortest_path(self, q0, q1):
        """Graph distance from q0 to q1 and the path unrolled in the chart.

        The unrolled path starts at q0; its last entry is the chart lift of
        q1 that the path reaches, which seeds shooting.
        """
        q0 = np.asarray(q0, float)
        q1 = np.asarray(q1, float)
        extra = np.stack([q0, q1])
        mat = self._augmented(extra)
        n = len(self.nodes)
        dist, pred = dijkstra(mat, directed=False, indices=n, return_predecessors=True)
        if not np.isfinite(dist[n + 1]):
            raise DisconnectedGraphError("q0 and q1 are not connected; increase graph size")
        order = [n + 1]
        while order[-1] != n:
            order.append(int(pred[order[-1]]))
        order.reverse()
        pts = np.concatenate([self.nodes, extra])[order]
        unrolled = [q0]
        for a, b in zip(pts[:-1], pts[1:]):
            unrolled.append(unrolled[-1] + self.model.chart_step(a, b))
        return float(dist[n + 1]), np.array(unrolled)
