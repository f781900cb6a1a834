"""Road graphs: four adjacency constructions, normalization, spatial statistics.

A road network is an undirected graph whose nodes are roads.  Four pairwise
similarity matrices are built from it: reciprocal hop distance, length-weighted
hop distance, historical-pattern similarity (DTW kernel on speed/flow
histories), and inherent-attribute similarity (daily max flow/speed plus
length).  Each raw matrix is symmetric with zero diagonal; graph convolution
consumes the self-loop-augmented symmetric normalization.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .data import TrafficSeries
from .errors import DataError, DegenerateVarianceError

GRAPH_KEYS = ("topological", "weighted", "pattern", "attribute")

# short letters used in combination labels and report files
GRAPH_LETTERS = {"topological": "r", "weighted": "w", "pattern": "p",
                 "attribute": "s"}


@dataclass(frozen=True)
class RoadNetwork:
    """Undirected road connectivity with per-road lengths."""

    lengths: np.ndarray
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.float64)
        object.__setattr__(self, "lengths", lengths)
        if lengths.ndim != 1 or lengths.size == 0:
            raise ValueError("lengths must be a non-empty 1-D array")
        if not np.all(lengths > 0):
            raise ValueError("road lengths must be positive")
        n = lengths.size
        canonical = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-edge on road {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) out of range")
            canonical.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(canonical)))

    @property
    def n(self) -> int:
        return self.lengths.size

    def adjacency_lists(self) -> list[list[int]]:
        neighbors: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            neighbors[a].append(b)
            neighbors[b].append(a)
        return [sorted(adj) for adj in neighbors]


@dataclass(frozen=True)
class ConnectivityWeights:
    """Binary symmetric connection matrix with zero diagonal."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("connectivity matrix must be square")
        if not np.array_equal(m, m.T) or np.any(np.diag(m) != 0):
            raise ValueError("connectivity must be symmetric, zero diagonal")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("connectivity entries must be 0 or 1")

    @property
    def s0(self) -> int:
        return int(self.matrix.sum())

    @classmethod
    def from_network(cls, net: RoadNetwork) -> "ConnectivityWeights":
        m = np.zeros((net.n, net.n))
        for a, b in net.edges:
            m[a, b] = m[b, a] = 1.0
        return cls(m)


# -- shortest paths ------------------------------------------------------------


def shortest_hop_matrix(net: RoadNetwork) -> np.ndarray:
    """All-pairs minimum edge counts; unreachable pairs are +inf."""
    n = net.n
    neighbors = net.adjacency_lists()
    hops = np.full((n, n), np.inf)
    for source in range(n):
        hops[source, source] = 0.0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in neighbors[u]:
                if np.isinf(hops[source, v]):
                    hops[source, v] = hops[source, u] + 1.0
                    queue.append(v)
    return hops


def _min_path_lengths(net: RoadNetwork, source: int,
                      hops_from_source: np.ndarray) -> np.ndarray:
    """Per target: minimum total road length over hop-shortest paths.

    Path length counts every road on the path, endpoints included.
    """
    n = net.n
    neighbors = net.adjacency_lists()
    best = np.full(n, np.inf)
    best[source] = net.lengths[source]
    finite = np.isfinite(hops_from_source)
    order = sorted(np.flatnonzero(finite), key=lambda v: hops_from_source[v])
    for v in order:
        if v == source:
            continue
        upstream = [u for u in neighbors[v]
                    if hops_from_source[u] == hops_from_source[v] - 1]
        best[v] = net.lengths[v] + min(best[u] for u in upstream)
    return best


def build_topological(net: RoadNetwork) -> np.ndarray:
    """Similarity = reciprocal of the hop distance; 0 when unreachable."""
    hops = shortest_hop_matrix(net)
    with np.errstate(divide="ignore"):
        w = np.where(np.isfinite(hops) & (hops > 0), 1.0 / hops, 0.0)
    np.fill_diagonal(w, 0.0)
    return w


def build_weighted_topological(net: RoadNetwork) -> np.ndarray:
    """Similarity = (len_i + len_j) / total length of the hop-shortest path.

    Among equally short (by hops) paths the one of minimum total length is
    used, which makes the ratio well defined; each unordered pair is computed
    once and mirrored, so the matrix is exactly symmetric.
    """
    n = net.n
    hops = shortest_hop_matrix(net)
    w = np.zeros((n, n))
    for i in range(n):
        path_len = _min_path_lengths(net, i, hops[i])
        for j in range(i + 1, n):
            if np.isfinite(path_len[j]):
                w[i, j] = w[j, i] = (
                    (net.lengths[i] + net.lengths[j]) / path_len[j])
    return w


# -- dynamic time warping ------------------------------------------------------


def dtw_distance(a, b) -> float:
    """Classic DTW with |a_i - b_j| step cost and unit moves."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("DTW sequences must be non-empty")
    n, m = a.size, b.size
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = abs(a[i - 1] - b[j - 1])
            table[i, j] = cost + min(table[i - 1, j], table[i, j - 1],
                                     table[i - 1, j - 1])
    return float(table[n, m])


def _pairwise_dtw(seqs: np.ndarray) -> np.ndarray:
    """DTW distance between every pair of rows of `seqs` (shape N x L).

    Row-by-row dynamic program vectorized over all unordered pairs; agrees
    exactly with dtw_distance on each pair.
    """
    n, length = seqs.shape
    out = np.zeros((n, n))
    if n < 2:
        return out
    ii, jj = np.triu_indices(n, k=1)
    prev = np.full((ii.size, length + 1), np.inf)
    prev[:, 0] = 0.0
    for r in range(1, length + 1):
        cost = np.abs(seqs[ii, r - 1][:, None] - seqs[jj, :])  # (pairs, L)
        cur = np.full((ii.size, length + 1), np.inf)
        for c in range(1, length + 1):
            best = np.minimum(prev[:, c], prev[:, c - 1])
            best = np.minimum(best, cur[:, c - 1])
            cur[:, c] = cost[:, c - 1] + best
        prev = cur
    out[ii, jj] = prev[:, length]
    out[jj, ii] = prev[:, length]
    return out


def build_pattern_graph(history: TrafficSeries, alpha_speed: float,
                        alpha_flow: float, window: tuple[int, int],
                        pattern_hours: int = 24) -> np.ndarray:
    """Historical-pattern similarity via an exponential kernel on DTW distance.

    For every hourly anchor in `window` whose trailing `pattern_hours` history
    fits inside the window, the speed and flow histories of each road pair are
    compared with DTW; exp(-alpha_c * dist) is averaged over the two channels
    and then over anchors.  Diagonal forced to zero.
    """
    if alpha_speed <= 0 or alpha_flow <= 0:
        raise ValueError("attenuation rates must be positive")
    start, stop = _check_window(history, window)
    anchors = range(start + pattern_hours - 1, stop)
    if len(anchors) == 0:
        raise DataError(
            f"window of {stop - start} h is shorter than the "
            f"{pattern_hours} h pattern length")
    n = history.n
    alphas = (alpha_speed, alpha_flow)
    total = np.zeros((n, n))
    for t in anchors:
        per_anchor = np.zeros((n, n))
        for channel, alpha in enumerate(alphas):
            seqs = history.values[:, t - pattern_hours + 1:t + 1, channel]
            per_anchor += np.exp(-alpha * _pairwise_dtw(seqs))
        total += per_anchor / len(alphas)
    w = total / len(anchors)
    np.fill_diagonal(w, 0.0)
    return w


def build_attribute_graph(history: TrafficSeries, net: RoadNetwork,
                          window: tuple[int, int]) -> np.ndarray:
    """Inherent-attribute similarity from daily max flow/speed and length.

    Per complete day in the window each road gets the vector
    [max flow, max speed, length] with the first two min-max normalized
    across roads; similarity is exp(-squared distance), averaged over days.
    """
    start, stop = _check_window(history, window)
    n_days = (stop - start) // 24
    if n_days == 0:
        raise DataError("window contains no complete day")
    n = history.n
    if net.n != n:
        raise ValueError("network and series road counts differ")
    total = np.zeros((n, n))
    for day in range(n_days):
        lo = start + 24 * day
        block = history.values[:, lo:lo + 24, :]
        max_speed = block[:, :, 0].max(axis=1)
        max_flow = block[:, :, 1].max(axis=1)
        attrs = np.column_stack([
            _minmax_across_roads(max_flow),
            _minmax_across_roads(max_speed),
            net.lengths,
        ])
        diff = attrs[:, None, :] - attrs[None, :, :]
        total += np.exp(-(diff ** 2).sum(axis=2))
    w = total / n_days
    np.fill_diagonal(w, 0.0)
    return w


def _minmax_across_roads(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _check_window(history: TrafficSeries, window) -> tuple[int, int]:
    start, stop = int(window[0]), int(window[1])
    if not (0 <= start < stop <= history.t):
        raise ValueError(f"window [{start}, {stop}) outside series of "
                         f"length {history.t}")
    return start, stop


# -- normalization -------------------------------------------------------------


def normalize_adjacency(w: np.ndarray) -> np.ndarray:
    """Self-loop-augmented symmetric normalization D^-1/2 (W+I) D^-1/2."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
        raise ValueError("adjacency must be symmetric")
    if np.any(w < 0):
        raise ValueError("adjacency entries must be non-negative")
    w_tilde = w + np.eye(w.shape[0])
    degree = w_tilde.sum(axis=1)
    if np.any(degree <= 0):
        raise ValueError("zero degree after self-loop augmentation")
    inv_sqrt = 1.0 / np.sqrt(degree)
    # outer product keeps the result exactly symmetric
    return w_tilde * np.outer(inv_sqrt, inv_sqrt)


@dataclass(frozen=True)
class GraphSet:
    """The four raw adjacency matrices and their normalized forms."""

    topological: np.ndarray
    weighted: np.ndarray
    pattern: np.ndarray
    attribute: np.ndarray
    normalized: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.normalized:
            object.__setattr__(self, "normalized", {
                key: normalize_adjacency(self.raw(key)) for key in GRAPH_KEYS})

    def raw(self, key: str) -> np.ndarray:
        return getattr(self, key)

    def norm(self, key: str) -> np.ndarray:
        return self.normalized[key]

    @classmethod
    def build(cls, net: RoadNetwork, history: TrafficSeries,
              window: tuple[int, int], alpha_speed: float = 1e-2,
              alpha_flow: float = 1e-4, pattern_hours: int = 24) -> "GraphSet":
        return cls(
            topological=build_topological(net),
            weighted=build_weighted_topological(net),
            pattern=build_pattern_graph(history, alpha_speed, alpha_flow,
                                        window, pattern_hours),
            attribute=build_attribute_graph(history, net, window),
        )


# -- spatial autocorrelation ----------------------------------------------------


def global_morans_i(x, conn: ConnectivityWeights) -> float:
    """Global spatial autocorrelation of a per-road field."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2 or n != conn.matrix.shape[0]:
        raise ValueError("need >= 2 roads matching the connectivity matrix")
    if conn.s0 == 0:
        raise ValueError("connectivity has no connections")
    dev = x - x.mean()
    denom = float(dev @ dev)
    if denom == 0.0:
        raise DegenerateVarianceError("field is constant across roads")
    numer = float(dev @ conn.matrix @ dev)
    return (n / conn.s0) * numer / denom


def local_morans_i(x, conn: ConnectivityWeights) -> np.ndarray:
    """Per-road local autocorrelation (zero for isolated roads)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2 or n != conn.matrix.shape[0]:
        raise ValueError("need >= 2 roads matching the connectivity matrix")
    dev = x - x.mean()
    mean_sq_dev = float(dev @ dev) / n
    if mean_sq_dev == 0.0:
        raise DegenerateVarianceError("field is constant across roads")
    return dev * (conn.matrix @ dev) / (mean_sq_dev ** 2)


# -- file formats ----------------------------------------------------------------

_ROAD_HEADER = ["road_id", "length"]
_EDGE_HEADER = ["road_a", "road_b"]


def write_network_csv(path, net: RoadNetwork, road_ids: list[str]) -> None:
    """Single-file network description: road rows, then an edge section."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_ROAD_HEADER)
        for rid, length in zip(road_ids, net.lengths):
            writer.writerow([rid, repr(float(length))])
        writer.writerow(_EDGE_HEADER)
        for a, b in net.edges:
            writer.writerow([road_ids[a], road_ids[b]])


def read_network_csv(path) -> tuple[RoadNetwork, list[str]]:
    road_ids: list[str] = []
    lengths: list[float] = []
    edges: list[tuple[int, int]] = []
    index: dict[str, int] = {}
    section = "roads"
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != _ROAD_HEADER:
        raise DataError(f"{path}:1: expected header {','.join(_ROAD_HEADER)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if row == _EDGE_HEADER:
            section = "edges"
            continue
        if section == "roads":
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected road_id,length")
            rid, raw_len = row
            if rid in index:
                raise DataError(f"{path}:{lineno}: duplicate road id {rid!r}")
            try:
                length = float(raw_len)
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: bad length {raw_len!r}") from None
            index[rid] = len(road_ids)
            road_ids.append(rid)
            lengths.append(length)
        else:
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected road_a,road_b")
            try:
                edges.append((index[row[0]], index[row[1]]))
            except KeyError as exc:
                raise DataError(
                    f"{path}:{lineno}: unknown road id {exc.args[0]!r}"
                ) from None
    if not road_ids:
        raise DataError(f"{path}: no roads defined")
    try:
        net = RoadNetwork(np.array(lengths), tuple(edges))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return net, road_ids


def write_adjacency_csv(path, matrix: np.ndarray, road_ids: list[str]) -> None:
    """N x N adjacency as CSV with a road-identifier header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(road_ids)
        for row in np.asarray(matrix):
            writer.writerow([repr(float(v)) for v in row])


def read_adjacency_csv(path) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty adjacency file")
    road_ids = rows[0]
    n = len(road_ids)
    if len(rows) != n + 1:
        raise DataError(f"{path}: expected {n} data rows, got {len(rows) - 1}")
    try:
        matrix = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if matrix.shape != (n, n):
        raise DataError(f"{path}: ragged adjacency rows")
    return matrix, road_ids
