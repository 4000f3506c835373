"""Homophilous social network generation and structural measures.

Agents live in an identity space [0, 1]^d and belong to one of K blocks.
Edges are sampled independently per unordered pair with probability p_in
inside a block and p_out across blocks, so block structure and identity
similarity move together: block centers are spread out in identity space
and members scatter tightly around their center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GraphConfig",
    "SocialGraph",
    "GraphError",
    "generate_network",
    "identity_similarity",
    "similarity",
    "modularity",
    "homophily_index",
    "structure_summary",
    "save_edge_list",
    "load_edge_list",
]

CONTEXT_PRESETS = {
    # organizational context c_i ~ U[lo, hi]
    "community": (0.7, 1.0),
    "fragmented": (0.0, 0.3),
}


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class GraphConfig:
    """Generator settings for one synthetic network."""

    n: int
    n_blocks: int
    p_in: float
    p_out: float
    identity_dim: int = 2
    identity_spread: float = 0.02
    context: str = "community"
    # used only when context == "custom": c_i ~ U[mean - spread, mean + spread]
    context_mean: float = 0.5
    context_spread: float = 0.0

    def validate(self) -> None:
        if self.n < 1:
            raise GraphError("n must be >= 1")
        if not 1 <= self.n_blocks <= self.n:
            raise GraphError("n_blocks must be in [1, n]")
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise GraphError(f"{name} must be in [0, 1], got {p}")
        if self.identity_dim < 1:
            raise GraphError("identity_dim must be >= 1")
        if self.identity_spread < 0:
            raise GraphError("identity_spread must be >= 0")
        if self.context not in CONTEXT_PRESETS and self.context != "custom":
            raise GraphError(f"unknown context preset {self.context!r}")


@dataclass
class SocialGraph:
    """A sampled network: edges, block labels, identities, context scalars."""

    n: int
    edges: np.ndarray  # (m, 2) int64, i < j, lexicographically sorted
    block: np.ndarray  # (n,) int64
    identity: np.ndarray  # (n, d) float64 in [0, 1]
    context: np.ndarray  # (n,) float64 in [0, 1]
    _degree: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_blocks(self) -> int:
        return int(self.block.max()) + 1 if self.n else 0

    @property
    def identity_dim(self) -> int:
        return int(self.identity.shape[1])

    def degree(self) -> np.ndarray:
        if self._degree is None:
            deg = np.zeros(self.n, dtype=np.int64)
            if self.n_edges:
                np.add.at(deg, self.edges[:, 0], 1)
                np.add.at(deg, self.edges[:, 1], 1)
            self._degree = deg
        return self._degree

    def validate(self) -> None:
        if self.edges.ndim != 2 or (self.n_edges and self.edges.shape[1] != 2):
            raise GraphError("edges must be an (m, 2) array")
        if self.n_edges:
            i, j = self.edges[:, 0], self.edges[:, 1]
            if (i >= j).any():
                raise GraphError("edges must satisfy i < j")
            if i.min() < 0 or j.max() >= self.n:
                raise GraphError("edge endpoint out of range")
            key = i * self.n + j
            if (np.diff(key) <= 0).any():
                raise GraphError("edges must be sorted and unique")
        if self.identity.shape[0] != self.n or self.block.shape[0] != self.n:
            raise GraphError("per-agent arrays must have length n")
        if self.identity.min(initial=0.0) < 0 or self.identity.max(initial=0.0) > 1:
            raise GraphError("identities must lie in [0, 1]")


def block_centers(n_blocks: int, dim: int) -> np.ndarray:
    """Deterministic, well separated block centers in [0, 1]^dim.

    dim == 1 spaces blocks evenly on the segment; dim >= 2 spaces them
    evenly on a circle of radius 0.45 in the first two coordinates, the
    remaining ones held at 0.5, which keeps every pair of centers at
    distance >= 2 * 0.45 * sin(pi / K).
    """
    if n_blocks == 1:
        return np.full((1, dim), 0.5)
    centers = np.full((n_blocks, dim), 0.5)
    if dim == 1:
        centers[:, 0] = np.linspace(0.0, 1.0, n_blocks)
    else:
        theta = 2.0 * np.pi * np.arange(n_blocks) / n_blocks
        centers[:, 0] = 0.5 + 0.45 * np.cos(theta)
        centers[:, 1] = 0.5 + 0.45 * np.sin(theta)
    return centers


def generate_network(config: GraphConfig, rng: np.random.Generator) -> SocialGraph:
    """Sample one network.

    Draw order is fixed for reproducibility: pair coins, identity noise,
    context. Blocks are contiguous, near-equal slices of the id range.
    """
    config.validate()
    n, k = config.n, config.n_blocks
    block = (np.arange(n, dtype=np.int64) * k) // n

    if n >= 2:
        iu, ju = np.triu_indices(n, 1)
        same = block[iu] == block[ju]
        probs = np.where(same, config.p_in, config.p_out)
        keep = rng.random(iu.shape[0]) < probs
        edges = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    else:
        edges = np.empty((0, 2), dtype=np.int64)

    centers = block_centers(k, config.identity_dim)
    noise = rng.uniform(-config.identity_spread, config.identity_spread,
                        size=(n, config.identity_dim))
    identity = np.clip(centers[block] + noise, 0.0, 1.0)

    if config.context == "custom":
        lo = config.context_mean - config.context_spread
        hi = config.context_mean + config.context_spread
    else:
        lo, hi = CONTEXT_PRESETS[config.context]
    context = np.clip(rng.uniform(lo, hi, size=n), 0.0, 1.0)

    graph = SocialGraph(n=n, edges=edges, block=block,
                        identity=identity, context=context)
    graph.validate()
    return graph


def identity_similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1 - euclidean(a, b) / sqrt(d), clamped to [0, 1].

    Accepts single vectors or stacked (n, d) arrays; similarity of a point
    with itself is exactly 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = a.shape[-1]
    dist = np.sqrt(np.sum((a - b) ** 2, axis=-1))
    return np.clip(1.0 - dist / math.sqrt(d), 0.0, 1.0)


def similarity(graph: SocialGraph, i: int, j: int) -> float:
    return float(identity_similarity(graph.identity[i], graph.identity[j]))


def modularity(graph: SocialGraph) -> float:
    """Newman modularity of the block partition.

    Q = sum_b (e_b / m - (k_b / 2m)^2) where e_b counts edges inside block b
    and k_b its total degree. Undefined on an edgeless graph.
    """
    m = graph.n_edges
    if m == 0:
        raise GraphError("modularity undefined on an edgeless graph")
    bi = graph.block[graph.edges[:, 0]]
    bj = graph.block[graph.edges[:, 1]]
    nb = graph.n_blocks
    e_in = np.bincount(bi[bi == bj], minlength=nb).astype(np.float64)
    k_tot = (np.bincount(bi, minlength=nb) + np.bincount(bj, minlength=nb)).astype(np.float64)
    return float(np.sum(e_in / m - (k_tot / (2.0 * m)) ** 2))


def homophily_index(graph: SocialGraph) -> float:
    """Fraction of edges joining agents of the same block (0 if edgeless)."""
    if graph.n_edges == 0:
        return 0.0
    same = graph.block[graph.edges[:, 0]] == graph.block[graph.edges[:, 1]]
    return float(np.mean(same))


def structure_summary(graph: SocialGraph) -> dict:
    """Density, mean degree, homophily and modularity in one dict.

    Conventions: density is 0 for n < 2, modularity is reported as 0.0 for
    an edgeless graph so summaries stay finite.
    """
    n, m = graph.n, graph.n_edges
    density = 0.0 if n < 2 else 2.0 * m / (n * (n - 1))
    return {
        "n": n,
        "n_edges": m,
        "n_blocks": graph.n_blocks,
        "density": density,
        "mean_degree": 0.0 if n == 0 else 2.0 * m / n,
        "homophily_index": homophily_index(graph),
        "modularity": modularity(graph) if m else 0.0,
    }


def save_edge_list(graph: SocialGraph, path: str,
                   comment: str | None = None) -> None:
    """Plain-text export: header `n K d`, `i j` per edge, then agent rows
    `id block z_1..z_d c`, everything ordered by id. A comment string is
    written first as a `#` line and ignored by the loader."""
    lines = []
    if comment:
        lines.append("# " + comment.strip())
    lines.append(f"{graph.n} {graph.n_blocks} {graph.identity_dim}")
    for i, j in graph.edges:
        lines.append(f"{i} {j}")
    for a in range(graph.n):
        z = " ".join(format(v, ".17g") for v in graph.identity[a])
        lines.append(f"{a} {graph.block[a]} {z} {format(graph.context[a], '.17g')}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edge_list(path: str) -> SocialGraph:
    with open(path) as fh:
        tokens = [line.split() for line in fh
                  if line.strip() and not line.lstrip().startswith("#")]
    if not tokens:
        raise GraphError(f"{path}: empty graph file")
    head = tokens[0]
    if len(head) != 3:
        raise GraphError(f"{path}: header must be 'n K d'")
    n, k, d = (int(v) for v in head)
    rows = tokens[1:]
    edge_rows = [r for r in rows if len(r) == 2]
    agent_rows = [r for r in rows if len(r) != 2]
    if len(agent_rows) != n:
        raise GraphError(f"{path}: expected {n} agent rows, found {len(agent_rows)}")
    edges = np.array([[int(r[0]), int(r[1])] for r in edge_rows],
                     dtype=np.int64).reshape(-1, 2)
    block = np.zeros(n, dtype=np.int64)
    identity = np.zeros((n, d))
    context = np.zeros(n)
    for r in agent_rows:
        if len(r) != 2 + d + 1:
            raise GraphError(f"{path}: malformed agent row {' '.join(r)!r}")
        a = int(r[0])
        block[a] = int(r[1])
        identity[a] = [float(v) for v in r[2:2 + d]]
        context[a] = float(r[-1])
    if k != int(block.max(initial=0)) + 1:
        raise GraphError(f"{path}: header block count {k} does not match rows")
    graph = SocialGraph(n=n, edges=edges, block=block,
                        identity=identity, context=context)
    graph.validate()
    return graph
