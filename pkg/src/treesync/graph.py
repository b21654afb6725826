"""Tree graphs, frequency assignments and the Laplacian family.

Nodes are 0-based.  Every edge is stored as an oriented pair ``(tail, head)``;
the tail is the positive end of the edge (``+1`` in the incidence column) and
the head the negative end.  By default the positive end is the lower node
index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DimensionMismatch,
    Disconnected,
    DuplicateEdge,
    GraphError,
    InvalidFrequency,
    SelfLoop,
)

__all__ = [
    "TreeGraph",
    "FrequencyAssignment",
    "build_tree",
    "star",
    "path",
    "random_tree",
    "flip_edge",
    "incidence_matrix",
    "degrees",
    "weighted_edge_laplacian",
    "graph_laplacian",
    "as_omega",
]


@dataclass(frozen=True)
class TreeGraph:
    """A validated tree.  Build it with :func:`build_tree`."""

    n: int
    edges: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out


@dataclass(frozen=True)
class FrequencyAssignment:
    """Exogenous frequencies, one per node, all bounded below by ``zeta > 0``."""

    omega: tuple[float, ...]
    zeta: float

    def __init__(self, omega: Iterable[float], zeta: float | None = None):
        values = tuple(float(v) for v in np.ravel(np.asarray(omega, dtype=float)))
        if not values:
            raise InvalidFrequency("empty frequency vector")
        if not all(np.isfinite(values)):
            raise InvalidFrequency(f"non-finite frequency in {values}")
        lowest = min(values)
        if zeta is None:
            zeta = lowest
        zeta = float(zeta)
        if zeta <= 0:
            raise InvalidFrequency(f"frequencies must be strictly positive (min {lowest})")
        if lowest < zeta:
            raise InvalidFrequency(f"frequency {lowest} is below the lower bound {zeta}")
        object.__setattr__(self, "omega", values)
        object.__setattr__(self, "zeta", zeta)

    def __len__(self) -> int:
        return len(self.omega)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.omega, dtype=dtype)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=float)


def as_omega(w, n: int | None = None) -> np.ndarray:
    """Return frequencies as a float vector, checking the length against ``n``."""
    arr = np.asarray(w, dtype=float).ravel()
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"expected {n} frequencies, got {arr.shape[0]}")
    return arr


def build_tree(
    n: int,
    edges: Sequence[Sequence[int]],
    orientation: str = "lower",
) -> TreeGraph:
    """Validate ``edges`` as a spanning tree on ``n`` nodes.

    ``orientation="lower"`` makes the lower index the positive end of every
    edge; ``orientation="given"`` keeps each pair as ``(tail, head)``.  Edge
    order is preserved either way.
    """
    if int(n) != n or n < 2:
        raise GraphError(f"a tree needs at least 2 nodes, got n={n}")
    n = int(n)
    if orientation not in ("lower", "given"):
        raise ValueError(f"unknown orientation {orientation!r}")

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seen: set[frozenset[int]] = set()
    oriented = []
    for k, pair in enumerate(edges):
        if len(pair) != 2:
            raise GraphError(f"edge {k} is not a node pair: {pair!r}")
        i, j = (int(v) for v in pair)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge {k} ({i}, {j}) uses a node outside [0, {n})")
        if i == j:
            raise SelfLoop(f"edge {k} ({i}, {j}) is a self-loop")
        key = frozenset((i, j))
        if key in seen:
            raise DuplicateEdge(f"edge {k} ({i}, {j}) duplicates an earlier edge")
        seen.add(key)
        ri, rj = find(i), find(j)
        if ri == rj:
            raise CycleDetected(f"edge {k} ({i}, {j}) closes a cycle")
        parent[ri] = rj
        if orientation == "lower":
            i, j = min(i, j), max(i, j)
        oriented.append((i, j))

    roots: dict[int, list[int]] = {}
    for v in range(n):
        roots.setdefault(find(v), []).append(v)
    if len(roots) > 1:
        comps = sorted(roots.values(), key=lambda c: c[0])
        raise Disconnected(
            f"graph has {len(comps)} components; nodes {comps[1]} are not reachable from node 0"
        )
    return TreeGraph(n=n, edges=tuple(oriented))


def star(n: int, hub: int = 0) -> TreeGraph:
    return build_tree(n, [(hub, v) for v in range(n) if v != hub])


def path(n: int) -> TreeGraph:
    return build_tree(n, [(v, v + 1) for v in range(n - 1)])


def random_tree(n: int, rng: np.random.Generator) -> TreeGraph:
    """Uniformly random labelled tree on ``n`` nodes (Pruefer decoding)."""
    if n == 2:
        return build_tree(2, [(0, 1)])
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=int)
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((leaf, int(v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = np.flatnonzero(degree == 1)
    edges.append((int(u), int(w)))
    return build_tree(n, edges)


def flip_edge(g: TreeGraph, k: int) -> TreeGraph:
    """Same tree with the orientation of edge ``k`` reversed."""
    edges = list(g.edges)
    a, b = edges[k]
    edges[k] = (b, a)
    return TreeGraph(n=g.n, edges=tuple(edges))


def incidence_matrix(g: TreeGraph) -> np.ndarray:
    B = np.zeros((g.n, g.m))
    cols = np.arange(g.m)
    B[g.tails, cols] = 1.0
    B[g.heads, cols] = -1.0
    return B


def degrees(g: TreeGraph) -> np.ndarray:
    d = np.zeros(g.n, dtype=int)
    for a, b in g.edges:
        d[a] += 1
        d[b] += 1
    return d


def weighted_edge_laplacian(g: TreeGraph, w) -> np.ndarray:
    """``B^T diag(omega) B``.

    Diagonal entry ``k`` is the sum of the endpoint frequencies of edge ``k``;
    two edges sharing node ``l`` get ``+-omega_l`` off the diagonal.
    """
    omega = as_omega(w, g.n)
    B = incidence_matrix(g)
    A = (B.T * omega) @ B
    return 0.5 * (A + A.T)


def graph_laplacian(g: TreeGraph) -> np.ndarray:
    B = incidence_matrix(g)
    return B @ B.T
