"""Graphs, random instances, coloring validation and brute-force oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

_BRUTE_FORCE_LIMIT = 10**8
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored canonically as sorted ``(u, v)`` tuples with ``u < v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n!r}")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_connected(self) -> bool:
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class ColoringReport:
    assignment: tuple[Optional[int], ...]
    missing_count: int
    conflict_count: int

    @property
    def total_errors(self) -> int:
        return self.missing_count + self.conflict_count

    @property
    def is_proper(self) -> bool:
        return self.total_errors == 0


def generate_er(n: int, p: float, seed: int) -> Graph:
    """Sample a G(n, p) Erdos-Renyi graph.

    Candidate pairs are visited in lexicographic order and each is kept when a
    uniform draw from ``numpy.random.default_rng(seed)`` (PCG64) is below ``p``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    keep = rng.random(len(pairs)) < p
    return Graph(n, tuple(e for e, k in zip(pairs, keep) if k))


def average_connectivity(g: Graph) -> float:
    """Empirical mean degree ``2|E|/n``."""
    return 2.0 * g.num_edges / g.n


def problem_volume(n: int, k: int, p: float) -> float:
    return p * n * k


def validate_coloring(g: Graph, assignment: Sequence[Optional[int]], k: int) -> ColoringReport:
    """Count missing colors and monochromatic edges of an assignment.

    ``None`` marks an uncolored node. Edges touching an uncolored node are not
    counted as conflicts.
    """
    if len(assignment) != g.n:
        raise ValueError(f"assignment has length {len(assignment)}, graph has {g.n} nodes")
    colors = []
    for c in assignment:
        if c is None:
            colors.append(None)
            continue
        c = int(c)
        if not 0 <= c < k:
            raise ValueError(f"color {c} outside 0..{k - 1}")
        colors.append(c)
    missing = sum(c is None for c in colors)
    conflicts = sum(
        1 for u, v in g.edges if colors[u] is not None and colors[u] == colors[v]
    )
    return ColoringReport(tuple(colors), missing, conflicts)


def conflict_counts(g: Graph, k: int) -> np.ndarray:
    """Conflict count of every full assignment, indexed by its base-``k`` number.

    Node 0 is the most significant digit.
    """
    total = k**g.n
    if total > _BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force over {k}^{g.n} = {total} assignments exceeds limit {_BRUTE_FORCE_LIMIT}"
        )
    out = np.empty(total, dtype=np.int32)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = [(idx // k ** (g.n - 1 - v)) % k for v in range(g.n)]
        acc = np.zeros(idx.shape, dtype=np.int32)
        for u, v in g.edges:
            acc += digits[u] == digits[v]
        out[start : start + idx.size] = acc
    return out


def brute_force_coloring(g: Graph, k: int) -> tuple[int, int]:
    """Exhaustive minimum conflict count and the number of assignments attaining it."""
    counts = conflict_counts(g, k)
    best = int(counts.min())
    return best, int(np.count_nonzero(counts == best))


def proper_colorings(g: Graph, k: int) -> list[tuple[int, ...]]:
    counts = conflict_counts(g, k)
    return [_digits(int(i), k, g.n) for i in np.flatnonzero(counts == 0)]


def _digits(i: int, k: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        i, r = divmod(i, k)
        out.append(r)
    return tuple(reversed(out))


def falling_factorial(k: int, n: int) -> int:
    return math.perm(k, n) if n <= k else 0


def all_graphs(n: int) -> Iterable[Graph]:
    """Every labelled simple graph on ``n`` nodes."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield Graph(n, tuple(e for j, e in enumerate(pairs) if mask >> j & 1))


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(itertools.combinations(range(n), 2)))


# Reference instances with chromatic number exactly k. Edge lists are our own
# choice; they are not reconstructions of any published drawing.
REFERENCE_INSTANCES: dict[str, tuple[Graph, int]] = {
    # K4 minus the edge (0, 3): 4 nodes, 3 colors
    "A": (Graph(4, ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))), 3),
    # K4 on 0..3 plus node 4 joined to 0 and 3: 5 nodes, 4 colors
    "B": (Graph(5, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 4), (3, 4))), 4),
    # K4 on 0..3, node 4 joined to 0 and 1, node 5 joined to 2, 3 and 4: 6 nodes, 4 colors
    "C": (
        Graph(
            6,
            ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 4), (1, 4), (2, 5), (3, 5), (4, 5)),
        ),
        4,
    ),
}


def reference_instance(name: str) -> tuple[Graph, int]:
    """Return ``(graph, k)`` for reference instance ``"A"``, ``"B"`` or ``"C"``.

    A trailing prime (``"A'"``) is accepted.
    """
    key = name.strip().rstrip("'′").upper()
    if key not in REFERENCE_INSTANCES:
        raise KeyError(f"unknown reference instance {name!r}; choose from A, B, C")
    return REFERENCE_INSTANCES[key]


def write_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_graph(g))


def format_graph(g: Graph) -> str:
    return "\n".join([f"{g.n} {g.num_edges}"] + [f"{u} {v}" for u, v in g.edges]) + "\n"


def parse_graph(text: str) -> Graph:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise ValueError("empty graph file")
    try:
        n, m = (int(t) for t in rows[0])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed graph file: {exc}") from None
    if len(edges) != m:
        raise ValueError(f"header declares {m} edges, found {len(edges)}")
    g = Graph(n, tuple(edges))
    if g.num_edges != m:
        raise ValueError("graph file contains duplicate edges")
    return g


def read_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text())
