"""Spin lattices, couplings and edge colorings.

A :class:`SiteGraph` holds canonical, sorted edges ``(i, j)`` with ``i < j`` and
a proper edge coloring. Each color class is one layer of commuting R_ZZ gates
in a Trotter step, so the color count is the two-qubit layer count per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class Geometry(str, Enum):
    OPEN_CHAIN = "open_chain"
    PERIODIC_CHAIN = "periodic_chain"
    HEAVY_HEX = "heavy_hex"
    SQUARE = "square"


class CouplingKind(str, Enum):
    UNIFORM = "uniform"
    DISORDERED = "disordered"


@dataclass(frozen=True)
class SiteGraph:
    n_sites: int
    edges: tuple[tuple[int, int], ...]
    geometry: Geometry
    colors: tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        seen = set()
        for i, j in self.edges:
            if not 0 <= i < j < self.n_sites:
                raise ValueError(f"edge {(i, j)} is not canonical for {self.n_sites} sites")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge {(i, j)}")
            seen.add((i, j))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edges must be sorted")
        if self.colors:
            if len(self.colors) != len(self.edges):
                raise ValueError("colors must be index-aligned with edges")
            if not is_proper_coloring(self.n_sites, self.edges, self.colors):
                raise ValueError("edge coloring is not proper")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_colors(self) -> int:
        return max(self.colors) + 1 if self.colors else 0

    def layers(self) -> list[list[int]]:
        """Edge indices grouped by color, ascending color index."""
        out: list[list[int]] = [[] for _ in range(self.n_colors)]
        for e, c in enumerate(self.colors):
            out[c].append(e)
        return out

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def edge_index(self, i: int, j: int) -> int:
        return self.edges.index((min(i, j), max(i, j)))

    def chain_order(self) -> list[int]:
        """Edge indices ordered along a chain: edge k joins sites k and k+1 (mod N)."""
        if self.geometry not in (Geometry.OPEN_CHAIN, Geometry.PERIODIC_CHAIN):
            raise ValueError(f"chain order undefined for geometry {self.geometry.value}")
        n_links = self.n_sites if self.geometry is Geometry.PERIODIC_CHAIN else self.n_sites - 1
        return [self.edge_index(k, (k + 1) % self.n_sites) for k in range(n_links)]


@dataclass(frozen=True)
class CouplingMap:
    """Couplings J_ij index-aligned with ``edges``."""

    edges: tuple[tuple[int, int], ...]
    values: tuple[float, ...]
    kind: CouplingKind = CouplingKind.UNIFORM
    seed: int | None = None

    def __post_init__(self):
        if len(self.values) != len(self.edges):
            raise ValueError("couplings must be index-aligned with edges")
        if self.kind is CouplingKind.DISORDERED and any(abs(v) > 1.0 for v in self.values):
            raise ValueError("disordered couplings must lie in [-1, 1]")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(zip(self.edges, self.values))


def is_proper_coloring(n_sites: int, edges: Sequence[tuple[int, int]], colors: Sequence[int]) -> bool:
    used: list[set[int]] = [set() for _ in range(n_sites)]
    for (i, j), c in zip(edges, colors):
        if c < 0 or c in used[i] or c in used[j]:
            return False
        used[i].add(c)
        used[j].add(c)
    return True


def _canonical(edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((min(i, j), max(i, j)) for i, j in edges))


def _compact(colors: list[int]) -> tuple[int, ...]:
    remap = {c: k for k, c in enumerate(sorted(set(colors)))}
    return tuple(remap[c] for c in colors)


def _bipartite_coloring(n_sites: int, edges: Sequence[tuple[int, int]]) -> tuple[int, ...]:
    """Edge coloring with max-degree colors via alternating-path recoloring.

    Exact for bipartite graphs (Koenig's edge-coloring theorem); edges are
    processed in the given order, so the result is deterministic.
    """
    delta = 0
    deg = [0] * n_sites
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
        delta = max(delta, deg[i], deg[j])
    at: list[dict[int, int]] = [dict() for _ in range(n_sites)]  # site -> color -> neighbor
    colors: dict[tuple[int, int], int] = {}

    def free(v: int) -> int:
        return next(c for c in range(delta) if c not in at[v])

    for u, v in edges:
        a, b = free(u), free(v)
        if a in at[v]:
            # swap a/b along the alternating path leaving v; it cannot reach u
            path = []
            x, want = v, a
            while want in at[x]:
                y = at[x][want]
                path.append((x, y, want))
                x, want = y, (b if want == a else a)
            for x, y, c in path:
                del at[x][c]
                del at[y][c]
            for x, y, c in path:
                c2 = b if c == a else a
                at[x][c2] = y
                at[y][c2] = x
                colors[(min(x, y), max(x, y))] = c2
            if a in at[u]:
                raise ValueError("graph is not bipartite")
        at[u][a] = v
        at[v][a] = u
        colors[(u, v)] = a
    return _compact([colors[e] for e in edges])


def color_edges(graph: SiteGraph) -> tuple[int, ...]:
    """Proper edge coloring with the minimal color count for the geometry.

    Chains use index parity (a third color closes odd rings), square lattices
    use column/row parity for horizontal/vertical bonds, heavy-hex lattices are
    bipartite and get a 3-coloring from alternating-path recoloring.
    """
    n = graph.n_sites
    if graph.geometry in (Geometry.OPEN_CHAIN, Geometry.PERIODIC_CHAIN):
        colors = []
        for i, j in graph.edges:
            if j == i + 1:
                colors.append(i % 2)
            else:
                colors.append(1 if n % 2 == 0 else 2)
        return _compact(colors)
    if graph.geometry is Geometry.SQUARE:
        cols = int(graph.label.split("x")[1])
        colors = []
        for i, j in graph.edges:
            r, c = divmod(i, cols)
            colors.append(c % 2 if j == i + 1 and cols > 1 else 2 + r % 2)
        return _compact(colors)
    return _bipartite_coloring(n, graph.edges)


def _with_coloring(graph: SiteGraph) -> SiteGraph:
    return SiteGraph(graph.n_sites, graph.edges, graph.geometry, color_edges(graph), graph.label)


def open_chain(n: int) -> SiteGraph:
    if n < 2:
        raise ValueError("a chain needs at least 2 sites")
    return _with_coloring(SiteGraph(n, tuple((i, i + 1) for i in range(n - 1)), Geometry.OPEN_CHAIN))


def periodic_chain(n: int) -> SiteGraph:
    if n < 3:
        raise ValueError("a periodic chain needs at least 3 sites")
    edges = _canonical([(i, (i + 1) % n) for i in range(n)])
    return _with_coloring(SiteGraph(n, edges, Geometry.PERIODIC_CHAIN))


def square(rows: int, cols: int) -> SiteGraph:
    """Open-boundary ``rows x cols`` square lattice, site ``r * cols + c``."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("square lattice needs at least 2 sites")
    edges = []
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if c + 1 < cols:
                edges.append((s, s + 1))
            if r + 1 < rows:
                edges.append((s, s + cols))
    return _with_coloring(SiteGraph(rows * cols, _canonical(edges), Geometry.SQUARE, label=f"{rows}x{cols}"))


def _rows_and_bridges(
    row_spans: Sequence[tuple[int, int]],
    bridge_cols: Sequence[Sequence[int]],
    label: str,
) -> SiteGraph:
    """Heavy-hex graph from qubit rows joined by degree-2 bridge qubits.

    ``row_spans[r]`` is the inclusive column range of row ``r``; ``bridge_cols[g]``
    lists the columns of bridges below row ``g`` (a gap past the last row makes
    dangling bridges). Qubits are numbered row by row, each row followed by
    the bridges beneath it.
    """
    index: dict[tuple[int, int], int] = {}
    edges = []
    k = 0
    pending: list[tuple[int, int]] = []  # (bridge qubit, column) awaiting the next row
    for r, (lo, hi) in enumerate(row_spans):
        for c in range(lo, hi + 1):
            index[(r, c)] = k
            k += 1
        for c in range(lo, hi):
            edges.append((index[(r, c)], index[(r, c + 1)]))
        for b, c in pending:
            edges.append((index[(r, c)], b))
        pending = []
        if r < len(bridge_cols):
            for c in bridge_cols[r]:
                edges.append((index[(r, c)], k))
                pending.append((k, c))
                k += 1
    graph = SiteGraph(k, _canonical(edges), Geometry.HEAVY_HEX, label=label)
    return _with_coloring(graph)


def heavy_hex(rows: int, cols: int) -> SiteGraph:
    """Heavy-hex patch of ``rows`` bands of ``cols`` hexagonal cells.

    Adjacent bands are offset by two columns as on IBM devices; one cell is a
    12-site ring and ``heavy_hex(1, 2)`` has 21 sites.
    """
    if rows < 1 or cols < 1:
        raise ValueError("heavy-hex needs at least one cell")
    offsets = [2 * (b % 2) for b in range(rows)]
    spans = []
    for r in range(rows + 1):
        touching = [offsets[b] for b in (r - 1, r) if 0 <= b < rows]
        spans.append((min(touching), max(touching) + 4 * cols))
    bridges = [[off + 4 * k for k in range(cols + 1)] for off in offsets]
    return _rows_and_bridges(spans, bridges, f"{cols}x{rows}")


def eagle_127() -> SiteGraph:
    """127-qubit Eagle-style heavy-hex layout (144 edges)."""
    spans = [(0, 13)] + [(0, 14)] * 5 + [(1, 14)]
    bridges = [[0, 4, 8, 12] if g % 2 == 0 else [2, 6, 10, 14] for g in range(6)]
    return _rows_and_bridges(spans, bridges, "eagle_127")


def heron_133() -> SiteGraph:
    """133-qubit Heron-style heavy-hex layout (150 edges)."""
    spans = [(0, 14)] * 7
    bridges = [[0, 4, 8, 12] if g % 2 == 0 else [2, 6, 10, 14] for g in range(7)]
    return _rows_and_bridges(spans, bridges, "heron_133")


DEVICES = {"eagle_127": eagle_127, "heron_133": heron_133, "127": eagle_127, "133": heron_133}


def build_lattice(
    geometry: Geometry | str,
    n: int | None = None,
    *,
    rows: int | None = None,
    cols: int | None = None,
    device: str | int | None = None,
) -> SiteGraph:
    """Build a colored lattice.

    Chains take ``n``; ``square`` takes ``rows``/``cols``; ``heavy_hex`` takes a
    cell grid (``rows`` bands of ``cols`` cells) or ``device`` in
    {"eagle_127", "heron_133"} (127 and 133 also accepted).
    """
    geometry = Geometry(geometry)
    if geometry is Geometry.OPEN_CHAIN:
        return open_chain(_need(n, "n"))
    if geometry is Geometry.PERIODIC_CHAIN:
        return periodic_chain(_need(n, "n"))
    if geometry is Geometry.SQUARE:
        return square(_need(rows, "rows"), _need(cols, "cols"))
    if device is not None:
        try:
            return DEVICES[str(device)]()
        except KeyError:
            raise ValueError(f"unknown device layout {device!r}") from None
    return heavy_hex(_need(rows, "rows"), _need(cols, "cols"))


def _need(value, name):
    if value is None:
        raise ValueError(f"missing lattice size parameter {name!r}")
    return int(value)


def assign_couplings(
    graph: SiteGraph,
    kind: CouplingKind | str = CouplingKind.UNIFORM,
    J: float = 1.0,
    seed: int | None = None,
) -> CouplingMap:
    """Uniform couplings ``J`` or i.i.d. draws from U[-1, 1].

    Disorder is drawn from numpy's Philox-4x64 counter-based generator keyed by
    ``seed``; the stream is platform independent, so a seed names one instance.
    """
    kind = CouplingKind(kind)
    if kind is CouplingKind.UNIFORM:
        return CouplingMap(graph.edges, tuple(float(J) for _ in graph.edges), kind)
    if seed is None:
        raise ValueError("disordered couplings need a seed")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    values = rng.uniform(-1.0, 1.0, size=graph.n_edges)
    return CouplingMap(graph.edges, tuple(float(v) for v in values), kind, int(seed))


def graph_to_json(graph: SiteGraph, couplings: CouplingMap | None = None) -> dict:
    doc = {
        "n_sites": graph.n_sites,
        "geometry": graph.geometry.value,
        "edges": [list(e) for e in graph.edges],
        "colors": list(graph.colors),
        "couplings": list(couplings.values) if couplings is not None else None,
    }
    if graph.label:
        doc["label"] = graph.label
    return doc


def graph_from_json(doc: dict) -> tuple[SiteGraph, CouplingMap | None]:
    edges = tuple((int(i), int(j)) for i, j in doc["edges"])
    graph = SiteGraph(
        int(doc["n_sites"]),
        edges,
        Geometry(doc["geometry"]),
        tuple(int(c) for c in doc.get("colors") or ()),
        doc.get("label", ""),
    )
    if not graph.colors:
        graph = _with_coloring(graph)
    couplings = None
    if doc.get("couplings") is not None:
        values = tuple(float(v) for v in doc["couplings"])
        kind = CouplingKind.UNIFORM if len(set(values)) <= 1 else CouplingKind.DISORDERED
        couplings = CouplingMap(edges, values, kind)
    return graph, couplings
