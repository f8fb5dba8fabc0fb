"""Level-set and spin-field percolation statistics.

Level sets, the two spin fields (odd-vertex signs and coin-shifted
edge signs), and a union-find cluster census with finite-volume
surrogates for infinite clusters: on a torus a cluster "wraps" when
two routes to the same element disagree by a lattice period, detected
through per-element displacement vectors; on a ball a cluster counts
when it touches the frozen rim.  Trifurcation boxes count the
translated balls whose removal splits one cluster into at least three
such surrogate-infinite pieces.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .gibbs import HeightConfig, format_float
from .lattice import DerivedGraph, PlanarPatch


class ParityViolation(ValueError):
    """An odd-class vertex carries an even height."""


# ---------------------------------------------------------------------------
# Level sets and spin fields
# ---------------------------------------------------------------------------

def level_set(config: HeightConfig, a: int, direction: str) -> np.ndarray:
    """Vertex ids whose height is >= a ("geq") or <= a ("leq")."""
    if direction == "geq":
        mask = config.heights >= a
    elif direction == "leq":
        mask = config.heights <= a
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return np.flatnonzero(mask).astype(np.int64)


@dataclass
class SpinField:
    """Signs on a carrier: odd-class vertices or edges."""

    carrier: str                  # "odd_vertices" | "edges"
    spins: dict

    def positive(self) -> list:
        return sorted(e for e, s in self.spins.items() if s == 1)

    def negative(self) -> list:
        return sorted(e for e, s in self.spins.items() if s == -1)

    def array(self, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=np.int64)
        for e, s in self.spins.items():
            out[e] = s
        return out


def odd_spin_field(config: HeightConfig, patch: PlanarPatch) -> SpinField:
    """Sign of each odd-class height: +1 exactly on {phi >= 1}.

    Every odd-class vertex must carry an odd height, so the field
    partitions the class into {phi >= 1} and {phi <= -1}.
    """
    spins = {}
    for v in np.flatnonzero(np.asarray(patch.parity) == 1):
        h = int(config.heights[v])
        if h % 2 == 0:
            raise ParityViolation(
                f"odd-class vertex {int(v)} has even height {h}")
        spins[int(v)] = 1 if h >= 1 else -1
    return SpinField(carrier="odd_vertices", spins=spins)


def edge_spin_field(config: HeightConfig, patch: PlanarPatch,
                    coins) -> SpinField:
    """Sign of phi(x) + phi(y) + c(xy) per edge, coins c = +-1/2.

    ``coins`` holds doubled coin values (+1 for +1/2) per edge, or any
    object carrying them as ``coin_x2``.  The doubled total is odd, so
    the sign never needs a tie-break; a zero total raises.
    """
    if hasattr(coins, "coin_x2"):
        coins = coins.coin_x2
    if coins is None:
        raise ValueError("edge spins need coins on every edge")
    coins = np.asarray(coins, dtype=np.int64)
    if len(coins) != patch.n_edges:
        raise ValueError("one coin per edge required")
    if not np.all(np.abs(coins) == 1):
        raise ValueError("coins must be +-1 in doubled units")
    spins = {}
    for e, (x, y) in enumerate(patch.edges):
        total_x2 = 2 * (int(config.heights[x]) + int(config.heights[y])) \
            + int(coins[e])
        if total_x2 == 0:
            raise ValueError(f"edge {e} total is zero; coins must be "
                             f"half-integers")
        spins[e] = 1 if total_x2 > 0 else -1
    return SpinField(carrier="edges", spins=spins)


# ---------------------------------------------------------------------------
# Cluster census
# ---------------------------------------------------------------------------

@dataclass
class PercolationReport:
    """Census of the induced subgraph's connected components.

    Clusters are ordered largest first (ties by smallest element id);
    ``members`` aligns with ``cluster_sizes``, as do ``wrap_flags``
    (torus) and ``boundary_touching`` (ball).
    """

    cluster_count: int
    cluster_sizes: list
    largest_fraction: float
    wrap_flags: Optional[list]
    boundary_touching: Optional[list]
    trifurcation_boxes: Optional[int]
    carrier_size: int
    members: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


class _DisplacementUnionFind:
    """Union-find with integer lattice offsets for wrap detection."""

    def __init__(self, elements, periods):
        self.parent = {e: e for e in elements}
        self.size = {e: 1 for e in elements}
        self.off = {e: (0, 0) for e in elements}
        self.wrap = {e: [False, False] for e in elements}
        self.periods = periods          # None on balls

    def find(self, x):
        chain = []
        while self.parent[x] != x:
            chain.append(x)
            x = self.parent[x]
        root = x
        total = (0, 0)
        for c in reversed(chain):
            oc = self.off[c]
            total = (total[0] + oc[0], total[1] + oc[1])
            self.parent[c] = root
            self.off[c] = total
        return root

    def union(self, u, v, delta):
        """Join u and v given psi(v) - psi(u) = delta along this edge."""
        ru = self.find(u)
        rv = self.find(v)
        ou = self.off[u]
        ov = self.off[v]
        if ru == rv:
            mismatch = (ov[0] - ou[0] - delta[0], ov[1] - ou[1] - delta[1])
            if mismatch != (0, 0):
                if self.periods is None:
                    raise RuntimeError(
                        "displacement mismatch on a ball patch")
                w, h = self.periods
                if mismatch[0] % w != 0 or mismatch[1] % h != 0:
                    raise RuntimeError(
                        f"wrap mismatch {mismatch} is not a period multiple")
                if mismatch[0] != 0:
                    self.wrap[ru][0] = True
                if mismatch[1] != 0:
                    self.wrap[ru][1] = True
            return
        if self.size[ru] < self.size[rv]:
            ru, rv = rv, ru
            ou, ov = ov, ou
            delta = (-delta[0], -delta[1])
            u, v = v, u
        # psi(rv) - psi(ru) = psi(u) + delta - ov - (psi(u) - ou)
        self.off[rv] = (delta[0] - ov[0] + ou[0], delta[1] - ov[1] + ou[1])
        self.parent[rv] = ru
        self.size[ru] += self.size[rv]
        flags = self.wrap.pop(rv)
        self.wrap[ru][0] |= flags[0]
        self.wrap[ru][1] |= flags[1]


def _carrier_edges(graph: Union[PlanarPatch, DerivedGraph]):
    """(carrier ids, edge triples (a, b, delta), boundary flags, periods)."""
    if isinstance(graph, PlanarPatch):
        ids = list(range(graph.n_vertices))
        triples = []
        for e, (a, b) in enumerate(graph.edges):
            d = graph.edge_disp[e]
            triples.append((int(a), int(b), (int(d[0]), int(d[1]))))
        on_boundary = np.zeros(graph.n_vertices, dtype=bool)
        on_boundary[graph.boundary] = True
        flags = {v: bool(on_boundary[v]) for v in ids}
        periods = (graph.topology[1], graph.topology[2]) \
            if graph.is_torus else None
        return ids, triples, flags, periods
    base = graph.base
    ids = [int(v) for v in graph.nodes]
    cells = base.cells
    triples = []
    for i, (a, b) in enumerate(graph.edges):
        na, nb = int(graph.nodes[a]), int(graph.nodes[b])
        wrap = graph.edge_wrap[i]
        if graph.kind == "line_graph":
            ca = cells[base.edges[na][0]]
            cb = cells[base.edges[nb][0]]
        else:
            ca = cells[na]
            cb = cells[nb]
        delta = (int(cb[0]) - int(ca[0]) + int(wrap[0]),
                 int(cb[1]) - int(ca[1]) + int(wrap[1]))
        triples.append((na, nb, delta))
    flags = {int(v): bool(t)
             for v, t in zip(graph.nodes, graph.node_boundary)}
    periods = (base.topology[1], base.topology[2]) \
        if base.is_torus else None
    return ids, triples, flags, periods


def clusters(graph: Union[PlanarPatch, DerivedGraph], subset,
             box_radius: Optional[int] = None) -> PercolationReport:
    """Connected-component census of the subgraph induced by ``subset``.

    ``subset`` holds carrier element ids: vertex ids for patches and
    for the odd-vertex graph, edge ids for the line graph.  Passing
    ``box_radius`` on a patch additionally counts trifurcation boxes.
    """
    ids, triples, boundary_flags, periods = _carrier_edges(graph)
    id_set = set(ids)
    chosen = set(int(v) for v in subset)
    stray = chosen - id_set
    if stray:
        raise ValueError(
            f"subset elements {sorted(stray)[:4]} are not carrier elements")

    uf = _DisplacementUnionFind(sorted(chosen), periods)
    for a, b, delta in triples:
        if a in chosen and b in chosen:
            uf.union(a, b, delta)

    groups: dict = {}
    for v in sorted(chosen):
        groups.setdefault(uf.find(v), []).append(v)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), g[0]))

    carrier_size = len(ids)
    sizes = [len(g) for g in ordered]
    is_torus = periods is not None
    wrap_flags = None
    touching = None
    if is_torus:
        wrap_flags = [tuple(uf.wrap[uf.find(g[0])]) for g in ordered]
    else:
        touching = [any(boundary_flags[v] for v in g) for g in ordered]

    report = PercolationReport(
        cluster_count=len(ordered),
        cluster_sizes=sizes,
        largest_fraction=(max(sizes) / carrier_size if sizes else 0.0),
        wrap_flags=wrap_flags,
        boundary_touching=touching,
        trifurcation_boxes=None,
        carrier_size=carrier_size,
        members=ordered,
        metadata={"infinite_proxy": "wrapping cluster" if is_torus
                  else "cluster touching the rim"},
    )

    if box_radius is not None:
        if not isinstance(graph, PlanarPatch):
            raise ValueError("trifurcation boxes are defined on patches")
        report.trifurcation_boxes = trifurcation_count(
            subset, graph, box_radius)
        report.metadata["box_radius"] = int(box_radius)
        if is_torus:
            report.metadata["size_threshold"] = int(graph.graph_diameter())
            report.metadata["branch_proxy"] = \
                "component size >= graph diameter"
        else:
            report.metadata["branch_proxy"] = "component touching the rim"
    return report


# ---------------------------------------------------------------------------
# Trifurcation boxes
# ---------------------------------------------------------------------------

def _components_within(members: set, removed: set, patch: PlanarPatch):
    """Connected components of members minus removed, as sets."""
    ptr, nbr, _ = patch.adjacency()
    left = set(members) - removed
    seen = set()
    out = []
    for start in sorted(left):
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in nbr[ptr[x]:ptr[x + 1]]:
                y = int(y)
                if y in left and y not in seen:
                    seen.add(y)
                    comp.add(y)
                    queue.append(y)
        out.append(comp)
    return out


def trifurcation_count(subset, patch: PlanarPatch,
                       box_radius: int) -> int:
    """Boxes around root translates whose removal trisects a cluster.

    A box counts when some cluster of the subset meets it and, with the
    box removed, splits into at least three components that reach the
    rim (ball) or have at least graph-diameter many elements (torus).
    """
    chosen = set(int(v) for v in subset)
    if not chosen:
        return 0
    report = clusters(patch, chosen)
    if patch.is_torus:
        threshold = patch.graph_diameter()

        def qualifies(comp):
            return len(comp) >= threshold
    else:
        on_boundary = np.zeros(patch.n_vertices, dtype=bool)
        on_boundary[patch.boundary] = True

        def qualifies(comp):
            return any(on_boundary[v] for v in comp)

    root_site = int(patch.offset_index[patch.root])
    centers = [v for v in range(patch.n_vertices)
               if int(patch.offset_index[v]) == root_site]

    count = 0
    for c in centers:
        dist = patch.bfs_distances([c])
        box = set(int(v) for v in
                  np.flatnonzero((dist >= 0) & (dist <= box_radius)))
        for cluster in report.members:
            if not box.intersection(cluster):
                continue
            comps = _components_within(set(cluster), box, patch)
            if sum(1 for comp in comps if qualifies(comp)) >= 3:
                count += 1
                break
    return count


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def report_to_dict(report: PercolationReport) -> dict:
    return {
        "cluster_count": int(report.cluster_count),
        "cluster_sizes": [int(s) for s in report.cluster_sizes],
        "largest_fraction": report.largest_fraction,
        "wrap_flags": (None if report.wrap_flags is None else
                       [[bool(h), bool(v)] for h, v in report.wrap_flags]),
        "boundary_touching": (None if report.boundary_touching is None else
                              [bool(t) for t in report.boundary_touching]),
        "trifurcation_boxes": (None if report.trifurcation_boxes is None
                               else int(report.trifurcation_boxes)),
        "carrier_size": int(report.carrier_size),
        "metadata": report.metadata,
    }


def report_to_json(report: PercolationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2)


SCAN_CSV_HEADER = ("sample,level,direction,carrier,clusters,"
                   "largest_fraction,wraps_h,wraps_v,trifurcations")


def scan_csv_row(sample: int, level: int, direction: str, carrier: str,
                 report: PercolationReport) -> str:
    """One delimited row of the batch-scan schema."""
    wraps_h = wraps_v = 0
    if report.wrap_flags is not None:
        wraps_h = int(any(h for h, _ in report.wrap_flags))
        wraps_v = int(any(v for _, v in report.wrap_flags))
    tri = "" if report.trifurcation_boxes is None \
        else str(int(report.trifurcation_boxes))
    return ",".join([
        str(int(sample)), str(int(level)), direction, carrier,
        str(int(report.cluster_count)),
        format_float(report.largest_fraction),
        str(wraps_h), str(wraps_v), tri,
    ])
