"""Periodic degree-3 planar lattices and their finite patches.

A lattice family is described by a translation basis, a list of vertex
offsets inside the fundamental cell, and an edge stencil.  Finite
patches come in two topologies: graph-distance balls around a root
vertex (with a one-vertex-thick boundary rim) and rectangular torus
quotients.  Patches carry enough geometry to recover a combinatorial
embedding: every vertex stores its home cell and every edge stores its
displacement in the universal cover, from which rotation systems,
faces, and wrap bookkeeping are derived.

Two derived graphs are supported: the line graph (edges adjacent when
they share an endpoint) and the distance-2 graph on odd-parity
vertices.  Both record, for every derived edge, a face of the base
patch witnessing that the adjacency is face-local.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class QuotientTooSmall(ValueError):
    """Torus quotient produces loops, parallel edges, or breaks parity."""


class NoWitnessFace(ValueError):
    """A derived edge's endpoints share no face of the base patch."""


class NotBipartite(ValueError):
    """Operation requires a bipartite patch with a valid parity labelling."""


# ---------------------------------------------------------------------------
# Lattice families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StencilEdge:
    """One edge orbit: from offset `k_from` in a cell to offset `k_to` in
    the cell shifted by `shift` (in lattice coordinates)."""

    k_from: int
    k_to: int
    shift: tuple[int, int]


@dataclass(frozen=True)
class LatticeSpec:
    """Shift-invariant description of a degree-<=3 periodic planar graph."""

    family: str
    basis: tuple[tuple[float, float], tuple[float, float]]
    offsets: tuple[tuple[float, float], ...]
    stencil: tuple[StencilEdge, ...]
    offset_parity: tuple[int, ...]
    cell_parity: bool        # parity alternates with (u + v) mod 2
    bipartite: bool

    def parity_of(self, k: int, u: int, v: int) -> int:
        p = self.offset_parity[k]
        if self.cell_parity:
            p = (p + u + v) % 2
        return p

    def position_of(self, k: int, u: int, v: int) -> tuple[float, float]:
        (a1x, a1y), (a2x, a2y) = self.basis
        ox, oy = self.offsets[k]
        return (u * a1x + v * a2x + ox, u * a1y + v * a2y + oy)

    def degree_of_offset(self, k: int) -> int:
        d = 0
        for s in self.stencil:
            if s.k_from == k:
                d += 1
            if s.k_to == k:
                d += 1
        return d


_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)


def honeycomb() -> LatticeSpec:
    """Hexagonal tiling: two vertices per cell, all faces hexagons."""
    return LatticeSpec(
        family="honeycomb",
        basis=((_SQRT3, 0.0), (_SQRT3 / 2.0, 1.5)),
        offsets=((0.0, 0.0), (0.0, 1.0)),
        stencil=(
            StencilEdge(0, 1, (0, 0)),
            StencilEdge(1, 0, (0, 1)),
            StencilEdge(1, 0, (-1, 1)),
        ),
        offset_parity=(0, 1),
        cell_parity=False,
        bipartite=True,
    )


def truncated_square() -> LatticeSpec:
    """Truncated square tiling (one square and one octagon per cell).

    The parity classes alternate with the cell coordinate sum, so torus
    quotients keep a consistent two-colouring only for even periods.
    """
    d = _SQRT2 / 2.0
    p = 1.0 + _SQRT2
    return LatticeSpec(
        family="truncated_square",
        basis=((p, 0.0), (0.0, p)),
        offsets=((d, 0.0), (0.0, d), (-d, 0.0), (0.0, -d)),
        stencil=(
            StencilEdge(0, 1, (0, 0)),
            StencilEdge(1, 2, (0, 0)),
            StencilEdge(2, 3, (0, 0)),
            StencilEdge(3, 0, (0, 0)),
            StencilEdge(0, 2, (1, 0)),
            StencilEdge(1, 3, (0, 1)),
        ),
        offset_parity=(0, 1, 0, 1),
        cell_parity=True,
        bipartite=True,
    )


def series_expanded(base: LatticeSpec, n_series: int) -> LatticeSpec:
    """Replace every edge of `base` with a chain of `n_series` edges.

    The inserted vertices have degree 2 and sit evenly spaced on the
    straight segment joining the original endpoints.  The result is
    bipartite iff `n_series` is even or the base is bipartite.
    """
    if n_series < 1:
        raise ValueError("n_series must be >= 1")
    if n_series == 1:
        return base

    n = n_series
    bipartite = (n % 2 == 0) or base.bipartite
    if n % 2 == 0:
        # All original vertices land in one parity class; chains alternate.
        base_parity = tuple(0 for _ in base.offsets)
        cell_parity = False
    else:
        base_parity = base.offset_parity
        cell_parity = base.cell_parity
    if not bipartite:
        base_parity = tuple(0 for _ in base.offsets)
        cell_parity = False

    offsets = list(base.offsets)
    parities = list(base_parity)
    stencil: list[StencilEdge] = []
    for s in base.stencil:
        fx, fy = base.offsets[s.k_from]
        du, dv = s.shift
        tx, ty = base.position_of(s.k_to, du, dv)
        first = len(offsets)
        for j in range(1, n):
            t = j / n
            offsets.append((fx + t * (tx - fx), fy + t * (ty - fy)))
            if bipartite:
                if n % 2 == 0:
                    parities.append(j % 2)
                else:
                    parities.append((base_parity[s.k_from] + j) % 2)
            else:
                parities.append(0)
        stencil.append(StencilEdge(s.k_from, first, (0, 0)))
        for j in range(1, n - 1):
            stencil.append(StencilEdge(first + j - 1, first + j, (0, 0)))
        stencil.append(StencilEdge(first + n - 2, s.k_to, s.shift))

    return LatticeSpec(
        family="series_expanded",
        basis=base.basis,
        offsets=tuple(offsets),
        stencil=tuple(stencil),
        offset_parity=tuple(parities),
        cell_parity=cell_parity,
        bipartite=bipartite,
    )


SPEC_BUILDERS = {
    "honeycomb": honeycomb,
    "truncated_square": truncated_square,
}


def spec_from_config(cfg: dict) -> LatticeSpec:
    """Build a LatticeSpec from its JSON configuration form."""
    family = cfg.get("family")
    if family in SPEC_BUILDERS:
        return SPEC_BUILDERS[family]()
    if family == "series_expanded":
        base = spec_from_config(cfg["base"])
        return series_expanded(base, int(cfg["n_series"]))
    raise ValueError(f"unknown lattice family: {family!r}")


# ---------------------------------------------------------------------------
# Faces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """A closed walk of the embedding, listed as directed edge steps."""

    directed: tuple[int, ...]      # directed edge ids (2*e or 2*e+1)
    vertices: tuple[int, ...]      # tail vertex of each step
    edges: tuple[int, ...]         # undirected edge ids, in walk order
    area: float                    # signed area of the unwrapped walk
    is_outer: bool = False

    def __len__(self) -> int:
        return len(self.directed)


# ---------------------------------------------------------------------------
# Patches
# ---------------------------------------------------------------------------

@dataclass
class PlanarPatch:
    """A finite piece of a periodic cubic planar graph.

    Vertices are dense integers.  ``interior`` lists the vertices whose
    heights a sampler may move; ``boundary`` lists the frozen rim (empty
    for torus patches).  ``edges`` contains every edge with at least one
    interior endpoint; each edge stores its displacement in lattice
    coordinates (``edge_disp``), its geometric direction in the
    universal cover (``edge_vec``), and the stencil orbit it came from.
    """

    topology: tuple
    positions: np.ndarray
    parity: np.ndarray
    cells: np.ndarray
    offset_index: np.ndarray
    edges: np.ndarray
    edge_disp: np.ndarray
    edge_vec: np.ndarray
    edge_orbit: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    root: int
    bipartite: bool
    spec: Optional[LatticeSpec] = None

    _adj: Optional[tuple] = field(default=None, repr=False)
    _faces: Optional[list] = field(default=None, repr=False)
    _diameter: Optional[int] = field(default=None, repr=False)

    # -- basic accessors ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_torus(self) -> bool:
        return self.topology[0] == "torus"

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.interior] = True
        return mask

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR adjacency: (ptr, neighbour vertex ids, incident edge ids)."""
        if self._adj is None:
            n = self.n_vertices
            deg = np.zeros(n, dtype=np.int64)
            for a, b in self.edges:
                deg[a] += 1
                deg[b] += 1
            ptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(deg, out=ptr[1:])
            nbr = np.zeros(ptr[-1], dtype=np.int64)
            eid = np.zeros(ptr[-1], dtype=np.int64)
            fill = ptr[:-1].copy()
            for e, (a, b) in enumerate(self.edges):
                nbr[fill[a]] = b
                eid[fill[a]] = e
                fill[a] += 1
                nbr[fill[b]] = a
                eid[fill[b]] = e
                fill[b] += 1
            self._adj = (ptr, nbr, eid)
        return self._adj

    def neighbors(self, v: int) -> np.ndarray:
        ptr, nbr, _ = self.adjacency()
        return nbr[ptr[v]:ptr[v + 1]]

    def degree(self, v: int) -> int:
        ptr, _, _ = self.adjacency()
        return int(ptr[v + 1] - ptr[v])

    def edge_index(self) -> dict[tuple[int, int], int]:
        """Map from unordered endpoint pair to edge id (first occurrence)."""
        idx: dict[tuple[int, int], int] = {}
        for e, (a, b) in enumerate(self.edges):
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            idx.setdefault(key, e)
        return idx

    # -- embedding ----------------------------------------------------------

    def directed_vector(self, d: int) -> np.ndarray:
        """Geometric direction of directed edge id `d` (2*e or 2*e+1)."""
        vec = self.edge_vec[d // 2]
        return vec if d % 2 == 0 else -vec

    def rotation_system(self) -> list[list[int]]:
        """For each vertex, outgoing directed edges in counterclockwise
        order of their geometric angle."""
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for e, (a, b) in enumerate(self.edges):
            out[a].append(2 * e)
            out[b].append(2 * e + 1)
        for v in range(self.n_vertices):
            out[v].sort(key=lambda d: math.atan2(*reversed(
                tuple(self.directed_vector(d)))))
        return out

    def faces(self) -> list[Face]:
        """All faces of the embedding, traced from the rotation system.

        Interior faces come out counterclockwise (positive area).  On
        ball patches the face with the smallest signed area is marked
        as the outer face.
        """
        if self._faces is not None:
            return self._faces
        rotation = self.rotation_system()
        slot: dict[int, int] = {}
        for v in range(self.n_vertices):
            for i, d in enumerate(rotation[v]):
                slot[d] = i

        def head(d: int) -> int:
            e, r = divmod(d, 2)
            return int(self.edges[e][1 - r])

        def next_step(d: int) -> int:
            v = head(d)
            ring = rotation[v]
            i = slot[d ^ 1]
            return ring[(i - 1) % len(ring)]

        seen = set()
        faces: list[Face] = []
        for d0 in sorted(slot):
            if d0 in seen:
                continue
            walk = []
            d = d0
            while d not in seen:
                seen.add(d)
                walk.append(d)
                d = next_step(d)
            # Accumulate unwrapped coordinates for the signed area.
            x = y = 0.0
            area = 0.0
            for d in walk:
                vx, vy = self.directed_vector(d)
                area += x * (y + vy) - (x + vx) * y
                x += vx
                y += vy
            area *= 0.5
            tails = tuple(int(self.edges[d // 2][d % 2]) for d in walk)
            faces.append(Face(
                directed=tuple(walk),
                vertices=tails,
                edges=tuple(d // 2 for d in walk),
                area=area,
            ))
        if not self.is_torus and faces:
            outer = min(range(len(faces)), key=lambda i: faces[i].area)
            faces = [
                Face(f.directed, f.vertices, f.edges, f.area, i == outer)
                for i, f in enumerate(faces)
            ]
        self._faces = faces
        return faces

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + len(self.faces())

    def validate_embedding(self) -> None:
        expected = 0 if self.is_torus else 2
        chi = self.euler_characteristic()
        if chi != expected:
            raise RuntimeError(
                f"embedding check failed: V-E+F = {chi}, expected {expected}")

    # -- graph utilities ----------------------------------------------------

    def bfs_distances(self, sources: Iterable[int]) -> np.ndarray:
        """Graph distance from the nearest source (-1 where unreachable)."""
        dist = np.full(self.n_vertices, -1, dtype=np.int64)
        queue: deque[int] = deque()
        for s in sources:
            if dist[s] < 0:
                dist[s] = 0
                queue.append(int(s))
        ptr, nbr, _ = self.adjacency()
        while queue:
            v = queue.popleft()
            for w in nbr[ptr[v]:ptr[v + 1]]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(int(w))
        return dist

    def graph_diameter(self) -> int:
        if self._diameter is None:
            best = 0
            for v in range(self.n_vertices):
                d = self.bfs_distances([v])
                best = max(best, int(d.max()))
            self._diameter = best
        return self._diameter


# ---------------------------------------------------------------------------
# Patch builders
# ---------------------------------------------------------------------------

def _finish_patch(
    spec: Optional[LatticeSpec],
    topology: tuple,
    keys: list[tuple[int, int, int]],
    interior_count: int,
    edge_records: list[tuple[int, int, int]],
    root: int,
    positions: np.ndarray,
    parity: np.ndarray,
    cells: np.ndarray,
    offset_index: np.ndarray,
    bipartite: bool,
) -> PlanarPatch:
    m = len(edge_records)
    edges = np.zeros((m, 2), dtype=np.int64)
    edge_disp = np.zeros((m, 2), dtype=np.int64)
    edge_vec = np.zeros((m, 2), dtype=np.float64)
    edge_orbit = np.zeros(m, dtype=np.int64)
    assert spec is not None
    for i, (a, b, s_idx) in enumerate(edge_records):
        s = spec.stencil[s_idx]
        edges[i] = (a, b)
        edge_disp[i] = s.shift
        fx, fy = spec.offsets[s.k_from]
        tx, ty = spec.position_of(s.k_to, *s.shift)
        edge_vec[i] = (tx - fx, ty - fy)
        edge_orbit[i] = s_idx
    patch = PlanarPatch(
        topology=topology,
        positions=positions,
        parity=parity,
        cells=cells,
        offset_index=offset_index,
        edges=edges,
        edge_disp=edge_disp,
        edge_vec=edge_vec,
        edge_orbit=edge_orbit,
        interior=np.arange(interior_count, dtype=np.int64),
        boundary=np.arange(interior_count, len(keys), dtype=np.int64),
        root=root,
        bipartite=bipartite,
        spec=spec,
    )
    return patch


def _infinite_neighbors(spec: LatticeSpec, u: int, v: int, k: int):
    for s_idx, s in enumerate(spec.stencil):
        du, dv = s.shift
        if s.k_from == k:
            yield (u + du, v + dv, s.k_to), s_idx, True
        if s.k_to == k:
            yield (u - du, v - dv, s.k_from), s_idx, False


def build_ball(spec: LatticeSpec, n: int, root_offset: int = 0) -> PlanarPatch:
    """Graph-distance ball of radius `n` around a root vertex.

    Interior vertices are those within distance `n`; the boundary is the
    set of vertices at distance exactly `n + 1`.  Edges between two
    boundary vertices are not part of the patch.  Ids are assigned
    interior first, each block sorted by lattice coordinates.
    """
    if n < 0:
        raise ValueError("ball radius must be >= 0")
    root_key = (0, 0, root_offset)
    dist = {root_key: 0}
    frontier = [root_key]
    for depth in range(1, n + 2):
        new = []
        for key in frontier:
            for nxt, _, _ in _infinite_neighbors(spec, *key):
                if nxt not in dist:
                    dist[nxt] = depth
                    new.append(nxt)
        frontier = new

    interior_keys = sorted(k for k, d in dist.items() if d <= n)
    boundary_keys = sorted(k for k, d in dist.items() if d == n + 1)
    keys = interior_keys + boundary_keys
    ids = {key: i for i, key in enumerate(keys)}
    n_int = len(interior_keys)

    positions = np.array(
        [spec.position_of(k, u, v) for (u, v, k) in keys], dtype=np.float64)
    parity = np.array(
        [spec.parity_of(k, u, v) for (u, v, k) in keys], dtype=np.int8)
    cells = np.array([(u, v) for (u, v, k) in keys], dtype=np.int64)
    offset_index = np.array([k for (_, _, k) in keys], dtype=np.int64)

    edge_records: list[tuple[int, int, int]] = []
    for a_id, (u, v, k) in enumerate(keys):
        for s_idx, s in enumerate(spec.stencil):
            if s.k_from != k:
                continue
            to_key = (u + s.shift[0], v + s.shift[1], s.k_to)
            b_id = ids.get(to_key)
            if b_id is None:
                continue
            if a_id >= n_int and b_id >= n_int:
                continue  # both endpoints on the rim
            edge_records.append((a_id, b_id, s_idx))

    patch = _finish_patch(
        spec, ("ball", n), keys, n_int, edge_records,
        root=ids[root_key], positions=positions, parity=parity,
        cells=cells, offset_index=offset_index, bipartite=spec.bipartite)
    patch.validate_embedding()
    return patch


def build_torus(spec: LatticeSpec, w: int, h: int,
                root_offset: int = 0) -> PlanarPatch:
    """Quotient of the infinite lattice by `w` and `h` basis periods.

    Every vertex is interior; the boundary is empty.  Raises
    QuotientTooSmall if the quotient produces self-loops or parallel
    edges, or if it breaks the two-colouring of a bipartite family.
    """
    if w < 1 or h < 1:
        raise QuotientTooSmall("torus periods must be positive")
    n_off = len(spec.offsets)

    def vid(u: int, v: int, k: int) -> int:
        return ((u % w) * h + (v % h)) * n_off + k

    keys = [(u, v, k) for u in range(w) for v in range(h)
            for k in range(n_off)]
    positions = np.array(
        [spec.position_of(k, u, v) for (u, v, k) in keys], dtype=np.float64)
    parity = np.array(
        [spec.parity_of(k, u, v) for (u, v, k) in keys], dtype=np.int8)
    cells = np.array([(u, v) for (u, v, k) in keys], dtype=np.int64)
    offset_index = np.array([k for (_, _, k) in keys], dtype=np.int64)

    edge_records: list[tuple[int, int, int]] = []
    seen_pairs: dict[tuple[int, int], tuple[int, int, int]] = {}
    for u in range(w):
        for v in range(h):
            for s_idx, s in enumerate(spec.stencil):
                a = vid(u, v, s.k_from)
                b = vid(u + s.shift[0], v + s.shift[1], s.k_to)
                if a == b:
                    raise QuotientTooSmall(
                        f"quotient {w}x{h} creates a self-loop on "
                        f"{spec.family}")
                key = (a, b) if a < b else (b, a)
                if key in seen_pairs:
                    raise QuotientTooSmall(
                        f"quotient {w}x{h} creates parallel edges on "
                        f"{spec.family}")
                seen_pairs[key] = (a, b, s_idx)
                edge_records.append((a, b, s_idx))

    if spec.bipartite:
        for a, b, _ in edge_records:
            if parity[a] == parity[b]:
                raise QuotientTooSmall(
                    f"quotient {w}x{h} breaks the parity classes of "
                    f"{spec.family}; use even periods")

    patch = _finish_patch(
        spec, ("torus", w, h), keys, len(keys), edge_records,
        root=vid(0, 0, root_offset), positions=positions, parity=parity,
        cells=cells, offset_index=offset_index, bipartite=spec.bipartite)
    patch.validate_embedding()
    return patch


def custom_patch(
    positions: Sequence[tuple[float, float]],
    edges: Sequence[tuple[int, int]],
    interior: Sequence[int],
    root: int,
    parity: Optional[Sequence[int]] = None,
    radius: int = 0,
) -> PlanarPatch:
    """Hand-built patch for fixtures: straight-line embedding, ball topology.

    The boundary is every vertex not listed as interior.  Parity labels
    default to a breadth-first two-colouring when one exists.
    """
    n = len(positions)
    pos = np.asarray(positions, dtype=np.float64)
    edge_arr = np.asarray(edges, dtype=np.int64)
    interior_set = set(int(v) for v in interior)
    order = sorted(range(n), key=lambda v: (v not in interior_set, v))
    remap = {old: new for new, old in enumerate(order)}

    pos = pos[order]
    m = len(edge_arr)
    new_edges = np.array(
        [(remap[int(a)], remap[int(b)]) for a, b in edge_arr], dtype=np.int64)
    edge_vec = pos[new_edges[:, 1]] - pos[new_edges[:, 0]]

    if parity is not None:
        par = np.array([parity[old] for old in order], dtype=np.int8)
        bipartite = all(par[a] != par[b] for a, b in new_edges)
    else:
        par = np.full(n, -1, dtype=np.int8)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in new_edges:
            adj[a].append(int(b))
            adj[b].append(int(a))
        bipartite = True
        for start in range(n):
            if par[start] >= 0:
                continue
            par[start] = 0
            queue = deque([start])
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if par[y] < 0:
                        par[y] = 1 - par[x]
                        queue.append(y)
                    elif par[y] == par[x]:
                        bipartite = False
        if not bipartite:
            par = np.zeros(n, dtype=np.int8)

    patch = PlanarPatch(
        topology=("ball", radius),
        positions=pos,
        parity=par,
        cells=np.zeros((n, 2), dtype=np.int64),
        offset_index=np.full(n, -1, dtype=np.int64),
        edges=new_edges,
        edge_disp=np.zeros((m, 2), dtype=np.int64),
        edge_vec=edge_vec,
        edge_orbit=np.full(m, -1, dtype=np.int64),
        interior=np.arange(len(interior_set), dtype=np.int64),
        boundary=np.arange(len(interior_set), n, dtype=np.int64),
        root=remap[int(root)],
        bipartite=bool(bipartite),
        spec=None,
    )
    return patch


# ---------------------------------------------------------------------------
# Derived graphs
# ---------------------------------------------------------------------------

@dataclass
class DerivedGraph:
    """A graph derived from a patch, with face witnesses per derived edge.

    ``nodes`` are ids of base elements (edge ids for the line graph,
    vertex ids for the odd-vertex graph).  ``edges`` index into
    ``nodes``.  ``edge_wrap`` stores, per derived edge, the lattice
    displacement mismatch accumulated when the adjacency crosses a
    torus seam; it is zero everywhere on ball patches.
    """

    kind: str
    base: PlanarPatch
    nodes: np.ndarray
    edges: np.ndarray
    edge_wrap: np.ndarray
    witness_faces: np.ndarray
    node_boundary: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        seen = set()
        for a, b in self.edges:
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            if key in seen:
                continue
            seen.add(key)
            deg[a] += 1
            deg[b] += 1
        return deg


def _face_membership(patch: PlanarPatch):
    """Per-edge and per-vertex sets of incident face indices."""
    edge_faces: list[set[int]] = [set() for _ in range(patch.n_edges)]
    vertex_faces: list[set[int]] = [set() for _ in range(patch.n_vertices)]
    for i, f in enumerate(patch.faces()):
        for e in f.edges:
            edge_faces[e].add(i)
        for v in f.vertices:
            vertex_faces[v].add(i)
    return edge_faces, vertex_faces


def _pick_witness(shared: set[int], faces: list[Face],
                  what: str) -> int:
    if not shared:
        raise NoWitnessFace(
            f"derived edge between {what} shares no face of the base patch")
    inner = [i for i in shared if not faces[i].is_outer]
    if inner:
        return min(inner)
    return min(shared)


def _edge_cover_cell(patch: PlanarPatch, e: int, endpoint: int) -> np.ndarray:
    """Cover cell of `endpoint` when edge `e` is lifted at its home cell."""
    a, b = patch.edges[e]
    home = patch.cells[a]
    if endpoint == a:
        return home.copy()
    return home + patch.edge_disp[e]


def line_graph(patch: PlanarPatch) -> DerivedGraph:
    """Adjacency of patch edges that share an endpoint.

    Every derived edge records a base face containing both of its
    endpoint edges.
    """
    edge_faces, _ = _face_membership(patch)
    faces = patch.faces()
    ptr, nbr, eid = patch.adjacency()
    boundary_mask = np.zeros(patch.n_vertices, dtype=bool)
    boundary_mask[patch.boundary] = True

    records = []
    for v in range(patch.n_vertices):
        incident = sorted(int(e) for e in eid[ptr[v]:ptr[v + 1]])
        for i in range(len(incident)):
            for j in range(i + 1, len(incident)):
                e1, e2 = incident[i], incident[j]
                w = _pick_witness(edge_faces[e1] & edge_faces[e2], faces,
                                  f"edges {e1} and {e2}")
                # Displacement bookkeeping through the shared vertex.
                lift_v = _edge_cover_cell(patch, e1, v)
                a2, b2 = patch.edges[e2]
                if v == a2:
                    lift_e2 = lift_v
                else:
                    lift_e2 = lift_v - patch.edge_disp[e2]
                wrap = lift_e2 - patch.cells[patch.edges[e2][0]]
                records.append((e1, e2, int(wrap[0]), int(wrap[1]), w))

    nodes = np.arange(patch.n_edges, dtype=np.int64)
    node_boundary = np.array(
        [bool(boundary_mask[a] or boundary_mask[b]) for a, b in patch.edges])
    uniq = sorted(set(records))
    edges_arr = np.array([(r[0], r[1]) for r in uniq], dtype=np.int64)
    wrap_arr = np.array([(r[2], r[3]) for r in uniq], dtype=np.int64)
    wit_arr = np.array([r[4] for r in uniq], dtype=np.int64)
    if len(uniq) == 0:
        edges_arr = edges_arr.reshape(0, 2)
        wrap_arr = wrap_arr.reshape(0, 2)
    return DerivedGraph(
        kind="line_graph", base=patch, nodes=nodes, edges=edges_arr,
        edge_wrap=wrap_arr, witness_faces=wit_arr,
        node_boundary=node_boundary)


def odd_vertex_graph(patch: PlanarPatch) -> DerivedGraph:
    """Distance-2 adjacency on the odd-parity vertex class.

    Two odd vertices are adjacent when they share a common neighbour in
    the base patch.  Requires a bipartite patch.
    """
    if not patch.bipartite:
        raise NotBipartite("odd-vertex graph needs a bipartite patch")
    _, vertex_faces = _face_membership(patch)
    faces = patch.faces()
    ptr, nbr, eid = patch.adjacency()
    boundary_mask = np.zeros(patch.n_vertices, dtype=bool)
    boundary_mask[patch.boundary] = True

    odd = np.flatnonzero(np.asarray(patch.parity) == 1)
    index_of = {int(v): i for i, v in enumerate(odd)}

    records = []
    for mid in range(patch.n_vertices):
        if patch.parity[mid] == 1:
            continue
        ring = [(int(nbr[t]), int(eid[t]))
                for t in range(ptr[mid], ptr[mid + 1])]
        ring = [(x, e) for x, e in ring if patch.parity[x] == 1]
        for i in range(len(ring)):
            for j in range(i + 1, len(ring)):
                (x, ex), (z, ez) = ring[i], ring[j]
                if x == z:
                    continue
                w = _pick_witness(vertex_faces[x] & vertex_faces[z], faces,
                                  f"vertices {x} and {z}")
                # Cover displacement x -> mid -> z.
                ax, bx = patch.edges[ex]
                dx = patch.edge_disp[ex] if ax == x else -patch.edge_disp[ex]
                az, bz = patch.edges[ez]
                dz = patch.edge_disp[ez] if az == mid else -patch.edge_disp[ez]
                lift_z = patch.cells[x] + dx + dz
                wrap = lift_z - patch.cells[z]
                a, b = index_of[x], index_of[z]
                if a > b:
                    a, b = b, a
                    wrap = -wrap
                records.append((a, b, int(wrap[0]), int(wrap[1]), w))

    uniq = sorted(set(records))
    edges_arr = np.array([(r[0], r[1]) for r in uniq], dtype=np.int64)
    wrap_arr = np.array([(r[2], r[3]) for r in uniq], dtype=np.int64)
    wit_arr = np.array([r[4] for r in uniq], dtype=np.int64)
    if len(uniq) == 0:
        edges_arr = edges_arr.reshape(0, 2)
        wrap_arr = wrap_arr.reshape(0, 2)
    return DerivedGraph(
        kind="odd_vertex_graph", base=patch, nodes=odd.astype(np.int64),
        edges=edges_arr, edge_wrap=wrap_arr, witness_faces=wit_arr,
        node_boundary=boundary_mask[odd])


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def patch_to_dict(patch: PlanarPatch) -> dict:
    """JSON-ready document for a patch; field order is part of the format."""
    if patch.is_torus:
        topology = {"kind": "torus",
                    "w": int(patch.topology[1]), "h": int(patch.topology[2])}
    else:
        topology = {"kind": "ball", "n": int(patch.topology[1])}
    return {
        "vertices": [
            {"id": i,
             "x": float(patch.positions[i][0]),
             "y": float(patch.positions[i][1]),
             "parity": int(patch.parity[i])}
            for i in range(patch.n_vertices)
        ],
        "edges": [[int(a), int(b)] for a, b in patch.edges],
        "interior": [int(v) for v in patch.interior],
        "boundary": [int(v) for v in patch.boundary],
        "root": int(patch.root),
        "topology": topology,
    }


def patch_to_json(patch: PlanarPatch) -> str:
    return json.dumps(patch_to_dict(patch), indent=2)
