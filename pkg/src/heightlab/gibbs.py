"""Gibbs measures for integer height functions on finite patches.

The measure on a patch weights a height assignment by exp(-H) with
H = sum over patch edges of V(phi(b) - phi(a)).  Heights on the
boundary rim (plus any explicitly pinned vertices) are frozen; the
remaining interior heights are free.  Two samplers target the measure:

* an exhaustive enumerator for small interiors, used as the oracle;
* a heat-bath Markov chain, with a cached per-site engine for small
  patches and a vectorised independent-set engine for large ones.

Both engines resample one site at a time from the exact single-site
conditional, so every sweep preserves the target measure.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .lattice import PlanarPatch
from .potentials import EdgePotentials, Potential

INF = math.inf


class TooLarge(ValueError):
    """Interior exceeds the exhaustive enumeration cap."""


class Infeasible(ValueError):
    """No height assignment has finite energy."""


class StuckSite(RuntimeError):
    """A single-site conditional has zero mass on its window."""


# ---------------------------------------------------------------------------
# Height configurations
# ---------------------------------------------------------------------------

@dataclass
class HeightConfig:
    """Integer heights on every patch vertex, frozen outside `free`."""

    heights: np.ndarray            # (n_vertices,) int64
    free: np.ndarray               # vertex ids the samplers may move
    parity: bool = False           # heights match vertex parity mod 2

    def copy(self) -> "HeightConfig":
        return HeightConfig(self.heights.copy(), self.free, self.parity)


def zero_boundary(patch: PlanarPatch, parity: bool = False) -> dict[int, int]:
    """Boundary condition pinning the rim at zero.

    With the parity constraint the rim takes the parity-correct value
    in {0, 1} instead.  Torus patches have no rim, so the root is
    pinned to keep the measure normalisable.
    """
    pinned = [int(v) for v in patch.boundary]
    if not pinned:
        pinned = [patch.root]
    if parity:
        return {v: int(patch.parity[v]) for v in pinned}
    return {v: 0 for v in pinned}


def init_config(patch: PlanarPatch, bc: dict[int, int],
                parity: bool = False,
                pots: Optional[EdgePotentials] = None) -> HeightConfig:
    """Admissible starting configuration extending the pinned heights.

    Free vertices are filled outward from the pinned set.  Without a
    potential, each vertex copies an assigned neighbour (stepping by
    one toward zero when the parity constraint demands it); with one,
    the fill picks the value closest to the neighbour that keeps every
    edge into already-assigned vertices at finite energy.
    """
    heights = np.zeros(patch.n_vertices, dtype=np.int64)
    assigned = np.zeros(patch.n_vertices, dtype=bool)
    for v, val in bc.items():
        if parity and (int(val) - int(patch.parity[v])) % 2 != 0:
            raise ValueError(
                f"pinned height {val} at vertex {v} breaks the parity rule")
        heights[v] = int(val)
        assigned[v] = True

    ptr, nbr, eid = patch.adjacency()
    from collections import deque
    queue = deque(sorted(int(v) for v in bc))
    while queue:
        x = queue.popleft()
        for y in nbr[ptr[x]:ptr[x + 1]]:
            y = int(y)
            if assigned[y]:
                continue
            base = int(heights[x])
            if pots is None:
                if parity and (base - int(patch.parity[y])) % 2 != 0:
                    base = base - 1 if base > 0 else base + 1
                heights[y] = base
            else:
                heights[y] = _feasible_fill(patch, pots, heights, assigned,
                                            ptr, nbr, eid, y, base, parity)
            assigned[y] = True
            queue.append(y)
    # Vertices untouched by the flood fill (no pinning at all) stay at a
    # parity-correct default.
    for v in np.flatnonzero(~assigned):
        heights[v] = int(patch.parity[v]) if parity else 0

    interior_mask = patch.interior_mask()
    for v in bc:
        interior_mask[v] = False
    free = np.flatnonzero(interior_mask).astype(np.int64)
    return HeightConfig(heights=heights, free=free, parity=parity)


def _feasible_fill(patch, pots, heights, assigned, ptr, nbr, eid,
                   y: int, base: int, parity: bool) -> int:
    """Height for y near `base` with finite edges to assigned vertices."""
    pairs = []
    for w, e in zip(nbr[ptr[y]:ptr[y + 1]], eid[ptr[y]:ptr[y + 1]]):
        if assigned[int(w)]:
            a, b = patch.edges[int(e)]
            sign = 1 if int(a) == y else -1
            pairs.append((sign, int(heights[int(w)]),
                          pots.for_edge(patch, int(e))))
    for radius in range(0, 65):
        for cand in ((base + radius,) if radius == 0
                     else (base + radius, base - radius)):
            if parity and (cand - int(patch.parity[y])) % 2 != 0:
                continue
            if all(pot.value(sign * (hw - cand)) < INF
                   for sign, hw, pot in pairs):
                return cand
    raise Infeasible(
        f"no finite-energy height near {base} for vertex {y}; "
        f"the pinned heights are incompatible")


def config_energy(patch: PlanarPatch, pots: EdgePotentials,
                  heights: np.ndarray) -> float:
    total = 0.0
    for e, (a, b) in enumerate(patch.edges):
        v = pots.for_edge(patch, e).value(int(heights[b]) - int(heights[a]))
        if v == INF:
            return INF
        total += v
    return total


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

@dataclass
class JointDistribution:
    """Exhaustive finite-energy support with normalised probabilities."""

    vertices: tuple[int, ...]          # free vertices, in assignment order
    support: np.ndarray                # (N, len(vertices)) int64
    probabilities: np.ndarray          # (N,) float64, sums to 1
    log_z: float
    _index: Optional[dict] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.support)

    def index(self) -> dict[tuple[int, ...], float]:
        if self._index is None:
            self._index = {
                tuple(int(x) for x in row): float(p)
                for row, p in zip(self.support, self.probabilities)
            }
        return self._index

    def prob_of(self, assignment: Sequence[int]) -> float:
        return self.index().get(tuple(int(x) for x in assignment), 0.0)

    def marginal(self, vertex: int) -> dict[int, float]:
        j = self.vertices.index(int(vertex))
        out: dict[int, float] = {}
        for row, p in zip(self.support, self.probabilities):
            out[int(row[j])] = out.get(int(row[j]), 0.0) + float(p)
        return out

    def mean(self, vertex: int) -> float:
        return math.fsum(v * p for v, p in self.marginal(vertex).items())

    def variance(self, vertex: int) -> float:
        m = self.mean(vertex)
        return math.fsum(p * (v - m) ** 2
                         for v, p in self.marginal(vertex).items())


def _assignment_order(patch: PlanarPatch, free: list[int],
                      fixed: set[int]) -> list[int]:
    """Order free vertices so each one touches earlier or fixed vertices
    where possible; this lets the enumerator prune infinite branches."""
    ptr, nbr, _ = patch.adjacency()
    order: list[int] = []
    placed = set(fixed)
    remaining = set(free)
    frontier = sorted(v for v in remaining if any(
        int(w) in placed for w in nbr[ptr[v]:ptr[v + 1]]))
    while remaining:
        if not frontier:
            frontier = [min(remaining)]
        v = frontier.pop(0)
        if v not in remaining:
            continue
        order.append(v)
        remaining.discard(v)
        placed.add(v)
        newly = sorted(w for w in remaining if w not in frontier and any(
            int(u) in placed for u in nbr[ptr[w]:ptr[w + 1]]))
        frontier = sorted(set(frontier) | set(newly) & remaining)
    return order


def enumerate_distribution(
    vertices: Sequence[int],
    candidates: dict[int, Sequence[int]],
    edge_terms: Sequence[tuple],
    fixed: dict[int, int],
) -> JointDistribution:
    """Core enumeration engine shared by the Gibbs and conditional laws.

    ``edge_terms`` lists (a, b, potential) triples; endpoints may be
    free vertices or keys of ``fixed``.  Branches whose partial energy
    is already infinite are pruned.
    """
    order = [int(v) for v in vertices]
    pos = {v: j for j, v in enumerate(order)}

    base_energy = 0.0
    incoming: list[list[tuple]] = [[] for _ in order]
    for a, b, pot in edge_terms:
        a, b = int(a), int(b)
        a_free, b_free = a in pos, b in pos
        if not a_free and not b_free:
            base_energy += pot.value(fixed[b] - fixed[a])
            continue
        if a_free and b_free:
            hi, lo = (a, b) if pos[a] > pos[b] else (b, a)
            sign = 1 if hi == b else -1
            incoming[pos[hi]].append(("free", pos[lo], sign, pot))
        else:
            v = a if a_free else b
            other = fixed[b] if a_free else fixed[a]
            sign = 1 if v == a else -1
            # Term value: V(sign * (other - phi(v))) with sign folded in.
            incoming[pos[v]].append(("fixed", other, sign, pot))
    if base_energy == INF:
        raise Infeasible("pinned heights alone have infinite energy")

    rows: list[tuple[int, ...]] = []
    energies: list[float] = []
    assignment = [0] * len(order)

    def descend(j: int, acc: float) -> None:
        if j == len(order):
            rows.append(tuple(assignment))
            energies.append(acc)
            return
        for h in candidates[order[j]]:
            assignment[j] = h
            extra = 0.0
            for kind, ref, sign, pot in incoming[j]:
                if kind == "free":
                    diff = sign * (h - assignment[ref])
                else:
                    diff = sign * (ref - h)
                v = pot.value(diff)
                if v == INF:
                    extra = INF
                    break
                extra += v
            if extra < INF:
                descend(j + 1, acc + extra)

    descend(0, base_energy)
    if not rows:
        raise Infeasible("no height assignment has finite energy")

    e_arr = np.array(energies, dtype=np.float64)
    e_min = float(e_arr.min())
    weights = np.exp(-(e_arr - e_min))
    z = math.fsum(weights.tolist())
    probs = weights / z
    log_z = math.log(z) - e_min
    return JointDistribution(
        vertices=tuple(order),
        support=np.array(rows, dtype=np.int64),
        probabilities=probs,
        log_z=log_z,
    )


def exact_distribution(
    patch: PlanarPatch,
    pots: EdgePotentials,
    bc: dict[int, int],
    window: tuple[int, int] | int,
    parity: bool = False,
    cap: int = 12,
) -> JointDistribution:
    """Exhaustive joint law of the free heights under pinned boundary.

    ``window`` is the candidate height range, either a half-width
    around zero or an explicit (lo, hi) pair; the parity flag thins
    each vertex's candidates to its parity class.
    """
    if isinstance(window, int):
        lo, hi = -window, window
    else:
        lo, hi = int(window[0]), int(window[1])
    fixed = {int(v): int(val) for v, val in bc.items()}
    free = [int(v) for v in patch.interior if int(v) not in fixed]
    if len(free) > cap:
        raise TooLarge(
            f"{len(free)} free vertices exceed the enumeration cap {cap}")

    order = _assignment_order(patch, free, set(fixed))
    candidates: dict[int, list[int]] = {}
    for v in order:
        vals = range(lo, hi + 1)
        if parity:
            p = int(patch.parity[v])
            vals = [h for h in vals if (h - p) % 2 == 0]
        else:
            vals = list(vals)
        candidates[v] = vals

    terms = [(int(a), int(b), pots.for_edge(patch, e))
             for e, (a, b) in enumerate(patch.edges)]
    return enumerate_distribution(order, candidates, terms, fixed)


def tv_distance(p: dict[int, float], q: dict[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Heat-bath samplers
# ---------------------------------------------------------------------------

@dataclass
class SamplerConfig:
    """Chain settings; the seed is the only source of randomness."""

    sweeps: int = 10000
    burn_in: int = 1000
    thinning: int = 10
    seed: int = 0
    height_window: int = 8
    engine: str = "auto"           # auto | site | block
    tail_tolerance: float = 1e-12


def validate_window(pots: EdgePotentials, half_width: int,
                    tolerance: float = 1e-12) -> None:
    """Require the single-edge weight beyond the window to be negligible."""
    for pot in pots.distinct():
        mass = pot.mass()
        if pot.tail_mass(half_width) > tolerance * mass:
            raise ValueError(
                f"window half-width {half_width} leaves more than "
                f"{tolerance} relative tail mass for {pot!r}")


def minimal_window(pots: EdgePotentials, tolerance: float = 1e-12,
                   max_width: int = 256) -> int:
    """Smallest half-width whose truncation passes window validation."""
    for w in range(1, max_width + 1):
        try:
            validate_window(pots, w, tolerance)
        except ValueError:
            continue
        return w
    raise ValueError(f"no admissible window up to half-width {max_width}")


def _parity_center(mean: float, target: int) -> int:
    c = int(math.floor(mean + 0.5))
    if (c - target) % 2 != 0:
        c += 1
    return c


class SiteSampler:
    """Sequential heat bath with cached single-site conditionals.

    Sites are scanned in ascending vertex id (construction order is
    lexicographic in lattice coordinates).  The conditional at a site
    depends only on the incident potentials and the neighbour heights
    relative to the window centre, so a small cache serves the entire
    chain on fixtures with few height patterns.
    """

    def __init__(self, patch: PlanarPatch, pots: EdgePotentials,
                 config: HeightConfig, window: int, seed: int):
        self.patch = patch
        self.window = int(window)
        self.parity = config.parity
        self.scan = sorted(int(v) for v in config.free)
        ptr, nbr, eid = patch.adjacency()
        self._site_nbrs = {}
        self._site_pots = {}
        for v in self.scan:
            ns = [int(w) for w in nbr[ptr[v]:ptr[v + 1]]]
            es = [int(e) for e in eid[ptr[v]:ptr[v + 1]]]
            self._site_nbrs[v] = ns
            self._site_pots[v] = tuple(pots.for_edge(patch, e) for e in es)
        self._cache: dict = {}
        self.rng = random.Random(seed)

    def _conditional(self, v: int, nbr_heights: tuple[int, ...]):
        pot_key = self._site_pots[v]
        target = int(self.patch.parity[v]) if self.parity else 0
        mean = sum(nbr_heights) / len(nbr_heights)
        if self.parity:
            center = _parity_center(mean, target)
            step = 2
        else:
            center = int(math.floor(mean + 0.5))
            step = 1
        rel = tuple(h - center for h in nbr_heights)
        key = (pot_key, rel, step)
        hit = self._cache.get(key)
        if hit is not None:
            return center, hit
        w = self.window
        cands = list(range(-(w // step) * step, w - w % step + 1, step))
        cum: list[float] = []
        total = 0.0
        for c in cands:
            logw = 0.0
            for r, pot in zip(rel, pot_key):
                val = pot.value(c - r)
                if val == INF:
                    logw = -INF
                    break
                logw -= val
            total += 0.0 if logw == -INF else math.exp(logw)
            cum.append(total)
        entry = (cands, cum, total)
        self._cache[key] = entry
        return center, entry

    def sweep(self, heights: np.ndarray) -> None:
        rng = self.rng
        h = heights.tolist()
        for v in self.scan:
            nh = tuple(h[w] for w in self._site_nbrs[v])
            center, (cands, cum, total) = self._conditional(v, nh)
            if total <= 0.0:
                raise StuckSite(
                    f"zero conditional mass at vertex {v}; "
                    f"widen the height window")
            u = rng.random() * total
            h[v] = center + cands[bisect.bisect_right(cum, u)]
        for v in self.scan:
            heights[v] = h[v]


class BlockSampler:
    """Vectorised heat bath over independent vertex classes.

    Free vertices are split into classes with no internal edges (the
    parity classes on bipartite patches), and each class is resampled
    simultaneously; because class members never interact, this equals
    a sequential scan ordered class by class.
    """

    def __init__(self, patch: PlanarPatch, pots: EdgePotentials,
                 config: HeightConfig, window: int, seed: int):
        if not pots.is_uniform:
            raise ValueError("block engine requires a uniform potential")
        self.patch = patch
        self.pot = pots.default
        self.window = int(window)
        self.parity = config.parity
        self.rng = np.random.default_rng(seed)

        free = sorted(int(v) for v in config.free)
        colors = self._color(patch, free)
        ptr, nbr, _ = patch.adjacency()
        self.classes = []
        for cls in colors:
            sites = np.array(cls, dtype=np.int64)
            deg = np.array([ptr[v + 1] - ptr[v] for v in cls], dtype=np.int64)
            width = int(deg.max())
            nidx = np.zeros((len(cls), width), dtype=np.int64)
            mask = np.zeros((len(cls), width), dtype=bool)
            for i, v in enumerate(cls):
                ns = nbr[ptr[v]:ptr[v + 1]]
                nidx[i, :len(ns)] = ns
                mask[i, :len(ns)] = True
            target = (patch.parity[sites].astype(np.int64)
                      if self.parity else np.zeros(len(cls), dtype=np.int64))
            self.classes.append((sites, nidx, mask, deg, target))
        step = 2 if self.parity else 1
        self.steps = np.arange(-(self.window // step) * step,
                               self.window - self.window % step + 1, step)

    @staticmethod
    def _color(patch: PlanarPatch, free: list[int]) -> list[list[int]]:
        if patch.bipartite:
            even = [v for v in free if patch.parity[v] == 0]
            odd = [v for v in free if patch.parity[v] == 1]
            return [c for c in (even, odd) if c]
        ptr, nbr, _ = patch.adjacency()
        color = {}
        for v in free:
            used = {color.get(int(w)) for w in nbr[ptr[v]:ptr[v + 1]]}
            c = 0
            while c in used:
                c += 1
            color[v] = c
        n_colors = max(color.values()) + 1
        return [[v for v in free if color[v] == c] for c in range(n_colors)]

    def sweep(self, heights: np.ndarray) -> None:
        for sites, nidx, mask, deg, target in self.classes:
            nh = heights[nidx]
            mean = np.where(mask, nh, 0).sum(axis=1) / deg
            center = np.floor(mean + 0.5).astype(np.int64)
            if self.parity:
                off = (center - target) % 2
                center = center + off
            cands = center[:, None] + self.steps[None, :]
            diff = cands[:, :, None] - nh[:, None, :]
            logw = self.pot.log_weights(diff)
            logw = np.where(mask[:, None, :], logw, 0.0)
            logw = logw.sum(axis=2)
            row_max = logw.max(axis=1)
            if np.any(row_max == -INF):
                bad = sites[row_max == -INF][0]
                raise StuckSite(
                    f"zero conditional mass at vertex {int(bad)}; "
                    f"widen the height window")
            w = np.exp(logw - row_max[:, None])
            cum = np.cumsum(w, axis=1)
            u = self.rng.random(len(sites)) * cum[:, -1]
            idx = np.minimum((cum < u[:, None]).sum(axis=1),
                             cum.shape[1] - 1)
            heights[sites] = cands[np.arange(len(sites)), idx]


def make_sampler(patch: PlanarPatch, pots: EdgePotentials,
                 config: HeightConfig, sampler: SamplerConfig):
    engine = sampler.engine
    if engine == "auto":
        engine = "site" if len(config.free) <= 64 or not pots.is_uniform \
            else "block"
    if engine == "site":
        return SiteSampler(patch, pots, config, sampler.height_window,
                           sampler.seed)
    if engine == "block":
        return BlockSampler(patch, pots, config, sampler.height_window,
                            sampler.seed)
    raise ValueError(f"unknown engine {engine!r}")


def heat_bath_sweep(config: HeightConfig, patch: PlanarPatch,
                    pots: EdgePotentials, window: int, rng_or_seed) -> None:
    """One full scan updating every free vertex in ascending id order.

    Mutates ``config.heights`` in place.  ``rng_or_seed`` is either a
    ``random.Random`` instance or an integer seed.  This is the
    reference single-sweep entry point; chains use ``run_chain``,
    which keeps the per-site caches alive across sweeps.
    """
    sampler = SiteSampler(patch, pots, config, window,
                          seed=0)
    if isinstance(rng_or_seed, random.Random):
        sampler.rng = rng_or_seed
    else:
        sampler.rng = random.Random(int(rng_or_seed))
    sampler.sweep(config.heights)


# ---------------------------------------------------------------------------
# Observables and chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """A scalar function of the height configuration, with a stable id."""

    obs_id: str
    kind: str                       # vertex_height | height_mean | level_indicator
    vertex: int = -1
    vertices: tuple[int, ...] = ()
    level: int = 0
    direction: str = "geq"

    def evaluate(self, heights: np.ndarray) -> float:
        if self.kind == "vertex_height":
            return float(heights[self.vertex])
        if self.kind == "height_mean":
            return float(np.mean(heights[list(self.vertices)]))
        if self.kind == "level_indicator":
            h = heights[self.vertex]
            hit = h >= self.level if self.direction == "geq" \
                else h <= self.level
            return 1.0 if hit else 0.0
        raise ValueError(f"unknown observable kind {self.kind!r}")


def root_height(patch: PlanarPatch) -> Observable:
    return Observable(obs_id="phi_root", kind="vertex_height",
                      vertex=patch.root)


def vertex_height(v: int) -> Observable:
    return Observable(obs_id=f"phi_{v}", kind="vertex_height", vertex=int(v))


def height_mean(vertices: Iterable[int], obs_id: str = "phi_mean"
                ) -> Observable:
    return Observable(obs_id=obs_id, kind="height_mean",
                      vertices=tuple(int(v) for v in vertices))


def level_indicator(v: int, level: int, direction: str = "geq"
                    ) -> Observable:
    return Observable(obs_id=f"level_{level}_{direction}_{v}",
                      kind="level_indicator", vertex=int(v),
                      level=int(level), direction=direction)


def batch_means_stderr(series: np.ndarray, n_batches: int = 30) -> float:
    """Standard error of the series mean from non-overlapping batches."""
    n = len(series)
    if n < 2:
        return 0.0
    if n < 2 * n_batches:
        return float(np.std(series, ddof=1) / math.sqrt(n))
    k = n // n_batches
    trimmed = series[n - n_batches * k:]
    means = trimmed.reshape(n_batches, k).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


@dataclass
class ChainResult:
    """Recorded observable series plus batch-means summaries."""

    series: dict[str, np.ndarray]
    sweeps_at: np.ndarray
    summaries: dict[str, dict]
    engine: str
    seed: int
    final: HeightConfig


def run_chain(patch: PlanarPatch, pots: EdgePotentials,
              bc: dict[int, int], sampler: SamplerConfig,
              observables: Sequence[Observable],
              parity: bool = False) -> ChainResult:
    """Heat-bath chain with burn-in and thinning.

    Records each observable every ``thinning`` sweeps after
    ``burn_in``; summaries report the mean, sample variance, and a
    30-batch batch-means standard error.
    """
    validate_window(pots, sampler.height_window, sampler.tail_tolerance)
    config = init_config(patch, bc, parity, pots=pots)
    if config_energy(patch, pots, config.heights) == INF:
        raise Infeasible("initial configuration has infinite energy; "
                         "the pinned heights are incompatible")
    engine = make_sampler(patch, pots, config, sampler)
    engine_name = type(engine).__name__

    heights = config.heights
    for _ in range(sampler.burn_in):
        engine.sweep(heights)
    n_samples = max(0, sampler.sweeps // max(1, sampler.thinning))
    series = {obs.obs_id: np.zeros(n_samples) for obs in observables}
    sweeps_at = np.zeros(n_samples, dtype=np.int64)
    sweep_count = sampler.burn_in
    for i in range(n_samples):
        for _ in range(sampler.thinning):
            engine.sweep(heights)
        sweep_count += sampler.thinning
        sweeps_at[i] = sweep_count
        for obs in observables:
            series[obs.obs_id][i] = obs.evaluate(heights)

    summaries = {}
    for obs in observables:
        s = series[obs.obs_id]
        summaries[obs.obs_id] = {
            "observable": obs.obs_id,
            "mean": float(np.mean(s)) if len(s) else 0.0,
            "stderr": batch_means_stderr(s),
            "variance": float(np.var(s, ddof=1)) if len(s) > 1 else 0.0,
            "n_samples": int(len(s)),
            "seed": int(sampler.seed),
        }
    return ChainResult(series=series, sweeps_at=sweeps_at,
                       summaries=summaries, engine=engine_name,
                       seed=sampler.seed, final=config)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(path, result: ChainResult) -> None:
    """Observable series as delimited text: sweep, observable id, value."""
    with open(path, "w") as fh:
        fh.write("sweep,observable_id,value\n")
        for obs_id in sorted(result.series):
            s = result.series[obs_id]
            for sweep, value in zip(result.sweeps_at, s):
                fh.write(f"{int(sweep)},{obs_id},{format_float(value)}\n")


def write_summary_json(path, result: ChainResult) -> None:
    doc = {obs_id: result.summaries[obs_id]
           for obs_id in sorted(result.summaries)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Push-up surgery
# ---------------------------------------------------------------------------

def pushup(config: HeightConfig, patch: PlanarPatch, n: int) -> HeightConfig:
    """Lift the configuration above a cone rooted on the radius-n rim.

    With m the minimum height on the sphere of radius n + 1 around the
    root, every vertex within that sphere is raised to at least
    m + (its graph distance to the sphere).  Heights outside are
    untouched, and the sphere itself keeps its values.
    """
    if patch.is_torus:
        raise ValueError("push-up surgery needs a ball patch")
    dist_root = patch.bfs_distances([patch.root])
    ring = np.flatnonzero(dist_root == n + 1)
    if len(ring) == 0:
        raise ValueError(f"patch has no radius-{n + 1} sphere")
    m = int(config.heights[ring].min())
    dist_ring = patch.bfs_distances(ring)
    inside = dist_root <= n + 1
    cone = np.where(inside, m + dist_ring, np.iinfo(np.int64).min)
    out = config.copy()
    out.heights = np.maximum(config.heights, cone)
    return out
