"""Reveal processes over sampled height configurations.

Both processes start with every rim vertex revealed and grow the
revealed region by local rules, leaving an unrevealed remainder R_n:

* the plain process reveals every neighbour of a revealed vertex whose
  height is below a threshold (or above, by height negation), so the
  final revealed frontier consists of vertices at or above it;

* the enriched process works on a configuration decorated with edge
  excitation states and midpoints.  A revealed vertex with negative
  height reveals its neighbours outright; one at height zero first
  reveals the edge state, then either the neighbour (plain edge, or
  excited with midpoint a half-step down) or nothing (midpoint a
  half-step up); positive heights reveal nothing.

Every reveal depends only on already-revealed data, so the processes
never peek at the remainder — the basis of the conditional-law
argument.  Each directed frontier edge of the enriched process lands
in exactly one of two classes: source strictly positive with the edge
state untouched, or source at zero across an excited edge whose
midpoint points up.  The conditional energy of the remainder couples
half-step factors on the second class with ordinary potentials on the
rest.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .enrichment import EnrichedConfig, _require_excited, enrich
from .gibbs import HeightConfig, JointDistribution, enumerate_distribution
from .lattice import PlanarPatch
from .potentials import EdgePotentials, midpoint_potential

INF = math.inf

TYPE_POSITIVE_UNREVEALED = "positive_unrevealed_state"
TYPE_ZERO_EXCITED_UP = "zero_excited_plus_half"
TYPE_THRESHOLD = "at_least_threshold"


class InconsistentBoundary(ValueError):
    """A remainder-facing edge carries an impossible source state."""


@dataclass
class ExplorationResult:
    """Outcome of a reveal process.

    ``unrevealed`` is R_n; ``boundary_edges`` lists directed pairs
    (revealed source, unrevealed target) with their class tag;
    ``revealed_edge_states`` maps every edge to excited/plain/unknown;
    ``revealed_midpoints`` holds doubled midpoints for edges whose
    midpoint was revealed.  ``events`` is the full reveal log in order
    (vertex, state, and midpoint events); ``steps`` counts edge
    processings that revealed something.
    """

    mode: str
    patch: PlanarPatch
    heights: np.ndarray
    revealed: np.ndarray
    unrevealed: np.ndarray
    root_unrevealed: bool
    boundary_edges: list
    revealed_edge_states: dict
    revealed_midpoints: dict
    reveal_order: list
    events: list
    steps: int
    violations: list = field(default_factory=list)
    threshold: Optional[int] = None
    direction: str = "below"


def _initial_revealed(patch: PlanarPatch) -> np.ndarray:
    revealed = np.ones(patch.n_vertices, dtype=bool)
    revealed[patch.interior] = False
    return revealed


def _finish(mode, patch, heights, revealed, boundary, states, midpoints,
            order, events, steps, violations, threshold, direction
            ) -> ExplorationResult:
    unrevealed = np.flatnonzero(~revealed).astype(np.int64)
    return ExplorationResult(
        mode=mode,
        patch=patch,
        heights=heights.copy(),
        revealed=revealed,
        unrevealed=unrevealed,
        root_unrevealed=not revealed[patch.root],
        boundary_edges=boundary,
        revealed_edge_states=states,
        revealed_midpoints=midpoints,
        reveal_order=order,
        events=events,
        steps=steps,
        violations=violations,
        threshold=threshold,
        direction=direction,
    )


# ---------------------------------------------------------------------------
# Plain process
# ---------------------------------------------------------------------------

def explore_plain(config: HeightConfig, patch: PlanarPatch, a: int,
                  direction: str = "below",
                  shuffle_seed: Optional[int] = None) -> ExplorationResult:
    """Closure of the rim under "reveal past a sub-threshold vertex".

    The result is the same for every selection order; pass
    ``shuffle_seed`` to randomise the order for order-invariance
    checks.  Direction "above" negates the heights and the threshold,
    then delegates.
    """
    if patch.is_torus:
        raise ValueError("exploration needs a ball patch")
    if direction == "above":
        negated = HeightConfig(heights=-config.heights, free=config.free,
                               parity=config.parity)
        res = explore_plain(negated, patch, -a, "below", shuffle_seed)
        res.heights = config.heights.copy()
        res.threshold = a
        res.direction = "above"
        return res
    if direction != "below":
        raise ValueError(f"unknown direction {direction!r}")

    heights = config.heights
    revealed = _initial_revealed(patch)
    ptr, nbr, _ = patch.adjacency()
    rng = None if shuffle_seed is None else random.Random(shuffle_seed)

    pool = [int(v) for v in sorted(np.flatnonzero(revealed))]
    order: list = []
    events: list = []
    steps = 0
    queue = deque(pool)
    while queue:
        if rng is None:
            x = queue.popleft()
        else:
            i = rng.randrange(len(queue))
            queue.rotate(-i)
            x = queue.popleft()
            queue.rotate(i)
        if int(heights[x]) >= a:
            continue
        for y in sorted(int(w) for w in nbr[ptr[x]:ptr[x + 1]]):
            if revealed[y]:
                continue
            revealed[y] = True
            order.append(y)
            events.append(("vertex", y))
            steps += 1
            queue.append(y)

    boundary = []
    violations: list = []
    states = {e: "unknown" for e in range(patch.n_edges)}
    for e, (u, v) in enumerate(patch.edges):
        u, v = int(u), int(v)
        if revealed[u] == revealed[v]:
            continue
        x, y = (u, v) if revealed[u] else (v, u)
        boundary.append((x, y, TYPE_THRESHOLD))
        if int(heights[x]) < a:
            violations.append((x, y, "revealed source below threshold"))
    return _finish("plain", patch, heights, revealed, boundary, states,
                   {}, order, events, steps, violations, a, "below")


# ---------------------------------------------------------------------------
# Enriched process
# ---------------------------------------------------------------------------

def explore_enriched(config: HeightConfig, patch: PlanarPatch,
                     pots: EdgePotentials, rng_or_seed=0,
                     enriched: Optional[EnrichedConfig] = None,
                     shuffle_seed: Optional[int] = None
                     ) -> ExplorationResult:
    """Reveal process over an excitation-decorated configuration.

    When no decorated configuration is supplied, one is drawn from
    ``rng_or_seed`` with the coin coupling attached.  The process
    itself is deterministic given the decoration.
    """
    if patch.is_torus:
        raise ValueError("exploration needs a ball patch")
    _require_excited(pots)
    if enriched is None:
        enriched = enrich(config, patch, pots, rng_or_seed,
                          with_coins=True)

    heights = config.heights
    excited = enriched.excited
    midpoint_x2 = enriched.midpoint_x2
    revealed = _initial_revealed(patch)
    ptr, nbr, eid = patch.adjacency()
    rng = None if shuffle_seed is None else random.Random(shuffle_seed)

    states = {e: "unknown" for e in range(patch.n_edges)}
    midpoints: dict = {}
    order: list = []
    events: list = []
    steps = 0

    queue: deque = deque()

    def push_edges(x: int) -> None:
        pairs = sorted((int(y), int(e)) for y, e in
                       zip(nbr[ptr[x]:ptr[x + 1]], eid[ptr[x]:ptr[x + 1]]))
        for y, e in pairs:
            if not revealed[y]:
                queue.append((x, y, e))

    def reveal_vertex(y: int) -> None:
        revealed[y] = True
        order.append(y)
        events.append(("vertex", y))
        push_edges(y)

    for x in sorted(int(v) for v in np.flatnonzero(revealed)):
        push_edges(x)

    while queue:
        if rng is None:
            x, y, e = queue.popleft()
        else:
            i = rng.randrange(len(queue))
            queue.rotate(-i)
            x, y, e = queue.popleft()
            queue.rotate(i)
        if revealed[y]:
            continue
        hx = int(heights[x])
        if hx < 0:
            reveal_vertex(y)
            steps += 1
            continue
        if hx > 0:
            continue
        # hx == 0: look at the edge state, then maybe the midpoint.
        progressed = False
        if states[e] == "unknown":
            state = "excited" if excited[e] else "plain"
            states[e] = state
            events.append(("state", e, state))
            progressed = True
            if state == "excited":
                m2 = midpoint_x2[e]
                midpoints[e] = int(m2)
                events.append(("midpoint", e, int(m2)))
        if states[e] == "plain":
            reveal_vertex(y)
            progressed = True
        else:
            if midpoints[e] == 2 * hx - 1:
                reveal_vertex(y)
                progressed = True
        if progressed:
            steps += 1

    boundary = []
    violations: list = []
    for e, (u, v) in enumerate(patch.edges):
        u, v = int(u), int(v)
        if revealed[u] == revealed[v]:
            continue
        x, y = (u, v) if revealed[u] else (v, u)
        hx = int(heights[x])
        is_type1 = hx > 0 and states[e] == "unknown"
        is_type2 = (hx == 0 and states[e] == "excited"
                    and midpoints.get(e) == 2 * hx + 1)
        if is_type1 == is_type2:
            violations.append((x, y, f"h={hx} state={states[e]} "
                               f"mid={midpoints.get(e)}"))
            continue
        tag = TYPE_POSITIVE_UNREVEALED if is_type1 else TYPE_ZERO_EXCITED_UP
        boundary.append((x, y, tag))
    return _finish("enriched", patch, heights, revealed, boundary, states,
                   midpoints, order, events, steps, violations, None,
                   "below")


# ---------------------------------------------------------------------------
# Conditional Hamiltonian over the remainder
# ---------------------------------------------------------------------------

class HalfStepFromHalf:
    """Factor forcing a height to sit a half-step away from one half.

    As an edge term from a zero-height source the gradient equals the
    target height, so the half-step potential is evaluated at the
    doubled offset from one half, landing the target in {0, 1}.
    """

    def __init__(self):
        self._half = midpoint_potential()

    def value(self, d: int) -> float:
        return self._half.value_x2(2 * int(d) - 1)

    def __repr__(self) -> str:
        return "HalfStepFromHalf()"


@dataclass
class ConditionalHamiltonian:
    """Energy functional for heights on the unrevealed remainder."""

    vertices: tuple
    terms: list                    # (a, b, potential-like) triples
    fixed: dict
    patch: PlanarPatch

    def energy(self, assignment) -> float:
        def height(v: int) -> int:
            if v in self.fixed:
                return self.fixed[v]
            return int(assignment[v])

        total = 0.0
        for a, b, pot in self.terms:
            val = pot.value(height(b) - height(a))
            if val == INF:
                return INF
            total += val
        return total

    def distribution(self, window, parity: bool = False,
                     cap: int = 12) -> JointDistribution:
        if isinstance(window, int):
            lo, hi = -window, window
        else:
            lo, hi = int(window[0]), int(window[1])
        if len(self.vertices) > cap:
            from .gibbs import TooLarge
            raise TooLarge(
                f"{len(self.vertices)} unrevealed vertices exceed the "
                f"enumeration cap {cap}")
        candidates = {}
        for v in self.vertices:
            vals = range(lo, hi + 1)
            if parity:
                p = int(self.patch.parity[v])
                vals = [h for h in vals if (h - p) % 2 == 0]
            else:
                vals = list(vals)
            candidates[v] = vals
        return enumerate_distribution(self.vertices, candidates,
                                      self.terms, self.fixed)


def conditional_hamiltonian(result: ExplorationResult,
                            pots: EdgePotentials) -> ConditionalHamiltonian:
    """Build the remainder's conditional energy from an enriched result.

    Up-midpoint frontier edges contribute a half-step factor; every
    other edge touching the remainder contributes its potential with
    the revealed endpoint frozen.  A frozen endpoint of an ordinary
    frontier term must be strictly positive.
    """
    if result.mode != "enriched":
        raise ValueError("conditional energies need an enriched result")
    patch = result.patch
    revealed = result.revealed
    heights = result.heights
    type2 = {(x, y) for x, y, tag in result.boundary_edges
             if tag == TYPE_ZERO_EXCITED_UP}

    terms: list = []
    fixed: dict = {}
    for e, (u, v) in enumerate(patch.edges):
        u, v = int(u), int(v)
        if revealed[u] and revealed[v]:
            continue
        if not revealed[u] and not revealed[v]:
            terms.append((u, v, pots.for_edge(patch, e)))
            continue
        x, y = (u, v) if revealed[u] else (v, u)
        hx = int(heights[x])
        fixed[x] = hx
        if (x, y) in type2:
            terms.append((x, y, HalfStepFromHalf()))
        else:
            if hx <= 0:
                raise InconsistentBoundary(
                    f"frontier edge ({x}, {y}) carries potential term but "
                    f"its revealed endpoint has height {hx} <= 0")
            terms.append((x, y, pots.for_edge(patch, e)))

    vertices = tuple(int(v) for v in result.unrevealed)
    return ConditionalHamiltonian(vertices=vertices, terms=terms,
                                  fixed=fixed, patch=patch)


# ---------------------------------------------------------------------------
# Blocking connectivity
# ---------------------------------------------------------------------------

def blocking_connectivity(sigma: Sequence[int], patch: PlanarPatch,
                          r: int, boundary_set) -> bool:
    """Is r connected to the target set through down-spin edges?

    The traversable subgraph has every edge with spin -1 plus all
    edges incident to r itself.
    """
    sigma = np.asarray(sigma)
    if len(sigma) != patch.n_edges:
        raise ValueError("one spin per edge required")
    targets = set(int(v) for v in boundary_set)
    r = int(r)
    if r in targets:
        return True
    ptr, nbr, eid = patch.adjacency()
    seen = np.zeros(patch.n_vertices, dtype=bool)
    seen[r] = True
    queue = deque([r])
    while queue:
        x = queue.popleft()
        for y, e in zip(nbr[ptr[x]:ptr[x + 1]], eid[ptr[x]:ptr[x + 1]]):
            y, e = int(y), int(e)
            if seen[y]:
                continue
            if sigma[e] != -1 and x != r and y != r:
                continue
            if y in targets:
                return True
            seen[y] = True
            queue.append(y)
    return False


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def result_to_dict(result: ExplorationResult) -> dict:
    return {
        "mode": result.mode,
        "revealed_mask": "".join(
            "1" if b else "0" for b in result.revealed),
        "root_unrevealed": bool(result.root_unrevealed),
        "boundary_edges": [[int(x), int(y), tag]
                           for x, y, tag in result.boundary_edges],
        "reveal_order": [int(v) for v in result.reveal_order],
        "steps": int(result.steps),
    }


def result_to_json(result: ExplorationResult) -> str:
    return json.dumps(result_to_dict(result), indent=2)
