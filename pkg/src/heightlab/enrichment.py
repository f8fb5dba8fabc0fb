"""Per-edge excitation states and half-integer midpoint heights.

Each edge of a height configuration under an excited potential splits
its Boltzmann weight into a capped part and a remainder.  An edge
drawn into the capped part is *excited* and carries a midpoint height
half-way between its endpoint heights — a fair ±1/2 offset when the
endpoints agree, the forced midpoint when they differ by one.  The
marginal law of the original heights is unchanged by this decoration.

Midpoints are stored as doubled integers so that half-integer
arithmetic stays exact; an edge without a midpoint stores ``None``.
An optional coin field attaches an independent fair ±1/2 coin to every
edge; on excited edges with both endpoints at height zero the midpoint
is the coin.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gibbs import HeightConfig
from .lattice import PlanarPatch
from .potentials import EdgePotentials, Potential, decompose_weight, classify


class NotExcitedPotential(ValueError):
    """Enrichment requires every edge potential to be excited-class."""


class GapTooLarge(ValueError):
    """Midpoints exist only across gradients of absolute value <= 1."""


@dataclass
class EnrichedConfig:
    """A height configuration decorated with edge states.

    ``excited[e]`` is 0 or 1; ``midpoint_x2[e]`` is the doubled
    midpoint height (so +1 encodes +1/2) and is ``None`` exactly when
    the edge is not excited.  ``coin_x2``, when present, holds a
    doubled fair coin in {-1, +1} for every edge.
    """

    base: HeightConfig
    excited: np.ndarray
    midpoint_x2: list[Optional[int]]
    coin_x2: Optional[np.ndarray] = None

    def n_edges(self) -> int:
        return len(self.excited)


def midpoint_distribution(phix: int, phiy: int) -> dict[int, float]:
    """Law of the doubled midpoint across an excited edge.

    Equal endpoints give a fair coin between the two adjacent
    half-integers; endpoints differing by one force the midpoint.
    """
    phix, phiy = int(phix), int(phiy)
    gap = phiy - phix
    if abs(gap) >= 2:
        raise GapTooLarge(
            f"no midpoint across gradient {gap}; edges with |gradient| > 1 "
            f"are never excited")
    if gap == 0:
        return {2 * phix - 1: 0.5, 2 * phix + 1: 0.5}
    return {phix + phiy: 1.0}


def _require_excited(pots: EdgePotentials) -> None:
    for pot in pots.distinct():
        cached = getattr(pot, "_excited_class", None)
        if cached is None:
            cached = classify(pot).excited
            pot._excited_class = cached
        if not cached:
            raise NotExcitedPotential(
                f"{pot!r} is not excited-class; enrichment undefined")


def excitation_probability(pot: Potential, h: int) -> float:
    """P(edge excited | gradient h) = capped weight / total weight."""
    h = int(h)
    cache = getattr(pot, "_excitation_cache", None)
    if cache is None:
        cache = {}
        pot._excitation_cache = cache
    p = cache.get(h)
    if p is not None:
        return p
    w_exc, w_plain = decompose_weight(pot, h)
    total = w_exc + w_plain
    if total <= 0.0:
        raise ValueError(
            f"gradient {h} has zero weight; configuration inadmissible")
    p = w_exc / total
    cache[h] = p
    return p


def enrich(config: HeightConfig, patch: PlanarPatch, pots: EdgePotentials,
           rng_or_seed, with_coins: bool = False) -> EnrichedConfig:
    """Sample edge states and midpoints conditionally on the heights.

    Edges are processed in ascending edge id.  With coins enabled, the
    coin field is drawn for every edge first; it then overrides the
    midpoint flip on excited edges whose endpoints both sit at zero.
    """
    _require_excited(pots)
    rng = rng_or_seed if isinstance(rng_or_seed, random.Random) \
        else random.Random(int(rng_or_seed))
    heights = config.heights
    m = len(patch.edges)
    excited = np.zeros(m, dtype=np.int8)
    midpoint_x2: list[Optional[int]] = [None] * m

    coin_x2 = None
    if with_coins:
        coin_x2 = np.empty(m, dtype=np.int8)
        for e in range(m):
            coin_x2[e] = 1 if rng.random() < 0.5 else -1

    for e, (a, b) in enumerate(patch.edges):
        ha, hb = int(heights[a]), int(heights[b])
        h = hb - ha
        pot = pots.for_edge(patch, e)
        p = excitation_probability(pot, h)
        if p >= 1.0:
            state = 1
        elif p <= 0.0:
            state = 0
        else:
            state = 1 if rng.random() < p else 0
        excited[e] = state
        if state == 0:
            continue
        if h == 0:
            if with_coins and ha == 0 and hb == 0:
                midpoint_x2[e] = int(coin_x2[e])
            else:
                midpoint_x2[e] = 2 * ha + (1 if rng.random() < 0.5 else -1)
        else:
            midpoint_x2[e] = ha + hb
    return EnrichedConfig(base=config, excited=excited,
                          midpoint_x2=midpoint_x2, coin_x2=coin_x2)


def collapse(enriched: EnrichedConfig) -> HeightConfig:
    """Project back to the plain heights, dropping all edge states."""
    return enriched.base.copy()


def marginal_invariance_check(pot: Potential,
                              h_range=range(-5, 6)) -> dict:
    """Verify that decorating an edge does not change its weight.

    For each gradient h the excited part is re-derived by summing the
    half-step weights over all candidate midpoints, added to the plain
    remainder, and compared against the undecorated weight e^{-V(h)}.
    """
    from .potentials import midpoint_potential
    half = midpoint_potential()
    per_h = {}
    for h in h_range:
        h = int(h)
        excited_sum = 0.0
        for z2 in {-1, 1, 2 * h - 1, 2 * h + 1}:
            excited_sum += half.weight_x2(z2) * half.weight_x2(z2 - 2 * h)
        excited_sum *= 0.5
        _, w_plain = decompose_weight(pot, h)
        per_h[h] = (excited_sum + w_plain) - pot.weight(h)
    max_dev = max(abs(d) for d in per_h.values())
    return {"per_h": per_h, "max_abs_deviation": max_dev}


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def config_to_dict(config: HeightConfig) -> dict:
    return {
        "heights": [[int(v), int(h)] for v, h in enumerate(config.heights)],
        "free": [int(v) for v in config.free],
        "parity_constraint": bool(config.parity),
    }


def enriched_to_dict(enriched: EnrichedConfig) -> dict:
    doc = config_to_dict(enriched.base)
    doc["excited"] = [[e, int(s)] for e, s in enumerate(enriched.excited)]
    doc["midpoint_x2"] = [
        [e, None if m is None else int(m)]
        for e, m in enumerate(enriched.midpoint_x2)
    ]
    if enriched.coin_x2 is not None:
        doc["coin_x2"] = [[e, int(c)] for e, c in
                          enumerate(enriched.coin_x2)]
    return doc


def enriched_to_json(enriched: EnrichedConfig) -> str:
    return json.dumps(enriched_to_dict(enriched), indent=2,
                      sort_keys=False)
