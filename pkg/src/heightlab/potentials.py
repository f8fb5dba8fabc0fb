"""Symmetric convex interaction potentials on integer height differences.

A potential assigns an extended-real cost V(x) to each integer gradient
x, normalised so the smallest finite value is zero.  Families:

* ``discrete_gaussian(beta)``   V(x) = beta * x**2
* ``solid_on_solid(beta)``      V(x) = beta * |x|
* ``k_lipschitz(k)``            0 on |x| <= k, infinite beyond
* ``homomorphism()``            0 on |x| == 1, infinite elsewhere
* ``table`` / ``parity_table``  explicit values with a tail rule

A potential is *excited* when it is symmetric, convex, and satisfies
V(1) - V(0) <= log 2.  For such potentials the single-edge weight
splits as e^{-V} = e^{-V_cap} + (e^{-V} - e^{-V_cap}), where the cap
potential takes values (0, log 2, infinity) at (0, +-1, beyond); both
parts are nonnegative and the first one is the weight of a pair of
independent fair half-steps through an edge midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

INF = math.inf
LOG2 = math.log(2.0)
DEFAULT_WINDOW = 64
_EXCITED_TOL = 1e-12


class NotExcited(ValueError):
    """Weight decomposition requires an excited potential."""


@dataclass(frozen=True)
class PotentialClass:
    """Structural flags established by scanning a symmetric window."""

    convex: bool
    symmetric: bool
    excited: bool
    parity: bool
    even_excited: bool


def _tail_value(tail, x: int) -> float:
    if tail == "infinite":
        return INF
    kind, beta = tail
    if kind == "quadratic":
        return beta * float(x) * float(x)
    if kind == "linear":
        return beta * abs(float(x))
    raise ValueError(f"unknown tail rule: {tail!r}")


class Potential:
    """One interaction potential; see the module docstring for families."""

    def __init__(self, kind: str, *, beta: Optional[float] = None,
                 k: Optional[int] = None,
                 values: Optional[dict[int, float]] = None,
                 tail="infinite"):
        self.kind = kind
        self.beta = beta
        self.k = k
        self.tail = tail
        self._shift = 0.0
        self._values: Optional[dict[int, float]] = None
        if kind == "discrete_gaussian":
            if beta is None or beta <= 0:
                raise ValueError("discrete_gaussian needs beta > 0")
        elif kind == "solid_on_solid":
            if beta is None or beta <= 0:
                raise ValueError("solid_on_solid needs beta > 0")
        elif kind == "k_lipschitz":
            if k is None or k < 0:
                raise ValueError("k_lipschitz needs k >= 0")
        elif kind == "homomorphism":
            pass
        elif kind in ("table", "parity_table"):
            if not values:
                raise ValueError(f"{kind} needs explicit values")
            vals = {int(x): float(v) for x, v in values.items()}
            if kind == "parity_table":
                for x in vals:
                    if x % 2 == 0 and math.isfinite(vals[x]):
                        raise ValueError(
                            "parity_table must be infinite on even gradients")
            finite = [v for v in vals.values() if math.isfinite(v)]
            if not finite:
                raise ValueError("table has no finite values")
            self._shift = min(finite)
            self._values = {x: v - self._shift for x, v in vals.items()}
        else:
            raise ValueError(f"unknown potential kind: {kind!r}")

    # -- evaluation ---------------------------------------------------------

    def value(self, x: int) -> float:
        """V(x) as a float, math.inf for forbidden gradients."""
        x = int(x)
        if self.kind == "discrete_gaussian":
            return self.beta * float(x) * float(x)
        if self.kind == "solid_on_solid":
            return self.beta * abs(float(x))
        if self.kind == "k_lipschitz":
            return 0.0 if abs(x) <= self.k else INF
        if self.kind == "homomorphism":
            return 0.0 if abs(x) == 1 else INF
        if self.kind == "parity_table" and x % 2 == 0:
            return INF
        assert self._values is not None
        if x in self._values:
            return self._values[x]
        return _tail_value(self.tail, x) - self._shift

    def log_weights(self, diffs: np.ndarray) -> np.ndarray:
        """-V evaluated elementwise on an integer array."""
        x = np.asarray(diffs, dtype=np.int64)
        if self.kind == "discrete_gaussian":
            return -self.beta * (x.astype(np.float64) ** 2)
        if self.kind == "solid_on_solid":
            return -self.beta * np.abs(x.astype(np.float64))
        if self.kind == "k_lipschitz":
            return np.where(np.abs(x) <= self.k, 0.0, -INF)
        if self.kind == "homomorphism":
            return np.where(np.abs(x) == 1, 0.0, -INF)
        out = np.empty(x.shape, dtype=np.float64)
        flat = x.ravel()
        res = out.ravel()
        for i, xi in enumerate(flat):
            res[i] = -self.value(int(xi))
        return out

    def weight(self, x: int) -> float:
        v = self.value(x)
        return 0.0 if v == INF else math.exp(-v)

    # -- global structure ---------------------------------------------------

    def tail_mass(self, half_width: int, limit: int = 8192) -> float:
        """Total weight outside [-half_width, half_width]."""
        total = 0.0
        for sign in (-1, 1):
            x = half_width + 1
            while x <= limit:
                w = self.weight(sign * x)
                total += w
                if w < 1e-300:
                    break
                x += 1
        return total

    def mass(self, limit: int = 8192) -> float:
        core = math.fsum(self.weight(x) for x in range(-limit, limit + 1))
        return core

    def classify(self, window: int = DEFAULT_WINDOW) -> PotentialClass:
        return classify(self, window)

    # -- configuration ------------------------------------------------------

    def to_config(self) -> dict:
        if self.kind == "discrete_gaussian":
            return {"kind": self.kind, "beta": self.beta}
        if self.kind == "solid_on_solid":
            return {"kind": self.kind, "beta": self.beta}
        if self.kind == "k_lipschitz":
            return {"kind": self.kind, "k": self.k}
        if self.kind == "homomorphism":
            return {"kind": self.kind}
        assert self._values is not None
        vals = []
        for x in sorted(self._values):
            v = self._values[x] + self._shift
            vals.append([x, "inf" if v == INF else v])
        if self.tail == "infinite":
            tail = "infinite"
        else:
            tail = {"kind": self.tail[0], "beta": self.tail[1]}
        return {"kind": self.kind, "values": vals, "tail": tail}

    def __repr__(self) -> str:
        cfg = self.to_config()
        inner = ", ".join(f"{k}={v!r}" for k, v in cfg.items() if k != "kind")
        return f"Potential({cfg['kind']}{', ' if inner else ''}{inner})"


def discrete_gaussian(beta: float) -> Potential:
    return Potential("discrete_gaussian", beta=beta)


def solid_on_solid(beta: float) -> Potential:
    return Potential("solid_on_solid", beta=beta)


def k_lipschitz(k: int) -> Potential:
    return Potential("k_lipschitz", k=k)


def homomorphism() -> Potential:
    return Potential("homomorphism")


def table_potential(values: dict[int, float], tail="infinite") -> Potential:
    return Potential("table", values=values, tail=tail)


def parity_table(values: dict[int, float], tail="infinite") -> Potential:
    return Potential("parity_table", values=values, tail=tail)


def from_config(cfg: dict) -> Potential:
    """Inverse of Potential.to_config."""
    kind = cfg["kind"]
    if kind == "discrete_gaussian":
        return discrete_gaussian(float(cfg["beta"]))
    if kind == "solid_on_solid":
        return solid_on_solid(float(cfg["beta"]))
    if kind == "k_lipschitz":
        return k_lipschitz(int(cfg["k"]))
    if kind == "homomorphism":
        return homomorphism()
    if kind in ("table", "parity_table"):
        values = {}
        for x, v in cfg["values"]:
            values[int(x)] = INF if v == "inf" else float(v)
        tail = cfg.get("tail", "infinite")
        if isinstance(tail, dict):
            tail = (tail["kind"], float(tail["beta"]))
        return Potential(kind, values=values, tail=tail)
    raise ValueError(f"unknown potential kind: {kind!r}")


def evaluate(potential: Potential, x: int) -> float:
    return potential.value(x)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _support_contiguous(finite_xs: list[int], step: int) -> bool:
    if not finite_xs:
        return False
    xs = sorted(finite_xs)
    return all(b - a == step for a, b in zip(xs, xs[1:]))

def _convex_on(values: dict[int, float], step: int) -> bool:
    finite = [x for x, v in values.items() if math.isfinite(v)]
    if not _support_contiguous(finite, step):
        return False
    xs = sorted(finite)
    for x in xs[1:-1]:
        second = values[x - step] - 2.0 * values[x] + values[x + step]
        if second < -_EXCITED_TOL:
            return False
    return True


def classify(potential: Potential, window: int = DEFAULT_WINDOW
             ) -> PotentialClass:
    """Scan a symmetric window and report structural flags.

    Convexity is checked through second differences (step 1 in general,
    step 2 along the populated parity class); the excited flag requires
    V(1) - V(0) <= log 2 up to a 1e-12 slack.
    """
    xs = list(range(-window, window + 1))
    vals = {x: potential.value(x) for x in xs}
    symmetric = all(vals[x] == vals[-x] for x in xs)

    finite = [x for x in xs if math.isfinite(vals[x])]
    odd_only = bool(finite) and all(x % 2 != 0 for x in finite)
    even_only = bool(finite) and all(x % 2 == 0 for x in finite)

    convex = _convex_on(vals, 1)
    excited = (convex and symmetric and math.isfinite(vals[0])
               and math.isfinite(vals[1])
               and vals[1] - vals[0] <= LOG2 + _EXCITED_TOL)

    parity = (odd_only and symmetric
              and _convex_on({x: v for x, v in vals.items() if x % 2 != 0}, 2)
              and math.isfinite(vals[1]))

    even_excited = False
    if even_only and symmetric:
        evens = {x: vals[x] for x in xs if x % 2 == 0}
        even_excited = (_convex_on(evens, 2)
                        and math.isfinite(vals[0])
                        and math.isfinite(vals[2])
                        and vals[2] - vals[0] <= LOG2 + _EXCITED_TOL)

    return PotentialClass(
        convex=convex, symmetric=symmetric, excited=excited,
        parity=parity, even_excited=even_excited)


# ---------------------------------------------------------------------------
# The cap potential and the midpoint potential
# ---------------------------------------------------------------------------

def star_potential() -> Potential:
    """The extremal excited potential: (0, log 2, infinity)."""
    return table_potential({-1: LOG2, 0: 0.0, 1: LOG2})


def star_value(x: int) -> float:
    x = abs(int(x))
    if x == 0:
        return 0.0
    if x == 1:
        return LOG2
    return INF


def star_weight(x: int) -> float:
    x = abs(int(x))
    if x == 0:
        return 1.0
    if x == 1:
        return 0.5
    return 0.0


class HalfStepPotential:
    """Potential on half-integers: zero at +-1/2, infinite elsewhere.

    Arguments are doubled integers, so value_x2(1) is the cost of the
    half-step +1/2.
    """

    def value_x2(self, x2: int) -> float:
        return 0.0 if abs(int(x2)) == 1 else INF

    def weight_x2(self, x2: int) -> float:
        return 1.0 if abs(int(x2)) == 1 else 0.0


def midpoint_potential() -> HalfStepPotential:
    return HalfStepPotential()


def decompose_weight(potential: Potential, h: int) -> tuple[float, float]:
    """Split e^{-V(h)} into its capped part and the remainder.

    Returns (w_excited, w_plain) with w_excited = e^{-V_cap(h)} and
    w_plain = e^{-V(h)} - w_excited, both nonnegative; their sum
    reproduces e^{-V(h)} up to floating-point rounding only.
    Raises NotExcited when the potential is not excited.
    """
    if not potential.classify().excited:
        raise NotExcited(f"{potential!r} is not excited")
    w = potential.weight(h)
    w_excited = star_weight(h)
    w_plain = w - w_excited
    if w_plain < 0.0:
        if w_plain < -1e-13:
            raise NotExcited(
                f"{potential!r} has weight below the cap at h={h}")
        w_plain = 0.0
    return w_excited, w_plain


# ---------------------------------------------------------------------------
# Edge assignments
# ---------------------------------------------------------------------------

class EdgePotentials:
    """Assignment of one potential per edge, constant on edge orbits."""

    def __init__(self, default: Potential,
                 per_orbit: Optional[dict[int, Potential]] = None):
        self.default = default
        self.per_orbit = dict(per_orbit or {})

    @classmethod
    def uniform(cls, potential: Potential) -> "EdgePotentials":
        return cls(potential)

    def for_orbit(self, orbit: int) -> Potential:
        return self.per_orbit.get(int(orbit), self.default)

    def for_edge(self, patch, e: int) -> Potential:
        return self.for_orbit(int(patch.edge_orbit[e]))

    def distinct(self) -> list[Potential]:
        out = [self.default]
        for p in self.per_orbit.values():
            if all(p is not q for q in out):
                out.append(p)
        return out

    @property
    def is_uniform(self) -> bool:
        return not self.per_orbit


def shipped_excited_potentials() -> dict[str, Potential]:
    """Named registry of the excited potentials used by the audit suites."""
    return {
        "discrete_gaussian_log2": discrete_gaussian(LOG2),
        "discrete_gaussian_quarter": discrete_gaussian(0.25),
        "solid_on_solid_log2": solid_on_solid(LOG2),
        "solid_on_solid_half": solid_on_solid(0.5),
        "k_lipschitz_1": k_lipschitz(1),
        "k_lipschitz_2": k_lipschitz(2),
        "k_lipschitz_3": k_lipschitz(3),
        "star": star_potential(),
    }
