"""Batch studies over lattice height models, with reproducible seeding.

A study is described by a JSON config (validated into
:class:`ExperimentConfig`), runs one or more heat-bath chains per system
size on a worker pool, and leaves behind delimited output plus a
manifest that hashes every written file.  Chain seeds are derived from
the master seed, the study name, the size label, and the chain index,
so reruns with the same config and seed are byte-identical regardless
of thread count.  The audit studies re-verify the library's core
identities on built-in fixtures and emit a machine-readable verdict.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .enrichment import collapse, enrich, marginal_invariance_check
from .exploration import explore_enriched, explore_plain
from .gibbs import (
    HeightConfig,
    SamplerConfig,
    batch_means_stderr,
    exact_distribution,
    format_float,
    init_config,
    make_sampler,
    minimal_window,
    run_chain,
    root_height,
    validate_window,
    zero_boundary,
)
from .lattice import (
    build_ball,
    build_torus,
    custom_patch,
    honeycomb,
    odd_vertex_graph,
    spec_from_config,
)
from .percolation import (
    SCAN_CSV_HEADER,
    clusters,
    level_set,
    odd_spin_field,
    scan_csv_row,
)
from .potentials import (
    EdgePotentials,
    decompose_weight,
    from_config,
    homomorphism,
    shipped_excited_potentials,
)

CHAIN_EXPERIMENTS = ("variance_growth", "phase_contrast",
                     "percolation_scan")
AUDIT_EXPERIMENTS = ("enrichment_audit", "fkg_audit", "exploration_audit")
EXPERIMENT_KINDS = CHAIN_EXPERIMENTS + AUDIT_EXPERIMENTS

VARIANCE_CSV_HEADER = "n,var_root,stderr"

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """The study configuration is malformed or internally inconsistent."""


class FixtureMissing(LookupError):
    """An audit referenced a fixture name with no registered builder."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerSettings:
    """Chain-length and engine settings shared by every size in a study."""

    sweeps: int = 4000
    burn_in: int = 500
    thinning: int = 4
    chains: int = 2
    height_window: int = 0          # 0 = choose from the potential's tail
    engine: str = "auto"
    tail_tolerance: float = 1e-12

    @classmethod
    def from_dict(cls, raw: dict) -> "SamplerSettings":
        if not isinstance(raw, dict):
            raise ConfigError("sampler settings must be an object")
        known = {f: raw.get(f, getattr(cls, f)) for f in
                 ("sweeps", "burn_in", "thinning", "chains",
                  "height_window", "engine", "tail_tolerance")}
        out = cls(sweeps=int(known["sweeps"]),
                  burn_in=int(known["burn_in"]),
                  thinning=int(known["thinning"]),
                  chains=int(known["chains"]),
                  height_window=int(known["height_window"]),
                  engine=str(known["engine"]),
                  tail_tolerance=float(known["tail_tolerance"]))
        if out.sweeps < 1 or out.burn_in < 0:
            raise ConfigError("sweeps must be >= 1 and burn_in >= 0")
        if out.thinning < 1 or out.chains < 1:
            raise ConfigError("thinning and chains must be >= 1")
        if out.height_window < 0:
            raise ConfigError("height_window must be >= 0")
        if out.engine not in ("auto", "site", "block"):
            raise ConfigError(f"unknown sampler engine {out.engine!r}")
        return out

    def to_dict(self) -> dict:
        return {"sweeps": self.sweeps, "burn_in": self.burn_in,
                "thinning": self.thinning, "chains": self.chains,
                "height_window": self.height_window, "engine": self.engine,
                "tail_tolerance": self.tail_tolerance}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one batch study."""

    experiment: str
    lattice: dict = field(default_factory=lambda: {"family": "honeycomb"})
    potential: dict = field(default_factory=lambda: {"kind": "homomorphism"})
    sizes: tuple = ()
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    levels: tuple = ()
    output_dir: str = "out"
    schema: int = CONFIG_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "experiment": self.experiment,
            "lattice": dict(self.lattice),
            "potential": dict(self.potential),
            "sizes": [list(s) if isinstance(s, tuple) else s
                      for s in self.sizes],
            "sampler": self.sampler.to_dict(),
            "levels": list(self.levels),
            "output_dir": self.output_dir,
        }


def _size_key(size) -> tuple:
    if isinstance(size, tuple):
        return (size[0] * size[1], size[0], size[1])
    return (int(size),)


def size_label(size) -> str:
    """Stable text form of a size: ball radius `n` or torus `WxH`."""
    if isinstance(size, tuple):
        return f"{size[0]}x{size[1]}"
    return str(int(size))


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("study config must be a JSON object")
    schema = int(raw.get("schema", CONFIG_SCHEMA_VERSION))
    if schema != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {schema}")
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; valid kinds: "
            f"{', '.join(EXPERIMENT_KINDS)}")

    lattice = raw.get("lattice", {"family": "honeycomb"})
    try:
        spec_from_config(lattice)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad lattice config: {exc}") from exc

    potential = raw.get("potential", {"kind": "homomorphism"})
    try:
        from_config(potential)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad potential config: {exc}") from exc

    sizes = []
    for s in raw.get("sizes", []):
        if isinstance(s, (list, tuple)):
            if len(s) != 2:
                raise ConfigError(f"torus size needs two entries, got {s!r}")
            w, h = int(s[0]), int(s[1])
            if w < 1 or h < 1:
                raise ConfigError(f"torus size must be positive, got {s!r}")
            sizes.append((w, h))
        else:
            n = int(s)
            if n < 0:
                raise ConfigError(f"ball radius must be >= 0, got {s!r}")
            sizes.append(n)
    if len({isinstance(s, tuple) for s in sizes}) > 1:
        raise ConfigError("sizes must be all ball radii or all torus pairs")
    keys = [_size_key(s) for s in sizes]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ConfigError("sizes must be strictly increasing")
    if experiment in CHAIN_EXPERIMENTS and not sizes:
        raise ConfigError(f"{experiment} needs a nonempty sizes list")
    if experiment in ("variance_growth", "phase_contrast") and \
            any(isinstance(s, tuple) for s in sizes):
        raise ConfigError(f"{experiment} runs on balls; sizes must be "
                          "radii, not torus pairs")
    if experiment == "percolation_scan" and \
            not all(isinstance(s, tuple) for s in sizes):
        raise ConfigError("percolation_scan runs on tori; sizes must be "
                          "[w, h] pairs")

    levels = tuple(int(a) for a in raw.get("levels", []))
    if experiment == "percolation_scan" and not levels:
        raise ConfigError("percolation_scan needs a nonempty levels list")

    sampler = SamplerSettings.from_dict(raw.get("sampler", {}))
    output_dir = str(raw.get("output_dir", "out"))
    return ExperimentConfig(experiment=experiment, lattice=lattice,
                            potential=potential, sizes=tuple(sizes),
                            sampler=sampler, levels=levels,
                            output_dir=output_dir, schema=schema)


def load_config(path) -> ExperimentConfig:
    """Read and validate a study config from a JSON file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# Seeding and manifests
# ---------------------------------------------------------------------------

def derive_seed(master_seed: int, experiment: str, size, chain: int) -> int:
    """Deterministic 64-bit chain seed from the run coordinates."""
    key = f"{int(master_seed)}:{experiment}:{size_label(size)}:{int(chain)}"
    digest = hashlib.sha256(key.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance record written next to every study's outputs."""

    experiment: str
    config: dict
    master_seed: int
    code_version: str
    started: str
    finished: str
    seeds: dict
    diagnostics: dict
    files: dict
    failures: dict

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "master_seed": self.master_seed,
            "code_version": self.code_version,
            "started": self.started,
            "finished": self.finished,
            "seeds": self.seeds,
            "diagnostics": self.diagnostics,
            "files": self.files,
            "failures": self.failures,
        }


def write_manifest(out_dir, manifest: RunManifest) -> str:
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


@dataclass
class RunOutcome:
    """What one study wrote: files, seeds, per-size diagnostics, failures."""

    files: list
    seeds: dict
    diagnostics: dict
    failures: dict


# ---------------------------------------------------------------------------
# Variance growth studies
# ---------------------------------------------------------------------------

def _resolved_window(settings: SamplerSettings,
                     pots: EdgePotentials) -> int:
    if settings.height_window > 0:
        return settings.height_window
    return max(minimal_window(pots, settings.tail_tolerance), 4)


def _variance_chain(patch, pots, bc, settings, window, seed, parity):
    sc = SamplerConfig(sweeps=settings.sweeps, burn_in=settings.burn_in,
                       thinning=settings.thinning, seed=seed,
                       height_window=window, engine=settings.engine,
                       tail_tolerance=settings.tail_tolerance)
    result = run_chain(patch, pots, bc, sc, [root_height(patch)],
                       parity=parity)
    series = result.series["phi_root"]
    var = float(np.var(series, ddof=1)) if len(series) > 1 else 0.0
    centered_sq = (series - series.mean()) ** 2 if len(series) else series
    return {
        "seed": int(seed),
        "n_samples": int(len(series)),
        "mean": float(series.mean()) if len(series) else 0.0,
        "variance": var,
        "variance_stderr": batch_means_stderr(centered_sq),
        "engine": result.engine,
    }


def _run_variance_study(cfg: ExperimentConfig, master_seed: int,
                        out_dir: str, threads: Optional[int]) -> RunOutcome:
    if any(isinstance(s, tuple) for s in cfg.sizes):
        raise ConfigError(f"{cfg.experiment} runs on balls; sizes must be "
                          "radii, not torus pairs")
    spec = spec_from_config(cfg.lattice)
    pot = from_config(cfg.potential)
    pots = EdgePotentials.uniform(pot)
    parity = pot.classify().parity
    settings = cfg.sampler

    csv_path = os.path.join(out_dir, f"{cfg.experiment}.csv")
    files = [csv_path]
    seeds: dict = {}
    diagnostics: dict = {}
    failures: dict = {}
    summary: list = []

    workers = threads if threads else min(settings.chains, 8)
    with ThreadPoolExecutor(max_workers=workers) as pool, \
            open(csv_path, "w") as fh:
        fh.write(VARIANCE_CSV_HEADER + "\n")
        fh.flush()
        for n in cfg.sizes:
            label = size_label(n)
            chain_seeds = [derive_seed(master_seed, cfg.experiment, n, c)
                           for c in range(settings.chains)]
            seeds[label] = chain_seeds
            try:
                patch = build_ball(spec, int(n))
                bc = zero_boundary(patch, parity=parity)
                window = _resolved_window(settings, pots)
                futures = [pool.submit(_variance_chain, patch, pots, bc,
                                       settings, window, s, parity)
                           for s in chain_seeds]
                chain_stats = [f.result() for f in futures]
            except Exception as exc:
                failures[label] = f"{type(exc).__name__}: {exc}"
                continue
            estimates = [c["variance"] for c in chain_stats]
            var = float(np.mean(estimates))
            stderr = math.sqrt(math.fsum(
                c["variance_stderr"] ** 2 for c in chain_stats)
            ) / len(chain_stats)
            fh.write(f"{int(n)},{format_float(var)},"
                     f"{format_float(stderr)}\n")
            fh.flush()
            diagnostics[label] = {"var_root": var, "stderr": stderr,
                                  "window": window, "parity": parity,
                                  "chains": chain_stats}
            summary.append((int(n), var, stderr))

    if cfg.experiment == "phase_contrast" and len(summary) >= 2:
        (n_lo, var_lo, se_lo), (n_hi, var_hi, se_hi) = summary[-2:]
        joint = math.hypot(se_lo, se_hi)
        contrast = {
            "n_lo": n_lo, "n_hi": n_hi,
            "var_lo": var_lo, "var_hi": var_hi,
            "difference": var_hi - var_lo,
            "joint_stderr": joint,
            "within_two_stderr": bool(abs(var_hi - var_lo) <= 2.0 * joint),
        }
        contrast_path = os.path.join(out_dir, "contrast.json")
        with open(contrast_path, "w") as fh:
            json.dump(contrast, fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append(contrast_path)
        diagnostics["contrast"] = contrast

    return RunOutcome(files=files, seeds=seeds, diagnostics=diagnostics,
                      failures=failures)


def run_variance_growth(cfg: ExperimentConfig, master_seed: int = 0,
                        out_dir: Optional[str] = None,
                        threads: Optional[int] = None) -> RunOutcome:
    """Estimate Var(root height) on growing balls; one CSV row per radius."""
    target = out_dir or cfg.output_dir
    os.makedirs(target, exist_ok=True)
    return _run_variance_study(cfg, master_seed, target, threads)


run_phase_contrast = run_variance_growth


# ---------------------------------------------------------------------------
# Percolation scans
# ---------------------------------------------------------------------------

def _scan_chain(patch, pots, bc, settings, window, seed, parity):
    sc = SamplerConfig(sweeps=settings.sweeps, burn_in=settings.burn_in,
                       thinning=settings.thinning, seed=seed,
                       height_window=window, engine=settings.engine,
                       tail_tolerance=settings.tail_tolerance)
    validate_window(pots, window, settings.tail_tolerance)
    config = init_config(patch, bc, parity, pots=pots)
    engine = make_sampler(patch, pots, config, sc)
    heights = config.heights
    for _ in range(settings.burn_in):
        engine.sweep(heights)
    n_samples = max(0, settings.sweeps // settings.thinning)
    snapshots = []
    for _ in range(n_samples):
        for _ in range(settings.thinning):
            engine.sweep(heights)
        snapshots.append(heights.copy())
    return snapshots, type(engine).__name__


def _wraps(report) -> bool:
    return any(h or v for h, v in (report.wrap_flags or []))


def run_percolation_scan(cfg: ExperimentConfig, master_seed: int = 0,
                         out_dir: Optional[str] = None,
                         threads: Optional[int] = None) -> RunOutcome:
    """Census the level sets (and spin phases, for parity models) of
    sampled torus configurations, one CSV per size."""
    if not all(isinstance(s, tuple) for s in cfg.sizes):
        raise ConfigError("percolation_scan runs on tori; sizes must be "
                          "[w, h] pairs")
    target = out_dir or cfg.output_dir
    os.makedirs(target, exist_ok=True)
    spec = spec_from_config(cfg.lattice)
    pot = from_config(cfg.potential)
    pots = EdgePotentials.uniform(pot)
    parity = pot.classify().parity
    settings = cfg.sampler

    files: list = []
    seeds: dict = {}
    diagnostics: dict = {}
    failures: dict = {}

    workers = threads if threads else min(settings.chains, 8)
    empty_free = np.zeros(0, dtype=np.int64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for size in cfg.sizes:
            label = size_label(size)
            chain_seeds = [derive_seed(master_seed, cfg.experiment, size, c)
                           for c in range(settings.chains)]
            seeds[label] = chain_seeds
            try:
                patch = build_torus(spec, size[0], size[1])
                og = odd_vertex_graph(patch) if parity else None
                bc = zero_boundary(patch, parity=parity)
                window = _resolved_window(settings, pots)
                futures = [pool.submit(_scan_chain, patch, pots, bc,
                                       settings, window, s, parity)
                           for s in chain_seeds]
                chains = [f.result() for f in futures]
            except Exception as exc:
                failures[label] = f"{type(exc).__name__}: {exc}"
                continue

            csv_path = os.path.join(target, f"percolation_scan_{label}.csv")
            files.append(csv_path)
            sample_idx = 0
            both_wrap = 0
            with open(csv_path, "w") as fh:
                fh.write(SCAN_CSV_HEADER + "\n")
                for snapshots, _engine in chains:
                    for snap in snapshots:
                        view = HeightConfig(heights=snap, free=empty_free,
                                            parity=parity)
                        for a in cfg.levels:
                            up = clusters(patch, level_set(view, a, "geq"))
                            fh.write(scan_csv_row(sample_idx, a, "geq",
                                                  "vertices", up) + "\n")
                            dn = clusters(patch,
                                          level_set(view, a - 1, "leq"))
                            fh.write(scan_csv_row(sample_idx, a - 1, "leq",
                                                  "vertices", dn) + "\n")
                        if parity:
                            fld = odd_spin_field(view, patch)
                            pos = clusters(og, fld.positive())
                            neg = clusters(og, fld.negative())
                            fh.write(scan_csv_row(sample_idx, 1, "geq",
                                                  "odd_vertices", pos)
                                     + "\n")
                            fh.write(scan_csv_row(sample_idx, -1, "leq",
                                                  "odd_vertices", neg)
                                     + "\n")
                            if _wraps(pos) and _wraps(neg):
                                both_wrap += 1
                        sample_idx += 1
            diagnostics[label] = {
                "samples": sample_idx,
                "chains": settings.chains,
                "engine": chains[0][1] if chains else None,
                "window": window,
                "both_spin_wrap_frequency":
                    (both_wrap / sample_idx if parity and sample_idx
                     else None),
            }

    return RunOutcome(files=files, seeds=seeds, diagnostics=diagnostics,
                      failures=failures)


# ---------------------------------------------------------------------------
# Audit suites
# ---------------------------------------------------------------------------

def _two_site_path():
    return custom_patch(
        positions=[(1.0, 0.0), (2.0, 0.0), (0.0, 0.0), (3.0, 0.0)],
        edges=[(2, 0), (0, 1), (1, 3)],
        interior=[0, 1], root=0, radius=1)


def _four_site_tree():
    positions = [(0.0, 0.0)]
    for r in (1.0, 2.0):
        for k in range(3):
            ang = 2.0 * math.pi * k / 3.0 + 0.2
            positions.append((r * math.cos(ang), r * math.sin(ang)))
    order = [positions[0], positions[1], positions[2], positions[3],
             positions[4], positions[5], positions[6]]
    return custom_patch(
        positions=order,
        edges=[(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (3, 6)],
        interior=[0, 1, 2, 3], root=0, radius=1)


_FIXTURE_BUILDERS = {
    "two_site_path": _two_site_path,
    "four_site_tree": _four_site_tree,
    "honeycomb_ball_two": lambda: build_ball(honeycomb(), 2),
}


def _fixture(name: str):
    try:
        builder = _FIXTURE_BUILDERS[name]
    except KeyError:
        raise FixtureMissing(
            f"no builder registered for audit fixture {name!r}") from None
    return builder()


def _check(name: str, deviation: float, tolerance: float,
           detail: str) -> dict:
    return {"check": name, "passed": bool(deviation <= tolerance),
            "deviation": float(deviation), "tolerance": float(tolerance),
            "detail": detail}


def _audit_samples(patch, pots, parity, count, seed, thinning=5):
    bc = zero_boundary(patch, parity=parity)
    window = max(minimal_window(pots), 4)
    config = init_config(patch, bc, parity, pots=pots)
    sampler = make_sampler(patch, pots, config, SamplerConfig(
        seed=seed, height_window=window, engine="site"))
    for _ in range(100):
        sampler.sweep(config.heights)
    out = []
    for _ in range(count):
        for _ in range(thinning):
            sampler.sweep(config.heights)
        out.append(config.copy())
    return out


def audit_enrichment(potential=None) -> dict:
    """Re-verify that edge decoration never changes edge weights."""
    pots_to_check = dict(shipped_excited_potentials())
    if potential is not None and potential.classify().excited:
        pots_to_check["config"] = potential
    def _rel(dev: float, weight: float) -> float:
        return abs(dev) / weight if weight > 0.0 else abs(dev)

    checks = []
    for name, pot in sorted(pots_to_check.items()):
        worst = 0.0
        for h in range(-5, 6):
            w_exc, w_plain = decompose_weight(pot, h)
            w = pot.weight(h)
            worst = max(worst, _rel((w_exc + w_plain) - w, w))
        checks.append(_check(f"weight_split_{name}", worst, 1e-14,
                             "capped + remainder weight reproduces the "
                             "bare edge weight for |h| <= 5"))
        report = marginal_invariance_check(pot)
        rel = max(_rel(d, pot.weight(h))
                  for h, d in report["per_h"].items())
        checks.append(_check(f"decoration_marginal_{name}", rel, 1e-14,
                             "summing (state, midpoint) decorations "
                             "reproduces the bare edge weight"))

    patch = _fixture("honeycomb_ball_two")
    pot = shipped_excited_potentials()["discrete_gaussian_log2"]
    pots = EdgePotentials.uniform(pot)
    mismatches = 0
    samples = _audit_samples(patch, pots, False, 40, seed=2024)
    for i, config in enumerate(samples):
        decorated = enrich(config, patch, pots, 3000 + i)
        back = collapse(decorated)
        if not np.array_equal(back.heights, config.heights):
            mismatches += 1
    checks.append(_check("decorate_undo_roundtrip", float(mismatches), 0.0,
                         f"decorating then discarding decorations returned "
                         f"{len(samples) - mismatches}/{len(samples)} "
                         "height fields unchanged"))
    return {"suite": "enrichment_audit",
            "passed": all(c["passed"] for c in checks), "checks": checks}


def _lattice_condition_gap(dist) -> float:
    """Worst violation of p(max)p(min) >= p(a)p(b) over support pairs."""
    index = dist.index()
    rows = dist.support
    probs = dist.probabilities
    worst = 0.0
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            up = np.maximum(rows[i], rows[j])
            dn = np.minimum(rows[i], rows[j])
            lhs = index.get(tuple(int(x) for x in up), 0.0) * \
                index.get(tuple(int(x) for x in dn), 0.0)
            rhs = float(probs[i]) * float(probs[j])
            worst = max(worst, rhs - lhs)
    return worst


def _log_concavity_gap(marginal: dict, step: int) -> float:
    worst = 0.0
    for k, p in marginal.items():
        lo = marginal.get(k - step, 0.0)
        hi = marginal.get(k + step, 0.0)
        worst = max(worst, lo * hi - p * p)
    return worst


def audit_fkg(potential=None) -> dict:
    """Positive-correlations structure of the exact finite-volume laws."""
    pot = potential if potential is not None else homomorphism()
    pots = EdgePotentials.uniform(pot)
    parity = pot.classify().parity
    step = 2 if parity else 1
    checks = []
    for name in ("two_site_path", "four_site_tree"):
        patch = _fixture(name)
        bc = zero_boundary(patch, parity=parity)
        dist = exact_distribution(patch, pots, bc,
                                  window=max(minimal_window(pots), 4),
                                  parity=parity)
        checks.append(_check(
            f"lattice_condition_{name}", _lattice_condition_gap(dist),
            1e-12, f"p(max)p(min) >= p(a)p(b) over all "
                   f"{len(dist)}^2 support pairs"))
        checks.append(_check(
            f"root_log_concavity_{name}",
            _log_concavity_gap(dist.marginal(patch.root), step), 1e-12,
            "root marginal satisfies p_k^2 >= p_(k-s) p_(k+s)"))
    return {"suite": "fkg_audit",
            "passed": all(c["passed"] for c in checks), "checks": checks}


def audit_exploration(potential=None) -> dict:
    """Closure invariance, step bounds, and frontier dichotomy on samples."""
    pot = potential if potential is not None \
        else shipped_excited_potentials()["discrete_gaussian_log2"]
    if not pot.classify().excited:
        raise ConfigError("exploration_audit needs an excited potential")
    pots = EdgePotentials.uniform(pot)
    patch = _fixture("honeycomb_ball_two")
    samples = _audit_samples(patch, pots, False, 30, seed=77)
    checks = []

    base = explore_plain(samples[0], patch, 0)
    base_set = set(base.unrevealed.tolist())
    mismatched = sum(
        1 for s in range(1, 11)
        if set(explore_plain(samples[0], patch, 0,
                             shuffle_seed=s).unrevealed.tolist()) != base_set)
    checks.append(_check("reveal_order_invariance", float(mismatched), 0.0,
                         f"{10 - mismatched}/10 shuffled reveal orders "
                         "leave the hidden region unchanged"))

    worst_steps = 0
    violations = 0
    for i, config in enumerate(samples):
        plain = explore_plain(config, patch, 0)
        rich = explore_enriched(config, patch, pots, rng_or_seed=500 + i)
        worst_steps = max(worst_steps, plain.steps - patch.n_edges,
                          rich.steps - patch.n_edges)
        violations += len(plain.violations) + len(rich.violations)
    checks.append(_check("step_bound", float(max(worst_steps, 0)), 0.0,
                         "every reveal process stops within one step per "
                         "edge"))
    checks.append(_check("frontier_dichotomy", float(violations), 0.0,
                         f"0 frontier-classification violations over "
                         f"{len(samples)} decorated reveal runs"))
    return {"suite": "exploration_audit",
            "passed": all(c["passed"] for c in checks), "checks": checks}


_AUDIT_RUNNERS = {
    "enrichment_audit": audit_enrichment,
    "fkg_audit": audit_fkg,
    "exploration_audit": audit_exploration,
}


def run_audit(suite: str, potential=None) -> dict:
    """Run one audit suite and return its machine-readable verdict."""
    try:
        runner = _AUDIT_RUNNERS[suite]
    except KeyError:
        raise ConfigError(
            f"unknown audit suite {suite!r}; valid suites: "
            f"{', '.join(AUDIT_EXPERIMENTS)}") from None
    return runner(potential=potential)


# ---------------------------------------------------------------------------
# Top-level driver
# ---------------------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_experiment(cfg: ExperimentConfig, master_seed: int = 0,
                   out_dir: Optional[str] = None,
                   threads: Optional[int] = None) -> RunManifest:
    """Run the configured study and write outputs plus a hashed manifest."""
    target = out_dir or cfg.output_dir
    os.makedirs(target, exist_ok=True)
    started = _now()

    if cfg.experiment in ("variance_growth", "phase_contrast"):
        outcome = _run_variance_study(cfg, master_seed, target, threads)
    elif cfg.experiment == "percolation_scan":
        outcome = run_percolation_scan(cfg, master_seed, target, threads)
    else:
        verdict = run_audit(cfg.experiment,
                            potential=from_config(cfg.potential))
        path = os.path.join(target, f"{cfg.experiment}.json")
        with open(path, "w") as fh:
            json.dump(verdict, fh, indent=2, sort_keys=True)
            fh.write("\n")
        failures = {} if verdict["passed"] else {
            "audit": ", ".join(c["check"] for c in verdict["checks"]
                               if not c["passed"]) + " failed"}
        outcome = RunOutcome(files=[path], seeds={},
                             diagnostics={"verdict": verdict},
                             failures=failures)

    manifest = RunManifest(
        experiment=cfg.experiment,
        config=cfg.to_dict(),
        master_seed=int(master_seed),
        code_version=__version__,
        started=started,
        finished=_now(),
        seeds=outcome.seeds,
        diagnostics=outcome.diagnostics,
        files={os.path.basename(p): hash_file(p) for p in outcome.files},
        failures=outcome.failures,
    )
    write_manifest(target, manifest)
    return manifest
