"""Command-line front end: run studies, audit invariants, emit patches.

Exit codes: 0 when every requested check or run succeeds, 1 when a
check fails or a study size aborts, 2 for usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .experiments import (
    AUDIT_EXPERIMENTS,
    ConfigError,
    load_config,
    run_audit,
    run_experiment,
)
from .lattice import build_ball, build_torus, patch_to_json, \
    spec_from_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heightlab",
        description="Sample height-function models on cubic planar "
                    "lattices and audit their structural identities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="run the study described by a JSON config")
    p_run.add_argument("config", help="path to the study config JSON")
    p_run.add_argument("--seed", type=int, default=0,
                       help="master seed for chain-seed derivation")
    p_run.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads for parallel chains")

    p_audit = sub.add_parser(
        "audit", help="run a built-in invariant audit suite")
    p_audit.add_argument("suite",
                         choices=list(AUDIT_EXPERIMENTS) + ["all"],
                         help="which audit suite to run")
    p_audit.add_argument("--out", default=".",
                         help="directory for the JSON verdict files")

    p_patch = sub.add_parser(
        "patch", help="build a lattice patch and emit its description")
    p_patch.add_argument(
        "spec",
        help="patch spec, '<family>:ball:<radius>' or "
             "'<family>:torus:<WxH>' (families: honeycomb, "
             "truncated_square)")
    p_patch.add_argument("--emit", choices=["json"], default="json",
                         help="output format")
    p_patch.add_argument("--out", default=None,
                         help="write to this file instead of stdout")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_experiment(cfg, master_seed=args.seed,
                              out_dir=args.out, threads=args.threads)
    out_dir = args.out or cfg.output_dir
    for label, diag in sorted(manifest.diagnostics.items()):
        if isinstance(diag, dict) and "var_root" in diag:
            print(f"size {label}: var_root="
                  f"{diag['var_root']:.6g} stderr={diag['stderr']:.3g}")
        elif isinstance(diag, dict) and "samples" in diag:
            freq = diag.get("both_spin_wrap_frequency")
            extra = (f" both_spin_wrap_frequency={freq:.4g}"
                     if freq is not None else "")
            print(f"size {label}: samples={diag['samples']}{extra}")
    for name in sorted(manifest.files):
        print(f"wrote {os.path.join(out_dir, name)}")
    print(f"wrote {os.path.join(out_dir, 'manifest.json')}")
    for label, reason in sorted(manifest.failures.items()):
        print(f"FAILED {label}: {reason}", file=sys.stderr)
    return 1 if manifest.failures else 0


def _cmd_audit(args) -> int:
    suites = list(AUDIT_EXPERIMENTS) if args.suite == "all" \
        else [args.suite]
    os.makedirs(args.out, exist_ok=True)
    all_passed = True
    for suite in suites:
        verdict = run_audit(suite)
        for check in verdict["checks"]:
            mark = "PASS" if check["passed"] else "FAIL"
            print(f"{mark} {check['check']} "
                  f"(deviation {check['deviation']:.3g} vs tolerance "
                  f"{check['tolerance']:.3g})")
        path = os.path.join(args.out, f"{suite}.json")
        with open(path, "w") as fh:
            json.dump(verdict, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
        all_passed = all_passed and verdict["passed"]
    return 0 if all_passed else 1


def _parse_patch_spec(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f"patch spec {text!r} is not '<family>:<shape>:<size>'")
    family, shape, size = parts
    spec = spec_from_config({"family": family})
    if shape == "ball":
        return build_ball(spec, int(size))
    if shape == "torus":
        dims = size.lower().split("x")
        if len(dims) != 2:
            raise ConfigError(f"torus size {size!r} is not '<W>x<H>'")
        return build_torus(spec, int(dims[0]), int(dims[1]))
    raise ConfigError(f"unknown patch shape {shape!r}; "
                      "use 'ball' or 'torus'")


def _cmd_patch(args) -> int:
    try:
        patch = _parse_patch_spec(args.spec)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = patch_to_json(patch)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "audit":
            return _cmd_audit(args)
        return _cmd_patch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
