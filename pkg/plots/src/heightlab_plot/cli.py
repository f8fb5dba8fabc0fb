"""Command-line entry point: render the figures described in a JSON file."""

import argparse
import json
import sys

from .figures import SchemaMismatch, render, spec_from_dict


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="heightlab-plot",
        description="Render figures from heightlab CSV outputs. The "
                    "argument is a JSON file holding one figure spec "
                    "(kind, input/inputs, output, optional title and "
                    "axis labels) or a list of such specs.")
    parser.add_argument("figure", help="path to the figure JSON file")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with open(args.figure) as fh:
            payload = json.load(fh)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: {args.figure} is not valid JSON: {exc}",
              file=sys.stderr)
        return 2
    entries = payload if isinstance(payload, list) else [payload]
    try:
        for entry in entries:
            spec = spec_from_dict(entry)
            print(f"wrote {render(spec)}")
    except (SchemaMismatch, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
