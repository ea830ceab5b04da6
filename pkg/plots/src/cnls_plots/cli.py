"""Command line for figure rendering.

Either point at a flat ``key = value`` spec file or pass the same fields as
flags.  Spec file keys mirror PlotSpec:

    kind = loglog_decay
    input = out/dispersive_linf.csv      # repeatable
    output = figures/linf.png
    guide_slope = -1.5                   # repeatable
    premultiply_exponent = 0.0
    title = sup-norm decay
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import PLOT_KINDS, PlotSpec, render
from .schemas import SchemaError


def parse_spec_file(path) -> PlotSpec:
    kind = ""
    inputs: list[str] = []
    output = ""
    guides: list[float] = []
    premult = 0.0
    title = ""
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = key.strip(), value.strip()
        if key == "kind":
            kind = value
        elif key == "input":
            inputs.append(value)
        elif key == "output":
            output = value
        elif key == "guide_slope":
            guides.append(float(value))
        elif key == "premultiply_exponent":
            premult = float(value)
        elif key == "title":
            title = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    if not output:
        raise ValueError(f"{path}: missing output")
    return PlotSpec(
        kind=kind,
        inputs=tuple(inputs),
        output=output,
        guide_slopes=tuple(guides),
        premultiply_exponent=premult,
        title=title,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cnls-render", description=__doc__)
    parser.add_argument("--spec", help="flat spec file; overrides the other flags")
    parser.add_argument("--kind", choices=PLOT_KINDS)
    parser.add_argument("--input", action="append", default=[], help="input CSV (repeatable)")
    parser.add_argument("--out", help="output image path (PNG; an SVG sibling is written too)")
    parser.add_argument("--guide-slope", action="append", type=float, default=[])
    parser.add_argument("--premultiply-exponent", type=float, default=0.0)
    parser.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.spec:
            spec = parse_spec_file(args.spec)
        else:
            if not (args.kind and args.input and args.out):
                print("need --spec or all of --kind/--input/--out", file=sys.stderr)
                return 1
            spec = PlotSpec(
                kind=args.kind,
                inputs=tuple(args.input),
                output=args.out,
                guide_slopes=tuple(args.guide_slope),
                premultiply_exponent=args.premultiply_exponent,
                title=args.title,
            )
        result = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in result.files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
