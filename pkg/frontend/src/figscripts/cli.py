"""The render-figures command line tool.

Scans a workbench output directory, renders every figure kind whose input
CSVs are present, and writes the PNGs to the output directory. Exit codes
follow the workbench convention: 0 all rendered, 1 some figures failed,
2 nothing to do or bad arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, render

_DISCOVERY = (
    ("density-curve", "density_curve.png",
     {"target": "target_curve.csv", "simulator": "simulator_curve.csv"}, ()),
    ("noiseless-error", "noiseless_error.png",
     {"sweep": "noiseless_sweep.csv"}, ()),
    ("noisy-optimum", "noisy_optimum.png",
     {"sweep": "noisy_sweep.csv"}, (("optimum", "noisy_optimum.csv"),)),
    ("covariance-maps", "covariance_maps.png",
     {"map": "phase_map.csv"}, ()),
)


def discover(indir: Path, outdir: Path) -> list[FigureSpec]:
    """Build a spec for each figure kind whose required inputs exist."""
    specs = []
    for kind, image, required, optional in _DISCOVERY:
        inputs = {role: indir / name for role, name in required.items()}
        if not all(path.is_file() for path in inputs.values()):
            continue
        for role, name in optional:
            if (indir / name).is_file():
                inputs[role] = indir / name
        specs.append(FigureSpec(kind=kind, inputs=inputs, output=outdir / image))
    return specs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-figures",
        description="Render figures from workbench CSV outputs.",
    )
    parser.add_argument("--in", dest="indir", required=True,
                        help="directory holding workbench CSV outputs")
    parser.add_argument("--out", dest="outdir", required=True,
                        help="directory to write PNGs into")
    args = parser.parse_args(argv)

    indir = Path(args.indir)
    if not indir.is_dir():
        print(f"render-figures: input directory not found: {indir}",
              file=sys.stderr)
        return 2
    outdir = Path(args.outdir)
    specs = discover(indir, outdir)
    if not specs:
        print(f"render-figures: no workbench CSV outputs in {indir}",
              file=sys.stderr)
        return 2

    failures = 0
    for spec in specs:
        try:
            path = render(spec)
        except Exception as exc:
            failures += 1
            print(f"render-figures: {spec.kind}: {exc}", file=sys.stderr)
        else:
            print(f"{spec.kind}: wrote {path}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
