"""Command-line figure generation: one experiment directory in, images out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureError, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots-report",
        description="Render figures from a kleinwalk experiment directory",
    )
    parser.add_argument("experiment_dir", type=Path)
    parser.add_argument("--kinds", default=",".join(FIGURE_KINDS),
                        help=f"comma list from {FIGURE_KINDS}")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: <experiment_dir>/figures)")
    args = parser.parse_args(argv)
    out = args.out if args.out is not None else args.experiment_dir / "figures"
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    status = 0
    for kind in kinds:
        try:
            path = render(FigureSpec(args.experiment_dir, kind, out / f"{kind}.png"))
            print(f"wrote {path}")
        except FigureError as exc:
            print(f"error: {kind}: {exc}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
