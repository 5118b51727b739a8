"""export-integrals: geometry + basis + k-mesh -> FCIDUMP / labels / manifest."""
from __future__ import annotations

import argparse
import json
import sys

from .export import ExportError, ExportRequest, export_supercell, load_geometry


def make_parser():
    parser = argparse.ArgumentParser(
        prog="export-integrals",
        description="Export a supercell Hamiltonian in an orthonormal localized "
                    "basis (FCIDUMP + labels.json + manifest.json).",
    )
    parser.add_argument("--geom", required=True, help="geometry JSON file")
    parser.add_argument("--basis", required=True, help="basis set name")
    parser.add_argument("--kmesh", nargs=3, type=int, required=True,
                        metavar=("A", "B", "C"))
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--pseudo", default="gth-pade",
                        help="pseudopotential name, or 'none'")
    parser.add_argument("--localization", default="lowdin",
                        choices=("lowdin", "iao"))
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        lattice, atoms, vacuum = load_geometry(args.geom)
        req = ExportRequest(
            lattice=lattice,
            atoms=atoms,
            basis=args.basis,
            pseudopotential=None if args.pseudo.lower() == "none" else args.pseudo,
            k_mesh=tuple(args.kmesh),
            localization=args.localization,
            vacuum=vacuum,
            out_dir=args.out,
        )
        manifest = export_supercell(req)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(manifest))
    return 0


if __name__ == "__main__":
    sys.exit(main())
