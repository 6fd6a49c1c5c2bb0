"""Global dimensions and exactness of both chains on the bundled meshes."""

import argparse
from pathlib import Path

from psfeec.globalspace import verify_global_exactness
from psfeec.mesh import load_macro_mesh, powell_sabin_refine

MESH_DIR = Path(__file__).resolve().parent.parent / "meshes"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("meshes", nargs="*", default=sorted(str(p) for p in MESH_DIR.glob("*.mesh")))
    args = ap.parse_args()
    print(f"{'mesh':<16}{'chain':<6}{'r':>2}  {'dims':<16}{'euler':>6}{'deficit':>8}  exact")
    for path in args.meshes:
        sc = powell_sabin_refine(load_macro_mesh(path))
        for chain, r in (("SLV", 2), ("SLV", 3), ("SSL", 3)):
            rep = verify_global_exactness(sc, r, chain)
            print(f"{Path(path).stem:<16}{chain:<6}{r:>2}  {str(rep['dims']):<16}{rep['euler']:>6}"
                  f"{rep['exactness_deficit']:>8}  {rep['exact']}")


if __name__ == "__main__":
    main()
