"""Smoke test for the isofold_py extension.

Run after `cargo build --release -p isofold-py --features extension-module`
(or `maturin develop` inside crates/py).
"""

import os
import shutil
import sys
import tempfile
from fractions import Fraction

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

try:
    import isofold_py as iso
except ImportError:
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libisofold_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "isofold_py.so"))
            sys.path.insert(0, tmp)
            break
    import isofold_py as iso


def fixture(name):
    with open(os.path.join(ROOT, "fixtures", name)) as f:
        return f.read()


def main():
    tet = iso.Graph.platonic("tetrahedron")
    cube = iso.Graph.platonic("cube")
    octa = iso.Graph.platonic("octahedron")
    assert (tet.vertex_count, tet.edge_count) == (4, 6)
    assert cube.total_length() == 12

    lb = iso.lower_bound(tet, cube)
    assert lb["value"] == Fraction(7, 3) and not lb["strict"], lb
    ico = iso.Graph.platonic("icosahedron")
    assert iso.lower_bound(ico, cube, ("icosahedron", "cube"))["value"] == 1

    assert iso.postman(octa) == 12
    assert iso.postman(cube, open=True) == 15

    cert = iso.Certificate.parse(octa, cube, fixture("octahedron-cube-3_2.cert"))
    assert cert.scale == Fraction(3, 2)
    assert cert.verify()["accepted"]
    assert iso.refine(cert).scale <= cert.scale

    verdict, found = iso.solve(tet, octa, q=2)
    assert verdict == "optimal" and found.scale == 3, (verdict, found)
    assert found.verify()["accepted"]
    verdict, none = iso.solve(tet, octa, alpha=Fraction(2), q=1)
    assert (verdict, none) == ("infeasible", None)

    again = iso.Certificate.parse(tet, octa, found.to_text())
    assert again.to_text() == found.to_text()

    edge = iso.Graph.parse("v a\nv b\ne a b\n")
    model = iso.export_ilp(edge, edge, c=1, alpha="1")
    assert model == iso.export_ilp(edge, edge, c=1, alpha="1")
    assert model.startswith("\\ folding model")

    src, dst = iso.gadget(fixture("setcover-yes.txt"))
    verdict, _ = iso.solve(src, dst, alpha=1)
    assert verdict == "feasible"
    src, dst = iso.gadget(fixture("setcover-no.txt"))
    assert iso.solve(src, dst, alpha=1)[0] == "infeasible"

    print("smoke test passed")


if __name__ == "__main__":
    main()
