"""Smoke test for the `propeller` extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
Run:  python -m pytest python/smoke_test.py   (or plain `python python/smoke_test.py`)
"""

import math
import os
import tempfile

import propeller

REGULAR = math.acos(-1.0 / 3.0)


def test_geometry_values():
    assert abs(propeller.f0([REGULAR] * 3) - 21.9031) < 1e-3
    assert abs(propeller.f0([1.53796841207904] * 3) - 21.7391) < 1e-3
    assert all(abs(h) < 1e-12 for h in propeller.h_system([REGULAR] * 3))
    lam = propeller.lambda_([REGULAR] * 3)
    assert abs(propeller.gamma([REGULAR] * 3, 2) / math.sqrt(lam) - 1.0 / 3.0) < 1e-12


def test_verified_sine():
    v = propeller.ver_sin(1.0)
    lo, hi = v.bounds()
    assert lo <= math.sin(1.0) <= hi
    assert v.mult_budget == 250


def test_boxes_and_classification():
    b = propeller.SearchBox(0, [50, 50, 50])
    assert b.classify() == ("UNRESOLVED", 0)
    assert len(b.children()) == 1331
    assert propeller.SearchBox(0, [1, 1, 1]).classify()[0] == "I"
    assert str(b) == "0 50 50 50"


def test_run_and_verify():
    with tempfile.TemporaryDirectory() as d:
        out = os.path.join(d, "c.cert")
        records, depth = propeller.run([(0, 9), (0, 9), (0, 9)], 0, out)
        assert (records, depth) == (1000, 0)
        assert propeller.verify(out) is None
        with open(out) as f:
            lines = f.readlines()
        lines[2] = lines[2].replace(" I ", " IV ")
        with open(out, "w") as f:
            f.writelines(lines)
        assert "replays" in propeller.verify(out)
    assert len(propeller.constants_hash()) == 64


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
