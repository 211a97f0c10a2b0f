"""Smoke test for the tecu_py extension module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/python
"""

import math
import os
import sys
import tempfile

import tecu_py


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def main():
    check(tecu_py.combination_label("2-5") == "PALM", "classical label")
    check(tecu_py.combination_label("2-6") == "2-6", "embedded label")

    w = tecu_py.hard_threshold([[1.0, 0.3]], 0.1, 2.0)
    check(w == [[1.0, 0.0]], "hard threshold")
    d = tecu_py.sphere_project([[3.0], [4.0]])
    check(abs(d[0][0] - 0.6) < 1e-15 and abs(d[1][0] - 0.8) < 1e-15, "sphere projection")

    dl = tecu_py.DictionaryLearning.synthetic(n=8, m=12, p=60, sparsity=2, seed=1)
    check(dl.shape == (8, 12, 60), "dictionary learning shape")
    check(dl.validate(3) == 0, "gradient oracles")
    res = dl.solve("2-6", max_outer=80)
    check(res.combination_label == "2-6" and res.descent_violations == 0, "TECU 2-6 run")
    obj = res.objectives()
    check(obj[-1] <= obj[0], "objective decreased")
    check(len(res.trace()) == res.iterations, "trace length")
    palm = dl.baseline("palm", max_outer=80)
    check(palm.combination_label == "PALM", "PALM baseline")
    check(all(abs(math.hypot(*col) - 1.0) < 1e-9 for col in zip(*res.y)), "unit-norm atoms")

    lie, illum, _ = tecu_py.Retinex.synthetic(size=16, seed=0)
    r = lie.solve("3-4", max_outer=100)
    check(r.combination_label == "3-4" and r.descent_violations == 0, "Retinex 3-4 run")
    check(len(r.x) == 16 and len(r.x[0]) == 16, "illumination shape")

    try:
        dl.solve("4-1")
    except ValueError:
        check(True, "bad combination raises ValueError")
    else:
        check(False, "bad combination raises ValueError")

    cfg = os.path.join(os.path.dirname(__file__), "..", "configs", "lie.toml")
    with tempfile.TemporaryDirectory() as out:
        rows = tecu_py.run_config(cfg, out)
        check(len(rows) == 2 and os.path.exists(os.path.join(out, "summary.json")), "config run")

    print("smoke test passed")


if __name__ == "__main__":
    main()
