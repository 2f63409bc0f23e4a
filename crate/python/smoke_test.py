"""Smoke test for the Python bindings.

Build and install first:

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import json
import math
import os
import subprocess
import tempfile

import ipm_hull as ih


def check_membership():
    z = ih.State(1.0, (3.0, -2.0), (3.0, -2.0))
    assert ih.in_k(z)
    assert ih.classify(z)["tag"] == "OnK"
    assert not ih.in_k({"rho": 0.5, "v": [1, 1], "m": [0.5, 0.5]})

    d = ih.realize({"form": "sheared", "rho": 2, "e": [1, 0], "ell": 3})
    assert d.v == (1.0, -1.0) and d.m == (3.0, -3.0)
    assert ih.in_wave_cone(d) and ih.in_wave_cone(2.5 * d)
    assert all(ih.in_wave_cone(w) for w in ih.sample_wave_cone(1, 100))
    assert not ih.in_wave_cone(ih.State(0.0, (1.0, 0.5), (0.0, 0.0)))


def check_hull():
    assert ih.k_range(0.0, (0.0, -0.5)) == {"kind": "flexible", "lo": 1.0, "hi": 2.0}
    assert ih.k_bound(0.0, (1.0, 0.0)) == 0.0
    rigid = ih.State(0.0, (1.0, 0.0), (0.0, 0.0))
    assert ih.classify(rigid)["tag"] == "X3"
    assert ih.power_balance(rigid) == 1.0

    outside = ih.State(0.0, (0.0, 0.0), (0.0, 0.4))
    assert ih.eval_g("G1", outside) > 0
    assert ih.separation_bound(outside)[0]["separates"]
    try:
        ih.decompose(outside)
    except ValueError as e:
        assert "outside" in str(e)
    else:
        raise AssertionError("decompose accepted a point outside the hull")


def check_laminate():
    z = ih.State(0.0, (0.0, -0.5), (0.0, -0.75))
    tree = ih.decompose(z)
    report = ih.verify_tree(tree)
    assert report["pass"], report
    leaves = []

    def walk(node):
        if "left" in node:
            walk(node["left"])
            walk(node["right"])
        else:
            leaves.append(node["point"])

    walk(tree)
    assert all(ih.in_k(p) for p in leaves)


def check_cloud():
    points, summary = ih.grow_cloud({"rounds": 2, "pairs_per_round": 2000})
    assert summary["violations"] == 0
    assert len(points) > 2000
    again, _ = ih.grow_cloud({"rounds": 2, "pairs_per_round": 2000})
    assert points == again
    cov = ih.k_coverage(points, 0.0, (0.0, -0.5), 0.1)
    assert cov["count"] > 0 and cov["k_min"] >= 1.0 - 1e-9


def check_files():
    with tempfile.TemporaryDirectory() as tmp:
        n = 8
        path = os.path.join(tmp, "field.txt")
        rows = ["frame,field,i,j,value"]
        for j in range(n + 1):
            for i in range(n + 1):
                rows.append(f"0,psi_v,{i},{j},0")
        for j in range(n):
            for i in range(n):
                rows.append(f"0,rho,{i},{j},{(j + 0.5) / n}")
        header = json.dumps({"nx": n, "ny": n, "Lx": 1.0, "Ly": 1.0})
        with open(path, "w") as f:
            f.write(header + "\n" + "\n".join(rows) + "\n")
        report = ih.audit_field(path)
        assert report["pass"] and report["v_energy"] == 0.0

        series = os.path.join(tmp, "series.txt")
        header = json.dumps({"nx": n, "ny": n, "Lx": 1.0, "Ly": 1.0, "times": [0.0, 1.0]})
        frame1 = [r.replace("0,", "1,", 1) for r in rows[1:]]
        with open(series, "w") as f:
            f.write(header + "\n" + "\n".join(rows + frame1) + "\n")
        out = ih.time_bound(series)
        assert out["bound"]["lhs"] == 0.0
        assert math.isclose(out["bound"]["rhs"], 5.0 / 6.0, abs_tol=1e-2)


def check_cli_agrees():
    exe = os.environ.get("IPM_HULL_BIN")
    if not exe:
        return
    state = {"rho": 0.0, "v": [1.0, 0.0], "m": [0.0, 0.0]}
    out = subprocess.run([exe, "classify", json.dumps(state)], capture_output=True, check=True)
    assert json.loads(out.stdout) == ih.classify(state)


if __name__ == "__main__":
    for check in (check_membership, check_hull, check_laminate, check_cloud, check_files, check_cli_agrees):
        check()
        print(f"{check.__name__}: ok")
