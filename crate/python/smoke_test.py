"""Smoke test for the compiled extension.

Build it first with ``cargo build -p qkd-rawdata-py`` (or ``--release``);
set QKD_RAWDATA_LIB to point at a specific shared library.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]


def find_library():
    override = os.environ.get("QKD_RAWDATA_LIB")
    if override:
        return pathlib.Path(override)
    names = ["libqkd_rawdata_py.so", "libqkd_rawdata_py.dylib", "qkd_rawdata_py.dll"]
    candidates = [ROOT / "target" / profile / name for profile in ("release", "debug") for name in names]
    found = [p for p in candidates if p.exists()]
    if not found:
        sys.exit("extension not built; run `cargo build -p qkd-rawdata-py`")
    return max(found, key=lambda p: p.stat().st_mtime)


def load():
    path = find_library()
    loader = importlib.machinery.ExtensionFileLoader("qkd_rawdata_py", str(path))
    spec = importlib.util.spec_from_file_location("qkd_rawdata_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    q = load()

    close(q.mi_alice_bob(0.0), 0.5, 1e-15)
    close(q.mi_alice_bob(0.2), 0.2655022, 1e-7)
    close(q.phi(1.0), 1.0, 0.0)

    thresholds = {c: q.find_threshold(c) for c in ("honest", "maxent", "minconc", "hsw")}
    close(thresholds["honest"].epsilon_star, 1 - math.sqrt(0.5), 1e-6)
    close(thresholds["maxent"].epsilon_star, 0.21380, 1e-4)
    close(thresholds["minconc"].qber, 0.1, 1e-6)
    close(thresholds["hsw"].epsilon_star, 0.1230, 5e-4)

    table = q.joint_table(0.2)
    other = q.joint_table(0.2, c22=-0.8)
    close(table[0][0], 0.0125, 1e-12)
    close(table[0][1], 0.1125, 1e-12)
    close(table[0][2], 0.0625, 1e-12)
    assert all(abs(a - b) <= 1e-12 for r, s in zip(table, other) for a, b in zip(r, s))

    ensemble = q.conditioned_ancilla(0.25, -0.6)
    m = q.analytic_povm(0.25, -0.6)
    info = q.accessible_info(ensemble, m)
    close(info, q.mi_eve_analytic(-0.6), 1e-9)
    close(m.completeness_residual(), 0.0, 1e-9)
    close(q.accessible_info(ensemble, m.conjugate()), info, 1e-10)
    assert q.canonical_povm(0.25, -0.6).max_imag() <= 1e-12

    best = q.optimize_povm(ensemble, restarts=8, seed=1)
    close(best.value, info, 1e-5)
    assert len(best.restart_values) == 8
    assert best.povm.completeness_residual() <= 1e-9

    rows = q.scan(0.0, 0.5, 0.01)
    assert len(rows) == 51
    close(rows[20][1], rows[20][4], 1e-9)

    s, c = q.entanglement_numbers(0.1, -0.8)
    close(s + c, 1.0, 1e-12)
    singlet = [[0, 0, 0, 0], [0, 0.5, -0.5, 0], [0, -0.5, 0.5, 0], [0, 0, 0, 0]]
    close(q.concurrence([[complex(x) for x in r] for r in singlet]), 1.0, 1e-9)

    report = q.nonsymmetric_search(0.25, trials=3, seed=5)
    assert report.excess <= 1e-4
    assert len(report.samples) == 3
    assert json.loads(report.to_json())["trials"] == 3

    for bad in (lambda: q.joint_table(0.2, c22=0.5), lambda: q.find_threshold("nope"), lambda: q.phi(2.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test passed:", ", ".join(f"{k} {v.epsilon_star:.6f}" for k, v in thresholds.items()))


if __name__ == "__main__":
    main()
