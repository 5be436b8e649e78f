#!/usr/bin/env python3
"""Smoke test for the relurec_py extension module.

Builds nothing itself: expects the cdylib to exist (``cargo build --release
-p relurec-python``). The built library is copied next to this script under
the importable name, then a small generate -> recover -> match round trip
and a hardness reduction are exercised.
"""

import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def ensure_module():
    target = HERE / "relurec_py.so"
    candidates = [
        ROOT / "target" / "release" / "librelurec_py.so",
        ROOT / "target" / "debug" / "librelurec_py.so",
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit(
            "librelurec_py.so not found; run `cargo build --release -p relurec-python` first"
        )
    if not target.exists() or built.stat().st_mtime > target.stat().st_mtime:
        shutil.copyfile(built, target)
    sys.path.insert(0, str(HERE))


def main():
    ensure_module()
    import relurec_py as rr

    # generate -> worst-case recover -> match
    inst = rr.generate(m=3, k=2, d=4, n=30, seed=42)
    u_hat, v_hat = rr.recover("worstcase", inst["a"], inst["x"], k=2, seed=1)
    metrics = rr.match_weights(u_hat, v_hat, inst["u"], inst["v"])
    assert metrics["v_error"] <= 1e-6, metrics
    print(f"worstcase recovery: v_error = {metrics['v_error']:.2e}")

    fabs, frel = rr.functional_error(inst["a"], u_hat, v_hat, inst["x"])
    assert frel <= 1e-6, (fabs, frel)
    print(f"functional residual: rel = {frel:.2e}")

    # determinism
    inst2 = rr.generate(m=3, k=2, d=4, n=30, seed=42)
    assert inst["a"] == inst2["a"], "same seed must reproduce the instance"
    print("generation is deterministic")

    # condition-number probe: more samples distinguish more
    lo = rr.kappa_probe(0.01, 10_000, seed=5)
    hi = rr.kappa_probe(1.0, 10_000, seed=5)
    assert lo < hi, (lo, hi)
    print(f"kappa probe fractions: {lo:.4f} < {hi:.4f}")

    # hardness reduction round trip
    reduced = rr.reduce_cnf(2, [[1, -2, 1, -2, 1, -2]])
    assert reduced["witness_valid"], reduced
    assert len(reduced["q"]) == 2 * 2 + 5
    print(f"hardness reduction: dim {reduced['dim']}, witness valid")

    print("smoke test passed")


if __name__ == "__main__":
    main()
