#!/usr/bin/env python3
"""Regenerates configs/smooth_mixture.json.

Each component mean is a sum of a few low-frequency cosines plus one 16x16
patch of high-frequency texture. Means have zero DC: the cosines integrate to
zero over the grid and the patch row frequency is a multiple of 4, so the patch
holds a whole number of periods.

The defaults are the frozen shipped values; change them only together with a
fresh acceptance run.
"""

import argparse
import json

import numpy as np


def build(k, size, sigma, low_amp, patch_amp, patch_size, seed):
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(k):
        cosines = []
        for _ in range(rng.integers(2, 5)):
            fu, fv = rng.integers(0, 4, 2)
            if fu == 0 and fv == 0:
                fu = 1
            amp = low_amp * rng.uniform(0.5, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            cosines.append({"fu": int(fu), "fv": int(fv),
                            "amp": round(float(amp), 6),
                            "phase": round(float(phase), 6)})
        row, col = rng.integers(0, size - patch_size, 2)
        fu, fv = rng.integers(16, 28, 2)
        fu = 16 + 4 * ((fu - 16) // 4)
        comps.append({
            "weight": 1.0 / k,
            "sigma": sigma,
            "mean": {
                "offset": 0.0,
                "cosines": cosines,
                "patch": {"row": int(row), "col": int(col), "size": patch_size,
                          "fu": int(fu), "fv": int(fv), "amp": patch_amp,
                          "phase": 0.0},
            },
        })
    return {
        "height": size,
        "width": size,
        "noise": {"total_steps": 1000, "beta_start": 1e-4, "beta_end": 0.02},
        "components": comps,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--components", type=int, default=8)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--sigma", type=float, default=0.3)
    ap.add_argument("--low-amp", type=float, default=0.55)
    ap.add_argument("--patch-amp", type=float, default=0.5)
    ap.add_argument("--patch-size", type=int, default=16)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()
    cfg = build(a.components, a.size, a.sigma, a.low_amp, a.patch_amp,
                a.patch_size, a.seed)
    with open(a.out, "w") as f:
        json.dump(cfg, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
