#!/usr/bin/env python3
"""Gaussian mean model N(theta, sigma^2 I) speaking the external-model protocol.

Reads one JSON request {"theta": [...], "n": N, "seed": S} from stdin and
writes N CSV rows of len(theta) floats. The draws use the ctr64-v1 generator,
so the output matches the builtin GaussianMeanModel for the same request.

usage: gaussian_model.py [--sigma S]
"""

import argparse
import json
import math
import sys

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class CtrRng:
    def __init__(self, seed, stream):
        self.key = mix64(seed ^ mix64((stream + GOLDEN) & MASK))
        self.counter = 0
        self.spare = None

    def next_u64(self):
        self.counter += 1
        return mix64((self.key + self.counter * GOLDEN) & MASK)

    def uniform(self):
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def normal(self):
        if self.spare is not None:
            z, self.spare = self.spare, None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self.spare = r * math.sin(angle)
        return r * math.cos(angle)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sigma", type=float, default=1.0)
    args = parser.parse_args()
    request = json.loads(sys.stdin.readline())
    theta = [float(t) for t in request["theta"]]
    rng = CtrRng(int(request["seed"]), 0)
    out = []
    for _ in range(int(request["n"])):
        out.append(",".join(repr(mu + args.sigma * rng.normal()) for mu in theta))
    sys.stdout.write("\n".join(out) + "\n" if out else "")


if __name__ == "__main__":
    main()
