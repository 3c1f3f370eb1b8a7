#!/usr/bin/env python3
"""Brute-force oracle for the diversity statistics.

Recomputes Shannon entropy (bits), normalized entropy and the chi-square
statistic against a uniform expectation by direct summation, independent
of the Rust implementation. The printed values are frozen into the
acceptance suite; rerun this script whenever those constants need to be
re-derived.

Usage:
    verify_stats.py 45 45 10
    verify_stats.py            # defaults to the 45/45/10 gender counts
"""

import math
import sys


def entropy_bits(counts):
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def normalized_entropy(counts):
    k = sum(1 for c in counts if c > 0)
    if k <= 1:
        return 0.0
    return entropy_bits(counts) / math.log2(len(counts))


def chi_square_uniform(counts):
    total = sum(counts)
    expected = total / len(counts)
    return sum((c - expected) ** 2 / expected for c in counts)


def main(argv):
    counts = [int(a) for a in argv[1:]] or [45, 45, 10]
    if any(c < 0 for c in counts) or sum(counts) == 0:
        raise SystemExit("counts must be non-negative and sum to > 0")
    print(f"counts:             {counts}")
    print(f"entropy_bits:       {entropy_bits(counts):.16f}")
    print(f"normalized_entropy: {normalized_entropy(counts):.16f}")
    print(f"chi_square_uniform: {chi_square_uniform(counts):.16f}")


if __name__ == "__main__":
    main(sys.argv)
