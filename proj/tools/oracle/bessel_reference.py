#!/usr/bin/env python3
"""Writes high-precision reference values of J_n(x) and Y_n(x).

Both functions are evaluated from their defining ascending series in
arbitrary precision.  The working precision is raised with x so that the
cancellation between the large alternating terms (about x/ln(10) digits)
is absorbed.  mpmath's own besselj/bessely are only used as a sanity
cross-check and never written to the table.

Output format, one record per line:  n x J_n(x) Y_n(x)
with 20 significant digits.
"""

import argparse
import sys

import mpmath as mp

ORDERS = [0, 1, 2, 3, 5, 10, 20, 50, 100, 200]
ARGS = ["0.001", "0.1", "0.5", "1", "2", "3.5", "5", "7", "10", "12.5",
        "19.9", "20.1", "24.9", "25.1", "30", "50", "100", "250", "1000",
        "10000"]


def series_j(n, x):
    half = x / 2
    term = half ** n / mp.factorial(n)
    total = term
    q = -half * half
    m = 0
    while True:
        m += 1
        term = term * q / (m * (m + n))
        total += term
        if m > x and abs(term) < mp.mpf(10) ** (-mp.mp.dps + 5) * abs(total):
            break
    return total


def series_y(n, x):
    """Ascending series for Y_n (integer order)."""
    half = x / 2
    jn = series_j(n, x)
    out = 2 / mp.pi * mp.log(half) * jn
    # finite part
    if n > 0:
        fin = mp.mpf(0)
        for k in range(n):
            fin += mp.factorial(n - k - 1) / mp.factorial(k) * half ** (2 * k - n)
        out -= fin / mp.pi
    # digamma part
    q = -half * half
    term = half ** n / mp.factorial(n)
    psi_k1 = mp.digamma(1)
    psi_nk1 = mp.digamma(n + 1)
    acc = (psi_k1 + psi_nk1) * term
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + n))
        psi_k1 += mp.mpf(1) / k
        psi_nk1 += mp.mpf(1) / (n + k)
        contrib = (psi_k1 + psi_nk1) * term
        acc += contrib
        if k > x and abs(contrib) < mp.mpf(10) ** (-mp.mp.dps + 5) * abs(acc):
            break
    out -= acc / mp.pi
    return out


def evaluate(n, xs):
    x = mp.mpf(xs)
    lost = int(float(x) / 2.302585) + 10
    mp.mp.dps = 40 + lost
    j = series_j(n, x)
    y = series_y(n, x)
    mp.mp.dps = 40
    jc = mp.besselj(n, x)
    yc = mp.bessely(n, x)
    for a, b in ((j, jc), (y, yc)):
        scale = max(abs(b), mp.mpf(10) ** -300)
        if abs(a - b) > mp.mpf(10) ** -25 * scale:
            raise SystemExit(f"series/mpmath mismatch at n={n} x={xs}: {a} vs {b}")
    return j, y


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    args = ap.parse_args()
    lines = []
    for xs in ARGS:
        for n in ORDERS:
            if float(xs) >= 1000 and n not in (0, 1, 2, 10, 100, 200):
                continue
            j, y = evaluate(n, xs)
            if abs(y) > mp.mpf("1e300"):
                continue
            lines.append(f"{n} {xs} {mp.nstr(j, 20, min_fixed=0, max_fixed=0)} "
                         f"{mp.nstr(y, 20, min_fixed=0, max_fixed=0)}")
            print(lines[-1], file=sys.stderr)
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
