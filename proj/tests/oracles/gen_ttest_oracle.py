"""Regenerates tests/data/ttest_oracle.json.

Paired one-tailed t-test p-values evaluated with mpmath at 50 digits from the
exact binary values of the inputs: p = 1/2 * I_{df/(df+t^2)}(df/2, 1/2) for
t >= 0, and one minus that for t < 0.
"""
import json
import random
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50


def upper_tail(t, df):
    x = df / (df + t * t)
    half = mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True) / 2
    return half if t >= 0 else 1 - half


def paired(a, b):
    d = [mp.mpf(bi) - mp.mpf(ai) for ai, bi in zip(a, b)]
    n = len(d)
    mean = mp.fsum(d) / n
    sd = mp.sqrt(mp.fsum((x - mean) ** 2 for x in d) / (n - 1))
    t = mean / (sd / mp.sqrt(n))
    return t, upper_tail(t, mp.mpf(n - 1))


def main():
    rng = random.Random(20261016)
    fixtures = []
    a = [0.0, 0.0, 0.0, 0.0, 0.0]
    b = [1.0, 2.0, 3.0, 4.0, 5.0]
    t, p = paired(a, b)
    fixtures.append({"a": a, "b": b, "t": float(t), "p": float(p)})
    for _ in range(50):
        n = rng.randint(2, 60)
        shift = rng.uniform(-0.5, 1.5)
        spread = rng.uniform(0.05, 2.0)
        a = [rng.uniform(0, 100) for _ in range(n)]
        b = [x + shift * spread + rng.gauss(0, spread) for x in a]
        t, p = paired(a, b)
        fixtures.append({"a": a, "b": b, "t": float(t), "p": float(p)})
    out = Path(__file__).resolve().parent.parent / "data" / "ttest_oracle.json"
    out.write_text(json.dumps({"fixtures": fixtures}, indent=1) + "\n")


if __name__ == "__main__":
    main()
