"""Independent reference implementations used by the tests.

Written as plain loops over Python floats, sharing no code with the package.
"""
import math


def fuzzy_entropy_loops(series, m, r1, r2):
    """FuzzyEn with absolute tolerance ``r1``; pairs i != j over N - m segments."""
    x = [float(v) for v in series]
    count = len(x) - m

    def segments(dim):
        out = []
        for i in range(count):
            seg = x[i:i + dim]
            mu = sum(seg) / dim
            out.append([v - mu for v in seg])
        return out

    def phi(dim):
        segs = segments(dim)
        total = 0.0
        for i in range(count):
            for j in range(count):
                if i == j:
                    continue
                d = max(abs(a - b) for a, b in zip(segs[i], segs[j]))
                total += math.exp(-(d ** r2) / r1)
        return total / (count * (count - 1))

    tiny = 2.2250738585072014e-308
    return math.log(max(phi(m), tiny)) - math.log(max(phi(m + 1), tiny))


def population_std(series):
    x = [float(v) for v in series]
    mu = sum(x) / len(x)
    return math.sqrt(sum((v - mu) ** 2 for v in x) / len(x))
