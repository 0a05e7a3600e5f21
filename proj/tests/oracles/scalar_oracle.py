"""High-precision reference values frozen into the C++ unit tests."""
from mpmath import mp, mpf, log, sqrt, sinh

mp.dps = 40


def ihs(x, lam):
    x, lam = mpf(x), mpf(lam)
    if lam == 0:
        return x
    return log(lam * x + sqrt(lam * lam * x * x + 1)) / lam


def penalty(x, lam):
    return log(mpf(lam) ** 2 * mpf(x) ** 2 + 1) / 2


def objective(col, groups, lam):
    # one-dimensional, shared lambda
    y = [ihs(v, lam) for v in col]
    wss = mpf(0)
    for g in set(groups):
        members = [y[i] for i in range(len(y)) if groups[i] == g]
        m = sum(members) / len(members)
        wss += sum((v - m) ** 2 for v in members)
    n, p = len(col), 1
    return mpf(n * p) / 2 * log(wss) + sum(penalty(v, lam) for v in col)


print("ihs(1,1)            ", ihs(1, 1))
print("inverse(ihs(1,1),1) ", sinh(ihs(1, 1)) / 1)
print("-penalty(1,1)       ", -penalty(1, 1))
print("obj [[1],[-1]] lam=0", objective([1, -1], [1, 1], 0))
print("obj [[1],[-1]] lam=1", objective([1, -1], [1, 1], 1))
