"""Small constructed SAMs and independent oracles shared by the test modules."""

from fractions import Fraction

import numpy as np

from samkit.balancing import RasConfig, balance_sam
from samkit.core import DEFAULT_MASK, Account, AccountCategory as C, AccountRegistry, Sam


def registry(*specs):
    """``registry(("A", C.ProductionSector), ("H", C.Household, {"region": "rural"}), ...)``"""
    out = []
    for spec in specs:
        ident, cat = spec[0], spec[1]
        tags = tuple(spec[2].items()) if len(spec) > 2 else ()
        out.append(Account(ident, ident, cat, tags))
    return AccountRegistry(out)


def hand_sam():
    """Activities, factor, household, rest of world; every endogenous column leaks 20%.

    The endogenous block is strictly cyclic (A -> F -> H -> A) with weight 0.8,
    so the multiplier matrix is (I + A + A^2) / (1 - 0.8^3).
    """
    reg = registry(
        ("ACT", C.ProductionSector),
        ("FAC", C.FactorOfProduction),
        ("HH", C.Household, {"region": "rural", "ethnicity": "malay"}),
        ("ROW", C.RowCurrent),
    )
    cells = np.array(
        [
            [0, 0, 80, 20],
            [80, 0, 0, 20],
            [0, 80, 0, 20],
            [20, 20, 20, 0],
        ],
        dtype=float,
    )
    return Sam(reg, cells, "RM million")


def compare_sam():
    """Two sectors, two households and two programmes.

    Programme PA buys only from S1, which pays its income to the rural Malay
    household; PB buys only from S2, which pays the urban Chinese household.
    """
    reg = registry(
        ("S1", C.ProductionSector),
        ("S2", C.ProductionSector),
        ("HH_RM", C.Household, {"region": "rural", "ethnicity": "malay"}),
        ("HH_UC", C.Household, {"region": "urban", "ethnicity": "chinese"}),
        ("PA", C.PublicCurrentExpenditure, {"programme": "a"}),
        ("PB", C.PublicCurrentExpenditure, {"programme": "b"}),
        ("ROW", C.RowCurrent),
    )
    #            S1  S2 HH_RM HH_UC PA  PB  ROW
    cells = np.array(
        [
            [0, 0, 30, 10, 60, 0, 0],
            [0, 0, 10, 30, 0, 60, 0],
            [60, 0, 0, 0, 0, 0, 0],
            [0, 60, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 60],
            [0, 0, 0, 0, 0, 0, 60],
            [40, 40, 20, 20, 0, 0, 0],
        ],
        dtype=float,
    )
    return Sam(reg, cells, "RM million")


def fraction_inverse(a):
    """(I - A)^-1 by Gauss-Jordan elimination over exact rationals."""
    n = len(a)
    m = [[Fraction(int(i == j)) - Fraction(a[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
         for i in range(n)]
    for c in range(n):
        p = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[p] = m[p], m[c]
        piv = m[c][c]
        m[c] = [v / piv for v in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [row[n:] for row in m]


SMALL_LAYOUT = (
    ("P1", C.ProductionSector),
    ("P2", C.ProductionSector),
    ("P3", C.ProductionSector),
    ("FAC", C.FactorOfProduction),
    ("HH_R", C.Household, {"region": "rural", "ethnicity": "malay"}),
    ("HH_U", C.Household, {"region": "urban", "ethnicity": "chinese"}),
    ("COM", C.Company),
    ("PE1", C.PublicCurrentExpenditure, {"programme": "one"}),
    ("PI1", C.PublicCapitalInvestment, {"programme": "two"}),
    ("TAX", C.IndirectTax),
    ("GOV", C.PublicCurrent),
    ("GCAP", C.PublicCapital),
    ("SAV", C.PrivateCapital),
    ("ROW", C.RowCurrent),
)


def random_admissible_sam(rng, layout=SMALL_LAYOUT):
    """A balanced non-negative SAM on the default structural pattern.

    Random positive values fill every permitted cell and RAS balances the
    table; every endogenous column then leaks through taxes, savings or
    imports, so the multiplier series converges.
    """
    reg = registry(*layout)
    pattern = DEFAULT_MASK.matrix(reg)
    cells = np.where(pattern, rng.uniform(0.5, 2.0, pattern.shape), 0.0)
    sam = Sam(reg, cells)
    # totals are re-estimated between short passes; fixed mean totals can be
    # infeasible on a sparse pattern
    for _ in range(500):
        res = balance_sam(sam, config=RasConfig(max_iter=50, tolerance=1e-10))
        sam = res.sam
        if res.converged:
            return sam
    raise AssertionError("could not balance the random SAM")


def perturbed_case(rng, n=5, noise=0.10, zeros=0):
    base = rng.uniform(1, 10, (n, n))
    if zeros:
        idx = rng.choice(n * n, zeros, replace=False)
        base.ravel()[idx] = 0.0
    rows, cols = base.sum(1), base.sum(0)
    seed = base * (1 + rng.uniform(-noise, noise, base.shape))
    return seed, rows, cols


def cross_entropy(x, s):
    x, s = np.asarray(x), np.asarray(s)
    m = x > 0
    return float(np.sum(x[m] * np.log(x[m] / s[m])))


def grid_search_2x2(seed, rows, cols, levels=8, points=2001):
    """Minimum cross-entropy over the one-parameter family of 2x2 matrices with the given margins.

    The free parameter is the (0, 0) cell; each level refines the grid around
    the best point of the previous one.
    """
    lo = max(0.0, cols[0] - rows[1])
    hi = min(rows[0], cols[0])

    def family(t):
        return np.array([[t, rows[0] - t], [cols[0] - t, rows[1] - cols[0] + t]])

    for _ in range(levels):
        ts = np.linspace(lo, hi, points)
        vals = [cross_entropy(family(t), seed) for t in ts]
        k = int(np.argmin(vals))
        step = ts[1] - ts[0]
        lo, hi = max(ts[k] - step, ts[0]), min(ts[k] + step, ts[-1])
    return family(ts[k])


def random_propensities(rng, n=6, max_colsum=0.9):
    a = rng.uniform(0, 1, (n, n))
    return a * rng.uniform(0, max_colsum, n) / a.sum(0)


def neumann(a, k=200):
    total, term = np.eye(len(a)), np.eye(len(a))
    for _ in range(k):
        term = term @ a
        total = total + term
    return total


def random_three_block(rng, sizes=(3, 2, 3)):
    n = sum(sizes)
    a = random_propensities(rng, n, 0.9)
    edges = np.cumsum((0,) + sizes)
    return a, [np.arange(edges[k], edges[k + 1]) for k in range(3)]
