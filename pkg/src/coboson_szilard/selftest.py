"""Quick oracle cross-checks behind ``coboson selftest``."""

from __future__ import annotations

import random
from fractions import Fraction

from . import engine as eng
from .oracle import brute_chi, brute_partition
from .schmidt import ChiTable, chi_table_dp, make_distribution
from .stats import degeneracy_model


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def run_selftest(seed: int = 0, n_dist: int = 20, n_partition: int = 5):
    rng = random.Random(seed)
    lines = []

    worst = 0.0
    for _ in range(n_dist):
        d = rng.randint(1, 6)
        dist = make_distribution([rng.random() for _ in range(d)])
        table = chi_table_dp(dist, 4)
        for n in range(1, 5):
            worst = max(worst, abs(brute_chi(dist, n) - table[n]) / max(table[n], 1e-300))
    lines.append(f"chi dp vs Fock space   worst rel err {worst:.3e}  {'PASS' if worst < 1e-12 else 'FAIL'}")
    ok = worst < 1e-12

    worst = 0.0
    for _ in range(n_partition):
        n = rng.randint(1, 3)
        modes = rng.randint(1, 3)
        chi = chi_table_dp(make_distribution([rng.random() for _ in range(rng.randint(1, 5))]), 3)
        beta = rng.uniform(0.05, 2.0)
        l = rng.uniform(0.2, 0.8)
        spec = eng.EngineSpec(n, beta, chi)
        z_brute, _ = brute_partition(l, n, chi, beta, modes)
        for m in range(n + 1):
            worst = max(worst, _rel(eng.Z_m(l, spec, m, n_modes=modes), z_brute[m]))
    lines.append(f"Z_m factorized vs joint worst rel err {worst:.3e}  {'PASS' if worst < 1e-12 else 'FAIL'}")
    ok = ok and worst < 1e-12

    exact = True
    for _ in range(5):
        raw = [rng.randint(1, 9) for _ in range(rng.randint(2, 5))]
        weights = [Fraction(r, sum(raw)) for r in raw]
        for n in range(1, len(weights) + 1):
            exact = exact and degeneracy_model(weights, n)[1] == 1
    lines.append(f"degeneracy counting identity exact    {'PASS' if exact else 'FAIL'}")
    return lines, ok and exact
