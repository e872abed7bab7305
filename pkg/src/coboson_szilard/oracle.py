"""Brute-force references, deliberately naive.

* an explicit two-species fermionic Fock space on bitmasks, used to build
  ``(c^dag)^N |0>`` term by term and read chi_N off its norm;
* direct enumeration of every joint left/right occupation pattern;
* textbook ideal Bose/Fermi canonical partition functions (recursion over
  single-particle partition functions at multiples of beta).

None of this shares code with the production paths it checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .errors import DimensionTooLarge, InstanceTooLarge, OutOfRange
from .schmidt import ChiTable, SchmidtDistribution

MAX_FOCK_MODES = 20


@dataclass
class FockState:
    """Sparse state over basis labels ``(a_mask, b_mask)``; bit n = Schmidt mode n."""

    amplitudes: dict[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def vacuum(cls) -> "FockState":
        return cls({(0, 0): 1.0})

    def norm_squared(self) -> float:
        return math.fsum(a * a for a in self.amplitudes.values())

    def is_zero(self) -> bool:
        return all(a == 0.0 for a in self.amplitudes.values())


def _parity(mask: int) -> int:
    return -1 if bin(mask).count("1") % 2 else 1


def _create(slot: int, occupied: int):
    """Fermionic creation on a combined occupation word; returns (sign, word) or None."""
    if (occupied >> slot) & 1:
        return None
    return _parity(occupied & ((1 << slot) - 1)), occupied | (1 << slot)


def apply_cdagger(state: FockState, weights: SchmidtDistribution, order=None) -> FockState:
    """Apply ``sum_n sqrt(lam_n) a_n^dag b_n^dag`` to ``state``.

    Operators are ordered a-modes first, then b-modes (slot ``d + n`` for b_n).
    ``order`` relabels the canonical slot order of the Schmidt modes; norms do
    not depend on it.
    """
    d = weights.n_modes
    if d > MAX_FOCK_MODES:
        raise DimensionTooLarge(f"{d} Schmidt modes exceed the bitmask limit {MAX_FOCK_MODES}")
    slots = list(range(d)) if order is None else list(order)
    out: dict[tuple[int, int], float] = {}
    for (a_mask, b_mask), amp in state.amplitudes.items():
        if amp == 0.0:
            continue
        word = a_mask | (b_mask << d)
        for n, lam in enumerate(weights.weights):
            pos = slots[n]
            # b^dag acts first, then a^dag
            step_b = _create(d + pos, word)
            if step_b is None:
                continue
            step_a = _create(pos, step_b[1])
            if step_a is None:
                continue
            new_word = step_a[1]
            label = (new_word & ((1 << d) - 1), new_word >> d)
            out[label] = out.get(label, 0.0) + step_a[0] * step_b[0] * math.sqrt(lam) * amp
    return FockState(out)


def brute_chi(weights: SchmidtDistribution, n: int, order=None) -> float:
    """``||(c^dag)^n |0>||^2 / n!`` from the explicit state."""
    if weights.n_modes > MAX_FOCK_MODES:
        raise DimensionTooLarge(f"{weights.n_modes} Schmidt modes exceed {MAX_FOCK_MODES}")
    state = FockState.vacuum()
    for _ in range(n):
        state = apply_cdagger(state, weights, order)
    return state.norm_squared() / math.factorial(n)


def brute_chi_table(weights: SchmidtDistribution, nmax: int) -> ChiTable:
    values = [1.0]
    state = FockState.vacuum()
    for k in range(1, nmax + 1):
        state = apply_cdagger(state, weights)
        values.append(state.norm_squared() / math.factorial(k))
    return ChiTable(tuple(values), "oracle")


def brute_partition(l: float, n: int, chi: ChiTable, beta: float, modes_per_side: int):
    """Z_0..Z_n and Z at wall position ``l`` by summing every joint configuration.

    Levels are ``k**2 / w**2`` for k = 1..modes_per_side on each side.
    """
    if n > 3 or modes_per_side > 4:
        raise InstanceTooLarge("brute_partition supports n <= 3 and <= 4 modes per side")
    if not 0.0 < l < 1.0:
        raise OutOfRange("wall position must lie in (0, 1)")
    if chi.nmax < n:
        raise OutOfRange("chi table too short")
    left = [k * k / (l * l) for k in range(1, modes_per_side + 1)]
    right = [k * k / ((1.0 - l) ** 2) for k in range(1, modes_per_side + 1)]
    levels = left + right
    z = [[] for _ in range(n + 1)]
    for occ in itertools.product(range(n + 1), repeat=len(levels)):
        if sum(occ) != n:
            continue
        weight = 1.0
        for count in occ:
            weight *= chi[count]
        energy = sum(count * e for count, e in zip(occ, levels))
        z[sum(occ[:modes_per_side])].append(weight * math.exp(-beta * energy))
    z_m = [math.fsum(terms) for terms in z]
    return z_m, math.fsum(z_m)


def single_particle_z(levels, beta: float) -> float:
    return math.fsum(math.exp(-beta * e) for e in levels)


def ideal_canonical_partition(levels, n: int, beta: float, statistics: str) -> float:
    """Canonical Z_n of n ideal bosons or fermions on the given levels.

    Uses ``Z_n = (1/n) sum_{k=1..n} (+-1)**(k+1) z(k beta) Z_{n-k}``.
    """
    if statistics not in ("bose", "fermi"):
        raise OutOfRange("statistics must be 'bose' or 'fermi'")
    sign = 1.0 if statistics == "bose" else -1.0
    zk = [single_particle_z(levels, k * beta) for k in range(n + 1)]
    z = [1.0]
    for m in range(1, n + 1):
        acc = math.fsum(sign ** (k + 1) * zk[k] * z[m - k] for k in range(1, m + 1))
        z.append(acc / m)
    return z[n]


def bound_readings(chi: ChiTable) -> list[dict]:
    """Both readings of the chi ratio bound, row per order k with chi_k > 0.

    ``ratio`` is chi_{k+1}/chi_k (the bound as used); ``literal`` is
    chi_{k+1}/k, the expression as it appears in print.
    """
    chi2 = chi.chi2
    rows = []
    for k in range(1, chi.nmax):
        if chi[k] <= 0.0:
            continue
        rows.append(
            {
                "k": k,
                "lower": 1.0 - k * (1.0 - chi2),
                "upper": chi2,
                "ratio": chi[k + 1] / chi[k],
                "literal": chi[k + 1] / k,
            }
        )
    return rows
