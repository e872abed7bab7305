"""Counting statistics of composite-particle configurations.

Relative probabilities of occupation patterns, the two-mode low-temperature
measurement distribution and the two-particle closed forms, plus an exact
rational check of the hidden-degeneracy counting picture.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    AllConfigsForbidden,
    DepletedMode,
    IrrationalInput,
    OccupationExceedsTable,
    OutOfRange,
)
from .schmidt import ChiTable

MAX_DENOMINATOR = 10**6


@dataclass(frozen=True)
class OccupationConfig:
    """Occupation numbers per mode label; modes with zero occupation are omitted."""

    occupations: Mapping[str, int]

    def __post_init__(self):
        cleaned = {}
        for mode, n in dict(self.occupations).items():
            n = int(n)
            if n < 0:
                raise OutOfRange(f"occupation of mode {mode!r} is negative")
            if n > 0:
                cleaned[str(mode)] = n
        object.__setattr__(self, "occupations", cleaned)

    @property
    def total(self) -> int:
        return sum(self.occupations.values())

    def to_json(self) -> str:
        return json.dumps(self.occupations, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OccupationConfig":
        return cls(json.loads(text))


@dataclass(frozen=True)
class RelProbability:
    value: float
    log_value: float


def add_particle_enhancement(chi: ChiTable, n: int) -> float:
    """How much likelier adding a particle to an n-occupied mode is than to an empty one."""
    if n < 0 or n + 1 > chi.nmax:
        raise OccupationExceedsTable(f"need chi_{n + 1}, table stops at {chi.nmax}")
    if chi[n] == 0.0:
        raise DepletedMode(f"chi_{n} = 0: occupation {n} is unreachable")
    return (n + 1) * chi[n + 1] / chi[n]


def condensation_ratio(chi: ChiTable, n: int) -> float:
    """Weight of n particles stacked in one mode relative to n particles in n distinct modes."""
    if n < 0 or n > chi.nmax:
        raise OccupationExceedsTable(f"need chi_{n}, table stops at {chi.nmax}")
    return math.factorial(n) * chi[n]


def config_rel_probability(chi: ChiTable, cfg: OccupationConfig) -> RelProbability:
    """``N! prod_p chi_{n_p}`` for the occupation pattern ``cfg``."""
    occ = list(cfg.occupations.values())
    if occ and max(occ) > chi.nmax:
        raise OccupationExceedsTable(f"occupation {max(occ)} exceeds table order {chi.nmax}")
    factors = [chi[n] for n in occ]
    if any(f == 0.0 for f in factors):
        return RelProbability(0.0, -math.inf)
    log_value = math.lgamma(cfg.total + 1) + math.fsum(math.log(f) for f in factors)
    value = float(math.factorial(cfg.total)) * math.prod(factors)
    return RelProbability(value, log_value)


def _check_chi2(chi2: float) -> None:
    if not 0.0 <= chi2 <= 1.0:
        raise OutOfRange(f"chi2 must lie in [0, 1], got {chi2!r}")


def two_particle_f0(chi2: float) -> float:
    """Low-temperature probability that both particles sit on one given side."""
    _check_chi2(chi2)
    return chi2 / (1.0 + 2.0 * chi2)


def xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def two_particle_work(chi2: float) -> float:
    """Low-temperature work for two particles, in units of k_B T."""
    return -2.0 * xlogx(two_particle_f0(chi2))


def lowT_measurement_distribution(chi: ChiTable, n: int) -> list[float]:
    """f_0 .. f_n for n particles sharing two degenerate ground modes (left, right).

    Each split m / n-m has weight ``chi_m chi_{n-m}``.
    """
    if n < 0 or n > chi.nmax:
        raise OccupationExceedsTable(f"need chi_{n}, table stops at {chi.nmax}")
    weights = [chi[m] * chi[n - m] for m in range(n + 1)]
    total = math.fsum(weights)
    if total == 0.0:
        raise AllConfigsForbidden(f"every split of {n} particles is Pauli-blocked")
    return [w / total for w in weights]


def _as_bounded_fraction(x) -> Fraction:
    if isinstance(x, float) and not math.isfinite(x):
        raise IrrationalInput(f"{x!r} is not a finite number")
    try:
        frac = Fraction(x)
    except (TypeError, ValueError) as exc:
        raise IrrationalInput(f"cannot read {x!r} as a rational") from exc
    if frac.denominator > MAX_DENOMINATOR:
        raise IrrationalInput(
            f"{x!r} has denominator {frac.denominator} > {MAX_DENOMINATOR}; round it first"
        )
    return frac


def _esp_exact(weights: Sequence[Fraction], n: int) -> Fraction:
    e = [Fraction(1)] + [Fraction(0)] * n
    for lam in weights:
        for k in range(n, 0, -1):
            e[k] += lam * e[k - 1]
    return e[n]


def degeneracy_model(rational_weights: Sequence, n: int) -> tuple[list[int], Fraction]:
    """Integer degeneracies reproducing the weights, and the counting check.

    Returns ``(omega, ratio)`` where ``omega[i] / sum(omega) == weights[i]`` and
    ``ratio = sum_{i1<..<in} prod omega / (L**n e_n(weights))`` with L the
    common denominator.  The ratio is an exact ``Fraction`` and equals 1.
    """
    lams = [_as_bounded_fraction(w) for w in rational_weights]
    if any(lam < 0 for lam in lams):
        raise OutOfRange("weights must be non-negative")
    if sum(lams) != 1:
        raise OutOfRange(f"weights sum to {sum(lams)}, not 1")
    positive = sum(1 for lam in lams if lam > 0)
    if not 1 <= n <= positive:
        raise OutOfRange(f"need 1 <= n <= {positive} (number of occupied modes), got {n}")
    scale = math.lcm(*(lam.denominator for lam in lams))
    omega = [int(lam * scale) for lam in lams]
    counted = sum(math.prod(c) for c in itertools.combinations(omega, n))
    expected = Fraction(scale) ** n * _esp_exact(lams, n)
    return omega, Fraction(counted) / expected
