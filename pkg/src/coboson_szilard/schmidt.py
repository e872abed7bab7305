"""Schmidt weights of a composite particle and the chi_N normalization factors.

A composite of two distinguishable fermions is created by
``c^dag = sum_n sqrt(lam_n) a_n^dag b_n^dag``.  Everything downstream only
needs the weights ``lam_n``; the norm factors follow from their elementary
symmetric polynomials, ``chi_N = N! e_N(lam)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import constants

from .errors import (
    EmptyDistribution,
    InsufficientPowerSums,
    NegativeWeight,
    NonNormalizable,
    NonPositiveLength,
    OutOfRange,
)

CLAMP_TOL = 1e-15
DEFAULT_TAIL_TOL = 1e-15
MAX_TRUNCATION_ERROR = 1e-12

BOHR_RADIUS = constants.physical_constants["Bohr radius"][0]
HYDROGEN_MASS = constants.m_p + constants.m_e
HBAR = constants.hbar

# prefactor of the small-ratio purity formula for confined hydrogen
HYDROGEN_PURITY_PREFACTOR = 33.0 / (4.0 * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class SchmidtDistribution:
    """Internal-structure weights of one composite particle.

    Attributes
    ----------
    weights : tuple of float
        Non-negative Schmidt weights, sorted non-increasing.
    family : str
        Provenance label: ``uniform``, ``geometric``, ``hydrogen`` or ``custom``.
    truncation_error : float
        Upper bound on the weight mass discarded when an infinite family was cut.
    """

    weights: tuple[float, ...]
    family: str = "custom"
    truncation_error: float = 0.0

    @property
    def n_modes(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "weights": list(self.weights),
                "truncation_error": self.truncation_error,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SchmidtDistribution":
        data = json.loads(text)
        return cls(
            weights=tuple(float(w) for w in data["weights"]),
            family=data.get("family", "custom"),
            truncation_error=float(data.get("truncation_error", 0.0)),
        )


@dataclass(frozen=True)
class ChiTable:
    """The factors chi_0 .. chi_nmax for one particle species.

    ``source`` records which route produced the values (``dp``, ``newton``,
    ``oracle``, or ``model`` for synthetic limit tables).
    """

    values: tuple[float, ...]
    source: str = "dp"

    def __post_init__(self):
        if len(self.values) < 2:
            raise OutOfRange("a chi table needs at least chi_0 and chi_1")

    @property
    def nmax(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def chi2(self) -> float:
        return self.values[2] if self.nmax >= 2 else 0.0

    def log_values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class PowerSums:
    """Power sums ``p_k = sum_n lam_n**k`` for k = 1 .. kmax."""

    values: tuple[float, ...]

    @property
    def kmax(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        # 1-based, p_1 is the normalization
        return self.values[k - 1]


def make_distribution(raw_weights: Iterable[float]) -> SchmidtDistribution:
    """Normalize arbitrary non-negative weights into a distribution.

    Values in ``[-1e-15, 0)`` are taken as rounding noise and clamped to zero,
    zero weights are dropped.
    """
    cleaned = []
    for w in raw_weights:
        w = float(w)
        if not math.isfinite(w):
            raise NegativeWeight(f"weight {w!r} is not finite")
        if w < -CLAMP_TOL:
            raise NegativeWeight(f"weight {w!r} is negative")
        if w > 0.0:
            cleaned.append(w)
    if not cleaned:
        raise EmptyDistribution("at least one weight must be positive")
    total = math.fsum(cleaned)
    weights = sorted((w / total for w in cleaned), reverse=True)
    return SchmidtDistribution(tuple(weights), "custom", 0.0)


def uniform_distribution(d: int) -> SchmidtDistribution:
    """``d`` equal weights; purity ``1/d``."""
    if d < 1:
        raise EmptyDistribution("uniform distribution needs d >= 1")
    return SchmidtDistribution((1.0 / d,) * d, "uniform", 0.0)


def geometric_distribution(q: float, tail_tol: float = DEFAULT_TAIL_TOL) -> SchmidtDistribution:
    """Weights ``(1 - q) q**n`` for n = 0, 1, ..., cut once the tail mass is <= tail_tol.

    The kept weights are not renormalized, so they sum to ``1 - q**K`` and
    ``truncation_error == q**K``.
    """
    if not 0.0 <= q < 1.0:
        raise NonNormalizable(f"geometric ratio must satisfy 0 <= q < 1, got {q!r}")
    if not 0.0 < tail_tol <= MAX_TRUNCATION_ERROR:
        raise OutOfRange(f"tail_tol must be in (0, {MAX_TRUNCATION_ERROR}], got {tail_tol!r}")
    if q == 0.0:
        return SchmidtDistribution((1.0,), "geometric", 0.0)
    n_terms = max(1, math.ceil(math.log(tail_tol) / math.log(q)))
    weights = tuple((1.0 - q) * q**n for n in range(n_terms))
    return SchmidtDistribution(weights, "geometric", q**n_terms)


def geometric_ratio_for_chi2(chi2: float) -> float:
    """The ratio q of the geometric family whose chi_2 equals ``chi2`` (< 1)."""
    if not 0.0 <= chi2 < 1.0:
        raise OutOfRange(f"geometric family covers 0 <= chi2 < 1, got {chi2!r}")
    return chi2 / (2.0 - chi2)


def purity(dist: SchmidtDistribution) -> float:
    return math.fsum(w * w for w in dist.weights)


def power_sums(dist: SchmidtDistribution, kmax: int) -> PowerSums:
    return PowerSums(tuple(math.fsum(w**k for w in dist.weights) for k in range(1, kmax + 1)))


def uniform_power_sums(d: int, kmax: int) -> PowerSums:
    if d < 1:
        raise EmptyDistribution("uniform distribution needs d >= 1")
    return PowerSums(tuple(float(d) ** (1 - k) for k in range(1, kmax + 1)))


def geometric_power_sums(q: float, kmax: int) -> PowerSums:
    """Closed form ``p_k = (1 - q)**k / (1 - q**k)`` of the untruncated family."""
    if not 0.0 <= q < 1.0:
        raise NonNormalizable(f"geometric ratio must satisfy 0 <= q < 1, got {q!r}")
    return PowerSums(tuple((1.0 - q) ** k / (1.0 - q**k) for k in range(1, kmax + 1)))


def elementary_symmetric(weights: Sequence[float], nmax: int) -> list[float]:
    """e_0 .. e_nmax of ``weights`` by the one-mode-at-a-time recurrence.

    Each coefficient is accumulated with Neumaier compensation; all terms are
    non-negative so there is no cancellation, only rounding drift over many modes.
    """
    s = [1.0] + [0.0] * nmax
    c = [0.0] * (nmax + 1)
    for i, lam in enumerate(weights):
        for k in range(min(nmax, i + 1), 0, -1):
            term = lam * (s[k - 1] + c[k - 1])
            old = s[k]
            t = old + term
            if abs(old) >= abs(term):
                c[k] += (old - t) + term
            else:
                c[k] += (term - t) + old
            s[k] = t
    return [s[k] + c[k] for k in range(nmax + 1)]


def chi_table_dp(dist: SchmidtDistribution, nmax: int) -> ChiTable:
    """chi_0 .. chi_nmax with ``chi_N = N! e_N``; zero beyond the number of modes."""
    if nmax < 1:
        raise OutOfRange("nmax must be >= 1")
    e = elementary_symmetric(dist.weights, nmax)
    return ChiTable(tuple(math.factorial(k) * e[k] for k in range(nmax + 1)), "dp")


def log_chi_values(dist: SchmidtDistribution, nmax: int) -> np.ndarray:
    """log chi_0 .. log chi_nmax, for orders where chi itself underflows."""
    log_e = np.full(nmax + 1, -np.inf)
    log_e[0] = 0.0
    for i, lam in enumerate(dist.weights):
        if lam <= 0.0:
            continue
        ll = math.log(lam)
        top = min(nmax, i + 1)
        log_e[1 : top + 1] = np.logaddexp(log_e[1 : top + 1], ll + log_e[0:top])
    return log_e + np.array([math.lgamma(k + 1) for k in range(nmax + 1)])


def chi_table_newton(psums: PowerSums, nmax: int) -> ChiTable:
    """chi table from power sums through Newton's identities.

    ``k e_k = sum_{i=1..k} (-1)**(i-1) e_{k-i} p_i``.  The alternating sum can
    leave tiny negative values where the true e_k is zero; those are clamped.
    """
    if nmax < 1:
        raise OutOfRange("nmax must be >= 1")
    if psums.kmax < nmax:
        raise InsufficientPowerSums(f"need {nmax} power sums, have {psums.kmax}")
    e = [1.0]
    for k in range(1, nmax + 1):
        acc = math.fsum((-1) ** (i - 1) * e[k - i] * psums[i] for i in range(1, k + 1))
        e.append(max(acc / k, 0.0))
    return ChiTable(tuple(math.factorial(k) * e[k] for k in range(nmax + 1)), "newton")


def ideal_boson_table(nmax: int) -> ChiTable:
    """Limit of infinitely many equal Schmidt weights: chi_k = 1 for all k."""
    return ChiTable((1.0,) * (nmax + 1), "model")


def chi_table_for_chi2(chi2: float, nmax: int) -> ChiTable:
    """A physically consistent table with a prescribed chi_2.

    chi_2 = 1 maps to the ideal boson limit; anything below uses the geometric
    family with matching purity, so higher orders are realizable as well.
    """
    if not 0.0 <= chi2 <= 1.0:
        raise OutOfRange(f"chi2 must lie in [0, 1], got {chi2!r}")
    if chi2 == 1.0:
        return ideal_boson_table(nmax)
    return chi_table_dp(geometric_distribution(geometric_ratio_for_chi2(chi2)), nmax)


def trap_length(omega: float, mass: float = HYDROGEN_MASS) -> float:
    """Harmonic oscillator length ``b = sqrt(hbar / (m omega))`` in metres."""
    if omega <= 0.0 or mass <= 0.0:
        raise NonPositiveLength("trap frequency and mass must be positive")
    return math.sqrt(HBAR / (mass * omega))


def hydrogen_purity(bohr_radius: float, trap_length_b: float) -> float:
    """Purity of a hydrogen atom in a harmonic trap of length ``trap_length_b``.

    Only valid for ``bohr_radius / trap_length_b`` small; a warning is issued
    above 0.1.  A zero Bohr radius is accepted as the point-particle limit.
    """
    if trap_length_b <= 0.0 or bohr_radius < 0.0:
        raise NonPositiveLength("lengths must be positive")
    ratio = bohr_radius / trap_length_b
    if ratio > 0.1:
        warnings.warn(
            f"a0/b = {ratio:.3g} exceeds 0.1; the purity formula is a small-ratio result",
            stacklevel=2,
        )
    return HYDROGEN_PURITY_PREFACTOR * ratio**3
