"""Finite-temperature Szilard engine loaded with N composite particles.

Model: a 1-D infinite square well of unit length, split by a wall at ``l``
into independent wells of widths ``l`` and ``1 - l``.  Energies are in units
of ``hbar**2 pi**2 / (2 m L**2)``, so level ``n`` of a well of width ``w`` sits
at ``n**2 / w**2``.  A configuration with per-mode occupations ``{n_p}`` is
weighted by ``prod_p chi_{n_p} * exp(-beta E)``.

All partition functions are carried as logarithms.  At ``beta = 1e3`` the
Boltzmann factors themselves underflow long before their ratios do.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateConfiguration,
    OccupationExceedsTable,
    OutOfRange,
    WidthUnderflow,
)
from .schmidt import ChiTable
from .stats import lowT_measurement_distribution

MIN_WIDTH = 1e-9
WALL_POLICIES = ("force_balance", "max_work")
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
NEG_INF = -math.inf


@dataclass(frozen=True)
class BoxSpectrum:
    """Levels ``n**2 / w**2`` of one side of the box (box length fixed at 1)."""

    box_length: float = 1.0

    def energies(self, width: float, count: int) -> np.ndarray:
        n = np.arange(1, count + 1, dtype=float)
        return n * n / (width * width)


SPECTRUM = BoxSpectrum()


@dataclass(frozen=True)
class EngineSpec:
    """Parameters of one engine evaluation.

    ``beta`` is the inverse temperature in inverse energy units; ``math.inf``
    selects the zero-temperature limit where only measurement statistics are
    available in closed form.

    ``wall_policy`` picks where the expanding wall stops for interior
    branches: ``force_balance`` (maximum of Z_m, zero net force) or
    ``max_work`` (maximum of Z_m / Z, the stopping point that makes the
    branch's work term largest).
    """

    n: int
    beta: float
    chi: ChiTable
    cutoff_tol: float = 1e-12
    wall_grid: float = 1e-3
    wall_refine_tol: float = 1e-8
    wall_policy: str = "force_balance"

    def __post_init__(self):
        if self.wall_policy not in WALL_POLICIES:
            raise OutOfRange(f"wall_policy must be one of {WALL_POLICIES}, got {self.wall_policy!r}")
        if self.n < 1:
            raise OutOfRange(f"particle count must be >= 1, got {self.n}")
        if self.chi.nmax < self.n:
            raise OccupationExceedsTable(
                f"chi table stops at order {self.chi.nmax}, engine needs {self.n}"
            )
        if not self.beta > 0.0 or math.isnan(self.beta):
            raise OutOfRange(f"beta must be positive, got {self.beta!r}")
        for name in ("cutoff_tol", "wall_grid", "wall_refine_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise OutOfRange(f"{name} must lie in (0, 1), got {value!r}")

    @property
    def low_temperature_limit(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class EngineReport:
    """Result of one full cycle.

    ``l_eq`` and ``f_star`` entries are ``None`` for measurement branches whose
    probability underflows to exactly zero; those branches add nothing to the work.
    """

    n: int
    beta: float
    chi2: float
    f: tuple[float, ...]
    f_star: tuple[float | None, ...]
    l_eq: tuple[float | None, ...]
    work: float
    diagnostics: dict = field(default_factory=dict, compare=True)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "chi2": self.chi2,
            "f": list(self.f),
            "f_star": list(self.f_star),
            "l_eq": list(self.l_eq),
            "work": self.work,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineReport":
        return cls(
            n=int(data["n"]),
            beta=float(data["beta"]),
            chi2=float(data["chi2"]),
            f=tuple(float(x) for x in data["f"]),
            f_star=tuple(None if x is None else float(x) for x in data["f_star"]),
            l_eq=tuple(None if x is None else float(x) for x in data["l_eq"]),
            work=float(data["work"]),
            diagnostics=dict(data.get("diagnostics", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "EngineReport":
        return cls.from_dict(json.loads(text))


def _lae(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a >= b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _logsumexp(values: Sequence[float]) -> float:
    top = max(values)
    if top == NEG_INF:
        return NEG_INF
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def mode_count(width: float, beta: float, cutoff_tol: float, particle_budget: int) -> int:
    """Smallest K with ``exp(-beta (E_{K+1} - E_1)) < cutoff_tol`` and ``K >= budget + 2``."""
    if width < MIN_WIDTH:
        raise WidthUnderflow(f"width {width!r} is below {MIN_WIDTH}; use the boundary limit")
    floor = particle_budget + 2
    if math.isinf(beta):
        return floor
    w2 = width * width
    log_tol = math.log(cutoff_tol)

    def below(k: int) -> bool:
        # exp(-beta (E_{k+1} - E_1)) < tol
        return -beta * ((k + 1) ** 2 - 1) / w2 < log_tol

    k = max(1, math.isqrt(int(1.0 + w2 * -log_tol / beta)))
    while not below(k):
        k += 1
    while k > 1 and below(k - 1):
        k -= 1
    return max(k, floor)


def mode_energies(width: float, spec: EngineSpec, particle_budget: int) -> np.ndarray:
    """Single-particle levels of a side of width ``width`` kept by the cutoff policy."""
    count = mode_count(width, spec.beta, spec.cutoff_tol, particle_budget)
    return SPECTRUM.energies(width, count)


def _side_logs(energies: Sequence[float], log_chi: Sequence[float], beta: float, m_max: int):
    """log S_k and log T_k, k = 0..m_max, for one side.

    ``S_k`` sums ``prod chi_{n_p} exp(-beta E)`` over every occupation multiset of
    the given modes holding k particles; ``T_k`` is the same sum weighted by the
    configuration energy E.  Built one mode at a time as a truncated product of
    per-mode generating functions ``sum_j chi_j (x_p t)**j``.
    """
    e_ref = float(energies[0])
    log_s = [0.0] + [NEG_INF] * m_max
    log_t = [NEG_INF] * (m_max + 1)
    log_j = [NEG_INF] + [math.log(j) for j in range(1, m_max + 1)]
    for energy in energies:
        energy = float(energy)
        a = -beta * (energy - e_ref)
        log_e = math.log(energy)
        for k in range(m_max, 0, -1):
            s = log_s[k]
            t = log_t[k]
            for j in range(1, k + 1):
                w = log_chi[j]
                if w == NEG_INF:
                    continue
                w += j * a
                base = log_s[k - j] + w
                s = _lae(s, base)
                t = _lae(t, _lae(log_t[k - j] + w, base + log_j[j] + log_e))
            log_s[k] = s
            log_t[k] = t
    shift = -beta * e_ref
    return (
        [log_s[k] + k * shift for k in range(m_max + 1)],
        [log_t[k] + k * shift for k in range(m_max + 1)],
    )


def _side_logs_batch(widths: np.ndarray, spec: EngineSpec, m_max: int):
    """Vectorized :func:`_side_logs` over many widths with per-width mode cutoffs.

    Returns arrays of shape ``(m_max + 1, len(widths))``.
    """
    beta = spec.beta
    counts = np.array([mode_count(w, beta, spec.cutoff_tol, spec.n) for w in widths])
    inv_w2 = 1.0 / (widths * widths)
    log_chi = spec.chi.log_values()
    n_w = len(widths)
    log_s = np.full((m_max + 1, n_w), NEG_INF)
    log_s[0] = 0.0
    log_t = np.full((m_max + 1, n_w), NEG_INF)
    for p in range(1, int(counts.max()) + 1):
        active = counts >= p
        energy = p * p * inv_w2
        a = np.where(active, -beta * (p * p - 1) * inv_w2, NEG_INF)
        log_e = np.log(energy)
        for k in range(m_max, 0, -1):
            s = log_s[k]
            t = log_t[k]
            for j in range(1, k + 1):
                if log_chi[j] == NEG_INF:
                    continue
                w = log_chi[j] + j * a
                base = log_s[k - j] + w
                s = np.logaddexp(s, base)
                t = np.logaddexp(t, np.logaddexp(log_t[k - j] + w, base + math.log(j) + log_e))
            log_s[k] = s
            log_t[k] = t
    shift = -beta * inv_w2
    ks = np.arange(m_max + 1)[:, None]
    return log_s + ks * shift, log_t + ks * shift, counts


def log_side_sums(width: float, spec: EngineSpec, n_modes: int | None = None):
    """log S_0..S_N (and energy-weighted log T) of one side of the given width."""
    if width < MIN_WIDTH:
        raise WidthUnderflow(f"width {width!r} is below {MIN_WIDTH}; use the boundary limit")
    if n_modes is None:
        energies = mode_energies(width, spec, spec.n)
    else:
        energies = SPECTRUM.energies(width, n_modes)
    log_s, log_t = _side_logs(energies, spec.chi.log_values(), spec.beta, spec.n)
    return log_s, log_t


def side_sum(m: int, energies: Sequence[float], chi: ChiTable, beta: float) -> float:
    """Weighted sum over all m-particle occupation multisets of the given levels."""
    if m < 0:
        raise OutOfRange("particle number must be non-negative")
    if m > chi.nmax:
        raise OccupationExceedsTable(f"occupation {m} exceeds table order {chi.nmax}")
    if m == 0:
        return 1.0
    log_s, _ = _side_logs(list(energies), chi.log_values(), beta, m)
    return math.exp(log_s[m])


def _check_wall(l: float) -> None:
    if not 0.0 < l < 1.0:
        raise OutOfRange(f"wall position must lie in (0, 1), got {l!r}")


def _log_z_all(l: float, spec: EngineSpec, n_modes: int | None = None):
    """log Z_m(l) for every m, plus the two sides' log S and log T."""
    _check_wall(l)
    left = log_side_sums(l, spec, n_modes)
    right = log_side_sums(1.0 - l, spec, n_modes)
    n = spec.n
    log_z = [left[0][m] + right[0][n - m] for m in range(n + 1)]
    return log_z, left, right


def log_Z_m(l: float, spec: EngineSpec, m: int, n_modes: int | None = None) -> float:
    if not 0 <= m <= spec.n:
        raise OutOfRange(f"m must lie in [0, {spec.n}], got {m}")
    return _log_z_all(l, spec, n_modes)[0][m]


def Z_m(l: float, spec: EngineSpec, m: int, n_modes: int | None = None) -> float:
    """Partition function with m particles left of a wall at ``l``.

    The constraint set factorizes, so this is the product of the left side
    sum at width ``l`` and the right side sum at width ``1 - l``.
    """
    return math.exp(log_Z_m(l, spec, m, n_modes))


def log_Z_total(l: float, spec: EngineSpec, n_modes: int | None = None) -> float:
    return _logsumexp(_log_z_all(l, spec, n_modes)[0])


def Z_total(l: float, spec: EngineSpec, n_modes: int | None = None) -> float:
    return math.exp(log_Z_total(l, spec, n_modes))


def _slopes(l: float, spec: EngineSpec):
    """d/dl log Z_k(l) for every k, and the log Z_k themselves."""
    log_z, left, right = _log_z_all(l, spec)
    n = spec.n
    slopes = []
    for k in range(n + 1):
        mean_left = math.exp(left[1][k] - left[0][k]) if k > 0 else 0.0
        mean_right = math.exp(right[1][n - k] - right[0][n - k]) if k < n else 0.0
        # d log S / dw = 2 beta <E> / w for levels scaling as 1/w**2
        slopes.append(2.0 * spec.beta * (mean_left / l - mean_right / (1.0 - l)))
    return slopes, log_z


def _objective(l: float, spec: EngineSpec, m: int) -> float:
    log_z = _log_z_all(l, spec)[0]
    if spec.wall_policy == "force_balance":
        return log_z[m]
    return log_z[m] - _logsumexp(log_z)


def _objective_slope(l: float, spec: EngineSpec, m: int) -> float:
    """Derivative of the wall objective; for force balance, the net force on the wall."""
    slopes, log_z = _slopes(l, spec)
    if spec.wall_policy == "force_balance":
        return slopes[m]
    total = _logsumexp(log_z)
    mean_slope = math.fsum(math.exp(v - total) * g for v, g in zip(log_z, slopes) if v > NEG_INF)
    return slopes[m] - mean_slope


def golden_section_max(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Maximize ``f`` on ``[lo, hi]``; returns the final bracket ``(a, b, x_best)``."""
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    best = x1 if f1 >= f2 else x2
    return a, b, best


@lru_cache(maxsize=64)
def _grid_scan(spec: EngineSpec):
    """log Z_m on the interior wall grid, for all m at once."""
    n_grid = max(2, round(1.0 / spec.wall_grid))
    ls = np.arange(1, n_grid) / n_grid
    log_s, _, _ = _side_logs_batch(ls, spec, spec.n)
    # right width 1 - l_i is the grid point n_grid - i, i.e. the reversed column
    log_s_right = log_s[:, ::-1]
    n = spec.n
    log_z = np.array([log_s[m] + log_s_right[n - m] for m in range(n + 1)])
    if spec.wall_policy == "max_work":
        top = log_z.max(axis=0)
        log_z = log_z - (top + np.log(np.exp(log_z - top).sum(axis=0)))
    return ls, log_z


def equilibrium_position(spec: EngineSpec, m: int) -> float:
    """Wall position where isothermal expansion of branch m stops.

    Under the default policy this is the maximizer of Z_m.  Boundary branches
    go to the walls analytically.  Interior branches are scanned on the
    ``wall_grid`` lattice (no unimodality assumed), refined by golden-section
    search to ``wall_refine_tol``, then polished on the analytic derivative so
    the result is not limited by the flatness of the objective at its maximum.
    """
    n = spec.n
    if not 0 <= m <= n:
        raise OutOfRange(f"m must lie in [0, {n}], got {m}")
    if m == 0:
        return 0.0
    if m == n:
        return 1.0
    if 2 * m == n:
        return 0.5
    if spec.low_temperature_limit:
        raise OutOfRange("equilibrium positions need a finite beta")
    ls, log_z = _grid_scan(spec)
    row = log_z[m]
    best = float(np.max(row))
    if best == NEG_INF:
        raise DegenerateConfiguration(f"branch m={m} has vanishing weight at every wall position")
    ties = np.flatnonzero(row == best)
    i = int(ties[np.argmin(np.abs(ls[ties] - 0.5))])
    lo = float(ls[i - 1]) if i > 0 else max(MIN_WIDTH, float(ls[0]) / 2)
    hi = float(ls[i + 1]) if i + 1 < len(ls) else min(1.0 - MIN_WIDTH, 1.0 - (1.0 - float(ls[-1])) / 2)

    a, b, x_best = golden_section_max(
        lambda x: _objective(x, spec, m), lo, hi, spec.wall_refine_tol
    )
    g_lo, g_hi = _objective_slope(lo, spec, m), _objective_slope(hi, spec, m)
    if g_lo > 0.0 > g_hi:
        root = brentq(
            _objective_slope, lo, hi, args=(spec, m), xtol=1e-15, rtol=4 * np.finfo(float).eps
        )
        # the polish must stay inside the golden-section bracket
        if a - spec.wall_refine_tol <= root <= b + spec.wall_refine_tol:
            return float(root)
    return float(x_best)


def measurement_probabilities(spec: EngineSpec) -> list[float]:
    """f_m: probability of finding m particles left of a wall inserted at 1/2."""
    if spec.low_temperature_limit:
        return lowT_measurement_distribution(spec.chi, spec.n)
    log_z = _log_z_all(0.5, spec)[0]
    total = _logsumexp(log_z)
    return [math.exp(v - total) for v in log_z]


def log_f_star(spec: EngineSpec, m: int, l_eq: float | None = None) -> float:
    """log of ``Z_m(l_eq) / Z(l_eq)``; 0 at the boundary branches."""
    n = spec.n
    if not 0 <= m <= n:
        raise OutOfRange(f"m must lie in [0, {n}], got {m}")
    if m == 0 or m == n:
        return 0.0
    if l_eq is None:
        l_eq = equilibrium_position(spec, m)
    if spec.low_temperature_limit:
        if 2 * m == n:
            return math.log(measurement_probabilities(spec)[m])
        raise OutOfRange("f* of asymmetric branches needs a finite beta")
    log_z = _log_z_all(l_eq, spec)[0]
    return log_z[m] - _logsumexp(log_z)


def f_star(spec: EngineSpec, m: int, l_eq: float | None = None) -> float:
    """``Z_m(l_eq) / Z(l_eq)``: chance of m particles left of a wall inserted at l_eq."""
    return math.exp(log_f_star(spec, m, l_eq))


def _truncation_estimate(spec: EngineSpec, width: float) -> float:
    """Relative size of the discarded level tail for one particle on one side."""
    k = mode_count(width, spec.beta, spec.cutoff_tol, spec.n)
    w2 = width * width
    first = math.exp(-spec.beta * ((k + 1) ** 2 - 1) / w2)
    step = math.exp(-spec.beta * (2 * k + 3) / w2)
    return spec.n * first / (1.0 - step) if step < 1.0 else math.inf


def total_work(spec: EngineSpec) -> EngineReport:
    """Run the full cycle and return f, f*, l_eq and the extracted work in k_B T."""
    n = spec.n
    f = measurement_probabilities(spec)
    l_eq: list[float | None] = []
    fs: list[float | None] = []
    skipped = []
    terms = []
    for m in range(n + 1):
        boundary = m == 0 or m == n
        if f[m] == 0.0 and not boundary:
            l_eq.append(None)
            fs.append(None)
            skipped.append(m)
            continue
        pos = equilibrium_position(spec, m)
        log_star = log_f_star(spec, m, pos)
        l_eq.append(pos)
        fs.append(math.exp(log_star))
        if f[m] > 0.0:
            terms.append(-f[m] * (math.log(f[m]) - log_star))
    work = math.fsum(terms)
    if spec.low_temperature_limit:
        diagnostics = {"modes_per_side": None, "truncation_estimate": 0.0}
    else:
        diagnostics = {
            "modes_per_side": mode_count(0.5, spec.beta, spec.cutoff_tol, n),
            "truncation_estimate": _truncation_estimate(spec, 0.5),
        }
    diagnostics["skipped_branches"] = skipped
    diagnostics["wall_policy"] = spec.wall_policy
    return EngineReport(
        n=n,
        beta=spec.beta,
        chi2=spec.chi.chi2,
        f=tuple(f),
        f_star=tuple(fs),
        l_eq=tuple(l_eq),
        work=work,
        diagnostics=diagnostics,
    )
