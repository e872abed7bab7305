"""Szilard engine work extraction with composite particles (bound fermion pairs)."""

from .engine import (
    EngineReport,
    EngineSpec,
    Z_m,
    Z_total,
    equilibrium_position,
    f_star,
    measurement_probabilities,
    side_sum,
    total_work,
)
from .schmidt import (
    ChiTable,
    PowerSums,
    SchmidtDistribution,
    chi_table_dp,
    chi_table_for_chi2,
    chi_table_newton,
    geometric_distribution,
    hydrogen_purity,
    ideal_boson_table,
    make_distribution,
    purity,
    uniform_distribution,
)
from .stats import (
    OccupationConfig,
    config_rel_probability,
    lowT_measurement_distribution,
    two_particle_f0,
    two_particle_work,
)

__version__ = "0.1.0"
