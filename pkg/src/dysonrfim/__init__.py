"""Exact and Monte Carlo engine for the random-field Ising model on the Dyson hierarchical lattice."""

__version__ = "0.1.0"

from .bounds import (
    BoundParams,
    IntervalPartition,
    make_partition,
    partial_sum_bound,
    region_scan,
    series_term,
    theorem1_bound,
)
from .disorder import QuenchedEstimate, SeedSpec, draw_sample, estimate_fN, quenched_pressure
from .mc import BlockMagCache, MetropolisChain, flip_delta, metropolis_run
from .model import (
    DisorderSample,
    Distribution,
    HierarchyParams,
    HypothesisError,
    ThermoParams,
    brute_force_observables,
    hamiltonian_energy,
)
from .sectors import SectorTable, build_root, leaf_table, merge, restricted_partitions, root_observables
from .verification import (
    InequalityReport,
    gibbs_bogoliubov_check,
    lemma3_check,
    lemma5_check,
    lipschitz_check,
    tail_check,
)
