"""Pointwise and global information leakage under repeated observation."""
from .adversary import (
    SimulationConfig,
    bayes_error,
    map_estimate,
    min_entropy_identity,
    simulate_empirical_cdf,
)
from .axioms import (
    AxiomConfig,
    AxiomReport,
    check_axioms,
    check_data_processing,
    check_derivative_property,
    check_h_convexity,
)
from .builtin import survey_system, ternary_system
from .chernoff import (
    RateReport,
    chernoff_information,
    fit_decay_rate,
    min_pairwise_chernoff,
    rate_experiment,
)
from .composition import (
    TypeClass,
    c_n,
    cdf_l1_distance,
    enumerate_types,
    exact_global_leakage,
    exact_pointwise_distribution,
    global_gap,
    global_limit,
    type_geometry,
)
from .errors import LeakageError
from .metrics import (
    LeakageDistribution,
    MetricSpec,
    catalog,
    global_leakage,
    information_distribution,
    information_value,
    pointwise_f,
    standard_definition,
)
from .prob_core import (
    Channel,
    ProbVec,
    System,
    kl_divergence,
    load_system,
    merge_equivalent_rows,
    posterior_from_counts,
    save_system,
)

__version__ = "0.1.0"
