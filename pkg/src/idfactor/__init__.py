"""Sign-identifiability of sparse factor analysis graphs.

Decide graphical identifiability criteria (ZUTA, AR, BB, matching
criterion, local BB, extended M), emit machine-checkable certificates,
recover loading matrices from covariance matrices, and run census and
random-graph experiments.
"""

from .criteria import (
    Certificate,
    LocalBBCert,
    MatchingCert,
    TrivialCert,
    certificate_from_dict,
    check_ar,
    check_bb,
    check_extended_m,
    check_local_bb_tuple,
    check_m_identifiable,
    check_matching_tuple,
    decide_extended_m,
    decide_m_identifiable,
    solve_L,
    solve_M,
)
from .enumeration import (
    CensusRow,
    EnumConvention,
    ExperimentReport,
    census_totals,
    classify_census,
    enumerate_graphs,
    random_graph,
    run_random_experiment,
)
from .errors import (
    CapacityError,
    DegeneracyError,
    FitFailureError,
    GraphInputError,
    InconsistentCovarianceError,
    UnsolvedColumnError,
)
from .flow import (
    FlowNetwork,
    ar_node_check,
    build_flow_iii,
    build_flow_iv,
    matching_exists,
    max_flow,
)
from .graph import (
    CanonicalForm,
    FactorGraph,
    ZutaOrdering,
    canonical_form,
    find_zuta_ordering,
    is_full_zuta,
    jpa,
    min_children_precheck,
)
from .recovery import (
    CovarianceMatrix,
    LoadingMatrix,
    NoiseDiag,
    RecoveryResult,
    adjusted_sigma,
    graph_from_loadings,
    numeric_matching_oracle,
    propagate_bb_out_of_block,
    read_loadings_csv,
    read_sigma_csv,
    recover,
    recover_block_bb,
    recover_column_matching,
    sample_params,
    simulate,
    write_loadings_csv,
    write_sigma_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
