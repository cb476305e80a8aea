"""greedylab: greedy sparse approximation from finite dictionaries in
Hilbert and l_p geometry, with verification of the solvers' convergence
guarantees."""

from .analysis import (
    BoundReport,
    CombinatorialLimitError,
    InsufficientDataError,
    RateFit,
    best_mterm_oracle,
    check_bound,
    fit_rate,
)
from .dictionary import (
    Dictionary,
    NonSpanningDictionaryError,
    SelectionResult,
    build_orthonormal,
    build_random_unit,
    build_union_bases,
    select,
)
from .greedy import (
    A1Target,
    IterationRecord,
    RunTrace,
    WeaknessSequence,
    make_a1_target,
    oga_hilbert,
    pga_hilbert,
    rga_hilbert,
    rpga_banach,
    rpga_hilbert,
    target_from_coeffs,
    trace_iterates,
    wrpga_banach,
    wrpga_hilbert,
)
from .spaces import (
    Element,
    Geometry,
    UndefinedFunctionalError,
    hilbert,
    inner,
    lemma_sequence_bound,
    line_search_scale,
    lp,
    modulus_estimate,
    norm,
    norming_functional,
    smoothness_params,
)

__version__ = "0.1.0"
