"""Exact fair division of mixed divisible and indivisible goods."""
from .fairness import (
    NOTIONS,
    FairnessReport,
    NotionResult,
    Verdict,
    Witness,
    full_report,
    is_EF,
    is_EF1_indivisible,
    is_EF1M,
    is_EFM,
    is_EFX_indivisible,
    is_EFXM,
    is_PO_binary,
    is_utilitarian_optimal,
    is_weak_EFM,
)
from .measure import cell_decomposition, perfect_partition, piece_value, split_fraction, utility
from .model import (
    Allocation,
    AllocationError,
    Bundle,
    DivisibleGood,
    FairdivError,
    IndivisibleGood,
    Instance,
    InstanceTooLargeError,
    Interval,
    NotApplicableError,
    Piece,
    SchemaError,
    classify_instance,
    make_allocation,
    make_instance,
    normalize_allocation,
    parse_allocation,
    parse_instance,
    serialize_allocation,
    serialize_instance,
)
from .polymatroid import CanonicalPartition, canonical_partition, decomposition_point, exchange_certificate
from .solvers import (
    Objective,
    SolveResult,
    construct_ef1m,
    nash_improvement_witness,
    solve_leximin,
    solve_mnw,
    solve_phi_fair,
)

__version__ = "0.1.0"
