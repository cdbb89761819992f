"""Social accounting matrices: validation, RAS balancing, fixed-price multipliers and incidence."""

from .aggregation import AccountMapping, aggregate, control_total_check
from .balancing import RasConfig, RasResult, balance_sam, ras_balance
from .core import (
    DEFAULT_MASK,
    Account,
    AccountCategory,
    AccountRegistry,
    Sam,
    StructuralMask,
    balance_residuals,
    col_total,
    macro_registry,
    micro_registry,
    row_total,
    sign_violations,
    structural_violations,
)
from .ingest import parse_sam, read_sam, validate_file_set, write_sam
from .metrics import disparity_ratio, gini_grouped, income_shares
from .multiplier import Partition, analyse, decompose, default_partition, multiplier_matrix, propensities
from .simulate import IncidenceReport, Scenario, compare_programmes, injection_vector, simulate

__version__ = "0.1.0"
