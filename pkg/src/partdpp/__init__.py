"""Exact sampling from partition-constrained DPPs and k-DPP MAP inference."""

from .charpoly import (
    CoeffTensor,
    char_coeffs_univariate,
    constrained_partition_function,
    multichar_all_coeffs,
    multichar_coeff,
    signed_partition_coefficient,
)
from .errors import (
    DeadEnd,
    DPPError,
    EmptySupport,
    IndexOutOfRange,
    InterpolationResidual,
    InvalidPartition,
    NotPSD,
    RankTooLow,
    TooLarge,
    ZeroRow,
)
from .map_inference import MapResult, greedy_map, kappa, local_search_map
from .matrix_core import (
    PartitionSpec,
    as_features,
    as_kernel,
    factor_kernel,
    gram,
    principal_minor_det,
    project_rows_orthogonal,
    residual,
)
from .sampler import (
    SampleState,
    exact_set_probability,
    marginal_step_probs,
    sample_kdpp,
    sample_partition_dpp,
)

__version__ = "0.1.0"
