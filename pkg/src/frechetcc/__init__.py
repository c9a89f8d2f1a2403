"""Fréchet correlation coefficient for metric-space valued data."""

from .baselines import (
    chatterjee_test,
    chatterjee_xi,
    energy_dcov_stat,
    energy_dcov_test,
    pearson_r,
    pearson_test,
)
from .bootstrap import (
    MultiplierLaw,
    NormalizationSpec,
    TestResult,
    between_cell_statistic,
    mix64,
    permutation_test,
    plugin_normalization,
    wild_bootstrap_test,
)
from .embeddings import EmbeddedSample, embed_responses, embedding_dimension
from .errors import (
    ConvergenceError,
    DegenerateDiagnosticError,
    DegenerateError,
    DegenerateMeanError,
    DegenerateResponseError,
    FCCError,
    GeometryError,
    InvalidInputError,
    NumericError,
    ParseError,
)
from .fcc import FccEstimate, cell_summaries, fcc_estimate
from .metric_objects import (
    FrechetSummary,
    MetricObject,
    SpaceDescriptor,
    distance,
    frechet_mean,
    pairwise_distances,
    sphere_exp,
    sphere_log,
    spd_from_log_cholesky,
    spd_log_cholesky_coords,
    spd_matrix_exp,
    spd_matrix_log,
    uniform_grid,
)
from .null_limits import (
    SpectrumResult,
    StudentizedDiagnostic,
    chi2_upper_tail,
    fixed_m_spectrum,
    studentized_diagnostic,
    weighted_chi2_tail,
)
from .partition import (
    Partition,
    assign_cells,
    build_partition,
    enforce_min_cell_size,
    farthest_point_prototypes,
    quantile_bins,
)
from .simgen import (
    PairedSample,
    SimConfig,
    gen_noise_model,
    gen_setting1,
    gen_setting2,
    gen_setting3,
    gen_setting4,
    gen_setting5,
    generate,
    inv_normal_cdf,
    sample_wishart,
)

__version__ = "0.1.0"
