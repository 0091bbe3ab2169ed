"""Perturbation series for eigenvalues and eigenprojections of symmetric matrices.

Submodules:

* :mod:`~perturbseries.spectral`   eigendecomposition, gaps, resolvents, weights, grouping
* :mod:`~perturbseries.series`     weighted norms and series coefficients
* :mod:`~perturbseries.bounds`     remainder and tail bounds
* :mod:`~perturbseries.expansion`  truncated expansions with all bounds attached
* :mod:`~perturbseries.oracles`    exact, finite-difference and contour oracles; checks
* :mod:`~perturbseries.verify`     randomised invariant sweep
* :mod:`~perturbseries.covariance` empirical-covariance Monte Carlo and experiments
* :mod:`~perturbseries.matrix_io`  matrix files
* :mod:`~perturbseries.cli`        command-line interface
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundValue,
    eigenvalue_bounds,
    eigenvalue_two_term_bound,
    projection_bounds,
    projection_distance_bounds,
    remainder_bound_eigenvalue,
    remainder_bound_projection,
)
from .covariance import (  # noqa: E402
    ExperimentConfig,
    SamplerSpec,
    build_decay_model,
    empirical_covariance,
    gaussian_first_two_term_moment,
    mc_eigen_error,
    phase_transition_experiment,
    relative_rank_stats,
    sample_data,
)
from .errors import (  # noqa: E402
    BoundInapplicableError,
    ContourError,
    DegenerateGapError,
    DivergenceError,
    PerturbationError,
    SpectralIndexError,
    StencilError,
)
from .expansion import SeriesExpansion, partial_sums  # noqa: E402
from .matrix_io import read_matrix, write_matrix  # noqa: E402
from .oracles import (  # noqa: E402
    ContourSpec,
    basic_identity_residual,
    contour_projector,
    contour_series_coefficient,
    exact_perturbed,
    finite_difference_coefficient,
    verify_remainder_identity,
    verify_separation,
    verify_weighted_projection_bound,
)
from .series import (  # noqa: E402
    DeltaReport,
    PerturbationInstance,
    delta,
    eigenvalue_coefficients,
    make_instance,
    multiple_group_series,
    projection_coefficients,
    series_coefficient_eigenvalue,
    series_coefficient_projection,
)
from .spectral import (  # noqa: E402
    SpectralModel,
    as_symmetric,
    decompose_symmetric,
    group_eigenvalues,
    spectral_gap,
)
