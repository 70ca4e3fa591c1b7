"""Regression with probability-distribution inputs.

Distribution inputs (1-D/2-D Gaussians, normalised curves) are compared with
squared 2-Wasserstein distances, turned into positive definite RBF kernels,
and fed to kernel ridge regression. Includes the two simulation studies
(1-D model comparison, 2-D noise sweep) and the curve-to-age pipeline.
"""

from .distributions import (
    Distribution,
    Empirical1D,
    Gaussian1D,
    Gaussian2D,
    sliced_w2sq,
    sliced_w2sq_integrated,
    sqrtm_2x2,
    w2sq_atoms,
    w2sq_empirical,
    w2sq_gaussian1d,
    w2sq_gaussian1d_empirical,
    w2sq_gaussian2d,
    w2sq_oracle,
)
from .experiments import (
    EvalReport,
    ExperimentConfig,
    config_1d,
    config_2d,
    gen_dataset,
    run_table1,
    run_table2,
    target_1d,
    target_2d,
)
from .kernels import (
    HistogramParams,
    HistogramSpec,
    KernelSpec,
    LegendreParams,
    LegendreSpec,
    SlicedParams,
    SlicedSpec,
    ThetaParams,
    WassersteinSpec,
    chi2_distance,
    cross_gram,
    gram_matrix,
    histogram_of,
    kernel_eval,
    legendre_coeffs,
)
from .ridge import (
    GridSpec,
    RidgeModel,
    fit,
    grid_search,
    loo_predict,
    paper_grid,
    predict,
    predict_many,
    rmse,
)
from .teoae import (
    CurveRecord,
    TeoaeDataset,
    loo_age,
    normalize_curve,
    read_curves,
    select_lambda,
    synth_cohort,
)

__version__ = "0.1.0"
