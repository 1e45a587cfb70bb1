//! End-to-end drivers: polynomial LASSO, Fourier subsampling with TV, and
//! learned sampling patterns.

mod fourier;
mod images;
mod lasso;

pub use fourier::{
    learn_mask, load_mask, run_fourier_experiment, run_optimal_sampling, run_pipeline, tune_beta,
    zero_filled, BetaSearch, Budget, Fourier2DConfig, FourierReport, FourierSummary, ImageSource,
    MaskComparison, MaskSpec, Pipeline, PipelineMetrics, SamplingConfig, SamplingReport,
    SamplingSummary, DUAL_EXCESS_TOL,
};
pub use images::{
    load_image, luma, render_ellipses, shepp_logan, textured, Ellipse, MODIFIED_SHEPP_LOGAN,
    PHANTOM_VARIANT,
};
pub use lasso::{
    make_lasso_data, run_lasso_experiment, Lasso1DConfig, LassoData, LassoReport, LassoSummary, Term,
};
