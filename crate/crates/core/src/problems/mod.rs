//! Objective functions, datasets and curvature estimates.

mod cross_entropy;
mod dataset;
mod quadratic;
mod spectrum;

pub use cross_entropy::CrossEntropyProblem;
pub use dataset::{
    load_csv, load_libsvm, make_synthetic, parse_csv, parse_libsvm, save_libsvm, to_libsvm,
    Dataset,
};
pub use quadratic::{log_spaced_spectrum, random_orthogonal, QuadraticProblem};
pub use spectrum::{
    estimate_lipschitz_hessian, estimate_spectrum, ProblemInfo, Region, SpectrumEstimate,
    POWER_MAX_ITERS, POWER_REL_TOL,
};
