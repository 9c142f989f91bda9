//! Likelihoods for continuously observed and thresholded jump data, and the
//! maximum-likelihood fitters built on them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub mod fit;
pub mod likelihood;
pub mod marginal;
pub mod observations;

pub use fit::{
    fit_copula_two_step, fit_threshold_model, fit_threshold_symmetric, loglik_report, CopulaVariant, FitOptions,
    LoglikReport, ThresholdFit, TwoStepFit,
};
pub use likelihood::{cpp_loglik, threshold_loglik, threshold_loglik_sklar, CppParams};
pub use marginal::{fit_marginal, select_marginal, FamilyTag, MarginalFamily, MarginalSelection};
pub use observations::ObservationSet;

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimated parameters by name.
    pub params: BTreeMap<String, f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Parameters held at fixed values during the fit.
    pub fixed: BTreeMap<String, f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).or_else(|| self.fixed.get(name)).copied()
    }
}
