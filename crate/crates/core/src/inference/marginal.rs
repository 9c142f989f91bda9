//! Two-parameter jump-size families, their maximum-likelihood fits and
//! KS-based selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Error, Result};
use crate::inference::FitResult;
use crate::numerics::special::{ln_gamma, ln_inc_gamma_pair, normal_cdf, normal_sf};
use crate::numerics::{ks_distance, nelder_mead, normal_quantile, solve_monotone_log, OptimizerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    Gamma,
    LogNormal,
    Weibull,
}

impl FamilyTag {
    /// Candidate order, which also breaks ties in selection.
    pub const ALL: [FamilyTag; 3] = [FamilyTag::Gamma, FamilyTag::LogNormal, FamilyTag::Weibull];

    pub fn param_names(self) -> [&'static str; 2] {
        match self {
            FamilyTag::Gamma => ["shape", "rate"],
            FamilyTag::LogNormal => ["mu", "sigma"],
            FamilyTag::Weibull => ["shape", "scale"],
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyTag::Gamma => "gamma",
            FamilyTag::LogNormal => "lognormal",
            FamilyTag::Weibull => "weibull",
        })
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(FamilyTag::Gamma),
            "lognormal" => Ok(FamilyTag::LogNormal),
            "weibull" => Ok(FamilyTag::Weibull),
            _ => Err(domain(format!("unknown marginal family '{s}'"))),
        }
    }
}

/// A positive continuous distribution for jump sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MarginalFamily {
    Gamma { shape: f64, rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl MarginalFamily {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        ensure_positive("gamma shape", shape)?;
        ensure_positive("gamma rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(domain(format!("lognormal mu must be finite, got {mu}")));
        }
        ensure_positive("lognormal sigma", sigma)?;
        Ok(Self::LogNormal { mu, sigma })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        ensure_positive("weibull shape", shape)?;
        ensure_positive("weibull scale", scale)?;
        Ok(Self::Weibull { shape, scale })
    }

    pub fn from_params(tag: FamilyTag, params: [f64; 2]) -> Result<Self> {
        match tag {
            FamilyTag::Gamma => Self::gamma(params[0], params[1]),
            FamilyTag::LogNormal => Self::log_normal(params[0], params[1]),
            FamilyTag::Weibull => Self::weibull(params[0], params[1]),
        }
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            Self::Gamma { .. } => FamilyTag::Gamma,
            Self::LogNormal { .. } => FamilyTag::LogNormal,
            Self::Weibull { .. } => FamilyTag::Weibull,
        }
    }

    pub fn params(&self) -> [f64; 2] {
        match *self {
            Self::Gamma { shape, rate } => [shape, rate],
            Self::LogNormal { mu, sigma } => [mu, sigma],
            Self::Weibull { shape, scale } => [shape, scale],
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Self::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                -0.5 * z * z - x.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Self::Weibull { shape, scale } => {
                let r = x / scale;
                shape.ln() - scale.ln() + (shape - 1.0) * r.ln() - r.powf(shape)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match *self {
            Self::Gamma { shape, rate } => ln_inc_gamma_pair(shape, rate * x).0.exp(),
            Self::LogNormal { mu, sigma } => normal_cdf((x.ln() - mu) / sigma),
            Self::Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
        }
    }

    /// ln P(X > x), accurate far into the upper tail.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match *self {
            Self::Gamma { shape, rate } => ln_inc_gamma_pair(shape, rate * x).1,
            Self::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                if z < 30.0 {
                    normal_sf(z).ln()
                } else {
                    // Mills-ratio asymptote once the tail underflows
                    -0.5 * z * z - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                        + (-1.0 / (z * z)).ln_1p()
                }
            }
            Self::Weibull { shape, scale } => -(x / scale).powf(shape),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.ln_survival(x).exp()
    }

    /// The `x` with `P(X > x) = p`, for `p` in (0, 1).
    pub fn survival_inverse(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("survival level must lie in (0,1), got {p}")));
        }
        match *self {
            Self::Gamma { shape, rate } => {
                let ln_p = p.ln();
                let start = (shape / rate).max(1e-300);
                // ln S is decreasing in x; the gap is increasing
                solve_monotone_log(|x| ln_p - self.ln_survival(x), start, "gamma quantile")
            }
            Self::LogNormal { mu, sigma } => Ok((mu - sigma * normal_quantile(p)?).exp()),
            Self::Weibull { shape, scale } => Ok(scale * (-p.ln()).powf(1.0 / shape)),
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        self.survival_inverse(1.0 - q)
    }

    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::Precondition(format!(
            "marginal fit needs at least 2 weights, got {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(domain(format!("weights must be positive and finite, got {w}")));
    }
    Ok(())
}

fn log_moments(weights: &[f64]) -> (f64, f64) {
    let n = weights.len() as f64;
    let m = weights.iter().map(|w| w.ln()).sum::<f64>() / n;
    let v = weights.iter().map(|w| (w.ln() - m).powi(2)).sum::<f64>() / n;
    (m, v)
}

/// Method-of-moments starting point in the unconstrained coordinates used
/// by the optimizer.
fn starting_point(tag: FamilyTag, weights: &[f64]) -> [f64; 2] {
    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    let var = (weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n).max(1e-12 * mean * mean);
    let (lm, lv) = log_moments(weights);
    let lsd = lv.sqrt().max(1e-6);
    match tag {
        FamilyTag::Gamma => {
            let shape = mean * mean / var;
            [shape.ln(), (shape / mean).ln()]
        }
        FamilyTag::LogNormal => [lm, lsd.ln()],
        // log W is Gumbel-min with sd π/(k√6) and location ln λ - γ/k
        FamilyTag::Weibull => {
            let k = std::f64::consts::PI / (lsd * 6f64.sqrt());
            [k.ln(), lm + 0.577_215_664_901_532_9 / k]
        }
    }
}

fn decode(tag: FamilyTag, x: &[f64]) -> Result<MarginalFamily> {
    match tag {
        FamilyTag::Gamma => MarginalFamily::gamma(x[0].exp(), x[1].exp()),
        FamilyTag::LogNormal => MarginalFamily::log_normal(x[0], x[1].exp()),
        FamilyTag::Weibull => MarginalFamily::weibull(x[0].exp(), x[1].exp()),
    }
}

/// Maximum-likelihood fit by Nelder–Mead in log-parameter space.
///
/// Optimizer failures are reported through `converged`, not as errors.
pub fn fit_marginal(weights: &[f64], tag: FamilyTag, spec: &OptimizerSpec) -> Result<(MarginalFamily, FitResult)> {
    check_weights(weights)?;
    let objective = |x: &[f64]| match decode(tag, x) {
        Ok(fam) => -fam.log_likelihood(weights),
        Err(_) => f64::INFINITY,
    };
    let start = starting_point(tag, weights);
    let x0 = if objective(&start).is_finite() { start } else { [0.0, 0.0] };
    let min = nelder_mead(objective, &x0, spec)?;
    let fam = decode(tag, &min.x)?;
    let names = tag.param_names();
    let params: BTreeMap<String, f64> = names
        .iter()
        .zip(fam.params())
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    let loglik = -min.f;
    let fit = FitResult {
        params,
        loglik,
        converged: min.converged && loglik.is_finite(),
        iterations: min.iters,
        fixed: BTreeMap::new(),
    };
    Ok((fam, fit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSelection {
    pub family: MarginalFamily,
    pub fit: FitResult,
    pub ks: f64,
}

/// Fits each candidate and keeps the one with the smallest KS distance;
/// ties go to the earlier candidate.
pub fn select_marginal(
    weights: &[f64],
    candidates: &[FamilyTag],
    spec: &OptimizerSpec,
) -> Result<MarginalSelection> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate families"));
    }
    let mut best: Option<MarginalSelection> = None;
    for &tag in candidates {
        let (family, fit) = fit_marginal(weights, tag, spec)?;
        let ks = ks_distance(weights, |x| family.cdf(x))?;
        if best.as_ref().is_none_or(|b| ks < b.ks) {
            best = Some(MarginalSelection { family, fit, ks });
        }
    }
    Ok(best.expect("at least one candidate"))
}
