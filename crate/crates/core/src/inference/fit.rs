use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::inference::likelihood::{cpp_loglik, threshold_loglik, CppParams};
use crate::inference::marginal::{fit_marginal, FamilyTag, MarginalFamily};
use crate::inference::{FitResult, ObservationSet};
use crate::levy_copula::AlphaClaytonParams;
use crate::numerics::special::ln_gamma;
use crate::numerics::{nelder_mead, Minimum, OptimizerSpec};
use crate::process_model::CompoundModel;

/// Optimizer settings shared by the fitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub optimizer: OptimizerSpec,
    /// Extra Nelder–Mead runs started near the incumbent optimum.
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerSpec::default(),
            restarts: 3,
        }
    }
}

/// Runs Nelder–Mead from `x0`, then restarts from perturbed copies of the
/// best point, keeping the lowest value. Iterations are summed.
fn minimize<F: Fn(&[f64]) -> f64>(objective: F, x0: &[f64], opts: &FitOptions) -> Result<Minimum> {
    let mut best = nelder_mead(&objective, x0, &opts.optimizer)?;
    let mut iters = best.iters;
    let mut evals = best.evals;
    for r in 1..=opts.restarts {
        let shift = 0.1 * r as f64;
        let start: Vec<f64> = best
            .x
            .iter()
            .enumerate()
            .map(|(i, v)| if (i + r) % 2 == 0 { v + shift } else { v - shift })
            .collect();
        let start = if objective(&start).is_finite() { start } else { best.x.clone() };
        let m = nelder_mead(&objective, &start, &opts.optimizer)?;
        iters += m.iters;
        evals += m.evals;
        if m.f < best.f {
            best = m;
        } else {
            best.converged |= m.converged && (m.f - best.f).abs() <= opts.optimizer.f_tol.max(1e-9 * best.f.abs());
        }
    }
    best.iters = iters;
    best.evals = evals;
    Ok(best)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn named<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Constraint placed on the α-Clayton shapes in the copula step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaVariant {
    /// σ, α₁ and α₂ free.
    Full,
    /// α₁ = α₂.
    Symmetric,
    /// α₁ = α₂ = 1.
    Clayton,
}

impl CopulaVariant {
    pub fn free_parameters(self) -> usize {
        match self {
            CopulaVariant::Full => 3,
            CopulaVariant::Symmetric => 2,
            CopulaVariant::Clayton => 1,
        }
    }

    fn decode(self, x: &[f64]) -> Result<AlphaClaytonParams> {
        let sigma = x[0].exp();
        match self {
            CopulaVariant::Full => AlphaClaytonParams::new(sigma, x[1].exp(), x[2].exp()),
            CopulaVariant::Symmetric => AlphaClaytonParams::new(sigma, x[1].exp(), x[1].exp()),
            CopulaVariant::Clayton => AlphaClaytonParams::new(sigma, 1.0, 1.0),
        }
    }

    fn encode(self, c: &AlphaClaytonParams) -> Vec<f64> {
        let ls = c.dependence().ln();
        match self {
            CopulaVariant::Full => vec![ls, c.shape1().ln(), c.shape2().ln()],
            CopulaVariant::Symmetric => vec![ls, (c.shape1() * c.shape2()).sqrt().ln()],
            CopulaVariant::Clayton => vec![ls],
        }
    }
}

impl fmt::Display for CopulaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopulaVariant::Full => "full",
            CopulaVariant::Symmetric => "symmetric",
            CopulaVariant::Clayton => "clayton",
        })
    }
}

impl FromStr for CopulaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CopulaVariant::Full),
            "symmetric" => Ok(CopulaVariant::Symmetric),
            "clayton" => Ok(CopulaVariant::Clayton),
            _ => Err(domain(format!("unknown copula variant '{s}'"))),
        }
    }
}

/// Jump-rate estimates `(n_j⊥ + n∥) / T`.
pub fn rate_estimates(obs: &ObservationSet) -> [f64; 2] {
    let (n1, n2, np) = obs.counts();
    let t = obs.horizon();
    [(n1 + np) as f64 / t, (n2 + np) as f64 / t]
}

/// Copula step of the two-step fit: maximizes the continuous-observation
/// likelihood over the copula parameters with marginals and rates held.
pub fn fit_copula_two_step(
    obs: &ObservationSet,
    marginals: [MarginalFamily; 2],
    rates: [f64; 2],
    variant: CopulaVariant,
    start: &AlphaClaytonParams,
    opts: &FitOptions,
) -> Result<(AlphaClaytonParams, FitResult)> {
    if obs.counts().2 == 0 {
        return Err(Error::Precondition("copula fit needs at least one joint jump".into()));
    }
    let objective = |x: &[f64]| {
        let Ok(copula) = variant.decode(x) else {
            return f64::INFINITY;
        };
        let p = CppParams {
            rates,
            marginals,
            copula,
        };
        cpp_loglik(obs, &p).map_or(f64::INFINITY, |v| -v)
    };
    let min = minimize(objective, &variant.encode(start), opts)?;
    let cop = variant.decode(&min.x)?;
    let params = match variant {
        CopulaVariant::Full => named([("sigma", cop.dependence()), ("alpha1", cop.shape1()), ("alpha2", cop.shape2())]),
        CopulaVariant::Symmetric => named([("sigma", cop.dependence()), ("alpha", cop.shape1())]),
        CopulaVariant::Clayton => named([("sigma", cop.dependence())]),
    };
    let mut fixed = named([("lambda1", rates[0]), ("lambda2", rates[1])]);
    if variant == CopulaVariant::Clayton {
        fixed.extend(named([("alpha1", 1.0), ("alpha2", 1.0)]));
    }
    for (i, m) in marginals.iter().enumerate() {
        for (name, v) in m.tag().param_names().iter().zip(m.params()) {
            fixed.insert(format!("m{}_{name}", i + 1), v);
        }
    }
    let loglik = -min.f;
    Ok((
        cop,
        FitResult {
            params,
            loglik,
            converged: min.converged && loglik.is_finite(),
            iterations: min.iters,
            fixed,
        },
    ))
}

/// Marginal fits, rate estimates and the three nested copula fits.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepFit {
    pub marginals: [MarginalFamily; 2],
    pub marginal_fits: [FitResult; 2],
    pub rates: [f64; 2],
    /// Fits in the order full, symmetric, Clayton.
    pub copulas: Vec<(CopulaVariant, AlphaClaytonParams, FitResult)>,
}

impl TwoStepFit {
    pub fn get(&self, v: CopulaVariant) -> Option<(&AlphaClaytonParams, &FitResult)> {
        self.copulas.iter().find(|(w, _, _)| *w == v).map(|(_, c, f)| (c, f))
    }
}

/// Per-variant log-likelihoods and parameters of a two-step fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LoglikReport {
    pub fit: TwoStepFit,
    /// Whether full ≥ symmetric ≥ Clayton held up to the tolerance.
    pub nested_ordering: bool,
}

impl LoglikReport {
    pub const TOLERANCE: f64 = 1e-3;

    /// Tab-separated table: variant, loglik, sigma, alpha1, alpha2.
    pub fn table(&self) -> String {
        let mut s = String::from("variant\tloglik\tsigma\talpha1\talpha2\n");
        for (v, c, f) in &self.fit.copulas {
            s.push_str(&format!(
                "{v}\t{:.4}\t{:.6}\t{:.6}\t{:.6}\n",
                f.loglik,
                c.dependence(),
                c.shape1(),
                c.shape2()
            ));
        }
        s
    }
}

/// Two-step pipeline: fits marginals of the given families on all positive
/// sizes of each coordinate, estimates rates from counts, then fits the
/// Clayton, symmetric and full copulas, each warm-started from the
/// previous one.
pub fn loglik_report(obs: &ObservationSet, families: [FamilyTag; 2], opts: &FitOptions) -> Result<LoglikReport> {
    let (m1, f1) = fit_marginal(&obs.first_sizes(), families[0], &opts.optimizer)?;
    let (m2, f2) = fit_marginal(&obs.second_sizes(), families[1], &opts.optimizer)?;
    let marginals = [m1, m2];
    let rates = rate_estimates(obs);

    let start = AlphaClaytonParams::new(0.5, 1.0, 1.0)?;
    let (clayton, fc) = fit_copula_two_step(obs, marginals, rates, CopulaVariant::Clayton, &start, opts)?;
    let (sym, fs) = fit_copula_two_step(obs, marginals, rates, CopulaVariant::Symmetric, &clayton, opts)?;
    let (full, ff) = fit_copula_two_step(obs, marginals, rates, CopulaVariant::Full, &sym, opts)?;
    let nested_ordering = ff.loglik >= fs.loglik - LoglikReport::TOLERANCE && fs.loglik >= fc.loglik - LoglikReport::TOLERANCE;
    Ok(LoglikReport {
        fit: TwoStepFit {
            marginals,
            marginal_fits: [f1, f2],
            rates,
            copulas: vec![
                (CopulaVariant::Full, full, ff),
                (CopulaVariant::Symmetric, sym, fs),
                (CopulaVariant::Clayton, clayton, fc),
            ],
        },
        nested_ordering,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    pub model: CompoundModel,
    pub fit: FitResult,
}

fn threshold_result(model: CompoundModel, min: &Minimum, symmetric: bool) -> ThresholdFit {
    let [w1, w2] = *model.scores();
    let sigma = model.stability();
    let (params, fixed) = if symmetric {
        (
            named([("alpha", w1.shape()), ("sigma", sigma)]),
            named([("K", 1.0), ("beta1", 1.0), ("beta2", 1.0)]),
        )
    } else {
        (
            named([
                ("alpha1", w1.shape()),
                ("beta1", w1.rate()),
                ("alpha2", w2.shape()),
                ("beta2", w2.rate()),
                ("sigma", sigma),
            ]),
            named([("K", 1.0)]),
        )
    };
    let loglik = -min.f;
    ThresholdFit {
        model,
        fit: FitResult {
            params,
            loglik,
            converged: min.converged && loglik.is_finite(),
            iterations: min.iters,
            fixed,
        },
    }
}

fn check_threshold_obs(obs: &ObservationSet) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::Precondition("threshold fit needs at least one observation".into()));
    }
    if obs.counts().2 != obs.len() {
        return Err(Error::Precondition("threshold fit takes joint jumps only".into()));
    }
    Ok(())
}

/// Thresholded sample with the parameter-free parts of the likelihood
/// precomputed.
struct ThresholdSample<'a> {
    obs: &'a ObservationSet,
    eps: (f64, f64),
    ln_w: Vec<(f64, f64)>,
    sum_ln_w: (f64, f64),
}

impl<'a> ThresholdSample<'a> {
    fn new(obs: &'a ObservationSet, eps1: f64, eps2: f64) -> Result<Self> {
        // validates thresholds against the data
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 1.0, 1.0, 1.0)?;
        threshold_loglik(obs, &m, eps1, eps2)?;
        let ln_w: Vec<(f64, f64)> = obs.jumps().iter().map(|j| (j.w1.ln(), j.w2.ln())).collect();
        let sum_ln_w = ln_w.iter().fold((0.0, 0.0), |(a, b), w| (a + w.0, b + w.1));
        Ok(Self {
            obs,
            eps: (eps1, eps2),
            ln_w,
            sum_ln_w,
        })
    }

    /// Equal to `threshold_loglik`, with sums over the observations of
    /// parameter-free terms hoisted out.
    fn loglik(&self, m: &CompoundModel) -> Result<f64> {
        let sigma = m.stability();
        let [w1, w2] = *m.scores();
        let (a1, a2) = (w1.shape(), w2.shape());
        let (lb1, lb2) = (w1.rate().ln(), w2.rate().ln());
        let total = a1 + a2 + sigma;
        let n = self.ln_w.len() as f64;
        let per_obs = sigma.ln() + m.directing().scale().ln() + a1 * lb1 + a2 * lb2 + ln_gamma(total)
            - ln_gamma(a1)
            - ln_gamma(a2);
        let mix: f64 = self
            .ln_w
            .iter()
            .map(|&(l1, l2)| {
                let (x, y) = (lb1 + l1, lb2 + l2);
                x.max(y) + (-(x - y).abs()).exp().ln_1p()
            })
            .sum();
        let v = -m.bivariate_tail(self.eps.0, self.eps.1)? * self.obs.horizon() + n * per_obs
            + (a1 - 1.0) * self.sum_ln_w.0
            + (a2 - 1.0) * self.sum_ln_w.1
            - total * mix;
        Ok(v)
    }
}

/// Fits `(α₁, β₁, α₂, β₂, σ)` of the stable/Gamma compound model with the
/// directing scale fixed at one, from jumps above `(eps1, eps2)`.
pub fn fit_threshold_model(obs: &ObservationSet, eps1: f64, eps2: f64, opts: &FitOptions) -> Result<ThresholdFit> {
    check_threshold_obs(obs)?;
    let sample = ThresholdSample::new(obs, eps1, eps2)?;
    let decode = |x: &[f64]| CompoundModel::from_params(logistic(x[4]), 1.0, x[0].exp(), x[1].exp(), x[2].exp(), x[3].exp());
    let objective = |x: &[f64]| {
        decode(x)
            .and_then(|m| sample.loglik(&m))
            .map_or(f64::INFINITY, |v| if v.is_finite() { -v } else { f64::INFINITY })
    };
    let x0 = [0.0, 0.0, 0.0, 0.0, logit(0.5)];
    let min = minimize(objective, &x0, opts)?;
    Ok(threshold_result(decode(&min.x)?, &min, false))
}

/// Symmetric restriction `α₁ = α₂ = α`, `β₁ = β₂ = 1`, fitting `(α, σ)`.
pub fn fit_threshold_symmetric(obs: &ObservationSet, eps1: f64, eps2: f64, opts: &FitOptions) -> Result<ThresholdFit> {
    check_threshold_obs(obs)?;
    let sample = ThresholdSample::new(obs, eps1, eps2)?;
    let decode = |x: &[f64]| CompoundModel::from_params(logistic(x[1]), 1.0, x[0].exp(), 1.0, x[0].exp(), 1.0);
    let objective = |x: &[f64]| {
        decode(x)
            .and_then(|m| sample.loglik(&m))
            .map_or(f64::INFINITY, |v| if v.is_finite() { -v } else { f64::INFINITY })
    };
    let min = minimize(objective, &[0.0, logit(0.5)], opts)?;
    Ok(threshold_result(decode(&min.x)?, &min, true))
}
