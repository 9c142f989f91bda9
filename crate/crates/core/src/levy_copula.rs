//! Positive Lévy copulas on `[0, ∞]²`: independence, complete dependence,
//! Clayton, the asymmetric α-Clayton family, and a numerical construction
//! from a score survival copula and a stable directing measure.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Error, Result};
use crate::numerics::special::{inc_beta_pair, ln_gamma, ln_gamma_ratio, ln_inc_beta_pair};
use crate::numerics::{integrate, integrate_from, solve_monotone_log, QuadratureSpec};
use crate::process_model::{DirectingMeasure, GammaScore, StableDirecting};

fn check_argument(name: &str, s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(domain(format!("{name} must be in [0, ∞], got {s}")));
    }
    Ok(())
}

/// Copula of coordinates that never jump together.
pub fn independence_copula(s1: f64, s2: f64) -> f64 {
    match (s1.is_infinite(), s2.is_infinite()) {
        (true, true) => f64::INFINITY,
        (false, true) => s1,
        (true, false) => s2,
        (false, false) => 0.0,
    }
}

/// Copula of coordinates that always jump together, ordered by size.
pub fn complete_dependence_copula(s1: f64, s2: f64) -> f64 {
    s1.min(s2)
}

pub fn clayton_copula(theta: f64, s1: f64, s2: f64) -> Result<f64> {
    ensure_positive("clayton theta", theta)?;
    check_argument("s1", s1)?;
    check_argument("s2", s2)?;
    if s1 == 0.0 || s2 == 0.0 {
        return Ok(0.0);
    }
    if s2.is_infinite() {
        return Ok(s1);
    }
    if s1.is_infinite() {
        return Ok(s2);
    }
    // factor out the smaller argument to keep the powers bounded
    let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
    Ok(lo * (1.0 + (hi / lo).powf(-theta)).powf(-1.0 / theta))
}

/// Parameters of the α-Clayton Lévy copula. `dependence` plays the role
/// of `1/θ` in the Clayton family and may be any positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaClaytonParams {
    dependence: f64,
    shape1: f64,
    shape2: f64,
}

impl AlphaClaytonParams {
    pub fn new(dependence: f64, shape1: f64, shape2: f64) -> Result<Self> {
        ensure_positive("copula dependence parameter", dependence)?;
        ensure_positive("copula shape1", shape1)?;
        ensure_positive("copula shape2", shape2)?;
        Ok(Self {
            dependence,
            shape1,
            shape2,
        })
    }

    pub fn dependence(&self) -> f64 {
        self.dependence
    }

    pub fn shape1(&self) -> f64 {
        self.shape1
    }

    pub fn shape2(&self) -> f64 {
        self.shape2
    }

    /// The same copula with the coordinates relabelled.
    pub fn swapped(&self) -> Self {
        Self {
            dependence: self.dependence,
            shape1: self.shape2,
            shape2: self.shape1,
        }
    }

    /// ln r_i where `r_i = (Γ(α_i+σ) / (Γ(α_i) s_i))^{1/σ}`.
    fn log_scale(&self, shape: f64, s: f64) -> f64 {
        (ln_gamma_ratio(shape, self.dependence) - s.ln()) / self.dependence
    }

    /// `(r1/(r1+r2), r2/(r1+r2))`, each computed without cancellation.
    fn mixing_weights(&self, s1: f64, s2: f64) -> (f64, f64, f64, f64) {
        let l1 = self.log_scale(self.shape1, s1);
        let l2 = self.log_scale(self.shape2, s2);
        let x1 = 1.0 / (1.0 + (l2 - l1).exp());
        let x2 = 1.0 / (1.0 + (l1 - l2).exp());
        (l1, l2, x1, x2)
    }

    fn check_interior(s1: f64, s2: f64) -> Result<()> {
        ensure_positive("s1", s1)?;
        ensure_positive("s2", s2)
    }

    /// C(s1, s2) with exact handling of zero and infinite arguments.
    pub fn value(&self, s1: f64, s2: f64) -> Result<f64> {
        check_argument("s1", s1)?;
        check_argument("s2", s2)?;
        if s1 == 0.0 || s2 == 0.0 {
            return Ok(0.0);
        }
        if s2.is_infinite() {
            return Ok(s1);
        }
        if s1.is_infinite() {
            return Ok(s2);
        }
        let sigma = self.dependence;
        let (_, _, x1, x2) = self.mixing_weights(s1, s2);
        let i1 = inc_beta_pair(x1, x2, self.shape1 + sigma, self.shape2).0;
        let i2 = inc_beta_pair(x2, x1, self.shape2 + sigma, self.shape1).0;
        Ok(s1 * i1 + s2 * i2)
    }

    /// ∂C/∂s1, the conditional distribution of the second coordinate given
    /// the first.
    pub fn d1(&self, s1: f64, s2: f64) -> Result<f64> {
        Self::check_interior(s1, s2)?;
        let (_, _, x1, x2) = self.mixing_weights(s1, s2);
        Ok(inc_beta_pair(x1, x2, self.shape1 + self.dependence, self.shape2).0)
    }

    /// 1 - ∂C/∂s1, accurate when the partial is close to one.
    pub fn d1_complement(&self, s1: f64, s2: f64) -> Result<f64> {
        Self::check_interior(s1, s2)?;
        let (_, _, x1, x2) = self.mixing_weights(s1, s2);
        Ok(inc_beta_pair(x1, x2, self.shape1 + self.dependence, self.shape2).1)
    }

    /// ln(1 - ∂C/∂s1), finite even when the complement underflows.
    pub fn ln_d1_complement(&self, s1: f64, s2: f64) -> Result<f64> {
        Self::check_interior(s1, s2)?;
        let (_, _, x1, x2) = self.mixing_weights(s1, s2);
        Ok(ln_inc_beta_pair(x2, x1, self.shape2, self.shape1 + self.dependence))
    }

    /// ∂C/∂s2.
    pub fn d2(&self, s1: f64, s2: f64) -> Result<f64> {
        self.swapped().d1(s2, s1)
    }

    pub fn d2_complement(&self, s1: f64, s2: f64) -> Result<f64> {
        self.swapped().d1_complement(s2, s1)
    }

    pub fn ln_d2_complement(&self, s1: f64, s2: f64) -> Result<f64> {
        self.swapped().ln_d1_complement(s2, s1)
    }

    /// ln ∂²C/∂s1∂s2.
    pub fn ln_density(&self, s1: f64, s2: f64) -> Result<f64> {
        Self::check_interior(s1, s2)?;
        let sigma = self.dependence;
        let (a1, a2) = (self.shape1, self.shape2);
        let (l1, l2, _, _) = self.mixing_weights(s1, s2);
        let lse = l1.max(l2) + (-(l1 - l2).abs()).exp().ln_1p();
        Ok(ln_gamma(a1 + a2 + sigma) - sigma.ln() - ln_gamma(a1) - ln_gamma(a2) - s1.ln() - s2.ln()
            + a1 * l1
            + a2 * l2
            - (a1 + a2 + sigma) * lse)
    }

    pub fn density(&self, s1: f64, s2: f64) -> Result<f64> {
        self.ln_density(s1, s2).map(f64::exp)
    }

    /// Solves `d1(s1, s2) = q` for `s2`. Returns `+∞` when the root lies
    /// beyond the largest finite `f64`.
    pub fn conditional_inverse(&self, s1: f64, q: f64) -> Result<f64> {
        ensure_positive("s1", s1)?;
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("conditional level must lie in (0,1), got {q}")));
        }
        let (a, b) = (self.shape1 + self.dependence, self.shape2);
        // d1 depends on s2 only through t = logit(x1) = l1 - l2, and is
        // increasing in t; solve for t, then recover s2.
        let gap = |t: f64| {
            let x = 1.0 / (1.0 + (-t).exp());
            let xc = 1.0 / (1.0 + t.exp());
            let (v, vc) = inc_beta_pair(x, xc, a, b);
            if q <= 0.5 {
                v - q
            } else {
                (1.0 - q) - vc
            }
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while gap(lo) > 0.0 {
            lo *= 2.0;
            if lo < -1e4 {
                return Err(Error::NonConvergence {
                    what: "conditional inverse bracket",
                    estimate: lo,
                    error: f64::INFINITY,
                });
            }
        }
        while gap(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e4 {
                return Err(Error::NonConvergence {
                    what: "conditional inverse bracket",
                    estimate: hi,
                    error: f64::INFINITY,
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let l2 = self.log_scale(self.shape1, s1) - t;
        let ln_s2 = ln_gamma_ratio(self.shape2, self.dependence) - self.dependence * l2;
        if ln_s2.is_nan() {
            return Err(Error::NonConvergence {
                what: "conditional inverse",
                estimate: ln_s2,
                error: f64::INFINITY,
            });
        }
        // roots beyond the f64 range saturate to infinity or the smallest
        // normal value
        Ok(ln_s2.exp().max(f64::MIN_POSITIVE))
    }

    /// Solves `d2(s1, s2) = q` for `s1`.
    pub fn conditional_inverse_second(&self, s2: f64, q: f64) -> Result<f64> {
        self.swapped().conditional_inverse(s2, q)
    }
}

/// Sup-norm distances of the α-Clayton copula from its two limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// sup |C − min| at a small dependence parameter.
    pub comonotone_gap: f64,
    /// sup |C| at a large dependence parameter.
    pub independence_gap: f64,
}

pub const LIMIT_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Evaluates the copula on [`LIMIT_GRID`]² at dependence 0.01 and 100.
pub fn limit_checks(shape1: f64, shape2: f64) -> Result<LimitReport> {
    let near_comonotone = AlphaClaytonParams::new(0.01, shape1, shape2)?;
    let near_independent = AlphaClaytonParams::new(100.0, shape1, shape2)?;
    let mut report = LimitReport {
        comonotone_gap: 0.0,
        independence_gap: 0.0,
    };
    for s1 in LIMIT_GRID {
        for s2 in LIMIT_GRID {
            let c = near_comonotone.value(s1, s2)?;
            report.comonotone_gap = report.comonotone_gap.max((c - s1.min(s2)).abs());
            let c = near_independent.value(s1, s2)?;
            report.independence_gap = report.independence_gap.max(c.abs());
        }
    }
    Ok(report)
}

type Survival = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type SurvivalCopula = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Joint law of the scores, described by a survival copula and the two
/// marginal survival functions.
pub struct ScoreSurvivalSpec {
    pub survival_copula: SurvivalCopula,
    pub survivals: [Survival; 2],
}

impl std::fmt::Debug for ScoreSurvivalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScoreSurvivalSpec { .. }")
    }
}

impl ScoreSurvivalSpec {
    pub fn new(survival_copula: SurvivalCopula, survivals: [Survival; 2]) -> Self {
        Self {
            survival_copula,
            survivals,
        }
    }

    /// Independent Gamma scores.
    pub fn independent_gamma(scores: [GammaScore; 2]) -> Self {
        let [w1, w2] = scores;
        Self::new(
            Box::new(|u, v| u * v),
            [Box::new(move |x| w1.survival(x)), Box::new(move |x| w2.survival(x))],
        )
    }

    /// Spot-checks the boundary behaviour of the copula and survivals.
    pub fn validate(&self) -> Result<()> {
        for u in [0.0, 0.1, 0.37, 0.8, 1.0] {
            let a = (self.survival_copula)(u, 1.0);
            let b = (self.survival_copula)(1.0, u);
            if (a - u).abs() > 1e-9 || (b - u).abs() > 1e-9 {
                return Err(domain(format!("survival copula is not uniform-marginal at {u}")));
            }
        }
        for (i, s) in self.survivals.iter().enumerate() {
            if (s(1e-300) - 1.0).abs() > 1e-9 || s(f64::INFINITY).abs() > 1e-12 {
                return Err(domain(format!("survival {} must run from 1 to 0", i + 1)));
            }
        }
        Ok(())
    }
}

/// ∫_0^∞ f(u) du split at the given positive breakpoints, each piece rescaled
/// so the quadrature sees unit-order ranges.
fn integrate_split<F: Fn(f64) -> f64>(f: F, breaks: &mut [f64], spec: &QuadratureSpec) -> Result<f64> {
    breaks.sort_by(f64::total_cmp);
    let lo = breaks[0];
    let hi = breaks[breaks.len() - 1];
    let mut total = lo * integrate(|v| f(lo * v), 0.0, 1.0, spec)?;
    // between breakpoints, unit steps in ln u keep quadrature nodes from
    // skipping over a transition confined to a small part of a long range
    let g = |v: f64| {
        let u = v.exp();
        f(u) * u
    };
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (a, b) = (w[0].ln(), w[1].ln());
            let pieces = (b - a).ceil().max(1.0) as usize;
            let width = (b - a) / pieces as f64;
            for k in 0..pieces {
                let from = a + k as f64 * width;
                let to = if k + 1 == pieces { b } else { from + width };
                total += integrate(g, from, to, spec)?;
            }
        }
    }
    total += hi * integrate_from(|v| f(hi * v), 1.0, spec)?;
    Ok(total)
}

/// Lévy copula of the compound vector with the given scores and stable
/// directing measure, evaluated by quadrature over the directing tail mass.
pub fn copula_from_scores(
    scores: &ScoreSurvivalSpec,
    directing: &StableDirecting,
    s1: f64,
    s2: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    ensure_positive("s1", s1)?;
    ensure_positive("s2", s2)?;
    let sigma = directing.stability();
    // score argument x / z(u), where z(u) is the directing jump with tail mass u
    let survival_scale = |x: f64, u: f64| x * (u / directing.scale()).powf(1.0 / sigma);

    let marginal_tail = |i: usize, x: f64| -> Result<f64> {
        let s = &scores.survivals[i];
        let mut breaks = [directing.tail(x)];
        integrate_split(|u| s(survival_scale(x, u)), &mut breaks, spec)
    };
    let mut thresholds = [0.0; 2];
    for (i, target) in [s1, s2].into_iter().enumerate() {
        // find x with U_i(x) = target; U_i is decreasing so the gap is increasing
        let gap = |x: f64| target - marginal_tail(i, x).unwrap_or(f64::NAN);
        thresholds[i] = solve_monotone_log(gap, 1.0, "score marginal tail inverse")?;
    }
    let [x1, x2] = thresholds;
    let [f1, f2] = &scores.survivals;
    let integrand =
        |u: f64| (scores.survival_copula)(f1(survival_scale(x1, u)), f2(survival_scale(x2, u)));
    let mut breaks = [directing.tail(x1), directing.tail(x2)];
    integrate_split(integrand, &mut breaks, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{CompoundModel, Margin};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn asym() -> AlphaClaytonParams {
        AlphaClaytonParams::new(0.5, 1.0, 10.0).unwrap()
    }

    #[test]
    fn independence_and_complete_dependence() {
        let inf = f64::INFINITY;
        assert_eq!(independence_copula(3.0, inf), 3.0);
        assert_eq!(independence_copula(3.0, 5.0), 0.0);
        assert_eq!(independence_copula(0.0, inf), 0.0);
        assert_eq!(complete_dependence_copula(3.0, 5.0), 3.0);
        assert_eq!(complete_dependence_copula(0.0, 2.0), 0.0);
        assert_eq!(complete_dependence_copula(4.0, inf), 4.0);
    }

    #[test]
    fn clayton_values() {
        assert!((clayton_copula(1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((clayton_copula(2.0, 3.0, 4.0).unwrap() - 2.4).abs() < 1e-14);
        assert_eq!(clayton_copula(2.0, 3.0, f64::INFINITY).unwrap(), 3.0);
        assert_eq!(clayton_copula(2.0, 0.0, 5.0).unwrap(), 0.0);
        assert!(clayton_copula(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_clayton_special_values() {
        let p = AlphaClaytonParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((p.value(1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        let q = asym();
        assert_eq!(q.value(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(q.value(2.0, f64::INFINITY).unwrap(), 2.0);
        assert_eq!(q.value(f64::INFINITY, 0.7).unwrap(), 0.7);
        assert!(q.value(-1.0, 1.0).is_err());
        assert!(q.value(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn reduces_to_clayton_for_unit_shapes() {
        let p = AlphaClaytonParams::new(0.5, 1.0, 1.0).unwrap();
        let grid = [0.01, 0.3, 1.0, 4.0, 150.0];
        for s1 in grid {
            for s2 in grid {
                let want = clayton_copula(2.0, s1, s2).unwrap();
                assert!((p.value(s1, s2).unwrap() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn relabelling_symmetry() {
        let p = asym();
        for (s1, s2) in [(0.2, 3.0), (1.0, 1.0), (7.0, 0.01)] {
            let a = p.value(s1, s2).unwrap();
            let b = p.swapped().value(s2, s1).unwrap();
            assert!((a - b).abs() < 1e-14 * a.max(1.0));
        }
    }

    #[test]
    fn partials_match_central_differences() {
        let p = asym();
        let h = 1e-5;
        let fd1 = (p.value(1.0 + h, 1.0).unwrap() - p.value(1.0 - h, 1.0).unwrap()) / (2.0 * h);
        assert!((fd1 - p.d1(1.0, 1.0).unwrap()).abs() < 1e-6);
        let fd2 = (p.value(1.0, 1.0 + h).unwrap() - p.value(1.0, 1.0 - h).unwrap()) / (2.0 * h);
        assert!((fd2 - p.d2(1.0, 1.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn partial_limits() {
        let p = asym();
        assert!(p.d1(1.0, 1e12).unwrap() > 1.0 - 1e-6);
        assert!(p.d1(1.0, 1e-12).unwrap() < 1e-6);
        assert!(p.d2(1e12, 1.0).unwrap() > 1.0 - 1e-6);
        assert!(p.d2(1e-12, 1.0).unwrap() < 1e-6);
        assert!(p.d1(0.0, 1.0).is_err());
        let c = p.d1_complement(0.4, 2.0).unwrap();
        assert!((c + p.d1(0.4, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((p.ln_d1_complement(0.4, 2.0).unwrap() - c.ln()).abs() < 1e-12);
    }

    #[test]
    fn density_examples() {
        let p = AlphaClaytonParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((p.density(1.0, 1.0).unwrap() - 0.25).abs() < 1e-14);
        let clayton = |s1: f64, s2: f64| 2.0 * (s1 * s2).powi(-2) * (1.0 / s1 + 1.0 / s2).powi(-3);
        assert!(rel(p.density(0.3, 2.0).unwrap(), clayton(0.3, 2.0)) < 1e-12);
        let q = asym();
        let h = 1e-5;
        for (s1, s2) in [(0.5, 0.8), (2.0, 1.3), (0.1, 5.0)] {
            let fd = (q.d1(s1, s2 + h).unwrap() - q.d1(s1, s2 - h).unwrap()) / (2.0 * h);
            assert!((fd - q.density(s1, s2).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn density_is_consistent_with_the_joint_intensity() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 10.0, 5.0).unwrap();
        let c = m.copula_params();
        for (y1, y2) in [(0.1, 0.2), (1.0, 3.0), (5.0, 0.4)] {
            let want = m.levy_intensity(y1, y2).unwrap();
            let got = c
                .density(m.marginal_tail(Margin::First, y1).unwrap(), m.marginal_tail(Margin::Second, y2).unwrap())
                .unwrap()
                * m.marginal_intensity(Margin::First, y1).unwrap()
                * m.marginal_intensity(Margin::Second, y2).unwrap();
            assert!(rel(got, want) < 1e-8);
        }
    }

    #[test]
    fn conditional_inverse_round_trip_and_limits() {
        let p = asym();
        for s1 in [0.01, 1.0, 30.0] {
            for q in [1e-6, 0.2, 0.5, 0.9, 1.0 - 1e-7] {
                let s2 = p.conditional_inverse(s1, q).unwrap();
                assert!((p.d1(s1, s2).unwrap() - q).abs() < 1e-9, "s1={s1} q={q}");
                let s1b = p.conditional_inverse_second(s1, q).unwrap();
                assert!((p.d2(s1b, s1).unwrap() - q).abs() < 1e-9);
            }
        }
        let clayton = AlphaClaytonParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(clayton.conditional_inverse(1.0, 1.0 - 1e-9).unwrap() > 1e6);
        let mut last = 0.0;
        for q in [0.9, 0.99, 0.999, 1.0 - 1e-6, 1.0 - 1e-9] {
            let s2 = p.conditional_inverse(1.0, q).unwrap();
            assert!(s2 > last);
            last = s2;
        }
        assert!(p.conditional_inverse(1.0, 1.0).is_err());
        assert!(p.conditional_inverse(1.0, 0.0).is_err());
    }

    #[test]
    fn conditional_inverse_matches_clayton_closed_form() {
        // unit shapes and dependence 1: d1 = (s2/(s1+s2))², so s2 = s1√q/(1-√q)
        let p = AlphaClaytonParams::new(1.0, 1.0, 1.0).unwrap();
        for (s1, q) in [(0.5f64, 0.3f64), (2.0, 0.75), (10.0, 0.01)] {
            let r: f64 = q.sqrt();
            let want = s1 * r / (1.0 - r);
            assert!(rel(p.conditional_inverse(s1, q).unwrap(), want) < 1e-9);
        }
    }

    #[test]
    fn limits_of_the_dependence_parameter() {
        let r = limit_checks(1.0, 10.0).unwrap();
        assert!(r.comonotone_gap < 0.05, "{r:?}");
        assert!(r.independence_gap < 0.05 * 0.5, "{r:?}");
        let c = limit_checks(1.0, 1.0).unwrap();
        let mut gap: f64 = 0.0;
        for s1 in LIMIT_GRID {
            for s2 in LIMIT_GRID {
                gap = gap.max((clayton_copula(100.0, s1, s2).unwrap() - s1.min(s2)).abs());
            }
        }
        assert!((c.comonotone_gap - gap).abs() < 1e-10);
    }

    #[test]
    fn copula_from_independent_gamma_scores_matches_closed_form() {
        let scores = [GammaScore::new(1.0, 2.0).unwrap(), GammaScore::new(10.0, 5.0).unwrap()];
        let spec = ScoreSurvivalSpec::independent_gamma(scores);
        spec.validate().unwrap();
        let directing = StableDirecting::new(0.5, 1.0).unwrap();
        let quad = QuadratureSpec::new(1e-13, 1e-10, 4000).unwrap();
        let closed = AlphaClaytonParams::new(0.5, 1.0, 10.0).unwrap();
        for (s1, s2) in [(0.5, 2.0), (1.0, 1.0)] {
            let got = copula_from_scores(&spec, &directing, s1, s2, &quad).unwrap();
            let want = closed.value(s1, s2).unwrap();
            assert!(rel(got, want) < 1e-5, "({s1},{s2}) {got} vs {want}");
        }
    }

    #[test]
    fn copula_from_scores_symmetry_and_margins() {
        let w = GammaScore::new(2.0, 1.0).unwrap();
        let spec = ScoreSurvivalSpec::new(
            Box::new(|u: f64, v: f64| u.min(v)),
            [Box::new(move |x| w.survival(x)), Box::new(move |x| w.survival(x))],
        );
        let directing = StableDirecting::new(0.5, 1.0).unwrap();
        let quad = QuadratureSpec::new(1e-13, 1e-10, 4000).unwrap();
        let a = copula_from_scores(&spec, &directing, 0.4, 1.7, &quad).unwrap();
        let b = copula_from_scores(&spec, &directing, 1.7, 0.4, &quad).unwrap();
        assert!(rel(a, b) < 1e-8);
        let ind = ScoreSurvivalSpec::independent_gamma([w, GammaScore::new(3.0, 2.0).unwrap()]);
        let m = copula_from_scores(&ind, &directing, 0.8, 1e8, &quad).unwrap();
        assert!(rel(m, 0.8) < 1e-4);
    }

    fn params() -> impl Strategy<Value = AlphaClaytonParams> {
        (0.1f64..5.0, 0.1f64..20.0, 0.1f64..20.0)
            .prop_map(|(s, a, b)| AlphaClaytonParams::new(s, a, b).unwrap())
    }

    proptest! {
        #[test]
        fn grounded_and_marginal(p in params(), s in 1e-4f64..1e4) {
            prop_assert_eq!(p.value(0.0, s).unwrap(), 0.0);
            prop_assert_eq!(p.value(s, 0.0).unwrap(), 0.0);
            prop_assert_eq!(p.value(s, f64::INFINITY).unwrap(), s);
            prop_assert_eq!(p.value(f64::INFINITY, s).unwrap(), s);
        }

        #[test]
        fn bounded_by_complete_dependence(p in params(), s1 in 1e-3f64..1e3, s2 in 1e-3f64..1e3) {
            let c = p.value(s1, s2).unwrap();
            prop_assert!(c >= 0.0 && c <= s1.min(s2) * (1.0 + 1e-12));
        }

        #[test]
        fn two_increasing(p in params(), a1 in 0.01f64..10.0, a2 in 0.01f64..10.0, d1 in 0.0f64..5.0, d2 in 0.0f64..5.0) {
            let (b1, b2) = (a1 + d1, a2 + d2);
            let vol = p.value(b1, b2).unwrap() - p.value(a1, b2).unwrap() - p.value(b1, a2).unwrap() + p.value(a1, a2).unwrap();
            prop_assert!(vol >= -1e-12, "volume {}", vol);
        }

        #[test]
        fn partials_are_monotone_cdfs(p in params(), s1 in 1e-3f64..1e3, s2 in 1e-3f64..1e3, f in 1.0f64..10.0) {
            let (a, b) = (p.d1(s1, s2).unwrap(), p.d1(s1, s2 * f).unwrap());
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && b >= a);
            let (c, d) = (p.d2(s1, s2).unwrap(), p.d2(s1 * f, s2).unwrap());
            prop_assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&d) && d >= c);
        }

        #[test]
        fn density_positive_and_mixed_difference(p in params(), s1 in 0.05f64..20.0, s2 in 0.05f64..20.0) {
            let dens = p.density(s1, s2).unwrap();
            prop_assert!(dens > 0.0);
            let h = 1e-4 * s1.min(s2);
            let mixed = (p.value(s1 + h, s2 + h).unwrap() - p.value(s1 - h, s2 + h).unwrap()
                - p.value(s1 + h, s2 - h).unwrap() + p.value(s1 - h, s2 - h).unwrap()) / (4.0 * h * h);
            prop_assert!((mixed - dens).abs() < 1e-5 * dens.max(1.0) + 1e-5, "mixed {} dens {}", mixed, dens);
        }

        #[test]
        fn clayton_reduction(sigma in prop::sample::select(vec![0.25, 0.5, 1.0, 2.0, 4.0]), s1 in 1e-3f64..1e3, s2 in 1e-3f64..1e3) {
            let p = AlphaClaytonParams::new(sigma, 1.0, 1.0).unwrap();
            let want = clayton_copula(1.0 / sigma, s1, s2).unwrap();
            prop_assert!((p.value(s1, s2).unwrap() - want).abs() < 1e-10 * want.max(1.0));
        }
    }
}
