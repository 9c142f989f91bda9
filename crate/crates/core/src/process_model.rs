//! Bivariate compound subordinators built from a directing Lévy measure and
//! independent Gamma scores: intensities, tail integrals and moments.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Error, Result};
use crate::levy_copula::AlphaClaytonParams;
use crate::numerics::special::{e1, inc_beta_pair, ln_gamma, ln_gamma_ratio, ln_inc_gamma_pair};
use crate::numerics::{integrate, integrate_from, solve_monotone_log, QuadratureSpec};

/// Coordinate of the bivariate process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Margin {
    First,
    Second,
}

impl Margin {
    pub const BOTH: [Margin; 2] = [Margin::First, Margin::Second];

    pub fn index(self) -> usize {
        match self {
            Margin::First => 0,
            Margin::Second => 1,
        }
    }

    pub fn other(self) -> Margin {
        match self {
            Margin::First => Margin::Second,
            Margin::Second => Margin::First,
        }
    }
}

impl TryFrom<u8> for Margin {
    type Error = Error;

    /// One-based dimension number, as used on the command line.
    fn try_from(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Margin::First),
            2 => Ok(Margin::Second),
            _ => Err(domain(format!("dimension must be 1 or 2, got {i}"))),
        }
    }
}

/// Gamma distribution with shape and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaScore {
    shape: f64,
    rate: f64,
}

impl GammaScore {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        ensure_positive("gamma shape", shape)?;
        ensure_positive("gamma rate", rate)?;
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn second_moment(&self) -> f64 {
        self.shape * (self.shape + 1.0) / (self.rate * self.rate)
    }

    /// E[W^p] for p > -shape.
    pub fn power_moment(&self, p: f64) -> f64 {
        (ln_gamma_ratio(self.shape, p) - p * self.rate.ln()).exp()
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// P(W > x).
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x.is_infinite() {
            return 0.0;
        }
        ln_inc_gamma_pair(self.shape, self.rate * x).1.exp()
    }
}

/// σ-stable directing intensity `σ K z^{-σ-1}` with tail integral `K z^{-σ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableDirecting {
    stability: f64,
    scale: f64,
}

impl StableDirecting {
    pub fn new(stability: f64, scale: f64) -> Result<Self> {
        if !(stability > 0.0 && stability < 1.0) {
            return Err(domain(format!("stability index must lie in (0,1), got {stability}")));
        }
        ensure_positive("stable scale", scale)?;
        Ok(Self { stability, scale })
    }

    pub fn stability(&self) -> f64 {
        self.stability
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Gamma-process directing intensity `a z^{-1} e^{-bz}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaDirecting {
    intensity: f64,
    rate: f64,
}

impl GammaDirecting {
    pub fn new(intensity: f64, rate: f64) -> Result<Self> {
        ensure_positive("gamma directing intensity", intensity)?;
        ensure_positive("gamma directing rate", rate)?;
        Ok(Self { intensity, rate })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Derivative of the unit-time Laplace exponent at zero.
    pub fn exponent_slope(&self) -> f64 {
        self.intensity / self.rate
    }

    /// Minus the second derivative of the unit-time Laplace exponent at zero.
    pub fn exponent_curvature(&self) -> f64 {
        self.intensity / (self.rate * self.rate)
    }
}

/// A univariate Lévy measure on (0, ∞) driving a compound vector.
pub trait DirectingMeasure {
    fn density(&self, z: f64) -> f64;
    /// Mass of `[z, ∞)`.
    fn tail(&self, z: f64) -> f64;
    /// Generalised inverse of [`DirectingMeasure::tail`].
    fn inverse_tail(&self, u: f64) -> Result<f64>;
}

impl DirectingMeasure for StableDirecting {
    fn density(&self, z: f64) -> f64 {
        self.stability * self.scale * z.powf(-self.stability - 1.0)
    }

    fn tail(&self, z: f64) -> f64 {
        self.scale * z.powf(-self.stability)
    }

    fn inverse_tail(&self, u: f64) -> Result<f64> {
        ensure_positive("tail mass", u)?;
        Ok((u / self.scale).powf(-1.0 / self.stability))
    }
}

impl DirectingMeasure for GammaDirecting {
    fn density(&self, z: f64) -> f64 {
        self.intensity * (-self.rate * z).exp() / z
    }

    fn tail(&self, z: f64) -> f64 {
        self.intensity * e1(self.rate * z)
    }

    fn inverse_tail(&self, u: f64) -> Result<f64> {
        ensure_positive("tail mass", u)?;
        let target = u / self.intensity;
        // E1(x) ~ -ln x for small x and ~ e^{-x}/x for large x
        let guess = if target > 1.0 {
            (-target).exp()
        } else {
            (1.0 / target).ln().max(0.1)
        };
        let x = solve_monotone_log(|x| target - e1(x), guess, "gamma directing inverse tail")?;
        Ok(x / self.rate)
    }
}

/// Declares whether a score family has a finite mean in every coordinate.
pub trait ScoreFamily {
    fn has_finite_mean(&self) -> bool;
}

impl ScoreFamily for GammaScore {
    fn has_finite_mean(&self) -> bool {
        true
    }
}

/// Sufficient condition for a compound vector to be well defined: every
/// marginal score has finite mean.
pub fn well_posed(scores: &[&dyn ScoreFamily]) -> bool {
    scores.iter().all(|s| s.has_finite_mean())
}

/// Stable directing measure with independent Gamma scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundModel {
    directing: StableDirecting,
    scores: [GammaScore; 2],
}

impl CompoundModel {
    pub fn new(directing: StableDirecting, scores: [GammaScore; 2]) -> Self {
        Self { directing, scores }
    }

    /// Builds from `(σ, K, shape₁, rate₁, shape₂, rate₂)`.
    pub fn from_params(
        stability: f64,
        scale: f64,
        shape1: f64,
        rate1: f64,
        shape2: f64,
        rate2: f64,
    ) -> Result<Self> {
        Ok(Self::new(
            StableDirecting::new(stability, scale)?,
            [GammaScore::new(shape1, rate1)?, GammaScore::new(shape2, rate2)?],
        ))
    }

    pub fn directing(&self) -> &StableDirecting {
        &self.directing
    }

    pub fn score(&self, m: Margin) -> &GammaScore {
        &self.scores[m.index()]
    }

    pub fn scores(&self) -> &[GammaScore; 2] {
        &self.scores
    }

    pub fn stability(&self) -> f64 {
        self.directing.stability
    }

    /// Dependence parameters of the Lévy copula linking the two margins.
    pub fn copula_params(&self) -> AlphaClaytonParams {
        AlphaClaytonParams::new(self.stability(), self.scores[0].shape, self.scores[1].shape)
            .expect("model invariants imply valid copula parameters")
    }

    fn ln_marginal_scale(&self, m: Margin) -> f64 {
        let sigma = self.stability();
        let w = self.score(m);
        self.directing.scale.ln() - sigma * w.rate.ln() + ln_gamma_ratio(w.shape, sigma)
    }

    /// Proportionality constant of the stable marginal tail `U_i(y) = K_i y^{-σ}`.
    pub fn marginal_scale(&self, m: Margin) -> f64 {
        self.ln_marginal_scale(m).exp()
    }

    pub fn ln_levy_intensity(&self, s1: f64, s2: f64) -> Result<f64> {
        ensure_positive("s1", s1)?;
        ensure_positive("s2", s2)?;
        let sigma = self.stability();
        let [w1, w2] = self.scores;
        let total = w1.shape + w2.shape + sigma;
        // sum in log space so huge rates or arguments cannot overflow
        let (l1, l2) = (w1.rate.ln() + s1.ln(), w2.rate.ln() + s2.ln());
        let ln_mix = l1.max(l2) + (-(l1 - l2).abs()).exp().ln_1p();
        Ok(sigma.ln() + self.directing.scale.ln()
            + w1.shape * w1.rate.ln()
            + w2.shape * w2.rate.ln()
            + ln_gamma(total)
            - ln_gamma(w1.shape)
            - ln_gamma(w2.shape)
            + (w1.shape - 1.0) * s1.ln()
            + (w2.shape - 1.0) * s2.ln()
            - total * ln_mix)
    }

    /// Joint Lévy density of the two coordinates.
    pub fn levy_intensity(&self, s1: f64, s2: f64) -> Result<f64> {
        self.ln_levy_intensity(s1, s2).map(f64::exp)
    }

    pub fn marginal_intensity(&self, m: Margin, s: f64) -> Result<f64> {
        ensure_positive("jump size", s)?;
        let sigma = self.stability();
        Ok((sigma.ln() + self.ln_marginal_scale(m) - (sigma + 1.0) * s.ln()).exp())
    }

    pub fn marginal_tail(&self, m: Margin, y: f64) -> Result<f64> {
        ensure_positive("jump size", y)?;
        Ok((self.ln_marginal_scale(m) - self.stability() * y.ln()).exp())
    }

    pub fn marginal_tail_inverse(&self, m: Margin, u: f64) -> Result<f64> {
        ensure_positive("tail mass", u)?;
        Ok(((self.ln_marginal_scale(m) - u.ln()) / self.stability()).exp())
    }

    /// Mass of `[y1, ∞) × [y2, ∞)` under the joint intensity.
    pub fn bivariate_tail(&self, y1: f64, y2: f64) -> Result<f64> {
        ensure_positive("y1", y1)?;
        ensure_positive("y2", y2)?;
        let sigma = self.stability();
        let [w1, w2] = self.scores;
        let (a, b) = (w1.rate * y1, w2.rate * y2);
        let (x1, x2) = if a >= b {
            let r = b / a;
            (1.0 / (1.0 + r), r / (1.0 + r))
        } else {
            let r = a / b;
            (r / (1.0 + r), 1.0 / (1.0 + r))
        };
        let ln_k = self.directing.scale.ln();
        let first = (ln_k + ln_gamma_ratio(w1.shape, sigma) - sigma * a.ln()).exp()
            * inc_beta_pair(x1, x2, w1.shape + sigma, w2.shape).0;
        let second = (ln_k + ln_gamma_ratio(w2.shape, sigma) - sigma * b.ln()).exp()
            * inc_beta_pair(x2, x1, w2.shape + sigma, w1.shape).0;
        Ok(first + second)
    }

    fn check_fractional_order(&self, p: f64) -> Result<()> {
        let sigma = self.stability();
        if !(p > 0.0 && p < sigma) {
            return Err(domain(format!(
                "fractional order must lie in (0, {sigma}) for this model, got {p}"
            )));
        }
        Ok(())
    }

    /// `t K E[W_i^σ]`: coefficient of `λ^σ` in the Laplace exponent of the
    /// i-th coordinate, taking the directing Laplace exponent as `t K λ^σ`.
    fn exponent_coefficient(&self, m: Margin, t: f64) -> f64 {
        t * self.directing.scale * self.score(m).power_moment(self.stability())
    }

    /// E[Y_i(t)^p] in closed form, for `0 < p < σ`.
    pub fn fractional_moment_stable(&self, m: Margin, t: f64, p: f64) -> Result<f64> {
        ensure_positive("time", t)?;
        self.check_fractional_order(p)?;
        let sigma = self.stability();
        let c = self.exponent_coefficient(m, t);
        Ok((p / sigma * c.ln() + ln_gamma(1.0 - p / sigma) - ln_gamma(1.0 - p)).exp())
    }

    /// E[Y_i(t)^p] by quadrature of the Laplace-exponent integral
    /// `p/Γ(1-p) ∫ (1 - e^{-c u^σ}) u^{-p-1} du`.
    pub fn fractional_moment_integral(
        &self,
        m: Margin,
        t: f64,
        p: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        ensure_positive("time", t)?;
        self.check_fractional_order(p)?;
        let sigma = self.stability();
        let c = self.exponent_coefficient(m, t);
        // On (0,1) the leading term c u^σ is integrated exactly; the
        // remainder 1 - e^{-x} - x decays like x² and is integrable.
        let remainder = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let x = c * u.powf(sigma);
            let r = if x < 1e-3 {
                x * x * (-0.5 + x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
            } else {
                -(-x).exp_m1() - x
            };
            r * u.powf(-p - 1.0)
        };
        let head = c / (sigma - p) + integrate(remainder, 0.0, 1.0, spec)?;
        let tail = 1.0 / p
            - integrate_from(|u| (-c * u.powf(sigma)).exp() * u.powf(-p - 1.0), 1.0, spec)?;
        Ok(p * (head + tail) / ln_gamma(1.0 - p).exp())
    }
}

/// Gamma directing measure with independent Gamma scores, for which means
/// and second moments are finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentModel {
    directing: GammaDirecting,
    scores: [GammaScore; 2],
}

impl MomentModel {
    pub fn new(directing: GammaDirecting, scores: [GammaScore; 2]) -> Self {
        Self { directing, scores }
    }

    pub fn directing(&self) -> &GammaDirecting {
        &self.directing
    }

    pub fn score(&self, m: Margin) -> &GammaScore {
        &self.scores[m.index()]
    }

    pub fn scores(&self) -> &[GammaScore; 2] {
        &self.scores
    }

    pub fn mean(&self, m: Margin, t: f64) -> Result<f64> {
        ensure_positive("time", t)?;
        Ok(t * self.directing.exponent_slope() * self.score(m).mean())
    }

    pub fn variance(&self, m: Margin, t: f64) -> Result<f64> {
        ensure_positive("time", t)?;
        Ok(t * self.directing.exponent_curvature() * self.score(m).second_moment())
    }

    /// Covariance of the two coordinates at time `t`.
    pub fn covariance(&self, t: f64) -> Result<f64> {
        ensure_positive("time", t)?;
        Ok(t * self.directing.exponent_curvature() * self.scores[0].mean() * self.scores[1].mean())
    }

    /// Correlation of the two coordinates; does not depend on time.
    pub fn correlation(&self) -> f64 {
        let [w1, w2] = self.scores;
        (w1.shape * w2.shape / ((w1.shape + 1.0) * (w2.shape + 1.0))).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_semi_infinite;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit_model() -> CompoundModel {
        CompoundModel::from_params(0.5, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn asym_model() -> CompoundModel {
        CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 10.0, 5.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn constructors_validate() {
        assert!(GammaScore::new(0.0, 1.0).is_err());
        assert!(GammaScore::new(1.0, -1.0).is_err());
        assert!(StableDirecting::new(1.0, 1.0).is_err());
        assert!(StableDirecting::new(0.5, 0.0).is_err());
        assert!(GammaDirecting::new(1.0, 0.0).is_err());
        assert!(Margin::try_from(3).is_err());
        assert_eq!(Margin::try_from(2).unwrap(), Margin::Second);
    }

    #[test]
    fn intensity_at_unit_point() {
        // Γ(5/2) = 3√π/4
        let want = 0.5 * 0.75 * PI.sqrt() * 2f64.powf(-2.5);
        let got = unit_model().levy_intensity(1.0, 1.0).unwrap();
        assert!(rel(got, want) < 1e-13, "{got} vs {want}");
        assert!((got - 0.11749).abs() < 1e-5);
    }

    #[test]
    fn intensity_vanishes_for_large_jumps() {
        let m = asym_model();
        assert!(m.levy_intensity(1e8, 0.5).unwrap() < 1e-30);
        assert!(m.levy_intensity(0.0, 1.0).is_err());
    }

    #[test]
    fn intensity_matches_mixture_over_directing_measure() {
        let m = asym_model();
        let (s1, s2) = (0.3, 0.7);
        let d = *m.directing();
        let [w1, w2] = *m.scores();
        let integrand = |z: f64| {
            if z == 0.0 {
                return 0.0;
            }
            z.powi(-2) * w1.density(s1 / z) * w2.density(s2 / z) * d.density(z)
        };
        let spec = QuadratureSpec::new(1e-14, 1e-11, 4000).unwrap();
        let want = integrate_semi_infinite(integrand, &spec).unwrap();
        let got = m.levy_intensity(s1, s2).unwrap();
        assert!(rel(got, want) < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn marginal_intensity_is_the_projection_of_the_joint() {
        let m = unit_model();
        let spec = QuadratureSpec::new(1e-13, 1e-11, 4000).unwrap();
        let proj =
            integrate_semi_infinite(|s2| if s2 == 0.0 { 0.0 } else { m.levy_intensity(1.0, s2).unwrap() }, &spec)
                .unwrap();
        let got = m.marginal_intensity(Margin::First, 1.0).unwrap();
        assert!(rel(got, proj) < 1e-8);
        assert!((got - 0.44311).abs() < 1e-5);
    }

    #[test]
    fn marginal_scale_example() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        let want = 2f64.powf(-0.5) * 0.5 * PI.sqrt();
        assert!(rel(m.marginal_scale(Margin::First), want) < 1e-13);
        assert!((want - 0.62666).abs() < 1e-5);
    }

    #[test]
    fn marginal_tail_matches_integrated_intensity() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 3.0, 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let want =
            integrate_from(|s| m.marginal_intensity(Margin::First, s).unwrap(), 1.0, &spec).unwrap();
        let got = m.marginal_tail(Margin::First, 1.0).unwrap();
        assert!(rel(got, want) < 1e-9);
        assert!(m.marginal_tail(Margin::First, 1e300).unwrap() < 1e-140);
    }

    #[test]
    fn marginal_tail_inverse_matches_bisection() {
        let m = unit_model();
        let got = m.marginal_tail_inverse(Margin::First, 1.0).unwrap();
        let (mut lo, mut hi) = (1e-6_f64, 1e6_f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if m.marginal_tail(Margin::First, mid).unwrap() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(rel(got, lo) < 1e-12);
        assert!(rel(got, PI / 4.0) < 1e-13);
        assert!(m.marginal_tail_inverse(Margin::First, 1e12).unwrap() < 1e-20);
        assert!(m.marginal_tail_inverse(Margin::First, 0.0).is_err());
    }

    #[test]
    fn power_law_homogeneity() {
        let m = asym_model();
        for margin in Margin::BOTH {
            let r = m.marginal_intensity(margin, 2.6).unwrap() / m.marginal_intensity(margin, 1.3).unwrap();
            assert!(rel(r, 2f64.powf(-1.5)) < 1e-13);
            let a = m.marginal_tail(margin, 0.2).unwrap() * 0.2f64.sqrt();
            let b = m.marginal_tail(margin, 50.0).unwrap() * 50f64.sqrt();
            assert!(rel(a, b) < 1e-13);
        }
    }

    #[test]
    fn bivariate_tail_marginal_limit_and_symmetry() {
        let m = asym_model();
        for y in [0.01, 1.0, 30.0] {
            let lim = m.bivariate_tail(y, 1e-12).unwrap();
            assert!(rel(lim, m.marginal_tail(Margin::First, y).unwrap()) < 1e-6);
            let lim2 = m.bivariate_tail(1e-12, y).unwrap();
            assert!(rel(lim2, m.marginal_tail(Margin::Second, y).unwrap()) < 1e-6);
        }
        let s = CompoundModel::from_params(0.3, 2.0, 2.5, 1.5, 2.5, 1.5).unwrap();
        let (a, b) = (s.bivariate_tail(0.4, 3.0).unwrap(), s.bivariate_tail(3.0, 0.4).unwrap());
        assert!(rel(a, b) < 1e-13);
    }

    #[test]
    fn bivariate_tail_matches_nested_quadrature() {
        let m = unit_model();
        let spec = QuadratureSpec::new(1e-13, 1e-10, 4000).unwrap();
        // the inner integrand lives on the scale of s1, so integrate in s2 = 1 + s1·x
        let inner = |s1: f64| {
            s1 * integrate_semi_infinite(|x| m.levy_intensity(s1, 1.0 + s1 * x).unwrap(), &spec).unwrap()
        };
        let want = integrate_from(inner, 1.0, &spec).unwrap();
        assert!(rel(m.bivariate_tail(1.0, 1.0).unwrap(), want) < 1e-6);
    }

    #[test]
    fn well_posedness() {
        struct Heavy;
        impl ScoreFamily for Heavy {
            fn has_finite_mean(&self) -> bool {
                false
            }
        }
        let a = GammaScore::new(1.0, 2.0).unwrap();
        let b = GammaScore::new(10.0, 5.0).unwrap();
        assert!(well_posed(&[&a, &b]));
        let c = GammaScore::new(0.01, 0.01).unwrap();
        let d = GammaScore::new(100.0, 1.0).unwrap();
        assert!(well_posed(&[&c, &d]));
        assert!(!well_posed(&[&a, &Heavy]));
    }

    #[test]
    fn gamma_directing_moments() {
        let unit = MomentModel::new(
            GammaDirecting::new(1.0, 1.0).unwrap(),
            [GammaScore::new(1.0, 2.0).unwrap(), GammaScore::new(10.0, 5.0).unwrap()],
        );
        assert!(rel(unit.mean(Margin::First, 1.0).unwrap(), 0.5) < 1e-15);
        let mm = MomentModel::new(GammaDirecting::new(2.0, 4.0).unwrap(), *unit.scores());
        assert!(rel(mm.mean(Margin::Second, 3.0).unwrap(), 3.0) < 1e-15);
        assert!(rel(mm.mean(Margin::First, 2.0).unwrap(), 2.0 * mm.mean(Margin::First, 1.0).unwrap()) < 1e-15);
        assert!(rel(mm.covariance(6.0).unwrap(), 2.0 * mm.covariance(3.0).unwrap()) < 1e-15);
        assert!((unit.correlation() - (10.0f64 / 22.0).sqrt()).abs() < 1e-15);
        assert!((unit.correlation() - 0.67420).abs() < 1e-5);
        let v1 = mm.variance(Margin::First, 1.0).unwrap();
        let v2 = mm.variance(Margin::Second, 1.0).unwrap();
        assert!(rel(mm.covariance(1.0).unwrap() / (v1 * v2).sqrt(), mm.correlation()) < 1e-14);
        assert!(mm.mean(Margin::First, 0.0).is_err());
    }

    #[test]
    fn correlation_tends_to_one_for_concentrated_scores() {
        let big = GammaScore::new(1e8, 1e8).unwrap();
        let mm = MomentModel::new(GammaDirecting::new(1.0, 1.0).unwrap(), [big, big]);
        assert!(1.0 - mm.correlation() < 1e-7);
    }

    #[test]
    fn gamma_directing_inverse_tail_round_trip() {
        let d = GammaDirecting::new(2.0, 3.0).unwrap();
        for u in [1e-6, 0.01, 1.0, 10.0, 60.0] {
            let z = d.inverse_tail(u).unwrap();
            assert!(rel(d.tail(z), u) < 1e-10, "u={u} z={z}");
        }
    }

    #[test]
    fn fractional_moment_examples() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        let v = m.fractional_moment_stable(Margin::First, 1.0, 0.49).unwrap();
        assert!((v - 17.99).abs() < 0.05, "{v}");
        let spec = QuadratureSpec::default();
        let w = m.fractional_moment_integral(Margin::First, 1.0, 0.49, &spec).unwrap();
        assert!(rel(v, w) < 1e-6);
        let q = m.fractional_moment_integral(Margin::First, 1.0, 0.25, &spec).unwrap();
        assert!(rel(q, m.fractional_moment_stable(Margin::First, 1.0, 0.25).unwrap()) < 1e-6);
        assert!(m.fractional_moment_stable(Margin::First, 1.0, 0.5).is_err());
        assert!(m.fractional_moment_stable(Margin::First, 1.0, 0.0).is_err());
        let small = m.fractional_moment_integral(Margin::First, 1.0, 1e-6, &spec).unwrap();
        assert!((small - 1.0).abs() < 1e-4);
    }

    #[test]
    fn degenerate_scores_give_stable_moment() {
        // shape = rate → ∞ concentrates the score at 1
        let m = CompoundModel::from_params(0.5, 1.5, 1e9, 1e9, 1.0, 1.0).unwrap();
        let (t, p) = (2.0, 0.3);
        let want = ((t * 1.5f64).powf(p / 0.5) * ln_gamma(1.0 - p / 0.5).exp()) / ln_gamma(1.0 - p).exp();
        let got = m.fractional_moment_stable(Margin::First, t, p).unwrap();
        assert!(rel(got, want) < 1e-7);
    }

    #[test]
    fn fractional_moment_second_dimension_dominates() {
        let m = asym_model();
        let a = m.fractional_moment_stable(Margin::First, 1.0, 0.49).unwrap();
        let b = m.fractional_moment_stable(Margin::Second, 1.0, 0.49).unwrap();
        assert!(b > a);
    }

    proptest! {
        #[test]
        fn tail_inverse_round_trip(log_u in -4.0f64..4.0, sigma in 0.05f64..0.95, shape in 0.1f64..50.0, rate in 0.1f64..20.0) {
            let m = CompoundModel::from_params(sigma, 1.3, shape, rate, 2.0, 1.0).unwrap();
            let u = 10f64.powf(log_u);
            let y = m.marginal_tail_inverse(Margin::First, u).unwrap();
            prop_assert!(rel(m.marginal_tail(Margin::First, y).unwrap(), u) < 1e-10);
        }

        #[test]
        fn fractional_forms_agree(t in 0.1f64..5.0, frac in 0.05f64..0.95) {
            let m = asym_model();
            let p = frac * m.stability();
            let a = m.fractional_moment_stable(Margin::Second, t, p).unwrap();
            let b = m.fractional_moment_integral(Margin::Second, t, p, &QuadratureSpec::default()).unwrap();
            prop_assert!(rel(a, b) < 1e-6, "a={} b={}", a, b);
        }

        #[test]
        fn fractional_moment_increases_in_time(t in 0.1f64..5.0, dt in 0.01f64..2.0) {
            let m = asym_model();
            prop_assert!(m.fractional_moment_stable(Margin::First, t + dt, 0.3).unwrap()
                > m.fractional_moment_stable(Margin::First, t, 0.3).unwrap());
        }

        #[test]
        fn correlation_ignores_directing_and_time(s1 in 0.1f64..30.0, s2 in 0.1f64..30.0) {
            let scores = [GammaScore::new(s1, 1.0).unwrap(), GammaScore::new(s2, 3.0).unwrap()];
            let mut seen = Vec::new();
            for (t, a, b) in [(1.0, 1.0, 1.0), (3.0, 2.0, 4.0), (0.2, 7.0, 0.5)] {
                let mm = MomentModel::new(GammaDirecting::new(a, b).unwrap(), scores);
                let c = mm.covariance(t).unwrap()
                    / (mm.variance(Margin::First, t).unwrap() * mm.variance(Margin::Second, t).unwrap()).sqrt();
                prop_assert!(c > 0.0 && c <= 1.0);
                seen.push(c);
            }
            prop_assert!((seen[0] - seen[1]).abs() < 1e-12 && (seen[0] - seen[2]).abs() < 1e-12);
        }
    }
}
