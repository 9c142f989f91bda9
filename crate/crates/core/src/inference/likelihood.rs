use crate::error::{domain, ensure_positive, Error, Result};
use crate::simulation::JumpKind;
use crate::inference::{MarginalFamily, ObservationSet};
use crate::levy_copula::AlphaClaytonParams;
use crate::process_model::{CompoundModel, Margin};

/// Parameters of a bivariate compound Poisson process: jump rates, jump-size
/// laws and the Lévy copula linking them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CppParams {
    pub rates: [f64; 2],
    pub marginals: [MarginalFamily; 2],
    pub copula: AlphaClaytonParams,
}

impl CppParams {
    /// Rate of joint jumps, `C(λ₁, λ₂)`.
    pub fn joint_rate(&self) -> Result<f64> {
        self.copula.value(self.rates[0], self.rates[1])
    }

    /// Total jump rate `λ₁⊥ + λ₂⊥ + λ∥ = λ₁ + λ₂ - C(λ₁, λ₂)`.
    pub fn total_rate(&self) -> Result<f64> {
        let joint = self.joint_rate()?;
        let only_first = self.rates[0] - joint;
        let only_second = self.rates[1] - joint;
        Ok(only_first + only_second + joint)
    }
}

fn finite_log(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{name} is not positive at an observation (log = {v})")))
    }
}

/// Log-likelihood of a continuously observed bivariate compound Poisson
/// process. Copula arguments are `λ_j S_j(w)` in each coordinate.
pub fn cpp_loglik(obs: &ObservationSet, p: &CppParams) -> Result<f64> {
    let [l1, l2] = p.rates;
    ensure_positive("rate 1", l1)?;
    ensure_positive("rate 2", l2)?;
    let [f1, f2] = &p.marginals;
    let cop = &p.copula;
    let mut sum = -p.total_rate()? * obs.horizon();
    for j in obs.jumps() {
        let term = match j.kind {
            JumpKind::OnlyFirst => {
                let u1 = l1 * f1.survival(j.w1);
                l1.ln() + finite_log("first density", f1.ln_pdf(j.w1))?
                    + finite_log("conditional complement", cop.ln_d1_complement(u1, l2)?)?
            }
            JumpKind::OnlySecond => {
                let u2 = l2 * f2.survival(j.w2);
                l2.ln() + finite_log("second density", f2.ln_pdf(j.w2))?
                    + finite_log("conditional complement", cop.ln_d2_complement(l1, u2)?)?
            }
            JumpKind::Parallel => {
                let u1 = l1 * f1.survival(j.w1);
                let u2 = l2 * f2.survival(j.w2);
                l1.ln() + l2.ln()
                    + finite_log("first density", f1.ln_pdf(j.w1))?
                    + finite_log("second density", f2.ln_pdf(j.w2))?
                    + finite_log("copula density", cop.ln_density(u1, u2)?)?
            }
        };
        sum += term;
    }
    Ok(sum)
}

fn check_thresholds(obs: &ObservationSet, eps1: f64, eps2: f64) -> Result<()> {
    ensure_positive("eps1", eps1)?;
    ensure_positive("eps2", eps2)?;
    for j in obs.jumps() {
        if !(j.w1 > eps1 && j.w2 > eps2) {
            return Err(Error::Precondition(format!(
                "observation ({}, {}) at time {} does not exceed thresholds ({eps1}, {eps2})",
                j.w1, j.w2, j.time
            )));
        }
    }
    Ok(())
}

/// Log-likelihood of jumps observed only when both coordinates exceed
/// their thresholds, using the joint intensity directly.
pub fn threshold_loglik(obs: &ObservationSet, model: &CompoundModel, eps1: f64, eps2: f64) -> Result<f64> {
    check_thresholds(obs, eps1, eps2)?;
    let mut sum = -model.bivariate_tail(eps1, eps2)? * obs.horizon();
    for j in obs.jumps() {
        sum += finite_log("joint intensity", model.ln_levy_intensity(j.w1, j.w2)?)?;
    }
    Ok(sum)
}

/// Same likelihood written as marginal intensities times the copula
/// density at the marginal tail masses.
pub fn threshold_loglik_sklar(obs: &ObservationSet, model: &CompoundModel, eps1: f64, eps2: f64) -> Result<f64> {
    check_thresholds(obs, eps1, eps2)?;
    let cop = model.copula_params();
    let mut sum = -model.bivariate_tail(eps1, eps2)? * obs.horizon();
    for j in obs.jumps() {
        let r1 = model.marginal_intensity(Margin::First, j.w1)?.ln();
        let r2 = model.marginal_intensity(Margin::Second, j.w2)?.ln();
        let u1 = model.marginal_tail(Margin::First, j.w1)?;
        let u2 = model.marginal_tail(Margin::Second, j.w2)?;
        sum += finite_log("intensity", r1 + r2 + cop.ln_density(u1, u2)?)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{Jump, JumpKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jump(time: f64, w1: f64, w2: f64, kind: JumpKind) -> Jump {
        Jump { time, w1, w2, kind }
    }

    fn params(sigma: f64, a1: f64, a2: f64) -> CppParams {
        CppParams {
            rates: [3.0, 2.0],
            marginals: [MarginalFamily::gamma(2.0, 1.0).unwrap(), MarginalFamily::gamma(1.5, 2.0).unwrap()],
            copula: AlphaClaytonParams::new(sigma, a1, a2).unwrap(),
        }
    }

    fn random_obs(seed: u64, horizon: f64) -> ObservationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kinds = [JumpKind::OnlyFirst, JumpKind::OnlySecond, JumpKind::Parallel];
        let jumps = (0..30)
            .map(|_| {
                let kind = kinds[rng.random_range(0..3)];
                jump(horizon * rng.random::<f64>(), 0.05 + 3.0 * rng.random::<f64>(), 0.05 + 3.0 * rng.random::<f64>(), kind)
            })
            .collect();
        ObservationSet::new(horizon, jumps).unwrap()
    }

    #[test]
    fn empty_observations_leave_only_the_exponent() {
        let p = params(0.7, 1.0, 3.0);
        let obs = ObservationSet::new(2.5, vec![]).unwrap();
        let c = p.copula.value(3.0, 2.0).unwrap();
        let want = -(3.0 + 2.0 - c) * 2.5;
        assert!((cpp_loglik(&obs, &p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn single_terms_match_hand_computation() {
        let p = params(0.7, 1.0, 3.0);
        let [f1, f2] = p.marginals;
        let c = p.copula.value(3.0, 2.0).unwrap();
        let base = -(5.0 - c);
        let obs = ObservationSet::new(1.0, vec![jump(0.3, 1.2, 0.0, JumpKind::OnlyFirst)]).unwrap();
        let want = base + 3f64.ln() + f1.pdf(1.2).ln() + (1.0 - p.copula.d1(3.0 * f1.survival(1.2), 2.0).unwrap()).ln();
        assert!((cpp_loglik(&obs, &p).unwrap() - want).abs() < 1e-10);
        let obs = ObservationSet::new(1.0, vec![jump(0.3, 0.0, 0.4, JumpKind::OnlySecond)]).unwrap();
        let want = base + 2f64.ln() + f2.pdf(0.4).ln() + (1.0 - p.copula.d2(3.0, 2.0 * f2.survival(0.4)).unwrap()).ln();
        assert!((cpp_loglik(&obs, &p).unwrap() - want).abs() < 1e-10);
        let obs = ObservationSet::new(1.0, vec![jump(0.3, 1.2, 0.4, JumpKind::Parallel)]).unwrap();
        let want = base + 6f64.ln() + f1.pdf(1.2).ln() + f2.pdf(0.4).ln()
            + p.copula.density(3.0 * f1.survival(1.2), 2.0 * f2.survival(0.4)).unwrap().ln();
        assert!((cpp_loglik(&obs, &p).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn dependent_copula_wins_on_comonotone_data() {
        let f = MarginalFamily::gamma(2.0, 1.0).unwrap();
        let mk = |sigma| CppParams {
            rates: [3.0, 3.0],
            marginals: [f, f],
            copula: AlphaClaytonParams::new(sigma, 1.0, 1.0).unwrap(),
        };
        let jumps = [0.3, 0.8, 1.5, 2.7, 4.0]
            .iter()
            .enumerate()
            .map(|(i, &w)| jump(i as f64 * 0.1, w, w * 1.001, JumpKind::Parallel))
            .collect();
        let obs = ObservationSet::new(1.0, jumps).unwrap();
        let dep = cpp_loglik(&obs, &mk(0.1)).unwrap();
        let ind = cpp_loglik(&obs, &mk(100.0)).unwrap();
        assert!(dep > ind + 10.0, "{dep} vs {ind}");
    }

    #[test]
    fn swapping_dimensions_under_symmetry() {
        let f = MarginalFamily::gamma(2.0, 1.0).unwrap();
        let p = CppParams {
            rates: [2.5, 2.5],
            marginals: [f, f],
            copula: AlphaClaytonParams::new(0.6, 2.0, 2.0).unwrap(),
        };
        let obs = random_obs(4, 3.0);
        let swapped: Vec<Jump> = obs
            .jumps()
            .iter()
            .map(|j| Jump {
                w1: j.w2,
                w2: j.w1,
                kind: match j.kind {
                    JumpKind::OnlyFirst => JumpKind::OnlySecond,
                    JumpKind::OnlySecond => JumpKind::OnlyFirst,
                    JumpKind::Parallel => JumpKind::Parallel,
                },
                ..*j
            })
            .collect();
        let obs2 = ObservationSet::new(3.0, swapped).unwrap();
        let a = cpp_loglik(&obs, &p).unwrap();
        let b = cpp_loglik(&obs2, &p).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn exponent_identity_is_exact() {
        for (s, a1, a2) in [(0.3, 1.0, 10.0), (2.0, 0.5, 0.5), (5.0, 20.0, 0.1)] {
            let p = params(s, a1, a2);
            let c = p.joint_rate().unwrap();
            assert_eq!(p.total_rate().unwrap(), (3.0 - c) + (2.0 - c) + c);
        }
    }

    #[test]
    fn threshold_empty_and_monotone() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 10.0, 5.0).unwrap();
        let obs = ObservationSet::new(2.0, vec![]).unwrap();
        let want = -m.bivariate_tail(1e-3, 1e-2).unwrap() * 2.0;
        assert_eq!(threshold_loglik(&obs, &m, 1e-3, 1e-2).unwrap(), want);
        let mut prev = threshold_loglik(&obs, &m, 1e-3, 1e-2).unwrap();
        for e1 in [2e-3, 1e-2, 1e-1] {
            let v = threshold_loglik(&obs, &m, e1, 1e-2).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn threshold_rejects_small_observations() {
        let m = CompoundModel::from_params(0.5, 1.0, 1.0, 2.0, 10.0, 5.0).unwrap();
        let obs = ObservationSet::new(1.0, vec![jump(0.5, 1e-4, 1.0, JumpKind::Parallel)]).unwrap();
        assert!(matches!(threshold_loglik(&obs, &m, 1e-3, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn additive_over_time_partition() {
        let p = params(0.7, 1.0, 3.0);
        let obs = random_obs(11, 4.0);
        let (a, b) = obs.split_at(1.7).unwrap();
        let whole = cpp_loglik(&obs, &p).unwrap();
        let parts = cpp_loglik(&a, &p).unwrap() + cpp_loglik(&b, &p).unwrap();
        assert!((whole - parts).abs() < 1e-9 * whole.abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn threshold_forms_agree(
            sigma in 0.1f64..0.95, a1 in 0.2f64..12.0, b1 in 0.2f64..8.0,
            a2 in 0.2f64..12.0, b2 in 0.2f64..8.0, seed in any::<u64>(),
        ) {
            let m = CompoundModel::from_params(sigma, 1.0, a1, b1, a2, b2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let jumps = (0..20)
                .map(|_| jump(rng.random(), 1e-3 + 5.0 * rng.random::<f64>(), 1e-3 + 5.0 * rng.random::<f64>(), JumpKind::Parallel))
                .collect();
            let obs = ObservationSet::new(1.0, jumps).unwrap();
            let a = threshold_loglik(&obs, &m, 1e-3, 1e-3).unwrap();
            let b = threshold_loglik_sklar(&obs, &m, 1e-3, 1e-3).unwrap();
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
        }

        #[test]
        fn order_of_observations_is_irrelevant(seed in any::<u64>()) {
            let p = params(0.7, 1.0, 3.0);
            let obs = random_obs(seed, 2.0);
            let mut rev = obs.jumps().to_vec();
            rev.reverse();
            let obs2 = ObservationSet::new(2.0, rev).unwrap();
            let a = cpp_loglik(&obs, &p).unwrap();
            let b = cpp_loglik(&obs2, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }
}
