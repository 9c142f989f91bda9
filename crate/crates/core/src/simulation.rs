//! Series-representation samplers for the directing subordinator and the
//! compound vector, and a sampler for bivariate compound Poisson processes
//! whose dependence is given by an α-Clayton Lévy copula.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Error, Result};
use crate::inference::{MarginalFamily, ObservationSet};
use crate::levy_copula::AlphaClaytonParams;
use crate::process_model::{CompoundModel, DirectingMeasure, StableDirecting};

/// Seed for a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
}

impl SeedSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Which coordinates move at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpKind {
    /// Both coordinates jump.
    #[serde(rename = "par", alias = "both")]
    Parallel,
    /// Only the first coordinate jumps.
    #[serde(rename = "perp1")]
    OnlyFirst,
    /// Only the second coordinate jumps.
    #[serde(rename = "perp2")]
    OnlySecond,
}

impl JumpKind {
    pub fn label(self) -> &'static str {
        match self {
            JumpKind::Parallel => "par",
            JumpKind::OnlyFirst => "perp1",
            JumpKind::OnlySecond => "perp2",
        }
    }

    /// Classifies a pair of jump sizes by which entries are positive.
    pub fn classify(w1: f64, w2: f64) -> Option<JumpKind> {
        match (w1 > 0.0, w2 > 0.0) {
            (true, true) => Some(JumpKind::Parallel),
            (true, false) => Some(JumpKind::OnlyFirst),
            (false, true) => Some(JumpKind::OnlySecond),
            (false, false) => None,
        }
    }
}

impl fmt::Display for JumpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for JumpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "par" | "both" => Ok(JumpKind::Parallel),
            "perp1" => Ok(JumpKind::OnlyFirst),
            "perp2" => Ok(JumpKind::OnlySecond),
            _ => Err(domain(format!("unknown jump kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub w1: f64,
    pub w2: f64,
    pub kind: JumpKind,
}

/// Jumps of a bivariate path on `[0, horizon]`, sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    horizon: f64,
    jumps: Vec<Jump>,
}

impl JumpPath {
    pub fn new(horizon: f64, mut jumps: Vec<Jump>) -> Result<Self> {
        ensure_positive("horizon", horizon)?;
        for j in &jumps {
            if !(j.time >= 0.0 && j.time <= horizon) {
                return Err(domain(format!("jump time {} outside [0, {horizon}]", j.time)));
            }
            if !(j.w1 >= 0.0 && j.w2 >= 0.0 && j.w1.is_finite() && j.w2.is_finite()) || j.w1 + j.w2 == 0.0 {
                return Err(domain(format!("invalid jump sizes ({}, {})", j.w1, j.w2)));
            }
        }
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { horizon, jumps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Path values at the horizon.
    pub fn totals(&self) -> (f64, f64) {
        self.jumps.iter().fold((0.0, 0.0), |(a, b), j| (a + j.w1, b + j.w2))
    }

    /// Path values at time `t`.
    pub fn value_at(&self, t: f64) -> (f64, f64) {
        self.jumps
            .iter()
            .take_while(|j| j.time <= t)
            .fold((0.0, 0.0), |(a, b), j| (a + j.w1, b + j.w2))
    }
}

/// Smallest directing jump retained by the truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    tau: f64,
}

impl TruncationSpec {
    pub fn new(tau: f64) -> Result<Self> {
        ensure_positive("truncation level", tau)?;
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectingJump {
    pub time: f64,
    pub size: f64,
}

/// Ferguson–Klass series on `[0, horizon]`: jump sizes in decreasing order,
/// stopping before the first size below the truncation level.
///
/// Each step draws a unit exponential increment of the arrival times and
/// then a uniform jump time, in that order.
pub fn ferguson_klass<D: DirectingMeasure, R: Rng + ?Sized>(
    measure: &D,
    horizon: f64,
    trunc: &TruncationSpec,
    rng: &mut R,
) -> Result<Vec<DirectingJump>> {
    ensure_positive("horizon", horizon)?;
    let mut arrivals = 0.0;
    let mut out = Vec::new();
    loop {
        let e: f64 = Exp1.sample(rng);
        arrivals += e;
        let size = measure.inverse_tail(arrivals / horizon)?;
        if size < trunc.tau {
            return Ok(out);
        }
        let time = horizon * rng.random::<f64>();
        out.push(DirectingJump { time, size });
    }
}

pub fn ferguson_klass_stable(
    directing: &StableDirecting,
    horizon: f64,
    trunc: &TruncationSpec,
    seed: SeedSpec,
) -> Result<Vec<DirectingJump>> {
    ferguson_klass(directing, horizon, trunc, &mut seed.rng())
}

/// Truncated series for a compound vector whose scores are produced by
/// `scores`. Directing jumps are generated first, then one score pair per
/// jump in series order.
pub fn compound_path_with<D, R, F>(
    measure: &D,
    horizon: f64,
    trunc: &TruncationSpec,
    rng: &mut R,
    mut scores: F,
) -> Result<JumpPath>
where
    D: DirectingMeasure,
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> (f64, f64),
{
    let directing = ferguson_klass(measure, horizon, trunc, rng)?;
    let mut jumps = Vec::with_capacity(directing.len());
    for d in directing {
        let (m1, m2) = scores(rng);
        let (w1, w2) = (m1 * d.size, m2 * d.size);
        if let Some(kind) = JumpKind::classify(w1, w2) {
            jumps.push(Jump {
                time: d.time,
                w1,
                w2,
                kind,
            });
        }
    }
    JumpPath::new(horizon, jumps)
}

/// Truncated series for the stable/Gamma compound model.
pub fn compound_path(
    model: &CompoundModel,
    horizon: f64,
    trunc: &TruncationSpec,
    seed: SeedSpec,
) -> Result<JumpPath> {
    let [w1, w2] = *model.scores();
    let g1 = Gamma::new(w1.shape(), 1.0 / w1.rate()).map_err(|e| domain(e.to_string()))?;
    let g2 = Gamma::new(w2.shape(), 1.0 / w2.rate()).map_err(|e| domain(e.to_string()))?;
    let mut rng = seed.rng();
    compound_path_with(model.directing(), horizon, trunc, &mut rng, |r| {
        (g1.sample(r), g2.sample(r))
    })
}

/// Keeps the jumps where both coordinates exceed their thresholds.
pub fn threshold_observations(path: &JumpPath, eps1: f64, eps2: f64) -> Result<ObservationSet> {
    ensure_positive("eps1", eps1)?;
    ensure_positive("eps2", eps2)?;
    let kept = path
        .jumps()
        .iter()
        .filter(|j| j.w1 > eps1 && j.w2 > eps2)
        .map(|j| Jump {
            kind: JumpKind::Parallel,
            ..*j
        })
        .collect();
    ObservationSet::new(path.horizon(), kept)
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| domain(e.to_string()))?;
    Ok(p.sample(rng) as u64)
}

/// Bivariate compound Poisson path with jump rates `rates`, jump-size
/// laws `marginals`, and dependence given by `copula`.
///
/// Jumps are generated in tail-mass coordinates: points with first
/// coordinate uniform on `(0, λ₁)` receive a second coordinate from the
/// conditional law of the copula, and become joint jumps when it falls
/// below `λ₂`. A second pass does the same from the other side and keeps
/// only the second-coordinate-only jumps. Tail masses map to jump sizes
/// through the marginal survival functions.
pub fn compound_poisson_sample(
    rates: [f64; 2],
    marginals: [MarginalFamily; 2],
    copula: &AlphaClaytonParams,
    horizon: f64,
    seed: SeedSpec,
) -> Result<JumpPath> {
    let [l1, l2] = rates;
    ensure_positive("rate 1", l1)?;
    ensure_positive("rate 2", l2)?;
    ensure_positive("horizon", horizon)?;
    let mut rng = seed.rng();
    let mut jumps = Vec::new();
    // open-interval uniform on (0, scale)
    let uniform = |rng: &mut ChaCha8Rng, scale: f64| loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u * scale;
        }
    };

    for _ in 0..poisson_count(l1 * horizon, &mut rng)? {
        let time = horizon * rng.random::<f64>();
        let u1 = uniform(&mut rng, l1);
        let q = uniform(&mut rng, 1.0);
        let u2 = copula.conditional_inverse(u1, q)?;
        let w1 = marginals[0].survival_inverse(u1 / l1)?;
        if u2 < l2 {
            let w2 = marginals[1].survival_inverse(u2 / l2)?;
            jumps.push(Jump {
                time,
                w1,
                w2,
                kind: JumpKind::Parallel,
            });
        } else {
            jumps.push(Jump {
                time,
                w1,
                w2: 0.0,
                kind: JumpKind::OnlyFirst,
            });
        }
    }
    for _ in 0..poisson_count(l2 * horizon, &mut rng)? {
        let time = horizon * rng.random::<f64>();
        let u2 = uniform(&mut rng, l2);
        let q = uniform(&mut rng, 1.0);
        let u1 = copula.conditional_inverse_second(u2, q)?;
        if u1 >= l1 {
            let w2 = marginals[1].survival_inverse(u2 / l2)?;
            jumps.push(Jump {
                time,
                w1: 0.0,
                w2,
                kind: JumpKind::OnlySecond,
            });
        }
    }
    JumpPath::new(horizon, jumps)
}
