use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_positive, Result};
use crate::simulation::{Jump, JumpKind};

/// Classified jumps of a bivariate compound Poisson process observed on
/// `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    horizon: f64,
    jumps: Vec<Jump>,
}

impl ObservationSet {
    /// Validates sizes against the kinds. Single-coordinate jumps have the
    /// other size set to zero.
    pub fn new(horizon: f64, jumps: Vec<Jump>) -> Result<Self> {
        ensure_positive("horizon", horizon)?;
        let mut out = Vec::with_capacity(jumps.len());
        for j in jumps {
            if !(j.time >= 0.0 && j.time <= horizon) {
                return Err(domain(format!("jump time {} outside [0, {horizon}]", j.time)));
            }
            let ok = |w: f64| w.is_finite() && w > 0.0;
            let (w1, w2) = match j.kind {
                JumpKind::Parallel if ok(j.w1) && ok(j.w2) => (j.w1, j.w2),
                JumpKind::OnlyFirst if ok(j.w1) => (j.w1, 0.0),
                JumpKind::OnlySecond if ok(j.w2) => (0.0, j.w2),
                _ => {
                    return Err(domain(format!(
                        "jump sizes ({}, {}) do not fit kind {}",
                        j.w1, j.w2, j.kind
                    )))
                }
            };
            out.push(Jump { w1, w2, ..j });
        }
        Ok(Self { horizon, jumps: out })
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

    fn of_kind(&self, kind: JumpKind) -> impl Iterator<Item = &Jump> {
        self.jumps.iter().filter(move |j| j.kind == kind)
    }

    pub fn only_first(&self) -> Vec<f64> {
        self.of_kind(JumpKind::OnlyFirst).map(|j| j.w1).collect()
    }

    pub fn only_second(&self) -> Vec<f64> {
        self.of_kind(JumpKind::OnlySecond).map(|j| j.w2).collect()
    }

    pub fn parallel(&self) -> Vec<(f64, f64)> {
        self.of_kind(JumpKind::Parallel).map(|j| (j.w1, j.w2)).collect()
    }

    /// `(only first, only second, parallel)` counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.jumps.iter().fold((0, 0, 0), |(a, b, c), j| match j.kind {
            JumpKind::OnlyFirst => (a + 1, b, c),
            JumpKind::OnlySecond => (a, b + 1, c),
            JumpKind::Parallel => (a, b, c + 1),
        })
    }

    /// All positive sizes of the first coordinate.
    pub fn first_sizes(&self) -> Vec<f64> {
        self.jumps.iter().filter(|j| j.w1 > 0.0).map(|j| j.w1).collect()
    }

    /// All positive sizes of the second coordinate.
    pub fn second_sizes(&self) -> Vec<f64> {
        self.jumps.iter().filter(|j| j.w2 > 0.0).map(|j| j.w2).collect()
    }

    /// Splits the window at `t` into `[0, t]` and `(t, horizon]`, shifting
    /// times in the second part to start at zero.
    pub fn split_at(&self, t: f64) -> Result<(Self, Self)> {
        if !(t > 0.0 && t < self.horizon) {
            return Err(domain(format!("split point {t} must lie inside (0, {})", self.horizon)));
        }
        let (a, b): (Vec<Jump>, Vec<Jump>) = self.jumps.iter().partition(|j| j.time <= t);
        let b = b.into_iter().map(|j| Jump { time: j.time - t, ..j }).collect();
        Ok((Self::new(t, a)?, Self::new(self.horizon - t, b)?))
    }
}
