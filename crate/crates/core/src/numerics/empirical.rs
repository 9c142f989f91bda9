//! Empirical distribution functions and the Kolmogorov–Smirnov distance.

use crate::error::{Error, Result};

/// Right-continuous empirical CDF of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("ecdf samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of samples `< x`, the left limit at `x`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v < x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Jump points with the ECDF value after each jump.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, x) in self.sorted.iter().enumerate() {
            let v = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == *x => last.1 = v,
                _ => out.push((*x, v)),
            }
        }
        out
    }
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

/// Supremum distance between the empirical CDF of `samples` and `cdf`,
/// taken over both one-sided limits at every sample point.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let e = Ecdf::new(samples)?;
    let mut d: f64 = 0.0;
    for (x, hi) in e.steps() {
        let f = cdf(x);
        let lo = e.eval_left(x);
        d = d.max((hi - f).abs()).max((lo - f).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_counts() {
        let e = ecdf(&[1.0, 2.0, 3.0]).unwrap();
        assert!((e.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ecdf(&[5.0]).unwrap().eval(4.9), 0.0);
        let t = ecdf(&[1.0, 1.0, 2.0]).unwrap();
        assert!((t.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.eval_left(1.0), 0.0);
        assert_eq!(t.steps(), vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);
    }

    #[test]
    fn empty_input_errors() {
        assert!(ecdf(&[]).is_err());
        assert!(ks_distance(&[], |x| x).is_err());
    }

    #[test]
    fn ks_single_point() {
        assert!((ks_distance(&[0.5], |x| x).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_exact_quantiles() {
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-14);
    }

    #[test]
    fn ks_is_order_invariant() {
        let a = [0.9, 0.1, 0.4, 0.4, 0.7];
        let mut b = a;
        b.reverse();
        assert_eq!(ks_distance(&a, |x| x).unwrap(), ks_distance(&b, |x| x).unwrap());
    }
}
