//! Numerical building blocks shared by the modelling and inference code.

pub mod empirical;
pub mod optimize;
pub mod quadrature;
pub mod special;

pub use empirical::{ecdf, ks_distance, Ecdf};
pub use optimize::{nelder_mead, Minimum, OptimizerSpec};
pub use quadrature::{integrate, integrate_from, integrate_semi_infinite, QuadratureSpec};
pub use special::{
    erfc, exp_int_e1, gamma_ratio, log_gamma, normal_cdf, normal_quantile, normal_sf,
    reg_inc_beta, reg_inc_gamma_lower, reg_inc_gamma_upper,
};

use crate::error::{Error, Result};

/// Finds the root of a monotone function of `ln x` by bracket expansion and
/// bisection. `f` must be increasing in `x`; the root is where `f` crosses 0.
pub(crate) fn solve_monotone_log<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    what: &'static str,
) -> Result<f64> {
    let mut lo = start.ln();
    let mut hi = lo;
    let mut step = std::f64::consts::LN_2;
    let flo = f(lo.exp());
    if flo == 0.0 {
        return Ok(start);
    }
    if flo < 0.0 {
        // move hi upward until f >= 0
        loop {
            hi += step;
            step *= 2.0;
            if hi > 700.0 {
                return Err(Error::NonConvergence {
                    what,
                    estimate: hi.exp(),
                    error: f64::INFINITY,
                });
            }
            if f(hi.exp()) >= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        loop {
            lo -= step;
            step *= 2.0;
            if lo < -700.0 {
                return Err(Error::NonConvergence {
                    what,
                    estimate: lo.exp(),
                    error: f64::INFINITY,
                });
            }
            if f(lo.exp()) <= 0.0 {
                break;
            }
            hi = lo;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-15 {
            break;
        }
        if f(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
