//! Singular interaction potential
//!
//! ```text
//! Φ(r)   = ((1 - r)^(-m) - m r - 1) / (m (m + 1))
//! Φ'(r)  = ((1 - r)^(-m-1) - 1) / (m + 1)
//! Φ''(r) = (1 - r)^(-m-2)
//! ```
//!
//! normalized so that `Φ(0) = Φ'(0) = 0` and `Φ''(0) = 1`. The potential is
//! convex on `r < 1` and blows up at the barrier `r = 1`.
//!
//! Powers of `1 - r` are formed as `exp(-k ln1p(-r))`, which keeps full
//! relative precision both near `r = 0` and close to the singularity.

use crate::error::{Error, Result};

/// Below this |r| the potential itself is summed from its Taylor series to
/// avoid the cancellation in `(1 - r)^(-m) - m r - 1`.
const SERIES_CUTOFF: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    m: f64,
}

impl PotentialParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 1.0) {
            return Err(Error::InvalidInput(format!(
                "potential exponent must satisfy m > 1, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Φ(r) without the domain check. Callers must guarantee `r < 1`.
    #[inline]
    pub fn phi_unchecked(&self, r: f64) -> f64 {
        let m = self.m;
        if r.abs() < SERIES_CUTOFF {
            // Φ(r) = Σ_{k≥2} (m+2)(m+3)···(m+k-1) r^k / k!
            let mut term = 0.5 * r * r;
            let mut sum = term;
            for k in 3..24 {
                let kf = k as f64;
                term *= (m + kf - 1.0) * r / kf;
                sum += term;
                if term.abs() <= f64::EPSILON * sum.abs() {
                    break;
                }
            }
            sum
        } else {
            let power = (-m * (-r).ln_1p()).exp_m1();
            (power - m * r) / (m * (m + 1.0))
        }
    }

    /// Φ'(r) without the domain check.
    #[inline]
    pub fn dphi_unchecked(&self, r: f64) -> f64 {
        let m = self.m;
        (-(m + 1.0) * (-r).ln_1p()).exp_m1() / (m + 1.0)
    }

    /// Φ''(r) without the domain check.
    #[inline]
    pub fn ddphi_unchecked(&self, r: f64) -> f64 {
        (-(self.m + 2.0) * (-r).ln_1p()).exp()
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        check_domain(r)?;
        Ok(self.phi_unchecked(r))
    }

    pub fn dphi(&self, r: f64) -> Result<f64> {
        check_domain(r)?;
        Ok(self.dphi_unchecked(r))
    }

    pub fn ddphi(&self, r: f64) -> Result<f64> {
        check_domain(r)?;
        Ok(self.ddphi_unchecked(r))
    }
}

fn check_domain(r: f64) -> Result<()> {
    if r.is_nan() || r >= 1.0 {
        return Err(Error::Domain(format!(
            "potential evaluated at r = {r}, singularity at r = 1"
        )));
    }
    Ok(())
}

/// Evaluates Φ (order 0), Φ' (order 1) or Φ'' (order 2) at `r < 1`.
pub fn eval_potential(params: &PotentialParams, r: f64, order: u32) -> Result<f64> {
    match order {
        0 => params.phi(r),
        1 => params.dphi(r),
        2 => params.ddphi(r),
        _ => Err(Error::Domain(format!(
            "derivative order must be 0, 1 or 2, got {order}"
        ))),
    }
}
