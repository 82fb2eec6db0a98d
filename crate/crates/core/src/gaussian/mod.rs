//! Exact Gaussian-state engine.
//!
//! States are stored as a mean vector and covariance matrix over interleaved
//! quadratures `(x₁, p₁, x₂, p₂, …)` with `ħ = 1` and `x = (a + a†)/√2`. In
//! this convention the vacuum (shot-noise) variance is exactly `1/2`, and
//! every noise figure in the crate is reported relative to it.

mod homodyne;
mod state;
mod symplectic;

pub use homodyne::{condition_on_homodyne, homodyne, quadrature_moments, HomodyneResult};
pub use state::{GaussianState, MAX_SQUEEZING};
pub use symplectic::{symplectic_form, SymplecticOp};

use crate::error::{Error, Result};

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// `10 log₁₀(V / V_vac)`.
pub fn noise_power_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::NonPositiveVariance(variance));
    }
    Ok(10.0 * (variance / VACUUM_VARIANCE).log10())
}

/// Squeezing parameter whose squeezed quadrature sits `db` below shot noise.
pub fn squeezing_for_db(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn db_scale() {
        assert_eq!(noise_power_db(0.5).unwrap(), 0.0);
        assert_relative_eq!(noise_power_db(0.5 * 10f64.powf(-0.2)).unwrap(), -2.0, epsilon = 1e-12);
        assert_relative_eq!(noise_power_db(1.0).unwrap(), 3.010_299_956_6, epsilon = 1e-9);
        assert!(noise_power_db(0.0).is_err());
        assert!(noise_power_db(-1.0).is_err());
        assert!(noise_power_db(f64::NAN).is_err());
    }

    #[test]
    fn squeezing_for_two_db() {
        let r = squeezing_for_db(2.0);
        assert_relative_eq!(r, 0.230_258_509, epsilon = 1e-9);
        assert_relative_eq!((-2.0 * r).exp(), 10f64.powf(-0.2), epsilon = 1e-15);
    }
}
