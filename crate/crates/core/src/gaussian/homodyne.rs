use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::state::{symmetrize, GaussianState};

/// Statistics of the quadrature `x cos θ + p sin θ` of one mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneResult {
    pub angle: f64,
    pub mean: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl HomodyneResult {
    /// Noise power relative to shot noise.
    pub fn noise_db(&self) -> f64 {
        // variance is positive for every physical state
        super::noise_power_db(self.variance).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn sample_mean(&self) -> Option<f64> {
        let s = self.samples.as_ref()?;
        Some(s.iter().sum::<f64>() / s.len() as f64)
    }

    pub fn sample_variance(&self) -> Option<f64> {
        let s = self.samples.as_ref()?;
        let m = self.sample_mean()?;
        Some(s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() as f64 - 1.0))
    }
}

/// Analytic homodyne statistics of `mode` at LO angle `angle`, plus
/// `n_samples` draws from the Gaussian marginal when `n_samples > 0`.
pub fn homodyne<R: Rng + ?Sized>(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<HomodyneResult> {
    let (mean, variance) = quadrature_moments(state, mode, angle)?;
    let samples = if n_samples > 0 {
        let dist = Normal::new(mean, variance.sqrt())
            .map_err(|e| Error::param("variance", e.to_string()))?;
        Some(dist.sample_iter(rng).take(n_samples).collect())
    } else {
        None
    };
    Ok(HomodyneResult { angle, mean, variance, samples })
}

/// Mean and variance of `x cos θ + p sin θ` on one mode.
pub fn quadrature_moments(state: &GaussianState, mode: usize, angle: f64) -> Result<(f64, f64)> {
    state.check_mode(mode)?;
    let (s, c) = angle.sin_cos();
    let (x, p) = (2 * mode, 2 * mode + 1);
    let mean = c * state.mean()[x] + s * state.mean()[p];
    let v = state.cov();
    let variance = c * c * v[(x, x)] + 2.0 * s * c * v[(x, p)] + s * s * v[(p, p)];
    Ok((mean, variance))
}

/// State of the remaining modes after `mode` is homodyned at `angle` with
/// result `outcome`. The measured mode is removed from the returned state.
pub fn condition_on_homodyne(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    outcome: f64,
) -> Result<GaussianState> {
    state.check_mode(mode)?;
    if state.num_modes() < 2 {
        return Err(Error::DimensionMismatch(
            "conditioning needs at least one unmeasured mode".into(),
        ));
    }
    let rotated = state.phase_rotation(mode, angle)?;
    let m = 2 * mode;
    let rest: Vec<usize> = (0..rotated.mean().len()).filter(|&i| i != m && i != m + 1).collect();
    let v = rotated.cov();
    let var_m = v[(m, m)];
    if var_m <= 0.0 {
        return Err(Error::NonPositiveVariance(var_m));
    }
    let k = rest.len();
    let cross = DVector::from_iterator(k, rest.iter().map(|&i| v[(i, m)]));
    let shift = outcome - rotated.mean()[m];
    let mean = DVector::from_iterator(k, rest.iter().map(|&i| rotated.mean()[i])) + &cross * (shift / var_m);
    let block = DMatrix::from_fn(k, k, |a, b| v[(rest[a], rest[b])]);
    let cov = symmetrize(block - &cross * cross.transpose() / var_m);
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}
