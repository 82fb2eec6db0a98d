use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::warning::NumericalWarning;

use super::state::FockState;

/// Truncated-tail mass above which [`tmsv`] reports a warning.
pub const TMSV_TAIL_LIMIT: f64 = 1e-10;

/// Two-mode squeezed vacuum `Σ tanhⁿr / cosh r |n,n⟩`, renormalized over the
/// first `dim` Schmidt terms. The discarded mass is `tanh(r)^{2·dim}`.
pub fn tmsv(r: f64, dim: usize) -> Result<FockState> {
    if !r.is_finite() {
        return Err(Error::param("r", "must be finite"));
    }
    let lambda = r.tanh();
    let mut grid = DMatrix::zeros(dim.max(2), dim.max(2));
    let mut c = 1.0 / r.cosh();
    for n in 0..dim {
        grid[(n, n)] = C64::from(c);
        c *= lambda;
    }
    let mut st = FockState::from_grid(grid)?;
    let tail = tmsv_tail_mass(r, dim);
    if tail > TMSV_TAIL_LIMIT {
        st.push_warning(NumericalWarning::TruncationTail {
            context: format!("two-mode squeezed vacuum r={r} dim={dim}"),
            tail_mass: tail,
            limit: TMSV_TAIL_LIMIT,
        });
    }
    st.normalize()?;
    Ok(st)
}

/// Probability mass of the TMSV beyond `dim` photons per mode.
pub fn tmsv_tail_mass(r: f64, dim: usize) -> f64 {
    r.tanh().abs().powi(2 * dim as i32)
}

/// Smallest `dim` with `tanh(r)^{2·dim} < tol`.
pub fn tmsv_min_dim(r: f64, tol: f64) -> usize {
    let lambda = r.tanh().abs();
    if lambda == 0.0 {
        return 2;
    }
    ((tol.ln() / (2.0 * lambda.ln())).floor() as usize + 1).max(2)
}

/// Outcome of a photon-number measurement on one arm of a two-mode state.
#[derive(Clone, Debug)]
pub struct PhotonCount {
    pub n: usize,
    pub prob: f64,
    /// Normalized state of the unmeasured mode.
    pub conditional: FockState,
}

/// `P(n) = Σ_m |c_{m,n}|²` for the measured mode (normalized over the state's norm).
pub fn photon_number_distribution(state: &FockState, measured_mode: usize) -> Result<Vec<f64>> {
    let g = two_mode_grid(state)?;
    let total = g.norm_squared();
    let d = state.dim();
    let probs = match measured_mode {
        0 => (0..d).map(|n| g.row(n).norm_squared() / total).collect(),
        1 => (0..d).map(|n| g.column(n).norm_squared() / total).collect(),
        _ => return Err(Error::ModeIndex { index: measured_mode, modes: 2 }),
    };
    Ok(probs)
}

/// Projects `measured_mode` onto `|n⟩`.
pub fn photon_count_fixed(state: &FockState, measured_mode: usize, n: usize) -> Result<PhotonCount> {
    let probs = photon_number_distribution(state, measured_mode)?;
    let prob = probs.get(n).copied().unwrap_or(0.0);
    if !(prob > 0.0) {
        return Err(Error::ImpossibleOutcome { outcome: format!("{n} photons") });
    }
    let g = two_mode_grid(state)?;
    let v: DVector<C64> = match measured_mode {
        0 => g.row(n).transpose(),
        _ => g.column(n).into_owned(),
    };
    let mut conditional = FockState::from_amplitudes(v.iter().copied().collect())?;
    conditional.extend_warnings(state.warnings());
    conditional.normalize()?;
    Ok(PhotonCount { n, prob, conditional })
}

/// Samples `n` from the photon-number distribution of `measured_mode`.
pub fn photon_count_sampled<R: Rng + ?Sized>(
    state: &FockState,
    measured_mode: usize,
    rng: &mut R,
) -> Result<PhotonCount> {
    let probs = photon_number_distribution(state, measured_mode)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = None;
    for (n, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc && *p > 0.0 {
            pick = Some(n);
            break;
        }
    }
    // rounding can leave u just above the final cumulative sum
    let n = pick.or_else(|| probs.iter().rposition(|&p| p > 0.0)).expect("non-empty distribution");
    photon_count_fixed(state, measured_mode, n)
}

fn two_mode_grid(state: &FockState) -> Result<&DMatrix<C64>> {
    state
        .grid()
        .ok_or_else(|| Error::DimensionMismatch("photon counting needs a two-mode state".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn tmsv_zero_is_vacuum() {
        let st = tmsv(0.0, 4).unwrap();
        let amps = st.amplitudes();
        assert_eq!(amps[0], C64::from(1.0));
        assert!(amps[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn tmsv_marginal_is_geometric() {
        let r = 0.1 * 10f64.ln();
        let dim = tmsv_min_dim(r, 1e-12);
        let st = tmsv(r, dim).unwrap();
        assert!(st.warnings().is_empty());
        let p = photon_number_distribution(&st, 1).unwrap();
        // (1 − λ²)λ²ⁿ with λ = tanh r
        assert_relative_eq!(p[0], 0.948_800_240, epsilon = 1e-9);
        assert_relative_eq!(p[1], 0.048_578_345, epsilon = 1e-9);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_dim_warns() {
        let st = tmsv(1.5, 5).unwrap();
        assert!(matches!(st.warnings()[0], NumericalWarning::TruncationTail { .. }));
        assert!(st.is_normalized());
    }

    #[test]
    fn tmsv_conditional_is_number_state() {
        let st = tmsv(0.5, 20).unwrap();
        for n in 0..4 {
            let pc = photon_count_fixed(&st, 1, n).unwrap();
            let lam2 = 0.5f64.tanh().powi(2);
            assert_relative_eq!(pc.prob, (1.0 - lam2) * lam2.powi(n as i32), epsilon = 1e-12);
            assert_relative_eq!(pc.conditional.vector().unwrap()[n].norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_counts_deterministically() {
        let psi = FockState::coherent(C64::new(0.5, 0.2), 8).unwrap();
        let k = FockState::number(3, 8).unwrap();
        let st = FockState::product(&psi, &k).unwrap();
        let mut rng = seeded(3);
        let pc = photon_count_sampled(&st, 1, &mut rng).unwrap();
        assert_eq!(pc.n, 3);
        assert_relative_eq!(pc.prob, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pc.conditional.fidelity(&psi).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(photon_count_fixed(&st, 1, 2), Err(Error::ImpossibleOutcome { .. })));
        assert!(matches!(photon_count_fixed(&st, 1, 99), Err(Error::ImpossibleOutcome { .. })));
    }

    #[test]
    fn counting_needs_two_modes() {
        assert!(photon_number_distribution(&FockState::vacuum(3).unwrap(), 0).is_err());
    }
}
