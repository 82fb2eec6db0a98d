use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::symplectic::{symplectic_form, SymplecticOp};
use super::VACUUM_VARIANCE;

/// Largest squeezing parameter accepted before the covariance condition number
/// becomes a problem in double precision.
pub const MAX_SQUEEZING: f64 = 10.0;

const SYMMETRY_TOL: f64 = 1e-10;
const PHYSICALITY_TOL: f64 = 1e-9;

/// First and second moments of an `M`-mode Gaussian state.
///
/// Quadratures are interleaved as `x₁, p₁, x₂, p₂, …` with `x = (a + a†)/√2`,
/// so the vacuum covariance is `I/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from raw moments, checking symmetry and the uncertainty
    /// principle `V + iΩ/2 ⪰ 0`.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "mean vector length {n} is not a positive even number"
            )));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}, expected {n}x{n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let state = GaussianState { mean, cov };
        let asym = state.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::param("cov", format!("not symmetric (relative asymmetry {asym:.3e})")));
        }
        let min_eig = state.uncertainty_min_eigenvalue();
        if min_eig < -PHYSICALITY_TOL {
            return Err(Error::param(
                "cov",
                format!("violates the uncertainty principle (min eigenvalue {min_eig:.3e})"),
            ));
        }
        Ok(state)
    }

    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        GaussianState { mean, cov }
    }

    pub fn vacuum(num_modes: usize) -> Self {
        assert!(num_modes >= 1, "a Gaussian state needs at least one mode");
        let n = 2 * num_modes;
        GaussianState {
            mean: DVector::zeros(n),
            cov: DMatrix::identity(n, n) * VACUUM_VARIANCE,
        }
    }

    /// Single-mode squeezed vacuum whose minimum-variance quadrature is
    /// `x cos θ + p sin θ`, with variance `e^{-2r}/2`.
    pub fn squeezed_vacuum(r: f64, theta: f64) -> Result<Self> {
        check_squeezing(r)?;
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let diag = DMatrix::from_diagonal(&DVector::from_row_slice(&[
            VACUUM_VARIANCE * (-2.0 * r).exp(),
            VACUUM_VARIANCE * (2.0 * r).exp(),
        ]));
        let cov = &rot * diag * rot.transpose();
        Ok(GaussianState { mean: DVector::zeros(2), cov: symmetrize(cov) })
    }

    /// Coherent state `D(α)|0⟩`.
    pub fn coherent(alpha: Complex<f64>) -> Self {
        let mut st = GaussianState::vacuum(1);
        st.mean[0] = std::f64::consts::SQRT_2 * alpha.re;
        st.mean[1] = std::f64::consts::SQRT_2 * alpha.im;
        st
    }

    /// Tensor product `self ⊗ other`; `other`'s modes are appended.
    pub fn product(&self, other: &GaussianState) -> GaussianState {
        let (n1, n2) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(n1 + n2);
        mean.rows_mut(0, n1).copy_from(&self.mean);
        mean.rows_mut(n1, n2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(n1 + n2, n1 + n2);
        cov.view_mut((0, 0), (n1, n1)).copy_from(&self.cov);
        cov.view_mut((n1, n1), (n2, n2)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Reduced state of a single mode.
    pub fn mode(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok(GaussianState {
            mean: self.mean.rows(i, 2).into_owned(),
            cov: self.cov.view((i, i), (2, 2)).into_owned(),
        })
    }

    /// Applies a Gaussian unitary: `μ → Sμ + d`, `V → S V Sᵀ`.
    pub fn apply(&self, op: &SymplecticOp) -> Result<GaussianState> {
        if op.matrix().nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "operation acts on {} quadratures, state has {}",
                op.matrix().nrows(),
                self.mean.len()
            )));
        }
        let s = op.matrix();
        Ok(GaussianState {
            mean: s * &self.mean + op.displacement(),
            cov: symmetrize(s * &self.cov * s.transpose()),
        })
    }

    pub fn beamsplitter(
        &self,
        mode_a: usize,
        mode_b: usize,
        transmittance: f64,
        phase: f64,
    ) -> Result<GaussianState> {
        let op = SymplecticOp::beamsplitter(self.num_modes(), mode_a, mode_b, transmittance, phase)?;
        self.apply(&op)
    }

    pub fn phase_rotation(&self, mode: usize, angle: f64) -> Result<GaussianState> {
        self.apply(&SymplecticOp::phase_rotation(self.num_modes(), mode, angle)?)
    }

    pub fn squeeze(&self, mode: usize, r: f64, theta: f64) -> Result<GaussianState> {
        self.apply(&SymplecticOp::squeezer(self.num_modes(), mode, r, theta)?)
    }

    /// Ideal displacement `D(α)`: the mode's mean moves by `(√2 Re α, √2 Im α)`.
    pub fn displace(&self, mode: usize, alpha: Complex<f64>) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += std::f64::consts::SQRT_2 * alpha.re;
        out.mean[2 * mode + 1] += std::f64::consts::SQRT_2 * alpha.im;
        Ok(out)
    }

    /// Pure-loss channel of efficiency `eta` on one mode.
    pub fn loss(&self, mode: usize, eta: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("eta", format!("{eta} is outside [0, 1]")));
        }
        let i = 2 * mode;
        let k = eta.sqrt();
        let mut out = self.clone();
        out.mean[i] *= k;
        out.mean[i + 1] *= k;
        let n = self.mean.len();
        for j in 0..n {
            for q in [i, i + 1] {
                if j == i || j == i + 1 {
                    continue;
                }
                out.cov[(q, j)] *= k;
                out.cov[(j, q)] *= k;
            }
        }
        for a in [i, i + 1] {
            for b in [i, i + 1] {
                let vac = if a == b { VACUUM_VARIANCE } else { 0.0 };
                out.cov[(a, b)] = eta * self.cov[(a, b)] + (1.0 - eta) * vac;
            }
        }
        Ok(out)
    }

    /// Displacement realised by a mirror of power transmittance `T`: the
    /// signal passes with amplitude `√(1−T)` while `√T` of a bright coherent
    /// beam `bright_beam_alpha` is mixed in.
    pub fn mirror_displace(
        &self,
        mode: usize,
        bright_beam_alpha: Complex<f64>,
        transmittance: f64,
    ) -> Result<GaussianState> {
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::param(
                "transmittance",
                format!("{transmittance} is outside (0, 1]"),
            ));
        }
        self.loss(mode, 1.0 - transmittance)?
            .displace(mode, bright_beam_alpha * transmittance.sqrt())
    }

    /// `det(2V)^{-1/2}`; equals 1 for pure states.
    pub fn purity(&self) -> f64 {
        (self.cov.clone() * 2.0).determinant().sqrt().recip()
    }

    /// Relative Frobenius asymmetry of the covariance.
    pub fn asymmetry(&self) -> f64 {
        let diff = (&self.cov - self.cov.transpose()).norm();
        diff / self.cov.norm().max(f64::MIN_POSITIVE)
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + iΩ/2`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.mean.len();
        let omega = symplectic_form(n / 2);
        let h = DMatrix::from_fn(n, n, |i, j| Complex::new(self.cov[(i, j)], 0.5 * omega[(i, j)]));
        SymmetricEigen::new(h).eigenvalues.min()
    }

    pub fn is_physical(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL && self.uncertainty_min_eigenvalue() >= -PHYSICALITY_TOL
    }

    /// Draws `n` joint quadrature samples (one row per sample).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let dim = self.mean.len();
        let factor = covariance_factor(&self.cov);
        let mut out = DMatrix::zeros(n, dim);
        let mut z = DVector::zeros(dim);
        for row in 0..n {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let x = &factor * &z + &self.mean;
            out.row_mut(row).copy_from(&x.transpose());
        }
        out
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(Error::ModeIndex { index: mode, modes: self.num_modes() });
        }
        Ok(())
    }
}

pub(crate) fn check_squeezing(r: f64) -> Result<()> {
    if !r.is_finite() || r.abs() > MAX_SQUEEZING {
        return Err(Error::param(
            "r",
            format!("squeezing {r} must be finite with |r| <= {MAX_SQUEEZING}"),
        ));
    }
    Ok(())
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// A matrix `L` with `L Lᵀ = cov`.
fn covariance_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    // Singular covariances only arise at the edge of numerical precision.
    let eig = SymmetricEigen::new(cov.clone());
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_moments() {
        let v = GaussianState::vacuum(2);
        assert_eq!(v.mean().iter().copied().sum::<f64>(), 0.0);
        assert_eq!(v.cov(), &(DMatrix::identity(4, 4) * 0.5));
        assert!(v.is_physical());
    }

    #[test]
    fn squeezed_vacuum_minus_two_db() {
        let r = 0.1 * 10f64.ln();
        let s = GaussianState::squeezed_vacuum(r, 0.0).unwrap();
        assert_relative_eq!(s.cov()[(0, 0)], 0.5 * 10f64.powf(-0.2), epsilon = 1e-14);
        assert_relative_eq!(s.cov()[(0, 0)], 0.315_478_672, epsilon = 1e-9);
        assert_relative_eq!(s.purity(), 1.0, epsilon = 1e-12);
        assert_eq!(GaussianState::squeezed_vacuum(0.0, 1.3).unwrap().cov(), GaussianState::vacuum(1).cov());
    }

    #[test]
    fn rejects_extreme_squeezing() {
        assert!(GaussianState::squeezed_vacuum(10.5, 0.0).is_err());
        assert!(GaussianState::squeezed_vacuum(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn displacement_composes() {
        let v = GaussianState::vacuum(1);
        let a = Complex::new(0.3, -0.7);
        let b = Complex::new(-1.1, 0.2);
        let two = v.displace(0, a).unwrap().displace(0, b).unwrap();
        let one = v.displace(0, a + b).unwrap();
        assert_relative_eq!(two.mean(), one.mean(), epsilon = 1e-15);
        assert_eq!(two.cov(), v.cov());
        assert_eq!(v.displace(0, Complex::new(0.0, 0.0)).unwrap(), v);
    }

    #[test]
    fn loss_limits_and_value() {
        let r = 0.1 * 10f64.ln();
        let s = GaussianState::squeezed_vacuum(r, 0.0).unwrap();
        assert_eq!(s.loss(0, 1.0).unwrap(), s);
        assert_relative_eq!(s.loss(0, 0.0).unwrap().cov(), GaussianState::vacuum(1).cov());
        let half = s.loss(0, 0.5).unwrap();
        // 0.5 * 0.315479 + 0.25
        assert_relative_eq!(half.cov()[(0, 0)], 0.407_739_336, epsilon = 1e-9);
        assert!(s.loss(0, 1.2).is_err());
        assert!(s.loss(0, -0.1).is_err());
    }

    #[test]
    fn mirror_displacement_at_one_percent() {
        let target = Complex::new(1.5, -0.5);
        let t: f64 = 0.01;
        let v = GaussianState::vacuum(1);
        let out = v.mirror_displace(0, target / t.sqrt(), t).unwrap();
        let ideal = v.displace(0, target).unwrap();
        for k in 0..2 {
            assert!((out.mean()[k] - ideal.mean()[k]).abs() <= 0.005 * ideal.mean()[k].abs());
        }
        let sq = GaussianState::squeezed_vacuum(0.5, 0.0).unwrap();
        let lossy = sq.mirror_displace(0, Complex::new(0.0, 0.0), t).unwrap();
        let excess = |s: &GaussianState| s.cov() - GaussianState::vacuum(1).cov();
        assert_relative_eq!(excess(&lossy), excess(&sq) * 0.99, epsilon = 1e-14);
        assert!(v.mirror_displace(0, target, 0.0).is_err());
        assert!(v.mirror_displace(0, target, 1.01).is_err());
    }

    #[test]
    fn mirror_converges_to_ideal_displacement() {
        let sq = GaussianState::squeezed_vacuum(0.4, 0.0).unwrap();
        let target = Complex::new(0.8, 0.3);
        let ideal = sq.displace(0, target).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e-2, 1e-3, 1e-4, 1e-6] {
            let out = sq.mirror_displace(0, target / f64::sqrt(t), t).unwrap();
            let d = (out.cov() - ideal.cov()).norm() + (out.mean() - ideal.mean()).norm();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn rejects_unphysical_covariance() {
        let cov = DMatrix::identity(2, 2) * 0.1;
        assert!(GaussianState::from_moments(DVector::zeros(2), cov).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]);
        assert!(GaussianState::from_moments(DVector::zeros(2), asym).is_err());
    }

    #[test]
    fn mode_index_checked() {
        let v = GaussianState::vacuum(2);
        assert!(matches!(v.displace(2, Complex::new(1.0, 0.0)), Err(Error::ModeIndex { .. })));
    }
}
