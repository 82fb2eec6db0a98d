use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{momentum, pad_matrix, position};
use crate::warning::{emit, NumericalWarning};

/// Normalization tolerance for states that claim to be normalized.
pub const NORM_TOL: f64 = 1e-8;

/// Pure state over a truncated number basis of one or two modes.
///
/// Two-mode amplitudes are stored as a `dim × dim` grid with the first mode
/// indexing rows; flattening is row-major, i.e. index `n₁·dim + n₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    dim: usize,
    amps: Amplitudes,
    warnings: Vec<NumericalWarning>,
}

#[derive(Clone, Debug, PartialEq)]
enum Amplitudes {
    One(DVector<C64>),
    Two(DMatrix<C64>),
}

impl FockState {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        Ok(FockState { dim: amps.len(), amps: Amplitudes::One(DVector::from_vec(amps)), warnings: Vec::new() })
    }

    /// Two-mode state from a `dim × dim` grid (rows index the first mode).
    pub fn from_grid(grid: DMatrix<C64>) -> Result<Self> {
        if grid.nrows() != grid.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "two-mode grid must be square, got {}x{}",
                grid.nrows(),
                grid.ncols()
            )));
        }
        check_dim(grid.nrows())?;
        Ok(FockState { dim: grid.nrows(), amps: Amplitudes::Two(grid), warnings: Vec::new() })
    }

    pub fn number(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::param("n", format!("number state {n} needs dim > {n}, got {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[n] = C64::from(1.0);
        Ok(FockState { dim, amps: Amplitudes::One(v), warnings: Vec::new() })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        FockState::number(0, dim)
    }

    /// Coherent state from the analytic amplitudes `e^{−|α|²/2} αⁿ/√n!`,
    /// renormalized over the truncated space.
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut v = DVector::zeros(dim);
        let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
        for n in 0..dim {
            v[n] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        let mut st = FockState { dim, amps: Amplitudes::One(v), warnings: Vec::new() };
        let tail = 1.0 - st.norm_sqr();
        if tail > 1e-10 {
            emit(
                &mut st.warnings,
                NumericalWarning::TruncationTail { context: "coherent state".into(), tail_mass: tail, limit: 1e-10 },
            );
        }
        st.normalize()?;
        Ok(st)
    }

    /// `a ⊗ b` with `a` as the first mode.
    pub fn product(a: &FockState, b: &FockState) -> Result<Self> {
        let (va, vb) = match (&a.amps, &b.amps) {
            (Amplitudes::One(x), Amplitudes::One(y)) => (x, y),
            _ => return Err(Error::DimensionMismatch("product needs two single-mode states".into())),
        };
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch(format!("mode dims differ: {} vs {}", a.dim, b.dim)));
        }
        let mut st = FockState::from_grid(va * vb.transpose())?;
        st.warnings = merged(&a.warnings, &b.warnings);
        Ok(st)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        match self.amps {
            Amplitudes::One(_) => 1,
            Amplitudes::Two(_) => 2,
        }
    }

    /// Single-mode amplitudes, or `None` for a two-mode state.
    pub fn vector(&self) -> Option<&DVector<C64>> {
        match &self.amps {
            Amplitudes::One(v) => Some(v),
            Amplitudes::Two(_) => None,
        }
    }

    /// Two-mode amplitude grid, or `None` for a single-mode state.
    pub fn grid(&self) -> Option<&DMatrix<C64>> {
        match &self.amps {
            Amplitudes::Two(g) => Some(g),
            Amplitudes::One(_) => None,
        }
    }

    /// Amplitudes in storage order (row-major for two modes).
    pub fn amplitudes(&self) -> Vec<C64> {
        match &self.amps {
            Amplitudes::One(v) => v.iter().copied().collect(),
            Amplitudes::Two(g) => {
                let d = self.dim;
                (0..d * d).map(|k| g[(k / d, k % d)]).collect()
            }
        }
    }

    pub fn warnings(&self) -> &[NumericalWarning] {
        &self.warnings
    }

    pub(crate) fn push_warning(&mut self, w: NumericalWarning) {
        emit(&mut self.warnings, w);
    }

    pub(crate) fn extend_warnings(&mut self, ws: &[NumericalWarning]) {
        for w in ws {
            if !self.warnings.contains(w) {
                self.warnings.push(w.clone());
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.amps {
            Amplitudes::One(v) => v.norm_squared(),
            Amplitudes::Two(g) => g.norm_squared(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::param("state", "cannot normalize a zero-norm state"));
        }
        let s = C64::from(n.recip());
        match &mut self.amps {
            Amplitudes::One(v) => *v *= s,
            Amplitudes::Two(g) => *g *= s,
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        match (&self.amps, &other.amps) {
            (Amplitudes::One(a), Amplitudes::One(b)) if a.len() == b.len() => Ok(a.dotc(b)),
            (Amplitudes::Two(a), Amplitudes::Two(b)) if a.shape() == b.shape() => Ok(a.dotc(b)),
            _ => Err(Error::DimensionMismatch("inner product of incompatible states".into())),
        }
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &FockState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Reduced density matrix of `mode` (the state itself for one mode).
    pub fn reduced_density(&self, mode: usize) -> Result<DMatrix<C64>> {
        match (&self.amps, mode) {
            (Amplitudes::One(v), 0) => Ok(v * v.adjoint()),
            (Amplitudes::Two(g), 0) => Ok(g * g.adjoint()),
            // ρ₂[j,k] = Σᵢ c[i,j] c*[i,k]
            (Amplitudes::Two(g), 1) => Ok(g.transpose() * g.map(|c| c.conj())),
            _ => Err(Error::ModeIndex { index: mode, modes: self.num_modes() }),
        }
    }

    /// Mean photon number of `mode`.
    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let rho = self.reduced_density(mode)?;
        Ok((0..self.dim).map(|n| n as f64 * rho[(n, n)].re).sum::<f64>() / rho.trace().re)
    }

    /// Quadrature mean `(⟨x⟩, ⟨p⟩)` and symmetrized covariance of `mode`.
    ///
    /// Operators are built one level above the cutoff so the moments of the
    /// truncated state are exact.
    pub fn quadrature_moments(&self, mode: usize) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let rho = self.reduced_density(mode)?;
        Ok(density_quadrature_moments(&rho))
    }

    /// Raw moments `⟨xᵏ⟩`, `k = 1..=order`, of `mode`.
    pub fn position_moments(&self, mode: usize, order: usize) -> Result<Vec<f64>> {
        let rho = self.reduced_density(mode)?;
        let size = self.dim + order;
        let rho = pad_matrix(&rho, size);
        let x = position(size);
        let norm = rho.trace().re;
        let mut pow = DMatrix::<C64>::identity(size, size);
        let mut out = Vec::with_capacity(order);
        for _ in 0..order {
            pow = &pow * &x;
            out.push((&rho * &pow).trace().re / norm);
        }
        Ok(out)
    }

    pub(crate) fn with_amplitudes_one(&self, v: DVector<C64>) -> FockState {
        FockState { dim: self.dim, amps: Amplitudes::One(v), warnings: self.warnings.clone() }
    }

    pub(crate) fn with_grid(&self, g: DMatrix<C64>) -> FockState {
        FockState { dim: g.nrows(), amps: Amplitudes::Two(g), warnings: self.warnings.clone() }
    }
}

pub(crate) fn density_quadrature_moments(rho: &DMatrix<C64>) -> ([f64; 2], [[f64; 2]; 2]) {
    let size = rho.nrows() + 2;
    let rho = pad_matrix(rho, size);
    let norm = rho.trace().re;
    let x = position(size);
    let p = momentum(size);
    let ev = |op: &DMatrix<C64>| (&rho * op).trace().re / norm;
    let mx = ev(&x);
    let mp = ev(&p);
    let xx = ev(&(&x * &x)) - mx * mx;
    let pp = ev(&(&p * &p)) - mp * mp;
    let xp = 0.5 * ev(&(&x * &p + &p * &x)) - mx * mp;
    ([mx, mp], [[xx, xp], [xp, pp]])
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::param("dim", format!("truncation dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

pub(crate) fn merged(a: &[NumericalWarning], b: &[NumericalWarning]) -> Vec<NumericalWarning> {
    let mut out = a.to_vec();
    for w in b {
        if !out.contains(w) {
            out.push(w.clone());
        }
    }
    out
}

impl Serialize for FockState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes().iter().map(|c| [c.re, c.im]).collect();
        let mut s = serializer.serialize_struct("FockState", 4)?;
        s.serialize_field("num_modes", &self.num_modes())?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("is_normalized", &self.is_normalized())?;
        s.serialize_field("amplitudes", &pairs)?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn number_state_moments() {
        let one = FockState::number(1, 6).unwrap();
        let (mean, cov) = one.quadrature_moments(0).unwrap();
        assert_eq!(mean, [0.0, 0.0]);
        assert_relative_eq!(cov[0][0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(cov[1][1], 1.5, epsilon = 1e-14);
        // top level of the basis still gets exact moments
        let top = FockState::number(5, 6).unwrap();
        assert_relative_eq!(top.quadrature_moments(0).unwrap().1[0][0], 5.5, epsilon = 1e-13);
    }

    #[test]
    fn coherent_vacuum_overlap() {
        let c = FockState::coherent(C64::new(1.0, 0.0), 30).unwrap();
        assert_relative_eq!(c.vector().unwrap()[0].norm_sqr(), (-1.0f64).exp(), epsilon = 1e-12);
        assert!(c.warnings().is_empty());
        let (mean, _) = c.quadrature_moments(0).unwrap();
        assert_relative_eq!(mean[0], std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn coherent_truncation_warns() {
        let c = FockState::coherent(C64::new(3.0, 0.0), 6).unwrap();
        assert!(!c.warnings().is_empty());
        assert!(c.is_normalized());
    }

    #[test]
    fn product_layout_is_row_major() {
        let a = FockState::number(1, 3).unwrap();
        let b = FockState::number(2, 3).unwrap();
        let ab = FockState::product(&a, &b).unwrap();
        let flat = ab.amplitudes();
        assert_eq!(flat[3 + 2], C64::from(1.0));
        assert_relative_eq!(ab.mean_photon_number(0).unwrap(), 1.0);
        assert_relative_eq!(ab.mean_photon_number(1).unwrap(), 2.0);
    }

    #[test]
    fn rejects_tiny_dimensions() {
        assert!(FockState::vacuum(1).is_err());
        assert!(FockState::number(4, 4).is_err());
        assert!(FockState::from_amplitudes(vec![C64::from(1.0)]).is_err());
    }

    #[test]
    fn position_moments_of_vacuum() {
        let v = FockState::vacuum(5).unwrap();
        let m = v.position_moments(0, 4).unwrap();
        assert_relative_eq!(m[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(m[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(m[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(m[3], 0.75, epsilon = 1e-14);
    }
}
