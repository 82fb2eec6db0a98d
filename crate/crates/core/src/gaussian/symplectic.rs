use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

use super::state::check_squeezing;

/// Affine symplectic map `r → S r + d` on the interleaved quadrature vector.
///
/// Every Gaussian unitary (beamsplitters, phase shifters, squeezers,
/// displacements and their products) is represented this way.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

/// Block-diagonal `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let n = 2 * num_modes;
    let mut omega = DMatrix::zeros(n, n);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

impl SymplecticOp {
    /// Wraps a matrix, rejecting it if `SᵀΩS ≠ Ω` beyond `1e-10`.
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || !n.is_multiple_of(2) || matrix.ncols() != n || displacement.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "symplectic matrix {}x{} with displacement of length {}",
                matrix.nrows(),
                matrix.ncols(),
                displacement.len()
            )));
        }
        let op = SymplecticOp { matrix, displacement };
        let residual = op.symplectic_residual();
        if residual > 1e-10 {
            return Err(Error::param("matrix", format!("not symplectic (residual {residual:.3e})")));
        }
        Ok(op)
    }

    pub fn identity(num_modes: usize) -> Self {
        let n = 2 * num_modes;
        SymplecticOp { matrix: DMatrix::identity(n, n), displacement: DVector::zeros(n) }
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// `‖SᵀΩS − Ω‖_F`.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = symplectic_form(self.num_modes());
        (self.matrix.transpose() * &omega * &self.matrix - omega).norm()
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &SymplecticOp) -> SymplecticOp {
        SymplecticOp {
            matrix: &self.matrix * &first.matrix,
            displacement: &self.matrix * &first.displacement + &self.displacement,
        }
    }

    pub fn inverse(&self) -> SymplecticOp {
        // S⁻¹ = -Ω Sᵀ Ω for symplectic S.
        let omega = symplectic_form(self.num_modes());
        let inv = -(&omega * self.matrix.transpose() * &omega);
        let displacement = -(&inv * &self.displacement);
        SymplecticOp { matrix: inv, displacement }
    }

    /// Two-mode beamsplitter `a → t a + r e^{iφ} b`, `b → −r e^{−iφ} a + t b`
    /// with `t = √T`, `r = √(1−T)`. The inverse has phase `φ + π`.
    pub fn beamsplitter(
        num_modes: usize,
        mode_a: usize,
        mode_b: usize,
        transmittance: f64,
        phase: f64,
    ) -> Result<Self> {
        check_mode(num_modes, mode_a)?;
        check_mode(num_modes, mode_b)?;
        if mode_a == mode_b {
            return Err(Error::param("mode_b", "beamsplitter modes must be distinct"));
        }
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::param(
                "transmittance",
                format!("{transmittance} is outside [0, 1]"),
            ));
        }
        let t = transmittance.sqrt();
        let r = (1.0 - transmittance).sqrt();
        let (s, c) = phase.sin_cos();
        let mut op = SymplecticOp::identity(num_modes);
        let (xa, pa, xb, pb) = (2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1);
        let m = &mut op.matrix;
        m[(xa, xa)] = t;
        m[(xa, xb)] = r * c;
        m[(xa, pb)] = -r * s;
        m[(pa, pa)] = t;
        m[(pa, xb)] = r * s;
        m[(pa, pb)] = r * c;
        m[(xb, xb)] = t;
        m[(xb, xa)] = -r * c;
        m[(xb, pa)] = -r * s;
        m[(pb, pb)] = t;
        m[(pb, xa)] = r * s;
        m[(pb, pa)] = -r * c;
        Ok(op)
    }

    /// Rotation `a → a e^{−iθ}`, after which the `x` quadrature reads
    /// `x cos θ + p sin θ` of the input.
    pub fn phase_rotation(num_modes: usize, mode: usize, angle: f64) -> Result<Self> {
        check_mode(num_modes, mode)?;
        let (s, c) = angle.sin_cos();
        let mut op = SymplecticOp::identity(num_modes);
        let (x, p) = (2 * mode, 2 * mode + 1);
        op.matrix[(x, x)] = c;
        op.matrix[(x, p)] = s;
        op.matrix[(p, x)] = -s;
        op.matrix[(p, p)] = c;
        Ok(op)
    }

    /// Single-mode squeezer reducing the quadrature `x cos θ + p sin θ` by `e^{−r}`.
    pub fn squeezer(num_modes: usize, mode: usize, r: f64, theta: f64) -> Result<Self> {
        check_mode(num_modes, mode)?;
        check_squeezing(r)?;
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        let diag = DMatrix::from_row_slice(2, 2, &[(-r).exp(), 0.0, 0.0, r.exp()]);
        let block = rot.transpose() * diag * rot;
        let mut op = SymplecticOp::identity(num_modes);
        op.matrix.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&block);
        Ok(op)
    }

    pub fn displacement_op(num_modes: usize, mode: usize, alpha: Complex<f64>) -> Result<Self> {
        check_mode(num_modes, mode)?;
        let mut op = SymplecticOp::identity(num_modes);
        op.displacement[2 * mode] = std::f64::consts::SQRT_2 * alpha.re;
        op.displacement[2 * mode + 1] = std::f64::consts::SQRT_2 * alpha.im;
        Ok(op)
    }
}

fn check_mode(num_modes: usize, mode: usize) -> Result<()> {
    if mode >= num_modes {
        return Err(Error::ModeIndex { index: mode, modes: num_modes });
    }
    Ok(())
}
