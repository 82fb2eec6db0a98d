use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    annihilation, expi_hermitian, hermitian_eigen, leading_block_norm, momentum, pad_vector, position, spectral_map, I,
};
use crate::warning::{emit, NumericalWarning};

use super::state::FockState;

/// Largest two-mode workspace, in basis states, that an operator may be
/// built on.
pub const TWO_MODE_WORKSPACE_CAP: usize = 4096;

/// Norm loss below which applying a truncated unitary is not reported.
const LEAKAGE_TOL: f64 = 1e-8;

/// Default workspace padding for single-mode operators.
pub fn default_pad(dim: usize) -> usize {
    dim / 2
}

/// Size of the block on which truncated operators are trusted: indices below
/// `dim − default_pad(dim)`.
pub fn interior(dim: usize) -> usize {
    dim - default_pad(dim)
}

/// Operator on one or two truncated modes.
///
/// Unitaries are exponentiated on a workspace of `dim + pad` levels per mode
/// and then restricted to `dim`, so the kept block is insulated from the
/// cutoff artefacts of the truncated generator.
#[derive(Clone, Debug)]
pub struct FockOperator {
    label: String,
    dim: usize,
    pad: usize,
    unitary: bool,
    repr: Repr,
    warnings: Vec<NumericalWarning>,
}

#[derive(Clone, Debug)]
enum Repr {
    /// Dense single-mode matrix of size `dim + pad`.
    Single(DMatrix<C64>),
    /// `(L ⊗ R) diag(phases) (L ⊗ R)†` on a `(dim + pad)²` workspace.
    Product { left: DMatrix<C64>, right: DMatrix<C64>, phases: DMatrix<C64> },
}

impl FockOperator {
    fn single(label: impl Into<String>, dim: usize, pad: usize, unitary: bool, m: DMatrix<C64>) -> Self {
        FockOperator { label: label.into(), dim, pad, unitary, repr: Repr::Single(m), warnings: Vec::new() }
    }

    pub fn annihilation(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::single("a", dim, 1, false, annihilation(dim + 1)))
    }

    pub fn creation(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::single("a†", dim, 1, false, annihilation(dim + 1).adjoint()))
    }

    pub fn position(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::single("x", dim, 1, false, position(dim + 1)))
    }

    pub fn momentum(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::single("p", dim, 1, false, momentum(dim + 1)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::single("1", dim, 0, true, DMatrix::identity(dim, dim)))
    }

    /// `D(α) = exp(α a† − α* a)`.
    pub fn displacement(alpha: C64, dim: usize) -> Result<Self> {
        Self::displacement_padded(alpha, dim, default_pad(dim))
    }

    pub fn displacement_padded(alpha: C64, dim: usize, pad: usize) -> Result<Self> {
        check_dim(dim)?;
        check_finite("alpha", alpha.re)?;
        check_finite("alpha", alpha.im)?;
        let w = dim + pad;
        let a = annihilation(w);
        let generator = a.adjoint() * alpha - &a * alpha.conj();
        let mut op = Self::single(format!("D({alpha})"), dim, pad, true, expi_hermitian(&(generator * -I)));
        let limit = dim as f64 / 4.0;
        if alpha.norm_sqr() > limit {
            emit(
                &mut op.warnings,
                NumericalWarning::OperatorRange { context: "displacement |α|²".into(), value: alpha.norm_sqr(), limit },
            );
        }
        Ok(op)
    }

    /// `S(s) = exp((s/2)(a² − a†²))`; squeezes `x` by `e^{−s}`.
    pub fn squeeze(s: f64, dim: usize) -> Result<Self> {
        Self::squeeze_padded(s, dim, default_pad(dim))
    }

    pub fn squeeze_padded(s: f64, dim: usize, pad: usize) -> Result<Self> {
        check_dim(dim)?;
        check_finite("s", s)?;
        let w = dim + pad;
        let a = annihilation(w);
        let generator = (&a * &a - a.adjoint() * a.adjoint()) * C64::from(s / 2.0);
        let mut op = Self::single(format!("S({s})"), dim, pad, true, expi_hermitian(&(generator * -I)));
        // mean photon number of S(s)|0⟩ against the cutoff
        let nbar = s.sinh().powi(2);
        let limit = dim as f64 / 8.0;
        if nbar > limit {
            emit(
                &mut op.warnings,
                NumericalWarning::OperatorRange { context: "squeezing sinh²s".into(), value: nbar, limit },
            );
        }
        Ok(op)
    }

    /// `V_γ = exp(iγx³)` with `x` built on `dim + pad` levels.
    pub fn cubic_phase(gamma: f64, dim: usize, pad: usize) -> Result<Self> {
        check_dim(dim)?;
        check_finite("gamma", gamma)?;
        let w = dim + pad;
        let (values, vectors) = hermitian_eigen(&position(w));
        let m = spectral_map(&values, &vectors, |x| (I * (gamma * x * x * x)).exp());
        let mut op = Self::single(format!("V({gamma})"), dim, pad, true, m);
        // The momentum kick 3γx² at the edge of the kept block must stay
        // inside the momentum range the workspace can represent.
        let kick = 6.0 * gamma.abs() * dim as f64;
        let limit = (2.0 * w as f64).sqrt();
        if kick > limit {
            emit(
                &mut op.warnings,
                NumericalWarning::OperatorRange { context: "cubic phase edge kick".into(), value: kick, limit },
            );
        }
        Ok(op)
    }

    /// `exp(i g x₁ p₂)` on two modes, with workspace `2·dim` per mode.
    pub fn qnd_coupling(g: f64, dim: usize) -> Result<Self> {
        Self::qnd_coupling_padded(g, dim, dim)
    }

    pub fn qnd_coupling_padded(g: f64, dim: usize, pad: usize) -> Result<Self> {
        check_dim(dim)?;
        check_finite("g", g)?;
        let w = dim + pad;
        if w * w > TWO_MODE_WORKSPACE_CAP {
            return Err(Error::WorkspaceTooLarge { requested: w * w, cap: TWO_MODE_WORKSPACE_CAP });
        }
        // x₁ and p₂ commute and act on different factors, so the generator
        // is diagonal in the product of their eigenbases.
        let (xi, left) = hermitian_eigen(&position(w));
        let (pi, right) = hermitian_eigen(&momentum(w));
        let phases = DMatrix::from_fn(w, w, |j, k| (I * (g * xi[j] * pi[k])).exp());
        Ok(FockOperator {
            label: format!("QND({g})"),
            dim,
            pad,
            unitary: true,
            repr: Repr::Product { left, right, phases },
            warnings: Vec::new(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn num_modes(&self) -> usize {
        match self.repr {
            Repr::Single(_) => 1,
            Repr::Product { .. } => 2,
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn warnings(&self) -> &[NumericalWarning] {
        &self.warnings
    }

    /// The operator restricted to the kept `dim` levels per mode
    /// (`dim² × dim²`, row-major, for two modes).
    pub fn matrix(&self) -> DMatrix<C64> {
        let d = self.dim;
        match &self.repr {
            Repr::Single(m) => m.view((0, 0), (d, d)).into_owned(),
            Repr::Product { left, right, phases } => {
                let w = left.nrows();
                let l = left.rows(0, d);
                let r = right.rows(0, d);
                // B_j = R diag(phases[j, ·]) R†, restricted to kept rows
                let blocks: Vec<DMatrix<C64>> = (0..w)
                    .map(|j| {
                        let mut scaled = r.clone_owned();
                        for k in 0..w {
                            let ph = phases[(j, k)];
                            for v in scaled.column_mut(k).iter_mut() {
                                *v *= ph;
                            }
                        }
                        scaled * r.adjoint()
                    })
                    .collect();
                let mut out = DMatrix::zeros(d * d, d * d);
                for m1 in 0..d {
                    for n1 in 0..d {
                        let mut acc = DMatrix::<C64>::zeros(d, d);
                        for (j, b) in blocks.iter().enumerate() {
                            let c = l[(m1, j)] * l[(n1, j)].conj();
                            acc += b * c;
                        }
                        out.view_mut((m1 * d, n1 * d), (d, d)).copy_from(&acc);
                    }
                }
                out
            }
        }
    }

    /// Full workspace matrix of a single-mode operator.
    pub fn workspace_matrix(&self) -> Option<&DMatrix<C64>> {
        match &self.repr {
            Repr::Single(m) => Some(m),
            Repr::Product { .. } => None,
        }
    }

    /// `‖[U, x]‖_F` on the leading `k × k` block, with both operators on the
    /// workspace. Zero for any function of `x`.
    pub fn interior_position_commutator(&self, k: usize) -> Result<f64> {
        let Repr::Single(m) = &self.repr else {
            return Err(Error::DimensionMismatch("commutator check needs a single-mode operator".into()));
        };
        let x = position(m.nrows());
        Ok(leading_block_norm(&(m * &x - &x * m), k.min(self.dim)))
    }

    /// For the QND coupling `U = exp(i g x₁ p₂)`: `‖U x₂ − (x₂ + g x₁) U‖_F`
    /// restricted to the first `k` levels per mode on both sides, which is
    /// the statement `U x₂ U† = x₂ + g x₁` (equivalently
    /// `U† x₂ U = x₂ − g x₁`) without truncated products.
    pub fn qnd_heisenberg_residual(&self, g: f64, k: usize) -> Result<f64> {
        let Repr::Product { left, right, phases } = &self.repr else {
            return Err(Error::DimensionMismatch("Heisenberg check needs the two-mode QND operator".into()));
        };
        let w = left.nrows();
        let k = k.min(self.dim);
        let x = position(w);
        let apply = |grid: &DMatrix<C64>| {
            let mut phi = left.adjoint() * grid * right.map(|c| c.conj());
            phi.component_mul_assign(phases);
            left * phi * right.transpose()
        };
        let mut total = 0.0;
        for n1 in 0..k {
            for n2 in 0..k {
                let mut e = DMatrix::<C64>::zeros(w, w);
                e[(n1, n2)] = C64::from(1.0);
                // x₂ acts on the column index, x₁ on the row index
                let lhs = apply(&(&e * &x));
                let ue = apply(&e);
                let rhs = &ue * &x + &x * &ue * C64::from(g);
                let diff = (lhs - rhs).view((0, 0), (k, k)).norm_squared();
                total += diff;
            }
        }
        Ok(total.sqrt())
    }

    /// `‖C†C − I‖_F` where `C` holds the workspace columns of the first
    /// `k` levels per mode. Measures unitarity of the computed operator on
    /// the block that the truncation does not corrupt.
    pub fn interior_unitarity_residual(&self, k: usize) -> f64 {
        let k = k.min(self.dim);
        let cols = match &self.repr {
            Repr::Single(m) => m.columns(0, k).into_owned(),
            Repr::Product { left, right, phases } => {
                let w = left.nrows();
                let mut cols = DMatrix::zeros(w * w, k * k);
                for n1 in 0..k {
                    for n2 in 0..k {
                        // U|n₁n₂⟩ = Σ_jk L[·,j]⊗R[·,k] φ_jk conj(L[n₁,j] R[n₂,k])
                        let coeff = DMatrix::from_fn(w, w, |j, q| {
                            phases[(j, q)] * (left[(n1, j)] * right[(n2, q)]).conj()
                        });
                        let grid = left * coeff * right.transpose();
                        let c = n1 * k + n2;
                        for a in 0..w {
                            for b in 0..w {
                                cols[(a * w + b, c)] = grid[(a, b)];
                            }
                        }
                    }
                }
                cols
            }
        };
        let n = cols.ncols();
        (cols.adjoint() * &cols - DMatrix::<C64>::identity(n, n)).norm()
    }

    /// Applies the operator to a state with matching mode count and `dim`.
    ///
    /// For unitaries, norm that leaks past the cutoff is reported as a
    /// [`NumericalWarning::Leakage`] on the returned state.
    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if state.dim() != self.dim || state.num_modes() != self.num_modes() {
            return Err(Error::DimensionMismatch(format!(
                "operator `{}` acts on {} mode(s) of dim {}, state has {} mode(s) of dim {}",
                self.label,
                self.num_modes(),
                self.dim,
                state.num_modes(),
                state.dim()
            )));
        }
        let d = self.dim;
        let mut out = match &self.repr {
            Repr::Single(m) => {
                let v = state.vector().expect("single-mode state");
                state.with_amplitudes_one(m.view((0, 0), (d, d)) * v)
            }
            Repr::Product { left, right, phases } => {
                let g = state.grid().expect("two-mode state");
                let w = left.nrows();
                let mut big = DMatrix::zeros(w, w);
                big.view_mut((0, 0), (d, d)).copy_from(g);
                // (L⊗R)† vec(Ψ) = vec(L† Ψ conj(R)) for row-major vec
                let mut phi = left.adjoint() * big * right.map(|c| c.conj());
                phi.component_mul_assign(phases);
                let res = left * phi * right.transpose();
                state.with_grid(res.view((0, 0), (d, d)).into_owned())
            }
        };
        out.extend_warnings(&self.warnings);
        if self.unitary {
            let lost = state.norm_sqr() - out.norm_sqr();
            if lost > LEAKAGE_TOL {
                out.push_warning(NumericalWarning::Leakage { context: self.label.clone(), lost_norm: lost });
            }
        }
        Ok(out)
    }

    /// Applies a single-mode operator to one mode of a two-mode state.
    pub fn apply_to_mode(&self, state: &FockState, mode: usize) -> Result<FockState> {
        let (Repr::Single(m), Some(g)) = (&self.repr, state.grid()) else {
            return Err(Error::DimensionMismatch(
                "apply_to_mode needs a single-mode operator and a two-mode state".into(),
            ));
        };
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs state dim {}",
                self.dim,
                state.dim()
            )));
        }
        let d = self.dim;
        let u = m.view((0, 0), (d, d));
        let res = match mode {
            0 => u * g,
            1 => g * u.transpose(),
            _ => return Err(Error::ModeIndex { index: mode, modes: 2 }),
        };
        let mut out = state.with_grid(res);
        out.extend_warnings(&self.warnings);
        if self.unitary {
            let lost = state.norm_sqr() - out.norm_sqr();
            if lost > LEAKAGE_TOL {
                out.push_warning(NumericalWarning::Leakage { context: self.label.clone(), lost_norm: lost });
            }
        }
        Ok(out)
    }

    /// Applies a single-mode operator on its full workspace and returns the
    /// untruncated result (length `dim + pad`).
    pub fn apply_on_workspace(&self, state: &FockState) -> Result<DVector<C64>> {
        let (Repr::Single(m), Some(v)) = (&self.repr, state.vector()) else {
            return Err(Error::DimensionMismatch("workspace application needs single-mode operands".into()));
        };
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs state dim {}",
                self.dim,
                state.dim()
            )));
        }
        Ok(m * pad_vector(v, m.nrows()))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::param("dim", format!("truncation dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, "must be finite"));
    }
    Ok(())
}
