//! Truncated ladder-operator matrices and Hermitian exponentials.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Annihilation operator `a` truncated to `dim` number states.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

/// `x = (a + a†)/√2`.
pub fn position(dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    (&a + a.adjoint()) * C64::from(std::f64::consts::FRAC_1_SQRT_2)
}

/// `p = (a − a†)/(i√2)`.
pub fn momentum(dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    (&a - a.adjoint()) * (-I * std::f64::consts::FRAC_1_SQRT_2)
}

/// Eigen-decomposition `H = V diag(λ) V†` of a Hermitian matrix.
pub fn hermitian_eigen(h: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

/// `V diag(f(λ)) V†`.
pub fn spectral_map(
    values: &DVector<f64>,
    vectors: &DMatrix<C64>,
    f: impl Fn(f64) -> C64,
) -> DMatrix<C64> {
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let phase = f(lam);
        for v in scaled.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(iH)` for Hermitian `H`, exactly unitary up to rounding.
pub fn expi_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(h);
    spectral_map(&values, &vectors, |lam| (I * lam).exp())
}

/// Frobenius norm of the leading `k × k` block.
pub fn leading_block_norm(m: &DMatrix<C64>, k: usize) -> f64 {
    let k = k.min(m.nrows()).min(m.ncols());
    m.view((0, 0), (k, k)).norm()
}

/// Frobenius norm of `m` restricted to the given row and column indices.
pub fn block_norm(m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> f64 {
    rows.iter()
        .flat_map(|&r| cols.iter().map(move |&c| m[(r, c)].norm_sqr()))
        .sum::<f64>()
        .sqrt()
}

/// Leading `k × k` block of a square matrix.
pub fn leading_block(m: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    m.view((0, 0), (k, k)).into_owned()
}

/// Embeds a vector of length `n` into a longer zero-padded one.
pub fn pad_vector(v: &DVector<C64>, len: usize) -> DVector<C64> {
    let mut out = DVector::zeros(len);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Embeds a square matrix into a larger zero-padded one.
pub fn pad_matrix(m: &DMatrix<C64>, size: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(size, size);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Kronecker product with mode-1-major (row-major grid) ordering.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_commutator_holds_away_from_cutoff() {
        let n = 12;
        let x = position(n);
        let p = momentum(n);
        let comm = &x * &p - &p * &x;
        for k in 0..n - 1 {
            assert_relative_eq!(comm[(k, k)].im, 1.0, epsilon = 1e-12);
            assert_relative_eq!(comm[(k, k)].re, 0.0, epsilon = 1e-12);
        }
        // the last level carries the truncation defect
        assert_relative_eq!(comm[(n - 1, n - 1)].im, 1.0 - n as f64, epsilon = 1e-12);
    }

    #[test]
    fn spectral_exponential_matches_pade() {
        // independent route: nalgebra's scaling-and-squaring Padé exponential
        let n = 10;
        let a = annihilation(n);
        let alpha = C64::new(0.7, -0.4);
        let gen = a.adjoint() * alpha - &a * alpha.conj();
        let h = &gen * (-I);
        let ours = expi_hermitian(&h);
        let reference = gen.exp();
        assert!((ours - reference).norm() < 1e-11);
    }

    #[test]
    fn exponential_is_unitary() {
        let x = position(15);
        let h = &x * &x * &x * C64::from(0.1);
        let u = expi_hermitian(&h);
        let id = DMatrix::<C64>::identity(15, 15);
        assert!((u.adjoint() * &u - id).norm() < 1e-12);
    }
}
