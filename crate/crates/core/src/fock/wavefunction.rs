use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::warning::{emit, NumericalWarning};

use super::state::FockState;

/// Points on the default homodyne grid.
pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Uniform grid of quadrature values.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || n < 2 {
            return Err(Error::param("grid", format!("need half_width > 0 and n >= 2, got {half_width}, {n}")));
        }
        let step = 2.0 * half_width / (n - 1) as f64;
        Ok(QuadratureGrid { points: (0..n).map(|i| -half_width + i as f64 * step).collect() })
    }

    /// 2048 points over `±(√(2·dim) + 3)`.
    pub fn default_for(dim: usize) -> Self {
        QuadratureGrid::new(required_half_width(dim) + 3.0, DEFAULT_GRID_POINTS).expect("valid grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.points[1] - self.points[0]
    }

    pub fn half_width(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let n = self.points.len();
        (0..n).map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h }).collect()
    }

    /// `∫ f` by the trapezoid rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Turning point `√(2·dim)` of the highest kept number state.
pub fn required_half_width(dim: usize) -> f64 {
    (2.0 * dim as f64).sqrt()
}

/// Hermite functions `ψ₀ … ψ_{n−1}` at `x` for the `x = (a + a†)/√2`
/// convention, via the stable three-term recurrence.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if n > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = (2.0 / kf).sqrt() * x * out[k - 1] - ((kf - 1.0) / kf).sqrt() * out[k - 2];
    }
    out
}

/// `H[i, n] = ψₙ(xᵢ)`.
pub fn hermite_matrix(dim: usize, grid: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(grid.len(), dim);
    for (i, &x) in grid.iter().enumerate() {
        for (n, v) in hermite_functions(dim, x).into_iter().enumerate() {
            m[(i, n)] = v;
        }
    }
    m
}

/// Position-representation wavefunction sampled on a grid.
#[derive(Clone, Debug)]
pub struct Wavefunction {
    pub x: Vec<f64>,
    pub psi: Vec<C64>,
    pub warnings: Vec<NumericalWarning>,
}

impl Wavefunction {
    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// `ψ(x) = Σ cₙ ψₙ(x)` for a single-mode state.
pub fn quadrature_wavefunction(state: &FockState, x_grid: &[f64]) -> Result<Wavefunction> {
    let v = state
        .vector()
        .ok_or_else(|| Error::DimensionMismatch("wavefunction needs a single-mode state".into()))?;
    if x_grid.is_empty() {
        return Err(Error::Empty("x_grid"));
    }
    let dim = state.dim();
    let psi = x_grid
        .iter()
        .map(|&x| hermite_functions(dim, x).iter().zip(v.iter()).map(|(h, c)| c * *h).sum())
        .collect();
    let mut warnings = Vec::new();
    let lo = x_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let required = required_half_width(dim);
    if lo > -required || hi < required {
        emit(&mut warnings, NumericalWarning::GridCoverage { half_width: hi.min(-lo), required });
    }
    Ok(Wavefunction { x: x_grid.to_vec(), psi, warnings })
}

/// Homodyne (`x`-quadrature) samples of a single-mode Fock state.
#[derive(Clone, Debug)]
pub struct FockHomodyne {
    pub samples: Vec<f64>,
    pub warnings: Vec<NumericalWarning>,
}

/// Draws `n_samples` from `|ψ(x)|²` by inverting the piecewise-linear CDF on
/// the default grid.
pub fn homodyne_fock<R: Rng + ?Sized>(state: &FockState, n_samples: usize, rng: &mut R) -> Result<FockHomodyne> {
    let grid = QuadratureGrid::default_for(state.dim());
    let wf = quadrature_wavefunction(state, grid.points())?;
    let sampler = GridSampler::new(grid.points(), &wf.density())?;
    let samples = (0..n_samples).map(|_| sampler.sample(rng)).collect();
    Ok(FockHomodyne { samples, warnings: wf.warnings })
}

/// Inverse-CDF sampler for a density tabulated on a uniform grid, linear
/// between grid points.
pub(crate) struct GridSampler<'a> {
    x: &'a [f64],
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> GridSampler<'a> {
    pub(crate) fn new(x: &'a [f64], density: &[f64]) -> Result<Self> {
        let h = x[1] - x[0];
        let mut cumulative = Vec::with_capacity(x.len() - 1);
        let mut acc = 0.0;
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * h;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::param("density", "tabulated density has zero mass"));
        }
        Ok(GridSampler { x, density: density.to_vec(), cumulative })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("non-empty");
        let target = rng.random::<f64>() * total;
        let cell = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
        let before = if cell == 0 { 0.0 } else { self.cumulative[cell - 1] };
        let (a, b) = (self.density[cell], self.density[cell + 1]);
        let h = self.x[cell + 1] - self.x[cell];
        let mass = self.cumulative[cell] - before;
        let u = if mass > 0.0 { ((target - before) / mass).clamp(0.0, 1.0) } else { 0.5 };
        // density linear in t ∈ [0,1]: solve (b−a)/2 t² + a t = u (a+b)/2
        let t = if (b - a).abs() < 1e-12 * (a + b).max(f64::MIN_POSITIVE) {
            u
        } else {
            let qa = 0.5 * (b - a);
            let rhs = u * 0.5 * (a + b);
            let disc = (a * a + 4.0 * qa * rhs).max(0.0);
            ((-a + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0)
        };
        self.x[cell] + t * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockOperator;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_profile() {
        let wf = quadrature_wavefunction(&FockState::vacuum(6).unwrap(), &[-1.0, 0.0, 0.7]).unwrap();
        for (x, psi) in wf.x.iter().zip(&wf.psi) {
            let expect = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
            assert_relative_eq!(psi.re, expect, epsilon = 1e-15);
        }
        assert!(!wf.warnings.is_empty(), "grid does not reach ±√12");
    }

    #[test]
    fn first_excited_state_has_node() {
        let wf = quadrature_wavefunction(&FockState::number(1, 4).unwrap(), &[0.0]).unwrap();
        assert_eq!(wf.psi[0].norm(), 0.0);
    }

    #[test]
    fn coherent_state_is_shifted_gaussian() {
        let alpha = 0.8;
        let st = FockState::coherent(C64::from(alpha), 40).unwrap();
        let xs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.2).collect();
        let wf = quadrature_wavefunction(&st, &xs).unwrap();
        let x0 = std::f64::consts::SQRT_2 * alpha;
        for (x, psi) in xs.iter().zip(&wf.psi) {
            let expect = std::f64::consts::PI.powf(-0.25) * (-(x - x0).powi(2) / 2.0).exp();
            assert!((psi - C64::from(expect)).norm() < 1e-6);
        }
    }

    #[test]
    fn normalization_on_default_grid() {
        let st = FockState::coherent(C64::new(1.0, 0.5), 20).unwrap();
        let grid = QuadratureGrid::default_for(20);
        let wf = quadrature_wavefunction(&st, grid.points()).unwrap();
        assert!(wf.warnings.is_empty());
        assert_relative_eq!(grid.integrate(&wf.density()), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn homodyne_sample_moments() {
        let n = 100_000;
        let mut rng = seeded(11);
        for (state, second_moment) in [
            (FockState::vacuum(10).unwrap(), 0.5),
            (FockState::number(1, 10).unwrap(), 1.5),
            (
                FockOperator::squeeze(0.3, 40).unwrap().apply(&FockState::vacuum(40).unwrap()).unwrap(),
                (-0.6f64).exp() / 2.0,
            ),
        ] {
            let h = homodyne_fock(&state, n, &mut rng).unwrap();
            let m2 = h.samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let m4 = state.position_moments(0, 4).unwrap()[3];
            let sigma = ((m4 - second_moment * second_moment) / n as f64).sqrt();
            assert!((m2 - second_moment).abs() < 4.0 * sigma, "{m2} vs {second_moment}");
        }
    }
}
