//! Truncated number-basis engine for the non-Gaussian steps of the cubic
//! phase circuit.
//!
//! Uses the same quadrature convention as [`crate::gaussian`]:
//! `x = (a + a†)/√2`, vacuum variance `1/2`. Single-mode unitaries are
//! exponentiated on a padded workspace and truncated; all unitarity and
//! commutation checks are made on the interior block (see [`interior`]).

mod counting;
mod operator;
mod state;
mod wavefunction;

pub use counting::{
    photon_count_fixed, photon_count_sampled, photon_number_distribution, tmsv, tmsv_min_dim,
    tmsv_tail_mass, PhotonCount, TMSV_TAIL_LIMIT,
};
pub use operator::{default_pad, interior, FockOperator, TWO_MODE_WORKSPACE_CAP};
pub use state::{FockState, NORM_TOL};
pub use wavefunction::{
    hermite_functions, hermite_matrix, homodyne_fock, quadrature_wavefunction, required_half_width,
    FockHomodyne, QuadratureGrid, Wavefunction, DEFAULT_GRID_POINTS,
};


pub(crate) use wavefunction::GridSampler;
