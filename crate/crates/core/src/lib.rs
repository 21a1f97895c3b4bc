//! Numerical laboratory for the matrix-valued Allen-Cahn equation
//! `dA/dt = Lap A - eps^-2 A (A^t A - I)` on the periodic torus
//! `[-1/2, 1/2)^2`: a diffusion-generated (projection) scheme, a direct IMEX
//! integrator, the associated asymptotic objects, and an
//! interface-measurement toolkit.

pub mod asymptotics;
pub mod field;
pub mod grid;
pub mod interface;
pub mod io;
pub mod linalg;
pub mod mbo;
pub mod pde;
pub mod spectral;

pub use field::{
    det_sign_field, energy, index_pair, l1_frobenius_distance, project_to_orthogonal,
    EnergyReport, FieldError, IndexPair, MatrixField, OrthogonalField, PhaseField,
};
pub use grid::{Grid, ScalarField, SignField};
pub use spectral::{heat_solve, laplacian, SpectralWorkspace};
