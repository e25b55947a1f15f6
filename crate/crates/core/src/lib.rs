//! Real-space grid laboratory for the time-dependent density–potential map.

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dpmf;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod hamiltonian;
pub mod inversion;
pub mod linalg;
pub mod observables;
pub mod propagator;
pub mod response;
pub mod sturm_liouville;
pub mod wavefunction;

pub use error::{Error, Result};
pub use grid::{Boundary, Grid};
pub use hamiltonian::{ground_state, spectrum, GroundState, HamiltonianSpec, SoftCore, SpectralDecomposition};
pub use observables::DensityTrajectory;
pub use propagator::{Gauge, PotentialSampling, PotentialTrajectory, TimeGrid, Trajectory};
pub use wavefunction::{Symmetry, WaveFunction};
