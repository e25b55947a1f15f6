//! Reconstruction of external potentials from prescribed densities.

mod fixed_point;
mod hamilton_jacobi;
mod taylor;

pub use fixed_point::{invert_fixed_point, verify_rho_problem, FixedPointReport, RhoReport};
pub use hamilton_jacobi::{
    construct_ks_potential, invert_single_particle_hj, invert_single_particle_hj_with, HjScheme,
};
pub use taylor::{invert_taylor_rg, TaylorInversion, MAX_TAYLOR_ORDER};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::propagator::{PotentialSampling, PotentialTrajectory};
use crate::sturm_liouville::SlProblem;

/// Right-hand sides assembled from density data integrate to zero only up
/// to the data's normalisation error amplified by time differencing; on a
/// ring they are projected onto the range of the operator.
pub(crate) fn projected_rhs(grid: &Grid, rhs: Vec<f64>) -> Vec<f64> {
    if grid.is_periodic() {
        grid.remove_mean(&rhs)
    } else {
        rhs
    }
}

/// How a vanishing Sturm–Liouville weight is handled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DegeneracyPolicy {
    /// Surface the degenerate weight as an error.
    #[default]
    Fail,
    /// Raise bond weights to a floor before solving.
    Clamp { floor: f64 },
}

impl DegeneracyPolicy {
    pub(crate) fn apply(&self, p: SlProblem) -> SlProblem {
        match self {
            DegeneracyPolicy::Fail => p,
            DegeneracyPolicy::Clamp { floor } => p.clamped(*floor),
        }
    }
}

/// Half-grid weight used by the fixed-point Sturm–Liouville solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    /// `(n_m + n_{m+1}) / 2` from the target density.
    #[default]
    Arithmetic,
    /// Arithmetic weight minus `½|ψ_{m+1} - ψ_m|²` from the current
    /// trajectory, which equals the bond density `Re ψ̄_m ψ_{m+1}`.
    Bond,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    /// Starting potential; zero when absent.
    pub initial: Option<PotentialTrajectory>,
    /// Mixing `α ∈ (0, 1]`.
    pub mixing: f64,
    /// Tolerance on `sup_t ‖v_{i+1}(t) - v_i(t)‖₂` (mean removed).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Time steps per restart window; the whole horizon when absent.
    pub restart_steps: Option<usize>,
    pub degeneracy: DegeneracyPolicy,
    pub sampling: PotentialSampling,
    pub weight: WeightScheme,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            initial: None,
            mixing: 1.0,
            tolerance: 1e-8,
            max_iterations: 200,
            restart_steps: None,
            degeneracy: DegeneracyPolicy::Fail,
            sampling: PotentialSampling::LeftEndpoint,
            weight: WeightScheme::Arithmetic,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidArgument(format!("mixing must lie in (0, 1], got {}", self.mixing)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.restart_steps == Some(0) {
            return Err(Error::InvalidArgument("restart window must span at least one step".into()));
        }
        if let DegeneracyPolicy::Clamp { floor } = self.degeneracy {
            if !(floor > 0.0) {
                return Err(Error::InvalidArgument(format!("clamp floor must be positive, got {floor}")));
            }
        }
        Ok(())
    }
}
