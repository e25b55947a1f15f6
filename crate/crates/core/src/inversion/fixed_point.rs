use num_complex::Complex64;
use rayon::prelude::*;

use super::{projected_rhs, InversionConfig, WeightScheme};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::HamiltonianSpec;
use crate::observables::{
    arithmetic_bond_weight, bond_density, current, density, dtt_density, internal_force_q, DensityTrajectory,
};
use crate::propagator::{evolve_amplitudes, Gauge, PotentialSampling, PotentialTrajectory};
use crate::sturm_liouville::{admissibility, solve_direct_1d, AdmissibilityReport, SlProblem};
use crate::wavefunction::WaveFunction;

/// Allowed `‖n(0) - density(ψ₀)‖₁`.
pub const INITIAL_DENSITY_TOLERANCE: f64 = 1e-6;
/// Allowed `‖∂ₜn(0) + D⁻J(ψ₀)‖₁`.
pub const INITIAL_RATE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// `r_i = sup_t ‖v_{i+1}(t) - v_i(t)‖₂` after mean removal, in order,
    /// concatenated over restart windows.
    pub residuals: Vec<f64>,
    /// `ξ_i = r_i / r_{i-1}` within each window.
    pub ratios: Vec<f64>,
    /// Largest `r_0 / (1 - ξ̂)` over windows; infinite when `ξ̂ ≥ 1`.
    pub first_step_bound: f64,
    /// `sup_t ‖v(t) - v_0(t)‖₂` of the returned potential against the
    /// initial guess, comparable with the first-step bound.
    pub distance_from_start: f64,
    /// `max_t ‖n[v] - n‖₁` for the returned potential.
    pub rho_l1: f64,
    pub converged: bool,
    /// Iterations spent in each restart window.
    pub window_iterations: Vec<usize>,
    /// Weight diagnostics at `t = 0`.
    pub admissibility: AdmissibilityReport,
}

impl FixedPointReport {
    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::max)
    }
}

/// Verdict on the residual density `ρ = n[v] - n_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoReport {
    /// `max_t ‖ρ(t)‖₁`.
    pub max_l1: f64,
    pub initial_l1: f64,
    /// `‖∂ₜρ(0)‖₁` by one-sided second-order differences.
    pub initial_rate_l1: f64,
    /// `max_t |∫ρ(t)|`.
    pub max_integral: f64,
}

fn l1(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().map(|x| x.abs()).sum::<f64>() * grid.spacing()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn initial_rate(series: &[Vec<f64>], dt: f64) -> Vec<f64> {
    (0..series[0].len()).map(|m| (-3.0 * series[0][m] + 4.0 * series[1][m] - series[2][m]) / (2.0 * dt)).collect()
}

fn check_inputs(n: &DensityTrajectory, psi0: &WaveFunction, spec: &HamiltonianSpec) -> Result<()> {
    spec.check_state(psi0)?;
    if n.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    if n.particles() != spec.particles() {
        return Err(Error::InvalidArgument(format!(
            "density is normalised to {} particles, system has {}",
            n.particles(),
            spec.particles()
        )));
    }
    if n.time().nodes() < 5 {
        return Err(Error::InvalidArgument("inversion needs at least 5 time nodes".into()));
    }
    Ok(())
}

fn check_initial_state(n: &DensityTrajectory, psi0: &WaveFunction) -> Result<()> {
    let grid = n.grid();
    let gap = l1(grid, &sub(n.at(0), &density(psi0)));
    if gap > INITIAL_DENSITY_TOLERANCE {
        return Err(Error::IncompatibleInitialState(format!(
            "‖n(0) - density(ψ₀)‖₁ = {gap:.3e} exceeds {INITIAL_DENSITY_TOLERANCE:.0e}"
        )));
    }
    let rate = initial_rate(n.values(), n.time().step());
    let div_j = grid.backward_divergence(&current(psi0))?;
    let mismatch: Vec<f64> = rate.iter().zip(&div_j).map(|(r, d)| r + d).collect();
    let gap = l1(grid, &mismatch);
    if gap > INITIAL_RATE_TOLERANCE {
        return Err(Error::IncompatibleInitialState(format!(
            "‖∂ₜn(0) + ∇·j(ψ₀)‖₁ = {gap:.3e} exceeds {INITIAL_RATE_TOLERANCE:.0e}"
        )));
    }
    Ok(())
}

/// Bond weight of the iteration at one time node.
fn sl_weight(grid: &Grid, scheme: WeightScheme, n: &[f64], psi: &WaveFunction) -> Result<Vec<f64>> {
    let arithmetic = arithmetic_bond_weight(grid, n)?;
    Ok(match scheme {
        WeightScheme::Arithmetic => arithmetic,
        WeightScheme::Bond => bond_density(psi)
            .into_iter()
            .zip(arithmetic)
            .enumerate()
            .map(|(b, (w, a))| match grid.bond_nodes(b) {
                (Some(_), Some(_)) => w,
                _ => a,
            })
            .collect(),
    })
}

struct Window<'a> {
    spec: &'a HamiltonianSpec,
    grid: Grid,
    cfg: &'a InversionConfig,
    densities: &'a [Vec<f64>],
    dtt: &'a [Vec<f64>],
}

impl Window<'_> {
    /// One application of the iteration map on the nodes of this window.
    fn update(&self, psi_start: &WaveFunction, v: &PotentialTrajectory) -> Result<Vec<Vec<f64>>> {
        let steps = v.time().steps();
        let amps = evolve_amplitudes(self.spec, psi_start.amplitudes().to_vec(), v, self.cfg.sampling, 0, steps)?;
        amps.into_par_iter()
            .enumerate()
            .map(|(i, a)| {
                let psi = psi_start.with_amplitudes(a);
                let q = internal_force_q(&psi, self.spec)?;
                let rhs = projected_rhs(&self.grid, sub(&q, &self.dtt[i]));
                let w = sl_weight(&self.grid, self.cfg.weight, &self.densities[i], &psi)?;
                let p = self.cfg.degeneracy.apply(SlProblem::with_bond_weight(self.grid, w, rhs)?);
                let solved = solve_direct_1d(&p)?;
                Ok(self.grid.remove_mean(&solved))
            })
            .collect()
    }

    fn run(&self, psi_start: &WaveFunction, v0: PotentialTrajectory) -> Result<WindowLog> {
        let alpha = self.cfg.mixing;
        let mut v = v0;
        let mut residuals = Vec::new();
        let mut converged = false;
        for _ in 0..self.cfg.max_iterations {
            let target = self.update(psi_start, &v)?;
            let mut r = 0.0_f64;
            let next: Vec<Vec<f64>> = v
                .values()
                .iter()
                .zip(&target)
                .map(|(old, new)| {
                    let mixed: Vec<f64> = old.iter().zip(new).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect();
                    let mixed = self.grid.remove_mean(&mixed);
                    r = r.max(self.grid.norm_real(&self.grid.remove_mean(&sub(&mixed, old))));
                    mixed
                })
                .collect();
            v = PotentialTrajectory::new(self.grid, *v.time(), next, Gauge::MeanZero)?;
            residuals.push(r);
            if r <= self.cfg.tolerance {
                converged = true;
                break;
            }
        }
        Ok(WindowLog { v, residuals, converged })
    }
}

struct WindowLog {
    v: PotentialTrajectory,
    residuals: Vec<f64>,
    converged: bool,
}

/// Damped global fixed-point iteration
/// `v_{i+1} = (1-α) v_i + α A_n⁻¹(q[v_i] - ∂ₜ²n)` with `A_n = -∇·(n∇·)`,
/// solved independently at every time node. With restarts the horizon is
/// split into windows that are converged one after another, each anchored
/// at the state reached under the already converged potential.
///
/// Running out of iterations is not an error: the report carries
/// `converged = false`.
pub fn invert_fixed_point(
    n: &DensityTrajectory,
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    cfg: &InversionConfig,
) -> Result<(PotentialTrajectory, FixedPointReport)> {
    cfg.validate()?;
    check_inputs(n, psi0, spec)?;
    check_initial_state(n, psi0)?;
    let grid = *n.grid();
    let time = *n.time();
    let v0 = match &cfg.initial {
        Some(v) => {
            if v.grid() != &grid || v.time() != &time {
                return Err(Error::GridMismatch);
            }
            v.to_mean_zero()
        }
        None => PotentialTrajectory::zero(grid, time),
    };
    let dtt = dtt_density(n)?;
    let adm = {
        let rhs = projected_rhs(&grid, sub(&internal_force_q(psi0, spec)?, &dtt[0]));
        admissibility(&SlProblem::new(grid, n.at(0), rhs)?, 1.0)?
    };

    let steps = time.steps();
    let width = cfg.restart_steps.unwrap_or(steps).min(steps);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(time.nodes());
    let mut psi = psi0.clone();
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut window_iterations = Vec::new();
    let mut first_step_bound = 0.0_f64;
    let mut converged = true;
    let mut from = 0;
    while from < steps {
        let to = (from + width).min(steps);
        let guess = v0.window(from, to)?;
        let window = Window { spec, grid, cfg, densities: &n.values()[from..=to], dtt: &dtt[from..=to] };
        let log = window.run(&psi, guess)?;
        let local: Vec<f64> = log.residuals.windows(2).map(|w| w[1] / w[0]).collect();
        let xi = local.iter().copied().fold(0.0_f64, f64::max);
        let bound = if xi < 1.0 { log.residuals[0] / (1.0 - xi) } else { f64::INFINITY };
        first_step_bound = first_step_bound.max(bound);
        converged &= log.converged;
        window_iterations.push(log.residuals.len());
        residuals.extend_from_slice(&log.residuals);
        ratios.extend(local);

        let amps = evolve_amplitudes(spec, psi.amplitudes().to_vec(), &log.v, cfg.sampling, 0, to - from)?;
        psi = psi.with_amplitudes(amps.into_iter().last().expect("non-empty"));
        let skip = usize::from(from > 0);
        values.extend(log.v.into_values().into_iter().skip(skip));
        from = to;
    }
    let v = PotentialTrajectory::new(grid, time, values, Gauge::MeanZero)?;
    let distance_from_start = v
        .values()
        .iter()
        .zip(v0.values())
        .map(|(a, b)| grid.norm_real(&grid.remove_mean(&sub(a, b))))
        .fold(0.0, f64::max);
    let rho = rho_report(&v, n, psi0, spec, cfg.sampling)?;
    let report = FixedPointReport {
        iterations: residuals.len(),
        residuals,
        ratios,
        first_step_bound,
        distance_from_start,
        rho_l1: rho.max_l1,
        converged,
        window_iterations,
        admissibility: adm,
    };
    Ok((v, report))
}

/// Propagate `ψ₀` under `v` and measure `ρ = n[v] - n_target`.
pub fn verify_rho_problem(
    v: &PotentialTrajectory,
    n_target: &DensityTrajectory,
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<RhoReport> {
    spec.check_state(psi0)?;
    if v.grid() != n_target.grid() || v.time() != n_target.time() || v.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    rho_report(v, n_target, psi0, spec, sampling)
}

fn rho_report(
    v: &PotentialTrajectory,
    n_target: &DensityTrajectory,
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<RhoReport> {
    let grid = n_target.grid();
    let amps: Vec<Vec<Complex64>> =
        evolve_amplitudes(spec, psi0.amplitudes().to_vec(), v, sampling, 0, v.time().steps())?;
    let rho: Vec<Vec<f64>> = amps
        .into_par_iter()
        .zip(n_target.values().par_iter())
        .map(|(a, target)| sub(&density(&psi0.with_amplitudes(a)), target))
        .collect();
    let max_l1 = rho.iter().map(|r| l1(grid, r)).fold(0.0, f64::max);
    let max_integral = rho.iter().map(|r| r.iter().sum::<f64>() * grid.spacing()).fold(0.0, |a: f64, x| a.max(x.abs()));
    let initial_rate_l1 = if rho.len() >= 3 { l1(grid, &initial_rate(&rho, v.time().step())) } else { 0.0 };
    Ok(RhoReport { max_l1, initial_l1: l1(grid, &rho[0]), initial_rate_l1, max_integral })
}
