//! Subcommand pipelines. Each writes its tables into the output directory
//! and reports a numerical failure through [`Outcome`] once the report is on
//! disk.

use densmap::dpmf::DpmfArray;
use densmap::functionals::{lda_components, lda_scaling_check, RadialDensity};
use densmap::inversion::{
    construct_ks_potential, invert_fixed_point, invert_single_particle_hj_with, invert_taylor_rg, verify_rho_problem,
    DegeneracyPolicy, HjScheme, InversionConfig, WeightScheme,
};
use densmap::observables::{
    continuity_residual, density, force_divergence, global_force_balance, internal_force_q, weight_diagnostics,
};
use densmap::propagator::{
    crank_nicolson_step, propagate_neumann_series, propagate_spectral_static, propagate_stepwise,
};
use densmap::response::{
    chi_lehmann, chi_time_domain, default_omega_grid, dominant_frequency, expectation_series, kubo_response,
    Observable, ResponseKernel, Transitions,
};
use densmap::sturm_liouville::{admissibility, SlProblem};
use densmap::{spectrum, Boundary, DensityTrajectory, Grid, PotentialTrajectory, Trajectory, WaveFunction};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Output};
use crate::setup::{nearest_node, read_dpmf, real_rows, PotentialModel, System};

/// Result of a pipeline whose outputs were written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub failure: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Outcome::default()
    }
}

type Run = Result<Outcome, CliError>;

fn rows(values: &[Vec<f64>]) -> Result<DpmfArray, CliError> {
    Ok(DpmfArray::from_rows(values)?)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn l1(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().map(|x| x.abs()).sum::<f64>() * grid.spacing()
}

fn dipole(grid: &Grid, n: &[f64]) -> f64 {
    n.iter().zip(grid.coordinates()).map(|(d, x)| d * x).sum::<f64>() * grid.spacing()
}

/// `(t, ‖v - v*‖₂ / ‖v*‖₂)` after mean removal.
fn recovery_rows(grid: &Grid, v: &PotentialTrajectory, truth: &PotentialTrajectory) -> Vec<Vec<Cell>> {
    v.values()
        .iter()
        .zip(truth.values())
        .zip(v.time().times())
        .map(|((a, b), t)| {
            let b0 = grid.remove_mean(b);
            let err = grid.norm_real(&sub(&grid.remove_mean(a), &b0)) / grid.norm_real(&b0).max(f64::MIN_POSITIVE);
            vec![t.into(), err.into()]
        })
        .collect()
}

fn time_series(times: &[f64], columns: &[&[f64]]) -> Vec<Vec<Cell>> {
    times
        .iter()
        .enumerate()
        .map(|(i, t)| std::iter::once(Cell::from(*t)).chain(columns.iter().map(|c| Cell::from(c[i]))).collect())
        .collect()
}

/// Target density from a file or from propagating the configured system;
/// the generating potential is returned in the latter case.
fn target_density(cfg: &RunConfig, sys: &System) -> Result<(DensityTrajectory, Option<PotentialTrajectory>), CliError> {
    match cfg.choice("inversion.target") {
        "file" => {
            let path = cfg
                .path("inversion.density_file")
                .ok_or_else(|| CliError::Validation("inversion.target = file needs inversion.density_file".into()))?;
            let values = real_rows(&read_dpmf(&path)?, sys.grid.points(), "target density")?;
            Ok((DensityTrajectory::new(sys.grid, sys.time, sys.spec.particles(), values)?, None))
        }
        _ => {
            let traj = propagate_stepwise(&sys.psi0, &sys.potential, &sys.spec, sys.sampling)?;
            Ok((DensityTrajectory::from_trajectory(&traj)?, Some(sys.potential.clone())))
        }
    }
}

pub fn propagate(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let traj: Trajectory = match cfg.choice("propagate.method") {
        "neumann" => propagate_neumann_series(&sys.psi0, &sys.potential, &sys.spec, cfg.count("propagate.order"))?,
        "spectral" => propagate_spectral_static(&sys.psi0, &sys.spec, &sys.time)?,
        _ => propagate_stepwise(&sys.psi0, &sys.potential, &sys.spec, sys.sampling)?,
    };
    let times = sys.time.times();
    let norms: Vec<f64> = traj.states().iter().map(WaveFunction::norm).collect();
    let densities: Vec<Vec<f64>> = traj.states().iter().map(density).collect();
    let dipoles: Vec<f64> = densities.iter().map(|n| dipole(&sys.grid, n)).collect();
    let mut continuity = vec![0.0];
    continuity.extend(continuity_residual(&traj)?);
    out.csv("norm.csv", &["t", "norm"], time_series(&times, &[&norms]))?;
    out.csv(
        "observables.csv",
        &["t", "norm", "dipole", "continuity_residual"],
        time_series(&times, &[&norms, &dipoles, &continuity]),
    )?;
    out.dpmf("density.dpmf", &rows(&densities)?)?;
    let last = traj.last();
    let dims = vec![sys.grid.points(); last.rank()];
    out.dpmf("final_state.dpmf", &DpmfArray::complex(dims, last.amplitudes().to_vec())?)?;
    Ok(Outcome::ok())
}

pub fn spectrum_cmd(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let count = cfg.count("spectrum.count").min(sys.spec.dimension());
    let dec = spectrum(&sys.spec, count)?;
    let table = dec.values().iter().enumerate().map(|(k, e)| vec![k.into(), (*e).into()]).collect();
    out.csv("eigenvalues.csv", &["k", "energy"], table)?;
    out.dpmf("eigenvectors.dpmf", &rows(dec.vectors())?)?;
    Ok(Outcome::ok())
}

fn inversion_config(cfg: &RunConfig, sys: &System) -> Result<InversionConfig, CliError> {
    let restart = cfg.count("inversion.restart_steps");
    let inv = InversionConfig {
        initial: match cfg.choice("inversion.initial") {
            "static" => Some(PotentialTrajectory::constant(sys.grid, sys.time, &sys.model.initial())?),
            _ => None,
        },
        mixing: cfg.float("inversion.mixing"),
        tolerance: cfg.float("inversion.tolerance"),
        max_iterations: cfg.count("inversion.max_iterations"),
        restart_steps: (restart > 0).then_some(restart),
        degeneracy: match cfg.choice("inversion.degeneracy") {
            "clamp" => DegeneracyPolicy::Clamp { floor: cfg.float("inversion.floor") },
            _ => DegeneracyPolicy::Fail,
        },
        sampling: sys.sampling,
        weight: match cfg.choice("inversion.weight") {
            "bond" => WeightScheme::Bond,
            _ => WeightScheme::Arithmetic,
        },
    };
    inv.validate()?;
    Ok(inv)
}

pub fn invert_fp(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let inv = inversion_config(cfg, &sys)?;
    let (n, truth) = target_density(cfg, &sys)?;
    let (v, log) = invert_fixed_point(&n, &sys.psi0, &sys.spec, &inv)?;
    out.dpmf("v_recovered.dpmf", &rows(v.values())?)?;

    let mut table = Vec::with_capacity(log.iterations);
    let (mut global, mut ratio_index) = (0, 0);
    for (window, &count) in log.window_iterations.iter().enumerate() {
        for local in 0..count {
            let ratio = if local == 0 {
                Cell::Empty
            } else {
                ratio_index += 1;
                Cell::from(log.ratios[ratio_index - 1])
            };
            table.push(vec![global.into(), log.residuals[global].into(), ratio, window.into()]);
            global += 1;
        }
    }
    out.csv("report.csv", &["iter", "residual", "ratio", "window"], table)?;

    let rho = verify_rho_problem(&v, &n, &sys.psi0, &sys.spec, sys.sampling)?;
    out.summary(
        "rho_verdict.csv",
        vec![
            ("max_l1", rho.max_l1.into()),
            ("initial_l1", rho.initial_l1.into()),
            ("initial_rate_l1", rho.initial_rate_l1.into()),
            ("max_integral", rho.max_integral.into()),
            ("converged", log.converged.into()),
            ("iterations", log.iterations.into()),
            ("max_ratio", log.max_ratio().map_or(Cell::Empty, Cell::from)),
            ("first_step_bound", log.first_step_bound.into()),
            ("distance_from_start", log.distance_from_start.into()),
            ("admissible", log.admissibility.passes.into()),
            ("lambda_1", log.admissibility.lambda_1.into()),
        ],
    )?;
    if let Some(truth) = truth {
        out.csv("recovery.csv", &["t", "relative_error"], recovery_rows(&sys.grid, &v, &truth))?;
    }
    Ok(Outcome {
        failure: (!log.converged)
            .then(|| format!("no convergence within {} iterations per window", inv.max_iterations)),
    })
}

pub fn invert_hj(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let (n, truth) = target_density(cfg, &sys)?;
    let scheme = match cfg.choice("inversion.scheme") {
        "grid_exact" => HjScheme::GridExact,
        _ => HjScheme::Continuum,
    };
    let s0: Vec<f64> = sys.psi0.amplitudes().iter().map(|z| z.arg()).collect();
    if sys.psi0.rank() != 1 {
        return Err(CliError::Validation("invert-hj needs a one-particle system".into()));
    }
    let v = invert_single_particle_hj_with(&n, &s0, scheme)?;
    out.dpmf("v_recovered.dpmf", &rows(v.values())?)?;
    if let Some(truth) = truth {
        out.csv("recovery.csv", &["t", "relative_error"], recovery_rows(&sys.grid, &v, &truth))?;
    }
    Ok(Outcome::ok())
}

pub fn invert_ks(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let (n, truth) = target_density(cfg, &sys)?;
    let s0 = vec![0.0; sys.grid.points()];
    let v = construct_ks_potential(&n, &s0)?;
    out.dpmf("v_ks.dpmf", &rows(v.values())?)?;

    // one doubly occupied orbital, real at t = 0
    let root: Vec<f64> = n.at(0).iter().map(|x| (0.5 * x.max(0.0)).sqrt()).collect();
    let orbital = WaveFunction::from_real(sys.grid, &root)?.normalize()?;
    let ks_spec = densmap::HamiltonianSpec::one_particle(sys.grid, v.at(0).to_vec())?;
    let traj = propagate_stepwise(&orbital, &v, &ks_spec, sys.sampling)?;
    let errors: Vec<f64> = traj
        .states()
        .iter()
        .zip(n.values())
        .map(|(phi, target)| {
            let doubled: Vec<f64> = density(phi).iter().map(|x| 2.0 * x).collect();
            l1(&sys.grid, &sub(&doubled, target))
        })
        .collect();
    out.csv("ks_check.csv", &["t", "density_l1_error"], time_series(&sys.time.times(), &[&errors]))?;
    if let Some(truth) = truth {
        out.csv("ks_vs_external.csv", &["t", "relative_gap"], recovery_rows(&sys.grid, &v, &truth))?;
    }
    Ok(Outcome::ok())
}

/// Weights `c[d][j]` of the `d`-th derivative at 0 from samples at `nodes`.
fn stencil_weights(nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            for d in (0..=order.min(i)).rev() {
                let prev_i = if d > 0 { c[d - 1][i - 1] } else { 0.0 };
                c[d][i] = c1 * (d as f64 * prev_i - nodes[i - 1] * c[d][i - 1]) / c2;
            }
            for d in (0..=order.min(i)).rev() {
                let prev_j = if d > 0 { c[d - 1][j] } else { 0.0 };
                c[d][j] = (nodes[i] * c[d][j] - d as f64 * prev_j) / c3;
            }
        }
        c1 = c2;
    }
    c
}

pub fn invert_taylor(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let order = cfg.count("inversion.order");
    let h = cfg.float("inversion.taylor_step");
    let highest = order + 2;
    let half = highest / 2 + 1;
    // densities at t = jh, j = -half..=half, with midpoint-sampled steps
    let mut forward = vec![sys.psi0.amplitudes().to_vec()];
    let mut backward = vec![sys.psi0.amplitudes().to_vec()];
    for s in 0..half {
        let t = s as f64 * h;
        let f = crank_nicolson_step(&sys.spec, forward.last().expect("seeded"), &sys.model.at(t + 0.5 * h)?, h)?;
        let b = crank_nicolson_step(&sys.spec, backward.last().expect("seeded"), &sys.model.at(-t - 0.5 * h)?, -h)?;
        forward.push(f);
        backward.push(b);
    }
    let samples: Vec<Vec<f64>> = backward
        .iter()
        .rev()
        .chain(forward.iter().skip(1))
        .map(|a| density(&WaveFunction::new(sys.grid, sys.psi0.rank(), a.clone()).expect("shape preserved")))
        .collect();
    let nodes: Vec<f64> = (0..samples.len()).map(|j| (j as f64 - half as f64) * h).collect();
    let weights = stencil_weights(&nodes, highest);
    let mut coeffs: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| (0..sys.grid.points()).map(|m| w.iter().zip(&samples).map(|(c, s)| c * s[m]).sum()).collect())
        .collect();
    coeffs[0] = density(&sys.psi0);

    let result = invert_taylor_rg(&coeffs, &sys.psi0, &sys.spec, order)?;
    out.dpmf("coefficients.dpmf", &rows(&result.coefficients)?)?;
    let table = result.scaled_norms.iter().enumerate().map(|(k, a)| vec![k.into(), (*a).into()]).collect();
    out.csv("taylor.csv", &["k", "scaled_norm"], table)?;
    out.summary(
        "radius.csv",
        vec![("radius_estimate", result.radius_estimate.map_or(Cell::Empty, Cell::from)), ("order", order.into())],
    )?;
    Ok(Outcome::ok())
}

pub fn verify_rho(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let (n, _) = target_density(cfg, &sys)?;
    let v = match cfg.path("inversion.potential_file") {
        Some(path) => match PotentialModel::from_file(&path, &sys.grid, &sys.time)? {
            PotentialModel::Tabulated(v) => v,
            PotentialModel::Analytic { .. } => unreachable!("files are tabulated"),
        },
        None => sys.potential.clone(),
    };
    let verdict = verify_rho_problem(&v, &n, &sys.psi0, &sys.spec, sys.sampling)?;
    let traj = propagate_stepwise(&sys.psi0, &v, &sys.spec, sys.sampling)?;
    let mut l1s = Vec::with_capacity(sys.time.nodes());
    let mut integrals = Vec::with_capacity(sys.time.nodes());
    for (psi, target) in traj.states().iter().zip(n.values()) {
        let rho = sub(&density(psi), target);
        l1s.push(l1(&sys.grid, &rho));
        integrals.push(sys.grid.integrate(&rho)?);
    }
    out.csv("rho.csv", &["t", "l1", "integral"], time_series(&sys.time.times(), &[&l1s, &integrals]))?;
    out.summary(
        "rho_verdict.csv",
        vec![
            ("max_l1", verdict.max_l1.into()),
            ("initial_l1", verdict.initial_l1.into()),
            ("initial_rate_l1", verdict.initial_rate_l1.into()),
            ("max_integral", verdict.max_integral.into()),
        ],
    )?;
    Ok(Outcome::ok())
}

fn field(grid: &Grid, name: &str, probe: usize) -> Vec<f64> {
    grid.coordinates()
        .iter()
        .enumerate()
        .map(|(m, x)| match name {
            "position" | "dipole" => *x,
            "cosine" => x.cos(),
            "sine" => x.sin(),
            _ => f64::from(u8::from(m == probe)) / grid.spacing(),
        })
        .collect()
}

pub fn respond(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let probe = nearest_node(&sys.grid, cfg.float("response.probe"));
    match cfg.choice("response.mode") {
        "kubo" => {
            let w = PotentialTrajectory::constant(
                sys.grid,
                sys.time,
                &field(&sys.grid, cfg.choice("response.perturbation"), probe),
            )?;
            let a = Observable::OneBody(field(&sys.grid, cfg.choice("response.observable"), probe));
            let kubo = kubo_response(&a, &sys.psi0, &sys.potential, &w, &sys.spec, sys.sampling)?;
            let eps = 1e-3;
            let plus = expectation_series(&a, &sys.psi0, &sys.potential.add_scaled(eps, &w)?, &sys.spec, sys.sampling)?;
            let minus =
                expectation_series(&a, &sys.psi0, &sys.potential.add_scaled(-eps, &w)?, &sys.spec, sys.sampling)?;
            let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * eps)).collect();
            out.csv("kubo.csv", &["t", "kubo", "finite_difference"], time_series(&sys.time.times(), &[&kubo, &fd]))?;
        }
        "kick" => {
            let site = nearest_node(&sys.grid, cfg.float("response.x0"));
            let chi = chi_time_domain(&sys.spec, site, cfg.float("response.kappa"), &sys.time)?;
            out.dpmf("chi_time.dpmf", &rows(&chi)?)?;
            let series: Vec<f64> = chi.iter().map(|row| row[probe]).collect();
            out.csv("chi_time.csv", &["t", "chi"], time_series(&sys.time.times(), &[&series]))?;
            let tr = Transitions::for_hamiltonian(&sys.spec, cfg.count("response.count"))?;
            let top = 1.5 * tr.energies.last().copied().unwrap_or(1.0);
            let peak = dominant_frequency(&series, sys.time.step(), top)?;
            out.summary(
                "peak.csv",
                vec![
                    ("dominant_frequency", peak.into()),
                    ("lowest_transition", tr.energies.first().copied().map_or(Cell::Empty, Cell::from)),
                    ("kick_site", site.into()),
                    ("probe_site", probe.into()),
                ],
            )?;
        }
        _ => {
            let count = cfg.count("response.count");
            let tr = Transitions::for_hamiltonian(&sys.spec, count)?;
            let omegas = default_omega_grid(&tr, cfg.count("response.omega_points"));
            let chi = chi_lehmann(&sys.spec, count, cfg.float("response.broadening"), &omegas)?;
            let magnitude = chi.integrated_magnitude(sys.grid.spacing());
            let site = nearest_node(&sys.grid, cfg.float("response.x0"));
            let (re, im): (Vec<f64>, Vec<f64>) = match &chi {
                ResponseKernel::Frequency { values, .. } => {
                    values.iter().map(|m| (m[(probe, site)].re, m[(probe, site)].im)).unzip()
                }
                ResponseKernel::Time { .. } => unreachable!("Lehmann kernels are frequency resolved"),
            };
            out.csv(
                "chi_omega.csv",
                &["omega", "integrated_magnitude", "re_chi", "im_chi"],
                time_series(&omegas, &[&magnitude, &re, &im]),
            )?;
            let table = tr.energies.iter().enumerate().map(|(k, e)| vec![(k + 1).into(), (*e).into()]).collect();
            out.csv("transitions.csv", &["k", "omega"], table)?;
            out.dpmf("transition_densities.dpmf", &rows(&tr.densities)?)?;
        }
    }
    Ok(Outcome::ok())
}

pub fn functionals(cfg: &RunConfig, out: &mut Output) -> Run {
    let (r, n, points) = (cfg.float("density.R"), cfg.float("density.N"), cfg.count("density.points"));
    let rho = match cfg.choice("density.form") {
        "gaussian" => RadialDensity::from_fn(r, n, points, |x| (-x * x).exp())?,
        _ => RadialDensity::uniform_ball(r, n, points)?,
    };
    let c = lda_components(&rho, None)?;
    out.summary(
        "components.csv",
        vec![
            ("kinetic", c.kinetic.into()),
            ("hartree", c.hartree.into()),
            ("exchange", c.exchange.into()),
            ("external", c.external.into()),
            ("total", c.total.into()),
        ],
    )?;
    let s = lda_scaling_check(&rho, cfg.float("density.scale"))?;
    out.summary(
        "scaling.csv",
        vec![
            ("scale", s.scale.into()),
            ("kinetic_ratio", s.kinetic_ratio.into()),
            ("exchange_ratio", s.exchange_ratio.into()),
            ("hartree_ratio", s.hartree_ratio.into()),
            ("max_deviation", s.max_deviation.into()),
            ("passes", s.passes.into()),
        ],
    )?;
    let phi = rho.hartree_potential();
    let table = rho
        .radii()
        .iter()
        .zip(rho.values())
        .zip(&phi)
        .map(|((x, d), p)| vec![(*x).into(), (*d).into(), (*p).into()])
        .collect();
    out.csv("radial.csv", &["r", "density", "hartree_potential"], table)?;
    Ok(Outcome::ok())
}

pub fn diagnose(cfg: &RunConfig, out: &mut Output) -> Run {
    let sys = System::from_config(cfg)?;
    let grid = sys.grid;
    let traj = propagate_stepwise(&sys.psi0, &sys.potential, &sys.spec, sys.sampling)?;
    let n0 = density(&sys.psi0);
    let q0 = internal_force_q(&sys.psi0, &sys.spec)?;
    let v0 = sys.potential.at(0);

    let rhs = match grid.boundary() {
        Boundary::Periodic => grid.remove_mean(&q0),
        Boundary::Dirichlet => q0.clone(),
    };
    let exponent = cfg.float("diagnose.exponent");
    let adm = admissibility(&SlProblem::new(grid, &n0, rhs)?, exponent)?;
    let weight = weight_diagnostics(&grid, &n0, exponent, None, Some(&sys.psi0))?;
    let stationary: Vec<f64> = q0.iter().zip(force_divergence(&grid, &n0, v0)?).map(|(q, d)| q + d).collect();

    let lipschitz = sys.potential.lipschitz_constant();
    let sup_v0 = v0.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let h2_0 = sys.psi0.sobolev_norm(2)?;
    let times = sys.time.times();
    let h2: Vec<f64> = traj.states().iter().map(|psi| psi.sobolev_norm(2)).collect::<Result<_, _>>()?;
    let bound: Vec<f64> =
        times.iter().map(|t| (1.0 + sup_v0) * (std::f64::consts::SQRT_2 * lipschitz * t).exp() * h2_0).collect();
    let growth = h2.iter().zip(&bound).map(|(a, b)| a / b).fold(0.0, f64::max);
    out.csv("sobolev.csv", &["t", "h2_norm", "bound"], time_series(&times, &[&h2, &bound]))?;

    let balance = global_force_balance(&traj, &sys.potential)?;
    out.csv(
        "force_balance.csv",
        &["t", "f_pot", "f_newton"],
        time_series(&balance.times, &[&balance.f_pot, &balance.f_newton]),
    )?;
    let continuity = continuity_residual(&traj)?.into_iter().fold(0.0, f64::max);
    out.summary(
        "diagnostics.csv",
        vec![
            ("max_norm_drift", traj.max_norm_drift().into()),
            ("max_continuity_residual", continuity.into()),
            ("admissible", adm.passes.into()),
            ("lambda_1", adm.lambda_1.into()),
            ("solution_bound", adm.solution_bound.into()),
            ("inverse_power_integral", weight.inverse_power_integral.into()),
            ("refinement_unstable", weight.refinement_unstable.into()),
            ("weizsaecker", weight.weizsaecker.into()),
            ("weizsaecker_bound_holds", weight.weizsaecker_bound_holds.unwrap_or(false).into()),
            ("stationary_q_residual", grid.norm_real(&stationary).into()),
            ("periodic_q_integral", grid.integrate(&q0)?.into()),
            ("lipschitz_constant", lipschitz.into()),
            ("max_sobolev_growth_ratio", growth.into()),
            ("force_balance_max_gap", balance.max_gap().into()),
            ("force_balance_boundary_flag", balance.boundary_flag.into()),
        ],
    )?;
    Ok(Outcome::ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_reproduces_polynomial_derivatives() {
        let h = 0.1;
        let nodes: Vec<f64> = (-3..=3).map(|j| j as f64 * h).collect();
        let w = stencil_weights(&nodes, 4);
        // f = t⁴ + 2t³ - t: f' = -1, f'' = 0, f''' = 12, f'''' = 24 at 0
        let f: Vec<f64> = nodes.iter().map(|t| t.powi(4) + 2.0 * t.powi(3) - t).collect();
        let d = |k: usize| w[k].iter().zip(&f).map(|(c, v)| c * v).sum::<f64>();
        assert!((d(0) - 0.0).abs() < 1e-12);
        assert!((d(1) + 1.0).abs() < 1e-9);
        assert!(d(2).abs() < 1e-8);
        assert!((d(3) - 12.0).abs() < 1e-6);
        assert!((d(4) - 24.0).abs() < 1e-5);
    }
}
