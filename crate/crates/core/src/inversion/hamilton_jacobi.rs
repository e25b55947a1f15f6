use std::f64::consts::PI;

use rayon::prelude::*;

use super::projected_rhs;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::observables::{arithmetic_bond_weight, DensityTrajectory};
use crate::propagator::{Gauge, PotentialTrajectory};
use crate::sturm_liouville::{solve_direct_1d, SlProblem, WEIGHT_MIN};

/// Discretisation of the polar (Madelung) inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HjScheme {
    /// Phase from the weight-`n` continuity solve, then
    /// `v = ½Δ√n/√n - ½(∇S)² - ∂ₜS` with finite differences.
    #[default]
    Continuum,
    /// Bond phases `δ_b = arcsin(J_b Δx / (R_{b-1} R_b))` that reproduce the
    /// lattice current exactly, and the lattice quantum potential
    /// `½[R_{m+1}cos δ₊ + R_{m-1}cos δ₋ - 2R_m] / (R_m Δx²)`.
    GridExact,
}

/// One-particle potential that drives a state with density `n` and initial
/// phase `S₀` (only its winding number on a ring is used). The result is
/// mean-zero gauged.
pub fn invert_single_particle_hj(n: &DensityTrajectory, s0: &[f64]) -> Result<PotentialTrajectory> {
    invert_single_particle_hj_with(n, s0, HjScheme::Continuum)
}

pub fn invert_single_particle_hj_with(
    n: &DensityTrajectory,
    s0: &[f64],
    scheme: HjScheme,
) -> Result<PotentialTrajectory> {
    let grid = *n.grid();
    grid.check_len(s0.len())?;
    if n.particles() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-particle inversion needs a one-particle density, got {} particles",
            n.particles()
        )));
    }
    let time = *n.time();
    if time.nodes() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 time nodes, got {}", time.nodes())));
    }
    for values in n.values() {
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, x)| !(**x > WEIGHT_MIN)) {
            return Err(Error::DegenerateWeight { bond: node, value, threshold: WEIGHT_MIN });
        }
    }
    let circulation = winding(&grid, s0);
    let dn = first_time_derivative(n.values(), time.step());

    // bond phase increments S_b - S_{b-1} per time node
    let increments: Vec<Vec<f64>> = n
        .values()
        .par_iter()
        .zip(dn.par_iter())
        .map(|(nt, dnt)| match scheme {
            HjScheme::Continuum => continuum_increments(&grid, nt, dnt, circulation),
            HjScheme::GridExact => lattice_increments(&grid, nt, dnt, circulation),
        })
        .collect::<Result<_>>()?;
    let phases: Vec<Vec<f64>> = increments.iter().map(|inc| integrate_phase(&grid, inc)).collect();
    let ds = phase_rate(&phases, time.step());

    let values: Vec<Vec<f64>> = n
        .values()
        .par_iter()
        .zip(increments.par_iter())
        .zip(ds.par_iter())
        .map(|((nt, inc), dst)| {
            let quantum = match scheme {
                HjScheme::Continuum => continuum_quantum(&grid, nt, inc),
                HjScheme::GridExact => lattice_quantum(&grid, nt, inc),
            };
            let v: Vec<f64> = quantum.iter().zip(dst).map(|(q, s)| q - s).collect();
            grid.remove_mean(&v)
        })
        .collect();
    PotentialTrajectory::new(grid, time, values, Gauge::MeanZero)
}

/// Kohn–Sham potential of a doubly occupied orbital reproducing a
/// two-particle density: the single-particle inversion of `n/2`.
pub fn construct_ks_potential(n: &DensityTrajectory, s0: &[f64]) -> Result<PotentialTrajectory> {
    if n.particles() != 2 {
        return Err(Error::InvalidArgument(format!("expected a two-particle density, got {}", n.particles())));
    }
    let half: Vec<Vec<f64>> = n.values().iter().map(|v| v.iter().map(|x| 0.5 * x).collect()).collect();
    let orbital = DensityTrajectory::new(*n.grid(), *n.time(), 1, half)?;
    invert_single_particle_hj(&orbital, s0)
}

fn wrap(d: f64) -> f64 {
    let r = d.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `Σ_b wrap(S₀[b] - S₀[b-1])` around a ring, zero on a box.
fn winding(grid: &Grid, s0: &[f64]) -> f64 {
    match grid.boundary() {
        Boundary::Dirichlet => 0.0,
        Boundary::Periodic => {
            let m = grid.points();
            (0..m).map(|b| wrap(s0[b] - s0[(b + m - 1) % m])).sum()
        }
    }
}

/// Central differences in time, second-order one-sided at both ends.
fn first_time_derivative(series: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = series.len();
    let width = series[0].len();
    (0..n)
        .map(|i| {
            (0..width)
                .map(|m| {
                    if i == 0 {
                        (-3.0 * series[0][m] + 4.0 * series[1][m] - series[2][m]) / (2.0 * dt)
                    } else if i == n - 1 {
                        (3.0 * series[i][m] - 4.0 * series[i - 1][m] + series[i - 2][m]) / (2.0 * dt)
                    } else {
                        (series[i + 1][m] - series[i - 1][m]) / (2.0 * dt)
                    }
                })
                .collect()
        })
        .collect()
}

/// `∂ₜS` by central differences. The phase at the first and last node is
/// built from one-sided density rates whose error constant differs from the
/// interior, so with enough nodes the two outermost rates on each side are
/// extrapolated quadratically from interior central values instead.
fn phase_rate(series: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let mut ds = first_time_derivative(series, dt);
    let n = ds.len();
    if n < 7 {
        return ds;
    }
    let extrapolate = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
        a.iter().zip(b).zip(c).map(|((x, y), z)| 3.0 * x - 3.0 * y + z).collect()
    };
    ds[1] = extrapolate(&ds[2], &ds[3], &ds[4]);
    ds[0] = extrapolate(&ds[1], &ds[2], &ds[3]);
    ds[n - 2] = extrapolate(&ds[n - 3], &ds[n - 4], &ds[n - 5]);
    ds[n - 1] = extrapolate(&ds[n - 2], &ds[n - 3], &ds[n - 4]);
    ds
}

/// Current on the bonds solving `D⁻J = -∂ₜn`, up to the additive constant
/// on a ring (fixed here by `J_0 = 0`); a box has no flux through its left
/// wall.
fn cumulative_current(grid: &Grid, dn: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    let mut j = vec![0.0; grid.bonds()];
    for (m, d) in dn.iter().enumerate() {
        if m + 1 < j.len() {
            j[m + 1] = j[m] - h * d;
        }
    }
    j
}

fn continuum_increments(grid: &Grid, n: &[f64], dn: &[f64], circulation: f64) -> Result<Vec<f64>> {
    let h = grid.spacing();
    let w = arithmetic_bond_weight(grid, n)?;
    let grad: Vec<f64> = match grid.boundary() {
        Boundary::Periodic => {
            let s = solve_direct_1d(&SlProblem::with_bond_weight(*grid, w.clone(), projected_rhs(grid, dn.to_vec()))?)?;
            let ds = grid.forward_difference(&s)?;
            let c = circulation / w.iter().map(|wb| h / wb).sum::<f64>();
            ds.iter().zip(&w).map(|(d, wb)| d + c / wb).collect()
        }
        Boundary::Dirichlet => cumulative_current(grid, dn).iter().zip(&w).map(|(j, wb)| j / wb).collect(),
    };
    Ok(grad.iter().map(|g| g * h).collect())
}

fn lattice_increments(grid: &Grid, n: &[f64], dn: &[f64], circulation: f64) -> Result<Vec<f64>> {
    let h = grid.spacing();
    let cum = cumulative_current(grid, dn);
    // R_{b-1} R_b / Δx on interior bonds; walls carry no current
    let cap: Vec<f64> = (0..grid.bonds())
        .map(|b| match grid.bond_nodes(b) {
            (Some(l), Some(r)) => (n[l] * n[r]).sqrt() / h,
            _ => f64::INFINITY,
        })
        .collect();
    let phase = |c: f64| -> Vec<f64> {
        cum.iter()
            .zip(&cap)
            .map(|(j, k)| if k.is_finite() { ((j + c) / k).clamp(-1.0, 1.0).asin() } else { 0.0 })
            .collect()
    };
    let c = match grid.boundary() {
        Boundary::Dirichlet => 0.0,
        Boundary::Periodic => {
            let lo = cum.iter().zip(&cap).map(|(j, k)| -k - j).fold(f64::NEG_INFINITY, f64::max);
            let hi = cum.iter().zip(&cap).map(|(j, k)| k - j).fold(f64::INFINITY, f64::min);
            if lo > hi {
                return Err(Error::InvalidArgument("density rate exceeds what a lattice current can carry".into()));
            }
            let total = |c: f64| phase(c).iter().sum::<f64>() - circulation;
            if total(lo) > 0.0 || total(hi) < 0.0 {
                return Err(Error::NonConvergence { iterations: 0, residual: total(lo).min(-total(hi)).abs() });
            }
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if total(mid) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-15 * (1.0 + a.abs()) {
                    break;
                }
            }
            0.5 * (a + b)
        }
    };
    if let Boundary::Dirichlet = grid.boundary() {
        if cum.iter().zip(&cap).any(|(j, k)| j.abs() > *k) {
            return Err(Error::InvalidArgument("density rate exceeds what a lattice current can carry".into()));
        }
    }
    Ok(phase(c))
}

/// Nodal phase `S_m = Σ_{b=1}^{m} (S_b - S_{b-1})` with `S_0 = 0`.
fn integrate_phase(grid: &Grid, increments: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; grid.points()];
    for m in 1..grid.points() {
        s[m] = s[m - 1] + increments[m];
    }
    s
}

/// `½Δ√n/√n - ½(∇S)²` with `(∇S)²` averaged from the two adjacent bonds.
fn continuum_quantum(grid: &Grid, n: &[f64], increments: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    let root: Vec<f64> = n.iter().map(|x| x.sqrt()).collect();
    let lap = grid.laplacian_unchecked(&root);
    (0..grid.points())
        .map(|m| {
            let (left, right) = grid.node_bonds(m);
            let kinetic = 0.5 * (increments[left].powi(2) + increments[right].powi(2)) / (h * h);
            0.5 * lap[m] / root[m] - 0.5 * kinetic
        })
        .collect()
}

/// Lattice quantum potential including the phase-gradient energy.
fn lattice_quantum(grid: &Grid, n: &[f64], increments: &[f64]) -> Vec<f64> {
    let h2 = grid.spacing().powi(2);
    let m_pts = grid.points();
    let root: Vec<f64> = n.iter().map(|x| x.sqrt()).collect();
    (0..m_pts)
        .map(|m| {
            let (left, right) = grid.node_bonds(m);
            let neighbour = |b: usize| match grid.bond_nodes(b) {
                (Some(l), Some(r)) => root[if l == m { r } else { l }],
                _ => 0.0,
            };
            let sum = neighbour(right) * increments[right].cos() + neighbour(left) * increments[left].cos();
            0.5 * (sum - 2.0 * root[m]) / (root[m] * h2)
        })
        .collect()
}
