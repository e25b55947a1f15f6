//! Densities, staggered currents, the internal-force term `q`, time
//! derivatives of densities and global force diagnostics.
//!
//! For a rank-2 state every quantity is the marginal over the second
//! coordinate, multiplied by the particle number. The bilinear building
//! blocks are exposed in sesquilinear form so that Taylor coefficients of
//! the observables follow from the Leibniz rule.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::hamiltonian::HamiltonianSpec;
use crate::propagator::{TimeGrid, Trajectory};
use crate::wavefunction::WaveFunction;

/// Floor applied to densities inside negative powers.
pub const DENSITY_FLOOR: f64 = 1e-14;

fn particles(rank: usize) -> f64 {
    rank as f64
}

/// `N Σ_j conj(a_ij) b_ij Δx` (rank 2) or `conj(a_i) b_i` (rank 1).
pub fn pair_density(grid: &Grid, rank: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let m = grid.points();
    if rank == 1 {
        return a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
    }
    let w = particles(rank) * grid.spacing();
    (0..m)
        .map(|i| {
            let row = i * m..(i + 1) * m;
            a[row.clone()].iter().zip(&b[row]).map(|(x, y)| x.conj() * y).sum::<Complex64>() * w
        })
        .collect()
}

/// `N Σ_j conj(a_{left,j}) b_{right,j}` on every bond (zero padding at
/// Dirichlet walls).
pub fn bond_product(grid: &Grid, rank: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let m = grid.points();
    let (width, w) = if rank == 1 { (1, 1.0) } else { (m, particles(rank) * grid.spacing()) };
    (0..grid.bonds())
        .map(|bond| match grid.bond_nodes(bond) {
            (Some(l), Some(r)) => (0..width).map(|j| a[l * width + j].conj() * b[r * width + j]).sum::<Complex64>() * w,
            _ => Complex64::default(),
        })
        .collect()
}

/// `N Σ_j [½ conj(L a) (L b) - ½ conj(a) L² b]` with `L` the Laplacian in
/// the first coordinate; `q_kin = Re K(ψ, ψ)`.
pub fn kinetic_q_form(grid: &Grid, rank: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let (la, lb, llb) = if rank == 1 {
        let la = grid.laplacian_unchecked(a);
        let lb = grid.laplacian_unchecked(b);
        let llb = grid.laplacian_unchecked(&lb);
        (la, lb, llb)
    } else {
        let la = grid.laplacian_axis(a, 0);
        let lb = grid.laplacian_axis(b, 0);
        let llb = grid.laplacian_axis(&lb, 0);
        (la, lb, llb)
    };
    let integrand: Vec<Complex64> = (0..a.len()).map(|k| (la[k].conj() * lb[k] - a[k].conj() * llb[k]) * 0.5).collect();
    marginal(grid, rank, &integrand)
}

/// Interaction part of `q` in divergence form,
/// `N Σ_j conj(a_ij) [L₁(W b) - W L₁ b]_ij Δx`.
pub fn interaction_q_form(spec: &HamiltonianSpec, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let grid = spec.grid();
    let m = grid.points();
    if spec.particles() != 2 || spec.pair_table().is_empty() {
        return vec![Complex64::default(); m];
    }
    let w = spec.pair_table();
    let wb: Vec<Complex64> = b.iter().zip(w).map(|(x, y)| x * *y).collect();
    let lwb = grid.laplacian_axis(&wb, 0);
    let lb = grid.laplacian_axis(b, 0);
    let integrand: Vec<Complex64> = (0..a.len()).map(|k| a[k].conj() * (lwb[k] - lb[k] * w[k])).collect();
    marginal(grid, 2, &integrand)
}

fn marginal(grid: &Grid, rank: usize, f: &[Complex64]) -> Vec<Complex64> {
    if rank == 1 {
        return f.to_vec();
    }
    let m = grid.points();
    let w = particles(rank) * grid.spacing();
    (0..m).map(|i| f[i * m..(i + 1) * m].iter().sum::<Complex64>() * w).collect()
}

/// One-particle density `n(x)`.
pub fn density(psi: &WaveFunction) -> Vec<f64> {
    pair_density(psi.grid(), psi.rank(), psi.amplitudes(), psi.amplitudes()).into_iter().map(|z| z.re).collect()
}

/// Staggered current `J_b = N Im(conj ψ_{b-1} ψ_b) / Δx` on the bonds.
pub fn current(psi: &WaveFunction) -> Vec<f64> {
    let h = psi.grid().spacing();
    bond_product(psi.grid(), psi.rank(), psi.amplitudes(), psi.amplitudes()).into_iter().map(|z| z.im / h).collect()
}

/// Bond weight `N Re(conj ψ_{b-1} ψ_b)`, the density on the half grid that
/// enters the exact discrete force identity.
pub fn bond_density(psi: &WaveFunction) -> Vec<f64> {
    bond_product(psi.grid(), psi.rank(), psi.amplitudes(), psi.amplitudes()).into_iter().map(|z| z.re).collect()
}

/// Internal-force term `q` (kinetic part plus, for two particles, the pair
/// interaction part). Along any trajectory of `H = T + W + v`
/// `∂ₜ²n = q + D⁻(w D⁺ v)` holds exactly with `w` the [`bond_density`].
pub fn internal_force_q(psi: &WaveFunction, spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    spec.check_state(psi)?;
    let a = psi.amplitudes();
    let mut q: Vec<f64> = kinetic_q_form(psi.grid(), psi.rank(), a, a).into_iter().map(|z| z.re).collect();
    if psi.rank() == 2 {
        for (qi, zi) in q.iter_mut().zip(interaction_q_form(spec, a, a)) {
            *qi += zi.re;
        }
    }
    Ok(q)
}

/// `D⁻(w D⁺ v)` for an explicit bond weight.
pub fn weighted_divergence(grid: &Grid, bond_weight: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let dv = grid.forward_difference(v)?;
    if bond_weight.len() != dv.len() {
        return Err(Error::SizeMismatch { expected: dv.len(), found: bond_weight.len() });
    }
    let flux: Vec<f64> = dv.iter().zip(bond_weight).map(|(d, w)| d * w).collect();
    grid.backward_divergence(&flux)
}

/// Arithmetic half-grid weight `(n_{b-1} + n_b)/2`. The two wall bonds of a
/// Dirichlet grid take the value of their single interior neighbour.
pub fn arithmetic_bond_weight(grid: &Grid, n: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(n.len())?;
    Ok((0..grid.bonds())
        .map(|b| match grid.bond_nodes(b) {
            (Some(l), Some(r)) => 0.5 * (n[l] + n[r]),
            (Some(i), None) | (None, Some(i)) => n[i],
            (None, None) => 0.0,
        })
        .collect())
}

/// `∇·(n∇v)` with the arithmetic half-grid weight.
pub fn force_divergence(grid: &Grid, n: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    weighted_divergence(grid, &arithmetic_bond_weight(grid, n)?, v)
}

/// Densities on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory {
    grid: Grid,
    time: TimeGrid,
    particles: usize,
    values: Vec<Vec<f64>>,
}

impl DensityTrajectory {
    /// Validated densities: entries `≥ -1e-12` and `∫n = N` within `1e-8`.
    pub fn new(grid: Grid, time: TimeGrid, particles: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != time.nodes() {
            return Err(Error::SizeMismatch { expected: time.nodes(), found: values.len() });
        }
        for n in &values {
            grid.check_len(n.len())?;
            if let Some((index, &value)) = n.iter().enumerate().find(|(_, x)| !(**x >= -1e-12)) {
                return Err(Error::NegativeDensity { index, value });
            }
            let total = grid.integrate(n)?;
            if (total - particles as f64).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!("density integrates to {total}, expected {particles}")));
            }
        }
        Ok(DensityTrajectory { grid, time, particles, values })
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let values: Vec<Vec<f64>> = traj.states().par_iter().map(density).collect();
        DensityTrajectory::new(*traj.grid(), *traj.time(), traj.state(0).rank(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Samples `from..=to` on the re-based window grid.
    pub fn window(&self, from: usize, to: usize) -> Result<DensityTrajectory> {
        Ok(DensityTrajectory {
            grid: self.grid,
            time: self.time.window(from, to)?,
            particles: self.particles,
            values: self.values[from..=to].to_vec(),
        })
    }
}

/// Staggered currents on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrajectory {
    pub grid: Grid,
    pub time: TimeGrid,
    /// Bond values per time node.
    pub values: Vec<Vec<f64>>,
}

impl CurrentTrajectory {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        CurrentTrajectory {
            grid: *traj.grid(),
            time: *traj.time(),
            values: traj.states().par_iter().map(current).collect(),
        }
    }

    pub fn staggered(&self) -> bool {
        true
    }
}

/// Largest `|(n_new - n_old)/Δt + D⁻J̄|` per step, with `J̄` the current of
/// the midpoint state `(ψ_old + ψ_new)/2`.
pub fn continuity_residual(traj: &Trajectory) -> Result<Vec<f64>> {
    let dt = traj.time().step();
    let grid = *traj.grid();
    (0..traj.time().steps())
        .into_par_iter()
        .map(|i| {
            let a = traj.state(i);
            let b = traj.state(i + 1);
            let mid: Vec<Complex64> = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x + y) * 0.5).collect();
            let jm = current(&a.with_amplitudes(mid));
            let div = grid.backward_divergence(&jm)?;
            let (na, nb) = (density(a), density(b));
            Ok((0..grid.points()).map(|m| ((nb[m] - na[m]) / dt + div[m]).abs()).fold(0.0, f64::max))
        })
        .collect()
}

/// Second time derivative of sampled series: fourth-order central
/// differences inside, second-order one-sided at the first and last two
/// nodes.
pub fn second_time_derivative(series: &[Vec<f64>], dt: f64) -> Result<Vec<Vec<f64>>> {
    let n = series.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 time nodes, got {n}")));
    }
    let width = series[0].len();
    let h2 = dt * dt;
    let combine = |coeffs: &[(usize, f64)], scale: f64| -> Vec<f64> {
        (0..width).map(|m| coeffs.iter().map(|(i, c)| c * series[*i][m]).sum::<f64>() / scale).collect()
    };
    Ok((0..n)
        .map(|i| {
            if i < 2 {
                combine(&[(i, 2.0), (i + 1, -5.0), (i + 2, 4.0), (i + 3, -1.0)], h2)
            } else if i + 2 >= n {
                combine(&[(i, 2.0), (i - 1, -5.0), (i - 2, 4.0), (i - 3, -1.0)], h2)
            } else {
                combine(&[(i - 2, -1.0), (i - 1, 16.0), (i, -30.0), (i + 1, 16.0), (i + 2, -1.0)], 12.0 * h2)
            }
        })
        .collect())
}

/// `∂ₜ²n` of a density trajectory by time finite differences.
pub fn dtt_density(n: &DensityTrajectory) -> Result<Vec<Vec<f64>>> {
    second_time_derivative(n.values(), n.time().step())
}

/// Net potential force against the second derivative of the dipole moment.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceBalance {
    pub times: Vec<f64>,
    /// `-∫ n ∇v dx`.
    pub f_pot: Vec<f64>,
    /// `d²/dt² ∫ x n dx`.
    pub f_newton: Vec<f64>,
    /// Set on Dirichlet domains, where wall forces enter the balance.
    pub boundary_flag: bool,
}

impl ForceBalance {
    pub fn max_gap(&self) -> f64 {
        self.f_pot.iter().zip(&self.f_newton).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn global_force_balance(traj: &Trajectory, v: &crate::propagator::PotentialTrajectory) -> Result<ForceBalance> {
    if v.grid() != traj.grid() || v.time().nodes() != traj.time().nodes() {
        return Err(Error::GridMismatch);
    }
    let grid = *traj.grid();
    let xs = grid.coordinates();
    let dens: Vec<Vec<f64>> = traj.states().par_iter().map(density).collect();
    let mut f_pot = Vec::with_capacity(dens.len());
    for (n, vi) in dens.iter().zip(v.values()) {
        let dv = grid.field_gradient(vi)?;
        let f: Vec<f64> = n.iter().zip(&dv).map(|(a, b)| -a * b).collect();
        f_pot.push(grid.integrate(&f)?);
    }
    let dipole: Vec<Vec<f64>> = dens
        .iter()
        .map(|n| {
            let xn: Vec<f64> = n.iter().zip(&xs).map(|(a, x)| a * x).collect();
            grid.integrate(&xn).map(|d| vec![d])
        })
        .collect::<Result<_>>()?;
    let f_newton = second_time_derivative(&dipole, traj.time().step())?.into_iter().map(|d| d[0]).collect();
    Ok(ForceBalance {
        times: traj.time().times(),
        f_pot,
        f_newton,
        boundary_flag: grid.boundary() == Boundary::Dirichlet,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub exponent: f64,
    /// `∫ max(n, ε)^{-s}`.
    pub inverse_power_integral: f64,
    /// The same integral on the grid with every other node.
    pub coarse_inverse_power_integral: f64,
    /// Fine/coarse ratio well above one signals divergence under refinement.
    pub refinement_unstable: bool,
    /// `∫ |∇√n|²`.
    pub weizsaecker: f64,
    /// `∫ |∂ₜj|² / n`, when the current derivative is supplied.
    pub finite_force: Option<f64>,
    /// `‖∇√n‖ ≤ √N ‖∇ψ‖`, when the state is supplied.
    pub weizsaecker_bound_holds: Option<bool>,
}

/// Weight diagnostics for the Sturm–Liouville weight `n`. `dj_dt` is a
/// bond field; `psi` enables the Weizsäcker bound check.
pub fn weight_diagnostics(
    grid: &Grid,
    n: &[f64],
    s: f64,
    dj_dt: Option<&[f64]>,
    psi: Option<&WaveFunction>,
) -> Result<WeightReport> {
    grid.check_len(n.len())?;
    if !(s > 0.5) {
        return Err(Error::InvalidArgument(format!("exponent s must exceed 1/2 in one dimension, got {s}")));
    }
    if let Some((index, &value)) = n.iter().enumerate().find(|(_, x)| !(**x >= -1e-12)) {
        return Err(Error::NegativeDensity { index, value });
    }
    let inv = |x: f64| x.max(DENSITY_FLOOR).powf(-s);
    let fine = n.iter().map(|&x| inv(x)).sum::<f64>() * grid.spacing();
    // the coarse grid keeps nodes 2Δx apart and, on Dirichlet grids, off the walls
    let offset = usize::from(grid.boundary() == Boundary::Dirichlet);
    let coarse = n.iter().skip(offset).step_by(2).map(|&x| inv(x)).sum::<f64>() * 2.0 * grid.spacing();
    let root: Vec<f64> = n.iter().map(|x| x.max(0.0).sqrt()).collect();
    let grad = grid.forward_difference(&root)?;
    let weizsaecker = grad.iter().map(|g| g * g).sum::<f64>() * grid.spacing();
    let finite_force = match dj_dt {
        Some(dj) => {
            let w = arithmetic_bond_weight(grid, n)?;
            if dj.len() != w.len() {
                return Err(Error::SizeMismatch { expected: w.len(), found: dj.len() });
            }
            Some(dj.iter().zip(&w).map(|(d, wb)| d * d / wb.max(DENSITY_FLOOR)).sum::<f64>() * grid.spacing())
        }
        None => None,
    };
    let bound = match psi {
        Some(p) => {
            let grad_psi = gradient_norm_sqr(p);
            Some(weizsaecker.sqrt() <= (p.rank() as f64 * grad_psi).sqrt() * (1.0 + 1e-12) + 1e-14)
        }
        None => None,
    };
    Ok(WeightReport {
        exponent: s,
        inverse_power_integral: fine,
        coarse_inverse_power_integral: coarse,
        refinement_unstable: fine > 1.25 * coarse,
        weizsaecker,
        finite_force,
        weizsaecker_bound_holds: bound,
    })
}

/// `‖∇ψ‖²` with forward differences in every coordinate.
fn gradient_norm_sqr(psi: &WaveFunction) -> f64 {
    let grid = psi.grid();
    let h = grid.spacing();
    let a = psi.amplitudes();
    if psi.rank() == 1 {
        let d = grid.forward_difference(a).expect("length checked");
        return d.iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
    }
    let m = grid.points();
    let mut total = 0.0;
    for j in 0..m {
        let col: Vec<Complex64> = (0..m).map(|i| a[i * m + j]).collect();
        let row: Vec<Complex64> = a[j * m..(j + 1) * m].to_vec();
        for line in [col, row] {
            let d = grid.forward_difference(&line).expect("length checked");
            total += d.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    total * h * h
}
