//! Time evolution under time-dependent potentials.
//!
//! Three propagators are provided: Crank–Nicolson with a potential frozen on
//! every step, exact evolution in the eigenbasis of a static Hamiltonian, and
//! the truncated Dyson–Phillips (Neumann) series around free evolution. The
//! trajectory derivative `δψ[v; w]` is computed with the stepwise propagator.
//!
//! A [`PotentialTrajectory`] always carries the full external one-body
//! potential; the [`HamiltonianSpec`] passed alongside contributes the grid,
//! the particle number and the pair interaction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::hamiltonian::{spectrum, HamiltonianSpec, SpectralDecomposition};
use crate::linalg::{conjugate_gradient, solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::wavefunction::WaveFunction;

const NORM_TOLERANCE: f64 = 1e-9;
const CG_TOLERANCE: f64 = 1e-14;
const CG_MAX_ITER: usize = 5000;

/// Uniform time grid `t_i = iΔt`, `i = 0..=N_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    step: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("time horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        Ok(TimeGrid { horizon, steps, step: horizon / steps as f64 })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of time nodes, `N_t + 1`.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.step
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.t(i)).collect()
    }

    /// The sub-grid of nodes `from..=to`, re-based to start at zero.
    pub fn window(&self, from: usize, to: usize) -> Result<TimeGrid> {
        if from >= to || to > self.steps {
            return Err(Error::InvalidArgument(format!("invalid time window {from}..={to}")));
        }
        TimeGrid::new(self.t(to) - self.t(from), to - from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gauge {
    /// Every sample integrates to zero.
    MeanZero,
    Raw,
}

/// Where a step's frozen potential is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PotentialSampling {
    /// `v(t_i)` on the step `[t_i, t_{i+1}]`.
    #[default]
    LeftEndpoint,
    /// `(v(t_i) + v(t_{i+1})) / 2`.
    Midpoint,
}

/// Real potential `v(t_i, x_m)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTrajectory {
    grid: Grid,
    time: TimeGrid,
    gauge: Gauge,
    values: Vec<Vec<f64>>,
}

impl PotentialTrajectory {
    pub fn new(grid: Grid, time: TimeGrid, values: Vec<Vec<f64>>, gauge: Gauge) -> Result<Self> {
        if values.len() != time.nodes() {
            return Err(Error::SizeMismatch { expected: time.nodes(), found: values.len() });
        }
        for v in &values {
            grid.check_len(v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("potential has non-finite entries".into()));
            }
            if gauge == Gauge::MeanZero {
                let scale = v.iter().fold(1.0_f64, |a, x| a.max(x.abs())) * grid.length();
                let integral = grid.integrate(v)?;
                if integral.abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "mean-zero gauge violated: sample integrates to {integral:e}"
                    )));
                }
            }
        }
        Ok(PotentialTrajectory { grid, time, gauge, values })
    }

    /// Sample `f(t, x)`; in the mean-zero gauge the spatial mean is removed.
    pub fn from_fn(grid: Grid, time: TimeGrid, gauge: Gauge, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.coordinates();
        let values = (0..time.nodes())
            .map(|i| {
                let t = time.t(i);
                let v: Vec<f64> = xs.iter().map(|&x| f(t, x)).collect();
                match gauge {
                    Gauge::MeanZero => grid.remove_mean(&v),
                    Gauge::Raw => v,
                }
            })
            .collect();
        PotentialTrajectory::new(grid, time, values, gauge)
    }

    /// The same static field at every time node.
    pub fn constant(grid: Grid, time: TimeGrid, v: &[f64]) -> Result<Self> {
        PotentialTrajectory::new(grid, time, vec![v.to_vec(); time.nodes()], Gauge::Raw)
    }

    pub fn zero(grid: Grid, time: TimeGrid) -> Self {
        PotentialTrajectory { grid, time, gauge: Gauge::MeanZero, values: vec![vec![0.0; grid.points()]; time.nodes()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<f64>> {
        self.values
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Frozen potential for the step `[t_i, t_{i+1}]`.
    pub fn step_potential(&self, i: usize, sampling: PotentialSampling) -> Vec<f64> {
        match sampling {
            PotentialSampling::LeftEndpoint => self.values[i].clone(),
            PotentialSampling::Midpoint => {
                self.values[i].iter().zip(&self.values[i + 1]).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        }
    }

    /// Shift every sample to zero spatial mean.
    pub fn to_mean_zero(&self) -> PotentialTrajectory {
        PotentialTrajectory {
            grid: self.grid,
            time: self.time,
            gauge: Gauge::MeanZero,
            values: self.values.iter().map(|v| self.grid.remove_mean(v)).collect(),
        }
    }

    /// `self + c·other`; the gauge is kept only if both agree.
    pub fn add_scaled(&self, c: f64, other: &PotentialTrajectory) -> Result<PotentialTrajectory> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect())
            .collect();
        let gauge = if self.gauge == other.gauge { self.gauge } else { Gauge::Raw };
        Ok(PotentialTrajectory { grid: self.grid, time: self.time, gauge, values })
    }

    pub fn scaled(&self, c: f64) -> PotentialTrajectory {
        PotentialTrajectory {
            grid: self.grid,
            time: self.time,
            gauge: self.gauge,
            values: self.values.iter().map(|v| v.iter().map(|x| c * x).collect()).collect(),
        }
    }

    pub fn check_compatible(&self, other: &PotentialTrajectory) -> Result<()> {
        if self.grid != other.grid || self.time != other.time {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Samples `from..=to` on the re-based window grid.
    pub fn window(&self, from: usize, to: usize) -> Result<PotentialTrajectory> {
        let time = self.time.window(from, to)?;
        Ok(PotentialTrajectory { grid: self.grid, time, gauge: self.gauge, values: self.values[from..=to].to_vec() })
    }

    /// Largest `max_x |v(t_{i+1}) - v(t_i)| / Δt`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
            / self.time.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    StepwiseStatic { sampling: PotentialSampling },
    SpectralStatic,
    NeumannSeries { order: usize },
    FunctionalDerivative { sampling: PotentialSampling },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub method: Method,
    /// Linear-solve tolerance (zero for direct solves).
    pub solver_tolerance: f64,
}

/// Wavefunction snapshots on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    time: TimeGrid,
    states: Vec<WaveFunction>,
    provenance: Provenance,
}

impl Trajectory {
    pub fn new(time: TimeGrid, states: Vec<WaveFunction>, provenance: Provenance) -> Result<Self> {
        if states.len() != time.nodes() {
            return Err(Error::SizeMismatch { expected: time.nodes(), found: states.len() });
        }
        Ok(Trajectory { time, states, provenance })
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn states(&self) -> &[WaveFunction] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &WaveFunction {
        &self.states[i]
    }

    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("trajectory has at least two nodes")
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    /// Largest `|‖ψ(t_i)‖ - 1|`.
    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest discrete L² distance to another trajectory on the same grid.
    pub fn max_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.time.nodes() != other.time.nodes() {
            return Err(Error::GridMismatch);
        }
        let mut worst = 0.0_f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            a.check_compatible(b)?;
            worst = worst.max(l2_distance(a, b));
        }
        Ok(worst)
    }
}

/// Discrete L² distance `‖a - b‖`.
pub fn l2_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let s: f64 = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm_sqr()).sum();
    (s * a.cell_volume()).sqrt()
}

fn check_normalized(psi: &WaveFunction) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidArgument(format!("initial state must be normalized, norm is {n}")));
    }
    Ok(())
}

fn check_potential(spec: &HamiltonianSpec, v: &PotentialTrajectory) -> Result<()> {
    if v.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// One Crank–Nicolson step `(1 + iΔtH/2) ψ_new = (1 - iΔtH/2) ψ_old` with
/// `H = T + W + v`. A negative `dt` steps backwards.
pub fn crank_nicolson_step(spec: &HamiltonianSpec, psi: &[Complex64], v: &[f64], dt: f64) -> Result<Vec<Complex64>> {
    spec.grid().check_len(v.len())?;
    if psi.len() != spec.dimension() {
        return Err(Error::SizeMismatch { expected: spec.dimension(), found: psi.len() });
    }
    let a = 0.5 * dt;
    if spec.particles() == 1 {
        cn_step_tridiagonal(spec.grid(), psi, v, a)
    } else {
        cn_step_cg(spec, psi, v, a)
    }
}

fn cn_step_tridiagonal(grid: &Grid, psi: &[Complex64], v: &[f64], a: f64) -> Result<Vec<Complex64>> {
    let m = grid.points();
    let hop = -0.5 / grid.spacing().powi(2);
    let hpsi: Vec<Complex64> = {
        let lap = grid.laplacian_unchecked(psi);
        lap.iter().zip(psi).zip(v).map(|((l, p), vv)| l * -0.5 + p * *vv).collect()
    };
    let rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, h)| p - Complex64::i() * a * h).collect();
    let off = Complex64::new(0.0, a * hop);
    let sub = vec![off; m];
    let sup = vec![off; m];
    let diag: Vec<Complex64> = v.iter().map(|vv| Complex64::new(1.0, a * (-2.0 * hop + vv))).collect();
    match grid.boundary() {
        Boundary::Periodic => solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs),
        Boundary::Dirichlet => solve_tridiagonal(&sub, &diag, &sup, &rhs),
    }
}

// (I + a²H²) x = (I - iaH)² ψ, real and imaginary parts stacked.
fn cn_step_cg(spec: &HamiltonianSpec, psi: &[Complex64], v: &[f64], a: f64) -> Result<Vec<Complex64>> {
    let n = psi.len();
    let h1 = spec.apply_with(psi, v);
    let h2 = spec.apply_with(&h1, v);
    let mut rhs = vec![0.0; 2 * n];
    for k in 0..n {
        let z = psi[k] - h2[k] * (a * a) - Complex64::i() * (2.0 * a) * h1[k];
        rhs[k] = z.re;
        rhs[n + k] = z.im;
    }
    let apply = |x: &[f64]| {
        let mut out = vec![0.0; 2 * n];
        for half in 0..2 {
            let part = &x[half * n..(half + 1) * n];
            let hx = spec.apply_with(part, v);
            let hhx = spec.apply_with(&hx, v);
            for k in 0..n {
                out[half * n + k] = part[k] + a * a * hhx[k];
            }
        }
        out
    };
    let guess: Vec<f64> = psi.iter().map(|z| z.re).chain(psi.iter().map(|z| z.im)).collect();
    let x = conjugate_gradient(apply, &rhs, Some(&guess), CG_TOLERANCE, CG_MAX_ITER)?;
    Ok((0..n).map(|k| Complex64::new(x[k], x[n + k])).collect())
}

fn check_finite(psi: &[Complex64], node: usize) -> Result<()> {
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    Ok(())
}

/// Raw stepwise evolution of an amplitude vector over the steps `from..to`,
/// returning the states at nodes `from..=to`.
pub(crate) fn evolve_amplitudes(
    spec: &HamiltonianSpec,
    psi0: Vec<Complex64>,
    v: &PotentialTrajectory,
    sampling: PotentialSampling,
    from: usize,
    to: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let dt = v.time().step();
    let mut out = Vec::with_capacity(to - from + 1);
    out.push(psi0);
    for i in from..to {
        let vi = v.step_potential(i, sampling);
        let next = crank_nicolson_step(spec, out.last().expect("non-empty"), &vi, dt)?;
        check_finite(&next, i + 1)?;
        out.push(next);
    }
    Ok(out)
}

fn solver_tolerance(spec: &HamiltonianSpec) -> f64 {
    if spec.particles() == 1 {
        0.0
    } else {
        CG_TOLERANCE
    }
}

/// Crank–Nicolson with the potential frozen at the left end of every step.
pub fn propagate_stepwise_static(
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    spec: &HamiltonianSpec,
) -> Result<Trajectory> {
    propagate_stepwise(psi0, v, spec, PotentialSampling::LeftEndpoint)
}

pub fn propagate_stepwise(
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<Trajectory> {
    spec.check_state(psi0)?;
    check_potential(spec, v)?;
    check_normalized(psi0)?;
    let steps = v.time().steps();
    let amps = evolve_amplitudes(spec, psi0.amplitudes().to_vec(), v, sampling, 0, steps)?;
    let states = amps.into_iter().map(|a| psi0.with_amplitudes(a)).collect();
    Trajectory::new(
        *v.time(),
        states,
        Provenance { method: Method::StepwiseStatic { sampling }, solver_tolerance: solver_tolerance(spec) },
    )
}

/// Stepwise evolution of `ψ` from node `from` to node `to` of the
/// potential's time grid.
pub fn propagate_interval(
    psi: &WaveFunction,
    v: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
    from: usize,
    to: usize,
) -> Result<WaveFunction> {
    spec.check_state(psi)?;
    check_potential(spec, v)?;
    if from > to || to > v.time().steps() {
        return Err(Error::InvalidArgument(format!("invalid interval {from}..{to}")));
    }
    let amps = evolve_amplitudes(spec, psi.amplitudes().to_vec(), v, sampling, from, to)?;
    Ok(psi.with_amplitudes(amps.into_iter().last().expect("non-empty")))
}

/// Exact evolution `e^{-iHt}` in the eigenbasis of a static Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    decomposition: SpectralDecomposition,
}

impl SpectralPropagator {
    /// Full discrete spectrum of `spec` (with its static potential).
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        Ok(SpectralPropagator { decomposition: spectrum(spec, spec.dimension())? })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    /// Coefficients `⟨e_k, f⟩` of a flat amplitude vector.
    pub fn coefficients(&self, f: &[Complex64]) -> Vec<Complex64> {
        let w = self.decomposition.cell_volume();
        self.decomposition
            .vectors()
            .par_iter()
            .map(|e| e.iter().zip(f).map(|(a, b)| b * *a).sum::<Complex64>() * w)
            .collect()
    }

    pub fn synthesize(&self, c: &[Complex64]) -> Vec<Complex64> {
        let dim = c.len();
        let mut out = vec![Complex64::default(); dim];
        for (ck, e) in c.iter().zip(self.decomposition.vectors()) {
            if *ck == Complex64::default() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(e) {
                *o += ck * *x;
            }
        }
        out
    }

    /// Multiply coefficients by `e^{-iε_k t}`.
    pub fn phase(&self, c: &[Complex64], t: f64) -> Vec<Complex64> {
        c.iter().zip(self.decomposition.values()).map(|(ck, e)| ck * Complex64::from_polar(1.0, -e * t)).collect()
    }

    pub fn evolve(&self, psi: &WaveFunction, t: f64) -> WaveFunction {
        let c = self.coefficients(psi.amplitudes());
        psi.with_amplitudes(self.synthesize(&self.phase(&c, t)))
    }
}

/// `ψ(t) = Σ_k ⟨e_k, ψ₀⟩ e^{-iε_k t} e_k` over the full discrete spectrum.
pub fn propagate_spectral_static(psi0: &WaveFunction, spec: &HamiltonianSpec, time: &TimeGrid) -> Result<Trajectory> {
    spec.check_state(psi0)?;
    let prop = SpectralPropagator::new(spec)?;
    let c = prop.coefficients(psi0.amplitudes());
    let states: Vec<WaveFunction> = (0..time.nodes())
        .into_par_iter()
        .map(|i| if i == 0 { psi0.clone() } else { psi0.with_amplitudes(prop.synthesize(&prop.phase(&c, time.t(i)))) })
        .collect();
    Trajectory::new(*time, states, Provenance { method: Method::SpectralStatic, solver_tolerance: 0.0 })
}

/// Truncated series `Σ_{k=0}^K Q_v^k U₀ψ₀`, with `U₀` the evolution of `spec`
/// without its static potential and
/// `Q_v φ(t) = -i ∫₀ᵗ U₀(t-s) v(s) φ(s) ds` by the trapezoid rule.
/// The result is not renormalised.
pub fn propagate_neumann_series(
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    order: usize,
) -> Result<Trajectory> {
    spec.check_state(psi0)?;
    check_potential(spec, v)?;
    let free = spec.with_static_potential(vec![0.0; spec.grid().points()])?;
    let prop = SpectralPropagator::new(&free)?;
    let time = *v.time();
    let c0 = prop.coefficients(psi0.amplitudes());
    // every term is kept in the eigenbasis of the free Hamiltonian
    let mut term: Vec<Vec<Complex64>> = (0..time.nodes()).map(|i| prop.phase(&c0, time.t(i))).collect();
    let mut total = term.clone();
    for _ in 0..order {
        term = apply_q(&prop, v, &free, &term)?;
        for (acc, t) in total.iter_mut().zip(&term) {
            for (a, b) in acc.iter_mut().zip(t) {
                *a += b;
            }
        }
    }
    let states = total.par_iter().map(|c| psi0.with_amplitudes(prop.synthesize(c))).collect();
    Trajectory::new(time, states, Provenance { method: Method::NeumannSeries { order }, solver_tolerance: 0.0 })
}

fn apply_q(
    prop: &SpectralPropagator,
    v: &PotentialTrajectory,
    free: &HamiltonianSpec,
    phi: &[Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>> {
    let time = v.time();
    let dt = time.step();
    let energies = prop.decomposition().values();
    // g_j = coefficients of v(t_j) φ(t_j)
    let g: Vec<Vec<Complex64>> = phi
        .par_iter()
        .enumerate()
        .map(|(j, c)| {
            let f = prop.synthesize(c);
            let vf = multiply_potential(free, &f, v.at(j));
            prop.coefficients(&vf)
        })
        .collect();
    let step_phase: Vec<Complex64> = energies.iter().map(|e| Complex64::from_polar(1.0, -e * dt)).collect();
    let dim = energies.len();
    let mut out = Vec::with_capacity(time.nodes());
    out.push(vec![Complex64::default(); dim]);
    // P_i = Σ_{j≤i} e^{-iε(t_i - t_j)} g_j
    let mut p = g[0].clone();
    for i in 1..time.nodes() {
        for k in 0..dim {
            p[k] = p[k] * step_phase[k] + g[i][k];
        }
        let start_phase = prop.phase(&g[0], time.t(i));
        let integral: Vec<Complex64> =
            (0..dim).map(|k| (p[k] - start_phase[k] * 0.5 - g[i][k] * 0.5) * dt * -Complex64::i()).collect();
        out.push(integral);
    }
    Ok(out)
}

/// `(v(x₁) [+ v(x₂)]) f` for a flat amplitude vector.
pub(crate) fn multiply_potential(spec: &HamiltonianSpec, f: &[Complex64], v: &[f64]) -> Vec<Complex64> {
    let m = spec.grid().points();
    if spec.particles() == 1 {
        f.iter().zip(v).map(|(z, vv)| z * *vv).collect()
    } else {
        f.iter().enumerate().map(|(k, z)| z * (v[k / m] + v[k % m])).collect()
    }
}

/// `δψ([v; w], t) = -i ∫₀ᵗ U([v], t, s) w(s) ψ([v], s) ds` with the
/// trapezoid rule and stepwise propagation.
pub fn functional_derivative_dpsi(
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    w: &PotentialTrajectory,
    spec: &HamiltonianSpec,
) -> Result<Trajectory> {
    functional_derivative_dpsi_with(psi0, v, w, spec, PotentialSampling::LeftEndpoint)
}

pub fn functional_derivative_dpsi_with(
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    w: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<Trajectory> {
    v.check_compatible(w)?;
    let traj = propagate_stepwise(psi0, v, spec, sampling)?;
    let dpsi = derivative_along(&traj, v, w, spec, sampling)?;
    Trajectory::new(
        *v.time(),
        dpsi,
        Provenance { method: Method::FunctionalDerivative { sampling }, solver_tolerance: solver_tolerance(spec) },
    )
}

/// `δψ` along an already computed trajectory.
pub(crate) fn derivative_along(
    traj: &Trajectory,
    v: &PotentialTrajectory,
    w: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<Vec<WaveFunction>> {
    let time = v.time();
    let dt = time.step();
    let psi0 = traj.state(0);
    let dim = spec.dimension();
    let source = |j: usize| multiply_potential(spec, traj.state(j).amplitudes(), w.at(j));
    let mut out = Vec::with_capacity(time.nodes());
    out.push(psi0.with_amplitudes(vec![Complex64::default(); dim]));
    // B_{j+1} = U_j (B_j + c_j f_j), δψ_j = -i (B_j + Δt/2 f_j)
    let mut b = vec![Complex64::default(); dim];
    for j in 0..time.steps() {
        let f = source(j);
        let c = if j == 0 { 0.5 * dt } else { dt };
        for (bk, fk) in b.iter_mut().zip(&f) {
            *bk += fk * c;
        }
        b = crank_nicolson_step(spec, &b, &v.step_potential(j, sampling), dt)?;
        check_finite(&b, j + 1)?;
        let f_next = source(j + 1);
        let d: Vec<Complex64> =
            b.iter().zip(&f_next).map(|(bk, fk)| (bk + fk * (0.5 * dt)) * -Complex64::i()).collect();
        out.push(psi0.with_amplitudes(d));
    }
    Ok(out)
}
