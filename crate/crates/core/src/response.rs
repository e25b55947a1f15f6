//! Linear density response: Kubo variations, kicked propagation and the
//! Lehmann representation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{spectrum, HamiltonianSpec, SpectralDecomposition};
use crate::observables::{density, pair_density};
use crate::propagator::{
    derivative_along, multiply_potential, propagate_stepwise, PotentialSampling, PotentialTrajectory, TimeGrid,
};
use crate::wavefunction::WaveFunction;

/// Default Lorentzian broadening in hartree.
pub const DEFAULT_BROADENING: f64 = 0.01;
/// Admissible kick strengths.
pub const KICK_RANGE: (f64, f64) = (1e-6, 1e-1);

/// Symmetric observable on the state space.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// One-body multiplication operator `Σ_j f(x_j)`.
    OneBody(Vec<f64>),
    /// Dense symmetric matrix on the full amplitude space.
    Matrix(DMatrix<f64>),
}

impl Observable {
    /// Validated dense observable.
    pub fn matrix(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("observable matrix must be square".into()));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("observable matrix must be symmetric".into()));
        }
        Ok(Observable::Matrix(a))
    }

    fn check(&self, spec: &HamiltonianSpec) -> Result<()> {
        match self {
            Observable::OneBody(f) => spec.grid().check_len(f.len()),
            Observable::Matrix(a) if a.nrows() != spec.dimension() => {
                Err(Error::SizeMismatch { expected: spec.dimension(), found: a.nrows() })
            }
            Observable::Matrix(_) => Ok(()),
        }
    }

    fn apply(&self, spec: &HamiltonianSpec, f: &[Complex64]) -> Vec<Complex64> {
        match self {
            Observable::OneBody(g) => multiply_potential(spec, f, g),
            Observable::Matrix(a) => {
                (0..a.nrows()).map(|r| a.row(r).iter().zip(f).map(|(x, z)| z * *x).sum()).collect()
            }
        }
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &WaveFunction, spec: &HamiltonianSpec) -> Result<f64> {
        self.check(spec)?;
        spec.check_state(psi)?;
        let ap = self.apply(spec, psi.amplitudes());
        Ok(psi.amplitudes().iter().zip(&ap).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * psi.cell_volume())
    }
}

/// First-order variation `δ⟨A⟩(t) = 2 Re⟨δψ([v; w], t), A ψ([v], t)⟩` on the
/// time grid of `v`.
pub fn kubo_response(
    a: &Observable,
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    w: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<Vec<f64>> {
    a.check(spec)?;
    v.check_compatible(w)?;
    let traj = propagate_stepwise(psi0, v, spec, sampling)?;
    let dpsi = derivative_along(&traj, v, w, spec, sampling)?;
    let vol = psi0.cell_volume();
    Ok(traj
        .states()
        .par_iter()
        .zip(dpsi.par_iter())
        .map(|(psi, d)| {
            let ap = a.apply(spec, psi.amplitudes());
            2.0 * d.amplitudes().iter().zip(&ap).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * vol
        })
        .collect())
}

/// Expectation series `⟨A⟩(t)` under stepwise propagation.
pub fn expectation_series(
    a: &Observable,
    psi0: &WaveFunction,
    v: &PotentialTrajectory,
    spec: &HamiltonianSpec,
    sampling: PotentialSampling,
) -> Result<Vec<f64>> {
    let traj = propagate_stepwise(psi0, v, spec, sampling)?;
    traj.states().par_iter().map(|psi| a.expectation(psi, spec)).collect()
}

/// Density response kernel in time or frequency representation.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseKernel {
    /// `χ(τ; x, y)` for `τ ≥ 0`, one `M × M` matrix (row `x`, column `y`)
    /// per time.
    Time { times: Vec<f64>, values: Vec<DMatrix<f64>> },
    /// `χ̃(ω; x, y)` with Lorentzian broadening `γ`.
    Frequency { omegas: Vec<f64>, broadening: f64, values: Vec<DMatrix<Complex64>> },
}

impl ResponseKernel {
    /// `Σ_{x,y} |χ(x, y)| Δx²` for every sample.
    pub fn integrated_magnitude(&self, dx: f64) -> Vec<f64> {
        let w = dx * dx;
        match self {
            ResponseKernel::Time { values, .. } => {
                values.iter().map(|m| m.iter().map(|z| z.abs()).sum::<f64>() * w).collect()
            }
            ResponseKernel::Frequency { values, .. } => {
                values.iter().map(|m| m.iter().map(|z| z.norm()).sum::<f64>() * w).collect()
            }
        }
    }

    /// Largest `|χ(x, y) - χ(y, x)|` over all samples.
    pub fn asymmetry(&self) -> f64 {
        fn slice<T: Copy>(m: &DMatrix<T>, norm: impl Fn(T, T) -> f64) -> f64 {
            let mut worst = 0.0_f64;
            for r in 0..m.nrows() {
                for c in 0..r {
                    worst = worst.max(norm(m[(r, c)], m[(c, r)]));
                }
            }
            worst
        }
        match self {
            ResponseKernel::Time { values, .. } => {
                values.iter().map(|m| slice(m, |a: f64, b: f64| (a - b).abs())).fold(0.0, f64::max)
            }
            ResponseKernel::Frequency { values, .. } => {
                values.iter().map(|m| slice(m, |a: Complex64, b: Complex64| (a - b).norm())).fold(0.0, f64::max)
            }
        }
    }
}

/// Transition densities `n_{0k}(x)` and excitation energies `Ω_k` of the
/// lowest `count` excitations of the static Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    pub energies: Vec<f64>,
    /// `n_{0k}` on the grid, real for the real eigenvectors.
    pub densities: Vec<Vec<f64>>,
}

impl Transitions {
    pub fn from_spectrum(decomposition: &SpectralDecomposition, count: usize) -> Result<Self> {
        if count == 0 || count + 1 > decomposition.len() {
            return Err(Error::InvalidArgument(format!(
                "need 1..={} excitations, got {count}",
                decomposition.len().saturating_sub(1)
            )));
        }
        let values = decomposition.values();
        let gap = values[1] - values[0];
        if gap <= 1e-10 * values[0].abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("degenerate ground state (gap {gap:e})")));
        }
        let grid = decomposition.grid();
        let rank = decomposition.rank();
        let to_complex = |v: &Vec<f64>| -> Vec<Complex64> { v.iter().map(|x| Complex64::new(*x, 0.0)).collect() };
        let ground = to_complex(&decomposition.vectors()[0]);
        let (energies, densities) = (1..=count)
            .map(|k| {
                let excited = to_complex(&decomposition.vectors()[k]);
                let n0k = pair_density(grid, rank, &ground, &excited).into_iter().map(|z| z.re).collect();
                (values[k] - values[0], n0k)
            })
            .unzip();
        Ok(Transitions { energies, densities })
    }

    pub fn for_hamiltonian(spec: &HamiltonianSpec, count: usize) -> Result<Self> {
        Transitions::from_spectrum(&spectrum(spec, count + 1)?, count)
    }

    /// `χ(τ; x, y) = -2 Σ_k n_{0k}(x) n_{0k}(y) sin(Ω_k τ)`.
    pub fn time_kernel(&self, x: usize, y: usize, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        -2.0 * self.energies.iter().zip(&self.densities).map(|(o, n)| n[x] * n[y] * (o * tau).sin()).sum::<f64>()
    }

    /// Response of node `x` to a unit impulse spread uniformly over
    /// `[0, width]` at node `y`: `(1/width) ∫₀^width χ(t - s; x, y) ds`.
    pub fn boxcar_response(&self, x: usize, y: usize, t: f64, width: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let active = t.min(width);
        -2.0 * self
            .energies
            .iter()
            .zip(&self.densities)
            .map(|(o, n)| n[x] * n[y] * ((o * (t - active)).cos() - (o * t).cos()) / o)
            .sum::<f64>()
            / width
    }
}

/// Lehmann kernel
/// `χ̃(ω; x, y) = Σ_k [n_{0k}(x)n_{k0}(y)/(ω - Ω_k + iγ) - n_{0k}(y)n_{k0}(x)/(ω + Ω_k + iγ)]`
/// over the lowest `count` excitations.
pub fn chi_lehmann(spec: &HamiltonianSpec, count: usize, broadening: f64, omegas: &[f64]) -> Result<ResponseKernel> {
    if !(broadening > 0.0) {
        return Err(Error::InvalidArgument(format!("broadening must be positive, got {broadening}")));
    }
    let tr = Transitions::for_hamiltonian(spec, count)?;
    Ok(lehmann_from_transitions(&tr, broadening, omegas))
}

pub fn lehmann_from_transitions(tr: &Transitions, broadening: f64, omegas: &[f64]) -> ResponseKernel {
    let m = tr.densities[0].len();
    let values = omegas
        .par_iter()
        .map(|&w| {
            let mut chi = DMatrix::<Complex64>::zeros(m, m);
            for (o, n) in tr.energies.iter().zip(&tr.densities) {
                let down = Complex64::new(w - o, broadening).inv();
                let up = Complex64::new(w + o, broadening).inv();
                // n_{0k} is real, so both products are n(x) n(y)
                let c = down - up;
                for y in 0..m {
                    for x in 0..m {
                        chi[(x, y)] += c * (n[x] * n[y]);
                    }
                }
            }
            chi
        })
        .collect();
    ResponseKernel::Frequency { omegas: omegas.to_vec(), broadening, values }
}

/// Frequency grid `[0, 1.5 Ω_K]` with `points` samples.
pub fn default_omega_grid(tr: &Transitions, points: usize) -> Vec<f64> {
    let top = 1.5 * tr.energies.last().copied().unwrap_or(1.0);
    let n = points.max(2);
    (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
}

/// Time-domain Lehmann kernel at the given times.
pub fn lehmann_time_kernel(tr: &Transitions, times: &[f64]) -> ResponseKernel {
    let m = tr.densities[0].len();
    let values = times.par_iter().map(|&t| DMatrix::from_fn(m, m, |x, y| tr.time_kernel(x, y, t))).collect();
    ResponseKernel::Time { times: times.to_vec(), values }
}

/// Density response `δn(t, x)/κ` to a kick `κ δ_y` applied during the first
/// step (`δ_y` the cell indicator over `Δx`), followed by free stepwise
/// evolution under the static potential. The odd combination
/// `(n[+κ] - n[-κ]) / 2κ` removes the quadratic response.
pub fn chi_time_domain(spec: &HamiltonianSpec, site: usize, kappa: f64, time: &TimeGrid) -> Result<Vec<Vec<f64>>> {
    let grid = *spec.grid();
    if site >= grid.points() {
        return Err(Error::InvalidArgument(format!("site {site} outside a grid of {} points", grid.points())));
    }
    if !(KICK_RANGE.0..=KICK_RANGE.1).contains(&kappa) {
        return Err(Error::InvalidArgument(format!(
            "kick strength {kappa:e} outside [{:e}, {:e}]",
            KICK_RANGE.0, KICK_RANGE.1
        )));
    }
    let gs = crate::hamiltonian::ground_state(spec)?;
    if gs.degenerate {
        return Err(Error::InvalidArgument("degenerate ground state".into()));
    }
    let psi0 = gs.state;
    let run = |sign: f64| -> Result<Vec<Vec<f64>>> {
        let mut values = vec![spec.v_static().to_vec(); time.nodes()];
        values[0][site] += sign * kappa / (time.step() * grid.spacing());
        let v = PotentialTrajectory::new(grid, *time, values, crate::propagator::Gauge::Raw)?;
        let traj = propagate_stepwise(&psi0, &v, spec, PotentialSampling::LeftEndpoint)?;
        Ok(traj.states().iter().map(density).collect())
    };
    let (plus, minus) = rayon::join(|| run(1.0), || run(-1.0));
    let (plus, minus) = (plus?, minus?);
    Ok(plus.iter().zip(&minus).map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b) / (2.0 * kappa)).collect()).collect())
}

/// Peak of the Hann-windowed, zero-padded spectrum of a real series within
/// `[0, omega_max]`, refined by parabolic interpolation.
pub fn dominant_frequency(series: &[f64], dt: f64, omega_max: f64) -> Result<f64> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(i, s)| (s - mean) * (0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let padded = (8 * n).next_power_of_two();
    let d_omega = 2.0 * PI / (padded as f64 * dt);
    let bins = ((omega_max / d_omega).floor() as usize).min(padded / 2);
    if bins < 2 {
        return Err(Error::InvalidArgument("frequency window narrower than the spectral resolution".into()));
    }
    let power: Vec<f64> = (0..=bins)
        .into_par_iter()
        .map(|k| {
            let w = k as f64 * d_omega * dt;
            windowed.iter().enumerate().map(|(i, s)| Complex64::from_polar(*s, -w * i as f64)).sum::<Complex64>().norm()
        })
        .collect();
    let peak = (1..bins).max_by(|a, b| power[*a].total_cmp(&power[*b])).expect("at least one interior bin");
    let (a, b, c) = (power[peak - 1], power[peak], power[peak + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok((peak as f64 + offset) * d_omega)
}
