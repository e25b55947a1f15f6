//! Discrete Hamiltonians `H = -½Δ + v (+ w)` for one or two particles.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, Scalar};
use crate::linalg::{dense_symmetric_eigen, lanczos_lowest};
use crate::wavefunction::{Symmetry, WaveFunction};

/// Largest dimension handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;

/// Above this dimension the ground state is found iteratively.
pub const GROUND_STATE_DENSE_LIMIT: usize = 1024;

/// Soft-core pair interaction `λ / sqrt(u² + a²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftCore {
    pub strength: f64,
    pub softening: f64,
}

impl SoftCore {
    pub fn new(strength: f64, softening: f64) -> Result<Self> {
        if !(softening > 0.0) {
            return Err(Error::InvalidArgument(format!("softening must be positive, got {softening}")));
        }
        Ok(SoftCore { strength, softening })
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.strength / (u * u + self.softening * self.softening).sqrt()
    }
}

impl Default for SoftCore {
    fn default() -> Self {
        SoftCore { strength: 1.0, softening: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    grid: Grid,
    v_static: Vec<f64>,
    interaction: Option<SoftCore>,
    particles: usize,
    pair_table: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn one_particle(grid: Grid, v_static: Vec<f64>) -> Result<Self> {
        HamiltonianSpec::new(grid, v_static, None, 1)
    }

    pub fn two_particle(grid: Grid, v_static: Vec<f64>, interaction: Option<SoftCore>) -> Result<Self> {
        HamiltonianSpec::new(grid, v_static, interaction, 2)
    }

    pub fn new(grid: Grid, v_static: Vec<f64>, interaction: Option<SoftCore>, particles: usize) -> Result<Self> {
        grid.check_len(v_static.len())?;
        if particles != 1 && particles != 2 {
            return Err(Error::InvalidArgument(format!("particle count must be 1 or 2, got {particles}")));
        }
        if v_static.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("static potential has non-finite entries".into()));
        }
        let m = grid.points();
        let pair_table = match (particles, interaction) {
            (2, Some(w)) => {
                // w(x_i - x_j) depends on i - j only; periodic grids use the
                // minimum-image separation so that w stays periodic.
                let mut t = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        t[i * m + j] = w.eval(pair_separation(&grid, i, j));
                    }
                }
                t
            }
            _ => Vec::new(),
        };
        Ok(HamiltonianSpec { grid, v_static, interaction, particles, pair_table })
    }

    /// Same kinetic and interaction parts with another static potential.
    pub fn with_static_potential(&self, v_static: Vec<f64>) -> Result<Self> {
        HamiltonianSpec::new(self.grid, v_static, self.interaction, self.particles)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v_static(&self) -> &[f64] {
        &self.v_static
    }

    pub fn interaction(&self) -> Option<SoftCore> {
        if self.particles == 2 {
            self.interaction
        } else {
            None
        }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.grid.points().pow(self.particles as u32)
    }

    /// `w(x_i - x_j)` table (row-major), empty without interaction.
    pub fn pair_table(&self) -> &[f64] {
        &self.pair_table
    }

    pub fn check_state(&self, psi: &WaveFunction) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if psi.rank() != self.particles {
            return Err(Error::InvalidArgument(format!(
                "{}-particle Hamiltonian applied to a rank-{} state",
                self.particles,
                psi.rank()
            )));
        }
        Ok(())
    }

    /// `H ψ` with the static potential.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.check_state(psi)?;
        Ok(psi.with_amplitudes(self.apply_with(psi.amplitudes(), &self.v_static)))
    }

    /// `(T + W + v) f` for a flat amplitude vector and one-body potential `v`.
    pub fn apply_with<T: Scalar>(&self, f: &[T], v: &[f64]) -> Vec<T> {
        let m = self.grid.points();
        if self.particles == 1 {
            let lap = self.grid.laplacian_unchecked(f);
            lap.iter().zip(f).zip(v).map(|((l, x), vv)| *l * -0.5 + *x * *vv).collect()
        } else {
            let l0 = self.grid.laplacian_axis(f, 0);
            let l1 = self.grid.laplacian_axis(f, 1);
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let k = i * m + j;
                    let mut pot = v[i] + v[j];
                    if !self.pair_table.is_empty() {
                        pot += self.pair_table[k];
                    }
                    out.push((l0[k] + l1[k]) * -0.5 + f[k] * pot);
                }
            }
            out
        }
    }

    /// Dense matrix of `T + W + v`.
    pub fn dense_matrix_with(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        let dim = self.dimension();
        if dim > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "dense materialisation limited to dimension {DENSE_LIMIT}, got {dim}"
            )));
        }
        let m = self.grid.points();
        let h2 = self.grid.spacing().powi(2);
        let hop = -0.5 / h2;
        let neighbours = |i: usize| -> Vec<usize> {
            let mut out = Vec::with_capacity(2);
            match self.grid.boundary() {
                Boundary::Periodic => {
                    out.push((i + m - 1) % m);
                    out.push((i + 1) % m);
                }
                Boundary::Dirichlet => {
                    if i > 0 {
                        out.push(i - 1);
                    }
                    if i + 1 < m {
                        out.push(i + 1);
                    }
                }
            }
            out
        };
        let mut mat = DMatrix::<f64>::zeros(dim, dim);
        if self.particles == 1 {
            for i in 0..m {
                mat[(i, i)] += 1.0 / h2 + v[i];
                for n in neighbours(i) {
                    mat[(i, n)] += hop;
                }
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    let k = i * m + j;
                    let mut diag = 2.0 / h2 + v[i] + v[j];
                    if !self.pair_table.is_empty() {
                        diag += self.pair_table[k];
                    }
                    mat[(k, k)] += diag;
                    for n in neighbours(i) {
                        mat[(k, n * m + j)] += hop;
                    }
                    for n in neighbours(j) {
                        mat[(k, i * m + n)] += hop;
                    }
                }
            }
        }
        Ok(mat)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        self.dense_matrix_with(&self.v_static)
    }

    /// `⟨ψ, H ψ⟩` with the static potential.
    pub fn energy(&self, psi: &WaveFunction) -> Result<f64> {
        let hpsi = self.apply(psi)?;
        Ok(psi.inner(&hpsi)?.re)
    }
}

/// Separation `x_i - x_j`, wrapped to the minimum image on periodic grids.
pub fn pair_separation(grid: &Grid, i: usize, j: usize) -> f64 {
    let u = (i as f64 - j as f64) * grid.spacing();
    match grid.boundary() {
        Boundary::Periodic => {
            let l = grid.length();
            let mut w = u.rem_euclid(l);
            if w > 0.5 * l {
                w -= l;
            }
            w
        }
        Boundary::Dirichlet => u,
    }
}

/// Eigenpairs of a discrete Hamiltonian, vectors normalised in the discrete
/// L² inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    grid: Grid,
    rank: usize,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl SpectralDecomposition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.spacing().powi(self.rank as i32)
    }

    pub fn state(&self, k: usize) -> Result<WaveFunction> {
        let v = self.vectors.get(k).ok_or_else(|| Error::InvalidArgument(format!("eigenvector {k} not available")))?;
        WaveFunction::new(self.grid, self.rank, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Coefficients `⟨e_k, ψ⟩`.
    pub fn project(&self, psi: &WaveFunction) -> Vec<Complex64> {
        let w = self.cell_volume();
        self.vectors
            .iter()
            .map(|e| e.iter().zip(psi.amplitudes()).map(|(a, b)| b * *a).sum::<Complex64>() * w)
            .collect()
    }
}

fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn normalise_discrete(v: &mut [f64], cell: f64) {
    let n = (v.iter().map(|x| x * x).sum::<f64>() * cell).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// The `count` lowest eigenpairs, ascending, with the sign convention that
/// the first non-negligible component is positive.
pub fn spectrum(spec: &HamiltonianSpec, count: usize) -> Result<SpectralDecomposition> {
    let dim = spec.dimension();
    if count == 0 || count > dim {
        return Err(Error::InvalidArgument(format!("requested {count} eigenpairs of a dimension-{dim} operator")));
    }
    let (values, vectors) = dense_symmetric_eigen(spec.dense_matrix()?)?;
    let cell = spec.grid.spacing().powi(spec.particles as i32);
    let mut vectors: Vec<Vec<f64>> = vectors.into_iter().take(count).collect();
    for v in vectors.iter_mut() {
        normalise_discrete(v, cell);
        fix_sign(v);
    }
    Ok(SpectralDecomposition {
        grid: spec.grid,
        rank: spec.particles,
        values: values.into_iter().take(count).collect(),
        vectors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub state: WaveFunction,
    pub energy: f64,
    /// Gap to the next level, when it was computed.
    pub gap: Option<f64>,
    /// Lowest level degenerate within 1e-12.
    pub degenerate: bool,
}

/// Normalised lowest eigenvector, real with positive peak amplitude.
pub fn ground_state(spec: &HamiltonianSpec) -> Result<GroundState> {
    let dim = spec.dimension();
    let cell = spec.grid.spacing().powi(spec.particles as i32);
    let want = 2.min(dim);
    let (values, mut vectors) = if dim <= GROUND_STATE_DENSE_LIMIT {
        let dec = spectrum(spec, want)?;
        (dec.values, dec.vectors)
    } else {
        let apply = |x: &[f64]| spec.apply_with(x, &spec.v_static);
        let (vals, mut vecs) = lanczos_lowest(apply, dim, want, &[], 1e-11)?;
        for v in vecs.iter_mut() {
            normalise_discrete(v, cell);
        }
        (vals, vecs)
    };
    let mut v = vectors.swap_remove(0);
    let peak = v.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if peak < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let gap = values.get(1).map(|e1| e1 - values[0]);
    let degenerate = gap.is_some_and(|g| g.abs() <= 1e-12 * values[0].abs().max(1.0));
    let mut state = WaveFunction::new(spec.grid, spec.particles, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    if spec.particles == 2 {
        let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if state.symmetry_residual(Symmetry::Symmetric) <= 1e-8 * scale {
            state = symmetrize(&state)?.with_symmetry(Symmetry::Symmetric)?;
        }
    }
    Ok(GroundState { state, energy: values[0], gap, degenerate })
}

/// Exact symmetrisation `(ψ(x₁,x₂) + ψ(x₂,x₁)) / 2`.
fn symmetrize(psi: &WaveFunction) -> Result<WaveFunction> {
    let m = psi.grid().points();
    let a = psi.amplitudes();
    let mut out = vec![Complex64::default(); m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = (a[i * m + j] + a[j * m + i]) * 0.5;
        }
    }
    WaveFunction::new(*psi.grid(), 2, out)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_constant_in_kernel() {
        let g = Grid::new(2.0 * PI, 16, Boundary::Periodic).unwrap();
        let spec = HamiltonianSpec::one_particle(g, vec![0.0; 16]).unwrap();
        let psi = WaveFunction::from_real(g, &[0.7; 16]).unwrap();
        let h = spec.apply(&psi).unwrap();
        assert!(h.amplitudes().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn constant_shift() {
        let g = Grid::new(1.0, 20, Boundary::Dirichlet).unwrap();
        let free = HamiltonianSpec::one_particle(g, vec![0.0; 20]).unwrap();
        let shifted = HamiltonianSpec::one_particle(g, vec![0.3; 20]).unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::new(x * (1.0 - x), x)).unwrap();
        let a = free.apply(&psi).unwrap();
        let b = shifted.apply(&psi).unwrap();
        for ((x, y), p) in a.amplitudes().iter().zip(b.amplitudes()).zip(psi.amplitudes()) {
            assert!((y - x - p * 0.3).norm() < 1e-12);
        }
    }

    #[test]
    fn soft_core_contact_value() {
        let g = Grid::new(10.0, 10, Boundary::Dirichlet).unwrap();
        let w = SoftCore::new(1.0, 1.0).unwrap();
        let spec = HamiltonianSpec::two_particle(g, vec![0.0; 10], Some(w)).unwrap();
        // a single diagonal entry: kinetic part is local-plus-hops, the
        // potential contribution at x1 = x2 equals λ/a
        let m = 10;
        let k = 4 * m + 4;
        let mut amps = vec![Complex64::default(); m * m];
        amps[k] = Complex64::new(1.0, 0.0);
        let psi = WaveFunction::new(g, 2, amps).unwrap();
        let h = spec.apply(&psi).unwrap();
        let kinetic_diag = 2.0 / g.spacing().powi(2);
        assert!((h.amplitudes()[k].re - kinetic_diag - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_mismatch_rejected() {
        let g = Grid::new(1.0, 10, Boundary::Dirichlet).unwrap();
        let spec = HamiltonianSpec::two_particle(g, vec![0.0; 10], None).unwrap();
        let psi = WaveFunction::from_real(g, &[1.0; 10]).unwrap();
        assert!(spec.apply(&psi).is_err());
    }

    #[test]
    fn dense_matrix_is_symmetric_and_matches_apply() {
        for boundary in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::new(3.0, 8, boundary).unwrap();
            let v: Vec<f64> = g.coordinates().iter().map(|x| x.sin()).collect();
            let spec = HamiltonianSpec::two_particle(g, v, Some(SoftCore::default())).unwrap();
            let mat = spec.dense_matrix().unwrap();
            assert!((&mat - mat.transpose()).amax() < 1e-14);
            let x: Vec<f64> = (0..64).map(|k| ((k * 17) % 7) as f64 - 3.0).collect();
            let hx = spec.apply_with(&x, spec.v_static());
            let dense = &mat * nalgebra::DVector::from_vec(x.clone());
            for (a, b) in hx.iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn box_spectrum() {
        let g = Grid::new(1.0, 199, Boundary::Dirichlet).unwrap();
        let spec = HamiltonianSpec::one_particle(g, vec![0.0; 199]).unwrap();
        let dec = spectrum(&spec, 4).unwrap();
        let e1 = PI * PI / 2.0;
        assert!(((dec.values()[0] - e1) / e1).abs() < 1e-3);
        for k in 0..4 {
            let exact = ((k + 1) as f64 * PI).powi(2) / 2.0;
            assert!(((dec.values()[k] - exact) / exact).abs() < 2e-3);
        }
    }

    #[test]
    fn shift_equivariance() {
        let g = Grid::new(2.0, 40, Boundary::Dirichlet).unwrap();
        let v: Vec<f64> = g.coordinates().iter().map(|x| x * x).collect();
        let spec = HamiltonianSpec::one_particle(g, v.clone()).unwrap();
        let shifted = spec.with_static_potential(v.iter().map(|x| x + 0.75).collect()).unwrap();
        let a = spectrum(&spec, 5).unwrap();
        let b = spectrum(&shifted, 5).unwrap();
        for k in 0..5 {
            assert!((b.values()[k] - a.values()[k] - 0.75).abs() < 1e-10);
            let diff: f64 = a.vectors()[k].iter().zip(&b.vectors()[k]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "eigenvector {k} moved by {diff}");
        }
    }

    #[test]
    fn orthonormal_eigenvectors() {
        let g = Grid::new(2.0 * PI, 32, Boundary::Periodic).unwrap();
        let v: Vec<f64> = g.coordinates().iter().map(|x| x.cos()).collect();
        let spec = HamiltonianSpec::one_particle(g, v).unwrap();
        let dec = spectrum(&spec, 10).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let ip: f64 =
                    dec.vectors()[i].iter().zip(&dec.vectors()[j]).map(|(a, b)| a * b).sum::<f64>() * g.spacing();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10);
            }
        }
        assert!(dec.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn box_ground_state_shape() {
        let g = Grid::new(1.0, 99, Boundary::Dirichlet).unwrap();
        let spec = HamiltonianSpec::one_particle(g, vec![0.0; 99]).unwrap();
        let gs = ground_state(&spec).unwrap();
        // the FD eigenvector is exactly a sampled sine
        for (x, z) in g.coordinates().iter().zip(gs.state.amplitudes()) {
            let exact = 2.0_f64.sqrt() * (PI * x).sin();
            assert!((z.re - exact).abs() < 1e-3);
        }
        assert!(!gs.degenerate);
    }

    #[test]
    fn periodic_free_ground_state_is_constant() {
        let g = Grid::new(2.0 * PI, 24, Boundary::Periodic).unwrap();
        let spec = HamiltonianSpec::one_particle(g, vec![0.0; 24]).unwrap();
        let gs = ground_state(&spec).unwrap();
        let c = 1.0 / (2.0 * PI).sqrt();
        assert!(gs.state.amplitudes().iter().all(|z| (z.re - c).abs() < 1e-10));
        assert!(gs.energy.abs() < 1e-12);
    }

    #[test]
    fn iterative_ground_state_agrees_with_dense() {
        let g = Grid::new(2.0 * PI, 36, Boundary::Periodic).unwrap();
        let v: Vec<f64> = g.coordinates().iter().map(|x| x.cos()).collect();
        let spec = HamiltonianSpec::two_particle(g, v, Some(SoftCore::default())).unwrap();
        assert!(spec.dimension() > GROUND_STATE_DENSE_LIMIT);
        let gs = ground_state(&spec).unwrap();
        assert_eq!(gs.state.symmetry(), Symmetry::Symmetric);
        let residual = {
            let h = spec.apply(&gs.state).unwrap();
            h.amplitudes()
                .iter()
                .zip(gs.state.amplitudes())
                .map(|(a, b)| (a - b * gs.energy).norm())
                .fold(0.0, f64::max)
        };
        assert!(residual < 1e-6, "residual {residual}");
        let dense = spectrum(&spec, 1).unwrap();
        assert!((dense.values()[0] - gs.energy).abs() < 1e-9);
    }
}
