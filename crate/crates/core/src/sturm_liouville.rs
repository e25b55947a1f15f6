//! The divergence-form problem `-∇·(n∇v) = ζ` on a grid.
//!
//! The operator is assembled as `A = -D⁻ diag(w) D⁺` with a half-grid
//! weight `w`, by default the arithmetic mean of neighbouring nodal
//! weights. Periodic problems are solved in the mean-zero gauge, Dirichlet
//! problems with zero boundary values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::linalg::{dense_symmetric_eigen, lanczos_lowest, solve_tridiagonal};
use crate::observables::{arithmetic_bond_weight, DENSITY_FLOOR};

/// Bond weights at or below this value make the operator singular.
pub const WEIGHT_MIN: f64 = 1e-12;

/// Relative tolerance of the periodic compatibility condition `∫ζ = 0`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlGauge {
    MeanZeroSolution,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlProblem {
    grid: Grid,
    nodal_weight: Option<Vec<f64>>,
    bond_weight: Vec<f64>,
    rhs: Vec<f64>,
}

impl SlProblem {
    /// Nodal weight `n`, averaged onto the half grid.
    pub fn new(grid: Grid, n: &[f64], rhs: Vec<f64>) -> Result<Self> {
        let bond_weight = arithmetic_bond_weight(&grid, n)?;
        let mut p = SlProblem::with_bond_weight(grid, bond_weight, rhs)?;
        p.nodal_weight = Some(n.to_vec());
        Ok(p)
    }

    /// Explicit half-grid weight (one value per bond).
    pub fn with_bond_weight(grid: Grid, bond_weight: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        grid.check_len(rhs.len())?;
        if bond_weight.len() != grid.bonds() {
            return Err(Error::SizeMismatch { expected: grid.bonds(), found: bond_weight.len() });
        }
        if bond_weight.iter().chain(&rhs).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("weight or right-hand side has non-finite entries".into()));
        }
        Ok(SlProblem { grid, nodal_weight: None, bond_weight, rhs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gauge(&self) -> SlGauge {
        match self.grid.boundary() {
            Boundary::Periodic => SlGauge::MeanZeroSolution,
            Boundary::Dirichlet => SlGauge::Dirichlet,
        }
    }

    pub fn bond_weight(&self) -> &[f64] {
        &self.bond_weight
    }

    pub fn nodal_weight(&self) -> Option<&[f64]> {
        self.nodal_weight.as_deref()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        self.grid.check_len(rhs.len())?;
        Ok(SlProblem { rhs, ..self.clone() })
    }

    /// Raise every bond weight to at least `floor`.
    pub fn clamped(&self, floor: f64) -> SlProblem {
        SlProblem { bond_weight: self.bond_weight.iter().map(|w| w.max(floor)).collect(), ..self.clone() }
    }

    /// Same problem with the weight multiplied by `c`.
    pub fn scaled_weight(&self, c: f64) -> SlProblem {
        SlProblem {
            nodal_weight: self.nodal_weight.as_ref().map(|n| n.iter().map(|x| c * x).collect()),
            bond_weight: self.bond_weight.iter().map(|w| c * w).collect(),
            ..self.clone()
        }
    }

    pub fn check_weight(&self) -> Result<()> {
        match self.bond_weight.iter().enumerate().find(|(_, w)| !(**w > WEIGHT_MIN)) {
            Some((bond, &value)) => Err(Error::DegenerateWeight { bond, value, threshold: WEIGHT_MIN }),
            None => Ok(()),
        }
    }

    /// `A v = -D⁻(w D⁺ v)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let dv = self.grid.forward_difference(v)?;
        let flux: Vec<f64> = dv.iter().zip(&self.bond_weight).map(|(d, w)| -d * w).collect();
        self.grid.backward_divergence(&flux)
    }

    /// Weak form `Q(u, v) = Σ_b w_b (D⁺u)_b (D⁺v)_b Δx`.
    pub fn quadratic_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let du = self.grid.forward_difference(u)?;
        let dv = self.grid.forward_difference(v)?;
        Ok(du.iter().zip(&dv).zip(&self.bond_weight).map(|((a, b), w)| a * b * w).sum::<f64>() * self.grid.spacing())
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let m = self.grid.points();
        let h2 = self.grid.spacing().powi(2);
        let mut a = DMatrix::zeros(m, m);
        for (b, w) in self.bond_weight.iter().enumerate() {
            let c = w / h2;
            match self.grid.bond_nodes(b) {
                (Some(l), Some(r)) => {
                    a[(l, l)] += c;
                    a[(r, r)] += c;
                    a[(l, r)] -= c;
                    a[(r, l)] -= c;
                }
                (Some(i), None) | (None, Some(i)) => a[(i, i)] += c,
                (None, None) => {}
            }
        }
        a
    }

    /// Periodic right-hand side projected onto the range of `A`.
    fn compatible_rhs(&self) -> Result<Vec<f64>> {
        if self.grid.boundary() == Boundary::Dirichlet {
            return Ok(self.rhs.clone());
        }
        let integral = self.grid.integrate(&self.rhs)?;
        let tolerance = COMPATIBILITY_TOLERANCE * self.grid.norm_real(&self.rhs);
        if integral.abs() > tolerance {
            return Err(Error::IncompatibleRhs { integral, tolerance });
        }
        Ok(self.grid.remove_mean(&self.rhs))
    }

    /// `‖Av - ζ‖₂` against the (projected) right-hand side.
    pub fn residual(&self, v: &[f64]) -> Result<f64> {
        let av = self.apply(v)?;
        let rhs = match self.grid.boundary() {
            Boundary::Periodic => self.grid.remove_mean(&self.rhs),
            Boundary::Dirichlet => self.rhs.clone(),
        };
        let r: Vec<f64> = av.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        Ok(self.grid.norm_real(&r))
    }
}

/// Direct tridiagonal solve of `A v = ζ`. Periodic problems pin `v_0`,
/// drop the redundant first row and return the mean-zero representative.
pub fn solve_direct_1d(p: &SlProblem) -> Result<Vec<f64>> {
    p.check_weight()?;
    let rhs = p.compatible_rhs()?;
    let grid = &p.grid;
    let m = grid.points();
    let h2 = grid.spacing().powi(2);
    let w = &p.bond_weight;
    match grid.boundary() {
        Boundary::Dirichlet => {
            // node i sits between bonds i and i + 1
            let diag: Vec<f64> = (0..m).map(|i| (w[i] + w[i + 1]) / h2).collect();
            let sub: Vec<f64> = (0..m).map(|i| -w[i] / h2).collect();
            let sup: Vec<f64> = (0..m).map(|i| -w[i + 1] / h2).collect();
            solve_tridiagonal(&sub, &diag, &sup, &rhs)
        }
        Boundary::Periodic => {
            if rhs.iter().all(|x| *x == 0.0) {
                return Ok(vec![0.0; m]);
            }
            // unknowns v_1..v_{M-1}; bond i joins nodes i-1 and i, bond 0 joins M-1 and 0
            let n = m - 1;
            let diag: Vec<f64> = (1..m).map(|i| (w[i] + w[(i + 1) % m]) / h2).collect();
            let sub: Vec<f64> = (1..m).map(|i| -w[i] / h2).collect();
            let sup: Vec<f64> = (1..m).map(|i| -w[(i + 1) % m] / h2).collect();
            let reduced = solve_tridiagonal(&sub, &diag, &sup, &rhs[1..])?;
            let mut v = Vec::with_capacity(m);
            v.push(0.0);
            v.extend_from_slice(&reduced[..n]);
            Ok(grid.remove_mean(&v))
        }
    }
}

/// Eigenpairs of `A` excluding the periodic kernel, vectors orthonormal in
/// the discrete L² inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct SlEigenbasis {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SlEigenbasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `v = Σ_{k<K} λ_k⁻¹ ⟨e_k, ζ⟩ e_k` over the lowest `K` non-kernel modes.
pub fn solve_eigenbasis(p: &SlProblem, count: usize) -> Result<(Vec<f64>, SlEigenbasis)> {
    p.check_weight()?;
    let rhs = p.compatible_rhs()?;
    let grid = &p.grid;
    let m = grid.points();
    let kernel = usize::from(grid.boundary() == Boundary::Periodic);
    if count == 0 || count > m - kernel {
        return Err(Error::InvalidArgument(format!("{count} modes requested, {} available", m - kernel)));
    }
    let (values, vectors) = dense_symmetric_eigen(p.dense_matrix())?;
    let scale = 1.0 / grid.spacing().sqrt();
    let mut basis = SlEigenbasis { values: Vec::with_capacity(count), vectors: Vec::with_capacity(count) };
    for (lambda, e) in values.into_iter().zip(vectors).skip(kernel).take(count) {
        basis.values.push(lambda);
        basis.vectors.push(e.into_iter().map(|x| x * scale).collect());
    }
    let h = grid.spacing();
    let mut v = vec![0.0; m];
    for (lambda, e) in basis.values.iter().zip(&basis.vectors) {
        let c = e.iter().zip(&rhs).map(|(a, b)| a * b).sum::<f64>() * h / lambda;
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi += c * ei;
        }
    }
    Ok((v, basis))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub passes: bool,
    pub exponent: f64,
    /// `∫ max(n, 1e-14)^{-s}`; `None` without a nodal weight.
    pub inverse_power_integral: Option<f64>,
    /// Some nodal weight hit the floor.
    pub overflow: bool,
    pub lambda_1: f64,
    /// `‖ζ‖₂ / λ₁`.
    pub solution_bound: f64,
}

/// Coercivity and integrability diagnostics; never blocks a solve.
pub fn admissibility(p: &SlProblem, s: f64) -> Result<AdmissibilityReport> {
    if !(s > 0.5) {
        return Err(Error::InvalidArgument(format!("exponent s must exceed 1/2 in one dimension, got {s}")));
    }
    let grid = &p.grid;
    let (integral, overflow) = match &p.nodal_weight {
        Some(n) => {
            let overflow = n.iter().any(|x| !(*x > DENSITY_FLOOR));
            let total = n.iter().map(|x| x.max(DENSITY_FLOOR).powf(-s)).sum::<f64>() * grid.spacing();
            (Some(total), overflow)
        }
        None => (None, p.bond_weight.iter().any(|w| !(*w > DENSITY_FLOOR))),
    };
    let lambda_1 = lowest_eigenvalue(p)?;
    let scale = p.bond_weight.iter().fold(0.0_f64, |a, w| a.max(w.abs())) / grid.spacing().powi(2);
    let coercive = lambda_1 > 1e-10 * scale.max(f64::MIN_POSITIVE);
    let rhs_norm = grid.norm_real(&p.rhs);
    Ok(AdmissibilityReport {
        passes: coercive && !overflow,
        exponent: s,
        inverse_power_integral: integral,
        overflow,
        lambda_1,
        solution_bound: if lambda_1 > 0.0 { rhs_norm / lambda_1 } else { f64::INFINITY },
    })
}

fn lowest_eigenvalue(p: &SlProblem) -> Result<f64> {
    let m = p.grid.points();
    let deflate: Vec<Vec<f64>> = match p.grid.boundary() {
        Boundary::Periodic => vec![vec![1.0 / (m as f64).sqrt(); m]],
        Boundary::Dirichlet => Vec::new(),
    };
    let apply = |x: &[f64]| p.apply(x).expect("length fixed by the problem");
    let (values, _) = lanczos_lowest(apply, m, 1, &deflate, 1e-8)?;
    Ok(values[0].max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn periodic_cosine() {
        let mut errs = Vec::new();
        for m in [32, 64] {
            let g = Grid::new(2.0 * PI, m, Boundary::Periodic).unwrap();
            let zeta: Vec<f64> = g.coordinates().iter().map(|x| x.cos()).collect();
            let p = SlProblem::new(g, &vec![1.0; m], zeta.clone()).unwrap();
            let v = solve_direct_1d(&p).unwrap();
            assert!(p.residual(&v).unwrap() <= 1e-10 * g.norm_real(&zeta));
            assert!(g.mean(&v).abs() < 1e-14);
            errs.push(max_abs_diff(&v, &zeta));
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn dirichlet_parabola() {
        let g = Grid::new(1.0, 49, Boundary::Dirichlet).unwrap();
        let p = SlProblem::new(g, &[1.0; 49], vec![1.0; 49]).unwrap();
        let v = solve_direct_1d(&p).unwrap();
        // second differences are exact on quadratics
        let exact: Vec<f64> = g.coordinates().iter().map(|x| x * (1.0 - x) / 2.0).collect();
        assert!(max_abs_diff(&v, &exact) < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        for boundary in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::new(1.0, 16, boundary).unwrap();
            let p = SlProblem::new(g, &[0.5; 16], vec![0.0; 16]).unwrap();
            assert!(solve_direct_1d(&p).unwrap().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn errors_surface() {
        let g = Grid::new(1.0, 16, Boundary::Periodic).unwrap();
        let p = SlProblem::new(g, &[1.0; 16], vec![1.0; 16]).unwrap();
        assert!(matches!(solve_direct_1d(&p), Err(Error::IncompatibleRhs { .. })));
        let mut n = vec![1.0; 16];
        n[4] = 0.0;
        n[5] = 0.0;
        let zeta: Vec<f64> = g.coordinates().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let p = SlProblem::new(g, &n, zeta).unwrap();
        assert!(matches!(solve_direct_1d(&p), Err(Error::DegenerateWeight { bond: 5, .. })));
    }

    #[test]
    fn eigenbasis_matches_direct_and_laplacian_spectrum() {
        let g = Grid::new(1.0, 63, Boundary::Dirichlet).unwrap();
        let n: Vec<f64> = g.coordinates().iter().map(|x| 1.0 + 0.5 * (3.0 * x).sin()).collect();
        let zeta: Vec<f64> = g.coordinates().iter().map(|x| x.exp()).collect();
        let p = SlProblem::new(g, &n, zeta).unwrap();
        let (v, basis) = solve_eigenbasis(&p, 63).unwrap();
        let direct = solve_direct_1d(&p).unwrap();
        assert!(g.norm_real(&v.iter().zip(&direct).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-8);
        for i in 0..5 {
            for j in 0..5 {
                let q = p.quadratic_form(&basis.vectors[i], &basis.vectors[j]).unwrap();
                let expected = if i == j { basis.values[i] } else { 0.0 };
                assert!((q - expected).abs() < 1e-8 * basis.values[4]);
            }
        }
        let flat = SlProblem::new(g, &[1.0; 63], vec![0.0; 63]).unwrap();
        let (_, basis) = solve_eigenbasis(&flat, 8).unwrap();
        let h = g.spacing();
        for (k, lambda) in basis.values.iter().enumerate() {
            let theta = (k + 1) as f64 * PI * h;
            let symbol = 4.0 / (h * h) * (0.5 * theta).sin().powi(2);
            assert!((lambda - symbol).abs() < 1e-9 * symbol);
            let continuum = ((k + 1) as f64 * PI).powi(2);
            assert!((continuum - lambda) / continuum <= theta * theta / 12.0);
        }
    }

    #[test]
    fn periodic_eigenbasis_skips_kernel() {
        let g = Grid::new(2.0 * PI, 24, Boundary::Periodic).unwrap();
        let zeta: Vec<f64> = g.coordinates().iter().map(|x| (2.0 * x).sin() + x.cos()).collect();
        let p = SlProblem::new(g, &[2.0; 24], zeta).unwrap();
        let (v, basis) = solve_eigenbasis(&p, 23).unwrap();
        assert!(basis.values[0] > 0.1);
        assert!(max_abs_diff(&v, &solve_direct_1d(&p).unwrap()) < 1e-10);
    }

    #[test]
    fn weight_scaling() {
        let g = Grid::new(1.0, 20, Boundary::Dirichlet).unwrap();
        let n: Vec<f64> = g.coordinates().iter().map(|x| 1.0 + x).collect();
        let p = SlProblem::new(g, &n, vec![1.0; 20]).unwrap();
        let scaled = p.scaled_weight(3.0);
        let (v, b) = solve_eigenbasis(&p, 20).unwrap();
        let (vs, bs) = solve_eigenbasis(&scaled, 20).unwrap();
        for k in 0..20 {
            assert!((bs.values[k] - 3.0 * b.values[k]).abs() < 1e-9 * bs.values[k]);
            assert!((vs[k] * 3.0 - v[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn admissibility_cases() {
        let g = Grid::new(2.0 * PI, 32, Boundary::Periodic).unwrap();
        let zeta: Vec<f64> = g.coordinates().iter().map(|x| x.cos()).collect();
        let ok = admissibility(&SlProblem::new(g, &[1.0; 32], zeta.clone()).unwrap(), 1.0).unwrap();
        let lowest_fd = 4.0 / g.spacing().powi(2) * (0.5 * g.spacing()).sin().powi(2);
        assert!(ok.passes);
        assert!((ok.lambda_1 - lowest_fd).abs() < 1e-6, "{} vs {lowest_fd}", ok.lambda_1);
        let mut n = vec![1.0; 32];
        n[10] = 0.0;
        n[11] = 0.0;
        n[20] = 0.0;
        n[21] = 0.0;
        let bad = admissibility(&SlProblem::new(g, &n, zeta).unwrap(), 1.0).unwrap();
        assert!(!bad.passes);
        assert!(bad.overflow);
        assert!(bad.lambda_1 < 1e-6);
    }
}
