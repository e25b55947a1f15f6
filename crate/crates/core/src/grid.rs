//! Uniform one-dimensional grids with second-order finite differences.
//!
//! Nodes are indexed `0..M`. Half-grid quantities ("bonds") use the
//! convention that bond `b` sits at `x_b - Δx/2` and joins the nodes `b - 1`
//! and `b`. A periodic grid has `M` bonds (bond 0 joins `M - 1` and `0`); a
//! Dirichlet grid has `M + 1` bonds, the outermost two touching the zero
//! boundary values.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest admissible number of grid points.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Element type of a grid field.
pub trait Scalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    points: usize,
    spacing: f64,
    boundary: Boundary,
    origin: f64,
}

impl Grid {
    /// Uniform grid on `[0, L)` (periodic) or `(0, L)` (Dirichlet, interior
    /// nodes only).
    pub fn new(length: f64, points: usize, boundary: Boundary) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points, got {points}")));
        }
        let spacing = match boundary {
            Boundary::Periodic => length / points as f64,
            Boundary::Dirichlet => length / (points + 1) as f64,
        };
        Ok(Grid { length, points, spacing, boundary, origin: 0.0 })
    }

    /// Grid covering `[a, b)` (periodic) or `(a, b)` (Dirichlet).
    pub fn on_interval(a: f64, b: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Ok(Grid::new(b - a, points, boundary)?.with_origin(a))
    }

    /// Shift the domain so that it starts at `origin`.
    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Coordinate of node `m`.
    pub fn x(&self, m: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.origin + m as f64 * self.spacing,
            Boundary::Dirichlet => self.origin + (m + 1) as f64 * self.spacing,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|m| self.x(m)).collect()
    }

    /// Coordinate of bond `b` (half-grid point).
    pub fn bond_x(&self, b: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.origin + (b as f64 - 0.5) * self.spacing,
            Boundary::Dirichlet => self.origin + (b as f64 + 0.5) * self.spacing,
        }
    }

    pub fn bonds(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.points,
            Boundary::Dirichlet => self.points + 1,
        }
    }

    /// Nodes joined by bond `b`; `None` marks a boundary (zero) value.
    pub fn bond_nodes(&self, b: usize) -> (Option<usize>, Option<usize>) {
        let m = self.points;
        match self.boundary {
            Boundary::Periodic => (Some((b + m - 1) % m), Some(b % m)),
            Boundary::Dirichlet => {
                let left = if b == 0 { None } else { Some(b - 1) };
                let right = if b == m { None } else { Some(b) };
                (left, right)
            }
        }
    }

    /// Bonds to the left and right of node `m`.
    pub fn node_bonds(&self, m: usize) -> (usize, usize) {
        match self.boundary {
            Boundary::Periodic => (m, (m + 1) % self.points),
            Boundary::Dirichlet => (m, m + 1),
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.points {
            return Err(Error::SizeMismatch { expected: self.points, found: len });
        }
        Ok(())
    }

    /// Neighbour value with wrap-around or zero padding.
    #[inline]
    fn neighbour<T: Scalar>(&self, f: &[T], m: usize, stride: usize, offset: isize) -> T {
        let n = self.points as isize;
        let idx = m as isize + offset;
        if idx >= 0 && idx < n {
            return f[idx as usize * stride];
        }
        match self.boundary {
            Boundary::Periodic => f[(idx.rem_euclid(n)) as usize * stride],
            Boundary::Dirichlet => T::default(),
        }
    }

    /// Bare second-difference Laplacian `(f[m+1] - 2 f[m] + f[m-1]) / Δx²`.
    pub fn laplacian<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        Ok(self.laplacian_unchecked(f))
    }

    pub(crate) fn laplacian_unchecked<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let inv = 1.0 / (self.spacing * self.spacing);
        (0..self.points)
            .map(|m| {
                let l = self.neighbour(f, m, 1, -1);
                let r = self.neighbour(f, m, 1, 1);
                (l + r - f[m] * 2.0) * inv
            })
            .collect()
    }

    /// Central first difference `(f[m+1] - f[m-1]) / (2Δx)` with the
    /// boundary convention of the grid.
    pub fn central_difference<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let inv = 0.5 / self.spacing;
        Ok((0..self.points).map(|m| (self.neighbour(f, m, 1, 1) - self.neighbour(f, m, 1, -1)) * inv).collect())
    }

    /// Gradient of a field that is *not* zero outside the domain (potentials):
    /// central differences inside, one-sided second order at Dirichlet ends.
    pub fn field_gradient(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let m = self.points;
        let h = self.spacing;
        Ok((0..m)
            .map(|i| match self.boundary {
                Boundary::Periodic => (f[(i + 1) % m] - f[(i + m - 1) % m]) / (2.0 * h),
                Boundary::Dirichlet => {
                    if i == 0 {
                        (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                    } else if i == m - 1 {
                        (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h)
                    } else {
                        (f[i + 1] - f[i - 1]) / (2.0 * h)
                    }
                }
            })
            .collect())
    }

    /// Forward difference onto bonds, `(f[right] - f[left]) / Δx`.
    pub fn forward_difference<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let inv = 1.0 / self.spacing;
        Ok((0..self.bonds())
            .map(|b| {
                let (l, r) = self.bond_nodes(b);
                let fl = l.map_or(T::default(), |i| f[i]);
                let fr = r.map_or(T::default(), |i| f[i]);
                (fr - fl) * inv
            })
            .collect())
    }

    /// Backward difference of a bond field onto nodes,
    /// `(g[right bond] - g[left bond]) / Δx`.
    pub fn backward_divergence<T: Scalar>(&self, g: &[T]) -> Result<Vec<T>> {
        if g.len() != self.bonds() {
            return Err(Error::SizeMismatch { expected: self.bonds(), found: g.len() });
        }
        let inv = 1.0 / self.spacing;
        Ok((0..self.points)
            .map(|m| {
                let (bl, br) = self.node_bonds(m);
                (g[br] - g[bl]) * inv
            })
            .collect())
    }

    /// Rectangle rule `Σ f_m Δx`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(f.iter().sum::<f64>() * self.spacing)
    }

    /// Discrete L² inner product `Σ conj(a) b Δx`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * self.spacing
    }

    pub fn norm_real(&self, f: &[f64]) -> f64 {
        (f.iter().map(|x| x * x).sum::<f64>() * self.spacing).sqrt()
    }

    /// Arithmetic mean over nodes.
    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    /// Field with its node mean removed.
    pub fn remove_mean(&self, f: &[f64]) -> Vec<f64> {
        let c = self.mean(f);
        f.iter().map(|x| x - c).collect()
    }

    /// Laplacian along one axis of a rank-2 field stored row-major
    /// (`axis = 0` acts on the first coordinate).
    pub fn laplacian_axis<T: Scalar>(&self, f: &[T], axis: usize) -> Vec<T> {
        let m = self.points;
        let inv = 1.0 / (self.spacing * self.spacing);
        let mut out = vec![T::default(); m * m];
        for i in 0..m {
            for j in 0..m {
                let (pos, stride, base) = if axis == 0 { (i, m, j) } else { (j, 1, i * m) };
                let l = self.neighbour(&f[base..], pos, stride, -1);
                let r = self.neighbour(&f[base..], pos, stride, 1);
                out[i * m + j] = (l + r - f[i * m + j] * 2.0) * inv;
            }
        }
        out
    }

    /// Central difference along one axis of a rank-2 field.
    pub fn central_difference_axis<T: Scalar>(&self, f: &[T], axis: usize) -> Vec<T> {
        let m = self.points;
        let inv = 0.5 / self.spacing;
        let mut out = vec![T::default(); m * m];
        for i in 0..m {
            for j in 0..m {
                let (pos, stride, base) = if axis == 0 { (i, m, j) } else { (j, 1, i * m) };
                let l = self.neighbour(&f[base..], pos, stride, -1);
                let r = self.neighbour(&f[base..], pos, stride, 1);
                out[i * m + j] = (r - l) * inv;
            }
        }
        out
    }
}

/// `Δx` used for rank-`rank` quadrature (`Δx^rank`).
pub fn cell_volume(grid: &Grid, rank: usize) -> f64 {
    grid.spacing().powi(rank as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_spacing_and_origin() {
        let g = Grid::new(2.0 * PI, 8, Boundary::Periodic).unwrap();
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.x(0), 0.0);
    }

    #[test]
    fn dirichlet_interior_nodes() {
        let g = Grid::new(1.0, 9, Boundary::Dirichlet).unwrap();
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!((g.x(0) - 0.1).abs() < 1e-15);
        assert!((g.x(8) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.0, 16, Boundary::Periodic).is_err());
        assert!(Grid::new(-1.0, 16, Boundary::Periodic).is_err());
        assert!(Grid::new(1.0, 7, Boundary::Dirichlet).is_err());
    }

    #[test]
    fn quadrature_of_one() {
        let g = Grid::new(2.0 * PI, 64, Boundary::Periodic).unwrap();
        assert!((g.integrate(&vec![1.0; 64]).unwrap() - 2.0 * PI).abs() < 1e-13);
        let d = Grid::new(1.0, 99, Boundary::Dirichlet).unwrap();
        assert!((d.integrate(&vec![1.0; 99]).unwrap() - 99.0 * d.spacing()).abs() < 1e-13);
    }

    #[test]
    fn cosine_integrates_to_zero() {
        let g = Grid::new(2.0 * PI, 32, Boundary::Periodic).unwrap();
        let f: Vec<f64> = g.coordinates().iter().map(|x| x.cos()).collect();
        assert!(g.integrate(&f).unwrap().abs() < 1e-14);
    }

    #[test]
    fn quadratic_on_dirichlet() {
        let g = Grid::new(1.0, 99, Boundary::Dirichlet).unwrap();
        let f: Vec<f64> = g.coordinates().iter().map(|x| x * (1.0 - x)).collect();
        // trapezoid error for x(1-x) with zero end values is exactly Δx²/6
        let err = g.integrate(&f).unwrap() - 1.0 / 6.0;
        assert!((err + g.spacing().powi(2) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = Grid::new(3.0, 16, Boundary::Periodic).unwrap();
        let lap = g.laplacian(&[2.5; 16]).unwrap();
        assert!(lap.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_plane_wave_symbol() {
        let g = Grid::new(2.0 * PI, 32, Boundary::Periodic).unwrap();
        let k = 3.0;
        let f: Vec<Complex64> = g.coordinates().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
        let lap = g.laplacian(&f).unwrap();
        let h = g.spacing();
        let symbol = -(2.0 / (h * h)) * (1.0 - (k * h).cos());
        for (a, b) in lap.iter().zip(&f) {
            assert!((a - b * symbol).norm() < 1e-11);
        }
    }

    #[test]
    fn laplacian_sine_second_order() {
        let err = |m: usize| {
            let g = Grid::new(1.0, m, Boundary::Dirichlet).unwrap();
            let f: Vec<f64> = g.coordinates().iter().map(|x| (PI * x).sin()).collect();
            let lap = g.laplacian(&f).unwrap();
            lap.iter().zip(&f).map(|(l, s)| (l + PI * PI * s).abs()).fold(0.0, f64::max)
        };
        let e1 = err(31);
        let e2 = err(63);
        assert!(e1 < 0.01);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn forward_backward_compose_to_laplacian() {
        for boundary in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::new(2.0, 12, boundary).unwrap();
            let f: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
            let lap = g.laplacian(&f).unwrap();
            let composed = g.backward_divergence(&g.forward_difference(&f).unwrap()).unwrap();
            for (a, b) in lap.iter().zip(&composed) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn axis_laplacian_matches_rank_one() {
        let g = Grid::new(1.0, 8, Boundary::Dirichlet).unwrap();
        let m = 8;
        let f: Vec<f64> = (0..m * m).map(|k| ((k * 13) % 11) as f64).collect();
        let l0 = g.laplacian_axis(&f, 0);
        let l1 = g.laplacian_axis(&f, 1);
        for i in 0..m {
            let row: Vec<f64> = (0..m).map(|j| f[i * m + j]).collect();
            let lr = g.laplacian(&row).unwrap();
            let col: Vec<f64> = (0..m).map(|j| f[j * m + i]).collect();
            let lc = g.laplacian(&col).unwrap();
            for j in 0..m {
                assert!((l1[i * m + j] - lr[j]).abs() < 1e-12);
                assert!((l0[j * m + i] - lc[j]).abs() < 1e-12);
            }
        }
    }
}
