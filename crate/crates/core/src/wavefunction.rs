//! One- and two-particle wavefunctions on a [`Grid`].
//!
//! Rank-2 amplitudes are stored row-major with the first particle
//! coordinate as the row index, `ψ(x_i, x_j) = amplitudes[i * M + j]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cell_volume, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    rank: usize,
    amplitudes: Vec<Complex64>,
    symmetry: Symmetry,
}

impl WaveFunction {
    pub fn new(grid: Grid, rank: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if rank != 1 && rank != 2 {
            return Err(Error::InvalidArgument(format!("rank must be 1 or 2, got {rank}")));
        }
        let expected = grid.points().pow(rank as u32);
        if amplitudes.len() != expected {
            return Err(Error::SizeMismatch { expected, found: amplitudes.len() });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(WaveFunction { grid, rank, amplitudes, symmetry: Symmetry::None })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        WaveFunction::new(grid, 1, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Sample a one-particle function at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        WaveFunction::new(grid, 1, grid.coordinates().into_iter().map(f).collect())
    }

    /// Declare an exchange symmetry; fails if the amplitudes do not carry it.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self> {
        if symmetry != Symmetry::None {
            if self.rank != 2 {
                return Err(Error::InvalidArgument("symmetry tags apply to rank-2 states".into()));
            }
            let residual = self.symmetry_residual(symmetry);
            let scale = self.amplitudes.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            if residual > 1e-12 * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "amplitudes violate the requested symmetry (residual {residual:e})"
                )));
            }
        }
        self.symmetry = symmetry;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Same grid, rank and symmetry tag with new amplitudes.
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> WaveFunction {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        WaveFunction { grid: self.grid, rank: self.rank, amplitudes, symmetry: self.symmetry }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        cell_volume(&self.grid, self.rank)
    }

    /// Discrete inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            * self.cell_volume())
    }

    pub fn check_compatible(&self, other: &WaveFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.rank != other.rank {
            return Err(Error::InvalidArgument("rank mismatch".into()));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    /// Rescale to unit discrete L² norm; the phase is untouched.
    pub fn normalize(&self) -> Result<WaveFunction> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::ZeroField);
        }
        Ok(self.with_amplitudes(self.amplitudes.iter().map(|z| z / n).collect()))
    }

    /// Largest entrywise deviation from the requested exchange symmetry.
    pub fn symmetry_residual(&self, symmetry: Symmetry) -> f64 {
        if self.rank != 2 || symmetry == Symmetry::None {
            return 0.0;
        }
        let m = self.grid.points();
        let sign = if symmetry == Symmetry::Symmetric { 1.0 } else { -1.0 };
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let d = self.amplitudes[i * m + j] - self.amplitudes[j * m + i] * sign;
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Discrete Sobolev norm `(Σ_{|α|≤k} ‖D^α ψ‖²)^{1/2}` with central first
    /// differences and the second-difference Laplacian for pure second
    /// derivatives.
    pub fn sobolev_norm(&self, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!("Sobolev order {order} not supported (max 2)")));
        }
        let w = self.cell_volume();
        let sq = |f: &[Complex64]| f.iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
        let psi = &self.amplitudes;
        let mut total = sq(psi);
        if order >= 1 {
            if self.rank == 1 {
                total += sq(&self.grid.central_difference(psi)?);
            } else {
                total += sq(&self.grid.central_difference_axis(psi, 0));
                total += sq(&self.grid.central_difference_axis(psi, 1));
            }
        }
        if order >= 2 {
            if self.rank == 1 {
                total += sq(&self.grid.laplacian(psi)?);
            } else {
                total += sq(&self.grid.laplacian_axis(psi, 0));
                total += sq(&self.grid.laplacian_axis(psi, 1));
                let d1 = self.grid.central_difference_axis(psi, 0);
                total += sq(&self.grid.central_difference_axis(&d1, 1));
            }
        }
        Ok(total.sqrt())
    }

    /// Normalised (anti)symmetrised product `φ_a(x₁)φ_b(x₂) ± φ_a(x₂)φ_b(x₁)`;
    /// the plain product for [`Symmetry::None`].
    pub fn build_two_particle(a: &WaveFunction, b: &WaveFunction, symmetry: Symmetry) -> Result<WaveFunction> {
        if a.rank != 1 || b.rank != 1 {
            return Err(Error::InvalidArgument("orbitals must be rank 1".into()));
        }
        if a.grid != b.grid {
            return Err(Error::GridMismatch);
        }
        let m = a.grid.points();
        let pa = &a.amplitudes;
        let pb = &b.amplitudes;
        let mut amps = vec![Complex64::default(); m * m];
        for i in 0..m {
            for j in 0..m {
                let direct = pa[i] * pb[j];
                let exchanged = pa[j] * pb[i];
                amps[i * m + j] = match symmetry {
                    Symmetry::None => direct,
                    Symmetry::Symmetric => direct + exchanged,
                    Symmetry::Antisymmetric => direct - exchanged,
                };
            }
        }
        let psi = WaveFunction { grid: a.grid, rank: 2, amplitudes: amps, symmetry };
        let scale = a.norm() * b.norm();
        if symmetry == Symmetry::Antisymmetric && psi.norm() <= 1e-10 * scale {
            return Err(Error::PauliExclusion);
        }
        psi.normalize()
    }
}
