//! Thomas–Fermi kinetic, Hartree and Dirac exchange energies of radial
//! densities in three dimensions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Allowed gap between the declared and the integrated particle number.
pub const PARTICLE_TOLERANCE: f64 = 1e-6;

/// `C_F = (3/10)(3π²)^{2/3}`.
pub fn thomas_fermi_constant() -> f64 {
    0.3 * (3.0 * PI * PI).powf(2.0 / 3.0)
}

/// `C_x = (3/4)(3/π)^{1/3}`.
pub fn dirac_constant() -> f64 {
    0.75 * (3.0 / PI).cbrt()
}

/// Thomas–Fermi kinetic energy density `C_F n^{5/3}`.
pub fn kinetic_energy_density(n: f64) -> f64 {
    thomas_fermi_constant() * n.powf(5.0 / 3.0)
}

/// Spherically symmetric density on a radial grid `0 < r_0 < … < r_last = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    radii: Vec<f64>,
    values: Vec<f64>,
    particles: f64,
}

impl RadialDensity {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, particles: f64) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::SizeMismatch { expected: radii.len(), found: values.len() });
        }
        if radii.len() < 2 {
            return Err(Error::InvalidArgument("radial grid needs at least two points".into()));
        }
        if !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeDensity { index, value });
        }
        let d = RadialDensity { radii, values, particles };
        let counted = d.particle_count();
        if (counted - particles).abs() > PARTICLE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "density integrates to {counted} particles, declared {particles}"
            )));
        }
        Ok(d)
    }

    /// Uniform ball of radius `R` holding `N` particles on `points` equally
    /// spaced radii `R i / points`, `i = 1..=points`.
    pub fn uniform_ball(radius: f64, particles: f64, points: usize) -> Result<Self> {
        RadialDensity::from_fn(radius, particles, points, |_| 1.0)
    }

    /// Density `f(r)` sampled on equally spaced radii, normalised to `N`.
    pub fn from_fn(radius: f64, particles: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(radius > 0.0) || points < 2 {
            return Err(Error::InvalidArgument("radial grid needs a positive extent and at least two points".into()));
        }
        let radii: Vec<f64> = (1..=points).map(|i| radius * i as f64 / points as f64).collect();
        let raw: Vec<f64> = radii.iter().map(|r| f(*r)).collect();
        let total = shell_integral(&radii, &raw);
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("profile has no weight".into()));
        }
        // normalised by the quadrature itself so the declared N is met exactly
        let values = raw.iter().map(|v| v * particles / total).collect();
        RadialDensity::new(radii, values, particles)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn particles(&self) -> f64 {
        self.particles
    }

    /// `∫ 4πr² n dr`.
    pub fn particle_count(&self) -> f64 {
        shell_integral(&self.radii, &self.values)
    }

    /// `c · n` with the particle number scaled alike.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        RadialDensity::new(self.radii.clone(), self.values.iter().map(|v| c * v).collect(), c * self.particles)
    }

    /// Electrostatic potential of the density by the shell theorem,
    /// `φ(r) = (1/r)∫₀^r 4πs²n ds + ∫_r^R 4πs n ds`.
    pub fn hartree_potential(&self) -> Vec<f64> {
        let inner = cumulative(
            &self.radii,
            &self.values.iter().zip(&self.radii).map(|(n, r)| 4.0 * PI * r * r * n).collect::<Vec<_>>(),
        );
        let outer_integrand: Vec<f64> = self.values.iter().zip(&self.radii).map(|(n, r)| 4.0 * PI * r * n).collect();
        let outer_cum = cumulative(&self.radii, &outer_integrand);
        let total_outer = *outer_cum.last().expect("non-empty grid");
        self.radii.iter().zip(inner.iter().zip(&outer_cum)).map(|(r, (q, o))| q / r + (total_outer - o)).collect()
    }
}

/// Trapezoidal `∫₀^R f dr` on the radial grid, with the integrand taken to
/// vanish at `r = 0`; `cumulative[i]` runs up to `r_i`.
fn cumulative(radii: &[f64], integrand: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = 0.5 * radii[0] * integrand[0];
    out.push(acc);
    for i in 1..radii.len() {
        acc += 0.5 * (radii[i] - radii[i - 1]) * (integrand[i] + integrand[i - 1]);
        out.push(acc);
    }
    out
}

fn radial_integral(radii: &[f64], integrand: &[f64]) -> f64 {
    *cumulative(radii, integrand).last().expect("non-empty grid")
}

/// `∫ 4πr² f dr`.
fn shell_integral(radii: &[f64], f: &[f64]) -> f64 {
    let integrand: Vec<f64> = f.iter().zip(radii).map(|(v, r)| 4.0 * PI * r * r * v).collect();
    radial_integral(radii, &integrand)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaComponents {
    /// `T_TF = C_F ∫ n^{5/3}`.
    pub kinetic: f64,
    /// `V_H = ½ ∫ n φ`.
    pub hartree: f64,
    /// `V_x = C_x ∫ n^{4/3}`, reported as a positive magnitude.
    pub exchange: f64,
    pub external: f64,
    /// `T_TF + V_H - V_x + V_ext`.
    pub total: f64,
}

/// Energy components of a radial density in an external potential sampled
/// on the same radii (zero when absent).
pub fn lda_components(n: &RadialDensity, v_ext: Option<&[f64]>) -> Result<LdaComponents> {
    if let Some(v) = v_ext {
        if v.len() != n.radii.len() {
            return Err(Error::SizeMismatch { expected: n.radii.len(), found: v.len() });
        }
    }
    let kinetic = thomas_fermi_constant()
        * shell_integral(&n.radii, &n.values.iter().map(|x| x.powf(5.0 / 3.0)).collect::<Vec<_>>());
    let exchange =
        dirac_constant() * shell_integral(&n.radii, &n.values.iter().map(|x| x.powf(4.0 / 3.0)).collect::<Vec<_>>());
    let phi = n.hartree_potential();
    let hartree = 0.5 * shell_integral(&n.radii, &n.values.iter().zip(&phi).map(|(a, b)| a * b).collect::<Vec<_>>());
    let external = match v_ext {
        Some(v) => shell_integral(&n.radii, &n.values.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>()),
        None => 0.0,
    };
    Ok(LdaComponents { kinetic, hartree, exchange, external, total: kinetic + hartree - exchange + external })
}

/// Local kinetic and exchange integrals `∫ τ dx`, `C_x ∫ n^{4/3} dx` of a
/// one-dimensional density. The prefactors are the three-dimensional ones.
pub fn local_components_1d(grid: &Grid, n: &[f64]) -> Result<(f64, f64)> {
    grid.check_len(n.len())?;
    if let Some((index, &value)) = n.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeDensity { index, value });
    }
    let kinetic = grid.integrate(&n.iter().map(|x| kinetic_energy_density(*x)).collect::<Vec<_>>())?;
    let exchange = dirac_constant() * grid.integrate(&n.iter().map(|x| x.powf(4.0 / 3.0)).collect::<Vec<_>>())?;
    Ok((kinetic, exchange))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub scale: f64,
    /// Measured `T[c n] / T[n]`, `V_x[c n] / V_x[n]`, `V_H[c n] / V_H[n]`.
    pub kinetic_ratio: f64,
    pub exchange_ratio: f64,
    pub hartree_ratio: f64,
    /// Largest relative deviation from `c^{5/3}`, `c^{4/3}`, `c²`.
    pub max_deviation: f64,
    pub passes: bool,
}

/// Relative tolerance of the homogeneity check.
pub const SCALING_TOLERANCE: f64 = 1e-10;

pub fn lda_scaling_check(n: &RadialDensity, c: f64) -> Result<ScalingReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
    }
    let base = lda_components(n, None)?;
    let scaled = lda_components(&n.scaled(c)?, None)?;
    let ratio = |a: f64, b: f64, expected: f64| if b == 0.0 && a == 0.0 { expected } else { a / b };
    let kinetic_ratio = ratio(scaled.kinetic, base.kinetic, c.powf(5.0 / 3.0));
    let exchange_ratio = ratio(scaled.exchange, base.exchange, c.powf(4.0 / 3.0));
    let hartree_ratio = ratio(scaled.hartree, base.hartree, c * c);
    let max_deviation =
        [(kinetic_ratio, c.powf(5.0 / 3.0)), (exchange_ratio, c.powf(4.0 / 3.0)), (hartree_ratio, c * c)]
            .iter()
            .map(|(m, e)| ((m - e) / e).abs())
            .fold(0.0, f64::max);
    Ok(ScalingReport {
        scale: c,
        kinetic_ratio,
        exchange_ratio,
        hartree_ratio,
        max_deviation,
        passes: max_deviation <= SCALING_TOLERANCE,
    })
}
