use num_complex::Complex64;

use super::projected_rhs;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::HamiltonianSpec;
use crate::observables::{
    bond_product, density, interaction_q_form, kinetic_q_form, pair_density, weighted_divergence,
};
use crate::propagator::multiply_potential;
use crate::sturm_liouville::{solve_direct_1d, SlProblem};
use crate::wavefunction::WaveFunction;

/// Highest supported order; round-off in the coefficients grows
/// factorially beyond it.
pub const MAX_TAYLOR_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorInversion {
    /// `v^{(k)} = ∂ₜᵏ v(0)`, mean-zero, for `k = 0..=K`.
    pub coefficients: Vec<Vec<f64>>,
    /// `‖v^{(k)}‖₂ / k!`.
    pub scaled_norms: Vec<f64>,
    /// Ratio-test estimate `a_{K-1} / a_K` of the convergence radius in
    /// time; `None` when the last coefficients vanish.
    pub radius_estimate: Option<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Leibniz sum `Σ_i C(k,i) Re f(ψ^{(i)}, ψ^{(k-i)})`.
fn leibniz<F>(psi: &[Vec<Complex64>], k: usize, form: F) -> Vec<f64>
where
    F: Fn(&[Complex64], &[Complex64]) -> Vec<Complex64>,
{
    let mut out: Vec<f64> = Vec::new();
    for i in 0..=k {
        let c = binomial(k, i);
        let term = form(&psi[i], &psi[k - i]);
        if out.is_empty() {
            out = vec![0.0; term.len()];
        }
        for (o, t) in out.iter_mut().zip(term) {
            *o += c * t.re;
        }
    }
    out
}

/// Bond weight derivative `w^{(j)}`; Dirichlet wall bonds take the value of
/// `n^{(j)}` at their interior node.
fn bond_weight_derivative(grid: &Grid, rank: usize, psi: &[Vec<Complex64>], j: usize) -> Vec<f64> {
    let mut w = leibniz(psi, j, |a, b| bond_product(grid, rank, a, b));
    if !grid.is_periodic() {
        let n = leibniz(psi, j, |a, b| pair_density(grid, rank, a, b));
        let last = w.len() - 1;
        w[0] = n[0];
        w[last] = n[n.len() - 1];
    }
    w
}

/// Time-derivative coefficients `v^{(0)}..v^{(K)}` at `t = 0` from density
/// coefficients `n^{(0)}..n^{(K+2)}`. The state coefficients follow
/// `iψ^{(j+1)} = H₀ψ^{(j)} + Σ_l C(j,l) v^{(l)} ψ^{(j-l)}` with `H₀ = T + W`,
/// and each order solves
/// `-∇·(n₀∇v^{(k)}) = q^{(k)} + Σ_{l<k} C(k,l) ∇·(n^{(k-l)}∇v^{(l)}) - n^{(k+2)}`
/// with the half-grid weights taken from the bond products of the state
/// coefficients, which makes the recursion exact on the lattice.
pub fn invert_taylor_rg(
    n_coeffs: &[Vec<f64>],
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    order: usize,
) -> Result<TaylorInversion> {
    if order > MAX_TAYLOR_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Taylor order {order} exceeds the supported maximum {MAX_TAYLOR_ORDER}"
        )));
    }
    if n_coeffs.len() < order + 3 {
        return Err(Error::InvalidArgument(format!(
            "order {order} needs {} density coefficients, got {}",
            order + 3,
            n_coeffs.len()
        )));
    }
    spec.check_state(psi0)?;
    let grid = *spec.grid();
    for c in n_coeffs {
        grid.check_len(c.len())?;
    }
    let mismatch: f64 =
        density(psi0).iter().zip(&n_coeffs[0]).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.spacing();
    if mismatch > 1e-6 {
        return Err(Error::IncompatibleInitialState(format!("‖n⁽⁰⁾ - density(ψ₀)‖₁ = {mismatch:.3e} exceeds 1e-6")));
    }

    let rank = psi0.rank();
    let free = vec![0.0; grid.points()];
    let mut psi: Vec<Vec<Complex64>> = vec![psi0.amplitudes().to_vec()];
    let mut weights: Vec<Vec<f64>> = vec![bond_weight_derivative(&grid, rank, &psi, 0)];
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        // ψ^{(k)} needs v^{(0..k-1)}
        if k > 0 {
            let j = k - 1;
            let mut next = spec.apply_with(&psi[j], &free);
            for l in 0..=j {
                let c = binomial(j, l);
                for (o, t) in next.iter_mut().zip(multiply_potential(spec, &psi[j - l], &v[l])) {
                    *o += t * c;
                }
            }
            psi.push(next.into_iter().map(|z| z * Complex64::new(0.0, -1.0)).collect());
            weights.push(bond_weight_derivative(&grid, rank, &psi, k));
        }
        let mut rhs = leibniz(&psi, k, |a, b| kinetic_q_form(&grid, rank, a, b));
        if rank == 2 {
            for (r, t) in rhs.iter_mut().zip(leibniz(&psi, k, |a, b| interaction_q_form(spec, a, b))) {
                *r += t;
            }
        }
        for (l, vl) in v.iter().enumerate() {
            let c = binomial(k, l);
            for (r, t) in rhs.iter_mut().zip(weighted_divergence(&grid, &weights[k - l], vl)?) {
                *r += c * t;
            }
        }
        for (r, n) in rhs.iter_mut().zip(&n_coeffs[k + 2]) {
            *r -= n;
        }
        let p = SlProblem::with_bond_weight(grid, weights[0].clone(), projected_rhs(&grid, rhs))?;
        v.push(grid.remove_mean(&solve_direct_1d(&p)?));
    }

    let scaled_norms: Vec<f64> = v.iter().enumerate().map(|(k, c)| grid.norm_real(c) / factorial(k)).collect();
    let radius_estimate = match scaled_norms.as_slice() {
        [.., a, b] if *b > f64::MIN_POSITIVE && *a > f64::MIN_POSITIVE => Some(a / b),
        _ => None,
    };
    Ok(TaylorInversion { coefficients: v, scaled_norms, radius_estimate })
}
