//! Small linear-algebra kernels: banded solves, conjugate gradients and
//! Lanczos for matrix-free symmetric operators, dense symmetric eigensolves.

use std::ops::{Div, Mul, Neg};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Scalar;

pub trait FieldScalar: Scalar + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    fn magnitude(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl FieldScalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl FieldScalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal<T: FieldScalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: rhs.len() });
    }
    let mut c = vec![T::default(); n];
    let mut d = vec![T::default(); n];
    let mut pivot = diag[0];
    if pivot.magnitude() == 0.0 {
        return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.magnitude() == 0.0 || !pivot.magnitude().is_finite() {
            return Err(Error::LinearSolve(format!("zero pivot at row {i}")));
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c[i] * next;
    }
    Ok(x)
}

/// Cyclic tridiagonal solve (periodic wrap: `sub[0]` couples row 0 to
/// `x[n-1]`, `sup[n-1]` couples row `n-1` to `x[0]`) via Sherman–Morrison.
pub fn solve_cyclic_tridiagonal<T: FieldScalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::LinearSolve("cyclic system needs at least 3 rows".into()));
    }
    let alpha = sup[n - 1]; // row n-1, column 0
    let beta = sub[0]; // row 0, column n-1
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs)?;
    let mut u = vec![T::default(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::from_real(1.0) + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(&xi, &zi)| xi - zi * fact).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
/// Stops when `‖r‖ ≤ tol · ‖b‖`.
pub fn conjugate_gradient<F>(
    apply: F,
    rhs: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let mut x = guess.map_or_else(|| vec![0.0; rhs.len()], |g| g.to_vec());
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rr.sqrt() <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!("conjugate gradients stalled at relative residual {:e}", rr.sqrt() / bnorm)))
    }
}

/// Eigenpairs of a dense symmetric matrix, ascending.
pub fn dense_symmetric_eigen(matrix: DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = matrix.nrows();
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(matrix, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenSolver("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
    Ok((values, vectors))
}

/// Lowest `count` eigenpairs of a symmetric operator by restarted Lanczos
/// with full reorthogonalisation. Vectors in `deflate` (orthonormal) are
/// projected out of the Krylov space. Returned vectors have unit Euclidean
/// norm.
pub fn lanczos_lowest<F>(
    apply: F,
    dim: usize,
    count: usize,
    deflate: &[Vec<f64>],
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let available = dim.saturating_sub(deflate.len());
    if count == 0 || count > available {
        return Err(Error::InvalidArgument(format!("cannot extract {count} eigenpairs from dimension {available}")));
    }
    let krylov = available.min((4 * count + 60).max(120));
    // deterministic, non-symmetric start vector
    let mut start: Vec<f64> = (0..dim).map(|i| 1.0 + 0.37 * ((i as f64) * 0.7123).sin()).collect();
    let mut best: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;
    for _restart in 0..200 {
        let (values, vectors, residuals) = lanczos_pass(&apply, &start, krylov, count, deflate)?;
        let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let converged = residuals.iter().all(|r| *r <= tol * scale);
        if converged || krylov == available {
            return Ok((values, vectors));
        }
        start = vec![0.0; dim];
        for (k, v) in vectors.iter().enumerate() {
            axpy(1.0 / (k + 1) as f64, v, &mut start);
        }
        best = Some((values, vectors));
    }
    best.ok_or_else(|| Error::EigenSolver("Lanczos did not run".into()))
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    orthogonalize_both(v, basis, &[]);
}

fn orthogonalize_both(v: &mut [f64], first: &[Vec<f64>], second: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in first.iter().chain(second) {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

type LanczosPass = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>);

fn lanczos_pass<F>(apply: &F, start: &[f64], steps: usize, count: usize, deflate: &[Vec<f64>]) -> Result<LanczosPass>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut q = start.to_vec();
    orthogonalize(&mut q, deflate);
    let norm = dot(&q, &q).sqrt();
    if norm == 0.0 {
        return Err(Error::EigenSolver("start vector lies in the deflated space".into()));
    }
    q.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut last_beta = 0.0;
    for j in 0..steps {
        let mut w = apply(&q);
        let a = dot(&q, &w);
        alphas.push(a);
        basis.push(q.clone());
        orthogonalize_both(&mut w, deflate, &basis);
        let b = dot(&w, &w).sqrt();
        last_beta = b;
        if j + 1 == steps || b < 1e-14 * a.abs().max(1.0) {
            break;
        }
        betas.push(b);
        q = w.into_iter().map(|x| x / b).collect();
    }
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (ritz_values, ritz_vectors) = dense_symmetric_eigen(t)?;
    let take = count.min(m);
    let mut values = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    for k in 0..take {
        let s = &ritz_vectors[k];
        let mut v = vec![0.0; start.len()];
        for (coef, qb) in s.iter().zip(&basis) {
            axpy(*coef, qb, &mut v);
        }
        let nv = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        values.push(ritz_values[k]);
        residuals.push((last_beta * s[m - 1]).abs());
        vectors.push(v);
    }
    Ok((values, vectors, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 6;
        let sub = vec![0.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        let diag = vec![4.0; n];
        let sup = vec![-1.0, -1.0, -1.0, -1.0, -1.0, 0.0];
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            let mut ax = diag[i] * x[i];
            if i > 0 {
                ax += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                ax += sup[i] * x[i + 1];
            }
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_complex_residual() {
        let n = 9;
        let a = Complex64::new(0.0, 0.3);
        let sub = vec![-a; n];
        let sup = vec![-a; n];
        let diag: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, 0.6 + 0.1 * i as f64)).collect();
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            let ax = diag[i] * x[i] + sub[i] * x[(i + n - 1) % n] + sup[i] * x[(i + 1) % n];
            assert!((ax - rhs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn lanczos_finds_lowest_of_path_laplacian() {
        let n = 200;
        let apply = |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    2.0 * v[i] - l - r
                })
                .collect::<Vec<f64>>()
        };
        let (vals, _) = lanczos_lowest(apply, n, 3, &[], 1e-10).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-9, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn cg_solves_spd() {
        let n = 50;
        let apply = |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    3.0 * v[i] - l - r
                })
                .collect::<Vec<f64>>()
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = conjugate_gradient(apply, &b, None, 1e-14, 500).unwrap();
        let ax = apply(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
