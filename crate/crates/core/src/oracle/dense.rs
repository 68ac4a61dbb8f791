use crate::error::{Error, Result};
use crate::real::Real;
use crate::transfer_operator::{Eigenpair, TruncatedKernel};

/// Largest kernel dimension accepted by the dense oracle.
pub const DENSE_ORACLE_MAX_DIM: usize = 200;

const MAX_SQUARINGS: usize = 64;

/// Principal eigenpair of a dense symmetric nonnegative matrix, by repeated
/// squaring `A ← A² / max(A²)` and reading the direction off `A·1`.
#[derive(Debug, Clone)]
pub struct DensePair<T> {
    pub lambda: T,
    pub vector: Vec<T>,
    pub residual: T,
    pub squarings: usize,
}

pub fn dense_principal_pair<T: Real>(matrix: &[T], dim: usize) -> Result<DensePair<T>> {
    if matrix.len() != dim * dim || dim == 0 {
        return Err(Error::InvalidInput("matrix is not square".into()));
    }
    let ones = vec![T::one(); dim];
    let mut power = matrix.to_vec();
    let mut prev_lambda = T::nan();
    let mut prev_vec = vec![T::zero(); dim];
    let tol = T::of(1e-13).max(T::epsilon() * T::of(100.0));

    for k in 0..=MAX_SQUARINGS {
        let mut v = mat_vec(&power, dim, &ones);
        let nrm = v.iter().map(|&x| x * x).fold(T::zero(), |a, b| a + b).sqrt();
        if nrm == T::zero() || !nrm.is_finite() {
            return Err(Error::NonConvergence {
                iterations: k,
                residual: f64::NAN,
            });
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        let tv = mat_vec(matrix, dim, &v);
        let lambda = v.iter().zip(&tv).map(|(&a, &b)| a * b).fold(T::zero(), |a, b| a + b);
        let shift = v
            .iter()
            .zip(&prev_vec)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        if k >= 2 && (lambda - prev_lambda).abs() <= tol * lambda.abs() && shift <= tol {
            let residual = tv
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            return Ok(DensePair {
                lambda,
                vector: v,
                residual,
                squarings: k,
            });
        }
        prev_lambda = lambda;
        prev_vec = v;
        power = square_scaled(&power, dim);
    }
    Err(Error::NonConvergence {
        iterations: MAX_SQUARINGS,
        residual: f64::NAN,
    })
}

fn mat_vec<T: Real>(a: &[T], dim: usize, x: &[T]) -> Vec<T> {
    (0..dim)
        .map(|i| {
            a[i * dim..(i + 1) * dim]
                .iter()
                .zip(x)
                .map(|(&aij, &xj)| aij * xj)
                .fold(T::zero(), |s, t| s + t)
        })
        .collect()
}

fn square_scaled<T: Real>(a: &[T], dim: usize) -> Vec<T> {
    let mut out = vec![T::zero(); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * a[k * dim + j];
            }
        }
    }
    let peak = out.iter().copied().fold(T::zero(), |m, x| m.max(x.abs()));
    if peak > T::zero() {
        out.iter_mut().for_each(|x| *x /= peak);
    }
    out
}

/// Principal pair of a small kernel by an algorithm independent of power iteration.
pub fn dense_eigen_oracle<T: Real>(kernel: &TruncatedKernel<T>) -> Result<Eigenpair<T>> {
    let dim = kernel.dim();
    if dim > DENSE_ORACLE_MAX_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: DENSE_ORACLE_MAX_DIM,
        });
    }
    let pair = dense_principal_pair(&kernel.to_dense(), dim)?;
    let mut h = pair.vector;
    if h.iter().copied().fold(T::zero(), |a, b| a + b) < T::zero() {
        h.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(Eigenpair {
        n: kernel.n(),
        s_max: kernel.s_max(),
        lambda: pair.lambda,
        log_lambda: pair.lambda.ln(),
        h,
        residual: pair.residual,
        iterations: pair.squarings,
    })
}
