use serde::Serialize;

use super::kernel::{TruncatedKernel, Window};
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::real::{dot, norm2, Real};

/// Edge-to-peak ratio of the eigenvector below which an automatic window is accepted.
pub const WINDOW_EDGE_RATIO: f64 = 1e-12;

/// Principal eigenvalue and `ℓ²`-normalized positive eigenvector of a kernel.
#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair<T> {
    pub n: u64,
    pub s_max: i64,
    pub lambda: T,
    pub log_lambda: T,
    /// `h[s + S_max]`, `Σ h² = 1`.
    pub h: Vec<T>,
    /// `‖T h - λ h‖₂`.
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> Eigenpair<T> {
    pub fn h_at(&self, s: i64) -> T {
        if s.abs() > self.s_max {
            T::zero()
        } else {
            self.h[(s + self.s_max) as usize]
        }
    }

    /// `λ^√N`, evaluated in log space.
    pub fn lambda_pow_sqrt_n(&self) -> T {
        (T::of(self.n as f64).sqrt() * self.log_lambda).exp()
    }

    /// `h(S_max) / max h`.
    pub fn edge_ratio(&self) -> T {
        let peak = self.h.iter().copied().fold(T::zero(), T::max);
        let edge = self.h[0].max(*self.h.last().unwrap());
        edge / peak
    }

    pub fn heights(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let s_max = self.s_max;
        self.h
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - s_max, v))
    }

    /// `Σ s² h(s)²`, the second moment of the stationary height law.
    pub fn height_second_moment(&self) -> T {
        crate::real::compensated_sum(self.heights().map(|(s, v)| {
            let s = T::of_i64(s);
            s * s * v * v
        }))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions<T> {
    /// Convergence threshold on the residual `‖T h - λ h‖₂`.
    pub tol: T,
    /// Defaults to `max(200·√N, 10⁴)`.
    pub max_iter: Option<usize>,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-13).max(T::epsilon() * T::of(100.0)),
            max_iter: None,
        }
    }
}

impl<T: Real> EigenOptions<T> {
    pub fn max_iter_for(&self, n: u64) -> usize {
        self.max_iter
            .unwrap_or_else(|| ((200.0 * (n as f64).sqrt()).ceil() as usize).max(10_000))
    }
}

/// Even Gaussian start vector `exp(-s²/(2σ√N))`, normalized.
pub fn gaussian_start<T: Real>(kernel: &TruncatedKernel<T>) -> Vec<T> {
    let width = T::of(2.0) * kernel.dist().sigma() * T::of(kernel.n() as f64).sqrt();
    let mut v: Vec<T> = kernel
        .heights()
        .map(|s| {
            let s = T::of_i64(s);
            (-s * s / width).exp()
        })
        .collect();
    normalize(&mut v);
    v
}

fn normalize<T: Real>(v: &mut [T]) -> T {
    let nrm = norm2(v);
    for x in v.iter_mut() {
        *x /= nrm;
    }
    nrm
}

/// Rayleigh quotient `vᵀ T v / vᵀ v`.
pub fn rayleigh_quotient<T: Real>(kernel: &TruncatedKernel<T>, v: &[T]) -> T {
    let mut w = vec![T::zero(); v.len()];
    kernel.apply(v, &mut w);
    dot(v, &w) / dot(v, v)
}

/// Power iteration from the Gaussian start vector.
pub fn principal_eigenpair<T: Real>(
    kernel: &TruncatedKernel<T>,
    opts: &EigenOptions<T>,
) -> Result<Eigenpair<T>> {
    principal_eigenpair_from(kernel, gaussian_start(kernel), opts)
}

/// Power iteration from a caller supplied start vector. Convergence is
/// declared on the residual, with `λ` taken as the Rayleigh quotient.
pub fn principal_eigenpair_from<T: Real>(
    kernel: &TruncatedKernel<T>,
    start: Vec<T>,
    opts: &EigenOptions<T>,
) -> Result<Eigenpair<T>> {
    let dim = kernel.dim();
    if start.len() != dim {
        return Err(Error::InvalidInput(format!(
            "start vector has length {}, kernel dimension is {dim}",
            start.len()
        )));
    }
    let max_iter = opts.max_iter_for(kernel.n());
    let mut v = start;
    if normalize(&mut v) == T::zero() {
        return Err(Error::InvalidInput("start vector is zero".into()));
    }
    let mut w = vec![T::zero(); dim];
    let mut residual = T::infinity();

    for it in 1..=max_iter {
        kernel.apply(&v, &mut w);
        let lambda = dot(&v, &w);
        residual = crate::real::compensated_sum(
            w.iter().zip(&v).map(|(&wi, &vi)| {
                let r = wi - lambda * vi;
                r * r
            }),
        )
        .sqrt();
        if residual <= opts.tol {
            return finish(kernel, v, lambda, residual, it);
        }
        std::mem::swap(&mut v, &mut w);
        if normalize(&mut v) == T::zero() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residual.as_f64(),
    })
}

fn finish<T: Real>(
    kernel: &TruncatedKernel<T>,
    mut h: Vec<T>,
    lambda: T,
    residual: T,
    iterations: usize,
) -> Result<Eigenpair<T>> {
    if crate::real::compensated_sum(h.iter().copied()) < T::zero() {
        for x in h.iter_mut() {
            *x = -*x;
        }
    }
    if let Some(i) = h.iter().position(|&x| x <= T::zero()) {
        return Err(Error::NotPositive {
            s: i as i64 - kernel.s_max(),
        });
    }
    if lambda <= T::zero() {
        return Err(Error::InvalidInput(format!(
            "principal eigenvalue estimate {lambda} is not positive"
        )));
    }
    Ok(Eigenpair {
        n: kernel.n(),
        s_max: kernel.s_max(),
        lambda,
        log_lambda: lambda.ln(),
        h,
        residual,
        iterations,
    })
}

/// Build the kernel and solve for its principal pair. With [`Window::Auto`]
/// the window is doubled once if `h(±S_max)` is not negligible.
pub fn solve<T: Real>(
    n: u64,
    dist: &IncrementDistribution<T>,
    window: Window,
    opts: &EigenOptions<T>,
) -> Result<(TruncatedKernel<T>, Eigenpair<T>)> {
    let s_max = window.initial_s_max(n, dist);
    let kernel = TruncatedKernel::build(n, dist, s_max)?;
    let pair = principal_eigenpair(&kernel, opts)?;
    if window != Window::Auto || pair.edge_ratio() < T::of(WINDOW_EDGE_RATIO) {
        return Ok((kernel, pair));
    }
    let kernel = TruncatedKernel::build(n, dist, 2 * s_max)?;
    let pair = principal_eigenpair(&kernel, opts)?;
    let ratio = pair.edge_ratio();
    if ratio < T::of(WINDOW_EDGE_RATIO) {
        Ok((kernel, pair))
    } else {
        Err(Error::WindowTooSmall {
            s_max: 2 * s_max,
            edge_ratio: ratio.as_f64(),
        })
    }
}

/// Largest eigenvalue of the odd sector, by power iteration with the
/// principal eigenvector projected out at every step.
pub fn second_eigenvalue<T: Real>(
    kernel: &TruncatedKernel<T>,
    pair: &Eigenpair<T>,
    tol: T,
    max_iter: usize,
) -> Result<T> {
    let start = gaussian_start(kernel);
    let mut v: Vec<T> = kernel
        .heights()
        .zip(start)
        .map(|(s, g)| T::of_i64(s) * g)
        .collect();
    let project = |v: &mut Vec<T>| {
        let c = dot(v, &pair.h);
        for (x, &h) in v.iter_mut().zip(&pair.h) {
            *x -= c * h;
        }
    };
    project(&mut v);
    if normalize(&mut v) == T::zero() {
        return Err(Error::InvalidInput("window too small for a second eigenvalue".into()));
    }
    let mut w = vec![T::zero(); v.len()];
    let mut residual = T::infinity();
    for _ in 0..max_iter {
        kernel.apply(&v, &mut w);
        project(&mut w);
        let mu = dot(&v, &w);
        residual = crate::real::compensated_sum(w.iter().zip(&v).map(|(&a, &b)| {
            let r = a - mu * b;
            r * r
        }))
        .sqrt();
        if residual <= tol {
            return Ok(mu);
        }
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residual.as_f64(),
    })
}
