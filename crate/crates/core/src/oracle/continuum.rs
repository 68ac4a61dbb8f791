use serde::Serialize;

/// Potential coupling of the reference diffusion: `exp(-½∫ X²)`.
pub const REFERENCE_COUPLING: f64 = 0.5;

/// Potential coupling produced by the lattice kernel
/// `exp(-(s² + s̄²)/2N) π(s - s̄)`. Over `√N` steps at height `s = N^{1/4} r`
/// the Gaussian factors accumulate `Σ s²/N → ∫ r² dt`.
pub const KERNEL_COUPLING: f64 = 1.0;

/// Ground-state diffusion of `-(σ²/2) ∂² + γ r²` and the stationary
/// Ornstein-Uhlenbeck process it generates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuumLimit {
    pub sigma: f64,
    pub coupling: f64,
}

impl ContinuumLimit {
    pub fn new(sigma: f64, coupling: f64) -> Self {
        assert!(sigma > 0.0 && coupling > 0.0);
        Self { sigma, coupling }
    }

    pub fn reference(sigma: f64) -> Self {
        Self::new(sigma, REFERENCE_COUPLING)
    }

    pub fn kernel(sigma: f64) -> Self {
        Self::new(sigma, KERNEL_COUPLING)
    }

    /// `a` in `g(r) ∝ exp(-a r²)`.
    pub fn ground_state_decay(&self) -> f64 {
        (self.coupling / 2.0).sqrt() / self.sigma
    }

    pub fn ground_energy(&self) -> f64 {
        self.sigma * (self.coupling / 2.0).sqrt()
    }

    /// Limit of `λ_N^{√N}`.
    pub fn lambda_limit(&self) -> f64 {
        (-self.ground_energy()).exp()
    }

    /// Limit of `(1 - λ_N)·√N`.
    pub fn gap_constant(&self) -> f64 {
        self.ground_energy()
    }

    pub fn stationary_variance(&self) -> f64 {
        0.25 / self.ground_state_decay()
    }

    /// Drift coefficient `θ` in `dX = -θ X dt + σ dB`.
    pub fn relaxation_rate(&self) -> f64 {
        2.0 * self.ground_state_decay() * self.sigma * self.sigma
    }

    pub fn covariance(&self, t: f64) -> f64 {
        self.stationary_variance() * (-self.relaxation_rate() * t.abs()).exp()
    }

    /// L²-normalized ground state.
    pub fn ground_state(&self, r: f64) -> f64 {
        let a = self.ground_state_decay();
        (2.0 * a / std::f64::consts::PI).powf(0.25) * (-a * r * r).exp()
    }
}

/// Stationary variance and covariance at lag `t` of the reference process
/// `dX = -σ X dt + σ dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuReference {
    pub variance: f64,
    pub covariance: f64,
}

pub fn ou_reference(sigma: f64, t: f64) -> OuReference {
    let limit = ContinuumLimit::reference(sigma);
    OuReference {
        variance: limit.stationary_variance(),
        covariance: limit.covariance(t),
    }
}

/// Ground state and stationary covariance of `-(σ²/2) ∂² + γ r²` computed
/// by second-order finite differences with Crank-Nicolson time stepping.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteDifferenceLimit {
    pub ground_energy: f64,
    pub lambda_limit: f64,
    pub variance: f64,
    pub covariance: Vec<(f64, f64)>,
}

const FD_INTERVALS: usize = 4000;
const FD_HALF_WIDTH: f64 = 12.0;
const FD_TIME_STEP: f64 = 1e-3;

pub fn finite_difference_limit(sigma: f64, coupling: f64, lags: &[f64]) -> FiniteDifferenceLimit {
    let scale = (sigma * sigma / coupling).powf(0.25);
    let half = FD_HALF_WIDTH * scale;
    let delta = 2.0 * half / FD_INTERVALS as f64;
    let r: Vec<f64> = (1..FD_INTERVALS).map(|j| -half + j as f64 * delta).collect();
    let m = r.len();
    let off = -0.5 * sigma * sigma / (delta * delta);
    let diag: Vec<f64> = r.iter().map(|&x| -2.0 * off + coupling * x * x).collect();

    let apply = |u: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|j| {
                let mut y = diag[j] * u[j];
                if j > 0 {
                    y += off * u[j - 1];
                }
                if j + 1 < m {
                    y += off * u[j + 1];
                }
                y
            })
            .collect()
    };

    let mut u = vec![1.0; m];
    let mut energy = f64::INFINITY;
    for _ in 0..200 {
        let mut next = thomas(&vec![off; m], &diag, &vec![off; m], &u);
        let nrm = (next.iter().map(|x| x * x).sum::<f64>() * delta).sqrt();
        next.iter_mut().for_each(|x| *x /= nrm);
        let hu = apply(&next);
        let e = next.iter().zip(&hu).map(|(a, b)| a * b).sum::<f64>() * delta;
        u = next;
        let done = (e - energy).abs() < 1e-15 * e.abs();
        energy = e;
        if done {
            break;
        }
    }
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let variance = u.iter().zip(&r).map(|(a, x)| a * a * x * x).sum::<f64>() * delta;

    let ru: Vec<f64> = u.iter().zip(&r).map(|(a, x)| a * x).collect();
    let mut order: Vec<usize> = (0..lags.len()).collect();
    order.sort_by(|&a, &b| lags[a].abs().total_cmp(&lags[b].abs()));
    let mut covariance = vec![(0.0, 0.0); lags.len()];
    let mut f = ru.clone();
    let mut now = 0.0;
    for &k in &order {
        let target = lags[k].abs();
        while now < target - 1e-15 {
            let dt = FD_TIME_STEP.min(target - now);
            f = crank_nicolson(&f, &diag, off, energy, dt);
            now += dt;
        }
        let c = ru.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() * delta;
        covariance[k] = (lags[k], c);
    }

    FiniteDifferenceLimit {
        ground_energy: energy,
        lambda_limit: (-energy).exp(),
        variance,
        covariance,
    }
}

fn crank_nicolson(f: &[f64], diag: &[f64], off: f64, shift: f64, dt: f64) -> Vec<f64> {
    let m = f.len();
    let h = 0.5 * dt;
    let rhs: Vec<f64> = (0..m)
        .map(|j| {
            let mut y = (1.0 - h * (diag[j] - shift)) * f[j];
            if j > 0 {
                y -= h * off * f[j - 1];
            }
            if j + 1 < m {
                y -= h * off * f[j + 1];
            }
            y
        })
        .collect();
    let d: Vec<f64> = diag.iter().map(|&x| 1.0 + h * (x - shift)).collect();
    let o = vec![h * off; m];
    thomas(&o, &d, &o, &rhs)
}

/// Tridiagonal solve; `lower[0]` and `upper[m-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for j in 1..m {
        let denom = diag[j] - lower[j] * c[j - 1];
        c[j] = upper[j] / denom;
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for j in (0..m - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    x
}

/// Agreement of a [`ContinuumLimit`] with its finite-difference solution.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuumValidation {
    pub lambda_rel_error: f64,
    pub variance_rel_error: f64,
    /// `max_t |C_fd(t) - C(t)| / Var`.
    pub covariance_error: f64,
    pub passed: bool,
}

pub const CONTINUUM_VALIDATION_TOL: f64 = 1e-3;

pub fn validate_continuum_limit(limit: &ContinuumLimit, lags: &[f64]) -> ContinuumValidation {
    let fd = finite_difference_limit(limit.sigma, limit.coupling, lags);
    let var = limit.stationary_variance();
    let lambda_rel_error = (fd.lambda_limit - limit.lambda_limit()).abs() / limit.lambda_limit();
    let variance_rel_error = (fd.variance - var).abs() / var;
    let covariance_error = fd
        .covariance
        .iter()
        .map(|&(t, c)| (c - limit.covariance(t)).abs() / var)
        .fold(0.0, f64::max);
    ContinuumValidation {
        lambda_rel_error,
        variance_rel_error,
        covariance_error,
        passed: lambda_rel_error.max(variance_rel_error).max(covariance_error)
            < CONTINUUM_VALIDATION_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA_DG1: f64 = 1.356_962_486_0;

    #[test]
    fn reference_values() {
        let r = ou_reference(SIGMA_DG1, 0.0);
        assert!((r.variance - SIGMA_DG1 / 2.0).abs() < 1e-15);
        assert_eq!(r.variance, r.covariance);
        let r = ou_reference(2.0, 0.5);
        assert!((r.covariance - (-1.0f64).exp()).abs() < 1e-15);
        assert!((ContinuumLimit::reference(SIGMA_DG1).lambda_limit() - 0.5074).abs() < 1e-4);
        assert!((ContinuumLimit::kernel(SIGMA_DG1).lambda_limit() - 0.38308).abs() < 1e-5);
    }

    #[test]
    fn ground_state_is_normalized() {
        let g = ContinuumLimit::reference(1.3);
        let dx = 1e-3;
        let mass: f64 = (-20_000..=20_000)
            .map(|k| g.ground_state(k as f64 * dx).powi(2) * dx)
            .sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let expected = (std::f64::consts::PI * 1.3).powf(-0.25);
        assert!((g.ground_state(0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let lags = [0.0, 0.1, 0.25, 0.5, 1.0];
        for &c in &[REFERENCE_COUPLING, KERNEL_COUPLING] {
            for &sigma in &[0.8, SIGMA_DG1] {
                let v = validate_continuum_limit(&ContinuumLimit::new(sigma, c), &lags);
                assert!(v.passed, "sigma={sigma} coupling={c}: {v:?}");
            }
        }
    }

    #[test]
    fn couplings_are_distinguishable() {
        let fd = finite_difference_limit(SIGMA_DG1, KERNEL_COUPLING, &[0.5]);
        let wrong = ContinuumLimit::reference(SIGMA_DG1);
        assert!((fd.variance - wrong.stationary_variance()).abs() / wrong.stationary_variance() > 0.2);
    }
}
