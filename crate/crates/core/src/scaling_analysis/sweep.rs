use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::Result;
use crate::increments::IncrementDistribution;
use crate::oracle::ContinuumLimit;
use crate::real::Real;
use crate::transfer_operator::{
    dirichlet_form, dirichlet_split, second_eigenvalue, solve, variational_lower_bound,
    EigenOptions, Eigenpair, TruncatedKernel, VariationalBound, Window,
};

/// `{10³, 4·10³, 1.6·10⁴, 6.4·10⁴, 2.56·10⁵}`: `√N` doubles at every step.
pub const DEFAULT_SWEEP: [u64; 5] = [1_000, 4_000, 16_000, 64_000, 256_000];

/// Cells with `h < ENVELOPE_FLOOR · max h` are left out of the envelope fit.
pub const ENVELOPE_FLOOR: f64 = 1e-8;

/// `h̃_N(r) ≤ C·exp(-c r²)` with `c` fitted by least squares on `log h̃_N`
/// and `C` the smallest constant making the bound hold on the fitted cells.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Envelope {
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: f64,
    pub cells: usize,
}

/// Distances from `h̃_N` to a Gaussian ground state `g`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianDistance {
    /// `(Σ_s δ (N^{1/8} h(s) - g(sδ))²)^{1/2}`, `δ = N^{-1/4}`.
    pub l2: f64,
    /// Sup distance between the CDF of `h̃²_N(r) dr` and `N(0, v)`.
    pub kolmogorov: f64,
    pub target_variance: f64,
}

/// Per-N eigen diagnostics with full provenance.
#[derive(Debug, Clone, Serialize)]
pub struct EigenRecord {
    pub n: u64,
    pub s_max: i64,
    pub dist: String,
    pub residual: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub log_lambda: f64,
    /// `exp(√N · log λ)`.
    pub lambda_pow_sqrt_n: f64,
    /// `(1 - λ)·√N`.
    pub gap_sqrt_n: f64,
    /// `λ₂ / λ₁` from the odd sector.
    pub gap_ratio: Option<f64>,
    pub reference: GaussianDistance,
    pub kernel: GaussianDistance,
    /// `Σ s² h(s)² / √N`.
    pub var_s_over_sqrt_n: f64,
    /// Variance of the step measure `h̃²_N(r) dr`.
    pub step_measure_variance: f64,
    pub dirichlet: f64,
    pub dirichlet_sqrt_n: f64,
    /// `|dirichlet - split|`.
    pub split_error: f64,
    pub envelope: Envelope,
    pub variational: VariationalBound,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub window: Window,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub second_eigenvalue: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            window: Window::Auto,
            tol: EigenOptions::<f64>::default().tol,
            max_iter: None,
            second_eigenvalue: true,
        }
    }
}

/// Solve one `N` of a sweep, returning the kernel and pair for later sampling.
pub fn sweep_point(
    n: u64,
    dist: &IncrementDistribution<f64>,
    opts: &SweepOptions,
) -> Result<(TruncatedKernel<f64>, Eigenpair<f64>, EigenRecord)> {
    let eopts = EigenOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
    };
    let (kernel, pair) = solve(n, dist, opts.window, &eopts)?;
    let gap_ratio = if opts.second_eigenvalue {
        let l2 = second_eigenvalue(&kernel, &pair, opts.tol, eopts.max_iter_for(n))?;
        Some(l2 / pair.lambda)
    } else {
        None
    };
    let record = eigen_record(&pair, dist, gap_ratio);
    Ok((kernel, pair, record))
}

pub fn eigen_record(
    pair: &Eigenpair<f64>,
    dist: &IncrementDistribution<f64>,
    gap_ratio: Option<f64>,
) -> EigenRecord {
    let n = pair.n;
    let sqrt_n = (n as f64).sqrt();
    let sigma = dist.sigma();
    let var_s_over_sqrt_n = pair.height_second_moment() / sqrt_n;
    let dirichlet = dirichlet_form(pair, dist);
    let split = dirichlet_split(pair, dist);
    EigenRecord {
        n,
        s_max: pair.s_max,
        dist: dist.kind().label(),
        residual: pair.residual,
        iterations: pair.iterations,
        lambda: pair.lambda,
        log_lambda: pair.log_lambda,
        lambda_pow_sqrt_n: pair.lambda_pow_sqrt_n(),
        gap_sqrt_n: (1.0 - pair.lambda) * sqrt_n,
        gap_ratio,
        reference: gaussian_distance(pair, &ContinuumLimit::reference(sigma)),
        kernel: gaussian_distance(pair, &ContinuumLimit::kernel(sigma)),
        var_s_over_sqrt_n,
        step_measure_variance: var_s_over_sqrt_n + 1.0 / (12.0 * sqrt_n),
        dirichlet,
        dirichlet_sqrt_n: dirichlet * sqrt_n,
        split_error: (dirichlet - split).abs(),
        envelope: fit_envelope(pair),
        variational: variational_lower_bound(n, dist),
    }
}

/// The step function `h̃_N` is constant on `[sδ, (s+1)δ)`.
pub fn gaussian_distance<T: Real>(pair: &Eigenpair<T>, limit: &ContinuumLimit) -> GaussianDistance {
    let n = pair.n as f64;
    let delta = n.powf(-0.25);
    let eighth = n.powf(0.125);
    let sq = crate::real::compensated_sum(pair.heights().map(|(s, h)| {
        let d = eighth * h.as_f64() - limit.ground_state(s as f64 * delta);
        d * d * delta
    }));
    let v = limit.stationary_variance();
    let phi = |r: f64| 0.5 * (1.0 + erf(r / (2.0 * v).sqrt()));
    let mut cdf = 0.0;
    let mut kolmogorov = phi(-(pair.s_max as f64) * delta);
    for (s, h) in pair.heights() {
        cdf += (h * h).as_f64();
        kolmogorov = kolmogorov.max((cdf - phi((s + 1) as f64 * delta)).abs());
    }
    GaussianDistance {
        l2: sq.sqrt(),
        kolmogorov,
        target_variance: v,
    }
}

pub fn fit_envelope<T: Real>(pair: &Eigenpair<T>) -> Envelope {
    let n = pair.n as f64;
    let delta = n.powf(-0.25);
    let eighth = n.powf(0.125);
    let peak = pair.h.iter().fold(0.0f64, |m, h| m.max(h.as_f64()));
    let cells: Vec<(f64, f64)> = pair
        .heights()
        .filter(|(_, h)| h.as_f64() >= ENVELOPE_FLOOR * peak)
        .map(|(s, h)| {
            let r = s as f64 * delta;
            (r * r, (eighth * h.as_f64()).ln())
        })
        .collect();
    let m = cells.len() as f64;
    let (sx, sy) = cells.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = cells.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let c = if sxx > 0.0 { -sxy / sxx } else { 0.0 };
    let log_c = cells.iter().map(|&(x, y)| y + c * x).fold(f64::NEG_INFINITY, f64::max);
    Envelope {
        big_c: log_c.exp(),
        c,
        cells: cells.len(),
    }
}

/// Richardson step in `N^{-1/2}` between two sweep points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extrapolation {
    pub n_coarse: u64,
    pub n_fine: u64,
    pub value: f64,
}

/// `(r·f_fine - f_coarse)/(r - 1)` with `r = √(N_fine/N_coarse)`; exact when
/// `f(N) = f_∞ + a·N^{-1/2}`.
pub fn richardson(n_coarse: u64, f_coarse: f64, n_fine: u64, f_fine: f64) -> f64 {
    let r = (n_fine as f64 / n_coarse as f64).sqrt();
    (r * f_fine - f_coarse) / (r - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaStudy {
    pub sigma: f64,
    pub records: Vec<EigenRecord>,
    pub extrapolations: Vec<Extrapolation>,
    /// Richardson value from the two largest `N`.
    pub extrapolated: f64,
    pub reference_limit: f64,
    pub kernel_limit: f64,
    pub lambda_increasing: bool,
    pub gap_extrapolated: f64,
}

pub fn lambda_study(sigma: f64, records: Vec<EigenRecord>) -> LambdaStudy {
    let extrapolations: Vec<Extrapolation> = records
        .windows(2)
        .map(|w| Extrapolation {
            n_coarse: w[0].n,
            n_fine: w[1].n,
            value: richardson(w[0].n, w[0].lambda_pow_sqrt_n, w[1].n, w[1].lambda_pow_sqrt_n),
        })
        .collect();
    let extrapolated = extrapolations
        .last()
        .map(|e| e.value)
        .or_else(|| records.last().map(|r| r.lambda_pow_sqrt_n))
        .unwrap_or(f64::NAN);
    let gap_extrapolated = match records.as_slice() {
        [.., a, b] => richardson(a.n, a.gap_sqrt_n, b.n, b.gap_sqrt_n),
        [a] => a.gap_sqrt_n,
        [] => f64::NAN,
    };
    LambdaStudy {
        sigma,
        lambda_increasing: records.windows(2).all(|w| w[1].lambda > w[0].lambda),
        extrapolations,
        extrapolated,
        reference_limit: ContinuumLimit::reference(sigma).lambda_limit(),
        kernel_limit: ContinuumLimit::kernel(sigma).lambda_limit(),
        gap_extrapolated,
        records,
    }
}

/// Solve every `N` (in parallel) and assemble the eigenvalue study.
pub fn lambda_scaling_study(
    n_list: &[u64],
    dist: &IncrementDistribution<f64>,
    opts: &SweepOptions,
) -> Result<LambdaStudy> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list.is_empty() {
        return Err(crate::error::Error::InvalidInput(
            "N list must be non-empty and strictly increasing".into(),
        ));
    }
    let records = n_list
        .par_iter()
        .map(|&n| sweep_point(n, dist, opts).map(|(_, _, r)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(lambda_study(dist.sigma(), records))
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenfunctionStudy {
    pub n: Vec<u64>,
    pub l2_reference: Vec<f64>,
    pub l2_kernel: Vec<f64>,
    pub kolmogorov_reference: Vec<f64>,
    pub kolmogorov_kernel: Vec<f64>,
    pub step_measure_variance: Vec<f64>,
    pub l2_decreasing: bool,
}

pub fn eigenfunction_limit_study(records: &[EigenRecord]) -> EigenfunctionStudy {
    let l2_reference: Vec<f64> = records.iter().map(|r| r.reference.l2).collect();
    EigenfunctionStudy {
        n: records.iter().map(|r| r.n).collect(),
        l2_decreasing: l2_reference.windows(2).all(|w| w[1] < w[0]),
        l2_reference,
        l2_kernel: records.iter().map(|r| r.kernel.l2).collect(),
        kolmogorov_reference: records.iter().map(|r| r.reference.kolmogorov).collect(),
        kolmogorov_kernel: records.iter().map(|r| r.kernel.kolmogorov).collect(),
        step_measure_variance: records.iter().map(|r| r.step_measure_variance).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_exact_for_linear_model() {
        let f = |n: u64| 0.4 + 1.7 / (n as f64).sqrt();
        assert!((richardson(1000, f(1000), 4000, f(4000)) - 0.4).abs() < 1e-14);
        assert!((richardson(16, f(16), 81, f(81)) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn exact_gaussian_has_zero_distance() {
        let limit = ContinuumLimit::kernel(1.2);
        let n = 1_000_000u64;
        let delta = (n as f64).powf(-0.25);
        let s_max = 400;
        let mut h: Vec<f64> = (-s_max..=s_max)
            .map(|s| limit.ground_state(s as f64 * delta) * (n as f64).powf(-0.125))
            .collect();
        let nrm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        h.iter_mut().for_each(|x| *x /= nrm);
        let pair = Eigenpair {
            n,
            s_max,
            lambda: 0.99,
            log_lambda: 0.99f64.ln(),
            h,
            residual: 0.0,
            iterations: 0,
        };
        let d = gaussian_distance(&pair, &limit);
        assert!(d.l2 < 1e-6, "{d:?}");
        // the step CDF lags the smooth one by at most one cell of mass
        assert!(d.kolmogorov < 0.02, "{d:?}");
        let e = fit_envelope(&pair);
        assert!((e.c - limit.ground_state_decay()).abs() < 1e-6);
        assert!((e.big_c - limit.ground_state(0.0)).abs() < 1e-6);
    }

    #[test]
    fn small_sweep_records() {
        let dist = IncrementDistribution::<f64>::double_geometric(1.0).unwrap();
        let study = lambda_scaling_study(&[100, 400], &dist, &SweepOptions::default()).unwrap();
        assert!(study.lambda_increasing);
        for r in &study.records {
            assert!(r.lambda_pow_sqrt_n < 1.0);
            assert!(r.split_error < 1e-10);
            assert!(r.variational.quotient <= r.lambda);
            assert!(r.gap_ratio.unwrap() < 1.0);
        }
        assert!(lambda_scaling_study(&[400, 100], &dist, &SweepOptions::default()).is_err());
    }
}
