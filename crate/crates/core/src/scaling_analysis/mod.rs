//! N-sweeps of the principal eigenpair and stationary path ensembles,
//! compared with the Gaussian ground state and the Ornstein-Uhlenbeck limit.

mod paths;
mod sweep;

pub use paths::{
    default_lags, free_walk_fourth_moment, path_statistics, tightness_check, tightness_grid,
    EnsembleSpec, Estimate, FourthMoment, LagStatistics, PathStatistics, BATCHES,
    ORIGINS_PER_UNIT,
};
pub use sweep::{
    eigen_record, eigenfunction_limit_study, fit_envelope, gaussian_distance, lambda_scaling_study,
    lambda_study, richardson, sweep_point, EigenRecord, EigenfunctionStudy, Envelope,
    Extrapolation, GaussianDistance, LambdaStudy, SweepOptions, DEFAULT_SWEEP, ENVELOPE_FLOOR,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::chain_sampler::DoobChain;
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::oracle::{ou_reference, ContinuumLimit};

/// Thresholds used when no constant is available from theory. Fixed after
/// the first full sweep and reported with every study.
#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub lambda_rel: f64,
    pub l2_max: f64,
    pub variance_rel: f64,
    pub z_max: f64,
    pub tightness_factor: f64,
    pub dirichlet_factor: f64,
    pub split_abs: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            lambda_rel: 0.01,
            l2_max: 0.05,
            variance_rel: 0.02,
            z_max: 3.0,
            tightness_factor: 2.0,
            dirichlet_factor: 2.0,
            split_abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_list: Vec<u64>,
    pub sweep: SweepOptions,
    /// Paths per `N`; zero skips the ensembles.
    pub paths: usize,
    pub seed: u64,
    pub lags: Vec<f64>,
    pub tightness_t: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_list: DEFAULT_SWEEP.to_vec(),
            sweep: SweepOptions::default(),
            paths: 20_000,
            seed: 0,
            lags: default_lags(),
            tightness_t: tightness_grid(),
        }
    }
}

/// Reference curve at one lag, in both potential conventions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceReference {
    pub t: f64,
    pub reference: f64,
    pub kernel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub dist: String,
    pub sigma: f64,
    pub seed: u64,
    pub paths: usize,
    pub thresholds: Thresholds,
    pub reference_limit: ContinuumLimit,
    pub kernel_limit: ContinuumLimit,
    pub lambda: LambdaStudy,
    pub eigenfunction: EigenfunctionStudy,
    pub path_stats: Vec<PathStatistics>,
    pub covariance_reference: Vec<CovarianceReference>,
}

/// One flat row per `N`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub s_max: i64,
    pub dist: String,
    pub seed: u64,
    pub residual: f64,
    pub lambda: f64,
    pub lambda_pow_sqrt_n: f64,
    pub gap_sqrt_n: f64,
    pub gap_ratio: Option<f64>,
    pub eig_l2_dist: f64,
    pub eig_l2_dist_kernel: f64,
    pub kolmogorov: f64,
    pub step_measure_variance: f64,
    pub dirichlet_sqrt_n: f64,
    pub split_error: f64,
    pub envelope_big_c: f64,
    pub envelope_c: f64,
    pub variational_quotient: f64,
    pub variational_envelope: f64,
    pub var_s0_over_sqrt_n: Option<f64>,
    pub var_s0_se: Option<f64>,
    pub tightness_sup: Option<f64>,
}

impl ScalingReport {
    pub fn rows(&self) -> Vec<ScalingRow> {
        self.lambda
            .records
            .iter()
            .map(|r| {
                let ps = self.path_stats.iter().find(|p| p.n == r.n);
                ScalingRow {
                    n: r.n,
                    s_max: r.s_max,
                    dist: r.dist.clone(),
                    seed: self.seed,
                    residual: r.residual,
                    lambda: r.lambda,
                    lambda_pow_sqrt_n: r.lambda_pow_sqrt_n,
                    gap_sqrt_n: r.gap_sqrt_n,
                    gap_ratio: r.gap_ratio,
                    eig_l2_dist: r.reference.l2,
                    eig_l2_dist_kernel: r.kernel.l2,
                    kolmogorov: r.reference.kolmogorov,
                    step_measure_variance: r.step_measure_variance,
                    dirichlet_sqrt_n: r.dirichlet_sqrt_n,
                    split_error: r.split_error,
                    envelope_big_c: r.envelope.big_c,
                    envelope_c: r.envelope.c,
                    variational_quotient: r.variational.quotient,
                    variational_envelope: r.variational.envelope,
                    var_s0_over_sqrt_n: ps.map(|p| p.var_s0_over_sqrt_n.value),
                    var_s0_se: ps.map(|p| p.var_s0_over_sqrt_n.se),
                    tightness_sup: ps.map(|p| p.tightness_sup),
                }
            })
            .collect()
    }
}

/// Eigen sweep over `config.n_list` followed by one path ensemble per `N`.
pub fn scaling_study(dist: &IncrementDistribution<f64>, config: &StudyConfig) -> Result<ScalingReport> {
    if config.n_list.is_empty() || config.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "N list must be non-empty and strictly increasing".into(),
        ));
    }
    let solved = config
        .n_list
        .par_iter()
        .map(|&n| sweep_point(n, dist, &config.sweep))
        .collect::<Result<Vec<_>>>()?;

    let mut path_stats = Vec::new();
    if config.paths > 0 {
        let spec = EnsembleSpec {
            paths: config.paths,
            seed: config.seed,
            lags: config.lags.clone(),
            tightness_t: config.tightness_t.clone(),
        };
        for (kernel, pair, _) in &solved {
            let chain = DoobChain::new(kernel, pair)?;
            path_stats.push(path_statistics(&chain, dist, &spec)?);
        }
    }

    let records: Vec<EigenRecord> = solved.into_iter().map(|(_, _, r)| r).collect();
    let sigma = dist.sigma();
    let kernel_limit = ContinuumLimit::kernel(sigma);
    Ok(ScalingReport {
        dist: dist.kind().label(),
        sigma,
        seed: config.seed,
        paths: config.paths,
        thresholds: Thresholds::default(),
        reference_limit: ContinuumLimit::reference(sigma),
        kernel_limit,
        eigenfunction: eigenfunction_limit_study(&records),
        lambda: lambda_study(sigma, records),
        path_stats,
        covariance_reference: config
            .lags
            .iter()
            .map(|&t| CovarianceReference {
                t,
                reference: ou_reference(sigma, t).covariance,
                kernel: kernel_limit.covariance(t),
            })
            .collect(),
    })
}
