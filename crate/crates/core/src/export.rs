//! CSV renderings of eigenpairs, paths and scaling reports.

use serde::Serialize;

use crate::chain_sampler::{InterfacePath, RescaledTrajectory};
use crate::real::Real;
use crate::scaling_analysis::ScalingReport;
use crate::transfer_operator::Eigenpair;

/// Metadata written next to an eigenpair table.
#[derive(Debug, Clone, Serialize)]
pub struct EigenHeader {
    pub n: u64,
    pub s_max: i64,
    pub dist: String,
    pub lambda: f64,
    pub log_lambda: f64,
    pub lambda_pow_sqrt_n: f64,
    pub residual: f64,
    pub iterations: usize,
    pub edge_ratio: f64,
}

impl EigenHeader {
    pub fn new<T: Real>(pair: &Eigenpair<T>, dist: String) -> Self {
        Self {
            n: pair.n,
            s_max: pair.s_max,
            dist,
            lambda: pair.lambda.as_f64(),
            log_lambda: pair.log_lambda.as_f64(),
            lambda_pow_sqrt_n: pair.lambda_pow_sqrt_n().as_f64(),
            residual: pair.residual.as_f64(),
            iterations: pair.iterations,
            edge_ratio: pair.edge_ratio().as_f64(),
        }
    }
}

fn render<R: Serialize>(rows: impl IntoIterator<Item = R>) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct HeightRow {
    s: i64,
    h: f64,
}

/// Columns `s,h`.
pub fn eigenpair_csv<T: Real>(pair: &Eigenpair<T>) -> std::io::Result<String> {
    render(pair.heights().map(|(s, h)| HeightRow { s, h: h.as_f64() }))
}

#[derive(Serialize)]
struct PathRow {
    stream: u64,
    x: usize,
    s: i64,
}

/// Columns `stream,x,s`.
pub fn paths_csv(paths: &[InterfacePath]) -> std::io::Result<String> {
    render(paths.iter().flat_map(|p| {
        p.heights.iter().enumerate().map(move |(x, &s)| PathRow {
            stream: p.stream,
            x,
            s,
        })
    }))
}

#[derive(Serialize)]
struct TrajectoryRow {
    path: usize,
    t: f64,
    value: f64,
}

/// Columns `path,t,value`.
pub fn trajectories_csv(trajectories: &[RescaledTrajectory]) -> std::io::Result<String> {
    render(trajectories.iter().enumerate().flat_map(|(i, tr)| {
        tr.t_grid.iter().zip(&tr.values).map(move |(&t, &value)| TrajectoryRow { path: i, t, value })
    }))
}

/// One row per `N`.
pub fn scaling_csv(report: &ScalingReport) -> std::io::Result<String> {
    render(report.rows())
}

#[derive(Serialize)]
struct LagRow {
    n: u64,
    t: f64,
    variance: f64,
    variance_se: f64,
    covariance: f64,
    covariance_se: f64,
    excess_kurtosis: f64,
    excess_kurtosis_se: f64,
    pairs: u64,
}

/// Columns `n,t,variance,…` for every ensemble.
pub fn path_stats_csv(report: &ScalingReport) -> std::io::Result<String> {
    render(report.path_stats.iter().flat_map(|p| {
        p.lags.iter().map(move |l| LagRow {
            n: p.n,
            t: l.t,
            variance: l.variance.value,
            variance_se: l.variance.se,
            covariance: l.covariance.value,
            covariance_se: l.covariance.se,
            excess_kurtosis: l.excess_kurtosis.value,
            excess_kurtosis_se: l.excess_kurtosis.se,
            pairs: l.pairs,
        })
    }))
}
