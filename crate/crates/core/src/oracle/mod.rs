//! Independent references: exhaustive Gibbs enumeration and a dense eigen
//! solver for tiny systems, plus the Ornstein-Uhlenbeck continuum limit.

mod continuum;
mod dense;
mod enumerate;

pub use continuum::{
    finite_difference_limit, ou_reference, validate_continuum_limit, ContinuumLimit,
    ContinuumValidation, FiniteDifferenceLimit, OuReference, CONTINUUM_VALIDATION_TOL,
    KERNEL_COUPLING, REFERENCE_COUPLING,
};
pub use dense::{dense_eigen_oracle, dense_principal_pair, DensePair, DENSE_ORACLE_MAX_DIM};
pub use enumerate::{
    enumerate_gibbs, path_code, tv_distance, tv_noise, GibbsEnumeration, TinyInstance, TvNoise,
    PATH_COUNT_CAP,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::chain_sampler::{DoobChain, RngStream};
use crate::error::Result;
use crate::real::Real;
use crate::transfer_operator::{principal_eigenpair, EigenOptions};

/// Largest path space for which an empirical path histogram is built.
pub const TV_CELL_CAP: u128 = 4_000_000;

const SAMPLE_BLOCKS: u64 = 64;

/// Sampler output compared with the enumerated law.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerComparison {
    pub samples: u64,
    pub seed: u64,
    pub tv_distance: f64,
    pub noise: TvNoise,
    /// `E[TV] + 3·sd` under exact sampling.
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: u64,
    pub s_max: i64,
    pub distribution: String,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "lambda_pow_N")]
    pub lambda_pow_n: f64,
    pub tv_distance: Option<f64>,
    pub z_rel_error: f64,
    pub power_lambda: f64,
    pub dense_lambda: f64,
    pub lambda_abs_diff: f64,
    pub h_max_abs_diff: f64,
    /// `max |marginal_x(s) - h(s)²|` over sites and heights.
    pub marginal_max_error: f64,
    pub marginals: Vec<Vec<f64>>,
    pub tv: Option<SamplerComparison>,
}

/// Sample `samples` full paths (path `i` on stream `i`) and histogram them by [`path_code`].
pub fn path_histogram(chain: &DoobChain, samples: u64, seed: u64) -> Vec<u64> {
    let d = (2 * chain.s_max() + 1) as usize;
    let len = chain.n() as usize;
    let cells = d.pow(len as u32 + 1);
    let per_block = samples.div_ceil(SAMPLE_BLOCKS);
    let partial: Vec<Vec<u64>> = (0..SAMPLE_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![0u64; cells];
            let mut heights = Vec::with_capacity(len + 1);
            for i in (b * per_block)..((b + 1) * per_block).min(samples) {
                let mut rng = RngStream::new(seed, i).rng();
                chain.fill_prefix(len, &mut rng, &mut heights);
                counts[path_code(&heights, chain.s_max())] += 1;
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; cells];
    for block in partial {
        total.iter_mut().zip(block).for_each(|(t, c)| *t += c);
    }
    total
}

/// Cross-check power iteration, the dense oracle, exhaustive enumeration and
/// (when `samples > 0`) the path sampler on one tiny instance.
pub fn oracle_check<T: Real>(inst: &TinyInstance<T>, samples: u64, seed: u64) -> Result<OracleReport> {
    let kernel = inst.kernel()?;
    let pair = principal_eigenpair(&kernel, &EigenOptions::default())?;
    let dense = dense_eigen_oracle(&kernel)?;
    let gibbs = enumerate_gibbs(inst, &pair)?;
    let lambda_pow_n = (inst.n as f64 * pair.log_lambda.as_f64()).exp();

    let h_max_abs_diff = pair
        .h
        .iter()
        .zip(&dense.h)
        .map(|(a, b)| (*a - *b).abs().as_f64())
        .fold(0.0, f64::max);
    let marginal_max_error = gibbs
        .marginals
        .iter()
        .flat_map(|m| m.iter().zip(&pair.h).map(|(p, h)| (p - (*h * *h).as_f64()).abs()))
        .fold(0.0, f64::max);

    let tv = if samples > 0 && inst.path_count() <= TV_CELL_CAP {
        let chain = DoobChain::new(&kernel, &pair)?;
        let counts = path_histogram(&chain, samples, seed);
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
        let tv_distance = tv_distance(&empirical, &gibbs.measure);
        let noise = tv_noise(&gibbs.measure, samples);
        let threshold = noise.mean + 3.0 * noise.sd;
        Some(SamplerComparison {
            samples,
            seed,
            tv_distance,
            noise,
            threshold,
            passed: tv_distance <= threshold,
        })
    } else {
        None
    };

    Ok(OracleReport {
        n: inst.n,
        s_max: inst.s_max,
        distribution: inst.dist.kind().label(),
        z: gibbs.z,
        lambda_pow_n,
        tv_distance: tv.as_ref().map(|t| t.tv_distance),
        z_rel_error: (gibbs.z - lambda_pow_n).abs() / lambda_pow_n,
        power_lambda: pair.lambda.as_f64(),
        dense_lambda: dense.lambda.as_f64(),
        lambda_abs_diff: (pair.lambda - dense.lambda).abs().as_f64(),
        h_max_abs_diff,
        marginal_max_error,
        marginals: gibbs.marginals,
        tv,
    })
}
