use rayon::prelude::*;
use serde::Serialize;

use crate::chain_sampler::{block_length, rescaled_value, DoobChain, RngStream};
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;

/// Number of batches for batch-based standard errors.
pub const BATCHES: usize = 100;

/// Origins per unit time for the pooled lag statistics.
pub const ORIGINS_PER_UNIT: usize = 8;

/// `{0, 0.1, …, 1.0}`.
pub fn default_lags() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// `{2⁻⁶, …, 2⁻¹}`.
pub fn tightness_grid() -> Vec<f64> {
    (1..=6).rev().map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub paths: usize,
    pub seed: u64,
    /// Lags for covariance, variance and kurtosis.
    pub lags: Vec<f64>,
    /// Increment lengths for the fourth-moment statistic, in `(0, 1]`.
    pub tightness_t: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            seed,
            lags: default_lags(),
            tightness_t: tightness_grid(),
        }
    }

    fn horizon(&self) -> f64 {
        let longest = self
            .lags
            .iter()
            .chain(&self.tightness_t)
            .fold(0.0f64, |m, &t| m.max(t.abs()));
        1.0 + longest
    }
}

/// Estimate with its batch jackknife standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value - target| / se`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LagStatistics {
    pub t: f64,
    /// `Var(S̃(t))` from the value at time `t` of every path.
    pub variance: Estimate,
    /// Excess kurtosis of `S̃(t)`.
    pub excess_kurtosis: Estimate,
    /// `Cov(S̃(u), S̃(u + t))` pooled over origins `u ∈ [0, 1)`.
    pub covariance: Estimate,
    pub pairs: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourthMoment {
    pub t: f64,
    /// `E[(S̃(u + t) - S̃(u))⁴]` pooled over origins.
    pub m4: Estimate,
    pub ratio: f64,
    /// Same moment for the free walk with the chain's increments.
    pub free_walk: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStatistics {
    pub n: u64,
    pub s_max: i64,
    pub seed: u64,
    pub paths: usize,
    pub batches: usize,
    pub block_length: usize,
    pub sites_per_path: usize,
    /// `Var(s_0)/√N` from the first site only.
    pub var_s0_over_sqrt_n: Estimate,
    /// `Var(s)/√N` pooled over all origins.
    pub var_pooled_over_sqrt_n: Estimate,
    pub lags: Vec<LagStatistics>,
    pub fourth_moments: Vec<FourthMoment>,
    /// `sup_t M₄(t)/t^{3/2}`.
    pub tightness_sup: f64,
}

/// Raw power sums of one batch, combined by addition.
#[derive(Debug, Clone)]
struct Sums {
    paths: f64,
    s0: [f64; 2],
    pooled: [f64; 3],
    at_t: Vec<[f64; 4]>,
    cov: Vec<[f64; 4]>,
    m4: Vec<[f64; 2]>,
}

impl Sums {
    fn zero(lags: usize, tight: usize) -> Self {
        Self {
            paths: 0.0,
            s0: [0.0; 2],
            pooled: [0.0; 3],
            at_t: vec![[0.0; 4]; lags],
            cov: vec![[0.0; 4]; lags],
            m4: vec![[0.0; 2]; tight],
        }
    }

    fn add(&mut self, other: &Sums, sign: f64) {
        self.paths += sign * other.paths;
        add_into(&mut self.s0, &other.s0, sign);
        add_into(&mut self.pooled, &other.pooled, sign);
        for (a, b) in self.at_t.iter_mut().zip(&other.at_t) {
            add_into(a, b, sign);
        }
        for (a, b) in self.cov.iter_mut().zip(&other.cov) {
            add_into(a, b, sign);
        }
        for (a, b) in self.m4.iter_mut().zip(&other.m4) {
            add_into(a, b, sign);
        }
    }
}

fn add_into<const K: usize>(a: &mut [f64; K], b: &[f64; K], sign: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += sign * y;
    }
}

fn variance(sum: f64, sq: f64, count: f64) -> f64 {
    let m = sum / count;
    sq / count - m * m
}

fn excess_kurtosis(p: &[f64; 4], count: f64) -> f64 {
    let [e1, e2, e3, e4] = p.map(|x| x / count);
    let m2 = e2 - e1 * e1;
    let m4 = e4 - 4.0 * e3 * e1 + 6.0 * e2 * e1 * e1 - 3.0 * e1.powi(4);
    m4 / (m2 * m2) - 3.0
}

fn covariance(c: &[f64; 4]) -> f64 {
    let [x, y, xy, count] = *c;
    xy / count - (x / count) * (y / count)
}

/// Full-sample value with a delete-one-batch jackknife error.
fn jackknife<F: Fn(&Sums) -> f64>(total: &Sums, batches: &[Sums], f: F) -> Estimate {
    let value = f(total);
    let g = batches.len() as f64;
    let leave_out: Vec<f64> = batches
        .iter()
        .map(|b| {
            let mut rest = total.clone();
            rest.add(b, -1.0);
            f(&rest)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / g;
    let var = leave_out.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * (g - 1.0) / g;
    Estimate {
        value,
        se: var.sqrt(),
    }
}

/// Sample `spec.paths` stationary prefixes (path `i` on stream `i`) long
/// enough to cover one unit of origins plus the longest lag, and reduce them
/// batch by batch to the statistics above.
pub fn path_statistics(
    chain: &DoobChain,
    dist: &IncrementDistribution<f64>,
    spec: &EnsembleSpec,
) -> Result<PathStatistics> {
    if spec.paths < BATCHES * 2 {
        return Err(Error::InvalidInput(format!(
            "need at least {} paths for {BATCHES} batches",
            BATCHES * 2
        )));
    }
    if spec.tightness_t.iter().any(|&t| t <= 0.0 || t > 1.0) {
        return Err(Error::InvalidInput("tightness grid must lie in (0, 1]".into()));
    }
    let n = chain.n();
    let block = block_length(n);
    let scale = (n as f64).powf(-0.25);
    let sites = (spec.horizon() * block as f64).ceil() as usize + 1;
    let origin_step = (block / ORIGINS_PER_UNIT).max(1);
    let origins: Vec<usize> = (0..block).step_by(origin_step).collect();
    let (nl, nt) = (spec.lags.len(), spec.tightness_t.len());

    let per_batch = spec.paths.div_ceil(BATCHES);
    let batches: Vec<Sums> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut sums = Sums::zero(nl, nt);
            let mut heights = Vec::with_capacity(sites);
            for i in (b * per_batch)..((b + 1) * per_batch).min(spec.paths) {
                let mut rng = RngStream::new(spec.seed, i as u64).rng();
                chain.fill_prefix(sites - 1, &mut rng, &mut heights);
                accumulate(&mut sums, &heights, scale, block, &origins, spec);
            }
            sums
        })
        .collect();
    let mut total = Sums::zero(nl, nt);
    for b in &batches {
        total.add(b, 1.0);
    }

    let lags = spec
        .lags
        .iter()
        .enumerate()
        .map(|(k, &t)| LagStatistics {
            t,
            variance: jackknife(&total, &batches, |s| variance(s.at_t[k][0], s.at_t[k][1], s.paths)),
            excess_kurtosis: jackknife(&total, &batches, |s| excess_kurtosis(&s.at_t[k], s.paths)),
            covariance: jackknife(&total, &batches, |s| covariance(&s.cov[k])),
            pairs: total.cov[k][3] as u64,
        })
        .collect();
    let fourth_moments: Vec<FourthMoment> = spec
        .tightness_t
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let m4 = jackknife(&total, &batches, |s| s.m4[k][0] / s.m4[k][1]);
            FourthMoment {
                t,
                ratio: m4.value / t.powf(1.5),
                m4,
                free_walk: free_walk_fourth_moment(dist, n, t),
            }
        })
        .collect();
    Ok(PathStatistics {
        n,
        s_max: chain.s_max(),
        seed: spec.seed,
        paths: spec.paths,
        batches: BATCHES,
        block_length: block,
        sites_per_path: sites,
        var_s0_over_sqrt_n: jackknife(&total, &batches, |s| variance(s.s0[0], s.s0[1], s.paths)),
        var_pooled_over_sqrt_n: jackknife(&total, &batches, |s| {
            variance(s.pooled[0], s.pooled[1], s.pooled[2])
        }),
        tightness_sup: tightness_check(&fourth_moments),
        lags,
        fourth_moments,
    })
}

fn accumulate(
    sums: &mut Sums,
    heights: &[i64],
    scale: f64,
    block: usize,
    origins: &[usize],
    spec: &EnsembleSpec,
) {
    let value = |t: f64| rescaled_value(heights, scale, block, t);
    let b = block as f64;
    sums.paths += 1.0;
    let x0 = value(0.0);
    sums.s0[0] += x0;
    sums.s0[1] += x0 * x0;
    for (k, &t) in spec.lags.iter().enumerate() {
        let x = value(t);
        let x2 = x * x;
        add_into(&mut sums.at_t[k], &[x, x2, x2 * x, x2 * x2], 1.0);
    }
    for &o in origins {
        let u = o as f64 / b;
        let x = value(u);
        add_into(&mut sums.pooled, &[x, x * x, 1.0], 1.0);
        for (k, &t) in spec.lags.iter().enumerate() {
            let y = value(u + t);
            add_into(&mut sums.cov[k], &[x, y, x * y, 1.0], 1.0);
        }
        for (k, &t) in spec.tightness_t.iter().enumerate() {
            let d = value(u + t) - x;
            let d2 = d * d;
            add_into(&mut sums.m4[k], &[d2 * d2, 1.0], 1.0);
        }
    }
}

/// `sup_t M₄(t)/t^{3/2}`.
pub fn tightness_check(moments: &[FourthMoment]) -> f64 {
    moments.iter().map(|m| m.ratio).fold(0.0, f64::max)
}

/// `E[(S̃(t) - S̃(0))⁴]` when the heights perform the free random walk with
/// increments `dist`: `m = ⌊tB⌋` full steps plus a fraction `f` of one more,
/// `E(A + fη)⁴ = E A⁴ + 6f² E A² E η² + f⁴ E η⁴` with `A` read off the exact
/// `m`-step law.
pub fn free_walk_fourth_moment(dist: &IncrementDistribution<f64>, n: u64, t: f64) -> f64 {
    let x = t * block_length(n) as f64;
    let m = x.floor() as usize;
    let f = x - m as f64;
    let (a2, a4) = if m == 0 {
        (0.0, 0.0)
    } else {
        match dist.n_step_table(m) {
            Ok(law) => (law.moment(2), law.moment(4)),
            Err(_) => {
                let v = dist.variance();
                let m = m as f64;
                (m * v, 3.0 * m * m * v * v)
            }
        }
    };
    let eta = dist.n_step_table(1).expect("single step law");
    let (e2, e4) = (eta.moment(2), eta.moment(4));
    (a4 + 6.0 * f * f * a2 * e2 + f.powi(4) * e4) / n as f64
}
