use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::real::Real;
use crate::transfer_operator::{Eigenpair, TruncatedKernel};

/// Upper bound on `(2·S_max + 1)^{N+1}`.
pub const PATH_COUNT_CAP: u128 = 100_000_000;

/// A system small enough for exhaustive path enumeration.
#[derive(Debug, Clone)]
pub struct TinyInstance<T> {
    pub n: u64,
    pub s_max: i64,
    pub dist: IncrementDistribution<T>,
}

impl<T: Real> TinyInstance<T> {
    pub fn new(n: u64, s_max: i64, dist: IncrementDistribution<T>) -> Result<Self> {
        if !(1..=8).contains(&n) || !(0..=6).contains(&s_max) {
            return Err(Error::InvalidInput(format!(
                "tiny instance needs 1 <= N <= 8 and 0 <= S_max <= 6, got N={n}, S_max={s_max}"
            )));
        }
        let inst = Self { n, s_max, dist };
        let count = inst.path_count();
        if count > PATH_COUNT_CAP {
            return Err(Error::EnumerationCap {
                paths: count,
                cap: PATH_COUNT_CAP,
            });
        }
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        2 * self.s_max as usize + 1
    }

    pub fn path_count(&self) -> u128 {
        (self.dim() as u128).pow(self.n as u32 + 1)
    }

    pub fn kernel(&self) -> Result<TruncatedKernel<T>> {
        TruncatedKernel::build(self.n, &self.dist, self.s_max)
    }
}

/// Exhaustive Gibbs law over all `(2·S_max+1)^{N+1}` paths.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsEnumeration {
    pub n: u64,
    pub s_max: i64,
    pub log_z: f64,
    pub z: f64,
    /// Normalized path probabilities indexed by [`path_code`].
    pub measure: Vec<f64>,
    /// `marginals[x][s + S_max]`.
    pub marginals: Vec<Vec<f64>>,
}

/// Mixed-radix index of a path with `s_0` most significant.
pub fn path_code(heights: &[i64], s_max: i64) -> usize {
    let d = (2 * s_max + 1) as usize;
    heights
        .iter()
        .fold(0usize, |acc, &s| acc * d + (s + s_max) as usize)
}

/// Weight every path by `h(s_0) Π T(s_{x-1}, s_x) h(s_N)`, accumulating
/// products in log space along a depth-first traversal.
pub fn enumerate_gibbs<T: Real>(inst: &TinyInstance<T>, pair: &Eigenpair<T>) -> Result<GibbsEnumeration> {
    if pair.s_max != inst.s_max {
        return Err(Error::InvalidInput("eigenpair window does not match instance".into()));
    }
    let kernel = inst.kernel()?;
    let d = inst.dim();
    let sites = inst.n as usize + 1;
    let log_t: Vec<f64> = (0..d * d)
        .map(|k| kernel.entry_ij(k / d, k % d).as_f64().ln())
        .collect();
    let log_h: Vec<f64> = pair.h.iter().map(|x| x.as_f64().ln()).collect();

    let count = inst.path_count() as usize;
    let mut log_w = Vec::with_capacity(count);
    let mut prefix = vec![0.0f64; sites];
    let mut digits = vec![0usize; sites];
    descend(0, &mut digits, &mut prefix, &log_t, &log_h, d, &mut log_w);

    let peak = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled = crate::real::compensated_sum(log_w.iter().map(|&w| (w - peak).exp()));
    let log_z = peak + scaled.ln();
    let measure: Vec<f64> = log_w.iter().map(|&w| (w - log_z).exp()).collect();

    let mut marginals = vec![vec![0.0; d]; sites];
    for (code, &p) in measure.iter().enumerate() {
        let mut rest = code;
        for x in (0..sites).rev() {
            marginals[x][rest % d] += p;
            rest /= d;
        }
    }
    Ok(GibbsEnumeration {
        n: inst.n,
        s_max: inst.s_max,
        log_z,
        z: log_z.exp(),
        measure,
        marginals,
    })
}

fn descend(
    x: usize,
    digits: &mut [usize],
    prefix: &mut [f64],
    log_t: &[f64],
    log_h: &[f64],
    d: usize,
    out: &mut Vec<f64>,
) {
    let last = digits.len() - 1;
    for j in 0..d {
        digits[x] = j;
        prefix[x] = if x == 0 {
            log_h[j]
        } else {
            prefix[x - 1] + log_t[digits[x - 1] * d + j]
        };
        if x == last {
            out.push(prefix[x] + log_h[j]);
        } else {
            descend(x + 1, digits, prefix, log_t, log_h, d, out);
        }
    }
}

/// `½ Σ |p - q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * crate::real::compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs()))
}

/// Mean and standard deviation of the total-variation distance between a law
/// and the empirical measure of `samples` independent draws from it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TvNoise {
    pub mean: f64,
    pub sd: f64,
}

/// Built from the exact binomial mean absolute deviation of every cell,
/// `E|X - np| = 2ν C(n,ν) p^ν (1-p)^{n-ν+1}` with `ν = ⌊np⌋ + 1`. Cell
/// correlations are ignored in the spread.
pub fn tv_noise(law: &[f64], samples: u64) -> TvNoise {
    let n = samples as f64;
    let mut mean = 0.0;
    let mut var = 0.0;
    for &p in law {
        if p <= 0.0 || p >= 1.0 {
            continue;
        }
        let nu = (n * p).floor() + 1.0;
        let mad = if nu > n {
            0.0
        } else {
            let log_binom = ln_gamma(n + 1.0) - ln_gamma(nu + 1.0) - ln_gamma(n - nu + 1.0);
            (std::f64::consts::LN_2 + nu.ln() + log_binom + nu * p.ln() + (n - nu + 1.0) * (-p).ln_1p())
                .exp()
        };
        mean += mad;
        var += (n * p * (1.0 - p) - mad * mad).max(0.0);
    }
    TvNoise {
        mean: mean / (2.0 * n),
        sd: var.sqrt() / (2.0 * n),
    }
}
