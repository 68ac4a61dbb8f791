//! The h-transformed Markov chain `p(s, s') = h(s') T(s, s') / (λ h(s))`,
//! stationary path sampling, and the diffusive rescaling of sampled paths.
//!
//! Transition rows are renormalized to sum to one; the pre-normalization
//! defect of each row is kept as a diagnostic. Each row's CDF is precomputed
//! once so a path step is a binary search.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::transfer_operator::{Eigenpair, TruncatedKernel};

/// Rows whose raw sum deviates from one by more than this abort construction.
pub const MAX_ROW_DEFECT: f64 = 1e-6;

/// A reproducible random stream: ChaCha8 keyed by `seed`, stream `stream`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Integer heights `s_0, …, s_L` of one interface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfacePath {
    pub n: u64,
    pub s_max: i64,
    pub heights: Vec<i64>,
    pub seed: u64,
    pub stream: u64,
}

/// `S̃_N(t) = N^{-1/4} s_{t·B}`, piecewise linear between lattice sites,
/// with `B = ⌊√N⌋` sites per unit time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledTrajectory {
    pub n: u64,
    pub block_length: usize,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Row {
    lo: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Precomputed transition table of the h-transformed chain.
#[derive(Debug, Clone)]
pub struct DoobChain {
    n: u64,
    s_max: i64,
    rows: Vec<Row>,
    defects: Vec<f64>,
    stationary: Vec<f64>,
    stationary_cdf: Vec<f64>,
}

impl DoobChain {
    pub fn new<T: Real>(kernel: &TruncatedKernel<T>, pair: &Eigenpair<T>) -> Result<Self> {
        if kernel.s_max() != pair.s_max || kernel.n() != pair.n {
            return Err(Error::InvalidInput(
                "eigenpair was not computed for this kernel".into(),
            ));
        }
        let dim = kernel.dim();
        let mut rows = Vec::with_capacity(dim);
        let mut defects = Vec::with_capacity(dim);
        for i in 0..dim {
            let (lo, hi) = kernel.row_span(i);
            let scale = pair.lambda * pair.h[i];
            let raw: Vec<f64> = (lo..=hi)
                .map(|j| (pair.h[j] * kernel.entry_ij(i, j) / scale).as_f64())
                .collect();
            let sum = crate::real::compensated_sum(raw.iter().copied());
            let defect = 1.0 - sum;
            if defect.abs() > MAX_ROW_DEFECT || !defect.is_finite() {
                return Err(Error::TruncationDefect {
                    s: i as i64 - kernel.s_max(),
                    defect,
                });
            }
            let probs: Vec<f64> = raw.iter().map(|p| p / sum).collect();
            rows.push(Row {
                lo,
                cdf: cumulative(&probs),
                probs,
            });
            defects.push(defect);
        }
        let stationary: Vec<f64> = pair.h.iter().map(|&x| (x * x).as_f64()).collect();
        let mass = crate::real::compensated_sum(stationary.iter().copied());
        let stationary: Vec<f64> = stationary.iter().map(|p| p / mass).collect();
        Ok(Self {
            n: kernel.n(),
            s_max: kernel.s_max(),
            rows,
            defects,
            stationary_cdf: cumulative(&stationary),
            stationary,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s_max(&self) -> i64 {
        self.s_max
    }

    /// Pre-normalization defect `1 - Σ_{s'} p(s, s')` of every row.
    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    /// Stationary law `h²(s)`, indexed by `s + S_max`.
    pub fn stationary_law(&self) -> &[f64] {
        &self.stationary
    }

    /// Normalized `p(s, ·)` over the whole window.
    pub fn transition_row(&self, s: i64) -> Vec<f64> {
        let mut out = vec![0.0; self.stationary.len()];
        let row = &self.rows[self.index(s)];
        out[row.lo..row.lo + row.probs.len()].copy_from_slice(&row.probs);
        out
    }

    /// `p(s, s')`; zero outside the band.
    pub fn transition(&self, s: i64, s_next: i64) -> f64 {
        let row = &self.rows[self.index(s)];
        let j = (s_next + self.s_max) as usize;
        if s_next.abs() > self.s_max || j < row.lo || j >= row.lo + row.probs.len() {
            0.0
        } else {
            row.probs[j - row.lo]
        }
    }

    fn index(&self, s: i64) -> usize {
        assert!(s.abs() <= self.s_max, "height {s} outside window");
        (s + self.s_max) as usize
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        draw(&self.stationary_cdf, rng) as i64 - self.s_max
    }

    pub fn step<R: Rng + ?Sized>(&self, s: i64, rng: &mut R) -> i64 {
        let row = &self.rows[self.index(s)];
        (row.lo + draw(&row.cdf, rng)) as i64 - self.s_max
    }

    /// Stationary heights `s_0, …, s_len` on a caller owned buffer.
    pub fn fill_prefix<R: Rng + ?Sized>(&self, len: usize, rng: &mut R, out: &mut Vec<i64>) {
        out.clear();
        let mut s = self.sample_start(rng);
        out.push(s);
        for _ in 0..len {
            s = self.step(s, rng);
            out.push(s);
        }
    }

    /// Stationary heights `s_0, …, s_len` for `len <= N`. By stationarity and
    /// the Markov property this is the law of the first `len + 1` sites of a
    /// full path.
    pub fn sample_prefix(&self, len: usize, stream: RngStream) -> InterfacePath {
        let mut rng = stream.rng();
        let mut heights = Vec::with_capacity(len + 1);
        self.fill_prefix(len, &mut rng, &mut heights);
        InterfacePath {
            n: self.n,
            s_max: self.s_max,
            heights,
            seed: stream.seed,
            stream: stream.stream,
        }
    }

    /// A full stationary path `s_0, …, s_N`.
    pub fn sample_stationary_path(&self, stream: RngStream) -> InterfacePath {
        self.sample_prefix(self.n as usize, stream)
    }

    /// `count` paths of `len + 1` sites; path `i` uses stream `i`.
    pub fn sample_ensemble(&self, count: usize, len: usize, seed: u64) -> Vec<InterfacePath> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample_prefix(len, RngStream::new(seed, i)))
            .collect()
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

#[inline]
fn draw<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Normalized transition row `p(s, ·)` computed directly from the eigenpair.
pub fn transition_row<T: Real>(
    pair: &Eigenpair<T>,
    kernel: &TruncatedKernel<T>,
    s: i64,
) -> Result<Vec<f64>> {
    if s.abs() > kernel.s_max() {
        return Err(Error::InvalidInput(format!("height {s} outside window")));
    }
    let i = (s + kernel.s_max()) as usize;
    let scale = pair.lambda * pair.h[i];
    let raw: Vec<f64> = (0..kernel.dim())
        .map(|j| (pair.h[j] * kernel.entry_ij(i, j) / scale).as_f64())
        .collect();
    let sum = crate::real::compensated_sum(raw.iter().copied());
    let defect = 1.0 - sum;
    if defect.abs() > MAX_ROW_DEFECT {
        return Err(Error::TruncationDefect { s, defect });
    }
    Ok(raw.into_iter().map(|p| p / sum).collect())
}

/// The two logarithmic forms of a path's weight.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathLogWeight {
    /// `log[h(s_0) Π T(s_{x-1}, s_x) h(s_N)]`.
    pub gibbs: f64,
    /// `log[λ^N h²(s_0) Π p(s_{x-1}, s_x)]`, using the chain's transition table.
    pub markov: f64,
}

impl PathLogWeight {
    pub fn discrepancy(&self) -> f64 {
        (self.gibbs - self.markov).abs()
    }
}

/// Evaluate both weight forms. The path may have any length `L >= 1`; `N`
/// in the Markov form is replaced by the number of steps.
pub fn path_log_weight<T: Real>(
    path: &InterfacePath,
    pair: &Eigenpair<T>,
    kernel: &TruncatedKernel<T>,
    chain: &DoobChain,
) -> Result<PathLogWeight> {
    let hs = &path.heights;
    if hs.is_empty() || hs.iter().any(|s| s.abs() > kernel.s_max()) {
        return Err(Error::InvalidInput("path leaves the window".into()));
    }
    let steps = hs.len() - 1;
    let ln_h = |s: i64| pair.h_at(s).as_f64().ln();
    let mut gibbs = ln_h(hs[0]) + ln_h(hs[steps]);
    let mut markov = steps as f64 * pair.log_lambda.as_f64() + 2.0 * ln_h(hs[0]);
    for w in hs.windows(2) {
        gibbs += kernel.entry(w[0], w[1]).as_f64().ln();
        markov += chain.transition(w[0], w[1]).ln();
    }
    Ok(PathLogWeight { gibbs, markov })
}

/// `⌊√N⌋`, the number of lattice sites per unit of rescaled time.
pub fn block_length(n: u64) -> usize {
    n.isqrt() as usize
}

/// `N^{-1/4} s_{tB}` with linear interpolation between sites, for
/// `0 <= t·B <= heights.len() - 1`.
#[inline]
pub fn rescaled_value(heights: &[i64], scale: f64, block: usize, t: f64) -> f64 {
    let x = t * block as f64;
    let k = (x.floor() as usize).min(heights.len() - 1);
    let frac = x - k as f64;
    let base = heights[k] as f64;
    let v = if frac > 0.0 {
        base + frac * (heights[k + 1] - heights[k]) as f64
    } else {
        base
    };
    v * scale
}

pub fn rescale_path(path: &InterfacePath, t_grid: &[f64]) -> Result<RescaledTrajectory> {
    let block = block_length(path.n);
    if path.heights.len() <= block {
        return Err(Error::InvalidInput(format!(
            "path has {} sites, rescaling needs at least {}",
            path.heights.len(),
            block + 1
        )));
    }
    if let Some(&t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    let scale = (path.n as f64).powf(-0.25);
    Ok(RescaledTrajectory {
        n: path.n,
        block_length: block,
        t_grid: t_grid.to_vec(),
        values: t_grid
            .iter()
            .map(|&t| rescaled_value(&path.heights, scale, block, t))
            .collect(),
    })
}
