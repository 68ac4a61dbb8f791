use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::real::{CompensatedSum, Real};

/// Default cap on the kernel dimension `2·S_max + 1`.
pub const DEFAULT_DIM_CAP: usize = 200_000;

/// Height window selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `S_max = ⌈6·√σ·N^{1/4}⌉`, doubled once if the eigenvector is not
    /// negligible at the edge.
    Auto,
    Fixed(i64),
}

impl Window {
    pub fn initial_s_max<T: Real>(&self, n: u64, dist: &IncrementDistribution<T>) -> i64 {
        match *self {
            Window::Fixed(s) => s,
            Window::Auto => auto_s_max(n, dist.sigma().as_f64()),
        }
    }
}

pub fn auto_s_max(n: u64, sigma: f64) -> i64 {
    ((6.0 * sigma.sqrt() * (n as f64).powf(0.25)).ceil() as i64).max(1)
}

#[derive(Debug, Clone)]
enum Storage<T> {
    /// Row `i` holds columns `i - band ..= i + band` at offsets `0 ..= 2·band`.
    Banded { band: usize, data: Vec<T> },
    Dense { data: Vec<T> },
}

/// The transfer kernel `T_N(s, s̄) = exp(-(s² + s̄²)/(2N)) · π(s - s̄)`
/// restricted to heights `-S_max ..= S_max`.
#[derive(Debug, Clone)]
pub struct TruncatedKernel<T> {
    n: u64,
    s_max: i64,
    dist: IncrementDistribution<T>,
    storage: Storage<T>,
}

impl<T: Real> TruncatedKernel<T> {
    pub fn build(n: u64, dist: &IncrementDistribution<T>, s_max: i64) -> Result<Self> {
        Self::build_capped(n, dist, s_max, DEFAULT_DIM_CAP)
    }

    pub fn build_capped(
        n: u64,
        dist: &IncrementDistribution<T>,
        s_max: i64,
        dim_cap: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("system size N must be >= 1".into()));
        }
        if s_max < 0 {
            return Err(Error::InvalidInput(format!("S_max must be >= 0, got {s_max}")));
        }
        let dim = 2 * s_max as usize + 1;
        if dim > dim_cap {
            return Err(Error::DimensionCap { dim, cap: dim_cap });
        }
        let band = dist.support_radius().min(dim - 1);
        let two_n = T::of(2.0) * T::of(n as f64);
        let weight = |s: i64, sb: i64| {
            let q = T::of_i64(s * s + sb * sb);
            (-q / two_n).exp() * dist.pmf(s - sb)
        };

        let storage = if 2 * band + 1 >= dim {
            let mut data = vec![T::zero(); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    data[i * dim + j] = weight(i as i64 - s_max, j as i64 - s_max);
                }
            }
            Storage::Dense { data }
        } else {
            let width = 2 * band + 1;
            let mut data = vec![T::zero(); dim * width];
            for i in 0..dim {
                let s = i as i64 - s_max;
                for off in 0..width {
                    let j = i as i64 + off as i64 - band as i64;
                    if j < 0 || j >= dim as i64 {
                        continue;
                    }
                    data[i * width + off] = weight(s, j - s_max);
                }
            }
            Storage::Banded { band, data }
        };

        Ok(Self {
            n,
            s_max,
            dist: dist.clone(),
            storage,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s_max(&self) -> i64 {
        self.s_max
    }

    pub fn dim(&self) -> usize {
        2 * self.s_max as usize + 1
    }

    pub fn dist(&self) -> &IncrementDistribution<T> {
        &self.dist
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.storage, Storage::Banded { .. })
    }

    /// Half bandwidth: entries vanish for `|s - s̄|` above it.
    pub fn bandwidth(&self) -> usize {
        match &self.storage {
            Storage::Banded { band, .. } => *band,
            Storage::Dense { .. } => self.dim() - 1,
        }
    }

    /// `T_N(s, s̄)`; zero outside the window.
    pub fn entry(&self, s: i64, sb: i64) -> T {
        if s.abs() > self.s_max || sb.abs() > self.s_max {
            return T::zero();
        }
        let i = (s + self.s_max) as usize;
        let j = (sb + self.s_max) as usize;
        self.entry_ij(i, j)
    }

    #[inline]
    pub fn entry_ij(&self, i: usize, j: usize) -> T {
        match &self.storage {
            Storage::Dense { data } => data[i * self.dim() + j],
            Storage::Banded { band, data } => {
                let off = j as i64 - i as i64 + *band as i64;
                if off < 0 || off > 2 * *band as i64 {
                    T::zero()
                } else {
                    data[i * (2 * band + 1) + off as usize]
                }
            }
        }
    }

    /// Column range `[lo, hi]` of possibly non-zero entries in row `i`.
    #[inline]
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        let b = self.bandwidth();
        (i.saturating_sub(b), (i + b).min(self.dim() - 1))
    }

    /// `y = T x` with compensated row sums. Rows are independent, so the
    /// result does not depend on evaluation order.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = self.row_span(i);
            let mut acc = CompensatedSum::new();
            for (j, &xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc.add(self.entry_ij(i, j) * xj);
            }
            *yi = acc.value();
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let d = self.dim();
        let mut out = vec![T::zero(); d * d];
        for i in 0..d {
            let (lo, hi) = self.row_span(i);
            for j in lo..=hi {
                out[i * d + j] = self.entry_ij(i, j);
            }
        }
        out
    }

    pub fn heights(&self) -> impl Iterator<Item = i64> {
        -self.s_max..=self.s_max
    }
}
