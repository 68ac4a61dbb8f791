//! Symmetric, aperiodic increment laws on the integers with exponential moments.
//!
//! Every distribution is materialized on a symmetric support window `[-R, R]`
//! outside of which the remaining mass is below [`TAIL_MASS`]. The variance and
//! the log moment generating function are computed in closed form where one
//! exists and by compensated summation over the table otherwise.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};

/// Mass allowed outside the materialized support window.
pub const TAIL_MASS: f64 = 1e-15;

/// Tolerance on the total mass of a user supplied table.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default cap on the nominal width `2·n·R + 1` of an n-step convolution.
pub const DEFAULT_CONVOLUTION_CAP: usize = 50_000_000;

/// Parameterization of an increment law, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncrementKind {
    /// `π(η) ∝ exp(-κ|η|)`.
    DoubleGeometric {
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// `π(0) = p0`, `π(±1) = (1 - p0)/2`.
    LazySimpleWalk { p0: f64 },
    /// Finite symmetric table.
    Custom {
        #[serde(with = "integer_keys")]
        pmf: BTreeMap<i64, f64>,
    },
}

fn default_kappa() -> f64 {
    1.0
}

// JSON object keys are strings; internally tagged enums lose serde_json's
// integer-key coercion, so parse them explicitly.
mod integer_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<i64, f64>, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BTreeMap<i64, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(de)?
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("pmf key {k:?} is not an integer")))
            })
            .collect()
    }
}

impl Default for IncrementKind {
    fn default() -> Self {
        IncrementKind::DoubleGeometric { kappa: 1.0 }
    }
}

impl IncrementKind {
    pub fn label(&self) -> String {
        match self {
            IncrementKind::DoubleGeometric { kappa } => format!("double_geometric(kappa={kappa})"),
            IncrementKind::LazySimpleWalk { p0 } => format!("lazy_simple_walk(p0={p0})"),
            IncrementKind::Custom { pmf } => format!("custom({} atoms)", pmf.len()),
        }
    }
}

/// A symmetric increment law materialized on `[-R, R]`.
#[derive(Debug, Clone)]
pub struct IncrementDistribution<T> {
    kind: IncrementKind,
    table: Vec<T>,
    radius: usize,
    variance: T,
    a0: T,
    cdf: Vec<f64>,
}

impl<T: Real> IncrementDistribution<T> {
    pub fn new(kind: IncrementKind) -> Result<Self> {
        match &kind {
            IncrementKind::DoubleGeometric { kappa } => Self::build_double_geometric(*kappa),
            IncrementKind::LazySimpleWalk { p0 } => Self::build_lazy(*p0),
            IncrementKind::Custom { pmf } => Self::build_custom(pmf),
        }
    }

    pub fn double_geometric(kappa: f64) -> Result<Self> {
        Self::new(IncrementKind::DoubleGeometric { kappa })
    }

    pub fn lazy_simple_walk(p0: f64) -> Result<Self> {
        Self::new(IncrementKind::LazySimpleWalk { p0 })
    }

    pub fn custom(pmf: BTreeMap<i64, f64>) -> Result<Self> {
        Self::new(IncrementKind::Custom { pmf })
    }

    fn build_double_geometric(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "double geometric rate must be positive, got {kappa}"
            )));
        }
        let x = (-kappa).exp();
        let norm = (1.0 + x) / (1.0 - x);
        // tail mass beyond R is 2 x^{R+1} / ((1 - x) V)
        let mut radius = 0usize;
        while 2.0 * x.powi(radius as i32 + 1) / ((1.0 - x) * norm) >= TAIL_MASS {
            radius += 1;
        }

        let kappa_t = T::of(kappa);
        let xt = (-kappa_t).exp();
        let norm_t = (T::one() + xt) / (T::one() - xt);
        let table: Vec<T> = (-(radius as i64)..=radius as i64)
            .map(|eta| (-kappa_t * T::of_i64(eta.abs())).exp() / norm_t)
            .collect();
        let one = T::one();
        let variance = T::of(2.0) * xt * (one + xt) / ((one - xt).powi(3) * norm_t);
        // the series converges for |a| < κ; keep a hair inside the radius
        let a0 = kappa_t * T::of(1.0 - 1.0 / 1024.0);
        Ok(Self::assemble(
            IncrementKind::DoubleGeometric { kappa },
            table,
            radius,
            variance,
            a0,
        ))
    }

    fn build_lazy(p0: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "lazy walk holding probability must lie in (0, 1), got {p0}"
            )));
        }
        let p0t = T::of(p0);
        let side = (T::one() - p0t) / T::of(2.0);
        let table = vec![side, p0t, side];
        let variance = T::one() - p0t;
        let a0 = T::of(700.0);
        Ok(Self::assemble(
            IncrementKind::LazySimpleWalk { p0 },
            table,
            1,
            variance,
            a0,
        ))
    }

    fn build_custom(pmf: &BTreeMap<i64, f64>) -> Result<Self> {
        let mut radius = 0usize;
        for (&eta, &p) in pmf {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "probability at {eta} is {p}"
                )));
            }
            if p > 0.0 {
                radius = radius.max(eta.unsigned_abs() as usize);
            }
        }
        for (&eta, &p) in pmf {
            let mirror = pmf.get(&-eta).copied().unwrap_or(0.0);
            if (p - mirror).abs() > 1e-15 * p.max(mirror) {
                return Err(Error::InvalidDistribution(format!(
                    "table is not symmetric at ±{eta}: {p} vs {mirror}"
                )));
            }
        }
        let total: f64 = pmf.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "table mass is {total}, expected 1"
            )));
        }
        if pmf.get(&0).copied().unwrap_or(0.0) <= 0.0 {
            return Err(Error::InvalidDistribution(
                "π(0) must be positive (aperiodicity)".into(),
            ));
        }
        if radius == 0 {
            return Err(Error::InvalidDistribution(
                "degenerate law with zero variance".into(),
            ));
        }
        let r = radius as i64;
        // average the two halves so the table is exactly symmetric
        let atom = |eta: i64| pmf.get(&eta).copied().unwrap_or(0.0);
        let table: Vec<T> = (-r..=r)
            .map(|eta| T::of(0.5 * (atom(eta) + atom(-eta))))
            .collect();
        let mut var = CompensatedSum::new();
        for (i, &p) in table.iter().enumerate() {
            let eta = T::of_i64(i as i64 - r);
            var.add(eta * eta * p);
        }
        let a0 = T::of(700.0 / radius as f64);
        Ok(Self::assemble(
            IncrementKind::Custom { pmf: pmf.clone() },
            table,
            radius,
            var.value(),
            a0,
        ))
    }

    fn assemble(kind: IncrementKind, table: Vec<T>, radius: usize, variance: T, a0: T) -> Self {
        let mut acc = 0.0;
        let cdf = table
            .iter()
            .map(|p| {
                acc += p.as_f64();
                acc
            })
            .collect();
        Self {
            kind,
            table,
            radius,
            variance,
            a0,
            cdf,
        }
    }

    pub fn kind(&self) -> &IncrementKind {
        &self.kind
    }

    /// Radius `R` of the materialized support window.
    pub fn support_radius(&self) -> usize {
        self.radius
    }

    /// `π(η)`; zero outside the support window.
    pub fn pmf(&self, eta: i64) -> T {
        let r = self.radius as i64;
        if eta.abs() > r {
            T::zero()
        } else {
            self.table[(eta + r) as usize]
        }
    }

    /// Table on `[-R, R]`, index `η + R`.
    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// `σ² = Σ η² π(η)`.
    pub fn variance(&self) -> T {
        self.variance
    }

    pub fn sigma(&self) -> T {
        self.variance.sqrt()
    }

    /// Largest `|a|` accepted by [`Self::log_mgf`].
    pub fn a0(&self) -> T {
        self.a0
    }

    /// `Λ(a) = log E[e^{aη}]`.
    pub fn log_mgf(&self, a: T) -> Result<T> {
        if a.abs() > self.a0 {
            return Err(Error::MgfOutOfRange {
                a: a.as_f64(),
                a0: self.a0.as_f64(),
            });
        }
        let excess = match self.kind {
            IncrementKind::DoubleGeometric { kappa } => {
                let k = T::of(kappa);
                let one = T::one();
                let f = |b: T| one / (b.exp() - one);
                let x = (-k).exp();
                let norm = (one + x) / (one - x);
                (f(k - a) + f(k + a) - T::of(2.0) * f(k)) / norm
            }
            _ => {
                // M(a) - 1 = Σ π(η) 2 sinh²(aη/2), free of cancellation for small a
                let r = self.radius as i64;
                let mut acc = CompensatedSum::new();
                for (i, &p) in self.table.iter().enumerate() {
                    let half = a * T::of_i64(i as i64 - r) / T::of(2.0);
                    let sh = half.sinh();
                    acc.add(T::of(2.0) * p * sh * sh);
                }
                acc.value()
            }
        };
        Ok(excess.ln_1p())
    }

    /// One draw from `π` by inverse CDF on the materialized table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let total = *self.cdf.last().expect("non-empty table");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        idx as i64 - self.radius as i64
    }

    /// Exact law of the sum of `n` increments.
    pub fn n_step_table(&self, n: usize) -> Result<LatticePmf<T>> {
        self.n_step_table_capped(n, DEFAULT_CONVOLUTION_CAP)
    }

    pub fn n_step_table_capped(&self, n: usize, cap: usize) -> Result<LatticePmf<T>> {
        if n == 0 {
            return Err(Error::InvalidInput("n-step law needs n >= 1".into()));
        }
        let entries = n
            .checked_mul(self.radius)
            .and_then(|v| v.checked_mul(2))
            .map(|v| v + 1)
            .unwrap_or(usize::MAX);
        if entries > cap {
            return Err(Error::WindowOverflow { entries, cap });
        }
        let mut current = LatticePmf {
            radius: self.radius,
            values: self.table.clone(),
        };
        for _ in 1..n {
            current = current.convolve_symmetric(self);
        }
        Ok(current)
    }

    /// `π_n(s)`, the probability that `n` increments sum to `s`.
    pub fn n_step_pmf(&self, n: usize, s: i64) -> Result<T> {
        Ok(self.n_step_table(n)?.get(s))
    }
}

/// A symmetric probability mass function on `[-radius, radius]`.
#[derive(Debug, Clone)]
pub struct LatticePmf<T> {
    radius: usize,
    values: Vec<T>,
}

impl<T: Real> LatticePmf<T> {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn get(&self, s: i64) -> T {
        let r = self.radius as i64;
        if s.abs() > r {
            T::zero()
        } else {
            self.values[(s + r) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let r = self.radius as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i as i64 - r, p))
    }

    pub fn total_mass(&self) -> T {
        let mut acc = CompensatedSum::new();
        for &p in &self.values {
            acc.add(p);
        }
        acc.value()
    }

    /// `Σ s^k π(s)` for integer `k`.
    pub fn moment(&self, k: i32) -> T {
        let mut acc = CompensatedSum::new();
        for (s, p) in self.iter() {
            acc.add(T::of_i64(s).powi(k) * p);
        }
        acc.value()
    }

    /// Convolve with one more increment. Only `s >= 0` is computed and the
    /// result mirrored, so the output is exactly symmetric. Trailing entries
    /// that underflow to zero are dropped.
    fn convolve_symmetric(&self, step: &IncrementDistribution<T>) -> Self {
        let r_old = self.radius as i64;
        let r_step = step.radius as i64;
        let r_new = r_old + r_step;
        let mut half = Vec::with_capacity(r_new as usize + 1);
        for s in 0..=r_new {
            let mut acc = CompensatedSum::new();
            let lo = (s - r_step).max(-r_old);
            let hi = (s + r_step).min(r_old);
            for u in lo..=hi {
                acc.add(self.values[(u + r_old) as usize] * step.pmf(s - u));
            }
            half.push(acc.value());
        }
        while half.len() > 1 && *half.last().unwrap() == T::zero() {
            half.pop();
        }
        let radius = half.len() - 1;
        let mut values = Vec::with_capacity(2 * radius + 1);
        values.extend(half.iter().rev().copied());
        values.extend(half.iter().skip(1).copied());
        Self { radius, values }
    }
}

/// Diagnostics for the local limit theorem and the fourth-moment tail bound of
/// an n-step law.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalLimitDiagnostics {
    pub n: usize,
    /// `n^{3/2} · sup_s |π_n(s) - (2πσ²n)^{-1/2} exp(-s²/(2σ²n))|`.
    pub clt_constant: f64,
    /// `sup_s π_n(s) · n^{1/2} · (|s|/√n)^4`.
    pub fourth_moment_constant: f64,
}

impl<T: Real> IncrementDistribution<T> {
    pub fn local_limit_diagnostics(&self, n: usize) -> Result<LocalLimitDiagnostics> {
        let table = self.n_step_table(n)?;
        let var = self.variance.as_f64() * n as f64;
        let nf = n as f64;
        let mut clt = 0.0f64;
        let mut fourth = 0.0f64;
        for (s, p) in table.iter() {
            let p = p.as_f64();
            let s = s as f64;
            let gauss = (-s * s / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            clt = clt.max((p - gauss).abs());
            fourth = fourth.max(p * nf.sqrt() * (s.abs() / nf.sqrt()).powi(4));
        }
        Ok(LocalLimitDiagnostics {
            n,
            clt_constant: clt * nf.powf(1.5),
            fourth_moment_constant: fourth,
        })
    }
}
