use serde::Serialize;

use super::eigen::Eigenpair;
use crate::error::{Error, Result};
use crate::increments::IncrementDistribution;
use crate::real::{CompensatedSum, Real};

/// `h̃_N(r) = N^{1/8} · h_N(⌊r·N^{1/4}⌋)` on the given grid.
pub fn rescaled_eigenfunction<T: Real>(pair: &Eigenpair<T>, grid: &[T]) -> Result<Vec<(T, T)>> {
    let n = T::of(pair.n as f64);
    let quarter = n.powf(T::of(0.25));
    let eighth = n.powf(T::of(0.125));
    grid.iter()
        .map(|&r| {
            let x = r * quarter;
            if x.abs() > T::of_i64(pair.s_max) {
                return Err(Error::GridOutsideWindow { r: r.as_f64() });
            }
            let s = x.floor().to_i64().expect("finite grid point");
            if s < -pair.s_max {
                return Err(Error::GridOutsideWindow { r: r.as_f64() });
            }
            Ok((r, eighth * pair.h_at(s)))
        })
        .collect()
}

/// `Σ_{s,s̄} π(s - s̄) (h(s) - h(s̄))²` over the window.
pub fn dirichlet_form<T: Real>(pair: &Eigenpair<T>, dist: &IncrementDistribution<T>) -> T {
    let radius = dist.support_radius() as i64;
    let mut acc = CompensatedSum::new();
    for (s, hs) in pair.heights() {
        let lo = (s - radius).max(-pair.s_max);
        let hi = (s + radius).min(pair.s_max);
        for sb in lo..=hi {
            let d = hs - pair.h_at(sb);
            acc.add(dist.pmf(s - sb) * d * d);
        }
    }
    acc.value()
}

/// Right-hand side of the splitting identity for the Dirichlet form:
/// `2 - 2λ - 2 Σ (1 - exp(-(s² + s̄²)/(2N))) π(s - s̄) h(s) h(s̄)`.
pub fn dirichlet_split<T: Real>(pair: &Eigenpair<T>, dist: &IncrementDistribution<T>) -> T {
    let radius = dist.support_radius() as i64;
    let two_n = T::of(2.0 * pair.n as f64);
    let mut acc = CompensatedSum::new();
    for (s, hs) in pair.heights() {
        let lo = (s - radius).max(-pair.s_max);
        let hi = (s + radius).min(pair.s_max);
        for sb in lo..=hi {
            let q = T::of_i64(s * s + sb * sb) / two_n;
            let damp = -(-q).exp_m1();
            acc.add(damp * dist.pmf(s - sb) * hs * pair.h_at(sb));
        }
    }
    let two = T::of(2.0);
    two - two * pair.lambda - two * acc.value()
}

/// Gaussian trial function evaluation for the variational lower bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationalBound {
    pub n: u64,
    pub alpha: f64,
    /// Rayleigh quotient of `h_α(s) = C_α exp(-α s²/4)` on the lattice.
    pub quotient: f64,
    /// `1 - (σ²/4 + 1)/√N - σ²/(2N)`.
    pub envelope: f64,
    /// `Σ s² h_α(s)²`.
    pub trial_second_moment: f64,
}

/// Rayleigh quotient of the Gaussian trial function with `α = N^{-1/2}`.
pub fn variational_lower_bound<T: Real>(n: u64, dist: &IncrementDistribution<T>) -> VariationalBound {
    let alpha = 1.0 / (n as f64).sqrt();
    let trial = gaussian_trial::<T>(alpha);
    let radius = dist.support_radius() as i64;
    let two_n = T::of(2.0 * n as f64);
    let a = T::of(alpha);
    let h = |s: i64| {
        let s = T::of_i64(s);
        (-a * s * s / T::of(4.0)).exp()
    };
    let mut num = CompensatedSum::new();
    for s in -trial.extent..=trial.extent {
        let hs = h(s);
        for tau in -radius..=radius {
            let sb = s + tau;
            let q = T::of_i64(s * s + sb * sb) / two_n;
            num.add((-q).exp() * dist.pmf(tau) * hs * h(sb));
        }
    }
    let quotient = num.value().as_f64() / trial.mass;
    let var = dist.variance().as_f64();
    let nf = n as f64;
    VariationalBound {
        n,
        alpha,
        quotient,
        envelope: 1.0 - (var / 4.0 + 1.0) / nf.sqrt() - var / (2.0 * nf),
        trial_second_moment: trial.second_moment,
    }
}

struct Trial {
    extent: i64,
    mass: f64,
    second_moment: f64,
}

fn gaussian_trial<T: Real>(alpha: f64) -> Trial {
    // exp(-α s²/2) < 1e-80 beyond the extent
    let extent = (2.0 * 80.0 * std::f64::consts::LN_10 / alpha).sqrt().ceil() as i64;
    let a = T::of(alpha);
    let mut mass = CompensatedSum::new();
    let mut second = CompensatedSum::new();
    for s in -extent..=extent {
        let st = T::of_i64(s);
        let w = (-a * st * st / T::of(2.0)).exp();
        mass.add(w);
        second.add(st * st * w);
    }
    let mass = mass.value().as_f64();
    Trial {
        extent,
        mass,
        second_moment: second.value().as_f64() / mass,
    }
}

/// `Σ s² h_α(s)²` for the normalized Gaussian trial function.
pub fn trial_second_moment(alpha: f64) -> f64 {
    gaussian_trial::<f64>(alpha).second_moment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer_operator::{solve, EigenOptions, Window};

    fn dg() -> IncrementDistribution<f64> {
        IncrementDistribution::double_geometric(1.0).unwrap()
    }

    #[test]
    fn rescaled_values_and_normalization() {
        let (_, pair) = solve(4_096, &dg(), Window::Auto, &EigenOptions::default()).unwrap();
        let at0 = rescaled_eigenfunction(&pair, &[0.0]).unwrap();
        assert!((at0[0].1 - 4_096f64.powf(0.125) * pair.h_at(0)).abs() < 1e-15);

        // integral of the step function over the window
        let delta = 1.0 / 4_096f64.powf(0.25);
        let grid: Vec<f64> = (-pair.s_max..pair.s_max).map(|s| (s as f64 + 0.5) * delta).collect();
        let vals = rescaled_eigenfunction(&pair, &grid).unwrap();
        let integral: f64 = vals.iter().map(|(_, v)| v * v * delta).sum();
        assert!((integral - 1.0).abs() < 1e-8);

        for r in [0.3, 1.1, 2.5] {
            let plus = rescaled_eigenfunction(&pair, &[r]).unwrap()[0].1;
            let minus = rescaled_eigenfunction(&pair, &[-r]).unwrap()[0].1;
            let s = (r / delta).floor() as i64;
            // floor makes -r land one site further out at most
            let one_site = 4_096f64.powf(0.125) * (pair.h_at(s) - pair.h_at(s + 1)).abs();
            assert!((plus - minus).abs() <= one_site + 1e-15);
        }
        assert!(rescaled_eigenfunction(&pair, &[1e3]).is_err());
    }

    #[test]
    fn dirichlet_of_constant_vector_vanishes_in_the_interior() {
        let pair = Eigenpair {
            n: 10,
            s_max: 3,
            lambda: 0.5,
            log_lambda: 0.5f64.ln(),
            h: vec![0.5; 7],
            residual: 0.0,
            iterations: 0,
        };
        assert_eq!(dirichlet_form(&pair, &dg()), 0.0);
    }

    #[test]
    fn dirichlet_split_identity() {
        for &n in &[100u64, 1_000, 10_000] {
            let (_, pair) = solve(n, &dg(), Window::Auto, &EigenOptions::default()).unwrap();
            let direct = dirichlet_form(&pair, &dg());
            let split = dirichlet_split(&pair, &dg());
            assert!((direct - split).abs() < 1e-10, "N={n}: {direct} vs {split}");
        }
    }

    #[test]
    fn trial_second_moment_behaves_like_inverse_alpha() {
        let alpha = 1e-2;
        let m = trial_second_moment(alpha);
        assert!((m - 1.0 / alpha).abs() < alpha, "{m}");
    }

    #[test]
    fn variational_sandwich() {
        for &n in &[100u64, 1_000, 10_000] {
            let (_, pair) = solve(n, &dg(), Window::Auto, &EigenOptions::default()).unwrap();
            let b = variational_lower_bound(n, &dg());
            assert!(b.quotient <= pair.lambda);
            assert!(b.quotient >= b.envelope);
        }
    }
}
