//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line and
//! asserts at the stated tolerance.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sos_lab::chain_sampler::{path_log_weight, DoobChain, InterfacePath};
use sos_lab::increments::IncrementDistribution;
use sos_lab::oracle::{
    dense_eigen_oracle, enumerate_gibbs, oracle_check, ou_reference, validate_continuum_limit,
    ContinuumLimit, TinyInstance,
};
use sos_lab::scaling_analysis::{scaling_study, ScalingReport, StudyConfig, Thresholds};
use sos_lab::transfer_operator::{principal_eigenpair, EigenOptions, TruncatedKernel};

const PATHS: usize = 20_000;
const SEED: u64 = 20_240_611;

struct Study {
    report: ScalingReport,
    elapsed: Duration,
}

fn study() -> &'static Study {
    static STUDY: OnceLock<Study> = OnceLock::new();
    STUDY.get_or_init(|| {
        let dist = IncrementDistribution::double_geometric(1.0).unwrap();
        let config = StudyConfig {
            paths: PATHS,
            seed: SEED,
            ..StudyConfig::default()
        };
        let start = Instant::now();
        let report = scaling_study(&dist, &config).expect("default sweep");
        Study {
            report,
            elapsed: start.elapsed(),
        }
    })
}

fn verdict(id: u32, title: &str, ok: bool, detail: String) {
    println!(
        "criterion {id:>2} [{}] {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

/// Variance of the double-geometric law by direct summation of its atoms.
fn double_geometric_variance() -> f64 {
    let (mut z, mut m2) = (1.0, 0.0);
    for eta in 1..200 {
        let w = (-(eta as f64)).exp();
        z += 2.0 * w;
        m2 += 2.0 * (eta * eta) as f64 * w;
    }
    m2 / z
}

#[test]
fn criterion_01_eigenvalue_scaling() {
    let s = study();
    let dist = IncrementDistribution::<f64>::double_geometric(1.0).unwrap();
    let series_ok = (dist.variance() - double_geometric_variance()).abs() < 1e-12;
    let target = ContinuumLimit::reference(dist.sigma()).lambda_limit();
    let est = s.report.lambda.extrapolated;
    let rel = (est - target).abs() / target;
    let fast = s.elapsed <= Duration::from_secs(600);
    verdict(
        1,
        "Richardson lambda^sqrt(N) vs exp(-sigma/2)",
        series_ok && rel < Thresholds::default().lambda_rel && fast,
        format!(
            "extrapolated {est:.6}, target {target:.6}, rel err {rel:.3e}, \
             raw {:?}, sweep+ensembles {:.1}s",
            s.report
                .lambda
                .records
                .iter()
                .map(|r| format!("{:.6}", r.lambda_pow_sqrt_n))
                .collect::<Vec<_>>(),
            s.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_eigenvalue_bracket() {
    let records = &study().report.lambda.records;
    let first = &records[0];
    let c = (1.0 - first.lambda) * (first.n as f64).sqrt();
    let mut worst = Vec::new();
    let mut ok = true;
    for r in records {
        let lower = 1.0 - c / (r.n as f64).sqrt();
        let below_one = r.lambda < 1.0 && 1.0 - r.lambda >= 10.0 * r.residual;
        if r.lambda < lower || !below_one {
            ok = false;
            worst.push(format!("N={} lambda={:.9} < {:.9}", r.n, r.lambda, lower));
        }
    }
    verdict(
        2,
        "1 - c/sqrt(N) <= lambda_N < 1 with c from the smallest N",
        ok,
        format!(
            "c = {c:.6}, (1-lambda)sqrt(N) = {:?}, violations {:?}",
            records.iter().map(|r| format!("{:.5}", r.gap_sqrt_n)).collect::<Vec<_>>(),
            worst
        ),
    );
}

#[test]
fn criterion_03_gaussian_eigenfunction() {
    let r = &study().report;
    let th = Thresholds::default();
    let ef = &r.eigenfunction;
    let last = *ef.l2_reference.last().unwrap();
    let var = *ef.step_measure_variance.last().unwrap();
    let target = r.sigma / 2.0;
    let var_rel = (var - target).abs() / target;
    verdict(
        3,
        "L2 distance to g decreasing and < 0.05, variance within 2% of sigma/2",
        ef.l2_decreasing && last < th.l2_max && var_rel < th.variance_rel,
        format!(
            "L2 {:?}, variance {var:.5} vs {target:.5} (rel {var_rel:.3e})",
            ef.l2_reference.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    );
}

fn tiny_instances() -> Vec<TinyInstance<f64>> {
    let custom: BTreeMap<i64, f64> = [(-2, 0.1), (-1, 0.2), (0, 0.4), (1, 0.2), (2, 0.1)]
        .into_iter()
        .collect();
    vec![
        TinyInstance::new(6, 5, IncrementDistribution::double_geometric(1.0).unwrap()).unwrap(),
        TinyInstance::new(4, 3, IncrementDistribution::lazy_simple_walk(0.5).unwrap()).unwrap(),
        TinyInstance::new(5, 4, IncrementDistribution::custom(custom).unwrap()).unwrap(),
    ]
}

#[test]
fn criterion_04_gibbs_markov_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut weight_err = 0.0f64;
    let mut z_err = 0.0f64;
    for inst in tiny_instances() {
        let kernel = inst.kernel().unwrap();
        let pair = principal_eigenpair(&kernel, &EigenOptions::default()).unwrap();
        let chain = DoobChain::new(&kernel, &pair).unwrap();
        for _ in 0..1000 {
            let heights = (0..=inst.n)
                .map(|_| rng.random_range(-inst.s_max..=inst.s_max))
                .collect();
            let path = InterfacePath {
                n: inst.n,
                s_max: inst.s_max,
                heights,
                seed: SEED,
                stream: 0,
            };
            let w = path_log_weight(&path, &pair, &kernel, &chain).unwrap();
            weight_err = weight_err.max(w.discrepancy());
        }
        let g = enumerate_gibbs(&inst, &pair).unwrap();
        let lambda_n = (inst.n as f64 * pair.log_lambda).exp();
        z_err = z_err.max((g.z - lambda_n).abs() / lambda_n);
    }
    let sampled = TinyInstance::<f64>::new(4, 5, IncrementDistribution::double_geometric(1.0).unwrap())
        .unwrap();
    let report = oracle_check(&sampled, 10_000_000, SEED).unwrap();
    let tv = report.tv.unwrap();
    let elapsed = start.elapsed();
    verdict(
        4,
        "Gibbs and Markov weights, Z = lambda^N, sampler TV at 1e7 draws",
        weight_err < 1e-8 && z_err < 1e-8 && tv.passed && elapsed <= Duration::from_secs(120),
        format!(
            "max log-weight gap {weight_err:.2e}, max Z rel err {z_err:.2e}, \
             TV {:.5} vs bound {:.5} (noise mean {:.5}, sd {:.2e}), {:.1}s",
            tv.tv_distance,
            tv.threshold,
            tv.noise.mean,
            tv.noise.sd,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_fluctuation_scale() {
    let r = &study().report;
    let target = r.sigma / 2.0;
    let z_max = Thresholds::default().z_max;
    let tail = &r.path_stats[r.path_stats.len() - 2..];
    let ok = tail
        .iter()
        .all(|p| p.paths >= 10_000 && p.var_s0_over_sqrt_n.z_score(target) < z_max);
    verdict(
        5,
        "Var(s_0)/sqrt(N) within 3 SE of sigma/2 at the two largest N",
        ok,
        tail.iter()
            .map(|p| {
                format!(
                    "N={}: {:.5} +- {:.5} vs {target:.5} ({:.1} SE)",
                    p.n,
                    p.var_s0_over_sqrt_n.value,
                    p.var_s0_over_sqrt_n.se,
                    p.var_s0_over_sqrt_n.z_score(target)
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    );
}

#[test]
fn criterion_06_ou_limit() {
    let r = &study().report;
    let lags: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let validation = validate_continuum_limit(&ContinuumLimit::reference(r.sigma), &lags);
    let z_max = Thresholds::default().z_max;
    let p = r.path_stats.last().unwrap();
    let mut worst = 0.0f64;
    for l in p.lags.iter().filter(|l| l.t > 0.05 && l.t < 0.95) {
        worst = worst.max(l.covariance.z_score(ou_reference(r.sigma, l.t).covariance));
    }
    let half = p.lags.iter().find(|l| (l.t - 0.5).abs() < 1e-12).unwrap();
    let kurt_z = half.excess_kurtosis.z_score(0.0);
    verdict(
        6,
        "covariance within 3 SE of (sigma/2)exp(-sigma t), kurtosis of S(1/2) within 3 SE of 0",
        validation.passed && worst < z_max && kurt_z < z_max,
        format!(
            "reference validated: {} (max err {:.1e}); N={}: covariance {:?} vs {:?}, \
             worst {worst:.1} SE; kurtosis {:.4} +- {:.4}",
            validation.passed,
            validation
                .lambda_rel_error
                .max(validation.variance_rel_error)
                .max(validation.covariance_error),
            p.n,
            p.lags.iter().map(|l| format!("{:.4}", l.covariance.value)).collect::<Vec<_>>(),
            p.lags
                .iter()
                .map(|l| format!("{:.4}", ou_reference(r.sigma, l.t).covariance))
                .collect::<Vec<_>>(),
            half.excess_kurtosis.value,
            half.excess_kurtosis.se
        ),
    );
}

#[test]
fn criterion_07_tightness() {
    let r = &study().report;
    let sups: Vec<f64> = r.path_stats.iter().map(|p| p.tightness_sup).collect();
    let hi = sups.iter().copied().fold(f64::MIN, f64::max);
    let lo = sups.iter().copied().fold(f64::MAX, f64::min);
    verdict(
        7,
        "sup_t M4(t)/t^1.5 varies by less than a factor 2 across the sweep",
        hi / lo < Thresholds::default().tightness_factor && lo > 0.0,
        format!(
            "sup statistics {:?}, ratio {:.3}",
            sups.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            hi / lo
        ),
    );
}

#[test]
fn criterion_08_dirichlet_bound() {
    let records = &study().report.lambda.records;
    let th = Thresholds::default();
    let scaled: Vec<f64> = records.iter().map(|r| r.dirichlet_sqrt_n).collect();
    let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
    let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
    let split = records.iter().map(|r| r.split_error).fold(0.0, f64::max);
    verdict(
        8,
        "Dirichlet form times sqrt(N) bounded, splitting identity to 1e-10",
        hi / lo <= th.dirichlet_factor && split < th.split_abs,
        format!(
            "D*sqrt(N) {:?}, max split error {split:.2e}",
            scaled.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_09_variational_sandwich() {
    let records = &study().report.lambda.records;
    let ok = records
        .iter()
        .all(|r| r.variational.quotient <= r.lambda && r.variational.quotient >= r.variational.envelope);
    verdict(
        9,
        "envelope <= Gaussian trial quotient <= lambda_N",
        ok,
        records
            .iter()
            .map(|r| {
                format!(
                    "N={}: {:.7} <= {:.7} <= {:.7}",
                    r.n, r.variational.envelope, r.variational.quotient, r.lambda
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    );
}

fn random_kernel(rng: &mut ChaCha8Rng) -> TruncatedKernel<f64> {
    let radius = rng.random_range(1..=4i64);
    let mut weights: Vec<f64> = (0..=radius).map(|_| rng.random_range(0.05..1.0)).collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    weights.iter_mut().for_each(|w| *w /= total);
    let pmf: BTreeMap<i64, f64> = (-radius..=radius)
        .map(|eta| (eta, weights[eta.unsigned_abs() as usize]))
        .collect();
    let dist = IncrementDistribution::custom(pmf).unwrap();
    let n = rng.random_range(1..=400u64);
    let s_max = rng.random_range(2..=60i64);
    TruncatedKernel::build(n, &dist, s_max).unwrap()
}

#[test]
fn criterion_10_cross_oracle_eigen() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lambda_err = 0.0f64;
    let mut h_err = 0.0f64;
    for _ in 0..20 {
        let kernel = random_kernel(&mut rng);
        let power = principal_eigenpair(&kernel, &EigenOptions::default()).unwrap();
        let dense = dense_eigen_oracle(&kernel).unwrap();
        lambda_err = lambda_err.max((power.lambda - dense.lambda).abs());
        let d2: f64 = power.h.iter().zip(&dense.h).map(|(a, b)| (a - b) * (a - b)).sum();
        h_err = h_err.max(d2.sqrt());
    }
    verdict(
        10,
        "power iteration vs dense oracle on 20 random kernels",
        lambda_err <= 1e-10 && h_err <= 1e-8,
        format!("max |dlambda| {lambda_err:.2e}, max |dh|_2 {h_err:.2e}"),
    );
}
