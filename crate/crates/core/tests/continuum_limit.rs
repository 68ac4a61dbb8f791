//! The sweep converges to the ground-state diffusion of the lattice kernel,
//! whose potential strength is `KERNEL_COUPLING`.

use sos_lab::increments::IncrementDistribution;
use sos_lab::oracle::{validate_continuum_limit, ContinuumLimit};
use sos_lab::scaling_analysis::{scaling_study, ScalingReport, StudyConfig};

fn report(dist: IncrementDistribution<f64>) -> ScalingReport {
    let config = StudyConfig {
        n_list: vec![4_000, 16_000, 64_000],
        paths: 20_000,
        seed: 99,
        ..StudyConfig::default()
    };
    scaling_study(&dist, &config).unwrap()
}

fn check(report: &ScalingReport) {
    let limit = ContinuumLimit::kernel(report.sigma);
    assert!(validate_continuum_limit(&limit, &[0.0, 0.3, 0.7]).passed);

    let lambda = &report.lambda;
    let rel = (lambda.extrapolated - limit.lambda_limit()).abs() / limit.lambda_limit();
    assert!(rel < 2e-3, "lambda^sqrt(N) extrapolated {} vs {}", lambda.extrapolated, limit.lambda_limit());
    let gap = (lambda.gap_extrapolated - limit.gap_constant()).abs() / limit.gap_constant();
    assert!(gap < 5e-3, "gap {} vs {}", lambda.gap_extrapolated, limit.gap_constant());

    let ef = &report.eigenfunction;
    assert!(ef.l2_kernel.windows(2).all(|w| w[1] < w[0]), "{:?}", ef.l2_kernel);
    assert!(*ef.l2_kernel.last().unwrap() < 0.02, "{:?}", ef.l2_kernel);
    let var = *ef.step_measure_variance.last().unwrap();
    assert!((var - limit.stationary_variance()).abs() / limit.stationary_variance() < 0.01);

    let p = report.path_stats.last().unwrap();
    assert!(p.var_s0_over_sqrt_n.z_score(limit.stationary_variance()) < 4.0);
    for l in &p.lags {
        let z = l.covariance.z_score(limit.covariance(l.t));
        assert!(z < 4.0, "t={} cov {:?} vs {}", l.t, l.covariance, limit.covariance(l.t));
    }
}

#[test]
fn double_geometric_matches_kernel_diffusion() {
    check(&report(IncrementDistribution::double_geometric(1.0).unwrap()));
}

#[test]
fn lazy_walk_matches_kernel_diffusion() {
    check(&report(IncrementDistribution::lazy_simple_walk(0.5).unwrap()));
}

#[test]
fn small_time_increments_follow_the_free_walk() {
    let r = report(IncrementDistribution::double_geometric(1.0).unwrap());
    for p in &r.path_stats {
        let m = &p.fourth_moments[0];
        assert!(m.m4.z_score(m.free_walk) < 4.0 || (m.m4.value / m.free_walk - 1.0).abs() < 0.1,
            "N={} t={} m4 {:?} free {}", p.n, m.t, m.m4, m.free_walk);
    }
}
