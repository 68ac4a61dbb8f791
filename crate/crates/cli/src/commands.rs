use serde::Serialize;
use sos_lab::chain_sampler::{rescale_path, DoobChain};
use sos_lab::export::{
    eigenpair_csv, path_stats_csv, paths_csv, scaling_csv, trajectories_csv, EigenHeader,
};
use sos_lab::oracle::{oracle_check, ContinuumLimit, TinyInstance};
use sos_lab::scaling_analysis::{
    eigen_record, scaling_study, sweep_point, tightness_grid, EigenRecord, ScalingReport,
    StudyConfig, SweepOptions,
};
use sos_lab::selfcheck::run_selfcheck;
use sos_lab::transfer_operator::{solve, EigenOptions, Eigenpair};
use sos_lab::{IncrementDistribution, Window};

use crate::config::{Command, Resolved};
use crate::failure::Failure;
use crate::output::Output;
use crate::svg::{line_chart, Series};

pub fn run(config: &Resolved) -> Result<(), Failure> {
    let dist = IncrementDistribution::<f64>::new(config.dist.clone())?;
    let mut out = Output::new(config)?;
    match config.command {
        Command::Eigen => eigen(config, &dist, &mut out)?,
        Command::Sample => sample(config, &dist, &mut out)?,
        Command::OracleCheck => oracle(config, &dist, &mut out)?,
        Command::ScalingStudy => scaling(config, &dist, &mut out)?,
        Command::Validate => validate(config, &dist, &mut out)?,
    }
    out.finish(config)
}

fn window(config: &Resolved) -> Window {
    config.s_max.map_or(Window::Auto, Window::Fixed)
}

fn eigen_options(config: &Resolved) -> EigenOptions<f64> {
    EigenOptions {
        tol: config.tol,
        max_iter: config.max_iter,
    }
}

fn eigenfunction_chart(pair: &Eigenpair<f64>, sigma: f64) -> String {
    let n = pair.n as f64;
    let delta = n.powf(-0.25);
    let eighth = n.powf(0.125);
    let rescaled: Vec<(f64, f64)> = pair
        .heights()
        .map(|(s, h)| (s as f64 * delta, eighth * h))
        .collect();
    let curve = |limit: ContinuumLimit| -> Vec<(f64, f64)> {
        rescaled.iter().map(|&(r, _)| (r, limit.ground_state(r))).collect()
    };
    line_chart(
        &format!("rescaled eigenfunction, N = {}", pair.n),
        "r",
        "h_N(r)",
        false,
        &[
            Series::solid("N^(1/8) h(r N^(1/4))", rescaled.clone()),
            Series::dashed("g, drift -sigma", curve(ContinuumLimit::reference(sigma))),
            Series::dashed("g, kernel potential", curve(ContinuumLimit::kernel(sigma))),
        ],
    )
}

#[derive(Serialize)]
struct EigenArtifact<'a> {
    header: EigenHeader,
    diagnostics: &'a EigenRecord,
}

fn eigen(config: &Resolved, dist: &IncrementDistribution<f64>, out: &mut Output) -> Result<(), Failure> {
    let (_, pair) = solve(config.n, dist, window(config), &eigen_options(config))?;
    let record = eigen_record(&pair, dist, None);
    println!(
        "N={} S_max={} lambda={:.15} lambda^sqrt(N)={:.9} residual={:.2e} iterations={}",
        pair.n, pair.s_max, pair.lambda, record.lambda_pow_sqrt_n, pair.residual, pair.iterations
    );
    out.csv(config, "eigenpair.csv", eigenpair_csv(&pair)?)?;
    out.json(
        config,
        "eigenpair.json",
        &EigenArtifact {
            header: EigenHeader::new(&pair, dist.kind().label()),
            diagnostics: &record,
        },
    )?;
    out.svg(config, "eigenfunction.svg", eigenfunction_chart(&pair, dist.sigma()));
    Ok(())
}

#[derive(Serialize)]
struct SampleSummary {
    n: u64,
    s_max: i64,
    paths: u64,
    seed: u64,
    max_row_defect: f64,
    t_grid: Vec<f64>,
}

fn sample(config: &Resolved, dist: &IncrementDistribution<f64>, out: &mut Output) -> Result<(), Failure> {
    let (kernel, pair) = solve(config.n, dist, window(config), &eigen_options(config))?;
    let chain = DoobChain::new(&kernel, &pair)?;
    let paths = chain.sample_ensemble(config.paths as usize, config.n as usize, config.seed);
    let trajectories = paths
        .iter()
        .map(|p| rescale_path(p, &config.t_grid))
        .collect::<Result<Vec<_>, _>>()?;
    println!(
        "N={} S_max={} paths={} seed={} max_row_defect={:.2e}",
        config.n,
        pair.s_max,
        paths.len(),
        config.seed,
        chain.max_defect()
    );
    out.csv(config, "paths.csv", paths_csv(&paths)?)?;
    out.csv(config, "trajectories.csv", trajectories_csv(&trajectories)?)?;
    out.json(
        config,
        "sample.json",
        &SampleSummary {
            n: config.n,
            s_max: pair.s_max,
            paths: config.paths,
            seed: config.seed,
            max_row_defect: chain.max_defect(),
            t_grid: config.t_grid.clone(),
        },
    )?;
    let fine: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let shown: Vec<Series> = paths
        .iter()
        .take(5)
        .map(|p| {
            let tr = rescale_path(p, &fine).expect("full path covers [0, 1]");
            Series::solid(
                &format!("stream {}", p.stream),
                tr.t_grid.iter().copied().zip(tr.values.iter().copied()).collect(),
            )
        })
        .collect();
    out.svg(
        config,
        "trajectories.svg",
        line_chart(&format!("rescaled paths, N = {}", config.n), "t", "S_N(t)", false, &shown),
    );
    Ok(())
}

fn oracle(config: &Resolved, dist: &IncrementDistribution<f64>, out: &mut Output) -> Result<(), Failure> {
    let s_max = config.s_max.unwrap_or(5);
    let inst = TinyInstance::new(config.n, s_max, dist.clone())?;
    let report = oracle_check(&inst, config.paths, config.seed)?;
    println!(
        "N={} S_max={} Z={:.15e} lambda^N={:.15e} rel_err={:.2e} dense_dlambda={:.2e} tv={}",
        report.n,
        report.s_max,
        report.z,
        report.lambda_pow_n,
        report.z_rel_error,
        report.lambda_abs_diff,
        report
            .tv
            .as_ref()
            .map_or("skipped".into(), |t| format!("{:.5} (bound {:.5})", t.tv_distance, t.threshold))
    );
    out.json(config, "oracle.json", &report)?;
    let mid = &report.marginals[report.marginals.len() / 2];
    let heights = |v: &[f64]| -> Vec<(f64, f64)> {
        v.iter().enumerate().map(|(i, &p)| ((i as i64 - s_max) as f64, p)).collect()
    };
    let first = &report.marginals[0];
    out.svg(
        config,
        "marginals.svg",
        line_chart(
            "single-site marginals",
            "s",
            "probability",
            false,
            &[Series::solid("x = 0", heights(first)), Series::dashed("x = N/2", heights(mid))],
        ),
    );
    Ok(())
}

fn scaling_charts(report: &ScalingReport) -> Vec<(&'static str, String)> {
    let recs = &report.lambda.records;
    let ns: Vec<f64> = recs.iter().map(|r| r.n as f64).collect();
    let flat = |y: f64| ns.iter().map(|&n| (n, y)).collect::<Vec<_>>();
    let mut charts = vec![(
        "lambda_scaling.svg",
        line_chart(
            "lambda_N^sqrt(N)",
            "N",
            "lambda^sqrt(N)",
            true,
            &[
                Series::solid("computed", recs.iter().map(|r| (r.n as f64, r.lambda_pow_sqrt_n)).collect()),
                Series::dashed("exp(-sigma/2)", flat(report.lambda.reference_limit)),
                Series::dashed("kernel limit", flat(report.lambda.kernel_limit)),
            ],
        ),
    )];
    if let Some(p) = report.path_stats.last() {
        let ref_curve = report.covariance_reference.iter().map(|c| (c.t, c.reference)).collect();
        let ker_curve = report.covariance_reference.iter().map(|c| (c.t, c.kernel)).collect();
        charts.push((
            "covariance.svg",
            line_chart(
                &format!("Cov(S(0), S(t)), N = {}", p.n),
                "t",
                "covariance",
                false,
                &[
                    Series::solid("empirical", p.lags.iter().map(|l| (l.t, l.covariance.value)).collect()),
                    Series::dashed("(sigma/2) exp(-sigma t)", ref_curve),
                    Series::dashed("kernel OU", ker_curve),
                ],
            ),
        ));
    }
    charts
}

fn scaling(config: &Resolved, dist: &IncrementDistribution<f64>, out: &mut Output) -> Result<(), Failure> {
    let study = StudyConfig {
        n_list: config.n_list.clone(),
        sweep: SweepOptions {
            window: window(config),
            tol: config.tol,
            max_iter: config.max_iter,
            second_eigenvalue: true,
        },
        paths: config.paths as usize,
        seed: config.seed,
        lags: config.t_grid.clone(),
        tightness_t: tightness_grid(),
    };
    let report = scaling_study(dist, &study)?;
    for r in report.rows() {
        println!(
            "N={} S_max={} lambda={:.12} lambda^sqrt(N)={:.6} L2={:.4} D*sqrt(N)={:.4} var_s0/sqrt(N)={} tightness={}",
            r.n,
            r.s_max,
            r.lambda,
            r.lambda_pow_sqrt_n,
            r.eig_l2_dist,
            r.dirichlet_sqrt_n,
            r.var_s0_over_sqrt_n.map_or("-".into(), |v| format!("{v:.4}")),
            r.tightness_sup.map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
    println!(
        "extrapolated lambda^sqrt(N)={:.6} (exp(-sigma/2)={:.6}, kernel limit={:.6})",
        report.lambda.extrapolated, report.lambda.reference_limit, report.lambda.kernel_limit
    );
    out.json(config, "scaling.json", &report)?;
    out.csv(config, "scaling.csv", scaling_csv(&report)?)?;
    if !report.path_stats.is_empty() {
        out.csv(config, "path_stats.csv", path_stats_csv(&report)?)?;
    }
    if config.wants(crate::config::Format::Svg) {
        for (name, svg) in scaling_charts(&report) {
            out.svg(config, name, svg);
        }
        if let Some(&n) = config.n_list.last() {
            match sweep_point(n, dist, &SweepOptions { second_eigenvalue: false, ..study.sweep.clone() }) {
                Ok((_, pair, _)) => out.svg(config, "eigenfunction.svg", eigenfunction_chart(&pair, dist.sigma())),
                Err(e) => eprintln!("warning: eigenfunction plot skipped: {e}"),
            }
        }
    }
    Ok(())
}

fn validate(config: &Resolved, dist: &IncrementDistribution<f64>, out: &mut Output) -> Result<(), Failure> {
    let report = run_selfcheck(dist, config.seed)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    out.json(config, "validate.json", &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::check("invariant suite reported failures"))
    }
}
