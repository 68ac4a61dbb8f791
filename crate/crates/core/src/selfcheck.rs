//! Fast invariant suite across every module.

use serde::Serialize;

use crate::chain_sampler::{path_log_weight, DoobChain, RngStream};
use crate::error::Result;
use crate::increments::IncrementDistribution;
use crate::oracle::{
    dense_eigen_oracle, enumerate_gibbs, ou_reference, validate_continuum_limit, ContinuumLimit,
    TinyInstance,
};
use crate::scaling_analysis::{richardson, sweep_point, SweepOptions};
use crate::transfer_operator::{principal_eigenpair, solve, EigenOptions, TruncatedKernel, Window};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run_selfcheck(dist: &IncrementDistribution<f64>, seed: u64) -> Result<SelfCheckReport> {
    let mut checks = Vec::new();

    let law = dist.n_step_table(16)?;
    let mass = law.total_mass();
    let var_err = (law.moment(2) - 16.0 * dist.variance()).abs();
    checks.push(check(
        "increments.n_step",
        (mass - 1.0).abs() < 1e-12 && var_err < 1e-8,
        format!("mass {mass:.15}, variance error {var_err:.2e}"),
    ));

    let (kernel, pair) = solve(2_000, dist, Window::Auto, &EigenOptions::default())?;
    let mut asym = 0.0f64;
    for i in 0..kernel.dim() {
        for j in 0..kernel.dim() {
            asym = asym.max((kernel.entry_ij(i, j) - kernel.entry_ij(j, i)).abs());
        }
    }
    checks.push(check("transfer_operator.symmetry", asym == 0.0, format!("max asymmetry {asym:e}")));
    let positive = pair.h.iter().all(|&x| x > 0.0);
    let even = (0..=pair.s_max).all(|s| (pair.h_at(s) - pair.h_at(-s)).abs() < 1e-12);
    checks.push(check(
        "transfer_operator.eigenpair",
        positive && even && pair.residual <= 1e-13 && pair.lambda < 1.0,
        format!("lambda {:.12}, residual {:.2e}, edge {:.2e}", pair.lambda, pair.residual, pair.edge_ratio()),
    ));

    let record = sweep_point(2_000, dist, &SweepOptions::default())?.2;
    checks.push(check(
        "transfer_operator.forms",
        record.split_error < 1e-10
            && record.variational.quotient <= record.lambda
            && record.variational.quotient >= record.variational.envelope,
        format!(
            "split error {:.2e}, {:.7} <= {:.7} <= {:.7}",
            record.split_error, record.variational.envelope, record.variational.quotient, record.lambda
        ),
    ));

    let chain = DoobChain::new(&kernel, &pair)?;
    let path = chain.sample_prefix(200, RngStream::new(seed, 0));
    let w = path_log_weight(&path, &pair, &kernel, &chain)?;
    checks.push(check(
        "chain_sampler.doob",
        chain.max_defect() < 1e-8 && w.discrepancy() < 1e-8,
        format!("max row defect {:.2e}, log-weight gap {:.2e}", chain.max_defect(), w.discrepancy()),
    ));

    let inst = TinyInstance::new(4, 3, dist.clone())?;
    let tiny_kernel = inst.kernel()?;
    let tiny = principal_eigenpair(&tiny_kernel, &EigenOptions::default())?;
    let gibbs = enumerate_gibbs(&inst, &tiny)?;
    let z_err = (gibbs.z - (4.0 * tiny.log_lambda).exp()).abs() / gibbs.z;
    checks.push(check("oracle.enumeration", z_err < 1e-10, format!("Z relative error {z_err:.2e}")));

    let k = TruncatedKernel::build(50, dist, 30)?;
    let a = principal_eigenpair(&k, &EigenOptions::default())?;
    let b = dense_eigen_oracle(&k)?;
    let dl = (a.lambda - b.lambda).abs();
    checks.push(check("oracle.dense", dl < 1e-10, format!("|dlambda| {dl:.2e}")));

    let sigma = dist.sigma();
    let v = validate_continuum_limit(&ContinuumLimit::reference(sigma), &[0.0, 0.5, 1.0]);
    let r0 = ou_reference(sigma, 0.0);
    checks.push(check(
        "oracle.ou_reference",
        v.passed && r0.variance == r0.covariance,
        format!("finite-difference errors {:.1e} {:.1e} {:.1e}", v.lambda_rel_error, v.variance_rel_error, v.covariance_error),
    ));

    let f = |n: u64| 0.3 + 0.8 / (n as f64).sqrt();
    let rich = (richardson(1_000, f(1_000), 4_000, f(4_000)) - 0.3).abs();
    checks.push(check("scaling_analysis.richardson", rich < 1e-12, format!("error {rich:.2e}")));

    let passed = checks.iter().all(|c| c.passed);
    Ok(SelfCheckReport { checks, passed })
}
