//! Self-contained verification suites, shared between the test harness and
//! the `verify` CLI command: strong subadditivity, the chain rule, Pinsker's
//! inequality, Choi duality round trips, the compatibility counterexample,
//! and the analytic channel examples.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{channel_of_choi, choi_of_channel, random_kraus_channel};
use crate::error::{Error, Result};
use crate::experiments::{analytic_examples_check, appendix_b_check};
use crate::linalg::{identity, max_abs_diff, trace_norm};
use crate::optim::OptimizerConfig;
use crate::state::{random_state, relative_entropy, MultipartiteState, Region};

/// One verifiable claim with its observed outcome.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const SUITES: &[&str] = &["ssa", "chain", "pinsker", "choi", "appendixb", "examples"];

/// Run one named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    match name {
        "ssa" => Ok(vec![suite_ssa(seed)]),
        "chain" => Ok(vec![suite_chain(seed)]),
        "pinsker" => Ok(vec![suite_pinsker(seed)]),
        "choi" => Ok(vec![suite_choi(seed)]),
        "appendixb" => Ok(vec![suite_appendixb()?]),
        "examples" => Ok(vec![suite_examples(seed)?]),
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s, seed)?);
            }
            Ok(all)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown suite '{other}' (expected one of ssa|chain|pinsker|choi|appendixb|examples|all)"
        ))),
    }
}

/// Strong subadditivity: conditional mutual information is nonnegative on
/// random full-rank states.
pub fn suite_ssa(seed: u64) -> SuiteReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut failures = 0usize;
    let trials = 200;
    for _ in 0..trials {
        let s = random_state(&[2, 2, 2, 2], &mut rng);
        let cmi = s
            .conditional_mutual_information(
                &Region::single(0),
                &Region::single(1),
                &Region::new(vec![2, 3]).unwrap(),
            )
            .expect("regions are valid");
        worst = worst.min(cmi);
        if cmi < -1e-9 {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "ssa".into(),
        checks: vec![Check::new(
            "cmi-nonnegative-200x4qubit",
            failures == 0,
            format!("{}/{trials} nonnegative, min CMI {worst:.3e} bits", trials - failures),
        )],
    }
}

/// The chain rule: total mutual information telescopes into conditional
/// mutual informations.
pub fn suite_chain(seed: u64) -> SuiteReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    let trials = 100;
    for _ in 0..trials {
        let s = random_state(&[2, 2, 2, 2], &mut rng);
        let res = s
            .chain_rule_check(
                &Region::single(0),
                &[Region::single(1), Region::single(2), Region::single(3)],
            )
            .expect("regions are valid");
        worst = worst.max(res);
        if res > 1e-9 {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "chain".into(),
        checks: vec![Check::new(
            "chain-rule-100x4qubit-3parts",
            failures == 0,
            format!("{}/{trials} within 1e-9, max residual {worst:.3e} bits", trials - failures),
        )],
    }
}

/// Pinsker's inequality and the relative-entropy identity for mutual
/// information.
pub fn suite_pinsker(seed: u64) -> SuiteReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let trials = 100;
    let mut pinsker_fail = 0usize;
    let mut identity_fail = 0usize;
    let mut self_fail = 0usize;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..trials {
        let rho = random_state(&[2, 2], &mut rng);
        let sigma = random_state(&[2, 2], &mut rng);
        let d = relative_entropy(&rho, &sigma).expect("same dims");
        let tn = trace_norm(&(rho.rho() - sigma.rho())).expect("square");
        let gap = d - tn * tn / (2.0 * std::f64::consts::LN_2);
        worst_gap = worst_gap.min(gap);
        if gap < -1e-9 {
            pinsker_fail += 1;
        }

        let mi = rho
            .mutual_information(&Region::single(0), &Region::single(1))
            .unwrap();
        let prod = MultipartiteState::tensor(
            &rho.partial_trace(&Region::single(0)).unwrap(),
            &rho.partial_trace(&Region::single(1)).unwrap(),
        );
        if (mi - relative_entropy(&rho, &prod).unwrap()).abs() > 1e-9 {
            identity_fail += 1;
        }
        if relative_entropy(&rho, &rho).unwrap().abs() > 1e-9 {
            self_fail += 1;
        }
    }
    SuiteReport {
        suite: "pinsker".into(),
        checks: vec![
            Check::new(
                "pinsker-lower-bound",
                pinsker_fail == 0,
                format!("{}/{trials} satisfied, min slack {worst_gap:.3e}", trials - pinsker_fail),
            ),
            Check::new(
                "mutual-information-identity",
                identity_fail == 0,
                format!("{}/{trials} within 1e-9", trials - identity_fail),
            ),
            Check::new(
                "self-relative-entropy-zero",
                self_fail == 0,
                format!("{}/{trials} within 1e-9", trials - self_fail),
            ),
        ],
    }
}

/// Choi duality: round trips through the Choi state reproduce the channel,
/// and the reference marginal is maximally mixed.
pub fn suite_choi(seed: u64) -> SuiteReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let trials = 100;
    let mut roundtrip_fail = 0usize;
    let mut marginal_fail = 0usize;
    let mut worst_rt: f64 = 0.0;
    let mut worst_marg: f64 = 0.0;
    for _ in 0..trials {
        let ch = random_kraus_channel(2, vec![2, 2], 2, &mut rng);
        let choi = choi_of_channel(&ch).expect("valid channel");
        let marg = choi
            .state()
            .partial_trace(&Region::single(0))
            .unwrap();
        let dev = max_abs_diff(marg.rho(), &identity(2).unscale(2.0));
        worst_marg = worst_marg.max(dev);
        if dev > 1e-9 {
            marginal_fail += 1;
        }
        let tau = random_state(&[2], &mut rng);
        let direct = ch.apply(&tau).unwrap();
        let via = channel_of_choi(&choi, &tau).unwrap();
        let rt = max_abs_diff(direct.rho(), via.rho());
        worst_rt = worst_rt.max(rt);
        if rt > 1e-12 {
            roundtrip_fail += 1;
        }
    }
    SuiteReport {
        suite: "choi".into(),
        checks: vec![
            Check::new(
                "round-trip-100-random-channels",
                roundtrip_fail == 0,
                format!("{}/{trials} within 1e-12, max dev {worst_rt:.3e}", trials - roundtrip_fail),
            ),
            Check::new(
                "reference-marginal-maximally-mixed",
                marginal_fail == 0,
                format!("{}/{trials} within 1e-9, max dev {worst_marg:.3e}", trials - marginal_fail),
            ),
        ],
    }
}

/// The compatible-channel counterexample: positivity window, marginals, and
/// the incompatibility witness.
pub fn suite_appendixb() -> Result<SuiteReport> {
    let report = appendix_b_check(201)?;
    let window = report.positive_window_detected;
    Ok(SuiteReport {
        suite: "appendixb".into(),
        checks: vec![
            Check::new(
                "positivity-window",
                report.window_contiguous && report.window_within_resolution,
                format!(
                    "detected [{:.4}, {:.4}], expected [{:.4}, {:.4}]",
                    window[0], window[1], report.expected[0], report.expected[1]
                ),
            ),
            Check::new(
                "boundary-eigenvalues",
                report.boundary_eigenvalue_abs.iter().all(|&x| x <= 1e-8),
                format!(
                    "|λ_min| at endpoints: {:.2e}, {:.2e}",
                    report.boundary_eigenvalue_abs[0], report.boundary_eigenvalue_abs[1]
                ),
            ),
            Check::new(
                "marginals-match-channel-chois",
                report.marginals_match,
                format!("max deviation {:.3e}", report.max_marginal_dev),
            ),
            Check::new(
                "preparation-distance-identity",
                report.max_trace_norm_identity_dev <= 1e-12,
                format!("max |‖ρ+−ρ−‖₁ − 2|2p−1|| = {:.3e}", report.max_trace_norm_identity_dev),
            ),
            Check::new(
                "incompatibility-witness",
                report.incompatibility_witnessed,
                "ρ+ ≠ ρ− away from p = 1/2 inside the window".into(),
            ),
        ],
    })
}

/// The analytic channel examples and their zero-error claims.
pub fn suite_examples(seed: u64) -> Result<SuiteReport> {
    let opt = OptimizerConfig::default().with_seed(seed);
    let report = analytic_examples_check(&opt)?;
    Ok(SuiteReport {
        suite: "examples".into(),
        checks: report
            .checks
            .into_iter()
            .map(|c| {
                Check::new(
                    &c.name,
                    c.pass,
                    format!("max distance {:.3e} ({})", c.max_distance, c.detail),
                )
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for name in ["ssa", "chain", "pinsker", "choi"] {
            let reports = run_suite(name, 424242).unwrap();
            for r in &reports {
                assert!(r.all_pass(), "suite {name} failed: {:?}", r.checks);
            }
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("bogus", 1).is_err());
    }
}
