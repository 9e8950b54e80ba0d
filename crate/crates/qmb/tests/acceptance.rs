//! Acceptance suite: the project's exit criteria, one test per criterion.
//! Each test prints a `ACCEPTANCE <name>: PASS` line with its observed
//! margins (visible with `cargo test -- --nocapture`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qmb::blanket::{greedy_blanket, separable_reconstruction, measure_prepare_certificate};
use qmb::channel::{
    channel_of_choi, choi_of_channel, omega_factor, random_kraus_channel, ProjectiveMeasurement,
};
use qmb::experiments::{
    analytic_examples_check, appendix_b_check, appendix_b_choi, appendix_b_lambda2,
    spin_chain_choi, SpinChainConfig,
};
use qmb::linalg::{self, identity, max_abs_diff, trace_norm};
use qmb::optim::{unitary_from_params, OptimizerConfig};
use qmb::state::{random_state, Region};

const SEED: u64 = 0xACC3_97ED;

fn accept_optimizer() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 32,
        max_iters: 150,
        simplex_tol: 1e-9,
        seed: SEED,
    }
}

#[test]
fn criterion_strong_subadditivity() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 1);
    let mut min_cmi = f64::INFINITY;
    for _ in 0..200 {
        let s = random_state(&[2, 2, 2, 2], &mut rng);
        let cmi = s
            .conditional_mutual_information(
                &Region::single(0),
                &Region::single(1),
                &Region::new(vec![2, 3]).unwrap(),
            )
            .unwrap();
        min_cmi = min_cmi.min(cmi);
        assert!(cmi >= -1e-9, "SSA violated: {cmi}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s, budget 30s");
    println!("ACCEPTANCE strong-subadditivity: PASS (200/200, min CMI {min_cmi:.3e} bits, {elapsed:.1}s)");
}

#[test]
fn criterion_chain_rule() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 2);
    let mut max_res: f64 = 0.0;
    for _ in 0..100 {
        let s = random_state(&[2, 2, 2, 2], &mut rng);
        let res = s
            .chain_rule_check(
                &Region::single(0),
                &[Region::single(1), Region::single(2), Region::single(3)],
            )
            .unwrap();
        max_res = max_res.max(res);
        assert!(res <= 1e-9, "chain rule residual {res}");
    }
    println!("ACCEPTANCE chain-rule: PASS (100/100, max residual {max_res:.3e} bits)");
}

#[test]
fn criterion_separable_reconstruction() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 3);
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..200 {
        let s = random_state(&[2, 2, 2], &mut rng);
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m_q = ProjectiveMeasurement::from_basis(
            Region::single(2),
            vec![2],
            unitary_from_params(&theta, 2),
        )
        .unwrap();
        let rec =
            separable_reconstruction(&s, &Region::single(0), &Region::single(1), &[m_q]).unwrap();
        let excess = rec.trace_distance - rec.bound;
        max_excess = max_excess.max(excess);
        assert!(
            excess <= 1e-9,
            "distance {} exceeds bound {}",
            rec.trace_distance,
            rec.bound
        );
    }
    println!(
        "ACCEPTANCE separable-reconstruction: PASS (200/200, max distance-bound gap {max_excess:.3e})"
    );
}

#[test]
fn criterion_greedy_bottleneck_spin_chain() {
    let opt = accept_optimizer();
    let chain = SpinChainConfig::default(); // n = 8, g = -1.05, h = 0.5
    for &t in &[0.5, 1.5, 3.0] {
        let start = Instant::now();
        let choi = spin_chain_choi(&chain.with_t(t)).unwrap();
        for q in 1..=7usize {
            let report = greedy_blanket(choi.state(), &Region::single(0), 1, q, &opt).unwrap();
            let bound = report.entropy_a_bits / (1 + q) as f64;
            let bottleneck = report.bottleneck_bits();
            assert!(
                bottleneck <= bound + 1e-3,
                "t={t} q={q}: bottleneck {bottleneck:.6} > S(A)/(1+q) = {bound:.6}"
            );
            let sum = report.sum_step_bits();
            assert!(
                sum <= report.entropy_a_bits + 1e-6,
                "t={t} q={q}: step sum {sum:.9} > S(A) = {:.9}",
                report.entropy_a_bits
            );
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 1800.0, "t={t} took {elapsed:.0}s, budget 30 min");
        println!("ACCEPTANCE greedy-bottleneck-spin-chain t={t}: PASS (q=1..7, {elapsed:.1}s)");
    }
}

#[test]
fn criterion_appendix_b() {
    let report = appendix_b_check(201).unwrap();
    assert!(
        report.window_contiguous && report.window_within_resolution,
        "window {:?} vs expected {:?}",
        report.positive_window_detected,
        report.expected
    );
    assert!((report.expected[0] - 0.146_446_609_406_726).abs() < 1e-12);
    assert!((report.expected[1] - 0.853_553_390_593_274).abs() < 1e-12);
    for (i, &b) in report.boundary_eigenvalue_abs.iter().enumerate() {
        assert!(b <= 1e-8, "boundary eigenvalue {i}: {b:.3e}");
    }
    assert!(
        report.max_marginal_dev <= 1e-10,
        "marginal deviation {:.3e}",
        report.max_marginal_dev
    );
    assert!(
        report.max_trace_norm_identity_dev <= 1e-12,
        "trace-norm identity deviation {:.3e}",
        report.max_trace_norm_identity_dev
    );
    // spot check away from the grid: ‖ρ+ − ρ−‖₁ = 2|2p−1|
    let lam2 = appendix_b_lambda2(0.6).unwrap();
    let d = trace_norm(&(&lam2.preparations()[0] - &lam2.preparations()[1])).unwrap();
    assert!((d - 0.4).abs() < 1e-12);
    // non-positive outside the window
    let min = appendix_b_choi(0.9).unwrap();
    assert!(qmb::linalg::eigh(min.rho()).unwrap().eigenvalues[0] < 0.0);
    println!(
        "ACCEPTANCE appendix-b: PASS (window [{:.6}, {:.6}], marginal dev {:.1e}, boundary |λ| {:.1e}/{:.1e})",
        report.positive_window_detected[0],
        report.positive_window_detected[1],
        report.max_marginal_dev,
        report.boundary_eigenvalue_abs[0],
        report.boundary_eigenvalue_abs[1]
    );
}

#[test]
fn criterion_analytic_examples() {
    let opt = OptimizerConfig {
        restarts: 8,
        max_iters: 200,
        simplex_tol: 1e-10,
        seed: SEED ^ 4,
    };
    let report = analytic_examples_check(&opt).unwrap();
    for check in &report.checks {
        assert!(
            check.pass,
            "{}: max distance {:.3e} over threshold {:.1e} ({})",
            check.name, check.max_distance, check.threshold, check.detail
        );
        // the exact channels must hit the acceptance threshold of 1e-6
        if check.name != "haar-isometry" {
            assert!(check.max_distance <= 1e-6);
        }
    }
    let detail: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{} {:.1e}", c.name, c.max_distance))
        .collect();
    println!("ACCEPTANCE analytic-examples: PASS ({})", detail.join(", "));
}

#[test]
fn criterion_choi_round_trip() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 5);
    let mut max_rt: f64 = 0.0;
    let mut max_marg: f64 = 0.0;
    for _ in 0..100 {
        let ch = random_kraus_channel(2, vec![2, 2], 2, &mut rng);
        let choi = choi_of_channel(&ch).unwrap();
        let marg = choi.state().partial_trace(&Region::single(0)).unwrap();
        let marg_dev = max_abs_diff(marg.rho(), &identity(2).unscale(2.0));
        max_marg = max_marg.max(marg_dev);
        assert!(marg_dev <= 1e-9, "Choi marginal deviation {marg_dev:.3e}");

        let tau = random_state(&[2], &mut rng);
        let direct = ch.apply(&tau).unwrap();
        let via = channel_of_choi(&choi, &tau).unwrap();
        let rt = max_abs_diff(direct.rho(), via.rho());
        max_rt = max_rt.max(rt);
        assert!(rt <= 1e-12, "round-trip deviation {rt:.3e}");
    }
    println!(
        "ACCEPTANCE choi-round-trip: PASS (100/100, max round-trip {max_rt:.1e}, max marginal {max_marg:.1e})"
    );
}

#[test]
fn criterion_measure_prepare_certificate() {
    let opt = accept_optimizer();
    let choi = spin_chain_choi(&SpinChainConfig::default().with_t(1.0)).unwrap();
    let report = greedy_blanket(choi.state(), &Region::single(0), 1, 3, &opt).unwrap();
    let cert = measure_prepare_certificate(
        &choi,
        &report.q_padded,
        &report.core_measurements(),
        1,
        500,
        &opt,
    )
    .unwrap();
    assert_eq!(cert.rows.len(), 8 - report.q_padded.len());
    assert!(cert.povm_spread <= 1e-9, "POVM spread {:.3e}", cert.povm_spread);
    for row in &cert.rows {
        assert!(
            row.max_sampled_distance <= row.alpha_bound + 1e-3,
            "R={:?}: distance {:.6} > d_A sqrt(2 ln2 α) = {:.6}",
            row.region.indices(),
            row.max_sampled_distance,
            row.alpha_bound
        );
        assert!(
            row.max_sampled_distance <= row.apriori_bound,
            "R={:?}: distance {:.6} > a-priori bound {:.6}",
            row.region.indices(),
            row.max_sampled_distance,
            row.apriori_bound
        );
    }
    let worst = cert.max_distance();
    println!(
        "ACCEPTANCE channel-certificate: PASS (Q={:?}, alpha_Q={:.4e} bits, worst distance {:.4e} <= {:.4e} and {:.4e})",
        cert.q_region.indices(),
        cert.alpha_q_bits,
        worst,
        cert.rows[0].alpha_bound,
        cert.rows[0].apriori_bound
    );
}

#[test]
fn criterion_omega_factor() {
    assert_eq!(omega_factor(2, 2), 3.0);
    for d in [1usize, 2, 3, 17, 1024] {
        assert_eq!(omega_factor(1, d), 1.0);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 6);
    for _ in 0..100 {
        let d_a = rng.random_range(1..128usize);
        let d_r = rng.random_range(1..4096usize);
        let (a, r) = (d_a as f64, d_r as f64);
        let brute = [
            a * a,
            4.0 * a.powf(1.5),
            4.0 * r.powf(1.5),
            (153.0 * a * r).sqrt(),
            2.0 * r - 1.0,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        assert_eq!(omega_factor(d_a, d_r), brute);
    }
    println!("ACCEPTANCE omega-factor: PASS ((2,2)=3, (1,d)=1, 100/100 brute-force matches)");
}

#[test]
fn blanket_reports_are_deterministic() {
    // identical seeds must produce bit-identical reports
    let opt = OptimizerConfig {
        restarts: 4,
        max_iters: 80,
        simplex_tol: 1e-9,
        seed: SEED ^ 7,
    };
    let choi = spin_chain_choi(&SpinChainConfig {
        n_total: 4,
        ..SpinChainConfig::default()
    })
    .unwrap();
    let r1 = greedy_blanket(choi.state(), &Region::single(0), 1, 2, &opt).unwrap();
    let r2 = greedy_blanket(choi.state(), &Region::single(0), 1, 2, &opt).unwrap();
    assert_eq!(r1.to_json().to_string(), r2.to_json().to_string());
    println!("ACCEPTANCE determinism: PASS");
}

#[test]
fn locc_distance_stays_below_trace_norm() {
    // sanity companion to the certificate: the heuristic one-way LOCC
    // distance never exceeds the trace distance
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 8);
    for _ in 0..5 {
        let s1 = random_state(&[2, 2], &mut rng);
        let s2 = random_state(&[2, 2], &mut rng);
        let tn = trace_norm(&(s1.rho() - s2.rho())).unwrap();
        let locc = qmb::channel::locc_arrow_distance(&s1, &s2, 4, SEED ^ 9).unwrap();
        assert!(locc <= tn + 1e-9);
        assert!(locc >= 0.0);
        let _ = linalg::trace_of(s1.rho());
    }
    println!("ACCEPTANCE locc-sanity: PASS");
}
