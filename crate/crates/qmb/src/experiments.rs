//! Concrete experiments: the mixed-field Ising chain channel and its blanket
//! sweep over evolution time and blanket size, four analytic channel
//! examples, and the compatible-channel counterexample family.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::blanket::{greedy_blanket, measure_prepare_certificate, BlanketReport};
use crate::channel::{
    choi_of_channel, ChoiState, KrausChannel, MeasureAndPrepareChannel, ProjectiveMeasurement,
};
use crate::error::{Error, Result};
use crate::linalg::{self, eigh, expm_hermitian, kron, trace_norm, CMatrix, CVector};
use crate::optim::OptimizerConfig;
use crate::state::{MultipartiteState, Region};

/// Exact diagonalization becomes unreasonable past this many sites.
pub const MAX_SITES: usize = 12;

/// Mixed-field Ising chain coupled to one extra qubit at site 0.
#[derive(Clone, Copy, Debug)]
pub struct SpinChainConfig {
    /// Total qubit count including the attached system qubit.
    pub n_total: usize,
    /// Transverse field coupling.
    pub g: f64,
    /// Longitudinal field coupling.
    pub h: f64,
    /// Evolution time.
    pub t: f64,
}

impl Default for SpinChainConfig {
    fn default() -> Self {
        Self {
            n_total: 8,
            g: -1.05,
            h: 0.5,
            t: 1.0,
        }
    }
}

impl SpinChainConfig {
    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_total < 2 {
            return Err(Error::InvalidConfig("need at least two sites".into()));
        }
        if self.n_total > MAX_SITES {
            return Err(Error::InvalidConfig(format!(
                "{} sites exceeds the hard cap of {MAX_SITES}",
                self.n_total
            )));
        }
        if self.t.is_nan() || self.t < 0.0 {
            return Err(Error::InvalidConfig("t must be >= 0".into()));
        }
        Ok(())
    }
}

/// `H = -Σ σ_z^i σ_z^{i+1} - g Σ σ_x^i - h Σ σ_z^i` with open boundary,
/// built by bit arithmetic on the computational basis (site 0 most
/// significant).
fn ising_matrix(n: usize, g: f64, h: f64) -> CMatrix {
    let dim = 1usize << n;
    let mut hm = CMatrix::zeros(dim, dim);
    let z_of = |x: usize, site: usize| -> f64 {
        if (x >> (n - 1 - site)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    for x in 0..dim {
        let mut diag = 0.0;
        for i in 0..n.saturating_sub(1) {
            diag -= z_of(x, i) * z_of(x, i + 1);
        }
        for i in 0..n {
            diag -= h * z_of(x, i);
        }
        hm[(x, x)] = Complex64::new(diag, 0.0);
        for i in 0..n {
            let y = x ^ (1 << (n - 1 - i));
            hm[(x, y)] += Complex64::new(-g, 0.0);
        }
    }
    hm
}

/// The joint system–environment Hamiltonian on `cfg.n_total` sites.
pub fn ising_hamiltonian(cfg: &SpinChainConfig) -> Result<CMatrix> {
    if cfg.n_total == 0 {
        return Err(Error::InvalidConfig("need at least one site".into()));
    }
    if cfg.n_total > MAX_SITES {
        return Err(Error::InvalidConfig(format!(
            "{} sites exceeds the hard cap of {MAX_SITES}",
            cfg.n_total
        )));
    }
    Ok(ising_matrix(cfg.n_total, cfg.g, cfg.h))
}

/// An isometric spin-chain channel together with ground-state diagnostics.
#[derive(Clone, Debug)]
pub struct SpinChainChannel {
    pub channel: KrausChannel,
    pub ground_energy: f64,
    /// Set when the environment ground state was degenerate and the
    /// lowest-index eigenvector was picked.
    pub ground_state_degenerate: bool,
}

/// The channel `ρ_A ↦ e^{-iHt} (ρ_A ⊗ |ψ0><ψ0|) e^{iHt}` from the attached
/// qubit to all `n_total` output qubits, with `|ψ0>` the ground state of the
/// chain restricted to the environment sites.
pub fn spin_chain_channel(cfg: &SpinChainConfig) -> Result<SpinChainChannel> {
    cfg.validate()?;
    let n = cfg.n_total;
    let d_env = 1usize << (n - 1);
    let h_env = ising_matrix(n - 1, cfg.g, cfg.h);
    let env_eig = eigh(&h_env)?;
    let ground_energy = env_eig.eigenvalues[0];
    let ground_state_degenerate =
        d_env > 1 && env_eig.eigenvalues[1] - env_eig.eigenvalues[0] < 1e-10;
    let psi0 = env_eig.eigenvectors.column(0).into_owned();

    let h_full = ising_matrix(n, cfg.g, cfg.h);
    let u = expm_hermitian(&h_full, Complex64::new(0.0, -cfg.t))?;

    let dim = 1usize << n;
    let mut k = CMatrix::zeros(dim, 2);
    for j in 0..2 {
        let block = u.columns(j * d_env, d_env);
        let col = block * &psi0;
        k.set_column(j, &col);
    }
    let labels = (1..=n).map(|i| format!("B{i}")).collect();
    let channel = KrausChannel::isometry(k, vec![2; n], labels)?;
    Ok(SpinChainChannel {
        channel,
        ground_energy,
        ground_state_degenerate,
    })
}

/// Choi state of the spin-chain channel at the configured time.
pub fn spin_chain_choi(cfg: &SpinChainConfig) -> Result<ChoiState> {
    choi_of_channel(&spin_chain_channel(cfg)?.channel)
}

fn computational_basis_vector(dim: usize, idx: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[idx] = Complex64::new(1.0, 0.0);
    v
}

/// The constant channel `ρ ↦ σ` to a fixed product state on `n` qubits.
pub fn constant_channel(n_outputs: usize) -> Result<KrausChannel> {
    let theta: f64 = 0.4;
    let single = {
        let c = theta.cos();
        let s = theta.sin();
        let rot = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ],
        );
        let diag = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.7, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.3, 0.0),
            ],
        );
        &rot * diag * rot.adjoint()
    };
    let mut target = CMatrix::identity(1, 1);
    for _ in 0..n_outputs {
        target = kron(&target, &single);
    }
    let labels: Vec<String> = (1..=n_outputs).map(|i| format!("B{i}")).collect();
    let state = MultipartiteState::new(target, vec![2; n_outputs], labels)?;
    KrausChannel::constant(&state, 2)
}

/// The isometry `|0> ↦ |0...0>, |1> ↦ |1...1>`.
pub fn ghz_isometry_channel(n_outputs: usize) -> Result<KrausChannel> {
    let dim = 1usize << n_outputs;
    let mut k = CMatrix::zeros(dim, 2);
    k[(0, 0)] = Complex64::new(1.0, 0.0);
    k[(dim - 1, 1)] = Complex64::new(1.0, 0.0);
    let labels = (1..=n_outputs).map(|i| format!("B{i}")).collect();
    KrausChannel::isometry(k, vec![2; n_outputs], labels)
}

/// Faithful transmission of the input to `B1`, with a fixed product state
/// prepared on the remaining outputs.
pub fn identity_to_b1_channel(n_outputs: usize) -> Result<KrausChannel> {
    if n_outputs < 2 {
        return Err(Error::InvalidConfig("need at least two outputs".into()));
    }
    let theta: f64 = 0.3;
    let rest_dim = 1usize << (n_outputs - 1);
    let mut rest = CVector::identity(1);
    let qubit = CVector::from_vec(vec![
        Complex64::new(theta.cos(), 0.0),
        Complex64::new(theta.sin(), 0.0),
    ]);
    for _ in 0..n_outputs - 1 {
        rest = rest.kronecker(&qubit);
    }
    let dim = 1usize << n_outputs;
    let mut k = CMatrix::zeros(dim, 2);
    for j in 0..2 {
        for e in 0..rest_dim {
            k[(j * rest_dim + e, j)] = rest[e];
        }
    }
    let labels = (1..=n_outputs).map(|i| format!("B{i}")).collect();
    KrausChannel::isometry(k, vec![2; n_outputs], labels)
}

/// A Haar-random isometry channel to `n` qubits, deterministic in the seed.
pub fn haar_isometry_channel(n_outputs: usize, seed: u64) -> Result<KrausChannel> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let dim = 1usize << n_outputs;
    let k = linalg::haar_isometry(dim, 2, &mut rng);
    let labels = (1..=n_outputs).map(|i| format!("B{i}")).collect();
    KrausChannel::isometry(k, vec![2; n_outputs], labels)
}

/// One row of the blanket sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub t: f64,
    pub q: usize,
    pub alpha_q_bits: f64,
    pub bound_bits: f64,
    /// Positions of the blanket within the Choi state (1-based outputs).
    pub q_indices: Vec<usize>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

/// Sweep the greedy blanket over evolution times and blanket sizes, with
/// `r_size = 1`, on the Choi state of the spin-chain channel.
///
/// A size `q` equal to the full output count is vacuous (the blanket covers
/// everything, `α_Q = 0` over an empty candidate set) and recorded as such;
/// larger `q` and per-cell failures become rows with the error field set.
pub fn figure3_sweep(
    times: &[f64],
    qs: &[usize],
    base: &SpinChainConfig,
    opt: &OptimizerConfig,
) -> Vec<SweepRow> {
    let r_size = 1usize;
    let n_env = base.n_total;
    let mut rows = Vec::with_capacity(times.len() * qs.len());
    for &t in times {
        let started_choi = std::time::Instant::now();
        let choi = match spin_chain_choi(&base.with_t(t)) {
            Ok(c) => c,
            Err(e) => {
                for &q in qs {
                    rows.push(SweepRow {
                        t,
                        q,
                        alpha_q_bits: f64::NAN,
                        bound_bits: f64::NAN,
                        q_indices: vec![],
                        runtime_s: started_choi.elapsed().as_secs_f64(),
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        let entropy_a = choi
            .state()
            .partial_trace(&Region::single(0))
            .and_then(|m| m.von_neumann_entropy())
            .unwrap_or(f64::NAN);
        for &q in qs {
            let start = std::time::Instant::now();
            let m_steps = 1 + q / r_size;
            let row = if m_steps * r_size > n_env {
                if q <= n_env {
                    // blanket covers every output; nothing is left to test
                    SweepRow {
                        t,
                        q,
                        alpha_q_bits: 0.0,
                        bound_bits: entropy_a / m_steps as f64,
                        q_indices: (1..=n_env).collect(),
                        runtime_s: start.elapsed().as_secs_f64(),
                        error: None,
                    }
                } else {
                    SweepRow {
                        t,
                        q,
                        alpha_q_bits: f64::NAN,
                        bound_bits: f64::NAN,
                        q_indices: vec![],
                        runtime_s: start.elapsed().as_secs_f64(),
                        error: Some(format!("q = {q} exceeds the {n_env} outputs")),
                    }
                }
            } else {
                match greedy_blanket(choi.state(), &Region::single(0), r_size, q, opt) {
                    Ok(report) => SweepRow {
                        t,
                        q,
                        alpha_q_bits: report.alpha_q_bits,
                        bound_bits: report.bound_bits,
                        q_indices: report.q_padded.indices().to_vec(),
                        runtime_s: start.elapsed().as_secs_f64(),
                        error: None,
                    },
                    Err(e) => SweepRow {
                        t,
                        q,
                        alpha_q_bits: f64::NAN,
                        bound_bits: f64::NAN,
                        q_indices: vec![],
                        runtime_s: start.elapsed().as_secs_f64(),
                        error: Some(e.to_string()),
                    },
                }
            };
            rows.push(row);
        }
    }
    rows
}

/// Nine significant digits, scientific notation.
pub fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Empirically the residual shrinks as the blanket grows for this model, but
/// nothing guarantees it; deviations beyond the optimizer slack are worth a
/// warning, not a failure.
pub fn sweep_monotonicity_warnings(rows: &[SweepRow]) -> Vec<String> {
    const SLACK: f64 = 2e-3;
    let mut warnings = Vec::new();
    let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    times.dedup();
    for &t in &times {
        let mut at_t: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.t == t && r.error.is_none())
            .collect();
        at_t.sort_by_key(|r| r.q);
        for pair in at_t.windows(2) {
            if pair[1].alpha_q_bits > pair[0].alpha_q_bits + SLACK {
                warnings.push(format!(
                    "t={t}: alpha_Q rose from {:.6} (q={}) to {:.6} (q={})",
                    pair[0].alpha_q_bits, pair[0].q, pair[1].alpha_q_bits, pair[1].q
                ));
            }
        }
    }
    warnings
}

/// CSV rendering of sweep rows; error rows carry the message in the
/// `Q_indices` field.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("t,q,alpha_q_bits,bound_bits,Q_indices,runtime_s\n");
    for r in rows {
        let q_field = match &r.error {
            Some(e) => format!("ERROR({})", e.replace([',', '\n'], ";")),
            None => r
                .q_indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig9(r.t),
            r.q,
            format_sig9(r.alpha_q_bits),
            format_sig9(r.bound_bits),
            q_field,
            format_sig9(r.runtime_s),
        ));
    }
    out
}

/// Outcome of one analytic-example check.
#[derive(Clone, Debug)]
pub struct ExampleCheck {
    pub name: String,
    pub pass: bool,
    pub max_distance: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ExamplesReport {
    pub checks: Vec<ExampleCheck>,
}

impl ExamplesReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

const EXAMPLE_SAMPLES: usize = 64;

/// Run the greedy blanket and the channel approximation certificate on the
/// four analytic channels, asserting the exactly-zero error claims where the
/// channel structure makes them exact.
pub fn analytic_examples_check(opt: &OptimizerConfig) -> Result<ExamplesReport> {
    let mut checks = Vec::new();

    // Constant channel: measure-and-prepare with zero error and an empty
    // excluded region.
    {
        let choi = choi_of_channel(&constant_channel(3)?)?;
        let report = greedy_blanket(choi.state(), &Region::single(0), 1, 1, opt)?;
        let max_step = report
            .steps
            .iter()
            .map(|s| s.cmi_bits)
            .fold(0.0_f64, f64::max);
        let cert = measure_prepare_certificate(&choi, &Region::empty(), &[], 1, EXAMPLE_SAMPLES, opt)?;
        let d = cert.max_distance();
        checks.push(ExampleCheck {
            name: "constant".into(),
            pass: d <= 1e-9 && max_step <= 1e-6,
            max_distance: d,
            threshold: 1e-9,
            detail: format!("max greedy step {max_step:.2e}, empty Q"),
        });
    }

    // Haar-random isometry: no exact claim, but the certificate bounds hold.
    {
        let choi = choi_of_channel(&haar_isometry_channel(5, opt.seed ^ 0x4841_4152)?)?;
        let report = greedy_blanket(choi.state(), &Region::single(0), 1, 2, opt)?;
        let cert = measure_prepare_certificate(
            &choi,
            &report.q_padded,
            &report.core_measurements(),
            1,
            EXAMPLE_SAMPLES,
            opt,
        )?;
        let slack = 1e-3;
        let pass = cert.all_within_alpha_bound(slack) && cert.all_within_apriori_bound(slack);
        checks.push(ExampleCheck {
            name: "haar-isometry".into(),
            pass,
            max_distance: cert.max_distance(),
            threshold: cert.rows.first().map(|r| r.alpha_bound).unwrap_or(0.0),
            detail: format!("alpha_Q = {:.3e} bits", cert.alpha_q_bits),
        });
    }

    // Identity to B1: zero error once Q = {B1}.
    {
        let choi = choi_of_channel(&identity_to_b1_channel(3)?)?;
        let report = greedy_blanket(choi.state(), &Region::single(0), 1, 1, opt)?;
        let picked_b1 = report.steps[0].region == Region::single(1);
        let first_step = report.steps[0].cmi_bits;
        let cert = measure_prepare_certificate(
            &choi,
            &report.q_core,
            &report.core_measurements(),
            1,
            EXAMPLE_SAMPLES,
            opt,
        )?;
        let d = cert.max_distance();
        let pass = d <= 1e-6
            && picked_b1
            && report.q_core == Region::single(1)
            && (first_step - 1.0).abs() < 1e-3;
        checks.push(ExampleCheck {
            name: "identity-to-b1".into(),
            pass,
            max_distance: d,
            threshold: 1e-6,
            detail: format!(
                "step1 region {:?} at {:.6} bits, Q = {:?}",
                report.steps[0].region.indices(),
                first_step,
                report.q_core.indices()
            ),
        });
    }

    // GHZ isometry: every reduced channel is exactly measure-and-prepare in
    // the Z basis. No output needs to stay excluded: covering R = B1 with a
    // blanket on B2 and every other R with a blanket on B1 certifies zero
    // error everywhere.
    {
        let choi = choi_of_channel(&ghz_isometry_channel(3)?)?;
        let report = greedy_blanket(choi.state(), &Region::single(0), 1, 2, opt)?;
        let step2 = report.steps[1].cmi_bits;
        let mut max_d: f64 = 0.0;
        for cover in 1..=2usize {
            let q = Region::single(cover);
            let m_q = vec![ProjectiveMeasurement::computational(q.clone(), vec![2])];
            let cert = measure_prepare_certificate(&choi, &q, &m_q, 1, EXAMPLE_SAMPLES, opt)?;
            max_d = max_d.max(cert.max_distance());
        }
        let pass = max_d <= 1e-6 && step2 <= 1e-4 && report.bottleneck_index == 2;
        checks.push(ExampleCheck {
            name: "ghz-isometry".into(),
            pass,
            max_distance: max_d,
            threshold: 1e-6,
            detail: format!("greedy step 2 at {step2:.2e} bits; all outputs covered"),
        });
    }

    Ok(ExamplesReport { checks })
}

/// Mixing parameter of the compatibility counterexample.
#[derive(Clone, Copy, Debug)]
pub struct AppendixBConfig {
    pub p: f64,
}

impl AppendixBConfig {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("p = {p} outside [0,1]")));
        }
        Ok(Self { p })
    }
}

/// The three-qubit operator whose positivity decides whether the two
/// single-target channels below are compatible.
///
/// Hermitian with unit trace for every `p ∈ [0,1]`, but positive only inside
/// a window around `p = 1/2`; use [`MultipartiteState::validate_density`] to
/// test positivity.
pub fn appendix_b_choi(p: f64) -> Result<MultipartiteState> {
    AppendixBConfig::new(p)?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    // basis order (A, B1, B2), A most significant
    let v000 = computational_basis_vector(8, 0b000);
    let v001 = computational_basis_vector(8, 0b001);
    let v1p0 = (computational_basis_vector(8, 0b100) + computational_basis_vector(8, 0b110))
        .scale(inv_sqrt2);
    let v1p1 = (computational_basis_vector(8, 0b101) + computational_basis_vector(8, 0b111))
        .scale(inv_sqrt2);

    let mut rho = CMatrix::zeros(8, 8);
    for v in [&v000, &v001, &v1p0, &v1p1] {
        rho += (v * v.adjoint()).scale(0.25);
    }
    let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2 * (p - 0.5), 0.0);
    let cross = (&v000 * v1p0.adjoint() - &v001 * v1p1.adjoint()).scale(c.re);
    rho += &cross + cross.adjoint();

    MultipartiteState::new(
        rho,
        vec![2, 2, 2],
        vec!["A".into(), "B1".into(), "B2".into()],
    )
}

fn qubit_proj(v: &[Complex64; 2]) -> CMatrix {
    let vec = CVector::from_vec(v.to_vec());
    &vec * vec.adjoint()
}

/// `Λ1`: measure `{|0>,|1>}`, prepare `{|0>,|+>}`.
pub fn appendix_b_lambda1() -> Result<MeasureAndPrepareChannel> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    MeasureAndPrepareChannel::new(
        vec![qubit_proj(&[one, zero]), qubit_proj(&[zero, one])],
        vec![qubit_proj(&[one, zero]), qubit_proj(&[r, r])],
        vec![2],
        vec!["B1".into()],
    )
}

/// `Λ2(p)`: measure `{|+>,|−>}`, prepare the diagonal states `ρ±`.
pub fn appendix_b_lambda2(p: f64) -> Result<MeasureAndPrepareChannel> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho_plus = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(p, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 - p, 0.0),
        ],
    );
    let rho_minus = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0 - p, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(p, 0.0),
        ],
    );
    MeasureAndPrepareChannel::new(
        vec![qubit_proj(&[r, r]), qubit_proj(&[r, -r])],
        vec![rho_plus, rho_minus],
        vec![2],
        vec!["B2".into()],
    )
}

/// Full verification report for the counterexample family.
#[derive(Clone, Debug)]
pub struct AppendixBReport {
    pub grid_points: usize,
    pub positive_window_detected: [f64; 2],
    pub expected: [f64; 2],
    pub window_contiguous: bool,
    pub window_within_resolution: bool,
    /// Max deviation of the `AB1`/`AB2` marginals from the Choi states of
    /// `Λ1`/`Λ2` across the grid.
    pub max_marginal_dev: f64,
    pub marginals_match: bool,
    /// `|λ_min|` at the two exact window endpoints.
    pub boundary_eigenvalue_abs: [f64; 2],
    /// Max deviation of `‖ρ+ − ρ−‖₁` from `2|2p−1|` across the grid.
    pub max_trace_norm_identity_dev: f64,
    /// For `p ≠ 1/2` inside the window the two preparations differ, so `Λ2`
    /// cannot be re-expressed with the `Λ1` measurement.
    pub incompatibility_witnessed: bool,
}

impl AppendixBReport {
    pub fn pass(&self) -> bool {
        self.window_contiguous
            && self.window_within_resolution
            && self.marginals_match
            && self.boundary_eigenvalue_abs.iter().all(|&x| x <= 1e-8)
            && self.max_trace_norm_identity_dev <= 1e-12
            && self.incompatibility_witnessed
    }

    pub fn to_json(&self) -> Value {
        json!({
            "grid": self.grid_points,
            "positive_window_detected": self.positive_window_detected,
            "expected": self.expected,
            "marginals_match": self.marginals_match,
            "window_contiguous": self.window_contiguous,
            "window_within_resolution": self.window_within_resolution,
            "max_marginal_dev": self.max_marginal_dev,
            "boundary_eigenvalue_abs": self.boundary_eigenvalue_abs,
            "max_trace_norm_identity_dev": self.max_trace_norm_identity_dev,
            "incompatibility_witnessed": self.incompatibility_witnessed,
            "pass": self.pass(),
        })
    }
}

const POSITIVITY_TOL: f64 = 1e-9;

fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(eigh(m)?.eigenvalues[0])
}

/// Sweep `p` over a grid, detect the positivity window, and check it against
/// `[1/2 − 1/(2√2), 1/2 + 1/(2√2)]`; verify the marginals reproduce the Choi
/// states of `Λ1` and `Λ2` for every `p`, and that `‖ρ+ − ρ−‖₁ = 2|2p−1|`.
pub fn appendix_b_check(grid_points: usize) -> Result<AppendixBReport> {
    if grid_points < 2 {
        return Err(Error::InvalidConfig("need at least two grid points".into()));
    }
    let lo_expected = 0.5 - 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    let hi_expected = 0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    let resolution = 1.0 / (grid_points - 1) as f64;

    let choi1 = choi_of_channel(&appendix_b_lambda1()?.to_kraus()?)?;

    let mut positive: Vec<bool> = Vec::with_capacity(grid_points);
    let mut max_marginal_dev: f64 = 0.0;
    let mut max_tn_dev: f64 = 0.0;
    let mut incompatibility_witnessed = true;
    for k in 0..grid_points {
        let p = k as f64 * resolution;
        let rho = appendix_b_choi(p)?;
        positive.push(min_eigenvalue(rho.rho())? >= -POSITIVITY_TOL);

        let ab1 = rho.partial_trace(&Region::new(vec![0, 1])?)?;
        let dev1 = linalg::max_abs_diff(ab1.rho(), choi1.state().rho());
        let choi2 = choi_of_channel(&appendix_b_lambda2(p)?.to_kraus()?)?;
        let ab2 = rho.partial_trace(&Region::new(vec![0, 2])?)?;
        let dev2 = linalg::max_abs_diff(ab2.rho(), choi2.state().rho());
        max_marginal_dev = max_marginal_dev.max(dev1).max(dev2);

        let lam2 = appendix_b_lambda2(p)?;
        let tn = trace_norm(&(&lam2.preparations()[0] - &lam2.preparations()[1]))?;
        let expected_tn = 2.0 * (2.0 * p - 1.0).abs();
        max_tn_dev = max_tn_dev.max((tn - expected_tn).abs());
        let inside = p > lo_expected + resolution && p < hi_expected - resolution;
        if inside && (p - 0.5).abs() > resolution && tn <= 0.0 {
            incompatibility_witnessed = false;
        }
    }

    let first = positive.iter().position(|&b| b);
    let last = positive.iter().rposition(|&b| b);
    let (window, contiguous) = match (first, last) {
        (Some(a), Some(b)) => {
            let contiguous = positive[a..=b].iter().all(|&x| x);
            (
                [a as f64 * resolution, b as f64 * resolution],
                contiguous,
            )
        }
        _ => ([f64::NAN, f64::NAN], false),
    };
    let window_within_resolution = (window[0] - lo_expected).abs() <= resolution + 1e-12
        && (window[1] - hi_expected).abs() <= resolution + 1e-12;

    let boundary_eigenvalue_abs = [
        min_eigenvalue(appendix_b_choi(lo_expected)?.rho())?.abs(),
        min_eigenvalue(appendix_b_choi(hi_expected)?.rho())?.abs(),
    ];

    Ok(AppendixBReport {
        grid_points,
        positive_window_detected: window,
        expected: [lo_expected, hi_expected],
        window_contiguous: contiguous,
        window_within_resolution,
        max_marginal_dev,
        marginals_match: max_marginal_dev <= 1e-10,
        boundary_eigenvalue_abs,
        max_trace_norm_identity_dev: max_tn_dev,
        incompatibility_witnessed,
    })
}

/// Convenience wrapper: greedy blanket of a named analytic example.
pub fn example_choi(name: &str, seed: u64) -> Result<ChoiState> {
    let channel = match name {
        "constant" => constant_channel(3)?,
        "ghz" => ghz_isometry_channel(3)?,
        "identity-to-b1" | "identity" => identity_to_b1_channel(3)?,
        "haar" => haar_isometry_channel(5, seed)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown example '{other}' (expected constant|ghz|identity-to-b1|haar)"
            )))
        }
    };
    choi_of_channel(&channel)
}

pub use crate::blanket::GreedyStep;

/// Greedy blanket on a named example's Choi state.
pub fn example_blanket(
    name: &str,
    r_size: usize,
    q: usize,
    opt: &OptimizerConfig,
) -> Result<BlanketReport> {
    let choi = example_choi(name, opt.seed)?;
    greedy_blanket(choi.state(), &Region::single(0), r_size, q, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};
    use crate::state::default_labels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    fn cfg_n(n: usize) -> SpinChainConfig {
        SpinChainConfig {
            n_total: n,
            ..SpinChainConfig::default()
        }
    }

    #[test]
    fn ising_single_site_is_field_only() {
        let cfg = SpinChainConfig {
            n_total: 1,
            g: -1.05,
            h: 0.5,
            t: 0.0,
        };
        let h = ising_hamiltonian(&cfg).unwrap();
        let expected = pauli_x().scale(1.05) - pauli_z().scale(0.5);
        assert!(max_abs_diff(&h, &expected) < 1e-14);
    }

    #[test]
    fn ising_two_sites_zero_fields() {
        let cfg = SpinChainConfig {
            n_total: 2,
            g: 0.0,
            h: 0.0,
            t: 0.0,
        };
        let h = ising_hamiltonian(&cfg).unwrap();
        let eig = eigh(&h).unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ising_matches_kronecker_sum_oracle() {
        // independent construction as an explicit sum of Kronecker products
        let n = 3;
        let (g, h) = (-1.05, 0.5);
        let term = |ops: &[(usize, &CMatrix)]| -> CMatrix {
            let mut out = CMatrix::identity(1, 1);
            for site in 0..n {
                let factor = ops
                    .iter()
                    .find(|(s, _)| *s == site)
                    .map(|(_, m)| (*m).clone())
                    .unwrap_or_else(|| identity(2));
                out = kron(&out, &factor);
            }
            out
        };
        let x = pauli_x();
        let z = pauli_z();
        let mut oracle = CMatrix::zeros(8, 8);
        for i in 0..n - 1 {
            oracle -= term(&[(i, &z), (i + 1, &z)]);
        }
        for i in 0..n {
            oracle -= term(&[(i, &x)]).scale(g);
            oracle -= term(&[(i, &z)]).scale(h);
        }
        let built = ising_hamiltonian(&cfg_n(3).with_t(0.0)).unwrap();
        assert!(max_abs_diff(&built, &oracle) < 1e-12);
    }

    #[test]
    fn ising_rejects_oversized_chains() {
        assert!(ising_hamiltonian(&cfg_n(13)).is_err());
    }

    #[test]
    fn ground_energy_decreases_with_chain_length() {
        let mut prev = f64::INFINITY;
        for n in 2..=8 {
            let h = ising_hamiltonian(&cfg_n(n)).unwrap();
            let e0 = eigh(&h).unwrap().eigenvalues[0];
            assert!(e0 < prev, "n={n}: {e0} !< {prev}");
            prev = e0;
        }
    }

    #[test]
    fn spin_chain_at_t_zero_appends_the_ground_state() {
        let built = spin_chain_channel(&cfg_n(3).with_t(0.0)).unwrap();
        let env = ising_matrix(2, -1.05, 0.5);
        let psi0 = eigh(&env).unwrap().eigenvectors.column(0).into_owned();
        let ground = &psi0 * psi0.adjoint();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rho = crate::state::random_state(&[2], &mut rng);
        let out = built.channel.apply(&rho).unwrap();
        let expected = kron(rho.rho(), &ground);
        assert!(max_abs_diff(out.rho(), &expected) < 1e-12);
        assert!(!built.ground_state_degenerate);
    }

    #[test]
    fn spin_chain_preserves_purity() {
        let built = spin_chain_channel(&cfg_n(4).with_t(1.0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let rho = crate::state::random_state(&[2], &mut rng);
        let out = built.channel.apply(&rho).unwrap();
        let purity_in = (rho.rho() * rho.rho()).trace().re;
        let purity_out = (out.rho() * out.rho()).trace().re;
        assert!((purity_in - purity_out).abs() < 1e-10);
    }

    #[test]
    fn spin_chain_choi_passes_invariants() {
        for (n, t) in [(2usize, 0.3), (4, 1.0)] {
            let choi = spin_chain_choi(&cfg_n(n).with_t(t)).unwrap();
            choi.state().validate_density().unwrap();
        }
    }

    #[test]
    fn appendix_b_state_is_hermitian_unit_trace() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..50 {
            let p: f64 = rng.random_range(0.0..1.0);
            // the constructor enforces Hermiticity and unit trace at 1e-12 scale
            let rho = appendix_b_choi(p).unwrap();
            let tr = rho.rho().trace();
            assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
        }
        assert!(appendix_b_choi(1.2).is_err());
    }

    #[test]
    fn appendix_b_at_half_is_the_classical_mixture() {
        let rho = appendix_b_choi(0.5).unwrap();
        rho.validate_density().unwrap();
        // cross terms vanish: compare with the bare mixture of four projectors
        let mut expected = CMatrix::zeros(8, 8);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let vs = [
            computational_basis_vector(8, 0),
            computational_basis_vector(8, 1),
            (computational_basis_vector(8, 4) + computational_basis_vector(8, 6))
                .scale(inv_sqrt2),
            (computational_basis_vector(8, 5) + computational_basis_vector(8, 7))
                .scale(inv_sqrt2),
        ];
        for v in &vs {
            expected += (v * v.adjoint()).scale(0.25);
        }
        assert!(max_abs_diff(rho.rho(), &expected) < 1e-14);
    }

    #[test]
    fn appendix_b_is_negative_outside_the_window() {
        let rho = appendix_b_choi(0.9).unwrap();
        let min = eigh(rho.rho()).unwrap().eigenvalues[0];
        assert!(min < -1e-3, "min eigenvalue {min}");
    }

    #[test]
    fn appendix_b_boundary_eigenvalue_vanishes() {
        let lo = 0.5 - 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        let min = eigh(appendix_b_choi(lo).unwrap().rho()).unwrap().eigenvalues[0];
        assert!(min.abs() < 1e-8, "boundary eigenvalue {min}");
    }

    #[test]
    fn appendix_b_marginals_and_witness() {
        let p = 0.6;
        let rho = appendix_b_choi(p).unwrap();
        let choi1 = choi_of_channel(&appendix_b_lambda1().unwrap().to_kraus().unwrap()).unwrap();
        let ab1 = rho.partial_trace(&Region::new(vec![0, 1]).unwrap()).unwrap();
        assert!(max_abs_diff(ab1.rho(), choi1.state().rho()) < 1e-10);
        let choi2 =
            choi_of_channel(&appendix_b_lambda2(p).unwrap().to_kraus().unwrap()).unwrap();
        let ab2 = rho.partial_trace(&Region::new(vec![0, 2]).unwrap()).unwrap();
        assert!(max_abs_diff(ab2.rho(), choi2.state().rho()) < 1e-10);

        // Λ2(|+><+|) vs Λ2(|−><−|): trace distance 2|2p−1| = 0.4
        let lam2 = appendix_b_lambda2(p).unwrap();
        let plus = qubit_proj(&[
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let minus = qubit_proj(&[
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let d = trace_norm(&(lam2.apply_matrix(&plus) - lam2.apply_matrix(&minus))).unwrap();
        assert!((d - 0.4).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn appendix_b_check_detects_the_window() {
        let report = appendix_b_check(201).unwrap();
        assert!(report.pass(), "report: {report:?}");
        assert!((report.expected[0] - 0.146_446_609).abs() < 1e-9);
        assert!((report.expected[1] - 0.853_553_391).abs() < 1e-9);
        assert!((report.positive_window_detected[0] - report.expected[0]).abs() <= 0.005 + 1e-12);
        assert!((report.positive_window_detected[1] - report.expected[1]).abs() <= 0.005 + 1e-12);
    }

    #[test]
    fn sweep_on_a_small_chain() {
        let opt = OptimizerConfig {
            restarts: 2,
            max_iters: 100,
            simplex_tol: 1e-9,
            seed: 99,
        };
        let times = [0.0, 0.7];
        let qs = [1usize, 2, 3, 4];
        let rows = figure3_sweep(&times, &qs, &cfg_n(4), &opt);
        assert_eq!(rows.len(), 8);
        for row in &rows {
            assert!(row.error.is_none(), "row error: {:?}", row.error);
            assert!(row.alpha_q_bits >= -1e-9);
            assert!(row.alpha_q_bits <= row.bound_bits + 1e-3);
            if row.t == 0.0 {
                assert!(row.alpha_q_bits < 1e-3, "t=0 alpha = {}", row.alpha_q_bits);
            }
            if row.q == 4 {
                // vacuous cell: the blanket covers every output
                assert_eq!(row.alpha_q_bits, 0.0);
                assert_eq!(row.q_indices, vec![1, 2, 3, 4]);
            } else {
                assert_eq!(row.q_indices.len(), row.q);
            }
        }
        let csv = sweep_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,q,alpha_q_bits,bound_bits,Q_indices,runtime_s"
        );
        assert_eq!(lines.count(), 8);

        // at t = 0 the residual is flat at zero, so no monotonicity warnings
        let t0_rows: Vec<SweepRow> = rows.iter().filter(|r| r.t == 0.0).cloned().collect();
        assert!(sweep_monotonicity_warnings(&t0_rows).is_empty());
    }

    #[test]
    fn analytic_examples_all_pass() {
        let opt = OptimizerConfig {
            restarts: 3,
            max_iters: 150,
            simplex_tol: 1e-10,
            seed: 2718,
        };
        let report = analytic_examples_check(&opt).unwrap();
        for check in &report.checks {
            assert!(
                check.pass,
                "{} failed: max distance {:.3e} (threshold {:.1e}): {}",
                check.name, check.max_distance, check.threshold, check.detail
            );
        }
    }

    #[test]
    fn example_choi_rejects_unknown_names() {
        assert!(example_choi("nonsense", 1).is_err());
        for name in ["constant", "ghz", "identity-to-b1", "haar"] {
            example_choi(name, 1).unwrap();
        }
    }

    #[test]
    fn format_sig9_has_nine_significant_digits() {
        assert_eq!(format_sig9(0.25), "2.50000000e-1");
        assert_eq!(format_sig9(1.0), "1.00000000e0");
        let _ = default_labels(2);
    }
}
