//! Channel representations and their duality with states: Kraus channels,
//! Choi states, rank-1 projective (quantum-classical) measurements,
//! measure-and-prepare channels, and the dimensional distance bounds that
//! relate one-way LOCC distinguishability to the trace norm.
//!
//! Conventions fixed here and used throughout:
//! - Choi states are normalized to trace one, `ρ^Λ = Λ(|Γ><Γ|)` with
//!   `|Γ> = d_A^{-1/2} Σ_i |i>|i>`; the `d_A` factor appears only when
//!   recovering the channel action.
//! - The reference system `A'` is always subsystem 0 of a Choi state, and
//!   transposes are taken in its computational basis (the basis of `|Γ>`).

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh, identity, kron, max_abs_diff, trace_norm, trace_of, CMatrix, CVector,
    EIGENVALUE_TOL, HERMITICITY_TOL,
};
use crate::optim::OptimizerConfig;
use crate::state::{MultipartiteState, Region, SplitIndex};

/// Marginal of a Choi state on the reference system may deviate this much
/// from maximally mixed.
pub const CHOI_MARGINAL_TOL: f64 = 1e-9;

/// POVM completeness may be off by this much before renormalization fails.
pub const POVM_COMPLETENESS_TOL: f64 = 1e-8;

/// Measurement outcomes with probability below this are dropped.
pub const PROB_FLOOR: f64 = 1e-12;

fn check_density_matrix(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if linalg::hermiticity_deviation(m) > HERMITICITY_TOL {
        return Err(Error::InvalidState(format!("{what} is not Hermitian")));
    }
    let tr = trace_of(m);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!(
            "{what} has trace {:.9}",
            tr.re
        )));
    }
    let eig = eigh(m)?;
    if eig.eigenvalues[0] < -EIGENVALUE_TOL {
        return Err(Error::InvalidState(format!(
            "{what} has eigenvalue {:.3e}",
            eig.eigenvalues[0]
        )));
    }
    Ok(())
}

/// A rank-1 orthonormal projector family on a region, given as the columns of
/// a basis unitary.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectiveMeasurement {
    region: Region,
    /// Dimensions of the region's subsystems, in region order.
    dims: Vec<usize>,
    /// Unitary whose columns define the measured basis.
    #[serde(skip)]
    basis: CMatrix,
}

impl ProjectiveMeasurement {
    pub fn from_basis(region: Region, dims: Vec<usize>, basis: CMatrix) -> Result<Self> {
        if dims.len() != region.len() {
            return Err(Error::DimMismatch(
                "one dimension per region subsystem required".into(),
            ));
        }
        let d: usize = dims.iter().product();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "basis is {}x{}, region dimension is {d}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let dev = max_abs_diff(&(basis.adjoint() * &basis), &identity(d));
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidPovm(format!(
                "basis is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            region,
            dims,
            basis,
        })
    }

    /// Measurement in the computational basis of the region.
    pub fn computational(region: Region, dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        Self {
            region,
            dims,
            basis: identity(d),
        }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn outcome_vector(&self, beta: usize) -> CVector {
        self.basis.column(beta).into_owned()
    }

    /// Rank-1 projector of outcome `beta`.
    pub fn projector(&self, beta: usize) -> CMatrix {
        let u = self.basis.column(beta);
        u * u.adjoint()
    }

    /// Combine measurements on pairwise disjoint regions into one measurement
    /// on the union, with outcome vectors arranged on the union's sorted
    /// subsystem order.
    pub fn compose(parts: &[ProjectiveMeasurement]) -> Result<ProjectiveMeasurement> {
        if parts.is_empty() {
            return Err(Error::InvalidPovm("no measurements to compose".into()));
        }
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        for (i, p) in parts.iter().enumerate() {
            for q in &parts[i + 1..] {
                if !p.region.is_disjoint(&q.region) {
                    return Err(Error::InvalidRegion(
                        "composed measurements must act on disjoint regions".into(),
                    ));
                }
            }
        }
        let mut order: Vec<usize> = (0..parts.len()).collect();
        order.sort_by_key(|&k| parts[k].region.indices()[0]);

        let union = Region::union_all(parts.iter().map(|p| &p.region));
        let mut union_dims = vec![0usize; union.len()];
        for p in parts {
            for (k, idx) in p.region.iter().enumerate() {
                let pos = union.indices().binary_search(&idx).unwrap();
                union_dims[pos] = p.dims[k];
            }
        }
        let d: usize = union_dims.iter().product();

        // positions of each part's subsystems within the union, part-local order
        let part_positions: Vec<Vec<usize>> = parts
            .iter()
            .map(|p| {
                p.region
                    .iter()
                    .map(|idx| union.indices().binary_search(&idx).unwrap())
                    .collect()
            })
            .collect();

        let mut basis = CMatrix::zeros(d, d);
        let n_union = union_dims.len();
        let mut digits = vec![0usize; n_union];
        for row in 0..d {
            let mut x = row;
            for i in (0..n_union).rev() {
                digits[i] = x % union_dims[i];
                x /= union_dims[i];
            }
            for col in 0..d {
                // column index decomposes over parts in sorted-region order
                let mut rem = col;
                let mut entry = Complex64::new(1.0, 0.0);
                for &k in order.iter().rev() {
                    let p = &parts[k];
                    let dk = p.dim();
                    let beta = rem % dk;
                    rem /= dk;
                    let mut sub_row = 0usize;
                    for (j, &pos) in part_positions[k].iter().enumerate() {
                        sub_row = sub_row * p.dims[j] + digits[pos];
                    }
                    entry *= p.basis[(sub_row, beta)];
                    if entry.norm_sqr() == 0.0 {
                        break;
                    }
                }
                basis[(row, col)] = entry;
            }
        }
        ProjectiveMeasurement::from_basis(union, union_dims, basis)
    }
}

fn check_measurement_fits(dims: &[usize], m: &ProjectiveMeasurement) -> Result<()> {
    if let Some(max) = m.region.max_index() {
        if max >= dims.len() {
            return Err(Error::InvalidRegion(format!(
                "measurement region index {max} out of range"
            )));
        }
    }
    let actual: Vec<usize> = m.region.iter().map(|i| dims[i]).collect();
    if actual != m.dims {
        return Err(Error::DimMismatch(
            "measurement dims do not match the state's region dims".into(),
        ));
    }
    Ok(())
}

/// The unnormalized conditional blocks `<u_β| op |u_β>` on the complement of
/// the measured region, one per outcome.
pub(crate) fn conditional_blocks(
    op: &CMatrix,
    dims: &[usize],
    m: &ProjectiveMeasurement,
) -> Vec<CMatrix> {
    let split = SplitIndex::new(dims, m.region.indices());
    let d_r = split.keep_dim;
    let d_rest = split.rest_dim;
    let mut blocks = Vec::with_capacity(d_r);
    for beta in 0..d_r {
        let u = m.basis.column(beta);
        let mut g = CMatrix::zeros(d_rest, d_rest);
        for c in 0..d_r {
            let uc = u[c].conj();
            if uc.norm_sqr() == 0.0 {
                continue;
            }
            for c2 in 0..d_r {
                let w = uc * u[c2];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                for b in 0..d_rest {
                    let row = split.full(c, b);
                    for b2 in 0..d_rest {
                        g[(b, b2)] += w * op[(row, split.full(c2, b2))];
                    }
                }
            }
        }
        blocks.push(g);
    }
    blocks
}

/// Apply the quantum-classical channel of a projective measurement to a
/// Hermitian operator on the listed subsystem dims: `Σ_β P_β op P_β` with the
/// projectors acting on the measured region and identity elsewhere.
pub fn apply_qc_to_operator(
    op: &CMatrix,
    dims: &[usize],
    m: &ProjectiveMeasurement,
) -> Result<CMatrix> {
    check_measurement_fits(dims, m)?;
    let split = SplitIndex::new(dims, m.region.indices());
    let blocks = conditional_blocks(op, dims, m);
    let mut out = CMatrix::zeros(op.nrows(), op.ncols());
    for (beta, g) in blocks.iter().enumerate() {
        let u = m.basis.column(beta);
        for a in 0..split.keep_dim {
            let ua = u[a];
            if ua.norm_sqr() == 0.0 {
                continue;
            }
            for a2 in 0..split.keep_dim {
                let w = ua * u[a2].conj();
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                for b in 0..split.rest_dim {
                    let row = split.full(a, b);
                    for b2 in 0..split.rest_dim {
                        out[(row, split.full(a2, b2))] += w * g[(b, b2)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Measure a region of a state; the post-measurement state is block-diagonal
/// in the measured basis on that region and the trace is preserved.
pub fn apply_qc_channel(
    s: &MultipartiteState,
    m: &ProjectiveMeasurement,
) -> Result<MultipartiteState> {
    let rho = apply_qc_to_operator(s.rho(), s.dims(), m)?;
    Ok(MultipartiteState::from_trusted(
        rho,
        s.dims().to_vec(),
        s.labels().to_vec(),
    ))
}

/// One outcome branch of a measurement: the outcome label, its probability,
/// and the conditional state on the unmeasured subsystems.
#[derive(Clone, Debug)]
pub struct ConditionalBranch {
    pub outcome: usize,
    pub probability: f64,
    pub state: MultipartiteState,
}

/// Measure a region and condition on the outcome, dropping the measured
/// subsystems. Outcomes with probability below [`PROB_FLOOR`] are dropped.
pub fn measure_and_condition(
    s: &MultipartiteState,
    m: &ProjectiveMeasurement,
) -> Result<Vec<ConditionalBranch>> {
    check_measurement_fits(s.dims(), m)?;
    if m.region.len() == s.dims().len() {
        return Err(Error::InvalidRegion(
            "conditioning on every subsystem leaves nothing".into(),
        ));
    }
    let blocks = conditional_blocks(s.rho(), s.dims(), m);
    let rest: Vec<usize> = (0..s.dims().len())
        .filter(|i| !m.region.contains(*i))
        .collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&i| s.dims()[i]).collect();
    let rest_labels: Vec<String> = rest.iter().map(|&i| s.labels()[i].clone()).collect();
    let mut out = Vec::new();
    for (beta, g) in blocks.into_iter().enumerate() {
        let p = trace_of(&g).re;
        if p < PROB_FLOOR {
            continue;
        }
        let state = MultipartiteState::from_trusted(
            g.unscale(p),
            rest_dims.clone(),
            rest_labels.clone(),
        );
        out.push(ConditionalBranch {
            outcome: beta,
            probability: p,
            state,
        });
    }
    Ok(out)
}

/// A channel in Kraus form, `ρ ↦ Σ_k K_k ρ K_k†`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    dim_in: usize,
    out_dims: Vec<usize>,
    out_labels: Vec<String>,
}

impl KrausChannel {
    pub fn new(
        kraus: Vec<CMatrix>,
        dim_in: usize,
        out_dims: Vec<usize>,
        out_labels: Vec<String>,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidState("no Kraus operators".into()));
        }
        let dim_out: usize = out_dims.iter().product();
        if out_labels.len() != out_dims.len() {
            return Err(Error::DimMismatch("one label per output subsystem".into()));
        }
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &identity(dim_in));
        if dev > HERMITICITY_TOL {
            return Err(Error::NotTracePreserving { dev });
        }
        Ok(Self {
            kraus,
            dim_in,
            out_dims,
            out_labels,
        })
    }

    /// Channel with a single isometric Kraus operator.
    pub fn isometry(k: CMatrix, out_dims: Vec<usize>, out_labels: Vec<String>) -> Result<Self> {
        let dim_in = k.ncols();
        Self::new(vec![k], dim_in, out_dims, out_labels)
    }

    /// The constant channel `ρ ↦ target`.
    pub fn constant(target: &MultipartiteState, dim_in: usize) -> Result<Self> {
        let eig = eigh(target.rho())?;
        let p = linalg::clipped_probabilities(&eig.eigenvalues)?;
        let dim_out = target.dim();
        let mut kraus = Vec::new();
        for (j, &w) in p.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(j);
            for b in 0..dim_in {
                let mut k = CMatrix::zeros(dim_out, dim_in);
                for r in 0..dim_out {
                    k[(r, b)] = v[r] * w.sqrt();
                }
                kraus.push(k);
            }
        }
        Self::new(
            kraus,
            dim_in,
            target.dims().to_vec(),
            target.labels().to_vec(),
        )
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn out_labels(&self) -> &[String] {
        &self.out_labels
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_out(), self.dim_out());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn apply(&self, input: &MultipartiteState) -> Result<MultipartiteState> {
        if input.dim() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "input dimension {} != channel input {}",
                input.dim(),
                self.dim_in
            )));
        }
        Ok(MultipartiteState::from_trusted(
            self.apply_matrix(input.rho()),
            self.out_dims.clone(),
            self.out_labels.clone(),
        ))
    }
}

/// Random `dim_in → out_dims` channel from a Haar-random Stinespring isometry
/// with the given environment dimension.
pub fn random_kraus_channel<R: Rng + ?Sized>(
    dim_in: usize,
    out_dims: Vec<usize>,
    env_dim: usize,
    rng: &mut R,
) -> KrausChannel {
    let dim_out: usize = out_dims.iter().product();
    let v = linalg::haar_isometry(dim_out * env_dim, dim_in, rng);
    let mut kraus = Vec::with_capacity(env_dim);
    for e in 0..env_dim {
        let mut k = CMatrix::zeros(dim_out, dim_in);
        for b in 0..dim_out {
            for i in 0..dim_in {
                k[(b, i)] = v[(b * env_dim + e, i)];
            }
        }
        kraus.push(k);
    }
    let labels = (0..out_dims.len()).map(|i| format!("B{}", i + 1)).collect();
    KrausChannel::new(kraus, dim_in, out_dims, labels).expect("Stinespring dilation is trace-preserving")
}

/// The Choi state of a channel: subsystem 0 is the reference system `A'`,
/// the rest are the channel outputs. Its marginal on `A'` is maximally mixed.
#[derive(Clone, Debug)]
pub struct ChoiState {
    state: MultipartiteState,
    d_a: usize,
}

impl ChoiState {
    pub fn new(state: MultipartiteState, d_a: usize) -> Result<Self> {
        if state.dims().first() != Some(&d_a) {
            return Err(Error::DimMismatch(format!(
                "subsystem 0 must be the reference system of dimension {d_a}"
            )));
        }
        if state.n_subsystems() < 2 {
            return Err(Error::DimMismatch(
                "Choi state needs at least one output subsystem".into(),
            ));
        }
        let marginal = state.partial_trace(&Region::single(0))?;
        let dev = max_abs_diff(marginal.rho(), &identity(d_a).unscale(d_a as f64));
        if dev > CHOI_MARGINAL_TOL {
            return Err(Error::InvalidState(format!(
                "Choi marginal on A' deviates from maximally mixed by {dev:.3e}"
            )));
        }
        Ok(Self { state, d_a })
    }

    pub fn state(&self) -> &MultipartiteState {
        &self.state
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    /// Output subsystems, i.e. everything but the reference system.
    pub fn output_region(&self) -> Region {
        Region::new((1..self.state.n_subsystems()).collect()).expect("indices are unique")
    }

    /// Marginal Choi state on reference plus the given output subsystems
    /// (positions within this Choi state; 0 is not allowed).
    pub fn reduced(&self, outputs: &Region) -> Result<ChoiState> {
        if outputs.contains(0) {
            return Err(Error::InvalidRegion(
                "reduced Choi keeps outputs only; subsystem 0 is implicit".into(),
            ));
        }
        if outputs.is_empty() {
            return Err(Error::InvalidRegion("no output subsystems kept".into()));
        }
        let keep = Region::single(0).union(outputs);
        let state = self.state.partial_trace(&keep)?;
        ChoiState::new(state, self.d_a)
    }

    /// Action of the encoded channel on an input matrix,
    /// `Λ(τ) = d_A Tr_{A'}(ρ (τ^T ⊗ 1))` with the transpose in the basis of `|Γ>`.
    pub fn apply_matrix(&self, tau: &CMatrix) -> CMatrix {
        let d_b = self.state.dim() / self.d_a;
        let rho = self.state.rho();
        let mut out = CMatrix::zeros(d_b, d_b);
        for i in 0..self.d_a {
            for j in 0..self.d_a {
                let t = tau[(i, j)];
                if t.norm_sqr() == 0.0 {
                    continue;
                }
                let scale = t * (self.d_a as f64);
                for b in 0..d_b {
                    let row = i * d_b + b;
                    for b2 in 0..d_b {
                        out[(b, b2)] += scale * rho[(row, j * d_b + b2)];
                    }
                }
            }
        }
        out
    }
}

/// Choi state `Λ(|Γ><Γ|)` of a Kraus channel.
pub fn choi_of_channel(c: &KrausChannel) -> Result<ChoiState> {
    let d_a = c.dim_in();
    let d_b = c.dim_out();
    let dim = d_a * d_b;
    let mut rho = CMatrix::zeros(dim, dim);
    let scale = 1.0 / d_a as f64;
    for k in c.kraus_ops() {
        // w_i = K|i>, contribute (1/d) |i><j|_{A'} ⊗ w_i w_j†
        for i in 0..d_a {
            let wi = k.column(i);
            for j in 0..d_a {
                let wj = k.column(j);
                for b in 0..d_b {
                    let row = i * d_b + b;
                    let wib = wi[b] * scale;
                    if wib.norm_sqr() == 0.0 {
                        continue;
                    }
                    for b2 in 0..d_b {
                        rho[(row, j * d_b + b2)] += wib * wj[b2].conj();
                    }
                }
            }
        }
    }
    let mut dims = vec![d_a];
    dims.extend_from_slice(c.out_dims());
    let mut labels = vec!["A'".to_string()];
    labels.extend_from_slice(c.out_labels());
    ChoiState::new(MultipartiteState::new(rho, dims, labels)?, d_a)
}

/// Recover the channel action on a state from its Choi state.
pub fn channel_of_choi(choi: &ChoiState, input: &MultipartiteState) -> Result<MultipartiteState> {
    if input.dim() != choi.d_a() {
        return Err(Error::DimMismatch(format!(
            "input dimension {} != d_A = {}",
            input.dim(),
            choi.d_a()
        )));
    }
    let out = choi.apply_matrix(input.rho());
    let outputs = choi.output_region();
    let dims: Vec<usize> = outputs.iter().map(|i| choi.state().dims()[i]).collect();
    let labels: Vec<String> = outputs
        .iter()
        .map(|i| choi.state().labels()[i].clone())
        .collect();
    Ok(MultipartiteState::from_trusted(out, dims, labels))
}

/// A measure-and-prepare (entanglement-breaking) channel: measure a POVM on
/// the input and prepare a state contingent on the outcome.
#[derive(Clone, Debug)]
pub struct MeasureAndPrepareChannel {
    povm: Vec<CMatrix>,
    preparations: Vec<CMatrix>,
    out_dims: Vec<usize>,
    out_labels: Vec<String>,
}

impl MeasureAndPrepareChannel {
    pub fn new(
        povm: Vec<CMatrix>,
        preparations: Vec<CMatrix>,
        out_dims: Vec<usize>,
        out_labels: Vec<String>,
    ) -> Result<Self> {
        if povm.is_empty() || povm.len() != preparations.len() {
            return Err(Error::InvalidPovm(
                "need one preparation per POVM element".into(),
            ));
        }
        let d_in = povm[0].nrows();
        let mut sum = CMatrix::zeros(d_in, d_in);
        for m in &povm {
            if m.nrows() != d_in || m.ncols() != d_in {
                return Err(Error::InvalidPovm("POVM elements of unequal size".into()));
            }
            if linalg::hermiticity_deviation(m) > HERMITICITY_TOL {
                return Err(Error::InvalidPovm("POVM element not Hermitian".into()));
            }
            let eig = eigh(m)?;
            if eig.eigenvalues[0] < -EIGENVALUE_TOL {
                return Err(Error::InvalidPovm(format!(
                    "POVM element has eigenvalue {:.3e}",
                    eig.eigenvalues[0]
                )));
            }
            sum += m;
        }
        let dev = max_abs_diff(&sum, &identity(d_in));
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidPovm(format!(
                "POVM does not sum to identity (deviation {dev:.3e})"
            )));
        }
        let dim_out: usize = out_dims.iter().product();
        for s in &preparations {
            if s.nrows() != dim_out {
                return Err(Error::DimMismatch(
                    "preparation dimension does not match output dims".into(),
                ));
            }
            check_density_matrix(s, "prepared state")?;
        }
        Ok(Self {
            povm,
            preparations,
            out_dims,
            out_labels,
        })
    }

    pub fn povm(&self) -> &[CMatrix] {
        &self.povm
    }

    pub fn preparations(&self) -> &[CMatrix] {
        &self.preparations
    }

    pub fn dim_in(&self) -> usize {
        self.povm[0].nrows()
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let dim_out: usize = self.out_dims.iter().product();
        let mut out = CMatrix::zeros(dim_out, dim_out);
        for (m, s) in self.povm.iter().zip(&self.preparations) {
            let w = (m * rho).trace();
            out += s.scale(w.re);
        }
        out
    }

    /// `X ↦ Σ_α Tr(M_α X) σ_α`; the output is a convex combination of the
    /// prepared states.
    pub fn apply(&self, input: &MultipartiteState) -> Result<MultipartiteState> {
        if input.dim() != self.dim_in() {
            return Err(Error::DimMismatch(format!(
                "input dimension {} != channel input {}",
                input.dim(),
                self.dim_in()
            )));
        }
        Ok(MultipartiteState::from_trusted(
            self.apply_matrix(input.rho()),
            self.out_dims.clone(),
            self.out_labels.clone(),
        ))
    }

    /// Kraus form, via spectral decompositions of the POVM elements and the
    /// prepared states.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let d_in = self.dim_in();
        let dim_out: usize = self.out_dims.iter().product();
        let mut kraus = Vec::new();
        for (m, s) in self.povm.iter().zip(&self.preparations) {
            let em = eigh(m)?;
            let es = eigh(s)?;
            let mu = linalg::clipped_probabilities(&em.eigenvalues)?;
            let lam = linalg::clipped_probabilities(&es.eigenvalues)?;
            for (k, &mk) in mu.iter().enumerate() {
                if mk <= 0.0 {
                    continue;
                }
                let w = em.eigenvectors.column(k);
                for (j, &lj) in lam.iter().enumerate() {
                    if lj <= 0.0 {
                        continue;
                    }
                    let v = es.eigenvectors.column(j);
                    let coeff = (lj * mk).sqrt();
                    let mut op = CMatrix::zeros(dim_out, d_in);
                    for r in 0..dim_out {
                        let vr = v[r] * coeff;
                        for cidx in 0..d_in {
                            op[(r, cidx)] = vr * w[cidx].conj();
                        }
                    }
                    kraus.push(op);
                }
            }
        }
        KrausChannel::new(kraus, d_in, self.out_dims.clone(), self.out_labels.clone())
    }
}

/// An ensemble `{p_α, ρ_A^α, σ_R^α}`: the separable-decomposition data
/// produced by measuring a blanket region.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub probs: Vec<f64>,
    pub states_a: Vec<CMatrix>,
    pub states_r: Vec<CMatrix>,
    pub dims_r: Vec<usize>,
    pub labels_r: Vec<String>,
}

impl Ensemble {
    pub fn new(
        probs: Vec<f64>,
        states_a: Vec<CMatrix>,
        states_r: Vec<CMatrix>,
        dims_r: Vec<usize>,
        labels_r: Vec<String>,
    ) -> Result<Self> {
        if probs.len() != states_a.len() || probs.len() != states_r.len() || probs.is_empty() {
            return Err(Error::InvalidEnsemble("length mismatch".into()));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > TRACE_SUM_TOL {
            return Err(Error::InvalidEnsemble(format!(
                "probabilities sum to {total:.12}"
            )));
        }
        for s in states_a.iter().chain(states_r.iter()) {
            check_density_matrix(s, "ensemble member")?;
        }
        Ok(Self {
            probs,
            states_a,
            states_r,
            dims_r,
            labels_r,
        })
    }

    /// `Σ_α p_α ρ_A^α ⊗ σ_R^α` as a plain matrix on `A ⊗ R`.
    pub fn separable_matrix(&self) -> CMatrix {
        let d_a = self.states_a[0].nrows();
        let d_r = self.states_r[0].nrows();
        let mut out = CMatrix::zeros(d_a * d_r, d_a * d_r);
        for ((p, a), r) in self.probs.iter().zip(&self.states_a).zip(&self.states_r) {
            out += kron(a, r).scale(*p);
        }
        out
    }
}

const TRACE_SUM_TOL: f64 = 1e-10;

/// Build the measure-and-prepare channel whose Choi state is
/// `Σ_α p_α ρ_A^α ⊗ σ_R^α`: the POVM is `M_α = d_A p_α (ρ_A^α)^T`.
///
/// Completeness of the POVM is what certifies that the ensemble came from a
/// maximally-mixed-marginal Choi state; deviations up to
/// [`POVM_COMPLETENESS_TOL`] are repaired by the symmetric correction
/// `S^{-1/2} M_α S^{-1/2}`, larger ones are an error.
pub fn ensemble_to_mp_channel(e: &Ensemble) -> Result<MeasureAndPrepareChannel> {
    let d_a = e.states_a[0].nrows();
    let mut povm: Vec<CMatrix> = e
        .probs
        .iter()
        .zip(&e.states_a)
        .map(|(p, rho)| rho.transpose().scale(p * d_a as f64))
        .collect();
    let mut sum = CMatrix::zeros(d_a, d_a);
    for m in &povm {
        sum += m;
    }
    let dev = max_abs_diff(&sum, &identity(d_a));
    if dev > POVM_COMPLETENESS_TOL {
        return Err(Error::InvalidPovm(format!(
            "ensemble does not resolve the identity (deviation {dev:.3e}); \
             not the marginal data of a valid Choi state"
        )));
    }
    if dev > 1e-13 {
        let eig = eigh(&sum)?;
        if eig.eigenvalues[0] <= 0.0 {
            return Err(Error::InvalidPovm(
                "POVM sum is singular; cannot renormalize".into(),
            ));
        }
        let inv_sqrt = eig.map_spectrum(|x| Complex64::new(1.0 / x.sqrt(), 0.0));
        for m in povm.iter_mut() {
            *m = &inv_sqrt * (m as &CMatrix) * &inv_sqrt;
            // the correction preserves Hermiticity up to roundoff
            *m = linalg::symmetrize(m);
        }
    }
    MeasureAndPrepareChannel::new(
        povm,
        e.states_r.clone(),
        e.dims_r.clone(),
        e.labels_r.clone(),
    )
}

/// The dimensional factor relating the one-way LOCC norm to the trace norm:
/// `Ω = min{d_A², 4 d_A^{3/2}, 4 d_R^{3/2}, sqrt(153 d_A d_R), 2 d_R − 1}`.
pub fn omega_factor(d_a: usize, d_r: usize) -> f64 {
    let a = d_a as f64;
    let r = d_r as f64;
    [
        a * a,
        4.0 * a.powf(1.5),
        4.0 * r.powf(1.5),
        (153.0 * a * r).sqrt(),
        2.0 * r - 1.0,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Trace norm of `(1 ⊗ M)(op)` for the quantum-classical channel of a
/// projective measurement on the complement of subsystem 0: since the blocks
/// are orthogonal, it is the sum of the conditional blocks' trace norms.
pub fn measured_trace_norm(
    op: &CMatrix,
    dims: &[usize],
    m: &ProjectiveMeasurement,
) -> Result<f64> {
    check_measurement_fits(dims, m)?;
    let blocks = conditional_blocks(op, dims, m);
    let mut total = 0.0;
    for g in &blocks {
        total += trace_norm(g)?;
    }
    Ok(total)
}

/// Heuristic one-way LOCC distance between states on `A ⊗ R` (subsystem 0 is
/// `A`, the rest is `R`): the maximum over rank-1 projective measurements on
/// `R` of `‖(1 ⊗ M_R)(s1 − s2)‖₁`, found by restarted Nelder–Mead.
///
/// The result is an achieved value, hence a lower bound on the true one-way
/// LOCC norm, and never exceeds the trace-norm distance.
pub fn locc_arrow_distance(
    s1: &MultipartiteState,
    s2: &MultipartiteState,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    if s1.dims() != s2.dims() {
        return Err(Error::DimMismatch(
            "states must share subsystem dims".into(),
        ));
    }
    if s1.n_subsystems() < 2 {
        return Err(Error::InvalidRegion(
            "need at least one subsystem besides A".into(),
        ));
    }
    let delta = s1.rho() - s2.rho();
    let region = Region::new((1..s1.n_subsystems()).collect())?;
    let dims = s1.dims().to_vec();
    let cfg = OptimizerConfig {
        restarts,
        ..OptimizerConfig::default()
    }
    .with_seed(seed);
    let objective = |m: &ProjectiveMeasurement| {
        measured_trace_norm(&delta, &dims, m).expect("measurement fits by construction")
    };
    let region_dims: Vec<usize> = region.iter().map(|i| dims[i]).collect();
    let (_, value) =
        crate::blanket::optimize_measurement(&objective, &region, &region_dims, &cfg)?;
    Ok(value)
}

/// Upper bound on the diamond distance of two channels from their Choi
/// states: `‖N₁ − N₂‖⋄ ≤ d_A ‖ρ^{N₁} − ρ^{N₂}‖₁`.
pub fn diamond_upper_bound(c1: &ChoiState, c2: &ChoiState) -> Result<f64> {
    if c1.d_a() != c2.d_a() || c1.state().dims() != c2.state().dims() {
        return Err(Error::DimMismatch(
            "Choi states must share input and output dims".into(),
        ));
    }
    let tn = trace_norm(&(c1.state().rho() - c2.state().rho()))?;
    Ok(c1.d_a() as f64 * tn)
}
