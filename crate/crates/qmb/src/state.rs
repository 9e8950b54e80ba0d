//! Multipartite density matrices with subsystem structure, and the entropic
//! quantities built on them: von Neumann entropy, mutual information,
//! conditional mutual information, and relative entropy.
//!
//! All entropies are in bits (log base 2). Bounds that the literature states
//! in nats carry an explicit `2 ln 2` factor elsewhere in the crate.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, clipped_probabilities, eigh, shannon_entropy_bits, symmetrize, trace_of, CMatrix,
    CVector, HERMITICITY_TOL,
};

/// Trace of a state may deviate this much from one.
pub const TRACE_TOL: f64 = 1e-10;

/// A sorted set of subsystem positions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Region {
    indices: Vec<usize>,
}

impl Region {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRegion("duplicate subsystem index".into()));
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    pub fn single(i: usize) -> Self {
        Self { indices: vec![i] }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.indices.iter().all(|&i| !other.contains(i))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        v.sort_unstable();
        v.dedup();
        Region { indices: v }
    }

    pub fn union_all<'a, I: IntoIterator<Item = &'a Region>>(regions: I) -> Region {
        regions
            .into_iter()
            .fold(Region::empty(), |acc, r| acc.union(r))
    }

    /// All positions in `0..n` not in this region.
    pub fn complement(&self, n: usize) -> Region {
        Region {
            indices: (0..n).filter(|&i| !self.contains(i)).collect(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

/// Index bookkeeping for one bipartition of the subsystem list.
///
/// Full indices are big-endian over the dims list (subsystem 0 most
/// significant), matching the Kronecker-product convention.
pub(crate) struct SplitIndex {
    pub keep_dim: usize,
    pub rest_dim: usize,
    full: Vec<usize>,
}

impl SplitIndex {
    pub fn new(dims: &[usize], keep: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let keep_dim: usize = keep.iter().map(|&i| dims[i]).product();
        let rest_dim = total / keep_dim.max(1);
        let mut full = vec![0usize; total];
        let n = dims.len();
        let mut digits = vec![0usize; n];
        for f in 0..total {
            let mut x = f;
            for i in (0..n).rev() {
                digits[i] = x % dims[i];
                x /= dims[i];
            }
            let mut a = 0usize;
            for &i in keep {
                a = a * dims[i] + digits[i];
            }
            let mut b = 0usize;
            for i in 0..n {
                if keep.binary_search(&i).is_err() {
                    b = b * dims[i] + digits[i];
                }
            }
            full[a * rest_dim + b] = f;
        }
        Self {
            keep_dim,
            rest_dim,
            full,
        }
    }

    #[inline]
    pub fn full(&self, a: usize, b: usize) -> usize {
        self.full[a * self.rest_dim + b]
    }
}

/// Positions of `sub`'s members within the sorted index list of `within`.
pub(crate) fn relative_positions(within: &Region, sub: &Region) -> Vec<usize> {
    sub.iter()
        .map(|i| {
            within
                .indices()
                .binary_search(&i)
                .expect("sub region not contained in parent region")
        })
        .collect()
}

/// A dense density matrix together with an ordered list of subsystem
/// dimensions and labels.
///
/// Construction checks Hermiticity (then symmetrizes), unit trace, and that
/// the dimensions multiply up to the matrix size. Positive semidefiniteness is
/// checked separately by [`MultipartiteState::validate_density`]: a few
/// operators handled by this crate (notably the compatibility counterexample
/// family) are Hermitian and unit-trace but deliberately not positive.
#[derive(Clone, Debug)]
pub struct MultipartiteState {
    rho: CMatrix,
    dims: Vec<usize>,
    labels: Vec<String>,
}

pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i}")).collect()
}

impl MultipartiteState {
    pub fn new(rho: CMatrix, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidState("empty or zero subsystem dims".into()));
        }
        if labels.len() != dims.len() {
            return Err(Error::InvalidState(format!(
                "{} labels for {} subsystems",
                labels.len(),
                dims.len()
            )));
        }
        let total: usize = dims.iter().product();
        if rho.nrows() != total || rho.ncols() != total {
            return Err(Error::DimMismatch(format!(
                "matrix is {}x{}, dims multiply to {}",
                rho.nrows(),
                rho.ncols(),
                total
            )));
        }
        let dev = linalg::hermiticity_deviation(&rho);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                dev,
                tol: HERMITICITY_TOL,
            });
        }
        let rho = symmetrize(&rho);
        let tr = trace_of(&rho);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {:.12} + {:.3e}i is not 1",
                tr.re, tr.im
            )));
        }
        Ok(Self { rho, dims, labels })
    }

    /// Constructor for matrices produced by operations that preserve validity.
    pub(crate) fn from_trusted(rho: CMatrix, dims: Vec<usize>, labels: Vec<String>) -> Self {
        debug_assert_eq!(rho.nrows(), dims.iter().product::<usize>());
        debug_assert_eq!(labels.len(), dims.len());
        Self { rho, dims, labels }
    }

    /// Density matrix of a pure state vector.
    pub fn pure(v: &CVector, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let rho = v * v.adjoint();
        Self::new(rho, dims, labels)
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn dim_of(&self, r: &Region) -> usize {
        r.iter().map(|i| self.dims[i]).product()
    }

    fn check_region(&self, r: &Region) -> Result<()> {
        if let Some(m) = r.max_index() {
            if m >= self.dims.len() {
                return Err(Error::InvalidRegion(format!(
                    "index {m} out of range for {} subsystems",
                    self.dims.len()
                )));
            }
        }
        Ok(())
    }

    /// Checks positivity of the spectrum on top of the constructor checks.
    pub fn validate_density(&self) -> Result<()> {
        let eig = eigh(&self.rho)?;
        let min = eig.eigenvalues[0];
        if min < -linalg::EIGENVALUE_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Reduced density matrix on `keep`; subsystem order follows the original.
    pub fn partial_trace(&self, keep: &Region) -> Result<MultipartiteState> {
        if keep.is_empty() {
            return Err(Error::InvalidRegion("cannot keep the empty region".into()));
        }
        self.check_region(keep)?;
        if keep.len() == self.dims.len() {
            return Ok(self.clone());
        }
        let split = SplitIndex::new(&self.dims, keep.indices());
        let mut out = CMatrix::zeros(split.keep_dim, split.keep_dim);
        for a in 0..split.keep_dim {
            for a2 in 0..split.keep_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..split.rest_dim {
                    acc += self.rho[(split.full(a, b), split.full(a2, b))];
                }
                out[(a, a2)] = acc;
            }
        }
        let dims = keep.iter().map(|i| self.dims[i]).collect();
        let labels = keep.iter().map(|i| self.labels[i].clone()).collect();
        Ok(MultipartiteState::from_trusted(out, dims, labels))
    }

    /// Von Neumann entropy in bits.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let eig = eigh(&self.rho)?;
        let p = clipped_probabilities(&eig.eigenvalues)?;
        Ok(shannon_entropy_bits(&p))
    }

    /// Entropy of the marginal on `r`, in bits.
    pub fn entropy_of(&self, r: &Region) -> Result<f64> {
        if r.len() == self.dims.len() {
            self.von_neumann_entropy()
        } else {
            self.partial_trace(r)?.von_neumann_entropy()
        }
    }

    /// `I(X:Y) = S(X) + S(Y) - S(XY)` in bits.
    pub fn mutual_information(&self, x: &Region, y: &Region) -> Result<f64> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidRegion(
                "mutual information needs nonempty regions".into(),
            ));
        }
        if !x.is_disjoint(y) {
            return Err(Error::InvalidRegion("overlapping regions".into()));
        }
        self.check_region(x)?;
        self.check_region(y)?;
        let sx = self.entropy_of(x)?;
        let sy = self.entropy_of(y)?;
        let sxy = self.entropy_of(&x.union(y))?;
        Ok(sx + sy - sxy)
    }

    /// `I(X:Y|Z) = S(XZ) + S(YZ) - S(Z) - S(XYZ)` in bits.
    ///
    /// `Z` may be empty, in which case this is the plain mutual information.
    /// Nonnegative up to numerics, by strong subadditivity.
    pub fn conditional_mutual_information(
        &self,
        x: &Region,
        y: &Region,
        z: &Region,
    ) -> Result<f64> {
        if z.is_empty() {
            return self.mutual_information(x, y);
        }
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidRegion(
                "conditional mutual information needs nonempty X, Y".into(),
            ));
        }
        if !x.is_disjoint(y) || !x.is_disjoint(z) || !y.is_disjoint(z) {
            return Err(Error::InvalidRegion("overlapping regions".into()));
        }
        self.check_region(x)?;
        self.check_region(y)?;
        self.check_region(z)?;
        let sxz = self.entropy_of(&x.union(z))?;
        let syz = self.entropy_of(&y.union(z))?;
        let sz = self.entropy_of(z)?;
        let sxyz = self.entropy_of(&x.union(y).union(z))?;
        Ok(sxz + syz - sz - sxyz)
    }

    /// Residual `|I(X:Y1..Yn) - Σ_i I(X:Yi|Y1..Y_{i-1})|` of the chain rule.
    pub fn chain_rule_check(&self, x: &Region, parts: &[Region]) -> Result<f64> {
        if parts.is_empty() {
            return Err(Error::InvalidRegion("no parts given".into()));
        }
        for (i, p) in parts.iter().enumerate() {
            if !x.is_disjoint(p) {
                return Err(Error::InvalidRegion("part overlaps X".into()));
            }
            for q in &parts[i + 1..] {
                if !p.is_disjoint(q) {
                    return Err(Error::InvalidRegion("parts overlap".into()));
                }
            }
        }
        let total = self.mutual_information(x, &Region::union_all(parts))?;
        let mut sum = 0.0;
        let mut prefix = Region::empty();
        for p in parts {
            sum += self.conditional_mutual_information(x, p, &prefix)?;
            prefix = prefix.union(p);
        }
        Ok((total - sum).abs())
    }

    /// Tensor product of two states; dims and labels concatenate.
    pub fn tensor(a: &MultipartiteState, b: &MultipartiteState) -> MultipartiteState {
        let rho = linalg::kron(&a.rho, &b.rho);
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        let mut labels = a.labels.clone();
        labels.extend_from_slice(&b.labels);
        MultipartiteState::from_trusted(rho, dims, labels)
    }
}

/// Relative entropy `D(ρ‖σ) = Tr ρ (log2 ρ - log2 σ)` in bits.
///
/// Returns `+∞` when the support of `ρ` is not contained in the support of
/// `σ` (tested against the eigenvalue tolerance), rather than failing.
pub fn relative_entropy(rho: &MultipartiteState, sigma: &MultipartiteState) -> Result<f64> {
    if rho.dims != sigma.dims {
        return Err(Error::DimMismatch(
            "relative entropy needs identical subsystem dims".into(),
        ));
    }
    let er = eigh(&rho.rho)?;
    let es = eigh(&sigma.rho)?;
    let pr = clipped_probabilities(&er.eigenvalues)?;
    let ps = clipped_probabilities(&es.eigenvalues)?;
    let tr_rho_log_rho: f64 = pr.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum();

    // weight of rho on each eigenvector of sigma
    let overlap = es.eigenvectors.adjoint() * &rho.rho * &es.eigenvectors;
    let mut tr_rho_log_sigma = 0.0;
    for (j, &mu) in ps.iter().enumerate() {
        let w = overlap[(j, j)].re.max(0.0);
        if mu <= linalg::EIGENVALUE_TOL {
            if w > linalg::EIGENVALUE_TOL {
                return Ok(f64::INFINITY);
            }
        } else if w > 0.0 {
            tr_rho_log_sigma += w * mu.log2();
        }
    }
    Ok(tr_rho_log_rho - tr_rho_log_sigma)
}

/// Generic full-rank random state: a Haar-random pure state on
/// system ⊗ ancilla with ancilla dimension equal to the system dimension,
/// ancilla traced out.
pub fn random_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> MultipartiteState {
    let d: usize = dims.iter().product();
    let v = linalg::haar_vector(d * d, rng);
    // reshape |v> on system⊗ancilla as a d×d matrix; tracing the ancilla gives M M†
    let m = CMatrix::from_fn(d, d, |i, j| v[i * d + j]);
    let rho = &m * m.adjoint();
    MultipartiteState::from_trusted(rho, dims.to_vec(), default_labels(dims.len()))
}

/// Haar-random pure state on the given subsystem dims.
pub fn random_pure_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> MultipartiteState {
    let d: usize = dims.iter().product();
    let v = linalg::haar_vector(d, rng);
    MultipartiteState::from_trusted(
        &v * v.adjoint(),
        dims.to_vec(),
        default_labels(dims.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubits(n: usize) -> Vec<usize> {
        vec![2; n]
    }

    pub(crate) fn bell_pair() -> MultipartiteState {
        let mut v = CVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        MultipartiteState::pure(&v, qubits(2), default_labels(2)).unwrap()
    }

    pub(crate) fn ghz(n: usize) -> MultipartiteState {
        let d = 1 << n;
        let mut v = CVector::zeros(d);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[d - 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        MultipartiteState::pure(&v, qubits(n), default_labels(n)).unwrap()
    }

    fn diag_state(p: &[f64]) -> MultipartiteState {
        let n = p.len();
        let rho = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(p[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        MultipartiteState::new(rho, vec![n], vec!["S0".into()]).unwrap()
    }

    #[test]
    fn region_basics() {
        let r = Region::new(vec![3, 1, 2]).unwrap();
        assert_eq!(r.indices(), &[1, 2, 3]);
        assert!(Region::new(vec![1, 1]).is_err());
        assert!(r.contains(2));
        assert!(!r.contains(0));
        let s = Region::new(vec![0, 4]).unwrap();
        assert!(r.is_disjoint(&s));
        assert_eq!(r.union(&s).indices(), &[0, 1, 2, 3, 4]);
        assert_eq!(r.complement(5).indices(), &[0, 4]);
    }

    #[test]
    fn partial_trace_product_state() {
        let a = diag_state(&[0.2, 0.8]);
        let b = diag_state(&[0.4, 0.6]);
        let ab = MultipartiteState::tensor(&a, &b);
        let ra = ab.partial_trace(&Region::single(0)).unwrap();
        assert!(linalg::max_abs_diff(ra.rho(), a.rho()) < 1e-14);
        let rb = ab.partial_trace(&Region::single(1)).unwrap();
        assert!(linalg::max_abs_diff(rb.rho(), b.rho()) < 1e-14);
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let bell = bell_pair();
        let ra = bell.partial_trace(&Region::single(0)).unwrap();
        assert!(linalg::max_abs_diff(ra.rho(), &linalg::identity(2).scale(0.5)) < 1e-14);
    }

    #[test]
    fn partial_trace_orders_commute() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..10 {
            let s = random_state(&qubits(3), &mut rng);
            let keep01 = Region::new(vec![0, 1]).unwrap();
            let keep0 = Region::single(0);
            let via_01 = s
                .partial_trace(&keep01)
                .unwrap()
                .partial_trace(&keep0)
                .unwrap();
            let keep02 = Region::new(vec![0, 2]).unwrap();
            let via_02 = s
                .partial_trace(&keep02)
                .unwrap()
                .partial_trace(&keep0)
                .unwrap();
            assert!(linalg::max_abs_diff(via_01.rho(), via_02.rho()) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_regions() {
        let bell = bell_pair();
        assert!(bell.partial_trace(&Region::empty()).is_err());
        assert!(bell.partial_trace(&Region::single(5)).is_err());
    }

    #[test]
    fn entropies_match_known_values() {
        let bell = bell_pair();
        assert!(bell.von_neumann_entropy().unwrap().abs() < 1e-10);
        let mixed = diag_state(&[0.5, 0.5]);
        assert!((mixed.von_neumann_entropy().unwrap() - 1.0).abs() < 1e-12);
        let skew = diag_state(&[0.25, 0.75]);
        assert!((skew.von_neumann_entropy().unwrap() - 0.811278124459433).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_known_values() {
        let a = diag_state(&[0.2, 0.8]);
        let b = diag_state(&[0.4, 0.6]);
        let ab = MultipartiteState::tensor(&a, &b);
        assert!(ab
            .mutual_information(&Region::single(0), &Region::single(1))
            .unwrap()
            .abs()
            < 1e-10);

        let bell = bell_pair();
        let i = bell
            .mutual_information(&Region::single(0), &Region::single(1))
            .unwrap();
        assert!((i - 2.0).abs() < 1e-10);

        let g = ghz(3);
        let i = g
            .mutual_information(&Region::single(0), &Region::single(1))
            .unwrap();
        assert!((i - 1.0).abs() < 1e-10);

        assert!(bell
            .mutual_information(&Region::single(0), &Region::single(0))
            .is_err());

        // 0 <= I <= 2 min(S(X), S(Y)) on random states
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        for _ in 0..20 {
            let s = random_state(&qubits(3), &mut rng);
            let x = Region::single(0);
            let y = Region::new(vec![1, 2]).unwrap();
            let i = s.mutual_information(&x, &y).unwrap();
            let cap = 2.0 * s.entropy_of(&x).unwrap().min(s.entropy_of(&y).unwrap());
            assert!(i >= -1e-9 && i <= cap + 1e-9, "I = {i}, cap = {cap}");
        }
    }

    #[test]
    fn cmi_with_empty_conditioning_is_mi() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let s = random_state(&qubits(3), &mut rng);
        let x = Region::single(0);
        let y = Region::new(vec![1, 2]).unwrap();
        let mi = s.mutual_information(&x, &y).unwrap();
        let cmi = s
            .conditional_mutual_information(&x, &y, &Region::empty())
            .unwrap();
        assert!((mi - cmi).abs() < 1e-12);
    }

    #[test]
    fn cmi_of_ghz_is_one_bit() {
        // S(XZ) = S(YZ) = S(Z) = 1, S(XYZ) = 0 for the three qubits of GHZ3,
        // so I(X:Y|Z) = 1 bit exactly.
        let g = ghz(3);
        let cmi = g
            .conditional_mutual_information(&Region::single(0), &Region::single(1), &Region::single(2))
            .unwrap();
        assert!((cmi - 1.0).abs() < 1e-10, "got {cmi}");

        assert!(g
            .conditional_mutual_information(&Region::single(0), &Region::single(1), &Region::single(1))
            .is_err());
    }

    #[test]
    fn strong_subadditivity_on_random_states() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for trial in 0..200 {
            let n = if trial % 2 == 0 { 3 } else { 4 };
            let s = random_state(&qubits(n), &mut rng);
            let x = Region::single(0);
            let y = Region::single(1);
            let z = Region::new((2..n).collect()).unwrap();
            let cmi = s.conditional_mutual_information(&x, &y, &z).unwrap();
            assert!(cmi >= -1e-9, "SSA violated: {cmi}");
        }
    }

    #[test]
    fn chain_rule_residuals() {
        let a = diag_state(&[0.2, 0.8]);
        let b = diag_state(&[0.4, 0.6]);
        let cstate = diag_state(&[0.9, 0.1]);
        let abc = MultipartiteState::tensor(&MultipartiteState::tensor(&a, &b), &cstate);
        let res = abc
            .chain_rule_check(&Region::single(0), &[Region::single(1), Region::single(2)])
            .unwrap();
        assert!(res < 1e-12);

        let bell = bell_pair();
        let res = bell
            .chain_rule_check(&Region::single(0), &[Region::single(1)])
            .unwrap();
        assert!(res < 1e-12);

        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for _ in 0..20 {
            let s = random_state(&qubits(4), &mut rng);
            let res = s
                .chain_rule_check(
                    &Region::single(0),
                    &[Region::single(1), Region::single(2), Region::single(3)],
                )
                .unwrap();
            assert!(res <= 1e-9, "chain rule residual {res}");
        }
    }

    #[test]
    fn entropy_additivity_and_two_step_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        let a = random_state(&qubits(2), &mut rng);
        let b = random_state(&qubits(1), &mut rng);
        let ab = MultipartiteState::tensor(&a, &b);
        let s_ab = ab.von_neumann_entropy().unwrap();
        let s_a = a.von_neumann_entropy().unwrap();
        let s_b = b.von_neumann_entropy().unwrap();
        assert!((s_ab - s_a - s_b).abs() < 1e-9);

        let s = random_state(&qubits(4), &mut rng);
        let direct = s.entropy_of(&Region::single(1)).unwrap();
        let two_step = s
            .partial_trace(&Region::new(vec![1, 2]).unwrap())
            .unwrap()
            .entropy_of(&Region::single(0))
            .unwrap();
        assert!((direct - two_step).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_known_values() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let rho = random_state(&qubits(2), &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-9);

        let zero = diag_state(&[1.0, 0.0]);
        let mixed = diag_state(&[0.5, 0.5]);
        let d = relative_entropy(&zero, &mixed).unwrap();
        assert!((d - 1.0).abs() < 1e-10);

        // support violation flags +∞ instead of failing
        let one = diag_state(&[0.0, 1.0]);
        assert!(relative_entropy(&one, &zero).unwrap().is_infinite());
    }

    #[test]
    fn relative_entropy_equals_mutual_information() {
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        for _ in 0..10 {
            let s = random_state(&qubits(2), &mut rng);
            let x = Region::single(0);
            let y = Region::single(1);
            let mi = s.mutual_information(&x, &y).unwrap();
            let prod = MultipartiteState::tensor(
                &s.partial_trace(&x).unwrap(),
                &s.partial_trace(&y).unwrap(),
            );
            let d = relative_entropy(&s, &prod).unwrap();
            assert!((mi - d).abs() < 1e-9, "mi={mi} d={d}");

            // Pinsker, in bits
            let tn = linalg::trace_norm(&(s.rho() - prod.rho())).unwrap();
            assert!(d >= tn * tn / (2.0 * std::f64::consts::LN_2) - 1e-9);
        }
    }

    #[test]
    fn random_state_is_valid_density() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let s = random_state(&qubits(3), &mut rng);
        s.validate_density().unwrap();
        let tr = trace_of(s.rho());
        assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
    }
}
