//! Dense complex linear algebra primitives for desk-scale quantum numerics.
//!
//! Everything is built on [`nalgebra`] dense matrices with `Complex<f64>`
//! entries. Functions of Hermitian matrices (exponentials, entropies) all go
//! through an eigendecomposition rather than Padé or scaling-and-squaring;
//! at dimensions up to ~2^10 exactness wins over asymptotic speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max-entry tolerance for treating a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues of states may dip this far below zero before we call it an error.
pub const EIGENVALUE_TOL: f64 = 1e-10;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace_of(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Max-entry deviation of `m` from its own adjoint.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_deviation(m) <= tol
}

/// `(m + m†)/2`; absorbs floating-point drift from repeated partial traces.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let dev = hermiticity_deviation(m);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            dev,
            tol: HERMITICITY_TOL,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Real eigenvalues in ascending order.
    pub eigenvalues: DVector<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a scalar function of the spectrum.
    pub fn map_spectrum<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// `V Λ V†`, which should reproduce the input.
    pub fn reconstruct(&self) -> CMatrix {
        self.map_spectrum(|x| Complex64::new(x, 0.0))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before decomposition, provided its deviation from
/// Hermiticity is within [`HERMITICITY_TOL`]; larger deviations are an error.
pub fn eigh(m: &CMatrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let sym = symmetrize(m);
    let n = sym.nrows();
    if n == 0 {
        return Err(Error::DimMismatch("empty matrix".into()));
    }
    let se = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

    // nalgebra does not sort; order ascending and permute the columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(scale * h)` for Hermitian `h`, via the spectral decomposition.
///
/// Unitary whenever `scale` is purely imaginary.
pub fn expm_hermitian(h: &CMatrix, scale: Complex64) -> Result<CMatrix> {
    let eig = eigh(h)?;
    Ok(eig.map_spectrum(|x| (scale * x).exp()))
}

/// Kronecker (tensor) product, first factor most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Schatten 1-norm: sum of singular values.
///
/// Hermitian inputs take the spectral route (sum of |eigenvalues|), which is
/// the only case exercised by the state-distance bounds in this crate.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    check_square(m)?;
    if hermiticity_deviation(m) <= HERMITICITY_TOL {
        let eig = eigh(m)?;
        Ok(eig.eigenvalues.iter().map(|x| x.abs()).sum())
    } else {
        Ok(m.clone().singular_values().iter().sum())
    }
}

/// Clip a spectrum to `[0, ∞)`, rejecting eigenvalues below `-EIGENVALUE_TOL`.
pub fn clipped_probabilities(eigs: &DVector<f64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(eigs.len());
    for &x in eigs.iter() {
        if x < -EIGENVALUE_TOL {
            return Err(Error::Numerical(format!(
                "eigenvalue {x:.3e} below -{EIGENVALUE_TOL:.1e}"
            )));
        }
        out.push(x.max(0.0));
    }
    Ok(out)
}

/// `-Σ p log2 p` over nonnegative weights; zeros contribute nothing.
pub fn shannon_entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..n {
        let d = r_diag[j];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn haar_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let mut v = CVector::from_fn(n, |_, _| gaussian_complex(rng));
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

/// Haar-random isometry: `cols` orthonormal columns in dimension `rows`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows);
    let u = haar_unitary(rows, rng);
    u.columns(0, cols).into_owned()
}
