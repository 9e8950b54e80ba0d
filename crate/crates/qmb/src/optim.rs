//! Derivative-free maximization used by the measurement search: Nelder–Mead
//! with deterministic seeding, plus the `exp(iH(θ))` parameterization that
//! turns an unconstrained real vector into a projective measurement basis.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, CMatrix};

/// Budget and seeding for the restarted Nelder–Mead search.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of independent starts (the first one is the identity basis).
    pub restarts: usize,
    /// Maximum Nelder–Mead iterations per restart.
    pub max_iters: usize,
    /// Simplex spread below which a restart stops early.
    pub simplex_tol: f64,
    /// Master seed; all per-cell seeds are derived from it.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 250,
            simplex_tol: 1e-9,
            seed: 7,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        if self.simplex_tol.is_nan() || self.simplex_tol <= 0.0 {
            return Err(Error::InvalidConfig("simplex tolerance must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Slack allowed when comparing two runs of the heuristic maximizer, in bits.
pub const DEFAULT_OPT_SLACK_BITS: f64 = 1e-3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-cell seed, independent of evaluation order.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    s
}

/// Number of real parameters of a rank-1 projective measurement on dimension `d`.
pub fn params_len(d: usize) -> usize {
    d * d
}

/// Basis unitary `U = exp(iH(θ))` from `d²` real parameters: `d` diagonal
/// entries of `H` followed by `(re, im)` pairs for the strict upper triangle.
pub fn unitary_from_params(theta: &[f64], d: usize) -> CMatrix {
    assert_eq!(theta.len(), params_len(d), "wrong parameter count");
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = Complex64::new(theta[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = Complex64::new(theta[k], theta[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    expm_hermitian(&h, Complex64::new(0.0, 1.0)).expect("H(θ) is Hermitian by construction")
}

/// Starting point sampled uniformly from `[-π, π]^n`.
pub fn random_params<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Nelder–Mead maximization from a single start.
///
/// Returns the best point ever evaluated, not just the final simplex best, so
/// the value is monotone in the evaluation budget and the start point itself
/// is always a candidate.
pub fn nelder_mead_max<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const BETA: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let n = x0.len();
    let mut best_x = x0.to_vec();
    let mut best_v = f(x0);
    // minimize g = -f
    let eval = |x: &[f64], best_x: &mut Vec<f64>, best_v: &mut f64| -> f64 {
        let v = f(x);
        if v > *best_v {
            *best_v = v;
            best_x.clear();
            best_x.extend_from_slice(x);
        }
        -v
    };

    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    verts.push(x0.to_vec());
    vals.push(-best_v);
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        let g = eval(&v, &mut best_x, &mut best_v);
        verts.push(v);
        vals.push(g);
    }

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let lo = order[0];
        let hi = order[n];
        let second_hi = order[n - 1];
        if (vals[hi] - vals[lo]).abs() < tol {
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(verts[i].iter()) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(verts[hi].iter())
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let g_r = eval(&reflect, &mut best_x, &mut best_v);

        if g_r < vals[lo] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(verts[hi].iter())
                .map(|(c, w)| c + GAMMA * (c - w))
                .collect();
            let g_e = eval(&expand, &mut best_x, &mut best_v);
            if g_e < g_r {
                verts[hi] = expand;
                vals[hi] = g_e;
            } else {
                verts[hi] = reflect;
                vals[hi] = g_r;
            }
        } else if g_r < vals[second_hi] {
            verts[hi] = reflect;
            vals[hi] = g_r;
        } else {
            // contract toward the better of the worst vertex and the reflection
            let (base, g_base) = if g_r < vals[hi] {
                (reflect.clone(), g_r)
            } else {
                (verts[hi].clone(), vals[hi])
            };
            let contract: Vec<f64> = centroid
                .iter()
                .zip(base.iter())
                .map(|(c, w)| c + BETA * (w - c))
                .collect();
            let g_c = eval(&contract, &mut best_x, &mut best_v);
            if g_c < g_base {
                verts[hi] = contract;
                vals[hi] = g_c;
            } else {
                // shrink everything toward the best vertex
                let anchor = verts[lo].clone();
                for i in 0..=n {
                    if i == lo {
                        continue;
                    }
                    let shrunk: Vec<f64> = anchor
                        .iter()
                        .zip(verts[i].iter())
                        .map(|(a, x)| a + SIGMA * (x - a))
                        .collect();
                    vals[i] = eval(&shrunk, &mut best_x, &mut best_v);
                    verts[i] = shrunk;
                }
            }
        }
    }
    (best_x, best_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};

    #[test]
    fn unitary_from_params_is_unitary() {
        let theta: Vec<f64> = (0..16).map(|i| 0.3 * (i as f64) - 1.1).collect();
        let u = unitary_from_params(&theta, 4);
        assert!(max_abs_diff(&(u.adjoint() * &u), &identity(4)) < 1e-12);
    }

    #[test]
    fn zero_params_give_identity_basis() {
        let u = unitary_from_params(&[0.0; 4], 2);
        assert!(max_abs_diff(&u, &identity(2)) < 1e-14);
    }

    #[test]
    fn nelder_mead_finds_quadratic_maximum() {
        let f = |x: &[f64]| -((x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2));
        let (x, v) = nelder_mead_max(&f, &[0.0, 0.0], 0.5, 400, 1e-12);
        assert!(v > -1e-10, "v = {v}");
        assert!((x[0] - 1.5).abs() < 1e-4 && (x[1] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn nelder_mead_reports_best_ever_point() {
        // constant objective: the start point must be returned with its value
        let f = |_: &[f64]| 2.5;
        let (_, v) = nelder_mead_max(&f, &[0.3, 0.4, 0.5], 0.5, 50, 1e-12);
        assert_eq!(v, 2.5);
    }

    #[test]
    fn derive_seed_is_stable_and_tag_sensitive() {
        let a = derive_seed(42, &[1, 2, 3]);
        let b = derive_seed(42, &[1, 2, 3]);
        let c = derive_seed(42, &[1, 2, 4]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
