//! Vacuum moments of the type-B Gaussian operator.
//!
//! Every moment is a sum over colored pair partitions `π_f` of the weight
//! `λ_{π_f} = α^{NB} q^{Cr + 2 Nest}` times the pairing factors
//! `⟨x_z, x_w⟩` (positive pairs) or `⟨x_z, x̄_w⟩` (negative pairs).
//!
//! For [`scalar_moment`] and [`joint_moment`] the sum over the `2^n`
//! colorings of a fixed pairing factorizes,
//!
//! ```text
//! Σ_f λ_{π_f} ∏ ... = q^{Cr(π)} ∏_{p ∈ π} (C_p + α q^{2 c_p} D_p),
//! ```
//!
//! where `c_p` is the number of pairs covering `p`, so only uncolored
//! pairings are walked.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::partitions::{
    enumerate_for_epsilon, for_each_pairing, ColoredPairPartition, EpsilonWord, DEFAULT_CAP,
};

/// Deformation parameters `α, q ∈ (−1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    q: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, q: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("q", q)] {
            if !(v > -1.0 && v < 1.0) {
                return Err(domain!("{name} must lie strictly inside (-1, 1), got {v}"));
            }
        }
        Ok(ModelParams { alpha, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Gram data for a family `x_1, ..., x_k`: `C(i,j) = ⟨x_i, x_j⟩` and
/// `D(i,j) = ⟨x_i, x̄_j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSpec {
    dim: usize,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl CovarianceSpec {
    /// Row-major `dim × dim` matrices.
    pub fn new(dim: usize, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if dim == 0 || c.len() != dim * dim || d.len() != dim * dim {
            return Err(domain!("covariance matrices must be {dim}x{dim}"));
        }
        const TOL: f64 = 1e-12;
        for i in 0..dim {
            for j in 0..dim {
                let (cij, dij) = (c[i * dim + j], d[i * dim + j]);
                if (cij - c[j * dim + i]).abs() > TOL || (dij - d[j * dim + i]).abs() > TOL {
                    return Err(domain!("C and D must be symmetric"));
                }
                let bound = libm::sqrt(c[i * dim + i] * c[j * dim + j]);
                if dij.abs() > bound + TOL {
                    return Err(domain!(
                        "|D({},{})| = {} exceeds sqrt(C(i,i)C(j,j)) = {bound}",
                        i + 1,
                        j + 1,
                        dij.abs()
                    ));
                }
            }
        }
        Ok(CovarianceSpec { dim, c, d })
    }

    /// `C = I`, `D = diag(ds)`: an orthonormal family with `⟨e_i, ē_j⟩ = 0`
    /// for `i ≠ j`.
    pub fn orthonormal(ds: &[f64]) -> Result<Self> {
        let dim = ds.len();
        let mut c = vec![0.0; dim * dim];
        let mut d = vec![0.0; dim * dim];
        for (i, &di) in ds.iter().enumerate() {
            c[i * dim + i] = 1.0;
            d[i * dim + i] = di;
        }
        Self::new(dim, c, d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `C(i, j)` with 1-based indices.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[(i - 1) * self.dim + (j - 1)]
    }

    /// `D(i, j)` with 1-based indices.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[(i - 1) * self.dim + (j - 1)]
    }

    /// True when `C` is the identity and `D` is diagonal.
    pub fn is_orthonormal(&self) -> bool {
        (1..=self.dim).all(|i| {
            (1..=self.dim).all(|j| {
                let c_ok = self.c(i, j) == if i == j { 1.0 } else { 0.0 };
                c_ok && (i == j || self.d(i, j) == 0.0)
            })
        })
    }
}

/// `x^k` by repeated squaring, with `0^0 = 1`.
pub(crate) fn powi(mut x: f64, mut k: usize) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= x;
        }
        x *= x;
        k >>= 1;
    }
    acc
}

/// `λ_{π_f} = α^{NB(π_f)} q^{Cr(π) + 2 Nest(π_f)}`, with `0^0 = 1`.
pub fn lambda_coeff(pi_f: &ColoredPairPartition, p: &ModelParams) -> f64 {
    powi(p.alpha, pi_f.negative_blocks()) * powi(p.q, pi_f.crossings() + 2 * pi_f.nestings())
}

/// Pairwise (cascade) summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sums per-pairing terms: descending magnitude for orders above 10,
/// pairwise otherwise.
fn accumulate(order: usize, mut terms: Vec<f64>) -> f64 {
    if order > 10 {
        terms.sort_unstable_by(|a, b| b.abs().total_cmp(&a.abs()));
        terms.iter().sum()
    } else {
        pairwise_sum(&terms)
    }
}

/// Crossing count and, per pair, the number of pairs covering it.
fn pairing_profile(pairs: &[(usize, usize)], covered_by: &mut [usize]) -> usize {
    let mut cr = 0;
    for (k, &(z, w)) in pairs.iter().enumerate() {
        covered_by[k] = 0;
        for (l, &(z2, w2)) in pairs.iter().enumerate() {
            if z2 < z && w < w2 {
                covered_by[k] += 1;
            }
            if l > k && z < z2 && z2 < w && w < w2 {
                cr += 1;
            }
        }
    }
    cr
}

fn check_order(order: usize) -> Result<()> {
    if order > DEFAULT_CAP {
        return Err(Error::Resource {
            what: "moment order",
            estimate: order as f64,
            limit: DEFAULT_CAP as f64,
        });
    }
    Ok(())
}

fn check_d(d: f64) -> Result<()> {
    if !(d.abs() <= 1.0) {
        return Err(domain!("|<x, x-bar>| must be at most 1, got {d}"));
    }
    Ok(())
}

/// `⟨Ω, G(x)^order Ω⟩` for a unit vector `x` with `⟨x, x̄⟩ = d`.
///
/// Odd orders return exactly `0`.
pub fn scalar_moment(order: usize, p: &ModelParams, d: f64) -> Result<f64> {
    check_d(d)?;
    check_order(order)?;
    if order % 2 == 1 {
        return Ok(0.0);
    }
    if order == 0 {
        return Ok(1.0);
    }
    let ad = p.alpha * d;
    let mut covered_by = vec![0; order / 2];
    let mut terms = Vec::new();
    for_each_pairing(order, DEFAULT_CAP, |pairs| {
        let cr = pairing_profile(pairs, &mut covered_by);
        let colorings: f64 = covered_by
            .iter()
            .map(|&c| 1.0 + ad * powi(p.q, 2 * c))
            .product();
        terms.push(powi(p.q, cr) * colorings);
    })?;
    Ok(accumulate(order, terms))
}

/// `⟨Ω, G(x_{i(1)}) ⋯ G(x_{i(r)}) Ω⟩` for a family described by `cov`;
/// `indices` are 1-based.
pub fn joint_moment(indices: &[usize], p: &ModelParams, cov: &CovarianceSpec) -> Result<f64> {
    if let Some(&i) = indices.iter().find(|&&i| i == 0 || i > cov.dim()) {
        return Err(domain!("vector index {i} outside 1..={}", cov.dim()));
    }
    let order = indices.len();
    check_order(order)?;
    if order % 2 == 1 {
        return Ok(0.0);
    }
    if order == 0 {
        return Ok(1.0);
    }
    let mut covered_by = vec![0; order / 2];
    let mut terms = Vec::new();
    for_each_pairing(order, DEFAULT_CAP, |pairs| {
        let cr = pairing_profile(pairs, &mut covered_by);
        let colorings: f64 = pairs
            .iter()
            .zip(&covered_by)
            .map(|(&(z, w), &c)| {
                let (a, b) = (indices[z - 1], indices[w - 1]);
                cov.c(a, b) + p.alpha * powi(p.q, 2 * c) * cov.d(a, b)
            })
            .product();
        terms.push(powi(p.q, cr) * colorings);
    })?;
    Ok(accumulate(order, terms))
}

/// `Σ_{π_f ∈ P^B_{2;ε}} λ_{π_f} d^{NB(π_f)}`; zero when no colored pairing
/// is compatible with `ε`.
pub fn mixed_epsilon_moment(eps: &EpsilonWord, p: &ModelParams, d: f64) -> Result<f64> {
    check_d(d)?;
    check_order(eps.len())?;
    if eps.len() % 2 == 1 {
        return Ok(0.0);
    }
    let terms: Vec<f64> = enumerate_for_epsilon(eps)?
        .iter()
        .map(|pi_f| lambda_coeff(pi_f, p) * powi(d, pi_f.negative_blocks()))
        .collect();
    Ok(accumulate(eps.len(), terms))
}

/// `|P^B₂(order)|`, zero for odd orders.
pub fn colored_pairing_count(order: usize) -> u64 {
    if order % 2 == 1 {
        return 0;
    }
    crate::partitions::double_factorial_odd(order / 2) << (order / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::Color::{Negative as N, Positive as P};

    fn params(a: f64, q: f64) -> ModelParams {
        ModelParams::new(a, q).unwrap()
    }

    #[test]
    fn params_reject_boundary() {
        assert!(ModelParams::new(1.0, 0.0).is_err());
        assert!(ModelParams::new(0.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.0).is_err());
        assert!(ModelParams::new(-0.999, 0.999).is_ok());
    }

    #[test]
    fn lambda_examples() {
        let single = ColoredPairPartition::new(2, [(1, 2, P)]).unwrap();
        assert_eq!(lambda_coeff(&single, &params(0.7, -0.2)), 1.0);
        let cross = ColoredPairPartition::new(4, [(1, 3, P), (2, 4, P)]).unwrap();
        assert_eq!(lambda_coeff(&cross, &params(0.5, 0.3)), 0.3);
        let nest = ColoredPairPartition::new(4, [(1, 4, P), (2, 3, N)]).unwrap();
        assert!((lambda_coeff(&nest, &params(0.5, 0.3)) - 0.045).abs() < 1e-15);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        let nest = ColoredPairPartition::new(4, [(1, 4, P), (2, 3, P)]).unwrap();
        assert_eq!(lambda_coeff(&nest, &params(0.0, 0.0)), 1.0);
    }

    #[test]
    fn scalar_moment_examples() {
        let (a, q, d) = (0.37, -0.61, 0.8);
        let p = params(a, q);
        assert!((scalar_moment(2, &p, d).unwrap() - (1.0 + a * d)).abs() < 1e-15);
        let m4 = (1.0 + a) * ((1.0 + a) * (1.0 + q) + 1.0 + a * q * q);
        assert!((scalar_moment(4, &p, 1.0).unwrap() - m4).abs() < 1e-14);
        assert_eq!(scalar_moment(6, &params(0.0, 0.0), 1.0).unwrap(), 5.0);
        assert_eq!(scalar_moment(5, &p, d).unwrap(), 0.0);
        assert!(scalar_moment(4, &p, 1.5).is_err());
    }

    #[test]
    fn joint_moment_examples() {
        let p = params(0.4, 0.25);
        let one = CovarianceSpec::new(1, vec![1.0], vec![0.6]).unwrap();
        assert!((joint_moment(&[1, 1], &p, &one).unwrap() - 1.24).abs() < 1e-15);
        let ortho = CovarianceSpec::orthonormal(&[0.0, 0.0]).unwrap();
        assert_eq!(joint_moment(&[1, 2], &p, &ortho).unwrap(), 0.0);
        assert_eq!(joint_moment(&[1, 2, 2, 1], &p, &ortho).unwrap(), 1.0);
        assert!(joint_moment(&[1, 3], &p, &ortho).is_err());
    }

    #[test]
    fn mixed_epsilon_examples() {
        let p = params(0.45, 0.2);
        let m = |w: &str, d| mixed_epsilon_moment(&w.parse().unwrap(), &p, d).unwrap();
        assert_eq!(m("*1", 1.0), 1.0);
        assert_eq!(m("*'", 1.0), 0.45);
        assert_eq!(m("**", 1.0), 0.0);
    }

    #[test]
    fn covariance_validation() {
        assert!(CovarianceSpec::new(2, vec![1.0, 0.5, 0.4, 1.0], vec![0.0; 4]).is_err());
        assert!(CovarianceSpec::new(1, vec![1.0], vec![1.5]).is_err());
        assert!(CovarianceSpec::new(2, vec![1.0; 3], vec![0.0; 4]).is_err());
        assert!(CovarianceSpec::orthonormal(&[0.5, -0.5])
            .unwrap()
            .is_orthonormal());
    }

    #[test]
    fn pairwise_sum_matches_plain_sum_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn counts() {
        assert_eq!(colored_pairing_count(4), 12);
        assert_eq!(colored_pairing_count(6), 120);
        assert_eq!(colored_pairing_count(3), 0);
    }
}
