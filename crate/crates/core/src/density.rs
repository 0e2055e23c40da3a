//! The `MP_{α,q}` density and its moments.
//!
//! With `R = 2/√(1−q)` the density on `(−R, R)` is
//!
//! ```text
//!            (q;q)_∞ (−α;q)_∞        g(t,1) g(t,−1) g(t,√q) g(t,−√q)
//! f(t) = ───────────────────── · ─────────────────────────────────
//!         2π √(R² − t²)                 g(t,iβ) g(t,−iβ)
//! ```
//!
//! with `β² = −α` and `g(t,b) = ∏_k (1 − b t √(1−q) q^k + b² q^{2k})`.
//! Every `g` appears next to its partner `g(t,−b)` (or its conjugate), and
//! the product of a partner pair only depends on `b²`:
//!
//! ```text
//! g(t,b) g(t,−b) = ∏_k [(1 + b² q^{2k})² − b² t² (1−q) q^{2k}]   =: P(t, b²).
//! ```
//!
//! So the density is evaluated in real arithmetic as
//! `P(t,1) P(t,q) / P(t,α)`. The `k = 0` factor of `P(t,1)` equals
//! `(1−q)(R² − t²)`, which is cancelled against the square root in closed
//! form.

use core::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature;

/// Default number of product factors.
pub const DEFAULT_TERMS: usize = 200;
/// Absolute tolerance requested from the quadrature.
pub const QUADRATURE_TOL: f64 = 1e-7;
/// Largest moment order [`density_moment`] accepts.
pub const MAX_MOMENT_ORDER: usize = 8;
const MAX_INTERVALS: usize = 500;
const AUTO_TERMS_LIMIT: usize = 1 << 16;

/// `(s; q)_K = ∏_{k=0}^{K−1} (1 − s q^k)`.
///
/// For `|s q^K| ≤ 1/2` the relative truncation error against the infinite
/// product is at most about `2|s||q|^K / (1 − |q|)`.
pub fn q_pochhammer(s: f64, q: f64, terms: usize) -> Result<f64> {
    if !(q.abs() < 1.0) {
        return Err(domain!("q-Pochhammer needs |q| < 1, got {q}"));
    }
    let mut qk = 1.0;
    let mut acc = 1.0;
    for _ in 0..terms {
        acc *= 1.0 - s * qk;
        qk *= q;
    }
    Ok(acc)
}

/// `g(t, b; q) = ∏_{k=0}^{K−1} (1 − b t √(1−q) q^k + b² q^{2k})` for real `b`.
pub fn g_factor(t: f64, b: f64, q: f64, terms: usize) -> f64 {
    let scale = libm::sqrt(1.0 - q);
    let mut qk = 1.0;
    let mut acc = 1.0;
    for _ in 0..terms {
        acc *= 1.0 - b * t * scale * qk + b * b * qk * qk;
        qk *= q;
    }
    acc
}

/// `g(t,b) g(t,−b)` (equivalently `g(t,ib') g(t,−ib')` with `b2 = −b'²`)
/// as a function of `b2 = b²`.
pub fn paired_g(t: f64, b2: f64, q: f64, terms: usize) -> f64 {
    let mut q2k = 1.0;
    let mut acc = 1.0;
    let cross = b2 * t * t * (1.0 - q);
    for _ in 0..terms {
        let base = 1.0 + b2 * q2k;
        acc *= base * base - cross * q2k;
        q2k *= q * q;
    }
    acc
}

/// Parameters of `MP_{α,q}` plus the product truncation `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityParams {
    alpha: f64,
    q: f64,
    terms: usize,
}

impl DensityParams {
    pub fn new(alpha: f64, q: f64, terms: usize) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("q", q)] {
            if !(v > -1.0 && v < 1.0) {
                return Err(domain!("{name} must lie strictly inside (-1, 1), got {v}"));
            }
        }
        if terms == 0 {
            return Err(domain!("truncation must keep at least one factor"));
        }
        Ok(DensityParams { alpha, q, terms })
    }

    /// Starts from [`DEFAULT_TERMS`] and doubles `K` until two successive
    /// truncations agree to `1e-10` at a few probe points.
    pub fn with_auto_terms(alpha: f64, q: f64) -> Result<Self> {
        let mut p = Self::new(alpha, q, DEFAULT_TERMS)?;
        let r = p.support_radius();
        let probes = [0.0, r / 3.0, 2.0 * r / 3.0, 0.95 * r];
        loop {
            let doubled = Self::new(alpha, q, 2 * p.terms)?;
            let mut worst: f64 = 0.0;
            for &t in &probes {
                worst = worst.max((density_eval(t, &p)? - density_eval(t, &doubled)?).abs());
            }
            if worst < 1e-10 {
                return Ok(p);
            }
            if doubled.terms > AUTO_TERMS_LIMIT {
                return Err(Error::Resource {
                    what: "density truncation",
                    estimate: doubled.terms as f64,
                    limit: AUTO_TERMS_LIMIT as f64,
                });
            }
            p = doubled;
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Half-width `R = 2/√(1−q)` of the support.
    pub fn support_radius(&self) -> f64 {
        2.0 / libm::sqrt(1.0 - self.q)
    }

    /// `(β²; q)_∞` truncated, with `β² = −α`.
    fn beta_pochhammer(&self) -> f64 {
        q_pochhammer(-self.alpha, self.q, self.terms).expect("|q| < 1 is an invariant")
    }

    fn q_q_pochhammer(&self) -> f64 {
        q_pochhammer(self.q, self.q, self.terms).expect("|q| < 1 is an invariant")
    }

    /// Each factor of the denominator pair must stay positive on the
    /// support; the extreme case is `t = ±R`.
    fn check_denominator(&self) -> Result<()> {
        let r = self.support_radius();
        let cross = self.alpha * r * r * (1.0 - self.q);
        let mut q2k = 1.0;
        for k in 0..self.terms {
            let base = 1.0 + self.alpha * q2k;
            let factor = base * base - cross * q2k;
            if !(factor > 0.0) {
                return Err(Error::Singular(alloc::format!(
                    "denominator factor {k} is {factor} at t = R"
                )));
            }
            q2k *= self.q * self.q;
        }
        Ok(())
    }
}

/// The density at `t`; zero outside `(−R, R)`.
pub fn density_eval(t: f64, p: &DensityParams) -> Result<f64> {
    let r = p.support_radius();
    if !(t.abs() < r) {
        return Ok(0.0);
    }
    let denominator = paired_g(t, p.alpha, p.q, p.terms);
    if !(denominator > 0.0) {
        return Err(Error::Singular(alloc::format!(
            "denominator g(t,iβ)g(t,−iβ) = {denominator} at t = {t}"
        )));
    }
    Ok(density_unchecked(t, p, denominator))
}

fn density_unchecked(t: f64, p: &DensityParams, denominator: f64) -> f64 {
    let q = p.q;
    let r = p.support_radius();
    // P(t,1) without its k = 0 factor (1−q)(R² − t²).
    let tail = if p.terms > 1 {
        let q2 = q * q;
        let mut q2k = q2;
        let mut acc = 1.0;
        let cross = t * t * (1.0 - q);
        for _ in 1..p.terms {
            let base = 1.0 + q2k;
            acc *= base * base - cross * q2k;
            q2k *= q2;
        }
        acc
    } else {
        1.0
    };
    let edge = (1.0 - q) * libm::sqrt((r - t) * (r + t));
    let numerator = edge * tail * paired_g(t, q, q, p.terms);
    p.q_q_pochhammer() * p.beta_pochhammer() * numerator / (2.0 * PI * denominator)
}

/// Integrates `t^k f(t)` over the support after substituting
/// `t = R sin θ`, which removes the square-root behaviour at `±R`.
fn integrate_power(k: usize, p: &DensityParams) -> Result<quadrature::Integral> {
    p.check_denominator()?;
    let r = p.support_radius();
    let integrand = |theta: f64| {
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        let t = r * s;
        let f = density_unchecked(t, p, paired_g(t, p.alpha, p.q, p.terms));
        crate::moments::powi(t, k) * f * r * c
    };
    quadrature::integrate(integrand, -PI / 2.0, PI / 2.0, QUADRATURE_TOL, MAX_INTERVALS)
}

/// `∫ t^k dMP_{α,q}(t)` over the absolutely continuous part, `k ≤ 8`.
pub fn density_moment(k: usize, p: &DensityParams) -> Result<f64> {
    if k > MAX_MOMENT_ORDER {
        return Err(domain!(
            "density moments are limited to order {MAX_MOMENT_ORDER}, got {k}"
        ));
    }
    Ok(integrate_power(k, p)?.value)
}

/// Total mass of the absolutely continuous part and its deficit `1 − mass`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub mass: f64,
    pub deficit: f64,
}

pub fn normalization_check(p: &DensityParams) -> Result<Normalization> {
    let mass = integrate_power(0, p)?.value;
    Ok(Normalization {
        mass,
        deficit: 1.0 - mass,
    })
}
