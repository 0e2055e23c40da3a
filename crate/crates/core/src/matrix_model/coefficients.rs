use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moments::ModelParams;
use crate::partitions::Symbol;

const MOMENT_TOL: f64 = 1e-12;

/// Smallest `|x|` a commutation coefficient may take by default.
pub const DEFAULT_SEPARATION: f64 = 1e-3;

/// A law taking `high` with probability `p_high` and `low` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointLaw {
    low: f64,
    high: f64,
    p_high: f64,
}

impl TwoPointLaw {
    pub fn new(low: f64, high: f64, p_high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::Config(alloc::format!(
                "invalid two-point law ({low}, {high}, p = {p_high})"
            )));
        }
        Ok(TwoPointLaw { low, high, p_high })
    }

    /// `±1` with `P(+1) = (1 + mean)/2`, so the mean is `mean` and the
    /// second moment is one.
    pub fn rademacher(mean: f64) -> Result<Self> {
        Self::new(-1.0, 1.0, (1.0 + mean) / 2.0)
    }

    /// The two-point law with the given mean, unit second moment and
    /// `P(high) = p_high ∈ (0, 1)`.
    pub fn with_unit_second_moment(mean: f64, p_high: f64) -> Result<Self> {
        if !(p_high > 0.0 && p_high < 1.0) || !(mean.abs() < 1.0) {
            return Err(Error::Config(alloc::format!(
                "need |mean| < 1 and 0 < p < 1, got mean = {mean}, p = {p_high}"
            )));
        }
        let sigma = libm::sqrt(1.0 - mean * mean);
        let high = mean + sigma * libm::sqrt((1.0 - p_high) / p_high);
        let low = mean - sigma * libm::sqrt(p_high / (1.0 - p_high));
        Self::new(low, high, p_high)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn p_high(&self) -> f64 {
        self.p_high
    }

    pub fn mean(&self) -> f64 {
        self.p_high * self.high + (1.0 - self.p_high) * self.low
    }

    pub fn second_moment(&self) -> f64 {
        self.p_high * self.high * self.high + (1.0 - self.p_high) * self.low * self.low
    }

    fn atoms(&self) -> impl Iterator<Item = f64> + '_ {
        [(self.low, 1.0 - self.p_high), (self.high, self.p_high)]
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(x, _)| x)
    }

    /// `min |x|` over the support.
    pub fn min_abs(&self) -> f64 {
        self.atoms().map(f64::abs).fold(f64::INFINITY, f64::min)
    }

    /// `max(sup |x|, sup 1/|x|)` over the support.
    pub fn spread(&self) -> f64 {
        self.atoms()
            .map(|x| x.abs().max(1.0 / x.abs()))
            .fold(0.0, f64::max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p_high {
            self.high
        } else {
            self.low
        }
    }
}

/// How the `Ψ_i` are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum PsiLaw {
    /// `Ψ_i = value` for every site.
    Constant(f64),
    /// `Ψ_i = mean ± spread / i` with equal probability; `Σ Var(Ψ_i)` is finite.
    Decaying { mean: f64, spread: f64 },
    /// `Ψ_i = means[b]` on sites `b·block_len + 1 ..= (b+1)·block_len`.
    Blockwise { block_len: usize, means: Vec<f64> },
}

impl PsiLaw {
    fn sample<R: Rng + ?Sized>(&self, site: usize, rng: &mut R) -> f64 {
        match self {
            PsiLaw::Constant(v) => *v,
            PsiLaw::Decaying { mean, spread } => {
                let step = spread / site as f64;
                if rng.random::<bool>() {
                    mean + step
                } else {
                    mean - step
                }
            }
            PsiLaw::Blockwise { block_len, means } => means[(site - 1) / block_len],
        }
    }

    fn sup_abs(&self) -> f64 {
        match self {
            PsiLaw::Constant(v) => v.abs(),
            PsiLaw::Decaying { mean, spread } => mean.abs() + spread.abs(),
            PsiLaw::Blockwise { means, .. } => means.iter().map(|m| m.abs()).fold(0.0, f64::max),
        }
    }
}

/// Distribution of the three random families `Q(i,j)`, `Q̃(i,j)`, `Ψ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientLaw {
    pub q: TwoPointLaw,
    pub q_tilde: TwoPointLaw,
    pub psi: PsiLaw,
    pub min_separation: f64,
}

impl CoefficientLaw {
    /// The default sampler: `Q`, `Q̃` Rademacher-type `±1` with mean `q`,
    /// and `Ψ_i = α` deterministic.
    pub fn rademacher(params: &ModelParams) -> Self {
        let q = TwoPointLaw::rademacher(params.q()).expect("|q| < 1 gives a valid probability");
        CoefficientLaw {
            q,
            q_tilde: q,
            psi: PsiLaw::Constant(params.alpha()),
            min_separation: DEFAULT_SEPARATION,
        }
    }

    /// Checks `E Q = q`, `E Q² = 1`, `E Q̃ = q`, `E Ψ = α` (skipped for
    /// block-wise `Ψ`), and that `Q`, `Q̃` stay away from zero.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let fail = |what: &str, got: f64, want: f64| {
            Err(Error::Config(alloc::format!(
                "coefficient law has {what} = {got}, expected {want}"
            )))
        };
        if (self.q.mean() - params.q()).abs() > MOMENT_TOL {
            return fail("E Q", self.q.mean(), params.q());
        }
        if (self.q.second_moment() - 1.0).abs() > MOMENT_TOL {
            return fail("E Q^2", self.q.second_moment(), 1.0);
        }
        if (self.q_tilde.mean() - params.q()).abs() > MOMENT_TOL {
            return fail("E Q~", self.q_tilde.mean(), params.q());
        }
        let psi_mean = match &self.psi {
            PsiLaw::Constant(v) => Some(*v),
            PsiLaw::Decaying { mean, .. } => Some(*mean),
            PsiLaw::Blockwise { block_len, means } => {
                if *block_len == 0 || means.is_empty() {
                    return Err(Error::Config("empty block-wise Psi law".into()));
                }
                None
            }
        };
        if let Some(m) = psi_mean {
            if (m - params.alpha()).abs() > MOMENT_TOL {
                return fail("E Psi", m, params.alpha());
            }
        }
        if !(self.min_separation > 0.0) {
            return Err(Error::Config("separation from zero must be positive".into()));
        }
        for (name, law) in [("Q", &self.q), ("Q~", &self.q_tilde)] {
            if law.min_abs() < self.min_separation {
                return Err(Error::Config(alloc::format!(
                    "{name} support comes within {} of zero (separation {})",
                    law.min_abs(),
                    self.min_separation
                )));
            }
        }
        Ok(())
    }

    /// `K = [max(sup|x|, sup 1/|x|) over D₁]² · max(sup|x|, sup 1/|x|) over D₂`.
    pub fn bound(&self) -> f64 {
        let s1 = self.q.spread();
        s1 * s1 * self.q_tilde.spread()
    }
}

/// One realization of `Q(i,j)`, `Q̃(i,j)`, `Ψ_i` on sites `1..=size`.
///
/// `Q` is symmetric. `Q̃(i,j)` is indexed (site, generator): it is the
/// scaling that `T′_j` applies at an occupied site `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    size: usize,
    q: Vec<f64>,
    q_tilde: Vec<f64>,
    psi: Vec<f64>,
    bound: f64,
    psi_sup: f64,
}

/// Draws a table with a ChaCha8 stream seeded by `seed`. Draw order: `Q(i,j)`
/// for `i < j` row by row, then `Q̃(i,j)` for all `i ≠ j`, then `Ψ_i`.
pub fn sample_coefficients(
    size: usize,
    params: &ModelParams,
    law: &CoefficientLaw,
    seed: u64,
) -> Result<CoefficientTable> {
    law.validate(params)?;
    if let PsiLaw::Blockwise { block_len, means } = &law.psi {
        if block_len * means.len() < size {
            return Err(Error::Config(alloc::format!(
                "block-wise Psi covers {} sites, table needs {size}",
                block_len * means.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![1.0; size * size];
    for i in 0..size {
        for j in i + 1..size {
            let v = law.q.sample(&mut rng);
            q[i * size + j] = v;
            q[j * size + i] = v;
        }
    }
    let mut q_tilde = vec![1.0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i != j {
                q_tilde[i * size + j] = law.q_tilde.sample(&mut rng);
            }
        }
    }
    let psi = (1..=size).map(|i| law.psi.sample(i, &mut rng)).collect();
    Ok(CoefficientTable {
        size,
        q,
        q_tilde,
        psi,
        bound: law.bound(),
        psi_sup: law.psi.sup_abs(),
    })
}

impl CoefficientTable {
    /// A table from explicit row-major `Q`, `Q̃` and `Ψ`. `Q` must be
    /// symmetric and off-diagonal entries of `Q`, `Q̃` nonzero; diagonals
    /// are ignored.
    pub fn from_parts(size: usize, q: Vec<f64>, q_tilde: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if q.len() != size * size || q_tilde.len() != size * size || psi.len() != size {
            return Err(Error::Config(alloc::format!(
                "table arrays do not match size {size}"
            )));
        }
        let mut spread_q: f64 = 1.0;
        let mut spread_t: f64 = 1.0;
        for i in 0..size {
            for j in 0..size {
                if i == j {
                    continue;
                }
                let (a, b) = (q[i * size + j], q_tilde[i * size + j]);
                if a != q[j * size + i] {
                    return Err(Error::Config("Q must be symmetric".into()));
                }
                if a == 0.0 || b == 0.0 || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Config("Q and Q~ entries must be finite and nonzero".into()));
                }
                spread_q = spread_q.max(a.abs().max(1.0 / a.abs()));
                spread_t = spread_t.max(b.abs().max(1.0 / b.abs()));
            }
        }
        let psi_sup = psi.iter().map(|p| p.abs()).fold(0.0, f64::max);
        Ok(CoefficientTable {
            size,
            q,
            q_tilde,
            psi,
            bound: spread_q * spread_q * spread_t,
            psi_sup,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `Q(i, j)`, 1-based, `i ≠ j`.
    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[(i - 1) * self.size + (j - 1)]
    }

    /// `Q̃(i, j)`, 1-based, `i ≠ j`.
    #[inline]
    pub fn q_tilde(&self, i: usize, j: usize) -> f64 {
        self.q_tilde[(i - 1) * self.size + (j - 1)]
    }

    /// `Ψ_i`, 1-based.
    #[inline]
    pub fn psi(&self, i: usize) -> f64 {
        self.psi[i - 1]
    }

    /// The bound `K` on every commutation coefficient.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `sup |Ψ|` for the law the table came from.
    pub fn psi_sup(&self) -> f64 {
        self.psi_sup
    }

    /// Closed form of `Q_{∗,sym}(i, j)`, the scalar in
    /// `T*_i T^sym_j = Q_{∗,sym}(i,j) T^sym_j T*_i`:
    ///
    /// | sym | `i < j`   | `i > j`          |
    /// |-----|-----------|------------------|
    /// | `∗` | `Q(i,j)`  | `Q(i,j)⁻¹`       |
    /// | `1` | `Q(i,j)`  | `Q(i,j)`         |
    /// | `′` | `Q̃(i,j)`  | `Q(i,j)² Q̃(i,j)` |
    pub fn star_commutation(&self, i: usize, j: usize, sym: Symbol) -> f64 {
        debug_assert_ne!(i, j);
        let q = self.q(i, j);
        match (sym, i < j) {
            (Symbol::Star, true) => q,
            (Symbol::Star, false) => 1.0 / q,
            (Symbol::One, _) => q,
            (Symbol::Prime, true) => self.q_tilde(i, j),
            (Symbol::Prime, false) => q * q * self.q_tilde(i, j),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, q: f64) -> ModelParams {
        ModelParams::new(a, q).unwrap()
    }

    #[test]
    fn rademacher_moments() {
        let law = TwoPointLaw::rademacher(0.3).unwrap();
        assert!((law.p_high() - 0.65).abs() < 1e-15);
        assert!((law.mean() - 0.3).abs() < 1e-15);
        assert_eq!(law.second_moment(), 1.0);
        let fair = TwoPointLaw::rademacher(0.0).unwrap();
        assert_eq!(fair.p_high(), 0.5);
        assert_eq!(fair.second_moment(), 1.0);
        assert_eq!(fair.spread(), 1.0);
    }

    #[test]
    fn unit_second_moment_family() {
        let law = TwoPointLaw::with_unit_second_moment(0.3, 0.65).unwrap();
        assert!((law.high() - 1.0).abs() < 1e-15 && (law.low() + 1.0).abs() < 1e-15);
        let skew = TwoPointLaw::with_unit_second_moment(-0.2, 0.3).unwrap();
        assert!((skew.mean() + 0.2).abs() < 1e-14);
        assert!((skew.second_moment() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_psi() {
        let law = CoefficientLaw::rademacher(&params(0.5, 0.1));
        let t = sample_coefficients(6, &params(0.5, 0.1), &law, 3).unwrap();
        assert!((1..=6).all(|i| t.psi(i) == 0.5));
    }

    #[test]
    fn sampled_table_shape() {
        let p = params(-0.3, 0.4);
        let t = sample_coefficients(10, &p, &CoefficientLaw::rademacher(&p), 11).unwrap();
        for i in 1..=10 {
            for j in 1..=10 {
                if i != j {
                    assert_eq!(t.q(i, j), t.q(j, i));
                    assert_eq!(t.q(i, j).abs(), 1.0);
                    assert_eq!(t.q_tilde(i, j).abs(), 1.0);
                }
            }
        }
        assert_eq!(t.bound(), 1.0);
        let again = sample_coefficients(10, &p, &CoefficientLaw::rademacher(&p), 11).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn empirical_mean_of_q() {
        let p = params(0.0, 0.3);
        let t = sample_coefficients(200, &p, &CoefficientLaw::rademacher(&p), 5).unwrap();
        let mut sum = 0.0;
        let mut count = 0.0;
        for i in 1..=200 {
            for j in i + 1..=200 {
                sum += t.q(i, j);
                count += 1.0;
            }
        }
        // 19900 draws, sd of the mean ~ 0.0068.
        assert!((sum / count - 0.3).abs() < 0.03);
    }

    #[test]
    fn rejects_bad_laws() {
        let p = params(0.5, 0.3);
        let mut law = CoefficientLaw::rademacher(&p);
        law.q = TwoPointLaw::rademacher(0.2).unwrap();
        assert!(matches!(law.validate(&p), Err(Error::Config(_))));

        let mut law = CoefficientLaw::rademacher(&p);
        law.q = TwoPointLaw::new(0.3, 0.3, 1.0).unwrap();
        assert!(law.validate(&p).is_err());

        let mut law = CoefficientLaw::rademacher(&p);
        law.q_tilde = TwoPointLaw::new(0.0, 0.6, 0.5).unwrap();
        assert!(law.validate(&p).is_err());

        let mut law = CoefficientLaw::rademacher(&p);
        law.psi = PsiLaw::Constant(0.4);
        assert!(law.validate(&p).is_err());
    }

    #[test]
    fn bound_formula() {
        let p = params(0.0, -0.2);
        let mut law = CoefficientLaw::rademacher(&p);
        law.q = TwoPointLaw::with_unit_second_moment(-0.2, 0.2).unwrap();
        let s = law.q.spread();
        assert!(s > 1.0);
        assert_eq!(law.bound(), s * s);
    }

    #[test]
    fn from_parts_validation() {
        assert!(CoefficientTable::from_parts(2, vec![1.0, 2.0, 3.0, 1.0], vec![1.0; 4], vec![0.0; 2]).is_err());
        assert!(CoefficientTable::from_parts(2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0; 4], vec![0.0; 2]).is_err());
        let t = CoefficientTable::from_parts(2, vec![9.0, 2.0, 2.0, 9.0], vec![1.0, 0.5, 4.0, 1.0], vec![0.1, 0.2]).unwrap();
        assert_eq!(t.bound(), 2.0 * 2.0 * 4.0);
    }

    #[test]
    fn closed_form_table() {
        let t = CoefficientTable::from_parts(
            3,
            vec![1.0, 2.0, -0.5, 2.0, 1.0, 3.0, -0.5, 3.0, 1.0],
            vec![1.0, 5.0, 7.0, 11.0, 1.0, 13.0, 17.0, 19.0, 1.0],
            vec![0.1, 0.2, 0.3],
        )
        .unwrap();
        assert_eq!(t.star_commutation(1, 2, Symbol::Star), 2.0);
        assert_eq!(t.star_commutation(2, 1, Symbol::Star), 0.5);
        assert_eq!(t.star_commutation(3, 1, Symbol::One), -0.5);
        assert_eq!(t.star_commutation(1, 3, Symbol::Prime), 7.0);
        assert_eq!(t.star_commutation(3, 2, Symbol::Prime), 9.0 * 19.0);
    }
}
