use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use super::coefficients::CoefficientTable;
use crate::error::{domain, Error, Result};
use crate::partitions::{EpsilonWord, Symbol};

/// Upper limit on the estimated number of basis strings a propagation may
/// touch.
pub const FOCK_BUDGET: f64 = 5.0e6;

/// A basis string of `M₂^{⊗N}`, stored as the sorted 1-based sites whose
/// bit is set.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisString(Vec<u32>);

impl BasisString {
    pub fn vacuum() -> Self {
        BasisString(Vec::new())
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        let mut v: Vec<u32> = sites.into_iter().map(|s| s as u32).collect();
        v.sort_unstable();
        v.dedup();
        BasisString(v)
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&s| s as usize)
    }

    pub fn popcount(&self) -> usize {
        self.0.len()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&(site as u32)).is_ok()
    }

    fn with(&self, site: usize) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&s| (s as usize) < site);
        v.insert(pos, site as u32);
        BasisString(v)
    }

    fn without(&self, site: usize) -> Self {
        let mut v = self.0.clone();
        v.retain(|&s| s as usize != site);
        BasisString(v)
    }
}

/// A finitely supported vector over basis strings of width `size`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFockVector {
    size: usize,
    entries: BTreeMap<BasisString, f64>,
}

impl SparseFockVector {
    /// The vacuum `e₁ ⊗ ⋯ ⊗ e₁`.
    pub fn vacuum(size: usize) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(BasisString::vacuum(), 1.0);
        SparseFockVector { size, entries }
    }

    pub fn zero(size: usize) -> Self {
        SparseFockVector {
            size,
            entries: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn amplitude(&self, b: &BasisString) -> f64 {
        self.entries.get(b).copied().unwrap_or(0.0)
    }

    pub fn vacuum_amplitude(&self) -> f64 {
        self.amplitude(&BasisString::vacuum())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisString, f64)> {
        self.entries.iter().map(|(b, &a)| (b, a))
    }

    pub fn max_popcount(&self) -> usize {
        self.entries.keys().map(BasisString::popcount).max().unwrap_or(0)
    }

    fn add(&mut self, b: BasisString, a: f64) {
        *self.entries.entry(b).or_insert(0.0) += a;
    }

    fn drop_zeros(&mut self) {
        self.entries.retain(|_, a| *a != 0.0);
    }
}

/// A product `T^{ε(1)}_{i(1)} ⋯ T^{ε(r)}_{i(r)}`; the rightmost letter acts
/// first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorWord {
    letters: Vec<(usize, Symbol)>,
}

impl GeneratorWord {
    /// Letters as `(site, symbol)`, sites in `1..=size`.
    pub fn new(letters: Vec<(usize, Symbol)>, size: usize) -> Result<Self> {
        if let Some(&(i, _)) = letters.iter().find(|(i, _)| *i == 0 || *i > size) {
            return Err(domain!("generator index {i} outside 1..={size}"));
        }
        Ok(GeneratorWord { letters })
    }

    pub fn letters(&self) -> &[(usize, Symbol)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

fn prefix_q(b: &BasisString, i: usize, t: &CoefficientTable) -> f64 {
    b.sites().take_while(|&j| j < i).map(|j| t.q(j, i)).product()
}

fn prime_factor(b: &BasisString, i: usize, t: &CoefficientTable) -> f64 {
    let mut f = t.psi(i);
    for j in b.sites() {
        f *= if j < i {
            t.q_tilde(j, i)
        } else {
            t.q(j, i) * t.q_tilde(j, i)
        };
    }
    f
}

/// The image of one basis string under one generator, if nonzero.
pub fn act(b: &BasisString, i: usize, sym: Symbol, t: &CoefficientTable) -> Option<(BasisString, f64)> {
    match sym {
        Symbol::Star if b.contains(i) => Some((b.without(i), prefix_q(b, i, t))),
        Symbol::One if !b.contains(i) => Some((b.with(i), prefix_q(b, i, t))),
        Symbol::Prime if !b.contains(i) => Some((b.with(i), prime_factor(b, i, t))),
        _ => None,
    }
    .filter(|(_, a)| *a != 0.0)
}

/// `T^{sym}_i` applied to `state`.
pub fn apply_generator(state: &SparseFockVector, i: usize, sym: Symbol, t: &CoefficientTable) -> SparseFockVector {
    let mut out = SparseFockVector::zero(state.size);
    for (b, a) in state.iter() {
        if let Some((nb, f)) = act(b, i, sym, t) {
            out.add(nb, a * f);
        }
    }
    out.drop_zeros();
    out
}

/// `φ_N(word)`: the vacuum amplitude of `word · Ω`. Each generator maps a
/// basis string to a multiple of one basis string, so a single string is
/// traced.
pub fn vacuum_expectation(word: &GeneratorWord, t: &CoefficientTable) -> f64 {
    let mut b = BasisString::vacuum();
    let mut amp = 1.0;
    for &(i, sym) in word.letters.iter().rev() {
        match act(&b, i, sym, t) {
            Some((nb, f)) => {
                b = nb;
                amp *= f;
            }
            None => return 0.0,
        }
    }
    if b.is_vacuum() {
        amp
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
struct SymbolMask {
    star: bool,
    one: bool,
    prime: bool,
}

impl SymbolMask {
    const ALL: SymbolMask = SymbolMask {
        star: true,
        one: true,
        prime: true,
    };

    fn only(sym: Symbol) -> Self {
        SymbolMask {
            star: sym == Symbol::Star,
            one: sym == Symbol::One,
            prime: sym == Symbol::Prime,
        }
    }
}

/// `Σ_{i ∈ sites} Σ_{sym ∈ mask} T^{sym}_i` applied to `state`,
/// keeping only strings with at most `max_pop` set bits.
fn apply_sum(
    state: &SparseFockVector,
    sites: RangeInclusive<usize>,
    mask: SymbolMask,
    max_pop: usize,
    t: &CoefficientTable,
) -> SparseFockVector {
    let mut out = SparseFockVector::zero(state.size);
    for (b, a) in state.iter() {
        if mask.star && b.popcount() <= max_pop + 1 {
            for i in b.sites().filter(|i| sites.contains(i)) {
                out.add(b.without(i), a * prefix_q(b, i, t));
            }
        }
        if (mask.one || mask.prime) && b.popcount() < max_pop {
            for i in sites.clone().filter(|&i| !b.contains(i)) {
                let mut f = 0.0;
                if mask.one {
                    f += prefix_q(b, i, t);
                }
                if mask.prime {
                    f += prime_factor(b, i, t);
                }
                if f != 0.0 {
                    out.add(b.with(i), a * f);
                }
            }
        }
    }
    out.drop_zeros();
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Estimated number of strings touched when propagating `steps` sums over
/// `sites` sites: only strings with at most `⌈steps/2⌉` bits can return to
/// the vacuum.
fn check_budget(sites: usize, steps: usize) -> Result<()> {
    let top = steps.div_ceil(2).min(sites);
    let estimate: f64 = (0..=top).map(|j| binomial(sites, j)).sum();
    if estimate > FOCK_BUDGET {
        return Err(Error::Resource {
            what: "Fock propagation support",
            estimate,
            limit: FOCK_BUDGET,
        });
    }
    Ok(())
}

struct Step {
    sites: RangeInclusive<usize>,
    mask: SymbolMask,
}

/// Applies `steps` (rightmost first) to the vacuum and returns the vacuum
/// amplitude divided by `block_len^{r/2}`. The normalization is applied once
/// at the end so that integer-valued sums stay exact.
fn propagate(steps: &[Step], block_len: usize, t: &CoefficientTable) -> f64 {
    if steps.len() % 2 == 1 {
        return 0.0;
    }
    let mut state = SparseFockVector::vacuum(t.size());
    for (k, step) in steps.iter().rev().enumerate() {
        let remaining = steps.len() - k - 1;
        state = apply_sum(&state, step.sites.clone(), step.mask, remaining, t);
        debug_assert!(state.max_popcount() <= k + 1);
        if state.is_empty() {
            return 0.0;
        }
    }
    state.vacuum_amplitude() / crate::moments::powi(block_len as f64, steps.len() / 2)
}

fn check_size(n: usize, t: &CoefficientTable) -> Result<()> {
    if n == 0 || n > t.size() {
        return Err(domain!("N = {n} must lie in 1..={}", t.size()));
    }
    Ok(())
}

/// `φ_N(Z_N^r)` with `Z_N = N^{−1/2} Σ_{i ≤ N} (T_i + T*_i + T′_i)`, using
/// sites `1..=n` of `t`.
pub fn z_moment(n: usize, r: usize, t: &CoefficientTable) -> Result<f64> {
    check_size(n, t)?;
    if r % 2 == 1 {
        return Ok(0.0);
    }
    check_budget(n, r)?;
    let steps: Vec<Step> = (0..r)
        .map(|_| Step {
            sites: 1..=n,
            mask: SymbolMask::ALL,
        })
        .collect();
    Ok(propagate(&steps, n, t))
}

/// `φ_N(S_N^{ε(1)} ⋯ S_N^{ε(r)})` with `S^ε_N = N^{−1/2} Σ_{i ≤ N} T^ε_i`.
pub fn mixed_sum_moment(eps: &EpsilonWord, n: usize, t: &CoefficientTable) -> Result<f64> {
    check_size(n, t)?;
    check_budget(n, eps.len())?;
    let steps: Vec<Step> = eps
        .0
        .iter()
        .map(|&sym| Step {
            sites: 1..=n,
            mask: SymbolMask::only(sym),
        })
        .collect();
    Ok(propagate(&steps, n, t))
}

/// `φ(Z_{N,b(1)} ⋯ Z_{N,b(r)})` where `Z_{N,b}` sums `T + T* + T′` over the
/// block of sites `(b−1)N+1 ..= bN`, scaled by `N^{−1/2}`. Blocks are
/// 1-based.
pub fn block_word_moment(blocks: &[usize], block_len: usize, t: &CoefficientTable) -> Result<f64> {
    let top = blocks.iter().copied().max().unwrap_or(1);
    if block_len == 0 || blocks.contains(&0) || top * block_len > t.size() {
        return Err(domain!(
            "blocks up to {top} of length {block_len} do not fit a table of size {}",
            t.size()
        ));
    }
    if blocks.len() % 2 == 1 {
        return Ok(0.0);
    }
    check_budget(top * block_len, blocks.len())?;
    let steps: Vec<Step> = blocks
        .iter()
        .map(|&b| Step {
            sites: (b - 1) * block_len + 1..=b * block_len,
            mask: SymbolMask::ALL,
        })
        .collect();
    Ok(propagate(&steps, block_len, t))
}

fn spanning_set(i: usize, j: usize, size: usize) -> Vec<BasisString> {
    if size <= 10 {
        return (0u32..1 << size)
            .map(|m| BasisString::from_sites((1..=size).filter(|s| m >> (s - 1) & 1 == 1)))
            .collect();
    }
    let others: Vec<usize> = (1..=size).filter(|&s| s != i && s != j).collect();
    let patterns: [Vec<usize>; 4] = [
        Vec::new(),
        others.clone(),
        others.iter().copied().step_by(2).collect(),
        others.iter().copied().skip(1).step_by(2).collect(),
    ];
    let mut out = Vec::new();
    for base in &patterns {
        for extra in [&[][..], &[i][..], &[j][..], &[i, j][..]] {
            out.push(BasisString::from_sites(base.iter().chain(extra).copied()));
        }
    }
    out
}

/// The scalar `c` with `T^a_i T^b_j = c · T^b_j T^a_i`, measured on a set
/// of basis strings. For `a = ∗` the measurement is checked against
/// [`CoefficientTable::star_commutation`] and the closed form is returned.
pub fn commutation_scalar(i: usize, j: usize, a: Symbol, b: Symbol, t: &CoefficientTable) -> Result<f64> {
    if i == j || i == 0 || j == 0 || i > t.size() || j > t.size() {
        return Err(domain!("need distinct sites in 1..={}, got {i}, {j}", t.size()));
    }
    let both = |s: &BasisString, (x, sx): (usize, Symbol), (y, sy): (usize, Symbol)| {
        act(s, y, sy, t).and_then(|(s1, f1)| act(&s1, x, sx, t).map(|(s2, f2)| (s2, f1 * f2)))
    };
    let mut measured: Option<f64> = None;
    for s in spanning_set(i, j, t.size()) {
        let lhs = both(&s, (i, a), (j, b));
        let rhs = both(&s, (j, b), (i, a));
        match (lhs, rhs) {
            (None, None) => {}
            (Some((s1, l)), Some((s2, r))) if s1 == s2 => {
                let c = l / r;
                match measured {
                    None => measured = Some(c),
                    Some(m) if (m - c).abs() <= 1e-12 * m.abs().max(1.0) => {}
                    Some(m) => {
                        return Err(Error::ModelViolation(alloc::format!(
                            "T_{i}^{a} T_{j}^{b} gives ratios {m} and {c} on different strings",
                            a = a.as_char(),
                            b = b.as_char()
                        )))
                    }
                }
            }
            _ => {
                return Err(Error::ModelViolation(alloc::format!(
                    "orderings of T_{i}^{a}, T_{j}^{b} disagree in support on {s:?}",
                    a = a.as_char(),
                    b = b.as_char()
                )))
            }
        }
    }
    let measured = measured.unwrap_or(1.0);
    if a == Symbol::Star {
        let closed = t.star_commutation(i, j, b);
        if (closed - measured).abs() > 1e-12 * closed.abs().max(1.0) {
            return Err(Error::ModelViolation(alloc::format!(
                "measured Q_(*,{})({i},{j}) = {measured}, closed form {closed}",
                b.as_char()
            )));
        }
        return Ok(closed);
    }
    Ok(measured)
}
