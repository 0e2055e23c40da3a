//! Set partitions, pair partitions and colored (type-B) pair partitions.
//!
//! Positions are 1-based throughout: a partition of size `n` covers
//! `{1, ..., n}`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{domain, Error, Result};

/// Largest ground set the enumerators accept by default.
pub const DEFAULT_CAP: usize = 16;

/// A set partition of `{1, ..., n}`.
///
/// Each block is sorted and blocks are ordered by their maximal element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds and normalizes a partition, checking that the blocks are
    /// nonempty, disjoint and cover `{1, ..., n}`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(domain!("partition blocks must be nonempty"));
            }
            block.sort_unstable();
            for &x in block.iter() {
                if x == 0 || x > n {
                    return Err(domain!("element {x} outside 1..={n}"));
                }
                if seen[x] {
                    return Err(domain!("element {x} appears in more than one block"));
                }
                seen[x] = true;
            }
        }
        if seen.iter().skip(1).any(|s| !s) {
            return Err(domain!("blocks do not cover 1..={n}"));
        }
        blocks.sort_unstable_by_key(|b| b[b.len() - 1]);
        Ok(Partition { n, blocks })
    }

    /// Size of the ground set, `#π`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks, `|π|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn is_pair_partition(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// The blocks as `(opener, closer)` pairs sorted by opener, if every
    /// block is a pair.
    pub fn pairs(&self) -> Result<Vec<(usize, usize)>> {
        if !self.is_pair_partition() {
            return Err(domain!("not a pair partition"));
        }
        let mut pairs: Vec<_> = self.blocks.iter().map(|b| (b[0], b[1])).collect();
        pairs.sort_unstable();
        Ok(pairs)
    }
}

/// Block color of a type-B pair partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Positive,
    Negative,
}

impl Color {
    pub fn sign(self) -> i8 {
        match self {
            Color::Positive => 1,
            Color::Negative => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Color::Positive),
            -1 => Ok(Color::Negative),
            other => Err(domain!("color must be +1 or -1, got {other}")),
        }
    }

    /// The symbol carried by the closer of a pair with this color.
    pub fn closer_symbol(self) -> Symbol {
        match self {
            Color::Positive => Symbol::One,
            Color::Negative => Symbol::Prime,
        }
    }
}

/// One colored pair `{opener, closer}` with `opener < closer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub opener: usize,
    pub closer: usize,
    pub color: Color,
}

impl Pair {
    /// `self` and `other` interleave as `i < k < j < l` in either order.
    pub fn crosses(&self, other: &Pair) -> bool {
        interleave((self.opener, self.closer), (other.opener, other.closer))
    }

    /// `self` strictly surrounds `other`.
    pub fn covers(&self, other: &Pair) -> bool {
        self.opener < other.opener && other.closer < self.closer
    }
}

fn interleave(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

fn covers(outer: (usize, usize), inner: (usize, usize)) -> bool {
    outer.0 < inner.0 && inner.1 < outer.1
}

/// A pair partition of `{1, ..., n}` with a `±1` coloring of its blocks (`π_f`).
///
/// Pairs are stored sorted by opener.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredPairPartition {
    n: usize,
    pairs: Vec<Pair>,
}

impl ColoredPairPartition {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize, Color)>) -> Result<Self> {
        if n % 2 != 0 {
            return Err(domain!("pair partitions need an even ground set, got {n}"));
        }
        let mut seen = vec![false; n + 1];
        let mut out = Vec::with_capacity(n / 2);
        for (a, b, color) in pairs {
            let (opener, closer) = if a < b { (a, b) } else { (b, a) };
            if opener == closer {
                return Err(domain!("pair ({a},{b}) is degenerate"));
            }
            for x in [opener, closer] {
                if x == 0 || x > n {
                    return Err(domain!("element {x} outside 1..={n}"));
                }
                if seen[x] {
                    return Err(domain!("element {x} appears in more than one pair"));
                }
                seen[x] = true;
            }
            out.push(Pair {
                opener,
                closer,
                color,
            });
        }
        if out.len() * 2 != n {
            return Err(domain!("pairs do not cover 1..={n}"));
        }
        out.sort_unstable();
        Ok(ColoredPairPartition { n, pairs: out })
    }

    pub(crate) fn from_sorted(n: usize, pairs: Vec<Pair>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].opener < w[1].opener));
        ColoredPairPartition { n, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pairs, `n / 2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// The underlying uncolored partition `π`.
    pub fn uncolored(&self) -> Partition {
        let mut blocks: Vec<Vec<usize>> =
            self.pairs.iter().map(|p| vec![p.opener, p.closer]).collect();
        blocks.sort_unstable_by_key(|b| b[1]);
        Partition { n: self.n, blocks }
    }

    /// Same pairing with new colors, given in opener order.
    pub fn recolor(&self, colors: &[Color]) -> Result<Self> {
        if colors.len() != self.pairs.len() {
            return Err(domain!(
                "expected {} colors, got {}",
                self.pairs.len(),
                colors.len()
            ));
        }
        let pairs = self
            .pairs
            .iter()
            .zip(colors)
            .map(|(p, &color)| Pair { color, ..*p })
            .collect();
        Ok(ColoredPairPartition { n: self.n, pairs })
    }

    /// `Cr(π)`; does not depend on the coloring.
    pub fn crossings(&self) -> usize {
        let mut count = 0;
        for (k, a) in self.pairs.iter().enumerate() {
            count += self.pairs[k + 1..].iter().filter(|b| a.crosses(b)).count();
        }
        count
    }

    /// `Nest(π_f)`: ordered pairs `(V, W)` with `V` covering a negative `W`.
    pub fn nestings(&self) -> usize {
        self.pairs
            .iter()
            .filter(|w| w.color == Color::Negative)
            .map(|w| self.pairs.iter().filter(|v| v.covers(w)).count())
            .sum()
    }

    /// `NB(π_f)`, the number of negative blocks.
    pub fn negative_blocks(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.color == Color::Negative)
            .count()
    }
}

impl fmt::Display for ColoredPairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, p) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            let c = if p.color == Color::Positive { '+' } else { '-' };
            write!(f, "({},{},{c})", p.opener, p.closer)?;
        }
        f.write_str("}")
    }
}

/// Letter of an ε-word: `∗` (adjoint), `1` or `′` (prime).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Star,
    One,
    Prime,
}

impl Symbol {
    pub const ALL: [Symbol; 3] = [Symbol::Star, Symbol::One, Symbol::Prime];

    pub fn as_char(self) -> char {
        match self {
            Symbol::Star => '*',
            Symbol::One => '1',
            Symbol::Prime => '\'',
        }
    }

    pub fn is_raising(self) -> bool {
        !matches!(self, Symbol::Star)
    }
}

impl TryFrom<char> for Symbol {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            '*' | 's' | 'S' => Ok(Symbol::Star),
            '1' => Ok(Symbol::One),
            '\'' | 'p' | 'P' => Ok(Symbol::Prime),
            other => Err(domain!("unknown epsilon symbol {other:?}")),
        }
    }
}

/// A word `ε = (ε(1), ..., ε(r))` over `{∗, 1, ′}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EpsilonWord(pub Vec<Symbol>);

impl EpsilonWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for EpsilonWord {
    fn from(v: Vec<Symbol>) -> Self {
        EpsilonWord(v)
    }
}

/// Parses words such as `*1'` or `*,*,',1`; commas and spaces are ignored,
/// and `s`/`p` may stand in for `*`/`'`.
impl FromStr for EpsilonWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
            .map(Symbol::try_from)
            .collect::<Result<Vec<_>>>()
            .map(EpsilonWord)
    }
}

impl fmt::Display for EpsilonWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

/// A multi-index `(i(1), ..., i(r))` with values in `[1, bound]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    values: Vec<usize>,
    bound: usize,
}

impl MultiIndex {
    pub fn new(values: Vec<usize>, bound: usize) -> Result<Self> {
        if let Some(&v) = values.iter().find(|&&v| v == 0 || v > bound) {
            return Err(domain!("index value {v} outside 1..={bound}"));
        }
        Ok(MultiIndex { values, bound })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_pairable(n: usize, cap: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(domain!("pair partitions need an even ground set, got {n}"));
    }
    if n > cap {
        return Err(Error::Resource {
            what: "pair-partition enumeration",
            estimate: n as f64,
            limit: cap as f64,
        });
    }
    Ok(())
}

/// Calls `visit` with every pairing of `{1, ..., n}` as `(opener, closer)`
/// pairs sorted by opener. Order: the smallest unpaired element is matched
/// with each later element in increasing order, which is lexicographic in
/// the pair list.
pub fn for_each_pairing<F>(n: usize, cap: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[(usize, usize)]),
{
    check_pairable(n, cap)?;
    let mut used = vec![false; n + 1];
    let mut stack = Vec::with_capacity(n / 2);
    pairings_rec(n, &mut used, &mut stack, &mut visit);
    Ok(())
}

fn pairings_rec<F>(n: usize, used: &mut [bool], stack: &mut Vec<(usize, usize)>, visit: &mut F)
where
    F: FnMut(&[(usize, usize)]),
{
    let Some(first) = (1..=n).find(|&x| !used[x]) else {
        visit(stack);
        return;
    };
    used[first] = true;
    for partner in first + 1..=n {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        stack.push((first, partner));
        pairings_rec(n, used, stack, visit);
        stack.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// All of `P₂(n)` for even `n ≤ DEFAULT_CAP`.
pub fn enumerate_pair_partitions(n: usize) -> Result<Vec<Partition>> {
    enumerate_pair_partitions_capped(n, DEFAULT_CAP)
}

pub fn enumerate_pair_partitions_capped(n: usize, cap: usize) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(domain!("ground set must be nonempty"));
    }
    let mut out = Vec::new();
    for_each_pairing(n, cap, |pairs| {
        let mut blocks: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        blocks.sort_unstable_by_key(|b| b[1]);
        out.push(Partition { n, blocks });
    })?;
    Ok(out)
}

/// All of `P^B₂(n)`. For each pairing the colorings run through binary
/// counting with the first pair most significant and `+` before `−`.
pub fn enumerate_colored_pair_partitions(n: usize) -> Result<Vec<ColoredPairPartition>> {
    enumerate_colored_pair_partitions_capped(n, DEFAULT_CAP)
}

pub fn enumerate_colored_pair_partitions_capped(
    n: usize,
    cap: usize,
) -> Result<Vec<ColoredPairPartition>> {
    if n == 0 {
        return Err(domain!("ground set must be nonempty"));
    }
    let mut out = Vec::new();
    let m = n / 2;
    for_each_pairing(n, cap, |pairs| {
        for mask in 0u32..(1u32 << m) {
            let colored = pairs
                .iter()
                .enumerate()
                .map(|(k, &(opener, closer))| Pair {
                    opener,
                    closer,
                    color: if mask & (1 << (m - 1 - k)) != 0 {
                        Color::Negative
                    } else {
                        Color::Positive
                    },
                })
                .collect();
            out.push(ColoredPairPartition::from_sorted(n, colored));
        }
    })?;
    Ok(out)
}

/// `P^B_{2;ε}`: colored pairings whose openers carry `∗` and whose closers
/// carry `1` (color `+1`) or `′` (color `−1`).
pub fn enumerate_for_epsilon(eps: &EpsilonWord) -> Result<Vec<ColoredPairPartition>> {
    let n = eps.len();
    if n % 2 != 0 {
        return Err(domain!("epsilon word must have even length, got {n}"));
    }
    let mut out = Vec::new();
    let mut used = vec![false; n + 1];
    let mut stack = Vec::with_capacity(n / 2);
    epsilon_rec(eps.symbols(), &mut used, &mut stack, &mut out);
    Ok(out)
}

fn epsilon_rec(
    sym: &[Symbol],
    used: &mut [bool],
    stack: &mut Vec<Pair>,
    out: &mut Vec<ColoredPairPartition>,
) {
    let n = sym.len();
    let Some(first) = (1..=n).find(|&x| !used[x]) else {
        out.push(ColoredPairPartition::from_sorted(n, stack.clone()));
        return;
    };
    if sym[first - 1] != Symbol::Star {
        return;
    }
    used[first] = true;
    for partner in first + 1..=n {
        if used[partner] {
            continue;
        }
        let color = match sym[partner - 1] {
            Symbol::One => Color::Positive,
            Symbol::Prime => Color::Negative,
            Symbol::Star => continue,
        };
        used[partner] = true;
        stack.push(Pair {
            opener: first,
            closer: partner,
            color,
        });
        epsilon_rec(sym, used, stack, out);
        stack.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// `Cr(π)` for a pair partition.
pub fn crossings(pi: &Partition) -> Result<usize> {
    let pairs = pi.pairs()?;
    let mut count = 0;
    for (k, &a) in pairs.iter().enumerate() {
        count += pairs[k + 1..].iter().filter(|&&b| interleave(a, b)).count();
    }
    Ok(count)
}

/// Number of ordered pairs `(V, W)` of blocks with `V` covering `W`,
/// regardless of color.
pub fn covering_pairs(pi: &Partition) -> Result<usize> {
    let pairs = pi.pairs()?;
    Ok(pairs
        .iter()
        .map(|&w| pairs.iter().filter(|&&v| covers(v, w)).count())
        .sum())
}

/// `Nest(π_f)`.
pub fn nestings_colored(pi_f: &ColoredPairPartition) -> usize {
    pi_f.nestings()
}

/// `NB(π_f)`.
pub fn negative_blocks(pi_f: &ColoredPairPartition) -> usize {
    pi_f.negative_blocks()
}

/// `ker i`: positions grouped by equal values.
pub fn kernel(idx: &MultiIndex) -> Partition {
    let values = idx.values();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_value: Vec<(usize, usize)> = Vec::new();
    for (pos, &v) in values.iter().enumerate() {
        match block_of_value.iter().find(|(val, _)| *val == v) {
            Some(&(_, b)) => blocks[b].push(pos + 1),
            None => {
                block_of_value.push((v, blocks.len()));
                blocks.push(vec![pos + 1]);
            }
        }
    }
    blocks.sort_unstable_by_key(|b| b[b.len() - 1]);
    Partition {
        n: values.len(),
        blocks,
    }
}

/// True iff every block is a run of consecutive integers.
pub fn is_interval_partition(pi: &Partition) -> bool {
    let mut next = 1;
    for block in pi.blocks() {
        if block[0] != next || block.windows(2).any(|w| w[1] != w[0] + 1) {
            return false;
        }
        next = block[block.len() - 1] + 1;
    }
    true
}

/// The unique ε with `∗` on openers and `1`/`′` on closers by color.
pub fn epsilon_of(pi_f: &ColoredPairPartition) -> EpsilonWord {
    let mut symbols = vec![Symbol::Star; pi_f.n()];
    for p in pi_f.pairs() {
        symbols[p.closer - 1] = p.color.closer_symbol();
    }
    EpsilonWord(symbols)
}

/// `(2m − 1)!!`, the number of pairings of `2m` points.
pub fn double_factorial_odd(m: usize) -> u64 {
    (1..=m as u64).map(|k| 2 * k - 1).product()
}
