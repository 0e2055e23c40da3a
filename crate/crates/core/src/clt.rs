//! Word reduction, the `Y` statistic and Monte Carlo convergence runs.
//!
//! For a colored pair partition `π_f` and a multi-index `i` with
//! `ker i = π`, the word `T^{ε(1)}_{i(1)} ⋯ T^{ε(r)}_{i(r)}` reduces to
//! `Ξ(π_f, i)` times an interval word. With pairs sorted by opener and
//! `a_p` the value on pair `p`, `Ξ` is a product over `p < p′` of
//!
//! * `Q_{∗,c(p)}(a_{p′}, a_p)` when `p` and `p′` cross,
//! * `Q_{∗,∗}(a_p, a_{p′}) Q_{∗,c(p′)}(a_p, a_{p′})` when `p` covers `p′`,
//!
//! where `c(p)` is `1` for positive and `′` for negative pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::matrix_model::{
    block_word_moment, sample_coefficients, vacuum_expectation, z_moment, CoefficientLaw,
    CoefficientTable, GeneratorWord, PsiLaw,
};
use crate::moments::{joint_moment, lambda_coeff, powi, scalar_moment, CovarianceSpec, ModelParams};
use crate::partitions::{epsilon_of, kernel, Color, ColoredPairPartition, MultiIndex, Pair, Symbol};
use crate::stats::{trial_seed, RunningStats};

/// Upper limit on `N^n` for [`y_statistic`].
pub const Y_BUDGET: f64 = 1.3e7;

/// Default relative tolerance for [`verify_reduction`] under non-dyadic
/// samplers.
pub const REDUCTION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Relation {
    Disjoint,
    Crossing,
    Covering,
}

fn relation(p: &Pair, later: &Pair) -> Relation {
    if later.opener < p.closer {
        if later.closer < p.closer {
            Relation::Covering
        } else {
            Relation::Crossing
        }
    } else {
        Relation::Disjoint
    }
}

/// The factor contributed by `p < p′` at values `x = a_p`, `y = a_{p′}`.
fn link_factor(rel: Relation, p: &Pair, later: &Pair, x: usize, y: usize, t: &CoefficientTable) -> f64 {
    match rel {
        Relation::Disjoint => 1.0,
        Relation::Crossing => t.star_commutation(y, x, p.color.closer_symbol()),
        Relation::Covering => {
            t.star_commutation(x, y, Symbol::Star) * t.star_commutation(x, y, later.color.closer_symbol())
        }
    }
}

fn pair_values(pi_f: &ColoredPairPartition, idx: &MultiIndex, t: &CoefficientTable) -> Result<Vec<usize>> {
    if idx.len() != pi_f.n() || kernel(idx) != pi_f.uncolored() {
        return Err(domain!("ker of {:?} is not the pairing of {pi_f}", idx.values()));
    }
    if idx.values().iter().any(|&v| v > t.size()) {
        return Err(domain!("index values exceed table size {}", t.size()));
    }
    Ok(pi_f.pairs().iter().map(|p| idx.values()[p.opener - 1]).collect())
}

/// `Ξ(π_f, i)` from the closed-form commutation scalars of `t`.
pub fn xi_coefficient(pi_f: &ColoredPairPartition, idx: &MultiIndex, t: &CoefficientTable) -> Result<f64> {
    let values = pair_values(pi_f, idx, t)?;
    let pairs = pi_f.pairs();
    let mut xi = 1.0;
    for (k, p) in pairs.iter().enumerate() {
        for (l, later) in pairs.iter().enumerate().skip(k + 1) {
            xi *= link_factor(relation(p, later), p, later, values[k], values[l], t);
        }
    }
    Ok(xi)
}

/// Closed-form `Ξ` against the automaton for one word.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    pub pi_f: ColoredPairPartition,
    pub multiindex: Vec<usize>,
    pub xi_closed_form: f64,
    /// `word_value / pair_moment_product`; NaN when the product vanishes.
    pub xi_oracle: f64,
    /// `∏_{− pairs} Ψ_{a_p}`, the interval word's vacuum value.
    pub pair_moment_product: f64,
    pub word_value: f64,
    pub matched: bool,
}

/// Evaluates the word of `(π_f, i)` on the automaton and compares it with
/// `Ξ(π_f, i) · ∏ φ(T* T^{c(p)})`. `tolerance` is relative to
/// `max(1, |word value|)`; zero demands exact equality.
pub fn verify_reduction(
    pi_f: &ColoredPairPartition,
    idx: &MultiIndex,
    t: &CoefficientTable,
    tolerance: f64,
) -> Result<ReductionReport> {
    let values = pair_values(pi_f, idx, t)?;
    let xi = xi_coefficient(pi_f, idx, t)?;
    let eps = epsilon_of(pi_f);
    let letters = idx.values().iter().copied().zip(eps.0.iter().copied()).collect();
    let word = GeneratorWord::new(letters, t.size())?;
    let word_value = vacuum_expectation(&word, t);
    let pair_moment_product: f64 = pi_f
        .pairs()
        .iter()
        .zip(&values)
        .map(|(p, &a)| match p.color {
            Color::Positive => 1.0,
            Color::Negative => t.psi(a),
        })
        .product();
    let xi_oracle = if pair_moment_product != 0.0 {
        word_value / pair_moment_product
    } else {
        f64::NAN
    };
    let diff = (xi * pair_moment_product - word_value).abs();
    Ok(ReductionReport {
        pi_f: pi_f.clone(),
        multiindex: idx.values().to_vec(),
        xi_closed_form: xi,
        xi_oracle,
        pair_moment_product,
        word_value,
        matched: diff <= tolerance * word_value.abs().max(1.0),
    })
}

/// `(N)_n / N^n`, the fraction of assignments with `n` distinct values.
pub fn finite_n_factor(n_sites: usize, pairs: usize) -> f64 {
    (0..pairs).map(|k| (n_sites - k) as f64 / n_sites as f64).product()
}

enum Link {
    /// All ones off the diagonal.
    Free,
    /// Row-major `N × N`, zero diagonal.
    Dense(Vec<f64>),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

struct YKernel<'a> {
    n_sites: usize,
    pairs: usize,
    // links[k][l - k - 1] for k < l.
    links: Vec<Vec<Link>>,
    // rows[d] holds, for every l ≥ d, the product of the weight of pair l
    // with the links from the pairs fixed so far.
    rows: &'a mut [Vec<Vec<f64>>],
}

impl YKernel<'_> {
    fn link(&self, k: usize, l: usize) -> &Link {
        &self.links[k][l - k - 1]
    }

    fn sum_from(&mut self, d: usize) -> f64 {
        let n = self.n_sites;
        let last = self.pairs - 1;
        if d == last {
            return self.rows[d][0].iter().sum();
        }
        if d + 1 == last {
            let (cur, next) = (&self.rows[d][0], &self.rows[d][1]);
            return match self.link(d, last) {
                Link::Free => {
                    let total: f64 = next.iter().sum();
                    cur.iter().zip(next).map(|(c, x)| c * (total - x)).sum()
                }
                Link::Dense(m) => cur
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(a, c)| c * dot(&m[a * n..(a + 1) * n], next))
                    .sum(),
            };
        }
        let mut total = 0.0;
        for a in 0..n {
            let coef = self.rows[d][0][a];
            if coef == 0.0 {
                continue;
            }
            for l in d + 1..self.pairs {
                let (head, tail) = self.rows.split_at_mut(d + 1);
                let src = &head[d][l - d];
                let dst = &mut tail[0][l - d - 1];
                match &self.links[d][l - d - 1] {
                    Link::Free => {
                        dst.copy_from_slice(src);
                        dst[a] = 0.0;
                    }
                    Link::Dense(m) => {
                        for ((o, s), f) in dst.iter_mut().zip(src).zip(&m[a * n..(a + 1) * n]) {
                            *o = s * f;
                        }
                    }
                }
            }
            total += coef * self.sum_from(d + 1);
        }
        total
    }
}

/// `Y_{N,π_f} = N^{−n} Σ_{ker i = π} Ξ(π_f, i) ∏_{− pairs} Ψ_{a_p}`, summed
/// over sites `1..=n_sites` of `t`.
pub fn y_statistic(pi_f: &ColoredPairPartition, n_sites: usize, t: &CoefficientTable) -> Result<f64> {
    let pairs = pi_f.len();
    if pairs == 0 {
        return Err(domain!("empty pair partition"));
    }
    if n_sites < pairs || n_sites > t.size() {
        return Err(domain!(
            "N = {n_sites} must lie in {pairs}..={} for {pairs} pairs",
            t.size()
        ));
    }
    let cost = powi(n_sites as f64, pairs);
    if cost > Y_BUDGET {
        return Err(Error::Resource {
            what: "Y statistic assignments",
            estimate: cost,
            limit: Y_BUDGET,
        });
    }
    let n = n_sites;
    let ps = pi_f.pairs();
    let links: Vec<Vec<Link>> = (0..pairs)
        .map(|k| {
            (k + 1..pairs)
                .map(|l| match relation(&ps[k], &ps[l]) {
                    Relation::Disjoint => Link::Free,
                    rel => {
                        let mut m = vec![0.0; n * n];
                        for x in 0..n {
                            for y in 0..n {
                                if x != y {
                                    m[x * n + y] = link_factor(rel, &ps[k], &ps[l], x + 1, y + 1, t);
                                }
                            }
                        }
                        Link::Dense(m)
                    }
                })
                .collect()
        })
        .collect();
    let mut rows: Vec<Vec<Vec<f64>>> = (0..pairs).map(|d| vec![vec![0.0; n]; pairs - d]).collect();
    for (l, p) in ps.iter().enumerate() {
        for (x, w) in rows[0][l].iter_mut().enumerate() {
            *w = match p.color {
                Color::Positive => 1.0,
                Color::Negative => t.psi(x + 1),
            };
        }
    }
    let mut kernel = YKernel {
        n_sites: n,
        pairs,
        links,
        rows: &mut rows,
    };
    Ok(kernel.sum_from(0) / cost)
}

/// Summary of a Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub order: usize,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
    pub abs_err: f64,
}

impl ConvergenceRecord {
    fn from_samples(n: usize, order: usize, exact: f64, samples: &[f64]) -> Self {
        let stats: RunningStats = samples.iter().copied().collect();
        ConvergenceRecord {
            n,
            order,
            trials: samples.len(),
            mean: stats.mean(),
            stderr: stats.stderr(),
            exact,
            abs_err: (stats.mean() - exact).abs(),
        }
    }

    /// Sample variance of the underlying trials.
    pub fn variance(&self) -> f64 {
        self.stderr * self.stderr * self.trials as f64
    }
}

#[cfg(feature = "parallel")]
fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    (0..trials as u64).map(f).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    Ok(())
}

/// Mean and standard error of [`y_statistic`] over `trials` tables of size
/// `n_sites`; the exact value is `λ_{π_f} (N)_n / N^n`. Trial `k` uses the
/// table seeded by `trial_seed(seed, k)`.
pub fn estimate_lambda(
    pi_f: &ColoredPairPartition,
    n_sites: usize,
    trials: usize,
    seed: u64,
    params: &ModelParams,
    law: &CoefficientLaw,
) -> Result<ConvergenceRecord> {
    let mut out = estimate_lambda_many(core::slice::from_ref(pi_f), n_sites, trials, seed, params, law)?;
    Ok(out.remove(0))
}

/// [`estimate_lambda`] for several partitions, sharing each trial's table
/// across all of them.
pub fn estimate_lambda_many(
    pis: &[ColoredPairPartition],
    n_sites: usize,
    trials: usize,
    seed: u64,
    params: &ModelParams,
    law: &CoefficientLaw,
) -> Result<Vec<ConvergenceRecord>> {
    check_trials(trials)?;
    for pi_f in pis {
        let cost = powi(n_sites as f64, pi_f.len());
        if cost > Y_BUDGET {
            return Err(Error::Resource {
                what: "Y statistic assignments",
                estimate: cost,
                limit: Y_BUDGET,
            });
        }
    }
    let per_trial = run_trials(trials, |k| {
        let t = sample_coefficients(n_sites, params, law, trial_seed(seed, k))?;
        pis.iter().map(|pi_f| y_statistic(pi_f, n_sites, &t)).collect::<Result<Vec<f64>>>()
    })?;
    Ok(pis
        .iter()
        .enumerate()
        .map(|(j, pi_f)| {
            let samples: Vec<f64> = per_trial.iter().map(|row| row[j]).collect();
            let exact = lambda_coeff(pi_f, params) * finite_n_factor(n_sites, pi_f.len());
            ConvergenceRecord::from_samples(n_sites, pi_f.n(), exact, &samples)
        })
        .collect())
}

/// `φ_N(Z_N^r)` over `trials` tables for each `N`, against the limit
/// moment with `⟨x, x̄⟩ = 1`. Trial `k` at size `N` uses the seed
/// `trial_seed(trial_seed(seed, N), k)`.
pub fn convergence_table(
    params: &ModelParams,
    ns: &[usize],
    r: usize,
    trials: usize,
    seed: u64,
    law: &CoefficientLaw,
) -> Result<Vec<ConvergenceRecord>> {
    check_trials(trials)?;
    if ns.is_empty() {
        return Err(Error::Config("empty list of system sizes".into()));
    }
    let exact = scalar_moment(r, params, 1.0)?;
    ns.iter()
        .map(|&n| {
            let samples = z_moment_samples(params, n, r, trials, seed, law)?;
            Ok(ConvergenceRecord::from_samples(n, r, exact, &samples))
        })
        .collect()
}

/// The per-trial values behind one [`convergence_table`] row.
pub fn z_moment_samples(
    params: &ModelParams,
    n: usize,
    r: usize,
    trials: usize,
    seed: u64,
    law: &CoefficientLaw,
) -> Result<Vec<f64>> {
    check_trials(trials)?;
    let size_seed = trial_seed(seed, n as u64);
    run_trials(trials, |k| {
        let t = sample_coefficients(n, params, law, trial_seed(size_seed, k))?;
        z_moment(n, r, &t)
    })
}

/// Summary of externally collected samples.
pub fn summarize(n: usize, order: usize, exact: f64, samples: &[f64]) -> ConvergenceRecord {
    ConvergenceRecord::from_samples(n, order, exact, samples)
}

/// `φ(Z_{N,b(1)} ⋯ Z_{N,b(r)})` on one table of size `N·k` with block-wise
/// `Ψ = α D(b,b)`, against [`joint_moment`]. Requires `C = I` and `D`
/// diagonal.
pub fn joint_convergence(
    blocks: &[usize],
    params: &ModelParams,
    cov: &CovarianceSpec,
    n_sites: usize,
    trials: usize,
    seed: u64,
) -> Result<ConvergenceRecord> {
    check_trials(trials)?;
    if !cov.is_orthonormal() {
        return Err(domain!("joint model needs C = I and D diagonal"));
    }
    let exact = joint_moment(blocks, params, cov)?;
    let k = cov.dim();
    let law = CoefficientLaw {
        psi: PsiLaw::Blockwise {
            block_len: n_sites,
            means: (1..=k).map(|b| params.alpha() * cov.d(b, b)).collect(),
        },
        ..CoefficientLaw::rademacher(params)
    };
    let samples = run_trials(trials, |trial| {
        let t = sample_coefficients(n_sites * k, params, &law, trial_seed(seed, trial))?;
        block_word_moment(blocks, n_sites, &t)
    })?;
    Ok(ConvergenceRecord::from_samples(n_sites, blocks.len(), exact, &samples))
}
