use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use typeb_core::clt::{self, summarize, z_moment_samples, REDUCTION_TOL};
use typeb_core::density::{self, DensityParams, MAX_MOMENT_ORDER};
use typeb_core::matrix_model::{sample_coefficients, CoefficientLaw, PsiLaw, TwoPointLaw};
use typeb_core::moments::{self, ModelParams};
use typeb_core::partitions::{
    self, Color, ColoredPairPartition, EpsilonWord, MultiIndex, DEFAULT_CAP,
};
use typeb_core::stats::{splitmix64, trial_seed};

use crate::output::{num, resolve_path, Format, Meta, Table, OUT_DIR_ENV};
use crate::{CliError, OutArgs, ParamArgs};

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn model(p: &ParamArgs) -> Result<ModelParams> {
    Ok(ModelParams::new(p.alpha, p.q)?)
}

fn write(table: &Table, meta: &Meta, out: &OutArgs, default_format: Format) -> Result<()> {
    let format = out.format.unwrap_or(default_format);
    let path = resolve_path(out.out.as_deref(), meta.command, format);
    table.write(meta, format, path.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    /// `Q`, `Q̃` in `{−1, +1}` with mean `q`.
    Rademacher,
    /// Two-point law with mean `q`, unit second moment and `P(high) = --p-high`.
    TwoPoint,
}

/// Coefficient distribution.
#[derive(Args, Clone, Copy, Debug)]
pub struct DistArgs {
    #[arg(long, value_enum, default_value = "rademacher")]
    pub dist: Dist,
    /// `P(high)` for `--dist two-point`.
    #[arg(long, default_value_t = 0.5)]
    pub p_high: f64,
    /// `Ψ_i = α ± spread/i`; zero keeps `Ψ ≡ α`.
    #[arg(long, default_value_t = 0.0)]
    pub psi_spread: f64,
}

impl DistArgs {
    fn law(&self, p: &ModelParams) -> Result<CoefficientLaw> {
        let mut law = CoefficientLaw::rademacher(p);
        if self.dist == Dist::TwoPoint {
            let two = TwoPointLaw::with_unit_second_moment(p.q(), self.p_high)?;
            law.q = two;
            law.q_tilde = two;
        }
        if self.psi_spread != 0.0 {
            law.psi = PsiLaw::Decaying {
                mean: p.alpha(),
                spread: self.psi_spread,
            };
        }
        law.validate(p)?;
        Ok(law)
    }

    fn is_dyadic(&self) -> bool {
        self.dist == Dist::Rademacher && self.psi_spread == 0.0
    }

    fn describe(&self) -> Value {
        json!({
            "dist": match self.dist { Dist::Rademacher => "rademacher", Dist::TwoPoint => "two-point" },
            "p_high": num(self.p_high),
            "psi_spread": num(self.psi_spread),
        })
    }
}

fn param_meta(meta: Meta, p: &ParamArgs) -> Meta {
    meta.param("alpha", num(p.alpha)).param("q", num(p.q))
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// Size of the ground set (even).
    #[arg(long)]
    pub n: Option<usize>,
    /// Enumerate colored pair partitions.
    #[arg(long)]
    pub colored: bool,
    /// Only colored pair partitions compatible with this word over `*`, `1`, `'`.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Deformation parameters for the weight column (colored only).
    #[arg(long, allow_hyphen_values = true, requires = "q")]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "alpha")]
    pub q: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn enumerate(a: EnumerateArgs) -> Result<()> {
    let params = match (a.alpha, a.q) {
        (Some(alpha), Some(q)) => Some(ModelParams::new(alpha, q)?),
        _ => None,
    };
    let mut meta = Meta::new("enumerate", None).param("colored", json!(a.colored || a.epsilon.is_some()));
    if let Some(p) = &params {
        meta = meta.param("alpha", num(p.alpha())).param("q", num(p.q()));
    }
    let colored: Option<Vec<ColoredPairPartition>> = match (&a.epsilon, a.n) {
        (Some(w), _) => {
            let eps: EpsilonWord = w.parse().map_err(CliError::from)?;
            meta = meta.param("epsilon", json!(eps.to_string()));
            Some(partitions::enumerate_for_epsilon(&eps)?)
        }
        (None, Some(n)) if a.colored => {
            meta = meta.param("n", json!(n));
            Some(partitions::enumerate_colored_pair_partitions(n)?)
        }
        (None, Some(_)) => None,
        (None, None) => return Err(invalid("either --n or --epsilon is required")),
    };
    let mut table;
    match colored {
        Some(list) => {
            table = Table::new("partition", &["index", "partition", "crossings", "nestings", "negative_blocks", "lambda"]);
            for (k, pi_f) in list.iter().enumerate() {
                let lambda = params.as_ref().map_or(Value::Null, |p| num(moments::lambda_coeff(pi_f, p)));
                table.push(vec![
                    json!(k),
                    json!(pi_f.to_string()),
                    json!(pi_f.crossings()),
                    json!(pi_f.nestings()),
                    json!(pi_f.negative_blocks()),
                    lambda,
                ]);
            }
        }
        None => {
            let n = a.n.expect("checked above");
            meta = meta.param("n", json!(n));
            table = Table::new("partition", &["index", "partition", "crossings", "covering_pairs"]);
            for (k, pi) in partitions::enumerate_pair_partitions(n)?.iter().enumerate() {
                let pairs = pi.pairs()?;
                let text = pairs.iter().map(|(x, y)| format!("({x},{y})")).collect::<Vec<_>>().join(",");
                table.push(vec![
                    json!(k),
                    json!(format!("{{{text}}}")),
                    json!(partitions::crossings(pi)?),
                    json!(partitions::covering_pairs(pi)?),
                ]);
            }
        }
    }
    table.trailer.push(json!({"kind": "summary", "count": table.rows.len()}));
    write(&table, &meta, &a.out, Format::Json)
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    /// Moment order of G(x).
    #[arg(long)]
    pub order: Option<usize>,
    /// Mixed moment word over `*`, `1`, `'` instead of `--order`.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// `<x, x̄>` for a unit vector x.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub d: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn moments(a: MomentsArgs) -> Result<()> {
    let p = model(&a.params)?;
    let meta = param_meta(Meta::new("moments", None), &a.params).param("d", num(a.d));
    let mut table = Table::new("moment", &["order", "epsilon", "value"]);
    match (a.order, &a.epsilon) {
        (Some(order), None) => {
            let v = moments::scalar_moment(order, &p, a.d)?;
            table.push(vec![json!(order), Value::Null, num(v)]);
        }
        (None, Some(w)) => {
            let eps: EpsilonWord = w.parse().map_err(CliError::from)?;
            let v = moments::mixed_epsilon_moment(&eps, &p, a.d)?;
            table.push(vec![json!(eps.len()), json!(eps.to_string()), num(v)]);
        }
        _ => return Err(invalid("exactly one of --order and --epsilon is required")),
    }
    write(&table, &meta, &a.out, Format::Json)
}

fn density_params(p: &ParamArgs, terms: Option<usize>) -> Result<DensityParams> {
    Ok(match terms {
        Some(k) => DensityParams::new(p.alpha, p.q, k)?,
        None => DensityParams::with_auto_terms(p.alpha, p.q)?,
    })
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Number of product factors; chosen automatically when omitted.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Equally spaced points on [-R, R].
    #[arg(long, default_value_t = 101)]
    pub grid_points: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn density(a: DensityArgs) -> Result<()> {
    if a.grid_points == 0 {
        return Err(invalid("--grid-points must be positive"));
    }
    let dp = density_params(&a.params, a.terms)?;
    let meta = param_meta(Meta::new("density", None), &a.params)
        .param("terms", json!(dp.terms()))
        .param("grid_points", json!(a.grid_points));
    let r = dp.support_radius();
    let mut table = Table::new("density", &["t", "density"]);
    for k in 0..a.grid_points {
        let t = if a.grid_points == 1 {
            0.0
        } else {
            -r + 2.0 * r * k as f64 / (a.grid_points - 1) as f64
        };
        table.push(vec![num(t), num(density::density_eval(t, &dp)?)]);
    }
    write(&table, &meta, &a.out, Format::Csv)
}

#[derive(Args, Debug)]
pub struct DensityMomentsArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub terms: Option<usize>,
    /// Largest moment order (at most 8).
    #[arg(long, default_value_t = 6)]
    pub max_order: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

fn density_moment_table(p: &ParamArgs, dp: &DensityParams, max_order: usize, per_row_deficit: bool) -> Result<Table> {
    if max_order > MAX_MOMENT_ORDER {
        return Err(invalid(format!("--max-order must be at most {MAX_MOMENT_ORDER}")));
    }
    let mp = model(p)?;
    let norm = density::normalization_check(dp)?;
    let mut columns = vec!["order", "density_moment", "exact", "abs_diff"];
    if per_row_deficit {
        columns.push("deficit");
    }
    let mut table = Table::new("density_moment", &columns);
    for k in 1..=max_order {
        let dm = density::density_moment(k, dp)?;
        let exact = moments::scalar_moment(k, &mp, 1.0)?;
        let mut row = vec![json!(k), num(dm), num(exact), num((dm - exact).abs())];
        if per_row_deficit {
            row.push(num(norm.deficit));
        }
        table.push(row);
    }
    table
        .trailer
        .push(json!({"kind": "normalization", "mass": num(norm.mass), "deficit": num(norm.deficit)}));
    Ok(table)
}

pub fn density_moments(a: DensityMomentsArgs) -> Result<()> {
    let dp = density_params(&a.params, a.terms)?;
    let meta = param_meta(Meta::new("density-moments", None), &a.params)
        .param("terms", json!(dp.terms()))
        .param("max_order", json!(a.max_order));
    let table = density_moment_table(&a.params, &dp, a.max_order, false)?;
    write(&table, &meta, &a.out, Format::Json)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// System size.
    #[arg(long = "N")]
    pub n: usize,
    /// Power r of Z_N.
    #[arg(long)]
    pub order: usize,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let p = model(&a.params)?;
    let law = a.dist.law(&p)?;
    let meta = param_meta(Meta::new("simulate", Some(a.seed)), &a.params)
        .param("N", json!(a.n))
        .param("order", json!(a.order))
        .param("trials", json!(a.trials))
        .param("coefficients", a.dist.describe());
    let samples = z_moment_samples(&p, a.n, a.order, a.trials, a.seed, &law)?;
    let exact = moments::scalar_moment(a.order, &p, 1.0)?;
    let rec = summarize(a.n, a.order, exact, &samples);
    let mut table = Table::new("trial", &["N", "order", "trial", "value"]);
    for (k, v) in samples.iter().enumerate() {
        table.push(vec![json!(a.n), json!(a.order), json!(k), num(*v)]);
    }
    table.trailer.push(json!({
        "kind": "summary",
        "mean": num(rec.mean),
        "stderr": num(rec.stderr),
        "exact": num(rec.exact),
        "abs_err": num(rec.abs_err),
    }));
    write(&table, &meta, &a.out, Format::Json)
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Largest number of pairs.
    #[arg(long, default_value_t = 3)]
    pub max_n: usize,
    /// Random index tuples per partition and table.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Number of random coefficient tables.
    #[arg(long, default_value_t = 5)]
    pub tables: usize,
    /// Table size.
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

/// `count` distinct values in `1..=n` drawn from a SplitMix64 stream.
fn distinct_values(n: usize, count: usize, state: &mut u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (1..=n).collect();
    for k in 0..count {
        *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let j = k + (splitmix64(*state) % (n - k) as u64) as usize;
        pool.swap(k, j);
    }
    pool.truncate(count);
    pool
}

pub fn verify_reduction(a: VerifyArgs) -> Result<()> {
    let p = ModelParams::new(a.alpha, a.q)?;
    let law = a.dist.law(&p)?;
    if a.max_n == 0 || 2 * a.max_n > DEFAULT_CAP {
        return Err(invalid(format!("--max-n must lie in 1..={}", DEFAULT_CAP / 2)));
    }
    if a.n < a.max_n {
        return Err(invalid("--N must be at least --max-n"));
    }
    let tol = if a.dist.is_dyadic() { 0.0 } else { REDUCTION_TOL };
    let tables: Vec<_> = (0..a.tables as u64)
        .map(|k| sample_coefficients(a.n, &p, &law, trial_seed(a.seed, k)))
        .collect::<std::result::Result<_, _>>()?;
    let meta = Meta::new("verify-reduction", Some(a.seed))
        .param("alpha", num(a.alpha))
        .param("q", num(a.q))
        .param("max_n", json!(a.max_n))
        .param("trials", json!(a.trials))
        .param("tables", json!(a.tables))
        .param("N", json!(a.n))
        .param("tolerance", num(tol))
        .param("coefficients", a.dist.describe());
    let mut table = Table::new("reduction", &["partition", "checked", "mismatches"]);
    let mut state = splitmix64(a.seed ^ 0x5EED);
    let mut total_bad = 0usize;
    for pairs in 1..=a.max_n {
        for pi_f in partitions::enumerate_colored_pair_partitions(2 * pairs)? {
            let mut checked = 0usize;
            let mut bad = 0usize;
            for t in &tables {
                for _ in 0..a.trials {
                    let values = distinct_values(a.n, pairs, &mut state);
                    let mut idx = vec![0; pi_f.n()];
                    for (pr, v) in pi_f.pairs().iter().zip(&values) {
                        idx[pr.opener - 1] = *v;
                        idx[pr.closer - 1] = *v;
                    }
                    let report = clt::verify_reduction(&pi_f, &MultiIndex::new(idx, a.n)?, t, tol)?;
                    checked += 1;
                    bad += usize::from(!report.matched);
                }
            }
            total_bad += bad;
            table.push(vec![json!(pi_f.to_string()), json!(checked), json!(bad)]);
        }
    }
    table.trailer.push(json!({"kind": "summary", "partitions": table.rows.len(), "mismatches": total_bad}));
    write(&table, &meta, &a.out, Format::Json)?;
    if total_bad > 0 {
        return Err(CliError::Failure(format!("{total_bad} reduction mismatches")));
    }
    Ok(())
}

fn parse_pi(text: &str) -> Result<ColoredPairPartition> {
    let triples: Vec<(usize, usize, i64)> =
        serde_json::from_str(text).map_err(|e| invalid(format!("--pi must be a JSON list of [opener, closer, ±1]: {e}")))?;
    let pairs = triples
        .into_iter()
        .map(|(x, y, c)| Ok((x, y, Color::from_sign(c)?)))
        .collect::<std::result::Result<Vec<_>, typeb_core::Error>>()?;
    Ok(ColoredPairPartition::new(2 * pairs.len(), pairs)?)
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Colored pair partition as JSON, e.g. `[[1,3,1],[2,4,-1]]`.
    #[arg(long)]
    pub pi: String,
    #[arg(long = "N")]
    pub n: usize,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn estimate_lambda(a: EstimateArgs) -> Result<()> {
    let p = model(&a.params)?;
    let law = a.dist.law(&p)?;
    let pi_f = parse_pi(&a.pi)?;
    let meta = param_meta(Meta::new("estimate-lambda", Some(a.seed)), &a.params)
        .param("pi", json!(pi_f.to_string()))
        .param("N", json!(a.n))
        .param("trials", json!(a.trials))
        .param("coefficients", a.dist.describe());
    let rec = clt::estimate_lambda(&pi_f, a.n, a.trials, a.seed, &p, &law)?;
    let mut table = Table::new("estimate", &["partition", "N", "trials", "mean", "stderr", "exact", "abs_err", "lambda"]);
    table.push(vec![
        json!(pi_f.to_string()),
        json!(rec.n),
        json!(rec.trials),
        num(rec.mean),
        num(rec.stderr),
        num(rec.exact),
        num(rec.abs_err),
        num(moments::lambda_coeff(&pi_f, &p)),
    ]);
    write(&table, &meta, &a.out, Format::Json)
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    /// Powers r of Z_N, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub orders: Vec<usize>,
    /// System sizes, comma separated.
    #[arg(long = "Ns", value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

const RECORD_COLUMNS: [&str; 7] = ["N", "order", "trials", "mean", "stderr", "exact", "abs_err"];

fn convergence_rows(
    p: &ModelParams,
    ns: &[usize],
    orders: &[usize],
    trials: usize,
    seed: u64,
    law: &CoefficientLaw,
) -> Result<Table> {
    if ns.is_empty() || orders.is_empty() {
        return Err(invalid("the lists of sizes and orders must be non-empty"));
    }
    let mut table = Table::new("record", &RECORD_COLUMNS);
    for &r in orders {
        for rec in clt::convergence_table(p, ns, r, trials, seed, law)? {
            table.push(vec![
                json!(rec.n),
                json!(rec.order),
                json!(rec.trials),
                num(rec.mean),
                num(rec.stderr),
                num(rec.exact),
                num(rec.abs_err),
            ]);
        }
    }
    Ok(table)
}

pub fn converge(a: ConvergeArgs) -> Result<()> {
    let p = model(&a.params)?;
    let law = a.dist.law(&p)?;
    let meta = param_meta(Meta::new("converge", Some(a.seed)), &a.params)
        .param("orders", json!(a.orders))
        .param("Ns", json!(a.ns))
        .param("trials", json!(a.trials))
        .param("coefficients", a.dist.describe());
    let table = convergence_rows(&p, &a.ns, &a.orders, a.trials, a.seed, &law)?;
    write(&table, &meta, &a.out, Format::Json)
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long = "Ns", value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub orders: Vec<usize>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub terms: Option<usize>,
    /// Largest density moment order (at most 8).
    #[arg(long, default_value_t = 6)]
    pub max_order: usize,
    #[command(flatten)]
    pub dist: DistArgs,
    /// Directory for convergence.csv and density.csv; defaults to
    /// $TYPEB_OUT_DIR, else the current directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn report(a: ReportArgs) -> Result<()> {
    if a.ns.is_empty() {
        return Err(invalid("--Ns must list at least one size"));
    }
    let p = model(&a.params)?;
    let law = a.dist.law(&p)?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let dp = density_params(&a.params, a.terms)?;
    let meta = param_meta(Meta::new("report", Some(a.seed)), &a.params)
        .param("orders", json!(a.orders))
        .param("Ns", json!(a.ns))
        .param("trials", json!(a.trials))
        .param("terms", json!(dp.terms()))
        .param("max_order", json!(a.max_order))
        .param("coefficients", a.dist.describe());
    let conv = convergence_rows(&p, &a.ns, &a.orders, a.trials, a.seed, &law)?;
    let dens = density_moment_table(&a.params, &dp, a.max_order, true)?;
    conv.write(&meta, Format::Csv, Some(&dir.join("convergence.csv")))?;
    dens.write(&meta, Format::Csv, Some(&dir.join("density.csv")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_values_are_distinct() {
        let mut s = 1;
        for _ in 0..100 {
            let mut v = distinct_values(5, 3, &mut s);
            assert!(v.iter().all(|&x| (1..=5).contains(&x)));
            v.sort_unstable();
            v.dedup();
            assert_eq!(v.len(), 3);
        }
    }

    #[test]
    fn pi_parsing() {
        let pi = parse_pi("[[1,3,1],[2,4,-1]]").unwrap();
        assert_eq!(pi.to_string(), "{(1,3,+),(2,4,-)}");
        assert!(matches!(parse_pi("[[1,3,2],[2,4,1]]"), Err(CliError::Validation(_))));
        assert!(matches!(parse_pi("[[1,2,1],[2,3,1]]"), Err(CliError::Validation(_))));
        assert!(matches!(parse_pi("not json"), Err(CliError::Validation(_))));
    }
}
