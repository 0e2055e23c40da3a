//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use typeb_core::clt::{convergence_table, estimate_lambda_many, verify_reduction, y_statistic};
use typeb_core::density::{density_eval, density_moment, normalization_check, DensityParams};
use typeb_core::matrix_model::{sample_coefficients, CoefficientLaw};
use typeb_core::moments::{scalar_moment, ModelParams};
use typeb_core::partitions::{
    double_factorial_odd, enumerate_colored_pair_partitions, enumerate_pair_partitions, Color,
    ColoredPairPartition, MultiIndex,
};
use typeb_core::stats::{splitmix64, trial_seed, RunningStats};

const SEED: u64 = 20_261_016;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(alpha: f64, q: f64) -> ModelParams {
    ModelParams::new(alpha, q).unwrap()
}

fn c1_enumeration_counts() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=5 {
        let plain = enumerate_pair_partitions(2 * n).unwrap().len() as u64;
        let colored = enumerate_colored_pair_partitions(2 * n).unwrap().len() as u64;
        let want = double_factorial_odd(n);
        if plain != want || colored != want << n {
            bad.push(format!("n={n}: {plain}/{colored} vs {want}/{}", want << n));
        }
    }
    outcome(bad.is_empty(), format!("n=1..5, (2n-1)!! and (2n-1)!!*2^n; mismatches: {bad:?}"))
}

fn c2_closed_form_moments() -> Outcome {
    let grid: Vec<f64> = (0..9).map(|k| -0.8 + 0.2 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for &a in &grid {
        for &q in &grid {
            let p = params(a, q);
            let m2 = scalar_moment(2, &p, 1.0).unwrap();
            let m4 = scalar_moment(4, &p, 1.0).unwrap();
            let want4 = (1.0 + a) * ((1.0 + a) * (1.0 + q) + 1.0 + a * q * q);
            worst = worst.max((m2 - (1.0 + a)).abs()).max((m4 - want4).abs());
        }
    }
    let mut worst_limit: f64 = 0.0;
    for &a in &grid {
        let hi = scalar_moment(4, &params(a, 0.999_999), 1.0).unwrap();
        let lo = scalar_moment(4, &params(a, -0.999_999), 1.0).unwrap();
        worst_limit = worst_limit
            .max((hi - 3.0 * (1.0 + a).powi(2)).abs())
            .max((lo - (1.0 + a).powi(2)).abs());
    }
    outcome(
        worst <= 1e-12 && worst_limit <= 1e-4,
        format!("9x9 grid max err {worst:.2e} (tol 1e-12); q=+-0.999999 limits max err {worst_limit:.2e} (tol 1e-4)"),
    )
}

fn c3_density_cross_validation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut compared = 0;
    for a in [-0.5, 0.0, 0.5] {
        for q in [-0.5, 0.0, 0.5] {
            let dp = DensityParams::with_auto_terms(a, q).unwrap();
            let deficit = normalization_check(&dp).unwrap().deficit;
            let mut worst: f64 = 0.0;
            if deficit.abs() < 1e-6 {
                compared += 1;
                for k in [2, 4, 6] {
                    let dm = density_moment(k, &dp).unwrap();
                    let exact = scalar_moment(k, &params(a, q), 1.0).unwrap();
                    worst = worst.max((dm - exact).abs());
                }
                ok &= worst <= 1e-4;
                lines.push(format!("({a},{q}): deficit {deficit:.1e}, max diff {worst:.1e}"));
            } else {
                lines.push(format!("({a},{q}): deficit {deficit:.1e}, skipped"));
            }
        }
    }
    outcome(ok && compared > 0, format!("{compared}/9 points compared (tol 1e-4); {}", lines.join("; ")))
}

fn c4_semicircle() -> Outcome {
    let dp = DensityParams::new(0.0, 0.0, 50).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..101 {
        let t = -2.0 + 4.0 * k as f64 / 100.0;
        let semi = (4.0 - t * t).max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
        worst = worst.max((density_eval(t, &dp).unwrap() - semi).abs());
    }
    outcome(worst <= 1e-9, format!("101 points on [-2,2], K=50, max err {worst:.2e} (tol 1e-9)"))
}

fn c5_reduction_oracle() -> Outcome {
    let p = params(0.5, 0.3);
    let law = CoefficientLaw::rademacher(&p);
    let n_sites = 20;
    let tables: Vec<_> = (0..5)
        .map(|k| sample_coefficients(n_sites, &p, &law, trial_seed(SEED, k)).unwrap())
        .collect();
    let mut state = SEED;
    let (mut partitions, mut checked, mut bad) = (0, 0, 0);
    for pairs in 1..=3 {
        for pi_f in enumerate_colored_pair_partitions(2 * pairs).unwrap() {
            partitions += 1;
            for tuple in 0..50 {
                let mut pool: Vec<usize> = (1..=n_sites).collect();
                for k in 0..pairs {
                    state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                    let j = k + (splitmix64(state) % (n_sites - k) as u64) as usize;
                    pool.swap(k, j);
                }
                let mut idx = vec![0; pi_f.n()];
                for (pr, v) in pi_f.pairs().iter().zip(&pool) {
                    idx[pr.opener - 1] = *v;
                    idx[pr.closer - 1] = *v;
                }
                let mi = MultiIndex::new(idx, n_sites).unwrap();
                let r = verify_reduction(&pi_f, &mi, &tables[tuple % 5], 0.0).unwrap();
                checked += 1;
                bad += usize::from(!r.matched);
            }
        }
    }
    outcome(
        bad == 0,
        format!("{partitions} colored partitions (n<=3), {checked} words, exact comparison, {bad} mismatches"),
    )
}

fn c6_lambda_convergence() -> Outcome {
    let p = params(0.5, 0.3);
    let mut pis = Vec::new();
    for n in 1..=3 {
        pis.extend(enumerate_colored_pair_partitions(2 * n).unwrap());
    }
    let recs = estimate_lambda_many(&pis, 200, 200, SEED, &p, &CoefficientLaw::rademacher(&p)).unwrap();
    let mut worst_z: f64 = 0.0;
    let mut violations = Vec::new();
    let mut zero_var = 0;
    for (pi_f, r) in pis.iter().zip(&recs) {
        if r.stderr == 0.0 {
            zero_var += 1;
        } else {
            worst_z = worst_z.max(r.abs_err / r.stderr);
        }
        if r.abs_err > 3.0 * r.stderr {
            violations.push(format!("{pi_f}: |{:.6} - {:.6}| > 3*{:.2e}", r.mean, r.exact, r.stderr));
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} partitions, N=200, 200 trials: {zero_var} exact (zero variance), max |err|/stderr {worst_z:.2}; violations {violations:?}",
            pis.len()
        ),
    )
}

fn c7_clt_convergence() -> Outcome {
    let p = params(0.5, 0.3);
    let law = CoefficientLaw::rademacher(&p);
    let ns = [16, 32, 64, 128];
    let r4 = convergence_table(&p, &ns, 4, 100, SEED, &law).unwrap();
    let errs: Vec<f64> = r4.iter().map(|r| r.abs_err).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let last = &r4[3];
    let rel = last.abs_err / last.exact;
    let r2 = convergence_table(&p, &ns, 2, 100, SEED, &law).unwrap();
    let r2_exact = r2.iter().all(|r| r.mean == 1.5 && r.stderr == 0.0);
    let odd_zero = [1, 3, 5].iter().all(|&r| {
        convergence_table(&p, &ns, r, 10, SEED, &law)
            .unwrap()
            .iter()
            .all(|x| x.mean == 0.0 && x.stderr == 0.0)
    });
    outcome(
        decreasing && rel < 0.05 && r2_exact && odd_zero,
        format!(
            "r=4 abs_err {:?} strictly decreasing: {decreasing}; rel err at N=128 {:.4} (< 0.05); r=2 exact: {r2_exact}; odd r zero: {odd_zero}",
            errs.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>(),
            rel
        ),
    )
}

fn c8_variance_decay() -> Outcome {
    use Color::{Negative as Ng, Positive as Ps};
    let p = params(0.5, 0.3);
    let law = CoefficientLaw::rademacher(&p);
    let cases = [
        ColoredPairPartition::new(4, [(1, 3, Ps), (2, 4, Ps)]).unwrap(),
        ColoredPairPartition::new(4, [(1, 4, Ps), (2, 3, Ng)]).unwrap(),
        ColoredPairPartition::new(6, [(1, 4, Ng), (2, 5, Ps), (3, 6, Ng)]).unwrap(),
    ];
    let ns = [25, 50, 100];
    let mut ok = true;
    let mut lines = Vec::new();
    for (c, pi_f) in cases.iter().enumerate() {
        let scaled: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let mut stats = RunningStats::new();
                for k in 0..200 {
                    let seed = trial_seed(trial_seed(SEED ^ c as u64, n as u64), k);
                    let t = sample_coefficients(n, &p, &law, seed).unwrap();
                    stats.push(y_statistic(pi_f, n, &t).unwrap());
                }
                stats.variance() * (n * n) as f64
            })
            .collect();
        let fine = scaled.windows(2).all(|w| w[1] <= 4.0 * w[0]);
        ok &= fine;
        lines.push(format!(
            "{pi_f}: Var*N^2 = {:?}",
            scaled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ));
    }
    outcome(ok, format!("N in {ns:?}, 200 tables each, growth factor <= 4; {}", lines.join("; ")))
}

fn run_cli(args: &[&str], out: &PathBuf) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_typeb"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TYPEB_OUT_DIR")
        .status()
        .expect("binary runs");
    assert!(status.success(), "typeb {args:?} failed");
    std::fs::read(out).expect("output written")
}

fn c9_reproducibility() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-repro");
    std::fs::create_dir_all(&dir).unwrap();
    let seed = SEED.to_string();
    let runs: [(&str, Vec<&str>); 4] = [
        ("simulate.jsonl", vec!["simulate", "--N", "24", "--order", "4", "--alpha", "0.5", "--q", "0.3", "--trials", "20", "--seed", &seed]),
        ("simulate.csv", vec!["simulate", "--N", "24", "--order", "4", "--alpha", "-0.4", "--q", "0.6", "--trials", "20", "--seed", &seed, "--dist", "two-point", "--p-high", "0.3", "--format", "csv"]),
        ("converge.jsonl", vec!["converge", "--orders", "2,4", "--Ns", "8,16", "--alpha", "0.5", "--q", "0.3", "--trials", "10", "--seed", &seed]),
        ("converge.csv", vec!["converge", "--orders", "4", "--Ns", "8,16", "--alpha", "0.5", "--q", "-0.3", "--trials", "10", "--seed", &seed, "--format", "csv"]),
    ];
    let mut same = Vec::new();
    for (name, args) in &runs {
        let a = run_cli(args, &dir.join(format!("a-{name}")));
        let b = run_cli(args, &dir.join(format!("b-{name}")));
        same.push((name.to_string(), a == b && !a.is_empty()));
    }
    outcome(same.iter().all(|(_, s)| *s), format!("byte-identical reruns: {same:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("1 enumeration counts", c1_enumeration_counts, Some(Duration::from_secs(1))),
        ("2 closed-form moments", c2_closed_form_moments, Some(Duration::from_secs(1))),
        ("3 density cross-validation", c3_density_cross_validation, Some(Duration::from_secs(60))),
        ("4 semicircle gate", c4_semicircle, None),
        ("5 reduction oracle", c5_reduction_oracle, Some(Duration::from_secs(60))),
        ("6 lambda convergence", c6_lambda_convergence, Some(Duration::from_secs(300))),
        ("7 CLT convergence", c7_clt_convergence, Some(Duration::from_secs(600))),
        ("8 variance decay", c8_variance_decay, None),
        ("9 reproducibility", c9_reproducibility, None),
    ];
    let mut failures = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = result.pass && in_time;
        failures += usize::from(!pass);
        let budget = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!(
            "{} criterion {name} [{:.2}s{budget}]: {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            result.detail
        );
    }
    if failures > 0 {
        println!("{failures} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
