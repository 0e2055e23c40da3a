use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use typeb_core::clt::{verify_reduction, y_statistic};
use typeb_core::density::{density_eval, paired_g, q_pochhammer, DensityParams};
use typeb_core::matrix_model::{
    mixed_sum_moment, sample_coefficients, vacuum_expectation, CoefficientLaw, CoefficientTable,
    GeneratorWord, PsiLaw, TwoPointLaw,
};
use typeb_core::moments::{joint_moment, lambda_coeff, scalar_moment, CovarianceSpec, ModelParams};
use typeb_core::partitions::{
    enumerate_colored_pair_partitions, kernel, Color, ColoredPairPartition, EpsilonWord,
    MultiIndex, Symbol,
};

fn params(a: f64, q: f64) -> ModelParams {
    ModelParams::new(a, q).unwrap()
}

fn g_complex(t: f64, b: Complex64, q: f64, terms: usize) -> Complex64 {
    let s = (1.0 - q).sqrt();
    (0..terms as i32)
        .map(|k| 1.0 - b * t * s * q.powi(k) + b * b * q.powi(2 * k))
        .product()
}

#[test]
fn paired_g_matches_complex_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let q: f64 = rng.random_range(-0.9..0.9);
        let b2: f64 = rng.random_range(-0.95..0.95);
        let r = 2.0 / (1.0 - q).sqrt();
        let t: f64 = rng.random_range(-r..r);
        let b = Complex64::new(b2, 0.0).sqrt();
        let oracle = g_complex(t, b, q, 60) * g_complex(t, -b, q, 60);
        let value = paired_g(t, b2, q, 60);
        assert!(oracle.im.abs() < 1e-12);
        assert!((value - oracle.re).abs() < 1e-12 * oracle.re.abs().max(1.0), "{t} {b2} {q}");
    }
}

// The density straight from six complex g factors, without the edge
// cancellation.
fn density_complex(t: f64, alpha: f64, q: f64, terms: usize) -> f64 {
    let r = 2.0 / (1.0 - q).sqrt();
    let one = Complex64::new(1.0, 0.0);
    let sq = Complex64::new(q, 0.0).sqrt();
    let beta = Complex64::new(-alpha, 0.0).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let num = g_complex(t, one, q, terms)
        * g_complex(t, -one, q, terms)
        * g_complex(t, sq, q, terms)
        * g_complex(t, -sq, q, terms);
    let den = g_complex(t, i * beta, q, terms) * g_complex(t, -i * beta, q, terms);
    let pre = q_pochhammer(q, q, terms).unwrap() * q_pochhammer(-alpha, q, terms).unwrap()
        / (2.0 * std::f64::consts::PI * (r * r - t * t).sqrt());
    let v = num / den * pre;
    assert!(v.im.abs() < 1e-10);
    v.re
}

#[test]
fn density_matches_complex_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..20 {
        let alpha: f64 = rng.random_range(-0.8..0.8);
        let q: f64 = rng.random_range(-0.8..0.8);
        let p = DensityParams::new(alpha, q, 200).unwrap();
        let t = rng.random_range(-0.95..0.95) * p.support_radius();
        let oracle = density_complex(t, alpha, q, 200);
        let value = density_eval(t, &p).unwrap();
        assert!((value - oracle).abs() < 1e-10 * oracle.abs().max(1.0), "{alpha} {q} {t}");
    }
}

#[test]
fn semicircle_and_q_gaussian_limits() {
    let p = DensityParams::new(0.0, 0.0, 60).unwrap();
    for k in 0..=20 {
        let t = -1.9 + 0.19 * k as f64;
        let semi = (4.0 - t * t).sqrt() / (2.0 * std::f64::consts::PI);
        assert!((density_eval(t, &p).unwrap() - semi).abs() < 1e-12);
    }
}

#[test]
fn scalar_moment_matches_colored_enumeration() {
    for (a, q, d) in [(0.5, 0.3, 1.0f64), (-0.7, 0.6, -0.4), (0.2, -0.8, 0.9), (0.0, 0.0, 1.0)] {
        let p = params(a, q);
        for order in [2, 4, 6, 8] {
            let brute: f64 = enumerate_colored_pair_partitions(order)
                .unwrap()
                .iter()
                .map(|pi_f| lambda_coeff(pi_f, &p) * d.powi(pi_f.negative_blocks() as i32))
                .sum();
            let fast = scalar_moment(order, &p, d).unwrap();
            assert!((brute - fast).abs() < 1e-12 * brute.abs().max(1.0), "order {order}");
        }
    }
}

#[test]
fn joint_moment_matches_colored_enumeration() {
    let p = params(0.4, -0.35);
    let cov = CovarianceSpec::new(
        3,
        vec![1.0, 0.2, -0.1, 0.2, 0.8, 0.3, -0.1, 0.3, 1.2],
        vec![0.5, 0.1, 0.0, 0.1, -0.3, 0.2, 0.0, 0.2, 0.7],
    )
    .unwrap();
    let words: [&[usize]; 4] = [&[1, 2], &[1, 2, 3, 1], &[3, 3, 2, 1, 1, 2], &[2, 1, 3, 3, 1, 2, 2, 1]];
    for word in words {
        let brute: f64 = enumerate_colored_pair_partitions(word.len())
            .unwrap()
            .iter()
            .map(|pi_f| {
                let gram: f64 = pi_f
                    .pairs()
                    .iter()
                    .map(|pr| {
                        let (x, y) = (word[pr.opener - 1], word[pr.closer - 1]);
                        match pr.color {
                            Color::Positive => cov.c(x, y),
                            Color::Negative => cov.d(x, y),
                        }
                    })
                    .product();
                lambda_coeff(pi_f, &p) * gram
            })
            .sum();
        let fast = joint_moment(word, &p, &cov).unwrap();
        assert!((brute - fast).abs() < 1e-12, "{word:?}: {brute} vs {fast}");
    }
}

fn random_assignment(pi_f: &ColoredPairPartition, n: usize, rng: &mut ChaCha8Rng) -> MultiIndex {
    let mut pool: Vec<usize> = (0..n).collect();
    for k in 0..pi_f.len() {
        let j = rng.random_range(k..n);
        pool.swap(k, j);
    }
    let values = &pool[..pi_f.len()];
    let mut idx = vec![0; pi_f.n()];
    for (pr, v) in pi_f.pairs().iter().zip(values.iter()) {
        idx[pr.opener - 1] = v + 1;
        idx[pr.closer - 1] = v + 1;
    }
    MultiIndex::new(idx, n).unwrap()
}

#[test]
fn reduction_holds_for_general_two_point_laws() {
    let p = params(-0.3, 0.45);
    let law = CoefficientLaw {
        q: TwoPointLaw::with_unit_second_moment(0.45, 0.3).unwrap(),
        q_tilde: TwoPointLaw::with_unit_second_moment(0.45, 0.8).unwrap(),
        psi: PsiLaw::Decaying { mean: -0.3, spread: 0.4 },
        min_separation: 1e-3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..5 {
        let t = sample_coefficients(9, &p, &law, seed).unwrap();
        for n in 1..=3 {
            for pi_f in enumerate_colored_pair_partitions(2 * n).unwrap() {
                for _ in 0..10 {
                    let idx = random_assignment(&pi_f, 9, &mut rng);
                    let r = verify_reduction(&pi_f, &idx, &t, 1e-10).unwrap();
                    assert!(r.matched, "{pi_f} {:?}: {r:?}", idx.values());
                }
            }
        }
    }
}

fn y_by_words(pi_f: &ColoredPairPartition, n: usize, t: &CoefficientTable) -> f64 {
    let eps = typeb_core::partitions::epsilon_of(pi_f);
    let r = pi_f.n();
    let mut total = 0.0;
    let mut idx = vec![1; r];
    loop {
        let mi = MultiIndex::new(idx.clone(), n).unwrap();
        if kernel(&mi) == pi_f.uncolored() {
            let letters = idx.iter().copied().zip(eps.0.iter().copied()).collect();
            total += vacuum_expectation(&GeneratorWord::new(letters, n).unwrap(), t);
        }
        let mut k = 0;
        while k < r && idx[k] == n {
            idx[k] = 1;
            k += 1;
        }
        if k == r {
            break;
        }
        idx[k] += 1;
    }
    total / (n as f64).powi(pi_f.len() as i32)
}

#[test]
fn y_statistic_matches_full_word_sum() {
    let p = params(0.6, -0.4);
    let law = CoefficientLaw {
        q: TwoPointLaw::with_unit_second_moment(-0.4, 0.7).unwrap(),
        q_tilde: TwoPointLaw::with_unit_second_moment(-0.4, 0.2).unwrap(),
        psi: PsiLaw::Decaying { mean: 0.6, spread: 0.3 },
        min_separation: 1e-3,
    };
    let t = sample_coefficients(5, &p, &law, 8).unwrap();
    for n in 1..=3 {
        for pi_f in enumerate_colored_pair_partitions(2 * n).unwrap() {
            let fast = y_statistic(&pi_f, 5, &t).unwrap();
            let slow = y_by_words(&pi_f, 5, &t);
            assert!((fast - slow).abs() < 1e-11 * slow.abs().max(1.0), "{pi_f}");
        }
    }
}

// Full index expansion of φ(S^{ε(1)} ⋯ S^{ε(r)}) against the expansion
// restricted to kernels without singletons.
#[test]
fn singleton_kernels_contribute_nothing() {
    let p = params(0.5, 0.3);
    let law = CoefficientLaw::rademacher(&p);
    for n in [2, 4, 6] {
        let t = sample_coefficients(n, &p, &law, n as u64).unwrap();
        for r in 1..=4 {
            let mut symbols = vec![Symbol::Star; r];
            loop {
                let eps = EpsilonWord(symbols.clone());
                let mut full = 0.0;
                let mut restricted = 0.0;
                let mut idx = vec![1; r];
                loop {
                    let letters = idx.iter().copied().zip(symbols.iter().copied()).collect();
                    let v = vacuum_expectation(&GeneratorWord::new(letters, n).unwrap(), &t);
                    let ker = kernel(&MultiIndex::new(idx.clone(), n).unwrap());
                    full += v;
                    if ker.blocks().iter().all(|b| b.len() > 1) {
                        restricted += v;
                    } else {
                        assert_eq!(v, 0.0);
                    }
                    let mut k = 0;
                    while k < r && idx[k] == n {
                        idx[k] = 1;
                        k += 1;
                    }
                    if k == r {
                        break;
                    }
                    idx[k] += 1;
                }
                assert_eq!(full, restricted);
                let scaled = full / (n as f64).powi(r as i32 / 2);
                let sums = mixed_sum_moment(&eps, n, &t).unwrap();
                assert!((scaled - sums).abs() < 1e-12, "{eps} at N = {n}");

                let mut k = 0;
                while k < r && symbols[k] == Symbol::Prime {
                    symbols[k] = Symbol::Star;
                    k += 1;
                }
                if k == r {
                    break;
                }
                symbols[k] = match symbols[k] {
                    Symbol::Star => Symbol::One,
                    _ => Symbol::Prime,
                };
            }
        }
    }
}
