mod common;

use common::{close, frac, product_type2_rational, rat};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use wmstat::prob::DiscreteDist;
use wmstat::rates::{
    hard_instance, n_required_empirical, tokens_lower_bound, tokens_upper_bound, type2_product_classes, type2_product_exact,
    type2_product_mc,
};
use wmstat::rng::rng_stream;

#[test]
fn exact_matches_rational_oracle() {
    // Dyadic probabilities are exact in f64, so the oracle sees the same law.
    let laws: [&[f64]; 4] = [&[0.5, 0.5], &[0.75, 0.25], &[0.875, 0.125], &[0.5, 0.25, 0.25]];
    for probs in laws {
        let rho = DiscreteDist::new(probs.to_vec()).unwrap();
        let exact: Vec<_> = probs.iter().map(|&p| rat(p)).collect();
        for n in [1u64, 2, 5, 13, 32, 64] {
            if probs.len() == 3 && n > 32 {
                continue;
            }
            for alpha in [(1, 100), (1, 20), (1, 4)] {
                let a = frac(alpha.0, alpha.1);
                let want = product_type2_rational(&exact, n, &a).to_f64().unwrap();
                let got = type2_product_exact(&rho, n, a.to_f64().unwrap()).unwrap();
                assert!(close(got, want, 1e-12 * want.max(1.0)), "{probs:?} n={n} α={a}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn binomial_sum_matches_class_enumeration() {
    for h in [0.05, 0.1, 0.2] {
        let rho = hard_instance(h).unwrap();
        for n in [1u64, 10, 50, 200] {
            for alpha in [0.001, 0.01, 0.05] {
                let a = type2_product_exact(&rho, n, alpha).unwrap();
                let b = type2_product_classes(&rho, n, alpha).unwrap();
                assert!(close(a, b, 1e-12), "h={h} n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = rng_stream(21, 0);
    for i in 0..20u64 {
        let k = 2 + (i % 3) as usize;
        let rho = DiscreteDist::random(k, &mut rng);
        let n = 1 + i % 12;
        let alpha = [0.01, 0.05, 0.1, 0.2][i as usize % 4];
        let exact = type2_product_exact(&rho, n, alpha).unwrap();
        let (est, se) = type2_product_mc(&rho, n, alpha, 100_000, i).unwrap();
        assert!((est - exact).abs() <= 4.0 * se + 1e-12, "instance {i}: {est} ± {se} vs {exact}");
    }
}

#[test]
fn sandwich_at_hard_instance() {
    for h in [0.05, 0.1, 0.2] {
        let (lo, hi) = (tokens_lower_bound(h, 0.01, 0.01).unwrap(), tokens_upper_bound(h, 0.01, 0.01, 2).unwrap());
        let rho = hard_instance(h).unwrap();
        let (n_star, curve) = n_required_empirical(&rho, 0.01, 0.01, 2000).unwrap();
        let n_star = n_star.expect("crossing within the scan") as f64;
        assert!(lo <= n_star && n_star <= hi, "h={h}: {lo} ≤ {n_star} ≤ {hi}");
        for pt in curve.entries.iter().filter(|p| (p.n as f64) < lo) {
            assert!(pt.beta > 0.01, "h={h}: β({}) = {}", pt.n, pt.beta);
        }
    }
}

proptest! {
    #[test]
    fn exact_is_non_increasing_in_alpha(
        w in prop::collection::vec(0.05f64..1.0, 2..5),
        n in 1u64..30,
        a in 0.001f64..0.5,
        da in 0.0f64..0.3,
    ) {
        let rho = DiscreteDist::from_weights(&w).unwrap();
        let b0 = type2_product_exact(&rho, n, a).unwrap();
        let b1 = type2_product_exact(&rho, n, (a + da).min(1.0)).unwrap();
        prop_assert!(b1 <= b0 + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b0));
    }
}
