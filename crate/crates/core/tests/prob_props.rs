mod common;

use common::close;
use proptest::prelude::*;
use wmstat::prob::{
    binary_entropy, entropy, inv_binary_entropy, tv_distance, Branch, DiscreteDist,
};
use wmstat::rates::hard_instance;
use std::f64::consts::LN_2;

#[test]
fn topsoe_bounds_in_bits() {
    for i in 1..1000 {
        let x = i as f64 / 1000.0;
        let bits = binary_entropy(x).unwrap() / LN_2;
        let s = 4.0 * x * (1.0 - x);
        assert!(s <= bits + 1e-12, "lower at {x}");
        assert!(bits <= s.powf(1.0 / 4f64.ln()) + 1e-12, "upper at {x}");
    }
}

#[test]
fn inverse_entropy_roundtrip_on_grid() {
    for i in 1..1000 {
        let x = i as f64 / 1000.0;
        let branch = if x < 0.5 { Branch::Low } else { Branch::High };
        let h = binary_entropy(x).unwrap();
        let back = inv_binary_entropy(h, branch).unwrap();
        assert!(close(back, x, 1e-9), "{x} -> {back}");
    }
}

#[test]
fn tail_mass_bounds_at_low_entropy() {
    for i in 1..=250 {
        let h = i as f64 / 1000.0;
        let q = inv_binary_entropy(h, Branch::High).unwrap();
        let lower = h / (9.0 * (18.0 * 18f64.ln() / h).ln());
        let upper = h / (LN_2 / h).ln();
        assert!(lower <= 1.0 - q && 1.0 - q <= upper, "h = {h}: 1-q = {}", 1.0 - q);
    }
}

#[test]
fn hard_instance_has_requested_entropy() {
    for h in [0.01, 0.05, 0.1, 0.2, 0.24] {
        assert!(close(entropy(&hard_instance(h).unwrap()), h, 1e-9));
    }
}

fn dist(k: usize) -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|w| DiscreteDist::from_weights(&w).unwrap())
}

proptest! {
    #[test]
    fn tv_is_a_metric((a, b, c) in (2usize..7).prop_flat_map(|k| (dist(k), dist(k), dist(k)))) {
        let ab = tv_distance(&a, &b).unwrap();
        prop_assert!(close(ab, tv_distance(&b, &a).unwrap(), 1e-15));
        prop_assert!(tv_distance(&a, &a).unwrap() == 0.0);
        prop_assert!((0.0..=1.0).contains(&ab));
        let via = tv_distance(&a, &c).unwrap() + tv_distance(&c, &b).unwrap();
        prop_assert!(ab <= via + 1e-12);
    }

    #[test]
    fn inverse_entropy_roundtrip(x in 1e-6f64..(1.0 - 1e-6)) {
        // At 1/2 the entropy is flat and the argument is ill-conditioned.
        prop_assume!((x - 0.5).abs() >= 1e-3);
        let branch = if x < 0.5 { Branch::Low } else { Branch::High };
        let h = binary_entropy(x).unwrap();
        prop_assert!(close(inv_binary_entropy(h, branch).unwrap(), x, 1e-9));
    }

    #[test]
    fn entropy_is_bounded_by_log_k(d in (1usize..9).prop_flat_map(dist)) {
        let h = entropy(&d);
        prop_assert!(h >= -1e-15 && h <= (d.len() as f64).ln() + 1e-12);
    }
}
