mod common;

use common::{close, excess, tv_ball_grid_min};
use proptest::prelude::*;
use wmstat::prob::{tv_distance, DiscreteDist};
use wmstat::rng::rng_stream;
use wmstat::ump::{optimal_type2, type1_exact, type2_exact, ump_build, ump_oracle};

#[test]
fn ump_meets_level_and_closed_form() {
    let mut rng = rng_stream(11, 0);
    for i in 0..200 {
        let rho = DiscreteDist::random(2 + i % 7, &mut rng);
        for alpha in [0.05, 0.1, 0.3] {
            let c = ump_build(&rho, alpha, 0.0).unwrap();
            assert!(type1_exact(&c) <= alpha + 1e-12);
            assert!(close(type2_exact(&c), excess(rho.probs(), alpha), 1e-12));
        }
    }
}

#[test]
fn oracle_agrees_for_small_alphabets() {
    let mut rng = rng_stream(12, 0);
    for i in 0..40 {
        let rho = DiscreteDist::random(1 + i % 4, &mut rng);
        for alpha in [0.05, 0.2, 0.45] {
            let lp = ump_oracle(&rho, alpha).unwrap();
            assert!(close(lp, excess(rho.probs(), alpha), 1e-9), "{rho:?} {alpha}");
        }
    }
}

#[test]
fn water_filling_matches_grid_oracle() {
    // ρ, α and ε on the 0.005 lattice, so the optimum lies on the grid.
    let rhos: [&[f64]; 6] = [
        &[1.0],
        &[0.5, 0.5],
        &[0.9, 0.1],
        &[0.6, 0.3, 0.1],
        &[0.35, 0.35, 0.3],
        &[0.8, 0.15, 0.05],
    ];
    for probs in rhos {
        let rho = DiscreteDist::new(probs.to_vec()).unwrap();
        for alpha in [0.1, 0.25, 0.4] {
            for eps in [0.0, 0.05, 0.1, 0.2, 0.5] {
                let closed = optimal_type2(&rho, alpha, eps).unwrap();
                let grid = tv_ball_grid_min(probs, alpha, eps, 0.005);
                assert!(close(closed, grid, 2e-3), "{probs:?} α={alpha} ε={eps}: {closed} vs {grid}");
            }
        }
    }
}

#[test]
fn zero_capacity_distortion_buys_nothing() {
    let rho = DiscreteDist::uniform(2);
    for eps in [0.0, 0.1, 0.5] {
        let v = optimal_type2(&rho, 0.3, eps).unwrap();
        assert!(close(v, 0.4, 1e-12));
        assert!(close(tv_ball_grid_min(&[0.5, 0.5], 0.3, eps, 0.005), 0.4, 2e-3));
    }
}

fn dist() -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec(0.01f64..1.0, 1..9).prop_map(|w| DiscreteDist::from_weights(&w).unwrap())
}

proptest! {
    #[test]
    fn type2_is_monotone(rho in dist(), a in 0.01f64..0.9, da in 0.0f64..0.1, e in 0.0f64..0.5, de in 0.0f64..0.2) {
        let b = optimal_type2(&rho, a, e).unwrap();
        prop_assert!(optimal_type2(&rho, (a + da).min(1.0), e).unwrap() <= b + 1e-12);
        prop_assert!(optimal_type2(&rho, a, e + de).unwrap() <= b + 1e-12);
    }

    #[test]
    fn distorted_coupling_contract(rho in dist(), alpha in 0.01f64..0.9, eps in 0.0f64..0.5) {
        let c = ump_build(&rho, alpha, eps).unwrap();
        prop_assert!(type1_exact(&c) <= alpha + 1e-12);
        prop_assert!(tv_distance(&c.x_marginal(), &rho).unwrap() <= eps + 1e-12);
        prop_assert!(close(type2_exact(&c), optimal_type2(&rho, alpha, eps).unwrap(), 1e-12));
    }
}
