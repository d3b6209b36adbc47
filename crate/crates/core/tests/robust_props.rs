mod common;

use common::{close, lp_vertex_max};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::Rng;
use wmstat::prob::DiscreteDist;
use wmstat::rng::{rng_stream, Stream};
use wmstat::robust::simplex::{simplex_solve, simplex_solve_exact, LpStatus};
use wmstat::robust::{
    hamming_graph, robust_lp_build, robust_solve, robust_type2_exact, robust_ump_build, shrinkage, PerturbationGraph,
};
use wmstat::ump::{type1_exact, type2_exact, ump_build, Atom, Coupling, Region};

fn random_graph(k: usize, p: f64, rng: &mut Stream) -> PerturbationGraph {
    let edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|u| (0..k).map(move |v| (u, v)))
        .filter(|&(u, v)| u == v || rng.random_bool(p))
        .collect();
    PerturbationGraph::from_edges(k, &edges).unwrap().0
}

fn random_region(k: usize, rng: &mut Stream) -> Region {
    Region::new((0..k).filter(|_| rng.random_bool(0.5)).collect())
}

#[test]
fn hand_solved_examples() {
    let half = DiscreteDist::uniform(2);
    let b = robust_solve(&half, 0.2, &PerturbationGraph::complete(2), false).unwrap().beta;
    assert!(close(b, 0.8, 1e-9));
    let b = robust_solve(&half, 0.2, &PerturbationGraph::self_loops(2), false).unwrap().beta;
    assert!(close(b, 0.6, 1e-9));
    let (chain, _) = PerturbationGraph::from_edges(3, &[(0, 1)]).unwrap();
    let third = DiscreteDist::uniform(3);
    let b = robust_solve(&third, 1.0 / 3.0, &chain, false).unwrap().beta;
    assert!(close(b, 1.0 / 3.0, 1e-9));
    let c = robust_ump_build(&third, 1.0 / 3.0, &chain).unwrap();
    assert!(close(robust_type2_exact(&c, &chain), 1.0 / 3.0, 1e-9));
    assert!(c.atoms().iter().any(|a| a.outcome == 0 && a.region == Region::new(vec![0, 1])));
}

#[test]
fn self_loops_reduce_to_ump() {
    let mut rng = rng_stream(41, 0);
    for i in 0..100 {
        let k = 1 + i % 8;
        let rho = DiscreteDist::random(k, &mut rng);
        let alpha = rng.random_range(0.01..0.6);
        let g = PerturbationGraph::self_loops(k);
        let b = robust_solve(&rho, alpha, &g, false).unwrap().beta;
        let want = 1.0 - rho.probs().iter().map(|&p| p.min(alpha)).sum::<f64>();
        assert!(close(b, want, 1e-9), "{b} vs {want}");
        let c = robust_ump_build(&rho, alpha, &g).unwrap();
        assert!(close(robust_type2_exact(&c, &g), type2_exact(&ump_build(&rho, alpha, 0.0).unwrap()), 1e-9));
    }
}

#[test]
fn simplex_matches_vertex_oracle() {
    let mut rng = rng_stream(42, 0);
    for i in 0..100 {
        let k = 1 + i % 6;
        let rho = DiscreteDist::random(k, &mut rng);
        let alpha = rng.random_range(0.02..0.7);
        let g = random_graph(k, 0.3, &mut rng);
        for sum_row in [false, true] {
            let lp = robust_lp_build(&rho, alpha, &g, sum_row).unwrap();
            let oracle = lp_vertex_max(&lp).unwrap();
            let sol = simplex_solve(&lp);
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!(close(sol.objective, oracle, 1e-8), "instance {i}: {} vs {oracle}", sol.objective);
            assert!(lp.max_violation(&sol.x) <= 1e-9);
            let exact = simplex_solve_exact(&lp);
            assert!(close(exact.objective.to_f64().unwrap(), oracle, 1e-8));
        }
    }
}

#[test]
fn robust_coupling_is_feasible() {
    let mut rng = rng_stream(43, 0);
    for i in 0..60 {
        let k = 2 + i % 7;
        let rho = DiscreteDist::random(k, &mut rng);
        let alpha = rng.random_range(0.02..0.5);
        let g = random_graph(k, 0.25, &mut rng);
        let sol = robust_solve(&rho, alpha, &g, false).unwrap();
        let c = robust_ump_build(&rho, alpha, &g).unwrap();
        assert!(type1_exact(&c) <= alpha + 1e-9);
        assert!(close(robust_type2_exact(&c, &g), sol.beta, 1e-9));
    }
}

#[test]
fn hamming_examples() {
    let g = hamming_graph(2, 2, 1).unwrap();
    assert_eq!(g.out(0), &[0, 1, 2]);
    assert_eq!(hamming_graph(2, 2, 0).unwrap(), PerturbationGraph::self_loops(4));
    assert_eq!(hamming_graph(3, 2, 2).unwrap(), PerturbationGraph::complete(9));
    assert!(hamming_graph(10, 5, 1).is_err());
}

proptest! {
    #[test]
    fn shrinkage_definitions_agree(seed in 0u64..10_000, k in 1usize..9) {
        let mut rng = rng_stream(seed, 2);
        let g = random_graph(k, 0.3, &mut rng);
        let rho = DiscreteDist::random(k, &mut rng);
        let atoms: Vec<Atom> = (0..k)
            .flat_map(|x| {
                let r1 = random_region(k, &mut rng);
                let r2 = random_region(k, &mut rng);
                let split = rng.random_range(0.0..1.0);
                [Atom::new(x, r1, rho.prob(x) * split), Atom::new(x, r2, rho.prob(x) * (1.0 - split))]
            })
            .collect();
        let c = Coupling::new(k, atoms).unwrap();
        let via_shrink: f64 = c
            .atoms()
            .iter()
            .filter(|a| !shrinkage(&g, &a.region).contains(a.outcome))
            .map(|a| a.weight)
            .sum();
        prop_assert!(close(robust_type2_exact(&c, &g), via_shrink, 1e-12));
        for a in c.atoms() {
            prop_assert!(shrinkage(&g, &a.region).is_subset(&a.region));
        }
    }

    #[test]
    fn more_edges_never_help(seed in 0u64..10_000, k in 2usize..7, alpha in 0.02f64..0.6) {
        let mut rng = rng_stream(seed, 3);
        let rho = DiscreteDist::random(k, &mut rng);
        let mut g = PerturbationGraph::self_loops(k);
        let mut beta = robust_solve(&rho, alpha, &g, false).unwrap().beta;
        for _ in 0..k * 2 {
            g = g.with_edge(rng.random_range(0..k), rng.random_range(0..k));
            let next = robust_solve(&rho, alpha, &g, false).unwrap().beta;
            prop_assert!(next >= beta - 1e-9);
            beta = next;
        }
    }
}
