use ckdse::graphon::*;
use ckdse::rational::{q, qi, to_f64};
use ckdse::Q;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_graphs() -> Vec<SimpleGraph> {
    (1..=5).flat_map(|n| graphs_on(n, 10)).collect()
}

fn pattern_graphs() -> Vec<SimpleGraph> {
    let mut hs: Vec<SimpleGraph> = (1..=5).flat_map(|n| graphs_on(n, 4)).collect();
    // four disjoint edges: the widest pattern with four edges
    let k2 = SimpleGraph::complete(2);
    hs.push(k2.disjoint_union(&k2).disjoint_union(&k2).disjoint_union(&k2));
    hs
}

fn random_q(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Q {
    q(rng.random_range(lo * den..=hi * den), den)
}

fn random_values(rng: &mut ChaCha8Rng, k: usize, lo: i64, hi: i64) -> Vec<Vec<Q>> {
    let mut v = vec![vec![qi(0); k]; k];
    for i in 0..k {
        for j in i..k {
            let x = random_q(rng, lo, hi, 6);
            v[i][j] = x.clone();
            v[j][i] = x;
        }
    }
    v
}

fn random_measures(rng: &mut ChaCha8Rng, k: usize) -> Vec<Q> {
    let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| q(w, total)).collect()
}

fn random_graphon(rng: &mut ChaCha8Rng, k: usize) -> StepGraphon {
    StepGraphon::new(random_measures(rng, k), random_values(rng, k, 0, 1)).unwrap()
}

#[test]
fn graph_density_agrees_with_graphon_density() {
    for g in small_graphs() {
        let w = graphon_from_graph(&g).unwrap();
        for h in pattern_graphs() {
            assert_eq!(hom_density(&h, &w), hom_density_graph(&h, &g), "H = {h}, G = {g}");
        }
    }
}

#[test]
fn density_is_multiplicative_over_disjoint_union() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hs = connected_graphs_up_to(3);
    for _ in 0..20 {
        let k = rng.random_range(1..=4);
        let w = random_graphon(&mut rng, k);
        for a in &hs {
            for b in &hs {
                let joint = hom_density(&a.disjoint_union(b), &w);
                assert_eq!(joint, hom_density(a, &w) * hom_density(b, &w));
            }
        }
    }
}

#[test]
fn cut_norm_bounds_and_heuristic_below_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..60 {
        let k = 1 + trial % 6;
        let kern = BlockKernel::new(random_measures(&mut rng, k), random_values(&mut rng, k, -1, 1)).unwrap();
        let exact = cut_norm(&kern, CutMode::Exact).unwrap();
        let heur = cut_norm(&kern, CutMode::Heuristic { seed: trial as u64 }).unwrap();
        assert!(heur <= exact, "{heur} > {exact}");
        assert!(exact >= 0.0 && exact <= to_f64(&kern.max_abs()));
        assert!(exact >= to_f64(&kern.integral()).abs());
        let w = random_graphon(&mut rng, k);
        let e = cut_norm(&w, CutMode::Exact).unwrap();
        // nonnegative graphons attain their norm on the full square
        assert_eq!(e, to_f64(&w.kernel().integral()));
    }
}

#[test]
fn cut_distance_is_a_pseudometric_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..12 {
        let ws: Vec<StepGraphon> = (0..3)
            .map(|_| {
                let k = [1, 2, 4][rng.random_range(0..3)];
                StepGraphon::equal_blocks(random_values(&mut rng, k, 0, 1)).unwrap()
            })
            .collect();
        let d = |a: &StepGraphon, b: &StepGraphon| cut_distance(a, b, CutMode::Exact).unwrap().value;
        for a in &ws {
            assert_eq!(d(a, a), 0.0);
            for b in &ws {
                assert_eq!(d(a, b), d(b, a));
                for c in &ws {
                    assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
                }
            }
        }
    }
}

#[test]
fn relabeling_preserves_distance_and_fingerprint() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let w = StepGraphon::equal_blocks(random_values(&mut rng, 4, 0, 1)).unwrap();
        let moved = w.permuted(&[3, 1, 0, 2]);
        assert_eq!(cut_distance(&w, &moved, CutMode::Exact).unwrap().value, 0.0);
        let (a, b) = (density_fingerprint(&w, 4).unwrap(), density_fingerprint(&moved, 4).unwrap());
        assert!(a.indistinguishable(&b));
    }
}

#[test]
fn gateaux_derivative_matches_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let hs: Vec<SimpleGraph> = connected_graphs_up_to(3)
        .into_iter()
        .filter(|h| h.edge_count() >= 1)
        .collect();
    let eps = q(1, 10_000);
    for i in 0..100 {
        let h = &hs[i % hs.len()];
        let k = rng.random_range(1..=4);
        // strictly positive W and D keep the derivative away from zero; at
        // W = 0 a star's derivative vanishes while the O(ε²) term does not
        let wvals = random_values(&mut rng, k, 0, 1)
            .into_iter()
            .map(|r| r.into_iter().map(|x| (x + q(1, 6)).min(qi(1))).collect())
            .collect();
        let w = StepGraphon::new(random_measures(&mut rng, k), wvals).unwrap();
        let dvals = random_values(&mut rng, k, 0, 2)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x + q(1, 6)).collect())
            .collect();
        let d = BlockKernel::new(w.measures().to_vec(), dvals).unwrap();
        let exact = gateaux_density_derivative(h, w.kernel(), &d).unwrap();
        let plus = hom_density_kernel(h, &w.kernel().add(&d.scale(&eps)));
        let minus = hom_density_kernel(h, &w.kernel().sub(&d.scale(&eps)));
        let fd = (plus - minus) / (qi(2) * &eps);
        let rel = ((to_f64(&fd) - to_f64(&exact)) / to_f64(&exact)).abs();
        assert!(rel <= 1e-6, "H = {h}: relative error {rel}");
    }
}

#[test]
fn sampled_graphs_approach_the_graphon() {
    let half = StepGraphon::constant(q(1, 2)).unwrap();
    let mut medians = Vec::new();
    for n in [50usize, 200, 800] {
        let mut ds: Vec<f64> = (0..20u64)
            .map(|t| {
                let g = sample_random_graph(n, &half, 1000 * n as u64 + t).unwrap();
                let wg = graphon_from_graph(&g).unwrap();
                cut_distance(&wg, &half, CutMode::Heuristic { seed: t }).unwrap().value
            })
            .collect();
        ds.sort_by(f64::total_cmp);
        medians.push((ds[9] + ds[10]) / 2.0);
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

proptest! {
    #[test]
    fn graph6_round_trips(n in 1usize..9, bits in prop::collection::vec(any::<bool>(), 36)) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let edges = pairs.into_iter().zip(bits).filter(|(_, b)| *b).map(|(e, _)| e);
        let g = SimpleGraph::new(n, edges).unwrap();
        prop_assert_eq!(SimpleGraph::from_graph6(&g.graph6()).unwrap(), g.clone());
        let perm: Vec<usize> = (0..n).rev().collect();
        prop_assert_eq!(g.permuted(&perm).canonical(), g.canonical());
    }
}
