mod common;

use common::{random_connected_graph, with_hub};
use oversmooth_core::attention::{build_attention, AttentionKernel, StochasticMatrix};
use oversmooth_core::graph::expected_homophily;
use oversmooth_core::io::{load_graph, save_graph, EdgeListFormat};
use oversmooth_core::nonlinear::{
    doeblin_epsilon_bound, max_pair_tv, nonlinear_rollout, selfloop_floor_check, trace_csv, trace_rows,
    weak_ergodicity_trace, LogitSign,
};
use oversmooth_core::{generate_homophily_graph, homophily_ratio, FeatureField, Graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sbm_homophily_matches_expectation_over_seeds() {
    let (n, k, p_in, p_out) = (200, 5, 0.2, 0.02);
    let ratios: Vec<f64> = (0..20)
        .map(|i| {
            let (g, labels) = generate_homophily_graph(n, k, p_in, p_out, 7 + i).unwrap();
            homophily_ratio(&g, &labels).unwrap()
        })
        .collect();
    let m = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / m;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let expected = expected_homophily(n, k, p_in, p_out);
    // Ratio of random edge counts: allow the sampling error plus a small
    // ratio-estimator bias.
    assert!(
        (mean - expected).abs() <= 4.0 * sd / m.sqrt() + 1e-3,
        "{mean} vs {expected}"
    );
}

#[test]
fn homophily_extremes() {
    let (g, labels) = generate_homophily_graph(12, 3, 1.0, 0.0, 1).unwrap();
    assert_eq!(homophily_ratio(&g, &labels).unwrap(), 1.0);
    let (g, labels) = generate_homophily_graph(12, 3, 0.0, 1.0, 1).unwrap();
    assert_eq!(homophily_ratio(&g, &labels).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edge_list_round_trip(seed in 0u64..10_000, n in 1usize..30, loops: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(n, 0.2, loops, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        save_graph(&path, &g).unwrap();
        let back = load_graph(&path, &EdgeListFormat { directed: None, num_nodes: Some(n) }).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(back.has_self_loops(), g.has_self_loops());
    }

    #[test]
    fn rollout_is_stochastic_and_non_expansive(seed in 0u64..10_000, steps in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(12, 0.2, true, &mut rng);
        let f = FeatureField::random_normal(12, 2, seed);
        let r = nonlinear_rollout(&g, &f, AttentionKernel::Dot.as_fn(), steps).unwrap();
        for p in &r.products {
            prop_assert!(p.column_sum().iter().all(|s| (s - 1.0).abs() < 1e-10));
        }
        let h0 = f.max_norm();
        for h in &r.states {
            prop_assert!(h.max_norm() <= h0 * (1.0 + 1e-10));
        }
        // Consensus bound: |h_T(u) - h_T(v)|_inf <= 2 |H_0|_max (1 - eps)^T.
        let eps = r.epsilon();
        let last = r.states.last().unwrap().as_matrix();
        let bound = 2.0 * h0 * (1.0 - eps).powi(steps as i32);
        for u in 0..12 {
            for v in 0..12 {
                prop_assert!((last.row(u) - last.row(v)).amax() <= bound + 1e-12);
            }
        }
    }
}

#[test]
fn a_priori_doeblin_bound_holds_for_realized_entries() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(15, 0.2, true, &mut rng);
        let f = FeatureField::random_normal(15, 2, seed);
        let r = nonlinear_rollout(&g, &f, AttentionKernel::ScaledDot(2.0).as_fn(), 100).unwrap();
        let c = r.logit_range.0.abs().max(r.logit_range.1.abs());
        let bound = doeblin_epsilon_bound(&g, c, LogitSign::Signed).unwrap();
        assert!(r.factor_min_entries.iter().all(|&e| e >= bound));
    }
}

#[test]
fn zero_kernel_rollout_is_linear_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_connected_graph(9, 0.3, true, &mut rng);
    let f = FeatureField::random_normal(9, 3, 3);
    let r = nonlinear_rollout(&g, &f, AttentionKernel::Zero.as_fn(), 25).unwrap();
    let a = StochasticMatrix::uniform(&g).unwrap();
    let mut h = f.as_matrix().clone();
    for state in &r.states[1..] {
        h = a.as_matrix() * h;
        assert!((state.as_matrix() - &h).amax() < 1e-12);
    }
}

#[test]
fn five_node_dot_rollout_merges_rows() {
    let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], false)
        .unwrap()
        .with_self_loops();
    let f = FeatureField::from_rows(&[vec![1.0], vec![0.5], vec![0.0], vec![-0.5], vec![-1.0]]).unwrap();
    let r = nonlinear_rollout(&g, &f, AttentionKernel::Dot.as_fn(), 50).unwrap();
    assert!(max_pair_tv(&r.final_product().p) < 1e-6);
}

#[test]
fn six_node_trace_stays_below_merging_bound() {
    let base = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)], false)
        .unwrap()
        .with_self_loops();
    let g = with_hub(&base, 2);
    let f = FeatureField::random_normal(6, 2, 6);
    let r = nonlinear_rollout(&g, &f, AttentionKernel::NegSqDist.as_fn(), 30).unwrap();
    let eps = r.epsilon();
    for (t, tv) in weak_ergodicity_trace(&r).into_iter().enumerate() {
        assert!(tv <= (1.0 - eps).powi(t as i32) + 1e-12, "t = {t}");
    }
    assert!(selfloop_floor_check(&r).unwrap());
}

#[test]
fn four_node_path_floor() {
    let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)], false)
        .unwrap()
        .with_self_loops();
    let f = FeatureField::random_normal(4, 1, 4);
    let r = nonlinear_rollout(&g, &f, AttentionKernel::Dot.as_fn(), 10).unwrap();
    assert!(selfloop_floor_check(&r).unwrap());
    let csv = trace_csv(&trace_rows(&r));
    assert!(csv.starts_with("t,max_pair_tv,doeblin_bound,min_edge_entry,feature_spread\n"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn attention_on_hub_graph_is_positive_on_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = with_hub(&random_connected_graph(10, 0.1, true, &mut rng), 0);
    let f = FeatureField::random_normal(10, 2, 9);
    let a = build_attention(&g, &f, AttentionKernel::Dot.as_fn()).unwrap();
    for &(u, v) in g.edges() {
        assert!(a.get(u, v) > 0.0);
    }
}
