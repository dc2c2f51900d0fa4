use bvn_core::experiments::{Labeling, simulate_graph};
use bvn_core::graph::{ModelParams, compute_stats};
use bvn_core::likelihood::{
    PriorConfig, cdf_p1_given, cdf_p2_given, cdf_q2_given, sample_p1_given, sample_p2_given,
    sample_q2_given,
};
use bvn_core::mcmc::{SamplerConfig, run_chain_on_stats};
use bvn_core::nomination::{fusion_nominate, summarize};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01..0.95f64, 0.01..0.99f64, 0.01..0.99f64).prop_map(|(p1, b, c)| {
        let p2 = (1.0 - p1) * b;
        (p1, p2, p2 + (1.0 - p1 - p2) * c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_cdfs_round_trip((p1, p2, q2) in interior(), u in 0.0..=1.0f64) {
        let x = sample_p1_given(p2, q2, u).unwrap();
        prop_assert!((0.0..=1.0 - q2).contains(&x));
        prop_assert!((cdf_p1_given(x, p2, q2).unwrap() - u).abs() < 1e-12);
        let x = sample_p2_given(p1, q2, u).unwrap();
        prop_assert!((0.0..=q2).contains(&x));
        prop_assert!((cdf_p2_given(x, p1, q2).unwrap() - u).abs() < 1e-12);
        let x = sample_q2_given(p1, p2, u).unwrap();
        prop_assert!(x >= p2 && x <= 1.0 - p1);
        prop_assert!((cdf_q2_given(x, p1, p2).unwrap() - u).abs() < 1e-12);
    }

    #[test]
    fn simulated_statistics_are_consistent(
        (p1, p2, q2) in interior(), n in 5usize..40, seed in any::<u64>(),
    ) {
        let m = 3 + (seed as usize) % (n - 3);
        let params = ModelParams::new(p1, p2, q2).unwrap();
        let (graph, truth) = simulate_graph(n, m, 2, &params, Labeling::Random, seed).unwrap();
        prop_assert_eq!(truth.red_count(), m);
        for &v in graph.observed_red() {
            prop_assert!(truth.color(v).is_red());
        }
        let stats = compute_stats(&graph);
        let s_total: usize = stats.observed.iter().chain(&stats.latent).map(|t| t.s).sum();
        prop_assert_eq!(s_total, 2 * graph.red_edge_count());
        for t in stats.latent.iter() {
            prop_assert!(t.r <= 2 && t.s < n);
        }
    }

    #[test]
    fn short_chain_summary_is_well_formed(
        (p1, p2, q2) in interior(), seed in any::<u64>(),
    ) {
        let params = ModelParams::new(p1, p2, q2).unwrap();
        let (graph, _) = simulate_graph(9, 4, 2, &params, Labeling::Random, seed).unwrap();
        let stats = compute_stats(&graph);
        let config = SamplerConfig { burn_in: 20, samples: 30, seed, record_traces: false };
        let trace = run_chain_on_stats(&stats, &PriorConfig::sparse_default(9, 2), &config).unwrap();
        let summary = summarize(&trace).unwrap();
        prop_assert!(summary.marginal_red.iter().all(|p| (0.0..=1.0).contains(p)));
        let best = summary.marginal_red.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(summary.nominee_prob, best);
        let first = summary.marginal_red.iter().position(|&p| p == best).unwrap();
        prop_assert_eq!(summary.nominee, stats.latent_ids[first]);
        let m = summary.param_means;
        prop_assert!(m.p1 > 0.0 && m.p2 > 0.0 && m.q2 > m.p2 && m.psi > 0.0 && m.psi < 1.0);
    }

    #[test]
    fn fusion_endpoints_rank_by_one_statistic(
        (p1, p2, q2) in interior(), seed in any::<u64>(),
    ) {
        let params = ModelParams::new(p1, p2, q2).unwrap();
        let (graph, _) = simulate_graph(15, 5, 2, &params, Labeling::Random, seed).unwrap();
        let stats = compute_stats(&graph);
        let first_max = |key: &dyn Fn(usize) -> usize| {
            let best = (0..stats.latent.len()).map(key).max().unwrap();
            stats.latent_ids[(0..stats.latent.len()).position(|i| key(i) == best).unwrap()]
        };
        prop_assert_eq!(fusion_nominate(&stats, 0.0).unwrap().nominee, first_max(&|i| stats.latent[i].r));
        prop_assert_eq!(fusion_nominate(&stats, 1.0).unwrap().nominee, first_max(&|i| stats.latent[i].s));
    }
}
