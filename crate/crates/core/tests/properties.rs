//! Property tests for the summary structures and the engine contracts.

use proptest::collection::vec;
use proptest::prelude::*;
use streamscreen_core::bincount::Method;
use streamscreen_core::engine::{Engine, Sample, ScreenerConfig};
use streamscreen_core::sketch::{StreamSketch, SubSummary};

fn exact_summary(points: &[(i32, u8)]) -> SubSummary {
    let mut sketch = StreamSketch::new(0.4).unwrap();
    for &(v, w) in points {
        sketch.insert(v as f64, (w % 7 + 1) as f64).unwrap();
    }
    sketch.finalize()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prune_bounds_size_and_conserves_weight(
        points in vec((-50i32..50, 0u8..255), 1..120),
        target in 2usize..40,
    ) {
        let s = exact_summary(&points);
        let pruned = s.prune(target).unwrap();
        prop_assert!(pruned.len() <= target + 1);
        prop_assert!(pruned.len() <= s.len());
        prop_assert_eq!(pruned.total_weight(), s.total_weight());
        for t in pruned.tuples() {
            prop_assert_eq!(t.rmax - t.rmin - t.weight, 0.0);
            prop_assert!(t.weight > 0.0);
            prop_assert!(t.rmin >= 0.0 && t.rmax <= pruned.total_weight());
        }
        let mut prev = f64::NEG_INFINITY;
        for t in pruned.tuples() {
            prop_assert!(t.value > prev);
            prev = t.value;
        }
    }

    #[test]
    fn merge_totals_and_tightness(
        a in vec((-30i32..30, 0u8..255), 0..80),
        b in vec((-30i32..30, 0u8..255), 0..80),
    ) {
        let (sa, sb) = (exact_summary(&a), exact_summary(&b));
        let merged = SubSummary::merge(&sa, &sb);
        prop_assert_eq!(merged.total_weight(), sa.total_weight() + sb.total_weight());
        for t in merged.tuples() {
            prop_assert_eq!(t.rmax - t.rmin - t.weight, 0.0);
        }
    }

    #[test]
    fn rank_queries_stay_within_bound(
        values in vec(-1000i32..1000, 64..400),
        eps_idx in 0usize..3,
    ) {
        let eps = [0.2, 0.05, 0.02][eps_idx];
        let mut sketch = StreamSketch::new(eps).unwrap();
        for &v in &values {
            sketch.insert(v as f64, 1.0).unwrap();
        }
        let summary = sketch.finalize();
        let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = values.len() as f64;
        let step = (values.len() / 23).max(1);
        for d in (0..=values.len()).step_by(step) {
            let v = summary.query(d as f64).unwrap();
            let lo = sorted.partition_point(|&x| x < v) as f64;
            let hi = sorted.partition_point(|&x| x <= v) as f64;
            let err = (lo - d as f64).max(d as f64 - hi).max(0.0);
            prop_assert!(err <= eps * n, "rank {} error {} > {}", d, err, eps * n);
        }
    }

    #[test]
    fn batch_partitioning_never_changes_scores(
        raw in vec((vec(-8i32..8, 4), 0u8..2), 30..90),
        chunk in 1usize..16,
    ) {
        // Need both classes present.
        prop_assume!(raw.iter().any(|(_, c)| *c == 0) && raw.iter().any(|(_, c)| *c == 1));
        let samples: Vec<Sample> = raw
            .iter()
            .map(|(vals, class)| {
                Sample::dense(class.to_string(), vals.iter().map(|&v| v as f64).collect())
            })
            .collect();
        let mut whole = Engine::new(ScreenerConfig::new(Method::MutualInfo).minibatch(256)).unwrap();
        whole.observe_batch(&samples).unwrap();
        let mut chunked = Engine::new(ScreenerConfig::new(Method::MutualInfo).minibatch(256)).unwrap();
        for c in samples.chunks(chunk) {
            chunked.observe_batch(c).unwrap();
        }
        prop_assert_eq!(whole.scores().unwrap().scores, chunked.scores().unwrap().scores);
    }

    #[test]
    fn snapshot_round_trip_is_lossless(
        raw in vec((vec(-6i32..6, 3), 0u8..2), 10..50),
    ) {
        prop_assume!(raw.iter().any(|(_, c)| *c == 0) && raw.iter().any(|(_, c)| *c == 1));
        let mut engine = Engine::new(
            ScreenerConfig::new(Method::ChiSquare).epsilon(0.05).alpha(0.9),
        )
        .unwrap();
        for (vals, class) in &raw {
            engine
                .observe(&Sample::dense(
                    class.to_string(),
                    vals.iter().map(|&v| v as f64).collect(),
                ))
                .unwrap();
        }
        let restored = Engine::from_snapshot_json(&engine.snapshot_json()).unwrap();
        prop_assert_eq!(engine.scores().unwrap().scores, restored.scores().unwrap().scores);
    }
}
