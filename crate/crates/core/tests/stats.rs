mod common;

use std::collections::BTreeMap;

use common::record;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasef::stats::{
    compute_deltas, ecdf, median, quantile, summarize, summarize_deltas, DeltaRecord, StatsError,
    DELTA_METRICS,
};

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6f64..1e6, 1..60)
}

proptest! {
    #[test]
    fn ecdf_is_a_step_cdf(v in values()) {
        let f = ecdf(&v).unwrap();
        prop_assert!(f.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(f.last().unwrap().1, 1.0);
        for &(x, p) in &f {
            let below = v.iter().filter(|&&y| y <= x).count() as f64 / v.len() as f64;
            prop_assert!((p - below).abs() < 1e-12);
        }
    }

    #[test]
    fn summaries_ignore_order(v in values(), seed in any::<u64>()) {
        let mut shuffled = v.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let (a, b) = (summarize(&v).unwrap(), summarize(&shuffled).unwrap());
        prop_assert_eq!(a.median, b.median);
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
        prop_assert_eq!(ecdf(&v).unwrap(), ecdf(&shuffled).unwrap());
    }

    #[test]
    fn deltas_are_antisymmetric(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let ab = DeltaRecord::new("p", "s", "plt", a, b);
        let ba = DeltaRecord::new("p", "s", "plt", b, a);
        prop_assert_eq!(ab.delta, -ba.delta);
    }

    #[test]
    fn quantiles_read_the_sorted_sample(v in values()) {
        let f = ecdf(&v).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        prop_assert_eq!(quantile(&f, 0.5), Some(sorted[n.div_ceil(2) - 1]));
        prop_assert_eq!(quantile(&f, 1.0), Some(sorted[n - 1]));
        prop_assert_eq!(quantile(&f, 0.0), Some(sorted[0]));
        let m = median(&v).unwrap();
        prop_assert!(sorted[0] <= m && m <= sorted[n - 1]);
    }

    #[test]
    fn confidence_interval_brackets_the_mean(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let s = summarize(&v).unwrap();
        prop_assert!(!s.ci_degenerate);
        prop_assert!(s.ci95.0 <= s.mean && s.mean <= s.ci95.1);
        prop_assert!(((s.ci95.1 - s.mean) - (s.mean - s.ci95.0)).abs() < 1e-9);
    }
}

#[test]
fn empty_and_single_inputs() {
    assert_eq!(ecdf(&[]), Err(StatsError::EmptyInput));
    assert_eq!(median(&[]), Err(StatsError::EmptyInput));
    let s = summarize(&[4.0]).unwrap();
    assert!(s.ci_degenerate);
    assert_eq!(s.ci95, (4.0, 4.0));
    assert_eq!(s.sd, 0.0);
}

#[test]
fn empirical_cdf_converges_on_uniform_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sample: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
    let f = ecdf(&sample).unwrap();
    let mut sup: f64 = 0.0;
    let mut prev = 0.0;
    for &(x, p) in &f {
        sup = sup.max((p - x).abs()).max((x - prev).abs());
        prev = p;
    }
    // DKW bound at 99.9% confidence for n = 1000 is about 0.062.
    assert!(sup < 0.06, "sup distance {sup}");
}

#[test]
fn deltas_cover_every_page_solution_and_metric() {
    let mut records = Vec::new();
    for p in 0..10 {
        records.push(record(p, "identity", 2.0 + p as f64));
        records.push(record(p, "js-strip", 1.0 + p as f64));
        records.push(record(p, "js-dce", 2.0 + p as f64));
    }
    records.push(record(99, "js-strip", 1.0));
    let (deltas, skips) = compute_deltas(&records, "identity");
    assert_eq!(deltas.len(), 10 * 2 * DELTA_METRICS.len());
    assert_eq!(skips.len(), 1);
    assert_eq!(skips[0].page_id, "p99");
    assert!(deltas.windows(2).all(|w| (&w[0].page_id, &w[0].solution, &w[0].metric) < (&w[1].page_id, &w[1].solution, &w[1].metric)));
    let plt: Vec<f64> = deltas.iter().filter(|d| d.metric == "plt" && d.solution == "js-strip").map(|d| d.delta).collect();
    assert_eq!(plt, [1.0; 10]);

    let groups: BTreeMap<String, String> =
        (0..10).map(|p| (format!("p{p:02}"), if p < 4 { "landing" } else { "internal" }.to_string())).collect();
    let summaries = summarize_deltas(&deltas, &groups);
    // Six metrics, two solutions, and the overall bucket plus two groups.
    assert_eq!(summaries.len(), 6 * 2 * 3);
    let landing = summaries
        .iter()
        .find(|s| s.metric == "plt" && s.solution == "js-strip" && s.group.as_deref() == Some("landing"))
        .unwrap();
    assert_eq!(landing.n, 4);
    assert_eq!(landing.median, 1.0);
}
