use proptest::prelude::*;

use sepcoef::concordance::midranks;
use sepcoef::data::{group_by_x, preprocess};
use sepcoef::{ObservationSet, PreprocessMode, PreprocessSpec};

fn tied_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![(0i32..5).prop_map(f64::from), -10.0f64..10.0], n)
}

fn dataset() -> impl Strategy<Value = ObservationSet> {
    (2usize..60, 1usize..4).prop_flat_map(|(n, p)| {
        (tied_values(n * p), tied_values(n))
            .prop_map(move |(x, y)| ObservationSet::from_row_major(x, p, y).unwrap())
    })
}

fn pairs(obs: &ObservationSet) -> Vec<(Vec<u64>, u64)> {
    let mut v: Vec<(Vec<u64>, u64)> = (0..obs.n())
        .map(|k| (obs.row(k).iter().map(|c| c.to_bits()).collect(), obs.y()[k].to_bits()))
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn grouping_round_trips(obs in dataset()) {
        let grouped = group_by_x(&obs);
        prop_assert_eq!(grouped.counts().iter().sum::<usize>(), obs.n());
        let back = grouped.to_observations().unwrap();
        prop_assert_eq!(pairs(&back), pairs(&obs));
        prop_assert_eq!(back.x(), obs.x());
        prop_assert_eq!(back.y(), obs.y());
    }

    #[test]
    fn groups_have_distinct_keys(obs in dataset()) {
        let grouped = group_by_x(&obs);
        let mut keys: Vec<Vec<u64>> = grouped
            .groups
            .iter()
            .map(|g| g.key.iter().map(|c| c.to_bits()).collect())
            .collect();
        keys.sort();
        keys.dedup();
        prop_assert_eq!(keys.len(), grouped.m());
    }

    #[test]
    fn rank_is_idempotent(obs in dataset()) {
        let spec = PreprocessSpec { mode: PreprocessMode::Rank, rank_response: true };
        let once = preprocess(&obs, &spec).data;
        let twice = preprocess(&once, &spec).data;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn none_is_identity(obs in dataset()) {
        let out = preprocess(&obs, &PreprocessSpec::new(PreprocessMode::None));
        prop_assert_eq!(out.data, obs);
        prop_assert!(out.untouched_columns.is_empty());
    }

    #[test]
    fn midranks_sum_and_range(v in (1usize..200).prop_flat_map(tied_values)) {
        let r = midranks(&v);
        let n = v.len() as f64;
        prop_assert_eq!(r.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        prop_assert!(r.iter().all(|&x| (1.0..=n).contains(&x)));
    }

    #[test]
    fn standardized_columns_are_centred(obs in dataset()) {
        let out = preprocess(&obs, &PreprocessSpec::new(PreprocessMode::Standardize));
        for j in 0..obs.p() {
            let col = out.data.column(j);
            if out.untouched_columns.contains(&j) {
                prop_assert_eq!(col, obs.column(j));
                continue;
            }
            let (mean, sd) = sepcoef::data::mean_sd(&col);
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }
    }
}
