use statrs::distribution::{ChiSquared, ContinuousCDF};

use sepcoef::inference::permutation_test;
use sepcoef::{NnVariant, ObservationSet};

fn independent(n: usize, seed: u64) -> ObservationSet {
    let x: Vec<f64> = (0..n).map(|i| sepcoef::rng::unit(seed, i as u64)).collect();
    let y: Vec<f64> = (0..n).map(|i| sepcoef::rng::unit(seed, (n + i) as u64)).collect();
    ObservationSet::from_columns(&[x], y).unwrap()
}

#[test]
fn observed_rank_is_uniform_under_independence() {
    let (outer, perms, bins) = (400, 99, 10);
    let mut counts = vec![0usize; bins];
    for rep in 0..outer {
        let obs = independent(60, 10_000 + rep);
        let r = permutation_test(&obs, perms, rep, NnVariant::Standard).unwrap();
        // rank among the N + 1 statistics, with ties split at random
        let below = r.replicates.iter().filter(|&&v| v < r.observed).count();
        let equal = r.replicates.iter().filter(|&&v| v == r.observed).count();
        let rank = below + sepcoef::rng::index(rep, 0, equal + 1);
        counts[rank * bins / (perms + 1)] += 1;
    }
    let expected = outer as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.001, "counts {counts:?}, chi2 {chi2}, p {p}");
}

#[test]
fn p_value_is_consistent_with_replicates() {
    let obs = independent(50, 77);
    let r = permutation_test(&obs, 199, 3, NnVariant::BetweenGroup).unwrap();
    let again = permutation_test(&obs, 199, 3, NnVariant::BetweenGroup).unwrap();
    assert_eq!(r.replicates, again.replicates);
    assert_eq!(r.p_value, r.exceedances() as f64 / 199.0);
    assert_eq!(r.corrected_p_value(), (r.exceedances() + 1) as f64 / 200.0);
}
