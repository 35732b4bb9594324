//! Permutation test of stochastic comparability (Λ = 0) with the
//! nearest-neighbour estimator as statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::estimators::{lambda_nn, NnVariant};
use crate::rng;

const PERMUTATION_TAG: u64 = 0x9E4D;
const ESTIMATOR_TAG: u64 = 0xE571;
const OBSERVED_TAG: u64 = 0x0B5E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    /// Statistic on each permuted dataset, in replicate order.
    pub replicates: Vec<f64>,
    /// Share of replicates at least as large as `observed`.
    pub p_value: f64,
    pub n_perms: usize,
    pub seed: u64,
    pub variant: NnVariant,
}

impl PermutationResult {
    /// Number of replicates with `replicate >= observed`.
    pub fn exceedances(&self) -> usize {
        count_at_least(&self.replicates, self.observed)
    }

    /// `(exceedances + 1) / (N + 1)`, the version that counts the observed
    /// data as one of the permutations.
    pub fn corrected_p_value(&self) -> f64 {
        (self.exceedances() + 1) as f64 / (self.n_perms + 1) as f64
    }
}

fn count_at_least(replicates: &[f64], observed: f64) -> usize {
    replicates.iter().filter(|&&r| r >= observed).count()
}

/// Seed of the tie-breaking draws for the observed statistic.
pub fn observed_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, &[OBSERVED_TAG])
}

/// Permutation of row indices used by replicate `k`.
pub fn replicate_permutation(n: usize, seed: u64, k: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut perm, rng::derive_seed(seed, &[PERMUTATION_TAG, k as u64]));
    perm
}

/// Seed of the tie-breaking draws for replicate `k`.
pub fn replicate_seed(seed: u64, k: usize) -> u64 {
    rng::derive_seed(seed, &[ESTIMATOR_TAG, k as u64])
}

/// Permutes the predictor rows against the fixed response `n_perms` times
/// and recomputes Λ_n on each copy.
pub fn permutation_test(
    obs: &ObservationSet,
    n_perms: usize,
    seed: u64,
    variant: NnVariant,
) -> Result<PermutationResult> {
    if n_perms == 0 {
        return Err(Error::invalid("at least one permutation is required"));
    }
    let observed = lambda_nn(obs, observed_seed(seed), variant)?.value;
    let replicates = (0..n_perms)
        .into_par_iter()
        .map(|k| {
            let permuted = obs.permute_predictors(&replicate_permutation(obs.n(), seed, k));
            lambda_nn(&permuted, replicate_seed(seed, k), variant).map(|e| e.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let p_value = count_at_least(&replicates, observed) as f64 / n_perms as f64;
    Ok(PermutationResult {
        observed,
        replicates,
        p_value,
        n_perms,
        seed,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(n: usize, seed: u64) -> ObservationSet {
        let x: Vec<f64> = (0..n).map(|i| rng::unit(seed, i as u64)).collect();
        let y: Vec<f64> = (0..n).map(|i| rng::unit(seed ^ 1, i as u64)).collect();
        ObservationSet::from_columns(&[x], y).unwrap()
    }

    #[test]
    fn replay_and_self_consistency() {
        let obs = noisy(80, 3);
        let a = permutation_test(&obs, 60, 11, NnVariant::Standard).unwrap();
        let b = permutation_test(&obs, 60, 11, NnVariant::Standard).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates.len(), 60);
        assert_eq!(a.p_value, a.exceedances() as f64 / 60.0);
        assert!(a.corrected_p_value() > a.p_value);
        let c = permutation_test(&obs, 60, 12, NnVariant::Standard).unwrap();
        assert_ne!(a.replicates, c.replicates);
    }

    #[test]
    fn perfect_dependence_is_never_reached() {
        let x: Vec<f64> = (0..100).map(|i| rng::unit(5, i)).collect();
        let obs = ObservationSet::from_columns(std::slice::from_ref(&x), x.clone()).unwrap();
        let r = permutation_test(&obs, 200, 1, NnVariant::Standard).unwrap();
        assert!(r.observed > 0.9);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn errors_propagate() {
        let obs = ObservationSet::from_columns(&[vec![1.0; 5]], vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(
            permutation_test(&obs, 10, 0, NnVariant::Standard),
            Err(Error::AllPredictorsTied)
        ));
        assert!(permutation_test(&noisy(10, 0), 0, 0, NnVariant::Standard).is_err());
    }

    #[test]
    fn permutations_are_valid() {
        let mut perm = replicate_permutation(50, 9, 4);
        perm.sort_unstable();
        assert_eq!(perm, (0..50).collect::<Vec<_>>());
    }
}
