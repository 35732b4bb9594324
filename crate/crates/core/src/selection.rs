//! Model-free variable selection by maximising Λ_n over predictor subsets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{preprocess, ObservationSet, PreprocessMode, PreprocessSpec};
use crate::error::{Error, Result};
use crate::estimators::{lambda_nn, NnVariant};
use crate::rng;

const SUBSET_TAG: u64 = 0x5E1E;

/// Largest predictor count accepted by [`best_subset_select`] by default.
pub const DEFAULT_MAX_P: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Forward,
    BestSubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Scale every non-constant predictor to mean 0 and unit variance first.
    pub standardize: bool,
    pub variant: NnVariant,
    pub max_p: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            standardize: true,
            variant: NnVariant::Standard,
            max_p: DEFAULT_MAX_P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub column: usize,
    pub label: String,
    /// Λ_n of the current set plus this column; `None` when every row of
    /// the candidate set is identical.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub step: usize,
    pub candidates: Vec<CandidateEvaluation>,
    /// Best candidate of the step (lowest index among equal values).
    pub added_variable: Option<usize>,
    pub lambda_after: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub columns: Vec<usize>,
    pub labels: Vec<String>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub method: SelectionMethod,
    pub steps: Vec<SelectionStep>,
    pub selected: Vec<usize>,
    pub selected_labels: Vec<String>,
    /// Λ_n of the selected set (0 for the empty set).
    pub lambda: f64,
    /// Every non-empty subset, best first (best-subset search only).
    pub all_subsets: Option<Vec<SubsetScore>>,
    pub seed: u64,
    pub options: SelectionOptions,
}

/// Tie-break seed for a predictor subset. It depends only on the set of
/// columns, so a subset scores the same whichever search reaches it.
pub fn subset_seed(seed: u64, columns: &[usize]) -> u64 {
    let mut sorted = columns.to_vec();
    sorted.sort_unstable();
    let mut tags = Vec::with_capacity(sorted.len() + 1);
    tags.push(SUBSET_TAG);
    tags.extend(sorted.iter().map(|&c| c as u64));
    rng::derive_seed(seed, &tags)
}

fn prepared(obs: &ObservationSet, options: &SelectionOptions) -> ObservationSet {
    if options.standardize {
        preprocess(obs, &PreprocessSpec::new(PreprocessMode::Standardize)).data
    } else {
        obs.clone()
    }
}

/// Λ_n of the predictor subset `columns` (sorted before evaluation).
fn score(obs: &ObservationSet, columns: &[usize], seed: u64, variant: NnVariant) -> Result<Option<f64>> {
    let mut sorted = columns.to_vec();
    sorted.sort_unstable();
    match lambda_nn(&obs.select_columns(&sorted)?, subset_seed(seed, &sorted), variant) {
        Ok(est) => Ok(Some(est.value)),
        Err(Error::AllPredictorsTied) => Ok(None),
        Err(e) => Err(e),
    }
}

fn labels(obs: &ObservationSet, columns: &[usize]) -> Vec<String> {
    columns.iter().map(|&c| obs.column_label(c)).collect()
}

/// Greedy forward selection with the default options.
pub fn forward_select(obs: &ObservationSet, seed: u64) -> Result<SelectionTrace> {
    forward_select_with(obs, seed, &SelectionOptions::default())
}

/// Starting from the empty set (Λ_n = 0), repeatedly adds the predictor
/// giving the largest Λ_n and stops once no candidate strictly improves it.
pub fn forward_select_with(obs: &ObservationSet, seed: u64, options: &SelectionOptions) -> Result<SelectionTrace> {
    let data = prepared(obs, options);
    let mut selected: Vec<usize> = Vec::new();
    let mut incumbent = 0.0;
    let mut steps = Vec::new();
    let mut remaining: Vec<usize> = (0..obs.p()).collect();
    while !remaining.is_empty() {
        let candidates = remaining
            .par_iter()
            .map(|&c| {
                let mut set = selected.clone();
                set.push(c);
                Ok(CandidateEvaluation {
                    column: c,
                    label: obs.column_label(c),
                    lambda: score(&data, &set, seed, options.variant)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<(usize, f64)> = None;
        for cand in &candidates {
            if let Some(v) = cand.lambda {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((cand.column, v));
                }
            }
        }
        let accepted = best.is_some_and(|(_, v)| v > incumbent);
        steps.push(SelectionStep {
            step: steps.len() + 1,
            candidates,
            added_variable: best.map(|(c, _)| c),
            lambda_after: best.map(|(_, v)| v),
            accepted,
        });
        match best {
            Some((c, v)) if accepted => {
                selected.push(c);
                remaining.retain(|&r| r != c);
                incumbent = v;
            }
            _ => break,
        }
    }
    Ok(SelectionTrace {
        method: SelectionMethod::Forward,
        steps,
        selected_labels: labels(obs, &selected),
        selected,
        lambda: incumbent,
        all_subsets: None,
        seed,
        options: *options,
    })
}

/// Exhaustive search over all non-empty predictor subsets with the default
/// options and the given budget.
pub fn best_subset_select(obs: &ObservationSet, seed: u64, max_p: usize) -> Result<SelectionTrace> {
    best_subset_select_with(
        obs,
        seed,
        &SelectionOptions {
            max_p,
            ..SelectionOptions::default()
        },
    )
}

pub fn best_subset_select_with(obs: &ObservationSet, seed: u64, options: &SelectionOptions) -> Result<SelectionTrace> {
    let p = obs.p();
    let max_p = options.max_p.min(63);
    if p > max_p {
        return Err(Error::SubsetBudgetExceeded { p, max_p });
    }
    let data = prepared(obs, options);
    let mut all = (1u64..1 << p)
        .into_par_iter()
        .map(|mask| {
            let columns: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
            Ok(SubsetScore {
                lambda: score(&data, &columns, seed, options.variant)?,
                labels: labels(obs, &columns),
                columns,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // best first; equal values favour smaller, then lexicographically earlier sets
    all.sort_by(|a, b| {
        let (va, vb) = (a.lambda.unwrap_or(f64::NEG_INFINITY), b.lambda.unwrap_or(f64::NEG_INFINITY));
        vb.total_cmp(&va)
            .then(a.columns.len().cmp(&b.columns.len()))
            .then_with(|| a.columns.cmp(&b.columns))
    });
    let best = all.first().expect("p >= 1 gives a subset");
    Ok(SelectionTrace {
        method: SelectionMethod::BestSubset,
        steps: Vec::new(),
        selected: best.columns.clone(),
        selected_labels: best.labels.clone(),
        lambda: best.lambda.unwrap_or(0.0),
        all_subsets: Some(all),
        seed,
        options: *options,
    })
}
