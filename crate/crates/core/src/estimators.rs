//! Estimators of Λ(Y|X) and of the two-sample relative effect.

use serde::{Deserialize, Serialize};

use crate::concordance::{dense_ranks, doubled_midranks, pairs, signed_pair_sum, signed_pair_sum_of_ranks};
use crate::data::{group_by_x, ObservationSet, RowClasses};
use crate::error::{Error, Result};
use crate::neighbors::{build_with_classes, NeighborMap};
use crate::rng;

/// Share of tied predictor pairs above which the between-group variant is
/// recommended.
pub const BETWEEN_GROUP_TIE_SHARE: f64 = 0.2;

/// Nearest-neighbour estimator flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnVariant {
    /// All `C(n, 2)` pairs enter the signed sum.
    #[default]
    Standard,
    /// Pairs with identical predictor rows are dropped from the signed sum;
    /// divisor and tie-corrected denominator are unchanged.
    BetweenGroup,
}

impl std::str::FromStr for NnVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "between_group" | "between-group" => Ok(Self::BetweenGroup),
            other => Err(Error::invalid(format!("unknown estimator variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    NnStandard,
    NnBetweenGroup,
    RankBased,
}

impl From<NnVariant> for Variant {
    fn from(v: NnVariant) -> Self {
        match v {
            NnVariant::Standard => Variant::NnStandard,
            NnVariant::BetweenGroup => Variant::NnBetweenGroup,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::NnStandard => "nn_standard",
            Variant::NnBetweenGroup => "nn_between_group",
            Variant::RankBased => "rank_based",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub numerator: f64,
    /// Tie-adjusted normaliser, in `(0, 1]`.
    pub denominator: f64,
    pub variant: Variant,
    pub n: usize,
    pub p: usize,
    /// Tie-break seed (nearest-neighbour variants only).
    pub seed: Option<u64>,
    /// Integer signed-pair sum behind `numerator` (nearest-neighbour variants).
    pub signed_sum: Option<i64>,
    pub tied_pairs: u64,
    pub pairs_total: u64,
}

impl LambdaEstimate {
    pub fn predictor_tie_share(&self) -> f64 {
        self.tied_pairs as f64 / self.pairs_total as f64
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.variant == Variant::NnStandard
            && self.predictor_tie_share() > BETWEEN_GROUP_TIE_SHARE
        {
            out.push(format!(
                "{:.1}% of predictor pairs are tied; the between_group variant is recommended",
                100.0 * self.predictor_tie_share()
            ));
        }
        if self.value < 0.0 {
            out.push("negative estimate: consistent with stochastic comparability".to_string());
        }
        out
    }
}

/// The between-group variant when more than [`BETWEEN_GROUP_TIE_SHARE`] of
/// the predictor pairs are tied, the standard variant otherwise.
pub fn recommended_variant(obs: &ObservationSet) -> NnVariant {
    let tied = RowClasses::build(obs.x(), obs.p()).tied_pairs();
    if tied as f64 / pairs(obs.n()) as f64 > BETWEEN_GROUP_TIE_SHARE {
        NnVariant::BetweenGroup
    } else {
        NnVariant::Standard
    }
}

/// Nearest-neighbour estimator
///
/// ```text
///            C(n,2)^-1 Σ_{k<l} sgn(Y_k - Y_l) sgn(Y_N(k) - Y_N(l))
/// Λ_n = ----------------------------------------------------------
///              1 - C(n,2)^-1 Σ_{k<l} 1{X_k = X_l}
/// ```
///
/// where `N(k)` is the Euclidean nearest neighbour of row `k`, ties broken
/// uniformly at random from `seed`.
pub fn lambda_nn(obs: &ObservationSet, seed: u64, variant: NnVariant) -> Result<LambdaEstimate> {
    let classes = RowClasses::build(obs.x(), obs.p());
    if classes.len() < 2 {
        return Err(Error::AllPredictorsTied);
    }
    let map = build_with_classes(obs.x(), obs.p(), seed, &classes);
    Ok(assemble(obs, &map, &classes, variant))
}

/// [`lambda_nn`] with a precomputed neighbour map.
pub fn lambda_nn_with_map(
    obs: &ObservationSet,
    map: &NeighborMap,
    variant: NnVariant,
) -> Result<LambdaEstimate> {
    if map.len() != obs.n() {
        return Err(Error::LengthMismatch {
            what: "neighbour map",
            expected: obs.n(),
            got: map.len(),
        });
    }
    let classes = RowClasses::build(obs.x(), obs.p());
    if classes.len() < 2 {
        return Err(Error::AllPredictorsTied);
    }
    Ok(assemble(obs, map, &classes, variant))
}

fn assemble(
    obs: &ObservationSet,
    map: &NeighborMap,
    classes: &RowClasses,
    variant: NnVariant,
) -> LambdaEstimate {
    let y = obs.y();
    let y_nb: Vec<f64> = map.neighbors().iter().map(|&l| y[l]).collect();
    // the neighbour responses are a gather of y, and so are their ranks
    let ranks = dense_ranks(y);
    let ranks_nb: Vec<u32> = map.neighbors().iter().map(|&l| ranks[l]).collect();
    let mut sum = signed_pair_sum_of_ranks(&ranks, &ranks_nb).value;
    if variant == NnVariant::BetweenGroup {
        for g in 0..classes.len() {
            let members = classes.members(g);
            if members.len() < 2 {
                continue;
            }
            let a: Vec<f64> = members.iter().map(|&k| y[k]).collect();
            let b: Vec<f64> = members.iter().map(|&k| y_nb[k]).collect();
            sum -= signed_pair_sum(&a, &b).expect("equal lengths").value;
        }
    }
    let total = pairs(obs.n());
    let tied = classes.tied_pairs();
    let numerator = sum as f64 / total as f64;
    let denominator = 1.0 - tied as f64 / total as f64;
    LambdaEstimate {
        value: numerator / denominator,
        numerator,
        denominator,
        variant: variant.into(),
        n: obs.n(),
        p: obs.p(),
        seed: Some(map.seed()),
        signed_sum: Some(sum),
        tied_pairs: tied,
        pairs_total: total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeEffectEstimate {
    /// Estimate of `P(Y1 < Y2) + P(Y1 = Y2) / 2`.
    pub psi: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Midrank estimator `Ψ_n = (R̄_2 - (n2 + 1) / 2) / n1` over the pooled sample.
pub fn psi_hat(y1: &[f64], y2: &[f64]) -> Result<RelativeEffectEstimate> {
    if y1.is_empty() {
        return Err(Error::EmptyGroup(1));
    }
    if y2.is_empty() {
        return Err(Error::EmptyGroup(2));
    }
    if let Some(k) = y1.iter().chain(y2).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "response",
            row: k,
            col: 0,
        });
    }
    let (n1, n2) = (y1.len(), y2.len());
    let pooled: Vec<f64> = y1.iter().chain(y2).copied().collect();
    let twice = doubled_midranks(&pooled);
    let s2: u64 = twice[n1..].iter().sum();
    // 2 n1 n2 Ψ_n = Σ 2 R_2k - n2 (n2 + 1)
    let num = s2 - (n2 as u64) * (n2 as u64 + 1);
    Ok(RelativeEffectEstimate {
        psi: num as f64 / (2 * n1 * n2) as f64,
        n1,
        n2,
    })
}

/// `2·(#{a < b} + #{a = b}/2) - n1·n2` over `a ∈ first`, `b ∈ second`,
/// both sorted ascending.
fn doubled_effect_offset(first: &[f64], second: &[f64]) -> i64 {
    let (mut lt, mut le) = (0usize, 0usize);
    let mut acc = 0u64;
    for &b in second {
        while lt < first.len() && first[lt] < b {
            lt += 1;
        }
        if le < lt {
            le = lt;
        }
        while le < first.len() && first[le] <= b {
            le += 1;
        }
        acc += (lt + le) as u64;
    }
    acc as i64 - (first.len() * second.len()) as i64
}

/// Plug-in estimator built from pairwise midrank relative effects of the
/// predictor groups:
/// `2 Σ_{i<j} q̂_i q̂_j (2Ψ_n(i, j) - 1)² / (1 - Σ q̂_i²)`.
///
/// Runs in `O(m·n)` for `m` groups.
pub fn lambda_rank_based(obs: &ObservationSet) -> Result<LambdaEstimate> {
    let grouped = group_by_x(obs);
    let m = grouped.m();
    if m < 2 {
        return Err(Error::SingleGroup(m));
    }
    let sorted: Vec<Vec<f64>> = grouped
        .groups
        .iter()
        .map(|g| {
            let mut v = g.y.clone();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let mut weighted = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d = doubled_effect_offset(&sorted[i], &sorted[j]) as f64;
            weighted += d * d / (sorted[i].len() * sorted[j].len()) as f64;
        }
    }
    let n = obs.n();
    let n_sq = (n * n) as f64;
    let sum_sq: usize = sorted.iter().map(|g| g.len() * g.len()).sum();
    let tied: u64 = sorted.iter().map(|g| pairs(g.len())).sum();
    let numerator = 2.0 * weighted / n_sq;
    let denominator = (n * n - sum_sq) as f64 / n_sq;
    Ok(LambdaEstimate {
        value: numerator / denominator,
        numerator,
        denominator,
        variant: Variant::RankBased,
        n,
        p: obs.p(),
        seed: None,
        signed_sum: None,
        tied_pairs: tied,
        pairs_total: pairs(n),
    })
}

/// Chatterjee's rank correlation ξ_n(X, Y) for scalar `x`, with ties in `x`
/// broken uniformly at random from `seed`.
pub fn chatterjee_xi(x: &[f64], y: &[f64], seed: u64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "y",
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations { required: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].total_cmp(&x[b])
            .then_with(|| rng::word(seed, a as u64).cmp(&rng::word(seed, b as u64)))
    });
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    // r = #{y_j <= y}, l = #{y_j >= y}
    let r_of = |v: f64| ys.partition_point(|&u| u <= v) as u64;
    let l_of = |v: f64| (n - ys.partition_point(|&u| u < v)) as u64;

    let r: Vec<u64> = order.iter().map(|&k| r_of(y[k])).collect();
    let jumps: u128 = r.windows(2).map(|w| w[0].abs_diff(w[1]) as u128).sum();
    let spread: u128 = y
        .iter()
        .map(|&v| {
            let l = l_of(v) as u128;
            l * (n as u128 - l)
        })
        .sum();
    if spread == 0 {
        return Err(Error::DegenerateResponse);
    }
    Ok(1.0 - (n as u128 * jumps) as f64 / (2 * spread) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::build_neighbor_map;

    fn obs1(x: &[f64], y: &[f64]) -> ObservationSet {
        ObservationSet::from_columns(&[x.to_vec()], y.to_vec()).unwrap()
    }

    #[test]
    fn increasing_line() {
        let o = obs1(&[1., 2., 3., 4.], &[1., 2., 3., 4.]);
        let m = build_neighbor_map(o.x(), 1, 0).unwrap();
        // rows 1 and 2 each have two neighbours at distance 1
        assert_eq!(m.neighbors()[0], 1);
        assert_eq!(m.neighbors()[3], 2);
        let est = lambda_nn(&o, 0, NnVariant::Standard).unwrap();
        let y_nb: Vec<f64> = m.neighbors().iter().map(|&l| o.y()[l]).collect();
        let mut s = 0i64;
        for k in 0..4 {
            for l in k + 1..4 {
                let a = (o.y()[k] - o.y()[l]).signum() as i64;
                let b = if y_nb[k] == y_nb[l] { 0 } else { (y_nb[k] - y_nb[l]).signum() as i64 };
                s += a * b;
            }
        }
        assert_eq!(est.signed_sum, Some(s));
        assert_eq!(est.value, s as f64 / 6.0 / 1.0);
        assert_eq!(est.denominator, 1.0);
    }

    #[test]
    fn all_rows_tied() {
        let o = obs1(&[2., 2., 2.], &[1., 2., 3.]);
        assert_eq!(lambda_nn(&o, 1, NnVariant::Standard), Err(Error::AllPredictorsTied));
        assert_eq!(lambda_nn(&o, 1, NnVariant::BetweenGroup), Err(Error::AllPredictorsTied));
        assert_eq!(lambda_rank_based(&o), Err(Error::SingleGroup(1)));
    }

    #[test]
    fn monotone_response_is_bitwise_invariant() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 17) as f64).collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * 13) % 11) as f64 / 3.0).collect();
        let o = obs1(&x, &y);
        let g = o.with_response(y.iter().map(|v| v.exp()).collect()).unwrap();
        for v in [NnVariant::Standard, NnVariant::BetweenGroup] {
            let a = lambda_nn(&o, 4, v).unwrap();
            let b = lambda_nn(&g, 4, v).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn between_group_drops_within_pairs() {
        let o = obs1(&[0., 0., 0., 1., 1., 1.], &[1., 2., 3., 4., 5., 6.]);
        let est = lambda_nn(&o, 2, NnVariant::BetweenGroup).unwrap();
        // every between pair has y and neighbour-y ordered the same way
        assert_eq!(est.signed_sum, Some(9));
        assert_eq!(est.tied_pairs, 6);
        assert_eq!(est.value, 1.0);
        assert!(lambda_nn(&o, 2, NnVariant::Standard).unwrap().warnings()[0].contains("between_group"));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_hat(&[1., 2.], &[3., 4.]).unwrap().psi, 1.0);
        assert_eq!(psi_hat(&[5.], &[5.]).unwrap().psi, 0.5);
        assert_eq!(psi_hat(&[1., 3., 3., 7.], &[3., 1., 7., 3.]).unwrap().psi, 0.5);
        assert_eq!(psi_hat(&[], &[1.]), Err(Error::EmptyGroup(1)));
        assert_eq!(psi_hat(&[1.], &[]), Err(Error::EmptyGroup(2)));
    }

    #[test]
    fn psi_matches_pair_count() {
        let a = [0.3, 1.0, 1.0, 2.5, -1.0];
        let b = [1.0, 2.5, 0.0];
        let mut twice = 0.0;
        for &u in &a {
            for &v in &b {
                twice += if u < v { 2.0 } else if u == v { 1.0 } else { 0.0 };
            }
        }
        let psi = psi_hat(&a, &b).unwrap().psi;
        assert_eq!(psi, twice / (2.0 * 15.0));
        assert!((psi - (1.0 - psi_hat(&b, &a).unwrap().psi)).abs() < 1e-15);
    }

    #[test]
    fn rank_based_examples() {
        let o = obs1(&[0., 0., 1., 1.], &[1., 2., 3., 4.]);
        assert_eq!(lambda_rank_based(&o).unwrap().value, 1.0);
        let o = obs1(&[0., 0., 1., 1.], &[1., 2., 2., 1.]);
        assert_eq!(lambda_rank_based(&o).unwrap().value, 0.0);
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 7) % 13) as f64 + 0.01 * i as f64).collect();
        assert_eq!(lambda_rank_based(&obs1(&x, &y)).unwrap().value, 1.0);
    }

    #[test]
    fn rank_based_matches_direct_formula() {
        let x = [0., 0., 0., 1., 1., 2., 2., 2., 2.];
        let y = [1., 4., 2., 2., 9., 0., 3., 3., 5.];
        let o = obs1(&x, &y);
        let g = group_by_x(&o);
        let q = g.weights();
        let mut num = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let psi = psi_hat(&g.groups[i].y, &g.groups[j].y).unwrap().psi;
                num += 2.0 * q[i] * q[j] * (2.0 * psi - 1.0).powi(2);
            }
        }
        let den = 1.0 - q.iter().map(|v| v * v).sum::<f64>();
        let est = lambda_rank_based(&o).unwrap();
        assert!((est.value - num / den).abs() < 1e-14);
    }

    #[test]
    fn xi_on_identity_matches_closed_form() {
        let n = 1000usize;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37).collect();
        let xi = chatterjee_xi(&x, &x, 0).unwrap();
        assert_eq!(xi, 1.0 - (3 * (n - 1)) as f64 / ((n * n - 1) as f64));
        assert!((xi - 0.997).abs() < 0.01);
    }

    #[test]
    fn xi_rejects_constant_response() {
        assert_eq!(chatterjee_xi(&[1., 2., 3.], &[1., 1., 1.], 0), Err(Error::DegenerateResponse));
    }
}
