//! Seeded generators for the synthetic experiments and a Monte Carlo runner
//! that summarises estimator behaviour over repetitions.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::estimators::{chatterjee_xi, lambda_nn, lambda_rank_based, recommended_variant, NnVariant};
use crate::oracles::{lambda_exact, ClosedFormModel};
use crate::rng;

const DATA_TAG: u64 = 0xDA7A;
const ESTIMATOR_TAG: u64 = 0xE57;
const XI_TAG: u64 = 0x71;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Scenario {
    /// `X ~ U(-1, 1)`, `Y = -X² + U(-0.1, 0.1)`; `X` optionally replaced by
    /// the index of one of `categories` equal-length bins.
    IntroDiscretization { categories: Option<usize> },
    /// Standard bivariate normal with correlation `rho`.
    S1Bvn { rho: f64 },
    /// `N(0, 1)` against `N(2, 1)`, balanced groups.
    S2aBf,
    /// `N(0, 1)` against `N(2, 4)`, balanced groups.
    S2bBf,
    /// `Y = X² + N(0, 0.1²)` on `[-1, 1]`, `X` optionally binned into `k`
    /// equal-length subintervals.
    S3Discretize { k: Option<usize> },
    /// Four completely separated groups on `{1, 2}²` plus `sigma·U(-1, 1)` noise.
    S4aNoise { sigma: f64 },
    /// `Y = X cos(X Z) + U(0, 1)` with `X = ±1`, `Z ~ U(0, 2π)`.
    S4bCosine,
    /// Independent uniforms.
    S5aIndep,
    /// `Y ~ U(-|1 - 2X|, |1 - 2X|)`.
    S5bScale,
    /// `Y = R·U(s/2, s)`, `R` Rademacher, `s = (2X - X²)^0.9`.
    S5cRademacher,
    /// Residuals of a linear fit to `Y = X² + 0.1 ε` on `X ~ U(-1, 1)`.
    S5dMisspec,
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::IntroDiscretization { .. } => "intro_discretization",
            Scenario::S1Bvn { .. } => "s1_bvn",
            Scenario::S2aBf => "s2a_bf",
            Scenario::S2bBf => "s2b_bf",
            Scenario::S3Discretize { .. } => "s3_discretize",
            Scenario::S4aNoise { .. } => "s4a_noise",
            Scenario::S4bCosine => "s4b_cosine",
            Scenario::S5aIndep => "s5a_indep",
            Scenario::S5bScale => "s5b_scale",
            Scenario::S5cRademacher => "s5c_rademacher",
            Scenario::S5dMisspec => "s5d_misspec",
        }
    }

    pub fn predictor_dim(&self) -> usize {
        match self {
            Scenario::S4aNoise { .. } | Scenario::S4bCosine => 2,
            _ => 1,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if n < 4 {
            return Err(Error::TooFewObservations { required: 4, got: n });
        }
        match *self {
            Scenario::IntroDiscretization { categories: Some(c) } if c < 2 => {
                Err(Error::invalid("at least two categories are required"))
            }
            Scenario::S1Bvn { rho } if !(0.0..=1.0).contains(&rho) => Err(Error::invalid("rho must lie in [0, 1]")),
            Scenario::S3Discretize { k: Some(k) } if k < 2 || !n.is_multiple_of(k) => {
                Err(Error::invalid(format!("k = {k} must be at least 2 and divide n = {n}")))
            }
            Scenario::S4aNoise { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::invalid("sigma must be finite and non-negative"))
            }
            _ => Ok(()),
        }
    }

    /// Whether the predictor takes finitely many values by design.
    pub fn discrete_predictor(&self) -> bool {
        matches!(
            self,
            Scenario::IntroDiscretization { categories: Some(_) }
                | Scenario::S2aBf
                | Scenario::S2bBf
                | Scenario::S3Discretize { k: Some(_) }
                | Scenario::S4aNoise { .. }
        )
    }

    /// Metrics recorded per repetition, in column order.
    pub fn metrics(&self) -> Vec<&'static str> {
        let mut m = vec!["lambda_nn"];
        if self.discrete_predictor() {
            m.push("rank_based");
        }
        match self {
            Scenario::S4bCosine => m.extend(["lambda_nn_x", "lambda_nn_z"]),
            Scenario::S5aIndep | Scenario::S5bScale | Scenario::S5cRademacher | Scenario::S5dMisspec => m.push("xi"),
            _ => {}
        }
        m
    }

    /// Population value of each metric where one is known in closed form.
    pub fn oracle(&self, metric: &str) -> Option<f64> {
        let lam = match self {
            Scenario::S1Bvn { rho } if *rho == 1.0 => Some(1.0),
            Scenario::S1Bvn { rho } => lambda_exact(&ClosedFormModel::bivariate_normal(*rho)).ok(),
            Scenario::S2aBf => lambda_exact(&bf(1.0)).ok(),
            Scenario::S2bBf => lambda_exact(&bf(4.0)).ok(),
            Scenario::S4aNoise { sigma } if *sigma == 0.0 => Some(1.0),
            // each conditional law is symmetric about a common centre
            Scenario::S5aIndep | Scenario::S5bScale | Scenario::S5cRademacher => Some(0.0),
            _ => None,
        };
        match (self, metric) {
            (_, "lambda_nn" | "rank_based") => lam,
            (Scenario::S4bCosine, "lambda_nn_x" | "lambda_nn_z") => Some(0.0),
            (Scenario::S5aIndep, "xi") => Some(0.0),
            _ => None,
        }
    }
}

fn bf(var2: f64) -> ClosedFormModel {
    ClosedFormModel::BfNormal {
        mu1: 0.0,
        var1: 1.0,
        mu2: 2.0,
        var2,
        q: 0.5,
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::IntroDiscretization { categories: Some(c) } => write!(f, "{}(categories={c})", self.id()),
            Scenario::S1Bvn { rho } => write!(f, "{}(rho={rho})", self.id()),
            Scenario::S3Discretize { k: Some(k) } => write!(f, "{}(k={k})", self.id()),
            Scenario::S4aNoise { sigma } => write!(f, "{}(sigma={sigma})", self.id()),
            _ => f.write_str(self.id()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    pub reps: usize,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64, reps: usize) -> Self {
        Self { scenario, n, seed, reps }
    }

    /// Seed of the dataset of repetition `rep`.
    pub fn data_seed(&self, rep: usize) -> u64 {
        rng::derive_seed(self.seed, &[DATA_TAG, rep as u64])
    }

    /// Seed of the estimator tie-breaking draws of repetition `rep`.
    pub fn estimator_seed(&self, rep: usize) -> u64 {
        rng::derive_seed(self.seed, &[ESTIMATOR_TAG, rep as u64])
    }
}

/// The dataset of repetition 0.
pub fn generate(spec: &ScenarioSpec) -> Result<ObservationSet> {
    generate_rep(spec, 0)
}

pub fn generate_rep(spec: &ScenarioSpec, rep: usize) -> Result<ObservationSet> {
    spec.scenario.validate(spec.n)?;
    let mut r = rng::stream(spec.data_seed(rep));
    let n = spec.n;
    let (x, y, names): (Vec<f64>, Vec<f64>, &[&str]) = match spec.scenario {
        Scenario::IntroDiscretization { categories } => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let u = r.random_range(-1.0..1.0);
                y.push(-u * u + r.random_range(-0.1..0.1));
                x.push(match categories {
                    Some(c) => bin_index(u, c),
                    None => u,
                });
            }
            (x, y, &["x"])
        }
        Scenario::S1Bvn { rho } => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            let resid = (1.0 - rho * rho).sqrt();
            for _ in 0..n {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                x.push(a);
                y.push(rho * a + resid * b);
            }
            (x, y, &["x"])
        }
        Scenario::S2aBf | Scenario::S2bBf => {
            let sd2 = if spec.scenario == Scenario::S2aBf { 1.0 } else { 2.0 };
            let g1 = Normal::new(2.0, sd2).expect("valid normal");
            let half = n / 2;
            let x: Vec<f64> = (0..n).map(|i| if i < half { 0.0 } else { 1.0 }).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    if i < half {
                        StandardNormal.sample(&mut r)
                    } else {
                        g1.sample(&mut r)
                    }
                })
                .collect();
            (x, y, &["x"])
        }
        Scenario::S3Discretize { k } => {
            // stratified design: one point uniformly inside each of n equal cells
            let noise = Normal::new(0.0, 0.1).expect("valid normal");
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let u: f64 = r.random();
                let v = -1.0 + 2.0 * (i as f64 + u) / n as f64;
                y.push(v * v + noise.sample(&mut r));
                x.push(match k {
                    // cell i lies inside bin ⌊i k / n⌋ because k divides n
                    Some(k) => (i * k / n + 1) as f64,
                    None => v,
                });
            }
            (x, y, &["x"])
        }
        Scenario::S4aNoise { sigma } => {
            let mut x = Vec::with_capacity(2 * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let a = r.random_range(1..=2u8);
                let b = r.random_range(1..=2u8);
                let level = f64::from(2 * (a - 1) + (b - 1));
                x.extend([f64::from(a), f64::from(b)]);
                let signal = level + r.random::<f64>();
                let noise = if sigma > 0.0 { sigma * r.random_range(-1.0..1.0) } else { 0.0 };
                y.push(signal + noise);
            }
            (x, y, &["x", "z"])
        }
        Scenario::S4bCosine => {
            let mut x = Vec::with_capacity(2 * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let s = if r.random::<bool>() { 1.0 } else { -1.0 };
                let z = r.random_range(0.0..std::f64::consts::TAU);
                x.extend([s, z]);
                y.push(s * (s * z).cos() + r.random::<f64>());
            }
            (x, y, &["x", "z"])
        }
        Scenario::S5aIndep => {
            let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
            let y: Vec<f64> = (0..n).map(|_| r.random()).collect();
            (x, y, &["x"])
        }
        Scenario::S5bScale => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let u: f64 = r.random();
                let half_width = (1.0 - 2.0 * u).abs();
                x.push(u);
                y.push(half_width * (2.0 * r.random::<f64>() - 1.0));
            }
            (x, y, &["x"])
        }
        Scenario::S5cRademacher => {
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let u: f64 = r.random();
                let s = (2.0 * u - u * u).powf(0.9);
                let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                x.push(u);
                y.push(sign * s * (0.5 + 0.5 * r.random::<f64>()));
            }
            (x, y, &["x"])
        }
        Scenario::S5dMisspec => {
            let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&u| u * u + 0.1 * r.sample::<f64, _>(StandardNormal))
                .collect();
            let resid = linear_residuals(&x, &y);
            (x, resid, &["x"])
        }
    };
    let p = spec.scenario.predictor_dim();
    Ok(ObservationSet::from_row_major(x, p, y)?
        .with_column_names(names.iter().map(|s| s.to_string()).collect())?
        .with_response_name("y"))
}

/// One-based index of the equal-length subinterval of `[-1, 1]` holding `u`.
fn bin_index(u: f64, bins: usize) -> f64 {
    let b = ((u + 1.0) / 2.0 * bins as f64).floor() as usize;
    (b.min(bins - 1) + 1) as f64
}

/// Residuals of the least-squares line through `(x, y)`.
fn linear_residuals(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    x.iter().zip(y).map(|(a, b)| b - icept - slope * a).collect()
}

/// Boxplot statistics; quartiles interpolate linearly between order
/// statistics at position `(len - 1)·prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    /// # Panics
    /// On an empty slice or NaN entries.
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "no values to summarise");
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    /// Estimator variant used for nearest-neighbour metrics.
    pub variant: Option<NnVariant>,
    pub oracle: Option<f64>,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub data_seed: u64,
    pub estimator_seed: u64,
    /// Values in the order of [`ScenarioSummary::metric_names`].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub spec: ScenarioSpec,
    pub metric_names: Vec<String>,
    pub metrics: Vec<MetricSummary>,
    pub reps: Vec<RepRecord>,
}

impl ScenarioSummary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn median(&self, name: &str) -> Option<f64> {
        self.metric(name).map(|m| m.stats.median)
    }

    /// Every repetition's value of one metric.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.metric_names.iter().position(|m| m == name)?;
        Some(self.reps.iter().map(|r| r.values[j]).collect())
    }

    /// One CSV row per repetition. Floats use the shortest representation
    /// that reads back to the same value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "scenario,n,rep,data_seed,estimator_seed")?;
        for m in &self.metric_names {
            write!(out, ",{m}")?;
        }
        writeln!(out)?;
        for r in &self.reps {
            write!(
                out,
                "{},{},{},{},{}",
                self.spec.scenario.id(),
                self.spec.n,
                r.rep,
                r.data_seed,
                r.estimator_seed
            )?;
            for v in &r.values {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn nn_value(obs: &ObservationSet, seed: u64) -> Result<(f64, NnVariant)> {
    let variant = recommended_variant(obs);
    Ok((lambda_nn(obs, seed, variant)?.value, variant))
}

/// Runs `reps` independent repetitions and summarises every metric. The
/// nearest-neighbour variant follows [`recommended_variant`] on each
/// dataset.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioSummary> {
    if spec.reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    spec.scenario.validate(spec.n)?;
    let names = spec.scenario.metrics();
    let rows = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let obs = generate_rep(spec, rep)?;
            let seed = spec.estimator_seed(rep);
            let mut values = Vec::with_capacity(names.len());
            let mut variants = Vec::with_capacity(names.len());
            for &name in &names {
                let (v, variant) = match name {
                    "lambda_nn" => nn_value(&obs, seed).map(|(v, w)| (v, Some(w)))?,
                    "rank_based" => (lambda_rank_based(&obs)?.value, None),
                    "lambda_nn_x" => nn_value(&obs.select_columns(&[0])?, seed).map(|(v, w)| (v, Some(w)))?,
                    "lambda_nn_z" => nn_value(&obs.select_columns(&[1])?, seed).map(|(v, w)| (v, Some(w)))?,
                    "xi" => (chatterjee_xi(&obs.column(0), obs.y(), rng::derive_seed(seed, &[XI_TAG]))?, None),
                    other => unreachable!("unknown metric {other}"),
                };
                values.push(v);
                variants.push(variant);
            }
            Ok((
                RepRecord {
                    rep,
                    data_seed: spec.data_seed(rep),
                    estimator_seed: seed,
                    values,
                },
                variants,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = names
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let vals: Vec<f64> = rows.iter().map(|(r, _)| r.values[j]).collect();
            MetricSummary {
                name: name.to_string(),
                variant: rows[0].1[j],
                oracle: spec.scenario.oracle(name),
                stats: BoxStats::from_values(&vals),
            }
        })
        .collect();
    Ok(ScenarioSummary {
        spec: *spec,
        metric_names: names.iter().map(|s| s.to_string()).collect(),
        metrics,
        reps: rows.into_iter().map(|(r, _)| r).collect(),
    })
}
