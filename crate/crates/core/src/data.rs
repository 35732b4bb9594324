//! Observation sets, validation, grouping by predictor value and
//! column-wise preprocessing.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::concordance::{midranks, radix_sort};
use crate::error::{Error, Result};

/// `n` rows of a predictor vector in `R^p` paired with a scalar response.
///
/// Predictors are stored row-major. All entries are finite, and negative
/// zero is normalised to positive zero so that bitwise ordering agrees with
/// floating-point equality.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
    column_names: Option<Vec<String>>,
    response_name: Option<String>,
}

impl ObservationSet {
    /// Builds a set from row vectors.
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut x = Vec::with_capacity(rows.len() * p);
        for row in &rows {
            if row.len() != p {
                return Err(Error::LengthMismatch {
                    what: "predictor row",
                    expected: p,
                    got: row.len(),
                });
            }
            x.extend_from_slice(row);
        }
        Self::from_row_major(x, p, y)
    }

    /// Builds a set from predictor columns.
    pub fn from_columns(columns: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = columns.len();
        let n = y.len();
        for col in columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    what: "predictor column",
                    expected: n,
                    got: col.len(),
                });
            }
        }
        let mut x = Vec::with_capacity(n * p);
        for k in 0..n {
            x.extend(columns.iter().map(|c| c[k]));
        }
        Self::from_row_major(x, p, y)
    }

    /// Builds a set from a row-major predictor buffer with `p` columns.
    pub fn from_row_major(mut x: Vec<f64>, p: usize, mut y: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::NoPredictors);
        }
        let n = y.len();
        if n < 2 {
            return Err(Error::TooFewObservations { required: 2, got: n });
        }
        if x.len() != n * p {
            return Err(Error::LengthMismatch {
                what: "predictor buffer",
                expected: n * p,
                got: x.len(),
            });
        }
        for (i, v) in x.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "predictors",
                    row: i / p,
                    col: i % p,
                });
            }
            *v += 0.0;
        }
        for (k, v) in y.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "response",
                    row: k,
                    col: 0,
                });
            }
            *v += 0.0;
        }
        Ok(Self {
            x,
            y,
            n,
            p,
            column_names: None,
            response_name: None,
        })
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::LengthMismatch {
                what: "column names",
                expected: self.p,
                got: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn with_response_name(mut self, name: impl Into<String>) -> Self {
        self.response_name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.x[k * self.p..(k + 1) * self.p]
    }

    /// Row-major predictor buffer.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.iter().skip(j).step_by(self.p).copied().collect()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn response_name(&self) -> Option<&str> {
        self.response_name.as_deref()
    }

    /// Display name of column `j`, falling back to `x{j+1}`.
    pub fn column_label(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    /// A new set restricted to the given predictor columns (in that order).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::NoPredictors);
        }
        if let Some(&bad) = cols.iter().find(|&&j| j >= self.p) {
            return Err(Error::ColumnOutOfRange {
                index: bad,
                p: self.p,
            });
        }
        let mut x = Vec::with_capacity(self.n * cols.len());
        for k in 0..self.n {
            let row = self.row(k);
            x.extend(cols.iter().map(|&j| row[j]));
        }
        Ok(Self {
            x,
            y: self.y.clone(),
            n: self.n,
            p: cols.len(),
            column_names: self
                .column_names
                .as_ref()
                .map(|names| cols.iter().map(|&j| names[j].clone()).collect()),
            response_name: self.response_name.clone(),
        })
    }

    /// Same predictors with a replacement response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "response",
                expected: self.n,
                got: y.len(),
            });
        }
        let mut out = Self::from_row_major(self.x.clone(), self.p, y)?;
        out.column_names = self.column_names.clone();
        out.response_name = self.response_name.clone();
        Ok(out)
    }

    /// Predictor rows reordered so that new row `k` is old row `perm[k]`;
    /// the response stays in place.
    pub fn permute_predictors(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut x = Vec::with_capacity(self.x.len());
        for &src in perm {
            x.extend_from_slice(self.row(src));
        }
        Self {
            x,
            ..self.clone()
        }
    }
}

/// Integer key whose unsigned order matches the numeric order of finite
/// floats without negative zero.
#[inline]
pub(crate) fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Lexicographic order on predictor rows. Entries are finite and free of
/// negative zero, so `total_cmp` coincides with numeric order.
#[inline]
pub(crate) fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Partition of row indices into classes of exactly equal predictor rows.
///
/// `order` lists all row indices sorted lexicographically by row (ascending
/// index within a class); class `g` occupies `order[starts[g]..starts[g+1]]`.
#[derive(Debug, Clone)]
pub(crate) struct RowClasses {
    pub order: Vec<usize>,
    pub starts: Vec<usize>,
}

impl RowClasses {
    pub fn build(x: &[f64], p: usize) -> Self {
        let n = x.len() / p;
        let row = |k: usize| &x[k * p..(k + 1) * p];
        // sort on the first coordinate by value, then settle equal runs by
        // the full row; keeps memory access sequential for large n
        assert!(n <= u32::MAX as usize, "too many rows");
        let mut keyed: Vec<(u64, u32)> = (0..n).map(|k| (order_key(x[k * p]), k as u32)).collect();
        radix_sort(&mut keyed);
        if p > 1 {
            let mut lo = 0;
            while lo < n {
                let mut hi = lo + 1;
                while hi < n && keyed[hi].0 == keyed[lo].0 {
                    hi += 1;
                }
                if hi - lo > 1 {
                    keyed[lo..hi].sort_unstable_by(|a, b| cmp_rows(row(a.1 as usize), row(b.1 as usize)).then(a.1.cmp(&b.1)));
                }
                lo = hi;
            }
        }
        let mut starts = Vec::new();
        for i in 0..n {
            let new_class = i == 0
                || keyed[i].0 != keyed[i - 1].0
                || (p > 1 && cmp_rows(row(keyed[i - 1].1 as usize), row(keyed[i].1 as usize)) != Ordering::Equal);
            if new_class {
                starts.push(i);
            }
        }
        starts.push(n);
        Self {
            order: keyed.into_iter().map(|(_, k)| k as usize).collect(),
            starts,
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.order[self.starts[g]..self.starts[g + 1]]
    }

    pub fn tied_pairs(&self) -> u64 {
        (0..self.len())
            .map(|g| {
                let s = self.members(g).len() as u64;
                s * (s - 1) / 2
            })
            .sum()
    }
}

/// Issues detected by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationIssue {
    AllPredictorsDegenerate,
    ResponseDegenerate,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ValidationIssue::AllPredictorsDegenerate => "all predictors degenerate",
            ValidationIssue::ResponseDegenerate => "response degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub p: usize,
    pub degenerate_columns: Vec<bool>,
    pub response_degenerate: bool,
    /// Share of unordered pairs with identical predictor rows.
    pub predictor_tie_share: f64,
    /// Share of unordered pairs with identical responses.
    pub response_tie_share: f64,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

fn is_constant(v: impl IntoIterator<Item = f64>) -> bool {
    let mut it = v.into_iter();
    match it.next() {
        Some(first) => it.all(|u| u == first),
        None => true,
    }
}

fn tied_pairs_1d(v: &[f64]) -> u64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut total = 0u64;
    let mut run = 1u64;
    for i in 1..s.len() {
        if s[i] == s[i - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Reports structural properties of the data; never fails.
pub fn validate(obs: &ObservationSet) -> ValidationReport {
    let n = obs.n();
    let degenerate_columns: Vec<bool> = (0..obs.p())
        .map(|j| is_constant(obs.x.iter().skip(j).step_by(obs.p).copied()))
        .collect();
    let response_degenerate = is_constant(obs.y.iter().copied());
    let pairs = (n as u64 * (n as u64 - 1) / 2) as f64;
    let predictor_tie_share = RowClasses::build(&obs.x, obs.p).tied_pairs() as f64 / pairs;
    let response_tie_share = tied_pairs_1d(&obs.y) as f64 / pairs;

    let mut issues = Vec::new();
    if degenerate_columns.iter().all(|&d| d) {
        issues.push(ValidationIssue::AllPredictorsDegenerate);
    }
    if response_degenerate {
        issues.push(ValidationIssue::ResponseDegenerate);
    }
    ValidationReport {
        n,
        p: obs.p(),
        degenerate_columns,
        response_degenerate,
        predictor_tie_share,
        response_tie_share,
        issues,
    }
}

/// One class of identical predictor rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: Vec<f64>,
    /// Original row indices, ascending.
    pub rows: Vec<usize>,
    pub y: Vec<f64>,
}

/// Observations partitioned by exact predictor-row equality, groups in
/// lexicographic key order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    pub groups: Vec<Group>,
    pub n: usize,
    p: usize,
}

impl GroupedSample {
    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.rows.len()).collect()
    }

    /// Empirical group probabilities `n_i / n`.
    pub fn weights(&self) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.rows.len() as f64 / self.n as f64)
            .collect()
    }

    /// Reassembles the observation set in original row order.
    pub fn to_observations(&self) -> Result<ObservationSet> {
        let mut x = vec![0.0; self.n * self.p];
        let mut y = vec![0.0; self.n];
        for g in &self.groups {
            for (&k, &v) in g.rows.iter().zip(&g.y) {
                x[k * self.p..(k + 1) * self.p].copy_from_slice(&g.key);
                y[k] = v;
            }
        }
        ObservationSet::from_row_major(x, self.p, y)
    }
}

pub fn group_by_x(obs: &ObservationSet) -> GroupedSample {
    let classes = RowClasses::build(&obs.x, obs.p);
    let groups = (0..classes.len())
        .map(|g| {
            let rows = classes.members(g).to_vec();
            Group {
                key: obs.row(rows[0]).to_vec(),
                y: rows.iter().map(|&k| obs.y[k]).collect(),
                rows,
            }
        })
        .collect();
    GroupedSample {
        groups,
        n: obs.n,
        p: obs.p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessMode {
    #[default]
    None,
    Rank,
    Standardize,
}

impl std::str::FromStr for PreprocessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "rank" => Ok(Self::Rank),
            "standardize" => Ok(Self::Standardize),
            other => Err(Error::invalid(format!("unknown preprocess mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub mode: PreprocessMode,
    /// Also midrank-transform the response (rank mode only).
    pub rank_response: bool,
}

impl PreprocessSpec {
    pub fn new(mode: PreprocessMode) -> Self {
        Self {
            mode,
            rank_response: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub data: ObservationSet,
    /// Columns left unchanged by standardisation because they are constant.
    pub untouched_columns: Vec<usize>,
}

/// Sample mean and standard deviation (divisor `n - 1`).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|u| (u - mean) * (u - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn preprocess(obs: &ObservationSet, spec: &PreprocessSpec) -> Preprocessed {
    let mut untouched_columns = Vec::new();
    let columns: Vec<Vec<f64>> = (0..obs.p())
        .map(|j| {
            let col = obs.column(j);
            match spec.mode {
                PreprocessMode::None => col,
                PreprocessMode::Rank => midranks(&col),
                PreprocessMode::Standardize => {
                    let (mean, sd) = mean_sd(&col);
                    if sd > 0.0 {
                        col.iter().map(|v| (v - mean) / sd).collect()
                    } else {
                        untouched_columns.push(j);
                        col
                    }
                }
            }
        })
        .collect();
    let y = if spec.mode == PreprocessMode::Rank && spec.rank_response {
        midranks(&obs.y)
    } else {
        obs.y.clone()
    };
    let mut data = ObservationSet::from_columns(&columns, y)
        .expect("preprocessing preserves shape and finiteness");
    data.column_names = obs.column_names.clone();
    data.response_name = obs.response_name.clone();
    Preprocessed {
        data,
        untouched_columns,
    }
}
