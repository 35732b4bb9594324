//! Exact population values of Λ(Y|X) and of the relative effect Ψ for
//! parametric families, together with samplers for each family.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::rng;

/// Standard normal cdf.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Finite joint probability table `probs[y][x]` over `y_support × x_support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinitePmf")]
pub struct FinitePmf {
    y_support: Vec<f64>,
    x_support: Vec<f64>,
    probs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawFinitePmf {
    y_support: Vec<f64>,
    x_support: Vec<f64>,
    probs: Vec<Vec<f64>>,
}

impl TryFrom<RawFinitePmf> for FinitePmf {
    type Error = Error;

    fn try_from(raw: RawFinitePmf) -> Result<Self> {
        Self::new(raw.y_support, raw.x_support, raw.probs)
    }
}

impl FinitePmf {
    pub fn new(y_support: Vec<f64>, x_support: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != y_support.len() {
            return Err(Error::invalid("probability table needs one row per y atom"));
        }
        if probs.iter().any(|row| row.len() != x_support.len()) {
            return Err(Error::invalid("probability table needs one column per x atom"));
        }
        for support in [&y_support, &x_support] {
            if support.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("support points must be finite"));
            }
            let mut s = support.clone();
            s.sort_by(f64::total_cmp);
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid("support points must be distinct"));
            }
        }
        let mut total = 0.0;
        for &a in probs.iter().flatten() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid(format!("probability {a} outside [0, 1]")));
            }
            total += a;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            y_support,
            x_support,
            probs,
        })
    }

    /// The two-column table with `P(X=0) = P(X=1) = 1/2` and uniform
    /// marginal on `Y ∈ {0, 1, 2}`, parameterised by `a_{1,0}` and `a_{2,0}`.
    /// No member of this class is completely separated.
    pub fn frechet_class(a10: f64, a20: f64) -> Result<Self> {
        if !(a10.is_finite() && a20.is_finite()) {
            return Err(Error::invalid("a_{1,0}, a_{2,0} must be finite"));
        }
        let (r10, r20) = (exact(a10), exact(a20));
        let third = Rational::new(1.into(), 3.into());
        let r00 = Rational::new(1.into(), 2.into()) - &r10 - &r20;
        let col0 = [r00, r10, r20];
        let col1: Vec<Rational> = col0.iter().map(|a| &third - a).collect();
        if col0.iter().chain(&col1).any(|v| v.is_negative()) {
            return Err(Error::invalid("a_{1,0}, a_{2,0} leave the Fréchet class"));
        }
        let f = |v: &Rational| v.to_f64().expect("bounded");
        Self::new(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0],
            col0.iter().zip(&col1).map(|(a, b)| vec![f(a), f(b)]).collect(),
        )
    }

    pub fn y_support(&self) -> &[f64] {
        &self.y_support
    }

    pub fn x_support(&self) -> &[f64] {
        &self.x_support
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Marginal masses of the x atoms.
    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.x_support.len())
            .map(|j| self.probs.iter().map(|row| row[j]).sum())
            .collect()
    }

    /// Masses of the x atoms carrying positive probability, with the
    /// conditional pmfs of `Y` over ascending y atoms, in exact arithmetic.
    fn exact_conditionals(&self) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let mut y_order: Vec<usize> = (0..self.y_support.len()).collect();
        y_order.sort_by(|&a, &b| self.y_support[a].total_cmp(&self.y_support[b]));
        let mut masses = Vec::new();
        let mut conds = Vec::new();
        for j in 0..self.x_support.len() {
            let col: Vec<Rational> = y_order.iter().map(|&i| exact(self.probs[i][j])).collect();
            let q: Rational = col.iter().sum();
            if q.is_zero() {
                continue;
            }
            conds.push(col.into_iter().map(|a| a / &q).collect());
            masses.push(q);
        }
        (masses, conds)
    }
}

type Rational = BigRational;

/// The simplest rational that rounds to `v`, so that decimal or fractional
/// table entries such as `0.1` or `1/3` are recovered exactly.
fn exact(v: f64) -> Rational {
    if v == 0.0 {
        return Rational::zero();
    }
    let mid = |w: f64| (Rational::from_float(v).expect("finite") + Rational::from_float(w).expect("finite")) / Rational::from_integer(2.into());
    let (lo, hi) = (mid(v.next_down()), mid(v.next_up()));
    if v > 0.0 {
        simplest_between(&lo, &hi)
    } else {
        -simplest_between(&-hi, &-lo)
    }
}

/// Smallest-denominator rational in the closed interval `[lo, hi]`, `0 < lo <= hi`.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let ceil = lo.ceil();
    if &ceil <= hi {
        return ceil;
    }
    let k = lo.floor();
    let inner = simplest_between(&(hi - &k).recip(), &(lo - &k).recip());
    k + inner.recip()
}

/// `Ψ(P1, P2) = Σ_z P2(z) [P1(Z < z) + P1(z) / 2]` for pmfs on a common
/// ascending support.
fn psi_discrete(p1: &[Rational], p2: &[Rational]) -> Rational {
    let half = Rational::new(1.into(), 2.into());
    let mut below = Rational::zero();
    let mut psi = Rational::zero();
    for (a, b) in p1.iter().zip(p2) {
        psi += b * (&below + &half * a);
        below += a;
    }
    psi
}

/// Discrete predictor with finitely many atoms, each with a conditional
/// response law that is uniform on a finite union of disjoint intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewiseUniform")]
pub struct PiecewiseUniformGroups {
    x_support: Vec<f64>,
    weights: Vec<f64>,
    pieces: Vec<Vec<(f64, f64)>>,
}

#[derive(Deserialize)]
struct RawPiecewiseUniform {
    x_support: Vec<f64>,
    weights: Vec<f64>,
    pieces: Vec<Vec<(f64, f64)>>,
}

impl TryFrom<RawPiecewiseUniform> for PiecewiseUniformGroups {
    type Error = Error;

    fn try_from(raw: RawPiecewiseUniform) -> Result<Self> {
        Self::new(raw.x_support, raw.weights, raw.pieces)
    }
}

impl PiecewiseUniformGroups {
    pub fn new(x_support: Vec<f64>, weights: Vec<f64>, pieces: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if weights.len() != x_support.len() || pieces.len() != x_support.len() {
            return Err(Error::invalid("one weight and one interval list per x atom"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w))
            || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::invalid("group weights must lie in [0, 1] and sum to 1"));
        }
        for group in &pieces {
            if group.is_empty() {
                return Err(Error::invalid("every group needs at least one interval"));
            }
            let mut g = group.clone();
            g.sort_by(|a, b| a.0.total_cmp(&b.0));
            if g.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return Err(Error::invalid("intervals must be finite with lo < hi"));
            }
            if g.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(Error::invalid("intervals within a group must not overlap"));
            }
        }
        Ok(Self {
            x_support,
            weights,
            pieces,
        })
    }

    /// Three groups with masses `(q, 1 - 2q, q)` and conditionals
    /// `U(0, 1)`, `U((-0.5, 0) ∪ (2, 2.5))`, `U(1, 2)`: the outer groups are
    /// completely separated while each is stochastically comparable with
    /// the middle one.
    pub fn three_group(q: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::invalid("q must lie in [0, 1/2]"));
        }
        Self::new(
            vec![1.0, 2.0, 3.0],
            vec![q, 1.0 - 2.0 * q, q],
            vec![vec![(0.0, 1.0)], vec![(-0.5, 0.0), (2.0, 2.5)], vec![(1.0, 2.0)]],
        )
    }

    fn piece_weights(&self, g: usize) -> Vec<f64> {
        let total: f64 = self.pieces[g].iter().map(|(lo, hi)| hi - lo).sum();
        self.pieces[g].iter().map(|(lo, hi)| (hi - lo) / total).collect()
    }

    /// `Ψ` between the conditionals of groups `i` and `j` (no atoms, so
    /// `Ψ = P(Z_i < Z_j)`).
    fn psi(&self, i: usize, j: usize) -> f64 {
        let wi = self.piece_weights(i);
        let wj = self.piece_weights(j);
        let mut psi = 0.0;
        for (&(a0, a1), &u) in self.pieces[i].iter().zip(&wi) {
            for (&(b0, b1), &v) in self.pieces[j].iter().zip(&wj) {
                psi += u * v * uniform_less(a0, a1, b0, b1);
            }
        }
        psi
    }
}

/// `P(A < B)` for independent `A ~ U(a0, a1)`, `B ~ U(b0, b1)`, computed as
/// the average of the cdf of `A` over `[b0, b1]`.
fn uniform_less(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    let mut integral = 0.0;
    let (lo, hi) = (b0.max(a0), b1.min(a1));
    if lo < hi {
        integral += ((hi - a0).powi(2) - (lo - a0).powi(2)) / (2.0 * (a1 - a0));
    }
    let above = b0.max(a1);
    if above < b1 {
        integral += b1 - above;
    }
    integral / (b1 - b0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClosedFormModel {
    /// `P(X=1) = q`, `Y|X=1 ~ N(mu1, var1)`, `Y|X=2 ~ N(mu2, var2)`.
    BfNormal { mu1: f64, var1: f64, mu2: f64, var2: f64, q: f64 },
    /// `(X, Y) ~ N(0, cov)` with the response in the last coordinate.
    MvNormal { cov: Vec<Vec<f64>> },
    /// `Y|X=1 ~ U[0, 1]`, `Y|X=2 ~ U[delta, 1 + delta]`.
    UniformShift { delta: f64, q: f64 },
    /// `Y|X=1 ~ B(p1)`, `Y|X=2 ~ B(p2)`.
    BernoulliPair { p1: f64, p2: f64, q: f64 },
    /// `Y|X=1 ~ Exp(rate1)`, `Y|X=2 ~ Exp(rate2)`.
    ExponentialPair { rate1: f64, rate2: f64, q: f64 },
    /// Marshall–Olkin copula with parameters `(1, beta)`.
    MarshallOlkin { beta: f64 },
    /// Fréchet copula `alpha·M + beta·W + (1 - alpha - beta)·Π`.
    Frechet { alpha: f64, beta: f64 },
    /// `(p + 1)`-variate EFGM copula with only the top-order term,
    /// response in the last coordinate.
    Efgm { alpha: f64, p: usize },
    FinitePmf(FinitePmf),
    PiecewiseUniform(PiecewiseUniformGroups),
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl ClosedFormModel {
    /// Bivariate standard normal with correlation `rho`.
    pub fn bivariate_normal(rho: f64) -> Self {
        ClosedFormModel::MvNormal {
            cov: vec![vec![1.0, rho], vec![rho, 1.0]],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClosedFormModel::BfNormal { .. } => "bf_normal",
            ClosedFormModel::MvNormal { .. } => "mv_normal",
            ClosedFormModel::UniformShift { .. } => "uniform_shift",
            ClosedFormModel::BernoulliPair { .. } => "bernoulli_pair",
            ClosedFormModel::ExponentialPair { .. } => "exponential_pair",
            ClosedFormModel::MarshallOlkin { .. } => "marshall_olkin",
            ClosedFormModel::Frechet { .. } => "frechet",
            ClosedFormModel::Efgm { .. } => "efgm",
            ClosedFormModel::FinitePmf(_) => "finite_pmf",
            ClosedFormModel::PiecewiseUniform(_) => "piecewise_uniform",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClosedFormModel::BfNormal { mu1, var1, mu2, var2, q } => {
                check(mu1.is_finite() && mu2.is_finite(), "means must be finite")?;
                check(*var1 > 0.0 && *var2 > 0.0 && var1.is_finite() && var2.is_finite(), "variances must be positive")?;
                check(*q > 0.0 && *q < 1.0, "q must lie in (0, 1)")
            }
            ClosedFormModel::MvNormal { cov } => mvn_parts(cov).map(|_| ()),
            ClosedFormModel::UniformShift { delta, q } => {
                check(unit_interval(*delta), "delta must lie in [0, 1]")?;
                check(*q > 0.0 && *q < 1.0, "q must lie in (0, 1)")
            }
            ClosedFormModel::BernoulliPair { p1, p2, q } => {
                check(unit_interval(*p1) && unit_interval(*p2), "p1, p2 must lie in [0, 1]")?;
                check(*q > 0.0 && *q < 1.0, "q must lie in (0, 1)")
            }
            ClosedFormModel::ExponentialPair { rate1, rate2, q } => {
                check(*rate1 > 0.0 && *rate2 > 0.0 && rate1.is_finite() && rate2.is_finite(), "rates must be positive")?;
                check(*q > 0.0 && *q < 1.0, "q must lie in (0, 1)")
            }
            ClosedFormModel::MarshallOlkin { beta } => check(unit_interval(*beta), "beta must lie in [0, 1]"),
            ClosedFormModel::Frechet { alpha, beta } => check(
                unit_interval(*alpha) && unit_interval(*beta) && alpha + beta <= 1.0,
                "alpha, beta must lie in [0, 1] with alpha + beta <= 1",
            ),
            ClosedFormModel::Efgm { alpha, p } => {
                check((-1.0..=1.0).contains(alpha), "alpha must lie in [-1, 1]")?;
                check(*p >= 1, "p must be at least 1")
            }
            ClosedFormModel::FinitePmf(t) => {
                check(t.x_marginal().iter().filter(|&&q| q > 0.0).count() >= 2, "need at least two x atoms with positive mass")
            }
            ClosedFormModel::PiecewiseUniform(g) => {
                check(g.weights.iter().filter(|&&q| q > 0.0).count() >= 2, "need at least two groups with positive mass")
            }
        }
    }

    /// Number of predictor coordinates of samples.
    pub fn predictor_dim(&self) -> usize {
        match self {
            ClosedFormModel::MvNormal { cov } => cov.len().saturating_sub(1),
            ClosedFormModel::Efgm { p, .. } => *p,
            _ => 1,
        }
    }
}

/// `(Cholesky factor of Σ, ρ²)` for a positive definite `(p+1) × (p+1)`
/// covariance with the response last.
fn mvn_parts(cov: &[Vec<f64>]) -> Result<(DMatrix<f64>, f64)> {
    let d = cov.len();
    if d < 2 || cov.iter().any(|row| row.len() != d) {
        return Err(Error::invalid("covariance must be square of size at least 2"));
    }
    let s = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
    if (0..d).any(|i| (0..d).any(|j| s[(i, j)] != s[(j, i)] || !s[(i, j)].is_finite())) {
        return Err(Error::invalid("covariance must be finite and symmetric"));
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("covariance must be positive definite"))?;
    let p = d - 1;
    let s11 = s.view((0, 0), (p, p)).into_owned();
    let s12: DVector<f64> = s.view((0, p), (p, 1)).column(0).into_owned();
    let solved = s11
        .cholesky()
        .expect("principal submatrix of a positive definite matrix")
        .solve(&s12);
    let rho_sq = s12.dot(&solved) / s[(p, p)];
    Ok((chol.l(), rho_sq))
}

/// Exact `Λ(Y|X)` for the model.
pub fn lambda_exact(model: &ClosedFormModel) -> Result<f64> {
    model.validate()?;
    Ok(match model {
        ClosedFormModel::BfNormal { mu1, var1, mu2, var2, .. } => {
            let z = (mu1 - mu2) / (var1 + var2).sqrt();
            (2.0 * std_normal_cdf(z) - 1.0).powi(2)
        }
        ClosedFormModel::MvNormal { cov } => {
            let (_, rho_sq) = mvn_parts(cov)?;
            std::f64::consts::FRAC_2_PI * rho_sq.asin()
        }
        ClosedFormModel::UniformShift { delta, .. } => (delta * (2.0 - delta)).powi(2),
        ClosedFormModel::BernoulliPair { p1, p2, .. } => (p2 - p1).powi(2),
        ClosedFormModel::ExponentialPair { rate1, rate2, .. } => ((rate2 - rate1) / (rate1 + rate2)).powi(2),
        ClosedFormModel::MarshallOlkin { beta } => beta / (2.0 - beta),
        ClosedFormModel::Frechet { alpha, beta } => {
            (alpha - beta).powi(2) * ((alpha + beta).powi(2) + 2.0) / 3.0
        }
        ClosedFormModel::Efgm { alpha, p } => 2.0 * alpha * alpha / 3f64.powi(*p as i32 + 2),
        ClosedFormModel::FinitePmf(t) => lambda_finite_pmf(t)?,
        ClosedFormModel::PiecewiseUniform(g) => {
            let active: Vec<usize> = (0..g.weights.len()).filter(|&i| g.weights[i] > 0.0).collect();
            discrete_lambda(&active.iter().map(|&i| g.weights[i]).collect::<Vec<_>>(), |a, b| {
                g.psi(active[a], active[b])
            })
        }
    })
}

/// `2 Σ_{i<j} q_i q_j (2 Ψ_ij - 1)² / (1 - Σ q_i²)`.
fn discrete_lambda(q: &[f64], psi: impl Fn(usize, usize) -> f64) -> f64 {
    let mut num = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            num += q[i] * q[j] * (2.0 * psi(i, j) - 1.0).powi(2);
        }
    }
    2.0 * num / (1.0 - q.iter().map(|v| v * v).sum::<f64>())
}

/// Exact `Λ(Y|X)` of a finite joint pmf with `α = 1 - Σ q_i²`, evaluated
/// in rational arithmetic on the binary values of the table and rounded once.
pub fn lambda_finite_pmf(table: &FinitePmf) -> Result<f64> {
    let (q, conds) = table.exact_conditionals();
    if q.len() < 2 {
        return Err(Error::SingleGroup(q.len()));
    }
    let two = Rational::from_integer(2.into());
    let mut num = Rational::zero();
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            let d = &two * psi_discrete(&conds[i], &conds[j]) - Rational::one();
            num += &q[i] * &q[j] * &d * &d;
        }
    }
    // masses are renormalised by their exact total T: α = (T² - Σ q²) / T²
    let total: Rational = q.iter().sum();
    let alpha = &total * &total - q.iter().map(|v| v * v).sum::<Rational>();
    Ok((two * num / alpha).to_f64().expect("finite ratio"))
}

/// Exact relative effect `Ψ(P^{Y|X=x1}, P^{Y|X=x2})` of a two-group model.
pub fn psi_exact(model: &ClosedFormModel) -> Result<f64> {
    model.validate()?;
    match model {
        ClosedFormModel::BfNormal { mu1, var1, mu2, var2, .. } => {
            Ok(std_normal_cdf((mu2 - mu1) / (var1 + var2).sqrt()))
        }
        ClosedFormModel::UniformShift { delta, .. } => Ok(1.0 - 0.5 * (1.0 - delta).powi(2)),
        ClosedFormModel::BernoulliPair { p1, p2, .. } => {
            Ok((1.0 - p1) * p2 + 0.5 * (p1 * p2 + (1.0 - p1) * (1.0 - p2)))
        }
        ClosedFormModel::ExponentialPair { rate1, rate2, .. } => Ok(rate1 / (rate1 + rate2)),
        ClosedFormModel::FinitePmf(t) => {
            let (q, conds) = t.exact_conditionals();
            if q.len() != 2 {
                return Err(Error::NotTwoGroup("finite pmf needs exactly two x atoms"));
            }
            Ok(psi_discrete(&conds[0], &conds[1]).to_f64().expect("finite ratio"))
        }
        ClosedFormModel::PiecewiseUniform(g) => {
            let active: Vec<usize> = (0..g.weights.len()).filter(|&i| g.weights[i] > 0.0).collect();
            if active.len() != 2 {
                return Err(Error::NotTwoGroup("piecewise-uniform model needs exactly two groups"));
            }
            Ok(g.psi(active[0], active[1]))
        }
        ClosedFormModel::MvNormal { .. } => Err(Error::NotTwoGroup("multivariate normal")),
        ClosedFormModel::MarshallOlkin { .. } => Err(Error::NotTwoGroup("Marshall-Olkin copula")),
        ClosedFormModel::Frechet { .. } => Err(Error::NotTwoGroup("Fréchet copula")),
        ClosedFormModel::Efgm { .. } => Err(Error::NotTwoGroup("EFGM copula")),
    }
}

/// The model with its two groups exchanged (two-group families only).
pub fn swap_groups(model: &ClosedFormModel) -> Result<ClosedFormModel> {
    Ok(match model.clone() {
        ClosedFormModel::BfNormal { mu1, var1, mu2, var2, q } => ClosedFormModel::BfNormal {
            mu1: mu2,
            var1: var2,
            mu2: mu1,
            var2: var1,
            q: 1.0 - q,
        },
        ClosedFormModel::BernoulliPair { p1, p2, q } => ClosedFormModel::BernoulliPair { p1: p2, p2: p1, q: 1.0 - q },
        ClosedFormModel::ExponentialPair { rate1, rate2, q } => ClosedFormModel::ExponentialPair {
            rate1: rate2,
            rate2: rate1,
            q: 1.0 - q,
        },
        ClosedFormModel::FinitePmf(t) => ClosedFormModel::FinitePmf(FinitePmf {
            y_support: t.y_support,
            x_support: t.x_support.into_iter().rev().collect(),
            probs: t.probs.into_iter().map(|row| row.into_iter().rev().collect()).collect(),
        }),
        ClosedFormModel::PiecewiseUniform(g) => ClosedFormModel::PiecewiseUniform(PiecewiseUniformGroups {
            x_support: g.x_support.into_iter().rev().collect(),
            weights: g.weights.into_iter().rev().collect(),
            pieces: g.pieces.into_iter().rev().collect(),
        }),
        ClosedFormModel::UniformShift { delta, q } => {
            ClosedFormModel::PiecewiseUniform(PiecewiseUniformGroups::new(
                vec![1.0, 2.0],
                vec![1.0 - q, q],
                vec![vec![(delta, 1.0 + delta)], vec![(0.0, 1.0)]],
            )?)
        }
        other => return Err(Error::NotTwoGroup(other.name())),
    })
}

const SAMPLE_TAG: u64 = 0x5A11;

/// `n` i.i.d. draws from the model.
pub fn sample(model: &ClosedFormModel, n: usize, seed: u64) -> Result<ObservationSet> {
    model.validate()?;
    if n < 2 {
        return Err(Error::TooFewObservations { required: 2, got: n });
    }
    let mut r = rng::stream(rng::derive_seed(seed, &[SAMPLE_TAG]));
    let p = model.predictor_dim();
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    let group = |r: &mut rand_chacha::ChaCha8Rng, q: f64| if r.random::<f64>() < q { 1.0 } else { 2.0 };
    match model {
        ClosedFormModel::BfNormal { mu1, var1, mu2, var2, q } => {
            let d1 = Normal::new(*mu1, var1.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
            let d2 = Normal::new(*mu2, var2.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
            for _ in 0..n {
                let g = group(&mut r, *q);
                x.push(g);
                y.push(if g == 1.0 { d1.sample(&mut r) } else { d2.sample(&mut r) });
            }
        }
        ClosedFormModel::MvNormal { cov } => {
            let (l, _) = mvn_parts(cov)?;
            let d = p + 1;
            let mut z = DVector::zeros(d);
            for _ in 0..n {
                for i in 0..d {
                    z[i] = r.sample::<f64, _>(rand_distr::StandardNormal);
                }
                let v = &l * &z;
                x.extend(v.iter().take(p));
                y.push(v[p]);
            }
        }
        ClosedFormModel::UniformShift { delta, q } => {
            for _ in 0..n {
                let g = group(&mut r, *q);
                x.push(g);
                let u: f64 = r.random();
                y.push(if g == 1.0 { u } else { u + delta });
            }
        }
        ClosedFormModel::BernoulliPair { p1, p2, q } => {
            for _ in 0..n {
                let g = group(&mut r, *q);
                x.push(g);
                let prob = if g == 1.0 { *p1 } else { *p2 };
                y.push(if r.random::<f64>() < prob { 1.0 } else { 0.0 });
            }
        }
        ClosedFormModel::ExponentialPair { rate1, rate2, q } => {
            let d1 = Exp::new(*rate1).map_err(|e| Error::invalid(e.to_string()))?;
            let d2 = Exp::new(*rate2).map_err(|e| Error::invalid(e.to_string()))?;
            for _ in 0..n {
                let g = group(&mut r, *q);
                x.push(g);
                y.push(if g == 1.0 { d1.sample(&mut r) } else { d2.sample(&mut r) });
            }
        }
        ClosedFormModel::MarshallOlkin { beta } => {
            // X = Z12, Y = min(Z2, Z12) with Z12 ~ Exp(1), Z2 ~ Exp((1 - beta) / beta);
            // survival transforms give the copula with parameters (1, beta).
            let unit = Exp::new(1.0).expect("unit rate");
            for _ in 0..n {
                if *beta == 0.0 {
                    x.push(r.random::<f64>());
                    y.push(r.random::<f64>());
                    continue;
                }
                let z12 = unit.sample(&mut r);
                let z2 = if *beta == 1.0 {
                    f64::INFINITY
                } else {
                    unit.sample(&mut r) * beta / (1.0 - beta)
                };
                x.push((-z12).exp());
                y.push((-z2.min(z12) / beta).exp());
            }
        }
        ClosedFormModel::Frechet { alpha, beta } => {
            for _ in 0..n {
                let u: f64 = r.random();
                let w: f64 = r.random();
                let v = if w < *alpha {
                    u
                } else if w < alpha + beta {
                    1.0 - u
                } else {
                    r.random()
                };
                x.push(u);
                y.push(v);
            }
        }
        ClosedFormModel::Efgm { alpha, p } => {
            for _ in 0..n {
                let mut a = *alpha;
                for _ in 0..*p {
                    let u: f64 = r.random();
                    x.push(u);
                    a *= 1.0 - 2.0 * u;
                }
                y.push(efgm_conditional_quantile(a, r.random()));
            }
        }
        ClosedFormModel::FinitePmf(t) => {
            let cells: Vec<(usize, usize)> = (0..t.y_support.len())
                .flat_map(|i| (0..t.x_support.len()).map(move |j| (i, j)))
                .collect();
            let w = WeightedIndex::new(cells.iter().map(|&(i, j)| t.probs[i][j]))
                .map_err(|e| Error::invalid(e.to_string()))?;
            for _ in 0..n {
                let (i, j) = cells[w.sample(&mut r)];
                x.push(t.x_support[j]);
                y.push(t.y_support[i]);
            }
        }
        ClosedFormModel::PiecewiseUniform(g) => {
            let groups = WeightedIndex::new(&g.weights).map_err(|e| Error::invalid(e.to_string()))?;
            let pieces: Vec<WeightedIndex<f64>> = (0..g.pieces.len())
                .map(|i| WeightedIndex::new(g.piece_weights(i)).expect("positive lengths"))
                .collect();
            for _ in 0..n {
                let i = groups.sample(&mut r);
                let (lo, hi) = g.pieces[i][pieces[i].sample(&mut r)];
                x.push(g.x_support[i]);
                y.push(lo + (hi - lo) * r.random::<f64>());
            }
        }
    }
    ObservationSet::from_row_major(x, p, y)
}

/// Inverse of `v ↦ v (1 + a (1 - v))`, the conditional cdf of a bivariate
/// EFGM copula with parameter `a`.
fn efgm_conditional_quantile(a: f64, w: f64) -> f64 {
    if a.abs() < 1e-12 {
        return w;
    }
    let b = 1.0 + a;
    // numerically stable root of a v² - b v + w = 0 in [0, 1]
    2.0 * w / (b + (b * b - 4.0 * a * w).sqrt())
}
