//! The rank-two parametrization `P = J + b a^T` of `SUM_NSQ` matrices whose
//! row and column sums all equal `n`.
//!
//! Entry `(i, j)` of the matrix is `1 + b_i a_j`, so the diagonal holds
//! `1 + a_i b_i`. With `sum a = sum b = 0` every margin is exactly `n`. The
//! map `(a, b) -> (c a, b / c)` leaves the matrix unchanged for any `c != 0`;
//! [`RankTwoPoint::canonicalize`] fixes that gauge together with the row and
//! column order.
//!
//! Residuals are written for the symmetric weights `(s, t)` through the ratio
//! `rho = s / t`. The log-likelihood divided by `t` is
//! `sum_ij ln(1 + a_i b_j) + (rho - 1) sum_i ln(1 + a_i b_i)`, and
//! [`RankTwoPoint::stationarity_residual`] is exactly its gradient.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Convention, ExactMatrix, ProbMatrix};
use crate::rational::{self, parse_rational};

/// Points with `min(1 + a_i b_j)` at or below this are treated as infeasible.
pub const FEASIBILITY_MARGIN: f64 = 1e-14;
const ZERO_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub struct RankTwoPoint {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<PointRepr> for RankTwoPoint {
    type Error = Error;
    fn try_from(r: PointRepr) -> Result<Self> {
        if r.a.len() != r.n {
            return Err(Error::DimensionMismatch { expected: r.n, found: r.a.len() });
        }
        RankTwoPoint::new(r.a, r.b)
    }
}

impl From<RankTwoPoint> for PointRepr {
    fn from(p: RankTwoPoint) -> Self {
        PointRepr { n: p.a.len(), a: p.a, b: p.b }
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn min_product_entry(a: &[f64], b: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for &ai in a {
        for &bj in b {
            m = m.min(1.0 + ai * bj);
        }
    }
    m
}

impl RankTwoPoint {
    /// Validates lengths, the zero-sum constraints and interior feasibility.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidArgument("empty point".into()));
        }
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        for (name, v) in [("a", &a), ("b", &b)] {
            let sum: f64 = v.iter().sum();
            if sum.abs() > ZERO_SUM_TOL * norm2(v).max(1.0) {
                return Err(Error::InvalidArgument(format!("sum of {name} is {sum:e}, expected 0")));
            }
        }
        let min_entry = min_product_entry(&a, &b);
        if min_entry <= FEASIBILITY_MARGIN {
            return Err(Error::Infeasible { min_entry });
        }
        Ok(RankTwoPoint { a, b })
    }

    /// Subtracts the means of `a` and `b` before validating.
    pub fn projected(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        for v in [&mut a, &mut b] {
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        Self::new(a, b)
    }

    pub fn zero(n: usize) -> Self {
        RankTwoPoint { a: vec![0.0; n], b: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        norm_inf(&self.a) * norm_inf(&self.b) < 1e-18 || (norm_inf(&self.a) == 0.0 && norm_inf(&self.b) == 0.0)
    }

    pub fn min_entry(&self) -> f64 {
        min_product_entry(&self.a, &self.b)
    }

    /// `(c a, b / c)`: the same matrix in another gauge.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("gauge factor {c}")));
        }
        Ok(RankTwoPoint {
            a: self.a.iter().map(|x| x * c).collect(),
            b: self.b.iter().map(|x| x / c).collect(),
        })
    }

    /// Simultaneous reindexing: new index `k` holds old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        RankTwoPoint {
            a: perm.iter().map(|&k| self.a[k]).collect(),
            b: perm.iter().map(|&k| self.b[k]).collect(),
        }
    }

    pub fn to_matrix(&self) -> ProbMatrix {
        let n = self.n();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(1.0 + self.b[i] * self.a[j]);
            }
        }
        ProbMatrix::from_flat(n, entries, Convention::SumNsq)
            .expect("feasible zero-sum point yields a SUM_NSQ matrix")
    }

    /// Recovers `(a, b)` from a positive `SUM_NSQ` matrix with margins `n` and
    /// `rank(P - J) <= 1`.
    ///
    /// The gauge is the balanced one from the singular value decomposition
    /// (`|a| = |b|`), with the sign chosen so the largest-magnitude entry of
    /// `a` is positive. Rows and columns are not reordered, so
    /// `to_matrix(from_matrix(P))` reproduces `P` itself.
    pub fn from_matrix(p: &ProbMatrix) -> Result<Self> {
        let p = p.convert(Convention::SumNsq);
        let n = p.n();
        let nf = n as f64;
        if p.min_entry() <= 0.0 {
            return Err(Error::InvalidMatrix("entries must be positive".into()));
        }
        let deviation = p
            .row_sums()
            .into_iter()
            .chain(p.col_sums())
            .map(|s| (s - nf).abs())
            .fold(0.0, f64::max);
        if deviation > 1e-9 {
            return Err(Error::UnequalMargins { deviation });
        }
        let m = DMatrix::from_fn(n, n, |i, j| p.get(i, j) - 1.0);
        // singular values only: nalgebra's singular vectors are unreliable
        // when several singular values are exactly zero
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let (s1, s2) = (sv[0], sv.get(1).copied().unwrap_or(0.0));
        if s1 < 1e-12 {
            return Ok(Self::zero(n));
        }
        if s2 > 1e-8 * s1 {
            return Err(Error::NotRankTwo { ratio: s2 / s1 });
        }
        // pivoted rank-one factorization m = b a^T
        let (pi, pj) = m.iamax_full();
        let pivot = m[(pi, pj)];
        let mut b: Vec<f64> = (0..n).map(|i| m[(i, pj)]).collect();
        let mut a: Vec<f64> = (0..n).map(|j| m[(pi, j)] / pivot).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = (norm(&b) / norm(&a)).sqrt();
        a.iter_mut().for_each(|x| *x *= c);
        b.iter_mut().for_each(|x| *x /= c);
        let lead = a
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (k, x)| if x.abs() > best.1.abs() + 1e-12 { (k, *x) } else { best })
            .1;
        if lead < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            b.iter_mut().for_each(|x| *x = -*x);
        }
        Self::projected(a, b)
    }

    fn check_feasible(&self) -> Result<()> {
        let min_entry = self.min_entry();
        if min_entry <= FEASIBILITY_MARGIN {
            return Err(Error::Infeasible { min_entry });
        }
        Ok(())
    }

    /// Gradient of `l / t`: component `i < n` is
    /// `sum_j b_j / (1 + a_i b_j) + (rho - 1) b_i / (1 + a_i b_i)`, the
    /// remaining `n` components are the same with the roles of `a` and `b`
    /// exchanged.
    pub fn stationarity_residual(&self, rho: f64) -> Result<Vec<f64>> {
        self.check_feasible()?;
        Ok(stationarity_residual_raw(&self.a, &self.b, rho))
    }

    /// Row form `sum_j 1 / (1 + a_i b_j) + (rho - 1) / (1 + a_i b_i) - (n + rho - 1)`,
    /// columns likewise. Equals `-a_i` times the plain residual component.
    pub fn reciprocal_residual(&self, rho: f64) -> Result<Vec<f64>> {
        self.check_feasible()?;
        let n = self.n();
        let rhs = n as f64 + rho - 1.0;
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let ai = self.a[i];
            let s: f64 = self.b.iter().map(|bj| 1.0 / (1.0 + ai * bj)).sum();
            out.push(s + (rho - 1.0) / (1.0 + ai * self.b[i]) - rhs);
        }
        for j in 0..n {
            let bj = self.b[j];
            let s: f64 = self.a.iter().map(|ai| 1.0 / (1.0 + ai * bj)).sum();
            out.push(s + (rho - 1.0) / (1.0 + self.a[j] * bj) - rhs);
        }
        Ok(out)
    }

    /// `sum_ij w_ij ln p_ij` of the `SUM_NSQ` matrix under symmetric weights.
    pub fn log_likelihood(&self, s: f64, t: f64) -> f64 {
        point_log_likelihood(&self.a, &self.b, s, t)
    }

    /// Sorted, gauge-fixed, sign-normalized representative.
    pub fn canonicalize(&self) -> Result<Self> {
        self.canonicalize_with_perm().map(|(p, _)| p)
    }

    /// Like [`canonicalize`](Self::canonicalize), also returning the
    /// permutation: index `k` of the result corresponds to `perm[k]` of `self`.
    ///
    /// 1. sort by `a` descending (ties: `b` descending, then index);
    /// 2. rescale `a -> c a`, `b -> b / c` with `c = sqrt(b_1 / a_1)`, making
    ///    `a_1 = b_1 = sqrt(a_1 b_1)`;
    /// 3. if `a_2 < 0`, map `a -> (-a_n, ..., -a_1)` and `b` likewise, and
    ///    re-fix the gauge.
    pub fn canonicalize_with_perm(&self) -> Result<(Self, Vec<usize>)> {
        self.check_feasible()?;
        if norm_inf(&self.a) == 0.0 || norm_inf(&self.b) == 0.0 {
            return Err(Error::ZeroPoint);
        }
        let n = self.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&i, &j| {
            self.a[j]
                .partial_cmp(&self.a[i])
                .unwrap_or(Ordering::Equal)
                .then(self.b[j].partial_cmp(&self.b[i]).unwrap_or(Ordering::Equal))
                .then(i.cmp(&j))
        });
        let sorted = self.permuted(&perm);
        let mut pt = gauge_head(&sorted)?;
        let tol = 1e-12 * norm_inf(&pt.a);
        if n >= 2 && pt.a[1] < -tol {
            let flipped = RankTwoPoint {
                a: pt.a.iter().rev().map(|x| -x).collect(),
                b: pt.b.iter().rev().map(|x| -x).collect(),
            };
            pt = gauge_head(&flipped)?;
            perm.reverse();
        }
        Ok((pt, perm))
    }

    /// `L(P) - L(P')` where `P'` exchanges `b_i` and `b_j` (rows `i` and `j`),
    /// under weights `(s, t)`.
    pub fn swap_delta(&self, i: usize, j: usize, s: f64, t: f64) -> Result<f64> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!("index out of range for n = {n}")));
        }
        self.check_feasible()?;
        if i == j {
            return Ok(0.0);
        }
        let mut b = self.b.clone();
        b.swap(i, j);
        let swapped = RankTwoPoint { a: self.a.clone(), b };
        swapped.check_feasible()?;
        let l0 = self.log_likelihood(s, t);
        let l1 = swapped.log_likelihood(s, t);
        Ok(l1.exp() * (l0 - l1).exp_m1())
    }
}

fn gauge_head(p: &RankTwoPoint) -> Result<RankTwoPoint> {
    let product = p.a[0] * p.b[0];
    if product <= 0.0 {
        return Err(Error::OrderHypothesis { product });
    }
    let c = (p.b[0] / p.a[0]).abs().sqrt() * p.a[0].signum();
    let mut out = p.rescaled(c)?;
    let root = product.sqrt();
    out.a[0] = root;
    out.b[0] = root;
    Ok(out)
}

pub(crate) fn stationarity_residual_raw(a: &[f64], b: &[f64], rho: f64) -> Vec<f64> {
    let n = a.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let ai = a[i];
        let s: f64 = b.iter().map(|bj| bj / (1.0 + ai * bj)).sum();
        out.push(s + (rho - 1.0) * b[i] / (1.0 + ai * b[i]));
    }
    for j in 0..n {
        let bj = b[j];
        let s: f64 = a.iter().map(|ai| ai / (1.0 + ai * bj)).sum();
        out.push(s + (rho - 1.0) * a[j] / (1.0 + a[j] * bj));
    }
    out
}

pub(crate) fn point_log_likelihood(a: &[f64], b: &[f64], s: f64, t: f64) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for (i, bi) in b.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            let v = (1.0 + bi * aj).ln();
            if i == j {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    s * diag + t * off
}

/// Alternately rescales rows then columns of a positive matrix to sum `n`.
///
/// Stops once every margin is within `1e-12` of `n`; a matrix that already
/// satisfies this is returned unchanged. Rank is preserved (diagonal scaling).
pub fn normalize_margins(p: &ProbMatrix) -> Result<ProbMatrix> {
    const MAX_SWEEPS: usize = 10_000;
    const MARGIN_TOL: f64 = 1e-12;
    let p = p.convert(Convention::SumNsq);
    if p.min_entry() <= 0.0 {
        return Err(Error::InvalidMatrix("margin normalization needs positive entries".into()));
    }
    let n = p.n();
    let nf = n as f64;
    let margin_error = |m: &ProbMatrix| {
        m.row_sums()
            .into_iter()
            .chain(m.col_sums())
            .map(|s| (s - nf).abs())
            .fold(0.0, f64::max)
    };
    let mut entries = p.entries().to_vec();
    let mut current = p;
    for _ in 0..MAX_SWEEPS {
        if margin_error(&current) <= MARGIN_TOL {
            return Ok(current);
        }
        for row in entries.chunks_mut(n) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x *= nf / s);
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| entries[i * n + j]).sum();
            (0..n).for_each(|i| entries[i * n + j] *= nf / s);
        }
        current = ProbMatrix::from_flat(n, entries.clone(), Convention::SumNsq)?;
    }
    let error = margin_error(&current);
    if error <= MARGIN_TOL {
        Ok(current)
    } else {
        Err(Error::NonConvergence { sweeps: MAX_SWEEPS, error })
    }
}

/// A rank-two point with exactly rational products `a_i b_j`.
///
/// Coordinates are `a = alpha * a_coef`, `b = alpha * b_coef` with rational
/// coefficients and `alpha^2` rational, so every matrix entry
/// `1 + alpha^2 b_coef_i a_coef_j` is rational even when `alpha` is not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactRankTwo {
    alpha_sq: BigRational,
    a_coef: Vec<BigRational>,
    b_coef: Vec<BigRational>,
}

impl ExactRankTwo {
    pub fn new(alpha_sq: BigRational, a_coef: Vec<BigRational>, b_coef: Vec<BigRational>) -> Result<Self> {
        if a_coef.is_empty() || a_coef.len() != b_coef.len() {
            return Err(Error::DimensionMismatch { expected: a_coef.len(), found: b_coef.len() });
        }
        if alpha_sq.is_negative() {
            return Err(Error::InvalidArgument(format!("alpha^2 = {alpha_sq} is negative")));
        }
        for v in [&a_coef, &b_coef] {
            if !v.iter().sum::<BigRational>().is_zero() {
                return Err(Error::InvalidArgument("coefficients must sum to zero".into()));
            }
        }
        let pt = ExactRankTwo { alpha_sq, a_coef, b_coef };
        for i in 0..pt.n() {
            for j in 0..pt.n() {
                if !(BigRational::one() + pt.product(i, j)).is_positive() {
                    return Err(Error::Infeasible { min_entry: rational::to_f64(&(BigRational::one() + pt.product(i, j))) });
                }
            }
        }
        Ok(pt)
    }

    /// Point with `a = b = alpha * c`, where `c` follows a sign string such as
    /// `"++--"`: positive slots hold 1, zeros 0, negative slots the common
    /// value that makes the coefficients sum to zero.
    pub fn from_pattern(pattern: &str, alpha_sq: BigRational) -> Result<Self> {
        let coef = pattern_coefficients(pattern)?;
        Self::new(alpha_sq, coef.clone(), coef)
    }

    pub fn n(&self) -> usize {
        self.a_coef.len()
    }

    pub fn alpha_sq(&self) -> &BigRational {
        &self.alpha_sq
    }

    pub fn a_coef(&self) -> &[BigRational] {
        &self.a_coef
    }

    pub fn b_coef(&self) -> &[BigRational] {
        &self.b_coef
    }

    /// `a_i b_j` exactly.
    pub fn product(&self, i: usize, j: usize) -> BigRational {
        &self.alpha_sq * &self.a_coef[i] * &self.b_coef[j]
    }

    pub fn to_matrix(&self) -> ExactMatrix {
        let n = self.n();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| BigRational::one() + self.product(j, i)).collect())
            .collect();
        ExactMatrix::from_rows(rows, Convention::SumNsq).expect("feasible exact point")
    }

    pub fn to_point(&self) -> RankTwoPoint {
        let alpha = rational::to_f64(&self.alpha_sq).sqrt();
        let a: Vec<f64> = self.a_coef.iter().map(|c| alpha * rational::to_f64(c)).collect();
        let b: Vec<f64> = self.b_coef.iter().map(|c| alpha * rational::to_f64(c)).collect();
        RankTwoPoint::projected(a, b).expect("exact point is feasible")
    }

    /// Reciprocal residual in exact arithmetic for rational `rho`.
    pub fn reciprocal_residual(&self, rho: &BigRational) -> Vec<BigRational> {
        let n = self.n();
        let one = BigRational::one();
        let shift = rho - &one;
        let rhs = rational::from_int(n as i64) + &shift;
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut acc = (0..n).map(|j| (&one + self.product(i, j)).recip()).sum::<BigRational>();
            acc += &shift / (&one + self.product(i, i));
            out.push(acc - &rhs);
        }
        for j in 0..n {
            let mut acc = (0..n).map(|i| (&one + self.product(i, j)).recip()).sum::<BigRational>();
            acc += &shift / (&one + self.product(j, j));
            out.push(acc - &rhs);
        }
        out
    }

    /// The sign string when `a = b` and the coefficients follow a pattern.
    pub fn pattern(&self) -> Option<String> {
        if self.a_coef != self.b_coef {
            return None;
        }
        let s: String = self
            .a_coef
            .iter()
            .map(|c| if c.is_positive() { '+' } else if c.is_negative() { '-' } else { '0' })
            .collect();
        (pattern_coefficients(&s).ok()? == self.a_coef).then_some(s)
    }
}

/// Coefficients for a sign string; errors on characters other than `+0-` or
/// when the signs cannot sum to zero.
pub fn pattern_coefficients(pattern: &str) -> Result<Vec<BigRational>> {
    let pos = pattern.chars().filter(|&c| c == '+').count();
    let neg = pattern.chars().filter(|&c| c == '-').count();
    if pos == 0 || neg == 0 || pattern.chars().any(|c| !matches!(c, '+' | '-' | '0')) {
        return Err(Error::Parse(format!("bad sign pattern {pattern:?}")));
    }
    let negv = -BigRational::new((pos as i64).into(), (neg as i64).into());
    Ok(pattern
        .chars()
        .map(|c| match c {
            '+' => BigRational::one(),
            '-' => negv.clone(),
            _ => BigRational::zero(),
        })
        .collect())
}

/// JSON forms: `{"n":4,"alpha_sq":"1/5","pattern":"++--"}` or explicit
/// rational coordinates `{"n":4,"a":["1/2",...],"b":[...]}` (optionally with
/// `alpha_sq`, in which case `a` and `b` are the coefficients).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExactPointFile {
    Symbolic {
        n: usize,
        alpha_sq: String,
        pattern: String,
    },
    Scaled {
        n: usize,
        alpha_sq: String,
        a: Vec<String>,
        b: Vec<String>,
    },
    Plain {
        n: usize,
        a: Vec<String>,
        b: Vec<String>,
    },
}

impl ExactPointFile {
    pub fn from_point(p: &ExactRankTwo) -> Self {
        let n = p.n();
        match p.pattern() {
            Some(pattern) => ExactPointFile::Symbolic { n, alpha_sq: p.alpha_sq.to_string(), pattern },
            None => ExactPointFile::Scaled {
                n,
                alpha_sq: p.alpha_sq.to_string(),
                a: p.a_coef.iter().map(ToString::to_string).collect(),
                b: p.b_coef.iter().map(ToString::to_string).collect(),
            },
        }
    }

    pub fn to_point(&self) -> Result<ExactRankTwo> {
        let parse_all = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        let (n, pt) = match self {
            ExactPointFile::Symbolic { n, alpha_sq, pattern } => {
                (*n, ExactRankTwo::from_pattern(pattern, parse_rational(alpha_sq)?)?)
            }
            ExactPointFile::Scaled { n, alpha_sq, a, b } => {
                (*n, ExactRankTwo::new(parse_rational(alpha_sq)?, parse_all(a)?, parse_all(b)?)?)
            }
            ExactPointFile::Plain { n, a, b } => (*n, ExactRankTwo::new(BigRational::one(), parse_all(a)?, parse_all(b)?)?),
        };
        if pt.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: pt.n() });
        }
        Ok(pt)
    }
}

/// Largest `|x|` in a residual vector, for reporting.
pub fn residual_norm(v: &[f64]) -> f64 {
    norm_inf(v)
}

/// Converts an exact residual to `f64` max-norm (diagnostics only).
pub fn exact_residual_norm(v: &[BigRational]) -> f64 {
    v.iter().map(|q| q.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood, WeightTable};

    fn p2_point() -> RankTwoPoint {
        let x = 1.0 / 5f64.sqrt();
        RankTwoPoint::new(vec![x, x, -x, -x], vec![x, x, -x, -x]).unwrap()
    }

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn zero_point_gives_ones_matrix() {
        assert!(RankTwoPoint::zero(4).to_matrix().entries().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn p2_and_p1_matrices() {
        let m = p2_point().to_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i < 2) == (j < 2) { 1.2 } else { 0.8 };
                assert!((m.get(i, j) - want).abs() < 1e-15);
            }
        }
        let al = 1.0 / 15f64.sqrt();
        let p1 = RankTwoPoint::new(vec![al, al, al, -3.0 * al], vec![al, al, al, -3.0 * al]).unwrap();
        let m = p1.to_matrix();
        assert!((m.get(0, 1) - 16.0 / 15.0).abs() < 1e-15);
        assert!((m.get(0, 3) - 0.8).abs() < 1e-15);
        assert!((m.get(3, 3) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn constructor_rejects_nonzero_sum_and_infeasible_points() {
        assert!(RankTwoPoint::new(vec![1.0, 0.0], vec![0.5, -0.5]).is_err());
        assert!(matches!(
            RankTwoPoint::new(vec![2.0, -2.0], vec![1.0, -1.0]),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn from_matrix_recovers_p2_and_j() {
        let pt = RankTwoPoint::from_matrix(&p2_point().to_matrix()).unwrap();
        let x = 1.0 / 5f64.sqrt();
        for k in 0..4 {
            assert!((pt.a()[k] - pt.b()[k]).abs() < 1e-12);
        }
        assert!((pt.a()[0] - x).abs() < 1e-12);
        let j = RankTwoPoint::from_matrix(&RankTwoPoint::zero(4).to_matrix()).unwrap();
        assert!(j.a().iter().chain(j.b()).all(|&v| v == 0.0));
    }

    #[test]
    fn from_matrix_rejects_rank_three_and_bad_margins() {
        // J + two independent rank-one perturbations with zero margins
        let u = [1.0, -1.0, 0.0, 0.0];
        let v = [0.0, 0.0, 1.0, -1.0];
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| 1.0 + 0.3 * u[i] * u[j] + 0.2 * v[i] * v[j]).collect())
            .collect();
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        assert!(matches!(RankTwoPoint::from_matrix(&p), Err(Error::NotRankTwo { .. })));

        let mut rows = vec![vec![1.0; 4]; 4];
        rows[0][0] = 1.5;
        rows[0][1] = 0.5;
        rows[1][1] = 1.5;
        rows[1][0] = 1.0;
        rows[1][2] = 0.5;
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        assert!(matches!(RankTwoPoint::from_matrix(&p), Err(Error::UnequalMargins { .. })));
    }

    #[test]
    fn residuals_vanish_at_zero_and_p2() {
        let z = RankTwoPoint::zero(4);
        for rho in [0.5, 2.0, 3.0] {
            assert!(z.stationarity_residual(rho).unwrap().iter().all(|&x| x == 0.0));
            assert!(z.reciprocal_residual(rho).unwrap().iter().all(|&x| x.abs() < 1e-15));
        }
        let r = p2_point().stationarity_residual(2.0).unwrap();
        assert!(residual_norm(&r) <= 1e-12);
    }

    #[test]
    fn perturbed_p2_is_not_stationary() {
        let x = 1.0 / 5f64.sqrt();
        let pt = RankTwoPoint::new(vec![x + 0.01, x, -x, -x - 0.01], vec![x, x, -x, -x]).unwrap();
        assert!(residual_norm(&pt.stationarity_residual(2.0).unwrap()) > 1e-3);
    }

    #[test]
    fn reciprocal_is_minus_a_times_plain() {
        let pt = RankTwoPoint::projected(vec![0.3, -0.1, 0.25, -0.45], vec![0.2, 0.1, -0.5, 0.2]).unwrap();
        let rho = 2.7;
        let plain = pt.stationarity_residual(rho).unwrap();
        let recip = pt.reciprocal_residual(rho).unwrap();
        for i in 0..4 {
            assert!((recip[i] + pt.a()[i] * plain[i]).abs() < 1e-14);
            assert!((recip[4 + i] + pt.b()[i] * plain[4 + i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_reciprocal_residuals_of_p2_and_p4() {
        let two = rational::from_int(2);
        let p2 = ExactRankTwo::from_pattern("++--", q("1/5")).unwrap();
        assert!(p2.reciprocal_residual(&two).iter().all(Zero::is_zero));
        let p4 = ExactRankTwo::from_pattern("+00-", q("1/3")).unwrap();
        assert!(p4.reciprocal_residual(&two).iter().all(Zero::is_zero));
        let off = ExactRankTwo::from_pattern("++--", q("1/4")).unwrap();
        assert!(!off.reciprocal_residual(&two).iter().all(Zero::is_zero));
    }

    #[test]
    fn canonicalize_gauge_example() {
        // (1, 0.5, -0.5, -1) and (2, 1, -1, -2) scaled into the feasible region
        let a = [1.0, 0.5, -0.5, -1.0].map(|x| 0.3 * x);
        let b = [2.0, 1.0, -1.0, -2.0].map(|x| 0.3 * x);
        let pt = RankTwoPoint::new(a.to_vec(), b.to_vec()).unwrap();
        let c = pt.canonicalize().unwrap();
        let r2 = 0.3 * 2f64.sqrt();
        let want = [r2, r2 / 2.0, -r2 / 2.0, -r2];
        for k in 0..4 {
            assert!((c.a()[k] - want[k]).abs() < 1e-14);
            assert!((c.b()[k] - want[k]).abs() < 1e-14);
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!((c.a()[i] * c.b()[j] - pt.a()[i] * pt.b()[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent_on_p2() {
        let c = p2_point().canonicalize().unwrap();
        assert_eq!(c, p2_point());
    }

    #[test]
    fn canonicalize_flips_negated_p1() {
        let al = 1.0 / 15f64.sqrt();
        let neg = vec![-al, -al, -al, 3.0 * al];
        let pt = RankTwoPoint::new(neg.clone(), neg).unwrap();
        let (c, perm) = pt.canonicalize_with_perm().unwrap();
        assert!(c.a()[0] >= c.a()[1] && c.a()[1] >= 0.0);
        assert!((c.a()[0] - al).abs() < 1e-14 && (c.a()[3] + 3.0 * al).abs() < 1e-14);
        let m = pt.to_matrix().permuted(&perm);
        for (x, y) in m.entries().iter().zip(c.to_matrix().entries()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn canonicalize_errors() {
        assert!(matches!(RankTwoPoint::zero(4).canonicalize(), Err(Error::ZeroPoint)));
        let pt = RankTwoPoint::new(vec![1.0, -1.0, 0.0, 0.0], vec![-0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(pt.canonicalize(), Err(Error::OrderHypothesis { .. })));
    }

    #[test]
    fn swap_delta_signs() {
        let p2 = p2_point();
        assert_eq!(p2.swap_delta(1, 1, 2.0, 1.0).unwrap(), 0.0);
        assert!(p2.swap_delta(0, 2, 2.0, 1.0).unwrap() > 0.0);
        let pt = RankTwoPoint::projected(vec![0.3, 0.3, -0.2, -0.4], vec![0.1, 0.35, -0.15, -0.3]).unwrap();
        assert!(pt.swap_delta(0, 1, 2.0, 1.0).unwrap().abs() < 1e-15);
        assert!(pt.swap_delta(1, 2, 2.0, 1.0).unwrap() > 0.0);
        assert!(pt.swap_delta(1, 2, 1.0, 2.0).unwrap() < 0.0);
    }

    #[test]
    fn normalize_margins_examples() {
        let p2 = p2_point().to_matrix();
        assert_eq!(normalize_margins(&p2).unwrap(), p2);

        let mut rows = vec![vec![1.0; 4]; 4];
        rows[0] = vec![2.0; 4];
        for r in rows.iter_mut().skip(1) {
            r.iter_mut().for_each(|x| *x = 2.0 / 3.0);
        }
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        let out = normalize_margins(&p).unwrap();
        assert!(out.row_sums().iter().all(|s| (s - 4.0).abs() < 1e-12));
        assert!(out.entries().iter().all(|&x| (x - 1.0).abs() < 1e-12));

        let rows = vec![
            vec![1.6, 0.7, 1.2, 0.5],
            vec![0.9, 1.1, 0.8, 1.3],
            vec![1.4, 0.6, 1.0, 0.9],
            vec![0.8, 1.2, 0.7, 1.3],
        ];
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        let out = normalize_margins(&p).unwrap();
        assert!(log_likelihood(&out, &w).unwrap() > log_likelihood(&p, &w).unwrap());
    }

    #[test]
    fn exact_point_json_forms() {
        let f: ExactPointFile = serde_json::from_str(r#"{"n":4,"alpha_sq":"1/5","pattern":"++--"}"#).unwrap();
        let pt = f.to_point().unwrap();
        assert_eq!(pt.to_matrix().get(0, 0), &q("6/5"));
        let back = serde_json::to_string(&ExactPointFile::from_point(&pt)).unwrap();
        assert!(back.contains("\"pattern\":\"++--\""));

        let f: ExactPointFile = serde_json::from_str(r#"{"n":2,"a":["1/2","-1/2"],"b":["1/3","-1/3"]}"#).unwrap();
        let pt = f.to_point().unwrap();
        assert_eq!(pt.product(0, 1), q("-1/6"));
        assert!(pattern_coefficients("++x-").is_err());
    }

    #[test]
    fn point_json_validates() {
        let pt: RankTwoPoint = serde_json::from_str(r#"{"n":2,"a":[0.5,-0.5],"b":[0.25,-0.25]}"#).unwrap();
        assert_eq!(pt.n(), 2);
        assert!(serde_json::from_str::<RankTwoPoint>(r#"{"n":2,"a":[0.5,0.5],"b":[0.25,-0.25]}"#).is_err());
    }
}
