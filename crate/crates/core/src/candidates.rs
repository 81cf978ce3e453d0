//! Stationary candidates for `n = 4` by sign pattern, and the block and
//! corner generators for general `n`.
//!
//! For a pattern with coefficients `c` the point is `a = b = alpha c`. Row
//! `i` of the reciprocal stationarity system in `x = alpha^2` reads
//! `sum_j 1 / (1 + x c_i c_j) + (rho - 1) / (1 + x c_i^2) = n + rho - 1`.
//! Clearing denominators gives a polynomial with root `x = 0`; the candidate
//! exists when the reduced polynomials of all rows share a positive, feasible
//! rational root.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{exact_likelihood, Convention, ExactMatrix, MatrixFile, ProbMatrix, WeightTable};
use crate::ranktwo::{pattern_coefficients, ExactPointFile, ExactRankTwo};
use crate::rational::{self, from_f64, from_int, PreciseLog};
use crate::verify::poly::Poly1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignPattern {
    #[serde(rename = "+++-")]
    Pppn,
    #[serde(rename = "++--")]
    Ppnn,
    #[serde(rename = "++0-")]
    Ppzn,
    #[serde(rename = "+00-")]
    Pzzn,
}

impl SignPattern {
    pub const ALL: [SignPattern; 4] = [SignPattern::Pppn, SignPattern::Ppnn, SignPattern::Ppzn, SignPattern::Pzzn];

    pub fn signs(self) -> &'static str {
        match self {
            SignPattern::Pppn => "+++-",
            SignPattern::Ppnn => "++--",
            SignPattern::Ppzn => "++0-",
            SignPattern::Pzzn => "+00-",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignPattern::Pppn => "PPPN",
            SignPattern::Ppnn => "PPNN",
            SignPattern::Ppzn => "PPZN",
            SignPattern::Pzzn => "PZZN",
        }
    }

    /// Conventional matrix label `P1`..`P4`.
    pub fn label(self) -> &'static str {
        match self {
            SignPattern::Pppn => "P1",
            SignPattern::Ppnn => "P2",
            SignPattern::Ppzn => "P3",
            SignPattern::Pzzn => "P4",
        }
    }

    /// Coefficients `(1,1,1,-3)`, `(1,1,-1,-1)`, `(1,1,0,-2)`, `(1,0,0,-1)`.
    pub fn coefficients(self) -> Vec<BigRational> {
        pattern_coefficients(self.signs()).expect("static pattern")
    }

    pub fn parse(s: &str) -> Result<Self> {
        SignPattern::ALL
            .into_iter()
            .find(|p| p.signs() == s || p.name().eq_ignore_ascii_case(s) || p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown sign pattern {s:?}")))
    }

    /// Closed form of `alpha^2` at weights `(s, t)`.
    pub fn closed_form_alpha_sq(self, s: &BigRational, t: &BigRational) -> BigRational {
        let d = s - t;
        match self {
            SignPattern::Pppn => d / (from_int(3) * s + from_int(9) * t),
            SignPattern::Ppnn => d / (s + from_int(3) * t),
            SignPattern::Ppzn => d / (from_int(2) * (s + from_int(2) * t)),
            SignPattern::Pzzn => d / (s + t),
        }
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reduced stationarity polynomial of row `i` (the factor `x` removed).
fn row_polynomial(coef: &[BigRational], i: usize, rho: &BigRational) -> Poly1 {
    let n = coef.len();
    let one = BigRational::one();
    let mut mults: Vec<BigRational> = Vec::new();
    for c in coef {
        let m = &coef[i] * c;
        if !mults.contains(&m) {
            mults.push(m);
        }
    }
    let factor = |m: &BigRational| Poly1::linear(one.clone(), m.clone());
    let product_except = |skip: Option<&BigRational>| {
        mults
            .iter()
            .filter(|m| Some(*m) != skip)
            .fold(Poly1::one(), |acc, m| acc.mul(&factor(m)))
    };
    let mut num = Poly1::zero();
    for c in coef {
        num = num.add(&product_except(Some(&(&coef[i] * c))));
    }
    let diag = &coef[i] * &coef[i];
    num = num.add(&product_except(Some(&diag)).scale(&(rho - &one)));
    let rhs = from_int(n as i64) + rho - &one;
    num = num.sub(&product_except(None).scale(&rhs));
    let (k, reduced) = num.strip_x();
    debug_assert!(k >= 1, "x = 0 solves every row");
    reduced
}

/// Solves for `alpha^2 > 0` with all entries positive, or explains why none
/// exists. Every row with a nonzero coefficient must agree.
pub fn solve_alpha_sq(coef: &[BigRational], rho: &BigRational) -> std::result::Result<BigRational, String> {
    let mut common: Option<Poly1> = None;
    for i in (0..coef.len()).filter(|&i| !coef[i].is_zero()) {
        let p = row_polynomial(coef, i, rho);
        common = Some(match common {
            None => p.monic(),
            Some(g) => g.gcd(&p),
        });
    }
    let g = common.ok_or("all coefficients are zero")?;
    match g.degree() {
        None => Err("row equations are identically satisfied".into()),
        Some(0) => Err("row equations have no common root".into()),
        Some(1) => {
            let root = -(g.coeff(0) / g.coeff(1));
            if !root.is_positive() {
                return Err(format!("common root alpha^2 = {root} is not positive"));
            }
            let feasible = coef.iter().all(|ci| coef.iter().all(|cj| (BigRational::one() + &root * ci * cj).is_positive()));
            if feasible {
                Ok(root)
            } else {
                Err(format!("common root alpha^2 = {root} leaves a nonpositive entry"))
            }
        }
        Some(d) => Err(format!("common factor of degree {d} has no rational treatment here")),
    }
}

/// A closed-form stationary point for `n = 4`, with exact matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub pattern: SignPattern,
    pub alpha_sq: BigRational,
    pub point: ExactRankTwo,
    /// `SUM_NSQ` form.
    pub matrix: ExactMatrix,
    /// `prod p_ij^w_ij` of the `SUM_NSQ` matrix when the weights are integers.
    pub likelihood: Option<BigRational>,
    /// `sum w_ij ln p_ij` of the `SUM_NSQ` matrix to 256 bits.
    pub log_likelihood: PreciseLog,
}

impl Candidate {
    pub fn loglik(&self) -> f64 {
        self.log_likelihood.to_f64()
    }

    pub fn sum_one_matrix(&self) -> ExactMatrix {
        self.matrix.convert(Convention::SumOne)
    }
}

impl Serialize for Candidate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Candidate", 9)?;
        st.serialize_field("pattern", &self.pattern)?;
        st.serialize_field("name", self.pattern.name())?;
        st.serialize_field("label", self.pattern.label())?;
        st.serialize_field("alpha_sq", &self.alpha_sq.to_string())?;
        st.serialize_field("point", &ExactPointFile::from_point(&self.point))?;
        st.serialize_field("matrix", &MatrixFile::from_exact(&self.matrix))?;
        st.serialize_field("matrix_sum_one", &MatrixFile::from_exact(&self.sum_one_matrix()))?;
        st.serialize_field("likelihood", &self.likelihood.as_ref().map(ToString::to_string))?;
        st.serialize_field("log_likelihood", &self.log_likelihood.to_scientific(30))?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Nonexistent {
    pub pattern: SignPattern,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateSet {
    pub s: String,
    pub t: String,
    pub found: Vec<Candidate>,
    pub nonexistent: Vec<Nonexistent>,
}

impl CandidateSet {
    pub fn get(&self, p: SignPattern) -> Option<&Candidate> {
        self.found.iter().find(|c| c.pattern == p)
    }
}

fn exact_weights(s: f64, t: f64) -> Result<(BigRational, BigRational)> {
    if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidWeights(format!("need s, t > 0, got ({s}, {t})")));
    }
    Ok((from_f64(s)?, from_f64(t)?))
}

fn precise_loglik(m: &ExactMatrix, s: &BigRational, t: &BigRational) -> Result<PreciseLog> {
    let n = m.n();
    let mut acc = PreciseLog::zero();
    for i in 0..n {
        for j in 0..n {
            let w = if i == j { s } else { t };
            acc = acc + PreciseLog::ln(m.get(i, j))?.scale(w);
        }
    }
    Ok(acc)
}

/// Builds the candidate of one pattern at exact weights `(s, t)`.
pub fn candidate_exact(pattern: SignPattern, s: &BigRational, t: &BigRational) -> Result<std::result::Result<Candidate, String>> {
    let rho = s / t;
    let coef = pattern.coefficients();
    let alpha_sq = match solve_alpha_sq(&coef, &rho) {
        Ok(x) => x,
        Err(reason) => return Ok(Err(reason)),
    };
    let point = ExactRankTwo::new(alpha_sq.clone(), coef.clone(), coef)?;
    let matrix = point.to_matrix();
    let sf = rational::to_f64(s);
    let tf = rational::to_f64(t);
    let likelihood = match (rational::as_exponent(sf), rational::as_exponent(tf)) {
        (Some(_), Some(_)) => Some(exact_likelihood(&matrix, &WeightTable::symmetric(4, sf, tf)?)?),
        _ => None,
    };
    let log_likelihood = precise_loglik(&matrix, s, t)?;
    Ok(Ok(Candidate { pattern, alpha_sq, point, matrix, likelihood, log_likelihood }))
}

/// The four sign-pattern candidates at weights `0 < t < s`.
pub fn enumerate_n4(s: f64, t: f64) -> Result<CandidateSet> {
    let (sq, tq) = exact_weights(s, t)?;
    if s <= t {
        return Err(Error::DegenerateCandidates { s, t });
    }
    let mut found = Vec::new();
    let mut nonexistent = Vec::new();
    for p in SignPattern::ALL {
        match candidate_exact(p, &sq, &tq)? {
            Ok(c) => found.push(c),
            Err(reason) => nonexistent.push(Nonexistent { pattern: p, reason }),
        }
    }
    Ok(CandidateSet { s: sq.to_string(), t: tq.to_string(), found, nonexistent })
}

fn compare(x: &Candidate, y: &Candidate) -> Ordering {
    match (&x.likelihood, &y.likelihood) {
        (Some(a), Some(b)) => a.cmp(b),
        _ => x.log_likelihood.cmp(&y.log_likelihood),
    }
}

fn tied(x: &Candidate, y: &Candidate) -> bool {
    match (&x.likelihood, &y.likelihood) {
        (Some(a), Some(b)) => a == b,
        _ => x.log_likelihood.near(&y.log_likelihood, 16),
    }
}

/// The best candidate: exact likelihoods for integer weights, 256-bit logs
/// otherwise. Errors if the top two cannot be separated.
pub fn global_candidate(s: f64, t: f64) -> Result<Candidate> {
    let set = enumerate_n4(s, t)?;
    best_of(&set.found)
}

pub fn best_of(found: &[Candidate]) -> Result<Candidate> {
    let mut sorted: Vec<&Candidate> = found.iter().collect();
    sorted.sort_by(|x, y| compare(y, x));
    let best = *sorted.first().ok_or(Error::NoSuccessfulStarts)?;
    if let Some(second) = sorted.get(1) {
        if tied(best, second) {
            return Err(Error::Tie(best.pattern.name().into(), second.pattern.name().into()));
        }
    }
    Ok(best.clone())
}

fn check_generator_args(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("generators need n >= 2, got {n}")));
    }
    Ok(())
}

/// Two diagonal blocks of sizes `ceil(n/2)` and `floor(n/2)`: inside a block of
/// size `k` the entry is `(s - t)/k + t`, across blocks `t`, all divided by
/// `n s + (n - 1) n t`.
pub fn block_matrix_exact(n: usize, s: &BigRational, t: &BigRational) -> Result<ExactMatrix> {
    check_generator_args(n)?;
    if !(t.is_positive() && t < s) {
        return Err(Error::InvalidWeights(format!("block matrix needs 0 < t < s, got ({s}, {t})")));
    }
    let k1 = n.div_ceil(2);
    let nn = from_int(n as i64);
    let scale = (&nn * s + (&nn - BigRational::one()) * &nn * t).recip();
    let inside = |k: usize| ((s - t) / from_int(k as i64) + t) * &scale;
    let across = t * &scale;
    let group = |i: usize| usize::from(i >= k1);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if group(i) != group(j) {
                        across.clone()
                    } else if group(i) == 0 {
                        inside(k1)
                    } else {
                        inside(n - k1)
                    }
                })
                .collect()
        })
        .collect();
    ExactMatrix::from_rows(rows, Convention::SumOne)
}

pub fn block_matrix(n: usize, s: f64, t: f64) -> Result<ProbMatrix> {
    let (sq, tq) = exact_weights(s, t)?;
    Ok(block_matrix_exact(n, &sq, &tq)?.to_f64())
}

/// Uniform `1/n^2` except the corners: `(1,1)` and `(n,n)` hold
/// `2s / (n^2 (s+t))`, `(1,n)` and `(n,1)` hold `2t / (n^2 (s+t))`.
pub fn corner_matrix_exact(n: usize, s: &BigRational, t: &BigRational) -> Result<ExactMatrix> {
    check_generator_args(n)?;
    if !(s.is_positive() && s <= t) {
        return Err(Error::InvalidWeights(format!("corner matrix needs 0 < s <= t, got ({s}, {t})")));
    }
    let n2 = from_int((n * n) as i64);
    let base = n2.recip();
    let denom = &n2 * (s + t);
    let diag = from_int(2) * s / &denom;
    let anti = from_int(2) * t / &denom;
    let last = n - 1;
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i, j) {
                    (0, 0) => diag.clone(),
                    (i, j) if i == last && j == last => diag.clone(),
                    (0, j) if j == last => anti.clone(),
                    (i, 0) if i == last => anti.clone(),
                    _ => base.clone(),
                })
                .collect()
        })
        .collect();
    ExactMatrix::from_rows(rows, Convention::SumOne)
}

pub fn corner_matrix(n: usize, s: f64, t: f64) -> Result<ProbMatrix> {
    let (sq, tq) = exact_weights(s, t)?;
    Ok(corner_matrix_exact(n, &sq, &tq)?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn swiss_alpha_values() {
        let set = enumerate_n4(2.0, 1.0).unwrap();
        assert!(set.nonexistent.is_empty());
        let got: Vec<String> = set.found.iter().map(|c| c.alpha_sq.to_string()).collect();
        assert_eq!(got, ["1/15", "1/5", "1/8", "1/3"]);
    }

    #[test]
    fn swiss_matrices() {
        let set = enumerate_n4(2.0, 1.0).unwrap();
        let p2 = set.get(SignPattern::Ppnn).unwrap();
        assert_eq!(p2.matrix.get(0, 0), &q("6/5"));
        assert_eq!(p2.matrix.get(0, 2), &q("4/5"));
        let p4 = set.get(SignPattern::Pzzn).unwrap();
        assert_eq!(p4.matrix.get(0, 0), &q("4/3"));
        assert_eq!(p4.matrix.get(0, 3), &q("2/3"));
        assert_eq!(p4.matrix.get(1, 2), &q("1"));
        let p3 = set.get(SignPattern::Ppzn).unwrap();
        assert_eq!(p3.matrix.get(3, 3), &q("3/2"));
        assert_eq!(p3.matrix.get(0, 3), &q("3/4"));
        assert_eq!(p3.matrix.get(0, 0), &q("9/8"));
    }

    #[test]
    fn closed_forms_agree_with_solver() {
        for (s, t) in [(2, 1), (3, 1), (5, 2), (4, 3), (7, 1), (11, 10)] {
            let (sq, tq) = (from_int(s), from_int(t));
            for p in SignPattern::ALL {
                let solved = solve_alpha_sq(&p.coefficients(), &(&sq / &tq)).unwrap();
                assert_eq!(solved, p.closed_form_alpha_sq(&sq, &tq), "{p} at ({s}, {t})");
            }
        }
    }

    #[test]
    fn ppnn_entries_at_three_one() {
        let set = enumerate_n4(3.0, 1.0).unwrap();
        let c = set.get(SignPattern::Ppnn).unwrap();
        assert_eq!(c.matrix.get(0, 0), &q("4/3"));
        assert_eq!(c.matrix.get(0, 3), &q("2/3"));
    }

    #[test]
    fn global_winner_is_ppnn() {
        for (s, t) in [(2.0, 1.0), (3.0, 1.0), (5.0, 2.0), (2.5, 1.0)] {
            assert_eq!(global_candidate(s, t).unwrap().pattern, SignPattern::Ppnn);
        }
    }

    #[test]
    fn degenerate_weights() {
        assert!(matches!(enumerate_n4(1.0, 1.0), Err(Error::DegenerateCandidates { .. })));
        assert!(matches!(enumerate_n4(1.0, 2.0), Err(Error::DegenerateCandidates { .. })));
    }

    #[test]
    fn block_examples() {
        let m = block_matrix_exact(4, &from_int(2), &from_int(1)).unwrap();
        let p2 = enumerate_n4(2.0, 1.0).unwrap().get(SignPattern::Ppnn).unwrap().sum_one_matrix();
        assert_eq!(m, p2);
        let m = block_matrix_exact(2, &from_int(3), &from_int(1)).unwrap();
        assert_eq!(m.get(0, 0), &q("3/8"));
        assert_eq!(m.get(0, 1), &q("1/8"));
        let m = block_matrix(5, 2.0, 1.0).unwrap();
        assert!((m.entries().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(block_matrix(1, 2.0, 1.0).is_err());
    }

    #[test]
    fn corner_examples() {
        let m = corner_matrix_exact(4, &from_int(1), &from_int(2)).unwrap();
        assert_eq!(m.get(0, 0), &q("1/24"));
        assert_eq!(m.get(0, 3), &q("1/12"));
        assert_eq!(m.get(3, 0), &q("1/12"));
        assert_eq!(m.get(1, 2), &q("1/16"));
        let u = corner_matrix_exact(3, &from_int(2), &from_int(2)).unwrap();
        assert!(u.entries().iter().all(|x| *x == q("1/9")));
        assert!(corner_matrix(4, 2.0, 1.0).is_err());
    }

    #[test]
    fn parse_patterns() {
        assert_eq!(SignPattern::parse("++0-").unwrap(), SignPattern::Ppzn);
        assert_eq!(SignPattern::parse("p4").unwrap(), SignPattern::Pzzn);
        assert!(SignPattern::parse("+-").is_err());
    }
}
