//! Individual structural checks on stationary points of the `n = 4`, `(2, 1)`
//! problem and their auxiliary functions.

use std::io::Write;

use nalgebra::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::poly::{multiset_match, FloatPoly, Poly1, Poly3};
use crate::error::{Error, Result};
use crate::ranktwo::{ExactRankTwo, RankTwoPoint};
use crate::rational::{self, exact_sqrt, from_int};

const BOUND_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub a1_sq: f64,
    pub a1a2: f64,
    pub a1b2: f64,
    pub a1_sq_ok: bool,
    pub a1a2_ok: bool,
    pub a1b2_ok: bool,
    pub passed: bool,
}

/// `a1^2 <= 1/2` and `a1 a2, a1 b2` in `[0, 1/5]`, each with slack `1e-12`.
///
/// Only meaningful for `rho = 2`; other ratios are refused. The point must be
/// sorted with `a1 = b1 > 0`; the sign of `a2` is covered by the bounds.
pub fn check_bounds(pt: &RankTwoPoint, rho: f64) -> Result<BoundsReport> {
    if rho != 2.0 {
        return Err(Error::InvalidArgument(format!("bounds are established only for rho = 2, got {rho}")));
    }
    if pt.n() < 2 {
        return Err(Error::NotCanonical("need n >= 2".into()));
    }
    let (a, b) = (pt.a(), pt.b());
    let scale = a[0].abs().max(1.0);
    if a.windows(2).any(|w| w[0] < w[1] - 1e-12 * scale) || b.windows(2).any(|w| w[0] < w[1] - 1e-12 * scale) {
        return Err(Error::NotCanonical("coordinates are not sorted descending".into()));
    }
    if !(a[0] > 0.0 && (a[0] - b[0]).abs() <= 1e-12 * scale) {
        return Err(Error::NotCanonical("gauge requires a1 = b1 > 0".into()));
    }
    let a1_sq = a[0] * a[0];
    let a1a2 = a[0] * a[1];
    let a1b2 = a[0] * b[1];
    let in_range = |x: f64| (-BOUND_TOL..=0.2 + BOUND_TOL).contains(&x);
    let a1_sq_ok = a1_sq <= 0.5 + BOUND_TOL;
    let (a1a2_ok, a1b2_ok) = (in_range(a1a2), in_range(a1b2));
    Ok(BoundsReport { a1_sq, a1a2, a1b2, a1_sq_ok, a1a2_ok, a1b2_ok, passed: a1_sq_ok && a1a2_ok && a1b2_ok })
}

/// Numerator of `F(x) = sum_i 1/(1 + a_i x) + 1/(1 + x^2) - (n + 1)` over the
/// full product `prod_k (1 + a_k x) (1 + x^2)`.
pub fn f_numerator(a: &[f64]) -> FloatPoly {
    let n = a.len();
    let lin = |c: f64| FloatPoly::new(vec![1.0, c]);
    let quad = FloatPoly::new(vec![1.0, 0.0, 1.0]);
    let prod_except = |skip: Option<usize>| {
        (0..n).filter(|&k| Some(k) != skip).fold(FloatPoly::new(vec![1.0]), |acc, k| acc.mul(&lin(a[k])))
    };
    let mut num = prod_except(None).scale(-((n + 1) as f64)).mul(&quad);
    for i in 0..n {
        num = num.add(&prod_except(Some(i)).mul(&quad));
    }
    num.add(&prod_except(None))
}

/// The same numerator for `a = alpha c`, written in `y = alpha x` so every
/// coefficient is rational:
/// `sum_i 1/(1 + c_i y) + alpha^2/(alpha^2 + y^2) - (n + 1)` over
/// `prod_k (1 + c_k y) (alpha^2 + y^2)`.
pub fn f_numerator_exact(coef: &[BigRational], alpha_sq: &BigRational) -> Poly1 {
    let n = coef.len();
    let one = BigRational::one();
    let lin = |c: &BigRational| Poly1::linear(one.clone(), c.clone());
    let quad = Poly1::new(vec![alpha_sq.clone(), BigRational::zero(), one.clone()]);
    let prod_except = |skip: Option<usize>| {
        (0..n).filter(|&k| Some(k) != skip).fold(Poly1::one(), |acc, k| acc.mul(&lin(&coef[k])))
    };
    let mut num = prod_except(None).mul(&quad).scale(&-from_int((n + 1) as i64));
    for i in 0..n {
        num = num.add(&prod_except(Some(i)).mul(&quad));
    }
    num.add(&prod_except(None).scale(alpha_sq))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FPolyReport {
    /// Coefficients in `x`, lowest degree first.
    pub coefficients: Vec<f64>,
    /// Exact coefficients in `y = alpha x`, when built from an exact point.
    pub exact_coefficients_y: Option<Vec<String>>,
    pub degree: usize,
    pub constant_zero: bool,
    pub linear_zero: bool,
    /// Roots in `x`, with multiplicity, as `(re, im)`.
    pub roots: Vec<(f64, f64)>,
    /// `{a_1, ..., a_n, 0, 0}`.
    pub claimed_roots: Vec<f64>,
    /// Degree `n + 2` and root multiset equal to `claimed_roots` within `1e-8`.
    pub claimed_multiset_match: bool,
    /// Roots at poles `x = -1/a_k` of `F`, which cancel against the denominator.
    pub pole_roots: Vec<f64>,
    /// Distinct roots, poles removed, equal the distinct values of `{a_k} + {0}`.
    pub value_set_match: bool,
}

fn build_report(coefficients: Vec<f64>, exact: Option<Vec<String>>, degree: usize, const0: bool, lin0: bool, roots: Vec<Complex<f64>>, a: &[f64]) -> FPolyReport {
    let mut claimed: Vec<f64> = a.to_vec();
    claimed.extend([0.0, 0.0]);
    let claimed_multiset_match = degree == a.len() + 2 && multiset_match(&roots, &claimed, ROOT_TOL);
    let is_pole = |z: &Complex<f64>| z.im.abs() < ROOT_TOL && a.iter().any(|&ak| ak != 0.0 && (z.re + 1.0 / ak).abs() < ROOT_TOL);
    let pole_roots: Vec<f64> = roots.iter().filter(|z| is_pole(z)).map(|z| z.re).collect();
    let mut distinct_found: Vec<Complex<f64>> = Vec::new();
    for z in roots.iter().filter(|z| !is_pole(z)) {
        if !distinct_found.iter().any(|w| (w - z).norm() < ROOT_TOL) {
            distinct_found.push(*z);
        }
    }
    let mut distinct_claimed: Vec<f64> = Vec::new();
    for &x in a.iter().chain(&[0.0]) {
        if !distinct_claimed.iter().any(|y| (y - x).abs() < ROOT_TOL) {
            distinct_claimed.push(x);
        }
    }
    let value_set_match = multiset_match(&distinct_found, &distinct_claimed, ROOT_TOL);
    FPolyReport {
        coefficients,
        exact_coefficients_y: exact,
        degree,
        constant_zero: const0,
        linear_zero: lin0,
        roots: roots.iter().map(|z| (z.re, z.im)).collect(),
        claimed_roots: claimed,
        claimed_multiset_match,
        pole_roots,
        value_set_match,
    }
}

fn f_preconditions(pt: &RankTwoPoint) -> Result<()> {
    if pt.is_zero() {
        return Err(Error::DegeneratePolynomial);
    }
    if pt.a().iter().zip(pt.b()).any(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(Error::InvalidArgument("F(x) analysis needs a = b".into()));
    }
    let res = crate::ranktwo::residual_norm(&pt.stationarity_residual(2.0)?);
    if res >= 1e-10 {
        return Err(Error::ResidualPrecondition { residual: res });
    }
    Ok(())
}

/// Floating-point analysis of `F` at a stationary point with `a = b`.
/// Repeated roots are only resolved to about `sqrt(eps)`; prefer
/// [`f_polynomial_exact`] for exact points.
pub fn f_polynomial(pt: &RankTwoPoint) -> Result<FPolyReport> {
    f_preconditions(pt)?;
    let raw = f_numerator(pt.a());
    let scale = raw.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut trimmed = raw.coeffs().to_vec();
    while trimmed.last().is_some_and(|c| c.abs() <= 1e-13 * scale) {
        trimmed.pop();
    }
    let num = FloatPoly::new(trimmed);
    let degree = num.degree().ok_or(Error::DegeneratePolynomial)?;
    let c = num.coeffs();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let const0 = c.first().is_none_or(|x| x.abs() <= 1e-12 * scale);
    let lin0 = c.get(1).is_none_or(|x| x.abs() <= 1e-12 * scale);
    Ok(build_report(c.to_vec(), None, degree, const0, lin0, num.roots(), pt.a()))
}

/// Exact analysis: coefficients in rational arithmetic, roots from the
/// square-free factorization, so multiplicities are exact.
pub fn f_polynomial_exact(pt: &ExactRankTwo) -> Result<FPolyReport> {
    if pt.a_coef() != pt.b_coef() {
        return Err(Error::InvalidArgument("F(x) analysis needs a = b".into()));
    }
    if pt.alpha_sq().is_zero() || pt.a_coef().iter().all(Zero::is_zero) {
        return Err(Error::DegeneratePolynomial);
    }
    let num = f_numerator_exact(pt.a_coef(), pt.alpha_sq());
    let degree = num.degree().ok_or(Error::DegeneratePolynomial)?;
    let alpha = rational::to_f64(pt.alpha_sq()).sqrt();
    // coefficient k in y equals alpha^k times coefficient k in x
    let coefficients: Vec<f64> = num
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| rational::to_f64(c) / alpha.powi(k as i32))
        .collect();
    let roots: Vec<Complex<f64>> = num.roots().into_iter().map(|z| z / alpha).collect();
    let a: Vec<f64> = pt.a_coef().iter().map(|c| alpha * rational::to_f64(c)).collect();
    let exact = Some(num.coeffs().iter().map(ToString::to_string).collect());
    Ok(build_report(coefficients, exact, degree, num.coeff(0).is_zero(), num.coeff(1).is_zero(), roots, &a))
}

fn f1_parts(x: &BigRational, y: &BigRational) -> (BigRational, BigRational) {
    let one = BigRational::one();
    let d = from_int(5) * x * y + from_int(4) * x + from_int(3) * y + from_int(2);
    let n1 = (from_int(2) - x - y) * (&one + x) * (&one + y) + (x + y - &one) * &d;
    (n1, d)
}

/// `f1(x, y) = (2 - x - y) / (5 - 2/(1+x) - 1/(1+y)) + x + y - 1`, exactly.
pub fn f1_eval_exact(x: &BigRational, y: &BigRational) -> Result<BigRational> {
    let one = BigRational::one();
    if (&one + x).is_zero() || (&one + y).is_zero() {
        return Err(Error::InvalidArgument("f1 undefined at x = -1 or y = -1".into()));
    }
    let (n1, d) = f1_parts(x, y);
    if d.is_zero() {
        return Err(Error::InvalidArgument("f1 denominator vanishes".into()));
    }
    Ok(n1 / d)
}

pub fn f1_eval(x: f64, y: f64) -> Result<f64> {
    if x == -1.0 || y == -1.0 {
        return Err(Error::InvalidArgument("f1 undefined at x = -1 or y = -1".into()));
    }
    let den = 5.0 - 2.0 / (1.0 + x) - 1.0 / (1.0 + y);
    if den == 0.0 {
        return Err(Error::InvalidArgument("f1 denominator vanishes".into()));
    }
    Ok((2.0 - x - y) / den + x + y - 1.0)
}

const F3_TERMS: [(i64, [u32; 3]); 17] = [
    (20, [4, 2, 2]),
    (15, [3, 2, 1]),
    (3, [2, 2, 2]),
    (2, [1, 2, 1]),
    (-4, [0, 2, 2]),
    (3, [4, 1, 1]),
    (15, [3, 1, 2]),
    (2, [3, 1, 0]),
    (10, [2, 1, 1]),
    (2, [1, 1, 2]),
    (-3, [1, 1, 0]),
    (-1, [0, 1, 1]),
    (-4, [4, 0, 0]),
    (2, [3, 0, 1]),
    (-1, [2, 0, 0]),
    (-3, [1, 0, 1]),
    (-2, [0, 0, 0]),
];

/// The 17-term polynomial `f3(a1, a2, b2)`.
pub fn f3_poly() -> Poly3 {
    Poly3::from_terms(F3_TERMS.iter().map(|(c, e)| (from_int(*c), *e)))
}

pub fn f3_eval(a1: &BigRational, a2: &BigRational, b2: &BigRational) -> BigRational {
    f3_poly().eval(&[a1.clone(), a2.clone(), b2.clone()])
}

pub fn f3_eval_f64(a1: f64, a2: f64, b2: f64) -> f64 {
    F3_TERMS
        .iter()
        .map(|(c, e)| *c as f64 * a1.powi(e[0] as i32) * a2.powi(e[1] as i32) * b2.powi(e[2] as i32))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub resolution: usize,
    pub points: usize,
    pub max_value: f64,
    /// `(a1, a2, b2)` of the maximum.
    pub argmax: [f64; 3],
    pub argmax_index: [usize; 3],
    /// Whether the maximizer has a coordinate on the region boundary.
    pub on_boundary: bool,
    pub bound: f64,
    pub below_bound: bool,
    pub negative: bool,
}

fn grid_point(resolution: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
    let a1_max = 0.5f64.sqrt();
    let a1 = a1_max * (i + 1) as f64 / resolution as f64;
    let ub = a1.min(1.0 / (5.0 * a1));
    let step = ub / (resolution - 1) as f64;
    [a1, step * j as f64, step * k as f64]
}

/// Maximum of `f3` over `resolution^3` grid points of
/// `0 < a1 <= 1/sqrt(2)`, `0 <= a2, b2 <= min(a1, 1/(5 a1))`. Slices over
/// `a1` run in parallel; ties go to the smallest grid index.
pub fn f3_region_scan(resolution: usize) -> Result<ScanReport> {
    if resolution < 10 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 10, got {resolution}")));
    }
    let best = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, [i, 0, 0]);
            for j in 0..resolution {
                for k in 0..resolution {
                    let [a1, a2, b2] = grid_point(resolution, i, j, k);
                    let v = f3_eval_f64(a1, a2, b2);
                    if v > best.0 {
                        best = (v, [i, j, k]);
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, [usize::MAX; 3]),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    let (max_value, idx) = best;
    let last = resolution - 1;
    let bound = -549.0 / 500.0;
    Ok(ScanReport {
        resolution,
        points: resolution.pow(3),
        max_value,
        argmax: grid_point(resolution, idx[0], idx[1], idx[2]),
        argmax_index: idx,
        on_boundary: idx[0] == 0 || idx[0] == last || idx[1] == 0 || idx[1] == last || idx[2] == 0 || idx[2] == last,
        bound,
        below_bound: max_value <= bound,
        negative: max_value < 0.0,
    })
}

/// Writes `a1,a2,b2,f3` rows for every grid point.
pub fn f3_region_csv(resolution: usize, out: &mut impl Write) -> Result<()> {
    if resolution < 10 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 10, got {resolution}")));
    }
    let io = |e: std::io::Error| Error::InvalidArgument(e.to_string());
    writeln!(out, "a1,a2,b2,f3").map_err(io)?;
    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                let [a1, a2, b2] = grid_point(resolution, i, j, k);
                writeln!(out, "{a1:.17e},{a2:.17e},{b2:.17e},{:.17e}", f3_eval_f64(a1, a2, b2)).map_err(io)?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub f2: String,
    pub f2_terms: usize,
    pub difference_terms: usize,
    pub remainder_zero: bool,
    pub quotient: String,
    pub quotient_terms: usize,
    /// Constant `c` with `quotient = c * f3`, if one exists.
    pub cofactor: Option<String>,
    pub quotient_at_origin: String,
    pub f3_at_origin: String,
    /// Same test with `f2` scaled by `a1^2 b2` (the full common denominator).
    pub full_normalization_remainder_zero: bool,
    pub full_normalization_cofactor: Option<String>,
}

fn n1_d(x: &Poly3, y: &Poly3) -> (Poly3, Poly3) {
    let one = Poly3::int(1);
    let d = Poly3::int(5).mul(x).mul(y).add(&Poly3::int(4).mul(x)).add(&Poly3::int(3).mul(y)).add(&Poly3::int(2));
    let n1 = Poly3::int(2)
        .sub(x)
        .sub(y)
        .mul(&one.add(x))
        .mul(&one.add(y))
        .add(&x.add(y).sub(&one).mul(&d));
    (n1, d)
}

/// `f2 = M1 b2 D2 - M2 D1` with `f1(a1^2, a1 a2) = a1^2 M1 / D1` and
/// `f1(a2 b2, a1 b2) = b2 M2 / D2`, so that `f2 = 0` is the cross-multiplied
/// row equation with the monomial factors cancelled.
pub fn f2_poly() -> Poly3 {
    let (a1, a2, b2) = (Poly3::var(0), Poly3::var(1), Poly3::var(2));
    let (n1_row1, d1) = n1_d(&a1.mul(&a1), &a1.mul(&a2));
    let (n1_row2, d2) = n1_d(&a2.mul(&b2), &a1.mul(&b2));
    let m1 = n1_row1.div_monomial([2, 0, 0]).expect("every term carries a1^2");
    let m2 = n1_row2.div_monomial([0, 0, 1]).expect("every term carries b2");
    m1.mul(&b2).mul(&d2).sub(&m2.mul(&d1))
}

fn constant_cofactor(q: &Poly3, f3: &Poly3) -> Option<BigRational> {
    let (e, c) = q.leading()?;
    let (e3, c3) = f3.leading()?;
    if e != e3 {
        return None;
    }
    let ratio = c / c3;
    q.sub(&f3.scale(&ratio)).is_zero().then_some(ratio)
}

/// Builds `f2`, forms `f2(a1,a2,b2) - f2(a1,b2,a2)`, divides by `a2 - b2` and
/// relates the quotient to `f3`.
pub fn lemma_a2_factorization() -> Result<FactorizationReport> {
    let f2 = f2_poly();
    let f3 = f3_poly();
    let divisor = Poly3::var(1).sub(&Poly3::var(2));
    let diff = f2.sub(&f2.swap_a2_b2());
    let (quotient, rem) = diff.div_rem(&divisor)?;
    let cofactor = constant_cofactor(&quotient, &f3);

    let full = f2.mul(&Poly3::var(0).mul(&Poly3::var(0)).mul(&Poly3::var(2)));
    let full_diff = full.sub(&full.swap_a2_b2());
    let (full_q, full_rem) = full_diff.div_rem(&divisor)?;
    let full_cofactor = full_q.div_rem(&f3).ok().and_then(|(c, r)| r.is_zero().then(|| c.to_string()));

    let origin = [BigRational::zero(), BigRational::zero(), BigRational::zero()];
    Ok(FactorizationReport {
        f2: f2.to_string(),
        f2_terms: f2.num_terms(),
        difference_terms: diff.num_terms(),
        remainder_zero: rem.is_zero(),
        quotient: quotient.to_string(),
        quotient_terms: quotient.num_terms(),
        cofactor: cofactor.map(|c| c.to_string()),
        quotient_at_origin: quotient.eval(&origin).to_string(),
        f3_at_origin: f3.eval(&origin).to_string(),
        full_normalization_remainder_zero: full_rem.is_zero(),
        full_normalization_cofactor: full_cofactor,
    })
}

fn tail_quadratic(a1: &BigRational, a2: &BigRational) -> Result<(BigRational, BigRational, BigRational)> {
    if !(a1.is_positive() && a2.is_positive()) {
        return Err(Error::InvalidTail("A1 and A2 must be positive".into()));
    }
    let sigma = from_int(4) - a1 - a2;
    let delta = from_int(5) - from_int(2) / a1 - a2.recip();
    if !sigma.is_positive() || !delta.is_positive() {
        return Err(Error::InvalidTail(format!("sigma = {sigma}, 5 - 2/A1 - 1/A2 = {delta}")));
    }
    let pi = &sigma / &delta;
    let disc = &sigma * &sigma - from_int(4) * &pi;
    Ok((sigma, pi, disc))
}

/// `(A3, A4)` with `A3 >= A4`: the roots of `z^2 - sigma z + pi`, where
/// `sigma = 4 - A1 - A2` and `pi = sigma / (5 - 2/A1 - 1/A2)`. `None` when the
/// roots are irrational.
pub fn tail_pair_solve_exact(a1: &BigRational, a2: &BigRational) -> Result<Option<(BigRational, BigRational)>> {
    let (sigma, _, disc) = tail_quadratic(a1, a2)?;
    if disc.is_negative() {
        return Err(Error::NoRealTail { discriminant: rational::to_f64(&disc) });
    }
    let Some(root) = exact_sqrt(&disc) else { return Ok(None) };
    let two = from_int(2);
    let a3 = (&sigma + &root) / &two;
    let a4 = (&sigma - &root) / &two;
    if !a4.is_positive() {
        return Err(Error::InvalidTail(format!("A4 = {a4} is not positive")));
    }
    Ok(Some((a3, a4)))
}

pub fn tail_pair_solve(a1: f64, a2: f64) -> Result<(f64, f64)> {
    let (a1q, a2q) = (rational::from_f64(a1)?, rational::from_f64(a2)?);
    let (sigma, pi, disc) = tail_quadratic(&a1q, &a2q)?;
    let (sigma, pi, disc) = (rational::to_f64(&sigma), rational::to_f64(&pi), rational::to_f64(&disc));
    // a discriminant at rounding level is a double root
    let root = if disc.abs() <= 64.0 * f64::EPSILON * sigma * sigma {
        0.0
    } else if disc < 0.0 {
        return Err(Error::NoRealTail { discriminant: disc });
    } else {
        disc.sqrt()
    };
    // larger root directly, smaller through the product to avoid cancellation
    let a3 = (sigma + root) / 2.0;
    let a4 = pi / a3;
    if a4 <= 0.0 {
        return Err(Error::InvalidTail(format!("A4 = {a4} is not positive")));
    }
    Ok((a3, a4))
}

/// `(sum A - 4, 2/A1 + 1/A2 + 1/A3 + 1/A4 - 5)`.
pub fn tail_constraints(a: &[BigRational; 4]) -> (BigRational, BigRational) {
    let sum = a.iter().sum::<BigRational>() - from_int(4);
    let recip = from_int(2) / &a[0] + a[1].recip() + a[2].recip() + a[3].recip() - from_int(5);
    (sum, recip)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `a_i b_i < 0`.
    Sign { i: usize },
    /// `(a_i - a_j)(b_i - b_j) < 0`.
    Order { i: usize, j: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignOrderReport {
    pub passed: bool,
    /// Zero-based indices of the first violation.
    pub witness: Option<Witness>,
}

/// `a_i b_i >= -1e-9` for all `i` and `(a_i - a_j)(b_i - b_j) >= -1e-9` for all pairs.
pub fn sign_order_check(pt: &RankTwoPoint) -> SignOrderReport {
    let (a, b) = (pt.a(), pt.b());
    let n = pt.n();
    let witness = (0..n)
        .find(|&i| a[i] * b[i] < -1e-9)
        .map(|i| Witness::Sign { i })
        .or_else(|| {
            (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| (a[i] - a[j]) * (b[i] - b[j]) < -1e-9)
                .map(|(i, j)| Witness::Order { i, j })
        });
    SignOrderReport { passed: witness.is_none(), witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn pattern_point(c: [f64; 4], alpha: f64) -> RankTwoPoint {
        let v: Vec<f64> = c.iter().map(|x| x * alpha).collect();
        RankTwoPoint::new(v.clone(), v).unwrap()
    }

    #[test]
    fn bounds_examples() {
        let p2 = pattern_point([1.0, 1.0, -1.0, -1.0], 0.2f64.sqrt());
        assert!(check_bounds(&p2, 2.0).unwrap().passed);
        let p1 = pattern_point([1.0, 1.0, 1.0, -3.0], (1.0f64 / 15.0).sqrt());
        assert!(check_bounds(&p1, 2.0).unwrap().passed);
        let bad = pattern_point([1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], 1.0);
        let r = check_bounds(&bad, 2.0).unwrap();
        assert!(!r.passed && !r.a1_sq_ok);
        assert!(check_bounds(&p2, 3.0).is_err());
        let unsorted = pattern_point([-1.0, 1.0, 1.0, -1.0], 0.2f64.sqrt());
        assert!(matches!(check_bounds(&unsorted, 2.0), Err(Error::NotCanonical(_))));
    }

    #[test]
    fn f1_values() {
        assert_eq!(f1_eval_exact(&q("1/5"), &q("1/5")).unwrap(), q("1/25"));
        assert_eq!(f1_eval_exact(&q("1/15"), &q("1/15")).unwrap(), q("-1/75"));
        assert!(f1_eval_exact(&q("0"), &q("0")).unwrap().is_zero());
        assert!((f1_eval(0.2, 0.2).unwrap() - 0.04).abs() < 1e-15);
        assert!(f1_eval(-1.0, 0.0).is_err());
        // 5xy + 4x + 3y + 2 = 0 at x = -1/2, y = 0
        assert!(f1_eval_exact(&q("-1/2"), &q("0")).is_err());
    }

    #[test]
    fn f1_matches_its_definition() {
        for (x, y) in [(0.3, 0.1), (0.05, 0.2), (0.5, -0.1)] {
            let direct = (2.0 - x - y) / (5.0 - 2.0 / (1.0 + x) - 1.0 / (1.0 + y)) + x + y - 1.0;
            let (n1, d) = f1_parts(&rational::from_f64(x).unwrap(), &rational::from_f64(y).unwrap());
            assert!((rational::to_f64(&(n1 / d)) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn f3_values() {
        let z = BigRational::zero();
        assert_eq!(f3_eval(&z, &z, &z), from_int(-2));
        assert_eq!(f3_eval(&from_int(1), &z, &z), from_int(-7));
        assert_eq!(f3_poly().num_terms(), 17);
        let (a1, a2, b2) = (q("1/2"), q("1/5"), q("1/5"));
        let direct = {
            let t1 = (from_int(20) * rational::pow(&a1, 4) * &b2 * &b2 + from_int(15) * rational::pow(&a1, 3) * &b2
                + from_int(3) * &a1 * &a1 * &b2 * &b2 + from_int(2) * &a1 * &b2 - from_int(4) * &b2 * &b2)
                * &a2 * &a2;
            let t2 = (from_int(3) * rational::pow(&a1, 4) * &b2 + from_int(15) * rational::pow(&a1, 3) * &b2 * &b2
                + from_int(2) * rational::pow(&a1, 3) + from_int(10) * &a1 * &a1 * &b2 + from_int(2) * &a1 * &b2 * &b2
                - from_int(3) * &a1 - &b2)
                * &a2;
            let t3 = -from_int(4) * rational::pow(&a1, 4) + from_int(2) * rational::pow(&a1, 3) * &b2 - &a1 * &a1
                - from_int(3) * &a1 * &b2 - from_int(2);
            t1 + t2 + t3
        };
        assert_eq!(f3_eval(&a1, &a2, &b2), direct);
        assert!((f3_eval_f64(0.5, 0.2, 0.2) - rational::to_f64(&direct)).abs() < 1e-14);
    }

    #[test]
    fn coarse_scan() {
        let r = f3_region_scan(10).unwrap();
        assert!(r.negative && r.below_bound);
        assert!(f3_region_scan(9).is_err());
        let mut buf = Vec::new();
        f3_region_csv(10, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1001);
    }

    #[test]
    fn factorization() {
        let r = lemma_a2_factorization().unwrap();
        assert!(r.remainder_zero);
        assert!(r.full_normalization_remainder_zero);
        assert_eq!(r.cofactor.as_deref(), Some("-2"));
        assert_eq!(r.quotient_at_origin, "4");
    }

    #[test]
    fn f2_vanishes_at_p2() {
        let a = 0.2f64.sqrt();
        let v = f2_poly().eval_f64([a, a, a]);
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn tail_pairs() {
        let (x, y) = tail_pair_solve_exact(&q("6/5"), &q("6/5")).unwrap().unwrap();
        assert_eq!((x, y), (q("4/5"), q("4/5")));
        let (x, y) = tail_pair_solve_exact(&q("16/15"), &q("16/15")).unwrap().unwrap();
        assert_eq!((x.clone(), y.clone()), (q("16/15"), q("4/5")));
        let (s, r) = tail_constraints(&[q("16/15"), q("16/15"), x, y]);
        assert!(s.is_zero() && r.is_zero());
        let (x, y) = tail_pair_solve_exact(&from_int(1), &from_int(1)).unwrap().unwrap();
        assert_eq!((x, y), (from_int(1), from_int(1)));
        let (x, y) = tail_pair_solve(1.2, 1.2).unwrap();
        assert!((x - 0.8).abs() < 1e-15 && (y - 0.8).abs() < 1e-15);
        assert!(tail_pair_solve(3.0, 1.5).is_err());
    }

    #[test]
    fn sign_order() {
        let p2 = pattern_point([1.0, 1.0, -1.0, -1.0], 0.2f64.sqrt());
        assert!(sign_order_check(&p2).passed);
        let bad = RankTwoPoint::new(vec![0.5, -0.5, 0.0, 0.0], vec![-0.5, 0.5, 0.0, 0.0]).unwrap();
        let r = sign_order_check(&bad);
        assert_eq!(r.witness, Some(Witness::Sign { i: 0 }));
        let ord = RankTwoPoint::new(vec![0.4, 0.1, -0.5, 0.0], vec![0.1, 0.4, -0.5, 0.0]).unwrap();
        assert_eq!(sign_order_check(&ord).witness, Some(Witness::Order { i: 0, j: 1 }));
    }

    #[test]
    fn f_polynomial_structure_of_p2() {
        let p2 = ExactRankTwo::from_pattern("++--", q("1/5")).unwrap();
        let r = f_polynomial_exact(&p2).unwrap();
        assert_eq!(r.degree, 6);
        assert!(r.constant_zero && r.linear_zero);
        assert!(r.value_set_match);
        assert_eq!(r.pole_roots.len(), 2);
        let fl = f_polynomial(&p2.to_point()).unwrap();
        assert_eq!(fl.degree, 6);
        assert!(f_polynomial(&RankTwoPoint::zero(4)).is_err());
    }
}
