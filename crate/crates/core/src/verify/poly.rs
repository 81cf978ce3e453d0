//! Exact univariate polynomials over the rationals, their floating shadows
//! with companion-matrix root finding, and sparse trivariate polynomials in
//! `(a1, a2, b2)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Complex, DMatrix};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, from_int};

/// Dense polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly1 {
    coeffs: Vec<BigRational>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly1 { coeffs }
    }

    pub fn zero() -> Self {
        Poly1 { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: BigRational, c1: BigRational) -> Self {
        Self::new(vec![c0, c1])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in other.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * from_int(k as i64)).collect())
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Euclidean division; errors on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::DegeneratePolynomial)?;
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        let Some(rd) = self.degree() else { return Ok((Self::zero(), Self::zero())) };
        if rd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut q = vec![BigRational::zero(); rd - dd + 1];
        for k in (0..=rd - dd).rev() {
            let c = &r[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dj) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &c * dj;
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        Ok((Self::new(q), Self::new(r)))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(&self.leading().recip())
    }

    /// Monic greatest common divisor (zero when both inputs are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Largest `k` with `x^k` dividing `self`, and the cofactor.
    pub fn strip_x(&self) -> (usize, Self) {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        (k, Self::new(self.coeffs[k.min(self.coeffs.len())..].to_vec()))
    }

    /// Yun's square-free decomposition: monic `(factor, multiplicity)` pairs
    /// with `self = c * prod factor^multiplicity`.
    pub fn square_free(&self) -> Vec<(Self, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let g = f.gcd(&df);
        let mut c = f.div_rem(&g).expect("gcd is nonzero").0;
        let mut d = df.div_rem(&g).expect("gcd is nonzero").0.sub(&c.derivative());
        let mut i = 1;
        while c.degree().unwrap_or(0) > 0 {
            let a = c.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            c = c.div_rem(&a).expect("gcd is nonzero").0;
            d = d.div_rem(&a).expect("gcd is nonzero").0.sub(&c.derivative());
            i += 1;
        }
        out
    }

    pub fn to_float(&self) -> FloatPoly {
        FloatPoly::new(self.coeffs.iter().map(rational::to_f64).collect())
    }

    /// All complex roots with multiplicity: each square-free factor is solved
    /// separately, so repeated roots stay accurate.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        let mut out = Vec::new();
        for (factor, mult) in self.square_free() {
            let roots = factor.to_float().roots();
            for _ in 0..mult {
                out.extend(roots.iter().copied());
            }
        }
        out
    }
}

impl fmt::Display for Poly1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let sep = if first { "" } else { " " };
            let body = match k {
                0 => format!("{mag}"),
                _ => {
                    let var = if k == 1 { "x".to_string() } else { format!("x^{k}") };
                    if mag.is_one() { var } else { format!("{mag}*{var}") }
                }
            };
            let space = if first { "" } else { " " };
            write!(f, "{sep}{sign}{space}{body}")?;
            first = false;
        }
        Ok(())
    }
}

/// Dense polynomial with `f64` coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatPoly {
    coeffs: Vec<f64>,
}

impl FloatPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == 0.0) {
            coeffs.pop();
        }
        FloatPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return FloatPoly { coeffs: Vec::new() };
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in other.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        Self::new((0..len).map(|k| get(&self.coeffs, k) + get(&other.coeffs, k)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    fn eval_with_derivative(&self, z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        let mut p = Complex::new(0.0, 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + Complex::new(*c, 0.0);
        }
        (p, dp)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Eigenvalues of the companion matrix, each refined by one Newton step.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[deg];
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let eig = comp.complex_eigenvalues();
        let mut roots: Vec<Complex<f64>> = eig
            .iter()
            .map(|&z| {
                let (p, dp) = self.eval_with_derivative(z);
                if dp.norm() > 0.0 {
                    let step = p / dp;
                    if step.re.is_finite() && step.im.is_finite() {
                        return z - step;
                    }
                }
                z
            })
            .collect();
        roots.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal).then(y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal)));
        roots
    }
}

/// Greedy nearest pairing of two multisets of roots within `tol`.
pub fn multiset_match(found: &[Complex<f64>], expected: &[f64], tol: f64) -> bool {
    if found.len() != expected.len() {
        return false;
    }
    let mut used = vec![false; found.len()];
    for &e in expected {
        let best = found
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, z)| (k, (z - Complex::new(e, 0.0)).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal));
        match best {
            Some((k, d)) if d <= tol => used[k] = true,
            _ => return false,
        }
    }
    true
}

pub const VAR_NAMES: [&str; 3] = ["a1", "a2", "b2"];

/// Exponent triple ordered graded-lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grlex(pub [u32; 3]);

impl Grlex {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    fn divides(&self, other: &Grlex) -> bool {
        (0..3).all(|k| self.0[k] <= other.0[k])
    }
}

impl Ord for Grlex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total().cmp(&other.total()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Grlex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `(a1, a2, b2)` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly3 {
    terms: BTreeMap<Grlex, BigRational>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_terms([(c, [0, 0, 0])])
    }

    pub fn int(c: i64) -> Self {
        Self::constant(from_int(c))
    }

    /// Variable `k`: 0 is `a1`, 1 is `a2`, 2 is `b2`.
    pub fn var(k: usize) -> Self {
        let mut e = [0; 3];
        e[k] = 1;
        Self::from_terms([(BigRational::one(), e)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (BigRational, [u32; 3])>) -> Self {
        let mut p = Self::zero();
        for (c, e) in terms {
            p.add_term(Grlex(e), c);
        }
        p
    }

    fn add_term(&mut self, e: Grlex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Grlex, &BigRational)> {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(Grlex, BigRational)> {
        self.terms.iter().next_back().map(|(e, c)| (*e, c.clone()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = Grlex([e1.0[0] + e2.0[0], e1.0[1] + e2.0[1], e1.0[2] + e2.0[2]]);
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, x)| (x * c, e.0)))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    /// Exchanges `a2` and `b2`.
    pub fn swap_a2_b2(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| (c.clone(), [e.0[0], e.0[2], e.0[1]])))
    }

    pub fn eval(&self, x: &[BigRational; 3]) -> BigRational {
        self.terms
            .iter()
            .map(|(e, c)| (0..3).fold(c.clone(), |acc, k| acc * rational::pow(&x[k], e.0[k] as u64)))
            .sum()
    }

    pub fn eval_f64(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rational::to_f64(c) * (0..3).map(|k| x[k].powi(e.0[k] as i32)).product::<f64>())
            .sum()
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> [u32; 3] {
        let mut m = [u32::MAX; 3];
        for e in self.terms.keys() {
            for k in 0..3 {
                m[k] = m[k].min(e.0[k]);
            }
        }
        if self.is_zero() { [0; 3] } else { m }
    }

    /// Divides every term by the monomial `m`; errors if some term is not divisible.
    pub fn div_monomial(&self, m: [u32; 3]) -> Result<Self> {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if !Grlex(m).divides(e) {
                return Err(Error::InvalidArgument("monomial does not divide polynomial".into()));
            }
            out.add_term(Grlex([e.0[0] - m[0], e.0[1] - m[1], e.0[2] - m[2]]), c.clone());
        }
        Ok(out)
    }

    /// Multivariate division by a single divisor in graded-lexicographic order.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let (lead_e, lead_c) = d.leading().ok_or(Error::DegeneratePolynomial)?;
        let mut p = self.clone();
        let mut q = Self::zero();
        let mut r = Self::zero();
        while let Some((e, c)) = p.leading() {
            if lead_e.divides(&e) {
                let m = [e.0[0] - lead_e.0[0], e.0[1] - lead_e.0[1], e.0[2] - lead_e.0[2]];
                let factor = Self::from_terms([(&c / &lead_c, m)]);
                p = p.sub(&factor.mul(d));
                q = q.add(&factor);
            } else {
                p.terms.remove(&e);
                r.add_term(e, c);
            }
        }
        Ok((q, r))
    }
}

impl fmt::Display for Poly3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = match (idx, c.is_negative()) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let mag = c.abs();
            let mut factors: Vec<String> = Vec::new();
            for k in 0..3 {
                match e.0[k] {
                    0 => {}
                    1 => factors.push(VAR_NAMES[k].to_string()),
                    p => factors.push(format!("{}^{p}", VAR_NAMES[k])),
                }
            }
            let body = if factors.is_empty() {
                mag.to_string()
            } else if mag.is_one() {
                factors.join("*")
            } else {
                format!("{mag}*{}", factors.join("*"))
            };
            write!(f, "{sign}{body}")?;
        }
        Ok(())
    }
}
