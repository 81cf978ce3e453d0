//! Weight tables, probability matrices and likelihood evaluation.
//!
//! Matrices carry a normalization convention: [`Convention::SumOne`] for
//! probability tables and [`Convention::SumNsq`] for the scaled form in which
//! the entries of an `n x n` matrix sum to `n^2` (so the all-ones matrix `J` is
//! the uniform table). Likelihood comparisons are invariant under the change of
//! convention because both sides pick up the same factor `(1/n^2)^{sum w}`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, as_exponent};

/// Absolute tolerance on the entry sum of a `SUM_ONE` matrix.
pub const SUM_ONE_TOL: f64 = 1e-12;
/// Absolute tolerance on the entry sum of a `SUM_NSQ` matrix with `n <= 16`.
pub const SUM_NSQ_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    #[serde(rename = "SUM_ONE")]
    SumOne,
    #[serde(rename = "SUM_NSQ")]
    SumNsq,
}

impl Convention {
    pub fn target_sum(self, n: usize) -> f64 {
        match self {
            Convention::SumOne => 1.0,
            Convention::SumNsq => (n * n) as f64,
        }
    }

    fn tolerance(self, n: usize) -> f64 {
        match self {
            Convention::SumOne => SUM_ONE_TOL,
            Convention::SumNsq => SUM_NSQ_TOL * ((n as f64 / 16.0).powi(2)).max(1.0),
        }
    }
}

/// Per-cell likelihood exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightTableRepr", into = "WeightTableRepr")]
pub struct WeightTable {
    n: usize,
    kind: WeightKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// Diagonal cells weigh `s`, off-diagonal cells weigh `t`.
    Symmetric { s: f64, t: f64 },
    Full { w: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum WeightTableRepr {
    Symmetric { n: usize, s: f64, t: f64 },
    Full { n: usize, w: Vec<Vec<f64>> },
}

impl TryFrom<WeightTableRepr> for WeightTable {
    type Error = Error;
    fn try_from(r: WeightTableRepr) -> Result<Self> {
        match r {
            WeightTableRepr::Symmetric { n, s, t } => WeightTable::symmetric(n, s, t),
            WeightTableRepr::Full { n, w } => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: w.len() });
                }
                WeightTable::full(w)
            }
        }
    }
}

impl From<WeightTable> for WeightTableRepr {
    fn from(t: WeightTable) -> Self {
        match t.kind {
            WeightKind::Symmetric { s, t: tt } => WeightTableRepr::Symmetric { n: t.n, s, t: tt },
            WeightKind::Full { w } => WeightTableRepr::Full { n: t.n, w },
        }
    }
}

impl WeightTable {
    pub fn symmetric(n: usize, s: f64, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidWeights("n must be positive".into()));
        }
        if !(s.is_finite() && t.is_finite() && s > 0.0 && t > 0.0) {
            return Err(Error::InvalidWeights(format!("need s > 0 and t > 0, got s = {s}, t = {t}")));
        }
        Ok(WeightTable { n, kind: WeightKind::Symmetric { s, t } })
    }

    pub fn full(w: Vec<Vec<f64>>) -> Result<Self> {
        let n = w.len();
        if n == 0 {
            return Err(Error::InvalidWeights("empty table".into()));
        }
        let mut any_positive = false;
        for (i, row) in w.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidWeights(format!("weight {x} at ({i}, {j})")));
                }
                any_positive |= x > 0.0;
            }
        }
        if !any_positive {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(WeightTable { n, kind: WeightKind::Full { w } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            WeightKind::Symmetric { s, t } => {
                if i == j {
                    *s
                } else {
                    *t
                }
            }
            WeightKind::Full { w } => w[i][j],
        }
    }

    pub fn to_full(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.weight(i, j)).collect())
            .collect()
    }

    pub fn expand(&self) -> WeightTable {
        WeightTable { n: self.n, kind: WeightKind::Full { w: self.to_full() } }
    }

    pub fn total(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.weight(i, j))
            .sum()
    }

    /// `(s, t)` when the table has constant diagonal and constant off-diagonal
    /// weights, whether declared symmetric or not.
    pub fn as_symmetric(&self) -> Option<(f64, f64)> {
        match &self.kind {
            WeightKind::Symmetric { s, t } => Some((*s, *t)),
            WeightKind::Full { w } => {
                let s = w[0][0];
                let t = if self.n > 1 { w[0][1] } else { s };
                let uniform = (0..self.n).all(|i| {
                    (0..self.n).all(|j| w[i][j] == if i == j { s } else { t })
                });
                (uniform && s > 0.0 && t > 0.0).then_some((s, t))
            }
        }
    }
}

/// The nucleotide-pair contingency table: 4 on the diagonal, 2 elsewhere.
pub fn swiss_counts() -> WeightTable {
    let w = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 4.0 } else { 2.0 }).collect())
        .collect();
    WeightTable::full(w).expect("static table is valid")
}

/// Square nonnegative matrix with a declared normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMatrix {
    n: usize,
    entries: Vec<f64>,
    convention: Convention,
}

impl ProbMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, convention: Convention) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, x) in row.into_iter().enumerate() {
                if x.is_nan() || x < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j, value: x });
                }
                entries.push(x);
            }
        }
        Self::from_flat(n, entries, convention)
    }

    pub(crate) fn from_flat(n: usize, entries: Vec<f64>, convention: Convention) -> Result<Self> {
        if let Some((k, &x)) = entries.iter().enumerate().find(|(_, x)| x.is_nan() || **x < 0.0) {
            return Err(Error::NegativeEntry { row: k / n, col: k % n, value: x });
        }
        let sum: f64 = entries.iter().sum();
        let target = convention.target_sum(n);
        if (sum - target).abs() > convention.tolerance(n) {
            return Err(Error::InvalidMatrix(format!(
                "entries sum to {sum}, expected {target} for {convention:?}"
            )));
        }
        Ok(ProbMatrix { n, entries, convention })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rescales to the target convention (`x n^2` or `/ n^2`).
    pub fn convert(&self, target: Convention) -> ProbMatrix {
        let factor = target.target_sum(self.n) / self.convention.target_sum(self.n);
        let entries = if factor == 1.0 {
            self.entries.clone()
        } else {
            self.entries.iter().map(|x| x * factor).collect()
        };
        ProbMatrix { n: self.n, entries, convention: target }
    }

    /// Same matrix with rows and columns permuted by `perm` (new index k holds old `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> ProbMatrix {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.get(perm[k / n], perm[k % n])).collect();
        ProbMatrix { n, entries, convention: self.convention }
    }
}

/// `sum_ij w_ij ln p_ij`, with `0 * ln 0 = 0` and `-inf` when a weighted cell is zero.
pub fn log_likelihood(p: &ProbMatrix, w: &WeightTable) -> Result<f64> {
    if p.n != w.n {
        return Err(Error::DimensionMismatch { expected: w.n, found: p.n });
    }
    let mut acc = 0.0;
    for i in 0..p.n {
        for j in 0..p.n {
            let x = p.get(i, j);
            let wij = w.weight(i, j);
            if x < 0.0 {
                return Err(Error::NegativeEntry { row: i, col: j, value: x });
            }
            if wij == 0.0 {
                continue;
            }
            if x == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += wij * x.ln();
        }
    }
    Ok(acc)
}

/// Square matrix of exact rationals with a declared normalization (checked exactly).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    n: usize,
    entries: Vec<BigRational>,
    convention: Convention,
}

impl ExactMatrix {
    pub fn from_rows(rows: Vec<Vec<BigRational>>, convention: Convention) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, x) in row.into_iter().enumerate() {
                if x.is_negative() {
                    return Err(Error::NegativeEntry { row: i, col: j, value: rational::to_f64(&x) });
                }
                entries.push(x);
            }
        }
        let sum: BigRational = entries.iter().sum();
        let target = match convention {
            Convention::SumOne => BigRational::one(),
            Convention::SumNsq => rational::from_int((n * n) as i64),
        };
        if sum != target {
            return Err(Error::InvalidMatrix(format!("entries sum to {sum}, expected {target}")));
        }
        Ok(ExactMatrix { n, entries, convention })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<BigRational>> {
        self.entries.chunks(self.n).map(<[BigRational]>::to_vec).collect()
    }

    pub fn convert(&self, target: Convention) -> ExactMatrix {
        let nsq = rational::from_int((self.n * self.n) as i64);
        let entries = match (self.convention, target) {
            (a, b) if a == b => self.entries.clone(),
            (Convention::SumOne, Convention::SumNsq) => self.entries.iter().map(|x| x * &nsq).collect(),
            _ => self.entries.iter().map(|x| x / &nsq).collect(),
        };
        ExactMatrix { n: self.n, entries, convention: target }
    }

    pub fn to_f64(&self) -> ProbMatrix {
        ProbMatrix {
            n: self.n,
            entries: self.entries.iter().map(rational::to_f64).collect(),
            convention: self.convention,
        }
    }
}

/// `prod_ij p_ij^{w_ij}` exactly; requires nonnegative integer weights.
pub fn exact_likelihood(p: &ExactMatrix, w: &WeightTable) -> Result<BigRational> {
    if p.n != w.n {
        return Err(Error::DimensionMismatch { expected: w.n, found: p.n });
    }
    let mut acc = BigRational::one();
    for i in 0..p.n {
        for j in 0..p.n {
            let wij = w.weight(i, j);
            let e = as_exponent(wij).ok_or(Error::NonIntegerExponent(wij))?;
            if e == 0 {
                continue;
            }
            let x = p.get(i, j);
            if x.is_zero() {
                return Ok(BigRational::zero());
            }
            acc *= rational::pow(x, e);
        }
    }
    Ok(acc)
}

/// On-disk matrix form: `{"n":4,"convention":"SUM_ONE","entries":[[...]]}`
/// where entries are numbers or `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub convention: Convention,
    pub entries: Vec<Vec<MatrixEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Float(f64),
    Exact(String),
}

impl MatrixFile {
    pub fn from_prob(p: &ProbMatrix) -> Self {
        MatrixFile {
            n: p.n,
            convention: p.convention,
            entries: p.rows().into_iter().map(|r| r.into_iter().map(MatrixEntry::Float).collect()).collect(),
        }
    }

    pub fn from_exact(p: &ExactMatrix) -> Self {
        MatrixFile {
            n: p.n,
            convention: p.convention,
            entries: p
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(|q| MatrixEntry::Exact(q.to_string())).collect())
                .collect(),
        }
    }

    fn check_n(&self) -> Result<()> {
        if self.entries.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.entries.len() });
        }
        Ok(())
    }

    pub fn to_prob(&self) -> Result<ProbMatrix> {
        self.check_n()?;
        let rows = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        MatrixEntry::Float(x) => Ok(*x),
                        MatrixEntry::Exact(s) => rational::parse_rational(s).map(|q| rational::to_f64(&q)),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ProbMatrix::from_rows(rows, self.convention)
    }

    /// Exact matrix; float entries are taken at their exact binary value.
    pub fn to_exact(&self) -> Result<ExactMatrix> {
        self.check_n()?;
        let rows = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        MatrixEntry::Float(x) => rational::from_f64(*x),
                        MatrixEntry::Exact(s) => rational::parse_rational(s),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ExactMatrix::from_rows(rows, self.convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn p2_exact() -> ExactMatrix {
        let (h, l) = (q("6/5"), q("4/5"));
        let rows = (0..4)
            .map(|i| (0..4).map(|j| if (i < 2) == (j < 2) { h.clone() } else { l.clone() }).collect())
            .collect();
        ExactMatrix::from_rows(rows, Convention::SumNsq).unwrap()
    }

    fn p1_exact() -> ExactMatrix {
        let rows = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| match (i == 3, j == 3) {
                        (false, false) => q("16/15"),
                        (true, true) => q("8/5"),
                        _ => q("4/5"),
                    })
                    .collect()
            })
            .collect();
        ExactMatrix::from_rows(rows, Convention::SumNsq).unwrap()
    }

    fn final_sum_one() -> ProbMatrix {
        let rows = (0..4)
            .map(|i| (0..4).map(|j| if (i < 2) == (j < 2) { 3.0 / 40.0 } else { 2.0 / 40.0 }).collect())
            .collect();
        ProbMatrix::from_rows(rows, Convention::SumOne).unwrap()
    }

    #[test]
    fn ones_matrix_has_zero_log_likelihood() {
        let j = ProbMatrix::from_rows(vec![vec![1.0; 4]; 4], Convention::SumNsq).unwrap();
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        assert_eq!(log_likelihood(&j, &w).unwrap(), 0.0);
    }

    #[test]
    fn p2_log_likelihood_counts_multiplicities() {
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        let got = log_likelihood(&p2_exact().to_f64(), &w).unwrap();
        let want = 12.0 * (6.0f64 / 5.0).ln() + 8.0 * (4.0f64 / 5.0).ln();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn final_matrix_log_likelihood() {
        let w = WeightTable::symmetric(4, 4.0, 2.0).unwrap();
        let got = log_likelihood(&final_sum_one(), &w).unwrap();
        let want = 24.0 * (3.0f64 / 40.0).ln() + 16.0 * (1.0f64 / 20.0).ln();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn zero_entry_under_positive_weight_is_neg_infinity() {
        let mut rows = vec![vec![1.0; 4]; 4];
        rows[0][1] = 0.0;
        rows[0][0] = 2.0;
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        assert_eq!(log_likelihood(&p, &w).unwrap(), f64::NEG_INFINITY);

        let mut wz = w.to_full();
        wz[0][1] = 0.0;
        let wz = WeightTable::full(wz).unwrap();
        assert!(log_likelihood(&p, &wz).unwrap().is_finite());
    }

    #[test]
    fn dimension_mismatch_and_negative_entries_are_errors() {
        let p = ProbMatrix::from_rows(vec![vec![1.0; 3]; 3], Convention::SumNsq).unwrap();
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        assert!(matches!(log_likelihood(&p, &w), Err(Error::DimensionMismatch { .. })));
        let mut rows = vec![vec![1.0; 2]; 2];
        rows[0][0] = -1.0;
        rows[1][1] = 3.0;
        assert!(matches!(ProbMatrix::from_rows(rows, Convention::SumNsq), Err(Error::NegativeEntry { .. })));
    }

    #[test]
    fn exact_likelihoods_and_ordering() {
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        let j = ExactMatrix::from_rows(vec![vec![BigRational::one(); 4]; 4], Convention::SumNsq).unwrap();
        assert_eq!(exact_likelihood(&j, &w).unwrap(), BigRational::one());

        let l2 = exact_likelihood(&p2_exact(), &w).unwrap();
        assert_eq!(l2, rational::pow(&q("6/5"), 12) * rational::pow(&q("4/5"), 8));
        let l1 = exact_likelihood(&p1_exact(), &w).unwrap();
        assert_eq!(
            l1,
            rational::pow(&q("16/15"), 12) * rational::pow(&q("8/5"), 2) * rational::pow(&q("4/5"), 6)
        );
        assert!(l1 < l2);
    }

    #[test]
    fn non_integer_exponent_is_rejected() {
        let w = WeightTable::symmetric(4, 2.5, 1.0).unwrap();
        assert!(matches!(exact_likelihood(&p2_exact(), &w), Err(Error::NonIntegerExponent(_))));
    }

    #[test]
    fn conversion_between_conventions() {
        let nsq = final_sum_one().convert(Convention::SumNsq);
        for (x, y) in nsq.entries().iter().zip(p2_exact().to_f64().entries()) {
            assert!((x - y).abs() < 1e-15);
        }
        let exact = p2_exact().convert(Convention::SumOne);
        assert_eq!(exact.get(0, 0), &q("3/40"));
        assert_eq!(exact.get(0, 2), &q("1/20"));
        assert_eq!(exact.convert(Convention::SumNsq), p2_exact());

        let uniform = ProbMatrix::from_rows(vec![vec![1.0 / 16.0; 4]; 4], Convention::SumOne).unwrap();
        assert!(uniform.convert(Convention::SumNsq).entries().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn swiss_table_is_expanded_symmetric_four_two() {
        let c = swiss_counts();
        assert_eq!(c.to_full(), WeightTable::symmetric(4, 4.0, 2.0).unwrap().to_full());
        assert_eq!(c.as_symmetric(), Some((4.0, 2.0)));
        assert_eq!(c.total(), 40.0);
    }

    #[test]
    fn weight_table_validation() {
        assert!(WeightTable::symmetric(4, 0.0, 1.0).is_err());
        assert!(WeightTable::symmetric(4, 1.0, 2.0).is_ok());
        assert!(WeightTable::full(vec![vec![0.0; 2]; 2]).is_err());
        assert!(WeightTable::full(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn json_forms_round_trip() {
        let t: WeightTable = serde_json::from_str(r#"{"n":4,"kind":"symmetric","s":4,"t":2}"#).unwrap();
        assert_eq!(t.as_symmetric(), Some((4.0, 2.0)));
        let full: WeightTable =
            serde_json::from_str(r#"{"n":2,"kind":"full","w":[[4,2],[2,4]]}"#).unwrap();
        assert_eq!(full.weight(0, 1), 2.0);
        assert!(serde_json::from_str::<WeightTable>(r#"{"n":3,"kind":"full","w":[[4,2],[2,4]]}"#).is_err());
        let back: WeightTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);

        let m: MatrixFile = serde_json::from_str(
            r#"{"n":2,"convention":"SUM_ONE","entries":[["3/8","1/8"],["1/8",0.375]]}"#,
        )
        .unwrap();
        let exact = m.to_exact().unwrap();
        assert_eq!(exact.get(1, 1), &q("3/8"));
        assert!((m.to_prob().unwrap().get(0, 0) - 0.375).abs() < 1e-16);
    }

    #[test]
    fn permutation_keeps_symmetric_log_likelihood() {
        let rows = vec![
            vec![1.3, 0.9, 1.0, 0.8],
            vec![1.1, 1.2, 0.7, 1.0],
            vec![0.9, 1.0, 1.4, 0.7],
            vec![0.6, 0.8, 1.1, 1.5],
        ];
        let p = ProbMatrix::from_rows(rows, Convention::SumNsq).unwrap();
        let w = WeightTable::symmetric(4, 2.0, 1.0).unwrap();
        let base = log_likelihood(&p, &w).unwrap();
        let perm = p.permuted(&[2, 0, 3, 1]);
        assert!((log_likelihood(&perm, &w).unwrap() - base).abs() < 1e-13);
    }
}
