//! EM for the latent class model `p_ij = sum_h lambda_h R_hi C_hj`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classification, SolveReport, SolvedPoint, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Convention, ProbMatrix, WeightTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentClassModel {
    pub r: usize,
    pub lambda: Vec<f64>,
    /// `row_cond[h][i] = p(x1 = i | h)`.
    pub row_cond: Vec<Vec<f64>>,
    /// `col_cond[h][j] = p(x2 = j | h)`.
    pub col_cond: Vec<Vec<f64>>,
}

const PROB_TOL: f64 = 1e-9;

impl LatentClassModel {
    pub fn new(lambda: Vec<f64>, row_cond: Vec<Vec<f64>>, col_cond: Vec<Vec<f64>>) -> Result<Self> {
        let r = lambda.len();
        if r == 0 || row_cond.len() != r || col_cond.len() != r {
            return Err(Error::InvalidArgument("class counts disagree".into()));
        }
        let n = row_cond[0].len();
        let simplex = |v: &[f64]| v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() < PROB_TOL;
        if !simplex(&lambda) {
            return Err(Error::InvalidArgument("lambda is not a probability vector".into()));
        }
        for c in row_cond.iter().chain(&col_cond) {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len() });
            }
            if !simplex(c) {
                return Err(Error::InvalidArgument("conditional is not a probability vector".into()));
            }
        }
        Ok(LatentClassModel { r, lambda, row_cond, col_cond })
    }

    /// All conditionals uniform, classes equally weighted.
    pub fn uniform(r: usize, n: usize) -> Self {
        LatentClassModel {
            r,
            lambda: vec![1.0 / r as f64; r],
            row_cond: vec![vec![1.0 / n as f64; n]; r],
            col_cond: vec![vec![1.0 / n as f64; n]; r],
        }
    }

    /// Normalized uniform draws for the conditionals, uniform `lambda`.
    pub fn random(r: usize, n: usize, rng: &mut impl Rng) -> Self {
        let mut draw = || {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let row_cond = (0..r).map(|_| draw()).collect();
        let col_cond = (0..r).map(|_| draw()).collect();
        LatentClassModel { r, lambda: vec![1.0 / r as f64; r], row_cond, col_cond }
    }

    pub fn n(&self) -> usize {
        self.row_cond[0].len()
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        (0..self.r).map(|h| self.lambda[h] * self.row_cond[h][i] * self.col_cond[h][j]).sum()
    }

    pub fn matrix(&self) -> ProbMatrix {
        let n = self.n();
        let rows = (0..n).map(|i| (0..n).map(|j| self.cell(i, j)).collect()).collect();
        ProbMatrix::from_rows(rows, Convention::SumOne).expect("mixture of product distributions sums to one")
    }

    fn log_likelihood(&self, w: &[Vec<f64>]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in w.iter().enumerate() {
            for (j, &wij) in row.iter().enumerate() {
                if wij > 0.0 {
                    acc += wij * self.cell(i, j).ln();
                }
            }
        }
        acc
    }

    fn max_change(&self, other: &Self) -> f64 {
        let flat = |m: &Self| {
            m.lambda
                .iter()
                .chain(m.row_cond.iter().flatten())
                .chain(m.col_cond.iter().flatten())
                .copied()
                .collect::<Vec<_>>()
        };
        flat(self).iter().zip(flat(other)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn em_step(&self, w: &[Vec<f64>], total: f64) -> Self {
        let n = self.n();
        let r = self.r;
        let mut lam = vec![0.0; r];
        let mut rows = vec![vec![0.0; n]; r];
        let mut cols = vec![vec![0.0; n]; r];
        let mut post = vec![0.0; r];
        for i in 0..n {
            for j in 0..n {
                let wij = w[i][j];
                if wij == 0.0 {
                    continue;
                }
                let mut z = 0.0;
                for h in 0..r {
                    post[h] = self.lambda[h] * self.row_cond[h][i] * self.col_cond[h][j];
                    z += post[h];
                }
                if z <= 0.0 {
                    continue;
                }
                for h in 0..r {
                    let m = wij * post[h] / z;
                    lam[h] += m;
                    rows[h][i] += m;
                    cols[h][j] += m;
                }
            }
        }
        for h in 0..r {
            let mass = lam[h];
            if mass > 0.0 {
                rows[h].iter_mut().for_each(|x| *x /= mass);
                cols[h].iter_mut().for_each(|x| *x /= mass);
            } else {
                // an emptied class keeps its old conditionals
                rows[h].clone_from(&self.row_cond[h]);
                cols[h].clone_from(&self.col_cond[h]);
            }
            lam[h] = mass / total;
        }
        LatentClassModel { r, lambda: lam, row_cond: rows, col_cond: cols }
    }
}

fn check_inputs(counts: &WeightTable, r: usize) -> Result<()> {
    if r < 1 {
        return Err(Error::InvalidArgument("class count must be at least 1".into()));
    }
    if counts.total() <= 0.0 {
        return Err(Error::InvalidWeights("all counts are zero".into()));
    }
    Ok(())
}

fn run(counts: &[Vec<f64>], total: f64, init: LatentClassModel, cfg: &SolverConfig, seed: Option<u64>) -> SolveReport {
    let mut model = init;
    let mut ll = model.log_likelihood(counts);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = model.em_step(counts, total);
        let next_ll = next.log_likelihood(counts);
        iterations += 1;
        model = next;
        trace.push(next_ll);
        let gain = next_ll - ll;
        ll = next_ll;
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    let residual = model.max_change(&model.em_step(counts, total));
    SolveReport {
        point: SolvedPoint::Latent(model),
        loglik: ll,
        convention: Convention::SumOne,
        residual,
        iterations,
        converged,
        classification: Classification::Unclassified,
        start_seed: seed,
        trace,
    }
}

/// Every EM run: `cfg.starts` random starts (start `k` seeded with
/// `cfg.seed ^ k`), or the single run from `init` when given.
pub fn em_runs(
    counts: &WeightTable,
    r: usize,
    cfg: &SolverConfig,
    init: Option<&LatentClassModel>,
) -> Result<Vec<SolveReport>> {
    check_inputs(counts, r)?;
    cfg.validate()?;
    let w = counts.to_full();
    let total = counts.total();
    let n = counts.n();
    if let Some(m) = init {
        if m.r != r || m.n() != n {
            return Err(Error::InvalidArgument("initial model shape does not match".into()));
        }
        return Ok(vec![run(&w, total, m.clone(), cfg, None)]);
    }
    Ok((0..cfg.starts)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.start_seed(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = LatentClassModel::random(r, n, &mut rng);
            run(&w, total, m, cfg, Some(seed))
        })
        .collect())
}

/// Best EM run by log-likelihood (earliest start wins ties).
pub fn em_fit(
    counts: &WeightTable,
    r: usize,
    cfg: &SolverConfig,
    init: Option<&LatentClassModel>,
) -> Result<SolveReport> {
    let runs = em_runs(counts, r, cfg, init)?;
    runs.into_iter()
        .reduce(|best, x| if x.loglik > best.loglik { x } else { best })
        .ok_or(Error::NoSuccessfulStarts)
}
