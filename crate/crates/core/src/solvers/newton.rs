//! Newton iteration on the stationarity system, Armijo gradient ascent, and
//! Hessian-based classification of stationary points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Classification, SolveReport, SolvedPoint, SolverConfig};
use crate::error::{Error, Result};
use crate::model::Convention;
use crate::ranktwo::{
    min_product_entry, point_log_likelihood, residual_norm, stationarity_residual_raw, RankTwoPoint,
    FEASIBILITY_MARGIN,
};

const MAX_HALVINGS: usize = 40;
const GRAD_TOL: f64 = 5e-9;
const ARMIJO_C: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
const EIG_TOL: f64 = 1e-7;
const CLASSIFY_RESIDUAL: f64 = 1e-8;

fn split(x: &[f64]) -> (&[f64], &[f64]) {
    x.split_at(x.len() / 2)
}

fn feasible(x: &[f64]) -> bool {
    let (a, b) = split(x);
    min_product_entry(a, b) > FEASIBILITY_MARGIN
}

/// Rescales to `|a| = |b|`; the matrix is unchanged.
fn balance(x: &mut [f64]) {
    let n = x.len() / 2;
    let na = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = x[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if na > 0.0 && nb > 0.0 {
        let c = (nb / na).sqrt();
        x[..n].iter_mut().for_each(|v| *v *= c);
        x[n..].iter_mut().for_each(|v| *v /= c);
    }
}

fn project(x: &mut [f64]) {
    let n = x.len() / 2;
    let (lo, hi) = x.split_at_mut(n);
    for half in [lo, hi] {
        let mean = half.iter().sum::<f64>() / n as f64;
        half.iter_mut().for_each(|v| *v -= mean);
    }
}

fn residual(x: &[f64], rho: f64) -> Vec<f64> {
    let (a, b) = split(x);
    stationarity_residual_raw(a, b, rho)
}

/// Analytic derivative of the plain residual (the Hessian of `l / t`).
fn residual_jacobian(x: &[f64], rho: f64) -> DMatrix<f64> {
    let (a, b) = split(x);
    let n = a.len();
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let mut diag = 0.0;
        for k in 0..n {
            let e = 1.0 + a[i] * b[k];
            diag -= b[k] * b[k] / (e * e);
            jac[(i, n + k)] += 1.0 / (e * e);
        }
        let e = 1.0 + a[i] * b[i];
        diag -= (rho - 1.0) * b[i] * b[i] / (e * e);
        jac[(i, n + i)] += (rho - 1.0) / (e * e);
        jac[(i, i)] = diag;
    }
    for j in 0..n {
        let mut diag = 0.0;
        for k in 0..n {
            let e = 1.0 + a[k] * b[j];
            diag -= a[k] * a[k] / (e * e);
            jac[(n + j, k)] += 1.0 / (e * e);
        }
        let e = 1.0 + a[j] * b[j];
        diag -= (rho - 1.0) * a[j] * a[j] / (e * e);
        jac[(n + j, j)] += (rho - 1.0) / (e * e);
        jac[(n + j, n + j)] = diag;
    }
    jac
}

/// Index used for the gauge row `a_k - b_k = 0`: the largest `a_k b_k`.
fn gauge_pivot(x: &[f64]) -> usize {
    let (a, b) = split(x);
    (0..a.len()).fold(0, |best, k| if a[k] * b[k] > a[best] * b[best] { k } else { best })
}

fn full_system(x: &[f64], rho: f64, pivot: usize) -> DVector<f64> {
    let n = x.len() / 2;
    let mut f = residual(x, rho);
    f.push(x[..n].iter().sum());
    f.push(x[n..].iter().sum());
    f.push(x[pivot] - x[n + pivot]);
    DVector::from_vec(f)
}

fn full_jacobian(x: &[f64], rho: f64, pivot: usize) -> DMatrix<f64> {
    let n = x.len() / 2;
    let core = residual_jacobian(x, rho);
    let mut jac = DMatrix::zeros(2 * n + 3, 2 * n);
    jac.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&core);
    for k in 0..n {
        jac[(2 * n, k)] = 1.0;
        jac[(2 * n + 1, n + k)] = 1.0;
    }
    jac[(2 * n + 2, pivot)] = 1.0;
    jac[(2 * n + 2, n + pivot)] = -1.0;
    jac
}

fn to_point(x: &[f64]) -> Result<RankTwoPoint> {
    let (a, b) = split(x);
    RankTwoPoint::projected(a.to_vec(), b.to_vec())
}

fn finish(x: &[f64], s: f64, t: f64, iterations: usize, converged: bool, trace: Vec<f64>) -> Result<SolveReport> {
    let pt = to_point(x)?;
    let rho = s / t;
    let res = residual_norm(&pt.stationarity_residual(rho)?);
    let classification = if pt.is_zero() {
        Classification::Degenerate
    } else if converged {
        classify_stationary(&pt, rho).unwrap_or(Classification::Unclassified)
    } else {
        Classification::Unclassified
    };
    Ok(SolveReport {
        loglik: pt.log_likelihood(s, t),
        point: SolvedPoint::RankTwo(pt),
        convention: Convention::SumNsq,
        residual: res,
        iterations,
        converged,
        classification,
        start_seed: None,
        trace,
    })
}

pub(crate) fn newton_weighted(pt0: &RankTwoPoint, s: f64, t: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let rho = s / t;
    let mut x: Vec<f64> = pt0.a().iter().chain(pt0.b()).copied().collect();
    if !feasible(&x) {
        return Err(Error::Infeasible { min_entry: pt0.min_entry() });
    }
    balance(&mut x);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let rn = residual_norm(&residual(&x, rho));
        trace.push(rn);
        if rn < cfg.tol {
            converged = true;
            break;
        }
        let pivot = gauge_pivot(&x);
        let f = full_system(&x, rho, pivot);
        let jac = full_jacobian(&x, rho, pivot);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(delta) = svd.solve(&(-&f), 1e-13 * smax.max(1e-300)) else { break };
        let f_norm = f.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi + lambda * di).collect();
            if feasible(&cand) && full_system(&cand, rho, pivot).norm() < f_norm {
                accepted = Some(cand);
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some(mut cand) => {
                balance(&mut cand);
                x = cand;
            }
            None => break,
        }
    }
    if !converged {
        converged = residual_norm(&residual(&x, rho)) < cfg.tol;
    }
    finish(&x, s, t, iterations, converged, trace)
}

/// Damped Gauss-Newton on `[residual; sum a; sum b; a_k - b_k]`, where `k`
/// maximizes `a_k b_k`. The reported log-likelihood uses weights `(rho, 1)`.
pub fn newton_stationary(pt0: &RankTwoPoint, rho: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    newton_weighted(pt0, rho, 1.0, cfg)
}

/// Backtracking ascent on `log L` along the gradient projected onto
/// `sum a = sum b = 0`; stops when that gradient, divided by `t`, drops below
/// `5e-9`.
pub fn projected_gradient_ascent(pt0: &RankTwoPoint, s: f64, t: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let rho = s / t;
    let mut x: Vec<f64> = pt0.a().iter().chain(pt0.b()).copied().collect();
    if !feasible(&x) {
        return Err(Error::Infeasible { min_entry: pt0.min_entry() });
    }
    balance(&mut x);
    let objective = |x: &[f64]| {
        let (a, b) = split(x);
        point_log_likelihood(a, b, s, t)
    };
    let mut fx = objective(&x);
    let mut step = 1.0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let mut d: Vec<f64> = residual(&x, rho).into_iter().map(|g| g * t).collect();
        project(&mut d);
        let gn = residual_norm(&d);
        trace.push(gn);
        if gn < GRAD_TOL * t {
            converged = true;
            break;
        }
        let d2: f64 = d.iter().map(|v| v * v).sum();
        step *= 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if feasible(&cand) {
                let fc = objective(&cand);
                if fc >= fx + ARMIJO_C * step * d2 {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        balance(&mut x);
    }
    let mut rep = finish(&x, s, t, iterations, converged, trace)?;
    rep.converged = converged && rep.residual < CLASSIFY_RESIDUAL;
    if !rep.converged && rep.classification != Classification::Degenerate {
        rep.classification = Classification::Unclassified;
    }
    Ok(rep)
}

/// Orthonormal basis of `{sum a = 0, sum b = 0}` with `(a, -b)` removed.
fn tangent_basis(pt: &RankTwoPoint) -> DMatrix<f64> {
    let n = pt.n();
    let dim = 2 * n;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut e1 = DVector::zeros(dim);
    let mut e2 = DVector::zeros(dim);
    for k in 0..n {
        e1[k] = 1.0;
        e2[n + k] = 1.0;
    }
    let mut gauge = DVector::zeros(dim);
    for k in 0..n {
        gauge[k] = pt.a()[k];
        gauge[n + k] = -pt.b()[k];
    }
    let mut excluded: Vec<DVector<f64>> = Vec::new();
    for v in [e1, e2, gauge] {
        let mut w = v;
        for u in &excluded {
            w -= u * u.dot(&w);
        }
        if w.norm() > 1e-12 {
            excluded.push(w.normalize());
        }
    }
    let mut span = excluded.clone();
    for k in 0..dim {
        let mut w = DVector::zeros(dim);
        w[k] = 1.0;
        for u in &span {
            w -= u * u.dot(&w);
        }
        for u in &span {
            w -= u * u.dot(&w);
        }
        if w.norm() > 1e-8 {
            let w = w.normalize();
            span.push(w.clone());
            basis.push(w);
        }
    }
    DMatrix::from_columns(&basis)
}

/// Projected Hessian test at a stationary point.
///
/// The Hessian of `l / t` is assembled column by column from central
/// differences (step `1e-5`) of the analytic gradient, symmetrized, and
/// restricted to the tangent space of the zero-sum constraints with the
/// gauge direction `(a, -b)` removed.
pub fn classify_stationary(pt: &RankTwoPoint, rho: f64) -> Result<Classification> {
    let res = residual_norm(&pt.stationarity_residual(rho)?);
    if res >= CLASSIFY_RESIDUAL {
        return Err(Error::ResidualPrecondition { residual: res });
    }
    if pt.is_zero() {
        return Ok(Classification::Degenerate);
    }
    let x: Vec<f64> = pt.a().iter().chain(pt.b()).copied().collect();
    let dim = x.len();
    let mut hess = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += FD_STEP;
        xm[k] -= FD_STEP;
        let gp = residual(&xp, rho);
        let gm = residual(&xm, rho);
        for r in 0..dim {
            hess[(r, k)] = (gp[r] - gm[r]) / (2.0 * FD_STEP);
        }
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let q = tangent_basis(pt);
    let reduced = q.transpose() * hess * &q;
    let eig = SymmetricEigen::new(reduced).eigenvalues;
    if eig.iter().all(|&l| l < -EIG_TOL) {
        Ok(Classification::LocalMax)
    } else if eig.iter().any(|&l| l > EIG_TOL) {
        Ok(Classification::Saddle)
    } else {
        Ok(Classification::Unclassified)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern_point(c: [f64; 4], alpha: f64) -> RankTwoPoint {
        let v: Vec<f64> = c.iter().map(|x| x * alpha).collect();
        RankTwoPoint::new(v.clone(), v).unwrap()
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let x = vec![0.3, -0.1, 0.25, -0.45, 0.2, 0.1, -0.5, 0.2];
        let jac = residual_jacobian(&x, 2.5);
        for k in 0..8 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += 1e-6;
            xm[k] -= 1e-6;
            let (gp, gm) = (residual(&xp, 2.5), residual(&xm, 2.5));
            for r in 0..8 {
                assert!((jac[(r, k)] - (gp[r] - gm[r]) / 2e-6).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn newton_from_perturbed_p2() {
        let al = 1.0 / 5f64.sqrt();
        let noise = [1e-3, -7e-4, 4e-4, -2e-4];
        let a: Vec<f64> = [al, al, -al, -al].iter().zip(noise).map(|(x, e)| x + e).collect();
        let b: Vec<f64> = [al, al, -al, -al].iter().zip(noise.iter().rev()).map(|(x, e)| x + e).collect();
        let pt = RankTwoPoint::projected(a, b).unwrap();
        let rep = newton_stationary(&pt, 2.0, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let c = rep.rank_two().unwrap().canonicalize().unwrap();
        assert!((c.a()[0] - al).abs() <= 1e-10, "{:?}", c);
        assert_eq!(rep.classification, Classification::LocalMax);
    }

    #[test]
    fn newton_finds_pzzn() {
        let pt = pattern_point([1.0, 0.0, 0.0, -1.0], 0.5);
        let rep = newton_stationary(&pt, 2.0, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let c = rep.rank_two().unwrap().canonicalize().unwrap();
        assert!((c.a()[0] - 1.0 / 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn newton_at_zero_is_degenerate() {
        let rep = newton_stationary(&RankTwoPoint::zero(4), 2.0, &SolverConfig::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.residual, 0.0);
        assert_eq!(rep.classification, Classification::Degenerate);
    }

    #[test]
    fn classification_of_candidates() {
        let p2 = pattern_point([1.0, 1.0, -1.0, -1.0], 1.0 / 5f64.sqrt());
        assert_eq!(classify_stationary(&p2, 2.0).unwrap(), Classification::LocalMax);
        let p4 = pattern_point([1.0, 0.0, 0.0, -1.0], 1.0 / 3f64.sqrt());
        assert!(classify_stationary(&p4, 2.0).is_ok());
        assert_eq!(classify_stationary(&RankTwoPoint::zero(4), 2.0).unwrap(), Classification::Degenerate);
        let off = pattern_point([1.0, 1.0, -1.0, -1.0], 0.4);
        assert!(matches!(classify_stationary(&off, 2.0), Err(Error::ResidualPrecondition { .. })));
    }

    #[test]
    fn gradient_ascent_increases_and_converges() {
        let pt = RankTwoPoint::projected(vec![0.2, 0.1, -0.05, -0.25], vec![0.15, 0.2, -0.1, -0.25]).unwrap();
        let start = pt.log_likelihood(2.0, 1.0);
        let rep = projected_gradient_ascent(&pt, 2.0, 1.0, &SolverConfig::default()).unwrap();
        assert!(rep.loglik > start);
        assert!(rep.residual < 1e-6);
    }
}
