//! End-to-end certificates: exact candidate comparison, multistart dominance
//! and the structural checks, bundled with a verdict.

use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;

use super::lemmas::{check_bounds, f3_region_scan, lemma_a2_factorization, sign_order_check};
use crate::candidates::{best_of, block_matrix_exact, corner_matrix_exact, enumerate_n4, Candidate, CandidateSet};
use crate::error::{Error, Result};
use crate::model::{Convention, MatrixFile};
use crate::ranktwo::{residual_norm, RankTwoPoint};
use crate::rational::{from_f64, from_int};
use crate::solvers::{multistart, serialize_17, Classification, MultistartReport, SolverConfig};

const DOMINANCE_TOL: f64 = 1e-8;
const STATIONARY_TOL: f64 = 1e-10;
const VALUE_TOL: f64 = 1e-7;
const SCAN_RESOLUTION: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CertifiedCandidateMax,
    Supported,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CertifiedCandidateMax => "CERTIFIED_CANDIDATE_MAX",
            Verdict::Supported => "SUPPORTED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Whether the verdict depends on this check.
    pub required: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterSummary {
    #[serde(serialize_with = "serialize_17")]
    pub loglik: f64,
    pub members: usize,
    pub classification: Classification,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultistartSummary {
    pub starts: usize,
    pub seed: u64,
    pub successful: usize,
    #[serde(serialize_with = "serialize_17")]
    pub best_loglik: f64,
    pub clusters: Vec<ClusterSummary>,
}

impl MultistartSummary {
    fn from_report(r: &MultistartReport, seed: u64) -> Self {
        MultistartSummary {
            starts: r.starts,
            seed,
            successful: r.successful,
            best_loglik: r.best.loglik,
            clusters: r
                .clusters
                .iter()
                .map(|c| ClusterSummary { loglik: c.loglik, members: c.members, classification: c.representative.classification })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorSummary {
    /// `"block"` or `"corner"`.
    pub kind: String,
    /// Always true: optimality of the generators is open.
    pub conjectured: bool,
    pub matrix_sum_one: MatrixFile,
    #[serde(serialize_with = "serialize_17")]
    pub loglik: f64,
    pub residual: f64,
    pub stationary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    pub verdict: Verdict,
    pub candidates: Option<CandidateSet>,
    pub winner: Option<Candidate>,
    pub generator: Option<GeneratorSummary>,
    pub multistart: MultistartSummary,
    pub checks: Vec<CheckResult>,
}

fn check(name: &str, passed: bool, required: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), passed, required, detail: detail.into() }
}

/// Runs the full pipeline for weights `(s, t)` at size `n`.
///
/// `n = 4`, `t < s`: candidates are compared exactly and the winner is
/// checked against the multistart optimum and the structural lemmas
/// (`CERTIFIED_CANDIDATE_MAX` when all required checks pass). Otherwise the
/// block (`s > t`) or corner (`s <= t`) matrix is tested for stationarity and
/// dominance (`SUPPORTED` at best).
pub fn certify(n: usize, s: f64, t: f64, cfg: &SolverConfig) -> Result<Certificate> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let ms = multistart(s, t, n, cfg)?;
    let summary = MultistartSummary::from_report(&ms, cfg.seed);
    if n == 4 && t < s {
        certify_candidates(s, t, &ms, summary)
    } else {
        support_generator(n, s, t, &ms, summary)
    }
}

fn certify_candidates(s: f64, t: f64, ms: &MultistartReport, summary: MultistartSummary) -> Result<Certificate> {
    let set = enumerate_n4(s, t)?;
    let winner = best_of(&set.found)?;
    let rho_q = from_f64(s)? / from_f64(t)?;
    let rho = s / t;
    let mut checks = Vec::new();

    let all_exact = set.found.iter().all(|c| c.point.reciprocal_residual(&rho_q).iter().all(Zero::is_zero));
    checks.push(check("exact_stationarity", all_exact, true, format!("{} candidates with zero reciprocal residual", set.found.len())));

    let four = from_int(4);
    let rows = winner.matrix.rows();
    let margins = (0..4).all(|i| rows[i].iter().sum::<num_rational::BigRational>() == four && rows.iter().map(|r| &r[i]).sum::<num_rational::BigRational>() == four);
    checks.push(check("margins", margins, true, "winner row and column sums equal 4 exactly"));

    let point = winner.point.to_point();
    let so = sign_order_check(&point);
    checks.push(check("sign_order", so.passed, true, format!("{:?}", so.witness)));

    let gap = winner.loglik() - ms.best.loglik;
    checks.push(check(
        "dominance",
        gap >= -DOMINANCE_TOL,
        true,
        format!("winner {:.17e} vs multistart best {:.17e}", winner.loglik(), ms.best.loglik),
    ));

    let known: Vec<f64> = set.found.iter().map(Candidate::loglik).chain([0.0]).collect();
    let unmatched: Vec<f64> =
        ms.clusters.iter().map(|c| c.loglik).filter(|l| !known.iter().any(|k| (k - l).abs() < VALUE_TOL)).collect();
    checks.push(check(
        "optima_among_candidates",
        unmatched.is_empty(),
        false,
        format!("{} clusters, unmatched values {:?}", ms.clusters.len(), unmatched),
    ));

    if rho == 2.0 {
        let canon = point.canonicalize()?;
        let b = check_bounds(&canon, rho)?;
        checks.push(check("bounds", b.passed, true, format!("a1^2 = {:.6}, a1a2 = {:.6}, a1b2 = {:.6}", b.a1_sq, b.a1a2, b.a1b2)));
        let f = lemma_a2_factorization()?;
        checks.push(check(
            "a2_factorization",
            f.remainder_zero,
            true,
            format!("quotient = {} * f3", f.cofactor.as_deref().unwrap_or("?")),
        ));
        let scan = f3_region_scan(SCAN_RESOLUTION)?;
        checks.push(check(
            "f3_negative",
            scan.below_bound,
            true,
            format!("grid {}^3 max {:.6} <= {:.3}", scan.resolution, scan.max_value, scan.bound),
        ));
    }

    let ok = checks.iter().filter(|c| c.required).all(|c| c.passed);
    Ok(Certificate {
        n: 4,
        s,
        t,
        verdict: if ok { Verdict::CertifiedCandidateMax } else { Verdict::Inconclusive },
        candidates: Some(set),
        winner: Some(winner),
        generator: None,
        multistart: summary,
        checks,
    })
}

fn support_generator(n: usize, s: f64, t: f64, ms: &MultistartReport, summary: MultistartSummary) -> Result<Certificate> {
    let (sq, tq) = (from_f64(s)?, from_f64(t)?);
    let (kind, m) = if s > t { ("block", block_matrix_exact(n, &sq, &tq)?) } else { ("corner", corner_matrix_exact(n, &sq, &tq)?) };
    let pt = RankTwoPoint::from_matrix(&m.to_f64().convert(Convention::SumNsq))?;
    let residual = residual_norm(&pt.stationarity_residual(s / t)?);
    let loglik = pt.log_likelihood(s, t);
    let stationary = residual < STATIONARY_TOL;
    let mut checks = vec![
        check("stationary", stationary, true, format!("residual {residual:.3e}")),
        check(
            "dominance",
            loglik >= ms.best.loglik - DOMINANCE_TOL,
            true,
            format!("{kind} {loglik:.17e} vs multistart best {:.17e}", ms.best.loglik),
        ),
    ];
    let so = sign_order_check(&pt);
    checks.push(check("sign_order", so.passed, false, format!("{:?}", so.witness)));
    let ok = checks.iter().filter(|c| c.required).all(|c| c.passed);
    Ok(Certificate {
        n,
        s,
        t,
        verdict: if ok { Verdict::Supported } else { Verdict::Inconclusive },
        candidates: None,
        winner: None,
        generator: Some(GeneratorSummary {
            kind: kind.into(),
            conjectured: true,
            matrix_sum_one: MatrixFile::from_exact(&m),
            loglik,
            residual,
            stationary,
        }),
        multistart: summary,
        checks,
    })
}

impl Certificate {
    /// Human-readable summary carrying the same numbers as the JSON form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "certificate n = {}, s = {}, t = {}", self.n, self.s, self.t);
        let _ = writeln!(out, "verdict: {}", self.verdict.as_str());
        if let Some(set) = &self.candidates {
            for c in &set.found {
                let mark = if self.winner.as_ref().is_some_and(|w| w.pattern == c.pattern) { " *" } else { "" };
                let _ = writeln!(
                    out,
                    "  {} {} alpha^2 = {} log L = {}{}",
                    c.pattern.label(),
                    c.pattern.name(),
                    c.alpha_sq,
                    c.log_likelihood.to_scientific(30),
                    mark
                );
            }
            for x in &set.nonexistent {
                let _ = writeln!(out, "  {} absent: {}", x.pattern.name(), x.reason);
            }
        }
        if let Some(w) = &self.winner {
            let _ = writeln!(out, "winner {} ({}), SUM_ONE form:", w.pattern.label(), w.pattern.name());
            for row in w.sum_one_matrix().rows() {
                let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "  [{}]", cells.join(", "));
            }
        }
        if let Some(g) = &self.generator {
            let _ = writeln!(out, "{} matrix (conjectured), log L = {:.17e}, residual = {:.3e}", g.kind, g.loglik, g.residual);
        }
        let _ = writeln!(
            out,
            "multistart: {} starts, seed {}, {} converged, best log L = {:.17e}",
            self.multistart.starts, self.multistart.seed, self.multistart.successful, self.multistart.best_loglik
        );
        for c in &self.multistart.clusters {
            let _ = writeln!(out, "  cluster log L = {:.17e} x{} {}", c.loglik, c.members, c.classification.as_str());
        }
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            let req = if c.required { "" } else { " (informational)" };
            let _ = writeln!(out, "check {}: {}{} - {}", c.name, status, req, c.detail);
        }
        out
    }
}
