//! Numerical maximizers.
//!
//! * [`em_fit`] / [`em_runs`]: expectation maximization for the `r`-class
//!   latent model of a two-way table.
//! * [`newton_stationary`]: damped Gauss-Newton on the stationarity system of
//!   the rank-two parametrization.
//! * [`projected_gradient_ascent`]: Armijo ascent on the log-likelihood,
//!   used as the fallback far from roots.
//! * [`multistart`]: seeded random restarts, clustering of the optima found.

mod em;
mod multistart;
mod newton;

pub use em::{em_fit, em_runs, LatentClassModel};
pub use multistart::{multistart, multistart_with, Cluster, LocalMethod, MultistartReport};
pub use newton::{classify_stationary, newton_stationary, projected_gradient_ascent};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Convention;
use crate::ranktwo::RankTwoPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub cluster_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iter: 10_000, tol: 1e-12, starts: 200, seed: 0, cluster_eps: 1e-6 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.starts == 0 {
            return Err(Error::InvalidArgument("max_iter and starts must be positive".into()));
        }
        if !(self.tol > 0.0 && self.cluster_eps > 0.0) {
            return Err(Error::InvalidArgument("tol and cluster_eps must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn start_seed(&self, k: usize) -> u64 {
        self.seed ^ k as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMax,
    Saddle,
    Degenerate,
    Unclassified,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LocalMax => "local_max",
            Classification::Saddle => "saddle",
            Classification::Degenerate => "degenerate",
            Classification::Unclassified => "unclassified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvedPoint {
    RankTwo(RankTwoPoint),
    Latent(LatentClassModel),
}

/// Outcome of one solver run. `residual` is always recomputed at `point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub point: SolvedPoint,
    #[serde(serialize_with = "serialize_17")]
    pub loglik: f64,
    pub convention: Convention,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: Classification,
    pub start_seed: Option<u64>,
    /// Log-likelihood per EM iteration, or residual norm per Newton step.
    pub trace: Vec<f64>,
}

impl SolveReport {
    pub fn rank_two(&self) -> Option<&RankTwoPoint> {
        match &self.point {
            SolvedPoint::RankTwo(p) => Some(p),
            SolvedPoint::Latent(_) => None,
        }
    }

    pub fn latent(&self) -> Option<&LatentClassModel> {
        match &self.point {
            SolvedPoint::Latent(m) => Some(m),
            SolvedPoint::RankTwo(_) => None,
        }
    }
}

/// Writes a float with 17 significant digits (JSON `null` if not finite).
pub fn serialize_17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = serde_json::value::RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}
