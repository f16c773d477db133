//! Reachability analysis of feed-forward ReLU networks with vertex-represented
//! polytopes.
//!
//! An input region given by its vertices is pushed through the network one
//! layer at a time. [`reach::epnm`] returns the exact reachable set as a
//! union of convex polytopes, [`reach::apnm`] a single enclosing polytope and
//! [`reach::papnm`] something in between. [`verify::check_property`] then
//! tests linear output constraints on the vertices.

pub mod error;
pub mod exec;
pub mod linear_feasibility;
pub mod network;
pub mod orthant;
pub mod reach;
pub mod runner;
pub mod skeleton;
pub mod verify;
pub mod vpolytope;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result, SolverFailure};
pub use exec::{Executor, StopSignal};
pub use network::{parse_nnet, Network, Normalization};
pub use reach::{apnm, epnm, papnm, LayerStats, ReachOptions, ReachSet, Splitting};
pub use verify::{check_property, PropertySpec, Status, Verdict};
pub use vpolytope::{LayerParams, VertexSet};

/// Numerical tolerances shared by the pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Feasibility threshold of the simplex oracle.
    pub lp: f64,
    /// Coordinates with |x| ≤ `sign` count as zero.
    pub sign: f64,
    /// Points closer than this are merged.
    pub dedup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lp: linear_feasibility::DEFAULT_LP_TOL,
            sign: skeleton::DEFAULT_SIGN_EPS,
            dedup: vpolytope::DEFAULT_DEDUP_TOL,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if [self.lp, self.sign, self.dedup].iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid("RunConfig", "tolerances must be positive and finite"))
        }
    }
}
