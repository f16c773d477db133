use thiserror::Error;

use crate::reach::LayerStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Numerical failure inside the feasibility oracle. Never mapped to "infeasible".
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverFailure {
    #[error("simplex exceeded {0} pivots without terminating")]
    IterationLimit(usize),
    #[error("non-finite value encountered in tableau")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{op}: {msg}")]
    InvalidInput { op: &'static str, msg: String },

    #[error("{op}: {source}")]
    Solver {
        op: &'static str,
        #[source]
        source: SolverFailure,
    },

    #[error("identify_edges: feasibility test for pair ({i}, {j}) failed: {source}")]
    EdgeTest {
        i: usize,
        j: usize,
        #[source]
        source: SolverFailure,
    },

    #[error(".nnet line {line}: {msg}")]
    NnetParse { line: usize, msg: String },

    #[error("property line {line}: {msg}")]
    PropertyParse { line: usize, msg: String },

    #[error("separate_per_orthant: point {point} has {zeros} zero coordinates; placements would exceed cap {cap}")]
    ExpansionCap { point: usize, zeros: usize, cap: usize },

    #[error("branch count {branches} exceeds cap {cap} at layer {layer}")]
    BranchCap {
        layer: usize,
        branches: usize,
        cap: usize,
    },

    #[error("box_to_vertices: {dim}-dimensional box exceeds corner enumeration limit of {limit} dimensions; supply a vertex set directly")]
    BoxTooLarge { dim: usize, limit: usize },

    /// Stop signal observed; carries the statistics of the layers that completed.
    #[error("cancelled after {} completed layer(s)", .completed.len())]
    Cancelled { completed: Vec<LayerStats> },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn solver(op: &'static str, source: SolverFailure) -> Self {
        Error::Solver { op, source }
    }

    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidInput {
            op,
            msg: msg.into(),
        }
    }

    /// Module that raised the error, for diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Solver { .. } => "linear_feasibility",
            Error::EdgeTest { .. } => "skeleton",
            Error::NnetParse { .. } => "network",
            Error::PropertyParse { .. } | Error::BoxTooLarge { .. } => "verify",
            Error::ExpansionCap { .. } => "orthant",
            Error::BranchCap { .. } | Error::Cancelled { .. } => "reach",
            Error::Io { .. } => "io",
            Error::DimensionMismatch { op, .. } | Error::InvalidInput { op, .. } => match *op {
                "parse_nnet" | "normalize_input" | "forward" | "Network" => "network",
                "affine_map" | "contains_point" | "VertexSet" | "LayerParams" => "vpolytope",
                "convex_combination_exists" => "linear_feasibility",
                "check_property" | "max_linear" | "box_to_vertices" | "PropertySpec" => "verify",
                "merge_sets" | "separate_per_orthant" => "orthant",
                "run" | "RunConfig" => "cli",
                _ => "reach",
            },
        }
    }
}
