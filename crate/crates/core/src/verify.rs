//! Safety properties over network outputs and the reachable-set check.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::reach::ReachSet;
use crate::vpolytope::{dedup_vertices, VertexSet};

pub const BOX_DIM_LIMIT: usize = 25;
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;

/// ACAS Xu Property 1 in raw units.
pub const PROPERTY_1: &str = include_str!("../fixtures/property1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// Safe outputs satisfy `c·y (relation) bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

impl OutputConstraint {
    /// Signed amount by which `y` breaks the constraint (positive = unsafe).
    pub fn excess(&self, y: &[f64]) -> f64 {
        let v = dot(&self.coeffs, y);
        match self.relation {
            Relation::Le => v - self.bound,
            Relation::Ge => self.bound - v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
    /// Conjunction: all must hold for the property to hold.
    pub output_constraints: Vec<OutputConstraint>,
}

impl PropertySpec {
    pub fn new(
        input_lower: Vec<f64>,
        input_upper: Vec<f64>,
        output_constraints: Vec<OutputConstraint>,
    ) -> Result<Self> {
        const OP: &str = "PropertySpec";
        if input_lower.len() != input_upper.len() {
            return Err(Error::DimensionMismatch {
                op: OP,
                expected: input_lower.len(),
                found: input_upper.len(),
            });
        }
        if input_lower.iter().zip(&input_upper).any(|(l, u)| l > u) {
            return Err(Error::invalid(OP, "input lower bound exceeds upper bound"));
        }
        if output_constraints.is_empty() {
            return Err(Error::invalid(OP, "at least one output constraint required"));
        }
        let m = output_constraints[0].coeffs.len();
        if let Some(c) = output_constraints.iter().find(|c| c.coeffs.len() != m) {
            return Err(Error::DimensionMismatch {
                op: OP,
                expected: m,
                found: c.coeffs.len(),
            });
        }
        Ok(Self {
            input_lower,
            input_upper,
            output_constraints,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_lower.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_constraints[0].coeffs.len()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_property(&text)
    }

    pub fn property_1() -> Self {
        parse_property(PROPERTY_1).expect("bundled fixture parses")
    }

    /// Input box corners in the network's normalized coordinates.
    pub fn normalized_input_vertices(&self, net: &Network) -> Result<VertexSet> {
        if self.input_dim() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                op: "PropertySpec",
                expected: net.input_dim(),
                found: self.input_dim(),
            });
        }
        let lo = net.normalize_input(&self.input_lower)?;
        let hi = net.normalize_input(&self.input_upper)?;
        box_to_vertices(&lo, &hi)
    }
}

/// Parses the `[input]` / `[output]` property format.
pub fn parse_property(text: &str) -> Result<PropertySpec> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Input,
        Output,
    }
    let err = |line: usize, msg: String| Error::PropertyParse { line, msg };
    let num = |t: &str, line: usize| {
        t.parse::<f64>()
            .map_err(|_| err(line, format!("not a number: {t:?}")))
    };
    let mut section = Section::None;
    let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
    let mut constraints = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match body {
            "[input]" => {
                section = Section::Input;
                continue;
            }
            "[output]" => {
                section = Section::Output;
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => return Err(err(line, "content before any section header".into())),
            Section::Input => {
                let (i, rest) = body
                    .split_once(':')
                    .ok_or_else(|| err(line, "expected \"index: lower upper\"".into()))?;
                let i: usize = i
                    .trim()
                    .parse()
                    .map_err(|_| err(line, format!("bad input index {:?}", i.trim())))?;
                let vals: Vec<&str> = rest.split_whitespace().collect();
                if vals.len() != 2 {
                    return Err(err(line, "expected two bounds".into()));
                }
                let (lo, hi) = (num(vals[0], line)?, num(vals[1], line)?);
                if lo > hi {
                    return Err(err(line, format!("lower bound {lo} exceeds upper bound {hi}")));
                }
                if bounds.iter().any(|&(j, _, _)| j == i) {
                    return Err(err(line, format!("input {i} bounded twice")));
                }
                bounds.push((i, lo, hi));
            }
            Section::Output => {
                let (lhs, rel, rhs) = if let Some((l, r)) = body.split_once("<=") {
                    (l, Relation::Le, r)
                } else if let Some((l, r)) = body.split_once(">=") {
                    (l, Relation::Ge, r)
                } else {
                    return Err(err(line, "expected \"<=\" or \">=\"".into()));
                };
                let coeffs = lhs
                    .split_whitespace()
                    .map(|t| num(t, line))
                    .collect::<Result<Vec<_>>>()?;
                if coeffs.is_empty() {
                    return Err(err(line, "missing coefficients".into()));
                }
                constraints.push(OutputConstraint {
                    coeffs,
                    relation: rel,
                    bound: num(rhs.trim(), line)?,
                });
            }
        }
    }
    bounds.sort_by_key(|&(i, _, _)| i);
    if bounds.is_empty() {
        return Err(err(last_line, "no [input] bounds".into()));
    }
    if let Some((pos, _)) = bounds.iter().enumerate().find(|(pos, b)| b.0 != *pos) {
        return Err(err(last_line, format!("input {pos} has no bounds")));
    }
    if constraints.is_empty() {
        return Err(err(last_line, "no [output] constraints".into()));
    }
    PropertySpec::new(
        bounds.iter().map(|b| b.1).collect(),
        bounds.iter().map(|b| b.2).collect(),
        constraints,
    )
    .map_err(|e| err(last_line, e.to_string()))
}

/// Corners of the box, corner `q` taking `upper[i]` iff bit i of q is set.
/// Degenerate coordinates collapse to distinct corners after dedup.
pub fn box_to_vertices(lower: &[f64], upper: &[f64]) -> Result<VertexSet> {
    const OP: &str = "box_to_vertices";
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            op: OP,
            expected: lower.len(),
            found: upper.len(),
        });
    }
    let n = lower.len();
    if n == 0 {
        return Err(Error::invalid(OP, "empty box"));
    }
    if n > BOX_DIM_LIMIT {
        return Err(Error::BoxTooLarge {
            dim: n,
            limit: BOX_DIM_LIMIT,
        });
    }
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(Error::invalid(OP, "lower bound exceeds upper bound"));
    }
    let points = (0u64..1 << n)
        .map(|q| {
            (0..n)
                .map(|i| if (q >> i) & 1 == 1 { upper[i] } else { lower[i] })
                .collect()
        })
        .collect();
    Ok(dedup_vertices(&VertexSet::new(points)?, 0.0))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// max over conv(V) of c·x, attained at a vertex.
pub fn max_linear(v: &VertexSet, c: &[f64]) -> Result<f64> {
    if c.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            op: "max_linear",
            expected: v.dim(),
            found: c.len(),
        });
    }
    Ok(v.points()
        .iter()
        .map(|p| dot(p, c))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    Unknown,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Offending output vertex; present iff `status` is `Violated`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

/// Checks every vertex of every output polytope against every constraint.
///
/// `reach` must already be in the property's output units. A failing
/// vertex yields `Violated` when `exact` is set, `Unknown` otherwise.
pub fn check_property(reach: &ReachSet, spec: &PropertySpec, exact: bool, tol: f64) -> Result<Verdict> {
    let m = spec.output_dim();
    let mut worst: Option<(f64, &[f64])> = None;
    for poly in &reach.polytopes {
        if poly.dim() != m {
            return Err(Error::DimensionMismatch {
                op: "check_property",
                expected: m,
                found: poly.dim(),
            });
        }
        for p in poly.points() {
            for c in &spec.output_constraints {
                let e = c.excess(p);
                if e > tol && worst.is_none_or(|(w, _)| e > w) {
                    worst = Some((e, p));
                }
            }
        }
    }
    Ok(match worst {
        None => Verdict {
            status: Status::Holds,
            witness: None,
        },
        Some((_, p)) if exact => Verdict {
            status: Status::Violated,
            witness: Some(p.to_vec()),
        },
        Some(_) => Verdict {
            status: Status::Unknown,
            witness: None,
        },
    })
}

/// Maps every output vertex through the network's output denormalization.
pub fn denormalize_reach(reach: &ReachSet, net: &Network) -> ReachSet {
    ReachSet {
        polytopes: reach
            .polytopes
            .iter()
            .map(|p| {
                VertexSet::new(p.points().iter().map(|y| net.denormalize_output(y)).collect())
                    .expect("affine image of a valid set")
            })
            .collect(),
        stats: reach.stats.clone(),
    }
}
