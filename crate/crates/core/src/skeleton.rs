//! Edge skeleton of a V-polytope and edge/coordinate-hyperplane crossings.
//!
//! Two extreme points vᵢ, vⱼ are adjacent exactly when their midpoint cannot
//! be written as a convex combination that avoids vᵢ, nor as one that avoids
//! vⱼ. Each pair therefore costs at most two feasibility queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::vpolytope::VertexSet;

pub const DEFAULT_SIGN_EPS: f64 = 1e-9;

/// Upper-triangular adjacency: `adjacency[i]` holds the neighbours `j > i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSkeleton {
    adjacency: Vec<Vec<usize>>,
}

impl EdgeSkeleton {
    pub fn from_adjacency(adjacency: Vec<Vec<usize>>) -> Self {
        debug_assert!(adjacency
            .iter()
            .enumerate()
            .all(|(i, js)| js.iter().all(|&j| j > i)));
        Self { adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.adjacency.get(a).is_some_and(|js| js.binary_search(&b).is_ok())
    }
}

/// Entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn zero_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == 0).count()
    }
}

#[inline]
pub fn sign_scalar(x: f64, eps: f64) -> i8 {
    if x > eps {
        1
    } else if x < -eps {
        -1
    } else {
        0
    }
}

pub fn sign_of(x: &[f64], eps: f64) -> SignVector {
    SignVector(x.iter().map(|&v| sign_scalar(v, eps)).collect())
}

/// 1-skeleton of conv(V). `v` must be deduplicated extreme points.
pub fn identify_edges(v: &VertexSet, lp_tol: f64, exec: &Executor) -> Result<EdgeSkeleton> {
    identify_edges_among(v, lp_tol, exec, |_, _| true)
}

/// The edges of conv(V) among the pairs accepted by `candidate`; other pairs
/// are not tested and never reported.
pub fn identify_edges_among<F>(
    v: &VertexSet,
    lp_tol: f64,
    exec: &Executor,
    candidate: F,
) -> Result<EdgeSkeleton>
where
    F: Fn(usize, usize) -> bool + Sync + Send,
{
    let o = v.len();
    let oracle = v.oracle();
    let adjacency = exec.try_map(o, |i| {
        let mut excluded = vec![false; o];
        let mut row = Vec::new();
        for j in i + 1..o {
            if !candidate(i, j) {
                continue;
            }
            let fail = |source| Error::EdgeTest { i, j, source };
            excluded[i] = true;
            let without_i = oracle.contains_midpoint(i, j, &excluded, lp_tol).map_err(fail)?;
            excluded[i] = false;
            if without_i {
                continue;
            }
            excluded[j] = true;
            let without_j = oracle.contains_midpoint(i, j, &excluded, lp_tol).map_err(fail)?;
            excluded[j] = false;
            if !without_j {
                row.push(j);
            }
        }
        Ok::<_, Error>(row)
    })?;
    Ok(EdgeSkeleton { adjacency })
}

/// Point where segment a→b meets the hyperplane x_k = 0, with coordinate k
/// snapped to exactly zero. Caller guarantees the endpoints are on opposite
/// sides.
pub(crate) fn crossing_point(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let lambda = -a[k] / (b[k] - a[k]);
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&lambda), "λ = {lambda}");
    let lambda = lambda.clamp(0.0, 1.0);
    let mut p: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| (bi - ai) * lambda + ai)
        .collect();
    p[k] = 0.0;
    p
}

/// Crossing points of every edge with the coordinate hyperplanes it
/// traverses, in (i, j, k) lexicographic order. `coords` restricts the
/// hyperplanes considered; `None` means all of them.
pub fn edge_crossings(
    v: &VertexSet,
    e: &EdgeSkeleton,
    eps: f64,
    coords: Option<&[usize]>,
    exec: &Executor,
) -> Vec<Vec<f64>> {
    let signs: Vec<SignVector> = v.points().iter().map(|p| sign_of(p, eps)).collect();
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..v.dim()).collect();
            &all
        }
    };
    let per_vertex = exec.map(e.vertex_count(), |i| {
        let mut out = Vec::new();
        let vi = v.point(i);
        for &j in e.neighbours(i) {
            let vj = v.point(j);
            for &k in coords {
                // σ(aₖ) ≠ 0 iff the sign difference has magnitude 2.
                let a = signs[i].0[k] - signs[j].0[k];
                if a.abs() >= 2 {
                    out.push(crossing_point(vi, vj, k));
                }
            }
        }
        out
    });
    per_vertex.into_iter().flatten().collect()
}

/// V with the edge/orthant-hyperplane crossing points appended.
pub fn intersect_edges(v: &VertexSet, e: &EdgeSkeleton, eps: f64, exec: &Executor) -> VertexSet {
    let mut points = v.points().to_vec();
    points.extend(edge_crossings(v, e, eps, None, exec));
    VertexSet::from_parts(v.dim(), points)
}
