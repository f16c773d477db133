//! Layer-by-layer reachability: the fully merged over-approximation (APNM),
//! the exact per-orthant propagation (EPNM), and the partially merged
//! variant (PAPNM).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, StopSignal};
use crate::network::Network;
use crate::orthant::{
    merge_sets, origin_search, partition_by_coordinates, separate_per_orthant,
    DEFAULT_EXPANSION_CAP,
};
use crate::skeleton::{identify_edges, intersect_edges};
use crate::vpolytope::{affine_map, canonicalize, dedup_vertices, relu, relu_map, VertexSet};
use crate::Tolerances;

pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

/// How a hidden layer's affine image is cut along the coordinate hyperplanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// One hyperplane at a time, recomputing edges after every cut. Exact for
    /// EPNM; APNM keeps the hull of the exact pieces.
    #[default]
    PerCoordinate,
    /// Edges of the affine image crossed with all hyperplanes at once, then
    /// origin insertion and sign separation. Only exact when the image is at
    /// most two-dimensional.
    SinglePass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerStats {
    /// 1-based layer index.
    pub layer: usize,
    /// Vertices entering the affine map, summed over branches.
    pub vertices_in: usize,
    /// Branches entering the layer.
    pub sets_in: usize,
    /// Sets leaving the layer (after partitioning and merging).
    pub sets_out: usize,
}

#[derive(Debug, Clone)]
pub struct ReachOptions {
    pub tol: Tolerances,
    pub splitting: Splitting,
    pub expansion_cap: usize,
    pub branch_cap: usize,
    pub exec: Executor,
    pub stop: StopSignal,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            splitting: Splitting::default(),
            expansion_cap: DEFAULT_EXPANSION_CAP,
            branch_cap: DEFAULT_BRANCH_CAP,
            exec: Executor::sequential(),
            stop: StopSignal::never(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachSet {
    pub polytopes: Vec<VertexSet>,
    pub stats: Vec<LayerStats>,
}

impl ReachSet {
    pub fn total_vertices(&self) -> usize {
        self.polytopes.iter().map(VertexSet::len).sum()
    }

    /// Membership in the union of the hulls.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        for p in &self.polytopes {
            if crate::vpolytope::contains_point(p, x, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn check_input(v0: &VertexSet, net: &Network) -> Result<()> {
    if v0.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            op: "reach",
            expected: net.input_dim(),
            found: v0.dim(),
        });
    }
    Ok(())
}

fn cancelled() -> Error {
    Error::Cancelled { completed: Vec::new() }
}

fn with_stats(e: Error, stats: &[LayerStats]) -> Error {
    match e {
        Error::Cancelled { .. } => Error::Cancelled { completed: stats.to_vec() },
        e => e,
    }
}

/// Single-polytope over-approximation of F(conv(V0)).
pub fn apnm(v0: &VertexSet, net: &Network, opts: &ReachOptions) -> Result<ReachSet> {
    check_input(v0, net)?;
    let tol = &opts.tol;
    let last = net.num_layers() - 1;
    let mut v = dedup_vertices(v0, tol.dedup);
    let mut stats = Vec::with_capacity(net.num_layers());
    for (l, layer) in net.layers().iter().enumerate() {
        if opts.stop.is_stopped() {
            return Err(Error::Cancelled { completed: stats });
        }
        let entered = if l > 0 {
            canonicalize(&relu_map(&v), tol.dedup, tol.lp).map_err(|e| with_stats(e, &stats))?
        } else {
            v
        };
        stats.push(LayerStats {
            layer: l + 1,
            vertices_in: entered.len(),
            sets_in: 1,
            sets_out: 1,
        });
        let image = affine_map(&entered, layer)?;
        let out = if l == last {
            canonicalize(&image, tol.dedup, tol.lp)
        } else {
            match opts.splitting {
                Splitting::SinglePass => canonicalize(&image, tol.dedup, tol.lp).and_then(|image| {
                    let edges = identify_edges(&image, tol.lp, &opts.exec)?;
                    Ok(intersect_edges(&image, &edges, tol.sign, &opts.exec))
                }),
                Splitting::PerCoordinate => relu_exact_hull_points(&image, opts),
            }
        };
        v = out.map_err(|e| with_stats(e, &stats[..l]))?;
    }
    Ok(ReachSet {
        polytopes: vec![v],
        stats,
    })
}

/// ReLU(conv(V)) as the union of its per-orthant pieces, flattened into
/// one point list whose hull is the tightest single enclosing polytope.
fn relu_exact_hull_points(v: &VertexSet, opts: &ReachOptions) -> Result<VertexSet> {
    let parts = partition_by_coordinates(v, &opts.tol, &opts.exec, &opts.stop)?;
    let pieces: Vec<VertexSet> = parts.into_sets().iter().map(relu_map).collect();
    Ok(dedup_vertices(&VertexSet::concat(&pieces)?, opts.tol.dedup))
}

/// Exact reachable set as a union of per-orthant polytopes.
pub fn epnm(v0: &VertexSet, net: &Network, opts: &ReachOptions) -> Result<ReachSet> {
    branching(v0, net, 1, opts)
}

/// Per-orthant propagation with every `d` consecutive parts of a branch
/// merged into one set. `d = 1` is [`epnm`].
pub fn papnm(v0: &VertexSet, net: &Network, d: usize, opts: &ReachOptions) -> Result<ReachSet> {
    if d == 0 {
        return Err(Error::invalid("papnm", "merge size must be at least 1"));
    }
    branching(v0, net, d, opts)
}

fn branching(v0: &VertexSet, net: &Network, d: usize, opts: &ReachOptions) -> Result<ReachSet> {
    check_input(v0, net)?;
    let tol = &opts.tol;
    let last = net.num_layers() - 1;
    let mut branches = vec![dedup_vertices(v0, tol.dedup)];
    let mut stats: Vec<LayerStats> = Vec::with_capacity(net.num_layers());
    for (l, layer) in net.layers().iter().enumerate() {
        if opts.stop.is_stopped() {
            return Err(Error::Cancelled { completed: stats });
        }
        if l > 0 {
            let entered = opts
                .exec
                .try_map(branches.len(), |b| {
                    if opts.stop.is_stopped() {
                        return Err(cancelled());
                    }
                    canonicalize(&relu_map(&branches[b]), tol.dedup, tol.lp)
                })
                .map_err(|e| with_stats(e, &stats))?;
            branches = drop_repeated_points(entered, tol.dedup);
        }
        let vertices_in = branches.iter().map(VertexSet::len).sum();
        let sets_in = branches.len();

        let step = opts.exec.try_map(branches.len(), |b| {
            if opts.stop.is_stopped() {
                return Err(cancelled());
            }
            let image = affine_map(&branches[b], layer)?;
            if l == last {
                return Ok(vec![canonicalize(&image, tol.dedup, tol.lp)?]);
            }
            let parts = match opts.splitting {
                Splitting::PerCoordinate => {
                    partition_by_coordinates(&image, tol, &opts.exec, &opts.stop)?
                }
                Splitting::SinglePass => {
                    let image = canonicalize(&image, tol.dedup, tol.lp)?;
                    let edges = identify_edges(&image, tol.lp, &opts.exec)?;
                    let ii = intersect_edges(&image, &edges, tol.sign, &opts.exec);
                    let os = origin_search(&ii, tol.lp)?;
                    separate_per_orthant(&os, tol.sign, opts.expansion_cap)?
                }
            };
            merge_sets(&parts.into_sets(), d)
        });
        let next: Vec<VertexSet> = step
            .map_err(|e| with_stats(e, &stats))?
            .into_iter()
            .flatten()
            .collect();
        stats.push(LayerStats {
            layer: l + 1,
            vertices_in,
            sets_in,
            sets_out: next.len(),
        });
        if next.len() > opts.branch_cap {
            return Err(Error::BranchCap {
                layer: l + 1,
                branches: next.len(),
                cap: opts.branch_cap,
            });
        }
        branches = next;
    }
    Ok(ReachSet {
        polytopes: branches,
        stats,
    })
}

/// Drops single-point branches that repeat an earlier single-point branch.
fn drop_repeated_points(branches: Vec<VertexSet>, tol: f64) -> Vec<VertexSet> {
    let tol2 = tol * tol;
    let mut seen: Vec<Vec<f64>> = Vec::new();
    branches
        .into_iter()
        .filter(|b| {
            if b.len() != 1 {
                return true;
            }
            let p = b.point(0);
            let dup = seen
                .iter()
                .any(|q| p.iter().zip(q).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() <= tol2);
            if !dup {
                seen.push(p.to_vec());
            }
            !dup
        })
        .collect()
}

/// ReLU of a single point, exposed for oracles that need the activation.
pub fn relu_point(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| relu(v)).collect()
}
