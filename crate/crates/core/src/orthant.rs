//! Orthant bookkeeping: origin insertion, sign-based separation of points
//! into orthants, orthant indexing, set merging, and the exact
//! per-coordinate partition used by the reachability drivers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::{Executor, StopSignal};
use crate::skeleton::{edge_crossings, identify_edges_among, sign_scalar};
use crate::vpolytope::{canonicalize, dedup_vertices, VertexSet};
use crate::Tolerances;

pub const DEFAULT_EXPANSION_CAP: usize = 1 << 20;

/// Orthant index q = Σ bᵢ·2^(i−1), where bit i is set iff coordinate i is
/// nonnegative in that orthant. Arbitrary width.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrthantKey {
    dim: usize,
    words: Vec<u64>,
}

impl OrthantKey {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            words: vec![0; dim.div_ceil(64).max(1)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut key = Self::zero(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                key.set(i);
            }
        }
        key
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.dim).map(|i| self.bit(i)).collect()
    }

    pub fn as_u128(&self) -> Option<u128> {
        if self.words.iter().skip(2).any(|&w| w != 0) {
            return None;
        }
        let lo = self.words[0] as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        Some(lo | (hi << 64))
    }
}

impl Ord for OrthantKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.words.len().max(other.words.len());
        for w in (0..n).rev() {
            let a = self.words.get(w).copied().unwrap_or(0);
            let b = other.words.get(w).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.dim.cmp(&other.dim)
    }
}

impl PartialOrd for OrthantKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for OrthantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_u128() {
            Some(q) => write!(f, "{q}"),
            None => {
                write!(f, "0x")?;
                for w in self.words.iter().rev() {
                    write!(f, "{w:016x}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for OrthantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrthantKey({self})")
    }
}

impl Serialize for OrthantKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Nonempty orthant parts, iterated in ascending key order.
#[derive(Debug, Clone, Default)]
pub struct OrthantPartition {
    parts: BTreeMap<OrthantKey, VertexSet>,
}

impl OrthantPartition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn get(&self, key: &OrthantKey) -> Option<&VertexSet> {
        self.parts.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OrthantKey, &VertexSet)> {
        self.parts.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &OrthantKey> {
        self.parts.keys()
    }

    pub fn into_sets(self) -> Vec<VertexSet> {
        self.parts.into_values().collect()
    }

    fn push(&mut self, key: OrthantKey, point: Vec<f64>) {
        match self.parts.get_mut(&key) {
            Some(set) => set.push(point),
            None => {
                let dim = point.len();
                self.parts.insert(key, VertexSet::from_parts(dim, vec![point]));
            }
        }
    }
}

/// Appends the origin when it lies in conv(V).
pub fn origin_search(v: &VertexSet, lp_tol: f64) -> Result<VertexSet> {
    let origin = vec![0.0; v.dim()];
    let inside = v
        .oracle()
        .contains(&origin, &[], lp_tol)
        .map_err(|e| Error::solver("origin_search", e))?;
    if !inside {
        return Ok(v.clone());
    }
    let mut points = v.points().to_vec();
    points.push(origin);
    Ok(VertexSet::from_parts(v.dim(), points))
}

/// Entry of the orthant indicator b = ½(sign(v) + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfBit {
    Zero,
    Half,
    One,
}

impl HalfBit {
    pub fn from_sign(s: i8) -> Self {
        match s.signum() {
            1 => HalfBit::One,
            -1 => HalfBit::Zero,
            _ => HalfBit::Half,
        }
    }
}

/// All binary vectors obtained by resolving every `Half` entry to both 0
/// and 1, in ascending orthant-key order.
pub fn zeros_verification(b: &[HalfBit]) -> Vec<Vec<bool>> {
    let halves: Vec<usize> = b
        .iter()
        .enumerate()
        .filter(|(_, &h)| h == HalfBit::Half)
        .map(|(i, _)| i)
        .collect();
    let base: Vec<bool> = b.iter().map(|&h| h == HalfBit::One).collect();
    (0u64..1 << halves.len())
        .map(|mask| {
            let mut v = base.clone();
            for (bit, &i) in halves.iter().enumerate() {
                v[i] = (mask >> bit) & 1 == 1;
            }
            v
        })
        .collect()
}

pub fn array_position(b: &[bool]) -> OrthantKey {
    OrthantKey::from_bits(b)
}

/// Places every point in each orthant its sign pattern is compatible with.
///
/// A point with z zero coordinates lands in 2^z parts; the running number of
/// placements is capped by `expansion_cap`. The origin is the exception: it
/// joins every part created by the other points (or the all-nonnegative part
/// when there are none).
pub fn separate_per_orthant(
    v: &VertexSet,
    sign_eps: f64,
    expansion_cap: usize,
) -> Result<OrthantPartition> {
    let mut part = OrthantPartition::default();
    let mut placements = 0usize;
    let mut origins = Vec::new();
    for (idx, p) in v.points().iter().enumerate() {
        let b: Vec<HalfBit> = p
            .iter()
            .map(|&x| HalfBit::from_sign(sign_scalar(x, sign_eps)))
            .collect();
        let zeros = b.iter().filter(|&&h| h == HalfBit::Half).count();
        if zeros == p.len() {
            origins.push(p.clone());
            continue;
        }
        let fanout = 1usize.checked_shl(zeros as u32).unwrap_or(usize::MAX);
        placements = placements.saturating_add(fanout);
        if zeros >= 63 || placements > expansion_cap {
            return Err(Error::ExpansionCap { point: idx, zeros, cap: expansion_cap });
        }
        for bits in zeros_verification(&b) {
            part.push(array_position(&bits), p.clone());
        }
    }
    for o in origins {
        if part.is_empty() {
            part.push(OrthantKey::from_bits(&vec![true; v.dim()]), o);
        } else {
            let keys: Vec<OrthantKey> = part.keys().cloned().collect();
            for k in keys {
                part.push(k, o.clone());
            }
        }
    }
    Ok(part)
}

/// Groups consecutive parts into sets of `d` and concatenates each group.
pub fn merge_sets(parts: &[VertexSet], d: usize) -> Result<Vec<VertexSet>> {
    if d == 0 {
        return Err(Error::invalid("merge_sets", "group size must be at least 1"));
    }
    parts.chunks(d).map(VertexSet::concat).collect()
}

/// Exact decomposition of conv(V) into its intersections with orthants.
///
/// Splits by one coordinate hyperplane at a time: a piece straddling
/// x_k = 0 is cut along it, the cut vertices being the crossings of the
/// piece's edges with the hyperplane. This recovers every vertex of every
/// P ∩ O_j, including those where a face of dimension two or more meets a
/// coordinate subspace of matching codimension, which a single pass over the
/// original edges misses.
///
/// Points with |x_k| ≤ sign_eps go to both sides; a piece with no point
/// strictly negative in k goes to the nonnegative side only.
pub fn partition_by_coordinates(
    v: &VertexSet,
    tol: &Tolerances,
    exec: &Executor,
    stop: &StopSignal,
) -> Result<OrthantPartition> {
    let n = v.dim();
    let mut pieces: Vec<(OrthantKey, VertexSet)> = vec![(OrthantKey::zero(n), v.clone())];
    for k in 0..n {
        if stop.is_stopped() {
            return Err(Error::Cancelled { completed: Vec::new() });
        }
        let split = exec.try_map(pieces.len(), |i| {
            let (key, piece) = &pieces[i];
            split_piece(key, piece, k, tol, exec)
        })?;
        pieces = split.into_iter().flatten().collect();
    }
    let mut out = OrthantPartition::default();
    for (key, piece) in pieces {
        match out.parts.get_mut(&key) {
            Some(existing) => {
                let merged = VertexSet::concat([&*existing, &piece])?;
                *existing = dedup_vertices(&merged, tol.dedup);
            }
            None => {
                out.parts.insert(key, piece);
            }
        }
    }
    Ok(out)
}

fn split_piece(
    key: &OrthantKey,
    piece: &VertexSet,
    k: usize,
    tol: &Tolerances,
    exec: &Executor,
) -> Result<Vec<(OrthantKey, VertexSet)>> {
    let signs: Vec<i8> = piece
        .points()
        .iter()
        .map(|p| sign_scalar(p[k], tol.sign))
        .collect();
    let has_pos = signs.iter().any(|&s| s > 0);
    let has_neg = signs.iter().any(|&s| s < 0);
    let with_bit = |bit: bool| {
        let mut kk = key.clone();
        if bit {
            kk.set(k);
        }
        kk
    };
    if !has_neg {
        return Ok(vec![(with_bit(true), piece.clone())]);
    }
    if !has_pos {
        return Ok(vec![(with_bit(false), piece.clone())]);
    }

    let piece = canonicalize(piece, tol.dedup, tol.lp)?;
    let signs: Vec<i8> = piece
        .points()
        .iter()
        .map(|p| sign_scalar(p[k], tol.sign))
        .collect();
    // Only edges with endpoints strictly on opposite sides cross x_k = 0.
    let edges = identify_edges_among(&piece, tol.lp, exec, |i, j| signs[i] * signs[j] < 0)?;
    let crossings = edge_crossings(&piece, &edges, tol.sign, Some(&[k]), exec);

    let side = |keep: fn(i8) -> bool| {
        let mut pts: Vec<Vec<f64>> = piece
            .points()
            .iter()
            .zip(&signs)
            .filter(|(_, &s)| keep(s))
            .map(|(p, _)| p.clone())
            .collect();
        pts.extend(crossings.iter().cloned());
        dedup_vertices(&VertexSet::from_parts(piece.dim(), pts), tol.dedup)
    };
    Ok(vec![
        (with_bit(false), side(|s| s <= 0)),
        (with_bit(true), side(|s| s >= 0)),
    ])
}
