//! Vertex-represented polytopes and the per-point layer maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_feasibility::HullOracle;

pub const DEFAULT_DEDUP_TOL: f64 = 1e-9;

/// An ordered, nonempty list of points in Rⁿ standing for their convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl VertexSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        const OP: &str = "VertexSet";
        let Some(first) = points.first() else {
            return Err(Error::invalid(OP, "a vertex set needs at least one point"));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid(OP, "points must have at least one coordinate"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { op: OP, expected: dim, found: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(OP, "non-finite coordinate"));
            }
        }
        Ok(Self { dim, points })
    }

    /// Internal constructor for results of maps that preserve the invariants.
    pub(crate) fn from_parts(dim: usize, points: Vec<Vec<f64>>) -> Self {
        debug_assert!(!points.is_empty());
        debug_assert!(points.iter().all(|p| p.len() == dim));
        Self { dim, points }
    }

    pub(crate) fn push(&mut self, p: Vec<f64>) {
        debug_assert_eq!(p.len(), self.dim);
        self.points.push(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    /// Concatenation of several sets of equal dimension.
    pub fn concat<'a>(sets: impl IntoIterator<Item = &'a VertexSet>) -> Result<Self> {
        let mut points = Vec::new();
        for s in sets {
            points.extend(s.points.iter().cloned());
        }
        Self::new(points)
    }

    pub fn oracle(&self) -> HullOracle {
        HullOracle::new(&self.points)
    }
}

/// Weights (m×n, row-major rows) and biases (m) of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl LayerParams {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        const OP: &str = "LayerParams";
        if weights.len() != biases.len() {
            return Err(Error::DimensionMismatch {
                op: OP,
                expected: weights.len(),
                found: biases.len(),
            });
        }
        let Some(first) = weights.first() else {
            return Err(Error::invalid(OP, "a layer needs at least one neuron"));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::invalid(OP, "a layer needs at least one input"));
        }
        for row in &weights {
            if row.len() != n {
                return Err(Error::DimensionMismatch { op: OP, expected: n, found: row.len() });
            }
        }
        if weights.iter().flatten().chain(&biases).any(|x| !x.is_finite()) {
            return Err(Error::invalid(OP, "non-finite weight or bias"));
        }
        Ok(Self { weights, biases })
    }

    pub fn identity(n: usize) -> Self {
        let weights = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { weights, biases: vec![0.0; n] }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// W·x + θ.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Maps every point through W·v + θ, preserving order.
pub fn affine_map(v: &VertexSet, p: &LayerParams) -> Result<VertexSet> {
    if p.input_dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            op: "affine_map",
            expected: p.input_dim(),
            found: v.dim(),
        });
    }
    let points = v.points.iter().map(|x| p.apply(x)).collect();
    Ok(VertexSet::from_parts(p.output_dim(), points))
}

#[inline]
pub(crate) fn relu(x: f64) -> f64 {
    // Also maps -0.0 to +0.0.
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Componentwise max(0, ·) on every point.
pub fn relu_map(v: &VertexSet) -> VertexSet {
    let points = v
        .points
        .iter()
        .map(|p| p.iter().map(|&x| relu(x)).collect())
        .collect();
    VertexSet::from_parts(v.dim, points)
}

/// Keeps the first occurrence of every point, dropping later points within
/// Euclidean distance `tol` of a kept one.
pub fn dedup_vertices(v: &VertexSet, tol: f64) -> VertexSet {
    let tol2 = tol * tol;
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    for p in &v.points {
        let dup = kept.iter().any(|q| {
            p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= tol2
        });
        if !dup {
            kept.push(p.clone());
        }
    }
    VertexSet::from_parts(v.dim, kept)
}

/// Drops every point expressible as a convex combination of the others.
///
/// Candidates are tested in order against the current survivors (everything
/// not yet removed), so removal is immediate and the hull is preserved. The
/// input must be deduplicated: two copies of a vertex would remove each
/// other.
pub fn remove_internal_points(v: &VertexSet, tol: f64) -> Result<VertexSet> {
    if v.len() <= 1 {
        return Ok(v.clone());
    }
    let oracle = v.oracle();
    let mut removed = vec![false; v.len()];
    for k in 0..v.len() {
        removed[k] = true;
        let interior = oracle
            .contains_generator(k, &removed, tol)
            .map_err(|e| Error::solver("remove_internal_points", e))?;
        removed[k] = interior;
    }
    let points = v
        .points
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(p, _)| p.clone())
        .collect();
    Ok(VertexSet::from_parts(v.dim, points))
}

/// Membership of `x` in conv(v).
pub fn contains_point(v: &VertexSet, x: &[f64], tol: f64) -> Result<bool> {
    if x.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            op: "contains_point",
            expected: v.dim(),
            found: x.len(),
        });
    }
    v.oracle()
        .contains(x, &[], tol)
        .map_err(|e| Error::solver("contains_point", e))
}

/// Dedup followed by interior-point removal.
pub fn canonicalize(v: &VertexSet, dedup_tol: f64, lp_tol: f64) -> Result<VertexSet> {
    remove_internal_points(&dedup_vertices(v, dedup_tol), lp_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_feasibility::DEFAULT_LP_TOL;

    fn vs(p: &[&[f64]]) -> VertexSet {
        VertexSet::new(p.iter().map(|x| x.to_vec()).collect()).unwrap()
    }

    fn toy_layer() -> LayerParams {
        LayerParams::new(
            vec![vec![0.492693, -1.29232], vec![0.925861, 0.675146]],
            vec![-0.18857972, -0.14839205],
        )
        .unwrap()
    }

    #[test]
    fn affine_map_of_worked_example_square() {
        let sq = vs(&[&[1.0, 1.0], &[-1.0, 1.0], &[-1.0, -1.0], &[1.0, -1.0]]);
        let out = affine_map(&sq, &toy_layer()).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-5);
        assert!(close(out.point(0), &[-0.988207, 1.45261]));
        assert!(close(out.point(3), &[1.59643, 0.102323]));
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn affine_identity_and_scalar() {
        let v = vs(&[&[0.5, -2.0], &[3.0, 1.0]]);
        assert_eq!(affine_map(&v, &LayerParams::identity(2)).unwrap(), v);
        let p = LayerParams::new(vec![vec![3.0]], vec![1.0]).unwrap();
        assert_eq!(affine_map(&vs(&[&[2.0]]), &p).unwrap(), vs(&[&[7.0]]));
    }

    #[test]
    fn affine_dimension_mismatch() {
        let v = vs(&[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            affine_map(&v, &toy_layer()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu_map(&vs(&[&[-1.0, 2.0]])), vs(&[&[0.0, 2.0]]));
        let pos = vs(&[&[0.0, 1.0], &[3.0, 4.0]]);
        assert_eq!(relu_map(&pos), pos);
        let out = relu_map(&vs(&[&[-3.0, -4.0], &[-0.0, 5.0]]));
        assert_eq!(out, vs(&[&[0.0, 0.0], &[0.0, 5.0]]));
        assert!(out.point(1)[0].is_sign_positive());
    }

    #[test]
    fn rp_examples() {
        let v = vs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.2, 0.2]]);
        let out = remove_internal_points(&v, DEFAULT_LP_TOL).unwrap();
        assert_eq!(out, vs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]));
        let v = vs(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let out = remove_internal_points(&v, DEFAULT_LP_TOL).unwrap();
        assert_eq!(out, vs(&[&[0.0, 0.0], &[2.0, 2.0]]));
    }

    #[test]
    fn rp_single_point() {
        let v = vs(&[&[4.0, 4.0]]);
        assert_eq!(remove_internal_points(&v, DEFAULT_LP_TOL).unwrap(), v);
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(dedup_vertices(&vs(&[&[1.0, 1.0], &[1.0, 1.0]]), 1e-9), vs(&[&[1.0, 1.0]]));
        assert_eq!(dedup_vertices(&vs(&[&[0.0, 0.0], &[1e-12, 0.0]]), 1e-9), vs(&[&[0.0, 0.0]]));
        let d = vs(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(dedup_vertices(&d, 1e-9), d);
    }

    #[test]
    fn contains_examples() {
        let sq = vs(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        assert!(contains_point(&sq, &[0.5, 0.5], DEFAULT_LP_TOL).unwrap());
        assert!(!contains_point(&sq, &[1.5, 0.0], DEFAULT_LP_TOL).unwrap());
        for p in sq.points() {
            assert!(contains_point(&sq, p, DEFAULT_LP_TOL).unwrap());
        }
        assert!(contains_point(&sq, &[0.5], DEFAULT_LP_TOL).is_err());
    }

    #[test]
    fn vertex_set_validation() {
        assert!(VertexSet::new(vec![]).is_err());
        assert!(VertexSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(VertexSet::new(vec![vec![f64::NAN]]).is_err());
        assert!(LayerParams::new(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
    }
}
