//! Convex-combination feasibility oracle.
//!
//! Every geometric question in the pipeline (edge adjacency, interior-point
//! removal, origin membership, generic membership) reduces to: does a λ ≥ 0
//! with Σλ = 1 and Σλᵢvᵢ = t exist, with some λᵢ pinned to zero? This module
//! answers that with a dense phase-one simplex.
//!
//! Point sets flowing through a network are usually low-dimensional flats in
//! a wide ambient space (a 5-D box inside a 50-neuron layer), so
//! [`HullOracle`] first projects the generators onto an orthonormal basis of
//! their affine hull. The LP then has `rank + 1` rows instead of `n + 1`.

use crate::error::{Error, Result, SolverFailure};

pub const DEFAULT_LP_TOL: f64 = 1e-7;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;

/// λ ≥ 0, Σλ = 1, λᵢ = 0 for i ∈ `zeroed`, Σ λᵢ·generatorᵢ = target.
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityQuery<'a> {
    pub generators: &'a [Vec<f64>],
    pub target: &'a [f64],
    /// 0-based generator indices forced to weight zero.
    pub zeroed: &'a [usize],
}

/// Whether `q.target` is a convex combination of the non-zeroed generators,
/// with constraint residuals within `tol`.
pub fn convex_combination_exists(q: &FeasibilityQuery<'_>, tol: f64) -> Result<bool> {
    const OP: &str = "convex_combination_exists";
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(OP, format!("tolerance must be positive, got {tol}")));
    }
    let Some(first) = q.generators.first() else {
        return Err(Error::invalid(OP, "at least one generator is required"));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::invalid(OP, "generators must have at least one coordinate"));
    }
    for g in q.generators {
        if g.len() != n {
            return Err(Error::DimensionMismatch { op: OP, expected: n, found: g.len() });
        }
    }
    if q.target.len() != n {
        return Err(Error::DimensionMismatch { op: OP, expected: n, found: q.target.len() });
    }
    let mut excluded = vec![false; q.generators.len()];
    for &z in q.zeroed {
        if z >= excluded.len() {
            return Err(Error::invalid(
                OP,
                format!("zeroed index {z} out of range for {} generators", excluded.len()),
            ));
        }
        excluded[z] = true;
    }
    HullOracle::new(q.generators)
        .contains(q.target, &excluded, tol)
        .map_err(|e| Error::solver(OP, e))
}

/// Generators pre-projected onto their affine hull, ready for repeated
/// membership queries against subsets of them.
#[derive(Debug, Clone)]
pub struct HullOracle {
    anchor: Vec<f64>,
    basis: Vec<Vec<f64>>,
    coords: Vec<Vec<f64>>,
}

impl HullOracle {
    pub fn new(points: &[Vec<f64>]) -> Self {
        let anchor = points.first().cloned().unwrap_or_default();
        let n = anchor.len();
        let mut residuals: Vec<Vec<f64>> = points
            .iter()
            .skip(1)
            .map(|p| p.iter().zip(&anchor).map(|(a, b)| a - b).collect())
            .collect();
        let scale = residuals
            .iter()
            .flat_map(|r| r.iter())
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let rank_tol = 1e-10 * scale;

        // Pivoted modified Gram-Schmidt over the difference vectors.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < n {
            let (best, best_norm) = residuals
                .iter()
                .enumerate()
                .map(|(i, r)| (i, norm(r)))
                .fold((usize::MAX, 0.0), |acc, (i, nr)| if nr > acc.1 { (i, nr) } else { acc });
            if best == usize::MAX || best_norm <= rank_tol {
                break;
            }
            let mut q: Vec<f64> = residuals[best].iter().map(|x| x / best_norm).collect();
            // Re-orthogonalize once against the existing basis.
            for b in &basis {
                let d = dot(&q, b);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
            let qn = norm(&q);
            q.iter_mut().for_each(|x| *x /= qn);
            for r in residuals.iter_mut() {
                let d = dot(r, &q);
                r.iter_mut().zip(&q).for_each(|(x, y)| *x -= d * y);
            }
            basis.push(q);
        }

        let coords = points.iter().map(|p| project(&basis, &anchor, p)).collect();
        Self { anchor, basis, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Dimension of the affine hull of the generators.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Membership of an arbitrary point in the hull of the generators not
    /// flagged in `excluded`.
    pub fn contains(
        &self,
        target: &[f64],
        excluded: &[bool],
        tol: f64,
    ) -> std::result::Result<bool, SolverFailure> {
        if self.coords.is_empty() {
            return Ok(false);
        }
        let y = project(&self.basis, &self.anchor, target);
        // Component of the target orthogonal to the affine hull.
        let mut off = 0.0f64;
        for (s, &t) in target.iter().enumerate() {
            let back: f64 = self.basis.iter().zip(&y).map(|(b, c)| b[s] * c).sum();
            off = off.max((t - self.anchor[s] - back).abs());
        }
        if off > tol {
            return Ok(false);
        }
        self.solve(&y, excluded, tol)
    }

    /// Membership of generator `k` itself (already projected).
    pub fn contains_generator(
        &self,
        k: usize,
        excluded: &[bool],
        tol: f64,
    ) -> std::result::Result<bool, SolverFailure> {
        self.solve(&self.coords[k], excluded, tol)
    }

    /// Membership of the midpoint of generators `i` and `j`.
    pub fn contains_midpoint(
        &self,
        i: usize,
        j: usize,
        excluded: &[bool],
        tol: f64,
    ) -> std::result::Result<bool, SolverFailure> {
        let mid: Vec<f64> = self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        self.solve(&mid, excluded, tol)
    }

    fn solve(&self, y: &[f64], excluded: &[bool], tol: f64) -> std::result::Result<bool, SolverFailure> {
        let active: Vec<usize> = (0..self.coords.len())
            .filter(|&i| !excluded.get(i).copied().unwrap_or(false))
            .collect();
        if active.is_empty() {
            return Ok(false);
        }
        // Cheap exits: the target coincides with an active generator.
        for &i in &active {
            let d: f64 = self.coords[i].iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
            if d <= tol {
                return Ok(true);
            }
        }
        if self.basis.is_empty() {
            // All generators coincide; the target was already compared above.
            return Ok(false);
        }
        let cols: Vec<&[f64]> = active.iter().map(|&i| self.coords[i].as_slice()).collect();
        phase_one(&cols, y, tol)
    }
}

fn project(basis: &[Vec<f64>], anchor: &[f64], p: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|b| b.iter().zip(p.iter().zip(anchor)).map(|(bb, (x, a))| bb * (x - a)).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Phase-one simplex on `Σ λⱼ colⱼ = y, Σ λⱼ = 1, λ ≥ 0`.
///
/// Minimizes the sum of artificial variables; feasible iff that sum (the L1
/// constraint residual) reaches `tol`. Dantzig pricing, switching to Bland's
/// rule after a pivot budget to break cycling.
fn phase_one(cols: &[&[f64]], y: &[f64], tol: f64) -> std::result::Result<bool, SolverFailure> {
    let k = y.len();
    let m = k + 1;
    let ncols = cols.len();
    let width = ncols + m + 1;
    let rhs_col = width - 1;

    let mut t = vec![0.0f64; m * width];
    let mut basis: Vec<usize> = (0..m).map(|r| ncols + r).collect();
    for r in 0..m {
        let b = if r < k { y[r] } else { 1.0 };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let row = &mut t[r * width..(r + 1) * width];
        for (j, c) in cols.iter().enumerate() {
            row[j] = sign * if r < k { c[r] } else { 1.0 };
        }
        row[ncols + r] = 1.0;
        row[rhs_col] = sign * b;
    }
    // Reduced costs of the phase-one objective; z[rhs] holds -w.
    let mut z = vec![0.0f64; width];
    for r in 0..m {
        for j in 0..ncols {
            z[j] -= t[r * width + j];
        }
        z[rhs_col] -= t[r * width + rhs_col];
    }

    let bland_after = 20 * (m + ncols) + 100;
    let limit = 200 * (m + ncols) + 1000;
    let mut iter = 0usize;
    loop {
        let w = -z[rhs_col];
        if !w.is_finite() {
            return Err(SolverFailure::NonFinite);
        }
        if w <= tol {
            return Ok(true);
        }
        if iter >= limit {
            return Err(SolverFailure::IterationLimit(limit));
        }
        let bland = iter >= bland_after;

        // Artificial columns never re-enter.
        let mut enter = None;
        let mut best = -COST_EPS;
        for (j, &d) in z.iter().enumerate().take(ncols) {
            if d < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(je) = enter else {
            return Ok(w <= tol);
        };

        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        let mut best_piv = 0.0;
        for r in 0..m {
            let a = t[r * width + je];
            if a > PIVOT_EPS {
                let ratio = t[r * width + rhs_col].max(0.0) / a;
                let better = if bland {
                    ratio < best_ratio - 1e-15
                        || (ratio <= best_ratio + 1e-15
                            && leave.is_some_and(|l: usize| basis[r] < basis[l]))
                } else {
                    ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a > best_piv)
                };
                if leave.is_none() || better {
                    leave = Some(r);
                    best_ratio = ratio;
                    best_piv = a;
                }
            }
        }
        let Some(lr) = leave else {
            // Phase one is bounded below by zero; an unbounded ray means the
            // tableau has lost accuracy.
            return Err(SolverFailure::NonFinite);
        };

        pivot(&mut t, &mut z, width, m, lr, je);
        basis[lr] = je;
        iter += 1;
    }
}

fn pivot(t: &mut [f64], z: &mut [f64], width: usize, m: usize, lr: usize, je: usize) {
    let p = t[lr * width + je];
    {
        let row = &mut t[lr * width..(lr + 1) * width];
        row.iter_mut().for_each(|x| *x /= p);
        row[je] = 1.0;
    }
    let (before, rest) = t.split_at_mut(lr * width);
    let (prow, after) = rest.split_at_mut(width);
    for other in before.chunks_exact_mut(width).chain(after.chunks_exact_mut(width)) {
        let f = other[je];
        if f != 0.0 {
            other.iter_mut().zip(prow.iter()).for_each(|(x, y)| *x -= f * y);
            other[je] = 0.0;
        }
    }
    let f = z[je];
    if f != 0.0 {
        z.iter_mut().zip(prow.iter()).for_each(|(x, y)| *x -= f * y);
        z[je] = 0.0;
    }
    debug_assert!(m * width == t.len());
}
