//! Independent geometry used as ground truth by the integration tests. Only
//! the plain data types of the crate are used here; no LP, no skeletons.

#![allow(dead_code)]

use polyreach::{LayerParams, Network, VertexSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P2 = [f64; 2];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vs(points: Vec<Vec<f64>>) -> VertexSet {
    VertexSet::new(points).unwrap()
}

pub fn square() -> VertexSet {
    vs(vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]])
}

/// Random network on 2 inputs: `depth` layers in total, hidden widths in
/// 1..=max_width, weights and biases uniform in [-2, 2].
pub fn random_2d_net(rng: &mut impl Rng, max_depth: usize, max_width: usize) -> Network {
    let depth = rng.gen_range(1..=max_depth);
    let mut sizes = vec![2];
    for _ in 0..depth {
        sizes.push(rng.gen_range(1..=max_width));
    }
    Network::random(&sizes, 2.0, rng).unwrap()
}

pub fn uniform_point(rng: &mut impl Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Random convex combination of the points.
pub fn convex_combination(rng: &mut impl Rng, pts: &[Vec<f64>]) -> Vec<f64> {
    let w: Vec<f64> = pts.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    let mut out = vec![0.0; pts[0].len()];
    for (p, wi) in pts.iter().zip(&w) {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x * wi / s;
        }
    }
    out
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Each point of `a` is within `tol` of a point of `b` and vice versa.
pub fn same_point_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().all(|p| b.iter().any(|q| dist(p, q) <= tol))
        && b.iter().all(|q| a.iter().any(|p| dist(p, q) <= tol))
}

// ---------------------------------------------------------------- 2-D polygons

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn convex_hull_2d(points: &[P2], tol: f64) -> Vec<P2> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup_by(|a, b| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol);
    if p.len() <= 2 {
        return p;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= tol {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= tol {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

/// Point in a counter-clockwise convex polygon (boundary inclusive).
pub fn in_convex_polygon(poly: &[P2], x: P2, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => dist(&poly[0], &x) <= tol,
        2 => {
            let (a, b) = (poly[0], poly[1]);
            let len = dist(&a, &b);
            let t = ((x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1])) / (len * len);
            let proj = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            (-tol..=1.0 + tol).contains(&t) && dist(&proj, &x) <= tol
        }
        n => (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            cross(a, b, x) / dist(&a, &b) >= -tol
        }),
    }
}

/// Sutherland–Hodgman against the half-plane a·x + c ≥ 0.
pub fn clip(poly: &[P2], a: P2, c: f64) -> Vec<P2> {
    let f = |p: P2| a[0] * p[0] + a[1] * p[1] + c;
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

// ----------------------------------------------------- activation regions

/// A convex input region on which the network is the affine map `a x + c`.
#[derive(Debug, Clone)]
pub struct Region {
    pub poly: Vec<P2>,
    pub a: Vec<P2>,
    pub c: Vec<f64>,
}

impl Region {
    pub fn image(&self) -> Vec<Vec<f64>> {
        self.poly
            .iter()
            .map(|x| {
                self.a
                    .iter()
                    .zip(&self.c)
                    .map(|(row, ci)| row[0] * x[0] + row[1] * x[1] + ci)
                    .collect()
            })
            .collect()
    }
}

fn compose(layer: &LayerParams, a: &[P2], c: &[f64]) -> (Vec<P2>, Vec<f64>) {
    let mut na = Vec::new();
    let mut nc = Vec::new();
    for (row, b) in layer.weights().iter().zip(layer.biases()) {
        let mut r = [0.0, 0.0];
        let mut s = *b;
        for ((w, ar), cr) in row.iter().zip(a).zip(c) {
            r[0] += w * ar[0];
            r[1] += w * ar[1];
            s += w * cr;
        }
        na.push(r);
        nc.push(s);
    }
    (na, nc)
}

/// Splits the input polygon into the regions of constant activation
/// pattern by clipping against each neuron's pre-activation half-planes,
/// zeroing the rows of inactive neurons. Slivers below `min_area` are
/// dropped.
pub fn activation_regions(net: &Network, input: &[P2], min_area: f64) -> Vec<Region> {
    let last = net.num_layers() - 1;
    let mut regions = vec![Region {
        poly: input.to_vec(),
        a: vec![[1.0, 0.0], [0.0, 1.0]],
        c: vec![0.0, 0.0],
    }];
    for (l, layer) in net.layers().iter().enumerate() {
        let mut next = Vec::new();
        for r in regions {
            let (a, c) = compose(layer, &r.a, &r.c);
            if l == last {
                next.push(Region { poly: r.poly, a, c });
                continue;
            }
            // Neuron-by-neuron split keeps the enumeration proportional to
            // the regions that actually exist.
            let mut pieces = vec![(r.poly, a.clone(), c.clone())];
            for k in 0..a.len() {
                let mut split = Vec::new();
                for (poly, pa, pc) in pieces {
                    let on = clip(&poly, a[k], c[k]);
                    if on.len() >= 3 && polygon_area(&on).abs() > min_area {
                        split.push((on, pa.clone(), pc.clone()));
                    }
                    let off = clip(&poly, [-a[k][0], -a[k][1]], -c[k]);
                    if off.len() >= 3 && polygon_area(&off).abs() > min_area {
                        let mut za = pa;
                        let mut zc = pc;
                        za[k] = [0.0, 0.0];
                        zc[k] = 0.0;
                        split.push((off, za, zc));
                    }
                }
                pieces = split;
            }
            next.extend(pieces.into_iter().map(|(poly, a, c)| Region { poly, a, c }));
        }
        regions = next;
    }
    regions
}

// -------------------------------------------------- planar sets in R^m

/// Orthonormal basis of the affine hull of `pts` (at most two vectors
/// expected) and the anchor point.
fn planar_frame(pts: &[Vec<f64>], tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let anchor = pts[0].clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for p in pts {
            let mut r: Vec<f64> = p.iter().zip(&anchor).map(|(x, a)| x - a).collect();
            for b in &basis {
                let d: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
            let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, r));
            }
        }
        match best {
            Some((n, r)) if n > tol => basis.push(r.into_iter().map(|x| x / n).collect()),
            _ => break,
        }
    }
    assert!(basis.len() <= 2, "set is not planar: rank {}", basis.len());
    (anchor, basis)
}

fn to_frame(anchor: &[f64], basis: &[Vec<f64>], p: &[f64]) -> P2 {
    let mut out = [0.0, 0.0];
    for (o, b) in out.iter_mut().zip(basis) {
        *o = b.iter().zip(p.iter().zip(anchor)).map(|(bb, (x, a))| bb * (x - a)).sum();
    }
    out
}

/// Extreme points of a set lying in a plane of R^m.
pub fn planar_extreme_points(pts: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let (anchor, basis) = planar_frame(pts, tol);
    let flat: Vec<P2> = pts.iter().map(|p| to_frame(&anchor, &basis, p)).collect();
    let hull = convex_hull_2d(&flat, tol);
    hull.iter()
        .map(|h| {
            let i = flat.iter().position(|f| dist(f, h) <= tol).unwrap();
            pts[i].clone()
        })
        .collect()
}

/// The polygon (in its own plane) and frame of a planar point set.
pub struct PlanarPolygon {
    anchor: Vec<f64>,
    basis: Vec<Vec<f64>>,
    poly: Vec<P2>,
}

impl PlanarPolygon {
    pub fn new(pts: &[Vec<f64>], tol: f64) -> Self {
        let (anchor, basis) = planar_frame(pts, tol);
        let flat: Vec<P2> = pts.iter().map(|p| to_frame(&anchor, &basis, p)).collect();
        Self {
            poly: convex_hull_2d(&flat, tol),
            anchor,
            basis,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let f = to_frame(&self.anchor, &self.basis, x);
        let mut back = self.anchor.clone();
        for (k, b) in self.basis.iter().enumerate() {
            back.iter_mut().zip(b).for_each(|(o, bb)| *o += f[k] * bb);
        }
        dist(&back, x) <= tol && in_convex_polygon(&self.poly, f, tol)
    }
}

// ------------------------------------------------- EPNM against clipping

pub fn square_poly() -> Vec<P2> {
    vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]
}

/// Extreme points of the image of every activation region of `net` over
/// the square.
pub fn oracle_images(net: &Network) -> Vec<Vec<Vec<f64>>> {
    activation_regions(net, &square_poly(), 1e-12)
        .iter()
        .map(|r| planar_extreme_points(&r.image(), 1e-9))
        .collect()
}

/// Compares an EPNM result on the square with the clipping oracle: same
/// vertex union, and `samples` forward images of random inputs inside the
/// union.
pub fn check_against_oracle(
    net: &Network,
    reach: &polyreach::ReachSet,
    rng: &mut impl Rng,
    samples: usize,
) -> Result<(), String> {
    let want: Vec<Vec<f64>> = oracle_images(net).into_iter().flatten().collect();
    let got: Vec<Vec<f64>> = reach.polytopes.iter().flat_map(|p| p.points().to_vec()).collect();
    if !same_point_set(&got, &want, 1e-6) {
        return Err(format!("vertex union differs: epnm {got:?} oracle {want:?}"));
    }
    for _ in 0..samples {
        let x = uniform_point(rng, -1.0, 1.0, 2);
        let y = net.forward(&x, true).map_err(|e| e.to_string())?;
        if !reach.contains(&y, 1e-6).map_err(|e| e.to_string())? {
            return Err(format!("forward image {y:?} of {x:?} not reached"));
        }
    }
    Ok(())
}
