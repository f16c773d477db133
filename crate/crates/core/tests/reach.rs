mod common;

use common::*;
use polyreach::vpolytope::contains_point;
use polyreach::{apnm, epnm, papnm, Executor, LayerParams, Network, ReachOptions, ReachSet, Splitting};
use rand::Rng;

fn opts() -> ReachOptions {
    ReachOptions::default()
}

/// Random net on `n` inputs with small widths, so every pipeline stays cheap.
fn small_net(rng: &mut impl Rng, n: usize) -> Network {
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![n];
    sizes.extend((0..depth).map(|_| rng.gen_range(1..=3)));
    Network::random(&sizes, 2.0, rng).unwrap()
}

fn box_vertices(n: usize) -> polyreach::VertexSet {
    vs((0..1usize << n)
        .map(|q| (0..n).map(|i| if (q >> i) & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect())
}

#[test]
fn forward_images_lie_in_every_pipeline() {
    let mut rng = rng(61);
    for case in 0..1000 {
        let n = if case % 4 == 3 { 3 } else { 2 };
        let net = small_net(&mut rng, n);
        let v0 = box_vertices(n);
        let sets: Vec<(&str, ReachSet)> = vec![
            ("epnm", epnm(&v0, &net, &opts()).unwrap()),
            ("apnm", apnm(&v0, &net, &opts()).unwrap()),
            ("papnm2", papnm(&v0, &net, 2, &opts()).unwrap()),
            ("papnm4", papnm(&v0, &net, 4, &opts()).unwrap()),
        ];
        for _ in 0..5 {
            let x = convex_combination(&mut rng, v0.points());
            let y = net.forward(&x, true).unwrap();
            for (name, r) in &sets {
                assert!(r.contains(&y, 1e-6).unwrap(), "case {case}: {name} misses {y:?}");
            }
        }
    }
}

#[test]
fn epnm_matches_the_clipping_oracle() {
    let mut rng = rng(62);
    for case in 0..1000 {
        let net = random_2d_net(&mut rng, 3, 4);
        let r = epnm(&square(), &net, &opts()).unwrap();
        if let Err(msg) = check_against_oracle(&net, &r, &mut rng, 5) {
            panic!("case {case}: {msg}");
        }
    }
}

#[test]
fn epnm_points_are_attained() {
    let mut rng = rng(63);
    for case in 0..1000 {
        let net = random_2d_net(&mut rng, 3, 4);
        let r = epnm(&square(), &net, &opts()).unwrap();
        let images: Vec<PlanarPolygon> = oracle_images(&net)
            .iter()
            .map(|pts| PlanarPolygon::new(pts, 1e-9))
            .collect();
        for p in &r.polytopes {
            let y = convex_combination(&mut rng, p.points());
            assert!(
                images.iter().any(|img| img.contains(&y, 1e-4)),
                "case {case}: {y:?} is not an image point"
            );
        }
    }
}

#[test]
fn epnm_nests_inside_apnm() {
    let mut rng = rng(64);
    for case in 0..1000 {
        let n = if case % 4 == 3 { 3 } else { 2 };
        let net = small_net(&mut rng, n);
        let v0 = box_vertices(n);
        let e = epnm(&v0, &net, &opts()).unwrap();
        let a = apnm(&v0, &net, &opts()).unwrap();
        assert_eq!(a.polytopes.len(), 1);
        for p in e.polytopes.iter().flat_map(|p| p.points()) {
            assert!(contains_point(&a.polytopes[0], p, 1e-6).unwrap(), "case {case}: {p:?}");
        }
    }
}

#[test]
fn group_size_one_is_epnm() {
    let mut rng = rng(65);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=3);
        let net = small_net(&mut rng, n);
        let v0 = box_vertices(n);
        assert_eq!(papnm(&v0, &net, 1, &opts()).unwrap(), epnm(&v0, &net, &opts()).unwrap());
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let mut rng = rng(66);
    let pooled = ReachOptions {
        exec: Executor::with_workers(4).unwrap(),
        ..opts()
    };
    for _ in 0..100 {
        let net = Network::random(&[3, 5, 5, 2], 1.0, &mut rng).unwrap();
        let v0 = box_vertices(3);
        assert_eq!(epnm(&v0, &net, &opts()).unwrap(), epnm(&v0, &net, &pooled).unwrap());
        assert_eq!(papnm(&v0, &net, 2, &opts()).unwrap(), papnm(&v0, &net, 2, &pooled).unwrap());
        assert_eq!(apnm(&v0, &net, &opts()).unwrap(), apnm(&v0, &net, &pooled).unwrap());
    }
}

/// A square embedded in R^3 on the plane x3 = 1 + x1 + x2, passed through
/// ReLU: cutting all three hyperplanes off the square's own edges misses the
/// image of the square's centre.
#[test]
fn single_pass_splitting_misses_points_in_three_dimensions() {
    let lift = LayerParams::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        vec![0.0, 0.0, 1.0],
    )
    .unwrap();
    let net = Network::from_layers(vec![lift, LayerParams::identity(3)]).unwrap();
    let centre = net.forward(&[0.0, 0.0], true).unwrap();
    assert_eq!(centre, vec![0.0, 0.0, 1.0]);

    let exact = apnm(&square(), &net, &opts()).unwrap();
    assert!(exact.contains(&centre, 1e-9).unwrap());
    assert!(epnm(&square(), &net, &opts()).unwrap().contains(&centre, 1e-9).unwrap());

    let single = ReachOptions {
        splitting: Splitting::SinglePass,
        ..opts()
    };
    assert!(!apnm(&square(), &net, &single).unwrap().contains(&centre, 1e-9).unwrap());
}
