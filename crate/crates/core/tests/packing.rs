use std::f64::consts::PI;

use bestpack::cantor::{exact_delta, rational_to_f64};
use bestpack::minkowski::exact_neighborhood_volume;
use bestpack::packing::{
    best_packing, certify_packing_upper_bound, greedy_lower_bound, min_pairwise_distance, PackingOptions,
};
use bestpack::{CompactSet, Error, IfsSpec, Point};
use proptest::prelude::*;

fn opts(seed: u64) -> PackingOptions {
    PackingOptions::with_seed(seed).restarts(6)
}

fn brute_min_distance(pts: &[Point]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            m = m.min(pts[i].distance(&pts[j]));
        }
    }
    m
}

#[test]
fn square_and_cube_optima() {
    let sq = CompactSet::cube(2).unwrap();
    // corners; corners plus centre; 3 x 3 grid
    for (n, expect) in [(2usize, 2f64.sqrt()), (4, 1.0), (5, 0.5 * 2f64.sqrt()), (9, 0.5)] {
        let d = best_packing(&sq, n, &opts(n as u64)).unwrap().delta;
        assert!((d - expect).abs() < 1e-6, "N = {n}: {d} vs {expect}");
    }
    let cube = CompactSet::cube(3).unwrap();
    for (n, expect) in [(2usize, 3f64.sqrt()), (8, 1.0)] {
        let d = best_packing(&cube, n, &opts(1)).unwrap().delta;
        assert!((d - expect).abs() < 1e-6, "N = {n}: {d}");
    }
}

#[test]
fn circle_packings_are_inscribed_polygons() {
    let circle = CompactSet::circle(0.75).unwrap();
    for n in [2usize, 3, 7, 20] {
        let d = best_packing(&circle, n, &opts(2)).unwrap().delta;
        let expect = 2.0 * 0.75 * (PI / n as f64).sin();
        assert!((d - expect).abs() < 1e-8, "N = {n}");
    }
}

#[test]
fn shifted_interval_scales() {
    let set = CompactSet::interval(-2.0, 3.0).unwrap();
    for n in [2usize, 6, 11] {
        let rep = best_packing(&set, n, &opts(4)).unwrap();
        assert!((rep.delta - 5.0 / (n - 1) as f64).abs() < 1e-9);
        let xs: Vec<f64> = rep.config.points.iter().map(|p| p.0[0]).collect();
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        assert!((brute_min_distance(&rep.config.points) - rep.delta).abs() < 1e-15);
    }
}

#[test]
fn self_similar_heuristic_matches_exact_for_small_n() {
    let ifs = IfsSpec::cantor();
    let set = CompactSet::cantor();
    for n in 2..=12usize {
        let heuristic = best_packing(&set, n, &opts(n as u64)).unwrap().delta;
        let exact = rational_to_f64(&exact_delta(&ifs, n, 12).unwrap().delta);
        assert!(heuristic <= exact * (1.0 + 1e-12));
        assert!((heuristic - exact).abs() <= 1e-12, "N = {n}: {heuristic} vs {exact}");
    }
}

#[test]
fn reported_delta_is_the_configuration_separation() {
    let sphere = CompactSet::sphere(1.0).unwrap();
    let rep = best_packing(&sphere, 17, &PackingOptions::with_seed(8).restarts(3)).unwrap();
    assert_eq!(rep.n, 17);
    assert_eq!(rep.config.len(), 17);
    assert!(rep.lower_bound_certified);
    assert_eq!(min_pairwise_distance(&rep.config.points).unwrap(), rep.delta);
    for p in &rep.config.points {
        assert!(sphere.distance_to_set(p).unwrap() < 1e-12);
    }
}

#[test]
fn invalid_requests() {
    let set = CompactSet::unit_interval();
    assert!(matches!(best_packing(&set, 1, &opts(1)), Err(Error::InvalidParameter(_))));
    let bad = PackingOptions {
        schedule: vec![],
        ..opts(1)
    };
    assert!(best_packing(&set, 3, &bad).is_err());
    assert!(min_pairwise_distance(&[Point::scalar(0.0)]).is_err());
}

#[test]
fn certified_bound_holds_against_computed_packings() {
    // interval: volume 1 + 2 rho
    let interval = CompactSet::unit_interval();
    let n0 = certify_packing_upper_bound(&interval, 0.1, 1.25, 1.0).unwrap();
    assert_eq!(n0, 7);
    for n in n0..n0 + 4 {
        assert!(best_packing(&interval, n, &opts(1)).unwrap().delta <= 0.2);
    }
    // circle of radius 1: volume 4 pi rho
    let circle = CompactSet::circle(1.0).unwrap();
    let rho = 0.1;
    let gamma = 13.0;
    assert!(exact_neighborhood_volume(&circle, rho) < gamma * rho);
    let n0 = certify_packing_upper_bound(&circle, rho, gamma, 1.0).unwrap();
    assert_eq!(n0, (gamma / (PI * rho)).floor() as usize + 1);
    assert!(best_packing(&circle, n0, &opts(1)).unwrap().delta <= 2.0 * rho);
    assert!(matches!(
        certify_packing_upper_bound(&circle, 0.1, 0.7, 1.0),
        Err(Error::Precondition(_))
    ));
    assert!(certify_packing_upper_bound(&circle, 0.1, 13.0, 3.0).is_err());
}

#[test]
fn greedy_configurations_are_separated() {
    for set in [
        CompactSet::unit_interval(),
        CompactSet::cube(2).unwrap(),
        CompactSet::sphere(1.0).unwrap(),
        CompactSet::cantor(),
    ] {
        let g = greedy_lower_bound(&set, 0.3, 5, 2000).unwrap();
        assert_eq!(g.k, g.config.len());
        assert!(g.k >= 2);
        assert!(brute_min_distance(&g.config.points) >= 0.3);
        // a greedy k-point 0.3-separated set bounds delta_k from below
        let d = best_packing(&set, g.k, &PackingOptions::with_seed(1).restarts(3)).unwrap().delta;
        assert!(d >= 0.3 - 1e-12, "{}: delta_{} = {d}", set.label(), g.k);
    }
    assert_eq!(greedy_lower_bound(&CompactSet::unit_interval(), 0.25, 1, 0).unwrap().k, 2);
    assert!(greedy_lower_bound(&CompactSet::unit_interval(), 0.0, 1, 10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn min_distance_matches_brute_force(seed in any::<u64>(), n in 2usize..40) {
        let pts = CompactSet::cube(3).unwrap().sample(seed, n).unwrap();
        prop_assert_eq!(min_pairwise_distance(&pts).unwrap(), brute_min_distance(&pts));
    }

    #[test]
    fn certified_bound_is_consistent_with_the_interval(rho in 0.01f64..0.2, slack in 1.001f64..2.0) {
        let set = CompactSet::unit_interval();
        let gamma = (1.0 + 2.0 * rho) * slack;
        prop_assume!(rho < gamma / 2.0);
        let n0 = certify_packing_upper_bound(&set, rho, gamma, 1.0).unwrap();
        // delta_N = 1 / (N - 1) on [0, 1]
        prop_assert!(1.0 / (n0 - 1) as f64 <= 2.0 * rho + 1e-12);
    }
}
