use std::f64::consts::PI;

use approx::assert_relative_eq;
use bestpack::energy::Configuration;
use bestpack::equidist::{
    deviation_csv, equidist_deviation, natural_cdf, region_fraction, standard_regions, Region, RegionKind, SMALL_N,
};
use bestpack::{CompactSet, IfsSpec, Point};
use num_rational::Rational64;
use proptest::prelude::*;

fn config(set: &CompactSet, points: Vec<Point>) -> Configuration {
    Configuration::new(set.clone(), points).unwrap()
}

/// Measure of `[0, x]` bracketed by counting depth-`m` cells.
fn cdf_bracket(ifs: &IfsSpec, m: u32, x: f64) -> (f64, f64) {
    let ends = ifs.endpoints(m);
    let total = (ends.len() / 2) as f64;
    let below = ends.chunks(2).filter(|c| c[1] <= x).count() as f64;
    let touching = ends.chunks(2).filter(|c| c[0] <= x).count() as f64;
    (below / total, touching / total)
}

#[test]
fn region_fractions_have_closed_forms() {
    let circle = CompactSet::circle(2.0).unwrap();
    let arc = Region::new(&circle, "a", RegionKind::Arc { theta1: 0.4, theta2: 0.4 + PI / 3.0 }).unwrap();
    assert_relative_eq!(arc.measure_fraction, 1.0 / 6.0, max_relative = 1e-14);

    let sphere = CompactSet::sphere(1.0).unwrap();
    for h in [-1.0, -0.3, 0.0, 0.5, 1.0] {
        let cap = Region::new(&sphere, "c", RegionKind::SphericalCap { axis: [1.0, 0.0, 0.0], height: h }).unwrap();
        assert_relative_eq!(cap.measure_fraction, (1.0 - h) / 2.0);
    }

    let cube = CompactSet::cube(3).unwrap();
    let b = Region::new(&cube, "b", RegionKind::SubCube { lo: vec![0.25, 0.0, -1.0], hi: vec![0.75, 0.5, 0.5] }).unwrap();
    assert_relative_eq!(b.measure_fraction, 0.5 * 0.5 * 0.5);

    let interval = CompactSet::interval(-1.0, 3.0).unwrap();
    let s = Region::new(&interval, "s", RegionKind::Subinterval { a: 2.0, b: 5.0 }).unwrap();
    assert_relative_eq!(s.measure_fraction, 0.25);

    let cantor = CompactSet::cantor();
    let left = Region::new(&cantor, "l", RegionKind::Subinterval { a: 0.0, b: 1.0 / 3.0 }).unwrap();
    assert_relative_eq!(left.measure_fraction, 0.5, max_relative = 1e-15);
    let mid = Region::new(&cantor, "m", RegionKind::Subinterval { a: 2.0 / 9.0, b: 7.0 / 9.0 }).unwrap();
    assert_relative_eq!(mid.measure_fraction, 0.5, max_relative = 1e-15);
}

#[test]
fn mismatched_regions_are_rejected() {
    let sphere = CompactSet::sphere(1.0).unwrap();
    assert!(Region::new(&sphere, "x", RegionKind::Arc { theta1: 0.0, theta2: 1.0 }).is_err());
    assert!(Region::new(&sphere, "x", RegionKind::SphericalCap { axis: [1.0, 1.0, 0.0], height: 0.0 }).is_err());
    let circle = CompactSet::circle(1.0).unwrap();
    assert!(Region::new(&circle, "x", RegionKind::Arc { theta1: 0.0, theta2: 7.0 }).is_err());
    let cube = CompactSet::cube(2).unwrap();
    assert!(Region::new(&cube, "x", RegionKind::SubCube { lo: vec![0.0], hi: vec![1.0] }).is_err());
}

#[test]
fn natural_cdf_matches_cell_counts() {
    let sets = [
        IfsSpec::cantor(),
        IfsSpec::new(Rational64::new(1, 5), vec![Rational64::new(0, 1), Rational64::new(2, 5), Rational64::new(4, 5)])
            .unwrap(),
    ];
    for ifs in &sets {
        for i in 0..=97 {
            let x = i as f64 / 97.0;
            let f = natural_cdf(ifs, x);
            let (lo, hi) = cdf_bracket(ifs, 9, x);
            assert!(lo - 1e-12 <= f && f <= hi + 1e-12, "x = {x}: {f} not in [{lo}, {hi}]");
        }
    }
    let cantor = IfsSpec::cantor();
    assert_eq!(natural_cdf(&cantor, -0.5), 0.0);
    assert_eq!(natural_cdf(&cantor, 1.5), 1.0);
    assert_relative_eq!(natural_cdf(&cantor, 0.25), 1.0 / 3.0, max_relative = 1e-14);
    assert_relative_eq!(natural_cdf(&cantor, 0.75), 2.0 / 3.0, max_relative = 1e-14);
}

#[test]
fn boundary_points_count() {
    let interval = CompactSet::unit_interval();
    let r = Region::new(&interval, "q", RegionKind::Subinterval { a: 0.25, b: 0.5 }).unwrap();
    assert!(r.contains(&[0.25]) && r.contains(&[0.5]) && !r.contains(&[0.51]));
    let circle = CompactSet::circle(1.0).unwrap();
    let arc = Region::new(&circle, "a", RegionKind::Arc { theta1: -PI / 2.0, theta2: 0.0 }).unwrap();
    assert!(arc.contains(&[1.0, 0.0]) && arc.contains(&[0.0, -1.0]) && !arc.contains(&[0.0, 1.0]));
    let sphere = CompactSet::sphere(2.0).unwrap();
    let cap = Region::new(&sphere, "c", RegionKind::SphericalCap { axis: [0.0, 0.0, 1.0], height: 0.0 }).unwrap();
    assert!(cap.contains(&[2.0, 0.0, 0.0]) && !cap.contains(&[0.0, 0.0, -2.0]));
}

#[test]
fn midpoint_configurations_have_zero_deviation() {
    let interval = CompactSet::unit_interval();
    let n = 16;
    let mids = (0..n).map(|i| Point::scalar((i as f64 + 0.5) / n as f64)).collect();
    let regions = standard_regions(&interval).unwrap();
    let rows = equidist_deviation(&[config(&interval, mids)], &regions).unwrap();
    assert_eq!(rows[0].max_deviation, 0.0);
    assert!(!rows[0].small_n);

    let circle = CompactSet::circle(1.0).unwrap();
    // offsets avoid the arc endpoints at 0.3 + k pi / 2
    let pts = (0..12)
        .map(|i| {
            let t = 0.3 + PI / 12.0 + i as f64 * PI / 6.0;
            Point::new(vec![t.cos(), t.sin()])
        })
        .collect();
    let rows = equidist_deviation(&[config(&circle, pts)], &standard_regions(&circle).unwrap()).unwrap();
    assert!(rows[0].max_deviation < 1e-15);
}

#[test]
fn deviation_rows_and_csv() {
    let interval = CompactSet::unit_interval();
    let small = config(&interval, vec![Point::scalar(0.0), Point::scalar(0.1), Point::scalar(1.0)]);
    let regions = standard_regions(&interval).unwrap();
    let rows = equidist_deviation(std::slice::from_ref(&small), &regions).unwrap();
    assert!(rows[0].small_n && rows[0].n < SMALL_N);
    // two of three points in the first quartile
    assert_relative_eq!(rows[0].max_deviation, 2.0 / 3.0 - 0.25, max_relative = 1e-15);
    assert_relative_eq!(region_fraction(&small, &regions[0]).unwrap(), 2.0 / 3.0);
    let csv = deviation_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,region,fraction,measure_fraction,deviation");
    assert_eq!(lines.len(), 1 + regions.len());
    assert!(lines[1].starts_with("3,quartile1,"));
    assert!(equidist_deviation(&[small], &[]).is_err());
}

#[test]
fn standard_regions_cover_every_set() {
    for set in [
        CompactSet::unit_interval(),
        CompactSet::circle(1.0).unwrap(),
        CompactSet::sphere(1.0).unwrap(),
        CompactSet::cube(2).unwrap(),
        CompactSet::cube(3).unwrap(),
        CompactSet::cantor(),
    ] {
        let regions = standard_regions(&set).unwrap();
        assert!(regions.len() >= 2);
        assert!(regions.iter().all(|r| (0.0..=1.0).contains(&r.measure_fraction)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn natural_cdf_is_monotone(a in -0.2f64..1.2, b in -0.2f64..1.2) {
        let ifs = IfsSpec::cantor();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(natural_cdf(&ifs, lo) <= natural_cdf(&ifs, hi) + 1e-15);
    }

    #[test]
    fn cantor_cdf_is_self_similar(x in 0.0f64..1.0) {
        // F(x / 3) = F(x) / 2
        let ifs = IfsSpec::cantor();
        prop_assert!((natural_cdf(&ifs, x / 3.0) - natural_cdf(&ifs, x) / 2.0).abs() < 1e-12);
    }
}
