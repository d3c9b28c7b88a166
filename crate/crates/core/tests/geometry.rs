use bestpack::geometry::{parse_rational, SetSpec};
use bestpack::{CompactSet, Error, IfsSpec, Point};
use num_rational::Rational64;
use proptest::prelude::*;

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

/// Depth-`m` cells `[l, l + sigma^m]`, enumerated from addresses.
fn cells(ifs: &IfsSpec, m: u32) -> Vec<(f64, f64)> {
    let p = ifs.p();
    let width = ifs.sigma_f64().powi(m as i32);
    let mut out = Vec::new();
    for code in 0..p.pow(m) {
        let mut address = Vec::new();
        let mut c = code;
        for _ in 0..m {
            address.push(c % p);
            c /= p;
        }
        let l = ifs.evaluate(&address).unwrap();
        out.push((l, l + width));
    }
    out
}

fn brute_distance(ifs: &IfsSpec, m: u32, x: f64) -> f64 {
    cells(ifs, m)
        .iter()
        .map(|&(a, b)| (a - x).max(x - b).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

fn brute_nearest_endpoint(ifs: &IfsSpec, m: u32, x: f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for (a, b) in cells(ifs, m) {
        for e in [a, b] {
            let d = (e - x).abs();
            if d < best.0 - 1e-15 {
                best = (d, e);
            }
        }
    }
    best.1
}

#[test]
fn cantor_projection_examples() {
    let cantor = CompactSet::cantor();
    let p = cantor.project(&Point::scalar(0.5)).unwrap();
    assert!((p.0[0] - 1.0 / 3.0).abs() < 1e-15);
    let d = cantor.distance_to_set(&Point::scalar(0.5)).unwrap();
    assert!((d - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(cantor.distance_to_set(&Point::scalar(2.0 / 3.0)).unwrap(), 0.0);
}

#[test]
fn ifs_queries_match_cell_enumeration() {
    let sets = [
        IfsSpec::cantor(),
        IfsSpec::new(r(1, 5), vec![r(0, 1), r(2, 5), r(4, 5)]).unwrap(),
        IfsSpec::new(r(1, 4), vec![r(0, 1), r(3, 4)]).unwrap(),
    ];
    for ifs in &sets {
        for m in 0..5u32 {
            for i in 0..=200 {
                let x = -0.1 + 1.2 * i as f64 / 200.0;
                let d = ifs.cell_distance(x, m);
                assert!((d - brute_distance(ifs, m, x)).abs() < 1e-12, "{x} at depth {m}");
                let e = ifs.nearest_endpoint(x, m);
                assert!(((e - x).abs() - (brute_nearest_endpoint(ifs, m, x) - x).abs()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn endpoints_are_sorted_and_complete() {
    let ifs = IfsSpec::new(r(1, 5), vec![r(0, 1), r(2, 5), r(4, 5)]).unwrap();
    let ends = ifs.endpoints(3);
    assert_eq!(ends.len(), 2 * 27);
    assert!(ends.windows(2).all(|w| w[0] < w[1]));
    let mut brute: Vec<f64> = cells(&ifs, 3).into_iter().flat_map(|(a, b)| [a, b]).collect();
    brute.sort_by(f64::total_cmp);
    for (a, b) in ends.iter().zip(&brute) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn invalid_sets_are_rejected() {
    assert!(matches!(CompactSet::interval(1.0, 1.0), Err(Error::InvalidSet(_))));
    assert!(CompactSet::circle(0.0).is_err());
    assert!(CompactSet::sphere(-1.0).is_err());
    assert!(CompactSet::cube(0).is_err());
    // overlapping images
    assert!(IfsSpec::new(r(1, 2), vec![r(0, 1), r(1, 3)]).is_err());
    // not ending at 1
    assert!(IfsSpec::new(r(1, 3), vec![r(0, 1), r(1, 2)]).is_err());
    assert!(IfsSpec::new(r(1, 3), vec![r(0, 1)]).is_err());
}

#[test]
fn dimensions_and_measures() {
    let cantor = CompactSet::cantor();
    assert!((cantor.intrinsic_dim() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    assert_eq!(cantor.ambient_dim(), 1);
    let sphere = CompactSet::sphere(2.0).unwrap();
    assert!((sphere.hausdorff_measure().unwrap() - 16.0 * std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(CompactSet::cube(3).unwrap().diameter(), 3f64.sqrt());
    let ifs = IfsSpec::new(r(1, 5), vec![r(0, 1), r(2, 5), r(4, 5)]).unwrap();
    assert!((ifs.lambda() - 3f64.ln() / 5f64.ln()).abs() < 1e-15);
    assert_eq!(ifs.gap(), r(1, 5));
}

#[test]
fn set_specs_round_trip_through_toml() {
    let sets = [
        CompactSet::interval(-1.0, 2.5).unwrap(),
        CompactSet::circle(1.5).unwrap(),
        CompactSet::sphere(1.0).unwrap(),
        CompactSet::cube(3).unwrap(),
        CompactSet::self_similar(IfsSpec::new(r(1, 5), vec![r(0, 1), r(2, 5), r(4, 5)]).unwrap(), 9),
    ];
    for set in sets {
        let text = toml::to_string(&set).unwrap();
        let back: CompactSet = toml::from_str(&text).unwrap();
        assert_eq!(back, set, "{text}");
    }
    let spec: SetSpec = toml::from_str("kind = \"self_similar\"\nsigma = 0.2\ntranslations = [0, \"2/5\", 0.8]").unwrap();
    let set = CompactSet::try_from(spec).unwrap();
    assert_eq!(set.intrinsic_dim(), 3f64.ln() / 5f64.ln());
    assert_eq!(parse_rational("6/8").unwrap(), r(3, 4));
    assert!(parse_rational("x").is_err());
}

#[test]
fn dimension_mismatch_is_reported() {
    let sphere = CompactSet::sphere(1.0).unwrap();
    assert!(matches!(
        sphere.project(&Point::new(vec![1.0, 0.0])),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));
}

proptest! {
    #[test]
    fn samples_lie_on_the_set(seed in any::<u64>(), which in 0usize..5) {
        let set = match which {
            0 => CompactSet::interval(-2.0, 3.0).unwrap(),
            1 => CompactSet::circle(2.5).unwrap(),
            2 => CompactSet::sphere(0.7).unwrap(),
            3 => CompactSet::cube(4).unwrap(),
            _ => CompactSet::cantor(),
        };
        for p in set.sample(seed, 20).unwrap() {
            prop_assert!(set.distance_to_set(&p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_nearest(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        prop_assume!(x * x + y * y + z * z > 1e-6);
        let q = Point::new(vec![x, y, z]);
        for set in [CompactSet::sphere(1.3).unwrap(), CompactSet::cube(3).unwrap()] {
            let p = set.project(&q).unwrap();
            let pp = set.project(&p).unwrap();
            prop_assert!(p.distance(&pp) < 1e-12);
            let d = set.distance_to_set(&q).unwrap();
            prop_assert!((p.distance(&q) - d).abs() < 1e-12);
        }
        let cantor = CompactSet::cantor();
        let p = cantor.project(&Point::scalar(x)).unwrap();
        prop_assert_eq!(cantor.project(&p).unwrap(), p.clone());
        prop_assert!((p.0[0] - x).abs() >= cantor.distance_to_set(&Point::scalar(x)).unwrap() - 1e-15);
    }

    #[test]
    fn ifs_maps_contract(a in prop::collection::vec(0usize..3, 1..8), b in prop::collection::vec(0usize..3, 1..8)) {
        let ifs = IfsSpec::new(r(1, 5), vec![r(0, 1), r(2, 5), r(4, 5)]).unwrap();
        // prefixing the same symbol scales distances by sigma
        let (x, y) = (ifs.evaluate(&a).unwrap(), ifs.evaluate(&b).unwrap());
        let mut a2 = vec![1]; a2.extend(&a);
        let mut b2 = vec![1]; b2.extend(&b);
        let (x2, y2) = (ifs.evaluate(&a2).unwrap(), ifs.evaluate(&b2).unwrap());
        prop_assert!(((x2 - y2).abs() - 0.2 * (x - y).abs()).abs() < 1e-14);
    }
}
