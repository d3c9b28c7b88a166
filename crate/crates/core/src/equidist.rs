//! Region counts of configurations against Hausdorff-measure fractions.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::energy::Configuration;
use crate::error::{Error, Result};
use crate::geometry::{CompactSet, IfsSpec, GEOM_TOL};

/// Rows with fewer points than this are reported but excluded from
/// asymptotic assertions.
pub const SMALL_N: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// `[a, b]` on an interval or self-similar set.
    Subinterval { a: f64, b: f64 },
    /// Counter-clockwise arc from `theta1` to `theta2` on a circle.
    Arc { theta1: f64, theta2: f64 },
    /// `{x : <x, axis> >= height * R}` on a sphere, `axis` a unit vector.
    SphericalCap { axis: [f64; 3], height: f64 },
    /// Axis-aligned box intersected with a cube.
    SubCube { lo: Vec<f64>, hi: Vec<f64> },
}

/// A closed subset `B` of a set `A` with `H_d(B) / H_d(A)` known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub kind: RegionKind,
    pub measure_fraction: f64,
}

fn mismatch(kind: &RegionKind, set: &CompactSet) -> Error {
    Error::InvalidParameter(format!("region {kind:?} does not belong to {}", set.label()))
}

/// Normalized natural measure of `[0, x]` for a self-similar set.
pub fn natural_cdf(ifs: &IfsSpec, x: f64) -> f64 {
    // exact rational iteration; the float map x -> (x - t) / sigma amplifies
    // rounding by 1/sigma per level
    let Some(mut x) = snap_rational(x) else {
        return if x > 0.0 { 1.0 } else { 0.0 };
    };
    let big = |r: Rational64| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let sigma = big(ifs.sigma());
    let ts: Vec<BigRational> = ifs.translations().iter().map(|&t| big(t)).collect();
    let p = ifs.p() as f64;
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut acc = 0.0;
    let mut weight = 1.0;
    while weight > f64::EPSILON * 1e-3 {
        if x < zero {
            return acc;
        }
        if x >= one {
            return acc + weight;
        }
        let mut next = None;
        for (i, t) in ts.iter().enumerate() {
            if x < *t {
                return acc + weight * i as f64 / p;
            }
            if x <= t + &sigma {
                next = Some(i);
                break;
            }
        }
        let Some(i) = next else {
            return acc + weight;
        };
        acc += weight * i as f64 / p;
        weight /= p;
        x = (x - &ts[i]) / &sigma;
    }
    acc
}

/// Simplest rational within a few ulps of `x`, so that `1.0 / 3.0` reads as 1/3.
fn snap_rational(x: f64) -> Option<BigRational> {
    let exact = BigRational::from_float(x)?;
    if x <= 0.0 {
        return Some(exact);
    }
    let tol = BigRational::from_float(4.0 * f64::EPSILON * x)?;
    Some(simplest_between(&exact - &tol, &exact + tol))
}

/// Simplest rational in `[lo, hi]`, `0 < lo <= hi`, by continued fractions.
fn simplest_between(lo: BigRational, hi: BigRational) -> BigRational {
    let fl = lo.floor();
    if fl == lo {
        return fl;
    }
    let up = &fl + BigRational::one();
    if up <= hi {
        return up;
    }
    let inner = simplest_between((&hi - &fl).recip(), (&lo - &fl).recip());
    fl + inner.recip()
}

impl Region {
    /// Builds a region of `set`, computing its measure fraction.
    pub fn new(set: &CompactSet, id: impl Into<String>, kind: RegionKind) -> Result<Self> {
        let fraction = match (&kind, set) {
            (RegionKind::Subinterval { a, b }, CompactSet::Interval { a: lo, b: hi }) if a <= b => {
                ((b.min(*hi) - a.max(*lo)) / (hi - lo)).max(0.0)
            }
            (RegionKind::Subinterval { a, b }, CompactSet::SelfSimilar { ifs, .. }) if a <= b => {
                natural_cdf(ifs, *b) - natural_cdf(ifs, *a)
            }
            (RegionKind::Arc { theta1, theta2 }, CompactSet::Circle { .. }) => {
                let span = theta2 - theta1;
                if !(0.0..=2.0 * PI).contains(&span) {
                    return Err(Error::InvalidParameter(format!("arc span {span} outside [0, 2 pi]")));
                }
                span / (2.0 * PI)
            }
            (RegionKind::SphericalCap { axis, height }, CompactSet::Sphere2 { .. }) => {
                let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                if (n - 1.0).abs() > 1e-9 || !(-1.0..=1.0).contains(height) {
                    return Err(Error::InvalidParameter("cap needs a unit axis and height in [-1, 1]".into()));
                }
                // Archimedes: cap area is proportional to its height
                (1.0 - height) / 2.0
            }
            (RegionKind::SubCube { lo, hi }, CompactSet::Cube { dim }) if lo.len() == *dim && hi.len() == *dim => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| (b.min(1.0) - a.max(0.0)).max(0.0))
                .product(),
            _ => return Err(mismatch(&kind, set)),
        };
        Ok(Region {
            id: id.into(),
            kind,
            measure_fraction: fraction,
        })
    }

    /// Closed-region membership with tolerance `GEOM_TOL`.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            RegionKind::Subinterval { a, b } => x[0] >= a - GEOM_TOL && x[0] <= b + GEOM_TOL,
            RegionKind::Arc { theta1, theta2 } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let phi = x[1].atan2(x[0]);
                let offset = (phi - theta1).rem_euclid(2.0 * PI);
                let span = theta2 - theta1;
                // arc length tolerance, also catching offsets just below 2 pi
                offset * r <= span * r + GEOM_TOL || (2.0 * PI - offset) * r <= GEOM_TOL
            }
            RegionKind::SphericalCap { axis, height } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let dot = x[0] * axis[0] + x[1] * axis[1] + x[2] * axis[2];
                dot >= height * r - GEOM_TOL
            }
            RegionKind::SubCube { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - GEOM_TOL && *v <= b + GEOM_TOL),
        }
    }
}

/// Fraction of the configuration's points inside the closed region.
pub fn region_fraction(config: &Configuration, region: &Region) -> Result<f64> {
    if config.is_empty() {
        return Err(Error::InvalidParameter("configuration is empty".into()));
    }
    let count = config.points.iter().filter(|p| region.contains(&p.0)).count();
    Ok(count as f64 / config.len() as f64)
}

/// Standard region families: interval quartiles, circle quarter arcs,
/// hemispheres and a cap on the sphere, cube halves and a corner box.
pub fn standard_regions(set: &CompactSet) -> Result<Vec<Region>> {
    let mut out = Vec::new();
    match set {
        CompactSet::Interval { a, b } => {
            let w = (b - a) / 4.0;
            for q in 0..4 {
                let lo = a + w * q as f64;
                out.push(Region::new(set, format!("quartile{}", q + 1), RegionKind::Subinterval { a: lo, b: lo + w })?);
            }
        }
        CompactSet::SelfSimilar { .. } => {
            for (id, a, b) in [("left_half", 0.0, 0.5), ("right_half", 0.5, 1.0), ("first_quarter", 0.0, 0.25)] {
                out.push(Region::new(set, id, RegionKind::Subinterval { a, b })?);
            }
        }
        CompactSet::Circle { .. } => {
            for q in 0..4 {
                let t = 0.3 + q as f64 * PI / 2.0;
                out.push(Region::new(set, format!("arc{}", q + 1), RegionKind::Arc { theta1: t, theta2: t + PI / 2.0 })?);
            }
        }
        CompactSet::Sphere2 { .. } => {
            out.push(Region::new(set, "upper_hemisphere", RegionKind::SphericalCap { axis: [0.0, 0.0, 1.0], height: 0.0 })?);
            let s = 1.0 / 3f64.sqrt();
            out.push(Region::new(set, "tilted_hemisphere", RegionKind::SphericalCap { axis: [s, s, s], height: 0.0 })?);
            out.push(Region::new(set, "polar_cap", RegionKind::SphericalCap { axis: [0.0, 0.0, 1.0], height: 0.5 })?);
        }
        CompactSet::Cube { dim } => {
            let d = *dim;
            let mut hi = vec![1.0; d];
            hi[0] = 0.5;
            out.push(Region::new(set, "lower_half", RegionKind::SubCube { lo: vec![0.0; d], hi })?);
            out.push(Region::new(set, "corner_box", RegionKind::SubCube { lo: vec![0.0; d], hi: vec![0.5; d] })?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCount {
    pub region: String,
    pub fraction: f64,
    pub measure_fraction: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub n: usize,
    pub max_deviation: f64,
    /// True for rows with `N < SMALL_N`.
    pub small_n: bool,
    pub regions: Vec<RegionCount>,
}

/// For each configuration, the largest `|fraction - measure_fraction|` over
/// the regions.
pub fn equidist_deviation(configs: &[Configuration], regions: &[Region]) -> Result<Vec<DeviationRow>> {
    if regions.is_empty() {
        return Err(Error::InvalidParameter("no regions given".into()));
    }
    configs
        .iter()
        .map(|c| {
            let counts = regions
                .iter()
                .map(|r| {
                    let fraction = region_fraction(c, r)?;
                    Ok(RegionCount {
                        region: r.id.clone(),
                        fraction,
                        measure_fraction: r.measure_fraction,
                        deviation: (fraction - r.measure_fraction).abs(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DeviationRow {
                n: c.len(),
                max_deviation: counts.iter().map(|r| r.deviation).fold(0.0, f64::max),
                small_n: c.len() < SMALL_N,
                regions: counts,
            })
        })
        .collect()
}

/// CSV with columns `N,region,fraction,measure_fraction,deviation`.
pub fn deviation_csv(rows: &[DeviationRow]) -> String {
    let mut out = String::from("N,region,fraction,measure_fraction,deviation\n");
    for r in rows {
        for c in &r.regions {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                r.n, c.region, c.fraction, c.measure_fraction, c.deviation
            ));
        }
    }
    out
}
