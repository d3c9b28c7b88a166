//! Compact sets, point operations on them, and interval IFS machinery.
//!
//! Every set in the catalog lives in a fixed ambient space `R^{d'}`. The
//! self-similar sets are attractors of interval similitudes
//! `S_i(x) = t_i + sigma * x` whose images are disjoint subintervals of
//! `[0, 1]`; operations on them work with the depth-`m` truncation (the
//! endpoints of the `p^m` level-`m` cells, all of which belong to the set).

use std::f64::consts::PI;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation depth for self-similar sets.
pub const DEFAULT_IFS_DEPTH: u32 = 12;

/// Absolute tolerance for geometric identities.
pub const GEOM_TOL: f64 = 1e-12;

/// A point in ambient Euclidean coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Parameters of an interval IFS with a common rational contraction ratio.
///
/// The child intervals `[t_i, t_i + sigma]` are sorted, pairwise disjoint and
/// span `[0, 1]`: `t_0 = 0` and `t_{p-1} + sigma = 1`. Under these conditions
/// both endpoints of every cell belong to the attractor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IfsSpec {
    sigma: Rational64,
    translations: Vec<Rational64>,
}

impl IfsSpec {
    pub fn new(sigma: Rational64, translations: Vec<Rational64>) -> Result<Self> {
        let p = translations.len();
        if p < 2 {
            return Err(Error::InvalidSet(format!(
                "an IFS needs at least 2 maps, got {p}"
            )));
        }
        if sigma <= Rational64::zero() || sigma >= Rational64::one() {
            return Err(Error::InvalidSet(format!(
                "contraction ratio must lie in (0, 1), got {sigma}"
            )));
        }
        if !translations[0].is_zero() {
            return Err(Error::InvalidSet(format!(
                "first translation must be 0, got {}",
                translations[0]
            )));
        }
        if translations[p - 1] + sigma != Rational64::one() {
            return Err(Error::InvalidSet(format!(
                "last child interval must end at 1, got {}",
                translations[p - 1] + sigma
            )));
        }
        for w in translations.windows(2) {
            if w[1] - w[0] - sigma <= Rational64::zero() {
                return Err(Error::InvalidSet(format!(
                    "child intervals starting at {} and {} are not separated by a positive gap",
                    w[0], w[1]
                )));
            }
        }
        Ok(IfsSpec {
            sigma,
            translations,
        })
    }

    /// The middle-thirds Cantor set.
    pub fn cantor() -> Self {
        IfsSpec::new(
            Rational64::new(1, 3),
            vec![Rational64::zero(), Rational64::new(2, 3)],
        )
        .expect("classical Cantor parameters are valid")
    }

    pub fn p(&self) -> usize {
        self.translations.len()
    }

    pub fn sigma(&self) -> Rational64 {
        self.sigma
    }

    pub fn sigma_f64(&self) -> f64 {
        ratio_f64(self.sigma)
    }

    pub fn translations(&self) -> &[Rational64] {
        &self.translations
    }

    pub fn translation_f64(&self, i: usize) -> f64 {
        ratio_f64(self.translations[i])
    }

    /// Similarity dimension `-log p / log sigma`.
    pub fn lambda(&self) -> f64 {
        -(self.p() as f64).ln() / self.sigma_f64().ln()
    }

    /// Gaps between consecutive child intervals.
    pub fn gaps(&self) -> Vec<Rational64> {
        self.translations
            .windows(2)
            .map(|w| w[1] - w[0] - self.sigma)
            .collect()
    }

    /// Minimum distance between distinct child images.
    pub fn gap(&self) -> Rational64 {
        self.gaps().into_iter().min().expect("p >= 2")
    }

    /// Index of the child interval containing `x`, or `Err(i)` when `x` lies
    /// in the gap after child `i`.
    fn locate(&self, x: f64) -> std::result::Result<usize, usize> {
        let sigma = self.sigma_f64();
        for i in 0..self.p() {
            let t = self.translation_f64(i);
            if x <= t + sigma {
                if x >= t {
                    return Ok(i);
                }
                return Err(i - 1);
            }
        }
        Ok(self.p() - 1)
    }

    /// Nearest endpoint of a depth-`depth` cell. Ties go to the smaller point.
    pub fn nearest_endpoint(&self, x: f64, depth: u32) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if depth == 0 {
            return if x <= 1.0 - x { 0.0 } else { 1.0 };
        }
        let sigma = self.sigma_f64();
        match self.locate(x) {
            Ok(i) => {
                let t = self.translation_f64(i);
                t + sigma * self.nearest_endpoint((x - t) / sigma, depth - 1)
            }
            Err(i) => {
                let right_end = self.translation_f64(i) + sigma;
                let next_left = self.translation_f64(i + 1);
                // rounding can break exact midpoint ties; resolve them downward
                if x - right_end <= next_left - x + 4.0 * f64::EPSILON {
                    right_end
                } else {
                    next_left
                }
            }
        }
    }

    /// Distance from `x` to the union of the depth-`depth` cells.
    pub fn cell_distance(&self, x: f64, depth: u32) -> f64 {
        if x < 0.0 {
            return -x;
        }
        if x > 1.0 {
            return x - 1.0;
        }
        if depth == 0 {
            return 0.0;
        }
        let sigma = self.sigma_f64();
        match self.locate(x) {
            Ok(i) => {
                let t = self.translation_f64(i);
                sigma * self.cell_distance((x - t) / sigma, depth - 1)
            }
            Err(i) => {
                let right_end = self.translation_f64(i) + sigma;
                let next_left = self.translation_f64(i + 1);
                (x - right_end).min(next_left - x)
            }
        }
    }

    /// Left endpoint of the cell `S_{i_1} o ... o S_{i_m}([0, 1])`.
    pub fn evaluate(&self, address: &[usize]) -> Result<f64> {
        let sigma = self.sigma_f64();
        let mut x = 0.0;
        for &sym in address.iter().rev() {
            if sym >= self.p() {
                return Err(Error::SymbolOutOfRange {
                    symbol: sym,
                    p: self.p(),
                });
            }
            x = self.translation_f64(sym) + sigma * x;
        }
        Ok(x)
    }

    /// All depth-`depth` cell endpoints in increasing order.
    pub fn endpoints(&self, depth: u32) -> Vec<f64> {
        let mut lefts = vec![0.0];
        let sigma = self.sigma_f64();
        let mut scale = 1.0;
        for _ in 0..depth {
            // prepend one more symbol: x -> t_i + sigma * x keeps sorted order per child
            let mut next = Vec::with_capacity(lefts.len() * self.p());
            for i in 0..self.p() {
                let t = self.translation_f64(i);
                next.extend(lefts.iter().map(|&x| t + sigma * x));
            }
            lefts = next;
            scale *= sigma;
        }
        let mut out = Vec::with_capacity(2 * lefts.len());
        for x in lefts {
            out.push(x);
            out.push(x + scale);
        }
        out
    }
}

impl fmt::Display for IfsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ifs(p={},sigma={},t=[", self.p(), self.sigma)?;
        for (i, t) in self.translations.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "])")
    }
}

pub(crate) fn ratio_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"a/b"`, an integer, or a decimal into a rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad rational numerator in {s:?}")))?;
        let d: i64 = d
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad rational denominator in {s:?}")))?;
        if d == 0 {
            return Err(Error::InvalidParameter(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational64::new(n, d));
    }
    if let Ok(n) = s.parse::<i64>() {
        return Ok(Rational64::from_integer(n));
    }
    let x: f64 = s
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("not a rational number: {s:?}")))?;
    Rational64::approximate_float(x)
        .ok_or_else(|| Error::InvalidParameter(format!("cannot represent {x} as a rational")))
}

/// The catalog of compact sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetSpec", into = "SetSpec")]
pub enum CompactSet {
    /// `[a, b]` in `R^1`.
    Interval { a: f64, b: f64 },
    /// Circle of radius `radius` centred at the origin of `R^2`.
    Circle { radius: f64 },
    /// Two-sphere of radius `radius` centred at the origin of `R^3`.
    Sphere2 { radius: f64 },
    /// Unit cube `[0, 1]^dim` in `R^dim`.
    Cube { dim: usize },
    /// Attractor of an interval IFS, handled at truncation depth `depth`.
    SelfSimilar { ifs: IfsSpec, depth: u32 },
}

impl CompactSet {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let s = CompactSet::Interval { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn unit_interval() -> Self {
        CompactSet::Interval { a: 0.0, b: 1.0 }
    }

    pub fn circle(radius: f64) -> Result<Self> {
        let s = CompactSet::Circle { radius };
        s.validate()?;
        Ok(s)
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        let s = CompactSet::Sphere2 { radius };
        s.validate()?;
        Ok(s)
    }

    pub fn cube(dim: usize) -> Result<Self> {
        let s = CompactSet::Cube { dim };
        s.validate()?;
        Ok(s)
    }

    pub fn self_similar(ifs: IfsSpec, depth: u32) -> Self {
        CompactSet::SelfSimilar { ifs, depth }
    }

    pub fn cantor() -> Self {
        CompactSet::SelfSimilar {
            ifs: IfsSpec::cantor(),
            depth: DEFAULT_IFS_DEPTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CompactSet::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidSet(format!("interval requires a < b, got [{a}, {b}]")));
                }
            }
            CompactSet::Circle { radius } | CompactSet::Sphere2 { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSet(format!("radius must be positive, got {radius}")));
                }
            }
            CompactSet::Cube { dim } => {
                if dim == 0 {
                    return Err(Error::InvalidSet("cube dimension must be at least 1".into()));
                }
            }
            CompactSet::SelfSimilar { depth, .. } => {
                if depth > 40 {
                    return Err(Error::InvalidSet(format!("truncation depth {depth} exceeds 40")));
                }
            }
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            CompactSet::Interval { .. } | CompactSet::SelfSimilar { .. } => 1,
            CompactSet::Circle { .. } => 2,
            CompactSet::Sphere2 { .. } => 3,
            CompactSet::Cube { dim } => *dim,
        }
    }

    pub fn intrinsic_dim(&self) -> f64 {
        match self {
            CompactSet::Interval { .. } | CompactSet::Circle { .. } => 1.0,
            CompactSet::Sphere2 { .. } => 2.0,
            CompactSet::Cube { dim } => *dim as f64,
            CompactSet::SelfSimilar { ifs, .. } => ifs.lambda(),
        }
    }

    /// `H_d(A)` normalised so a unit `d`-cube has measure one; unknown for
    /// self-similar sets.
    pub fn hausdorff_measure(&self) -> Option<f64> {
        match *self {
            CompactSet::Interval { a, b } => Some(b - a),
            CompactSet::Circle { radius } => Some(2.0 * PI * radius),
            CompactSet::Sphere2 { radius } => Some(4.0 * PI * radius * radius),
            CompactSet::Cube { .. } => Some(1.0),
            CompactSet::SelfSimilar { .. } => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            CompactSet::Interval { a, b } => b - a,
            CompactSet::Circle { radius } | CompactSet::Sphere2 { radius } => 2.0 * radius,
            CompactSet::Cube { dim } => (dim as f64).sqrt(),
            CompactSet::SelfSimilar { .. } => 1.0,
        }
    }

    /// Axis-aligned box containing the `rho`-neighbourhood of the set.
    pub fn bounding_box(&self, rho: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.ambient_dim();
        let (lo, hi) = match *self {
            CompactSet::Interval { a, b } => (a, b),
            CompactSet::Circle { radius } | CompactSet::Sphere2 { radius } => (-radius, radius),
            CompactSet::Cube { .. } | CompactSet::SelfSimilar { .. } => (0.0, 1.0),
        };
        (vec![lo - rho; d], vec![hi + rho; d])
    }

    /// Short label used in tables and file headers.
    pub fn label(&self) -> String {
        match self {
            CompactSet::Interval { a, b } => format!("interval({a},{b})"),
            CompactSet::Circle { radius } => format!("circle({radius})"),
            CompactSet::Sphere2 { radius } => format!("sphere2({radius})"),
            CompactSet::Cube { dim } => format!("cube({dim})"),
            CompactSet::SelfSimilar { ifs, depth } => format!("{ifs}@{depth}"),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Nearest point of the set (of the depth-`m` truncation for
    /// self-similar sets).
    pub fn project(&self, x: &Point) -> Result<Point> {
        self.check_dim(&x.0)?;
        let mut out = x.0.clone();
        self.project_in_place(&mut out);
        Ok(Point(out))
    }

    pub(crate) fn project_in_place(&self, x: &mut [f64]) {
        match *self {
            CompactSet::Interval { a, b } => x[0] = x[0].clamp(a, b),
            CompactSet::Cube { .. } => {
                for c in x.iter_mut() {
                    *c = c.clamp(0.0, 1.0);
                }
            }
            CompactSet::Circle { radius } | CompactSet::Sphere2 { radius } => {
                let n = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n == 0.0 {
                    x.iter_mut().for_each(|c| *c = 0.0);
                    x[0] = radius;
                } else {
                    let scale = radius / n;
                    x.iter_mut().for_each(|c| *c *= scale);
                }
            }
            CompactSet::SelfSimilar { ref ifs, depth } => x[0] = ifs.nearest_endpoint(x[0], depth),
        }
    }

    /// Euclidean distance from `x` to the set (to the union of depth-`m`
    /// cells for self-similar sets).
    pub fn distance_to_set(&self, x: &Point) -> Result<f64> {
        self.check_dim(&x.0)?;
        Ok(self.distance_raw(&x.0))
    }

    pub(crate) fn distance_raw(&self, x: &[f64]) -> f64 {
        match *self {
            CompactSet::Interval { a, b } => (a - x[0]).max(x[0] - b).max(0.0),
            CompactSet::Cube { .. } => x
                .iter()
                .map(|&c| {
                    let e = (-c).max(c - 1.0).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            CompactSet::Circle { radius } | CompactSet::Sphere2 { radius } => {
                (x.iter().map(|c| c * c).sum::<f64>().sqrt() - radius).abs()
            }
            CompactSet::SelfSimilar { ref ifs, depth } => ifs.cell_distance(x[0], depth),
        }
    }

    /// Draws `count` points distributed according to the natural measure
    /// (normalised `H_d` for the smooth sets; uniform over depth-`m` IFS
    /// addresses for self-similar sets).
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok((0..count).map(|_| Point(self.sample_one(rng))).collect())
    }

    pub(crate) fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            CompactSet::Interval { a, b } => vec![a + (b - a) * rng.random::<f64>()],
            CompactSet::Cube { dim } => (0..dim).map(|_| rng.random::<f64>()).collect(),
            CompactSet::Circle { radius } => {
                let theta = 2.0 * PI * rng.random::<f64>();
                vec![radius * theta.cos(), radius * theta.sin()]
            }
            CompactSet::Sphere2 { radius } => loop {
                let g: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if n > 1e-12 {
                    break g.iter().map(|c| radius * c / n).collect();
                }
            },
            CompactSet::SelfSimilar { ref ifs, depth } => {
                let sigma = ifs.sigma_f64();
                let mut x = if rng.random::<bool>() { 1.0 } else { 0.0 };
                for _ in 0..depth {
                    let i = rng.random_range(0..ifs.p());
                    x = ifs.translation_f64(i) + sigma * x;
                }
                vec![x]
            }
        }
    }

    /// Points worth trying first when building separated sets greedily
    /// (interval endpoints, cube corners).
    pub(crate) fn anchor_points(&self) -> Vec<Vec<f64>> {
        match *self {
            CompactSet::Interval { a, b } => vec![vec![a], vec![b]],
            CompactSet::SelfSimilar { .. } => vec![vec![0.0], vec![1.0]],
            CompactSet::Cube { dim } if dim <= 12 => (0..1usize << dim)
                .map(|mask| (0..dim).map(|k| ((mask >> k) & 1) as f64).collect())
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Left endpoint of the IFS cell with the given address, as an ambient point.
pub fn ifs_evaluate(ifs: &IfsSpec, address: &[usize]) -> Result<Point> {
    Ok(Point::scalar(ifs.evaluate(address)?))
}

/// Flat, serialisable form of [`CompactSet`] used in config files and reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Circle {
        #[serde(default = "unit")]
        radius: f64,
    },
    Sphere2 {
        #[serde(default = "unit")]
        radius: f64,
    },
    Cube {
        dim: usize,
    },
    SelfSimilar {
        #[serde(default)]
        p: Option<usize>,
        sigma: RationalText,
        translations: Vec<RationalText>,
        #[serde(default = "default_depth")]
        depth: u32,
    },
}

/// Set kinds accepted in config files.
pub const SET_KINDS: &[&str] = &["interval", "circle", "sphere2", "cube", "self_similar"];

fn unit() -> f64 {
    1.0
}

fn default_depth() -> u32 {
    DEFAULT_IFS_DEPTH
}

/// A rational written as `"a/b"`; plain integers and decimals are accepted
/// on input.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalText(pub Rational64);

impl Serialize for RationalText {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Rational64::from_integer(n)),
            Raw::Float(x) => parse_rational(&x.to_string()),
            Raw::Text(s) => parse_rational(&s),
        };
        parsed.map(RationalText).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<SetSpec> for CompactSet {
    type Error = Error;

    fn try_from(spec: SetSpec) -> Result<Self> {
        let set = match spec {
            SetSpec::Interval { a, b } => CompactSet::Interval { a, b },
            SetSpec::Circle { radius } => CompactSet::Circle { radius },
            SetSpec::Sphere2 { radius } => CompactSet::Sphere2 { radius },
            SetSpec::Cube { dim } => CompactSet::Cube { dim },
            SetSpec::SelfSimilar {
                p,
                sigma,
                translations,
                depth,
            } => {
                if let Some(p) = p {
                    if p != translations.len() {
                        return Err(Error::InvalidSet(format!(
                            "p = {p} but {} translations given",
                            translations.len()
                        )));
                    }
                }
                let ifs = IfsSpec::new(sigma.0, translations.into_iter().map(|t| t.0).collect())?;
                CompactSet::SelfSimilar { ifs, depth }
            }
        };
        set.validate()?;
        Ok(set)
    }
}

impl From<CompactSet> for SetSpec {
    fn from(set: CompactSet) -> Self {
        match set {
            CompactSet::Interval { a, b } => SetSpec::Interval { a, b },
            CompactSet::Circle { radius } => SetSpec::Circle { radius },
            CompactSet::Sphere2 { radius } => SetSpec::Sphere2 { radius },
            CompactSet::Cube { dim } => SetSpec::Cube { dim },
            CompactSet::SelfSimilar { ifs, depth } => SetSpec::SelfSimilar {
                p: Some(ifs.p()),
                sigma: RationalText(ifs.sigma),
                translations: ifs.translations.into_iter().map(RationalText).collect(),
                depth,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor_at(depth: u32) -> CompactSet {
        CompactSet::SelfSimilar {
            ifs: IfsSpec::cantor(),
            depth,
        }
    }

    /// Brute-force nearest endpoint over every depth-`m` address.
    fn brute_nearest(ifs: &IfsSpec, x: f64, depth: u32) -> f64 {
        let sigma = ifs.sigma_f64().powi(depth as i32);
        let mut best = f64::NAN;
        let mut best_d = f64::INFINITY;
        let total = ifs.p().pow(depth);
        for code in 0..total {
            let mut addr = Vec::new();
            let mut c = code;
            for _ in 0..depth {
                addr.push(c % ifs.p());
                c /= ifs.p();
            }
            let left = ifs.evaluate(&addr).unwrap();
            for e in [left, left + sigma] {
                let d = (e - x).abs();
                if d < best_d - 1e-15 || (d <= best_d + 1e-15 && e < best) {
                    best_d = d;
                    best = e;
                }
            }
        }
        best
    }

    #[test]
    fn sphere_projection_is_radial() {
        let s = CompactSet::sphere(1.0).unwrap();
        let p = s.project(&Point::new(vec![0.0, 0.0, 2.0])).unwrap();
        assert_eq!(p.0, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn interval_projection_clamps() {
        let s = CompactSet::unit_interval();
        assert_eq!(s.project(&Point::scalar(1.7)).unwrap().0, vec![1.0]);
    }

    #[test]
    fn cantor_projection_matches_endpoint_enumeration() {
        let set = cantor_at(2);
        let ifs = IfsSpec::cantor();
        let got = set.project(&Point::scalar(0.5)).unwrap().0[0];
        assert_eq!(got, brute_nearest(&ifs, 0.5, 2));
        assert!((got - 1.0 / 3.0).abs() < 1e-15);
        for k in 0..=200 {
            let x = -0.1 + 1.2 * k as f64 / 200.0;
            let a = set.project(&Point::scalar(x)).unwrap().0[0];
            let b = brute_nearest(&ifs, x, 2);
            assert!((a - b).abs() < 1e-14, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn cantor_distance_is_limit_of_depth_distances() {
        // 1/2 sits in the middle of the first removed third.
        let ifs = IfsSpec::cantor();
        for m in 1..=12 {
            assert!((ifs.cell_distance(0.5, m) - 1.0 / 6.0).abs() < 1e-15);
        }
        let d = cantor_at(12).distance_to_set(&Point::scalar(0.5)).unwrap();
        assert!((d - 1.0 / 6.0).abs() < 1e-15);
        // 1/4 is in the Cantor set; depth distances vanish.
        assert_eq!(ifs.cell_distance(0.25, 12), 0.0);
    }

    #[test]
    fn distance_examples() {
        let c = CompactSet::circle(1.0).unwrap();
        assert_eq!(c.distance_to_set(&Point::new(vec![2.0, 0.0])).unwrap(), 1.0);
        let sq = CompactSet::cube(2).unwrap();
        assert_eq!(sq.distance_to_set(&Point::new(vec![0.5, 0.5])).unwrap(), 0.0);
        assert!(matches!(
            c.distance_to_set(&Point::scalar(1.0)),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn ifs_evaluate_examples() {
        let ifs = IfsSpec::cantor();
        assert!((ifs_evaluate(&ifs, &[1, 0]).unwrap().0[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((ifs_evaluate(&ifs, &[0, 1]).unwrap().0[0] - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(ifs_evaluate(&ifs, &[]).unwrap().0[0], 0.0);
        assert!(matches!(
            ifs_evaluate(&ifs, &[0, 2]),
            Err(Error::SymbolOutOfRange { symbol: 2, p: 2 })
        ));
    }

    #[test]
    fn endpoint_enumeration_counts_and_gaps() {
        let ifs = IfsSpec::cantor();
        let h = ratio_f64(ifs.gap());
        for m in 0..6u32 {
            let e = ifs.endpoints(m);
            assert_eq!(e.len(), 2 * 2usize.pow(m));
            assert!(e.windows(2).all(|w| w[0] < w[1]));
            let mut lefts: Vec<f64> = (0..2usize.pow(m))
                .map(|code| {
                    let addr: Vec<usize> = (0..m).map(|k| (code >> k) & 1).collect();
                    ifs.evaluate(&addr).unwrap()
                })
                .collect();
            lefts.sort_by(f64::total_cmp);
            lefts.dedup();
            assert_eq!(lefts.len(), 2usize.pow(m));
            // endpoints in distinct first-level cells are at least h apart
            if m >= 1 {
                let left_child: Vec<f64> = e.iter().copied().filter(|&x| x <= 1.0 / 3.0).collect();
                let right_child: Vec<f64> = e.iter().copied().filter(|&x| x >= 2.0 / 3.0).collect();
                for a in &left_child {
                    for b in &right_child {
                        assert!(b - a >= h - 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_and_on_set() {
        let s = CompactSet::unit_interval();
        let a = s.sample(42, 3).unwrap();
        let b = s.sample(42, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..=1.0).contains(&p.0[0])));

        let cantor = CompactSet::cantor();
        let sigma_m = (1.0f64 / 3.0).powi(12);
        for p in cantor.sample(7, 1000).unwrap() {
            assert!(cantor.distance_to_set(&p).unwrap() <= sigma_m);
        }
    }

    #[test]
    fn sphere_sample_mean_near_origin() {
        let s = CompactSet::sphere(1.0).unwrap();
        let pts = s.sample(11, 10_000).unwrap();
        for k in 0..3 {
            let mean = pts.iter().map(|p| p.0[k]).sum::<f64>() / pts.len() as f64;
            assert!(mean.abs() < 0.05, "coordinate {k} mean {mean}");
        }
    }

    #[test]
    fn sphere_sample_hemisphere_counts() {
        let s = CompactSet::sphere(2.0).unwrap();
        let n = 20_000;
        let pts = s.sample(3, n).unwrap();
        let axes = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8], [0.0, -0.8, 0.6]];
        let se = (0.25 / n as f64).sqrt();
        for axis in axes {
            let inside = pts
                .iter()
                .filter(|p| p.0.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() >= 0.0)
                .count();
            let frac = inside as f64 / n as f64;
            assert!((frac - 0.5).abs() <= 3.0 * se, "axis {axis:?}: {frac}");
        }
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(CompactSet::interval(1.0, 0.0).is_err());
        assert!(CompactSet::circle(-1.0).is_err());
        assert!(CompactSet::cube(0).is_err());
        // overlapping children
        assert!(IfsSpec::new(Rational64::new(1, 2), vec![Rational64::zero(), Rational64::new(1, 2)]).is_err());
        // children not spanning [0, 1]
        assert!(IfsSpec::new(Rational64::new(1, 4), vec![Rational64::zero(), Rational64::new(1, 2)]).is_err());
    }

    #[test]
    fn set_spec_round_trip() {
        let toml_text = r#"
            kind = "self_similar"
            sigma = "1/3"
            translations = ["0", "2/3"]
        "#;
        let set: CompactSet = toml::from_str(toml_text).unwrap();
        assert_eq!(set, CompactSet::cantor());
        let json = serde_json::to_string(&set).unwrap();
        let back: CompactSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_set() -> impl Strategy<Value = CompactSet> {
            prop_oneof![
                Just(CompactSet::unit_interval()),
                Just(CompactSet::Interval { a: -2.0, b: 3.5 }),
                Just(CompactSet::Circle { radius: 1.5 }),
                Just(CompactSet::Sphere2 { radius: 1.0 }),
                Just(CompactSet::Cube { dim: 2 }),
                Just(CompactSet::Cube { dim: 3 }),
                Just(CompactSet::cantor()),
            ]
        }

        proptest! {
            #[test]
            fn projection_is_idempotent_and_lands_on_set(
                set in any_set(),
                raw in proptest::collection::vec(-3.0f64..3.0, 3),
            ) {
                let x = Point(raw[..set.ambient_dim()].to_vec());
                let p = set.project(&x).unwrap();
                let pp = set.project(&p).unwrap();
                prop_assert!(dist(&p.0, &pp.0) <= GEOM_TOL);
                let tol = match &set {
                    CompactSet::SelfSimilar { ifs, depth } => ifs.sigma_f64().powi(*depth as i32),
                    _ => GEOM_TOL,
                };
                prop_assert!(set.distance_to_set(&p).unwrap() <= tol);
            }

            #[test]
            fn ifs_contraction(prefix in proptest::collection::vec(0usize..2, 0..6),
                               a in proptest::collection::vec(0usize..2, 0..6),
                               b in proptest::collection::vec(0usize..2, 0..6)) {
                let ifs = IfsSpec::cantor();
                let mut x = prefix.clone();
                x.extend(&a);
                let mut y = prefix.clone();
                y.extend(&b);
                let gap = (ifs.evaluate(&x).unwrap() - ifs.evaluate(&y).unwrap()).abs();
                prop_assert!(gap <= ifs.sigma_f64().powi(prefix.len() as i32) + 1e-15);
            }
        }
    }
}
