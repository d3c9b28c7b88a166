//! Exact best packing on self-similar subsets of `[0, 1]`.
//!
//! Let `G(d)` be the largest number of points of `K` with pairwise distances
//! at least `d`. For `d <= h` (the smallest gap between child intervals)
//! points in different children never conflict, so `G(d) = p G(d / sigma)`.
//! Hence
//!
//! ```text
//! delta_N = max( min(h, sigma * delta_{ceil(N/p)}),  big_N )
//! ```
//!
//! where `big_N` is the best separation exceeding `h`, which is only
//! possible when `(N - 1) h < 1`. `big_N` is found by an exact search over
//! the depth-`m` cell endpoints and must not change when the depth grows by
//! two. All arithmetic is exact.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::geometry::IfsSpec;

/// Upper limit on the number of cell endpoints enumerated by the exact search.
const MAX_ENDPOINTS: usize = 1 << 23;

fn big(r: num_rational::Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An exact best packing of `n` points of the attractor.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPacking {
    pub ifs: IfsSpec,
    pub n: usize,
    pub delta: BigRational,
    /// Sorted cell endpoints realizing `delta`.
    pub witness: Vec<BigRational>,
}

/// Cell endpoints at one depth, as integers over a common denominator.
struct Grid {
    denom: i128,
    nums: Vec<i128>,
}

#[derive(Clone)]
struct Entry {
    delta: BigRational,
    // set when the optimum separates points by more than h
    wide: Option<Vec<BigRational>>,
}

/// Memoized exact solver for one IFS and search depth.
pub struct ExactSolver {
    ifs: IfsSpec,
    depth: u32,
    sigma: BigRational,
    translations: Vec<BigRational>,
    h: BigRational,
    memo: HashMap<usize, Entry>,
    grids: HashMap<u32, Grid>,
}

impl ExactSolver {
    pub fn new(ifs: &IfsSpec, depth: u32) -> Self {
        ExactSolver {
            ifs: ifs.clone(),
            depth,
            sigma: big(ifs.sigma()),
            translations: ifs.translations().iter().map(|&t| big(t)).collect(),
            h: big(ifs.gap()),
            memo: HashMap::new(),
            grids: HashMap::new(),
        }
    }

    pub fn gap(&self) -> &BigRational {
        &self.h
    }

    pub fn sigma(&self) -> &BigRational {
        &self.sigma
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
        }
        let capacity = 2.0 * (self.ifs.p() as f64).powi(self.depth as i32);
        if n as f64 > capacity {
            return Err(Error::Precondition(format!(
                "N = {n} exceeds the {capacity} cell endpoints at depth {}",
                self.depth
            )));
        }
        Ok(())
    }

    /// `delta_N(K)` as an exact rational.
    pub fn delta(&mut self, n: usize) -> Result<BigRational> {
        self.check_n(n)?;
        self.delta_inner(n).map(|v| v.expect("n >= 2 gives a finite separation"))
    }

    pub fn delta_f64(&mut self, n: usize) -> Result<f64> {
        self.delta(n).map(|d| rational_to_f64(&d))
    }

    // None stands for the infinite separation of a single point
    fn delta_inner(&mut self, n: usize) -> Result<Option<BigRational>> {
        if n == 1 {
            return Ok(None);
        }
        if let Some(e) = self.memo.get(&n) {
            return Ok(Some(e.delta.clone()));
        }
        let p = self.ifs.p();
        let child = n.div_ceil(p);
        let recursive = match self.delta_inner(child)? {
            None => self.h.clone(),
            Some(dc) => {
                let scaled = &self.sigma * dc;
                if scaled < self.h { scaled } else { self.h.clone() }
            }
        };
        let fits_wide = BigRational::from_integer(BigInt::from(n - 1)) * &self.h < BigRational::one();
        let wide = if fits_wide { self.wide_checked(n)? } else { None };
        let entry = match wide {
            Some((d, w)) if d > recursive => Entry { delta: d, wide: Some(w) },
            _ => Entry { delta: recursive, wide: None },
        };
        let delta = entry.delta.clone();
        self.memo.insert(n, entry);
        Ok(Some(delta))
    }

    fn wide_checked(&mut self, n: usize) -> Result<Option<(BigRational, Vec<BigRational>)>> {
        let shallow = self.wide_at(n, self.depth)?;
        let deep = self.wide_at(n, self.depth + 2)?;
        let same = match (&shallow, &deep) {
            (None, None) => true,
            (Some(a), Some(b)) => a.0 == b.0,
            _ => false,
        };
        if !same {
            let show = |v: &Option<(BigRational, Vec<BigRational>)>| match v {
                Some((d, _)) => d.to_string(),
                None => "none".to_string(),
            };
            return Err(Error::InsufficientDepth {
                n,
                depth: self.depth,
                deeper: self.depth + 2,
                shallow: show(&shallow),
                deep: show(&deep),
            });
        }
        Ok(shallow)
    }

    /// Best separation above `h` among `n` depth-`depth` endpoints.
    fn wide_at(&mut self, n: usize, depth: u32) -> Result<Option<(BigRational, Vec<BigRational>)>> {
        let h = self.h.clone();
        let grid = self.grid(depth)?;
        let denom = BigInt::from(grid.denom);
        // smallest integer numerator strictly above h * denom
        let floor_h = (&h * BigRational::from_integer(denom.clone())).floor().to_integer();
        let lo = (floor_h + BigInt::one()).to_i128().expect("bounded by the common denominator");
        if lo > grid.denom || greedy(&grid.nums, lo, n).len() < n {
            return Ok(None);
        }
        let (mut good, mut bad) = (lo, grid.denom + 1);
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if greedy(&grid.nums, mid, n).len() >= n {
                good = mid;
            } else {
                bad = mid;
            }
        }
        let chosen = greedy(&grid.nums, good, n);
        let witness = chosen
            .iter()
            .map(|&v| BigRational::new(BigInt::from(v), denom.clone()))
            .collect();
        Ok(Some((BigRational::new(BigInt::from(good), denom), witness)))
    }

    fn grid(&mut self, depth: u32) -> Result<&Grid> {
        if !self.grids.contains_key(&depth) {
            let g = build_grid(&self.ifs, depth)?;
            self.grids.insert(depth, g);
        }
        Ok(&self.grids[&depth])
    }

    /// Exact best packing with a witness configuration.
    pub fn packing(&mut self, n: usize) -> Result<ExactPacking> {
        let delta = self.delta(n)?;
        let mut witness = self.witness(n)?;
        witness.sort();
        let gap = witness
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .min()
            .expect("n >= 2");
        if witness.len() != n || gap != delta {
            return Err(Error::IdentityViolated {
                m: 0,
                detail: format!(
                    "witness for N = {n} has {} points and separation {gap}, expected {delta}",
                    witness.len()
                ),
            });
        }
        Ok(ExactPacking {
            ifs: self.ifs.clone(),
            n,
            delta,
            witness,
        })
    }

    fn witness(&mut self, n: usize) -> Result<Vec<BigRational>> {
        if n == 1 {
            return Ok(vec![BigRational::zero()]);
        }
        self.delta_inner(n)?;
        if let Some(w) = self.memo[&n].wide.clone() {
            return Ok(w);
        }
        let p = self.ifs.p();
        let per_child = n.div_ceil(p);
        let mut remaining = n;
        let mut out = Vec::with_capacity(n);
        for i in 0..p {
            let count = per_child.min(remaining);
            remaining -= count;
            if count == 0 {
                continue;
            }
            for w in self.witness(count)? {
                out.push(&self.translations[i] + &self.sigma * w);
            }
        }
        Ok(out)
    }
}

/// Points chosen greedily from the left with consecutive gaps at least `gap`;
/// stops after `n` points.
fn greedy(nums: &[i128], gap: i128, n: usize) -> Vec<i128> {
    let mut out = vec![nums[0]];
    while out.len() < n {
        let target = out[out.len() - 1] + gap;
        let k = nums.partition_point(|&x| x < target);
        if k == nums.len() {
            break;
        }
        out.push(nums[k]);
    }
    out
}

/// Depth-`depth` endpoints as integers over `V b^depth`, where `V` is the
/// common denominator of the translations and `sigma = a / b`.
fn build_grid(ifs: &IfsSpec, depth: u32) -> Result<Grid> {
    let count = 2.0 * (ifs.p() as f64).powi(depth as i32);
    if count > MAX_ENDPOINTS as f64 {
        return Err(Error::Precondition(format!(
            "exact search at depth {depth} needs {count} endpoints (limit {MAX_ENDPOINTS})"
        )));
    }
    let overflow = || Error::Precondition(format!("exact search at depth {depth} overflows 128-bit arithmetic"));
    let a = *ifs.sigma().numer() as i128;
    let b = *ifs.sigma().denom() as i128;
    let v = ifs
        .translations()
        .iter()
        .fold(1i128, |acc, t| num_integer::Integer::lcm(&acc, &(*t.denom() as i128)));
    let w: Vec<i128> = ifs
        .translations()
        .iter()
        .map(|t| *t.numer() as i128 * (v / *t.denom() as i128))
        .collect();
    // lefts over V b^m: L_m = w_i b^m + a L_{m-1}
    let mut lefts = vec![0i128];
    let mut bm = 1i128;
    let mut am = 1i128;
    for _ in 0..depth {
        bm = bm.checked_mul(b).ok_or_else(overflow)?;
        am = am.checked_mul(a).ok_or_else(overflow)?;
        let mut next = Vec::with_capacity(lefts.len() * w.len());
        for &wi in &w {
            let shift = wi.checked_mul(bm).ok_or_else(overflow)?;
            for &l in &lefts {
                next.push(a.checked_mul(l).and_then(|x| x.checked_add(shift)).ok_or_else(overflow)?);
            }
        }
        lefts = next;
    }
    let denom = v.checked_mul(bm).ok_or_else(overflow)?;
    // the cell length sigma^m in these units
    let width = v.checked_mul(am).ok_or_else(overflow)?;
    let mut nums = Vec::with_capacity(2 * lefts.len());
    for l in lefts {
        nums.push(l);
        nums.push(l + width);
    }
    Ok(Grid { denom, nums })
}

/// Exact `delta_N(K)` with a witness, searching endpoints at `depth` and
/// confirming at `depth + 2`.
pub fn exact_delta(ifs: &IfsSpec, n: usize, depth: u32) -> Result<ExactPacking> {
    ExactSolver::new(ifs, depth).packing(n)
}

/// One row of a normalized subsequence.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationRow {
    pub m: u32,
    pub n: usize,
    pub delta: BigRational,
    pub normalized: f64,
}

#[derive(Clone, Debug)]
pub struct OscillationReport {
    pub ifs: IfsSpec,
    pub k: usize,
    pub m_range: Vec<u32>,
    pub delta_k: BigRational,
    /// Rows at `N = k p^m`.
    pub along_kpm: Vec<OscillationRow>,
    /// Rows at `N = c_m = (k - 1) p^m + 1`.
    pub along_cm: Vec<OscillationRow>,
    /// `delta_k k^{1/lambda}`, the value every `k p^m` row takes.
    pub limit_kpm: f64,
    /// `delta_k (k - 1)^{1/lambda}`, approached by the `c_m` rows.
    pub limit_cm: f64,
    /// `limit_kpm / limit_cm`.
    pub ratio: f64,
}

impl OscillationReport {
    /// CSV with columns `m,N,delta_num,delta_den,normalized_value,subsequence_tag`.
    /// Each subsequence is followed by its limit row (`m = inf`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,N,delta_num,delta_den,normalized_value,subsequence_tag\n");
        for (rows, tag, limit) in [
            (&self.along_kpm, "kpm", self.limit_kpm),
            (&self.along_cm, "cm", self.limit_cm),
        ] {
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{:.16e},{}\n",
                    r.m,
                    r.n,
                    r.delta.numer(),
                    r.delta.denom(),
                    r.normalized,
                    tag
                ));
            }
            out.push_str(&format!("inf,,,,{limit:.16e},{tag}_limit\n"));
        }
        out
    }
}

fn check_pow(base: usize, exp: u32) -> Result<usize> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::InvalidParameter(format!("{base}^{exp} overflows")))
}

/// Exact identities along `N = k p^m` and `N = (k - 1) p^m + 1`: both
/// separations equal `sigma^m delta_k`, so `delta_N N^{1/lambda}` has
/// different limits along the two subsequences.
pub fn subsequence_oscillation(ifs: &IfsSpec, k: usize, m_max: u32, depth: u32) -> Result<OscillationReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let mut solver = ExactSolver::new(ifs, depth);
    let h = solver.gap().clone();
    let delta_k = solver.delta(k)?;
    if delta_k >= h {
        let mut smallest = k + 1;
        while solver.delta(smallest)? >= h {
            smallest += 1;
        }
        return Err(Error::HypothesisFailure {
            k,
            delta_k: delta_k.to_string(),
            gap: h.to_string(),
            smallest_valid: smallest,
        });
    }
    let p = ifs.p();
    let inv_lambda = 1.0 / ifs.lambda();
    let sigma = solver.sigma().clone();
    let normalized = |d: &BigRational, n: usize| rational_to_f64(d) * (n as f64).powf(inv_lambda);
    let mut along_kpm = Vec::new();
    let mut along_cm = Vec::new();
    let mut scale = BigRational::one();
    for m in 1..=m_max {
        scale = &scale * &sigma;
        let expected = &scale * &delta_k;
        let pm = check_pow(p, m)?;
        let n_kpm = k.checked_mul(pm).ok_or_else(|| Error::InvalidParameter("k p^m overflows".into()))?;
        let n_cm = (k - 1) * pm + 1;
        for (n, rows) in [(n_kpm, &mut along_kpm), (n_cm, &mut along_cm)] {
            let d = solver.delta(n)?;
            if d != expected {
                return Err(Error::IdentityViolated {
                    m,
                    detail: format!("delta_{n} = {d}, expected sigma^{m} delta_{k} = {expected}"),
                });
            }
            rows.push(OscillationRow {
                m,
                n,
                normalized: normalized(&d, n),
                delta: d,
            });
        }
    }
    let dk = rational_to_f64(&delta_k);
    let limit_kpm = dk * (k as f64).powf(inv_lambda);
    let limit_cm = dk * ((k - 1) as f64).powf(inv_lambda);
    Ok(OscillationReport {
        ifs: ifs.clone(),
        k,
        m_range: (1..=m_max).collect(),
        delta_k,
        along_kpm,
        along_cm,
        limit_kpm,
        limit_cm,
        ratio: limit_kpm / limit_cm,
    })
}

/// `|a - b|` for exact rationals.
pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}
