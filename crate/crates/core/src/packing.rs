//! Separation of configurations and approximate best packings.
//!
//! `best_packing` warm-starts energy minimization through an increasing
//! sequence of exponents and then polishes the result by moving single
//! points to locally maximize their nearest-neighbour distance. The reported
//! separation is realized by the returned configuration, so it is a lower
//! bound for the best-packing distance. The only upper bounds come from
//! [`certify_packing_upper_bound`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{descend, initial_flat, nearest_index, restart_rng, Configuration, InvPow, OptimizerOptions};
use crate::error::{Error, Result};
use crate::geometry::{dist, dist2, CompactSet, Point};
use crate::minkowski::{exact_neighborhood_volume, unit_ball_volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingMethod {
    /// Energy schedule alone produced the best configuration.
    Schedule,
    /// Maximin polish improved on the schedule.
    Polish,
    /// Exact computation.
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingReport {
    pub config: Configuration,
    pub n: usize,
    pub delta: f64,
    pub method: PackingMethod,
    /// True when `delta` is realized by a configuration on the set.
    pub lower_bound_certified: bool,
    pub restarts_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PackingOptions {
    pub optimizer: OptimizerOptions,
    pub schedule: Vec<f64>,
    /// Polishing stops once the separation gains at most this much over a
    /// window of sweeps.
    pub polish_tol: f64,
    pub max_sweeps: Option<usize>,
}

impl Default for PackingOptions {
    fn default() -> Self {
        PackingOptions {
            optimizer: OptimizerOptions::default(),
            schedule: vec![8.0, 16.0, 32.0, 64.0],
            polish_tol: 1e-10,
            max_sweeps: None,
        }
    }
}

impl PackingOptions {
    pub fn with_seed(seed: u64) -> Self {
        PackingOptions {
            optimizer: OptimizerOptions::with_seed(seed),
            ..Default::default()
        }
    }

    pub fn restarts(mut self, r: usize) -> Self {
        self.optimizer.restarts = r;
        self
    }
}

/// Smallest distance between two distinct points of the configuration.
pub fn min_pairwise_distance(points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "separation needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].dim() != points[j].dim() {
                return Err(Error::DimensionMismatch {
                    expected: points[i].dim(),
                    got: points[j].dim(),
                });
            }
            best = best.min(points[i].distance(&points[j]));
        }
    }
    Ok(best)
}

fn min_dist_flat(x: &[f64], d: usize) -> f64 {
    crate::energy::min_dist2_flat(x, d).sqrt()
}

/// Approximates the best-packing distance `delta_N(A)` and a configuration
/// attaining it.
pub fn best_packing(set: &CompactSet, n: usize, opts: &PackingOptions) -> Result<PackingReport> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
    }
    if opts.optimizer.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    if opts.schedule.is_empty() || opts.schedule.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter("schedule must be a non-empty list of positive exponents".into()));
    }
    if let CompactSet::SelfSimilar { ifs, depth } = set {
        let available = 2.0 * (ifs.p() as f64).powi(*depth as i32);
        if n as f64 > available {
            return Err(Error::InvalidParameter(format!(
                "N = {n} exceeds the {available} endpoints available at depth {depth}"
            )));
        }
    }
    let d = set.ambient_dim();
    let first_pw = InvPow::new(opts.schedule[0]);
    let mut best: Option<(Vec<f64>, f64, PackingMethod)> = None;
    for r in 0..opts.optimizer.restarts {
        let mut rng = restart_rng(opts.optimizer.seed, r);
        let mut x = initial_flat(set, n, first_pw, &mut rng);
        for &s in &opts.schedule {
            x = descend(set, x, s, &opts.optimizer).x;
        }
        let scheduled = min_dist_flat(&x, d);
        polish(set, &mut x, opts);
        let delta = min_dist_flat(&x, d);
        let method = if delta > scheduled { PackingMethod::Polish } else { PackingMethod::Schedule };
        if best.as_ref().is_none_or(|b| delta > b.1) {
            best = Some((x, delta, method));
        }
    }
    let (mut x, delta, method) = best.expect("at least one restart");
    if d == 1 {
        x.sort_by(f64::total_cmp);
    }
    Ok(PackingReport {
        config: Configuration::from_flat(set, &x),
        n,
        delta,
        method,
        lower_bound_certified: true,
        restarts_used: opts.optimizer.restarts,
    })
}

/// Maximin polish. Each sweep first moves the point of the closest pair with
/// the lowest index (its partner if that point is stuck), then every point in
/// turn. Every move maximizes the moved point's nearest-neighbour distance
/// locally, so the separation never decreases.
pub(crate) fn polish(set: &CompactSet, x: &mut Vec<f64>, opts: &PackingOptions) {
    match set {
        CompactSet::Interval { a, b } => {
            let (a, b) = (*a, *b);
            x.sort_by(f64::total_cmp);
            polish_line(x, opts, 100, |v, i| {
                let n = v.len();
                let target = if i == 0 {
                    a
                } else if i + 1 == n {
                    b
                } else {
                    0.5 * (v[i - 1] + v[i + 1])
                };
                let cur = line_local(v, i);
                let old = v[i];
                v[i] = target;
                if line_local(v, i) > cur {
                    true
                } else {
                    v[i] = old;
                    false
                }
            });
        }
        CompactSet::Circle { radius } => polish_circle(*radius, x, opts),
        CompactSet::SelfSimilar { ifs, depth } => {
            let cand = ifs.endpoints(*depth);
            x.sort_by(f64::total_cmp);
            let mut idx: Vec<usize> = x.iter().map(|&v| nearest_index(&cand, v)).collect();
            let mut work = x.clone();
            polish_line(&mut work, opts, 20, |v, i| {
                let n = v.len();
                let lo = if i == 0 { 0 } else { idx[i - 1] + 1 };
                let hi = if i + 1 == n { cand.len() - 1 } else { idx[i + 1] - 1 };
                if lo > hi {
                    return false;
                }
                let choice = if i == 0 {
                    lo
                } else if i + 1 == n {
                    hi
                } else {
                    let mid = 0.5 * (v[i - 1] + v[i + 1]);
                    let k = cand[lo..=hi].partition_point(|&c| c < mid) + lo;
                    // the best candidate brackets the midpoint
                    let mut best = None;
                    for c in [k.saturating_sub(1), k] {
                        if c < lo || c > hi {
                            continue;
                        }
                        let score = (cand[c] - v[i - 1]).min(v[i + 1] - cand[c]);
                        if best.is_none_or(|(_, s)| score > s) {
                            best = Some((c, score));
                        }
                    }
                    match best {
                        Some((c, _)) => c,
                        None => return false,
                    }
                };
                let cur = line_local(v, i);
                let old = v[i];
                v[i] = cand[choice];
                if line_local(v, i) > cur {
                    idx[i] = choice;
                    true
                } else {
                    v[i] = old;
                    false
                }
            });
            *x = work;
        }
        CompactSet::Sphere2 { .. } | CompactSet::Cube { .. } => polish_pattern(set, x, opts),
    }
}

/// Nearest-neighbour distance of sorted point `i`.
fn line_local(v: &[f64], i: usize) -> f64 {
    let left = if i > 0 { v[i] - v[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < v.len() { v[i + 1] - v[i] } else { f64::INFINITY };
    left.min(right)
}

fn line_delta(v: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, w) in v.windows(2).enumerate() {
        if w[1] - w[0] < best.0 {
            best = (w[1] - w[0], k);
        }
    }
    best
}

fn polish_line<F>(v: &mut [f64], opts: &PackingOptions, window: usize, mut improve: F)
where
    F: FnMut(&mut [f64], usize) -> bool,
{
    let n = v.len();
    let cap = opts.max_sweeps.unwrap_or(200_000);
    let mut history = vec![line_delta(v).0];
    for sweep in 0..cap {
        let (_, k) = line_delta(v);
        if !improve(v, k) {
            improve(v, k + 1);
        }
        let mut moved = false;
        for i in 0..n {
            moved |= improve(v, i);
        }
        let delta = line_delta(v).0;
        history.push(delta);
        if !moved {
            break;
        }
        if sweep >= window && delta - history[history.len() - 1 - window] <= opts.polish_tol {
            break;
        }
    }
}

fn polish_circle(radius: f64, x: &mut [f64], opts: &PackingOptions) {
    let n = x.len() / 2;
    let mut theta: Vec<f64> = x.chunks(2).map(|p| p[1].atan2(p[0])).collect();
    theta.sort_by(f64::total_cmp);
    // unwrap so that gaps are theta[i+1] - theta[i] and the wrap gap closes the cycle
    let tau = 2.0 * PI;
    let gap = |t: &[f64], i: usize| -> f64 {
        if i + 1 < t.len() { t[i + 1] - t[i] } else { t[0] + tau - t[i] }
    };
    let local = |t: &[f64], i: usize| -> f64 {
        let prev = if i == 0 { t.len() - 1 } else { i - 1 };
        gap(t, prev).min(gap(t, i))
    };
    let min_gap = |t: &[f64]| -> (f64, usize) {
        (0..t.len()).fold((f64::INFINITY, 0), |acc, i| {
            let g = gap(t, i);
            if g < acc.0 { (g, i) } else { acc }
        })
    };
    let improve = |t: &mut [f64], i: usize| -> bool {
        let m = t.len();
        let prev = if i == 0 { t[m - 1] - tau } else { t[i - 1] };
        let next = if i + 1 == m { t[0] + tau } else { t[i + 1] };
        let cur = local(t, i);
        let old = t[i];
        t[i] = 0.5 * (prev + next);
        if local(t, i) > cur {
            true
        } else {
            t[i] = old;
            false
        }
    };
    let cap = opts.max_sweeps.unwrap_or(200_000);
    let window = 100;
    let mut history = vec![min_gap(&theta).0];
    for sweep in 0..cap {
        let (_, k) = min_gap(&theta);
        if !improve(&mut theta, k) {
            improve(&mut theta, (k + 1) % n);
        }
        let mut moved = false;
        for i in 0..n {
            moved |= improve(&mut theta, i);
        }
        let g = min_gap(&theta).0;
        history.push(g);
        if !moved {
            break;
        }
        if sweep >= window && g - history[history.len() - 1 - window] <= opts.polish_tol {
            break;
        }
    }
    let polished: Vec<f64> = theta
        .iter()
        .flat_map(|t| [radius * t.cos(), radius * t.sin()])
        .collect();
    // angular moves are exact maximizers only for gaps below pi; keep the better
    if min_dist_flat(&polished, 2) >= min_dist_flat(x, 2) {
        x.copy_from_slice(&polished);
    }
}

fn nearest_distance(x: &[f64], d: usize, i: usize) -> (f64, usize) {
    let n = x.len() / d;
    let xi = &x[i * d..(i + 1) * d];
    let mut best = (f64::INFINITY, usize::MAX);
    for j in 0..n {
        if j != i {
            let r = dist2(xi, &x[j * d..(j + 1) * d]);
            if r < best.0 {
                best = (r, j);
            }
        }
    }
    (best.0.sqrt(), best.1)
}

fn closest_pair(x: &[f64], d: usize) -> (usize, usize) {
    let n = x.len() / d;
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..n {
        for j in i + 1..n {
            let r = dist2(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
            if r < best.0 {
                best = (r, i, j);
            }
        }
    }
    (best.1, best.2)
}

fn polish_pattern(set: &CompactSet, x: &mut [f64], opts: &PackingOptions) {
    let d = set.ambient_dim();
    let n = x.len() / d;
    let cap = opts.max_sweeps.unwrap_or(400);
    let window = 4;
    let mut history = vec![min_dist_flat(x, d)];
    for sweep in 0..cap {
        let (i, j) = closest_pair(x, d);
        if !improve_point(set, x, i) {
            improve_point(set, x, j);
        }
        let mut moved = false;
        for k in 0..n {
            moved |= improve_point(set, x, k);
        }
        let delta = min_dist_flat(x, d);
        history.push(delta);
        if !moved {
            break;
        }
        if sweep >= window && delta - history[history.len() - 1 - window] <= opts.polish_tol {
            break;
        }
    }
}

/// Pattern search on point `i` of a sphere or cube configuration for a
/// larger nearest-neighbour distance. Moves stay within the original
/// nearest-neighbour distance `f0` of the start, so only points within
/// `3 f0` can become nearest neighbours.
fn improve_point(set: &CompactSet, x: &mut [f64], i: usize) -> bool {
    let d = set.ambient_dim();
    let n = x.len() / d;
    let (f0, _) = nearest_distance(x, d, i);
    if !f0.is_finite() || f0 == 0.0 {
        return false;
    }
    let y0: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
    let nbrs: Vec<usize> = (0..n)
        .filter(|&j| j != i && dist(&y0, &x[j * d..(j + 1) * d]) <= 3.0 * f0)
        .collect();
    let fmin = |y: &[f64]| -> f64 {
        nbrs.iter()
            .map(|&j| dist2(y, &x[j * d..(j + 1) * d]))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let mut y = y0.clone();
    let mut f = f0;
    let mut t = 0.25 * f0;
    let mut trial = vec![0.0; d];
    while t > 1e-12 * f0 {
        let dirs = search_directions(set, &y, f, t, &nbrs, x);
        let mut improved = false;
        for dir in &dirs {
            for k in 0..d {
                trial[k] = y[k] + t * dir[k];
            }
            set.project_in_place(&mut trial);
            if dist(&trial, &y0) > f0 {
                continue;
            }
            let ft = fmin(&trial);
            if ft > f * (1.0 + 4.0 * f64::EPSILON) {
                y.copy_from_slice(&trial);
                f = ft;
                improved = true;
                break;
            }
        }
        if !improved {
            t *= 0.5;
        }
    }
    if f > f0 {
        x[i * d..(i + 1) * d].copy_from_slice(&y);
        true
    } else {
        false
    }
}

fn search_directions(set: &CompactSet, y: &[f64], f: f64, t: f64, nbrs: &[usize], x: &[f64]) -> Vec<Vec<f64>> {
    let d = y.len();
    let active: Vec<Vec<f64>> = nbrs
        .iter()
        .filter_map(|&j| {
            let xj = &x[j * d..(j + 1) * d];
            let r = dist(y, xj);
            (r <= f + 2.0 * t).then(|| y.iter().zip(xj).map(|(a, b)| (a - b) / r).collect())
        })
        .collect();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    dirs.extend(active.iter().cloned());
    for a in 0..active.len() {
        for b in a + 1..active.len() {
            dirs.push(active[a].iter().zip(&active[b]).map(|(p, q)| p + q).collect());
        }
    }
    if active.len() > 2 {
        let mut total = vec![0.0; d];
        for u in &active {
            for k in 0..d {
                total[k] += u[k];
            }
        }
        dirs.push(total);
    }
    match set {
        CompactSet::Sphere2 { .. } => {
            let (e1, e2) = tangent_basis(y);
            for e in [e1, e2] {
                dirs.push(e.clone());
                dirs.push(e.iter().map(|c| -c).collect());
            }
        }
        _ => {
            for k in 0..d {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[k] = sign;
                    dirs.push(e);
                }
            }
        }
    }
    if let CompactSet::Sphere2 { .. } = set {
        let n2: f64 = y.iter().map(|c| c * c).sum();
        for v in &mut dirs {
            let dot: f64 = v.iter().zip(y).map(|(a, b)| a * b).sum();
            for k in 0..d {
                v[k] -= dot / n2 * y[k];
            }
        }
    }
    dirs.retain_mut(|v| {
        let nv = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if nv > 1e-12 {
            v.iter_mut().for_each(|c| *c /= nv);
            true
        } else {
            false
        }
    });
    dirs
}

fn tangent_basis(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let u = [y[0] / n, y[1] / n, y[2] / n];
    let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * u[0] + helper[1] * u[1] + helper[2] * u[2];
    let mut e1 = [helper[0] - dot * u[0], helper[1] - dot * u[1], helper[2] - dot * u[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|c| *c /= n1);
    let e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    (e1.to_vec(), e2.to_vec())
}

/// Counting bound: if the `rho`-neighbourhood satisfies
/// `L(A(rho)) < gamma * rho^{d' - alpha}` and `rho < (gamma / beta_{d'})^{1/alpha}`,
/// then `delta_N(A) <= 2 rho` for every `N >= N0 = floor(gamma / (beta_{d'} rho^alpha)) + 1`.
/// Returns `N0`.
pub fn certify_packing_upper_bound(set: &CompactSet, rho: f64, gamma: f64, alpha: f64) -> Result<usize> {
    let dp = set.ambient_dim() as f64;
    if !(rho > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("rho and gamma must be positive, got {rho}, {gamma}")));
    }
    if !(alpha > 0.0 && alpha <= dp) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, {dp}], got {alpha}")));
    }
    let volume = exact_neighborhood_volume(set, rho);
    let allowance = gamma * rho.powf(dp - alpha);
    if volume >= allowance {
        return Err(Error::Precondition(format!(
            "neighbourhood volume {volume} is not below gamma * rho^(d'-alpha) = {allowance}"
        )));
    }
    let beta = unit_ball_volume(dp);
    let rho_max = (gamma / beta).powf(1.0 / alpha);
    if rho >= rho_max {
        return Err(Error::Precondition(format!(
            "rho = {rho} is not below (gamma / beta_d')^(1/alpha) = {rho_max}"
        )));
    }
    let threshold = gamma / (beta * rho.powf(alpha));
    Ok(threshold.floor() as usize + 1)
}

/// A greedily built `rho`-separated configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyPacking {
    pub k: usize,
    pub config: Configuration,
}

/// Greedy `rho`-separated filling: anchor points (interval ends, cube
/// corners) and then `budget` random points are accepted whenever they are
/// at distance at least `rho` from everything accepted so far. Candidates
/// on 1-D sets are scanned in increasing order.
pub fn greedy_lower_bound(set: &CompactSet, rho: f64, seed: u64, budget: usize) -> Result<GreedyPacking> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let d = set.ambient_dim();
    let mut rng = restart_rng(seed, 0);
    let mut cands: Vec<Vec<f64>> = set.anchor_points();
    cands.extend((0..budget).map(|_| set.sample_one(&mut rng)));
    if d == 1 {
        cands.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }
    if cands.is_empty() {
        cands.push(set.sample_one(&mut rng));
    }
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let r2 = rho * rho;
    for c in cands {
        if accepted.iter().all(|a| dist2(a, &c) >= r2) {
            accepted.push(c);
        }
    }
    let config = Configuration {
        set: set.clone(),
        points: accepted.into_iter().map(Point).collect(),
    };
    Ok(GreedyPacking { k: config.len(), config })
}
