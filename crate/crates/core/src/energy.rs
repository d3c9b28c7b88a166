//! Riesz s-energy, its gradient, and multistart minimization on a set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist2, CompactSet, Point};

/// Points below this separation are treated as a collision during descent.
pub const MIN_SEPARATION: f64 = 1e-14;

/// An ordered list of points on a set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub set: CompactSet,
    pub points: Vec<Point>,
}

impl Configuration {
    /// Builds a configuration, checking dimensions and that every point lies
    /// on the set (within the depth truncation for self-similar sets).
    pub fn new(set: CompactSet, points: Vec<Point>) -> Result<Self> {
        let tol = on_set_tolerance(&set);
        for (index, p) in points.iter().enumerate() {
            let distance = set.distance_to_set(p)?;
            if distance > tol {
                return Err(Error::OffSet { index, distance });
            }
        }
        Ok(Configuration { set, points })
    }

    pub(crate) fn from_flat(set: &CompactSet, x: &[f64]) -> Self {
        let d = set.ambient_dim();
        Configuration {
            set: set.clone(),
            points: x.chunks(d).map(|c| Point(c.to_vec())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.0.iter().copied()).collect()
    }

    pub fn energy(&self, s: f64) -> Result<f64> {
        riesz_energy(&self.points, s)
    }
}

pub(crate) fn on_set_tolerance(set: &CompactSet) -> f64 {
    match set {
        CompactSet::SelfSimilar { ifs, depth } => ifs.sigma_f64().powi(*depth as i32) + 1e-15,
        _ => 1e-9,
    }
}

/// `r^{-s}` from `r^2`, using integer powers when `s` allows it.
#[derive(Clone, Copy, Debug)]
pub(crate) struct InvPow {
    s: f64,
    half_int: Option<i32>,
    int: Option<i32>,
}

impl InvPow {
    pub(crate) fn new(s: f64) -> Self {
        let as_int = |v: f64| (v.fract() == 0.0 && v.abs() < 1e6).then_some(v as i32);
        InvPow {
            s,
            half_int: as_int(s / 2.0),
            int: as_int(s),
        }
    }

    #[inline]
    pub(crate) fn of_r2(&self, r2: f64) -> f64 {
        if let Some(h) = self.half_int {
            r2.powi(-h)
        } else if let Some(k) = self.int {
            r2.sqrt().powi(-k)
        } else {
            r2.powf(-0.5 * self.s)
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    Ok(())
}

fn flatten(points: &[Point]) -> Result<(Vec<f64>, usize)> {
    let d = points.first().map_or(0, Point::dim);
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    Ok((points.iter().flat_map(|p| p.0.iter().copied()).collect(), d))
}

/// Riesz s-energy: the sum over ordered pairs `i != j` of `|y_i - y_j|^{-s}`.
pub fn riesz_energy(points: &[Point], s: f64) -> Result<f64> {
    check_s(s)?;
    let (x, d) = flatten(points)?;
    energy_flat(&x, d, InvPow::new(s)).map_err(|(i, j)| Error::CoincidentPoints { i, j })
}

/// `dE_s/dy_i = -2s sum_{j != i} (y_i - y_j) |y_i - y_j|^{-s-2}` for every `i`.
pub fn riesz_gradient(points: &[Point], s: f64) -> Result<Vec<Vec<f64>>> {
    check_s(s)?;
    let (x, d) = flatten(points)?;
    let mut g = vec![0.0; x.len()];
    energy_grad_flat(&x, d, InvPow::new(s), &mut g)
        .map_err(|(i, j)| Error::CoincidentPoints { i, j })?;
    Ok(g.chunks(d.max(1)).map(<[f64]>::to_vec).collect())
}

pub(crate) fn energy_flat(x: &[f64], d: usize, pw: InvPow) -> std::result::Result<f64, (usize, usize)> {
    let n = x.len() / d;
    let mut total = 0.0;
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        let mut row = 0.0;
        for j in i + 1..n {
            let r2 = dist2(xi, &x[j * d..(j + 1) * d]);
            if r2 == 0.0 {
                return Err((i, j));
            }
            row += pw.of_r2(r2);
        }
        total += row;
    }
    Ok(2.0 * total)
}

pub(crate) fn energy_grad_flat(
    x: &[f64],
    d: usize,
    pw: InvPow,
    g: &mut [f64],
) -> std::result::Result<f64, (usize, usize)> {
    let n = x.len() / d;
    g.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    let coef = -2.0 * pw.s;
    for i in 0..n {
        for j in i + 1..n {
            let r2 = dist2(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
            if r2 == 0.0 {
                return Err((i, j));
            }
            let e = pw.of_r2(r2);
            total += e;
            let w = coef * e / r2;
            for k in 0..d {
                let diff = x[i * d + k] - x[j * d + k];
                g[i * d + k] += w * diff;
                g[j * d + k] -= w * diff;
            }
        }
    }
    Ok(2.0 * total)
}

pub(crate) fn min_dist2_flat(x: &[f64], d: usize) -> f64 {
    let n = x.len() / d;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(dist2(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
        }
    }
    best
}

/// Trial step rule for projected gradient descent. Both variants halve the
/// step until the energy decreases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Barzilai-Borwein trial step.
    #[default]
    BarzilaiBorwein,
    /// Previous accepted step, doubled after each success.
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub restarts: usize,
    /// Per-restart iteration cap; `None` means `200 * N`.
    pub max_iterations: Option<usize>,
    pub seed: u64,
    pub step_rule: StepRule,
    /// Bound on `|tangent gradient| * diam / (s * E)`.
    pub gradient_tol: f64,
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 16,
            max_iterations: None,
            seed: 0,
            step_rule: StepRule::default(),
            gradient_tol: 1e-9,
            stall_tol: 1e-13,
            stall_window: 50,
        }
    }
}

impl OptimizerOptions {
    pub fn with_seed(seed: u64) -> Self {
        OptimizerOptions {
            seed,
            ..Default::default()
        }
    }

    pub fn restarts(mut self, r: usize) -> Self {
        self.restarts = r;
        self
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(200 * n)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyReport {
    pub config: Configuration,
    pub s: f64,
    pub n: usize,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
}

pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Random starting configuration with finite energy; 1-D points sorted.
pub(crate) fn initial_flat(set: &CompactSet, n: usize, pw: InvPow, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = set.ambient_dim();
    loop {
        let mut x: Vec<f64> = (0..n).flat_map(|_| set.sample_one(rng)).collect();
        if d == 1 {
            x.sort_by(f64::total_cmp);
        }
        if let Ok(e) = energy_flat(&x, d, pw) {
            if e.is_finite() && min_dist2_flat(&x, d) >= MIN_SEPARATION * MIN_SEPARATION {
                return x;
            }
        }
    }
}

pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimal s-energy over N-point configurations on `set` by multistart
/// projected gradient descent (discrete local exchange on self-similar sets).
pub fn minimize_energy(set: &CompactSet, n: usize, s: f64, opts: &OptimizerOptions) -> Result<EnergyReport> {
    check_s(s)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    check_discrete_capacity(set, n)?;
    let pw = InvPow::new(s);
    let mut best: Option<Descent> = None;
    for r in 0..opts.restarts {
        let mut rng = restart_rng(opts.seed, r);
        let x0 = initial_flat(set, n, pw, &mut rng);
        let run = descend(set, x0, s, opts);
        if best.as_ref().is_none_or(|b| run.energy < b.energy) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(report(set, best, s, n, opts.restarts))
}

/// Runs a single descent from a given configuration.
pub fn minimize_energy_from(config: &Configuration, s: f64, opts: &OptimizerOptions) -> Result<EnergyReport> {
    check_s(s)?;
    let n = config.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
    }
    let x0 = config.flat();
    let d = config.set.ambient_dim();
    energy_flat(&x0, d, InvPow::new(s)).map_err(|(i, j)| Error::CoincidentPoints { i, j })?;
    let run = descend(&config.set, x0, s, opts);
    Ok(report(&config.set, run, s, n, 1))
}

fn report(set: &CompactSet, mut run: Descent, s: f64, n: usize, restarts: usize) -> EnergyReport {
    if set.ambient_dim() == 1 {
        run.x.sort_by(f64::total_cmp);
    }
    EnergyReport {
        config: Configuration::from_flat(set, &run.x),
        s,
        n,
        energy: run.energy,
        iterations: run.iterations,
        converged: run.converged,
        restarts_used: restarts,
    }
}

fn check_discrete_capacity(set: &CompactSet, n: usize) -> Result<()> {
    if let CompactSet::SelfSimilar { ifs, depth } = set {
        let available = 2.0 * (ifs.p() as f64).powi(*depth as i32);
        if n as f64 > available {
            return Err(Error::InvalidParameter(format!(
                "N = {n} exceeds the {available} endpoints available at depth {depth}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn descend(set: &CompactSet, x0: Vec<f64>, s: f64, opts: &OptimizerOptions) -> Descent {
    match set {
        CompactSet::SelfSimilar { .. } => exchange_descent(set, x0, s, opts),
        _ => projected_descent(set, x0, s, opts),
    }
}

/// Removes the components of `g` that point off the set at `x`.
pub(crate) fn tangent_in_place(set: &CompactSet, x: &[f64], g: &mut [f64]) {
    let d = set.ambient_dim();
    match *set {
        CompactSet::Circle { .. } | CompactSet::Sphere2 { .. } => {
            for (xi, gi) in x.chunks(d).zip(g.chunks_mut(d)) {
                let n2: f64 = xi.iter().map(|c| c * c).sum();
                let dot: f64 = xi.iter().zip(gi.iter()).map(|(a, b)| a * b).sum();
                for k in 0..d {
                    gi[k] -= dot / n2 * xi[k];
                }
            }
        }
        CompactSet::Interval { a, b } => clamp_active(x, g, a, b),
        CompactSet::Cube { .. } => clamp_active(x, g, 0.0, 1.0),
        CompactSet::SelfSimilar { .. } => {}
    }
}

// a descent step moves along -g, so a positive component at the lower bound
// (negative at the upper bound) would leave the set
fn clamp_active(x: &[f64], g: &mut [f64], lo: f64, hi: f64) {
    for (xi, gi) in x.iter().zip(g.iter_mut()) {
        if (*xi <= lo && *gi > 0.0) || (*xi >= hi && *gi < 0.0) {
            *gi = 0.0;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn projected_descent(set: &CompactSet, mut x: Vec<f64>, s: f64, opts: &OptimizerOptions) -> Descent {
    let d = set.ambient_dim();
    let n = x.len() / d;
    let pw = InvPow::new(s);
    let diam = set.diameter();
    for p in x.chunks_mut(d) {
        set.project_in_place(p);
    }
    let mut g = vec![0.0; x.len()];
    let mut energy = match energy_grad_flat(&x, d, pw, &mut g) {
        Ok(e) => e,
        Err(_) => return Descent { x, energy: f64::INFINITY, iterations: 0, converged: false },
    };
    tangent_in_place(set, &x, &mut g);

    let gmax = g.chunks(d).map(norm).fold(0.0, f64::max);
    let mut step = if gmax > 0.0 { 0.1 * diam / (n as f64 * gmax) } else { 1.0 };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trial = x.clone();
    let mut g_trial = vec![0.0; x.len()];
    let mut stalled = 0;
    let cap = opts.iteration_cap(n);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        if norm(&g) * diam / (s * energy) <= opts.gradient_tol {
            converged = true;
            break;
        }
        let mut t = match (opts.step_rule, &prev) {
            (StepRule::BarzilaiBorwein, Some((dx, dg))) => {
                let sy: f64 = dx.iter().zip(dg).map(|(a, b)| a * b).sum();
                let ss: f64 = dx.iter().map(|a| a * a).sum();
                if sy > 0.0 && ss > 0.0 { ss / sy } else { 2.0 * step }
            }
            _ => step,
        };
        let mut accepted = None;
        for _ in 0..80 {
            for i in 0..x.len() {
                trial[i] = x[i] - t * g[i];
            }
            for p in trial.chunks_mut(d) {
                set.project_in_place(p);
            }
            if min_dist2_flat_ok(&trial, d) {
                if let Ok(e) = energy_grad_flat(&trial, d, pw, &mut g_trial) {
                    if e.is_finite() && e < energy {
                        accepted = Some(e);
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some(e_new) = accepted else {
            // no decrease at any step size: numerically stationary
            converged = true;
            break;
        };
        tangent_in_place(set, &trial, &mut g_trial);
        let dx: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        prev = Some((dx, dg));
        let rel = (energy - e_new) / energy;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        energy = e_new;
        step = 2.0 * t;
        if rel < opts.stall_tol {
            stalled += 1;
            if stalled >= opts.stall_window {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Descent { x, energy, iterations, converged }
}

fn min_dist2_flat_ok(x: &[f64], d: usize) -> bool {
    min_dist2_flat(x, d) >= MIN_SEPARATION * MIN_SEPARATION
}

/// Local exchange on the sorted depth-`m` endpoints: each point in turn moves
/// to the candidate between its neighbours that minimizes its energy
/// contribution. The contribution is convex between the neighbours, so a
/// binary search over the sorted candidates finds the best one.
fn exchange_descent(set: &CompactSet, mut x: Vec<f64>, s: f64, opts: &OptimizerOptions) -> Descent {
    let CompactSet::SelfSimilar { ifs, depth } = set else {
        unreachable!("exchange descent runs on self-similar sets only");
    };
    let pw = InvPow::new(s);
    let cand = ifs.endpoints(*depth);
    // snap to candidates, keep distinct
    let mut idx: Vec<usize> = x.iter().map(|&v| nearest_index(&cand, v)).collect();
    idx.sort_unstable();
    idx.dedup();
    let mut next = 0;
    while idx.len() < x.len() {
        if !idx.contains(&next) {
            idx.push(next);
        }
        next += 1;
    }
    idx.sort_unstable();
    x = idx.iter().map(|&k| cand[k]).collect();
    let n = x.len();

    let local = |x: &[f64], i: usize, c: f64| -> f64 {
        let mut acc = 0.0;
        for (j, &y) in x.iter().enumerate() {
            if j != i {
                let r = c - y;
                acc += pw.of_r2(r * r);
            }
        }
        acc
    };

    let cap = opts.iteration_cap(n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        iterations += 1;
        let mut moved = false;
        for i in 0..n {
            let lo = if i == 0 { 0 } else { idx[i - 1] + 1 };
            let hi = if i + 1 == n { cand.len() - 1 } else { idx[i + 1] - 1 };
            if lo >= hi {
                continue;
            }
            // first index in [lo, hi) where f(k+1) >= f(k)
            let (mut a, mut b) = (lo, hi);
            while a < b {
                let m = (a + b) / 2;
                if local(&x, i, cand[m + 1]) >= local(&x, i, cand[m]) {
                    b = m;
                } else {
                    a = m + 1;
                }
            }
            if a != idx[i] && local(&x, i, cand[a]) < local(&x, i, cand[idx[i]]) {
                idx[i] = a;
                x[i] = cand[a];
                moved = true;
            }
        }
        if !moved {
            converged = true;
            break;
        }
    }
    let energy = energy_flat(&x, 1, pw).unwrap_or(f64::INFINITY);
    Descent { x, energy, iterations, converged }
}

pub(crate) fn nearest_index(sorted: &[f64], v: f64) -> usize {
    let k = sorted.partition_point(|&c| c < v);
    if k == 0 {
        0
    } else if k == sorted.len() || v - sorted[k - 1] <= sorted[k] - v {
        k - 1
    } else {
        k
    }
}
