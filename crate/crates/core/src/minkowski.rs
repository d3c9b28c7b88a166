//! Neighbourhood volumes, Minkowski contents and the packing/energy bounds
//! they imply.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::asymptotics::eta_bound;
use crate::cantor::ExactSolver;
use crate::energy::restart_rng;
use crate::error::{Error, Result};
use crate::geometry::{ratio_f64, CompactSet, IfsSpec};
use crate::packing::{best_packing, PackingOptions};

/// Volume of the unit ball in `R^alpha`, `pi^{alpha/2} / Gamma(1 + alpha/2)`,
/// for any real `alpha >= 0`.
pub fn unit_ball_volume(alpha: f64) -> f64 {
    PI.powf(alpha / 2.0) / libm::tgamma(1.0 + alpha / 2.0)
}

/// Volume of the radius-2 ball in `R^{d'}`.
pub fn double_ball_volume(ambient_dim: usize) -> f64 {
    unit_ball_volume(ambient_dim as f64) * 2f64.powi(ambient_dim as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form Lebesgue measure of the `rho`-neighbourhood `A(rho)`.
///
/// For self-similar sets this is exact for the attractor itself: every gap
/// of length `g` loses `min(g, 2 rho)` of its length to the neighbourhood.
pub fn exact_neighborhood_volume(set: &CompactSet, rho: f64) -> f64 {
    match set {
        CompactSet::Interval { a, b } => b - a + 2.0 * rho,
        CompactSet::Circle { radius } => {
            let r = *radius;
            if rho < r { 4.0 * PI * r * rho } else { PI * (r + rho).powi(2) }
        }
        CompactSet::Sphere2 { radius } => {
            let r = *radius;
            let outer = (r + rho).powi(3);
            let inner = if rho < r { (r - rho).powi(3) } else { 0.0 };
            4.0 * PI / 3.0 * (outer - inner)
        }
        CompactSet::Cube { dim } => (0..=*dim)
            .map(|j| binomial(*dim, j) * unit_ball_volume(j as f64) * rho.powi(j as i32))
            .sum(),
        CompactSet::SelfSimilar { ifs, .. } => {
            let sigma = ifs.sigma_f64();
            let gaps: Vec<f64> = ifs.gaps().into_iter().map(ratio_f64).collect();
            let mut uncovered = 0.0;
            let mut copies = 1.0;
            let mut scale = 1.0;
            // gaps at level n have length sigma^n g and come in p^n copies
            while gaps.iter().any(|&g| scale * g > 2.0 * rho) {
                for &g in &gaps {
                    uncovered += copies * (scale * g - 2.0 * rho).max(0.0);
                }
                copies *= ifs.p() as f64;
                scale *= sigma;
            }
            1.0 + 2.0 * rho - uncovered
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// `L_{d'}(A(rho))`, from the closed form.
pub fn neighborhood_volume(set: &CompactSet, rho: f64) -> Result<VolumeEstimate> {
    check_rho(rho)?;
    Ok(VolumeEstimate {
        volume: exact_neighborhood_volume(set, rho),
        stderr: 0.0,
        exact: true,
    })
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

const MC_BLOCK: usize = 1 << 16;

/// Monte-Carlo estimate of `L_{d'}(A(rho))`: bounding-box volume times the
/// fraction of uniform box points within `rho` of the set. Samples are drawn
/// in fixed-size blocks, block `b` using stream `b` of the seed.
pub fn neighborhood_volume_mc(set: &CompactSet, rho: f64, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    use rand::Rng;
    check_rho(rho)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let (lo, hi) = set.bounding_box(rho);
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let d = lo.len();
    let mut hits = 0usize;
    let mut x = vec![0.0; d];
    for block in 0..samples.div_ceil(MC_BLOCK) {
        let mut rng = restart_rng(seed, block);
        let count = MC_BLOCK.min(samples - block * MC_BLOCK);
        for _ in 0..count {
            for k in 0..d {
                x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
            }
            if set.distance_raw(&x) <= rho {
                hits += 1;
            }
        }
    }
    let frac = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        volume: box_volume * frac,
        stderr: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        exact: false,
    })
}

/// How neighbourhood volumes are scaled into contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `v(rho) / (beta_{d'-alpha} rho^{d'-alpha})`; tagged `paper` in configs.
    #[default]
    #[serde(rename = "paper", alias = "ball")]
    Ball,
    /// `v(rho) / rho^{d'-alpha}`.
    Raw,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub alpha: f64,
    pub normalization: Normalization,
    pub rho_values: Vec<f64>,
    pub volumes: Vec<f64>,
    pub volume_stderr: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Minimum of the normalized values over the finer half of the grid.
    pub lower_content: f64,
    /// Maximum of the normalized values over the finer half of the grid.
    pub upper_content: f64,
}

impl ContentEstimate {
    /// Lower and upper contents in the raw normalization.
    pub fn raw_contents(&self, ambient_dim: usize) -> (f64, f64) {
        match self.normalization {
            Normalization::Raw => (self.lower_content, self.upper_content),
            Normalization::Ball => {
                let b = unit_ball_volume(ambient_dim as f64 - self.alpha);
                (self.lower_content * b, self.upper_content * b)
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,volume,volume_stderr,normalized_value\n");
        for i in 0..self.rho_values.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.rho_values[i], self.volumes[i], self.volume_stderr[i], self.normalized[i]
            ));
        }
        out
    }
}

/// `rho0 * 2^{-j}` for `j = 0..=levels`.
pub fn default_rho_grid(rho0: f64, levels: u32) -> Vec<f64> {
    (0..=levels).map(|j| rho0 * 0.5f64.powi(j as i32)).collect()
}

/// Normalized neighbourhood volumes along a decreasing `rho` grid, with
/// liminf/limsup proxies taken over the finer half of the grid.
pub fn content_estimate(
    set: &CompactSet,
    alpha: f64,
    rho_grid: &[f64],
    normalization: Normalization,
) -> Result<ContentEstimate> {
    let dp = set.ambient_dim() as f64;
    if !(alpha > 0.0 && alpha <= dp) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, {dp}], got {alpha}")));
    }
    if rho_grid.is_empty() {
        return Err(Error::InvalidParameter("rho grid is empty".into()));
    }
    if rho_grid.windows(2).any(|w| w[1] >= w[0]) || rho_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("rho grid must be positive and strictly decreasing".into()));
    }
    let scale = match normalization {
        Normalization::Ball => unit_ball_volume(dp - alpha),
        Normalization::Raw => 1.0,
    };
    let volumes: Vec<f64> = rho_grid.iter().map(|&r| exact_neighborhood_volume(set, r)).collect();
    let normalized: Vec<f64> = rho_grid
        .iter()
        .zip(&volumes)
        .map(|(&r, &v)| v / (scale * r.powf(dp - alpha)))
        .collect();
    let tail = &normalized[normalized.len() / 2..];
    let mut lower_content = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let mut upper_content = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let CompactSet::SelfSimilar { ifs, .. } = set {
        let (lo, hi) = self_similar_extrema(set, ifs, alpha, *rho_grid.last().unwrap(), rho_grid[rho_grid.len() / 2]);
        lower_content = lower_content.min(lo / scale);
        upper_content = upper_content.max(hi / scale);
    }
    Ok(ContentEstimate {
        alpha,
        normalization,
        rho_values: rho_grid.to_vec(),
        volume_stderr: vec![0.0; volumes.len()],
        volumes,
        normalized,
        lower_content,
        upper_content,
    })
}

/// Extrema of `v(rho) / rho^{1-alpha}` over `[lo, hi]` for a self-similar
/// set. Between breakpoints `sigma^n g / 2` the volume is `a + b rho`, so
/// maxima sit at breakpoints and interior minima at `(1-alpha) a / (alpha b)`.
fn self_similar_extrema(set: &CompactSet, ifs: &IfsSpec, alpha: f64, lo: f64, hi: f64) -> (f64, f64) {
    let f = |r: f64| exact_neighborhood_volume(set, r) / r.powf(1.0 - alpha);
    let sigma = ifs.sigma_f64();
    let gaps: Vec<f64> = ifs.gaps().into_iter().map(ratio_f64).collect();
    let mut knots = vec![lo, hi];
    let mut scale = 1.0;
    while gaps.iter().any(|&g| scale * g / 2.0 >= lo) {
        knots.extend(gaps.iter().map(|&g| scale * g / 2.0).filter(|&r| r > lo && r < hi));
        scale *= sigma;
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for w in knots.windows(2) {
        let (r1, r2) = (w[0], w[1]);
        let (v1, v2) = (exact_neighborhood_volume(set, r1), exact_neighborhood_volume(set, r2));
        let b = (v2 - v1) / (r2 - r1);
        let a = v1 - b * r1;
        for r in [r1, r2] {
            let v = f(r);
            min = min.min(v);
            max = max.max(v);
        }
        if alpha < 1.0 && b > 0.0 {
            let r = (1.0 - alpha) * a / (alpha * b);
            if r > r1 && r < r2 {
                min = min.min(f(r));
            }
        }
    }
    (min, max)
}

/// One inequality of the sandwich check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// `measured >= bound` when true, `measured <= bound` otherwise.
    pub is_lower_bound: bool,
    pub holds: bool,
    /// Relative distance from the bound, positive when the inequality holds.
    pub slack: f64,
}

impl InequalityCheck {
    fn new(name: &str, measured: f64, bound: f64, is_lower_bound: bool) -> Self {
        let slack = if is_lower_bound {
            (measured - bound) / bound.abs()
        } else {
            (bound - measured) / bound.abs()
        };
        InequalityCheck {
            name: name.to_string(),
            measured,
            bound,
            is_lower_bound,
            holds: slack >= -1e-12,
            slack,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichReport {
    pub set: String,
    pub alpha: f64,
    pub s: f64,
    /// `"checked"` or `"insufficient data"`.
    pub status: String,
    pub raw_lower_content: f64,
    pub raw_upper_content: f64,
    /// (liminf, limsup) proxies of `delta_N N^{1/alpha}`.
    pub packing_limits: Option<(f64, f64)>,
    /// (liminf, limsup) proxies of `E_s(A, N) / N^{1 + s/alpha}`.
    pub energy_limits: Option<(f64, f64)>,
    pub checks: Vec<InequalityCheck>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.status == "checked" && self.checks.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.holds).count()
    }
}

/// Liminf/limsup proxies for a normalized sequence `(N, a_N)`.
///
/// When the finer half of the sweep is monotone the sequence is treated as
/// `a + c N^{-1/alpha}` and the least-squares intercept over that half (at
/// least two rows) is used for both proxies. Otherwise the
/// tail minimum and maximum are used.
pub fn limit_proxies(seq: &[(usize, f64)], alpha: f64) -> Option<(f64, f64)> {
    match seq.len() {
        0 => None,
        1 => Some((seq[0].1, seq[0].1)),
        len => {
            let tail = &seq[(len / 2).min(len - 2)..];
            let inc = tail.windows(2).all(|w| w[1].1 >= w[0].1);
            let dec = tail.windows(2).all(|w| w[1].1 <= w[0].1);
            if inc || dec {
                let hs: Vec<f64> = tail.iter().map(|&(n, _)| (n as f64).powf(-1.0 / alpha)).collect();
                let ys: Vec<f64> = tail.iter().map(|&(_, a)| a).collect();
                let m = hs.len() as f64;
                let hbar = hs.iter().sum::<f64>() / m;
                let ybar = ys.iter().sum::<f64>() / m;
                let sxx: f64 = hs.iter().map(|h| (h - hbar).powi(2)).sum();
                let sxy: f64 = hs.iter().zip(&ys).map(|(h, y)| (h - hbar) * (y - ybar)).sum();
                let intercept = if sxx > 0.0 { ybar - sxy / sxx * hbar } else { ybar };
                Some((intercept, intercept))
            } else {
                let lo = tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let hi = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
        }
    }
}

/// Checks the packing and energy bounds implied by the raw Minkowski
/// contents `M_lo <= M_hi` at dimension `alpha`, with `beta = beta_{d'}`,
/// `mu = beta_{d'} 2^{d'}` and `eps = 1/2`:
///
/// * `(M_lo / mu)^{1/alpha} <= liminf delta_N N^{1/alpha} <= 2 (M_lo / beta)^{1/alpha}`
/// * `(M_hi / mu)^{1/alpha} <= limsup delta_N N^{1/alpha} <= 2 (M_hi / beta)^{1/alpha}`
/// * `liminf E_s / N^{1+s/alpha} >= eps (1 - eps)^{s/alpha} (2 (M_hi / beta)^{1/alpha})^{-s}`
/// * `limsup E_s / N^{1+s/alpha} <= eta_s (mu / M_lo)^{s/alpha}`
///
/// `packing_seq` holds `(N, delta_N)` and `energy_seq` holds `(N, E_s(A, N))`.
pub fn check_sandwich(
    set: &CompactSet,
    alpha: f64,
    s: f64,
    packing_seq: &[(usize, f64)],
    energy_seq: &[(usize, f64)],
    content: &ContentEstimate,
) -> SandwichReport {
    let dp = set.ambient_dim();
    let (m_lo, m_hi) = content.raw_contents(dp);
    let mut report = SandwichReport {
        set: set.label(),
        alpha,
        s,
        status: "insufficient data".into(),
        raw_lower_content: m_lo,
        raw_upper_content: m_hi,
        packing_limits: None,
        energy_limits: None,
        checks: Vec::new(),
    };
    if packing_seq.is_empty() && energy_seq.is_empty() {
        return report;
    }
    let beta = unit_ball_volume(dp as f64);
    let mu = double_ball_volume(dp);
    let inv = 1.0 / alpha;
    let packing: Vec<(usize, f64)> = packing_seq.iter().map(|&(n, d)| (n, d * (n as f64).powf(inv))).collect();
    if let Some((lo, hi)) = limit_proxies(&packing, alpha) {
        report.packing_limits = Some((lo, hi));
        report.checks.push(InequalityCheck::new("packing liminf lower", lo, (m_lo / mu).powf(inv), true));
        report.checks.push(InequalityCheck::new("packing liminf upper", lo, 2.0 * (m_lo / beta).powf(inv), false));
        report.checks.push(InequalityCheck::new("packing limsup lower", hi, (m_hi / mu).powf(inv), true));
        report.checks.push(InequalityCheck::new("packing limsup upper", hi, 2.0 * (m_hi / beta).powf(inv), false));
    }
    let energy: Vec<(usize, f64)> = energy_seq
        .iter()
        .map(|&(n, e)| (n, e / (n as f64).powf(1.0 + s / alpha)))
        .collect();
    if let Some((lo, hi)) = limit_proxies(&energy, alpha) {
        report.energy_limits = Some((lo, hi));
        let eps = 0.5f64;
        let lower = eps * (1.0 - eps).powf(s / alpha) * (2.0 * (m_hi / beta).powf(inv)).powf(-s);
        report.checks.push(InequalityCheck::new("energy liminf lower", lo, lower, true));
        if s > dp as f64 {
            let upper = eta_bound(s, dp).unwrap_or(f64::INFINITY) * (mu / m_lo).powf(s / alpha);
            report.checks.push(InequalityCheck::new("energy limsup upper", hi, upper, false));
        }
    }
    report.status = "checked".into();
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DimensionOptions {
    /// Largest N used for sets without an exact solver.
    pub n_max: usize,
    /// Largest N used with the exact solver.
    pub exact_n_max: usize,
    pub packing: PackingOptions,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            n_max: 96,
            exact_n_max: 5 * 2048,
            packing: PackingOptions::default().restarts(4),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub lower: f64,
    pub upper: f64,
    /// `(k, [(N, delta_N)], alpha_k)` per subsequence `N = k b^j`.
    pub subsequences: Vec<(usize, Vec<(usize, f64)>, f64)>,
}

/// Dimension estimates from best-packing decay. Along each subsequence
/// `N = k b^j` (`k` in 3, 4, 5; `b = p` for self-similar sets, 2 otherwise)
/// the slope of `log delta_N` against `log N` between the two largest `N`
/// gives `-1/alpha_k`; the result is the smallest and largest `alpha_k`.
pub fn minkowski_dimension_estimate(set: &CompactSet, opts: &DimensionOptions) -> Result<DimensionEstimate> {
    let mut subsequences = Vec::new();
    let mut solver = match set {
        CompactSet::SelfSimilar { ifs, depth } => Some(ExactSolver::new(ifs, *depth)),
        _ => None,
    };
    let (base, n_max) = match set {
        // the solver resolves N up to the number of depth-m cells
        CompactSet::SelfSimilar { ifs, depth } => (ifs.p(), opts.exact_n_max.min(ifs.p().checked_pow(*depth).unwrap_or(usize::MAX))),
        _ => (2, opts.n_max),
    };
    for k in [3usize, 4, 5] {
        let mut ns = Vec::new();
        let mut n = k;
        while n <= n_max {
            ns.push(n);
            n *= base;
        }
        if ns.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "N limit {n_max} leaves fewer than two sizes along {k} * {base}^j"
            )));
        }
        let mut rows = Vec::new();
        for &n in &ns[ns.len() - 2..] {
            let delta = match solver.as_mut() {
                Some(s) => s.delta_f64(n)?,
                None => best_packing(set, n, &opts.packing)?.delta,
            };
            rows.push((n, delta));
        }
        let (n1, d1) = rows[0];
        let (n2, d2) = rows[1];
        let slope = (d2.ln() - d1.ln()) / ((n2 as f64).ln() - (n1 as f64).ln());
        subsequences.push((k, rows, -1.0 / slope));
    }
    let lower = subsequences.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    let upper = subsequences.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(DimensionEstimate { lower, upper, subsequences })
}
