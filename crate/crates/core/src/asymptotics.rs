//! Normalized energy and packing sequences, their theoretical limits, and
//! the large-`s` root limits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cantor::{rational_to_f64, ExactSolver};
use crate::energy::{minimize_energy, minimize_energy_from, Configuration, OptimizerOptions};
use crate::error::{Error, Result};
use crate::geometry::{CompactSet, Point};
use crate::minkowski::unit_ball_volume;
use crate::packing::{best_packing, PackingOptions};

/// Largest sphere-packing density in `R^d`, known for `d <= 3`.
pub fn packing_density(d: usize) -> Option<f64> {
    match d {
        1 => Some(1.0),
        2 => Some(PI / 12f64.sqrt()),
        3 => Some(PI / 18f64.sqrt()),
        _ => None,
    }
}

/// `C_{inf,d} = 2 (Delta_d / beta_d)^{1/d}`, the limit of `delta_N N^{1/d}`
/// on the unit cube.
pub fn c_inf(d: usize) -> Option<f64> {
    packing_density(d).map(|delta| 2.0 * (delta / unit_ball_volume(d as f64)).powf(1.0 / d as f64))
}

// B_{2k} / (2k)! for k = 1..=6
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// Riemann zeta function for real `s > 1` by Euler-Maclaurin summation.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("zeta needs s > 1, got {s}")));
    }
    let n = 16.0f64;
    let mut sum: f64 = (1..16).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += c * rising * power;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= n * n;
    }
    Ok(sum)
}

/// Upper bound `sum_{k>=1} 4 d' (2k+3)^{d'-1} k^{-s}` on the energy per point
/// (in units of `delta^{-s}`) of any configuration with separation `delta`
/// in `R^{d'}`. The tail beyond the explicit terms is bounded by an integral,
/// so the value returned is itself an upper bound.
pub fn eta_bound(s: f64, ambient_dim: usize) -> Result<f64> {
    let dp = ambient_dim as f64;
    if !(s > dp) {
        return Err(Error::InvalidParameter(format!("the bound needs s > d' = {dp}, got {s}")));
    }
    let terms = 200_000usize;
    let c = 4.0 * dp;
    let mut sum = 0.0;
    for k in (1..=terms).rev() {
        let kf = k as f64;
        sum += c * (2.0 * kf + 3.0).powf(dp - 1.0) * kf.powf(-s);
    }
    let kk = terms as f64;
    let tail = c * (2.0 + 3.0 / (kk + 1.0)).powf(dp - 1.0) * kk.powf(dp - s) / (s - dp);
    Ok(sum + tail)
}

/// `eta_s N / delta^s`, an upper bound on the energy of any `N`-point
/// configuration with separation `delta`.
pub fn energy_upper_from_packing(s: f64, ambient_dim: usize, n: usize, delta: f64) -> Result<f64> {
    Ok(eta_bound(s, ambient_dim)? * n as f64 * delta.powf(-s))
}

/// `(N/2) delta_{floor(N/2)}^{-s}`, a lower bound on the minimal energy.
pub fn energy_lower_from_packing(s: f64, n: usize, delta_half: f64) -> f64 {
    0.5 * n as f64 * delta_half.powf(-s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    Energy { s: f64 },
    Packing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub raw: f64,
    pub normalized: f64,
    pub theory: Option<f64>,
    pub rel_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticsTable {
    pub set: CompactSet,
    pub mode: SweepMode,
    pub d_used: f64,
    pub rows: Vec<SweepRow>,
    /// Configurations behind each row, in row order.
    #[serde(skip)]
    pub configs: Vec<Configuration>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl AsymptoticsTable {
    pub fn s(&self) -> Option<f64> {
        match self.mode {
            SweepMode::Energy { s } => Some(s),
            SweepMode::Packing => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,mode,s,d,N,raw,normalized,theory,rel_gap\n");
        let mode = match self.mode {
            SweepMode::Energy { .. } => "energy",
            SweepMode::Packing => "packing",
        };
        let s = fmt_opt(self.s());
        for r in &self.rows {
            out.push_str(&format!(
                "\"{}\",{},{},{:.16e},{},{:.16e},{:.16e},{},{}\n",
                self.set.label(),
                mode,
                s,
                self.d_used,
                r.n,
                r.raw,
                r.normalized,
                fmt_opt(r.theory),
                fmt_opt(r.rel_gap)
            ));
        }
        out
    }

    /// `x,y,theory` triples for plotting normalized values against N.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("x,y,theory\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.16e},{}\n", r.n, r.normalized, fmt_opt(r.theory)));
        }
        out
    }

    /// Two-point extrapolation `(N2 a2 - N1 a1) / (N2 - N1)` from the last
    /// two rows, which removes an `O(1/N)` correction.
    pub fn richardson(&self) -> Option<f64> {
        let k = self.rows.len();
        if k < 2 {
            return None;
        }
        let (a, b) = (&self.rows[k - 2], &self.rows[k - 1]);
        let (n1, n2) = (a.n as f64, b.n as f64);
        Some((n2 * b.normalized - n1 * a.normalized) / (n2 - n1))
    }

    pub fn normalized(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.n, r.normalized)).collect()
    }

    pub fn raw(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.n, r.raw)).collect()
    }
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("N list is empty".into()));
    }
    if n_list[0] < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("N list must be strictly increasing and start at 2 or more".into()));
    }
    Ok(())
}

fn integer_dim(d: f64) -> Option<usize> {
    (d.fract() == 0.0 && d >= 1.0).then_some(d as usize)
}

fn row(n: usize, raw: f64, normalized: f64, theory: Option<f64>) -> SweepRow {
    SweepRow {
        n,
        raw,
        normalized,
        theory,
        rel_gap: theory.map(|t| (normalized - t) / t),
    }
}

/// Limit of `E_s(A, N) / N^{1+s/d}` where it is known: `2 zeta(s) H_1(A)^{-s}`
/// for one-dimensional rectifiable sets.
pub fn energy_theory(set: &CompactSet, s: f64) -> Option<f64> {
    let h = set.hausdorff_measure()?;
    if set.intrinsic_dim() == 1.0 && s > 1.0 {
        Some(2.0 * zeta(s).ok()? * h.powf(-s))
    } else {
        None
    }
}

/// Limit of `delta_N(A) N^{1/d}`, `C_{inf,d} H_d(A)^{1/d}`, for `d <= 3`.
pub fn packing_theory(set: &CompactSet) -> Option<f64> {
    let d = integer_dim(set.intrinsic_dim())?;
    let h = set.hausdorff_measure()?;
    Some(c_inf(d)? * h.powf(1.0 / d as f64))
}

/// Minimal energies normalized by `N^{1+s/d}`.
pub fn energy_sweep(set: &CompactSet, s: f64, n_list: &[usize], opts: &OptimizerOptions) -> Result<AsymptoticsTable> {
    let d = set.intrinsic_dim();
    if !(s > d) {
        return Err(Error::Precondition(format!("energy asymptotics need s > d = {d}, got s = {s}")));
    }
    check_n_list(n_list)?;
    let theory = energy_theory(set, s);
    let mut rows = Vec::new();
    let mut configs = Vec::new();
    for &n in n_list {
        let rep = minimize_energy(set, n, s, opts)?;
        rows.push(row(n, rep.energy, rep.energy / (n as f64).powf(1.0 + s / d), theory));
        configs.push(rep.config);
    }
    Ok(AsymptoticsTable {
        set: set.clone(),
        mode: SweepMode::Energy { s },
        d_used: d,
        rows,
        configs,
    })
}

/// Best-packing distances normalized by `N^{1/d}`. Self-similar sets use
/// the exact solver.
pub fn packing_sweep(set: &CompactSet, n_list: &[usize], opts: &PackingOptions) -> Result<AsymptoticsTable> {
    check_n_list(n_list)?;
    let d = set.intrinsic_dim();
    let theory = packing_theory(set);
    let mut rows = Vec::new();
    let mut configs = Vec::new();
    let mut solver = match set {
        CompactSet::SelfSimilar { ifs, depth } => Some(ExactSolver::new(ifs, *depth)),
        _ => None,
    };
    for &n in n_list {
        let (delta, config) = match solver.as_mut() {
            Some(sv) => {
                let e = sv.packing(n)?;
                let pts = e.witness.iter().map(|w| Point::scalar(rational_to_f64(w))).collect();
                (rational_to_f64(&e.delta), Configuration { set: set.clone(), points: pts })
            }
            None => {
                let rep = best_packing(set, n, opts)?;
                (rep.delta, rep.config)
            }
        };
        rows.push(row(n, delta, delta * (n as f64).powf(1.0 / d), theory));
        configs.push(config);
    }
    Ok(AsymptoticsTable {
        set: set.clone(),
        mode: SweepMode::Packing,
        d_used: d,
        rows,
        configs,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootLimit {
    pub n: usize,
    pub delta: f64,
    /// `(s, E_s^{1/s}, E_s^{1/s} * delta)`.
    pub rows: Vec<(f64, f64, f64)>,
}

impl RootLimit {
    pub fn products(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.0, r.2)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,energy_root,product\n");
        for (s, root, prod) in &self.rows {
            out.push_str(&format!("{s:.16e},{root:.16e},{prod:.16e}\n"));
        }
        out
    }
}

fn check_s_list(s_list: &[f64], floor: f64) -> Result<()> {
    if s_list.is_empty() || s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("s list must be non-empty and strictly increasing".into()));
    }
    if s_list[0] <= floor {
        return Err(Error::InvalidParameter(format!("every s must exceed {floor}, got {}", s_list[0])));
    }
    Ok(())
}

/// `E_s(A, N)^{1/s} delta_N(A)` for increasing `s` at fixed `N`; the product
/// decreases to 1. Each energy is the better of a fresh multistart and a
/// descent warm-started from the previous exponent's minimizer.
pub fn root_limit_fixed_n(set: &CompactSet, n: usize, s_list: &[f64], opts: &PackingOptions) -> Result<RootLimit> {
    check_s_list(s_list, set.ambient_dim() as f64)?;
    let delta = best_packing(set, n, opts)?.delta;
    let mut rows = Vec::new();
    let mut prev: Option<Configuration> = None;
    for &s in s_list {
        let mut rep = minimize_energy(set, n, s, &opts.optimizer)?;
        if let Some(c) = &prev {
            let warm = minimize_energy_from(c, s, &opts.optimizer)?;
            if warm.energy < rep.energy {
                rep = warm;
            }
        }
        let root = rep.energy.powf(1.0 / s);
        rows.push((s, root, root * delta));
        prev = Some(rep.config);
    }
    Ok(RootLimit { n, delta, rows })
}

/// `(s, (2 zeta(s))^{1/s})`, which tends to `1 / C_{inf,1} = 1`.
pub fn csd_root_limit(s_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_s_list(s_list, 1.0)?;
    s_list.iter().map(|&s| Ok((s, (2.0 * zeta(s)?).powf(1.0 / s)))).collect()
}
