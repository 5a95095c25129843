//! Extrema and envelopes of the lifetime ratio over the postselection
//! parameters `(|b_P|, θ)` at fixed `ΔM/Γ` and `k`.
//!
//! Search: a coarse grid (linear and logarithmic in `|b_P|`, uniform in `θ`),
//! then alternating golden-section refinement along each axis. In the
//! small-splitting model the supremum near `k = 1` sits at `|b_P| ∝ (k-1)`, so
//! the grid also carries nodes `|b_P| = x(k-1)`; once `k - 1` is below
//! [`CORNER_K_TOL`] the extrema come from [`ratio_limit_x`] and are flagged as
//! limits.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::lifetime::{
    ratio_case_a, ratio_case_c, ratio_limit_x, ratio_r, RegimeConfig,
};
use crate::rng;
use crate::system::PostselectParams;

pub const B_MARGIN: f64 = 1e-8;
pub const GRID: usize = 256;
pub const PARAM_TOL: f64 = 1e-10;
pub const PROBES: usize = 64;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// `ΔM/Γ` at or below which [`RatioModel::Auto`] uses the small-splitting limit.
pub const SMALL_SPLITTING_MAX: f64 = 1e-2;
/// `ΔM/Γ` at or above which [`RatioModel::Auto`] uses the large-splitting limit.
pub const LARGE_SPLITTING_MIN: f64 = 1e2;
/// Below this `k - 1` the small-splitting extrema are the `x`-limit values.
pub const CORNER_K_TOL: f64 = 1e-6;
pub const X_MAX: f64 = 10.0;

const LOG_B_NODES: usize = 64;
const LOG_B_HI: f64 = 1e-2;
const X_NODES: usize = 64;
const MAX_SWEEPS: usize = 200;
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Which formula evaluates `R` during a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioModel {
    /// Small-splitting limit up to [`SMALL_SPLITTING_MAX`], large-splitting
    /// limit from [`LARGE_SPLITTING_MIN`], exact in between.
    Auto,
    Exact,
    SmallSplitting,
    LargeSplitting,
}

impl RatioModel {
    pub fn resolve(self, dm_over_gamma: f64) -> Self {
        match self {
            RatioModel::Auto if dm_over_gamma <= SMALL_SPLITTING_MAX => RatioModel::SmallSplitting,
            RatioModel::Auto if dm_over_gamma >= LARGE_SPLITTING_MIN => RatioModel::LargeSplitting,
            RatioModel::Auto => RatioModel::Exact,
            m => m,
        }
    }

    pub fn eval(self, cfg: &RegimeConfig, ps: &PostselectParams) -> Result<f64> {
        match self.resolve(cfg.dm_over_gamma()) {
            RatioModel::SmallSplitting => ratio_case_a(cfg.k(), ps.b_mag(), ps.theta()),
            RatioModel::LargeSplitting => ratio_case_c(cfg.k(), ps.b_mag(), ps.theta()),
            _ => ratio_r(cfg, ps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumOptions {
    pub model: RatioModel,
    pub grid: usize,
    pub refine: bool,
    pub tol: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for ExtremumOptions {
    fn default() -> Self {
        Self {
            model: RatioModel::Auto,
            grid: GRID,
            refine: true,
            tol: PARAM_TOL,
            probes: PROBES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeCheck {
    pub probes: usize,
    /// Largest amount by which a probe exceeded `r_max` or undercut `r_min` (0 if none).
    pub worst_excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumResult {
    pub r_max: f64,
    pub r_min: f64,
    pub argmax: PostselectParams,
    pub argmin: PostselectParams,
    /// Set when the maximum is a limit along `|b_P| = x(k-1)`, `k → 1`.
    pub max_limit_x: Option<f64>,
    pub min_limit_x: Option<f64>,
    /// `(|b_P| nodes, θ nodes)` of the coarse grid.
    pub grid_resolution: (usize, usize),
    pub refined: bool,
    pub model: RatioModel,
    /// `k < 1` was searched as `1/k` with `θ → π - θ`.
    pub mapped_from_inverse_k: bool,
    pub probe_check: ProbeCheck,
}

/// A point of the search: chart coordinate of `|b_P|` (or `x`), `θ`, value.
#[derive(Debug, Clone, Copy)]
struct Point {
    u: f64,
    theta: f64,
    value: f64,
}

/// Golden-section maximization on `[lo, hi]`, NaN treated as `-∞`.
fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = g(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Mapping between `|b_P|` and the coordinate refinement works in.
#[derive(Debug, Clone, Copy)]
enum Chart {
    Linear { step: f64, lo: f64, hi: f64 },
    Log { ratio: f64, lo: f64, hi: f64 },
}

impl Chart {
    fn for_b(b: f64, lin_step: f64, log_ratio: f64) -> Self {
        if b < LOG_B_HI {
            Chart::Log {
                ratio: log_ratio,
                lo: B_MARGIN.ln(),
                hi: (1.0 - B_MARGIN).ln(),
            }
        } else {
            Chart::Linear {
                step: lin_step,
                lo: B_MARGIN,
                hi: 1.0 - B_MARGIN,
            }
        }
    }

    fn encode(self, b: f64) -> f64 {
        match self {
            Chart::Linear { .. } => b,
            Chart::Log { .. } => b.ln(),
        }
    }

    fn decode(self, u: f64) -> f64 {
        match self {
            Chart::Linear { .. } => u,
            Chart::Log { .. } => u.exp(),
        }
    }

    fn bracket(self, u: f64) -> (f64, f64) {
        match self {
            Chart::Linear { step, lo, hi } => ((u - step).max(lo), (u + step).min(hi)),
            Chart::Log { ratio, lo, hi } => {
                let w = ratio.ln();
                ((u - w).max(lo), (u + w).min(hi))
            }
        }
    }
}

/// Alternating per-axis golden-section ascent; only improvements are kept.
fn refine<F: Fn(f64, f64) -> f64>(f: &F, start: Point, chart: Chart, dtheta: f64, tol: f64) -> Point {
    let mut p = start;
    p.u = chart.encode(p.u);
    for _ in 0..MAX_SWEEPS {
        let prev = p.value;
        let (lo, hi) = chart.bracket(p.u);
        let (u, v) = golden_max(|u| f(chart.decode(u), p.theta), lo, hi, tol);
        if v > p.value {
            p.u = u;
            p.value = v;
        }
        let b = chart.decode(p.u);
        let (t, v) = golden_max(|t| f(b, t), p.theta - dtheta, p.theta + dtheta, tol);
        if v > p.value {
            p.theta = t;
            p.value = v;
        }
        if p.value - prev <= 1e-15 * p.value.abs().max(1.0) {
            break;
        }
    }
    p.u = chart.decode(p.u);
    p
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points log-spaced on `[lo, hi]`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || n == 0 {
        return Err(Error::InvalidParams(format!("bad log grid {lo}:{hi}:{n}")));
    }
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    v[0] = lo;
    if n > 1 {
        v[n - 1] = hi;
    }
    Ok(v)
}

/// 200 points log-spaced on `[1, 10⁴]`.
pub fn default_k_grid() -> Vec<f64> {
    log_grid(1.0, 1e4, 200).expect("static grid")
}

/// Best grid node; ties keep the first hit in (θ, then `|b_P|`) order.
fn grid_best<F: Fn(f64, f64) -> f64>(f: &F, bs: &[f64], thetas: &[f64]) -> Option<Point> {
    let mut best: Option<Point> = None;
    for &t in thetas {
        for &b in bs {
            let v = f(b, t);
            if v.is_nan() {
                continue;
            }
            if best.is_none_or(|p| v > p.value) {
                best = Some(Point { u: b, theta: t, value: v });
            }
        }
    }
    best
}

fn value_or_nan(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// `(R, x, θ)` at an extremum of [`ratio_limit_x`].
pub type LimitPoint = (f64, f64, f64);

/// Extrema of [`ratio_limit_x`] over `x ∈ [0, X_MAX]`, `θ ∈ [0, 2π)`.
/// Returns `(max, min)`.
pub fn extremize_limit_x(grid: usize, tol: f64) -> Result<(LimitPoint, LimitPoint)> {
    let xs = linspace(0.0, X_MAX, grid);
    let thetas: Vec<f64> = (0..grid).map(|j| TAU * j as f64 / grid as f64).collect();
    let dx = X_MAX / (grid - 1) as f64;
    let dtheta = TAU / grid as f64;
    let chart = Chart::Linear { step: dx, lo: 0.0, hi: X_MAX };
    let mut out = [(0.0, 0.0, 0.0); 2];
    for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
        let f = |x: f64, t: f64| sign * value_or_nan(ratio_limit_x(x, t));
        let start = grid_best(&f, &xs, &thetas).ok_or(Error::ZeroPostselection { integral: 0.0 })?;
        let p = refine(&f, start, chart, dtheta, tol);
        out[slot] = (sign * p.value, p.u, wrap(p.theta));
    }
    Ok((out[0], out[1]))
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Global extrema of `R` with default options.
pub fn extremize(cfg: &RegimeConfig) -> Result<ExtremumResult> {
    extremize_with(cfg, &ExtremumOptions::default())
}

pub fn extremize_with(cfg: &RegimeConfig, opts: &ExtremumOptions) -> Result<ExtremumResult> {
    if opts.grid < 3 {
        return Err(Error::InvalidParams(format!("grid must be at least 3, got {}", opts.grid)));
    }
    let model = opts.model.resolve(cfg.dm_over_gamma());
    let mapped = cfg.k() < 1.0;
    let work = if mapped {
        RegimeConfig::new(cfg.dm_over_gamma(), 1.0 / cfg.k())?
    } else {
        *cfg
    };
    let unmap = |t: f64| if mapped { wrap(PI - t) } else { wrap(t) };
    let eval = |b: f64, t: f64| {
        PostselectParams::new(b.clamp(0.0, 1.0), t)
            .and_then(|ps| model.eval(&work, &ps))
            .unwrap_or(f64::NAN)
    };

    let km1 = work.k() - 1.0;
    let (mut max, mut min);
    let (mut max_x, mut min_x) = (None, None);
    let n = opts.grid;
    let thetas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();

    if model == RatioModel::SmallSplitting && km1 < CORNER_K_TOL {
        let ((vmax, xmax, tmax), (vmin, xmin, tmin)) = extremize_limit_x(n, opts.tol)?;
        max = Point { u: (xmax * km1).min(1.0), theta: tmax, value: vmax };
        min = Point { u: (xmin * km1).min(1.0), theta: tmin, value: vmin };
        max_x = Some(xmax);
        min_x = Some(xmin);
    } else {
        let lin_step = (1.0 - 2.0 * B_MARGIN) / (n - 1) as f64;
        let log_ratio = (LOG_B_HI / B_MARGIN).powf(1.0 / (LOG_B_NODES - 1) as f64);
        let mut bs = linspace(B_MARGIN, 1.0 - B_MARGIN, n);
        bs.extend(log_grid(B_MARGIN, LOG_B_HI, LOG_B_NODES)?);
        if model == RatioModel::SmallSplitting {
            bs.extend(
                linspace(0.0, X_MAX, X_NODES + 1)
                    .into_iter()
                    .skip(1)
                    .map(|x| x * km1)
                    .filter(|&b| b > B_MARGIN && b < 1.0 - B_MARGIN),
            );
        }
        bs.sort_by(f64::total_cmp);
        bs.dedup();
        let dtheta = TAU / n as f64;
        let mut found = [None, None];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            let f = |b: f64, t: f64| sign * eval(b, t);
            let Some(start) = grid_best(&f, &bs, &thetas) else {
                return Err(Error::ZeroPostselection { integral: 0.0 });
            };
            let p = if opts.refine {
                let chart = Chart::for_b(start.u, lin_step, log_ratio);
                refine(&f, start, chart, dtheta, opts.tol)
            } else {
                start
            };
            found[slot] = Some(Point { value: sign * p.value, ..p });
        }
        max = found[0].unwrap();
        min = found[1].unwrap();
    }
    max.theta = unmap(max.theta);
    min.theta = unmap(min.theta);

    let mut probe_rng = rng::stream(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.probes {
        let b = B_MARGIN + (1.0 - 2.0 * B_MARGIN) * rng::uniform(&mut probe_rng);
        let t = TAU * rng::uniform(&mut probe_rng);
        let v = PostselectParams::new(b, t)
            .and_then(|ps| model.eval(cfg, &ps))
            .unwrap_or(f64::NAN);
        if v.is_finite() {
            worst = worst.max(v - max.value).max(min.value - v);
        }
    }

    Ok(ExtremumResult {
        r_max: max.value,
        r_min: min.value,
        argmax: PostselectParams::new(max.u.clamp(0.0, 1.0), max.theta)?,
        argmin: PostselectParams::new(min.u.clamp(0.0, 1.0), min.theta)?,
        max_limit_x: max_x,
        min_limit_x: min_x,
        grid_resolution: (n, n),
        refined: opts.refine,
        model,
        mapped_from_inverse_k: mapped,
        probe_check: ProbeCheck {
            probes: opts.probes,
            worst_excess: worst,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCurve {
    pub dm_over_gamma: f64,
    pub model: RatioModel,
    /// `θ` when the envelope is taken over `|b_P|` only.
    pub theta: Option<f64>,
    pub k_grid: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// Per-k flag: upper or lower border is an `x`-limit value.
    pub limit: Vec<bool>,
}

fn check_grid(k_grid: &[f64]) -> Result<()> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParams("empty k grid".into()));
    }
    if k_grid.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidParams("k grid must be positive".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("k grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Per-k [`extremize`] results as a curve. Item `i` uses probe seed `seed ^ i`.
pub fn envelope(dm_over_gamma: f64, k_grid: &[f64]) -> Result<EnvelopeCurve> {
    envelope_with(dm_over_gamma, k_grid, &ExtremumOptions::default())
}

pub fn envelope_with(dm_over_gamma: f64, k_grid: &[f64], opts: &ExtremumOptions) -> Result<EnvelopeCurve> {
    check_grid(k_grid)?;
    RegimeConfig::new(dm_over_gamma, 1.0)?;
    let results = par_map(k_grid, |i, &k| {
        let cfg = RegimeConfig::new(dm_over_gamma, k)?;
        extremize_with(&cfg, &ExtremumOptions { seed: opts.seed ^ i as u64, ..*opts })
    });
    let results: Vec<ExtremumResult> = results.into_iter().collect::<Result<_>>()?;
    Ok(EnvelopeCurve {
        dm_over_gamma,
        model: opts.model.resolve(dm_over_gamma),
        theta: None,
        k_grid: k_grid.to_vec(),
        upper: results.iter().map(|r| r.r_max).collect(),
        lower: results.iter().map(|r| r.r_min).collect(),
        limit: results
            .iter()
            .map(|r| r.max_limit_x.is_some() || r.min_limit_x.is_some())
            .collect(),
    })
}

/// Extrema over `|b_P|` alone at fixed `θ`.
pub fn envelope_at_theta(
    dm_over_gamma: f64,
    k_grid: &[f64],
    theta: f64,
    model: RatioModel,
) -> Result<EnvelopeCurve> {
    check_grid(k_grid)?;
    RegimeConfig::new(dm_over_gamma, 1.0)?;
    let model = model.resolve(dm_over_gamma);
    let n = GRID;
    let lin_step = (1.0 - 2.0 * B_MARGIN) / (n - 1) as f64;
    let log_ratio = (LOG_B_HI / B_MARGIN).powf(1.0 / (LOG_B_NODES - 1) as f64);
    let rows = par_map(k_grid, |_, &k| -> Result<(f64, f64)> {
        let cfg = RegimeConfig::new(dm_over_gamma, k)?;
        let mut bs = linspace(B_MARGIN, 1.0 - B_MARGIN, n);
        bs.extend(log_grid(B_MARGIN, LOG_B_HI, LOG_B_NODES)?);
        bs.push(std::f64::consts::FRAC_1_SQRT_2);
        bs.sort_by(f64::total_cmp);
        let mut out = [0.0; 2];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            let f = |b: f64| {
                sign * PostselectParams::new(b, theta)
                    .and_then(|ps| model.eval(&cfg, &ps))
                    .unwrap_or(f64::NAN)
            };
            let start = grid_best(&|b, _| f(b), &bs, &[theta])
                .ok_or(Error::ZeroPostselection { integral: 0.0 })?;
            let chart = Chart::for_b(start.u, lin_step, log_ratio);
            let (lo, hi) = chart.bracket(chart.encode(start.u));
            let (_, v) = golden_max(|u| f(chart.decode(u)), lo, hi, PARAM_TOL);
            out[slot] = sign * v.max(start.value);
        }
        Ok((out[0], out[1]))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    Ok(EnvelopeCurve {
        dm_over_gamma,
        model,
        theta: Some(theta),
        k_grid: k_grid.to_vec(),
        upper: rows.iter().map(|r| r.0).collect(),
        lower: rows.iter().map(|r| r.1).collect(),
        limit: vec![false; k_grid.len()],
    })
}

/// Region borders for the three splitting regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure4Regions {
    pub small_splitting: EnvelopeCurve,
    pub equal_splitting: EnvelopeCurve,
    pub large_splitting: EnvelopeCurve,
    /// Large-splitting lower border drawn at `θ = π - 0.01`.
    pub large_splitting_near_singular: EnvelopeCurve,
}

pub const FIGURE4_SPLITTINGS: [f64; 3] = [1e-3, 1.0, 1e3];
pub const FIGURE4_THETA: f64 = PI - 0.01;

pub fn region_figure4(k_grid: &[f64]) -> Result<Figure4Regions> {
    let [s, e, l] = FIGURE4_SPLITTINGS;
    Ok(Figure4Regions {
        small_splitting: envelope(s, k_grid)?,
        equal_splitting: envelope(e, k_grid)?,
        large_splitting: envelope(l, k_grid)?,
        large_splitting_near_singular: envelope_at_theta(l, k_grid, FIGURE4_THETA, RatioModel::Auto)?,
    })
}
