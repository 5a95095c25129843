//! Curve data for the four `R`-versus-`k` figures.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::lifetime::RegimeConfig;
use crate::optimize::{envelope, envelope_at_theta, EnvelopeCurve, RatioModel, FIGURE4_SPLITTINGS, FIGURE4_THETA};
use crate::system::PostselectParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveRole {
    Curve,
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub name: String,
    pub role: CurveRole,
    pub dm_over_gamma: f64,
    pub b_mag: Option<f64>,
    pub theta: Option<f64>,
    pub model: RatioModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCurve {
    pub spec: CurveSpec,
    pub k: Vec<f64>,
    pub r: Vec<f64>,
    /// Per-point flag for border values that are `x`-limits.
    pub limit: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub number: u8,
    pub description: String,
    pub curves: Vec<FigureCurve>,
    pub notes: Vec<String>,
}

pub const FIGURE1_SPLITTING: f64 = 1e-3;
pub const FIGURE2_SPLITTING: f64 = 1.0 / 1.01;
pub const FIGURE3_SPLITTING: f64 = 1e3;

/// `|b_P|` minimizing `R` at `k = 1`, `ΔM = Γ`.
pub fn equal_splitting_minimizer() -> f64 {
    (2.0 + 3f64.sqrt()).sqrt() / 2.0
}

fn fmt_name(b: f64, theta: f64) -> String {
    format!("b{b:.4}_theta{theta:.4}")
}

/// `R(k)` along `k_grid` at fixed `(|b_P|, θ)`.
pub fn ratio_curve(
    dm_over_gamma: f64,
    b_mag: f64,
    theta: f64,
    model: RatioModel,
    k_grid: &[f64],
) -> Result<FigureCurve> {
    let ps = PostselectParams::new(b_mag, theta)?;
    let model = model.resolve(dm_over_gamma);
    let r = par_map(k_grid, |_, &k| model.eval(&RegimeConfig::new(dm_over_gamma, k)?, &ps));
    Ok(FigureCurve {
        spec: CurveSpec {
            name: fmt_name(b_mag, theta),
            role: CurveRole::Curve,
            dm_over_gamma,
            b_mag: Some(b_mag),
            theta: Some(theta),
            model,
        },
        k: k_grid.to_vec(),
        r: r.into_iter().collect::<Result<_>>()?,
        limit: vec![false; k_grid.len()],
    })
}

fn borders(env: EnvelopeCurve, tag: &str) -> [FigureCurve; 2] {
    let make = |role, r: Vec<f64>, suffix: &str| FigureCurve {
        spec: CurveSpec {
            name: format!("{tag}{suffix}"),
            role,
            dm_over_gamma: env.dm_over_gamma,
            b_mag: None,
            theta: env.theta,
            model: env.model,
        },
        k: env.k_grid.clone(),
        r,
        limit: env.limit.clone(),
    };
    [
        make(CurveRole::Upper, env.upper.clone(), "upper"),
        make(CurveRole::Lower, env.lower.clone(), "lower"),
    ]
}

/// `(|b_P|, θ)` pairs drawn in each figure; figure 4 has none.
pub fn curve_parameters(n: u8) -> Result<(f64, Vec<(f64, f64)>)> {
    match n {
        1 => Ok((
            FIGURE1_SPLITTING,
            (1..=7).map(|i| (i as f64 / 10.0, PI)).collect(),
        )),
        2 => Ok((
            FIGURE2_SPLITTING,
            vec![
                (0.1, FRAC_PI_2),
                (0.2, FRAC_PI_2),
                (0.3, FRAC_PI_2),
                (0.96, FRAC_PI_2),
                (0.7, PI),
                (0.8, PI),
                (0.9, PI),
            ],
        )),
        3 => Ok((
            FIGURE3_SPLITTING,
            (0..=6).map(|i| (FRAC_1_SQRT_2, 0.5 * i as f64)).collect(),
        )),
        4 => Ok((f64::NAN, vec![])),
        _ => Err(Error::InvalidParams(format!("figure number must be 1-4, got {n}"))),
    }
}

pub fn figure(n: u8, k_grid: &[f64]) -> Result<FigureData> {
    let (split, params) = curve_parameters(n)?;
    let mut curves = Vec::new();
    let mut notes = Vec::new();
    let description;
    match n {
        1..=3 => {
            for &(b, t) in &params {
                curves.push(ratio_curve(split, b, t, RatioModel::Auto, k_grid)?);
            }
            curves.extend(borders(envelope(split, k_grid)?, ""));
            description = format!("R versus k at dM/Gamma = {split}");
        }
        _ => {
            for (split, tag) in FIGURE4_SPLITTINGS.into_iter().zip(["small_", "equal_", "large_"]) {
                curves.extend(borders(envelope(split, k_grid)?, tag));
            }
            let near = envelope_at_theta(FIGURE4_SPLITTINGS[2], k_grid, FIGURE4_THETA, RatioModel::Auto)?;
            let [_, lower] = borders(near, "large_theta_near_pi_");
            curves.push(lower);
            description = "regions of R for dM/Gamma in {1e-3, 1, 1e3}".into();
            notes.push("large-splitting lower border also drawn at theta = pi - 0.01".into());
        }
    }
    match n {
        1 => notes.push("curves and borders use the small-splitting limit; borders at k = 1 are x-limits".into()),
        2 => {
            curves.push(ratio_curve(split, equal_splitting_minimizer(), FRAC_PI_2, RatioModel::Auto, k_grid)?);
            notes.push("dM/Gamma = 1/1.01 as listed for this figure, although the equal-splitting analysis sets dM = Gamma".into());
            notes.push(format!(
                "|b_P| = 0.96 is the rounded minimizer; the exact value {} is emitted as an extra curve",
                equal_splitting_minimizer()
            ));
        }
        3 => notes.push("large-splitting limit".into()),
        _ => {}
    }
    if curves.iter().any(|c| c.limit.iter().any(|&l| l)) && n != 1 {
        notes.push("some border values are x-limits".into());
    }
    Ok(FigureData {
        number: n,
        description,
        curves,
        notes,
    })
}
