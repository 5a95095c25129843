//! Lifetime ratio in the restricted setting: `p = q = 1/√2`, `Ψ = |P⟩`, and the
//! postselection parameterized by `(|b_P|, θ)`.
//!
//! Everything depends on the physics only through `ΔM/Γ` and `k = Γ_H/Γ_L`.
//! The exact ratio is invariant under `k → 1/k, θ → π - θ`; the limit
//! formulas take `k ≥ 1` and map smaller `k` through that symmetry.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::WeakValue;
use crate::error::{Error, Result};
use crate::system::{PostselectParams, SystemParams};

const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    dm_over_gamma: f64,
    k: f64,
}

impl RegimeConfig {
    pub fn new(dm_over_gamma: f64, k: f64) -> Result<Self> {
        if !(dm_over_gamma >= 0.0) || !dm_over_gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "dM/Gamma must be finite and nonnegative, got {dm_over_gamma}"
            )));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParams(format!("k must be positive, got {k}")));
        }
        Ok(Self { dm_over_gamma, k })
    }

    pub fn from_system(sys: &SystemParams) -> Self {
        Self {
            dm_over_gamma: sys.dm_over_gamma(),
            k: sys.k(),
        }
    }

    pub fn dm_over_gamma(&self) -> f64 {
        self.dm_over_gamma
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Γ = 1 system with these ratios.
    pub fn system(&self) -> SystemParams {
        SystemParams::from_regime(self.dm_over_gamma, self.k).expect("validated at construction")
    }
}

/// Maps `k < 1` onto `k ≥ 1` with `θ → π - θ`.
pub(crate) fn canonical_k(k: f64, theta: f64) -> (f64, f64) {
    if k < 1.0 {
        (1.0 / k, PI - theta)
    } else {
        (k, theta)
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParams(format!("k must be positive, got {k}")));
    }
    Ok(())
}

fn check_b(b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParams(format!("|b_P| = {b} outside [0, 1]")));
    }
    Ok(())
}

fn divide(num: f64, den: f64) -> Result<f64> {
    if !(den > TINY) || !num.is_finite() {
        return Err(Error::ZeroPostselection { integral: den });
    }
    Ok(num / den)
}

/// `|b_P||b_P̄|` for `|b_P| = b`.
fn mix(b: f64) -> f64 {
    b * (1.0 - b * b).max(0.0).sqrt()
}

/// Exact `R = τ(Ψ→Φ)/τ(Ψ)` for any `ΔM/Γ ≥ 0` and `k > 0`.
pub fn ratio_r(cfg: &RegimeConfig, ps: &PostselectParams) -> Result<f64> {
    let (k, e) = (cfg.k, cfg.dm_over_gamma);
    let b = ps.b_mag();
    let u = mix(b);
    let (sn, cs) = ps.theta().sin_cos();
    let diff = b * b - (1.0 - b * b);
    let d = 1.0 + e * e;
    let kp = (1.0 + k) * (1.0 + k);
    let plus = 0.25 + 0.5 * u * cs;
    let minus = 0.25 - 0.5 * u * cs;
    let num = plus * k + minus / k + 2.0 * k * (1.0 - e * e) / (d * d) * diff / kp
        - 8.0 * k * e / (kp * d * d) * u * sn;
    let den = plus * (1.0 + k) / 2.0 + minus * (1.0 + k) / (2.0 * k) + diff / (2.0 * d)
        - e / d * u * sn;
    divide(num, den)
}

/// `k → 1`, `|b_P| → 0` with `x = |b_P|/(k-1)` fixed, in the `ΔM/Γ → 0` regime.
pub fn ratio_limit_x(x: f64, theta: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParams(format!("x must be finite and nonnegative, got {x}")));
    }
    let cs = theta.cos();
    divide(0.375 + cs * x + x * x, 0.125 + 0.5 * cs * x + x * x)
}

/// `ΔM/Γ → 0` limit of [`ratio_r`].
pub fn ratio_case_a(k: f64, b_mag: f64, theta: f64) -> Result<f64> {
    check_k(k)?;
    check_b(b_mag)?;
    let (k, theta) = canonical_k(k, theta);
    if k == 1.0 && b_mag == 0.0 {
        return Err(Error::IndeterminateAtOrigin);
    }
    let u = mix(b_mag);
    let cs = theta.cos();
    let km = k - 1.0;
    let kp = 1.0 + k;
    let num = km * km * (k * k + 4.0 * k + 1.0) / (4.0 * kp * kp)
        + 0.5 * (k * k - 1.0) * u * cs
        + 4.0 * k * k * b_mag * b_mag / (kp * kp);
    let den = km * km / 8.0 + 0.25 * (k * k - 1.0) * u * cs + k * b_mag * b_mag;
    divide(num, den)
}

/// [`ratio_r`] at `ΔM = Γ`.
pub fn ratio_case_b(k: f64, b_mag: f64, theta: f64) -> Result<f64> {
    check_k(k)?;
    check_b(b_mag)?;
    let (k, theta) = canonical_k(k, theta);
    let u = mix(b_mag);
    let (sn, cs) = theta.sin_cos();
    let kp = 1.0 + k;
    let k2 = 1.0 + k * k;
    let num = 2.0
        * (kp * kp * k2 + 2.0 * u * (k - 1.0) * kp.powi(3) * cs - 8.0 * k * k * u * sn);
    let den = kp * kp
        * (k2 + 4.0 * k * b_mag * b_mag + 2.0 * u * (k * k - 1.0) * cs - 4.0 * k * u * sn);
    divide(num, den)
}

/// `ΔM/Γ → ∞` limit of [`ratio_r`].
pub fn ratio_case_c(k: f64, b_mag: f64, theta: f64) -> Result<f64> {
    check_k(k)?;
    check_b(b_mag)?;
    let (k, theta) = canonical_k(k, theta);
    let u = mix(b_mag);
    let cs = theta.cos();
    let num = 0.25 * (k * k + 1.0) + 0.5 * (k * k - 1.0) * u * cs;
    let den = (1.0 + k) * (1.0 + k) / 8.0 + 0.25 * (k * k - 1.0) * u * cs;
    divide(num, den)
}

/// Weak value of the normalized Hamiltonian in the restricted setting:
/// `A_w = -(|b_P̄|/|b_P|) e^{iθ} (1 - iκ)` with `κ = (k-1)Γ/((k+1)ΔM)`.
pub fn weak_value_parametric(cfg: &RegimeConfig, ps: &PostselectParams) -> Result<WeakValue> {
    let b = ps.b_mag();
    if b == 0.0 {
        return Err(Error::SingularPostselection);
    }
    if cfg.dm_over_gamma == 0.0 {
        return Err(Error::DegenerateMass);
    }
    let s = ps.b_bar_mag() / b;
    let kappa = (cfg.k - 1.0) / ((cfg.k + 1.0) * cfg.dm_over_gamma);
    let (sn, cs) = ps.theta().sin_cos();
    Ok(WeakValue {
        re: -s * (cs + kappa * sn),
        im: -s * (sn - kappa * cs),
    })
}
