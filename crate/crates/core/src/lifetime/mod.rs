//! Lifetimes with and without postselection, weak values of the normalized
//! Hamiltonian, and the lifetime ratio `R = τ(Ψ→Φ)/τ(Ψ)`.

mod ratio;
mod sum_rule;

pub use ratio::{
    ratio_case_a, ratio_case_b, ratio_case_c, ratio_limit_x, ratio_r, weak_value_parametric,
    RegimeConfig,
};
pub use sum_rule::{sum_rule_check, SumRule};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{first_moment_integral, norm_integral, CoeffPair};
use crate::error::{Error, Result};
use crate::system::{BasisMap, StateSpec, SystemParams};

/// Below this `|⟨Φ|Ψ⟩|` the weak value is undefined.
pub const ORTHOGONAL_TOL: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

impl WeakValue {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for WeakValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// `τ(Ψ)`, the mean decay time without postselection.
pub fn lifetime_unconditional(sys: &SystemParams, basis: &BasisMap, pre: &StateSpec) -> Result<f64> {
    let a = basis.flavor_to_mass(pre)?;
    let d = sys.derive();
    let (g, dm) = (d.gamma, d.delta_m);
    let w = a.a_light.conj() * a.a_heavy * basis.eigen_overlap_lh();
    let den = (g * g + dm * dm).powi(2);
    let even = (g * g - dm * dm) / den;
    let odd = 2.0 * g * dm / den;
    Ok(a.a_light.norm_sqr() / sys.gamma_light()
        + a.a_heavy.norm_sqr() / sys.gamma_heavy()
        + 2.0 * g * w.re * even
        - 2.0 * dm * w.im * even
        + 2.0 * g * w.im * odd
        + 2.0 * dm * w.re * odd)
}

/// `τ(Ψ→Φ)`, the exact mean decay time of the postselected subensemble.
pub fn lifetime_conditional(sys: &SystemParams, c: &CoeffPair) -> Result<f64> {
    Ok(first_moment_integral(sys, c)? / norm_integral(sys, c)?)
}

fn check_overlap(c: &CoeffPair) -> Result<Complex64> {
    let s = c.overlap();
    if s.norm() < ORTHOGONAL_TOL {
        return Err(Error::OrthogonalPrePost);
    }
    Ok(s)
}

/// Weak value `A_w = ⟨Φ|Â|Ψ⟩/⟨Φ|Ψ⟩` of the normalized Hamiltonian
/// `Â = (Ĥ - (M - iΓ/2)) / g`.
pub fn weak_value(sys: &SystemParams, c: &CoeffPair) -> Result<WeakValue> {
    let s = check_overlap(c)?;
    let dm = sys.delta_m();
    if dm == 0.0 {
        return Err(Error::DegenerateMass);
    }
    let dgamma = sys.gamma_heavy() - sys.gamma_light();
    let s2 = s.norm_sqr();
    let contrast = (c.c_heavy.norm_sqr() - c.c_light.norm_sqr()) / s2;
    let im_cross = c.cross().im / s2;
    Ok(WeakValue {
        re: contrast + im_cross * dgamma / dm,
        im: -contrast * dgamma / (2.0 * dm) + 2.0 * im_cross,
    })
}

/// `g·A_w`: the weak value of `Ĥ - (M - iΓ/2)`, built from the eigenvalues
/// directly. Finite even when `ΔM = 0`.
pub fn shifted_weak_value(sys: &SystemParams, c: &CoeffPair) -> Result<Complex64> {
    let s = check_overlap(c)?;
    let g = 0.5 * sys.delta_m();
    let quarter_dgamma = 0.25 * (sys.gamma_heavy() - sys.gamma_light());
    let lambda_light = Complex64::new(-g, quarter_dgamma);
    let lambda_heavy = Complex64::new(g, -quarter_dgamma);
    Ok((lambda_light * c.c_light + lambda_heavy * c.c_heavy) / s)
}

/// First-order lifetime and the size of the expansion parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearLifetime {
    pub tau: f64,
    /// `ΔM/(2Γ)`; the expansion in `tΓ·ΔM/(2Γ)` needs this ≪ 1.
    pub coupling: f64,
}

/// `τ(Ψ→Φ) ≈ 1/Γ + (2g/Γ²) Im[A_w]`. Always a separate estimate; never
/// substituted for [`lifetime_conditional`].
pub fn lifetime_linear(sys: &SystemParams, c: &CoeffPair) -> Result<LinearLifetime> {
    let gamma = sys.gamma();
    let gw = shifted_weak_value(sys, c)?;
    Ok(LinearLifetime {
        tau: 1.0 / gamma + 2.0 * gw.im / (gamma * gamma),
        coupling: sys.delta_m() / (2.0 * gamma),
    })
}
