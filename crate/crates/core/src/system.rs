//! Two-level non-Hermitian system: parameters, basis transcription and time evolution.
//!
//! Units are ħ = 1. The Hamiltonian is fixed by its two complex eigenvalues
//! `M_X - iΓ_X/2` and by how the (possibly non-orthogonal) eigenstates
//! `|P_L⟩ = p1|P⟩ + q1|P̄⟩`, `|P_H⟩ = p2|P⟩ - q2|P̄⟩` sit in the orthonormal
//! measurement basis `(|P⟩, |P̄⟩)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Normalization tolerance for basis columns and states.
pub const NORM_TOL: f64 = 1e-12;
/// Minimum |determinant| of the basis map before inversion is refused.
pub const DET_THRESHOLD: f64 = 1e-12;

/// Masses and widths of the two energy eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    m_light: f64,
    m_heavy: f64,
    gamma_light: f64,
    gamma_heavy: f64,
}

impl SystemParams {
    pub fn new(m_light: f64, m_heavy: f64, gamma_light: f64, gamma_heavy: f64) -> Result<Self> {
        let all = [m_light, m_heavy, gamma_light, gamma_heavy];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if gamma_light <= 0.0 || gamma_heavy <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "widths must be positive (Gamma_L = {gamma_light}, Gamma_H = {gamma_heavy})"
            )));
        }
        if m_light > m_heavy {
            return Err(Error::InvalidParams(format!(
                "M_L = {m_light} exceeds M_H = {m_heavy}"
            )));
        }
        Ok(Self {
            m_light,
            m_heavy,
            gamma_light,
            gamma_heavy,
        })
    }

    /// Nondimensional system with Γ = 1, `ΔM/Γ = dm_over_gamma`, `Γ_H/Γ_L = k` and `M_L = 0`.
    pub fn from_regime(dm_over_gamma: f64, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParams(format!("k must be positive, got {k}")));
        }
        if !(dm_over_gamma >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "dM/Gamma must be nonnegative, got {dm_over_gamma}"
            )));
        }
        let gamma_light = 2.0 / (1.0 + k);
        Self::new(0.0, dm_over_gamma, gamma_light, k * gamma_light)
    }

    pub fn m_light(&self) -> f64 {
        self.m_light
    }
    pub fn m_heavy(&self) -> f64 {
        self.m_heavy
    }
    pub fn gamma_light(&self) -> f64 {
        self.gamma_light
    }
    pub fn gamma_heavy(&self) -> f64 {
        self.gamma_heavy
    }

    pub fn delta_m(&self) -> f64 {
        self.m_heavy - self.m_light
    }

    /// Average width Γ.
    pub fn gamma(&self) -> f64 {
        0.5 * (self.gamma_light + self.gamma_heavy)
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_light.min(self.gamma_heavy)
    }

    pub fn k(&self) -> f64 {
        self.gamma_heavy / self.gamma_light
    }

    pub fn dm_over_gamma(&self) -> f64 {
        self.delta_m() / self.gamma()
    }

    pub fn derive(&self) -> DerivedParams {
        let delta_m = self.delta_m();
        DerivedParams {
            delta_m,
            gamma: self.gamma(),
            m: 0.5 * (self.m_light + self.m_heavy),
            g: 0.5 * delta_m,
            k: self.k(),
        }
    }

    /// Same physics in units where Γ = 1.
    pub fn normalized_to_unit_gamma(&self) -> Self {
        let s = 1.0 / self.gamma();
        Self {
            m_light: self.m_light * s,
            m_heavy: self.m_heavy * s,
            gamma_light: self.gamma_light * s,
            gamma_heavy: self.gamma_heavy * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub delta_m: f64,
    pub gamma: f64,
    pub m: f64,
    pub g: f64,
    pub k: f64,
}

/// Transcription of the energy eigenstates into the orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisMap {
    p1: Complex64,
    q1: Complex64,
    p2: Complex64,
    q2: Complex64,
}

impl BasisMap {
    pub fn new(p1: Complex64, q1: Complex64, p2: Complex64, q2: Complex64) -> Result<Self> {
        for (label, a, b) in [("L", p1, q1), ("H", p2, q2)] {
            let n = a.norm_sqr() + b.norm_sqr();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidParams(format!(
                    "eigenstate {label} is not normalized: |p|^2+|q|^2 = {n}"
                )));
            }
        }
        Ok(Self { p1, q1, p2, q2 })
    }

    /// `p1 = p2 = p`, `q1 = q2 = q` with both real and nonnegative. Only the
    /// ratio matters; the pair is rescaled to unit norm.
    pub fn restricted(p: f64, q: f64) -> Result<Self> {
        if !(p >= 0.0 && q >= 0.0) || p + q == 0.0 {
            return Err(Error::InvalidParams(format!(
                "restricted basis needs p, q >= 0 not both zero (p = {p}, q = {q})"
            )));
        }
        let n = p.hypot(q);
        let (p, q) = (Complex64::new(p / n, 0.0), Complex64::new(q / n, 0.0));
        Ok(Self {
            p1: p,
            q1: q,
            p2: p,
            q2: q,
        })
    }

    /// `p = q = 1/√2`: orthogonal eigenstates.
    pub fn symmetric() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            p1: s,
            q1: s,
            p2: s,
            q2: s,
        }
    }

    pub fn p1(&self) -> Complex64 {
        self.p1
    }
    pub fn q1(&self) -> Complex64 {
        self.q1
    }
    pub fn p2(&self) -> Complex64 {
        self.p2
    }
    pub fn q2(&self) -> Complex64 {
        self.q2
    }

    /// `-(p1 q2 + p2 q1)`, the determinant of the eigenstate-to-basis matrix.
    pub fn determinant(&self) -> Complex64 {
        -(self.p1 * self.q2 + self.p2 * self.q1)
    }

    /// `⟨P_H|P_L⟩ = p2* p1 - q2* q1`.
    pub fn eigen_overlap(&self) -> Complex64 {
        self.p2.conj() * self.p1 - self.q2.conj() * self.q1
    }

    /// `⟨P_L|P_H⟩`.
    pub fn eigen_overlap_lh(&self) -> Complex64 {
        self.eigen_overlap().conj()
    }

    fn checked_det(&self) -> Result<Complex64> {
        let det = self.determinant();
        if det.norm() <= DET_THRESHOLD {
            return Err(Error::SingularBasis { det: det.norm() });
        }
        Ok(det)
    }

    /// Expand a state given in the orthonormal basis into eigenstate amplitudes.
    pub fn flavor_to_mass(&self, state: &StateSpec) -> Result<MassBasisAmps> {
        let det = self.checked_det()?;
        let (ap, apb) = (state.a_p, state.a_pbar);
        Ok(MassBasisAmps {
            a_light: (-ap * self.q2 - self.p2 * apb) / det,
            a_heavy: (self.p1 * apb - self.q1 * ap) / det,
        })
    }

    /// Components `(a_P, a_P̄)` of `a_L|P_L⟩ + a_H|P_H⟩`. No normalization is implied.
    pub fn mass_to_flavor(&self, amps: &MassBasisAmps) -> (Complex64, Complex64) {
        (
            amps.a_light * self.p1 + amps.a_heavy * self.p2,
            amps.a_light * self.q1 - amps.a_heavy * self.q2,
        )
    }
}

/// Convenience alias for [`BasisMap::eigen_overlap`].
pub fn eigen_overlap(basis: &BasisMap) -> Complex64 {
    basis.eigen_overlap()
}

/// Normalized state in the `(|P⟩, |P̄⟩)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    a_p: Complex64,
    a_pbar: Complex64,
}

impl StateSpec {
    pub fn new(a_p: Complex64, a_pbar: Complex64) -> Result<Self> {
        let n = a_p.norm_sqr() + a_pbar.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq: n });
        }
        Ok(Self { a_p, a_pbar })
    }

    /// Rescales any nonzero pair to unit norm.
    pub fn normalized(a_p: Complex64, a_pbar: Complex64) -> Result<Self> {
        let n = (a_p.norm_sqr() + a_pbar.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sq: n * n });
        }
        Ok(Self {
            a_p: a_p / n,
            a_pbar: a_pbar / n,
        })
    }

    /// `|P⟩`.
    pub fn p() -> Self {
        Self {
            a_p: Complex64::new(1.0, 0.0),
            a_pbar: Complex64::new(0.0, 0.0),
        }
    }

    /// `|P̄⟩`.
    pub fn pbar() -> Self {
        Self {
            a_p: Complex64::new(0.0, 0.0),
            a_pbar: Complex64::new(1.0, 0.0),
        }
    }

    /// State with `|b_P| = b_mag` and `b_P b_P̄* = |b_P||b_P̄| e^{iθ}`; `b_P` is taken real.
    pub fn from_postselect(ps: &PostselectParams) -> Self {
        let b = ps.b_mag();
        let bbar = (1.0 - b * b).max(0.0).sqrt();
        Self {
            a_p: Complex64::new(b, 0.0),
            a_pbar: Complex64::from_polar(bbar, -ps.theta()),
        }
    }

    pub fn a_p(&self) -> Complex64 {
        self.a_p
    }
    pub fn a_pbar(&self) -> Complex64 {
        self.a_pbar
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateSpec) -> Complex64 {
        self.a_p.conj() * other.a_p + self.a_pbar.conj() * other.a_pbar
    }

    /// The orthonormal complement `(-a_P̄*, a_P*)`.
    pub fn orthogonal(&self) -> Self {
        Self {
            a_p: -self.a_pbar.conj(),
            a_pbar: self.a_p.conj(),
        }
    }
}

/// Postselection in the restricted parameterization: `|b_P|` and the relative phase θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostselectParams {
    b_mag: f64,
    theta: f64,
}

impl PostselectParams {
    /// θ is reduced into `[0, 2π)`.
    pub fn new(b_mag: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b_mag) {
            return Err(Error::InvalidParams(format!("|b_P| = {b_mag} outside [0, 1]")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParams("theta must be finite".into()));
        }
        Ok(Self {
            b_mag,
            theta: wrap_angle(theta),
        })
    }

    pub fn b_mag(&self) -> f64 {
        self.b_mag
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    /// `|b_P̄| = √(1 - |b_P|²)`.
    pub fn b_bar_mag(&self) -> f64 {
        (1.0 - self.b_mag * self.b_mag).max(0.0).sqrt()
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = theta.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// Amplitudes on the energy eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBasisAmps {
    pub a_light: Complex64,
    pub a_heavy: Complex64,
}

impl MassBasisAmps {
    pub fn new(a_light: Complex64, a_heavy: Complex64) -> Self {
        Self { a_light, a_heavy }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// `e^{-itĤ}` applied in the eigenbasis. The result is not normalized.
pub fn evolve(sys: &SystemParams, amps: &MassBasisAmps, t: f64) -> Result<MassBasisAmps> {
    check_time(t)?;
    let phase = |gamma: f64, m: f64| Complex64::new(-0.5 * gamma * t, -m * t).exp();
    Ok(MassBasisAmps {
        a_light: amps.a_light * phase(sys.gamma_light, sys.m_light),
        a_heavy: amps.a_heavy * phase(sys.gamma_heavy, sys.m_heavy),
    })
}

/// `‖Ψ(t)‖²`, the probability that no decay has happened by time t.
pub fn survival(sys: &SystemParams, basis: &BasisMap, amps: &MassBasisAmps, t: f64) -> Result<f64> {
    check_time(t)?;
    let d = sys.derive();
    let cross = amps.a_light.conj() * amps.a_heavy * basis.eigen_overlap_lh();
    let osc = Complex64::from_polar(1.0, -d.delta_m * t);
    Ok(amps.a_light.norm_sqr() * (-sys.gamma_light * t).exp()
        + amps.a_heavy.norm_sqr() * (-sys.gamma_heavy * t).exp()
        + 2.0 * (-d.gamma * t).exp() * (cross * osc).re)
}
