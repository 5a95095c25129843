//! Decay-time densities with and without postselection.
//!
//! Both the survival probability `‖Ψ(t)‖²` and the postselected transition
//! probability `|⟨Φ|Ψ(t)⟩|²` have the same two-mode shape
//!
//! ```text
//! f(t) = w_L e^{-Γ_L t} + w_H e^{-Γ_H t} + 2 e^{-Γt} Re[z e^{-iΔM t}]
//! ```
//!
//! which [`TwoModeForm`] evaluates, differentiates and integrates in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{BasisMap, MassBasisAmps, StateSpec, SystemParams};

/// Dip below zero that is still treated as rounding noise.
pub const NEGATIVE_DENSITY_TOL: f64 = -1e-12;
/// Normalization integrals below this mean the postselection never fires.
pub const ZERO_INTEGRAL: f64 = 1e-300;

/// `c_L`, `c_H`: postselected amplitudes of the two decay modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffPair {
    pub c_light: Complex64,
    pub c_heavy: Complex64,
}

impl CoeffPair {
    pub fn new(c_light: Complex64, c_heavy: Complex64) -> Self {
        Self { c_light, c_heavy }
    }

    /// `c_L* c_H`.
    pub fn cross(&self) -> Complex64 {
        self.c_light.conj() * self.c_heavy
    }

    /// `⟨Φ|Ψ⟩ = c_L + c_H`.
    pub fn overlap(&self) -> Complex64 {
        self.c_light + self.c_heavy
    }
}

/// `c_L = (b_L* + b_H*⟨P_H|P_L⟩) a_L`, `c_H = (b_H* + b_L*⟨P_L|P_H⟩) a_H`.
pub fn coeffs(pre: &StateSpec, post: &StateSpec, basis: &BasisMap) -> Result<CoeffPair> {
    let a = basis.flavor_to_mass(pre)?;
    let b = basis.flavor_to_mass(post)?;
    let hl = basis.eigen_overlap();
    let lh = hl.conj();
    Ok(CoeffPair {
        c_light: (b.a_light.conj() + b.a_heavy.conj() * hl) * a.a_light,
        c_heavy: (b.a_heavy.conj() + b.a_light.conj() * lh) * a.a_heavy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeForm {
    pub w_light: f64,
    pub w_heavy: f64,
    pub cross: Complex64,
    gamma_light: f64,
    gamma_heavy: f64,
    delta_m: f64,
}

impl TwoModeForm {
    /// The survival probability of a preselected state.
    pub fn survival(sys: &SystemParams, basis: &BasisMap, amps: &MassBasisAmps) -> Self {
        Self {
            w_light: amps.a_light.norm_sqr(),
            w_heavy: amps.a_heavy.norm_sqr(),
            cross: amps.a_light.conj() * amps.a_heavy * basis.eigen_overlap_lh(),
            gamma_light: sys.gamma_light(),
            gamma_heavy: sys.gamma_heavy(),
            delta_m: sys.delta_m(),
        }
    }

    /// The transition probability into a postselected state.
    pub fn transition(sys: &SystemParams, c: &CoeffPair) -> Self {
        Self {
            w_light: c.c_light.norm_sqr(),
            w_heavy: c.c_heavy.norm_sqr(),
            cross: c.cross(),
            gamma_light: sys.gamma_light(),
            gamma_heavy: sys.gamma_heavy(),
            delta_m: sys.delta_m(),
        }
    }

    fn gamma(&self) -> f64 {
        0.5 * (self.gamma_light + self.gamma_heavy)
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_light.min(self.gamma_heavy)
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_m
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_light.max(self.gamma_heavy)
    }

    fn osc(&self, t: f64) -> Complex64 {
        Complex64::from_polar((-self.gamma() * t).exp(), -self.delta_m * t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.w_light * (-self.gamma_light * t).exp()
            + self.w_heavy * (-self.gamma_heavy * t).exp()
            + 2.0 * (self.cross * self.osc(t)).re
    }

    /// `-f'(t)`.
    pub fn neg_derivative(&self, t: f64) -> f64 {
        let g = self.gamma();
        let z = self.cross * self.osc(t);
        self.w_light * self.gamma_light * (-self.gamma_light * t).exp()
            + self.w_heavy * self.gamma_heavy * (-self.gamma_heavy * t).exp()
            + 2.0 * g * z.re
            - 2.0 * self.delta_m * z.im
    }

    /// `∫₀^∞ f`.
    pub fn integral(&self) -> f64 {
        let g = self.gamma();
        let dm = self.delta_m;
        let d = g * g + dm * dm;
        self.w_light / self.gamma_light
            + self.w_heavy / self.gamma_heavy
            + 2.0 * g / d * self.cross.re
            + 2.0 * dm / d * self.cross.im
    }

    /// `∫₀^∞ t f`.
    pub fn first_moment(&self) -> f64 {
        let g = self.gamma();
        let dm = self.delta_m;
        let d = g * g + dm * dm;
        self.w_light / (self.gamma_light * self.gamma_light)
            + self.w_heavy / (self.gamma_heavy * self.gamma_heavy)
            + 2.0 * (g * g - dm * dm) / (d * d) * self.cross.re
            + 4.0 * g * dm / (d * d) * self.cross.im
    }

    /// `∫₀^t f`, assembled from the elementary antiderivatives.
    pub fn partial_integral(&self, t: f64) -> f64 {
        let g = self.gamma();
        let dm = self.delta_m;
        let decay = (-g * t).exp();
        let half = (0.5 * dm * t).sin();
        // 1 - e^{-(Γ+iΔM)t}, written to avoid cancellation at small t
        let one_minus = Complex64::new(
            -(-g * t).exp_m1() + 2.0 * decay * half * half,
            decay * (dm * t).sin(),
        );
        let osc = self.cross * one_minus / Complex64::new(g, dm);
        -self.w_light * (-self.gamma_light * t).exp_m1() / self.gamma_light
            - self.w_heavy * (-self.gamma_heavy * t).exp_m1() / self.gamma_heavy
            + 2.0 * osc.re
    }

    /// Upper bound on `|f(t)|`: `(√w_L + √w_H)² e^{-Γ_min t}`. Valid when `|z|² ≤ w_L w_H`.
    pub fn envelope_prefactor(&self) -> f64 {
        let a = self.w_light.sqrt() + self.w_heavy.sqrt();
        a * a
    }

    /// Bound on `∫_t^∞ |f|`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let gmin = self.gamma_min();
        self.envelope_prefactor() * (-gmin * t).exp() / gmin
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Unconditional decay density `N(t|Ψ) = -d/dt ‖Ψ(t)‖²`.
///
/// Non-orthogonal eigenstates can make this expression dip below zero. Dips
/// within [`NEGATIVE_DENSITY_TOL`] are clamped to zero; anything deeper is an
/// error rather than a silent clip.
pub fn decay_density(sys: &SystemParams, basis: &BasisMap, pre: &StateSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let amps = basis.flavor_to_mass(pre)?;
    let v = TwoModeForm::survival(sys, basis, &amps).neg_derivative(t);
    clamp_density(t, v)
}

fn clamp_density(t: f64, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= NEGATIVE_DENSITY_TOL {
        log::debug!("clamping density {v:e} at t = {t}");
        Ok(0.0)
    } else {
        log::warn!("decay density is negative ({v:e}) at t = {t}; model is unphysical here");
        Err(Error::NegativeDensity { t, value: v })
    }
}

/// `|⟨Φ|Ψ(t)⟩|²`.
pub fn postselect_prob(sys: &SystemParams, c: &CoeffPair, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(TwoModeForm::transition(sys, c).value(t))
}

fn checked_norm(form: &TwoModeForm) -> Result<f64> {
    let n = form.integral();
    if !(n >= ZERO_INTEGRAL) {
        return Err(Error::ZeroPostselection { integral: n });
    }
    Ok(n)
}

/// `∫₀^∞ |⟨Φ|Ψ(t)⟩|² dt`.
pub fn norm_integral(sys: &SystemParams, c: &CoeffPair) -> Result<f64> {
    checked_norm(&TwoModeForm::transition(sys, c))
}

/// `∫₀^∞ t |⟨Φ|Ψ(t)⟩|² dt`.
pub fn first_moment_integral(sys: &SystemParams, c: &CoeffPair) -> Result<f64> {
    let form = TwoModeForm::transition(sys, c);
    checked_norm(&form)?;
    Ok(form.first_moment())
}

/// `N(t|Ψ→Φ)`: the transition probability normalized over all decay times.
pub fn conditional_density(sys: &SystemParams, c: &CoeffPair, t: f64) -> Result<f64> {
    check_time(t)?;
    let form = TwoModeForm::transition(sys, c);
    Ok(form.value(t) / checked_norm(&form)?)
}

pub fn conditional_cdf(sys: &SystemParams, c: &CoeffPair, t: f64) -> Result<f64> {
    check_time(t)?;
    let form = TwoModeForm::transition(sys, c);
    let n = checked_norm(&form)?;
    Ok((form.partial_integral(t) / n).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Unconditional,
    Conditional,
}

/// A decay-time distribution with closed-form density, CDF and mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModel {
    form: TwoModeForm,
    kind: DistributionKind,
    norm: f64,
}

impl DecayModel {
    pub fn unconditional(sys: &SystemParams, basis: &BasisMap, pre: &StateSpec) -> Result<Self> {
        let amps = basis.flavor_to_mass(pre)?;
        Ok(Self {
            form: TwoModeForm::survival(sys, basis, &amps),
            kind: DistributionKind::Unconditional,
            norm: 1.0,
        })
    }

    pub fn conditional(sys: &SystemParams, c: &CoeffPair) -> Result<Self> {
        let form = TwoModeForm::transition(sys, c);
        let norm = checked_norm(&form)?;
        Ok(Self {
            form,
            kind: DistributionKind::Conditional,
            norm,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn form(&self) -> &TwoModeForm {
        &self.form
    }

    /// Density without the negativity check.
    pub fn density_raw(&self, t: f64) -> f64 {
        match self.kind {
            DistributionKind::Unconditional => self.form.neg_derivative(t),
            DistributionKind::Conditional => self.form.value(t) / self.norm,
        }
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        clamp_density(t, self.density_raw(t))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let f = match self.kind {
            DistributionKind::Unconditional => 1.0 - self.form.value(t),
            DistributionKind::Conditional => self.form.partial_integral(t) / self.norm,
        };
        f.clamp(0.0, 1.0)
    }

    /// `1 - F(t)` evaluated directly, so it keeps relative precision deep in the tail.
    pub fn complementary_cdf(&self, t: f64) -> f64 {
        let s = match self.kind {
            DistributionKind::Unconditional => self.form.value(t),
            DistributionKind::Conditional => {
                let g = self.form.gamma();
                let z = self.form.cross * self.form.osc(t)
                    / Complex64::new(g, self.form.delta_m);
                (self.form.w_light * (-self.form.gamma_light * t).exp() / self.form.gamma_light
                    + self.form.w_heavy * (-self.form.gamma_heavy * t).exp()
                        / self.form.gamma_heavy
                    + 2.0 * z.re)
                    / self.norm
            }
        };
        s.clamp(0.0, 1.0)
    }

    /// Mean decay time.
    pub fn mean(&self) -> f64 {
        match self.kind {
            DistributionKind::Unconditional => self.form.integral(),
            DistributionKind::Conditional => self.form.first_moment() / self.norm,
        }
    }

    /// Certified upper bound on `1 - F(t)`.
    pub fn tail_mass_bound(&self, t: f64) -> f64 {
        match self.kind {
            DistributionKind::Unconditional => self.form.envelope_prefactor() * (-self.form.gamma_min() * t).exp(),
            DistributionKind::Conditional => self.form.tail_bound(t) / self.norm,
        }
    }

    /// Smallest `t` with certified `1 - F(t) ≤ eps`.
    pub fn tail_point(&self, eps: f64) -> f64 {
        let gmin = self.form.gamma_min();
        let pre = match self.kind {
            DistributionKind::Unconditional => self.form.envelope_prefactor(),
            DistributionKind::Conditional => self.form.envelope_prefactor() / (gmin * self.norm),
        };
        ((pre / eps).ln() / gmin).max(0.0)
    }

    /// Grid scan for a density dip below [`NEGATIVE_DENSITY_TOL`]. Only the
    /// unconditional density can go negative.
    pub fn find_negative_density(&self) -> Option<(f64, f64)> {
        if self.kind == DistributionKind::Conditional || self.form.cross.norm() == 0.0 {
            return None;
        }
        let g = self.form.gamma();
        // past ~60/Γ the oscillating term is below every smooth term we care about
        let t_end = self.tail_point(1e-15).min(60.0 / g);
        let scale = self.form.gamma_max().max(self.form.delta_m);
        let n = ((t_end * scale / 0.02).ceil() as usize).clamp(1000, 2_000_000);
        let h = t_end / n as f64;
        let mut worst: Option<(f64, f64)> = None;
        for i in 0..=n {
            let t = i as f64 * h;
            let v = self.form.neg_derivative(t);
            if v < NEGATIVE_DENSITY_TOL && worst.is_none_or(|(_, w)| v < w) {
                worst = Some((t, v));
            }
        }
        worst
    }
}

/// A tabulated density on an ascending grid, for figure and sample transport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub t_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub kind: DistributionKind,
    /// Exact probability mass beyond the last grid point.
    pub tail_mass: f64,
}

impl DecayCurve {
    /// `n + 1` equally spaced points on `[0, t_end]`.
    pub fn tabulate(model: &DecayModel, t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0) || n == 0 {
            return Err(Error::InvalidParams("need t_end > 0 and n >= 1".into()));
        }
        let t_grid: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let density = t_grid
            .iter()
            .map(|&t| model.density(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t_grid,
            density,
            kind: model.kind(),
            tail_mass: model.complementary_cdf(t_end),
        })
    }

    /// Trapezoid integral over the grid plus the tail mass.
    pub fn total_mass(&self) -> f64 {
        let body: f64 = self
            .t_grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
            .sum();
        body + self.tail_mass
    }
}
