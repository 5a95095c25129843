use serde::{Deserialize, Serialize};

use super::{lifetime_conditional, lifetime_unconditional};
use crate::distributions::coeffs;
use crate::error::Result;
use crate::system::{BasisMap, StateSpec, SystemParams};

/// Weighted sum of postselected lifetimes over a complete pair `{Φ, Φ⊥}`
/// against the unconditional lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    /// `Σ_k |⟨Φ_k|Ψ⟩|² τ(Ψ→Φ_k)`
    pub lhs: f64,
    /// `τ(Ψ)`
    pub rhs: f64,
    /// `|lhs - rhs| / rhs`
    pub deviation: f64,
}

/// Holds to first order in `ΔM/Γ` and `ΔΓ/Γ`. Branches with zero overlap
/// contribute nothing but must still have a nonzero norm integral.
pub fn sum_rule_check(
    sys: &SystemParams,
    basis: &BasisMap,
    pre: &StateSpec,
    post: &StateSpec,
) -> Result<SumRule> {
    let rhs = lifetime_unconditional(sys, basis, pre)?;
    let mut lhs = 0.0;
    for phi in [*post, post.orthogonal()] {
        let weight = phi.inner(pre).norm_sqr();
        let c = coeffs(pre, &phi, basis)?;
        lhs += weight * lifetime_conditional(sys, &c)?;
    }
    Ok(SumRule {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs() / rhs,
    })
}
