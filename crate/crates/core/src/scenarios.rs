//! Reproducible random configurations for property checks and oracles.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::lifetime::RegimeConfig;
use crate::rng::{self, Stream};
use crate::system::{BasisMap, PostselectParams, StateSpec, SystemParams};

/// A full configuration: system, basis, preselected and postselected states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub sys: SystemParams,
    pub basis: BasisMap,
    pub pre: StateSpec,
    pub post: StateSpec,
}

fn log_uniform(s: &mut Stream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng::uniform(s)).exp()
}

fn unit_pair(s: &mut Stream) -> (Complex64, Complex64) {
    let a = (0.05 + 0.9 * rng::uniform(s)).sqrt();
    let b = (1.0 - a * a).sqrt();
    (
        Complex64::from_polar(a, TAU * rng::uniform(s)),
        Complex64::from_polar(b, TAU * rng::uniform(s)),
    )
}

/// `ΔM/Γ` log-uniform on `[1e-3, 1e2]`, `k` log-uniform on `[1e-2, 1e2]`,
/// `Γ` log-uniform on `[0.1, 10]`.
pub fn random_system(s: &mut Stream) -> SystemParams {
    let e = log_uniform(s, 1e-3, 1e2);
    let k = log_uniform(s, 1e-2, 1e2);
    let g = log_uniform(s, 0.1, 10.0);
    let m = 10.0 * rng::uniform(s);
    let gl = 2.0 * g / (1.0 + k);
    SystemParams::new(m, m + e * g, gl, k * gl).expect("valid by construction")
}

/// General basis with `|det| ≥ 0.2`, random pre and post states.
pub fn random_scenario(s: &mut Stream) -> Scenario {
    let sys = random_system(s);
    let basis = loop {
        let (p1, q1) = unit_pair(s);
        let (p2, q2) = unit_pair(s);
        if let Ok(b) = BasisMap::new(p1, q1, p2, q2) {
            if b.determinant().norm() >= 0.2 {
                break b;
            }
        }
    };
    let (a, b) = unit_pair(s);
    let (c, d) = unit_pair(s);
    Scenario {
        sys,
        basis,
        pre: StateSpec::normalized(a, b).expect("unit"),
        post: StateSpec::normalized(c, d).expect("unit"),
    }
}

/// Symmetric basis, `Ψ = |P⟩`, post from [`PostselectParams`].
pub fn random_restricted(s: &mut Stream) -> (RegimeConfig, PostselectParams) {
    let e = log_uniform(s, 1e-3, 1e3);
    let k = log_uniform(s, 1e-3, 1e3);
    let b = 0.001 + 0.998 * rng::uniform(s);
    let theta = TAU * rng::uniform(s);
    (
        RegimeConfig::new(e, k).expect("valid"),
        PostselectParams::new(b, theta).expect("valid"),
    )
}

/// Scenario `i` is drawn from stream `seed ^ i`.
pub fn scenarios(seed: u64, n: usize) -> Vec<Scenario> {
    (0..n)
        .map(|i| random_scenario(&mut rng::stream(seed ^ i as u64)))
        .collect()
}

pub fn restricted_draws(seed: u64, n: usize) -> Vec<(RegimeConfig, PostselectParams)> {
    let mut s = rng::stream(seed);
    (0..n).map(|_| random_restricted(&mut s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = scenarios(1, 20);
        assert_eq!(a, scenarios(1, 20));
        for sc in &a {
            assert!(sc.basis.determinant().norm() >= 0.2);
            assert!(sc.sys.gamma() > 0.0);
        }
    }
}
