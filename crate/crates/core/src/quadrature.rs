//! Adaptive Gauss–Kronrod quadrature used as an independent oracle for the
//! closed-form integrals.
//!
//! Integrands here are damped oscillations `e^{-Γt} cos(ΔM t)` plus slow
//! exponentials. [`integrate_decay`] cuts `[0, t_max]` at half-periods of the
//! oscillation while it is still visible, switches to geometric panels after
//! that, and reports a certified bound on the discarded tail.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Accumulated |Kronrod - Gauss| over accepted panels.
    pub error: f64,
    /// Bound on the integral beyond the truncation point (zero for finite intervals).
    pub tail_bound: f64,
    pub evaluations: usize,
}

/// `(kronrod, |kronrod - gauss|, ∫|f| estimate)` on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, acc: &mut QuadResult) {
    let (k, err, _) = gk15(f, a, b);
    acc.evaluations += 15;
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= 1e-15 * a.abs().max(b.abs()) {
        acc.value += k;
        acc.error += err;
        return;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1, acc);
    adapt(f, m, b, 0.5 * tol, depth + 1, acc);
}

/// Adaptive integration over a list of panel breakpoints. The absolute
/// tolerance is `rel_tol` times a first-pass estimate of `∫|f|`, shared
/// among panels in proportion to their width.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64) -> QuadResult {
    let mut acc = QuadResult {
        value: 0.0,
        error: 0.0,
        tail_bound: 0.0,
        evaluations: 0,
    };
    if breaks.len() < 2 {
        return acc;
    }
    let width = breaks[breaks.len() - 1] - breaks[0];
    let scale: f64 = breaks.windows(2).map(|w| gk15(&f, w[0], w[1]).2).sum();
    acc.evaluations += 15 * (breaks.len() - 1);
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    for w in breaks.windows(2) {
        let share = tol * (w[1] - w[0]) / width;
        adapt(&f, w[0], w[1], share, 0, &mut acc);
    }
    acc
}

/// Adaptive integration on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> QuadResult {
    integrate_panels(f, &[a, b], rel_tol)
}

/// Shape information for a damped-oscillation integrand on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayIntegrand {
    /// Average width Γ, the damping rate of the oscillating term.
    pub gamma: f64,
    /// Slowest width; sets the truncation point.
    pub gamma_min: f64,
    pub delta_m: f64,
    /// `C` with `|f(t)| ≤ C t^power e^{-Γ_min t}`.
    pub envelope: f64,
    /// Power of `t` in the envelope (0 for densities, 1 for first moments).
    pub power: u32,
}

impl DecayIntegrand {
    /// `50 / Γ_min`.
    pub fn t_max(&self) -> f64 {
        50.0 / self.gamma_min
    }

    /// `∫_{T}^∞ C t^p e^{-gT}`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let g = self.gamma_min;
        let e = self.envelope * (-g * t).exp();
        match self.power {
            0 => e / g,
            _ => e * (t / g + 1.0 / (g * g)),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let t_max = self.t_max();
        let mut breaks = vec![0.0];
        // half-periods while e^{-Γt} is non-negligible
        let osc_end = (60.0 / self.gamma).min(t_max);
        if self.delta_m > 0.0 {
            let half = std::f64::consts::PI / self.delta_m;
            let n = (osc_end / half).floor() as usize;
            breaks.extend((1..=n.min(2_000_000)).map(|i| i as f64 * half));
        }
        let mut t = *breaks.last().unwrap();
        if t < osc_end {
            t = osc_end;
            breaks.push(t);
        }
        let mut step = 1.0 / self.gamma;
        while t < t_max {
            t = (t + step).min(t_max);
            breaks.push(t);
            step *= 1.5;
        }
        breaks
    }
}

/// `∫₀^∞ f` to `rel_tol`, truncated at [`DecayIntegrand::t_max`].
pub fn integrate_decay<F: Fn(f64) -> f64>(f: F, shape: &DecayIntegrand, rel_tol: f64) -> QuadResult {
    let breaks = shape.breakpoints();
    let mut r = integrate_panels(f, &breaks, rel_tol);
    r.tail_bound = shape.tail_bound(*breaks.last().unwrap());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r.value, 64.0 / 6.0 - 4.0, max_relative = 1e-14);
    }

    #[test]
    fn damped_oscillation() {
        let (g, w) = (0.7, 40.0);
        let shape = DecayIntegrand {
            gamma: g,
            gamma_min: g,
            delta_m: w,
            envelope: 1.0,
            power: 0,
        };
        let r = integrate_decay(|t| (-g * t).exp() * (w * t).cos(), &shape, 1e-12);
        assert_relative_eq!(r.value, g / (g * g + w * w), max_relative = 1e-10);
        assert!(r.tail_bound < 1e-20);
    }

    #[test]
    fn slow_exponential_moment() {
        let g = 2e-3;
        let shape = DecayIntegrand {
            gamma: 1.0,
            gamma_min: g,
            delta_m: 0.0,
            envelope: 1.0,
            power: 1,
        };
        let r = integrate_decay(|t| t * (-g * t).exp(), &shape, 1e-12);
        assert_relative_eq!(r.value, 1.0 / (g * g), max_relative = 1e-10);
    }
}
