//! A twisted product submersion `T² × S¹ → T²` with non-compact holonomy.
//!
//! The base is the flat torus with constant unit field `X = ∂/∂x₁`, the fiber
//! the circle with field `Y(θ) = sin θ ∂θ`. The holonomy along a base path
//! flows along `Y` for time `T = ∫ μ̄(⟨γ′, X⟩)`. Along a unit-speed geodesic
//! at angle `φ` to `X` the integrand is the constant `μ̄(cos φ)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// `μ(s) = exp(−1/s)` for `s > 0`, `0` otherwise.
pub fn mu(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Odd extension of [`mu`].
pub fn mu_bar(s: f64) -> f64 {
    if s >= 0.0 {
        mu(s)
    } else {
        -mu(-s)
    }
}

/// `Y(θ) = sin θ`.
pub fn fiber_field(theta: f64) -> f64 {
    theta.sin()
}

/// Rate `μ̄(cos φ)` at which holonomy time accrues along a geodesic at angle
/// `φ` to `X`.
pub fn holonomy_rate(phi: f64) -> f64 {
    mu_bar(phi.cos())
}

pub fn holonomy_time(phi: f64, t: f64) -> f64 {
    t * holonomy_rate(phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolonomyFlow {
    pub time: f64,
    pub theta0: f64,
    pub theta: f64,
    /// `dθ_T / dθ₀`.
    pub derivative: f64,
}

/// Flow of `θ′ = sin θ` for time `T`, in closed form:
/// `tan(θ_T/2) = e^T tan(θ₀/2)`.
pub fn flow_y(theta0: f64, time: f64) -> HolonomyFlow {
    // reduce to (−π, π] so the half-angle form is single-valued
    let k = ((theta0 + PI) / (2.0 * PI)).ceil() - 1.0;
    let reduced = theta0 - 2.0 * PI * k;
    let grow = time.exp();
    if reduced == PI {
        return HolonomyFlow {
            time,
            theta0,
            theta: theta0,
            derivative: (-time).exp(),
        };
    }
    let (s, c) = (0.5 * reduced).sin_cos();
    let theta = 2.0 * (grow * s).atan2(c) + 2.0 * PI * k;
    // e^T / (cos² + e^{2T} sin²), written to avoid overflow for large |T|
    let derivative = if time >= 0.0 {
        let inv = (-time).exp();
        1.0 / (c * c * inv + s * s * grow)
    } else {
        grow / (c * c + s * s * grow * grow)
    };
    HolonomyFlow {
        time,
        theta0,
        theta,
        derivative,
    }
}

/// RK4 integration of `θ′ = r sin θ`, `δ′ = r cos θ · δ` from `(θ₀, 1)`;
/// returns `(θ, δ)` at time `t`.
pub fn integrate_variational(rate: f64, theta0: f64, t: f64, steps: usize) -> (f64, f64) {
    let h = t / steps as f64;
    let f = |th: f64, d: f64| (rate * th.sin(), rate * th.cos() * d);
    let (mut th, mut d) = (theta0, 1.0);
    for _ in 0..steps {
        let k1 = f(th, d);
        let k2 = f(th + 0.5 * h * k1.0, d + 0.5 * h * k1.1);
        let k3 = f(th + 0.5 * h * k2.0, d + 0.5 * h * k2.1);
        let k4 = f(th + h * k3.0, d + h * k3.1);
        th += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        d += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (th, d)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSample {
    pub t: f64,
    pub theta: f64,
    pub norm_j: f64,
    /// `exp(|r| t)`.
    pub predicted: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSeries {
    pub phi: f64,
    /// `μ̄(cos φ)`.
    pub rate: f64,
    /// Start of the lift in the fiber: the fixed point that repels under the
    /// flow direction (0 for positive rate, π for negative).
    pub theta0: f64,
    /// `false` when the rate vanishes and the holonomy is trivial.
    pub grows: bool,
    pub samples: Vec<GrowthSample>,
    /// max over samples of `|‖J‖/predicted − 1|`.
    pub max_relative_error: f64,
    /// `|J(t₂)|/|J(t₁)| ≥ exp((t₂ − t₁)|r|/2)` on consecutive samples.
    pub unbounded_witness: bool,
}

const SUBSTEPS_PER_UNIT: f64 = 200.0;

/// Holonomy Jacobi field along the horizontal lift of the geodesic at angle
/// `φ` through the repelling fiber fixed point: `|J(t)| = exp(|μ̄(cos φ)| t)`.
pub fn holonomy_jacobi_growth(phi: f64, t_max: f64, samples: usize) -> Result<GrowthSeries> {
    if samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples });
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    let rate = holonomy_rate(phi);
    let theta0 = if rate < 0.0 { PI } else { 0.0 };
    let mut out = Vec::with_capacity(samples);
    let (mut th, mut d) = (theta0, 1.0);
    let mut t_prev = 0.0;
    for k in 0..samples {
        let t = t_max * k as f64 / (samples - 1) as f64;
        let dt = t - t_prev;
        if dt > 0.0 {
            let steps = ((dt * SUBSTEPS_PER_UNIT).ceil() as usize).max(1);
            let (nt, nd) = integrate_variational(rate, th, dt, steps);
            // continue the variational equation from the current scale
            th = nt;
            d *= nd;
        }
        t_prev = t;
        out.push(GrowthSample {
            t,
            theta: th,
            norm_j: d.abs(),
            predicted: (rate.abs() * t).exp(),
        });
    }
    let max_relative_error = out
        .iter()
        .map(|s| (s.norm_j / s.predicted - 1.0).abs())
        .fold(0.0, f64::max);
    let grows = rate != 0.0;
    let unbounded_witness = grows
        && out.windows(2).all(|w| {
            w[1].norm_j / w[0].norm_j >= ((w[1].t - w[0].t) * rate.abs() / 2.0).exp()
        });
    Ok(GrowthSeries {
        phi,
        rate,
        theta0,
        grows,
        samples: out,
        max_relative_error,
        unbounded_witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub time: f64,
    pub samples: usize,
    /// max over the θ₀ grid of `|dθ_T/dθ₀|`.
    pub estimate: f64,
    /// max over the grid of `|Φ_{T₂}(Φ_{T₁}(θ₀)) − Φ_{T₁+T₂}(θ₀)|` with
    /// `T₁ = T₂ = T/2`.
    pub group_law_residual: f64,
}

/// Grid `θ₀ = −π + 2πk/n`, which contains 0 for even `n`; 0 is added
/// otherwise.
fn theta_grid(samples: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..samples)
        .map(|k| -PI + 2.0 * PI * k as f64 / samples as f64)
        .collect();
    if !g.contains(&0.0) {
        g.push(0.0);
    }
    g
}

pub fn lipschitz_estimate(time: f64, samples: usize) -> Result<LipschitzReport> {
    if samples < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: samples });
    }
    let grid = theta_grid(samples);
    let estimate = grid
        .iter()
        .map(|&th| flow_y(th, time).derivative.abs())
        .fold(0.0, f64::max);
    let half = 0.5 * time;
    let group_law_residual = grid
        .iter()
        .map(|&th| group_law_residual(th, half, half))
        .fold(0.0, f64::max);
    Ok(LipschitzReport {
        time,
        samples,
        estimate,
        group_law_residual,
    })
}

/// `|Φ_{T₂}(Φ_{T₁}(θ₀)) − Φ_{T₁+T₂}(θ₀)|`.
pub fn group_law_residual(theta0: f64, t1: f64, t2: f64) -> f64 {
    let composed = flow_y(flow_y(theta0, t1).theta, t2).theta;
    (composed - flow_y(theta0, t1 + t2).theta).abs()
}

/// Fiber velocity of the lift of a unit-speed path with direction angle `φ`,
/// read off the twisted horizontal distribution
/// `{(A,0) | A ⊥ X} ⊕ span{(X, μ(|X|)·Y)}`: `cos φ · μ(1) · sin θ`.
pub fn distribution_fiber_velocity(phi: f64, theta: f64) -> f64 {
    phi.cos() * mu(1.0) * fiber_field(theta)
}

/// Fiber velocity implied by the holonomy-time formula: `μ̄(cos φ) sin θ`.
pub fn holonomy_fiber_velocity(phi: f64, theta: f64) -> f64 {
    holonomy_rate(phi) * fiber_field(theta)
}

/// Lifts the geodesic at angle `φ` through the distribution (RK4 on the
/// fiber coordinate), differentiates the fiber coordinate by central
/// differences at `t`, and compares with the holonomy-time velocity.
pub fn lift_consistency(phi: f64, theta0: f64, t: f64) -> f64 {
    let rate = phi.cos() * mu(1.0);
    let h = 1e-4;
    let steps = ((t.abs() * SUBSTEPS_PER_UNIT).ceil() as usize).max(1);
    let at = |s: f64| integrate_variational(rate, theta0, s, steps).0;
    let numeric = (at(t + h) - at(t - h)) / (2.0 * h);
    (numeric - holonomy_fiber_velocity(phi, at(t))).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, FRAC_PI_2};

    #[test]
    fn mu_values() {
        assert_eq!(mu(0.0), 0.0);
        assert_eq!(mu(-1.0), 0.0);
        assert_eq!(mu(1.0), (-1.0f64).exp());
        assert_eq!(mu_bar(-1.0), -mu(1.0));
    }

    /// One-sided finite differences of orders 1..3 at 0 vanish.
    #[test]
    fn mu_flat_at_zero() {
        let h = 0.01;
        let f = |k: f64| mu(k * h);
        let d1 = (f(1.0) - f(0.0)) / h;
        let d2 = (f(2.0) - 2.0 * f(1.0) + f(0.0)) / (h * h);
        let d3 = (f(3.0) - 3.0 * f(2.0) + 3.0 * f(1.0) - f(0.0)) / (h * h * h);
        let l1 = (f(0.0) - f(-1.0)) / h;
        for d in [d1, d2, d3, l1] {
            assert!(d.abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn holonomy_time_examples() {
        assert_eq!(holonomy_time(FRAC_PI_2, 7.0), 0.0);
        assert!((holonomy_time(0.0, 10.0) - 10.0 / E).abs() < 1e-14);
        for phi in [0.1, 0.7, 1.2, 2.5] {
            let (a, b) = (holonomy_time(phi, 3.0), holonomy_time(PI - phi, 3.0));
            assert!((a + b).abs() < 1e-14 * a.abs());
        }
        // additivity
        let (a, b) = (holonomy_time(0.3, 2.0), holonomy_time(0.3, 5.0));
        assert!((a + b - holonomy_time(0.3, 7.0)).abs() < 1e-14);
    }

    #[test]
    fn flow_examples() {
        for t in [0.0, 1.0, 10.0, -3.0] {
            let f = flow_y(0.0, t);
            assert_eq!(f.theta, 0.0);
            assert!((f.derivative / t.exp() - 1.0).abs() < 1e-14);
            let f = flow_y(PI, t);
            assert_eq!(f.theta, PI);
            assert!((f.derivative / (-t).exp() - 1.0).abs() < 1e-14);
        }
        let f = flow_y(FRAC_PI_2, 1.0);
        assert!((f.theta - 2.0 * E.atan()).abs() < 1e-15);
        assert!((f.theta - 2.436_565_810_034_555).abs() < 1e-14);
    }

    #[test]
    fn flow_matches_ode() {
        for th in [-3.0, -1.0, 0.2, 1.5, 2.9, 7.0] {
            for t in [0.5, 2.0, 6.0] {
                let f = flow_y(th, t);
                let (ode_theta, ode_d) = integrate_variational(1.0, th, t, 4000);
                assert!((f.theta - ode_theta).abs() < 1e-10, "{th} {t}");
                assert!((f.derivative - ode_d).abs() < 1e-9 * f.derivative.max(1.0));
            }
        }
    }

    #[test]
    fn derivative_identity() {
        for th in [-2.5, -0.4, 0.3, 1.0, 2.0] {
            for t in [0.5, 3.0, 8.0] {
                let f = flow_y(th, t);
                let ratio = fiber_field(f.theta) / fiber_field(th);
                assert!((f.derivative - ratio).abs() < 1e-8 * ratio.abs().max(1.0));
            }
        }
    }

    #[test]
    fn growth_along_x() {
        let s = holonomy_jacobi_growth(0.0, 50.0, 51).unwrap();
        assert!(s.grows && s.unbounded_witness);
        assert!(s.max_relative_error < 1e-2);
        let at20 = &s.samples[20];
        let exact = (20.0 / E).exp();
        assert!((at20.norm_j / exact - 1.0).abs() < 1e-9, "{}", at20.norm_j);
        assert!((at20.norm_j / 1568.6 - 1.0).abs() < 1e-2);
        assert!((s.rate - (-1.0f64).exp()).abs() < 1e-15);

        let flat = holonomy_jacobi_growth(FRAC_PI_2, 50.0, 51).unwrap();
        assert!(!flat.grows);
        assert!(flat.samples.iter().all(|s| s.norm_j == 1.0));

        let back = holonomy_jacobi_growth(PI, 30.0, 31).unwrap();
        assert!(back.grows && back.theta0 == PI && back.max_relative_error < 1e-2);
    }

    #[test]
    fn lipschitz_examples() {
        let r = lipschitz_estimate(0.0, 16).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-15);
        let r = lipschitz_estimate(5.0, 64).unwrap();
        assert!(r.estimate >= 0.99 * 5f64.exp());
        assert!(r.group_law_residual < 1e-10);
        assert!(lipschitz_estimate(1.0, 9).is_err());
        let mut last = 0.0;
        for t in [1.0, 2.0, 4.0, 8.0] {
            let e = lipschitz_estimate(t, 11).unwrap().estimate;
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn lift_consistency_on_axis_angles() {
        for phi in [0.0, FRAC_PI_2, PI] {
            for th in [0.3, 1.7, -2.0] {
                assert!(lift_consistency(phi, th, 2.0) < 1e-8, "{phi} {th}");
            }
        }
    }

    /// Off the coordinate axes the distribution's lift rate `cos φ · μ(1)`
    /// and `μ̄(cos φ)` differ.
    #[test]
    fn lift_rates_differ_off_axis() {
        let phi = PI / 3.0;
        let d = distribution_fiber_velocity(phi, 1.0) - holonomy_fiber_velocity(phi, 1.0);
        assert!(d.abs() > 1e-2);
    }

    proptest! {
        #[test]
        fn mu_bar_odd(s in -50.0f64..50.0) {
            prop_assert_eq!(mu_bar(-s), -mu_bar(s));
        }

        #[test]
        fn group_law(th in -10.0f64..10.0, t1 in -4.0f64..4.0, t2 in -4.0f64..4.0) {
            prop_assert!(group_law_residual(th, t1, t2) < 1e-10);
        }

        #[test]
        fn fixed_points_preserved(t in -20.0f64..20.0) {
            prop_assert_eq!(flow_y(0.0, t).theta, 0.0);
            prop_assert_eq!(flow_y(PI, t).theta, PI);
        }
    }
}
