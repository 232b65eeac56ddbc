//! Boundedness of holonomy Jacobi fields: the Ω-subspace of parallel
//! holonomy fields, recurrence of `exp(tX)` to the identity, the return of
//! Ω under transport, and growth audits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::biquotient::{BiquotientSpec, HolonomyGeodesic};
use crate::error::{Error, Result};
use crate::jacobi::{AdSquaredDecomposition, ClosedFormJacobiField};
use crate::linalg;
use crate::liegroup::{AlgebraElement, GroupElement, OneParameterSubgroup};
use crate::sampling::{gaussian_vector, rng_from_seed};

/// Singular-value threshold defining the numerical kernel.
pub const KERNEL_TOL: f64 = 1e-9;
/// Coupling between the recurrence tolerance and the Ω-return angle.
pub const RETURN_COUPLING: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct OmegaSubspace {
    pub geodesic: HolonomyGeodesic,
    /// Orthonormal basis of Ω (left coordinates at the base point).
    pub basis: Vec<DVector<f64>>,
    /// Orthonormal basis of the vertical complement of Ω.
    pub complement: Vec<DVector<f64>>,
    /// max ‖[X, w]‖ over the basis.
    pub commutator_residual: f64,
    /// max ‖J′(0; w)‖ over the basis.
    pub derivative_residual: f64,
}

impl OmegaSubspace {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    /// max over the basis and `samples` times in `[0, t_max]` of
    /// `‖J(t) − P_t w‖`, with `P_t` parallel transport.
    pub fn transport_residual(&self, t_max: f64, samples: usize) -> Result<f64> {
        let d = self.geodesic.decomposition();
        let mut worst: f64 = 0.0;
        for w in &self.basis {
            let field = self.geodesic.field_coords(w)?;
            for k in 0..samples.max(2) {
                let t = t_max * k as f64 / (samples.max(2) - 1) as f64;
                worst = worst.max((field.jacobi_value(t) - d.transport(t, w)).norm());
            }
        }
        Ok(worst)
    }
}

/// Kernel of `v ↦ ([X, v], J′(0; v))` on the vertical space at `g`.
pub fn omega_subspace(spec: &Arc<BiquotientSpec>, g: &GroupElement, x: &AlgebraElement) -> Result<OmegaSubspace> {
    let geodesic = HolonomyGeodesic::new(spec, g, x)?;
    omega_of(geodesic)
}

pub fn omega_of(geodesic: HolonomyGeodesic) -> Result<OmegaSubspace> {
    let group = geodesic.spec().group().clone();
    let n = group.algebra_dim();
    let vertical = geodesic.frame().vectors.clone();
    let k = vertical.len();
    let x = geodesic.direction().coords().clone();

    let (basis, complement) = if k == 0 {
        (Vec::new(), Vec::new())
    } else {
        let mut m = DMatrix::zeros(2 * n, k);
        for (j, v) in vertical.iter().enumerate() {
            m.view_mut((0, j), (n, 1)).copy_from(&group.bracket_coords(&x, v));
            m.view_mut((n, j), (n, 1)).copy_from(&geodesic.initial_derivative(v));
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let mut kernel = Vec::new();
        let mut image = Vec::new();
        for (i, s) in svd.singular_values.iter().enumerate() {
            let coeffs = v_t.row(i).transpose();
            let w = vertical
                .iter()
                .zip(coeffs.iter())
                .fold(DVector::zeros(n), |acc, (v, c)| acc + v * *c);
            if *s < KERNEL_TOL {
                kernel.push(w);
            } else {
                image.push(w);
            }
        }
        (linalg::orthonormalize(&kernel, 1e-12), linalg::orthonormalize(&image, 1e-12))
    };

    let mut commutator_residual: f64 = 0.0;
    let mut derivative_residual: f64 = 0.0;
    for w in &basis {
        commutator_residual = commutator_residual.max(group.bracket_coords(&x, w).norm());
        derivative_residual = derivative_residual.max(geodesic.initial_derivative(w).norm());
    }
    Ok(OmegaSubspace {
        geodesic,
        basis,
        complement,
        commutator_residual,
        derivative_residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceSequence {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl RecurrenceSequence {
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }
}

/// Minimizes `‖exp(tX) − I‖` on `[a, b]`: bisection on the sign of the
/// derivative of its square when it brackets, golden section otherwise.
fn refine_minimum(flow: &OneParameterSubgroup, mut a: f64, mut b: f64) -> f64 {
    let d = |t: f64| flow.identity_residual_sq_derivative(t);
    if d(a) <= 0.0 && d(b) >= 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if d(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let (ra, rb) = (flow.identity_residual(a), flow.identity_residual(b));
        return if ra <= rb { a } else { b };
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| flow.identity_residual(t);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    for _ in 0..200 {
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        e = a + phi * (b - a);
        if b - a < 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Times in `(0, t_max]` at which `‖exp(tX) − I‖` has a local minimum
/// below `epsilon`.
///
/// The residual is 1-Lipschitz in `t` for unit `X`, so the scan advances by
/// `max(step, r − ε)` without skipping any sub-ε point.
pub fn recurrence_times(x: &AlgebraElement, epsilon: f64, t_max: f64, step: f64) -> Result<RecurrenceSequence> {
    recurrence_times_limited(x, epsilon, t_max, step, None)
}

/// As [`recurrence_times`], stopping after `limit` times when given.
pub fn recurrence_times_limited(
    x: &AlgebraElement,
    epsilon: f64,
    t_max: f64,
    step: f64,
    limit: Option<usize>,
) -> Result<RecurrenceSequence> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if !(epsilon > 0.0) || !(step > 0.0) || step > 0.5 * epsilon {
        return Err(Error::InvalidArgument(format!(
            "need epsilon > 0 and 0 < step <= epsilon/2 (epsilon {epsilon}, step {step})"
        )));
    }
    x.check_unit()?;
    let flow = OneParameterSubgroup::new(x);
    let r = |t: f64| flow.identity_residual(t);

    let mut times: Vec<f64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    // window of the last three scanned points
    let mut prev2: Option<(f64, f64)> = None;
    let mut prev1 = (0.0, 0.0);
    let mut t = 0.0;
    while t < t_max {
        if limit.is_some_and(|l| times.len() >= l) {
            break;
        }
        let advance = step.max(prev1.1 - epsilon);
        t = (t + advance).min(t_max);
        let cur = (t, r(t));
        if let Some(p2) = prev2 {
            if prev1.1 <= p2.1 && prev1.1 <= cur.1 && prev1.1 < epsilon + step {
                let tm = refine_minimum(&flow, p2.0, cur.0);
                let rm = r(tm);
                if rm < epsilon && tm > 0.0 {
                    match times.last() {
                        Some(&last) if tm - last < 0.5 * step => {
                            let i = times.len() - 1;
                            if rm < residuals[i] {
                                times[i] = tm;
                                residuals[i] = rm;
                            }
                        }
                        _ => {
                            times.push(tm);
                            residuals.push(rm);
                        }
                    }
                }
            }
        }
        prev2 = Some(prev1);
        prev1 = cur;
    }
    Ok(RecurrenceSequence {
        epsilon,
        times,
        residuals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaReturnReport {
    /// Ω trivial: nothing to check.
    pub vacuous: bool,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub angles: Vec<f64>,
    pub max_angle: f64,
    pub passed: bool,
}

fn flatten(m: &DMatrix<Complex64>) -> DVector<f64> {
    let mut out = DVector::zeros(2 * m.len());
    for (i, z) in m.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
    out
}

/// Largest principal angle between Ω transported to `γ(t)` and Ω at `γ(0)`,
/// comparing the translated-back ambient vectors `exp(tX)·W(t)` with `w`.
pub fn omega_angle(omega: &OmegaSubspace, t: f64) -> f64 {
    let group = omega.geodesic.spec().group();
    let d: &AdSquaredDecomposition = omega.geodesic.decomposition();
    let at_t = d.flow().matrix_at(t);
    let moved: Vec<DVector<f64>> = omega
        .basis
        .iter()
        .map(|w| flatten(&(&at_t * group.realize(&d.transport(t, w)))))
        .collect();
    let fixed: Vec<DVector<f64>> = omega.basis.iter().map(|w| flatten(&group.realize(w))).collect();
    let a = linalg::orthonormalize(&moved, 1e-12);
    let b = linalg::orthonormalize(&fixed, 1e-12);
    linalg::max_principal_angle(&a, &b)
}

pub fn omega_return(omega: &OmegaSubspace, sequence: &RecurrenceSequence) -> Result<OmegaReturnReport> {
    if omega.is_trivial() {
        return Ok(OmegaReturnReport {
            vacuous: true,
            epsilon: sequence.epsilon,
            times: sequence.times.clone(),
            angles: Vec::new(),
            max_angle: 0.0,
            passed: true,
        });
    }
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("recurrence sequence is empty".into()));
    }
    let angles: Vec<f64> = sequence.times.iter().map(|&t| omega_angle(omega, t)).collect();
    let max_angle = angles.iter().cloned().fold(0.0, f64::max);
    Ok(OmegaReturnReport {
        vacuous: false,
        epsilon: sequence.epsilon,
        times: sequence.times.clone(),
        angles,
        max_angle,
        passed: max_angle <= RETURN_COUPLING * sequence.epsilon,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldAudit {
    pub generator: usize,
    pub initial_norm: f64,
    pub f0_norm: f64,
    pub sup_norm: f64,
    /// `Σ|c_a|(‖P_a‖ + ‖Q_a‖)` for the field's generator combination.
    pub bound: f64,
    /// Least-squares slope of `‖J(t)‖` over `[T/2, T]`.
    pub slope: f64,
    /// sup over the samples of the route A/route B discrepancy.
    pub route_discrepancy: f64,
    #[serde(skip)]
    pub profile: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub t_max: f64,
    pub samples: usize,
    pub fields: Vec<FieldAudit>,
    pub omega_rank: usize,
    /// max |⟨J′(0; v), w⟩| for v ∈ Ω^⊥ (vertical), w ∈ Ω.
    pub perp_inner: f64,
    pub max_f0: f64,
    pub max_abs_slope: f64,
    /// min over fields of sup‖J‖ / bound.
    pub min_sup_ratio: f64,
    pub passed: bool,
}

fn sample_times(t_max: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|k| t_max * k as f64 / (samples - 1) as f64)
        .collect()
}

/// Slope of a profile restricted to `t ≥ t_max / 2`.
pub fn window_slope(profile: &[(f64, f64)], t_max: f64) -> f64 {
    let (ts, ys): (Vec<f64>, Vec<f64>) = profile.iter().filter(|(t, _)| *t >= 0.5 * t_max).cloned().unzip();
    linalg::least_squares_slope(&ts, &ys)
}

/// Audits the holonomy field of each generator's action field along
/// `g·exp(tX)`.
pub fn boundedness_audit(
    spec: &Arc<BiquotientSpec>,
    g: &GroupElement,
    x: &AlgebraElement,
    t_max: f64,
    samples: usize,
) -> Result<AuditReport> {
    if samples < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: samples });
    }
    let omega = omega_subspace(spec, g, x)?;
    let geo = &omega.geodesic;
    let ts = sample_times(t_max, samples);

    let mut fields = Vec::with_capacity(geo.frame().raw.len());
    for (a, v) in geo.frame().raw.iter().enumerate() {
        let field = geo.field_coords(v)?;
        let mut profile = Vec::with_capacity(samples);
        let mut route_discrepancy: f64 = 0.0;
        for &t in &ts {
            let b = field.jacobi_value(t);
            route_discrepancy = route_discrepancy.max((field.action_value(t) - &b).norm());
            profile.push((t, b.norm()));
        }
        let sup_norm = profile.iter().map(|p| p.1).fold(0.0, f64::max);
        fields.push(FieldAudit {
            generator: a,
            initial_norm: v.norm(),
            f0_norm: field.linear_growth_norm(),
            sup_norm,
            bound: field.norm_bound(),
            slope: window_slope(&profile, t_max),
            route_discrepancy,
            profile,
        });
    }

    let mut perp_inner: f64 = 0.0;
    for v in &omega.complement {
        let jp = geo.initial_derivative(v);
        for w in &omega.basis {
            perp_inner = perp_inner.max(jp.dot(w).abs());
        }
    }

    let max_f0 = fields.iter().map(|f| f.f0_norm).fold(0.0, f64::max);
    let max_abs_slope = fields.iter().map(|f| f.slope.abs()).fold(0.0, f64::max);
    let min_sup_ratio = fields
        .iter()
        .map(|f| f.sup_norm / f.bound)
        .fold(f64::INFINITY, f64::min);
    let within_bound = fields.iter().all(|f| f.sup_norm <= f.bound * (1.0 + 1e-9));
    let passed = max_f0 < 1e-9 && max_abs_slope < 1e-6 && perp_inner < 1e-10 && within_bound;
    Ok(AuditReport {
        t_max,
        samples,
        fields,
        omega_rank: omega.rank(),
        perp_inner,
        max_f0,
        max_abs_slope,
        min_sup_ratio,
        passed,
    })
}

/// A Jacobi field along `exp(tX)` with prescribed linear-growth coefficient
/// `F₀ = f0_norm · w`, `w ∈ V₀` a seeded unit vector, plus seeded bounded
/// components. Not a holonomy field; a control for the slope law.
pub fn synthetic_growth_field(
    decomposition: &Arc<AdSquaredDecomposition>,
    f0_norm: f64,
    seed: u64,
) -> ClosedFormJacobiField {
    let mut rng = rng_from_seed(seed);
    let n = decomposition.direction().coords().len();
    let mut e = Vec::new();
    let mut f = Vec::new();
    for (i, s) in decomposition.spaces().iter().enumerate() {
        let pe = s.project(&gaussian_vector(n, &mut rng));
        let pf = s.project(&gaussian_vector(n, &mut rng));
        if i == 0 {
            let pf = if pf.norm() > 0.0 { pf.normalize() } else { decomposition.direction().coords().clone() };
            e.push(pe);
            f.push(pf * f0_norm);
        } else {
            e.push(pe);
            f.push(pf);
        }
    }
    ClosedFormJacobiField::from_coefficients(decomposition, e, f).expect("one coefficient per eigenspace")
}

#[derive(Clone, Debug, Serialize)]
pub struct SyntheticSlopeReport {
    pub f0_norm: f64,
    pub fitted_slope: f64,
    pub t_max: f64,
    pub passed: bool,
}

/// Fits the growth slope of [`synthetic_growth_field`] over `[T/2, T]`.
pub fn synthetic_slope(
    x: &AlgebraElement,
    f0_norm: f64,
    t_max: f64,
    samples: usize,
    seed: u64,
) -> Result<SyntheticSlopeReport> {
    if samples < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: samples });
    }
    let d = Arc::new(crate::jacobi::decompose(x)?);
    let field = synthetic_growth_field(&d, f0_norm, seed);
    let profile: Vec<(f64, f64)> = sample_times(t_max, samples)
        .into_iter()
        .map(|t| (t, field.evaluate_coords(t).norm()))
        .collect();
    let fitted_slope = window_slope(&profile, t_max);
    Ok(SyntheticSlopeReport {
        f0_norm,
        fitted_slope,
        t_max,
        passed: (fitted_slope - f0_norm).abs() <= 1e-2 * f0_norm,
    })
}
