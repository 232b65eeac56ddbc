//! Jacobi fields along geodesics `t ↦ exp(tX)` of a bi-invariant metric.
//!
//! The algebra splits into eigenspaces `Vᵢ` of `(ad_X)²` with eigenvalues
//! `0 = λ₀ > λ₁ > … > λ_l`; the plane `span{X, v}` with `v ∈ Vᵢ` has
//! curvature `kᵢ = −λᵢ/4`. Every Jacobi field along the geodesic is
//!
//! ```text
//! J(t) = E₀ + t·F₀ + Σᵢ (cos(√kᵢ t)·Eᵢ + sin(√kᵢ t)·Fᵢ)
//! ```
//!
//! with `Eᵢ, Fᵢ ∈ Vᵢ` parallel along the geodesic, so `J(0) = E₀ + ΣEᵢ` and
//! `J′(0) = F₀ + Σ√kᵢ·Fᵢ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liegroup::{AlgebraElement, OneParameterSubgroup};

pub const DEFAULT_CLUSTERING_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub eigenvalue: f64,
    /// `−λ/4`
    pub curvature: f64,
    pub basis: Vec<DVector<f64>>,
}

impl Eigenspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        crate::linalg::project_onto(&self.basis, v)
    }
}

#[derive(Clone, Debug)]
pub struct AdSquaredDecomposition {
    direction: AlgebraElement,
    spaces: Vec<Eigenspace>,
    clustering_tolerance: f64,
    flow: OneParameterSubgroup,
}

pub fn decompose(x: &AlgebraElement) -> Result<AdSquaredDecomposition> {
    AdSquaredDecomposition::new(x, DEFAULT_CLUSTERING_TOLERANCE)
}

impl AdSquaredDecomposition {
    pub fn new(x: &AlgebraElement, clustering_tolerance: f64) -> Result<Self> {
        let norm = x.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NonUnit { norm });
        }
        let group = x.group();
        let ad = group.ad_matrix(x.coords());
        let ad2 = &ad * &ad;
        let ad2 = (&ad2 + ad2.transpose()) * 0.5;
        let eig = ad2.symmetric_eigen();

        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            let lam = eig.eigenvalues[i];
            match clusters.last_mut() {
                Some(c)
                    if (eig.eigenvalues[*c.last().unwrap()] - lam).abs()
                        <= clustering_tolerance * lam.abs().max(1.0) =>
                {
                    c.push(i)
                }
                _ => clusters.push(vec![i]),
            }
        }

        let spaces: Vec<Eigenspace> = clusters
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let mean = c.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / c.len() as f64;
                let eigenvalue = if n == 0 { 0.0 } else { mean.min(0.0) };
                Eigenspace {
                    eigenvalue,
                    curvature: -eigenvalue / 4.0,
                    basis: c.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect(),
                }
            })
            .collect();

        // ad_X X = 0, so the top cluster must be the kernel.
        let top = eig.eigenvalues[order[0]];
        if top.abs() > clustering_tolerance.max(1e-12) {
            return Err(Error::InvalidArgument(format!(
                "largest eigenvalue of (ad_X)² is {top:e}, expected 0"
            )));
        }

        Ok(AdSquaredDecomposition {
            direction: x.clone(),
            spaces,
            clustering_tolerance,
            flow: OneParameterSubgroup::new(x),
        })
    }

    pub fn direction(&self) -> &AlgebraElement {
        &self.direction
    }

    pub fn spaces(&self) -> &[Eigenspace] {
        &self.spaces
    }

    pub fn kernel(&self) -> &Eigenspace {
        &self.spaces[0]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spaces.iter().map(|s| s.eigenvalue).collect()
    }

    pub fn curvatures(&self) -> Vec<f64> {
        self.spaces.iter().map(|s| s.curvature).collect()
    }

    pub fn clustering_tolerance(&self) -> f64 {
        self.clustering_tolerance
    }

    /// `X` is regular when `V₀` is abelian (then `V₀` is the maximal abelian
    /// subalgebra containing `X`).
    pub fn is_regular(&self) -> bool {
        let g = self.direction.group();
        let b = &self.kernel().basis;
        b.iter().enumerate().all(|(i, u)| {
            b[i + 1..]
                .iter()
                .all(|v| g.bracket_coords(u, v).norm() < 1e-9)
        })
    }

    /// `Σᵢ λᵢ Pᵢ`, which should reproduce the matrix of `(ad_X)²`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.direction.group().algebra_dim();
        let mut m = DMatrix::zeros(n, n);
        for s in &self.spaces {
            for v in &s.basis {
                m += v * v.transpose() * s.eigenvalue;
            }
        }
        m
    }

    /// `Ad_{exp(−tX/2)} v`: parallel transport along the geodesic in left
    /// trivialization.
    pub fn transport(&self, t: f64, v: &DVector<f64>) -> DVector<f64> {
        if t == 0.0 {
            return v.clone();
        }
        self.flow.adjoint_coords(-0.5 * t, v)
    }

    pub fn flow(&self) -> &OneParameterSubgroup {
        &self.flow
    }
}

#[derive(Clone, Debug)]
pub struct ClosedFormJacobiField {
    decomposition: Arc<AdSquaredDecomposition>,
    e: Vec<DVector<f64>>,
    f: Vec<DVector<f64>>,
}

/// Builds the closed-form field with `J(0) = j0` and covariant `J′(0) = j0p`.
pub fn jacobi_from_initial(
    x: &AlgebraElement,
    j0: &AlgebraElement,
    j0p: &AlgebraElement,
) -> Result<ClosedFormJacobiField> {
    let d = Arc::new(decompose(x)?);
    Ok(ClosedFormJacobiField::from_initial(&d, j0.coords(), j0p.coords()))
}

impl ClosedFormJacobiField {
    pub fn from_initial(
        decomposition: &Arc<AdSquaredDecomposition>,
        j0: &DVector<f64>,
        j0p: &DVector<f64>,
    ) -> Self {
        let mut e = Vec::with_capacity(decomposition.spaces.len());
        let mut f = Vec::with_capacity(decomposition.spaces.len());
        for (i, s) in decomposition.spaces.iter().enumerate() {
            e.push(s.project(j0));
            let fp = s.project(j0p);
            f.push(if i == 0 { fp } else { fp / s.curvature.sqrt() });
        }
        ClosedFormJacobiField {
            decomposition: decomposition.clone(),
            e,
            f,
        }
    }

    /// Builds a field directly from frame coefficients (`Eᵢ`, `Fᵢ` are
    /// projected onto their eigenspaces).
    pub fn from_coefficients(
        decomposition: &Arc<AdSquaredDecomposition>,
        e: Vec<DVector<f64>>,
        f: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let l = decomposition.spaces.len();
        if e.len() != l || f.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: e.len().min(f.len()),
            });
        }
        let project = |v: Vec<DVector<f64>>| -> Vec<DVector<f64>> {
            v.iter()
                .zip(&decomposition.spaces)
                .map(|(c, s)| s.project(c))
                .collect()
        };
        Ok(ClosedFormJacobiField {
            decomposition: decomposition.clone(),
            e: project(e),
            f: project(f),
        })
    }

    pub fn decomposition(&self) -> &Arc<AdSquaredDecomposition> {
        &self.decomposition
    }

    pub fn e_coefficients(&self) -> &[DVector<f64>] {
        &self.e
    }

    pub fn f_coefficients(&self) -> &[DVector<f64>] {
        &self.f
    }

    /// `F₀`, the coefficient of linear growth.
    pub fn linear_growth(&self) -> &DVector<f64> {
        &self.f[0]
    }

    /// Coefficients in the parallel frame at time `t`.
    pub fn frame_value(&self, t: f64) -> DVector<f64> {
        let mut c = &self.e[0] + &self.f[0] * t;
        for (i, s) in self.decomposition.spaces.iter().enumerate().skip(1) {
            let w = s.curvature.sqrt() * t;
            c += &self.e[i] * w.cos() + &self.f[i] * w.sin();
        }
        c
    }

    /// Frame coefficients of the covariant derivative at time `t`.
    pub fn frame_derivative(&self, t: f64) -> DVector<f64> {
        let mut c = self.f[0].clone();
        for (i, s) in self.decomposition.spaces.iter().enumerate().skip(1) {
            let r = s.curvature.sqrt();
            let w = r * t;
            c += (&self.f[i] * w.cos() - &self.e[i] * w.sin()) * r;
        }
        c
    }

    /// Left-trivialized coordinate of `J(t)` at `γ(t)`.
    pub fn evaluate_coords(&self, t: f64) -> DVector<f64> {
        self.decomposition.transport(t, &self.frame_value(t))
    }

    pub fn evaluate(&self, t: f64) -> AlgebraElement {
        AlgebraElement::from_coords(self.decomposition.direction.group(), self.evaluate_coords(t))
    }

    /// Covariant derivative `D_t J` at `γ(t)`, left-trivialized.
    pub fn derivative(&self, t: f64) -> AlgebraElement {
        AlgebraElement::from_coords(
            self.decomposition.direction.group(),
            self.decomposition.transport(t, &self.frame_derivative(t)),
        )
    }

    /// `‖J(t)‖`, computed in the parallel frame (transport is an isometry).
    pub fn norm_at(&self, t: f64) -> f64 {
        self.frame_value(t).norm()
    }

    /// A field is parallel iff all `Fᵢ` vanish and `Eᵢ = 0` for `i ≥ 1`.
    pub fn is_parallel(&self, tol: f64) -> bool {
        self.f.iter().all(|f| f.norm() < tol) && self.e.iter().skip(1).all(|e| e.norm() < tol)
    }

    /// Bounded iff `F₀ = 0`.
    pub fn is_bounded(&self, tol: f64) -> bool {
        self.f[0].norm() < tol
    }
}

/// Samples of `(t, J(t))` from integrating the Jacobi equation in left
/// trivialization with classical RK4.
///
/// State is `(y, w)` with `w = D_t y`:
/// `y′ = w − ½[X, y]`, `w′ = −R(y, X)X − ½[X, w]` and `R(y, X)X = −¼(ad_X)² y`.
pub fn jacobi_ode_trajectory(
    x: &AlgebraElement,
    j0: &AlgebraElement,
    j0p: &AlgebraElement,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, AlgebraElement)>> {
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnit { norm });
    }
    if steps < 100 {
        return Err(Error::InvalidArgument(format!(
            "ODE oracle needs at least 100 steps, got {steps}"
        )));
    }
    let group = x.group();
    let n = group.algebra_dim();
    let ad = group.ad_matrix(x.coords());
    let ad2 = &ad * &ad;

    // d/dt [y; w] = M [y; w]
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&ad * -0.5));
    m.view_mut((0, n), (n, n)).fill_with_identity();
    m.view_mut((n, 0), (n, n)).copy_from(&(&ad2 * 0.25));
    m.view_mut((n, n), (n, n)).copy_from(&(&ad * -0.5));

    let mut state = DVector::zeros(2 * n);
    state.rows_mut(0, n).copy_from(j0.coords());
    state.rows_mut(n, n).copy_from(j0p.coords());

    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, j0.clone()));
    for k in 1..=steps {
        let k1 = &m * &state;
        let k2 = &m * (&state + &k1 * (0.5 * h));
        let k3 = &m * (&state + &k2 * (0.5 * h));
        let k4 = &m * (&state + &k3 * h);
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push((
            k as f64 * h,
            AlgebraElement::from_coords(group, state.rows(0, n).into_owned()),
        ));
    }
    Ok(out)
}

/// `J(t)` for the field with `J(0) = j0`, `J′(0) = j0p`, by RK4 with `steps`
/// uniform steps. Independent of the eigenspace decomposition.
pub fn jacobi_ode_oracle(
    x: &AlgebraElement,
    j0: &AlgebraElement,
    j0p: &AlgebraElement,
    t: f64,
    steps: usize,
) -> Result<AlgebraElement> {
    let traj = jacobi_ode_trajectory(x, j0, j0p, t, steps)?;
    Ok(traj.into_iter().last().expect("nonempty trajectory").1)
}
