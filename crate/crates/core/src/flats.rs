//! Horizontal zero-curvature planes (commuting orthonormal horizontal pairs)
//! and the checks that they project to flats of the base.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::biquotient::{BiquotientSpec, HolonomyGeodesic};
use crate::error::{Error, Result};
use crate::linalg;
use crate::liegroup::{exp_map, AlgebraElement, GroupElement};
use crate::sampling::{gaussian_vector, substream};

/// Accepted commutator norm.
pub const COMMUTATOR_TOL: f64 = 1e-10;
const POLISH_START: f64 = 1e-6;
const DESCENT_ITERS: usize = 4000;
const POLISH_ITERS: usize = 30;

#[derive(Clone, Debug)]
pub struct FlatCandidate {
    pub spec: Arc<BiquotientSpec>,
    pub base: GroupElement,
    pub x: AlgebraElement,
    pub y: AlgebraElement,
    pub commutator_norm: f64,
    pub search_seed: u64,
}

impl FlatCandidate {
    /// Checks unit length, orthogonality and horizontality (all to 1e−10);
    /// the commutator is recorded, not constrained.
    pub fn new(
        spec: &Arc<BiquotientSpec>,
        base: &GroupElement,
        x: AlgebraElement,
        y: AlgebraElement,
        search_seed: u64,
    ) -> Result<Self> {
        x.check_unit()?;
        y.check_unit()?;
        let gram = x.coords().dot(y.coords());
        if gram.abs() > 1e-10 {
            return Err(Error::Dependent { gram });
        }
        let frame = spec.vertical_frame(base)?;
        for v in [&x, &y] {
            let residual = frame.vertical_residual(v.coords());
            if residual > 1e-10 {
                return Err(Error::NotHorizontal { residual });
            }
        }
        let commutator_norm = spec.group().bracket_coords(x.coords(), y.coords()).norm();
        Ok(FlatCandidate {
            spec: spec.clone(),
            base: base.clone(),
            x,
            y,
            commutator_norm,
            search_seed,
        })
    }
}

#[derive(Clone, Debug)]
pub struct FlatSearch {
    pub candidate: Option<FlatCandidate>,
    /// Smallest commutator norm reached over the restarts that ran.
    pub best_residual: f64,
    pub restarts_run: usize,
    /// Exact minimum of ‖[X,Y]‖ when the horizontal space is a single plane.
    pub certified_lower_bound: Option<f64>,
}

fn bracket(spec: &BiquotientSpec, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    spec.group().bracket_coords(a, b)
}

/// Gram–Schmidt on a pair; preserves `[x, y]` up to scale.
fn orthonormal_pair(x: &DVector<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let xn = x.norm();
    if xn < 1e-300 {
        return None;
    }
    let x = x / xn;
    let y = y - &x * x.dot(y);
    let yn = y.norm();
    if yn < 1e-12 {
        return None;
    }
    Some((x, y / yn))
}

struct Pair {
    x: DVector<f64>,
    y: DVector<f64>,
}

struct Descent<'a> {
    spec: &'a BiquotientSpec,
    /// Horizontal basis as columns (n × h).
    h: DMatrix<f64>,
}

impl Descent<'_> {
    fn lift(&self, p: &Pair) -> (DVector<f64>, DVector<f64>) {
        (&self.h * &p.x, &self.h * &p.y)
    }

    fn objective(&self, p: &Pair) -> f64 {
        let (x, y) = self.lift(p);
        bracket(self.spec, &x, &y).norm_squared()
    }

    fn residual(&self, p: &Pair) -> f64 {
        self.objective(p).sqrt()
    }

    /// Riemannian gradient on the Stiefel manifold of orthonormal pairs in ℝʰ.
    fn gradient(&self, p: &Pair) -> (DVector<f64>, DVector<f64>) {
        let (x, y) = self.lift(p);
        let c = bracket(self.spec, &x, &y);
        let ht = self.h.transpose();
        let gx = &ht * (bracket(self.spec, &y, &c) * 2.0);
        let gy = &ht * (bracket(self.spec, &x, &c) * -2.0);
        // G − Q·sym(Qᵀ G) with Q = [x y]
        let a = p.x.dot(&gx);
        let d = p.y.dot(&gy);
        let b = 0.5 * (p.x.dot(&gy) + p.y.dot(&gx));
        let rx = &gx - &p.x * a - &p.y * b;
        let ry = &gy - &p.x * b - &p.y * d;
        (rx, ry)
    }

    fn descend(&self, mut p: Pair) -> Pair {
        let mut f = self.objective(&p);
        let mut step: f64 = 0.5;
        for _ in 0..DESCENT_ITERS {
            if f < POLISH_START * POLISH_START {
                break;
            }
            let (gx, gy) = self.gradient(&p);
            let gnorm2 = gx.norm_squared() + gy.norm_squared();
            if gnorm2 < 1e-28 {
                break;
            }
            let mut accepted = false;
            step = (step * 2.0).min(10.0);
            while step > 1e-14 {
                if let Some((x, y)) = orthonormal_pair(&(&p.x - &gx * step), &(&p.y - &gy * step)) {
                    let trial = Pair { x, y };
                    let ft = self.objective(&trial);
                    if ft <= f - 1e-4 * step * gnorm2 {
                        p = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        p
    }

    /// Gauss–Newton on `r(x, y) = [Hx, Hy]` with minimum-norm steps.
    fn polish(&self, mut p: Pair) -> Pair {
        let hdim = self.h.ncols();
        let spec = self.spec;
        for _ in 0..POLISH_ITERS {
            let (x, y) = self.lift(&p);
            let r = bracket(spec, &x, &y);
            if r.norm() < 1e-15 {
                break;
            }
            let ad_x = spec.group().ad_matrix(&x);
            let ad_y = spec.group().ad_matrix(&y);
            let n = r.len();
            let mut jac = DMatrix::zeros(n, 2 * hdim);
            jac.view_mut((0, 0), (n, hdim)).copy_from(&(-(&ad_y * &self.h)));
            jac.view_mut((0, hdim), (n, hdim)).copy_from(&(&ad_x * &self.h));
            let delta = linalg::lstsq(&jac, &(-&r), 1e-12);
            let nx = &p.x + delta.rows(0, hdim);
            let ny = &p.y + delta.rows(hdim, hdim);
            match orthonormal_pair(&nx, &ny) {
                Some((x, y)) => {
                    let trial = Pair { x, y };
                    if self.objective(&trial) >= self.objective(&p) {
                        break;
                    }
                    p = trial;
                }
                None => break,
            }
        }
        p
    }
}

/// Searches for an orthonormal commuting pair in the horizontal space at `g`.
///
/// Restart `i` starts from `substream(seed, i)`; the first restart to reach
/// `‖[X,Y]‖ < 1e−10` wins.
pub fn find_horizontal_flat(
    spec: &Arc<BiquotientSpec>,
    g: &GroupElement,
    seed: u64,
    restarts: usize,
) -> Result<FlatSearch> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let frame = spec.vertical_frame(g)?;
    let hbasis = frame.horizontal_basis();
    let hdim = hbasis.len();
    if hdim < 2 {
        return Err(Error::HorizontalTooSmall(hdim));
    }
    let group = spec.group();
    let n = group.algebra_dim();

    if hdim == 2 {
        // every orthonormal pair spans the whole plane, so [X,Y] = ±[h₁,h₂]
        let c = bracket(spec, &hbasis[0], &hbasis[1]).norm();
        let candidate = if c < COMMUTATOR_TOL {
            Some(FlatCandidate::new(
                spec,
                g,
                AlgebraElement::new(group, hbasis[0].clone())?,
                AlgebraElement::new(group, hbasis[1].clone())?,
                seed,
            )?)
        } else {
            None
        };
        return Ok(FlatSearch {
            candidate,
            best_residual: c,
            restarts_run: 0,
            certified_lower_bound: Some(c),
        });
    }

    let descent = Descent {
        spec,
        h: linalg::columns(&hbasis, n),
    };
    let mut best = f64::INFINITY;
    for i in 0..restarts {
        let mut rng = substream(seed, i as u64);
        let start = loop {
            let a = gaussian_vector(hdim, &mut rng);
            let b = gaussian_vector(hdim, &mut rng);
            if let Some((x, y)) = orthonormal_pair(&a, &b) {
                break Pair { x, y };
            }
        };
        let mut p = descent.descend(start);
        if descent.residual(&p) < POLISH_START {
            p = descent.polish(p);
        }
        let r = descent.residual(&p);
        best = best.min(r);
        if r < COMMUTATOR_TOL {
            let (x, y) = descent.lift(&p);
            // re-project to remove round-off in the horizontal basis
            let (x, y) = orthonormal_pair(&frame.horizontal_part(&x), &frame.horizontal_part(&y))
                .ok_or(Error::InvalidArgument("degenerate pair".into()))?;
            let candidate = FlatCandidate::new(
                spec,
                g,
                AlgebraElement::new(group, x)?,
                AlgebraElement::new(group, y)?,
                seed,
            )?;
            return Ok(FlatSearch {
                best_residual: best.min(candidate.commutator_norm),
                candidate: Some(candidate),
                restarts_run: i + 1,
                certified_lower_bound: None,
            });
        }
    }
    Ok(FlatSearch {
        candidate: None,
        best_residual: best,
        restarts_run: restarts,
        certified_lower_bound: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Part1Report {
    /// Sectional curvature of span{X, Y} in G.
    pub k_total: f64,
    /// ‖A_X Y‖ = ½‖vertical part of [X,Y]‖.
    pub a_norm: f64,
    /// `K_total + 3‖A_X Y‖²`.
    pub k_base: f64,
    pub passed: bool,
}

/// Curvature of the projected plane via `K_B = K_G + 3‖A_X Y‖²`.
pub fn verify_part1(spec: &BiquotientSpec, candidate: &FlatCandidate) -> Result<Part1Report> {
    let c = bracket(spec, candidate.x.coords(), candidate.y.coords());
    let frame = spec.vertical_frame(&candidate.base)?;
    let k_total = 0.25 * c.norm_squared();
    let a_norm = 0.5 * frame.vertical_residual(&c);
    let k_base = k_total + 3.0 * a_norm * a_norm;
    Ok(Part1Report {
        k_total,
        a_norm,
        k_base,
        passed: k_base.abs() < 1e-10,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Part2Report {
    pub half_width: f64,
    pub grid_points: usize,
    /// Largest vertical residual of the two coordinate tangents.
    pub max_vertical_residual: f64,
    /// Row `i` is `s = s_i`, column `j` is `u = u_j`.
    #[serde(skip)]
    pub residuals: DMatrix<f64>,
    pub passed: bool,
}

fn grid(half_width: f64, grid_points: usize) -> Vec<f64> {
    let m = 2 * grid_points + 1;
    (0..m)
        .map(|i| {
            if grid_points == 0 {
                0.0
            } else {
                half_width * (i as f64 - grid_points as f64) / grid_points as f64
            }
        })
        .collect()
}

/// Horizontality of `F = {g·exp(sX + uY)}` on a `(2k+1)²` grid over
/// `[−w, w]²`.
pub fn verify_part2(
    spec: &BiquotientSpec,
    candidate: &FlatCandidate,
    half_width: f64,
    grid_points: usize,
) -> Result<Part2Report> {
    if candidate.commutator_norm >= COMMUTATOR_TOL {
        return Err(Error::NonCommuting(candidate.commutator_norm));
    }
    let axis = grid(half_width, grid_points);
    let m = axis.len();
    let mut residuals = DMatrix::zeros(m, m);
    for (i, &s) in axis.iter().enumerate() {
        for (j, &u) in axis.iter().enumerate() {
            let z = &candidate.x.scale(s) + &candidate.y.scale(u);
            let p = candidate.base.mul(&exp_map(&z));
            let frame = spec.vertical_frame(&p)?;
            residuals[(i, j)] = frame
                .vertical_residual(candidate.x.coords())
                .max(frame.vertical_residual(candidate.y.coords()));
        }
    }
    let max_vertical_residual = residuals.max();
    Ok(Part2Report {
        half_width,
        grid_points,
        max_vertical_residual,
        residuals,
        passed: max_vertical_residual < 1e-8,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub t_max: f64,
    pub samples: usize,
    /// max |⟨J(t), Y(t)⟩| over the vertical basis and the samples.
    pub max_inner: f64,
    /// max |⟨J′(0), Y⟩| over the vertical basis.
    pub max_initial: f64,
    pub passed: bool,
}

/// Holonomy fields along `g·exp(tX)` stay orthogonal to the parallel
/// transport of `Y`.
pub fn holonomy_orthogonality(
    spec: &Arc<BiquotientSpec>,
    candidate: &FlatCandidate,
    t_max: f64,
    samples: usize,
) -> Result<OrthogonalityReport> {
    let geo = HolonomyGeodesic::new(spec, &candidate.base, &candidate.x)?;
    orthogonality_against(&geo, candidate.y.coords(), t_max, samples)
}

/// Same check against an arbitrary `y` (need not be horizontal).
pub fn orthogonality_against(
    geo: &HolonomyGeodesic,
    y: &DVector<f64>,
    t_max: f64,
    samples: usize,
) -> Result<OrthogonalityReport> {
    if samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples });
    }
    let d = geo.decomposition();
    let ts: Vec<f64> = (0..samples)
        .map(|k| t_max * k as f64 / (samples - 1) as f64)
        .collect();
    let transported: Vec<DVector<f64>> = ts.iter().map(|&t| d.transport(t, y)).collect();
    let mut max_inner: f64 = 0.0;
    let mut max_initial: f64 = 0.0;
    for v in &geo.frame().vectors {
        let field = geo.field_coords(v)?;
        max_initial = max_initial.max(field.initial_derivative().dot(y).abs());
        for (t, yt) in ts.iter().zip(&transported) {
            max_inner = max_inner.max(field.jacobi_value(*t).dot(yt).abs());
        }
    }
    Ok(OrthogonalityReport {
        t_max,
        samples,
        max_inner,
        max_initial,
        passed: max_inner < 1e-8 && max_initial < 1e-10,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatVerification {
    pub commutator_norm: f64,
    pub part1: Part1Report,
    pub part2: Part2Report,
    pub orthogonality: OrthogonalityReport,
    pub passed: bool,
}

/// All four checks on one candidate; any failure fails the whole.
pub fn verify_flat(
    spec: &Arc<BiquotientSpec>,
    candidate: &FlatCandidate,
    half_width: f64,
    grid_points: usize,
    t_max: f64,
    samples: usize,
) -> Result<FlatVerification> {
    let part1 = verify_part1(spec, candidate)?;
    let part2 = verify_part2(spec, candidate, half_width, grid_points)?;
    let orthogonality = holonomy_orthogonality(spec, candidate, t_max, samples)?;
    let passed = candidate.commutator_norm < COMMUTATOR_TOL && part1.passed && part2.passed && orthogonality.passed;
    Ok(FlatVerification {
        commutator_norm: candidate.commutator_norm,
        part1,
        part2,
        orthogonality,
        passed,
    })
}
