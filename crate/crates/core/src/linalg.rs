//! Small dense linear-algebra helpers on real coordinate vectors.

use nalgebra::{DMatrix, DVector};

/// Modified Gram–Schmidt with one re-orthogonalization pass. Vectors whose
/// residual norm falls below `tol` (relative to their input norm) are dropped.
pub fn orthonormalize(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let n = w.norm();
        if n > tol * scale {
            out.push(w / n);
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `basis` (assumed
/// orthonormal) in ℝⁿ.
pub fn orthogonal_complement(basis: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut all: Vec<DVector<f64>> = basis.to_vec();
    let k = all.len();
    for i in 0..n {
        if all.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[i] = 1.0;
        for _ in 0..2 {
            for q in &all {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            all.push(w / norm);
        }
    }
    all.split_off(k)
}

/// Stacks vectors as matrix columns.
pub fn columns(vectors: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(vectors)
}

/// Projection of `v` onto the span of the orthonormal `basis`.
pub fn project_onto(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut p = DVector::zeros(v.len());
    for q in basis {
        p.axpy(q.dot(v), q, 1.0);
    }
    p
}

/// Largest principal angle between the spans of two orthonormal families,
/// computed through the sine (the residual of `a` after projecting onto `b`)
/// so small angles keep full relative precision.
pub fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let residual: Vec<DVector<f64>> = a.iter().map(|v| v - project_onto(b, v)).collect();
    let m = DMatrix::from_columns(&residual);
    let sigma = m
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    sigma.min(1.0).asin()
}

/// Least-squares solution of `A x = b` with singular values below
/// `rcond · σ_max` treated as zero (minimum-norm solution).
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = (rcond * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("u and v were computed")
}

/// Ordinary least-squares slope of `ys` against `ts`.
pub fn least_squares_slope(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len());
    let n = ts.len() as f64;
    if ts.len() < 2 {
        return 0.0;
    }
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        num += (t - tm) * (y - ym);
        den += (t - tm) * (t - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
