//! Compact matrix groups with the bi-invariant metric.
//!
//! The metric is the real Frobenius inner product `Re tr(AᴴB)` on matrix
//! realizations. Each [`GroupSpec`] carries an ordered orthonormal basis of
//! its Lie algebra, and algebra elements are coordinate vectors in that basis.
//! Tangent vectors are represented by their left-trivialized coordinate, so a
//! vector at `g` is `dL_g` applied to an algebra element.
//!
//! Product groups are block-diagonal: the basis of the first factor comes
//! first, embedded in the top-left block.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ALGEBRA_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    SpecialUnitary(usize),
    SpecialOrthogonal(usize),
    Product(Box<GroupFamily>, Box<GroupFamily>),
}

impl GroupFamily {
    pub fn product(a: GroupFamily, b: GroupFamily) -> Self {
        GroupFamily::Product(Box::new(a), Box::new(b))
    }

    pub fn matrix_dim(&self) -> usize {
        match self {
            GroupFamily::SpecialUnitary(n) | GroupFamily::SpecialOrthogonal(n) => *n,
            GroupFamily::Product(a, b) => a.matrix_dim() + b.matrix_dim(),
        }
    }

    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupFamily::SpecialUnitary(n) => n * n - 1,
            GroupFamily::SpecialOrthogonal(n) => n * (n - 1) / 2,
            GroupFamily::Product(a, b) => a.algebra_dim() + b.algebra_dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GroupFamily::SpecialUnitary(n) | GroupFamily::SpecialOrthogonal(n) if *n < 2 => Err(
                Error::InvalidFamily(format!("{self}: matrix size must be at least 2")),
            ),
            GroupFamily::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFamily::SpecialUnitary(n) => write!(f, "su({n})"),
            GroupFamily::SpecialOrthogonal(n) => write!(f, "so({n})"),
            GroupFamily::Product(a, b) => match b.as_ref() {
                GroupFamily::Product(..) => write!(f, "{a}x({b})"),
                _ => write!(f, "{a}x{b}"),
            },
        }
    }
}

impl FromStr for GroupFamily {
    type Err = Error;

    /// Parses `su(n)`, `so(n)` and `x`-separated products such as
    /// `su(2)xsu(2)`. Products associate to the left; parentheses group.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidFamily(s.clone());

        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (i, c) in s.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                'x' | '×' if depth == 0 => {
                    parts.push(&s[start..i]);
                    start = i + c.len_utf8();
                }
                _ => {}
            }
            if depth < 0 {
                return Err(bad());
            }
        }
        if depth != 0 {
            return Err(bad());
        }
        parts.push(&s[start..]);

        if parts.len() > 1 {
            let mut families = parts.into_iter().map(GroupFamily::from_str);
            let mut acc = families.next().ok_or_else(bad)??;
            for next in families {
                acc = GroupFamily::product(acc, next?);
            }
            return Ok(acc);
        }

        let atom = parts[0];
        if atom.starts_with('(') && atom.ends_with(')') {
            return atom[1..atom.len() - 1].parse();
        }
        let (kind, rest) = if let Some(rest) = atom.strip_prefix("su") {
            ("su", rest)
        } else if let Some(rest) = atom.strip_prefix("so") {
            ("so", rest)
        } else {
            return Err(bad());
        };
        let n: usize = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let family = if kind == "su" {
            GroupFamily::SpecialUnitary(n)
        } else {
            GroupFamily::SpecialOrthogonal(n)
        };
        family.validate()?;
        Ok(family)
    }
}

impl Serialize for GroupFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sparse basis matrix: list of `(row, col, value)` entries.
type SparseMatrix = Vec<(usize, usize, Complex64)>;

#[derive(Debug)]
pub struct GroupSpec {
    family: GroupFamily,
    matrix_dim: usize,
    basis: Vec<SparseMatrix>,
    /// Nonzero structure constants `(i, j, k, c)`: `[eᵢ, eⱼ]` has component `c` along `eₖ`.
    structure: Vec<(usize, usize, usize, f64)>,
}

pub type Group = Arc<GroupSpec>;

fn basis_for(family: &GroupFamily, offset: usize, out: &mut Vec<SparseMatrix>) {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let r2 = std::f64::consts::SQRT_2;
    match family {
        GroupFamily::SpecialUnitary(n) => {
            for l in 1..*n {
                let scale = 1.0 / ((l * (l + 1)) as f64).sqrt();
                let mut m: SparseMatrix = (0..l).map(|d| (offset + d, offset + d, i * scale)).collect();
                m.push((offset + l, offset + l, -i * (l as f64) * scale));
                out.push(m);
            }
            for j in 0..*n {
                for k in (j + 1)..*n {
                    let (a, b) = (offset + j, offset + k);
                    out.push(vec![(a, b, one / r2), (b, a, -one / r2)]);
                    out.push(vec![(a, b, i / r2), (b, a, i / r2)]);
                }
            }
        }
        GroupFamily::SpecialOrthogonal(n) => {
            for j in 0..*n {
                for k in (j + 1)..*n {
                    let (a, b) = (offset + j, offset + k);
                    out.push(vec![(a, b, one / r2), (b, a, -one / r2)]);
                }
            }
        }
        GroupFamily::Product(a, b) => {
            basis_for(a, offset, out);
            basis_for(b, offset + a.matrix_dim(), out);
        }
    }
}

impl GroupSpec {
    pub fn new(family: GroupFamily) -> Result<Group> {
        family.validate()?;
        let matrix_dim = family.matrix_dim();
        let mut basis = Vec::with_capacity(family.algebra_dim());
        basis_for(&family, 0, &mut basis);
        debug_assert_eq!(basis.len(), family.algebra_dim());

        let mut spec = GroupSpec {
            family,
            matrix_dim,
            basis,
            structure: Vec::new(),
        };
        let n = spec.algebra_dim();
        let dense: Vec<CMatrix> = (0..n).map(|i| spec.basis_matrix(i)).collect();
        let mut structure = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let c = &dense[i] * &dense[j] - &dense[j] * &dense[i];
                let coords = spec.project(&c);
                for (k, v) in coords.iter().enumerate() {
                    if v.abs() > 1e-14 {
                        structure.push((i, j, k, *v));
                    }
                }
            }
        }
        spec.structure = structure;
        Ok(Arc::new(spec))
    }

    pub fn parse(family: &str) -> Result<Group> {
        GroupSpec::new(family.parse()?)
    }

    pub fn family(&self) -> &GroupFamily {
        &self.family
    }

    pub fn matrix_dim(&self) -> usize {
        self.matrix_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn same_as(&self, other: &GroupSpec) -> bool {
        std::ptr::eq(self, other) || self.family == other.family
    }

    pub fn basis_matrix(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.matrix_dim, self.matrix_dim);
        for &(r, c, v) in &self.basis[i] {
            m[(r, c)] += v;
        }
        m
    }

    /// Matrix realization `Σ coordsᵢ · basisᵢ`.
    pub fn realize(&self, coords: &DVector<f64>) -> CMatrix {
        let mut m = CMatrix::zeros(self.matrix_dim, self.matrix_dim);
        for (b, &x) in self.basis.iter().zip(coords.iter()) {
            if x != 0.0 {
                for &(r, c, v) in b {
                    m[(r, c)] += v * x;
                }
            }
        }
        m
    }

    /// Orthogonal projection of an arbitrary matrix onto the algebra coordinates.
    pub fn project(&self, m: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|b| {
                b.iter()
                    .map(|&(r, c, v)| (v.conj() * m[(r, c)]).re)
                    .sum::<f64>()
            }),
        )
    }

    pub fn bracket_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.algebra_dim());
        for &(i, j, k, c) in &self.structure {
            out[k] += c * x[i] * y[j];
        }
        out
    }

    /// Matrix of `ad_x` in the orthonormal basis; skew-symmetric.
    pub fn ad_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.algebra_dim();
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, k, c) in &self.structure {
            m[(k, j)] += c * x[i];
        }
        m
    }

    /// `Ad_g x = g X gᴴ`, in coordinates.
    pub fn adjoint_coords(&self, g: &CMatrix, x: &DVector<f64>) -> DVector<f64> {
        let m = self.realize(x);
        self.project(&(g * m * g.adjoint()))
    }

    pub fn identity_matrix(&self) -> CMatrix {
        CMatrix::identity(self.matrix_dim, self.matrix_dim)
    }

    /// Largest deviation from an orthonormal, skew, traceless basis.
    pub fn basis_residual(&self) -> f64 {
        let n = self.algebra_dim();
        let dense: Vec<CMatrix> = (0..n).map(|i| self.basis_matrix(i)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let b = &dense[i];
            worst = worst.max((b + b.adjoint()).norm());
            worst = worst.max(b.trace().norm());
            for j in 0..n {
                let g = (b.adjoint() * &dense[j]).trace().re;
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - expected).abs());
            }
        }
        worst
    }

    fn check_len(&self, coords: &DVector<f64>) -> Result<()> {
        if coords.len() != self.algebra_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.algebra_dim(),
                got: coords.len(),
            });
        }
        Ok(())
    }
}

fn check_same(a: &GroupSpec, b: &GroupSpec) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::MismatchedGroup {
            left: a.family.to_string(),
            right: b.family.to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct AlgebraElement {
    group: Group,
    coords: DVector<f64>,
}

impl AlgebraElement {
    pub fn new(group: &Group, coords: DVector<f64>) -> Result<Self> {
        group.check_len(&coords)?;
        Ok(AlgebraElement {
            group: group.clone(),
            coords,
        })
    }

    pub fn from_slice(group: &Group, coords: &[f64]) -> Result<Self> {
        Self::new(group, DVector::from_column_slice(coords))
    }

    pub(crate) fn from_coords(group: &Group, coords: DVector<f64>) -> Self {
        debug_assert_eq!(coords.len(), group.algebra_dim());
        AlgebraElement {
            group: group.clone(),
            coords,
        }
    }

    pub fn zero(group: &Group) -> Self {
        Self::from_coords(group, DVector::zeros(group.algebra_dim()))
    }

    pub fn basis(group: &Group, i: usize) -> Self {
        let mut c = DVector::zeros(group.algebra_dim());
        c[i] = 1.0;
        Self::from_coords(group, c)
    }

    /// Projects a matrix into the algebra, rejecting matrices that are not
    /// skew and traceless (or that lie outside the block structure).
    pub fn from_matrix(group: &Group, m: &CMatrix) -> Result<Self> {
        if m.nrows() != group.matrix_dim() || m.ncols() != group.matrix_dim() {
            return Err(Error::DimensionMismatch {
                expected: group.matrix_dim(),
                got: m.nrows(),
            });
        }
        let coords = group.project(m);
        let residual = (group.realize(&coords) - m).norm();
        if residual > ALGEBRA_TOL * (1.0 + m.norm()) {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(Self::from_coords(group, coords))
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn matrix(&self) -> CMatrix {
        self.group.realize(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn normalized(&self) -> Self {
        Self::from_coords(&self.group, self.coords.normalize())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_coords(&self.group, &self.coords * s)
    }

    pub fn check_unit(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit { norm });
        }
        Ok(())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&AlgebraElement> for &AlgebraElement {
            type Output = AlgebraElement;
            /// Panics when the operands belong to different groups.
            fn $method(self, rhs: &AlgebraElement) -> AlgebraElement {
                assert!(self.group.same_as(&rhs.group), "mismatched groups");
                AlgebraElement::from_coords(&self.group, &self.coords $op &rhs.coords)
            }
        }
        impl $trait<AlgebraElement> for AlgebraElement {
            type Output = AlgebraElement;
            fn $method(self, rhs: AlgebraElement) -> AlgebraElement {
                (&self).$method(&rhs)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<&AlgebraElement> for f64 {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        rhs.scale(self)
    }
}

impl Mul<AlgebraElement> for f64 {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        rhs.scale(self)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    group: Group,
    matrix: CMatrix,
}

impl GroupElement {
    pub fn identity(group: &Group) -> Self {
        GroupElement {
            group: group.clone(),
            matrix: group.identity_matrix(),
        }
    }

    /// Wraps a matrix, checking unitarity and unit determinant to 1e−10.
    pub fn from_matrix(group: &Group, matrix: CMatrix) -> Result<Self> {
        let g = GroupElement {
            group: group.clone(),
            matrix,
        };
        let residual = g.unitarity_residual().max(g.determinant_residual());
        if residual > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a group element (residual {residual:e})"
            )));
        }
        Ok(g)
    }

    pub(crate) fn from_matrix_unchecked(group: &Group, matrix: CMatrix) -> Self {
        GroupElement {
            group: group.clone(),
            matrix,
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn unitarity_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        (self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n)).norm()
    }

    pub fn determinant_residual(&self) -> f64 {
        (self.matrix.determinant() - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement::from_matrix_unchecked(&self.group, &self.matrix * &other.matrix)
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement::from_matrix_unchecked(&self.group, self.matrix.adjoint())
    }

    /// `Ad_g x`.
    pub fn adjoint(&self, x: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from_coords(&self.group, self.group.adjoint_coords(&self.matrix, &x.coords))
    }

    /// `Ad_{g⁻¹} x`.
    pub fn adjoint_inv(&self, x: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from_coords(
            &self.group,
            self.group.adjoint_coords(&self.matrix.adjoint(), &x.coords),
        )
    }

    pub fn distance_to(&self, other: &GroupElement) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// A tangent vector `dL_g(left)` at `base`.
#[derive(Clone, Debug)]
pub struct TangentVector {
    pub base: GroupElement,
    pub left: AlgebraElement,
}

impl TangentVector {
    pub fn new(base: &GroupElement, left: AlgebraElement) -> Self {
        TangentVector {
            base: base.clone(),
            left,
        }
    }

    /// The right-trivialized coordinate `Ad_g(left)`.
    pub fn right_coord(&self) -> AlgebraElement {
        self.base.adjoint(&self.left)
    }

    /// The vector as an ambient matrix `g · L`.
    pub fn ambient(&self) -> CMatrix {
        self.base.matrix() * self.left.matrix()
    }

    pub fn norm(&self) -> f64 {
        self.left.norm()
    }
}

/// `t ↦ exp(tX)` with a cached unitary eigendecomposition `X = U·diag(iω)·Uᴴ`.
#[derive(Clone, Debug)]
pub struct OneParameterSubgroup {
    group: Group,
    eigvecs: CMatrix,
    frequencies: DVector<f64>,
}

impl OneParameterSubgroup {
    pub fn new(x: &AlgebraElement) -> Self {
        let m = x.matrix();
        // m = iH with H Hermitian
        let h = m.map(|z| Complex64::new(z.im, -z.re));
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        OneParameterSubgroup {
            group: x.group.clone(),
            eigvecs: eig.eigenvectors,
            frequencies: eig.eigenvalues,
        }
    }

    /// Eigenvalues `ω` of `-iX`.
    pub fn frequencies(&self) -> &DVector<f64> {
        &self.frequencies
    }

    pub fn matrix_at(&self, t: f64) -> CMatrix {
        let u = &self.eigvecs;
        let mut scaled = u.clone();
        for (j, &w) in self.frequencies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, w * t);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * u.adjoint()
    }

    pub fn at(&self, t: f64) -> GroupElement {
        GroupElement::from_matrix_unchecked(&self.group, self.matrix_at(t))
    }

    /// `‖exp(tX) − I‖_F`, computed from the spectrum.
    pub fn identity_residual(&self, t: f64) -> f64 {
        self.frequencies
            .iter()
            .map(|w| {
                let s = (0.5 * w * t).sin();
                4.0 * s * s
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Derivative of `‖exp(tX) − I‖²_F` with respect to `t`.
    pub fn identity_residual_sq_derivative(&self, t: f64) -> f64 {
        self.frequencies
            .iter()
            .map(|w| 2.0 * w * (w * t).sin())
            .sum()
    }

    /// `Ad_{exp(tX)} v` in coordinates.
    pub fn adjoint_coords(&self, t: f64, v: &DVector<f64>) -> DVector<f64> {
        self.group.adjoint_coords(&self.matrix_at(t), v)
    }
}

pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_same(&x.group, &y.group)?;
    Ok(AlgebraElement::from_coords(
        &x.group,
        x.group.bracket_coords(&x.coords, &y.coords),
    ))
}

pub fn inner(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    check_same(&x.group, &y.group)?;
    Ok(x.coords.dot(&y.coords))
}

pub fn exp_map(x: &AlgebraElement) -> GroupElement {
    if x.coords.iter().all(|&c| c == 0.0) {
        return GroupElement::identity(&x.group);
    }
    OneParameterSubgroup::new(x).at(1.0)
}

/// `g · exp(t x)`.
pub fn geodesic(g: &GroupElement, x: &AlgebraElement, t: f64) -> GroupElement {
    g.mul(&exp_map(&x.scale(t)))
}

/// Parallel transport of `dL(v)` along `exp(tX)`, in left trivialization:
/// `Ad_{exp(−tX/2)} v`.
pub fn parallel_transport(x: &AlgebraElement, t: f64, v: &AlgebraElement) -> Result<AlgebraElement> {
    x.check_unit()?;
    check_same(&x.group, &v.group)?;
    let h = exp_map(&x.scale(-0.5 * t));
    Ok(h.adjoint(v))
}

/// Covariant derivative `D_t y = y′ + ½[X, y]` of a left-trivialized field
/// sampled on a uniform grid with spacing `dt`. Returns values at interior
/// points (`samples.len() − 2` entries).
pub fn covariant_deriv_along_geodesic(
    x: &AlgebraElement,
    samples: &[AlgebraElement],
    dt: f64,
) -> Result<Vec<AlgebraElement>> {
    x.check_unit()?;
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("grid spacing must be positive".into()));
    }
    samples
        .windows(3)
        .map(|w| {
            check_same(&x.group, &w[1].group)?;
            let diff = (&w[2].coords - &w[0].coords) / (2.0 * dt);
            let conn = x.group.bracket_coords(&x.coords, &w[1].coords) * 0.5;
            Ok(AlgebraElement::from_coords(&x.group, diff + conn))
        })
        .collect()
}

/// Sectional curvature `¼‖[X,Y]‖² / (‖X‖²‖Y‖² − ⟨X,Y⟩²)` of the plane spanned by `x`, `y`.
pub fn sectional_curvature(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    check_same(&x.group, &y.group)?;
    let xy = x.coords.dot(&y.coords);
    let gram = x.coords.norm_squared() * y.coords.norm_squared() - xy * xy;
    if gram <= 1e-14 {
        return Err(Error::Dependent { gram });
    }
    let c = x.group.bracket_coords(&x.coords, &y.coords);
    Ok(0.25 * c.norm_squared() / gram)
}
