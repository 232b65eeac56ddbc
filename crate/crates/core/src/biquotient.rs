//! Biquotient submersions `G → G//H` for `H ⊂ G×G` acting by
//! `(h₁, h₂)⋆g = h₁ g h₂⁻¹`.
//!
//! A generator `(P, Q) ∈ 𝔤⊕𝔤` induces the action field with left coordinate
//! `Ad_{g⁻¹}P − Q` (derivative of `t ↦ exp(tP)·g·exp(−tQ)`). These fields span
//! the vertical space at `g`.
//!
//! Holonomy Jacobi fields along a horizontal geodesic `γ(t) = g·exp(tX)` are
//! available through two independent routes:
//!
//! * route A: the action field of `v`'s generator combination, evaluated along
//!   `γ` (the `H`-action maps horizontal lifts to horizontal lifts);
//! * route B: the closed-form Jacobi field with initial data `(v, J′(0))`,
//!   where `J′(0)` is split into its horizontal (A-tensor) and vertical
//!   (T-tensor) parts.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{decompose, AdSquaredDecomposition, ClosedFormJacobiField};
use crate::linalg;
use crate::liegroup::{AlgebraElement, CMatrix, Group, GroupElement, GroupFamily, GroupSpec, TangentVector};
use crate::sampling::{random_group_element, rng_from_seed};

const FREENESS_TOL: f64 = 1e-8;
const ORTHONORMAL_TOL: f64 = 1e-10;
const VERTICAL_TOL: f64 = 1e-10;

/// `(P, Q) ∈ 𝔤⊕𝔤`, as coordinate vectors in the basis of `𝔤`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

impl Generator {
    pub fn new(left: DVector<f64>, right: DVector<f64>) -> Self {
        Generator { left, right }
    }

    pub fn left_only(p: DVector<f64>) -> Self {
        let n = p.len();
        Generator::new(p, DVector::zeros(n))
    }

    pub fn right_only(q: DVector<f64>) -> Self {
        let n = q.len();
        Generator::new(DVector::zeros(n), q)
    }

    fn dot(&self, other: &Generator) -> f64 {
        self.left.dot(&other.left) + self.right.dot(&other.right)
    }

    /// `‖P‖ + ‖Q‖`, the bound on its action field's norm.
    pub fn norm_bound(&self) -> f64 {
        self.left.norm() + self.right.norm()
    }

    pub fn is_one_sided(&self) -> bool {
        self.left.iter().all(|&c| c == 0.0) || self.right.iter().all(|&c| c == 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct BiquotientSpec {
    name: String,
    group: Group,
    generators: Vec<Generator>,
}

impl BiquotientSpec {
    /// Validates that the generators are orthonormal in the product metric and
    /// that the action is infinitesimally free at the identity and at a few
    /// seeded random points.
    pub fn new(name: impl Into<String>, group: &Group, generators: Vec<Generator>) -> Result<Self> {
        let n = group.algebra_dim();
        for (i, gen) in generators.iter().enumerate() {
            if gen.left.len() != n || gen.right.len() != n {
                return Err(Error::InvalidGenerators(format!(
                    "generator {i} must have {n} coordinates per side"
                )));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for (j, b) in generators.iter().enumerate().skip(i) {
                let expected = if i == j { 1.0 } else { 0.0 };
                let got = a.dot(b);
                if (got - expected).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidGenerators(format!(
                        "generators must be orthonormal in the product metric: <{i},{j}> = {got}"
                    )));
                }
            }
        }
        let spec = BiquotientSpec {
            name: name.into(),
            group: group.clone(),
            generators,
        };
        let mut rng = rng_from_seed(0x5eed);
        spec.vertical_frame(&GroupElement::identity(group))?;
        for _ in 0..4 {
            spec.vertical_frame(&random_group_element(group, &mut rng))?;
        }
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn vertical_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn horizontal_dim(&self) -> usize {
        self.group.algebra_dim() - self.generators.len()
    }

    /// Product subgroups `H₁×H₂` have one-sided generators only.
    pub fn is_product(&self) -> bool {
        self.generators.iter().all(Generator::is_one_sided)
    }

    fn raw_field(&self, gen: &Generator, g_inv: &CMatrix) -> DVector<f64> {
        self.group.adjoint_coords(g_inv, &gen.left) - &gen.right
    }

    pub fn raw_fields(&self, g: &GroupElement) -> Vec<DVector<f64>> {
        let g_inv = g.matrix().adjoint();
        self.generators.iter().map(|gen| self.raw_field(gen, &g_inv)).collect()
    }

    pub fn action_field(&self, index: usize, g: &GroupElement) -> Result<TangentVector> {
        let gen = self.generators.get(index).ok_or(Error::IndexOutOfRange {
            index,
            count: self.generators.len(),
        })?;
        let left = self.raw_field(gen, &g.matrix().adjoint());
        Ok(TangentVector::new(g, AlgebraElement::new(&self.group, left)?))
    }

    pub fn vertical_frame(&self, g: &GroupElement) -> Result<VerticalFrame> {
        let raw = self.raw_fields(g);
        // generators have unit norm, so an absolute singular-value floor is meaningful
        let n = self.group.algebra_dim();
        let rank = if raw.is_empty() {
            0
        } else {
            linalg::columns(&raw, n)
                .singular_values()
                .iter()
                .filter(|&&s| s > FREENESS_TOL)
                .count()
        };
        let vectors = linalg::orthonormalize(&raw, FREENESS_TOL);
        if rank < raw.len() || vectors.len() < raw.len() {
            return Err(Error::NotFree {
                rank: rank.min(vectors.len()),
                expected: raw.len(),
            });
        }
        Ok(VerticalFrame {
            base: g.clone(),
            vectors,
            raw,
        })
    }

    /// `v` minus its projection onto the vertical space at `v.base`.
    pub fn horizontal_project(&self, g: &GroupElement, v: &TangentVector) -> Result<TangentVector> {
        if g.distance_to(&v.base) > 1e-12 {
            return Err(Error::BaseMismatch);
        }
        let frame = self.vertical_frame(g)?;
        let h = frame.horizontal_part(v.left.coords());
        Ok(TangentVector::new(g, AlgebraElement::new(&self.group, h)?))
    }
}

#[derive(Clone, Debug)]
pub struct VerticalFrame {
    pub base: GroupElement,
    /// Orthonormalized action fields (left coordinates).
    pub vectors: Vec<DVector<f64>>,
    /// Action fields before orthonormalization, one per generator.
    pub raw: Vec<DVector<f64>>,
}

impl VerticalFrame {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vertical_part(&self, v: &DVector<f64>) -> DVector<f64> {
        linalg::project_onto(&self.vectors, v)
    }

    pub fn horizontal_part(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.vertical_part(v)
    }

    /// Norm of the vertical component.
    pub fn vertical_residual(&self, v: &DVector<f64>) -> f64 {
        self.vertical_part(v).norm()
    }

    /// Norm of the horizontal component.
    pub fn horizontal_residual(&self, v: &DVector<f64>) -> f64 {
        self.horizontal_part(v).norm()
    }

    /// Orthonormal basis of the horizontal space.
    pub fn horizontal_basis(&self) -> Vec<DVector<f64>> {
        let n = self.base.group().algebra_dim();
        linalg::orthogonal_complement(&self.vectors, n)
    }

    /// Coefficients `c` with `Σ c_a · raw_a = v` (least squares).
    pub fn generator_coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = v.len();
        linalg::lstsq(&linalg::columns(&self.raw, n), v, 1e-12)
    }
}

/// A horizontal geodesic `γ(t) = g·exp(tX)` of a biquotient, with the data
/// shared by all holonomy Jacobi fields along it.
#[derive(Clone, Debug)]
pub struct HolonomyGeodesic {
    spec: Arc<BiquotientSpec>,
    frame: VerticalFrame,
    direction: AlgebraElement,
    decomposition: Arc<AdSquaredDecomposition>,
}

impl HolonomyGeodesic {
    pub fn new(spec: &Arc<BiquotientSpec>, g: &GroupElement, x: &AlgebraElement) -> Result<Self> {
        let frame = spec.vertical_frame(g)?;
        let residual = frame.vertical_residual(x.coords());
        if residual > VERTICAL_TOL {
            return Err(Error::NotHorizontal { residual });
        }
        let decomposition = Arc::new(decompose(x)?);
        Ok(HolonomyGeodesic {
            spec: spec.clone(),
            frame,
            direction: x.clone(),
            decomposition,
        })
    }

    pub fn spec(&self) -> &Arc<BiquotientSpec> {
        &self.spec
    }

    pub fn base(&self) -> &GroupElement {
        &self.frame.base
    }

    pub fn frame(&self) -> &VerticalFrame {
        &self.frame
    }

    pub fn direction(&self) -> &AlgebraElement {
        &self.direction
    }

    pub fn decomposition(&self) -> &Arc<AdSquaredDecomposition> {
        &self.decomposition
    }

    /// `γ(t)`.
    pub fn point(&self, t: f64) -> GroupElement {
        self.frame.base.mul(&self.decomposition.flow().at(t))
    }

    /// Covariant `J′(0)` of the holonomy field starting at vertical `v`:
    /// `−[X, Σ c_a Ad_{g⁻¹}P_a] + ½[X, v]`.
    pub fn initial_derivative(&self, v: &DVector<f64>) -> DVector<f64> {
        let c = self.frame.generator_coefficients(v);
        let translated = self.translated_left(&c);
        let g = self.spec.group();
        let x = self.direction.coords();
        g.bracket_coords(x, v) * 0.5 - g.bracket_coords(x, &translated)
    }

    fn translated_left(&self, c: &DVector<f64>) -> DVector<f64> {
        let g = self.spec.group();
        let g_inv = self.frame.base.matrix().adjoint();
        let mut out = DVector::zeros(g.algebra_dim());
        for (ca, gen) in c.iter().zip(self.spec.generators()) {
            if *ca != 0.0 {
                out += g.adjoint_coords(&g_inv, &gen.left) * *ca;
            }
        }
        out
    }

    pub fn field(&self, v: &AlgebraElement) -> Result<HolonomyJacobiField> {
        self.field_coords(v.coords())
    }

    pub fn field_coords(&self, v: &DVector<f64>) -> Result<HolonomyJacobiField> {
        let residual = self.frame.horizontal_residual(v);
        if residual > VERTICAL_TOL * v.norm().max(1.0) {
            return Err(Error::NotVertical { residual });
        }
        let coefficients = self.frame.generator_coefficients(v);
        let translated_left = self.translated_left(&coefficients);
        let right = self
            .spec
            .generators()
            .iter()
            .zip(coefficients.iter())
            .fold(DVector::zeros(v.len()), |acc, (gen, c)| acc + &gen.right * *c);

        let jp = self.initial_derivative(v);
        let t_term = self.frame.vertical_part(&jp);
        let a_term = &jp - &t_term;
        let closed_form = ClosedFormJacobiField::from_initial(&self.decomposition, v, &jp);
        Ok(HolonomyJacobiField {
            geodesic: self.clone(),
            initial: v.clone(),
            coefficients,
            translated_left,
            right,
            a_term,
            t_term,
            closed_form,
        })
    }
}

#[derive(Clone, Debug)]
pub struct HolonomyJacobiField {
    geodesic: HolonomyGeodesic,
    initial: DVector<f64>,
    coefficients: DVector<f64>,
    translated_left: DVector<f64>,
    right: DVector<f64>,
    a_term: DVector<f64>,
    t_term: DVector<f64>,
    closed_form: ClosedFormJacobiField,
}

impl HolonomyJacobiField {
    pub fn geodesic(&self) -> &HolonomyGeodesic {
        &self.geodesic
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    pub fn generator_coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn closed_form(&self) -> &ClosedFormJacobiField {
        &self.closed_form
    }

    /// Horizontal part of `J′(0)`.
    pub fn a_term(&self) -> &DVector<f64> {
        &self.a_term
    }

    /// Vertical part of `J′(0)`.
    pub fn t_term(&self) -> &DVector<f64> {
        &self.t_term
    }

    pub fn initial_derivative(&self) -> DVector<f64> {
        &self.a_term + &self.t_term
    }

    /// Route A: `Σ c_a (Ad_{γ(t)⁻¹}P_a − Q_a)`.
    pub fn action_value(&self, t: f64) -> DVector<f64> {
        let flow = self.geodesic.decomposition.flow();
        flow.adjoint_coords(-t, &self.translated_left) - &self.right
    }

    /// Route B: the closed-form Jacobi field.
    pub fn jacobi_value(&self, t: f64) -> DVector<f64> {
        self.closed_form.evaluate_coords(t)
    }

    /// `Σ |c_a| (‖P_a‖ + ‖Q_a‖)`.
    pub fn norm_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(self.geodesic.spec.generators())
            .map(|(c, g)| c.abs() * g.norm_bound())
            .sum()
    }

    /// Horizontal residual of `J(t)` against the vertical space at `γ(t)`.
    pub fn verticality_residual(&self, t: f64) -> Result<f64> {
        let frame = self.geodesic.spec.vertical_frame(&self.geodesic.point(t))?;
        Ok(frame.horizontal_residual(&self.jacobi_value(t)))
    }

    /// `F₀`: the `V₀` component of `J′(0)`.
    pub fn linear_growth_norm(&self) -> f64 {
        self.closed_form.linear_growth().norm()
    }
}

/// `G//H ≅ ΔG\(G×G)/H`: the diagonal acts on the left, `H` on the right.
pub fn eschenburg_two_sided(spec: &BiquotientSpec) -> Result<BiquotientSpec> {
    let g = spec.group();
    let n = g.algebra_dim();
    let doubled = GroupSpec::new(GroupFamily::product(g.family().clone(), g.family().clone()))?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut generators = Vec::with_capacity(n + spec.vertical_dim());
    for i in 0..n {
        let mut d = DVector::zeros(2 * n);
        d[i] = r;
        d[n + i] = r;
        generators.push(Generator::left_only(d));
    }
    for gen in spec.generators() {
        let mut q = DVector::zeros(2 * n);
        q.rows_mut(0, n).copy_from(&gen.left);
        q.rows_mut(n, n).copy_from(&gen.right);
        generators.push(Generator::right_only(q));
    }
    BiquotientSpec::new(format!("{}-eschenburg", spec.name()), &doubled, generators)
}

/// Pushes a tangent vector of `G×G` at `(g₁, g₂)` forward under
/// `(g₁, g₂) ↦ g₁⁻¹g₂`. Returns the image point and left coordinate
/// `B − Ad_{h⁻¹}A` at `h = g₁⁻¹g₂`.
pub fn eschenburg_pushforward(
    original: &Group,
    point: &GroupElement,
    left: &DVector<f64>,
) -> Result<(GroupElement, AlgebraElement)> {
    let m = original.matrix_dim();
    let n = original.algebra_dim();
    if point.matrix().nrows() != 2 * m || left.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: left.len(),
        });
    }
    let g1 = point.matrix().view((0, 0), (m, m)).into_owned();
    let g2 = point.matrix().view((m, m), (m, m)).into_owned();
    let h = GroupElement::from_matrix(original, g1.adjoint() * g2)?;
    let a = left.rows(0, n).into_owned();
    let b = left.rows(n, n).into_owned();
    let coords = b - original.adjoint_coords(&h.matrix().adjoint(), &a);
    Ok((h, AlgebraElement::new(original, coords)?))
}

/// Catalog entry: a spec plus known properties and, where one is known, a
/// direction at the identity with nontrivial Ω.
#[derive(Clone, Debug)]
pub struct Preset {
    pub spec: Arc<BiquotientSpec>,
    pub description: &'static str,
    pub properties: Vec<&'static str>,
    pub omega_direction: Option<DVector<f64>>,
    /// An incommensurable (two-frequency) horizontal direction with
    /// nontrivial Ω, when the preset has one.
    pub irrational_omega_direction: Option<DVector<f64>>,
}

pub const PRESET_NAMES: [&str; 4] = [
    "hopf",
    "su2xsu2-diag-circle",
    "su3-circle-(1,1,-2)",
    "su3-circle-(1,1,-2)-eschenburg",
];

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// A fixed horizontal direction `Z ⊥ diag(i,i,−2i)` in su(3) with
/// incommensurable eigenvalues.
fn su3_irrational_horizontal(g: &Group) -> DVector<f64> {
    let mut z = DVector::from_vec(vec![
        0.0,
        0.0,
        1.0,
        std::f64::consts::SQRT_2,
        0.0,
        3f64.sqrt(),
        0.5,
        0.0,
    ]);
    debug_assert_eq!(z.len(), g.algebra_dim());
    z[1] = 0.0;
    z.normalize()
}

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "hopf" => {
            let g = GroupSpec::parse("su(2)")?;
            let spec = BiquotientSpec::new("hopf", &g, vec![Generator::right_only(unit(3, 0))])?;
            Ok(Preset {
                spec: Arc::new(spec),
                description: "SU(2) modulo the right circle generated by diag(i,-i)",
                properties: vec!["fibers totally geodesic", "horizontal space 2-dimensional, no horizontal flats"],
                omega_direction: None,
                irrational_omega_direction: None,
            })
        }
        "su2xsu2-diag-circle" => {
            let g = GroupSpec::parse("su(2)xsu(2)")?;
            let mut p = DVector::zeros(6);
            p[0] = std::f64::consts::FRAC_1_SQRT_2;
            p[3] = std::f64::consts::FRAC_1_SQRT_2;
            let spec = BiquotientSpec::new("su2xsu2-diag-circle", &g, vec![Generator::left_only(p)])?;
            let mut omega = DVector::zeros(6);
            omega[0] = std::f64::consts::FRAC_1_SQRT_2;
            omega[3] = -std::f64::consts::FRAC_1_SQRT_2;
            Ok(Preset {
                spec: Arc::new(spec),
                description: "SU(2)xSU(2) modulo the left diagonal circle generated by (u1,u1)/2",
                properties: vec!["fibers totally geodesic", "horizontal flats through every point"],
                omega_direction: Some(omega),
                irrational_omega_direction: None,
            })
        }
        "su3-circle-(1,1,-2)" => {
            let g = GroupSpec::parse("su(3)")?;
            // basis element 1 is diag(i, i, −2i)/√6
            let spec = BiquotientSpec::new("su3-circle-(1,1,-2)", &g, vec![Generator::right_only(unit(8, 1))])?;
            Ok(Preset {
                spec: Arc::new(spec),
                description: "SU(3) modulo the right circle with weight diag(i,i,-2i)/sqrt(6)",
                properties: vec!["fibers totally geodesic", "horizontal flats exist"],
                // (E₁₂ − E₂₁)/√2 commutes with the weight
                omega_direction: Some(unit(8, 2)),
                irrational_omega_direction: None,
            })
        }
        "su3-circle-(1,1,-2)-eschenburg" => {
            let base = preset("su3-circle-(1,1,-2)")?;
            let spec = eschenburg_two_sided(&base.spec)?;
            let z = su3_irrational_horizontal(base.spec.group());
            let mut x = DVector::zeros(16);
            x.rows_mut(0, 8).copy_from(&z);
            x.rows_mut(8, 8).copy_from(&(-&z));
            let x = x.normalize();
            let mut closed = DVector::zeros(16);
            closed[2] = 1.0;
            closed[10] = -1.0;
            Ok(Preset {
                spec: Arc::new(spec),
                description: "two-sided model of su3-circle-(1,1,-2): diagonal SU(3) on the left of SU(3)xSU(3), the circle on the right",
                properties: vec!["two-sided action", "fibers not totally geodesic"],
                omega_direction: Some(closed.normalize()),
                irrational_omega_direction: Some(x),
            })
        }
        other => Err(Error::Config(format!(
            "unknown preset '{other}' (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("built-in presets are valid"))
        .collect()
}

/// Serializable form of a spec: generators as coordinate vectors in the
/// declared basis of `group`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDescription {
    pub name: String,
    pub group: GroupFamily,
    pub generators: Vec<GeneratorDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDescription {
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
}

impl SpecDescription {
    pub fn from_spec(spec: &BiquotientSpec) -> Self {
        SpecDescription {
            name: spec.name.clone(),
            group: spec.group.family().clone(),
            generators: spec
                .generators
                .iter()
                .map(|g| GeneratorDescription {
                    p: g.left.iter().cloned().collect(),
                    q: g.right.iter().cloned().collect(),
                })
                .collect(),
        }
    }

    /// Builds the spec. An empty `p` or `q` means zero.
    pub fn build(&self) -> Result<BiquotientSpec> {
        let group = GroupSpec::new(self.group.clone())?;
        let n = group.algebra_dim();
        let side = |v: &[f64], what: &str, i: usize| -> Result<DVector<f64>> {
            match v.len() {
                0 => Ok(DVector::zeros(n)),
                l if l == n => Ok(DVector::from_column_slice(v)),
                l => Err(Error::InvalidGenerators(format!(
                    "generator {i}: {what} has {l} coordinates, expected {n}"
                ))),
            }
        };
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| Ok(Generator::new(side(&g.p, "p", i)?, side(&g.q, "q", i)?)))
            .collect::<Result<Vec<_>>>()?;
        BiquotientSpec::new(self.name.clone(), &group, generators)
    }
}

/// Dense matrix with the orthonormal vertical frame as columns.
pub fn frame_matrix(frame: &VerticalFrame) -> DMatrix<f64> {
    linalg::columns(&frame.vectors, frame.base.group().algebra_dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::bracket;
    use crate::sampling::{random_algebra, rng_from_seed};
    use std::f64::consts::SQRT_2;

    fn spec(name: &str) -> Arc<BiquotientSpec> {
        preset(name).unwrap().spec
    }

    /// Random horizontal unit direction at g.
    fn random_horizontal(s: &BiquotientSpec, g: &GroupElement, rng: &mut crate::sampling::SeededRng) -> AlgebraElement {
        let frame = s.vertical_frame(g).unwrap();
        let v = random_algebra(s.group(), rng);
        AlgebraElement::new(s.group(), frame.horizontal_part(v.coords()).normalize()).unwrap()
    }

    fn random_vertical(s: &BiquotientSpec, g: &GroupElement, rng: &mut crate::sampling::SeededRng) -> DVector<f64> {
        let frame = s.vertical_frame(g).unwrap();
        let c = crate::sampling::gaussian_vector(frame.dim(), rng);
        frame.vectors.iter().zip(c.iter()).fold(DVector::zeros(s.group().algebra_dim()), |a, (v, c)| a + v * *c)
    }

    #[test]
    fn presets_validate() {
        for p in presets() {
            assert!(p.spec.is_product(), "{}", p.spec.name());
            assert!(p.spec.horizontal_dim() >= 2);
        }
        assert_eq!(spec("su3-circle-(1,1,-2)-eschenburg").vertical_dim(), 9);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn rejects_bad_generators() {
        let g = GroupSpec::parse("su(2)").unwrap();
        let two = Generator::right_only(DVector::from_vec(vec![2.0, 0.0, 0.0]));
        assert!(matches!(
            BiquotientSpec::new("x", &g, vec![two]),
            Err(Error::InvalidGenerators(_))
        ));
        // conjugation action (P = Q) is not free at the identity
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let conj = Generator::new(DVector::from_vec(vec![r, 0.0, 0.0]), DVector::from_vec(vec![r, 0.0, 0.0]));
        assert!(matches!(
            BiquotientSpec::new("conj", &g, vec![conj]),
            Err(Error::NotFree { .. })
        ));
    }

    #[test]
    fn action_field_examples() {
        let hopf = spec("hopf");
        let g = hopf.group().clone();
        let mut rng = rng_from_seed(1);
        for _ in 0..10 {
            let p = random_group_element(&g, &mut rng);
            let f = hopf.action_field(0, &p).unwrap();
            // −u₁/√2 = −e₀: constant left coordinate of unit norm
            assert!((f.left.coords() + unit(3, 0)).norm() < 1e-14);
        }
        assert!(matches!(
            hopf.action_field(1, &GroupElement::identity(&g)),
            Err(Error::IndexOutOfRange { .. })
        ));

        let diag = spec("su2xsu2-diag-circle");
        let e = GroupElement::identity(diag.group());
        let f = diag.action_field(0, &e).unwrap();
        assert!((f.left.coords() - &diag.generators()[0].left).norm() < 1e-15);
    }

    #[test]
    fn action_field_norms_constant_for_one_sided_varying_for_two_sided() {
        let mut rng = rng_from_seed(2);
        let g = GroupSpec::parse("su(3)").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let two_sided = BiquotientSpec::new(
            "two",
            &g,
            vec![Generator::new(unit(8, 0) * r, unit(8, 1) * r)],
        )
        .unwrap();
        let one_sided = spec("su3-circle-(1,1,-2)");
        let mut norms = Vec::new();
        for _ in 0..20 {
            let p = random_group_element(&g, &mut rng);
            let a = one_sided.action_field(0, &p).unwrap().norm();
            assert!((a - 1.0).abs() < 1e-13);
            norms.push(two_sided.action_field(0, &p).unwrap().norm());
        }
        let spread = norms.iter().cloned().fold(f64::MIN, f64::max) - norms.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-2);
    }

    #[test]
    fn vertical_frame_examples() {
        let hopf = spec("hopf");
        let e = GroupElement::identity(hopf.group());
        let frame = hopf.vertical_frame(&e).unwrap();
        assert_eq!(frame.dim(), 1);
        assert!((frame.vectors[0][0].abs() - 1.0).abs() < 1e-15);

        let diag = spec("su2xsu2-diag-circle");
        let frame = diag.vertical_frame(&GroupElement::identity(diag.group())).unwrap();
        let expected = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]) / SQRT_2;
        assert!((frame.vectors[0].dot(&expected).abs() - 1.0).abs() < 1e-15);

        let mut rng = rng_from_seed(3);
        for p in presets() {
            for _ in 0..100 {
                let g = random_group_element(p.spec.group(), &mut rng);
                assert_eq!(p.spec.vertical_frame(&g).unwrap().dim(), p.spec.vertical_dim());
            }
        }
    }

    #[test]
    fn frame_span_independent_of_order() {
        let s = spec("su3-circle-(1,1,-2)-eschenburg");
        let mut rng = rng_from_seed(4);
        let g = random_group_element(s.group(), &mut rng);
        let frame = s.vertical_frame(&g).unwrap();
        let mut reversed = frame.raw.clone();
        reversed.reverse();
        let other = linalg::orthonormalize(&reversed, 1e-8);
        assert!(linalg::max_principal_angle(&frame.vectors, &other) < 1e-10);
    }

    #[test]
    fn horizontal_projection_properties() {
        let s = spec("su3-circle-(1,1,-2)-eschenburg");
        let mut rng = rng_from_seed(5);
        let g = random_group_element(s.group(), &mut rng);
        let v = TangentVector::new(&g, random_algebra(s.group(), &mut rng));
        let h = s.horizontal_project(&g, &v).unwrap();
        let hh = s.horizontal_project(&g, &h).unwrap();
        assert!((hh.left.clone() - h.left.clone()).norm() < 1e-12);
        let pyth = h.norm().powi(2) + (v.left.clone() - h.left.clone()).norm().powi(2);
        assert!((pyth - v.norm().powi(2)).abs() < 1e-12);
        let vert = TangentVector::new(&g, AlgebraElement::new(s.group(), random_vertical(&s, &g, &mut rng)).unwrap());
        assert!(s.horizontal_project(&g, &vert).unwrap().norm() < 1e-12);
        let other = random_group_element(s.group(), &mut rng);
        assert!(matches!(s.horizontal_project(&other, &v), Err(Error::BaseMismatch)));
    }

    #[test]
    fn hopf_holonomy_field() {
        let hopf = spec("hopf");
        let g = hopf.group().clone();
        let e = GroupElement::identity(&g);
        let x = AlgebraElement::basis(&g, 1); // u₂/√2
        let geo = HolonomyGeodesic::new(&hopf, &e, &x).unwrap();
        // v = u₁ = √2 e₀
        let v = unit(3, 0) * SQRT_2;
        let field = geo.field_coords(&v).unwrap();
        // J′(0) = ½[u₂/√2, u₁] = −u₃/√2 = −e₂
        assert!((field.initial_derivative() + unit(3, 2)).norm() < 1e-14);
        assert!(field.t_term().norm() < 1e-15);
        assert!((field.a_term() + unit(3, 2)).norm() < 1e-14);
        for t in [0.0, 1.0, 7.3, 40.0] {
            assert!((field.action_value(t).norm() - SQRT_2).abs() < 1e-13);
            assert!((field.jacobi_value(t).norm() - SQRT_2).abs() < 1e-12);
        }
        assert!((field.action_value(0.0) - &v).norm() < 1e-15);
    }

    #[test]
    fn holonomy_preconditions() {
        let hopf = spec("hopf");
        let g = hopf.group().clone();
        let e = GroupElement::identity(&g);
        assert!(matches!(
            HolonomyGeodesic::new(&hopf, &e, &AlgebraElement::basis(&g, 0)),
            Err(Error::NotHorizontal { .. })
        ));
        let geo = HolonomyGeodesic::new(&hopf, &e, &AlgebraElement::basis(&g, 1)).unwrap();
        assert!(matches!(geo.field_coords(&unit(3, 2)), Err(Error::NotVertical { .. })));
    }

    #[test]
    fn routes_agree_and_fields_stay_vertical() {
        let mut rng = rng_from_seed(6);
        for p in presets() {
            let s = &p.spec;
            for _ in 0..5 {
                let g = random_group_element(s.group(), &mut rng);
                let x = random_horizontal(s, &g, &mut rng);
                let geo = HolonomyGeodesic::new(s, &g, &x).unwrap();
                let v = random_vertical(s, &g, &mut rng);
                let field = geo.field_coords(&v).unwrap();
                assert!((field.jacobi_value(0.0) - &v).norm() < 1e-13);
                assert!(field.linear_growth_norm() < 1e-9, "{}", s.name());
                for i in 0..=50 {
                    let t = i as f64 * 4.0;
                    let a = field.action_value(t);
                    let b = field.jacobi_value(t);
                    assert!((&a - &b).norm() < 1e-8, "{} t={t}: {}", s.name(), (&a - &b).norm());
                    assert!(field.verticality_residual(t).unwrap() < 1e-8);
                    assert!(a.norm() <= field.norm_bound() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn t_term_vanishes_for_one_sided_presets() {
        let mut rng = rng_from_seed(7);
        for name in ["hopf", "su2xsu2-diag-circle", "su3-circle-(1,1,-2)"] {
            let s = spec(name);
            for _ in 0..10 {
                let g = random_group_element(s.group(), &mut rng);
                let x = random_horizontal(&s, &g, &mut rng);
                let geo = HolonomyGeodesic::new(&s, &g, &x).unwrap();
                let field = geo.field_coords(&random_vertical(&s, &g, &mut rng)).unwrap();
                assert!(field.t_term().norm() < 1e-10, "{name}");
            }
        }
        // the two-sided model has genuinely nonzero T-values somewhere
        let s = spec("su3-circle-(1,1,-2)-eschenburg");
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let g = random_group_element(s.group(), &mut rng);
            let x = random_horizontal(&s, &g, &mut rng);
            let geo = HolonomyGeodesic::new(&s, &g, &x).unwrap();
            let field = geo.field_coords(&random_vertical(&s, &g, &mut rng)).unwrap();
            worst = worst.max(field.t_term().norm());
        }
        assert!(worst > 1e-3);
    }

    #[test]
    fn eschenburg_dimensions() {
        let g = GroupSpec::parse("su(2)").unwrap();
        let trivial = BiquotientSpec::new("trivial", &g, vec![]).unwrap();
        let red = eschenburg_two_sided(&trivial).unwrap();
        assert_eq!(red.vertical_dim(), 3);
        assert_eq!(red.group().algebra_dim() - red.vertical_dim(), g.algebra_dim());

        let hopf = spec("hopf");
        let red = eschenburg_two_sided(&hopf).unwrap();
        let frame = red.vertical_frame(&GroupElement::identity(red.group())).unwrap();
        assert_eq!(frame.dim(), 4);
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let p = random_group_element(red.group(), &mut rng);
            assert_eq!(red.horizontal_dim(), 3 - 1);
            assert_eq!(red.vertical_frame(&p).unwrap().dim(), 4);
        }
    }

    /// The projection (g₁, g₂) ↦ g₁⁻¹g₂ carries horizontal vectors of the
    /// two-sided model to horizontal vectors of the original.
    #[test]
    fn eschenburg_pushforward_preserves_horizontality() {
        let orig = spec("su3-circle-(1,1,-2)");
        let red = Arc::new(eschenburg_two_sided(&orig).unwrap());
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let p = random_group_element(red.group(), &mut rng);
            let x = random_horizontal(&red, &p, &mut rng);
            let (h, y) = eschenburg_pushforward(orig.group(), &p, x.coords()).unwrap();
            let frame = orig.vertical_frame(&h).unwrap();
            assert!(frame.vertical_residual(y.coords()) < 1e-10);
            assert!(y.norm() > 1e-3);
            // vertical vectors push forward into the original vertical space
            let v = random_vertical(&red, &p, &mut rng);
            let (_, w) = eschenburg_pushforward(orig.group(), &p, &v).unwrap();
            assert!(frame.horizontal_residual(w.coords()) < 1e-10);
        }
    }

    #[test]
    fn spec_description_round_trip() {
        for p in presets() {
            let d = SpecDescription::from_spec(&p.spec);
            let text = toml::to_string(&d).unwrap();
            let back: SpecDescription = toml::from_str(&text).unwrap();
            assert_eq!(back, d);
            let rebuilt = back.build().unwrap();
            assert_eq!(rebuilt.generators(), p.spec.generators());
            assert_eq!(rebuilt.group().family(), p.spec.group().family());
        }
    }

    #[test]
    fn preset_omega_directions_are_horizontal_and_commute_with_a_vertical() {
        for p in presets() {
            let e = GroupElement::identity(p.spec.group());
            let frame = p.spec.vertical_frame(&e).unwrap();
            for x in [&p.omega_direction, &p.irrational_omega_direction].into_iter().flatten() {
                assert!((x.norm() - 1.0).abs() < 1e-14);
                assert!(frame.vertical_residual(x) < 1e-14, "{}", p.spec.name());
                let xe = AlgebraElement::new(p.spec.group(), x.clone()).unwrap();
                let commuting = frame.vectors.iter().any(|v| {
                    let ve = AlgebraElement::new(p.spec.group(), v.clone()).unwrap();
                    bracket(&xe, &ve).unwrap().norm() < 1e-12
                }) || p.spec.name().ends_with("eschenburg");
                assert!(commuting);
            }
        }
    }
}
