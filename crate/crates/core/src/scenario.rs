//! Scenario configuration, execution and report emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::biquotient::{preset, presets, BiquotientSpec, HolonomyGeodesic, SpecDescription};
use crate::boundedness::{
    boundedness_audit, omega_return, omega_subspace, recurrence_times_limited, synthetic_slope, window_slope,
};
use crate::error::{Error, Result};
use crate::example_e;
use crate::flats::{find_horizontal_flat, holonomy_orthogonality, verify_part1, verify_part2};
use crate::liegroup::{AlgebraElement, GroupElement};
use crate::sampling::{random_algebra, random_group_element, substream, SeededRng};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Holonomy,
    Flats,
    Boundedness,
    Omega,
    ExampleE,
    All,
}

impl CheckKind {
    pub const ORDERED: [CheckKind; 5] = [
        CheckKind::Holonomy,
        CheckKind::Flats,
        CheckKind::Boundedness,
        CheckKind::Omega,
        CheckKind::ExampleE,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Holonomy => "holonomy",
            CheckKind::Flats => "flats",
            CheckKind::Boundedness => "boundedness",
            CheckKind::Omega => "omega",
            CheckKind::ExampleE => "example-e",
            CheckKind::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let all = [CheckKind::All].into_iter().chain(CheckKind::ORDERED);
        for k in all {
            if k.name() == s {
                return Ok(k);
            }
        }
        Err(Error::Config(format!(
            "unknown check '{s}' (expected holonomy, flats, boundedness, omega, example-e or all)"
        )))
    }

    fn needs_spec(self) -> bool {
        !matches!(self, CheckKind::ExampleE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Horizon for route comparison and holonomy orthogonality.
    pub t_max: f64,
    pub samples: usize,
    /// Random (g, X, v) draws for holonomy and boundedness checks.
    pub trials: usize,
    pub audit_t_max: f64,
    pub audit_samples: usize,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub restarts: usize,
    pub epsilons: Vec<f64>,
    pub recurrence_t_max: f64,
    /// Recurrence times kept per tolerance.
    pub recurrence_limit: usize,
    pub synthetic_f0: f64,
    pub example_t_max: f64,
    pub lipschitz_time: f64,
    pub lipschitz_samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            t_max: 100.0,
            samples: 201,
            trials: 5,
            audit_t_max: 500.0,
            audit_samples: 501,
            grid_half_width: 5.0,
            grid_points: 10,
            restarts: 50,
            epsilons: vec![1e-1, 1e-2, 1e-3],
            recurrence_t_max: 2e6,
            recurrence_limit: 10,
            synthetic_f0: 0.1,
            example_t_max: 50.0,
            lipschitz_time: 5.0,
            lipschitz_samples: 64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Write per-check CSV series next to the report.
    pub csv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<SpecDescription>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_checks() -> Vec<CheckKind> {
    vec![CheckKind::All]
}

impl ScenarioConfig {
    pub fn for_preset(name: &str) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            preset: Some(name.to_string()),
            custom: None,
            checks: default_checks(),
            seed: 0,
            params: Params::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Selected checks, `all` expanded, in execution order.
    pub fn selected(&self) -> Vec<CheckKind> {
        let mut out: Vec<CheckKind> = if self.checks.contains(&CheckKind::All) {
            CheckKind::ORDERED.to_vec()
        } else {
            self.checks.clone()
        };
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        match (&self.preset, &self.custom) {
            (Some(_), Some(_)) => return Err(Error::Config("give either preset or [custom], not both".into())),
            (None, None) if self.selected().iter().any(|c| c.needs_spec()) => {
                return Err(Error::Config("a preset or [custom] spec is required for the selected checks".into()))
            }
            _ => {}
        }
        let p = &self.params;
        let positive = [
            ("t_max", p.t_max),
            ("audit_t_max", p.audit_t_max),
            ("grid_half_width", p.grid_half_width),
            ("recurrence_t_max", p.recurrence_t_max),
            ("synthetic_f0", p.synthetic_f0),
            ("example_t_max", p.example_t_max),
            ("lipschitz_time", p.lipschitz_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("params.{name} must be positive, got {v}")));
            }
        }
        if p.epsilons.is_empty() || p.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("params.epsilons must be a non-empty list of positive values".into()));
        }
        let counts = [
            ("samples", p.samples, 2),
            ("trials", p.trials, 1),
            ("audit_samples", p.audit_samples, 4),
            ("restarts", p.restarts, 1),
            ("recurrence_limit", p.recurrence_limit, 1),
            ("lipschitz_samples", p.lipschitz_samples, 10),
        ];
        for (name, v, min) in counts {
            if v < min {
                return Err(Error::Config(format!("params.{name} must be at least {min}, got {v}")));
            }
        }
        Ok(())
    }

    fn build_spec(&self) -> Result<Option<Arc<BiquotientSpec>>> {
        if let Some(name) = &self.preset {
            return Ok(Some(preset(name).map_err(|e| Error::Config(e.to_string()))?.spec));
        }
        if let Some(c) = &self.custom {
            return Ok(Some(Arc::new(c.build().map_err(|e| Error::Config(e.to_string()))?)));
        }
        Ok(None)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub passed: bool,
    pub measured: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The report with every wall time zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> ScenarioReport {
        let mut r = self.clone();
        for c in &mut r.checks {
            c.wall_time_ms = 0.0;
        }
        r
    }
}

/// Fixed table of check ids and the property each one certifies.
pub const ANCHORS: [(&str, &str); 14] = [
    ("holonomy.routes", "holonomy Jacobi field: group-action field equals closed-form Jacobi field with initial derivative split into A- and T-parts"),
    ("holonomy.vertical", "holonomy Jacobi fields stay vertical along horizontal geodesics"),
    ("flats.search", "a horizontal zero-curvature plane is a commuting orthonormal horizontal pair"),
    ("flats.part1", "horizontal zero-curvature planes project to zero-curvature planes (K_B = K_G + 3|A_X Y|^2)"),
    ("flats.part2", "the exponential image of a horizontal zero-curvature plane is everywhere horizontal"),
    ("flats.orthogonality", "holonomy fields stay orthogonal to the transported plane iff J'(0) is orthogonal to Y"),
    ("boundedness.audit", "every holonomy Jacobi field of a submersion from a compact Lie group stays bounded"),
    ("boundedness.synthetic", "a Jacobi field with linear coefficient F0 grows asymptotically with slope |F0|"),
    ("omega.subspace", "vertical vectors with parallel holonomy fields form a subspace commuting with X"),
    ("omega.recurrence", "the closure of a geodesic through e is a torus, so exp(tX) returns near e"),
    ("omega.return", "the parallel holonomy subspace returns to itself along recurrence times"),
    ("example-e.growth", "twisted product with non-compact holonomy has exponentially growing holonomy Jacobi fields"),
    ("example-e.lipschitz", "holonomy diffeomorphisms of the twisted product admit no uniform Lipschitz constant"),
    ("example-e.group", "holonomy group of the twisted product is isomorphic to R"),
];

pub fn anchor(id: &str) -> &'static str {
    ANCHORS
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, v)| *v)
        .unwrap_or("unlisted check")
}

/// A named series written as `t,value,residual` rows.
#[derive(Clone, Debug, Default)]
pub struct Series {
    pub name: String,
    pub rows: Vec<(f64, f64, f64)>,
}

pub fn write_series_csv(path: &Path, series: &Series) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "value", "residual"])?;
    for (t, v, r) in &series.rows {
        w.write_record([t.to_string(), v.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

struct Recorder {
    checks: Vec<CheckRecord>,
    series: Vec<Series>,
}

type Measured = BTreeMap<String, Value>;
type Tolerances = BTreeMap<String, f64>;

fn m(pairs: Value) -> Measured {
    match pairs {
        Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

fn tol(pairs: &[(&str, f64)]) -> Tolerances {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl Recorder {
    fn record(&mut self, id: &str, start: Instant, outcome: Result<(bool, Measured)>, tolerances: Tolerances) {
        let (passed, measured) = match outcome {
            Ok(v) => v,
            Err(e) => (false, m(json!({ "error": e.to_string() }))),
        };
        self.checks.push(CheckRecord {
            id: id.to_string(),
            anchor: anchor(id).to_string(),
            passed,
            measured,
            tolerances,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
}

fn random_horizontal(spec: &BiquotientSpec, g: &GroupElement, rng: &mut SeededRng) -> Result<AlgebraElement> {
    let frame = spec.vertical_frame(g)?;
    loop {
        let v = random_algebra(spec.group(), rng);
        let h = frame.horizontal_part(v.coords());
        if h.norm() > 1e-6 {
            return AlgebraElement::new(spec.group(), h.normalize());
        }
    }
}

fn random_vertical(spec: &BiquotientSpec, g: &GroupElement, rng: &mut SeededRng) -> Result<nalgebra::DVector<f64>> {
    let frame = spec.vertical_frame(g)?;
    let c = crate::sampling::gaussian_vector(frame.dim(), rng);
    Ok(frame
        .vectors
        .iter()
        .zip(c.iter())
        .fold(nalgebra::DVector::zeros(spec.group().algebra_dim()), |a, (v, c)| a + v * *c))
}

/// Seeded stream per check so that selections do not shift each other's draws.
fn stream(seed: u64, kind: CheckKind) -> SeededRng {
    substream(seed, 1000 + kind as u64)
}

fn run_holonomy(rec: &mut Recorder, spec: &Arc<BiquotientSpec>, cfg: &ScenarioConfig) {
    let p = &cfg.params;
    let start = Instant::now();
    let mut rng = stream(cfg.seed, CheckKind::Holonomy);
    let mut series = Series {
        name: "holonomy".into(),
        rows: Vec::new(),
    };
    let outcome = (|| -> Result<(f64, f64, f64, f64)> {
        let (mut disc, mut vert, mut t_term, mut f0): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for trial in 0..p.trials {
            let g = random_group_element(spec.group(), &mut rng);
            let x = random_horizontal(spec, &g, &mut rng)?;
            let v = random_vertical(spec, &g, &mut rng)?;
            let geo = HolonomyGeodesic::new(spec, &g, &x)?;
            let field = geo.field_coords(&v)?;
            t_term = t_term.max(field.t_term().norm() / v.norm());
            f0 = f0.max(field.linear_growth_norm());
            for k in 0..p.samples {
                let t = p.t_max * k as f64 / (p.samples - 1) as f64;
                let b = field.jacobi_value(t);
                let d = (field.action_value(t) - &b).norm();
                disc = disc.max(d);
                vert = vert.max(field.verticality_residual(t)?);
                if trial == 0 {
                    series.rows.push((t, b.norm(), d));
                }
            }
        }
        Ok((disc, vert, t_term, f0))
    })();
    match outcome {
        Ok((disc, vert, t_term, f0)) => {
            rec.record(
                "holonomy.routes",
                start,
                Ok((
                    disc < 1e-8,
                    m(json!({ "max_route_discrepancy": disc, "max_relative_t_term": t_term, "max_f0": f0, "trials": p.trials, "t_max": p.t_max })),
                )),
                tol(&[("max_route_discrepancy", 1e-8)]),
            );
            rec.record(
                "holonomy.vertical",
                start,
                Ok((vert < 1e-8, m(json!({ "max_horizontal_residual": vert })))),
                tol(&[("max_horizontal_residual", 1e-8)]),
            );
        }
        Err(e) => rec.record("holonomy.routes", start, Err(e), tol(&[("max_route_discrepancy", 1e-8)])),
    }
    rec.series.push(series);
}

fn run_flats(rec: &mut Recorder, spec: &Arc<BiquotientSpec>, cfg: &ScenarioConfig) {
    let p = &cfg.params;
    let start = Instant::now();
    let e = GroupElement::identity(spec.group());
    let search = match find_horizontal_flat(spec, &e, cfg.seed, p.restarts) {
        Ok(s) => s,
        Err(err) => {
            rec.record("flats.search", start, Err(err), tol(&[("commutator_norm", 1e-10)]));
            return;
        }
    };
    let Some(candidate) = search.candidate else {
        // no flat: passes only when nonexistence is certified
        let certified = search.certified_lower_bound.filter(|b| *b > 0.0);
        rec.record(
            "flats.search",
            start,
            Ok((
                certified.is_some(),
                m(json!({
                    "found": false,
                    "best_residual": search.best_residual,
                    "certified_lower_bound": certified,
                    "restarts_run": search.restarts_run,
                })),
            )),
            tol(&[("commutator_norm", 1e-10)]),
        );
        return;
    };
    rec.record(
        "flats.search",
        start,
        Ok((
            candidate.commutator_norm < 1e-10,
            m(json!({
                "found": true,
                "commutator_norm": candidate.commutator_norm,
                "restarts_run": search.restarts_run,
                "x": candidate.x.coords().as_slice(),
                "y": candidate.y.coords().as_slice(),
            })),
        )),
        tol(&[("commutator_norm", 1e-10)]),
    );

    let start = Instant::now();
    let r = verify_part1(spec, &candidate).map(|r| (r.passed, m(json!(r))));
    rec.record("flats.part1", start, r, tol(&[("k_base", 1e-10)]));

    let start = Instant::now();
    let r = verify_part2(spec, &candidate, p.grid_half_width, p.grid_points).map(|r| (r.passed, m(json!(r))));
    rec.record("flats.part2", start, r, tol(&[("max_vertical_residual", 1e-8)]));

    let start = Instant::now();
    let r = holonomy_orthogonality(spec, &candidate, p.t_max, p.samples).map(|r| (r.passed, m(json!(r))));
    rec.record("flats.orthogonality", start, r, tol(&[("max_inner", 1e-8), ("max_initial", 1e-10)]));
}

fn run_boundedness(rec: &mut Recorder, spec: &Arc<BiquotientSpec>, cfg: &ScenarioConfig) {
    let p = &cfg.params;
    let start = Instant::now();
    let mut rng = stream(cfg.seed, CheckKind::Boundedness);
    let mut series = Series {
        name: "boundedness".into(),
        rows: Vec::new(),
    };
    let outcome = (|| -> Result<(bool, Measured)> {
        let (mut f0, mut slope, mut perp): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut ratio = f64::INFINITY;
        let mut all = true;
        for trial in 0..p.trials {
            let g = random_group_element(spec.group(), &mut rng);
            let x = random_horizontal(spec, &g, &mut rng)?;
            let rep = boundedness_audit(spec, &g, &x, p.audit_t_max, p.audit_samples)?;
            f0 = f0.max(rep.max_f0);
            slope = slope.max(rep.max_abs_slope);
            perp = perp.max(rep.perp_inner);
            ratio = ratio.min(rep.min_sup_ratio);
            all &= rep.passed;
            if trial == 0 {
                if let Some(f) = rep.fields.first() {
                    let n0 = f.profile.first().map(|p| p.1).unwrap_or(0.0);
                    series.rows.extend(f.profile.iter().map(|(t, n)| (*t, *n, (n - n0).abs())));
                }
            }
        }
        let within = ratio > 0.99;
        Ok((
            all && within,
            m(json!({
                "max_f0": f0,
                "max_abs_slope": slope,
                "max_perp_inner": perp,
                "min_sup_over_bound": ratio,
                "trials": p.trials,
                "t_max": p.audit_t_max,
            })),
        ))
    })();
    rec.record(
        "boundedness.audit",
        start,
        outcome,
        tol(&[("max_f0", 1e-9), ("max_abs_slope", 1e-6), ("max_perp_inner", 1e-10), ("min_sup_over_bound", 0.99)]),
    );
    rec.series.push(series);

    let start = Instant::now();
    let outcome = (|| -> Result<(bool, Measured)> {
        let x = random_algebra(spec.group(), &mut rng).normalized();
        let r = synthetic_slope(&x, p.synthetic_f0, p.audit_t_max, 4 * p.audit_samples, cfg.seed)?;
        let ok = (r.fitted_slope - r.f0_norm).abs() <= 1e-2 * r.f0_norm;
        Ok((ok, m(json!(r))))
    })();
    rec.record("boundedness.synthetic", start, outcome, tol(&[("relative_slope_error", 1e-2)]));
}

fn run_omega(rec: &mut Recorder, spec: &Arc<BiquotientSpec>, cfg: &ScenarioConfig) {
    let p = &cfg.params;
    let start = Instant::now();
    let e = GroupElement::identity(spec.group());
    let catalog = cfg.preset.as_deref().and_then(|n| preset(n).ok());
    let mut directions: Vec<(&str, AlgebraElement)> = Vec::new();
    if let Some(c) = &catalog {
        if let Some(d) = &c.omega_direction {
            directions.push(("closed", AlgebraElement::new(spec.group(), d.clone()).expect("catalog data")));
        }
        if let Some(d) = &c.irrational_omega_direction {
            directions.push(("irrational", AlgebraElement::new(spec.group(), d.clone()).expect("catalog data")));
        }
    }
    if directions.is_empty() {
        let mut rng = stream(cfg.seed, CheckKind::Omega);
        match random_horizontal(spec, &e, &mut rng) {
            Ok(x) => directions.push(("random", x)),
            Err(err) => {
                rec.record("omega.subspace", start, Err(err), BTreeMap::new());
                return;
            }
        }
    }
    for (label, x) in directions {
        let start = Instant::now();
        let omega = match omega_subspace(spec, &e, &x) {
            Ok(o) => o,
            Err(err) => {
                rec.record("omega.subspace", start, Err(err), BTreeMap::new());
                continue;
            }
        };
        rec.record(
            "omega.subspace",
            start,
            Ok((
                omega.commutator_residual < 1e-9 && omega.derivative_residual < 1e-9,
                m(json!({
                    "direction": label,
                    "rank": omega.rank(),
                    "commutator_residual": omega.commutator_residual,
                    "derivative_residual": omega.derivative_residual,
                })),
            )),
            tol(&[("commutator_residual", 1e-9), ("derivative_residual", 1e-9)]),
        );
        for &eps in &p.epsilons {
            let start = Instant::now();
            let seq = match recurrence_times_limited(&x, eps, p.recurrence_t_max, eps / 2.0, Some(p.recurrence_limit)) {
                Ok(s) => s,
                Err(err) => {
                    rec.record("omega.recurrence", start, Err(err), tol(&[("epsilon", eps)]));
                    continue;
                }
            };
            rec.record(
                "omega.recurrence",
                start,
                Ok((
                    !seq.is_empty(),
                    m(json!({
                        "direction": label,
                        "count": seq.len(),
                        "first_time": seq.times.first(),
                        "max_residual": seq.residuals.iter().cloned().fold(0.0, f64::max),
                    })),
                )),
                tol(&[("epsilon", eps)]),
            );
            if seq.is_empty() && !omega.is_trivial() {
                continue;
            }
            let start = Instant::now();
            let r = omega_return(&omega, &seq).map(|r| {
                (
                    r.passed,
                    m(json!({
                        "direction": label,
                        "vacuous": r.vacuous,
                        "max_angle": r.max_angle,
                        "returns": r.times.len(),
                    })),
                )
            });
            rec.record(
                "omega.return",
                start,
                r,
                tol(&[("epsilon", eps), ("max_angle", crate::boundedness::RETURN_COUPLING * eps)]),
            );
        }
    }
}

fn run_example_e(rec: &mut Recorder, cfg: &ScenarioConfig) {
    let p = &cfg.params;
    let start = Instant::now();
    let mut series = Series {
        name: "example-e".into(),
        rows: Vec::new(),
    };
    let outcome = (|| -> Result<(bool, Measured)> {
        let along = example_e::holonomy_jacobi_growth(0.0, p.example_t_max, (p.example_t_max.ceil() as usize) + 1)?;
        let across = example_e::holonomy_jacobi_growth(std::f64::consts::FRAC_PI_2, p.example_t_max, 11)?;
        series.rows.extend(
            along
                .samples
                .iter()
                .map(|s| (s.t, s.norm_j, (s.norm_j / s.predicted - 1.0).abs())),
        );
        let fitted: Vec<(f64, f64)> = along.samples.iter().map(|s| (s.t, s.norm_j.ln())).collect();
        let exponent = window_slope(&fitted, 0.0);
        let constant = across.samples.iter().all(|s| (s.norm_j - 1.0).abs() < 1e-12);
        let ok = along.max_relative_error < 1e-2 && along.unbounded_witness && constant;
        Ok((
            ok,
            m(json!({
                "exponent": exponent,
                "rate": along.rate,
                "max_relative_error": along.max_relative_error,
                "unbounded_witness": along.unbounded_witness,
                "orthogonal_geodesic_constant": constant,
                "final_norm": along.samples.last().map(|s| s.norm_j),
            })),
        ))
    })();
    rec.record("example-e.growth", start, outcome, tol(&[("max_relative_error", 1e-2)]));
    rec.series.push(series);

    let start = Instant::now();
    let outcome = example_e::lipschitz_estimate(p.lipschitz_time, p.lipschitz_samples).map(|r| {
        let bound = 0.99 * p.lipschitz_time.exp();
        (r.estimate >= bound, m(json!({ "estimate": r.estimate, "lower_bound": bound })))
    });
    rec.record("example-e.lipschitz", start, outcome, tol(&[("relative_lower_bound", 0.99)]));

    let start = Instant::now();
    let outcome = example_e::lipschitz_estimate(p.lipschitz_time, p.lipschitz_samples)
        .map(|r| (r.group_law_residual < 1e-10, m(json!({ "group_law_residual": r.group_law_residual }))));
    rec.record("example-e.group", start, outcome, tol(&[("group_law_residual", 1e-10)]));
}

/// Output of [`run`]: the report plus the CSV series it produced.
pub struct RunOutput {
    pub report: ScenarioReport,
    pub series: Vec<Series>,
}

/// Executes the selected checks in a fixed order.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.build_spec()?;
    let mut rec = Recorder {
        checks: Vec::new(),
        series: Vec::new(),
    };
    for kind in cfg.selected() {
        match (kind, &spec) {
            (CheckKind::ExampleE, _) => run_example_e(&mut rec, cfg),
            (_, None) => unreachable!("validated: spec present for spec checks"),
            (CheckKind::Holonomy, Some(s)) => run_holonomy(&mut rec, s, cfg),
            (CheckKind::Flats, Some(s)) => run_flats(&mut rec, s, cfg),
            (CheckKind::Boundedness, Some(s)) => run_boundedness(&mut rec, s, cfg),
            (CheckKind::Omega, Some(s)) => run_omega(&mut rec, s, cfg),
            (CheckKind::All, _) => unreachable!("expanded by selected()"),
        }
    }
    let scenario = match (&cfg.preset, &cfg.custom, &spec) {
        (Some(n), _, _) => n.clone(),
        (_, Some(c), _) => c.name.clone(),
        _ => "example-e".to_string(),
    };
    let passed = rec.checks.iter().all(|c| c.passed);
    Ok(RunOutput {
        report: ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario,
            seed: cfg.seed,
            checks: rec.checks,
            passed,
        },
        series: rec.series,
    })
}

/// Writes `report.json` (and CSV series when enabled) into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput, csv: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    fs::write(&report_path, out.report.to_json()? + "\n")?;
    written.push(report_path);
    if csv {
        for s in &out.series {
            if s.rows.is_empty() {
                continue;
            }
            let path = dir.join(format!("{}.csv", s.name));
            write_series_csv(&path, s)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Clone, Debug, Serialize)]
pub struct PresetEntry {
    pub name: String,
    pub group: String,
    pub description: String,
    pub properties: Vec<String>,
    pub vertical_dim: usize,
    pub horizontal_dim: usize,
    pub spec: SpecDescription,
}

pub fn list_presets() -> Vec<PresetEntry> {
    presets()
        .into_iter()
        .map(|p| PresetEntry {
            name: p.spec.name().to_string(),
            group: p.spec.group().family().to_string(),
            description: p.description.to_string(),
            properties: p.properties.iter().map(|s| s.to_string()).collect(),
            vertical_dim: p.spec.vertical_dim(),
            horizontal_dim: p.spec.horizontal_dim(),
            spec: SpecDescription::from_spec(&p.spec),
        })
        .collect()
}

/// JSON Schema of the report written by [`run`].
pub fn report_schema() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "flatlab scenario report",
        "type": "object",
        "required": ["schema_version", "scenario", "seed", "checks", "passed"],
        "additionalProperties": false,
        "properties": {
            "schema_version": { "const": SCHEMA_VERSION },
            "scenario": { "type": "string" },
            "seed": { "type": "integer", "minimum": 0 },
            "passed": { "type": "boolean" },
            "checks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "anchor", "passed", "measured", "tolerances", "wall_time_ms"],
                    "additionalProperties": false,
                    "properties": {
                        "id": { "enum": ANCHORS.iter().map(|(k, _)| *k).collect::<Vec<_>>() },
                        "anchor": { "type": "string" },
                        "passed": { "type": "boolean" },
                        "measured": { "type": "object" },
                        "tolerances": { "type": "object", "additionalProperties": { "type": "number" } },
                        "wall_time_ms": { "type": "number", "minimum": 0 }
                    }
                }
            }
        }
    })
}
