//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p flatlab-core --test acceptance`.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;

use flatlab_core::biquotient::{preset, presets, BiquotientSpec, HolonomyGeodesic};
use flatlab_core::boundedness::{
    boundedness_audit, omega_return, omega_subspace, recurrence_times, recurrence_times_limited,
    synthetic_slope,
};
use flatlab_core::example_e::{group_law_residual, holonomy_jacobi_growth, lipschitz_estimate};
use flatlab_core::flats::{find_horizontal_flat, holonomy_orthogonality, verify_part1, verify_part2};
use flatlab_core::jacobi::{jacobi_from_initial, jacobi_ode_trajectory};
use flatlab_core::liegroup::{AlgebraElement, Group, GroupElement, GroupSpec};
use flatlab_core::sampling::{gaussian_vector, random_algebra, random_group_element, rng_from_seed, SeededRng};
use flatlab_core::scenario::{self, ScenarioConfig};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn unit(group: &Group, rng: &mut SeededRng) -> AlgebraElement {
    random_algebra(group, rng).normalized()
}

fn random_horizontal(spec: &BiquotientSpec, g: &GroupElement, rng: &mut SeededRng) -> AlgebraElement {
    let frame = spec.vertical_frame(g).unwrap();
    loop {
        let h = frame.horizontal_part(&gaussian_vector(spec.group().algebra_dim(), rng));
        if h.norm() > 1e-3 {
            return AlgebraElement::new(spec.group(), h.normalize()).unwrap();
        }
    }
}

fn random_vertical(geo: &HolonomyGeodesic, rng: &mut SeededRng) -> DVector<f64> {
    let raw = &geo.frame().raw;
    let mut v = DVector::zeros(raw[0].len());
    for r in raw {
        v += r * rng.random_range(-1.0..1.0);
    }
    v
}

/// Sup error of the closed form against RK4 over `[0, t_end]`.
fn ode_error(x: &AlgebraElement, j0: &AlgebraElement, j0p: &AlgebraElement, t_end: f64, steps: usize) -> f64 {
    let closed = jacobi_from_initial(x, j0, j0p).unwrap();
    jacobi_ode_trajectory(x, j0, j0p, t_end, steps)
        .unwrap()
        .iter()
        .map(|(t, y)| (closed.evaluate_coords(*t) - y.coords()).norm())
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut max_err: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for family in ["su(2)", "su(3)"] {
        let g = GroupSpec::parse(family).unwrap();
        for _ in 0..20 {
            let x = unit(&g, &mut rng);
            let j0 = random_algebra(&g, &mut rng);
            let j0p = random_algebra(&g, &mut rng);
            max_err = max_err.max(ode_error(&x, &j0, &j0p, 20.0, 4000));
            let coarse = ode_error(&x, &j0, &j0p, 20.0, 100);
            let fine = ode_error(&x, &j0, &j0p, 20.0, 200);
            let ratio = coarse / fine;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        max_err < 1e-8 && lo >= 12.0 && hi <= 20.0 && secs < 10.0,
        format!("max error {max_err:.2e}, halving ratios [{lo:.2}, {hi:.2}], {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(2);
    let mut sup: f64 = 0.0;
    for p in presets() {
        let s = &p.spec;
        for _ in 0..20 {
            let g = random_group_element(s.group(), &mut rng);
            let x = random_horizontal(s, &g, &mut rng);
            let geo = HolonomyGeodesic::new(s, &g, &x).unwrap();
            let field = geo.field_coords(&random_vertical(&geo, &mut rng)).unwrap();
            for k in 0..=500 {
                let t = 50.0 * k as f64 / 500.0;
                sup = sup.max((field.action_value(t) - field.jacobi_value(t)).norm());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(sup <= 1e-8 && secs < 30.0, format!("route discrepancy {sup:.2e}, {secs:.2} s"))
}

fn criterion_3() -> Outcome {
    let mut rng = rng_from_seed(3);
    let (mut f0, mut slope) = (0.0f64, 0.0f64);
    let (mut ratio_lo, mut ratio_hi) = (f64::INFINITY, 0.0f64);
    for p in presets() {
        let s = &p.spec;
        for _ in 0..100 {
            let g = random_group_element(s.group(), &mut rng);
            let x = random_horizontal(s, &g, &mut rng);
            let rep = boundedness_audit(s, &g, &x, 500.0, 501).unwrap();
            f0 = f0.max(rep.max_f0);
            slope = slope.max(rep.max_abs_slope);
            for f in &rep.fields {
                ratio_lo = ratio_lo.min(f.sup_norm / f.bound);
                ratio_hi = ratio_hi.max(f.sup_norm / f.bound);
            }
        }
    }
    let g = GroupSpec::parse("su(3)").unwrap();
    let x = unit(&g, &mut rng);
    let syn = synthetic_slope(&x, 0.1, 500.0, 501, 3).unwrap();
    let ok = f0 < 1e-9
        && slope < 1e-6
        && ratio_lo >= 0.99
        && ratio_hi <= 1.01
        && (syn.fitted_slope - 0.1).abs() <= 1e-3;
    outcome(
        ok,
        format!(
            "max |F0| {f0:.2e}, max |slope| {slope:.2e}, sup/bound in [{ratio_lo:.6}, {ratio_hi:.6}], synthetic slope {:.6}",
            syn.fitted_slope
        ),
    )
}

fn criterion_4() -> Outcome {
    let diag = preset("su2xsu2-diag-circle").unwrap().spec;
    let e = GroupElement::identity(diag.group());
    let search = find_horizontal_flat(&diag, &e, 0, 50).unwrap();
    let Some(c) = search.candidate else {
        return outcome(false, format!("no flat found, best residual {:.2e}", search.best_residual));
    };
    let p1 = verify_part1(&diag, &c).unwrap();
    let p2 = verify_part2(&diag, &c, 5.0, 10).unwrap();
    let orth = holonomy_orthogonality(&diag, &c, 100.0, 1001).unwrap();

    let hopf = preset("hopf").unwrap().spec;
    let h = find_horizontal_flat(&hopf, &GroupElement::identity(hopf.group()), 0, 50).unwrap();
    let bound = h.certified_lower_bound.unwrap_or(0.0);
    let ok = c.commutator_norm < 1e-10
        && p1.k_base.abs() < 1e-10
        && p2.residuals.nrows() == 21
        && p2.max_vertical_residual < 1e-8
        && orth.max_inner < 1e-8
        && h.candidate.is_none()
        && bound > 0.0;
    outcome(
        ok,
        format!(
            "|[X,Y]| {:.2e} after {} restarts, |K_B| {:.2e}, grid residual {:.2e}, orthogonality {:.2e}; hopf: none, bound {bound:.3}",
            c.commutator_norm,
            search.restarts_run,
            p1.k_base.abs(),
            p2.max_vertical_residual,
            orth.max_inner
        ),
    )
}

fn criterion_5() -> Outcome {
    // closed direction, exact periods 4πk
    let p = preset("su2xsu2-diag-circle").unwrap();
    let e = GroupElement::identity(p.spec.group());
    let x = AlgebraElement::new(p.spec.group(), p.omega_direction.clone().unwrap()).unwrap();
    let omega = omega_subspace(&p.spec, &e, &x).unwrap();
    let seq = recurrence_times(&x, 1e-6, 40.0, 5e-7).unwrap();
    let periods_ok = seq.times.iter().enumerate().all(|(k, t)| (t - 4.0 * PI * (k + 1) as f64).abs() < 1e-9);
    let closed = omega_return(&omega, &seq).unwrap();
    let closed_ok = omega.rank() > 0 && !seq.is_empty() && periods_ok && closed.max_angle < 1e-9;
    let (closed_rank, closed_count) = (omega.rank(), seq.len());

    // incommensurable direction
    let p = preset("su3-circle-(1,1,-2)-eschenburg").unwrap();
    let e = GroupElement::identity(p.spec.group());
    let x = AlgebraElement::new(p.spec.group(), p.irrational_omega_direction.clone().unwrap()).unwrap();
    let omega = omega_subspace(&p.spec, &e, &x).unwrap();
    let mut irr_ok = omega.rank() > 0;
    let mut irr = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let seq = recurrence_times_limited(&x, eps, 2e6, eps / 2.0, Some(10)).unwrap();
        let rep = omega_return(&omega, &seq).unwrap();
        irr_ok &= !seq.is_empty() && rep.max_angle < 10.0 * eps;
        irr.push(format!("eps {eps:.0e}: {} times, max angle {:.2e}", seq.len(), rep.max_angle));
    }

    // su(2) period
    let su2 = GroupSpec::parse("su(2)").unwrap();
    let u = AlgebraElement::basis(&su2, 0);
    let period_err = recurrence_times(&u, 1e-6, 10.0, 5e-7)
        .unwrap()
        .times.first().map_or(f64::INFINITY, |t| (t - 2.0 * PI * 2f64.sqrt()).abs());

    outcome(
        closed_ok && irr_ok && period_err < 1e-10,
        format!(
            "closed: rank {}, {} periods, max angle {:.2e}; {}; su(2) period error {period_err:.2e}",
            closed_rank,
            closed_count,
            closed.max_angle,
            irr.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let growth = holonomy_jacobi_growth(0.0, 50.0, 501).unwrap();
    let at20 = growth.samples.iter().find(|s| (s.t - 20.0).abs() < 1e-12).unwrap();
    let exact20 = (20.0 / E).exp();
    let lip = lipschitz_estimate(5.0, 64).unwrap();
    let mut rng = rng_from_seed(6);
    let mut group: f64 = lip.group_law_residual;
    for _ in 0..1000 {
        let th = rng.random_range(-PI..PI);
        let t1 = rng.random_range(-5.0..5.0);
        let t2 = rng.random_range(-5.0..5.0);
        group = group.max(group_law_residual(th, t1, t2));
    }
    let flat = holonomy_jacobi_growth(PI / 2.0, 50.0, 501).unwrap();
    let drift = flat.samples.iter().map(|s| (s.norm_j - 1.0).abs()).fold(0.0, f64::max);
    let ok = growth.max_relative_error < 0.01
        && (at20.norm_j / exact20 - 1.0).abs() < 0.01
        && lip.estimate >= 0.99 * 5f64.exp()
        && group < 1e-10
        && drift < 1e-12;
    outcome(
        ok,
        format!(
            "growth rel. error {:.2e}, |J(20)| {:.2} (exp(20/e) = {exact20:.2}), Lipschitz {:.3} vs e^5 {:.3}, group law {group:.2e}, |J| drift at pi/2 {drift:.2e}",
            growth.max_relative_error,
            at20.norm_j,
            lip.estimate,
            5f64.exp()
        ),
    )
}

fn criterion_7(elapsed: f64) -> Outcome {
    let start = Instant::now();
    let report = |name: &str| {
        let mut cfg = ScenarioConfig::for_preset(name);
        cfg.seed = 7;
        cfg.params.audit_t_max = 100.0;
        cfg.params.audit_samples = 101;
        scenario::run(&cfg).unwrap().report.without_timing().to_json().unwrap()
    };
    let mut deterministic = true;
    for name in ["hopf", "su2xsu2-diag-circle"] {
        deterministic &= report(name) == report(name);
    }
    let total = elapsed + start.elapsed().as_secs_f64();
    outcome(
        deterministic && total < 300.0,
        format!("reports identical: {deterministic}, total {total:.1} s"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("closed-form Jacobi fields vs ODE oracle", criterion_1),
        ("action-field route vs closed-form route", criterion_2),
        ("boundedness audit and slope law", criterion_3),
        ("horizontal flat search and verification", criterion_4),
        ("recurrence and Omega return", criterion_5),
        ("twisted-bundle example", criterion_6),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        all &= o.passed;
        println!(
            "criterion {} {}: {name} ({:.1} s): {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    let o = criterion_7(start.elapsed().as_secs_f64());
    all &= o.passed;
    println!(
        "criterion 7 {}: runtime and reproducibility: {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.detail
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
