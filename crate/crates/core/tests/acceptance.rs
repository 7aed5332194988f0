//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line; the test
//! fails afterwards if any criterion failed.

use std::f64::consts::PI;
use std::time::Instant;

use mhfem::assembly::assemble;
use mhfem::fourier::{half_derivative_product, modal_coefficients, parseval_sum};
use mhfem::majorants::{
    mode_majorant_theorem, optimize_young, quadratic_form_majorant, quadratic_form_parameters, reconstruct_mode_fluxes, young_value,
    ModeResiduals, StabilityConstants,
};
use mhfem::mesh::Mesh;
use mhfem::problems::{ExampleDefinition, ExampleId};
use mhfem::quadrature::integrate;
use mhfem::report::{run, Report, ReportRow, RunConfig};
use mhfem::solver::{solve_mode, solve_mode_dense, ModeSolution, ProblemSpec, SolveOptions};

const CF: f64 = 0.225_079_079_039_276_7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within_rel(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn report(example: u8, grids: &[usize], modes: usize, overall: bool) -> Report {
    let config = RunConfig { example, grids: grids.to_vec(), modes, overall, ..RunConfig::default() };
    let r = run(&config).expect("run");
    assert!(r.success(), "{:?}", r.failures);
    r
}

fn mode_row(r: &Report, n: usize, k: usize) -> &ReportRow {
    r.row(n, Some(k)).expect("mode row")
}

/// Per-mode table check shared by the k = 0 and k = 1 tables.
fn table_check(r: &Report, k: usize, majorants: [f64; 3], indices: [f64; 3], cost: f64) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, n) in [16, 32, 64].into_iter().enumerate() {
        let row = mode_row(r, n, k);
        let ieff = row.ieff_m.unwrap_or(f64::NAN);
        let ieff_j = row.ieff_j.unwrap_or(f64::NAN);
        let ok_m = within_rel(row.majorant_semi, majorants[i], 0.25);
        let ok_i = (ieff - indices[i]).abs() <= 0.3;
        let ok_j = within_rel(row.j_oplus, cost, 0.05) && ieff_j <= 1.05;
        pass &= ok_m && ok_i && ok_j;
        detail.push(format!(
            "n={n}: M={:.4e} [{}] Ieff_M={ieff:.3} [{}] J={:.4e} Ieff_J={ieff_j:.4} [{}]",
            row.majorant_semi,
            if ok_m { "ok" } else { "off" },
            if ok_i { "ok" } else { "off" },
            row.j_oplus,
            if ok_j { "ok" } else { "off" }
        ));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_1(r: &Report) -> Outcome {
    table_check(r, 0, [17.5, 8.20, 3.92], [2.50, 2.20, 2.05], 1.27e5)
}

fn criterion_2(r: &Report) -> Outcome {
    table_check(r, 1, [34.0, 15.9, 7.63], [2.50, 2.20, 2.05], 4.80e5)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cases = [
        (ExampleId::One, 6, 640.25),
        (ExampleId::One, 8, 106.07),
        (ExampleId::Two, 6, 44094.84),
        (ExampleId::Two, 8, 19869.30),
        (ExampleId::Two, 10, 10597.20),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (id, n, target) in cases {
        let e = ExampleDefinition::new(id).remainder(n).expect("remainder");
        let ok = within_rel(e, target, 0.005);
        pass &= ok;
        detail.push(format!("ex{} E{n}={e:.2}", id.number()));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome { pass: pass && secs < 1.0, detail: format!("{} ({secs:.2}s)", detail.join(", ")) }
}

fn criterion_4(runs: &[Report]) -> Outcome {
    let rows: Vec<&ReportRow> = runs.iter().map(|r| r.row(64, None).expect("overall row")).collect();
    let (i6, i8) = (rows[0].ieff_m.unwrap_or(f64::NAN), rows[1].ieff_m.unwrap_or(f64::NAN));
    let costs_ok = rows.iter().all(|r| within_rel(r.j_oplus, 3.17e6, 0.05));
    Outcome {
        pass: i8 < i6 && costs_ok,
        detail: format!(
            "Ieff_M(N=6)={i6:.3} Ieff_M(N=8)={i8:.3}; J(N=6)={:.4e} J(N=8)={:.4e}",
            rows[0].j_oplus, rows[1].j_oplus
        ),
    }
}

fn criterion_5(runs: &[Report]) -> Outcome {
    let rows: Vec<&ReportRow> = runs.iter().map(|r| r.row(64, None).expect("overall row")).collect();
    let idx: Vec<f64> = rows.iter().map(|r| r.ieff_m.unwrap_or(f64::NAN)).collect();
    let decreasing = idx.windows(2).all(|w| w[1] < w[0]);
    let j = rows[2].j_oplus;
    Outcome {
        pass: decreasing && within_rel(j, 7.06e6, 0.05),
        detail: format!("Ieff_M(N=6,8,10)={:.3},{:.3},{:.3}; J(N=10)={j:.4e}", idx[0], idx[1], idx[2]),
    }
}

fn criterion_6() -> Outcome {
    let full = std::env::var("MHFEM_FULL").is_ok_and(|v| v == "1");
    let (n, factor) = if full { (256, 2) } else { (128, 2) };
    let config = RunConfig { example: 3, grids: vec![n], modes: 3, reference_factor: factor, ..RunConfig::default() };
    let r = run(&config).expect("run");
    let def = ExampleDefinition::new(ExampleId::Three);
    let coeffs = def.desired_coefficients(8).expect("coefficients");
    let mut pass = r.success();
    let even_zero = coeffs.iter().enumerate().skip(2).step_by(2).all(|(_, c)| *c == (0.0, 0.0));
    let row2 = mode_row(&r, n, 2);
    let quiet = row2.j_oplus == 0.0 && row2.majorant_semi == 0.0 && row2.cost == 0.0;
    pass &= even_zero && quiet;
    let mut detail = vec![format!("even modes zero: {}", even_zero && quiet)];
    let targets = [8.20e4, 1.31e5, 1.35e4];
    for (k, target) in [0, 1, 3].into_iter().zip(targets) {
        let row = mode_row(&r, n, k);
        let ij = row.ieff_j.unwrap_or(f64::NAN);
        let ok = ij >= 1.0 && ij <= 1.5 && (!full || within_rel(row.j_oplus, target, 0.25));
        pass &= ok;
        detail.push(format!("k={k}: J={:.4e} Ieff_J={ij:.4}", row.j_oplus));
    }
    let mode = if full { "full 256/512" } else { "128/256, property bands" };
    Outcome { pass, detail: format!("[{mode}] {}", detail.join("; ")) }
}

fn criterion_7(runs: &[&Report]) -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for r in runs {
        for row in &r.rows {
            let tag = format!("ex{} n={} k={:?}", row.example, row.grid, row.k);
            if let Some(e) = row.error_h1semi {
                checked += 1;
                if row.majorant_semi < e {
                    violations.push(format!("{tag}: M {} < error {e}", row.majorant_semi));
                }
            }
            if let Some(e) = row.error_weighted {
                checked += 1;
                if row.majorant_theorem < e {
                    violations.push(format!("{tag}: theorem M {} < weighted error {e}", row.majorant_theorem));
                }
            }
            if let Some(j) = row.exact_cost {
                checked += 1;
                if row.j_oplus < j {
                    violations.push(format!("{tag}: J {} < exact cost {j}", row.j_oplus));
                }
            }
        }
    }
    Outcome { pass: violations.is_empty(), detail: format!("{checked} bounds checked, violations: {}", violations.join("; ")) }
}

fn flat(s: &ModeSolution) -> Vec<f64> {
    s.y.parts().into_iter().chain(s.p.parts()).flatten().copied().collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let def = ExampleDefinition::new(ExampleId::One);
    let spec = ProblemSpec::for_example(&def, 2).expect("spec");
    let mesh = Mesh::uniform(4).expect("mesh");
    let mats = assemble(&mesh, &spec.sigma, &spec.nu).expect("assemble");
    let load = spec.desired.profile.load(&mesh);
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    let mut worst: f64 = 0.0;
    for k in 0..=2 {
        let it = solve_mode(&spec, &mesh, &mats, &load, k, &opts).expect("minres");
        let de = solve_mode_dense(&spec, &mesh, &mats, &load, k).expect("dense");
        let (a, b) = (flat(&it), flat(&de));
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        worst = worst.max(norm(&diff) / norm(&b));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome { pass: worst <= 1e-8 && secs < 1.0, detail: format!("max relative difference {worst:.2e} ({secs:.2}s)") }
}

/// Log-grid minimum over [1e-4, 1e4]², polished by golden-section line searches.
fn grid_min_2d(f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let n = 200;
    let node = |i: usize| -4.0 + 8.0 * i as f64 / (n - 1) as f64;
    let at = |x: [f64; 2]| f(10f64.powf(x[0]), 10f64.powf(x[1]));
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..n {
        for j in 0..n {
            let x = [node(i), node(j)];
            let v = at(x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    let (mut val, mut x) = best;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..400 {
        for d in 0..2 {
            let (mut a, mut b) = (x[d] - 0.5, x[d] + 0.5);
            let mut probe = x;
            let mut eval = |t: f64| {
                probe[d] = t;
                at(probe)
            };
            for _ in 0..60 {
                let (c, e) = (b - g * (b - a), a + g * (b - a));
                if eval(c) < eval(e) {
                    b = e;
                } else {
                    a = c;
                }
            }
            let t = 0.5 * (a + b);
            let v = eval(t);
            if v < val {
                val = v;
                x[d] = t;
            }
        }
    }
    val
}

fn criterion_9() -> Outcome {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    // Parseval on a trigonometric signal
    let g = |t: f64| 1.5 + 0.7 * t.cos() - 2.0 * (3.0 * t).sin() + 0.25 * (5.0 * t).cos();
    let coeffs = modal_coefficients(&g, 6, 2.0 * PI, 1e-12).expect("coefficients");
    let direct = integrate(&|t| g(t).powi(2), 0.0, 2.0 * PI, 32, 1e-13, 0.0).expect("integral");
    check("parseval", (direct - parseval_sum(&coeffs, 2.0 * PI)).abs() <= 1e-8 * direct);

    // computed fields of example 1
    let def = ExampleDefinition::new(ExampleId::One);
    let spec = ProblemSpec::for_example(&def, 3).expect("spec");
    let mesh = Mesh::uniform(16).expect("mesh");
    let mats = assemble(&mesh, &spec.sigma, &spec.nu).expect("assemble");
    let load = spec.desired.profile.load(&mesh);
    let (mut fried, mut ortho, mut perp, mut hdiv) = (true, true, true, true);
    for k in 0..=3 {
        let s = solve_mode(&spec, &mesh, &mats, &load, k, &SolveOptions::default()).expect("solve");
        for v in s.y.parts().into_iter().chain(s.p.parts()) {
            fried &= mats.full_mass.quad_form(v) <= CF * CF * mats.full_stiffness.quad_form(v) * (1.0 + 1e-12);
        }
        if k > 0 {
            let ms = &mats.full_mass_sigma;
            let scale = half_derivative_product(&s.y, &s.y, ms, spec.period).abs().max(1e-300);
            ortho &= half_derivative_product(&s.y, &s.y.perp().expect("perp"), ms, spec.period).abs() <= 1e-12 * scale;
            perp &= s.p.perp().and_then(|q| q.perp()).expect("perp") == s.p.scaled(-1.0);
        }
        let (tau, rho) = reconstruct_mode_fluxes(&mesh, &mats, &s.y, &s.p);
        for f in tau.iter().chain(&rho) {
            let big = f.fluxes.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            hdiv &= f.normal_jumps(&mesh).iter().all(|j| j.abs() <= 1e-13 * big);
        }
    }
    check("friedrichs", fried);
    check("orthogonality", ortho);
    check("perp involution", perp);
    check("H(div) conformity", hdiv);

    // Young closed form against grid search
    let mut young_worst: f64 = 0.0;
    for (a, x, y) in [(1.0, 1.0, 1.0), (3.0, 0.2, 40.0), (1e-2, 5.0, 0.7), (250.0, 1.0, 1e-2)] {
        let closed = optimize_young(a, x, y);
        let grid = grid_min_2d(&|al, be| young_value(a, x, y, al, be));
        young_worst = young_worst.max((grid - closed.value) / closed.value);
    }
    check("young", (0.0..=1e-6).contains(&(young_worst + 1e-15)));

    // quadratic form against the closed-form majorant
    let consts = StabilityConstants::for_spec(&spec);
    let mut quad_worst: f64 = 0.0;
    for r in [[1.0, 2.0, 3.0, 4.0], [0.3, 10.0, 1e-2, 5.0], [7.0, 0.1, 0.4, 0.04]] {
        let (al, be, ga) = quadratic_form_parameters(r, CF);
        let q = quadratic_form_majorant(r, CF, consts.mu1_tilde, al, be, ga);
        let res = ModeResiduals { k: 1, r1_sq: r[0] * r[0], r2_sq: r[1] * r[1], r3_sq: r[2] * r[2], r4_sq: r[3] * r[3] };
        let m = mode_majorant_theorem(&res, &consts);
        quad_worst = quad_worst.max((q - m * m).abs() / (m * m));
    }
    check("quadratic form", quad_worst <= 1e-9);

    Outcome {
        pass: failed.is_empty(),
        detail: format!("young gap {young_worst:.1e}, quadratic form gap {quad_worst:.1e}, failed: [{}]", failed.join(", ")),
    }
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    for lambda in [0.01, 0.1, 1.0] {
        let def = ExampleDefinition { lambda, ..ExampleDefinition::new(ExampleId::One) };
        let spec = ProblemSpec::for_example(&def, 8).expect("spec");
        for n in [16, 32, 64, 128] {
            let mesh = Mesh::uniform(n).expect("mesh");
            let mats = assemble(&mesh, &spec.sigma, &spec.nu).expect("assemble");
            let load = spec.desired.profile.load(&mesh);
            for k in 0..=8 {
                let s = solve_mode(&spec, &mesh, &mats, &load, k, &SolveOptions::default()).expect("solve");
                counts.push(if s.converged { s.iterations } else { usize::MAX });
            }
        }
    }
    let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: hi != usize::MAX && (hi as f64) < 2.0 * lo as f64 && secs < 300.0,
        detail: format!("iterations {lo}..{hi} over {} solves ({secs:.1}s)", counts.len()),
    }
}

#[test]
fn acceptance() {
    let ex1 = report(1, &[16, 32, 64], 1, false);
    let ex1_overall: Vec<Report> = [6, 8].into_iter().map(|m| report(1, &[64], m, true)).collect();
    let ex2_overall: Vec<Report> = [6, 8, 10].into_iter().map(|m| report(2, &[64], m, true)).collect();

    let mut bounded = vec![&ex1];
    bounded.extend(ex1_overall.iter());
    bounded.extend(ex2_overall.iter());

    let outcomes = [
        criterion_1(&ex1),
        criterion_2(&ex1),
        criterion_3(),
        criterion_4(&ex1_overall),
        criterion_5(&ex2_overall),
        criterion_6(),
        criterion_7(&bounded),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let mut failed = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
