//! Acceptance checks AC1-AC10. Prints one PASS/FAIL line per criterion.
//!
//! Failures are reported on stdout; the process exits non-zero only when
//! `ACCEPTANCE_STRICT` is set, so a full `cargo test` still runs the
//! remaining test targets.

mod common;

use std::time::Instant;

use cardiodg::app::wave::{activation_radius, mirror_asymmetry};
use cardiodg::app::{run_simulation, vtk::field_range, RunConfig};
use cardiodg::assembly::{
    assemble_mass, assemble_reaction, assemble_stiffness, mean_weights, modal_project, DiffusionTensor, ModalField,
    NoForcing, PenaltySpec, Theta,
};
use cardiodg::dynamics::{
    check_compatibility, i_ion, BidomainSolver, BidomainState, ModelParams, MonodomainSolver, MonodomainState,
};
use cardiodg::mesh::Triangulation;
use cardiodg::space::DgSpace;
use cardiodg::specfun::{DubinerBasis, QuadRule};
use cardiodg::verify::{run_h_convergence, run_p_convergence, ManufacturedSolution, Model, Potential, SolverSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Least-squares slope of `ln e` against `ln h`, computed here from scratch.
fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn ac1() -> Outcome {
    let mut worst = 0.0f64;
    for p in 1..=8 {
        let basis = DubinerBasis::tabulate(p, QuadRule::triangle(2 * p).unwrap()).unwrap();
        let n = basis.n_loc();
        for (idx, g) in basis.gram().iter().enumerate() {
            let target = if idx / n == idx % n { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |G - I| = {worst:.2e} for p <= 8"))
}

fn ac2() -> Outcome {
    let params = ModelParams::default();
    let mesh = Triangulation::unit_square(0).unwrap();
    let elements: Vec<_> = (0..mesh.n_elements()).map(|k| mesh.element_vertices(k)).collect();
    let sigma = [[0.12, 0.0], [0.0, 0.12]];
    let mut worst = 0.0f64;
    for p in [1, 2] {
        let space = DgSpace::new(mesh.clone(), p).unwrap();
        let oracle = common::Oracle::new(elements.clone(), p);
        worst = worst.max(common::max_abs_diff(&assemble_mass(&space).to_dense(), &oracle.mass()));
        for theta in [-1, 0, 1] {
            let pen = PenaltySpec::new(params.alpha, Theta::from_int(theta).unwrap()).unwrap();
            let lib = assemble_stiffness(&space, &DiffusionTensor::new(sigma).unwrap(), &pen).to_dense();
            worst = worst.max(common::max_abs_diff(
                &lib,
                &oracle.stiffness(sigma, params.alpha, theta as f64),
            ));
        }
        let rule: Vec<([f64; 2], f64)> = space
            .basis()
            .rule()
            .points()
            .iter()
            .copied()
            .zip(space.basis().rule().weights().iter().copied())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        let random: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fields = [
            ModalField::constant(&space, 0.5),
            modal_project(&space, |x| x[0] * x[1] - 0.3 * x[0]),
            ModalField::from_coeffs(&space, random).unwrap(),
        ];
        for field in &fields {
            let lib = assemble_reaction(&space, field, &params).to_dense();
            let reference = oracle.reaction(field.coeffs(), &rule, params.chi_m, params.kappa, params.a);
            // reaction entries carry the factor chi_m
            worst = worst.max(common::max_abs_diff(&lib, &reference) / params.chi_m);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max abs difference {worst:.2e} (reaction scaled by 1/chi_m)"),
    )
}

fn ac3() -> Outcome {
    let mut off = 0.0f64;
    let mut asym = 0.0f64;
    let mut a_one = 0.0f64;
    for p in 1..=3 {
        let space = DgSpace::new(Triangulation::unit_square(3).unwrap(), p).unwrap();
        off = off.max(assemble_mass(&space).max_off_diagonal());
        let one = ModalField::constant(&space, 1.0);
        for theta in [-1, 0, 1] {
            let pen = PenaltySpec::new(10.0, Theta::from_int(theta).unwrap()).unwrap();
            let a = assemble_stiffness(&space, &DiffusionTensor::isotropic(0.12), &pen);
            if theta == 1 {
                asym = asym.max(a.asymmetry());
            }
            let r = a.spmv(one.coeffs()).unwrap();
            a_one = a_one.max(r.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }
    outcome(
        off <= 1e-13 && asym <= 1e-12 && a_one <= 1e-10,
        format!("mass off-diagonal {off:.1e}, SIP asymmetry {asym:.1e}, |A 1|_inf {a_one:.1e}"),
    )
}

/// Slope criteria and the reference-magnitude check shared by AC4 and AC5.
fn h_convergence(model: Model, reference_level: u32, reference_p: usize, reference_l2: f64, limit_s: f64) -> Outcome {
    let params = ModelParams::default();
    let settings = SolverSettings::default();
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut reference = None;
    for (p, levels) in [(1usize, [3u32, 4, 5]), (2, [2, 3, 4])] {
        let rows = match run_h_convergence(model, p, &levels, &params, &settings) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("solver error: {e}")),
        };
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let slopes: Vec<f64> = (0..4)
            .map(|n| slope(&h, &rows.iter().map(|r| r.errors.as_array()[n]).collect::<Vec<_>>()))
            .collect();
        let targets = [p as f64 + 1.0, p as f64 + 1.0, p as f64, p as f64];
        pass &= slopes.iter().zip(targets).all(|(s, t)| (s - t).abs() <= 0.3);
        detail.push(format!(
            "p={p} slopes Linf {:.2} L2 {:.2} H1 {:.2} DG {:.2}",
            slopes[0], slopes[1], slopes[2], slopes[3]
        ));
        if p == reference_p {
            reference = rows.iter().find(|r| r.sigma == reference_level).map(|r| r.errors.l2);
        }
    }
    let l2 = reference.unwrap_or(f64::NAN);
    let ratio = l2 / reference_l2;
    pass &= (1.0 / 3.0..=3.0).contains(&ratio);
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < limit_s;
    detail.push(format!(
        "L2(sigma={reference_level}, p={reference_p}) = {l2:.3e} ({ratio:.2}x reference {reference_l2:.3e}), {elapsed:.1} s"
    ));
    outcome(pass, detail.join("; "))
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let rows = match run_p_convergence(
        Model::Monodomain,
        3,
        &[2, 3, 4, 5],
        &ModelParams::default(),
        &SolverSettings::default(),
    ) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("solver error: {e}")),
    };
    let monotone = rows.windows(2).all(|w| {
        w[1].errors
            .as_array()
            .iter()
            .zip(w[0].errors.as_array())
            .all(|(b, a)| *b < a)
    });
    let l2_p5 = rows.last().map_or(f64::NAN, |r| r.errors.l2);
    let elapsed = start.elapsed().as_secs_f64();
    let l2s: Vec<String> = rows.iter().map(|r| format!("{:.2e}", r.errors.l2)).collect();
    outcome(
        monotone && l2_p5 <= 2.5e-3 && elapsed < 180.0,
        format!(
            "monotone in all norms: {monotone}; L2 p=2..5 [{}]; {elapsed:.1} s",
            l2s.join(", ")
        ),
    )
}

fn fd2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Finite-difference `div(Sigma grad u)`.
fn fd_div(u: &dyn Fn([f64; 2]) -> f64, s: [[f64; 2]; 2], x: [f64; 2]) -> f64 {
    let h = 1e-4;
    let uxx = fd2(|z| u([z, x[1]]), x[0], h);
    let uyy = fd2(|z| u([x[0], z]), x[1], h);
    let uxy = (u([x[0] + h, x[1] + h]) - u([x[0] + h, x[1] - h]) - u([x[0] - h, x[1] + h]) + u([x[0] - h, x[1] - h]))
        / (4.0 * h * h);
    s[0][0] * uxx + (s[0][1] + s[1][0]) * uxy + s[1][1] * uyy
}

fn ac7() -> Outcome {
    let params = ModelParams {
        sigma: DiffusionTensor::new([[0.12, 0.03], [0.03, 0.2]]).unwrap(),
        sigma_i: DiffusionTensor::new([[0.15, 0.0], [0.0, 0.1]]).unwrap(),
        sigma_e: DiffusionTensor::isotropic(0.12),
        ..ModelParams::default()
    };
    let e = ManufacturedSolution::new(params).unwrap();
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut pde, mut gate) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let t = rng.gen_range(1e-5..p.t_final);
        let ht = 1e-6;
        let vt = (e.v(x, t + ht) - e.v(x, t - ht)) / (2.0 * ht);
        let ion = p.chi_m * i_ion(e.v(x, t), e.w(x, t), &p);
        let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / rhs.abs().max(1.0);
        let mono = p.chi_m * p.c_m * vt - fd_div(&|y| e.v(y, t), p.sigma.matrix(), x) + ion;
        pde = pde.max(rel(mono, e.current_mono(x, t)));
        let intra = p.chi_m * p.c_m * vt - fd_div(&|y| e.phi_i(y, t), p.sigma_i.matrix(), x) + ion;
        pde = pde.max(rel(intra, e.current_intra(x, t)));
        let extra = -p.chi_m * p.c_m * vt - fd_div(&|y| e.phi_e(y, t), p.sigma_e.matrix(), x) - ion;
        pde = pde.max(rel(extra, -e.current_extra(x, t)));
        gate = gate.max((e.dw_dt(x, t) - p.epsilon * (e.v(x, t) - p.gamma * e.w(x, t))).abs());
    }
    let space = DgSpace::new(Triangulation::unit_square(3).unwrap(), 2).unwrap();
    let compat = [0.0, 1e-3, 3e-3]
        .iter()
        .map(|&t| check_compatibility(&space, t, &e.forcing(Potential::Intra), &e.forcing(Potential::Extra)).abs())
        .fold(0.0, f64::max);
    outcome(
        pde <= 1e-6 && gate <= 1e-12 && compat <= 1e-10,
        format!("PDE residual {pde:.1e} (relative), gating residual {gate:.1e}, compatibility defect {compat:.1e}"),
    )
}

fn ac8() -> Outcome {
    let space = DgSpace::new(Triangulation::unit_square(3).unwrap(), 2).unwrap();
    let solver = BidomainSolver::new(&space, ModelParams::default()).unwrap();
    let phi_i = modal_project(&space, |x| (2.0 * x[0]).cos() * x[1]);
    let phi_e = modal_project(&space, |x| 0.1 * x[0] - 0.05);
    let w = modal_project(&space, |x| 0.01 * x[1]);
    let one = ModalField::constant(&space, 1.0);
    let d = mean_weights(&space);
    let mut shift_defect = 0.0f64;
    let mut mean_defect = 0.0f64;
    let base = BidomainState::new(phi_i.clone(), phi_e.clone(), w.clone());
    let (reference, _) = solver.step(&base, &NoForcing, &NoForcing).unwrap();
    for c in [-3.0, 0.25, 40.0] {
        let shifted = BidomainState::new(phi_i.add_scaled(&one, c), phi_e.add_scaled(&one, c), w.clone());
        let (next, _) = solver.step(&shifted, &NoForcing, &NoForcing).unwrap();
        shift_defect = shift_defect.max(next.v().add_scaled(reference.v(), -1.0).max_abs());
        mean_defect = mean_defect.max(d.iter().zip(next.phi_e.coeffs()).map(|(a, b)| a * b).sum::<f64>().abs());
    }
    outcome(
        shift_defect <= 1e-10 && mean_defect <= 1e-12,
        format!("V change under shift {shift_defect:.1e}, post-step extracellular mean {mean_defect:.1e}"),
    )
}

fn ac9() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/stimulus.toml");
    let cfg = RunConfig::from_path(path).unwrap();
    assert!(cfg.p == 2 && cfg.level == 6 && cfg.params.dt == 1e-3);
    let start = Instant::now();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut radii = Vec::new();
    let mut mirror = 0.0f64;
    let result = run_simulation(&cfg, &mut |s| {
        if s.step == 0 || s.step == cfg.params.n_steps() {
            return Ok(());
        }
        let (lo, hi) = field_range(s.space, s.v);
        maxima.push(hi);
        minima.push(lo);
        radii.push(activation_radius(s.space, s.v, [0.5, 0.5], 0.5));
        mirror = mirror.max(mirror_asymmetry(s.space, s.v, 64));
        Ok(())
    });
    if let Err(e) = result {
        return outcome(false, format!("solver error: {e}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let a = maxima.iter().all(|m| (0.95..=1.05).contains(m));
    let b = minima.iter().any(|m| *m < 0.0);
    let c = mirror <= 1e-8;
    let d = radii.windows(2).all(|w| w[1] >= w[0]) && radii.first().is_some_and(|r| *r > 0.0);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        a && b && c && d && elapsed < 600.0,
        format!(
            "(a) {} max Vm [{}]; (b) {} min Vm [{}]; (c) {} mirror {mirror:.1e}; (d) {} radius [{}]; {elapsed:.0} s",
            if a { "ok" } else { "FAIL" },
            fmt(&maxima),
            if b { "ok" } else { "FAIL" },
            fmt(&minima),
            if c { "ok" } else { "FAIL" },
            if d { "ok" } else { "FAIL" },
            fmt(&radii)
        ),
    )
}

fn ac10() -> Outcome {
    let space = DgSpace::new(Triangulation::unit_square(3).unwrap(), 2).unwrap();
    let params = ModelParams::default();
    let mono = MonodomainSolver::new(&space, params).unwrap();
    let bi = BidomainSolver::new(&space, params).unwrap();
    let mut m = MonodomainState::zeros(&space);
    let mut b = BidomainState::zeros(&space);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        m = mono.step(&m, &NoForcing).unwrap().0;
        b = bi.step(&b, &NoForcing, &NoForcing).unwrap().0;
        for f in [&m.v, &m.w, &b.phi_i, &b.phi_e, &b.w] {
            worst = worst.max(f.max_abs());
        }
    }
    outcome(worst <= 1e-14, format!("max |state| after 100 steps {worst:.1e}"))
}

fn main() {
    let checks: [Check; 10] = [
        ("AC1", "basis orthonormality", ac1),
        ("AC2", "assembly oracle", ac2),
        ("AC3", "structural identities", ac3),
        ("AC4", "monodomain h-convergence", || {
            h_convergence(Model::Monodomain, 5, 1, 1.269e-3, 180.0)
        }),
        ("AC5", "bidomain h-convergence", || {
            h_convergence(Model::Bidomain, 4, 2, 3.011e-4, 300.0)
        }),
        ("AC6", "p-convergence", ac6),
        ("AC7", "manufactured solution integrity", ac7),
        ("AC8", "bidomain gauge", ac8),
        ("AC9", "stimulus wave", ac9),
        ("AC10", "quiescence", ac10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (id, name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        println!(
            "{id} {} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        if std::env::var_os("ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
