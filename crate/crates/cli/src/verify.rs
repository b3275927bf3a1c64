//! The `verify` command: invariant suites with a pass/fail table.

use crate::config::RunConfig;
use anyhow::Result;
use finsler_gbc::chern::{christoffel, structure_residuals};
use finsler_gbc::finsler::{FinslerData, JET_ORDER};
use finsler_gbc::gbc::mq_fiber_check;
use finsler_gbc::metric::{MetricSpec, Topology};
use finsler_gbc::quadrature::{grid_survey, imp_probe_norm, Resolution, SurveyOptions};
use finsler_gbc::superalgebra::{synthetic, SuperOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub note: String,
}

fn check(name: &str, measured: f64, threshold: f64, note: &str) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: measured <= threshold,
        measured,
        threshold,
        note: note.to_string(),
    }
}

fn sample_base_points(spec: &MetricSpec, rng: &mut ChaCha8Rng, count: usize) -> Vec<(usize, [f64; 2])> {
    (0..count)
        .map(|_| match spec.topology() {
            Topology::Torus => (0usize, [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]),
            Topology::Sphere => {
                let chart = rng.gen_range(0..2);
                let r = spec.cap_radius() * rng.gen_range(0.05..0.95f64).sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                (chart, [r * phi.cos(), r * phi.sin()])
            }
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let spec = MetricSpec::catalog(&cfg.metric, &cfg.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut results = Vec::new();

    // Strong-convexity preflight + homogeneity identities over random samples.
    {
        let mut min_eig = f64::INFINITY;
        let mut euler = 0.0f64;
        let mut homog = 0.0f64;
        let mut spray2 = 0.0f64;
        let mut failures = 0usize;
        for (chart, x) in sample_base_points(&spec, &mut rng, 60) {
            let bd = spec.base_data(chart, x, JET_ORDER);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let y = [1.3 * theta.cos(), 1.3 * theta.sin()];
            match FinslerData::compute(&spec, &bd, chart, x, y) {
                Err(_) => failures += 1,
                Ok(fd) => {
                    let (lo, _) = finsler_gbc::linalg::sym2_eigenvalues(fd.g);
                    min_eig = min_eig.min(lo);
                    euler = euler.max(fd.euler_defect().abs());
                    for lambda in [0.5, 2.0, 7.0] {
                        let fl = spec.f_value(chart, x, [lambda * y[0], lambda * y[1]]);
                        homog = homog.max((fl - lambda * fd.f).abs());
                    }
                    let fd2 = FinslerData::compute(&spec, &bd, chart, x, [2.0 * y[0], 2.0 * y[1]])
                        .expect("scaled sample");
                    for i in 0..2 {
                        spray2 = spray2.max((fd2.spray[i] - 4.0 * fd.spray[i]).abs());
                    }
                }
            }
        }
        results.push(check(
            "convexity-preflight",
            failures as f64,
            0.0,
            &format!("min eigenvalue of g over samples: {min_eig:.3e}"),
        ));
        results.push(check("euler-identity", euler, 1e-12, "g(y,y) - F^2"));
        results.push(check("positive-homogeneity", homog, 1e-10, "F(x, ly) - l F(x, y)"));
        results.push(check("spray-2-homogeneity", spray2, 1e-9, "G(2y) - 4 G(y)"));
    }

    // Structure residuals and pipeline diagnostics over the configured grid.
    {
        let res = Resolution {
            fiber_nodes: cfg.scheme.fiber_nodes,
            base_w: cfg.scheme.base_w,
            base_h: cfg.scheme.base_h,
        };
        let survey = grid_survey(
            &spec,
            res,
            SurveyOptions {
                t2: true,
                c1: true,
                berwald: false,
                residuals: true,
                equivalence: true,
            },
        )?;
        let r = survey.residuals;
        results.push(check("torsion-residual", r.torsion, 1e-8, "Gamma antisymmetry"));
        results.push(check(
            "metricity-residual",
            r.metricity,
            1e-8,
            "dg - g varpi - g varpi - 2A dy/F",
        ));
        results.push(check("gamma-traces-to-n", r.trace_to_n, 1e-8, "y Gamma - N"));
        results.push(check(
            "cartan-y-contraction",
            r.cartan_y_contraction,
            1e-10,
            "y^i A_ijk",
        ));
        results.push(check(
            "frame-orthonormality",
            r.frame_orthonormality,
            1e-11,
            "g(e_a, e_b) - delta",
        ));
        results.push(check(
            "fiber-constraint",
            r.fiber_constraint,
            1e-9,
            "F_y restricted to the sphere bundle",
        ));
        results.push(check(
            "surface-density-equivalence",
            survey.equivalence_max,
            1e-8,
            "coordinate vs special-frame integrand",
        ));
        let gate_ok = (r.p_norm < 1e-8) == spec.is_berwald_family();
        results.push(CheckResult {
            name: "berwald-gate-consistency".into(),
            passed: gate_ok,
            measured: r.p_norm,
            threshold: 1e-8,
            note: format!(
                "max |P| vs family ({})",
                if spec.is_berwald_family() { "Berwald" } else { "non-Berwald" }
            ),
        });
    }

    // Corrupted-connection canary: the residual suite must detect a bad Gamma.
    {
        let (chart, x) = sample_base_points(&spec, &mut rng, 1)[0];
        let bd = spec.base_data(chart, x, JET_ORDER);
        let fd = FinslerData::compute(&spec, &bd, chart, x, [0.9, 0.44])?;
        let mut cd = christoffel(&fd);
        cd.gamma[0][1][0] += 1e-3;
        let (_, metricity) = structure_residuals(&cd, &fd);
        results.push(CheckResult {
            name: "corrupted-gamma-canary".into(),
            passed: metricity >= 1e-4,
            measured: metricity,
            threshold: 1e-4,
            note: "metricity residual must detect a 1e-3 corruption".into(),
        });
    }

    // Supertrace oracle: engine vs closed-form contraction.
    {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let inst = synthetic::Instance::random(1, &mut rng);
            worst = worst.max(inst.engine_term1(1).sub(&inst.closed_form_term1(1)).max_abs());
            worst = worst.max(inst.engine_theta().sub(&inst.closed_form_theta()).max_abs());
        }
        for _ in 0..50 {
            let inst = synthetic::Instance::random(2, &mut rng);
            worst = worst.max(inst.engine_term1(1).sub(&inst.closed_form_term1(1)).max_abs());
            for k in 1..=2 {
                worst = worst.max(
                    inst.engine_chain_term1(k)
                        .sub(&inst.closed_form_term1(k))
                        .max_abs(),
                );
            }
            worst = worst.max(inst.engine_theta().sub(&inst.closed_form_theta()).max_abs());
        }
        results.push(check(
            "supertrace-oracle",
            worst,
            1e-12,
            "engine vs delta-contraction, n = 1 and 2",
        ));
    }

    // Superspace identity suite for m in {2, 4}.
    {
        let mut worst = 0.0f64;
        for m in [2usize, 4] {
            worst = worst.max(identity_suite_defect(m, &mut rng));
        }
        results.push(check(
            "superspace-identities",
            worst,
            1e-13,
            "supertrace chains, Clifford relations, superbrackets",
        ));
    }

    // Vertical exactness: fiber integral of the P-contraction against a
    // constant matrix vanishes.
    {
        let mut worst = 0.0f64;
        for (chart, x) in sample_base_points(&spec, &mut rng, 20) {
            let theta = vec![
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            ];
            worst = worst.max(imp_probe_norm(&spec, chart, x, cfg.scheme.fiber_nodes, &theta)?);
        }
        results.push(check(
            "vertical-exactness",
            worst,
            1e-8,
            "fiber integral of P against a constant matrix",
        ));
    }

    // Fiberwise Gaussian check (Riemannian families only).
    if spec.is_riemannian_family() {
        let mut worst = 0.0f64;
        for (chart, x) in sample_base_points(&spec, &mut rng, 5) {
            let chk = mq_fiber_check(&spec, chart, x, 1.0, 6.0, 48)?;
            worst = worst.max((chk.integral - chk.expected).abs());
        }
        results.push(check(
            "gaussian-fiber-check",
            worst,
            1e-6,
            "supertrace Gaussian vs (-2 pi) Pf(R)",
        ));
    }

    // Partition of unity closes over the sphere atlas.
    if spec.topology() == Topology::Sphere {
        let mut worst = 0.0f64;
        for (_, x) in sample_base_points(&spec, &mut rng, 40) {
            if let Some(xb) = spec.transition(0, x) {
                let s = spec.pou_weight(0, x) + spec.pou_weight(1, xb);
                worst = worst.max((s - 1.0).abs());
            }
        }
        results.push(check("partition-of-unity", worst, 1e-12, "chart weights sum to 1"));
    }

    Ok(results)
}

/// Worst defect over the superspace identity family in dimension `m`.
fn identity_suite_defect(m: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    // Full wedge/contract chain supertraces to (-1)^m, partial chains to 0.
    let mut chain = SuperOp::identity(m);
    for i in 0..m {
        chain = chain.mul(&SuperOp::wedge(m, i)).mul(&SuperOp::contract(m, i));
    }
    let expect = if m % 2 == 0 { 1.0 } else { -1.0 };
    worst = worst.max((chain.supertrace() - expect).abs());
    let partial = SuperOp::wedge(m, 0).mul(&SuperOp::contract(m, 0));
    worst = worst.max(partial.supertrace().abs());
    worst = worst.max(SuperOp::wedge(m, m - 1).supertrace().abs());

    // Clifford relations for a random SPD metric.
    let b: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut g = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                g[i][j] += b[i][k] * b[j][k];
            }
        }
        g[i][i] += 0.5;
    }
    let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let guv: f64 = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| g[i][j] * u[i] * v[j])
        .sum();
    let cu = SuperOp::clifford(&u, &g, false);
    let cv = SuperOp::clifford(&v, &g, false);
    let hu = SuperOp::clifford(&u, &g, true);
    let hv = SuperOp::clifford(&v, &g, true);
    let id = SuperOp::identity(m);
    worst = worst.max(
        cu.mul(&cv)
            .add(&cv.mul(&cu))
            .sub(&id.clone().scale(-2.0 * guv))
            .max_abs(),
    );
    worst = worst.max(
        hu.mul(&hv)
            .add(&hv.mul(&hu))
            .sub(&id.clone().scale(2.0 * guv))
            .max_abs(),
    );
    worst = worst.max(cu.mul(&hv).add(&hv.mul(&cu)).max_abs());

    // Orthonormal hat-c/c chain supertraces to 2^m.
    let eye: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let basis = |i: usize| -> Vec<f64> { (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    let mut hc = SuperOp::identity(m);
    for i in 0..m {
        hc = hc
            .mul(&SuperOp::clifford(&basis(i), &eye, true))
            .mul(&SuperOp::clifford(&basis(i), &eye, false));
    }
    worst = worst.max((hc.supertrace() - 2.0f64.powi(m as i32)).abs());
    let hc_partial = SuperOp::clifford(&basis(0), &eye, true)
        .mul(&SuperOp::clifford(&basis(1 % m), &eye, false));
    worst = worst.max(hc_partial.supertrace().abs());

    // Supertrace kills superbrackets of lifted endomorphisms.
    let rand_mat = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let la = SuperOp::lift(&rand_mat(rng));
    let lb = SuperOp::lift(&rand_mat(rng));
    worst = worst.max(la.superbracket(&lb).supertrace().abs());
    worst
}
