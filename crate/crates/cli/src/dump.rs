//! The `dump` command: per-node CSV exports of curvature frame components and
//! integrand coefficients. Column orders are part of the documented format
//! (docs/formats.md); append-only changes allowed.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use finsler_gbc::chern::structure_residuals;
use finsler_gbc::gbc::{
    berwald_integrand, corollary1_integrands, frame_curvature_components, theorem2_term1,
    theorem2_term2, SmPoint,
};
use finsler_gbc::finsler::JET_ORDER;
use finsler_gbc::metric::MetricSpec;
use finsler_gbc::quadrature::base_grid;
use std::fmt::Write as _;
use std::process::ExitCode;

pub fn run(cfg: &RunConfig) -> Result<ExitCode> {
    let spec = MetricSpec::catalog(&cfg.metric, &cfg.params)?;
    let dir = cfg
        .dump
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| std::path::PathBuf::from("dump"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let nodes = base_grid(&spec, cfg.scheme.base_w, cfg.scheme.base_h);
    let mut curvature = String::from(
        "chart,x1,x2,theta,r_1_12_2,p_1_11_1,p_2_11_1,torsion_residual,metricity_residual,p_norm\n",
    );
    let mut integrands =
        String::from("chart,x1,x2,theta,term,coefficient\n");
    let is_berwald = spec.is_berwald_family();
    for node in &nodes {
        let bd = spec.base_data(node.chart, node.x, JET_ORDER);
        for i in 0..cfg.scheme.fiber_nodes {
            let theta = std::f64::consts::TAU * i as f64 / cfg.scheme.fiber_nodes as f64;
            let pt = SmPoint::at_angle(&spec, &bd, node.chart, node.x, theta)?;
            let comps = frame_curvature_components(&pt)?;
            let (torsion, metricity) = structure_residuals(&pt.cd, &pt.fd);
            writeln!(
                curvature,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e},{:.3e},{:.3e}",
                node.chart,
                node.x[0],
                node.x[1],
                theta,
                comps.r_12[0][1],
                comps.p_11[0][0],
                comps.p_11[1][0],
                torsion,
                metricity,
                pt.cd.p_norm(),
            )?;
            let t1 = theorem2_term1(&pt)?;
            let t2 = theorem2_term2(&pt)?;
            let c1 = corollary1_integrands(&pt)?;
            let mut rows: Vec<(&str, f64)> = vec![
                ("t2-curvature", t1.coeff(0b111)),
                ("t2-minkowski", t2.top_coefficient()),
                ("c1-frame-curvature", c1.r_term.coeff(0b111)),
                ("c1-p1", c1.p1_term.top_coefficient()),
                ("c1-p2", c1.p2_term.top_coefficient()),
            ];
            if is_berwald {
                rows.push(("berwald-pfaffian", berwald_integrand(&pt)?.coeff(0b111)));
            }
            for (term, value) in rows {
                writeln!(
                    integrands,
                    "{},{:.17e},{:.17e},{:.17e},{},{:.17e}",
                    node.chart, node.x[0], node.x[1], theta, term, value
                )?;
            }
        }
    }
    let curvature_path = dir.join("curvature.csv");
    let integrand_path = dir.join("integrands.csv");
    std::fs::write(&curvature_path, curvature)?;
    std::fs::write(&integrand_path, integrands)?;
    println!(
        "wrote {} and {}",
        curvature_path.display(),
        integrand_path.display()
    );
    Ok(ExitCode::SUCCESS)
}
