//! Command-line front end for the Finsler Gauss-Bonnet-Chern engine.

mod config;
mod dump;
mod verify;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{parse_grid, parse_param, resolve, FlagOverrides, RunConfig};
use finsler_gbc::metric::MetricSpec;
use finsler_gbc::quadrature::{euler_characteristic, IntegrationScheme, Theorem};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "finsler-gbc",
    about = "Chern connection, curvature and Gauss-Bonnet-Chern integrals for Finsler surfaces",
    after_help = "Precedence: built-in defaults < --config file < FGBC_* environment < flags."
)]
struct Cli {
    /// JSON config file mirroring the run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Catalog metric name (round-s2 | ellipsoid | flat-t2 | randers-s2 | quartic-t2).
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Metric parameter override, repeatable: --param eps=0.1
    #[arg(long = "param", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Integrand family: t2 | c1 | berwald.
    #[arg(long, global = true)]
    theorem: Option<String>,
    /// Indicatrix nodes per fiber.
    #[arg(long, global = true)]
    fiber_nodes: Option<usize>,
    /// Base grid per chart, as WxH.
    #[arg(long, global = true, value_parser = parse_grid)]
    base_grid: Option<(usize, usize)>,
    /// Number of refinement-ladder rungs ending at the base grid.
    #[arg(long, global = true)]
    ladder: Option<usize>,
    /// Write the report/artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for CSV dumps.
    #[arg(long, global = true)]
    dump: Option<PathBuf>,
    /// Exit nonzero on inconclusive convergence or any failed check.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit timestamps and runtimes for byte-reproducible output.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the invariant suites and print a pass/fail table.
    Verify,
    /// Compute the Euler characteristic and emit a JSON report.
    Chi,
    /// Write curvature and integrand CSV dumps over the grid.
    Dump,
    /// Run the round-sphere sign calibration and write the convention ledger.
    Calibrate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = FlagOverrides {
        metric: cli.metric.clone(),
        params: cli.params.clone(),
        theorem: cli.theorem.clone(),
        fiber_nodes: cli.fiber_nodes,
        base_grid: cli.base_grid,
        ladder: cli.ladder,
        out: cli.out.clone(),
        dump: cli.dump.clone(),
        strict: cli.strict,
        threads: cli.threads,
        no_timestamp: cli.no_timestamp,
    };
    let cfg = match resolve(cli.config.as_ref(), &flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if cfg.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let run = match cli.command {
        Command::Chi => cmd_chi(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Dump => dump::run(&cfg),
        Command::Calibrate => cmd_calibrate(&cfg),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            let failure = serde_json::json!({
                "status": "error",
                "message": format!("{e:#}"),
            });
            eprintln!("{}", serde_json::to_string_pretty(&failure).unwrap());
            ExitCode::from(2)
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_chi(cfg: &RunConfig) -> Result<ExitCode> {
    let spec = MetricSpec::catalog(&cfg.metric, &cfg.params)?;
    let report = euler_characteristic(&spec, cfg.theorem, cfg.scheme, !cfg.no_timestamp)?;
    let text = serde_json::to_string_pretty(&report)?;
    write_or_print(&cfg.out, &text)?;
    if cfg.strict && !report.converged {
        eprintln!(
            "inconclusive: residual {:.3e} at the finest rung",
            report.residual
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cfg: &RunConfig) -> Result<ExitCode> {
    let results = verify::run(cfg)?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(10);
    println!(
        "verify: metric {} at {}x{} base, {} fiber nodes",
        cfg.metric, cfg.scheme.base_w, cfg.scheme.base_h, cfg.scheme.fiber_nodes
    );
    for r in &results {
        println!(
            "  {:<width$}  {}  measured {:>12.3e}  (threshold {:>8.1e})  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.measured,
            r.threshold,
            r.note,
        );
    }
    let all = results.iter().all(|r| r.passed);
    if let Some(out) = &cfg.out {
        let doc = serde_json::json!({
            "metric": cfg.metric,
            "checks": results,
            "passed": all,
        });
        write_or_print(&Some(out.clone()), &serde_json::to_string_pretty(&doc)?)?;
    }
    if !all {
        let failures: Vec<_> = results.iter().filter(|r| !r.passed).collect();
        eprintln!("{}", serde_json::to_string(&failures)?);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConventionLedger {
    conventions: &'static str,
    hash: String,
    calibration_scheme: IntegrationScheme,
    chi_coordinate_pipeline: f64,
    chi_frame_pipeline: f64,
    chi_berwald_pipeline: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix_ms: Option<u128>,
}

fn cmd_calibrate(cfg: &RunConfig) -> Result<ExitCode> {
    // The calibration anchor: the round sphere must come out at chi = +2
    // through every pipeline, which pins the orientation and curvature-sign
    // conventions jointly.
    let spec = MetricSpec::catalog("round-s2", &std::collections::BTreeMap::new())?;
    let scheme = IntegrationScheme {
        fiber_nodes: cfg.scheme.fiber_nodes.min(48),
        base_w: cfg.scheme.base_w.min(32),
        base_h: cfg.scheme.base_h.min(32),
        ladder_rungs: 1,
    };
    let t2 = euler_characteristic(&spec, Theorem::T2, scheme, false)?;
    let c1 = euler_characteristic(&spec, Theorem::C1, scheme, false)?;
    let berwald = euler_characteristic(&spec, Theorem::Berwald, scheme, false)?;
    let ledger = ConventionLedger {
        conventions: finsler_gbc::CONVENTIONS,
        hash: finsler_gbc::conventions_hash(),
        calibration_scheme: scheme,
        chi_coordinate_pipeline: t2.chi,
        chi_frame_pipeline: c1.chi,
        chi_berwald_pipeline: berwald.chi,
        timestamp_unix_ms: if cfg.no_timestamp {
            None
        } else {
            Some(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .unwrap()
                    .as_millis(),
            )
        },
    };
    let text = serde_json::to_string_pretty(&ledger)?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("convention_ledger.json"));
    write_or_print(&Some(out.clone()), &text)?;
    println!(
        "calibration: chi = {:.6} (coordinate), {:.6} (frame), {:.6} (Berwald); ledger {}",
        t2.chi,
        c1.chi,
        berwald.chi,
        out.display()
    );
    let ok = [t2.chi, c1.chi, berwald.chi]
        .iter()
        .all(|c| (c - 2.0).abs() < 0.05);
    if !ok {
        eprintln!("calibration failed: the round sphere did not produce chi = +2");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
