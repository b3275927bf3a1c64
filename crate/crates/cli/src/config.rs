//! Run configuration: defaults, config file, environment overrides, flags —
//! in that precedence order (later wins).

use anyhow::{bail, Context, Result};
use finsler_gbc::quadrature::{IntegrationScheme, Theorem};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// JSON config file contents; every field optional, flags override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub metric: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub theorem: Option<String>,
    pub fiber_nodes: Option<usize>,
    pub base_grid: Option<[usize; 2]>,
    pub ladder: Option<usize>,
    pub out: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub strict: Option<bool>,
    pub threads: Option<usize>,
    pub no_timestamp: Option<bool>,
}

/// Fully resolved configuration; every field has a value.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: String,
    pub params: BTreeMap<String, f64>,
    pub theorem: Theorem,
    pub scheme: IntegrationScheme,
    pub out: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub strict: bool,
    pub threads: usize,
    pub no_timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: "round-s2".into(),
            params: BTreeMap::new(),
            theorem: Theorem::C1,
            scheme: IntegrationScheme::default(),
            out: None,
            dump: None,
            strict: false,
            threads: 0,
            no_timestamp: false,
        }
    }
}

pub const ENV_PREFIX: &str = "FGBC_";

fn env_var(name: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}{name}")).ok()
}

pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("base grid must look like 96x96, got `{s}`"))?;
    Ok((w.trim().parse()?, h.trim().parse()?))
}

pub fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .with_context(|| format!("parameter must look like name=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().parse()?))
}

/// Flag-level overrides collected by clap.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub metric: Option<String>,
    pub params: Vec<(String, f64)>,
    pub theorem: Option<String>,
    pub fiber_nodes: Option<usize>,
    pub base_grid: Option<(usize, usize)>,
    pub ladder: Option<usize>,
    pub out: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    pub strict: bool,
    pub threads: Option<usize>,
    pub no_timestamp: bool,
}

pub fn resolve(config_path: Option<&PathBuf>, flags: &FlagOverrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();

    // 1. Config file.
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let file: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?;
        if let Some(m) = file.metric {
            cfg.metric = m;
        }
        cfg.params.extend(file.params);
        if let Some(t) = file.theorem {
            cfg.theorem = t.parse().map_err(anyhow::Error::msg)?;
        }
        if let Some(n) = file.fiber_nodes {
            cfg.scheme.fiber_nodes = n;
        }
        if let Some([w, h]) = file.base_grid {
            cfg.scheme.base_w = w;
            cfg.scheme.base_h = h;
        }
        if let Some(l) = file.ladder {
            cfg.scheme.ladder_rungs = l;
        }
        cfg.out = file.out.or(cfg.out);
        cfg.dump = file.dump.or(cfg.dump);
        cfg.strict = file.strict.unwrap_or(cfg.strict);
        cfg.threads = file.threads.unwrap_or(cfg.threads);
        cfg.no_timestamp = file.no_timestamp.unwrap_or(cfg.no_timestamp);
    }

    // 2. Environment.
    if let Some(m) = env_var("METRIC") {
        cfg.metric = m;
    }
    if let Some(t) = env_var("THEOREM") {
        cfg.theorem = t.parse().map_err(anyhow::Error::msg)?;
    }
    if let Some(n) = env_var("FIBER_NODES") {
        cfg.scheme.fiber_nodes = n.parse().context("FGBC_FIBER_NODES")?;
    }
    if let Some(g) = env_var("BASE_GRID") {
        let (w, h) = parse_grid(&g)?;
        cfg.scheme.base_w = w;
        cfg.scheme.base_h = h;
    }
    if let Some(l) = env_var("LADDER") {
        cfg.scheme.ladder_rungs = l.parse().context("FGBC_LADDER")?;
    }
    if let Some(t) = env_var("THREADS") {
        cfg.threads = t.parse().context("FGBC_THREADS")?;
    }
    if let Some(s) = env_var("STRICT") {
        cfg.strict = s == "1" || s.eq_ignore_ascii_case("true");
    }
    if let Some(s) = env_var("NO_TIMESTAMP") {
        cfg.no_timestamp = s == "1" || s.eq_ignore_ascii_case("true");
    }
    if let Some(p) = env_var("OUT") {
        cfg.out = Some(PathBuf::from(p));
    }
    if let Some(p) = env_var("DUMP") {
        cfg.dump = Some(PathBuf::from(p));
    }

    // 3. Flags.
    if let Some(m) = &flags.metric {
        cfg.metric = m.clone();
    }
    for (k, v) in &flags.params {
        cfg.params.insert(k.clone(), *v);
    }
    if let Some(t) = &flags.theorem {
        cfg.theorem = t.parse().map_err(anyhow::Error::msg)?;
    }
    if let Some(n) = flags.fiber_nodes {
        cfg.scheme.fiber_nodes = n;
    }
    if let Some((w, h)) = flags.base_grid {
        cfg.scheme.base_w = w;
        cfg.scheme.base_h = h;
    }
    if let Some(l) = flags.ladder {
        cfg.scheme.ladder_rungs = l;
    }
    if let Some(p) = &flags.out {
        cfg.out = Some(p.clone());
    }
    if let Some(p) = &flags.dump {
        cfg.dump = Some(p.clone());
    }
    if flags.strict {
        cfg.strict = true;
    }
    if let Some(t) = flags.threads {
        cfg.threads = t;
    }
    if flags.no_timestamp {
        cfg.no_timestamp = true;
    }

    if cfg.scheme.fiber_nodes < 8 || cfg.scheme.base_w < 4 || cfg.scheme.base_h < 4 {
        bail!(
            "scheme too coarse: fiber_nodes {} base {}x{}",
            cfg.scheme.fiber_nodes,
            cfg.scheme.base_w,
            cfg.scheme.base_h
        );
    }
    if cfg.scheme.ladder_rungs == 0 {
        bail!("ladder must have at least one rung");
    }
    Ok(cfg)
}
