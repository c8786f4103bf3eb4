//! Config loading: TOML files with repeatable `key=value` overrides applied
//! after parsing. Unknown keys are rejected by the typed deserialization.

use anyhow::{anyhow, bail, Context, Result};
use polymer_core::engine::{ExperimentConfig, ExperimentKind};
use std::path::Path;

/// Built-in per-kind defaults, used when no config file is given.
fn default_toml(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Fluctuations => {
            r#"
kind = "fluctuations"
master_seed = 20240915
[fluctuations]
n_list = [64, 256, 1024]
alpha = 0.22
samples = 4000
spread_paths = 4
spread_samples = 200
[fluctuations.family]
variant = "log_gamma"
theta_rule = "inverse_beta_sq"
"#
        }
        ExperimentKind::Lindeberg => {
            r#"
kind = "lindeberg"
master_seed = 20240916
[lindeberg]
n = 256
alpha = 0.22
mask_fractions = [0.25, 0.5, 1.0]
samples = 6000
control_theta_factor = 0.5
[lindeberg.family_a]
variant = "standard"
noise_kind = "gaussian"
noise_mean = 0.0
noise_variance = 1.0
"#
        }
        ExperimentKind::Localtime => {
            r#"
kind = "localtime"
master_seed = 20240917
[localtime]
n_list = [64, 256, 1024, 4096]
slopes = [0.5, 0.5, 0.5]
m_list = [1, 2, 4]
trials = 20000
meeting_trials = 100000
"#
        }
        ExperimentKind::Validity => {
            r#"
kind = "validity"
master_seed = 20240918
[validity]
beta_grid = [0.05, 0.1, 0.2, 0.3]
k_list = [2, 4, 6]
s = 0.5
samples_per_point = 100000
[validity.family]
variant = "standard"
noise_kind = "gaussian"
noise_mean = 0.0
noise_variance = 1.0
"#
        }
        ExperimentKind::Exponents => {
            r#"
kind = "exponents"
master_seed = 0
[exponents]
alpha_list = [0.22]
delta_list = [0.01]
s_list = [0.8]
k_list = [2]
"#
        }
        ExperimentKind::TwBuild => {
            r#"
kind = "tw_build"
master_seed = 0
[tw]
order = 64
tail_cut = 16.0
grid_lo = -10.0
grid_hi = 7.0
grid_step = 0.02
refine_check = false
"#
        }
    }
}

fn kind_section(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Fluctuations => "fluctuations",
        ExperimentKind::Lindeberg => "lindeberg",
        ExperimentKind::Localtime => "localtime",
        ExperimentKind::Validity => "validity",
        ExperimentKind::Exponents => "exponents",
        ExperimentKind::TwBuild => "tw",
    }
}

fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Fluctuations => "fluctuations",
        ExperimentKind::Lindeberg => "lindeberg",
        ExperimentKind::Localtime => "localtime",
        ExperimentKind::Validity => "validity",
        ExperimentKind::Exponents => "exponents",
        ExperimentKind::TwBuild => "tw_build",
    }
}

const ROOT_KEYS: [&str; 5] = [
    "kind",
    "master_seed",
    "workers",
    "output_dir",
    "checkpoint_interval",
];

/// Parses an override value: bool, integer, float, bracketed numeric array,
/// or bare string.
fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    if raw == "true" || raw == "false" {
        return toml::Value::Boolean(raw == "true");
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if raw.starts_with('[') && raw.ends_with(']') {
        let inner = &raw[1..raw.len() - 1];
        let items: Vec<toml::Value> = inner
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_value)
            .collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<()> {
    if path.len() == 1 {
        table.insert(path[0].to_string(), value);
        return Ok(());
    }
    let entry = table
        .entry(path[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(sub) => set_path(sub, &path[1..], value),
        _ => bail!("override path {} crosses a non-table value", path.join(".")),
    }
}

/// Applies one `key=value` override. Bare keys address the root when they
/// are root fields, otherwise the active kind's section; `n` is shorthand
/// for a one-element `n_list` in experiments that take a size grid.
fn apply_override(table: &mut toml::Table, kind: ExperimentKind, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override '{spec}' is not KEY=VALUE"))?;
    let key = key.trim();
    let mut value = parse_value(raw);
    let dotted: Vec<&str>;
    if key.contains('.') {
        dotted = key.split('.').collect();
    } else if ROOT_KEYS.contains(&key) {
        dotted = vec![key];
    } else if key == "n"
        && matches!(
            kind,
            ExperimentKind::Fluctuations | ExperimentKind::Localtime
        )
    {
        value = toml::Value::Array(vec![value]);
        dotted = vec![kind_section(kind), "n_list"];
    } else {
        dotted = vec![kind_section(kind), key];
    }
    set_path(table, &dotted, value)
}

/// Loads, overrides and type-checks the experiment config.
pub fn load_config(
    path: Option<&Path>,
    kind: ExperimentKind,
    overrides: &[String],
    output_dir: Option<&str>,
    workers: Option<usize>,
    master_seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?
        }
        None => default_toml(kind).to_string(),
    };
    let mut table: toml::Table = text.parse().context("parsing config TOML")?;

    // the subcommand owns the kind
    table.insert(
        "kind".into(),
        toml::Value::String(kind_name(kind).to_string()),
    );
    for spec in overrides {
        apply_override(&mut table, kind, spec)?;
    }
    if let Some(w) = workers {
        table.insert("workers".into(), toml::Value::Integer(w as i64));
    }
    if let Some(seed) = master_seed {
        table.insert("master_seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(dir) = output_dir {
        table.insert("output_dir".into(), toml::Value::String(dir.into()));
    } else if !table.contains_key("output_dir") {
        if let Ok(dir) = std::env::var("POLYMER_OUT_DIR") {
            table.insert("output_dir".into(), toml::Value::String(dir));
        }
    }

    let config: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .context("config does not match the experiment schema")?;
    Ok(config)
}
