//! Reproducible parallel Monte Carlo driving: declarative experiment
//! configs, per-sample counter-based seeding, chunked execution with
//! checkpoint/resume, and streaming aggregation.

pub mod experiments;
pub mod sampler;
pub mod stats;

pub use sampler::{digest64, run_samples, Checkpoint};
pub use stats::{Aggregate, EmpiricalCdf};

use crate::weights::{theta_match, BaseNoise, WeightFamily};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("insufficient data: {0} samples")]
    InsufficientData(u64),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("weights error: {0}")]
    Weights(#[from] crate::weights::WeightsError),
    #[error("lattice error: {0}")]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error("paths error: {0}")]
    Paths(#[from] crate::paths::PathsError),
    #[error("dist error: {0}")]
    Dist(#[from] crate::dist::DistError),
}

/// Declarative description of a weight family, as written in config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// standard | log_gamma | linear
    pub variant: String,
    /// gaussian | rademacher | uniform_centered | shifted_exponential
    #[serde(default)]
    pub noise_kind: Option<String>,
    #[serde(default)]
    pub noise_mean: Option<f64>,
    #[serde(default)]
    pub noise_variance: Option<f64>,
    #[serde(default)]
    pub exponential_rate: Option<f64>,
    /// explicit log-gamma parameter
    #[serde(default)]
    pub theta: Option<f64>,
    /// inverse_beta_sq (theta = 1/beta^2) or match (second-moment match to
    /// the configured noise)
    #[serde(default)]
    pub theta_rule: Option<String>,
}

impl FamilySpec {
    pub fn standard_gaussian() -> FamilySpec {
        FamilySpec {
            variant: "standard".into(),
            noise_kind: Some("gaussian".into()),
            noise_mean: Some(0.0),
            noise_variance: Some(1.0),
            exponential_rate: None,
            theta: None,
            theta_rule: None,
        }
    }

    pub fn log_gamma_inverse_beta_sq() -> FamilySpec {
        FamilySpec {
            variant: "log_gamma".into(),
            noise_kind: None,
            noise_mean: None,
            noise_variance: None,
            exponential_rate: None,
            theta: None,
            theta_rule: Some("inverse_beta_sq".into()),
        }
    }

    pub fn noise(&self) -> Result<BaseNoise, EngineError> {
        let kind = self
            .noise_kind
            .as_deref()
            .ok_or_else(|| EngineError::Config("noise_kind required".into()))?;
        let var = self.noise_variance.unwrap_or(1.0);
        Ok(match kind {
            "gaussian" => BaseNoise::gaussian(self.noise_mean.unwrap_or(0.0), var),
            "rademacher" => BaseNoise::rademacher(),
            "uniform_centered" => BaseNoise::uniform_centered(var),
            "shifted_exponential" => BaseNoise::shifted_exponential(
                self.exponential_rate
                    .ok_or_else(|| EngineError::Config("exponential_rate required".into()))?,
            ),
            other => return Err(EngineError::Config(format!("unknown noise kind {other}"))),
        })
    }

    pub fn build(&self, beta: f64) -> Result<WeightFamily, EngineError> {
        match self.variant.as_str() {
            "standard" => Ok(WeightFamily::standard(self.noise()?)),
            "linear" => Ok(WeightFamily::linear(self.noise()?)),
            "log_gamma" => {
                let theta = match (self.theta, self.theta_rule.as_deref()) {
                    (Some(t), None) => t,
                    (None, Some("inverse_beta_sq")) => {
                        if beta <= 0.0 {
                            return Err(EngineError::Config(
                                "inverse_beta_sq rule needs beta > 0".into(),
                            ));
                        }
                        1.0 / (beta * beta)
                    }
                    (None, Some("match")) => theta_match(&self.noise()?, beta)?,
                    _ => {
                        return Err(EngineError::Config(
                            "log_gamma needs exactly one of theta / theta_rule".into(),
                        ))
                    }
                };
                if theta <= 2.0 {
                    return Err(EngineError::Config(format!("log_gamma theta {theta} <= 2")));
                }
                Ok(WeightFamily::log_gamma(theta))
            }
            other => Err(EngineError::Config(format!(
                "unknown family variant {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fluctuations,
    Lindeberg,
    Localtime,
    Validity,
    Exponents,
    TwBuild,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FluctuationsParams {
    pub family: FamilySpec,
    pub n_list: Vec<u64>,
    pub alpha: f64,
    pub samples: u64,
    /// polymer paths per disorder sample for the midpoint-spread column
    /// (0 disables it)
    #[serde(default)]
    pub spread_paths: u64,
    /// disorder samples used for the spread column
    #[serde(default)]
    pub spread_samples: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LindebergParams {
    pub n: u64,
    pub alpha: f64,
    pub family_a: FamilySpec,
    pub mask_fractions: Vec<f64>,
    pub samples: u64,
    /// control arm theta = factor * matched theta (no control arm if absent)
    #[serde(default)]
    pub control_theta_factor: Option<f64>,
    /// swap whole column strips of this width instead of i.i.d. site masks
    #[serde(default)]
    pub strip_len: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LocaltimeParams {
    pub n_list: Vec<u64>,
    pub slopes: Vec<f64>,
    pub m_list: Vec<u32>,
    pub trials: u64,
    pub meeting_trials: u64,
    #[serde(default = "default_mgf_a")]
    pub mgf_a: f64,
    #[serde(default = "default_mgf_delta")]
    pub mgf_delta: f64,
}

fn default_mgf_a() -> f64 {
    1.0
}

fn default_mgf_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidityParams {
    pub family: FamilySpec,
    pub beta_grid: Vec<f64>,
    pub k_list: Vec<u32>,
    pub s: f64,
    pub samples_per_point: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExponentsParams {
    pub alpha_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub k_list: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TwBuildParams {
    pub order: usize,
    pub tail_cut: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    #[serde(default)]
    pub refine_check: bool,
}

/// Declarative experiment description; fully determines the outputs given
/// the code version.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// chunk size of the checkpointed sample loop
    #[serde(default = "default_checkpoint_interval")]
    pub checkpoint_interval: u64,
    #[serde(default)]
    pub fluctuations: Option<FluctuationsParams>,
    #[serde(default)]
    pub lindeberg: Option<LindebergParams>,
    #[serde(default)]
    pub localtime: Option<LocaltimeParams>,
    #[serde(default)]
    pub validity: Option<ValidityParams>,
    #[serde(default)]
    pub exponents: Option<ExponentsParams>,
    #[serde(default)]
    pub tw: Option<TwBuildParams>,
    /// acceptance rules evaluated by `report --check`
    #[serde(default)]
    pub checks: Vec<CheckRule>,
}

fn default_workers() -> usize {
    8
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_checkpoint_interval() -> u64 {
    256
}

impl ExperimentConfig {
    /// Canonical serialization; the config digest is derived from it.
    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> u64 {
        digest64(&self.canonical_string())
    }
}

/// One row of reproducible output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    /// canonical parameter tuple, "k=v" pairs joined by ';'
    pub params: String,
    pub statistic: String,
    pub estimate: f64,
    pub stderr: f64,
    pub sample_count: u64,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn key(&self) -> (String, String, String) {
        (
            self.experiment.clone(),
            self.params.clone(),
            self.statistic.clone(),
        )
    }

    /// Value of a `k=v` component of the params tuple.
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.split(';').find_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            (k == key).then(|| v.parse().ok())?
        })
    }
}

/// Canonical params tuple: sorted keys, '=' and ';' separators.
pub fn params_string(pairs: &[(&str, String)]) -> String {
    let map: BTreeMap<&str, &String> = pairs.iter().map(|(k, v)| (*k, v)).collect();
    map.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Serializes records as CSV. `canonical` drops the wall-time column so the
/// bytes are a pure function of (config, code version).
pub fn records_to_csv(records: &[ResultRecord], canonical: bool) -> String {
    let mut out = String::new();
    if canonical {
        out.push_str("experiment,params,statistic,estimate,stderr,sample_count\n");
    } else {
        out.push_str("experiment,params,statistic,estimate,stderr,sample_count,wall_time_s\n");
    }
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.key());
    for r in sorted {
        if canonical {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.17e},{}\n",
                r.experiment, r.params, r.statistic, r.estimate, r.stderr, r.sample_count
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.17e},{},{:.3}\n",
                r.experiment,
                r.params,
                r.statistic,
                r.estimate,
                r.stderr,
                r.sample_count,
                r.wall_time_s
            ));
        }
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<ResultRecord>, EngineError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 6 {
            return Err(EngineError::Io(format!("bad record line: {line}")));
        }
        out.push(ResultRecord {
            experiment: parts[0].into(),
            params: parts[1].into(),
            statistic: parts[2].into(),
            estimate: parts[3].parse().map_err(|_| EngineError::Io(line.into()))?,
            stderr: parts[4].parse().map_err(|_| EngineError::Io(line.into()))?,
            sample_count: parts[5].parse().map_err(|_| EngineError::Io(line.into()))?,
            wall_time_s: parts.get(6).and_then(|v| v.parse().ok()).unwrap_or(0.0),
        });
    }
    Ok(out)
}

/// Merge with dedup by (experiment, params, statistic); later wins, so
/// appending records is idempotent under resume.
pub fn merge_records(existing: Vec<ResultRecord>, new: Vec<ResultRecord>) -> Vec<ResultRecord> {
    let mut map: BTreeMap<(String, String, String), ResultRecord> = BTreeMap::new();
    for r in existing.into_iter().chain(new) {
        map.insert(r.key(), r);
    }
    map.into_values().collect()
}

/// Sidecar describing a (possibly partial) run.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub config_digest: String,
    pub code_version: String,
    /// disjoint sorted [start, end) index ranges
    pub completed: Vec<(u64, u64)>,
    pub created_unix: u64,
    pub updated_unix: u64,
}

impl RunManifest {
    pub fn new(digest: u64) -> RunManifest {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            config_digest: format!("{digest:016x}"),
            code_version: env!("CARGO_PKG_VERSION").into(),
            completed: Vec::new(),
            created_unix: now,
            updated_unix: now,
        }
    }

    /// Inserts a range, keeping the list sorted, disjoint and merged.
    pub fn add_range(&mut self, start: u64, end: u64) {
        assert!(start <= end);
        self.completed.push((start, end));
        self.completed.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(self.completed.len());
        for &(s, e) in &self.completed {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        self.completed = merged;
        self.updated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
    }

    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        std::fs::write(
            path,
            serde_json::to_string_pretty(self).expect("serializes"),
        )
        .map_err(|e| EngineError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunManifest, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| EngineError::Io(e.to_string()))
    }
}

/// Acceptance rule evaluated against merged records by `report --check`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckRule {
    pub experiment: String,
    pub statistic: String,
    /// exact params-tuple match when present
    #[serde(default)]
    pub params: Option<String>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub min: Option<f64>,
    /// estimates must strictly decrease as this param key increases
    #[serde(default)]
    pub decreasing_in: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub rule: CheckRule,
    pub pass: bool,
    pub detail: String,
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN estimates must fail the rule
pub fn evaluate_checks(rules: &[CheckRule], records: &[ResultRecord]) -> Vec<CheckOutcome> {
    rules
        .iter()
        .map(|rule| {
            let matching: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| {
                    r.experiment == rule.experiment
                        && r.statistic == rule.statistic
                        && rule.params.as_ref().is_none_or(|p| &r.params == p)
                })
                .collect();
            if matching.is_empty() {
                return CheckOutcome {
                    rule: rule.clone(),
                    pass: false,
                    detail: "no matching records".into(),
                };
            }
            let mut pass = true;
            let mut notes = Vec::new();
            for r in &matching {
                if let Some(max) = rule.max {
                    if !(r.estimate <= max) {
                        pass = false;
                        notes.push(format!("{} = {} > max {max}", r.params, r.estimate));
                    }
                }
                if let Some(min) = rule.min {
                    if !(r.estimate >= min) {
                        pass = false;
                        notes.push(format!("{} = {} < min {min}", r.params, r.estimate));
                    }
                }
            }
            if let Some(key) = &rule.decreasing_in {
                let mut seq: Vec<(f64, f64)> = matching
                    .iter()
                    .filter_map(|r| r.param(key).map(|k| (k, r.estimate)))
                    .collect();
                seq.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite key"));
                if seq.len() < 2 {
                    pass = false;
                    notes.push(format!("fewer than 2 records with key {key}"));
                } else if !seq.windows(2).all(|w| w[1].1 < w[0].1) {
                    pass = false;
                    notes.push(format!("not strictly decreasing in {key}: {seq:?}"));
                }
            }
            CheckOutcome {
                rule: rule.clone(),
                pass,
                detail: if notes.is_empty() {
                    format!("{} record(s) ok", matching.len())
                } else {
                    notes.join("; ")
                },
            }
        })
        .collect()
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub files: Vec<PathBuf>,
}

/// Runs the configured experiment, writing result records, data files,
/// checkpoints and the manifest under the configured output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, EngineError> {
    let outdir = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&outdir).map_err(|e| EngineError::Io(e.to_string()))?;

    let records = match config.kind {
        ExperimentKind::Fluctuations => experiments::run_fluctuations(config, &outdir)?,
        ExperimentKind::Lindeberg => experiments::run_lindeberg(config, &outdir)?,
        ExperimentKind::Localtime => experiments::run_localtime(config, &outdir)?,
        ExperimentKind::Validity => experiments::run_validity(config, &outdir)?,
        ExperimentKind::Exponents => experiments::run_exponents(config, &outdir)?,
        ExperimentKind::TwBuild => experiments::run_tw_build(config, &outdir)?,
    };

    // merge into results.csv, idempotently
    let results_path = outdir.join("results.csv");
    let existing = match std::fs::read_to_string(&results_path) {
        Ok(text) => records_from_csv(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(EngineError::Io(e.to_string())),
    };
    let merged = merge_records(existing, records.clone());
    std::fs::write(&results_path, records_to_csv(&merged, false))
        .map_err(|e| EngineError::Io(e.to_string()))?;

    let mut manifest = RunManifest::new(config.digest());
    manifest.add_range(0, total_samples(config));
    manifest.save(&outdir.join("manifest.json"))?;

    Ok(RunOutput {
        records: merged,
        files: vec![results_path, outdir.join("manifest.json")],
    })
}

fn total_samples(config: &ExperimentConfig) -> u64 {
    match config.kind {
        ExperimentKind::Fluctuations => config
            .fluctuations
            .as_ref()
            .map(|f| f.samples * f.n_list.len() as u64)
            .unwrap_or(0),
        ExperimentKind::Lindeberg => config.lindeberg.as_ref().map(|l| l.samples).unwrap_or(0),
        ExperimentKind::Localtime => config.localtime.as_ref().map(|l| l.trials).unwrap_or(0),
        ExperimentKind::Validity => config
            .validity
            .as_ref()
            .map(|v| v.samples_per_point)
            .unwrap_or(0),
        ExperimentKind::Exponents | ExperimentKind::TwBuild => 1,
    }
}
