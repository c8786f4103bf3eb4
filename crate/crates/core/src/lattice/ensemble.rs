//! Free-energy ensembles and the weight-swap experiment.

use crate::lattice::{DisorderField, LatticeError, MaskSpec};
use crate::weights::{family_centering, CenteringScaling, PolymerParams, WeightFamily};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One disorder draw of the centered, scaled free energy; recomputable from
/// (master seed, seed_index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergySample {
    pub seed_index: u64,
    pub log_z: f64,
    pub centered_scaled: f64,
}

/// Independent disorder draws of (log Z - a_n)/scale under the family's own
/// centering. Sample i uses the field seed mix(master_seed, i); the result is
/// independent of thread count.
pub fn free_energy_ensemble(
    params: &PolymerParams,
    family: &WeightFamily,
    master_seed: u64,
    count: u64,
) -> Result<Vec<FreeEnergySample>, LatticeError> {
    let cs = family_centering(family, params)?;
    Ok((0..count)
        .into_par_iter()
        .map(|idx| {
            let field = DisorderField::new(
                params,
                *family,
                DisorderField::sample_seed(master_seed, idx),
            );
            let log_z = field.log_partition();
            FreeEnergySample {
                seed_index: idx,
                log_z,
                centered_scaled: (log_z - cs.a_n) / cs.scale,
            }
        })
        .collect())
}

/// Root-mean-square spread of the sampled path midpoint around n/2:
/// an exploratory transversal statistic, no exponent asserted.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MidpointSpread {
    pub rms: f64,
    pub stderr: f64,
    pub disorder_samples: u64,
    pub paths_per_sample: u64,
}

pub fn midpoint_spread(
    params: &PolymerParams,
    family: &WeightFamily,
    master_seed: u64,
    disorder_samples: u64,
    paths_per_sample: u64,
) -> Result<MidpointSpread, LatticeError> {
    let n = params.n;
    let per_disorder: Vec<f64> = (0..disorder_samples)
        .into_par_iter()
        .map(|idx| {
            let field = DisorderField::new(
                params,
                *family,
                DisorderField::sample_seed(master_seed, idx),
            );
            let tables = field.tables();
            let mut rng =
                crate::rng::SplitMix64::new(DisorderField::sample_seed(master_seed ^ 0x777, idx));
            let mut acc = 0.0;
            for _ in 0..paths_per_sample {
                let path = tables.sample_path(&mut rng);
                let mid = path.height_at(n as i64).expect("midpoint in domain");
                let dev = mid as f64 - n as f64 / 2.0;
                acc += dev * dev;
            }
            acc / paths_per_sample as f64
        })
        .collect();
    let m = disorder_samples as f64;
    let mean = per_disorder.iter().sum::<f64>() / m;
    let var = per_disorder
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / m;
    Ok(MidpointSpread {
        rms: mean.sqrt(),
        // delta method: se(sqrt(X)) ~ se(X) / (2 sqrt(X))
        stderr: (var / m).sqrt() / (2.0 * mean.sqrt()),
        disorder_samples,
        paths_per_sample,
    })
}

/// Bounded C^3 test functions for the swap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFn {
    Tanh,
    GaussBump,
    Sin,
}

impl TestFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFn::Tanh => x.tanh(),
            TestFn::GaussBump => (-0.5 * x * x).exp(),
            TestFn::Sin => x.sin(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFn::Tanh => "tanh",
            TestFn::GaussBump => "gauss_bump",
            TestFn::Sin => "sin",
        }
    }

    pub const BATTERY: [TestFn; 3] = [TestFn::Tanh, TestFn::GaussBump, TestFn::Sin];
}

/// Swap experiment configuration. Family B is expected to be second-moment
/// matched to family A; the control family is deliberately mismatched.
#[derive(Debug, Clone)]
pub struct LindebergConfig {
    pub params: PolymerParams,
    pub family_a: WeightFamily,
    pub family_b: WeightFamily,
    /// fraction of sites (i.i.d. masks) or of column strips (strip masks)
    /// drawing from family B, one arm per entry
    pub mask_fractions: Vec<f64>,
    pub samples: u64,
    pub master_seed: u64,
    /// mismatched-moment arm reported alongside, if present
    pub control_family: Option<WeightFamily>,
    /// when set, hybrid arms swap whole column strips of this width
    /// (the first round(f * strip_count) strips become family B) instead of
    /// masking sites independently
    pub strip_len: Option<u64>,
}

/// Per-arm expectations of the test battery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapArm {
    pub label: String,
    pub mask_fraction: Option<f64>,
    /// (test function, mean, stderr)
    pub means: Vec<(String, f64, f64)>,
    pub samples: u64,
}

/// Difference of one arm against the pure-A arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapDiff {
    pub arm: String,
    pub test: String,
    pub delta: f64,
    pub combined_stderr: f64,
}

impl SwapDiff {
    pub fn sigmas(&self) -> f64 {
        self.delta.abs() / self.combined_stderr
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapReport {
    /// common centering used by every arm (family A's)
    pub centering: CenteringScaling,
    pub arms: Vec<SwapArm>,
    pub diffs: Vec<SwapDiff>,
}

impl SwapReport {
    pub fn arm(&self, label: &str) -> Option<&SwapArm> {
        self.arms.iter().find(|a| a.label == label)
    }

    pub fn diff(&self, arm: &str, test: &str) -> Option<&SwapDiff> {
        self.diffs.iter().find(|d| d.arm == arm && d.test == test)
    }
}

/// Runs the swap experiment: for each mask fraction f the per-site mask picks
/// family B with probability f (frozen per seed), and every arm's statistic
/// is centered with the same family-A constants, per the perturbation
/// statement (one centering sequence serves both matched families). At f = 0
/// the hybrid arm reproduces the pure-A arm bitwise under the shared seed
/// policy.
pub fn lindeberg_sweep(
    cfg: &LindebergConfig,
    battery: &[TestFn],
) -> Result<SwapReport, LatticeError> {
    if cfg.mask_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(LatticeError::Invalid(
            "mask fractions must lie in [0,1]".into(),
        ));
    }
    if battery.is_empty() || cfg.samples < 2 {
        return Err(LatticeError::Invalid(
            "need test functions and >= 2 samples".into(),
        ));
    }
    let cs = family_centering(&cfg.family_a, &cfg.params)?;

    let mut arms = Vec::new();
    arms.push(run_arm(cfg, battery, "pure_a", None, &cs, ArmKind::PureA)?);
    for &f in &cfg.mask_fractions {
        let label = if f == 1.0 {
            "pure_b".to_string()
        } else {
            format!("hybrid_{f:.2}")
        };
        arms.push(run_arm(
            cfg,
            battery,
            &label,
            Some(f),
            &cs,
            ArmKind::Hybrid(f),
        )?);
    }
    if let Some(control) = cfg.control_family {
        arms.push(run_arm(
            cfg,
            battery,
            "control",
            None,
            &cs,
            ArmKind::Control(control),
        )?);
    }

    let pure_a = arms[0].clone();
    let mut diffs = Vec::new();
    for arm in arms.iter().skip(1) {
        for ((test, mean, se), (_, mean_a, se_a)) in arm.means.iter().zip(&pure_a.means) {
            diffs.push(SwapDiff {
                arm: arm.label.clone(),
                test: test.clone(),
                delta: mean - mean_a,
                combined_stderr: (se * se + se_a * se_a).sqrt(),
            });
        }
    }

    Ok(SwapReport {
        centering: cs,
        arms,
        diffs,
    })
}

enum ArmKind {
    PureA,
    Hybrid(f64),
    Control(WeightFamily),
}

/// Site mask of a hybrid arm at swap fraction f: i.i.d. per-site, or the
/// first round(f * strip_count) column strips when a strip width is set.
fn hybrid_mask(cfg: &LindebergConfig, f: f64) -> MaskSpec {
    match cfg.strip_len {
        None => MaskSpec::Iid { fraction: f },
        Some(len) => {
            let columns = 2 * cfg.params.n + 1;
            let strips = columns.div_ceil(len.max(1));
            MaskSpec::Strips {
                strip_len: len.max(1),
                swapped: (f * strips as f64).round() as u64,
            }
        }
    }
}

fn run_arm(
    cfg: &LindebergConfig,
    battery: &[TestFn],
    label: &str,
    mask_fraction: Option<f64>,
    cs: &CenteringScaling,
    kind: ArmKind,
) -> Result<SwapArm, LatticeError> {
    let stats: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|idx| {
            let seed = DisorderField::sample_seed(cfg.master_seed, idx);
            let field = match &kind {
                ArmKind::PureA => DisorderField::new(&cfg.params, cfg.family_a, seed),
                ArmKind::Hybrid(f) => DisorderField::hybrid(
                    &cfg.params,
                    cfg.family_a,
                    cfg.family_b,
                    hybrid_mask(cfg, *f),
                    seed,
                ),
                // the control arm lives on the B-streams with a mismatched law
                ArmKind::Control(fam) => DisorderField::hybrid(
                    &cfg.params,
                    cfg.family_a,
                    *fam,
                    hybrid_mask(cfg, 1.0),
                    seed,
                ),
            };
            (field.log_partition() - cs.a_n) / cs.scale
        })
        .collect();

    let m = cfg.samples as f64;
    let means = battery
        .iter()
        .map(|tf| {
            let vals: Vec<f64> = stats.iter().map(|&x| tf.eval(x)).collect();
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
            (tf.name().to_string(), mean, (var / m).sqrt())
        })
        .collect();

    Ok(SwapArm {
        label: label.to_string(),
        mask_fraction,
        means,
        samples: cfg.samples,
    })
}
