//! Weight families, their exact moments, centering and scaling constants,
//! second-moment matching, the validity-condition checker and the exponent
//! arithmetic for the strip decomposition.

use crate::dd;
use crate::dist::special::{digamma, psi2};
use crate::rng::SplitMix64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum WeightsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mgf undefined at t={t} (finiteness radius {rate})")]
    MgfDomain { t: f64, rate: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("linear weight rejected: 1 + beta*xi <= 0")]
    RejectedDraw,
}

/// Base noise law for the standard and linear families. Every kind has a
/// closed-form moment generating function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Rademacher,
    UniformCentered,
    ShiftedExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseNoise {
    pub kind: NoiseKind,
    pub mean: f64,
    pub variance: f64,
    /// c such that E exp(c |xi|) < infinity for all |t| < c.
    pub exponential_rate: f64,
}

impl BaseNoise {
    pub fn gaussian(mean: f64, variance: f64) -> BaseNoise {
        assert!(variance > 0.0);
        BaseNoise {
            kind: NoiseKind::Gaussian,
            mean,
            variance,
            exponential_rate: f64::INFINITY,
        }
    }

    /// xi = +-1 with probability 1/2.
    pub fn rademacher() -> BaseNoise {
        BaseNoise {
            kind: NoiseKind::Rademacher,
            mean: 0.0,
            variance: 1.0,
            exponential_rate: f64::INFINITY,
        }
    }

    /// Uniform on [-w, w] with w = sqrt(3 variance).
    pub fn uniform_centered(variance: f64) -> BaseNoise {
        assert!(variance > 0.0);
        BaseNoise {
            kind: NoiseKind::UniformCentered,
            mean: 0.0,
            variance,
            exponential_rate: f64::INFINITY,
        }
    }

    /// Exponential(rate) shifted to mean zero.
    pub fn shifted_exponential(rate: f64) -> BaseNoise {
        assert!(rate > 0.0);
        BaseNoise {
            kind: NoiseKind::ShiftedExponential,
            mean: 0.0,
            variance: 1.0 / (rate * rate),
            exponential_rate: rate,
        }
    }

    /// Moment generating function psi(t) = E exp(t xi).
    pub fn mgf(&self, t: f64) -> Result<f64, WeightsError> {
        if t.abs() >= self.exponential_rate {
            return Err(WeightsError::MgfDomain {
                t,
                rate: self.exponential_rate,
            });
        }
        Ok(match self.kind {
            NoiseKind::Gaussian => (self.mean * t + 0.5 * self.variance * t * t).exp(),
            NoiseKind::Rademacher => t.cosh(),
            NoiseKind::UniformCentered => {
                let w = (3.0 * self.variance).sqrt();
                let u = w * t;
                if u.abs() < 1e-6 {
                    1.0 + u * u / 6.0 + u.powi(4) / 120.0
                } else {
                    u.sinh() / u
                }
            }
            NoiseKind::ShiftedExponential => {
                let c = self.exponential_rate;
                c / (c - t) * (-t / c).exp()
            }
        })
    }

    /// Third central moment of xi.
    pub fn third_central_moment(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian | NoiseKind::Rademacher | NoiseKind::UniformCentered => 0.0,
            NoiseKind::ShiftedExponential => 2.0 / self.exponential_rate.powi(3),
        }
    }

    /// One draw of xi.
    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.mean + self.variance.sqrt() * z
            }
            NoiseKind::Rademacher => {
                if rng.next_u64() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseKind::UniformCentered => {
                let w = (3.0 * self.variance).sqrt();
                w * (2.0 * rng.next_f64() - 1.0)
            }
            NoiseKind::ShiftedExponential => {
                let c = self.exponential_rate;
                let u: f64 = rng.random();
                -(1.0 - u).ln() / c - 1.0 / c
            }
        }
    }
}

/// Per-site disorder law, normalized so that E w = 1 for every variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum WeightFamily {
    /// w = exp(beta xi) / psi(beta)
    Standard { noise: BaseNoise },
    /// w = (theta - 1) / X with X ~ Gamma(theta, 1)
    LogGamma { theta: f64 },
    /// w = 1 + beta xi with mean-zero xi
    Linear { noise: BaseNoise },
}

impl WeightFamily {
    pub fn standard(noise: BaseNoise) -> WeightFamily {
        WeightFamily::Standard { noise }
    }

    pub fn log_gamma(theta: f64) -> WeightFamily {
        assert!(theta > 2.0, "log-gamma family requires theta > 2");
        WeightFamily::LogGamma { theta }
    }

    pub fn linear(noise: BaseNoise) -> WeightFamily {
        assert!(noise.mean == 0.0, "linear family requires mean-zero noise");
        WeightFamily::Linear { noise }
    }

    pub fn description(&self) -> String {
        match self {
            WeightFamily::Standard { noise } => {
                format!("standard {:?} (var {})", noise.kind, noise.variance)
            }
            WeightFamily::LogGamma { theta } => format!("log-gamma (theta {theta})"),
            WeightFamily::Linear { noise } => {
                format!("linear {:?} (var {})", noise.kind, noise.variance)
            }
        }
    }
}

/// One draw of w. The linear variant returns a rejection error when
/// 1 + beta xi <= 0; the resample policy belongs to the caller.
pub fn sample_weight(
    family: &WeightFamily,
    beta: f64,
    rng: &mut SplitMix64,
) -> Result<f64, WeightsError> {
    match family {
        WeightFamily::Standard { noise } => {
            let psi = noise.mgf(beta)?;
            Ok((beta * noise.sample(rng)).exp() / psi)
        }
        WeightFamily::LogGamma { theta } => {
            if *theta <= 2.0 {
                return Err(WeightsError::Degenerate(format!(
                    "log-gamma theta {theta} <= 2"
                )));
            }
            let gamma = Gamma::new(*theta, 1.0)
                .map_err(|e| WeightsError::Domain(format!("gamma sampler: {e}")))?;
            Ok((theta - 1.0) / gamma.sample(rng))
        }
        WeightFamily::Linear { noise } => {
            let w = 1.0 + beta * noise.sample(rng);
            if w <= 0.0 {
                Err(WeightsError::RejectedDraw)
            } else {
                Ok(w)
            }
        }
    }
}

/// Resampling wrapper around [`sample_weight`]; returns the accepted draw and
/// the number of rejected attempts.
pub fn draw_weight(family: &WeightFamily, beta: f64, rng: &mut SplitMix64) -> (f64, u64) {
    let mut rejections = 0;
    loop {
        match sample_weight(family, beta, rng) {
            Ok(w) => return (w, rejections),
            Err(WeightsError::RejectedDraw) => rejections += 1,
            Err(e) => panic!("non-rejection sampling error: {e}"),
        }
    }
}

/// Polymer size parameters. The inverse temperature is n^(-alpha), computed
/// once in extended precision and stored; everything downstream reuses the
/// stored value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolymerParams {
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
}

impl PolymerParams {
    pub fn new(n: u64, alpha: f64) -> Result<PolymerParams, WeightsError> {
        if n == 0 {
            return Err(WeightsError::Domain("n must be positive".into()));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(WeightsError::Domain(format!(
                "alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        Ok(PolymerParams {
            n,
            alpha,
            beta: dd::pow_neg(n, alpha),
        })
    }

    /// Number of time columns, 0..=2n.
    pub fn columns(&self) -> u64 {
        2 * self.n + 1
    }
}

/// Centered moments of w - 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentProfile {
    pub rho2: f64,
    pub rho3: f64,
    pub second_moment: f64,
}

/// Exact moment profile per family.
pub fn moment_profile(family: &WeightFamily, beta: f64) -> Result<MomentProfile, WeightsError> {
    match family {
        WeightFamily::Standard { noise } => {
            let psi = noise.mgf(beta)?;
            let psi2b = noise.mgf(2.0 * beta)?;
            let psi3b = noise.mgf(3.0 * beta)?;
            let m2 = psi2b / (psi * psi);
            let m3 = psi3b / (psi * psi * psi);
            Ok(MomentProfile {
                rho2: m2 - 1.0,
                rho3: m3 - 3.0 * m2 + 2.0,
                second_moment: m2,
            })
        }
        WeightFamily::LogGamma { theta } => {
            let t = *theta;
            if t <= 3.0 {
                return Err(WeightsError::Degenerate(format!(
                    "log-gamma moments need theta > 3, got {t}"
                )));
            }
            let m2 = (t - 1.0) / (t - 2.0);
            let m3 = (t - 1.0) * (t - 1.0) / ((t - 2.0) * (t - 3.0));
            Ok(MomentProfile {
                rho2: 1.0 / (t - 2.0),
                rho3: m3 - 3.0 * m2 + 2.0,
                second_moment: m2,
            })
        }
        WeightFamily::Linear { noise } => Ok(MomentProfile {
            rho2: noise.variance * beta * beta,
            rho3: noise.third_central_moment() * beta.powi(3),
            second_moment: 1.0 + noise.variance * beta * beta,
        }),
    }
}

/// theta with (theta-1)/(theta-2) = psi(2 beta)/psi(beta)^2, so the log-gamma
/// family matches the first and second moments of the standard family.
pub fn theta_match(noise: &BaseNoise, beta: f64) -> Result<f64, WeightsError> {
    let psi = noise.mgf(beta)?;
    let psi2b = noise.mgf(2.0 * beta)?;
    let gap = psi2b - psi * psi;
    if gap <= 0.0 {
        return Err(WeightsError::Degenerate(format!(
            "psi(2b) - psi(b)^2 = {gap} <= 0"
        )));
    }
    Ok(2.0 + psi * psi / gap)
}

/// Deterministic shift and normalizations of the free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteringScaling {
    pub a_n: f64,
    /// (4 sigma^4 beta^4 n)^(1/3)
    pub scale: f64,
    /// beta^(4/3) n^(1/3)
    pub lindeberg_scale: f64,
}

/// a_n = 2n (log psi(beta) + log 2 - sigma^4 beta^4 / 3) with the matching
/// cube-root scale, for the standard (unnormalized) polymer.
pub fn centering_scaling(
    noise: &BaseNoise,
    params: &PolymerParams,
) -> Result<CenteringScaling, WeightsError> {
    let n = params.n as f64;
    let beta = params.beta;
    let psi = noise.mgf(beta)?;
    let sigma4 = noise.variance * noise.variance;
    let b4 = beta.powi(4);
    Ok(CenteringScaling {
        a_n: 2.0 * n * (psi.ln() + std::f64::consts::LN_2 - sigma4 * b4 / 3.0),
        scale: (4.0 * sigma4 * b4 * n).cbrt(),
        lindeberg_scale: beta.powf(4.0 / 3.0) * n.cbrt(),
    })
}

/// Family-specific centering of the free energy of the *normalized* weights
/// (E w = 1 throughout this crate):
///
/// * standard: the unnormalized formula minus the (2n+1) log psi carried by
///   the normalization;
/// * linear: the standard formula with the log psi term absent;
/// * log-gamma: the exact digamma form
///   a_n = 2n (log(theta-1) - Psi(theta/2)), scale (-Psi''(theta/2))^(1/3) n^(1/3).
pub fn family_centering(
    family: &WeightFamily,
    params: &PolymerParams,
) -> Result<CenteringScaling, WeightsError> {
    let n = params.n as f64;
    let beta = params.beta;
    let lindeberg_scale = beta.powf(4.0 / 3.0) * n.cbrt();
    match family {
        WeightFamily::Standard { noise } => {
            let cs = centering_scaling(noise, params)?;
            let psi = noise.mgf(beta)?;
            Ok(CenteringScaling {
                a_n: cs.a_n - (2.0 * n + 1.0) * psi.ln(),
                ..cs
            })
        }
        WeightFamily::Linear { noise } => {
            let sigma4 = noise.variance * noise.variance;
            let b4 = beta.powi(4);
            Ok(CenteringScaling {
                a_n: 2.0 * n * (std::f64::consts::LN_2 - sigma4 * b4 / 3.0),
                scale: (4.0 * sigma4 * b4 * n).cbrt(),
                lindeberg_scale,
            })
        }
        WeightFamily::LogGamma { theta } => {
            let t = *theta;
            let psi_half = digamma(t / 2.0).map_err(|e| WeightsError::Domain(e.to_string()))?;
            let psi2_half = psi2(t / 2.0).map_err(|e| WeightsError::Domain(e.to_string()))?;
            Ok(CenteringScaling {
                a_n: 2.0 * n * ((t - 1.0).ln() - psi_half),
                scale: (-psi2_half).cbrt() * n.cbrt(),
                lindeberg_scale,
            })
        }
    }
}

/// Empirical check of the four validity conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidityReport {
    pub family: String,
    pub beta_grid: Vec<f64>,
    pub samples_per_point: u64,
    /// per even k: sup over the grid of E|w-1|^k / beta^k
    pub c_k: Vec<(u32, f64)>,
    /// per beta: (beta^(s-1), observed tail probability)
    pub tail_table: Vec<(f64, f64)>,
    /// slope of -log P against beta^(s-1) over observed points
    pub fitted_tail_exponent: Option<f64>,
    pub s: f64,
    pub mean_error: f64,
    pub min_weight: f64,
    pub rejections: u64,
    pub positivity_ok: bool,
    pub unit_mean_ok: bool,
    pub moments_bounded_ok: bool,
    pub tail_ok: bool,
}

/// Samples the family along a beta grid and reports the empirical constants
/// of the four validity conditions. Reports, never asserts.
pub fn check_validity(
    family: &WeightFamily,
    beta_grid: &[f64],
    k_list: &[u32],
    s: f64,
    samples_per_point: u64,
    rng: &mut SplitMix64,
) -> Result<ValidityReport, WeightsError> {
    if beta_grid.is_empty() || beta_grid.iter().any(|&b| b <= 0.0) {
        return Err(WeightsError::Domain(
            "beta grid must be nonempty and positive".into(),
        ));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(WeightsError::Domain(format!(
            "s must lie in (0,1), got {s}"
        )));
    }
    if samples_per_point < 10_000 {
        return Err(WeightsError::Domain(
            "samples_per_point must be at least 10^4".into(),
        ));
    }
    if k_list.iter().any(|&k| k == 0 || k % 2 != 0) {
        return Err(WeightsError::Domain(
            "k_list must contain even k >= 2".into(),
        ));
    }

    let mut c_k = vec![0.0f64; k_list.len()];
    let mut tail_table = Vec::with_capacity(beta_grid.len());
    let mut mean_error = 0.0f64;
    let mut min_weight = f64::INFINITY;
    let mut rejections = 0u64;
    let mut unit_mean_ok = true;

    for &beta in beta_grid {
        let lo = (-beta.powf(s)).exp();
        let hi = beta.powf(s).exp();
        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut moment_sums = vec![0.0f64; k_list.len()];
        let mut outside = 0u64;
        for _ in 0..samples_per_point {
            let (w, rej) = draw_weight(family, beta, rng);
            rejections += rej;
            min_weight = min_weight.min(w);
            mean += w;
            m2 += (w - 1.0) * (w - 1.0);
            for (j, &k) in k_list.iter().enumerate() {
                moment_sums[j] += (w - 1.0).abs().powi(k as i32);
            }
            if !(lo..=hi).contains(&w) {
                outside += 1;
            }
        }
        let m = samples_per_point as f64;
        mean /= m;
        let stderr = (m2 / m).sqrt() / m.sqrt();
        mean_error = mean_error.max((mean - 1.0).abs());
        if (mean - 1.0).abs() > 5.0 * stderr.max(1e-300) {
            unit_mean_ok = false;
        }
        for (j, &k) in k_list.iter().enumerate() {
            c_k[j] = c_k[j].max(moment_sums[j] / m / beta.powi(k as i32));
        }
        tail_table.push((beta.powf(s - 1.0), outside as f64 / m));
    }

    // least-squares slope of -log P on beta^(s-1), over the points with hits
    let pts: Vec<(f64, f64)> = tail_table
        .iter()
        .filter(|&&(_, p)| p > 0.0)
        .map(|&(x, p)| (x, -p.ln()))
        .collect();
    let fitted_tail_exponent = if pts.len() >= 2 {
        let nx = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = nx * sxx - sx * sx;
        (denom.abs() > 1e-12).then(|| (nx * sxy - sx * sy) / denom)
    } else {
        None
    };

    let moments_bounded_ok = c_k.iter().all(|v| v.is_finite());
    // tail decays in beta^(s-1), or no exceedance was ever observed
    let tail_ok = match fitted_tail_exponent {
        Some(slope) => slope > 0.0,
        None => true,
    };

    Ok(ValidityReport {
        family: family.description(),
        beta_grid: beta_grid.to_vec(),
        samples_per_point,
        c_k: k_list.iter().copied().zip(c_k).collect(),
        tail_table,
        fitted_tail_exponent,
        s,
        mean_error,
        min_weight,
        rejections,
        positivity_ok: min_weight > 0.0,
        unit_mean_ok,
        moments_bounded_ok,
        tail_ok,
    })
}

/// Exponent arithmetic of the strip decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub alpha: f64,
    pub delta: f64,
    pub s: f64,
    pub k: u32,
    /// lambda = ((2 - 17 alpha) + 8 delta - 20 alpha delta) / (3 (1 + 4 delta))
    pub lambda: f64,
    /// 1 - s alpha < 4 alpha / (1 + 4 delta)
    pub strip_feasible: bool,
    /// 2 / (3k + 11)
    pub alpha_floor_conjectured: f64,
    pub alpha_floor_proved: f64,
}

pub fn exponent_report(
    alpha: f64,
    delta: f64,
    s: f64,
    k: u32,
) -> Result<ExponentReport, WeightsError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(WeightsError::Domain(format!(
            "alpha in (0, 1/2) required, got {alpha}"
        )));
    }
    if delta < 0.0 {
        return Err(WeightsError::Domain(format!(
            "delta >= 0 required, got {delta}"
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(WeightsError::Domain(format!(
            "s in (0,1) required, got {s}"
        )));
    }
    if k < 2 {
        return Err(WeightsError::Domain(format!("k >= 2 required, got {k}")));
    }
    let lambda =
        ((2.0 - 17.0 * alpha) + 8.0 * delta - 20.0 * alpha * delta) / (3.0 * (1.0 + 4.0 * delta));
    Ok(ExponentReport {
        alpha,
        delta,
        s,
        k,
        lambda,
        strip_feasible: 1.0 - s * alpha < 4.0 * alpha / (1.0 + 4.0 * delta),
        alpha_floor_conjectured: 2.0 / (3.0 * k as f64 + 11.0),
        alpha_floor_proved: 0.2,
    })
}

/// Smallest s making the strip bound work: s > (1 - 4 alpha/(1+4 delta))/alpha.
/// A feasible s in (0, 1) exists iff this threshold is below 1.
pub fn strip_s_threshold(alpha: f64, delta: f64) -> f64 {
    (1.0 - 4.0 * alpha / (1.0 + 4.0 * delta)) / alpha
}
