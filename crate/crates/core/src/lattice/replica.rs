//! Replica statistics: the expected simultaneous overlap of independent
//! polymer paths, and the exact moment identities relating disorder moments
//! of the strip partition function to intersection local times under mu.

use crate::lattice::dp::PartitionTables;
use crate::lattice::{DisorderField, LatticeError, MaskSpec, StripSpec};
use crate::paths::{sample_bridge, BridgeSpec};
use crate::rng::{mix2, mix3, SplitMix64};
use crate::weights::{draw_weight, moment_profile};

const REDRAW_TAG: u64 = 0x5ED5_EED5_0A0B_0C0D;

/// Monte Carlo estimate of E #{(i,j) : three independent polymer paths all
/// pass (i,j)}, sites at every time 0..=2n counted (shared endpoints
/// contribute 2).
pub fn replica_triple_overlap(
    field: &DisorderField,
    trials: u64,
    rng: &mut SplitMix64,
) -> (f64, f64) {
    let tables = field.tables();
    triple_overlap_from_tables(&tables, trials, rng)
}

pub(crate) fn triple_overlap_from_tables(
    tables: &PartitionTables,
    trials: u64,
    rng: &mut SplitMix64,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..trials {
        let p1 = tables.sample_path(rng);
        let p2 = tables.sample_path(rng);
        let p3 = tables.sample_path(rng);
        let (h1, h2, h3) = (p1.heights(), p2.heights(), p3.heights());
        let mut count = 0u64;
        for t in 0..h1.len() {
            count += u64::from(h1[t] == h2[t] && h2[t] == h3[t]);
        }
        sum += count as f64;
        sum2 += (count * count) as f64;
    }
    let t = trials as f64;
    let mean = sum / t;
    (mean, ((sum2 / t - mean * mean).max(0.0) / t).sqrt())
}

/// Two Monte Carlo routes to the same exact identity.
#[derive(Debug, Clone, Copy)]
pub struct ReplicaIdentity {
    pub order: u32,
    /// disorder route: E (Zmu - 1)^2 (order 2) or E Zmu^3 (order 3)
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// path route: E_mu (1+rho2)^L - 1, or the pairwise/triple site product
    pub rhs: f64,
    pub rhs_stderr: f64,
}

impl ReplicaIdentity {
    pub fn combined_stderr(&self) -> f64 {
        (self.lhs_stderr * self.lhs_stderr + self.rhs_stderr * self.rhs_stderr).sqrt()
    }

    pub fn discrepancy_sigmas(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.combined_stderr()
    }
}

/// Checks the replica moment identity on a strip with the outside
/// environment quenched (fixed by the field's seed).
///
/// order 2: disorder-MC of (Zmu - 1)^2 against path-pair MC of
/// E_mu (1 + rho2)^L - 1; order 3: disorder-MC of Zmu^3 against triple-path
/// MC of (1+rho2)^#pairwise-only (1+3 rho2+rho3)^#triple.
pub fn replica_moment_identity(
    field: &DisorderField,
    strip: &StripSpec,
    order: u32,
    disorder_trials: u64,
    path_trials: u64,
    rng: &mut SplitMix64,
) -> Result<ReplicaIdentity, LatticeError> {
    if order != 2 && order != 3 {
        return Err(LatticeError::Invalid(format!(
            "order {order} not in {{2, 3}}"
        )));
    }
    if field.mask() != MaskSpec::ConstantA {
        return Err(LatticeError::Invalid(
            "replica identity requires i.i.d. in-strip weights (constant-A mask)".into(),
        ));
    }
    let profile = moment_profile(field.family_a(), field.beta())?;
    let tables = field.strip_tables(strip);
    let log_zcal = tables.log_z();
    let mu = crate::lattice::MuEndpoints::from_tables(field, strip, &tables)?;

    // disorder route: redraw the in-strip weights, quenched outside
    let (fa, fa_cum) = tables.forward_column(strip.a);
    let (bb, bb_cum) = tables.backward_column(strip.b);
    let fa = fa.to_vec();
    let bb = bb.to_vec();
    let mut lhs_sum = 0.0;
    let mut lhs_sum2 = 0.0;
    for d in 0..disorder_trials {
        let redraw_seed = mix2(field.seed() ^ REDRAW_TAG, d);
        let log_zd = strip_resweep(field, strip, &fa, fa_cum, &bb, bb_cum, redraw_seed);
        let zmu = (log_zd - log_zcal).exp();
        let v = if order == 2 {
            (zmu - 1.0) * (zmu - 1.0)
        } else {
            zmu * zmu * zmu
        };
        lhs_sum += v;
        lhs_sum2 += v * v;
    }
    let dt = disorder_trials as f64;
    let lhs = lhs_sum / dt;
    let lhs_stderr = ((lhs_sum2 / dt - lhs * lhs).max(0.0) / dt).sqrt();

    // path route: independent mu-paths, exact per-column moment factors
    let mut rhs_sum = 0.0;
    let mut rhs_sum2 = 0.0;
    for _ in 0..path_trials {
        let v = if order == 2 {
            let l = mu_pair_local_time(strip, &mu, rng);
            (1.0 + profile.rho2).powi(l as i32)
        } else {
            let (pairwise, triple) = mu_triple_counts(strip, &mu, rng);
            (1.0 + profile.rho2).powi(pairwise as i32)
                * (1.0 + 3.0 * profile.rho2 + profile.rho3).powi(triple as i32)
        };
        rhs_sum += v;
        rhs_sum2 += v * v;
    }
    let pt = path_trials as f64;
    let mut rhs = rhs_sum / pt;
    let rhs_stderr = ((rhs_sum2 / pt - rhs * rhs).max(0.0) / pt).sqrt();
    if order == 2 {
        rhs -= 1.0;
    }

    Ok(ReplicaIdentity {
        order,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
    })
}

/// log Z with in-strip weights redrawn from `redraw_seed`, reusing the
/// quenched outside sweeps.
fn strip_resweep(
    field: &DisorderField,
    strip: &StripSpec,
    fa: &[f64],
    fa_cum: f64,
    bb: &[f64],
    bb_cum: f64,
    redraw_seed: u64,
) -> f64 {
    let weight = |i: u64, j: i64| -> f64 {
        let mut stream = SplitMix64::new(mix3(redraw_seed, i, j as u64));
        draw_weight(field.family_a(), field.beta(), &mut stream).0
    };
    let (lo_a, hi_a) = field.height_range(strip.a);
    let mut prev: Vec<f64> = (lo_a..=hi_a)
        .map(|x| fa[(x - lo_a) as usize] * weight(strip.a, x))
        .collect();
    let mut log_scale = rescale(&mut prev);
    for i in strip.a + 1..=strip.b {
        let (lo, hi) = field.height_range(i);
        let (plo, phi) = field.height_range(i - 1);
        let mut cur = Vec::with_capacity((hi - lo + 1) as usize);
        for j in lo..=hi {
            let mut s = 0.0;
            if (plo..=phi).contains(&j) {
                s += prev[(j - plo) as usize];
            }
            if (plo..=phi).contains(&(j - 1)) {
                s += prev[(j - 1 - plo) as usize];
            }
            cur.push(weight(i, j) * s);
        }
        log_scale += rescale(&mut cur);
        prev = cur;
    }
    // prev and bb both cover column b indexed from the same lower height
    debug_assert_eq!(prev.len(), bb.len());
    let dot: f64 = prev.iter().zip(bb).map(|(&v, &w)| v * w).sum();
    fa_cum + bb_cum + log_scale + dot.ln()
}

fn rescale(col: &mut [f64]) -> f64 {
    let max = col.iter().cloned().fold(f64::MIN, f64::max);
    debug_assert!(max > 0.0 && max.is_finite());
    let inv = 1.0 / max;
    for v in col.iter_mut() {
        *v *= inv;
    }
    max.ln()
}

fn sample_mu_path(
    strip: &StripSpec,
    mu: &crate::lattice::MuEndpoints,
    rng: &mut SplitMix64,
) -> crate::paths::LatticePath {
    let (x, y) = mu.sample(rng);
    let spec = BridgeSpec::new(strip.a as i64, strip.b as i64, x, y).expect("feasible endpoints");
    sample_bridge(&spec, rng)
}

fn mu_pair_local_time(
    strip: &StripSpec,
    mu: &crate::lattice::MuEndpoints,
    rng: &mut SplitMix64,
) -> u64 {
    let p1 = sample_mu_path(strip, mu, rng);
    let p2 = sample_mu_path(strip, mu, rng);
    crate::paths::local_time(&p1, &p2, None).expect("same domain")
}

/// (#columns where exactly two of three mu-paths coincide, #columns where
/// all three coincide), both ends of the strip included.
fn mu_triple_counts(
    strip: &StripSpec,
    mu: &crate::lattice::MuEndpoints,
    rng: &mut SplitMix64,
) -> (u64, u64) {
    let p1 = sample_mu_path(strip, mu, rng);
    let p2 = sample_mu_path(strip, mu, rng);
    let p3 = sample_mu_path(strip, mu, rng);
    let (h1, h2, h3) = (p1.heights(), p2.heights(), p3.heights());
    let mut pairwise = 0u64;
    let mut triple = 0u64;
    for t in 0..h1.len() {
        let (a, b, c) = (h1[t], h2[t], h3[t]);
        if a == b && b == c {
            triple += 1;
        } else if a == b || b == c || a == c {
            pairwise += 1;
        }
    }
    (pairwise, triple)
}

/// Exact enumeration of E_mu (1 + rho2)^L over all bridge pairs of a pinned
/// strip, by two algebraic routes (closed-form power and per-column moment
/// product). Test oracle for small instances.
pub fn enumerate_pair_moment(
    n: u64,
    strip: &StripSpec,
    rho2: f64,
) -> Result<(f64, f64), LatticeError> {
    if strip.a != 0 || strip.b != 2 * n || 2 * n > 12 {
        return Err(LatticeError::Invalid(
            "enumeration oracle needs the pinned strip [0, 2n], 2n <= 12".into(),
        ));
    }
    let spec = BridgeSpec::new(0, 2 * n as i64, 0, n as i64).expect("valid");
    let paths: Vec<_> = crate::paths::enumerate_paths(&spec)
        .expect("within guard")
        .collect();
    let m = paths.len() as f64;
    let mut closed = 0.0;
    let mut product = 0.0;
    for p in &paths {
        for q in &paths {
            let l = crate::paths::local_time(p, q, None).expect("same domain");
            closed += (1.0 + rho2).powi(l as i32);
            let (hp, hq) = (p.heights(), q.heights());
            let mut prod = 1.0;
            for t in 0..hp.len() {
                if hp[t] == hq[t] {
                    prod *= 1.0 + rho2;
                }
            }
            product += prod;
        }
    }
    Ok((closed / (m * m), product / (m * m)))
}
