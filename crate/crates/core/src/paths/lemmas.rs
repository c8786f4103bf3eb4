//! Monte Carlo and exact statistics for the quantitative bridge lemmas:
//! bridge-to-walk replacement, the binomial local CLT deviation, the
//! first-meeting tail, geometric domination of windowed intersections, and
//! moment/MGF estimates for bridge intersection local times.

use crate::dist::special::{ln_choose, normal_pdf};
use crate::paths::{local_time, sample_bridge, triple_local_time, BridgeSpec, PathsError};
use crate::rng::SplitMix64;

/// Streamed Bernoulli walk, extendable one step at a time.
#[derive(Debug, Clone)]
pub struct WalkStream {
    slope: f64,
    rng: SplitMix64,
    height: i64,
}

impl WalkStream {
    pub fn new(slope: f64, start_height: i64, seed: u64) -> WalkStream {
        assert!((0.0..=1.0).contains(&slope));
        WalkStream {
            slope,
            rng: SplitMix64::new(seed),
            height: start_height,
        }
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    /// Advances one step and returns the new height.
    pub fn step(&mut self) -> i64 {
        self.height += i64::from(self.rng.next_f64() < self.slope);
        self.height
    }
}

/// Number of intersections of two streamed walks before the first
/// intersection-free interval of length `gap`. Counts the meeting at time 0
/// when the walks share their start.
pub fn geometric_dominator(
    w1: &mut WalkStream,
    w2: &mut WalkStream,
    gap: u64,
    cap: u64,
) -> Result<u64, PathsError> {
    let mut count = 0u64;
    let mut last_meet: i64 = -1;
    let mut t: i64 = 0;
    loop {
        if w1.height() == w2.height() {
            count += 1;
            last_meet = t;
        } else if t - last_meet >= gap as i64 {
            return Ok(count);
        }
        if t as u64 >= cap {
            return Err(PathsError::IterationCap(cap));
        }
        w1.step();
        w2.step();
        t += 1;
    }
}

/// Monte Carlo estimate of P(T >= n) for T the first meeting time (k >= 1)
/// of two independent walks started together.
#[derive(Debug, Clone, Copy)]
pub struct MeetingTail {
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
    pub trials: u64,
}

pub fn first_meeting_tail(
    p1: f64,
    p2: f64,
    n: u64,
    trials: u64,
    rng: &mut SplitMix64,
) -> MeetingTail {
    assert!(n >= 1 && trials > 0);
    let mut survived = 0u64;
    for _ in 0..trials {
        let mut diff = 0i64;
        let mut met = false;
        for _ in 1..n {
            diff += i64::from(rng.next_f64() < p1) - i64::from(rng.next_f64() < p2);
            if diff == 0 {
                met = true;
                break;
            }
        }
        if !met {
            survived += 1;
        }
    }
    let est = survived as f64 / trials as f64;
    MeetingTail {
        estimate: est,
        stderr: (est * (1.0 - est) / trials as f64).sqrt(),
        n,
        trials,
    }
}

/// Exact half-path replacement ratio
/// P_{p, h}(walk reaches y in n/2 steps) / P_p(walk reaches y in n steps),
/// evaluated in log space from binomial pmfs.
pub fn bridge_replace_ratio(n: u64, p: f64, half_height: u64, y: u64) -> Result<f64, PathsError> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(PathsError::InvalidBridge(format!("n = {n} must be even")));
    }
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(PathsError::InvalidBridge(format!(
            "slope p = {p} not in (0,1)"
        )));
    }
    let half = n / 2;
    if half_height > half || y > n {
        return Err(PathsError::InvalidBridge(format!(
            "infeasible half_height {half_height} or endpoint {y}"
        )));
    }
    if y < half_height || y - half_height > half {
        return Err(PathsError::InvalidBridge(format!(
            "endpoint {y} unreachable from half height {half_height}"
        )));
    }
    let rises = y - half_height;
    let ln_num =
        ln_choose(half, rises) + rises as f64 * p.ln() + (half - rises) as f64 * (1.0 - p).ln();
    let ln_den = ln_choose(n, y) + y as f64 * p.ln() + (n - y) as f64 * (1.0 - p).ln();
    Ok((ln_num - ln_den).exp())
}

/// Sup of the replacement ratio over endpoints with slope in
/// [slope_lo, slope_hi] and all feasible half heights.
pub fn bridge_replace_max_ratio(n: u64, slope_lo: f64, slope_hi: f64) -> f64 {
    let y_min = (slope_lo * n as f64).ceil() as u64;
    let y_max = (slope_hi * n as f64).floor() as u64;
    let half = n / 2;
    let mut max = 0.0f64;
    for y in y_min..=y_max {
        let p = y as f64 / n as f64;
        let h_lo = y.saturating_sub(half);
        let h_hi = half.min(y);
        for h in h_lo..=h_hi {
            let r = bridge_replace_ratio(n, p, h, y).expect("feasible by construction");
            if r > max {
                max = r;
            }
        }
    }
    max
}

/// Exact local-CLT deviation of the binomial pmf.
#[derive(Debug, Clone, Copy)]
pub struct PlatonovDeviation {
    /// max_k | sqrt(npq) f(k) - phi((k - np)/sqrt(npq)) |
    pub deviation: f64,
    /// deviation * sqrt(npq): the empirical constant of the bound
    pub scaled: f64,
}

pub fn platonov_deviation(n: u64, p: f64) -> PlatonovDeviation {
    assert!(n >= 1 && p > 0.0 && p < 1.0);
    let s = (n as f64 * p * (1.0 - p)).sqrt();
    let lnp = p.ln();
    let lnq = (1.0 - p).ln();
    let mut max = 0.0f64;
    for k in 0..=n {
        let pmf = (ln_choose(n, k) + k as f64 * lnp + (n - k) as f64 * lnq).exp();
        let z = (k as f64 - n as f64 * p) / s;
        let dev = (s * pmf - normal_pdf(z)).abs();
        if dev > max {
            max = dev;
        }
    }
    PlatonovDeviation {
        deviation: max,
        scaled: max * s,
    }
}

/// Moment estimate of the pairwise bridge local time.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub order: u32,
    pub estimate: f64,
    pub stderr: f64,
    /// estimate^(1/order) / sqrt(n)
    pub normalized: f64,
}

/// Monte Carlo local-time statistics for a pair of independent bridges.
#[derive(Debug, Clone)]
pub struct LocalTimeStats {
    pub n: u64,
    pub p1: f64,
    pub p2: f64,
    pub trials: u64,
    pub moments: Vec<MomentEstimate>,
    /// E (1 + mgf_a / n^(1/2 + mgf_delta))^(6 L)
    pub mgf_statistic: f64,
    pub mgf_stderr: f64,
    pub mgf_a: f64,
    pub mgf_delta: f64,
}

impl LocalTimeStats {
    /// CSV rows `n,p1,p2,m,estimate,stderr,normalized`.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for m in &self.moments {
            out.push_str(&format!(
                "{},{},{},{},{:.8e},{:.3e},{:.6}\n",
                self.n, self.p1, self.p2, m.order, m.estimate, m.stderr, m.normalized
            ));
        }
        out
    }
}

/// Samples pairs of bridges on [0, n] with endpoints round(p_i n) and
/// estimates E L^m for each m plus the geometric-domination MGF statistic.
pub fn bridge_local_time_stats(
    n: u64,
    slopes: (f64, f64),
    m_list: &[u32],
    trials: u64,
    mgf_a: f64,
    mgf_delta: f64,
    rng: &mut SplitMix64,
) -> Result<LocalTimeStats, PathsError> {
    let spec1 = endpoint_spec(n, slopes.0)?;
    let spec2 = endpoint_spec(n, slopes.1)?;
    let base = 1.0 + mgf_a / (n as f64).powf(0.5 + mgf_delta);
    let mut sums = vec![0.0f64; m_list.len()];
    let mut sums2 = vec![0.0f64; m_list.len()];
    let mut mgf_sum = 0.0f64;
    let mut mgf_sum2 = 0.0f64;
    for _ in 0..trials {
        let b1 = sample_bridge(&spec1, rng);
        let b2 = sample_bridge(&spec2, rng);
        let l = local_time(&b1, &b2, None)? as f64;
        for (j, &m) in m_list.iter().enumerate() {
            let v = l.powi(m as i32);
            sums[j] += v;
            sums2[j] += v * v;
        }
        let g = base.powf(6.0 * l);
        mgf_sum += g;
        mgf_sum2 += g * g;
    }
    let t = trials as f64;
    let moments = m_list
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let est = sums[j] / t;
            let var = (sums2[j] / t - est * est).max(0.0);
            MomentEstimate {
                order: m,
                estimate: est,
                stderr: (var / t).sqrt(),
                normalized: est.powf(1.0 / m as f64) / (n as f64).sqrt(),
            }
        })
        .collect();
    let mgf_est = mgf_sum / t;
    let mgf_var = (mgf_sum2 / t - mgf_est * mgf_est).max(0.0);
    Ok(LocalTimeStats {
        n,
        p1: slopes.0,
        p2: slopes.1,
        trials,
        moments,
        mgf_statistic: mgf_est,
        mgf_stderr: (mgf_var / t).sqrt(),
        mgf_a,
        mgf_delta,
    })
}

/// First and second moment of the triple coincidence count for three
/// independent bridges.
#[derive(Debug, Clone, Copy)]
pub struct TripleLocalTimeStats {
    pub n: u64,
    pub e_l3: f64,
    pub e_l3_stderr: f64,
    pub e_l3_sq: f64,
    pub e_l3_sq_stderr: f64,
    pub trials: u64,
}

pub fn triple_local_time_stats(
    n: u64,
    slopes: (f64, f64, f64),
    trials: u64,
    rng: &mut SplitMix64,
) -> Result<TripleLocalTimeStats, PathsError> {
    let specs = [
        endpoint_spec(n, slopes.0)?,
        endpoint_spec(n, slopes.1)?,
        endpoint_spec(n, slopes.2)?,
    ];
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    let mut s4 = 0.0f64;
    for _ in 0..trials {
        let b1 = sample_bridge(&specs[0], rng);
        let b2 = sample_bridge(&specs[1], rng);
        let b3 = sample_bridge(&specs[2], rng);
        let l3 = triple_local_time(&b1, &b2, &b3)? as f64;
        s1 += l3;
        s2 += l3 * l3;
        s4 += l3.powi(4);
    }
    let t = trials as f64;
    let m1 = s1 / t;
    let m2 = s2 / t;
    Ok(TripleLocalTimeStats {
        n,
        e_l3: m1,
        e_l3_stderr: ((m2 - m1 * m1).max(0.0) / t).sqrt(),
        e_l3_sq: m2,
        e_l3_sq_stderr: ((s4 / t - m2 * m2).max(0.0) / t).sqrt(),
        trials,
    })
}

fn endpoint_spec(n: u64, slope: f64) -> Result<BridgeSpec, PathsError> {
    if !(0.0..=1.0).contains(&slope) {
        return Err(PathsError::InvalidBridge(format!(
            "slope {slope} outside [0,1]"
        )));
    }
    let y = (slope * n as f64).round() as i64;
    BridgeSpec::new(0, n as i64, 0, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{enumerate_paths, LatticePath};
    use crate::rng::mix2;

    fn rng(tag: u64) -> SplitMix64 {
        SplitMix64::new(mix2(0x4c45_4d4d, tag))
    }

    #[test]
    fn meeting_tail_trivial_and_one_step() {
        let mut r = rng(1);
        // P(T >= 1) = 1 by definition
        let t1 = first_meeting_tail(0.5, 0.5, 1, 1000, &mut r);
        assert_eq!(t1.estimate, 1.0);
        // p1 = p2 = 1/2: P(T >= 2) = P(first steps differ) = 1/2
        let t2 = first_meeting_tail(0.5, 0.5, 2, 100_000, &mut r);
        assert!(
            (t2.estimate - 0.5).abs() < 5.0 * t2.stderr,
            "{}",
            t2.estimate
        );
    }

    #[test]
    fn meeting_tail_scaled_statistic_bounded_below() {
        // sqrt(n) P(T >= n) / (p1(1-p2) + (1-p1)p2) stays above a constant
        let mut r = rng(2);
        for &n in &[64u64, 256, 1024] {
            let tail = first_meeting_tail(0.5, 0.5, n, 40_000, &mut r);
            let q = 0.5;
            let stat = (n as f64).sqrt() * tail.estimate / q;
            assert!(stat > 0.5, "n={n}: stat = {stat}");
        }
    }

    #[test]
    fn dominator_counts_at_least_windowed_local_time() {
        // L(w1, w2; [0, gap]) <= G pathwise, streams replayed from seeds
        let mut r = rng(3);
        let gap = 32u64;
        for _ in 0..10_000 {
            let seed1 = r.next_u64();
            let seed2 = r.next_u64();
            let mut s1 = WalkStream::new(0.5, 0, seed1);
            let mut s2 = WalkStream::new(0.5, 0, seed2);
            let g = geometric_dominator(&mut s1, &mut s2, gap, 10_000_000).unwrap();

            let replay = |seed: u64| {
                let mut w = WalkStream::new(0.5, 0, seed);
                let mut steps = Vec::with_capacity(gap as usize);
                let mut prev = w.height();
                for _ in 0..gap {
                    let h = w.step();
                    steps.push((h - prev) as u8);
                    prev = h;
                }
                LatticePath::new(0, 0, steps)
            };
            let l = local_time(&replay(seed1), &replay(seed2), None).unwrap();
            assert!(l <= g, "L = {l} > G = {g}");
        }
    }

    #[test]
    fn dominator_zero_when_walks_never_meet() {
        // started apart and drifting apart: no meeting in the first gap steps
        let mut s1 = WalkStream::new(1.0, 1, 7);
        let mut s2 = WalkStream::new(0.0, 0, 8);
        assert_eq!(geometric_dominator(&mut s1, &mut s2, 16, 1000).unwrap(), 0);
    }

    #[test]
    fn dominator_caps_on_coupled_streams() {
        // identical seeds: the walks coincide forever and the cap trips
        let mut s1 = WalkStream::new(0.5, 0, 42);
        let mut s2 = WalkStream::new(0.5, 0, 42);
        assert!(matches!(
            geometric_dominator(&mut s1, &mut s2, 8, 50_000),
            Err(PathsError::IterationCap(_))
        ));
    }

    #[test]
    fn replace_ratio_reference_configuration() {
        // n=200, p=1/2, half height 50, endpoint 100
        let r = bridge_replace_ratio(200, 0.5, 50, 100).unwrap();
        assert!(r <= 2.0, "ratio = {r}");
        // central half height: ratio approaches sqrt(2)
        let central = bridge_replace_ratio(200, 0.5, 50, 100).unwrap();
        assert!((central - 1.42).abs() < 0.05, "central ratio = {central}");
    }

    #[test]
    fn replace_ratio_sup_at_n200_below_two() {
        let max = bridge_replace_max_ratio(200, 0.25, 0.75);
        assert!(max <= 2.0, "sup ratio = {max}");
        assert!(max > 1.3, "sup ratio suspiciously small: {max}");
    }

    #[test]
    fn replace_ratio_scan_reports_threshold() {
        // sup ratio per even n: find the empirical n* beyond which <= 2
        let mut worst_small = 0.0f64;
        let mut last = 0.0f64;
        for &n in &[8u64, 16, 32, 64, 128, 256, 512] {
            let m = bridge_replace_max_ratio(n, 0.25, 0.75);
            if n == 8 {
                worst_small = m;
            }
            last = m;
            assert!(m <= 2.0, "n={n}: sup = {m}");
        }
        // trend toward the sqrt(2)-level plateau
        assert!(last <= worst_small + 0.05);
    }

    #[test]
    fn replace_ratio_rejects_bad_input() {
        assert!(bridge_replace_ratio(7, 0.5, 1, 3).is_err());
        assert!(bridge_replace_ratio(8, 0.0, 1, 3).is_err());
        assert!(bridge_replace_ratio(8, 0.5, 5, 3).is_err());
        assert!(bridge_replace_ratio(8, 0.5, 0, 7).is_err());
    }

    #[test]
    fn platonov_two_point_case() {
        // n=1, p=1/2: deviation = |1/4 - phi(-1)| (two-point enumeration)
        let d = platonov_deviation(1, 0.5);
        let exact = (0.25 - normal_pdf(-1.0)).abs();
        assert!((d.deviation - exact).abs() < 1e-15);
        assert!((d.deviation - 0.008_029_3).abs() < 1e-6);
    }

    #[test]
    fn platonov_constant_bounded_and_vanishing() {
        let mut prev = f64::INFINITY;
        for &n in &[100u64, 1000, 10_000] {
            let d = platonov_deviation(n, 0.5);
            assert!(d.scaled < 0.1, "n={n}: C = {}", d.scaled);
            // deviation itself decreases roughly like 1/sqrt(n)
            assert!(d.deviation < prev);
            prev = d.deviation;
        }
        // log-log slope of deviation vs n near -1/2 at asymmetric p; at
        // exactly p = 1/2 the skew term cancels and the decay steepens to 1/n
        let slope = |p: f64| {
            let d1 = platonov_deviation(100, p).deviation;
            let d2 = platonov_deviation(10_000, p).deviation;
            (d2.ln() - d1.ln()) / (10_000f64.ln() - 100f64.ln())
        };
        assert!((slope(0.25) + 0.5).abs() < 0.1, "slope = {}", slope(0.25));
        assert!((slope(0.45) + 0.5).abs() < 0.1, "slope = {}", slope(0.45));
        assert!(slope(0.5) < -0.9, "symmetric slope = {}", slope(0.5));
    }

    #[test]
    fn local_time_stats_match_enumeration_at_n4() {
        // n=4, both bridges 0 -> 2: E L over the 6x6 pairs exactly
        let spec = BridgeSpec::new(0, 4, 0, 2).unwrap();
        let paths: Vec<LatticePath> = enumerate_paths(&spec).unwrap().collect();
        let mut total = 0u64;
        for p in &paths {
            for q in &paths {
                total += local_time(p, q, None).unwrap();
            }
        }
        let exact = total as f64 / 36.0;
        let mut r = rng(4);
        let stats =
            bridge_local_time_stats(4, (0.5, 0.5), &[1], 200_000, 1.0, 0.1, &mut r).unwrap();
        let est = &stats.moments[0];
        assert!(
            (est.estimate - exact).abs() < 4.0 * est.stderr,
            "MC {} vs exact {exact}",
            est.estimate
        );
    }

    #[test]
    fn triple_stats_match_enumeration_at_n2() {
        let mut r = rng(5);
        let stats = triple_local_time_stats(2, (0.5, 0.5, 0.5), 200_000, &mut r).unwrap();
        // bridges 0 -> 1 on [0,2]: exact E L3 = 1.25, E L3^2 from enumeration
        let spec = BridgeSpec::new(0, 2, 0, 1).unwrap();
        let paths: Vec<LatticePath> = enumerate_paths(&spec).unwrap().collect();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for p in &paths {
            for q in &paths {
                for s in &paths {
                    let l = triple_local_time(p, q, s).unwrap() as f64;
                    sum += l;
                    sum_sq += l * l;
                }
            }
        }
        let exact_mean = sum / 8.0;
        let exact_sq = sum_sq / 8.0;
        assert_eq!(exact_mean, 1.25);
        assert!((stats.e_l3 - exact_mean).abs() < 4.0 * stats.e_l3_stderr);
        assert!((stats.e_l3_sq - exact_sq).abs() < 4.0 * stats.e_l3_sq_stderr);
    }

    #[test]
    fn normalized_moments_nondecreasing_in_order() {
        // Jensen: E[L^m]^(1/m) nondecreasing in m (within Monte Carlo error)
        let mut r = rng(6);
        let stats =
            bridge_local_time_stats(256, (0.5, 0.5), &[1, 2, 4], 20_000, 1.0, 0.1, &mut r).unwrap();
        let norms: Vec<f64> = stats.moments.iter().map(|m| m.normalized).collect();
        assert!(
            norms[0] <= norms[1] * 1.02 && norms[1] <= norms[2] * 1.02,
            "{norms:?}"
        );
        let rows = stats.csv_rows();
        assert_eq!(rows.lines().count(), 3);
        assert!(rows.starts_with("256,0.5,0.5,1,"));
    }
}
