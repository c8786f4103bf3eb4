//! Strip decomposition: the partition function with a strip of columns
//! switched to unit weights, and the quenched endpoint measure mu it induces
//! on in-strip path segments.

use crate::dist::special::ln_choose;
use crate::lattice::dp::PartitionTables;
use crate::lattice::{DisorderField, LatticeError};
use crate::rng::SplitMix64;

/// Columns [a, b] of the lattice; weights at both ends belong to the strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripSpec {
    pub a: u64,
    pub b: u64,
}

impl StripSpec {
    pub fn new(a: u64, b: u64, two_n: u64) -> Result<StripSpec, LatticeError> {
        if a >= b || b > two_n {
            return Err(LatticeError::InvalidStrip(format!(
                "[{a}, {b}] does not fit in [0, {two_n}]"
            )));
        }
        if b - a < 2 {
            return Err(LatticeError::InvalidStrip(format!(
                "strip length {} below 2",
                b - a
            )));
        }
        Ok(StripSpec { a, b })
    }

    /// Default strip of length round(beta^(-4/(1+4 delta))) starting at `a`.
    pub fn for_beta(a: u64, beta: f64, delta: f64, two_n: u64) -> Result<StripSpec, LatticeError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(LatticeError::InvalidStrip(format!(
                "beta {beta} outside (0, 1)"
            )));
        }
        let n0 = beta.powf(-4.0 / (1.0 + 4.0 * delta)).round() as u64;
        StripSpec::new(a, a + n0, two_n)
    }

    pub fn n0(&self) -> u64 {
        self.b - self.a
    }

    /// delta implied by n0 = beta^(-4/(1+4 delta)), when defined.
    pub fn implied_delta(&self, beta: f64) -> Option<f64> {
        if !(beta > 0.0 && beta < 1.0) || self.n0() < 2 {
            return None;
        }
        let d = ((4.0 * (1.0 / beta).ln() / (self.n0() as f64).ln()) - 1.0) / 4.0;
        (d >= 0.0).then_some(d)
    }

    pub fn contains(&self, i: u64) -> bool {
        (self.a..=self.b).contains(&i)
    }
}

impl DisorderField {
    /// (log Zcal, log Zmu): Zcal is the partition function with in-strip
    /// weights replaced by 1, and Zmu = Z / Zcal.
    pub fn strip_partition(&self, strip: &StripSpec) -> Result<(f64, f64), LatticeError> {
        self.check_strip(strip)?;
        let log_zcal = crate::lattice::dp::log_partition_with(self.n(), &|i, j| {
            if strip.contains(i) {
                1.0
            } else {
                self.weight_at(i, j)
            }
        });
        let log_z = self.log_partition();
        Ok((log_zcal, log_z - log_zcal))
    }

    /// Tables of the strip-unit system (used for both Zcal and mu).
    pub(crate) fn strip_tables(&self, strip: &StripSpec) -> PartitionTables {
        PartitionTables::build(self.n(), &|i, j| {
            if strip.contains(i) {
                1.0
            } else {
                self.weight_at(i, j)
            }
        })
    }

    fn check_strip(&self, strip: &StripSpec) -> Result<(), LatticeError> {
        if strip.b > 2 * self.n() {
            return Err(LatticeError::InvalidStrip(format!(
                "strip [{}, {}] outside [0, {}]",
                strip.a,
                strip.b,
                2 * self.n()
            )));
        }
        Ok(())
    }

    /// Exact quenched law of the strip endpoints (pi(a), pi(b)) under mu.
    pub fn mu_endpoint_distribution(&self, strip: &StripSpec) -> Result<MuEndpoints, LatticeError> {
        self.check_strip(strip)?;
        let tables = self.strip_tables(strip);
        MuEndpoints::from_tables(self, strip, &tables)
    }

    /// mu mass of endpoint pairs whose strip slope lies outside [1/4, 3/4].
    pub fn mu_bad_slope_mass(&self, strip: &StripSpec) -> Result<f64, LatticeError> {
        Ok(self
            .mu_endpoint_distribution(strip)?
            .bad_slope_mass(0.25, 0.75))
    }
}

/// Joint law of (pi(a), pi(b)) under the strip measure mu.
#[derive(Debug, Clone)]
pub struct MuEndpoints {
    pub a: u64,
    pub b: u64,
    x_lo: i64,
    y_lo: i64,
    /// probs[x - x_lo][y - y_lo]
    probs: Vec<Vec<f64>>,
    /// flattened cumulative over (x, y) pairs, for sampling
    cum: Vec<f64>,
    pairs: Vec<(i64, i64)>,
}

impl MuEndpoints {
    pub(crate) fn from_tables(
        field: &DisorderField,
        strip: &StripSpec,
        tables: &PartitionTables,
    ) -> Result<MuEndpoints, LatticeError> {
        let (x_lo, x_hi) = field.height_range(strip.a);
        let (y_lo, y_hi) = field.height_range(strip.b);
        let n0 = strip.n0();
        let log_zcal = tables.log_z();

        let mut probs = vec![vec![0.0f64; (y_hi - y_lo + 1) as usize]; (x_hi - x_lo + 1) as usize];
        let mut pairs = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0f64;
        for x in x_lo..=x_hi {
            let lf = tables.log_forward(strip.a, x).expect("in range");
            for y in y_lo..=y_hi {
                if y < x || y - x > n0 as i64 {
                    continue;
                }
                let lb = tables.log_backward(strip.b, y).expect("in range");
                let p = (lf + ln_choose(n0, (y - x) as u64) + lb - log_zcal).exp();
                probs[(x - x_lo) as usize][(y - y_lo) as usize] = p;
                if p > 0.0 {
                    acc += p;
                    pairs.push((x, y));
                    cum.push(acc);
                }
            }
        }
        Ok(MuEndpoints {
            a: strip.a,
            b: strip.b,
            x_lo,
            y_lo,
            probs,
            cum,
            pairs,
        })
    }

    pub fn prob(&self, x: i64, y: i64) -> f64 {
        let xi = x - self.x_lo;
        let yi = y - self.y_lo;
        if xi < 0 || yi < 0 {
            return 0.0;
        }
        self.probs
            .get(xi as usize)
            .and_then(|row| row.get(yi as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total mass; 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    pub fn start_marginal(&self) -> Vec<(i64, f64)> {
        self.probs
            .iter()
            .enumerate()
            .map(|(xi, row)| (self.x_lo + xi as i64, row.iter().sum()))
            .collect()
    }

    pub fn end_marginal(&self) -> Vec<(i64, f64)> {
        let cols = self.probs.first().map_or(0, Vec::len);
        (0..cols)
            .map(|yi| {
                (
                    self.y_lo + yi as i64,
                    self.probs.iter().map(|row| row[yi]).sum(),
                )
            })
            .collect()
    }

    /// Mass of endpoint pairs with (y - x)/n0 outside [slope_lo, slope_hi].
    pub fn bad_slope_mass(&self, slope_lo: f64, slope_hi: f64) -> f64 {
        let n0 = (self.b - self.a) as f64;
        let mut mass = 0.0;
        for (xi, row) in self.probs.iter().enumerate() {
            let x = self.x_lo + xi as i64;
            for (yi, &p) in row.iter().enumerate() {
                let y = self.y_lo + yi as i64;
                let slope = (y - x) as f64 / n0;
                if !(slope_lo..=slope_hi).contains(&slope) {
                    mass += p;
                }
            }
        }
        mass
    }

    /// Draws an endpoint pair from mu.
    pub fn sample(&self, rng: &mut SplitMix64) -> (i64, i64) {
        let total = *self.cum.last().expect("nonempty distribution");
        let u = rng.next_f64() * total;
        let idx = self.cum.partition_point(|&c| c < u);
        self.pairs[idx.min(self.pairs.len() - 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::binomial;
    use crate::rng::mix2;
    use crate::weights::{BaseNoise, PolymerParams, WeightFamily};

    fn rng(tag: u64) -> SplitMix64 {
        SplitMix64::new(mix2(0x5354_5250, tag))
    }

    fn unit_field(n: u64) -> DisorderField {
        DisorderField::with_beta(
            n,
            0.0,
            WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0)),
            0,
        )
    }

    #[test]
    fn strip_spec_validation() {
        assert!(StripSpec::new(0, 8, 16).is_ok());
        assert!(StripSpec::new(8, 8, 16).is_err());
        assert!(StripSpec::new(0, 17, 16).is_err());
        assert!(StripSpec::new(4, 5, 16).is_err());
        let params = PolymerParams::new(64, 0.22).unwrap();
        let s = StripSpec::for_beta(0, params.beta, 0.01, 128).unwrap();
        // n0 ~ beta^{-4/1.04} = n^{4 alpha/1.04}
        let expect = params.beta.powf(-4.0 / 1.04).round() as u64;
        assert_eq!(s.n0(), expect);
        let d = s.implied_delta(params.beta).unwrap();
        assert!((d - 0.01).abs() < 0.05, "implied delta {d}");
        // a strip wider than the lattice is rejected
        assert!(StripSpec::for_beta(0, params.beta, 0.01, 16).is_err());
    }

    #[test]
    fn unit_weights_give_zmu_exactly_one() {
        for n in [2u64, 5, 10] {
            let f = unit_field(n);
            let strip = StripSpec::new(n / 2, n / 2 + 2, 2 * n).unwrap();
            let (_, log_zmu) = f.strip_partition(&strip).unwrap();
            assert_eq!(log_zmu, 0.0, "n={n}");
        }
    }

    #[test]
    fn full_strip_reduces_to_path_count() {
        // strip = [0, 2n]: Zcal = C(2n, n), Zmu = Z / C(2n, n)
        let params = PolymerParams::new(6, 0.3).unwrap();
        let f = DisorderField::new(&params, WeightFamily::log_gamma(12.0), 5);
        let strip = StripSpec::new(0, 12, 12).unwrap();
        let (log_zcal, log_zmu) = f.strip_partition(&strip).unwrap();
        let expect = (binomial(12, 6) as f64).ln();
        assert!((log_zcal - expect).abs() < 1e-12);
        assert!((log_zmu - (f.log_partition() - expect)).abs() < 1e-12);
    }

    #[test]
    fn zmu_is_mean_one_over_disorder() {
        // disorder-MC mean of Zmu at n=32, strip length 8: 1 +- 4 stderr
        let params = PolymerParams::new(32, 0.3).unwrap();
        let strip = StripSpec::new(28, 36, 64).unwrap();
        let trials = 4000u64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for t in 0..trials {
            let f = DisorderField::new(
                &params,
                WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0)),
                DisorderField::sample_seed(0xE52, t),
            );
            let (_, log_zmu) = f.strip_partition(&strip).unwrap();
            let z = log_zmu.exp();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / trials as f64;
        let se = ((sum2 / trials as f64 - mean * mean).max(0.0) / trials as f64).sqrt();
        assert!((mean - 1.0).abs() <= 4.0 * se, "mean {mean} +- {se}");
    }

    #[test]
    fn unit_weight_endpoints_are_hypergeometric() {
        // mu(x, y) = C(a, x) C(n0, y-x) C(2n-b, n-y) / C(2n, n)
        let n = 32u64;
        let f = unit_field(n);
        let strip = StripSpec::new(24, 40, 64).unwrap();
        let mu = f.mu_endpoint_distribution(&strip).unwrap();
        assert!((mu.total() - 1.0).abs() < 1e-12);
        let denom = binomial(64, 32) as f64;
        for (x, px) in mu.start_marginal() {
            let expect =
                binomial(24, x as u64) as f64 * binomial(40, (32 - x) as u64) as f64 / denom;
            assert!((px - expect).abs() < 1e-12, "x={x}: {px} vs {expect}");
        }
        // a joint cell
        let p = mu.prob(12, 20);
        let expect =
            binomial(24, 12) as f64 * binomial(16, 8) as f64 * binomial(24, 12) as f64 / denom;
        assert!((p - expect).abs() < 1e-13);
    }

    #[test]
    fn pinned_strip_is_a_point_mass() {
        let params = PolymerParams::new(8, 0.3).unwrap();
        let f = DisorderField::new(&params, WeightFamily::log_gamma(10.0), 3);
        let strip = StripSpec::new(0, 16, 16).unwrap();
        let mu = f.mu_endpoint_distribution(&strip).unwrap();
        assert!((mu.prob(0, 8) - 1.0).abs() < 1e-12);
        assert!((mu.total() - 1.0).abs() < 1e-12);
        // slope 1/2 is good, so no bad mass
        assert_eq!(f.mu_bad_slope_mass(&strip).unwrap(), 0.0);
    }

    #[test]
    fn quenched_normalization_over_random_environments() {
        let params = PolymerParams::new(16, 0.3).unwrap();
        let strip = StripSpec::new(10, 20, 32).unwrap();
        for t in 0..50 {
            let f = DisorderField::new(
                &params,
                WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0)),
                DisorderField::sample_seed(0xABCD, t),
            );
            let mu = f.mu_endpoint_distribution(&strip).unwrap();
            assert!((mu.total() - 1.0).abs() < 1e-12, "trial {t}");
        }
    }

    #[test]
    fn bad_slope_mass_decreases_with_strip_length() {
        // unit weights, n = 32: exact scan over n0 in {8, 16, 24}
        let f = unit_field(32);
        let mut prev = f64::INFINITY;
        for n0 in [8u64, 16, 24] {
            let a = 32 - n0 / 2;
            let strip = StripSpec::new(a, a + n0, 64).unwrap();
            let mass = f.mu_bad_slope_mass(&strip).unwrap();
            assert!(mass < prev, "n0={n0}: {mass} !< {prev}");
            assert!(mass > 0.0);
            prev = mass;
        }
    }

    #[test]
    fn endpoint_sampling_matches_distribution() {
        let params = PolymerParams::new(16, 0.3).unwrap();
        let f = DisorderField::new(&params, WeightFamily::log_gamma(20.0), 9);
        let strip = StripSpec::new(12, 20, 32).unwrap();
        let mu = f.mu_endpoint_distribution(&strip).unwrap();
        let mut r = rng(1);
        let draws = 200_000u64;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts.entry(mu.sample(&mut r)).or_insert(0u64) += 1;
        }
        for (&(x, y), &c) in &counts {
            let p = mu.prob(x, y);
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!(
                ((c as f64) - draws as f64 * p).abs() <= 5.0 * sigma,
                "({x},{y}): {c} vs {}",
                draws as f64 * p
            );
        }
    }
}
