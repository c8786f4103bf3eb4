//! Streaming aggregation: single-pass compensated mean/variance and the
//! empirical CDF.

use crate::engine::EngineError;

/// Welford accumulator with Neumaier compensation on the mean update;
/// mergeable, so chunk aggregates combine in deterministic index order.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aggregate {
    count: u64,
    mean: f64,
    comp: f64,
    m2: f64,
}

impl Aggregate {
    pub fn new() -> Aggregate {
        Aggregate::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - (self.mean + self.comp);
        let step = delta / self.count as f64;
        // compensated mean += step
        let t = self.mean + step;
        self.comp += if self.mean.abs() >= step.abs() {
            (self.mean - t) + step
        } else {
            (step - t) + self.mean
        };
        self.mean = t;
        let delta2 = x - (self.mean + self.comp);
        self.m2 += delta * delta2;
    }

    pub fn from_slice(xs: &[f64]) -> Aggregate {
        let mut a = Aggregate::new();
        for &x in xs {
            a.push(x);
        }
        a
    }

    /// Chan's combination; the merge order is fixed by the caller.
    pub fn merge(self, other: Aggregate) -> Aggregate {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let d = other.value_mean() - self.value_mean();
        Aggregate {
            count: self.count + other.count,
            mean: self.value_mean() + d * n2 / n,
            comp: 0.0,
            m2: self.m2 + other.m2 + d * d * n1 * n2 / n,
        }
    }

    fn value_mean(&self) -> f64 {
        self.mean + self.comp
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.value_mean()
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Result<f64, EngineError> {
        if self.count < 2 {
            return Err(EngineError::InsufficientData(self.count));
        }
        Ok((self.m2 / (self.count as f64 - 1.0)).max(0.0))
    }

    pub fn stderr(&self) -> Result<f64, EngineError> {
        Ok((self.variance()? / self.count as f64).sqrt())
    }
}

/// Sorted-sample empirical CDF.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<EmpiricalCdf, EngineError> {
        if samples.is_empty() {
            return Err(EngineError::InsufficientData(0));
        }
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Ok(EmpiricalCdf { sorted: samples })
    }

    /// Fraction of samples <= x.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}
