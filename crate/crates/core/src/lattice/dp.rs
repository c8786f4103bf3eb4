//! Log-domain transfer-matrix sweeps over the reachable rhombus
//! {(i, j) : 0 <= i <= 2n, max(0, i-n) <= j <= min(i, n)}.
//!
//! Columns are renormalized by their maximum with the log of the scale
//! accumulated separately, so no per-cell exp/log is taken and the sweep
//! stays in the product domain.

use crate::lattice::{DisorderField, LatticeError};
use crate::paths::{enumerate_paths, BridgeSpec, LatticePath};
use crate::rng::SplitMix64;

#[inline]
fn height_range(n: u64, i: u64) -> (i64, i64) {
    let n = n as i64;
    let i = i as i64;
    (0.max(i - n), i.min(n))
}

/// log Z for an arbitrary site-weight function, by rolling column sweep.
pub fn log_partition_with(n: u64, weight: &dyn Fn(u64, i64) -> f64) -> f64 {
    let mut prev = vec![weight(0, 0)];
    let mut log_scale = rescale(&mut prev);
    for i in 1..=2 * n {
        let (lo, hi) = height_range(n, i);
        let (plo, phi) = height_range(n, i - 1);
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
    debug_assert_eq!(prev.len(), 1);
    log_scale + prev[0].ln()
}

fn rescale(col: &mut [f64]) -> f64 {
    let max = col.iter().cloned().fold(f64::MIN, f64::max);
    debug_assert!(max > 0.0 && max.is_finite(), "column max {max}");
    let inv = 1.0 / max;
    for v in col.iter_mut() {
        *v *= inv;
    }
    max.ln()
}

impl DisorderField {
    /// log Z over all paths 0 -> (2n, n), deterministic given the field.
    pub fn log_partition(&self) -> f64 {
        log_partition_with(self.n(), &|i, j| self.weight_at(i, j))
    }

    /// Brute-force oracle: sums the path products over all C(2n, n) paths
    /// explicitly in log-sum-exp. Guarded to 2n <= 20.
    pub fn enumerate_partition(&self) -> Result<f64, LatticeError> {
        enumerate_partition_with(self.n(), &|i, j| self.weight_at(i, j))
    }

    /// Full forward/backward tables for through-site quantities and exact
    /// path sampling.
    pub fn tables(&self) -> PartitionTables {
        PartitionTables::build(self.n(), &|i, j| self.weight_at(i, j))
    }
}

/// Brute-force log Z for an arbitrary weight function (2n <= 20).
pub fn enumerate_partition_with(
    n: u64,
    weight: &dyn Fn(u64, i64) -> f64,
) -> Result<f64, LatticeError> {
    if 2 * n > 20 {
        return Err(LatticeError::TooLarge(2 * n));
    }
    let spec = BridgeSpec::new(0, 2 * n as i64, 0, n as i64).expect("valid bridge");
    let mut log_terms = Vec::new();
    for path in enumerate_paths(&spec).expect("within guard") {
        let mut acc = 0.0;
        for (i, h) in path.heights().into_iter().enumerate() {
            acc += weight(i as u64, h).ln();
        }
        log_terms.push(acc);
    }
    let max = log_terms.iter().cloned().fold(f64::MIN, f64::max);
    let sum: f64 = log_terms.iter().map(|&t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

struct Columns {
    /// per-column renormalized values, indexed [i][j - lo_i]
    vals: Vec<Vec<f64>>,
    /// cumulative log scale per column
    cum_log: Vec<f64>,
}

/// Forward and backward partition tables over the full rhombus.
///
/// forward(i, j) sums path products over [0, i] ending at (i, j); backward
/// sums over [i, 2n] starting at (i, j). Both include the weight at (i, j).
pub struct PartitionTables {
    n: u64,
    weights: Vec<Vec<f64>>,
    forward: Columns,
    backward: Columns,
}

impl PartitionTables {
    pub fn build(n: u64, weight: &dyn Fn(u64, i64) -> f64) -> PartitionTables {
        let cols = (2 * n + 1) as usize;
        let mut weights = Vec::with_capacity(cols);
        for i in 0..=2 * n {
            let (lo, hi) = height_range(n, i);
            weights.push((lo..=hi).map(|j| weight(i, j)).collect::<Vec<f64>>());
        }

        let mut fvals = Vec::with_capacity(cols);
        let mut fcum = Vec::with_capacity(cols);
        let mut prev = weights[0].clone();
        let mut cum = rescale(&mut prev);
        fvals.push(prev.clone());
        fcum.push(cum);
        for i in 1..=2 * n {
            let (lo, hi) = height_range(n, i);
            let (plo, phi) = height_range(n, i - 1);
            let w = &weights[i as usize];
            let mut cur = Vec::with_capacity((hi - lo + 1) as usize);
            for j in lo..=hi {
                let mut s = 0.0;
                if (plo..=phi).contains(&j) {
                    s += prev[(j - plo) as usize];
                }
                if (plo..=phi).contains(&(j - 1)) {
                    s += prev[(j - 1 - plo) as usize];
                }
                cur.push(w[(j - lo) as usize] * s);
            }
            cum += rescale(&mut cur);
            fvals.push(cur.clone());
            fcum.push(cum);
            prev = cur;
        }

        let mut bvals = vec![Vec::new(); cols];
        let mut bcum = vec![0.0; cols];
        let mut next = weights[cols - 1].clone();
        let mut cumb = rescale(&mut next);
        bvals[cols - 1] = next.clone();
        bcum[cols - 1] = cumb;
        for i in (0..2 * n).rev() {
            let (lo, hi) = height_range(n, i);
            let (nlo, nhi) = height_range(n, i + 1);
            let w = &weights[i as usize];
            let mut cur = Vec::with_capacity((hi - lo + 1) as usize);
            for j in lo..=hi {
                let mut s = 0.0;
                if (nlo..=nhi).contains(&j) {
                    s += next[(j - nlo) as usize];
                }
                if (nlo..=nhi).contains(&(j + 1)) {
                    s += next[(j + 1 - nlo) as usize];
                }
                cur.push(w[(j - lo) as usize] * s);
            }
            cumb += rescale(&mut cur);
            bvals[i as usize] = cur.clone();
            bcum[i as usize] = cumb;
            next = cur;
        }

        PartitionTables {
            n,
            weights,
            forward: Columns {
                vals: fvals,
                cum_log: fcum,
            },
            backward: Columns {
                vals: bvals,
                cum_log: bcum,
            },
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    fn index(&self, i: u64, j: i64) -> Option<usize> {
        if i > 2 * self.n {
            return None;
        }
        let (lo, hi) = height_range(self.n, i);
        ((lo..=hi).contains(&j)).then(|| (j - lo) as usize)
    }

    /// log Z from the forward sweep.
    pub fn log_z(&self) -> f64 {
        let last = self.forward.vals.last().expect("nonempty");
        self.forward.cum_log.last().expect("nonempty") + last[0].ln()
    }

    /// log Z from the backward sweep (cross-check route).
    pub fn log_z_backward(&self) -> f64 {
        self.backward.cum_log[0] + self.backward.vals[0][0].ln()
    }

    pub fn log_forward(&self, i: u64, j: i64) -> Option<f64> {
        let idx = self.index(i, j)?;
        Some(self.forward.cum_log[i as usize] + self.forward.vals[i as usize][idx].ln())
    }

    pub fn log_backward(&self, i: u64, j: i64) -> Option<f64> {
        let idx = self.index(i, j)?;
        Some(self.backward.cum_log[i as usize] + self.backward.vals[i as usize][idx].ln())
    }

    /// log of w(i,j) W_n(i,j): the partition restricted to paths through
    /// (i, j), with the site weight included once.
    pub fn log_through(&self, i: u64, j: i64) -> Result<f64, LatticeError> {
        let idx = self
            .index(i, j)
            .ok_or(LatticeError::UnreachableSite(i, j))?;
        let f = self.log_forward(i, j).expect("checked");
        let b = self.log_backward(i, j).expect("checked");
        Ok(f + b - self.weights[i as usize][idx].ln())
    }

    /// log V_n(i, j) = log(Z - w W), the paths avoiding (i, j).
    pub fn log_avoiding(&self, i: u64, j: i64) -> Result<f64, LatticeError> {
        let lt = self.log_through(i, j)?;
        let lz = self.log_z();
        let gap = lt - lz;
        if gap >= 0.0 {
            return Err(LatticeError::Invalid(format!(
                "all mass passes ({i}, {j}); V = 0"
            )));
        }
        Ok(lz + (-gap.exp()).ln_1p())
    }

    /// Exact backward sample from the polymer measure.
    pub fn sample_path(&self, rng: &mut SplitMix64) -> LatticePath {
        let n = self.n;
        let mut steps = vec![0u8; (2 * n) as usize];
        let mut j = n as i64;
        for i in (1..=2 * n).rev() {
            let (plo, phi) = height_range(n, i - 1);
            let col = &self.forward.vals[(i - 1) as usize];
            let flat = if (plo..=phi).contains(&j) {
                col[(j - plo) as usize]
            } else {
                0.0
            };
            let up = if (plo..=phi).contains(&(j - 1)) {
                col[(j - 1 - plo) as usize]
            } else {
                0.0
            };
            let total = flat + up;
            debug_assert!(total > 0.0);
            if rng.next_f64() * total < up {
                steps[(i - 1) as usize] = 1;
                j -= 1;
            }
        }
        debug_assert_eq!(j, 0);
        LatticePath::new(0, 0, steps)
    }
}

impl PartitionTables {
    /// Renormalized forward column i with its cumulative log scale.
    pub(crate) fn forward_column(&self, i: u64) -> (&[f64], f64) {
        (
            &self.forward.vals[i as usize],
            self.forward.cum_log[i as usize],
        )
    }

    /// Renormalized backward column i with its cumulative log scale.
    pub(crate) fn backward_column(&self, i: u64) -> (&[f64], f64) {
        (
            &self.backward.vals[i as usize],
            self.backward.cum_log[i as usize],
        )
    }
}

/// Draws independent paths from the quenched polymer measure of the field.
pub fn sample_polymer_path(
    field: &DisorderField,
    count: usize,
    rng: &mut SplitMix64,
) -> Vec<LatticePath> {
    let tables = field.tables();
    (0..count).map(|_| tables.sample_path(rng)).collect()
}
