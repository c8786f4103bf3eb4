//! Bernoulli walks and bridges on the integer lattice, intersection local
//! times, and exact path enumeration for small instances.
//!
//! Site-counting convention: the local time of two or more paths on a window
//! [a, b] counts the times i in {a, ..., b} (both endpoints included) at
//! which the paths share a height. The triple count L3 instead runs over
//! k in {a+1, ..., b}, excluding the start.

pub mod lemmas;

use crate::rng::SplitMix64;
use rand::Rng;

pub use lemmas::{
    bridge_local_time_stats, bridge_replace_max_ratio, bridge_replace_ratio, first_meeting_tail,
    geometric_dominator, platonov_deviation, triple_local_time_stats, LocalTimeStats, MeetingTail,
    PlatonovDeviation, TripleLocalTimeStats, WalkStream,
};

#[derive(Debug, thiserror::Error)]
pub enum PathsError {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("invalid bridge: {0}")]
    InvalidBridge(String),
    #[error("enumeration too large: {0} paths exceeds the 10^6 guard")]
    TooManyPaths(u128),
    #[error("iteration cap of {0} steps reached")]
    IterationCap(u64),
}

/// A nondecreasing unit-step path: start point plus a sequence of 0/1 steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    start_time: i64,
    start_height: i64,
    steps: Vec<u8>,
}

impl LatticePath {
    pub fn new(start_time: i64, start_height: i64, steps: Vec<u8>) -> LatticePath {
        assert!(steps.iter().all(|&s| s <= 1), "steps must be bits");
        LatticePath {
            start_time,
            start_height,
            steps,
        }
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn end_time(&self) -> i64 {
        self.start_time + self.steps.len() as i64
    }

    pub fn start_height(&self) -> i64 {
        self.start_height
    }

    pub fn end_height(&self) -> i64 {
        self.start_height + self.steps.iter().map(|&s| s as i64).sum::<i64>()
    }

    pub fn steps(&self) -> &[u8] {
        &self.steps
    }

    /// Height at time t; None outside the domain.
    pub fn height_at(&self, t: i64) -> Option<i64> {
        if t < self.start_time || t > self.end_time() {
            return None;
        }
        let k = (t - self.start_time) as usize;
        Some(self.start_height + self.steps[..k].iter().map(|&s| s as i64).sum::<i64>())
    }

    /// Heights at start_time, start_time + 1, ..., end_time.
    pub fn heights(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut h = self.start_height;
        out.push(h);
        for &s in &self.steps {
            h += s as i64;
            out.push(h);
        }
        out
    }
}

/// Endpoint-conditioned path family on [a, b].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BridgeSpec {
    pub a: i64,
    pub b: i64,
    pub x: i64,
    pub y: i64,
}

impl BridgeSpec {
    pub fn new(a: i64, b: i64, x: i64, y: i64) -> Result<BridgeSpec, PathsError> {
        if b < a {
            return Err(PathsError::InvalidBridge(format!("b={b} < a={a}")));
        }
        if y < x || y > x + (b - a) {
            return Err(PathsError::InvalidBridge(format!(
                "endpoint y={y} unreachable from x={x} over [{a}, {b}]"
            )));
        }
        Ok(BridgeSpec { a, b, x, y })
    }

    pub fn length(&self) -> u64 {
        (self.b - self.a) as u64
    }

    pub fn rises(&self) -> u64 {
        (self.y - self.x) as u64
    }

    pub fn slope(&self) -> f64 {
        if self.b == self.a {
            0.0
        } else {
            (self.y - self.x) as f64 / (self.b - self.a) as f64
        }
    }

    /// Number of bridges, C(b-a, y-x).
    pub fn count(&self) -> u128 {
        binomial(self.length(), self.rises())
    }
}

/// C(n, k) in exact integer arithmetic (saturating at u128::MAX).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Bernoulli(p) walk of the given length.
pub fn sample_walk(p: f64, length: u64, start: (i64, i64), rng: &mut SplitMix64) -> LatticePath {
    assert!((0.0..=1.0).contains(&p));
    let steps = (0..length).map(|_| u8::from(rng.next_f64() < p)).collect();
    LatticePath::new(start.0, start.1, steps)
}

/// Uniform bridge draw: a uniform random subset of up-step positions chosen
/// by partial Fisher-Yates.
pub fn sample_bridge(spec: &BridgeSpec, rng: &mut SplitMix64) -> LatticePath {
    let len = spec.length() as usize;
    let k = spec.rises() as usize;
    let mut steps = vec![0u8; len];
    if k == len {
        steps.fill(1);
    } else if k > 0 {
        let mut idx: Vec<u32> = (0..len as u32).collect();
        for i in 0..k {
            let j = rng.random_range(i..len);
            idx.swap(i, j);
            steps[idx[i] as usize] = 1;
        }
    }
    LatticePath::new(spec.a, spec.x, steps)
}

fn common_window(
    paths: &[&LatticePath],
    window: Option<(i64, i64)>,
) -> Result<(i64, i64), PathsError> {
    let lo = paths
        .iter()
        .map(|p| p.start_time())
        .max()
        .expect("paths nonempty");
    let hi = paths
        .iter()
        .map(|p| p.end_time())
        .min()
        .expect("paths nonempty");
    let (a, b) = window.unwrap_or((lo, hi));
    if a < lo || b > hi {
        return Err(PathsError::DomainMismatch(format!(
            "window [{a}, {b}] outside common domain [{lo}, {hi}]"
        )));
    }
    if b < a {
        return Err(PathsError::DomainMismatch(format!(
            "empty window [{a}, {b}]"
        )));
    }
    Ok((a, b))
}

/// Intersection local time of two paths: #{ i in window : p1(i) = p2(i) },
/// both window endpoints included.
pub fn local_time(
    p1: &LatticePath,
    p2: &LatticePath,
    window: Option<(i64, i64)>,
) -> Result<u64, PathsError> {
    let (a, b) = common_window(&[p1, p2], window)?;
    let mut h1 = p1.height_at(a).expect("a in domain");
    let mut h2 = p2.height_at(a).expect("a in domain");
    let o1 = (a - p1.start_time()) as usize;
    let o2 = (a - p2.start_time()) as usize;
    let mut count = u64::from(h1 == h2);
    for t in 0..(b - a) as usize {
        h1 += p1.steps[o1 + t] as i64;
        h2 += p2.steps[o2 + t] as i64;
        count += u64::from(h1 == h2);
    }
    Ok(count)
}

/// Sites visited by at least two of the paths inside the window: for each
/// time, every height value carried by two or more paths counts once.
pub fn multi_local_time(
    paths: &[&LatticePath],
    window: Option<(i64, i64)>,
) -> Result<u64, PathsError> {
    assert!(paths.len() >= 2);
    let (a, b) = common_window(paths, window)?;
    let mut heights: Vec<i64> = paths
        .iter()
        .map(|p| p.height_at(a).expect("in domain"))
        .collect();
    let offsets: Vec<usize> = paths
        .iter()
        .map(|p| (a - p.start_time()) as usize)
        .collect();
    let mut count = 0u64;
    let mut scratch: Vec<i64> = Vec::with_capacity(paths.len());
    for t in 0..=(b - a) as usize {
        if t > 0 {
            for (i, p) in paths.iter().enumerate() {
                heights[i] += p.steps[offsets[i] + t - 1] as i64;
            }
        }
        scratch.clear();
        scratch.extend_from_slice(&heights);
        scratch.sort_unstable();
        let mut j = 0;
        while j < scratch.len() {
            let mut run = 1;
            while j + run < scratch.len() && scratch[j + run] == scratch[j] {
                run += 1;
            }
            if run >= 2 {
                count += 1;
            }
            j += run;
        }
    }
    Ok(count)
}

/// Number of times all three paths coincide, over k in {a+1, ..., b}
/// (start excluded).
pub fn triple_local_time(
    p1: &LatticePath,
    p2: &LatticePath,
    p3: &LatticePath,
) -> Result<u64, PathsError> {
    let (a, b) = common_window(&[p1, p2, p3], None)?;
    let mut h = [
        p1.height_at(a).expect("in domain"),
        p2.height_at(a).expect("in domain"),
        p3.height_at(a).expect("in domain"),
    ];
    let offs = [
        (a - p1.start_time()) as usize,
        (a - p2.start_time()) as usize,
        (a - p3.start_time()) as usize,
    ];
    let paths = [p1, p2, p3];
    let mut count = 0u64;
    for t in 0..(b - a) as usize {
        for i in 0..3 {
            h[i] += paths[i].steps[offs[i] + t] as i64;
        }
        count += u64::from(h[0] == h[1] && h[1] == h[2]);
    }
    Ok(count)
}

/// Exhaustive, duplicate-free enumeration of all bridges of a spec, ordered
/// lexicographically by the tuple of up-step positions.
pub fn enumerate_paths(spec: &BridgeSpec) -> Result<PathEnumerator, PathsError> {
    let count = spec.count();
    if count > 1_000_000 {
        return Err(PathsError::TooManyPaths(count));
    }
    Ok(PathEnumerator {
        spec: *spec,
        positions: None,
        done: false,
    })
}

pub struct PathEnumerator {
    spec: BridgeSpec,
    positions: Option<Vec<usize>>,
    done: bool,
}

impl Iterator for PathEnumerator {
    type Item = LatticePath;

    fn next(&mut self) -> Option<LatticePath> {
        if self.done {
            return None;
        }
        let len = self.spec.length() as usize;
        let k = self.spec.rises() as usize;
        match &mut self.positions {
            None => {
                self.positions = Some((0..k).collect());
            }
            Some(pos) => {
                // next combination in lexicographic position order
                let mut i = k;
                loop {
                    if i == 0 {
                        self.done = true;
                        return None;
                    }
                    i -= 1;
                    if pos[i] < len - k + i {
                        pos[i] += 1;
                        for j in i + 1..k {
                            pos[j] = pos[j - 1] + 1;
                        }
                        break;
                    }
                }
            }
        }
        let mut steps = vec![0u8; len];
        for &p in self.positions.as_ref().expect("set above") {
            steps[p] = 1;
        }
        Some(LatticePath::new(self.spec.a, self.spec.x, steps))
    }
}
