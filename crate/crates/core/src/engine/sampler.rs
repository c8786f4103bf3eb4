//! Deterministic chunked parallel sampling with checkpoint/resume.
//!
//! Samples are keyed by index; the per-sample seed is mix(master, index), so
//! neither worker count nor scheduling can perturb a value. Chunks are the
//! checkpoint unit: completed chunks are appended to a newline-delimited
//! record file and skipped on resume.

use crate::engine::EngineError;
use crate::rng::mix2;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// FNV-1a 64-bit digest of a canonical string; stable across platforms.
pub fn digest64(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Serialize, Deserialize)]
struct ChunkLine<T> {
    digest: String,
    start: u64,
    values: Vec<T>,
}

/// Append-only chunk store bound to a config digest.
pub struct Checkpoint {
    path: PathBuf,
    digest: String,
}

impl Checkpoint {
    pub fn new(path: &Path, digest: u64) -> Checkpoint {
        Checkpoint {
            path: path.to_path_buf(),
            digest: format!("{digest:016x}"),
        }
    }

    /// Completed chunks for this digest, keyed by start index.
    pub fn load<T: DeserializeOwned>(&self) -> Result<HashMap<u64, Vec<T>>, EngineError> {
        let mut chunks = HashMap::new();
        let text = match std::fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(chunks),
            Err(e) => return Err(EngineError::Io(e.to_string())),
        };
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            // tolerate a torn final line from a killed run
            let Ok(chunk) = serde_json::from_str::<ChunkLine<T>>(line) else {
                continue;
            };
            if chunk.digest == self.digest {
                chunks.insert(chunk.start, chunk.values);
            }
        }
        Ok(chunks)
    }

    fn append<T: Serialize>(
        &self,
        file: &Mutex<std::fs::File>,
        start: u64,
        values: &[T],
    ) -> Result<(), EngineError> {
        #[derive(Serialize)]
        struct ChunkLineRef<'a, T> {
            digest: &'a str,
            start: u64,
            values: &'a [T],
        }
        let line = serde_json::to_string(&ChunkLineRef {
            digest: &self.digest,
            start,
            values,
        })
        .map_err(|e| EngineError::Io(e.to_string()))?;
        let mut f = file.lock().expect("checkpoint writer lock");
        writeln!(f, "{line}").map_err(|e| EngineError::Io(e.to_string()))?;
        f.flush().map_err(|e| EngineError::Io(e.to_string()))?;
        Ok(())
    }
}

/// Evaluates `eval(index, seed)` for index in 0..total on a pool of `workers`
/// threads, in chunks of `chunk_size`, optionally checkpointed. Returns the
/// values in index order regardless of scheduling.
pub fn run_samples<T, F>(
    total: u64,
    chunk_size: u64,
    workers: usize,
    master_seed: u64,
    checkpoint: Option<&Checkpoint>,
    eval: F,
) -> Result<Vec<T>, EngineError>
where
    T: Serialize + DeserializeOwned + Clone + Send,
    F: Fn(u64, u64) -> T + Sync,
{
    assert!(chunk_size > 0);
    let done: HashMap<u64, Vec<T>> = match checkpoint {
        Some(cp) => cp.load()?,
        None => HashMap::new(),
    };
    let writer = match checkpoint {
        Some(cp) => {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&cp.path)
                .map_err(|e| EngineError::Io(e.to_string()))?;
            Some(Mutex::new(file))
        }
        None => None,
    };

    let starts: Vec<u64> = (0..total).step_by(chunk_size as usize).collect();
    let completed: std::collections::HashSet<u64> = done.keys().copied().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EngineError::Io(e.to_string()))?;

    let computed: Vec<(u64, Vec<T>)> = pool.install(|| {
        starts
            .par_iter()
            .filter(|s| !completed.contains(s))
            .map(|&start| {
                let end = (start + chunk_size).min(total);
                let values: Vec<T> = (start..end)
                    .map(|idx| eval(idx, mix2(master_seed, idx)))
                    .collect();
                if let (Some(cp), Some(file)) = (checkpoint, writer.as_ref()) {
                    cp.append(file, start, &values)?;
                }
                Ok((start, values))
            })
            .collect::<Result<Vec<_>, EngineError>>()
    })?;

    let mut by_start: HashMap<u64, Vec<T>> = done;
    by_start.extend(computed);
    let mut out = Vec::with_capacity(total as usize);
    for start in starts {
        let chunk = by_start
            .remove(&start)
            .ok_or_else(|| EngineError::Io(format!("missing chunk at {start}")))?;
        out.extend(chunk);
    }
    if out.len() as u64 != total {
        return Err(EngineError::Io(format!(
            "resumed sample count {} != expected {total} (stale checkpoint?)",
            out.len()
        )));
    }
    Ok(out)
}
