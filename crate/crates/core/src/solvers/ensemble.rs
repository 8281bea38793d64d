//! Monte Carlo ensembles with a worker-count independent reduction.
//!
//! Trajectory `i` always uses seed `base_seed + i`. Trajectories are grouped
//! into fixed blocks; each block is accumulated sequentially (Welford) and
//! blocks are merged with Chan's pairwise update along a binary-counter tree
//! whose shape depends only on the number of blocks. Workers only decide
//! *who* computes a block, never the order of floating-point operations, so
//! the statistics are bit-identical for any worker count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stochastic::{Engine, TrajectoryOptions};
use super::{Method, Observable, Problem};
use crate::error::{invalid, Error, Result};
use crate::linalg::CMat;
use crate::noise::NoiseGrid;

const BLOCK: usize = 64;
/// Blocks handed to the pool at a time; bounds memory, not results.
const WAVE: usize = 32;

pub const DEFAULT_MAX_CLIP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub grid: NoiseGrid,
    pub method: Method,
    pub initial: CMat,
    pub observables: Vec<Observable>,
    pub n_samples: usize,
    pub base_seed: u64,
    pub n_workers: usize,
    pub options: TrajectoryOptions,
    pub max_clip_fraction: f64,
}

impl EnsembleConfig {
    pub fn new(grid: NoiseGrid, method: Method, initial: CMat, observables: Vec<Observable>) -> Self {
        Self {
            grid,
            method,
            initial,
            observables,
            n_samples: 1000,
            base_seed: 0,
            n_workers: 1,
            options: TrajectoryOptions::default(),
            max_clip_fraction: DEFAULT_MAX_CLIP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `mean[o][r]`
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, `stderr[o][r]`.
    pub stderr: Vec<Vec<f64>>,
    /// Trajectories that entered the statistics.
    pub n_samples: usize,
    /// Trajectories discarded as runaway.
    pub n_clipped: usize,
    pub wall_time: f64,
}

impl EnsembleStats {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn samples_per_second(&self) -> f64 {
        (self.n_samples + self.n_clipped) as f64 / self.wall_time.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    clipped: usize,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
            clipped: 0,
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn merge(mut self, other: Moments) -> Moments {
        self.clipped += other.clipped;
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return Moments {
                clipped: self.clipped,
                ..other
            };
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        self
    }
}

/// Binary-counter pairwise reduction: merging is order-fixed by block index.
struct Reducer {
    stack: Vec<(u32, Moments)>,
}

impl Reducer {
    fn new() -> Self {
        Self { stack: Vec::new() }
    }

    fn push(&mut self, m: Moments) {
        let mut item = (0u32, m);
        while let Some((level, _)) = self.stack.last() {
            if *level != item.0 {
                break;
            }
            let (level, left) = self.stack.pop().expect("non-empty");
            item = (level + 1, left.merge(item.1));
        }
        self.stack.push(item);
    }

    fn finish(mut self) -> Option<Moments> {
        let mut acc = self.stack.pop()?.1;
        while let Some((_, left)) = self.stack.pop() {
            acc = left.merge(acc);
        }
        Some(acc)
    }
}

fn run_block(engine: &Engine, base_seed: u64, range: std::ops::Range<usize>) -> Result<Moments> {
    let len = engine.n_records() * engine.n_observables();
    let mut ws = engine.workspace();
    let mut buf = vec![0.0; len];
    let mut acc = Moments::new(len);
    for i in range {
        match engine.run(base_seed.wrapping_add(i as u64), &mut ws, &mut buf) {
            Ok(()) => acc.push(&buf),
            Err(Error::Runaway { .. }) => acc.clipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(acc)
}

#[cfg(feature = "parallel")]
fn run_wave(
    engine: &Engine,
    base_seed: u64,
    ranges: &[std::ops::Range<usize>],
    pool: Option<&rayon::ThreadPool>,
) -> Vec<Result<Moments>> {
    use rayon::prelude::*;
    match pool {
        Some(pool) => pool.install(|| {
            ranges
                .par_iter()
                .map(|r| run_block(engine, base_seed, r.clone()))
                .collect()
        }),
        None => ranges
            .iter()
            .map(|r| run_block(engine, base_seed, r.clone()))
            .collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_wave(engine: &Engine, base_seed: u64, ranges: &[std::ops::Range<usize>], _pool: Option<&()>) -> Vec<Result<Moments>> {
    ranges
        .iter()
        .map(|r| run_block(engine, base_seed, r.clone()))
        .collect()
}

/// Name of the execution backend compiled in.
pub fn ensemble_backend() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

/// Runs `n_samples` independent trajectories and returns mean and standard
/// error of every observable at every recorded time.
///
/// Runaway trajectories are excluded from the statistics and counted; the
/// run fails when their fraction exceeds `max_clip_fraction`.
pub fn run_ensemble(problem: &Problem, config: &EnsembleConfig) -> Result<EnsembleStats> {
    if config.n_samples < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: config.n_samples,
        });
    }
    if config.n_workers == 0 {
        return Err(invalid("n_workers", "must be at least 1"));
    }
    let start = Instant::now();
    let engine = Engine::new(
        problem,
        config.method,
        config.grid,
        &config.initial,
        &config.observables,
        config.options,
    )?;

    #[cfg(feature = "parallel")]
    let pool = if config.n_workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.n_workers)
                .build()
                .map_err(|e| invalid("n_workers", e.to_string()))?,
        )
    } else {
        None
    };
    #[cfg(not(feature = "parallel"))]
    let pool: Option<()> = None;

    let blocks: Vec<std::ops::Range<usize>> = (0..config.n_samples)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(config.n_samples))
        .collect();
    let mut reducer = Reducer::new();
    for wave in blocks.chunks(WAVE) {
        for result in run_wave(&engine, config.base_seed, wave, pool.as_ref()) {
            reducer.push(result?);
        }
    }
    let moments = reducer.finish().expect("at least one block");

    let clipped = moments.clipped;
    let limit = config.max_clip_fraction * config.n_samples as f64;
    if clipped as f64 > limit || moments.count < 2 {
        return Err(Error::TooManyRunaways {
            clipped,
            total: config.n_samples,
            limit_fraction: config.max_clip_fraction,
        });
    }

    let n_obs = engine.n_observables();
    let n_rec = engine.n_records();
    let n = moments.count as f64;
    let mut mean = vec![vec![0.0; n_rec]; n_obs];
    let mut stderr = vec![vec![0.0; n_rec]; n_obs];
    for r in 0..n_rec {
        for o in 0..n_obs {
            let i = r * n_obs + o;
            mean[o][r] = moments.mean[i];
            stderr[o][r] = (moments.m2[i] / (n - 1.0) / n).sqrt();
        }
    }
    Ok(EnsembleStats {
        times: engine.times(),
        labels: engine.labels().to_vec(),
        mean,
        stderr,
        n_samples: moments.count as usize,
        n_clipped: clipped,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chan_merge_matches_single_pass() {
        let data: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 * 0.37 - 3.0).collect();
        let mut whole = Moments::new(1);
        for &x in &data {
            whole.push(&[x]);
        }
        let mut reducer = Reducer::new();
        for chunk in data.chunks(5) {
            let mut m = Moments::new(1);
            for &x in chunk {
                m.push(&[x]);
            }
            reducer.push(m);
        }
        let merged = reducer.finish().unwrap();
        assert_eq!(merged.count, 37);
        assert!((merged.mean[0] - whole.mean[0]).abs() < 1e-13);
        assert!((merged.m2[0] / whole.m2[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducer_shape_is_a_binary_counter() {
        let mut r = Reducer::new();
        for _ in 0..11 {
            r.push(Moments::new(1));
        }
        // 11 = 0b1011 → levels 3, 1, 0
        let levels: Vec<u32> = r.stack.iter().map(|(l, _)| *l).collect();
        assert_eq!(levels, vec![3, 1, 0]);
    }
}
