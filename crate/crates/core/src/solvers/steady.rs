//! Steady-state extraction from an averaged time series.

use serde::{Deserialize, Serialize};

use super::{run_ensemble, EnsembleConfig, EnsembleStats, Problem};
use crate::bath::BathSpec;
use crate::error::{invalid, Error, Result};

/// The interval `[9/κ_T, 10/κ_T]`, late enough for the transient to have
/// decayed by `e^{-9}`.
pub fn steady_window(bath: &BathSpec) -> (f64, f64) {
    let kt = bath.kappa_t();
    (9.0 / kt, 10.0 / kt)
}

/// Time average of observable `index` over `window` and its error.
///
/// The error is the average standard error of the points in the window.
/// Neighbouring points of one trajectory are strongly correlated, so this is
/// an upper bound rather than the naive `σ/√n_points`.
pub fn extract_steady(stats: &EnsembleStats, index: usize, window: (f64, f64)) -> Result<(f64, f64)> {
    let (start, end) = window;
    let grid_start = *stats.times.first().unwrap_or(&0.0);
    let grid_end = *stats.times.last().unwrap_or(&0.0);
    if !(start <= end) || start < grid_start || end > grid_end + 1e-12 * grid_end.abs() {
        return Err(Error::WindowOutsideGrid {
            start,
            end,
            grid_start,
            grid_end,
        });
    }
    if index >= stats.mean.len() {
        return Err(invalid("index", "no such observable"));
    }
    let picked: Vec<usize> = stats
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= start && t <= end)
        .map(|(i, _)| i)
        .collect();
    if picked.is_empty() {
        return Err(invalid("window", "contains no recorded time"));
    }
    let k = picked.len() as f64;
    let mean = picked.iter().map(|&i| stats.mean[index][i]).sum::<f64>() / k;
    let sigma = picked.iter().map(|&i| stats.stderr[index][i]).sum::<f64>() / k;
    Ok((mean, sigma))
}

/// Number of steps of size `h` needed for the last record, taken every
/// `stride` steps, to reach `t_end`.
pub fn steps_to_cover(t_end: f64, h: f64, stride: usize) -> usize {
    let stride = stride.max(1);
    ((t_end / h - 1e-9).ceil().max(0.0) as usize).div_ceil(stride) * stride
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyEstimate {
    pub mean: f64,
    /// Standard error of `mean` from the scatter of the batch averages.
    pub stderr: f64,
    pub batch_means: Vec<f64>,
    pub n_samples: usize,
    pub n_clipped: usize,
    pub wall_time: f64,
}

/// Window average of observable `index` with a batch-means error.
///
/// The trajectories `base_seed .. base_seed + n_samples` are split into
/// `n_batches` consecutive runs. Each run's window average is one sample of
/// the estimator, so the spread between batches includes the correlation of
/// neighbouring times within a trajectory that [`extract_steady`] can only
/// bound.
pub fn steady_batched(
    problem: &Problem,
    config: &EnsembleConfig,
    index: usize,
    window: (f64, f64),
    n_batches: usize,
) -> Result<SteadyEstimate> {
    if n_batches < 2 {
        return Err(invalid("n_batches", "at least two batches are needed for an error"));
    }
    if config.n_samples < 2 * n_batches {
        return Err(Error::TooFewSamples {
            required: 2 * n_batches,
            got: config.n_samples,
        });
    }
    let mut batch_means = Vec::with_capacity(n_batches);
    let mut sizes = Vec::with_capacity(n_batches);
    let (mut n_samples, mut n_clipped, mut wall_time) = (0, 0, 0.0);
    let mut offset = 0;
    for b in 0..n_batches {
        let size = config.n_samples / n_batches + usize::from(b < config.n_samples % n_batches);
        let mut batch = config.clone();
        batch.n_samples = size;
        batch.base_seed = config.base_seed.wrapping_add(offset as u64);
        offset += size;
        let stats = run_ensemble(problem, &batch)?;
        batch_means.push(extract_steady(&stats, index, window)?.0);
        sizes.push(stats.n_samples as f64);
        n_samples += stats.n_samples;
        n_clipped += stats.n_clipped;
        wall_time += stats.wall_time;
    }
    let total: f64 = sizes.iter().sum();
    let mean = batch_means.iter().zip(&sizes).map(|(m, w)| m * w).sum::<f64>() / total;
    let b = n_batches as f64;
    let plain = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - plain).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(SteadyEstimate {
        mean,
        stderr: (var / b).sqrt(),
        batch_means,
        n_samples,
        n_clipped,
        wall_time,
    })
}
