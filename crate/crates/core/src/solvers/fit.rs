//! Levenberg–Marquardt fit of `A e^{−Γt} cos(Ωt + φ)`.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub amplitude: f64,
    pub frequency: f64,
    pub decay_rate: f64,
    pub phase: f64,
    /// Standard errors of `[A, Γ, Ω, φ]` from the residual-scaled covariance.
    pub stderr: [f64; 4],
    pub rss: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn frequency_stderr(&self) -> f64 {
        self.stderr[2]
    }
}

fn model(p: &Vector4<f64>, t: f64) -> f64 {
    p[0] * (-p[1] * t).exp() * (p[2] * t + p[3]).cos()
}

fn rss(p: &Vector4<f64>, t: &[f64], y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(&t, &y)| (y - model(p, t)).powi(2)).sum()
}

/// Normal equations `JᵀJ` and gradient `Jᵀr`.
fn normal_equations(p: &Vector4<f64>, t: &[f64], y: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (&t, &y) in t.iter().zip(y) {
        let env = (-p[1] * t).exp();
        let (s, c) = (p[2] * t + p[3]).sin_cos();
        let m = p[0] * env * c;
        let row = Vector4::new(env * c, -t * m, -p[0] * env * t * s, -p[0] * env * s);
        jtj += row * row.transpose();
        jtr += row * (y - m);
    }
    (jtj, jtr)
}

/// Frequency and zero-crossing times from sign changes about the mean.
fn crossings(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut out = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1] - mean, y[i] - mean);
        if a == 0.0 || a.signum() != b.signum() {
            let frac = if a == b { 0.0 } else { a / (a - b) };
            out.push(t[i - 1] + frac * (t[i] - t[i - 1]));
        }
    }
    out
}

fn initial_guesses(t: &[f64], y: &[f64], zeros: &[f64]) -> Vec<Vector4<f64>> {
    let omega = PI * (zeros.len() - 1) as f64 / (zeros[zeros.len() - 1] - zeros[0]);
    // envelope from the peak of each half period
    let mut pts = Vec::new();
    for w in zeros.windows(2) {
        let peak = t
            .iter()
            .zip(y)
            .filter(|(&ti, _)| ti >= w[0] && ti <= w[1])
            .map(|(&ti, &yi)| (ti, yi.abs()))
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if peak.1 > 0.0 {
            pts.push((peak.0, peak.1.ln()));
        }
    }
    let (gamma, amp) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let slope = sxy / sxx;
        ((-slope).max(0.0), (ml - slope * mt).exp())
    } else {
        (0.0, y.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
    };
    (0..8)
        .map(|k| Vector4::new(amp, gamma, omega, -PI + k as f64 * PI / 4.0))
        .collect()
}

fn levenberg_marquardt(t: &[f64], y: &[f64], start: Vector4<f64>) -> Option<(Vector4<f64>, f64, usize)> {
    const MAX_ITER: usize = 500;
    let mut p = start;
    let mut cost = rss(&p, t, y);
    let mut lambda = 1e-3;
    for iter in 0..MAX_ITER {
        let (jtj, jtr) = normal_equations(&p, t, y);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for i in 0..4 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let c = rss(&trial, t, y);
            if c.is_finite() && c <= cost {
                let small = step.norm() <= 1e-14 * (p.norm() + 1e-14);
                let stalled = cost - c <= 1e-15 * cost;
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small || (stalled && iter > 2) {
                    return Some((p, cost, iter + 1));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            return Some((p, cost, iter + 1));
        }
    }
    None
}

/// Least-squares fit of a damped cosine to `(times, series)`.
///
/// The series should show at least three oscillations; the frequency
/// starting value comes from zero crossings, the envelope from half-period
/// peaks, and several phases are tried.
pub fn fit_damped_cosine(series: &[f64], times: &[f64]) -> Result<FitResult> {
    if series.len() != times.len() {
        return Err(invalid("series", "length must match the time grid"));
    }
    if series.len() < 8 {
        return Err(invalid("series", "too few points"));
    }
    let zeros = crossings(times, series);
    if zeros.len() < 6 {
        return Err(invalid("series", "fewer than three visible oscillations"));
    }
    let mut best: Option<(Vector4<f64>, f64, usize)> = None;
    for guess in initial_guesses(times, series, &zeros) {
        if let Some(r) = levenberg_marquardt(times, series, guess) {
            if best.as_ref().is_none_or(|b| r.1 < b.1) {
                best = Some(r);
            }
        }
    }
    let (mut p, cost, iterations) = best.ok_or(Error::FitDiverged { iterations: 500 })?;
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::FitDiverged { iterations });
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[3] += PI;
    }
    if p[2] < 0.0 {
        p[2] = -p[2];
        p[3] = -p[3];
    }
    p[3] = (p[3] + PI).rem_euclid(2.0 * PI) - PI;

    let (jtj, _) = normal_equations(&p, times, series);
    let dof = (series.len() - 4) as f64;
    let s2 = cost / dof;
    let stderr = match jtj.try_inverse() {
        Some(cov) => [0, 1, 2, 3].map(|i| (cov[(i, i)] * s2).max(0.0).sqrt()),
        None => [f64::NAN; 4],
    };
    Ok(FitResult {
        amplitude: p[0],
        decay_rate: p[1],
        frequency: p[2],
        phase: p[3],
        stderr,
        rss: cost,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn recovers_exact_model() {
        let t = grid(4000, 0.01);
        let y: Vec<f64> = t.iter().map(|&t| (-0.1 * t).exp() * (0.9 * t).cos()).collect();
        let f = fit_damped_cosine(&y, &t).unwrap();
        assert!((f.frequency - 0.9).abs() < 1e-6, "{f:?}");
        assert!((f.decay_rate - 0.1).abs() < 1e-6);
        assert!((f.amplitude - 1.0).abs() < 1e-6);
        assert!(f.phase.abs() < 1e-6);
    }

    #[test]
    fn pure_cosine_has_no_decay() {
        let t = grid(3000, 0.02);
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, &t)| 0.5 * (1.3 * t + 0.4).cos() + 1e-3 * ((i * 7919 % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        let f = fit_damped_cosine(&y, &t).unwrap();
        assert!(f.decay_rate.abs() < 3.0 * f.stderr[1] + 1e-12, "{f:?}");
        assert!((f.frequency - 1.3).abs() < 4.0 * f.frequency_stderr());
    }

    #[test]
    fn needs_oscillations() {
        let t = grid(100, 0.01);
        let y: Vec<f64> = t.iter().map(|&t| (-t).exp()).collect();
        assert!(fit_damped_cosine(&y, &t).is_err());
    }
}
