//! Adaptive Gauss–Kronrod quadrature.
//!
//! Globally adaptive 7/15-point Gauss–Kronrod on finite panels, a rational
//! map for semi-infinite tails, and a panel-sum plus Wynn-epsilon scheme for
//! Fourier-type integrands `f(ω)·cos(ωt)` / `f(ω)·sin(ωt)` on `[a, ∞)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Cos => x.cos(),
            Trig::Sin => x.sin(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_subdivisions: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    (value, error)
}

impl Integrator {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates over `[points[0], points[last]]`, treating interior points
    /// as panel boundaries.
    pub fn panels<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<QuadResult> {
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[1] > w[0] {
                let (value, error) = kronrod(&f, w[0], w[1]);
                evaluations += 15;
                heap.push(Panel {
                    a: w[0],
                    b: w[1],
                    value,
                    error,
                });
            }
        }
        let totals = |heap: &BinaryHeap<Panel>| {
            heap.iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
        };
        let mut splits = 0;
        loop {
            let (value, error) = totals(&heap);
            let tol = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= tol {
                return Ok(QuadResult {
                    value,
                    error,
                    evaluations,
                });
            }
            if splits >= self.max_subdivisions {
                return Err(Error::Quadrature { value, error });
            }
            let worst = match heap.pop() {
                Some(p) => p,
                None => {
                    return Ok(QuadResult {
                        value: 0.0,
                        error: 0.0,
                        evaluations,
                    })
                }
            };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Panel has collapsed to machine resolution; accept it.
                heap.push(Panel { error: 0.0, ..worst });
                continue;
            }
            for (a, b) in [(worst.a, mid), (mid, worst.b)] {
                let (value, error) = kronrod(&f, a, b);
                heap.push(Panel { a, b, value, error });
            }
            evaluations += 30;
            splits += 1;
        }
    }

    pub fn finite<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        self.panels(f, &[a, b])
    }

    /// `∫_{points[0]}^∞ f`. Panels up to the last breakpoint are integrated
    /// directly, the remaining tail through `x = c + u/(1-u)`.
    pub fn semi_infinite<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<QuadResult> {
        let c = *points.last().expect("at least one point");
        let head = if points.len() > 1 {
            self.panels(&f, points)?
        } else {
            QuadResult {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            }
        };
        let scale = (c - points[0]).abs().max(1.0);
        let mapped = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let x = c + scale * u / (1.0 - u);
            let jac = scale / ((1.0 - u) * (1.0 - u));
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let tail_tol = Integrator {
            abs_tol: self.abs_tol.max(self.rel_tol * head.value.abs()) * 0.5,
            ..*self
        };
        let tail = tail_tol.panels(mapped, &[0.0, 0.5, 0.9, 0.99, 1.0])?;
        Ok(QuadResult {
            value: head.value + tail.value,
            error: head.error + tail.error,
            evaluations: head.evaluations + tail.evaluations,
        })
    }

    /// `∫_{points[0]}^∞ f(ω)·trig(ωt) dω` for an envelope `f` that decays
    /// monotonically beyond the last breakpoint.
    ///
    /// The head up to the last breakpoint is split at every half period;
    /// the tail is summed half-period by half-period and the partial sums are
    /// extrapolated with the Wynn epsilon algorithm.
    pub fn fourier<F: Fn(f64) -> f64>(
        &self,
        f: F,
        t: f64,
        trig: Trig,
        points: &[f64],
    ) -> Result<QuadResult> {
        if t == 0.0 {
            return match trig {
                Trig::Cos => self.semi_infinite(f, points),
                Trig::Sin => Ok(QuadResult {
                    value: 0.0,
                    error: 0.0,
                    evaluations: 0,
                }),
            };
        }
        let t_abs = t.abs();
        let sign = if t < 0.0 && matches!(trig, Trig::Sin) {
            -1.0
        } else {
            1.0
        };
        let g = |w: f64| f(w) * trig.eval(w * t_abs);
        let half_period = std::f64::consts::PI / t_abs;
        let start = points[0];
        let end = *points.last().expect("at least one point");

        let mut head_points: Vec<f64> = Vec::new();
        if end > start {
            let max_cycles = 20_000usize;
            let n_cycles = ((end - start) / half_period).ceil() as usize;
            if n_cycles <= max_cycles {
                let mut merged: Vec<f64> = points.to_vec();
                let k0 = (start / half_period).floor() as i64 + 1;
                let mut k = k0;
                loop {
                    let x = k as f64 * half_period;
                    if x >= end {
                        break;
                    }
                    merged.push(x);
                    k += 1;
                }
                merged.sort_by(f64::total_cmp);
                merged.dedup();
                head_points = merged;
            } else {
                return Err(Error::Quadrature {
                    value: f64::NAN,
                    error: f64::INFINITY,
                });
            }
        }
        let head = if head_points.len() > 1 {
            self.panels(g, &head_points)?
        } else {
            QuadResult {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            }
        };

        // Tail: half periods aligned to zeros of the trig factor.
        let mut a = end;
        let k_next = (a / half_period).floor() + 1.0;
        let mut b = k_next * half_period;
        if b - a < 1e-12 * half_period {
            b += half_period;
        }
        let panel_tol = Integrator {
            rel_tol: self.rel_tol * 0.1,
            abs_tol: self.abs_tol * 0.1,
            ..*self
        };
        let mut sums = Vec::new();
        let mut running = 0.0;
        let mut evaluations = head.evaluations;
        let mut error = head.error;
        let mut last_extrapolated = f64::NAN;
        let mut stable = 0;
        for _ in 0..400 {
            let panel = panel_tol.finite(g, a, b)?;
            evaluations += panel.evaluations;
            error += panel.error;
            running += panel.value;
            sums.push(running);
            let tol = self.abs_tol.max(self.rel_tol * (head.value + running).abs());
            if panel.value.abs() < 0.01 * tol {
                last_extrapolated = running;
                break;
            }
            if sums.len() >= 3 {
                let ext = wynn_epsilon(&sums);
                if (ext - last_extrapolated).abs() < tol {
                    stable += 1;
                    if stable >= 2 {
                        last_extrapolated = ext;
                        break;
                    }
                } else {
                    stable = 0;
                }
                last_extrapolated = ext;
            }
            a = b;
            b += half_period;
        }
        let value = head.value + last_extrapolated;
        let tol = self.abs_tol.max(self.rel_tol * value.abs());
        if !value.is_finite() {
            return Err(Error::Quadrature { value, error });
        }
        Ok(QuadResult {
            value: sign * value,
            error: error.max(tol * 0.1),
            evaluations,
        })
    }
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = *sums.last().unwrap();
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let v = if diff == 0.0 {
                f64::INFINITY
            } else {
                prev[i + 1] + 1.0 / diff
            };
            next.push(v);
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                } else {
                    break;
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = Integrator::default()
            .finite(|x| x.powi(5) - 2.0 * x, 0.0, 2.0)
            .unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = Integrator::default().finite(|x| x.sqrt().ln(), 0.0, 1.0).unwrap();
        assert!((r.value + 0.5).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn semi_infinite_lorentzian() {
        let r = Integrator::default()
            .semi_infinite(|x| 1.0 / (1.0 + x * x), &[0.0, 1.0])
            .unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn fourier_cosine_of_lorentzian() {
        // ∫_0^∞ cos(ωt)/(1+ω²) dω = (π/2) e^{-t}
        for &t in &[0.3, 1.0, 5.0, 20.0] {
            let r = Integrator::default()
                .fourier(|w| 1.0 / (1.0 + w * w), t, Trig::Cos, &[0.0, 4.0])
                .unwrap();
            let exact = PI / 2.0 * (-t).exp();
            assert!((r.value - exact).abs() < 1e-9, "t={t}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn fourier_sine_dirichlet() {
        // ∫_0^∞ ω sin(ωt)/(1+ω²) dω = (π/2) e^{-t}
        for &t in &[0.5, 2.0, 8.0] {
            let r = Integrator::default()
                .fourier(|w| w / (1.0 + w * w), t, Trig::Sin, &[0.0, 4.0])
                .unwrap();
            let exact = PI / 2.0 * (-t).exp();
            assert!((r.value - exact).abs() < 1e-8, "t={t}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut sums = Vec::new();
        let mut s = 0.0;
        for k in 1..=16 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(s);
        }
        assert!((wynn_epsilon(&sums) - 2f64.ln()).abs() < 1e-9, "{}", wynn_epsilon(&sums) - 2f64.ln());
    }
}
