//! Gaussian noise with prescribed correlations, synthesised by filtering
//! white noise in the frequency domain.
//!
//! For a window `W` and iid standard normals `x_j` on a grid of `M` points,
//!
//! ```text
//! ξ_ℓ = 1/(M√h) · Σ_k e^{−iΩ_k t_ℓ} W(Ω_k) X_k,     X_k = Σ_j x_j e^{+iΩ_k t_j},
//! ```
//!
//! whose covariance is `(1/Mh) Σ_k |W(Ω_k)|² e^{−iΩ_k τ}`, the Riemann sum of
//! `∫dω/2π |W|² e^{−iωτ}`. The grid is `oversample` times longer than the
//! retained part so that the circular wrap-around lies beyond the last lag
//! used. The Nyquist bin is dropped so every filtered series is exactly real.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::BathSpec;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub h: f64,
    pub n_steps: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    2
}

impl NoiseGrid {
    pub fn new(h: f64, n_steps: usize) -> Self {
        Self {
            h,
            n_steps,
            oversample: default_oversample(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(invalid("h", "must be positive"));
        }
        if !self.n_steps.is_power_of_two() || self.n_steps < 2 {
            return Err(invalid("n_steps", "must be a power of two ≥ 2"));
        }
        if self.oversample == 0 {
            return Err(invalid("oversample", "must be at least 1"));
        }
        Ok(())
    }

    /// Length of the synthesis grid, `oversample · n_steps`.
    pub fn fft_len(&self) -> usize {
        self.n_steps * self.oversample
    }

    /// Angular frequency of FFT bin `k` (negative above `M/2`).
    pub fn omega(&self, k: usize) -> f64 {
        let m = self.fft_len();
        let signed = if k <= m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        };
        2.0 * PI * signed / (m as f64 * self.h)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl NoiseValues {
    pub fn len(&self) -> usize {
        match self {
            NoiseValues::Real(v) => v.len(),
            NoiseValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            NoiseValues::Real(v) => Complex64::new(v[i], 0.0),
            NoiseValues::Complex(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample {
    pub xi: NoiseValues,
    pub nu: Option<Vec<Complex64>>,
    pub seed: u64,
    pub grid: NoiseGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// One real coloured noise.
    Sled,
    /// Complex `ξ` and `ν` pair.
    Sln,
}

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16).
pub fn normal_quantile(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                + 67265.770927008700853)
                * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                + 39307.89580009271061)
                * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
            + 0.24178072517745061177)
            * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 0.0012426609473880784386)
            * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Stream of standard normals from a ChaCha8 keystream.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    #[inline]
    pub fn sample(&mut self) -> f64 {
        // 53 random bits mapped to the open interval (0, 1)
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        normal_quantile(u)
    }
}

/// Precomputed windows and FFT plans for one bath and grid. Shareable
/// between threads; each thread brings its own [`NoiseScratch`].
pub struct NoiseGenerator {
    grid: NoiseGrid,
    kind: NoiseKind,
    /// `√(F/2)` for the SLED noise, `W₁` for the SLN noise.
    w_real: Vec<f64>,
    /// `W₂ = √(χ_R/2)` (SLN only).
    w2: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for NoiseGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseGenerator")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

pub struct NoiseScratch {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    fft: Vec<Complex64>,
}

pub fn window_sled(bath: &BathSpec, omega: f64) -> f64 {
    (0.5 * bath.sled_noise_spectrum(omega)).sqrt()
}

/// `W₁ = (S − iL_i)^{1/2}` with `L_i = −iJ/2`, i.e. `√((J/2) coth(βω/2))`.
pub fn window_w1(bath: &BathSpec, omega: f64) -> Result<Complex64> {
    let radicand = bath.power_spectrum(omega) - 0.5 * bath.j_odd(omega);
    let scale = bath.power_spectrum(omega.abs()).max(f64::MIN_POSITIVE);
    if radicand < -1e-12 * scale {
        return Err(Error::SpectrumConvention { omega, radicand });
    }
    Ok(Complex64::new(radicand.max(0.0).sqrt(), 0.0))
}

/// `W₂ = (χ_R/2)^{1/2}`, principal branch. `χ_R(−ω) = χ_R(ω)*` and `χ_R`
/// never touches the negative real axis, so this branch is continuous and
/// Hermitian-symmetric along the grid.
pub fn window_w2(bath: &BathSpec, omega: f64) -> Result<Complex64> {
    Ok((bath.response_function(omega)? * 0.5).sqrt())
}

impl NoiseGenerator {
    pub fn new(bath: &BathSpec, grid: NoiseGrid, kind: NoiseKind) -> Result<Self> {
        bath.validate()?;
        grid.validate()?;
        let m = grid.fft_len();
        let nyquist = m / 2;
        let mut w_real = vec![0.0; m];
        let mut w2 = Vec::new();
        match kind {
            NoiseKind::Sled => {
                for (k, w) in w_real.iter_mut().enumerate() {
                    if k != nyquist {
                        *w = window_sled(bath, grid.omega(k));
                    }
                }
            }
            NoiseKind::Sln => {
                w2 = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..m {
                    if k == nyquist || bath.kappa == 0.0 {
                        continue;
                    }
                    let omega = grid.omega(k);
                    w_real[k] = window_w1(bath, omega)?.re;
                    w2[k] = window_w2(bath, omega)?;
                }
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            kind,
            w_real,
            w2,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            scale: 1.0 / (m as f64 * grid.h.sqrt()),
        })
    }

    pub fn sled(bath: &BathSpec, grid: NoiseGrid) -> Result<Self> {
        Self::new(bath, grid, NoiseKind::Sled)
    }

    pub fn sln(bath: &BathSpec, grid: NoiseGrid) -> Result<Self> {
        Self::new(bath, grid, NoiseKind::Sln)
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn scratch(&self) -> NoiseScratch {
        let m = self.grid.fft_len();
        let zero = Complex64::new(0.0, 0.0);
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        NoiseScratch {
            a: vec![zero; m],
            b: vec![zero; m],
            c: vec![zero; m],
            fft: vec![zero; len],
        }
    }

    fn white(&self, seed: u64, stream: u64, buf: &mut [Complex64]) {
        let mut normals = NormalStream::new(seed, stream);
        for x in buf.iter_mut() {
            *x = Complex64::new(normals.sample(), 0.0);
        }
    }

    /// Real coloured noise for the SLED propagator, first `n_steps` points.
    pub fn fill_sled(&self, seed: u64, out: &mut [f64], scratch: &mut NoiseScratch) {
        debug_assert_eq!(self.kind, NoiseKind::Sled);
        let a = &mut scratch.a;
        self.white(seed, 0, a);
        self.inverse.process_with_scratch(a, &mut scratch.fft);
        for (x, &w) in a.iter_mut().zip(&self.w_real) {
            *x *= w;
        }
        self.forward.process_with_scratch(a, &mut scratch.fft);
        for (o, x) in out.iter_mut().zip(a.iter()) {
            *o = x.re * self.scale;
        }
    }

    /// Complex `ξ = ξ_r + ξ_c` and `ν` for the SLN propagator.
    pub fn fill_sln(
        &self,
        seed: u64,
        xi: &mut [Complex64],
        nu: &mut [Complex64],
        scratch: &mut NoiseScratch,
    ) {
        debug_assert_eq!(self.kind, NoiseKind::Sln);
        let NoiseScratch { a, b, c, fft } = scratch;
        let n = xi.len().min(nu.len());

        // ξ_r from x₁ and W₁
        self.white(seed, 0, a);
        self.inverse.process_with_scratch(a, fft);
        for (x, &w) in a.iter_mut().zip(&self.w_real) {
            *x *= w;
        }
        self.forward.process_with_scratch(a, fft);
        for (o, x) in xi.iter_mut().zip(a.iter()).take(n) {
            *o = Complex64::new(x.re * self.scale, 0.0);
        }

        // x₂ and x₃ in the frequency domain
        self.white(seed, 1, b);
        self.inverse.process_with_scratch(b, fft);
        self.white(seed, 2, c);
        self.inverse.process_with_scratch(c, fft);

        // Each forward transform carries two real outputs, one in the real
        // and one in the imaginary part: (ξ_c^R, ν^R) and (ξ_c^I, ν^I).
        let i = Complex64::new(0.0, 1.0);
        for k in 0..a.len() {
            let w = self.w2[k];
            a[k] = w * b[k] - i * w.conj() * c[k];
            let x3 = c[k];
            c[k] = w * x3 - i * w.conj() * b[k];
        }
        self.forward.process_with_scratch(a, fft);
        self.forward.process_with_scratch(c, fft);
        for t in 0..n {
            let xr = a[t].re * self.scale;
            let nr = a[t].im * self.scale;
            let xim = c[t].re * self.scale;
            let ni = c[t].im * self.scale;
            xi[t] += Complex64::new(xr, xim);
            nu[t] = Complex64::new(nr, ni);
        }
    }

    pub fn generate(&self, seed: u64) -> NoiseSample {
        let n = self.grid.n_steps;
        let mut scratch = self.scratch();
        match self.kind {
            NoiseKind::Sled => {
                let mut xi = vec![0.0; n];
                self.fill_sled(seed, &mut xi, &mut scratch);
                NoiseSample {
                    xi: NoiseValues::Real(xi),
                    nu: None,
                    seed,
                    grid: self.grid,
                }
            }
            NoiseKind::Sln => {
                let zero = Complex64::new(0.0, 0.0);
                let mut xi = vec![zero; n];
                let mut nu = vec![zero; n];
                self.fill_sln(seed, &mut xi, &mut nu, &mut scratch);
                NoiseSample {
                    xi: NoiseValues::Complex(xi),
                    nu: Some(nu),
                    seed,
                    grid: self.grid,
                }
            }
        }
    }

    /// Exact covariance `⟨ξ(t+τ)ξ(t)⟩` of the discrete construction.
    pub fn discrete_covariance(&self, lag: isize) -> f64 {
        let tau = lag as f64 * self.grid.h;
        let m = self.grid.fft_len();
        let sum: f64 = (0..m)
            .map(|k| self.w_real[k] * self.w_real[k] * (self.grid.omega(k) * tau).cos())
            .sum();
        sum / (m as f64 * self.grid.h)
    }

    /// Exact `⟨ξ(t+τ)ν(t)⟩` of the discrete construction (SLN only).
    pub fn discrete_cross_covariance(&self, lag: isize) -> Complex64 {
        let tau = lag as f64 * self.grid.h;
        let m = self.grid.fft_len();
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..self.w2.len() {
            let w = self.w2[k];
            sum += w * w * Complex64::from_polar(1.0, -self.grid.omega(k) * tau);
        }
        let i = Complex64::new(0.0, 1.0);
        -2.0 * i * sum / (m as f64 * self.grid.h)
    }

    /// SHA-256 over the window arrays, identifying the target spectrum.
    pub fn spectrum_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.w_real {
            hasher.update(w.to_le_bytes());
        }
        for w in &self.w2 {
            hasher.update(w.re.to_le_bytes());
            hasher.update(w.im.to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Writes `<stem>.bin` (little-endian `f64`) and a JSON sidecar
    /// `<stem>.json`. Complex series are stored as interleaved re/im pairs,
    /// `ξ` first, then `ν`.
    pub fn dump(&self, sample: &NoiseSample, stem: &Path) -> Result<()> {
        let mut bin = std::io::BufWriter::new(std::fs::File::create(stem.with_extension("bin"))?);
        let mut layout = Vec::new();
        match &sample.xi {
            NoiseValues::Real(v) => {
                layout.push("xi:f64");
                for x in v {
                    bin.write_all(&x.to_le_bytes())?;
                }
            }
            NoiseValues::Complex(v) => {
                layout.push("xi:c64");
                for x in v {
                    bin.write_all(&x.re.to_le_bytes())?;
                    bin.write_all(&x.im.to_le_bytes())?;
                }
            }
        }
        if let Some(nu) = &sample.nu {
            layout.push("nu:c64");
            for x in nu {
                bin.write_all(&x.re.to_le_bytes())?;
                bin.write_all(&x.im.to_le_bytes())?;
            }
        }
        bin.flush()?;
        let sidecar = serde_json::json!({
            "grid": sample.grid,
            "seed": sample.seed,
            "kind": self.kind,
            "length": sample.xi.len(),
            "layout": layout,
            "spectrum_sha256": self.spectrum_hash(),
        });
        std::fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))?,
        )?;
        Ok(())
    }
}

/// Which two-point function a validation run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlator {
    /// `⟨ξ(t+τ) ξ(t)⟩`
    XiXi,
    /// `⟨ξ(t+τ) ν(t)⟩`
    XiNu,
    /// `⟨ν(t+τ) ν(t)⟩`
    NuNu,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagEstimate {
    pub lag: isize,
    pub mean: [f64; 2],
    pub stderr: [f64; 2],
    pub target: [f64; 2],
    pub z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseReport {
    pub correlator: Correlator,
    pub reference: usize,
    pub n_samples: usize,
    pub lags: Vec<LagEstimate>,
    pub max_z: f64,
    pub z_threshold: f64,
    pub pass: bool,
}

fn z_score(delta: f64, se: f64) -> f64 {
    if se > 0.0 {
        delta.abs() / se
    } else if delta.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Estimates a two-point function at a fixed reference time for each lag
/// and compares it with `target`, lag by lag.
pub fn validate_noise(
    samples: &[NoiseSample],
    correlator: Correlator,
    reference: usize,
    lags: &[isize],
    target: &[Complex64],
    z_threshold: f64,
) -> Result<NoiseReport> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if lags.len() != target.len() {
        return Err(invalid("target", "one target value per lag is required"));
    }
    let n = samples.len() as f64;
    let mut out = Vec::with_capacity(lags.len());
    for (&lag, &goal) in lags.iter().zip(target) {
        let t = reference as isize + lag;
        if t < 0 || t as usize >= samples[0].xi.len() {
            return Err(invalid("lags", format!("lag {lag} leaves the sample")));
        }
        let t = t as usize;
        let mut sum = [0.0; 2];
        let mut sum_sq = [0.0; 2];
        for s in samples {
            let nu = |i: usize| -> Result<Complex64> {
                s.nu
                    .as_ref()
                    .map(|v| v[i])
                    .ok_or_else(|| invalid("samples", "correlator needs ν"))
            };
            let v = match correlator {
                Correlator::XiXi => s.xi.get(t) * s.xi.get(reference),
                Correlator::XiNu => s.xi.get(t) * nu(reference)?,
                Correlator::NuNu => nu(t)? * nu(reference)?,
            };
            for (p, x) in [v.re, v.im].into_iter().enumerate() {
                sum[p] += x;
                sum_sq[p] += x * x;
            }
        }
        let mut mean = [0.0; 2];
        let mut se = [0.0; 2];
        for p in 0..2 {
            mean[p] = sum[p] / n;
            let var = ((sum_sq[p] - n * mean[p] * mean[p]) / (n - 1.0)).max(0.0);
            se[p] = (var / n).sqrt();
        }
        let z = z_score(mean[0] - goal.re, se[0]).max(z_score(mean[1] - goal.im, se[1]));
        out.push(LagEstimate {
            lag,
            mean,
            stderr: se,
            target: [goal.re, goal.im],
            z,
        });
    }
    let max_z = out.iter().map(|l| l.z).fold(0.0, f64::max);
    Ok(NoiseReport {
        correlator,
        reference,
        n_samples: samples.len(),
        lags: out,
        max_z,
        z_threshold,
        pass: max_z < z_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-13);
        assert!((normal_quantile(1e-12) + 7.034_483_825_301_131).abs() < 1e-11);
        for (p, x) in [
            (0.005, -2.575_829_303_548_901),
            (0.025, -1.959_963_984_540_054_5),
            (0.145, -1.058_121_617_684_776_7),
            (0.3, -0.524_400_512_708_040_9),
        ] {
            assert!((normal_quantile(p) - x).abs() < 1e-14, "p={p}");
        }
        let a = normal_quantile(0.3);
        assert!((a + normal_quantile(0.7)).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_statrs_cdf() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        for i in 1..200 {
            let p = i as f64 / 200.0;
            // statrs evaluates the CDF through erfc, good to roughly 1e-11
            assert!((n.cdf(normal_quantile(p)) - p).abs() < 1e-10, "p={p}: {}", n.cdf(normal_quantile(p)) - p);
        }
    }

    #[test]
    fn grid_frequencies() {
        let g = NoiseGrid {
            h: 0.5,
            n_steps: 4,
            oversample: 2,
        };
        assert_eq!(g.fft_len(), 8);
        assert!((g.omega(1) - 2.0 * PI / 4.0).abs() < 1e-15);
        assert!((g.omega(7) + 2.0 * PI / 4.0).abs() < 1e-15);
        assert!(NoiseGrid::new(0.1, 6).validate().is_err());
    }

    #[test]
    fn zero_coupling_gives_zero_noise() {
        let bath = BathSpec::new(0.0, 50.0, 5.0, 1.0);
        let g = NoiseGenerator::sled(&bath, NoiseGrid::new(1.0 / 128.0, 256)).unwrap();
        match g.generate(3).xi {
            NoiseValues::Real(v) => assert!(v.iter().all(|&x| x == 0.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        let g = NoiseGenerator::sln(&bath, NoiseGrid::new(1.0 / 128.0, 256)).unwrap();
        assert_eq!(g.generate(11), g.generate(11));
        assert_ne!(g.generate(11), g.generate(12));
    }

    #[test]
    fn w1_is_real_and_even() {
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        for &w in &[0.1, 1.0, 30.0] {
            let a = window_w1(&bath, w).unwrap();
            let b = window_w1(&bath, -w).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.im, 0.0);
            let modulus = (bath.power_spectrum(w) - 0.5 * bath.j(w)).abs();
            assert!((a.norm_sqr() - modulus).abs() < 1e-12 * modulus);
        }
    }

    #[test]
    fn w2_is_hermitian_symmetric() {
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        for &w in &[0.01, 2.0, 49.0, 51.0, 400.0] {
            let a = window_w2(&bath, w).unwrap();
            let b = window_w2(&bath, -w).unwrap();
            assert!((a - b.conj()).norm() < 1e-15);
            let chi = bath.response_function(w).unwrap();
            assert!((a * a * 2.0 - chi).norm() < 1e-12 * chi.norm());
        }
    }

    #[test]
    fn discrete_cross_covariance_is_causal_in_the_continuum_sense() {
        // ⟨ξ(t+τ)ν(t)⟩ should be i·Im L(τ) for τ > 0 and vanish for τ < 0.
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        // lags inside a few 1/ω_c; beyond that Im L is smaller than the
        // ringing from truncating the spectrum at the Nyquist frequency
        let grid = NoiseGrid::new(1.0 / 256.0, 8192);
        let g = NoiseGenerator::sln(&bath, grid).unwrap();
        for &lag in &[4isize, 8, 16] {
            let c = g.discrete_cross_covariance(lag);
            let l = bath.correlation_function(lag as f64 * grid.h).unwrap();
            assert!(c.re.abs() < 1e-3 * l.im.abs());
            assert!((c.im / l.im - 1.0).abs() < 0.02, "lag {lag}: {} vs {}", c.im, l.im);
            let back = g.discrete_cross_covariance(-lag);
            assert!(back.norm() < 0.02 * l.im.abs(), "lag -{lag}: {back}");
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        let g = NoiseGenerator::sled(&bath, NoiseGrid::new(1.0 / 128.0, 64)).unwrap();
        let s = vec![g.generate(1)];
        assert!(matches!(
            validate_noise(&s, Correlator::XiXi, 0, &[0], &[Complex64::new(0.0, 0.0)], 4.0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn dump_writes_binary_and_sidecar() {
        let bath = BathSpec::new(0.2, 50.0, 5.0, 1.0);
        let g = NoiseGenerator::sln(&bath, NoiseGrid::new(1.0 / 128.0, 64)).unwrap();
        let s = g.generate(5);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("sample");
        g.dump(&s, &stem).unwrap();
        let bytes = std::fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(bytes.len(), 64 * 16 * 2);
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
                .unwrap();
        assert_eq!(meta["seed"], 5);
        assert_eq!(meta["spectrum_sha256"].as_str().unwrap().len(), 64);
    }
}
