//! Complex digamma and trigamma.
//!
//! Both use upward recurrence until `Re z ≥ 10`, then the Stirling-type
//! asymptotic series. The recurrence alone handles the left half plane, so
//! no reflection formula is needed away from the poles at `0, −1, −2, …`.

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

// B_{2k} for k = 1..=8.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

const SHIFT: f64 = 10.0;

pub fn digamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < SHIFT {
        acc -= z.inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        series += pow * (b / n);
        pow *= inv2;
    }
    acc + z.ln() - 0.5 * inv - series
}

pub fn trigamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < SHIFT {
        acc += (z * z).inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2 * inv;
    for b in BERNOULLI.iter() {
        series += pow * *b;
        pow *= inv2;
    }
    acc + inv + 0.5 * inv2 + series
}
