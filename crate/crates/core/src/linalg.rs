//! Superoperators and the exponential action used by every propagator.
//!
//! Density matrices are vectorised column-major, so that
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`. Hermiticity-preserving generators can
//! additionally be expressed in a real basis of `N²` components
//! (`ρ_kk`, `Re ρ_jk`, `Im ρ_jk` for `j < k`), which halves the arithmetic
//! of the dissipative propagator.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `vec(ρ)` in column-major order.
pub fn vectorize(rho: &CMat) -> Vec<Complex64> {
    rho.as_slice().to_vec()
}

pub fn unvectorize(v: &[Complex64], n: usize) -> CMat {
    CMat::from_column_slice(n, n, v)
}

/// Superoperator of `ρ ↦ A ρ`.
pub fn left(a: &CMat) -> CMat {
    CMat::identity(a.nrows(), a.nrows()).kronecker(a)
}

/// Superoperator of `ρ ↦ ρ B`.
pub fn right(b: &CMat) -> CMat {
    b.transpose().kronecker(&CMat::identity(b.nrows(), b.nrows()))
}

/// Superoperator of `ρ ↦ [A, ρ]`.
pub fn commutator(a: &CMat) -> CMat {
    left(a) - right(a)
}

/// Superoperator of `ρ ↦ {A, ρ}`.
pub fn anticommutator(a: &CMat) -> CMat {
    left(a) + right(a)
}

/// Lindblad dissipator `D[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn dissipator(l: &CMat) -> CMat {
    let ld = l.adjoint();
    let ldl = &ld * l;
    let sandwich = ld.transpose().kronecker(l);
    sandwich - anticommutator(&ldl).map(|x| x * 0.5)
}

/// Linear map between `vec(ρ)` and the real Hermitian coordinates.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    n: usize,
    to_complex: CMat,
    to_real: CMat,
}

impl HermitianBasis {
    pub fn new(n: usize) -> Self {
        let d = n * n;
        let mut t = CMat::zeros(d, d);
        let mut tinv = CMat::zeros(d, d);
        let idx = |j: usize, k: usize| j + k * n;
        let half = Complex64::new(0.5, 0.0);
        for k in 0..n {
            t[(idx(k, k), k)] = Complex64::new(1.0, 0.0);
            tinv[(k, idx(k, k))] = Complex64::new(1.0, 0.0);
        }
        let mut col = n;
        for j in 0..n {
            for k in j + 1..n {
                // real part
                t[(idx(j, k), col)] = Complex64::new(1.0, 0.0);
                t[(idx(k, j), col)] = Complex64::new(1.0, 0.0);
                tinv[(col, idx(j, k))] = half;
                tinv[(col, idx(k, j))] = half;
                // imaginary part
                t[(idx(j, k), col + 1)] = I;
                t[(idx(k, j), col + 1)] = -I;
                tinv[(col + 1, idx(j, k))] = -I * 0.5;
                tinv[(col + 1, idx(k, j))] = I * 0.5;
                col += 2;
            }
        }
        Self {
            n,
            to_complex: t,
            to_real: tinv,
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    /// Real representation `T⁻¹ 𝓛 T` of a Hermiticity-preserving superoperator.
    pub fn real_superoperator(&self, l: &CMat) -> RMat {
        (&self.to_real * l * &self.to_complex).map(|z| z.re)
    }

    pub fn real_coordinates(&self, rho: &CMat) -> Vec<f64> {
        let v = DVector::from_column_slice(rho.as_slice());
        (&self.to_real * v).iter().map(|z| z.re).collect()
    }

    pub fn density_matrix(&self, r: &[f64]) -> CMat {
        let v = DVector::from_iterator(r.len(), r.iter().map(|&x| Complex64::new(x, 0.0)));
        let out = &self.to_complex * v;
        unvectorize(out.as_slice(), self.n)
    }

    /// Real weights `w` with `Re Σ c_i vec(ρ)_i = w · r` for Hermitian `ρ`.
    pub fn real_functional(&self, c: &[Complex64]) -> Vec<f64> {
        let row = DMatrix::from_row_slice(1, c.len(), c);
        (row * &self.to_complex).iter().map(|z| z.re).collect()
    }
}

/// Row-major dense matrix with a cached 1-norm, the operand of [`expmv`].
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> Dense<T> {
    pub fn from_matrix(m: &DMatrix<T>) -> Self {
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(m[(i, j)]);
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    /// `self = a + c·b`.
    pub fn assign_combination(&mut self, a: &Self, c: T, b: &Self) {
        for ((o, &x), &y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *o = x + c * y;
        }
    }

    /// `self = a + Σ c_i b_i`.
    pub fn assign_sum(&mut self, a: &Self, terms: &[(T, &Self)]) {
        self.data.copy_from_slice(&a.data);
        for (c, b) in terms {
            for (o, &y) in self.data.iter_mut().zip(&b.data) {
                *o += *c * y;
            }
        }
    }

    pub fn norm1(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).map(|i| self.data[i * d + j].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[inline]
    fn apply(&self, x: &[T], out: &mut [T]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).fold(T::zero(), |acc, (&m, &v)| acc + m * v);
        }
    }
}

/// Scratch space for [`expmv`], sized for one generator dimension.
#[derive(Debug, Clone)]
pub struct ExpmvWork<T> {
    term: Vec<T>,
    next: Vec<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> ExpmvWork<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            term: vec![T::zero(); dim],
            next: vec![T::zero(); dim],
        }
    }
}

/// Overwrites `v` with `exp(t·M) v` by a truncated Taylor series.
///
/// The interval is cut into `⌈t‖M‖₁⌉` substeps, so each substep has
/// `s = dt‖M‖₁ ≤ 1` and the series is truncated at the first order `K` with
/// `s^K/K! ≤ ε`. That bound holds for every vector, so no per-term norm
/// checks are needed.
pub fn expmv<T: ComplexField<RealField = f64> + Copy>(
    m: &Dense<T>,
    t: f64,
    v: &mut [T],
    work: &mut ExpmvWork<T>,
) {
    let norm = m.norm1();
    let scaled = t.abs() * norm;
    let substeps = scaled.ceil().max(1.0) as usize;
    let dt = t / substeps as f64;
    let s = dt.abs() * norm;
    let mut order = 0;
    let mut bound = 1.0;
    while bound > f64::EPSILON && order < 64 {
        order += 1;
        bound *= s / order as f64;
    }
    match m.dim {
        4 => taylor_fixed::<T, 4>(&m.data, dt, order, substeps, v),
        9 => taylor_fixed::<T, 9>(&m.data, dt, order, substeps, v),
        16 => taylor_fixed::<T, 16>(&m.data, dt, order, substeps, v),
        _ => {
            for _ in 0..substeps {
                work.term.copy_from_slice(v);
                for k in 1..=order {
                    m.apply(&work.term, &mut work.next);
                    let factor = T::from_real(dt / k as f64);
                    for ((term, &nx), x) in work.term.iter_mut().zip(&work.next).zip(v.iter_mut()) {
                        *term = nx * factor;
                        *x += *term;
                    }
                }
            }
        }
    }
}

/// The Taylor loop of [`expmv`] on stack arrays, so small generators (two
/// and three levels, or the complex two-level SLN generator) get fully
/// unrolled products.
#[inline]
fn taylor_fixed<T: ComplexField<RealField = f64> + Copy, const D: usize>(
    m: &[T],
    dt: f64,
    order: usize,
    substeps: usize,
    v: &mut [T],
) {
    let (rows, _) = m.as_chunks::<D>();
    let mut x: [T; D] = std::array::from_fn(|i| v[i]);
    for _ in 0..substeps {
        let mut term = x;
        for k in 1..=order {
            let factor = T::from_real(dt / k as f64);
            term = std::array::from_fn(|i| {
                rows[i].iter().zip(&term).fold(T::zero(), |acc, (&a, &b)| acc + a * b) * factor
            });
            for (xi, &ti) in x.iter_mut().zip(&term) {
                *xi += ti;
            }
        }
    }
    v.copy_from_slice(&x);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> CMat {
        // small deterministic LCG; adequate for structural tests
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn vectorisation_identity() {
        let a = random_matrix(3, 1);
        let b = random_matrix(3, 2);
        let rho = random_matrix(3, 3);
        let lhs = vectorize(&(&a * &rho * &b));
        let sup = right(&b) * left(&a);
        let rhs = &sup * DVector::from_column_slice(&vectorize(&rho));
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn hermitian_basis_round_trip() {
        let basis = HermitianBasis::new(3);
        let a = random_matrix(3, 4);
        let rho = &a + a.adjoint();
        let r = basis.real_coordinates(&rho);
        let back = basis.density_matrix(&r);
        assert!((back - rho).norm() < 1e-13);
    }

    #[test]
    fn real_superoperator_matches_complex_action() {
        let n = 3;
        let basis = HermitianBasis::new(n);
        let h = {
            let a = random_matrix(n, 5);
            &a + a.adjoint()
        };
        let l = commutator(&h).map(|z| -I * z) + dissipator(&random_matrix(n, 6));
        let lr = basis.real_superoperator(&l);
        let rho = {
            let a = random_matrix(n, 7);
            &a * a.adjoint()
        };
        let r = DVector::from_vec(basis.real_coordinates(&rho));
        let out_real = basis.density_matrix((&lr * r).as_slice());
        let out_c = unvectorize(
            (&l * DVector::from_column_slice(&vectorize(&rho))).as_slice(),
            n,
        );
        assert!((out_real - out_c).norm() < 1e-12);
    }

    #[test]
    fn expmv_matches_dense_exponential() {
        let n = 2;
        let h = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(1.0, 0.0)]);
        let l = commutator(&h).map(|z| -I * z)
            + dissipator(&CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        for &t in &[0.01, 0.7, 13.0] {
            let exact = (l.map(|z| z * t)).exp();
            let v0: Vec<Complex64> = vec![c(0.2, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.8, 0.0)];
            let expect = &exact * DVector::from_column_slice(&v0);
            let mut v = v0.clone();
            let dense = Dense::from_matrix(&l);
            let mut work = ExpmvWork::new(n * n);
            expmv(&dense, t, &mut v, &mut work);
            for (x, y) in v.iter().zip(expect.iter()) {
                assert!((x - y).norm() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn real_expmv_preserves_trace_of_lindbladian() {
        let basis = HermitianBasis::new(2);
        let l = dissipator(&CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        let lr = Dense::from_matrix(&basis.real_superoperator(&l));
        let mut r = vec![0.0, 1.0, 0.0, 0.0];
        let mut work = ExpmvWork::new(4);
        expmv(&lr, 2.0, &mut r, &mut work);
        assert!((r[0] + r[1] - 1.0).abs() < 1e-14);
        assert!((r[1] - (-2.0f64).exp()).abs() < 1e-13);
    }
}
