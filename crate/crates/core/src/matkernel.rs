//! Dense complex matrix kernel.
//!
//! Everything here works on small square matrices (dimension at most 32) stored
//! row-major. Transposition and conjugation always refer to the fixed
//! computational basis. The Hermitian eigensolver is a cyclic Jacobi method,
//! which needs no external LAPACK and is accurate to a few ulps at this scale.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance used for Hermiticity checks (scaled by the largest entry when it exceeds 1).
pub const HERMITIAN_ATOL: f64 = 1e-12;
/// Relative tolerance for declaring a matrix positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Largest supported dimension for the eigensolver.
pub const MAX_DIM: usize = 32 * 32;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major data. Fails unless `data.len()` is a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let n = (data.len() as f64).sqrt().round() as usize;
        if n * n != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &Ket, w: &Ket) -> Self {
        assert_eq!(v.dim(), w.dim(), "outer product of kets with different dimensions");
        Self::from_fn(v.dim(), |i, j| v[i] * w[j].conj())
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &Ket) -> Self {
        Self::outer(v, v)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> C64 {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= hermitian_tol(self)
    }

    /// `(A + A†) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        assert_eq!(self.n, v.dim());
        let n = self.n;
        Ket((0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect())
    }

    /// `⟨v|A|v⟩`, real part only (exact for Hermitian A).
    pub fn expectation(&self, v: &Ket) -> f64 {
        v.inner(&self.apply(v)).re
    }

    /// Block `(i, j)` of a matrix on `C^outer ⊗ C^inner`, i.e. `(⟨i| ⊗ 1) A (|j⟩ ⊗ 1)`.
    pub fn block(&self, inner: usize, i: usize, j: usize) -> Self {
        Self::from_fn(inner, |k, l| self[(i * inner + k, j * inner + l)])
    }
}

fn hermitian_tol(a: &Matrix) -> f64 {
    HERMITIAN_ATOL * a.max_abs().max(1.0)
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n, "matrix product dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n);
        Matrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n);
        Matrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(pub Vec<C64>);

impl Ket {
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![ZERO; d];
        v[i] = ONE;
        Ket(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Ket {
        let n = self.norm();
        Ket(self.0.iter().map(|z| z / n).collect())
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket(self.0.iter().flat_map(|a| other.0.iter().map(move |b| a * b)).collect())
    }
}

impl Index<usize> for Ket {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// Kronecker product: block `(i, j)` of the result is `A[i][j] · B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (na, nb) = (a.n, b.n);
    Matrix::from_fn(na * nb, |r, c| a[(r / nb, c / nb)] * b[(r % nb, c % nb)])
}

/// `tr((Q ⊗ R) W)` for `W` on `C^dq ⊗ C^dr`, computed without forming the Kronecker product.
pub fn trace_kron_product(q: &Matrix, r: &Matrix, w: &Matrix) -> C64 {
    let (dq, dr) = (q.n, r.n);
    assert_eq!(w.n, dq * dr, "operator dimension does not match local factors");
    let mut acc = ZERO;
    for i in 0..dq {
        for k in 0..dq {
            let qik = q[(i, k)];
            if qik == ZERO {
                continue;
            }
            for j in 0..dr {
                for l in 0..dr {
                    acc += qik * r[(j, l)] * w[(k * dr + l, i * dr + j)];
                }
            }
        }
    }
    acc
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn vector(&self, k: usize) -> Ket {
        let n = self.vectors.n;
        Ket((0..n).map(|i| self.vectors[(i, k)]).collect())
    }

    /// Eigenvector of the smallest eigenvalue.
    pub fn min_vector(&self) -> Ket {
        self.vector(self.values.len() - 1)
    }

    /// `V f(Λ) V†`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.vectors.n;
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        Matrix::from_fn(n, |i, j| {
            (0..n).map(|k| self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> Matrix {
        self.map_values(|v| v)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(a: &Matrix) -> Result<Eigh> {
    let n = a.n;
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionMismatch(format!("eigh supports 1..={MAX_DIM}, got {n}")));
    }
    let deviation = a.hermiticity_error();
    if deviation > hermitian_tol(a) {
        return Err(Error::NotHermitian { deviation });
    }
    let mut a = a.hermitian_part();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let skip = 1e-17 * scale;

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= skip || r == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = apq / r;
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = Matrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

/// Fails with `NotPsd` if the smallest eigenvalue is below `-tol · ‖A‖`.
pub fn check_psd(e: &Eigh, tol: f64) -> Result<()> {
    let min = e.min();
    if min < -tol * e.norm() {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Principal square root of a PSD matrix. Eigenvalues within `PSD_TOL · ‖A‖` below zero are clamped.
pub fn psd_sqrt(a: &Matrix) -> Result<Matrix> {
    psd_sqrt_with_tol(a, PSD_TOL)
}

pub fn psd_sqrt_with_tol(a: &Matrix, tol: f64) -> Result<Matrix> {
    let e = eigh(a)?;
    check_psd(&e, tol)?;
    Ok(e.map_values(|v| v.max(0.0).sqrt()))
}

/// `A^{-1/2}` for PSD `A`; any eigenvalue at or below `cutoff` is reported as `SingularM`.
pub fn psd_inv_sqrt(a: &Matrix, cutoff: f64) -> Result<Matrix> {
    let e = eigh(a)?;
    check_psd(&e, PSD_TOL)?;
    let min = e.min();
    if min <= cutoff {
        return Err(Error::SingularM { min_eigenvalue: min });
    }
    Ok(e.map_values(|v| 1.0 / v.sqrt()))
}

/// Which tensor factor of a bipartite operator to act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

fn check_bipartite(w: &Matrix, (da, db): (usize, usize)) -> Result<()> {
    if w.n != da * db {
        return Err(Error::DimensionMismatch(format!(
            "operator is {0}x{0}, local dims ({da}, {db})",
            w.n
        )));
    }
    Ok(())
}

/// Partial trace over the given factor of an operator on `C^da ⊗ C^db`.
pub fn partial_trace(w: &Matrix, dims: (usize, usize), side: Side) -> Result<Matrix> {
    check_bipartite(w, dims)?;
    let (da, db) = dims;
    Ok(match side {
        Side::B => Matrix::from_fn(da, |i, k| (0..db).map(|j| w[(i * db + j, k * db + j)]).sum()),
        Side::A => Matrix::from_fn(db, |j, l| (0..da).map(|i| w[(i * db + j, i * db + l)]).sum()),
    })
}

/// Partial transpose on the given factor, in the computational basis.
pub fn partial_transpose(w: &Matrix, dims: (usize, usize), side: Side) -> Result<Matrix> {
    check_bipartite(w, dims)?;
    let (_, db) = dims;
    Ok(Matrix::from_fn(w.n, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        match side {
            Side::B => w[(i * db + l, k * db + j)],
            Side::A => w[(k * db + j, i * db + l)],
        }
    }))
}

/// `(1/√d) Σᵢ |i⟩ ⊗ |i⟩`
pub fn max_entangled(d: usize) -> Ket {
    assert!(d >= 1, "dimension must be positive");
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = amp;
    }
    Ket(v)
}

/// SWAP operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> Matrix {
    Matrix::from_fn(d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (c / d, c % d);
        if i == l && j == k {
            ONE
        } else {
            ZERO
        }
    })
}

/// Pauli matrices `[σx, σy, σz]`.
pub fn paulis() -> [Matrix; 3] {
    let i = C64::new(0.0, 1.0);
    [
        Matrix::from_fn(2, |r, c| if r != c { ONE } else { ZERO }),
        Matrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => ZERO,
        }),
        Matrix::diag(&[1.0, -1.0]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_ginibre, random_hermitian, seeded};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identity_and_diagonal() {
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(2)), Matrix::identity(4));
        let k = kron(&Matrix::diag(&[1.0, 2.0]), &Matrix::diag(&[3.0, 4.0]));
        assert_eq!(k, Matrix::diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_sigma_x_sigma_z_entries() {
        let [sx, _, sz] = paulis();
        let k = kron(&sx, &sz);
        assert_eq!(k[(0, 2)], c(1.0));
        assert_eq!(k[(1, 3)], c(-1.0));
        assert_eq!(k[(0, 0)], c(0.0));
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = seeded(11);
        for d in [2, 3] {
            let (a, b, cc, dd) = (
                random_ginibre(d, &mut rng),
                random_ginibre(d, &mut rng),
                random_ginibre(d, &mut rng),
                random_ginibre(d, &mut rng),
            );
            let lhs = &kron(&a, &b) * &kron(&cc, &dd);
            let rhs = kron(&(&a * &cc), &(&b * &dd));
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn eigh_simple_spectra() {
        assert_eq!(eigh(&Matrix::identity(2)).unwrap().values, vec![1.0, 1.0]);
        assert_eq!(eigh(&paulis()[2]).unwrap().values, vec![1.0, -1.0]);
    }

    #[test]
    fn eigh_swap_spectrum() {
        let e = eigh(&swap(2)).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 1.0, 1.0, -1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut a = Matrix::identity(2);
        a[(0, 1)] = c(1.0);
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigh_reconstruction_random() {
        let mut rng = seeded(3);
        for d in [1, 2, 3, 5, 8, 16] {
            for _ in 0..5 {
                let a = random_hermitian(d, &mut rng);
                let e = eigh(&a).unwrap();
                let scale = e.norm().max(1e-300);
                assert!(e.reconstruct().max_abs_diff(&a) <= 1e-10 * scale, "d={d}");
                let gram = &e.vectors.dagger() * &e.vectors;
                assert!(gram.max_abs_diff(&Matrix::identity(d)) <= 1e-10);
                assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn psd_sqrt_cases() {
        assert!(psd_sqrt(&Matrix::identity(3)).unwrap().max_abs_diff(&Matrix::identity(3)) < 1e-14);
        let r = psd_sqrt(&Matrix::diag(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&Matrix::diag(&[2.0, 3.0])) < 1e-14);
        assert!(matches!(psd_sqrt(&Matrix::diag(&[1.0, -0.1])), Err(Error::NotPsd { .. })));
        // tiny negative eigenvalue is clamped
        let r = psd_sqrt(&Matrix::diag(&[1.0, -1e-12])).unwrap();
        assert!(r.max_abs_diff(&Matrix::diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn psd_sqrt_round_trip_random() {
        let mut rng = seeded(5);
        for k in 0..100 {
            let d = 1 + k % 6;
            let g = random_ginibre(d, &mut rng);
            let a = &g.dagger() * &g;
            let s = psd_sqrt(&a).unwrap();
            let norm = eigh(&a).unwrap().norm();
            assert!((&s * &s).max_abs_diff(&a) <= 1e-9 * norm);
        }
    }

    #[test]
    fn psd_inv_sqrt_cases() {
        let r = psd_inv_sqrt(&Matrix::identity(2), 1e-12).unwrap();
        assert!(r.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        let r = psd_inv_sqrt(&Matrix::diag(&[4.0, 1.0]), 1e-12).unwrap();
        assert!(r.max_abs_diff(&Matrix::diag(&[0.5, 1.0])) < 1e-14);
        let singular = Matrix::diag(&[2.0, 0.0]);
        assert!(matches!(psd_inv_sqrt(&singular, 1e-12), Err(Error::SingularM { .. })));
    }

    #[test]
    fn partial_trace_cases() {
        let mut rng = seeded(8);
        let a = random_ginibre(2, &mut rng);
        let b = random_ginibre(3, &mut rng);
        let t = partial_trace(&kron(&a, &b), (2, 3), Side::B).unwrap();
        assert!(t.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let t = partial_trace(&kron(&a, &b), (2, 3), Side::A).unwrap();
        assert!(t.max_abs_diff(&b.scale(a.trace())) < 1e-12);

        for d in 2..5 {
            let phi = Matrix::projector(&max_entangled(d));
            let t = partial_trace(&phi, (d, d), Side::B).unwrap();
            assert!(t.max_abs_diff(&Matrix::identity(d).scale_real(1.0 / d as f64)) < 1e-14);
        }
        let t = partial_trace(&swap(2).scale_real(0.5), (2, 2), Side::A).unwrap();
        assert!(t.max_abs_diff(&Matrix::identity(2).scale_real(0.5)) < 1e-14);
        assert!(partial_trace(&Matrix::identity(5), (2, 2), Side::A).is_err());
    }

    #[test]
    fn partial_trace_linear_and_trace_preserving() {
        let mut rng = seeded(9);
        for _ in 0..20 {
            let x = random_ginibre(6, &mut rng);
            let y = random_ginibre(6, &mut rng);
            for side in [Side::A, Side::B] {
                let tx = partial_trace(&x, (2, 3), side).unwrap();
                let ty = partial_trace(&y, (2, 3), side).unwrap();
                let txy = partial_trace(&(&x.scale_real(2.0) + &y), (2, 3), side).unwrap();
                assert!(txy.max_abs_diff(&(&tx.scale_real(2.0) + &ty)) < 1e-12);
                assert!((tx.trace() - x.trace()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_transpose_of_max_entangled_is_swap() {
        let phi = Matrix::projector(&max_entangled(3));
        let pt = partial_transpose(&phi, (3, 3), Side::B).unwrap();
        assert!(pt.max_abs_diff(&swap(3).scale_real(1.0 / 3.0)) < 1e-15);
        let pa = partial_transpose(&phi, (3, 3), Side::A).unwrap();
        assert!(pa.max_abs_diff(&pt) < 1e-15);
    }

    #[test]
    fn max_entangled_definition_and_norm() {
        let v = max_entangled(2);
        let a = 1.0 / 2f64.sqrt();
        assert_eq!(v.0, vec![c(a), c(0.0), c(0.0), c(a)]);
        for d in 2..=6 {
            assert!((max_entangled(d).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ripple_identity() {
        let mut rng = seeded(21);
        for d in [2, 3, 4] {
            let phi = max_entangled(d);
            let id = Matrix::identity(d);
            for _ in 0..100 {
                let a = random_ginibre(d, &mut rng);
                let lhs = kron(&a, &id).apply(&phi);
                let rhs = kron(&id, &a.transpose()).apply(&phi);
                let err = lhs.0.iter().zip(&rhs.0).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(err <= 1e-12);
            }
        }
    }

    #[test]
    fn trace_kron_product_matches_explicit() {
        let mut rng = seeded(4);
        let w = random_density(6, &mut rng);
        let q = random_hermitian(2, &mut rng);
        let r = random_hermitian(3, &mut rng);
        let direct = (&kron(&q, &r) * &w).trace();
        assert!((trace_kron_product(&q, &r, &w) - direct).norm() < 1e-13);
    }
}
