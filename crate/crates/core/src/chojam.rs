//! Choi–Jamiołkowski correspondence between bipartite operators and linear
//! matrix maps, the trace-duality adjoint, and the unital decomposition
//! `𝒲 = M^{1/2} W̃(·) M^{1/2}` with optional ε-regularization.

use crate::error::{Error, Result};
use crate::matkernel::{psd_inv_sqrt, Matrix, C64};
use crate::popt::PoptState;

/// Eigenvalue floor for inverting the image of the identity.
pub const INV_CUTOFF: f64 = 1e-10;
/// Tolerance on `‖W̃(I) − I‖`.
pub const UNITAL_TOL: f64 = 1e-8;

/// Linear map from `din × din` to `dout × dout` matrices, stored as the images
/// of the matrix units: `units[i * din + j] = 𝒲(|i⟩⟨j|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixMap {
    din: usize,
    dout: usize,
    units: Vec<Matrix>,
}

impl MatrixMap {
    pub fn from_units(din: usize, dout: usize, units: Vec<Matrix>) -> Result<Self> {
        if units.len() != din * din || units.iter().any(|u| u.dim() != dout) {
            return Err(Error::DimensionMismatch(format!(
                "need {} unit images of size {dout}",
                din * din
            )));
        }
        Ok(Self { din, dout, units })
    }

    pub fn from_fn(din: usize, dout: usize, f: impl Fn(&Matrix) -> Matrix) -> Self {
        let units = (0..din * din)
            .map(|k| {
                let mut e = Matrix::zeros(din);
                e[(k / din, k % din)] = C64::new(1.0, 0.0);
                f(&e)
            })
            .collect();
        Self { din, dout, units }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, Matrix::clone)
    }

    pub fn transpose_map(d: usize) -> Self {
        Self::from_fn(d, d, Matrix::transpose)
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn unit(&self, i: usize, j: usize) -> &Matrix {
        &self.units[i * self.din + j]
    }

    pub fn units(&self) -> &[Matrix] {
        &self.units
    }

    /// Largest violation of `𝒲(X†) = 𝒲(X)†`, i.e. of `units[j][i] = units[i][j]†`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.din {
            for j in i..self.din {
                worst = worst.max(self.unit(j, i).max_abs_diff(&self.unit(i, j).dagger()));
            }
        }
        worst
    }

    /// Applies `f` to every unit image.
    fn map_units(&self, f: impl Fn(&Matrix) -> Matrix) -> Self {
        Self { din: self.din, dout: self.dout, units: self.units.iter().map(f).collect() }
    }
}

/// `𝒲(|i⟩⟨j|) = d · (⟨i| ⊗ 1) W (|j⟩ ⊗ 1)`, so that `(1 ⊗ 𝒲)(|Φ⟩⟨Φ|) = W`.
pub fn map_from_popt(state: &PoptState) -> Result<MatrixMap> {
    let d = state.local_dim()?;
    map_from_operator(state.matrix(), d)
}

/// [`map_from_popt`] for a bare operator on `C^d ⊗ C^d`.
pub fn map_from_operator(w: &Matrix, d: usize) -> Result<MatrixMap> {
    if w.dim() != d * d {
        return Err(Error::DimensionMismatch(format!("{0}x{0} operator, local dim {d}", w.dim())));
    }
    let units = (0..d * d).map(|k| w.block(d, k / d, k % d).scale_real(d as f64)).collect();
    Ok(MatrixMap { din: d, dout: d, units })
}

/// `(1 ⊗ 𝒲)(|Φ⟩⟨Φ|) = (1/d) Σ_ij |i⟩⟨j| ⊗ 𝒲(|i⟩⟨j|)`
pub fn popt_from_map(m: &MatrixMap) -> Result<Matrix> {
    if m.din != m.dout {
        return Err(Error::DimensionMismatch(format!("map is {} -> {}", m.din, m.dout)));
    }
    let d = m.din;
    let scale = 1.0 / d as f64;
    Ok(Matrix::from_fn(d * d, |r, c| m.unit(r / d, c / d)[(r % d, c % d)] * scale))
}

/// `Σ_ij X[i][j] · 𝒲(|i⟩⟨j|)`
pub fn apply(m: &MatrixMap, x: &Matrix) -> Result<Matrix> {
    if x.dim() != m.din {
        return Err(Error::DimensionMismatch(format!("input {}, map expects {}", x.dim(), m.din)));
    }
    let mut out = Matrix::zeros(m.dout);
    for i in 0..m.din {
        for j in 0..m.din {
            let xij = x[(i, j)];
            if xij != C64::new(0.0, 0.0) {
                out = &out + &m.unit(i, j).scale(xij);
            }
        }
    }
    Ok(out)
}

/// Adjoint under the bilinear trace pairing: `tr(𝒲(X) Y) = tr(X 𝒲*(Y))`.
pub fn adjoint_apply(m: &MatrixMap, y: &Matrix) -> Result<Matrix> {
    if y.dim() != m.dout {
        return Err(Error::DimensionMismatch(format!("input {}, adjoint expects {}", y.dim(), m.dout)));
    }
    Ok(Matrix::from_fn(m.din, |j, i| m.unit(i, j).trace_product(y)))
}

/// `M = 𝒲(I)` split off from a unital map `W̃ = M^{-1/2} 𝒲 M^{-1/2}`.
#[derive(Clone, Debug)]
pub struct UnitalDecomposition {
    /// Image of the identity under the (possibly regularized) map.
    pub m: Matrix,
    pub wtilde: MatrixMap,
    /// Zero when `M` was invertible as given.
    pub epsilon: f64,
}

impl UnitalDecomposition {
    /// `‖W̃(I) − I‖` in max-entry norm.
    pub fn unitality_error(&self) -> f64 {
        let d = self.wtilde.din;
        apply(&self.wtilde, &Matrix::identity(d))
            .map(|w| w.max_abs_diff(&Matrix::identity(self.wtilde.dout)))
            .unwrap_or(f64::INFINITY)
    }
}

/// `𝒲_ε(X) = (1 − ε) 𝒲(X) + ε tr(X) I/d`
pub fn regularize(m: &MatrixMap, epsilon: f64) -> MatrixMap {
    let d = m.dout;
    let mut out = m.map_units(|u| u.scale_real(1.0 - epsilon));
    let noise = Matrix::identity(d).scale_real(epsilon / d as f64);
    for i in 0..m.din {
        let k = i * m.din + i;
        out.units[k] = &out.units[k] + &noise;
    }
    out
}

/// Splits `𝒲` into `M = 𝒲(I)` and the unital map `W̃ = M^{-1/2} 𝒲(·) M^{-1/2}`.
///
/// With `epsilon > 0` the map is first mixed with the completely depolarizing
/// map as in [`regularize`]. With `epsilon = 0` a singular `M` is an error.
pub fn unital_decompose(m: &MatrixMap, epsilon: f64) -> Result<UnitalDecomposition> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if m.din != m.dout {
        return Err(Error::DimensionMismatch(format!("map is {} -> {}", m.din, m.dout)));
    }
    let map = if epsilon > 0.0 { regularize(m, epsilon) } else { m.clone() };
    let image = apply(&map, &Matrix::identity(m.din))?.hermitian_part();
    let inv_half = psd_inv_sqrt(&image, INV_CUTOFF)?;
    let wtilde = map.map_units(|u| &(&inv_half * u) * &inv_half);
    let decomposition = UnitalDecomposition { m: image, wtilde, epsilon };
    let err = decomposition.unitality_error();
    if err > UNITAL_TOL {
        return Err(Error::InvalidArgument(format!("unital part misses identity by {err:e}")));
    }
    Ok(decomposition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::{eigh, kron, max_entangled, partial_trace, paulis, swap, Side};
    use crate::popt::{choi_of_transpose, from_quantum, EvidenceOptions};
    use crate::random::{random_density, random_ginibre, random_ket, seeded};

    fn opts() -> EvidenceOptions {
        EvidenceOptions { restarts: 8, ..EvidenceOptions::default() }
    }

    fn random_popt(d: usize, rng: &mut crate::random::SeededRng) -> Matrix {
        // Mix of a density matrix and the transpose Choi state: always POPT.
        let rho = random_density(d * d, rng);
        &rho.scale_real(0.5) + &swap(d).scale_real(0.5 / d as f64)
    }

    #[test]
    fn max_entangled_gives_identity_map() {
        let phi = Matrix::projector(&max_entangled(2));
        let s = from_quantum(&phi, (2, 2), &opts()).unwrap();
        let m = map_from_popt(&s).unwrap();
        let sx = paulis()[0].clone();
        assert!(apply(&m, &sx).unwrap().max_abs_diff(&sx) < 1e-12);
        assert!(m.max_abs_diff_units(&MatrixMap::identity(2)) < 1e-15);
    }

    #[test]
    fn swap_gives_transpose_map() {
        let m = map_from_popt(&choi_of_transpose(2, &opts()).unwrap()).unwrap();
        let mut e01 = Matrix::zeros(2);
        e01[(0, 1)] = C64::new(1.0, 0.0);
        assert!(apply(&m, &e01).unwrap().max_abs_diff(&e01.transpose()) < 1e-15);
    }

    #[test]
    fn product_state_map() {
        let mut rng = seeded(1);
        let d = 3;
        let (ra, rb) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let m = map_from_operator(&kron(&ra, &rb), d).unwrap();
        for _ in 0..10 {
            let x = random_ginibre(d, &mut rng);
            let want = rb.scale(x.trace_product(&ra.transpose()) * d as f64);
            assert!(apply(&m, &x).unwrap().max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn popt_from_standard_maps() {
        let w = popt_from_map(&MatrixMap::identity(2)).unwrap();
        assert!(w.max_abs_diff(&Matrix::projector(&max_entangled(2))) < 1e-15);
        let w = popt_from_map(&MatrixMap::transpose_map(2)).unwrap();
        assert!(w.max_abs_diff(&swap(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn choi_round_trips() {
        let mut rng = seeded(2);
        for d in [2, 3, 4] {
            for _ in 0..50 {
                let w = random_popt(d, &mut rng);
                let m = map_from_operator(&w, d).unwrap();
                assert!(popt_from_map(&m).unwrap().max_abs_diff(&w) <= 1e-11);
                let m2 = map_from_operator(&popt_from_map(&m).unwrap(), d).unwrap();
                assert!(m2.max_abs_diff_units(&m) <= 1e-11);
                assert!(m.hermiticity_error() <= 1e-10);
            }
        }
    }

    #[test]
    fn apply_standard_maps_and_linearity() {
        let mut rng = seeded(3);
        let x = random_ginibre(3, &mut rng);
        let y = random_ginibre(3, &mut rng);
        assert!(apply(&MatrixMap::identity(3), &x).unwrap().max_abs_diff(&x) < 1e-15);
        assert!(apply(&MatrixMap::transpose_map(3), &x).unwrap().max_abs_diff(&x.transpose()) < 1e-15);
        let m = map_from_operator(&random_popt(3, &mut rng), 3).unwrap();
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-2.0, 0.5));
        let lhs = apply(&m, &(&x.scale(a) + &y.scale(b))).unwrap();
        let rhs = &apply(&m, &x).unwrap().scale(a) + &apply(&m, &y).unwrap().scale(b);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        assert!(apply(&m, &Matrix::identity(2)).is_err());
    }

    #[test]
    fn adjoint_cases_and_duality() {
        let mut rng = seeded(4);
        let y = random_ginibre(2, &mut rng);
        assert!(adjoint_apply(&MatrixMap::identity(2), &y).unwrap().max_abs_diff(&y) < 1e-15);
        assert!(adjoint_apply(&MatrixMap::transpose_map(2), &y).unwrap().max_abs_diff(&y.transpose()) < 1e-15);
        for k in 0..100 {
            let d = 2 + k % 3;
            let units = (0..d * d).map(|_| random_ginibre(d, &mut rng)).collect();
            let m = MatrixMap::from_units(d, d, units).unwrap();
            let x = random_ginibre(d, &mut rng);
            let y = random_ginibre(d, &mut rng);
            let lhs = apply(&m, &x).unwrap().trace_product(&y);
            let rhs = x.trace_product(&adjoint_apply(&m, &y).unwrap());
            assert!((lhs - rhs).norm() <= 1e-11);
        }
    }

    #[test]
    fn positivity_transfers_to_the_map() {
        let mut rng = seeded(5);
        for d in [2, 3] {
            let m = map_from_operator(&random_popt(d, &mut rng), d).unwrap();
            for _ in 0..500 {
                let a = random_ket(d, &mut rng);
                let img = apply(&m, &Matrix::projector(&a)).unwrap();
                assert!(eigh(&img.hermitian_part()).unwrap().min() >= -1e-8);
            }
        }
    }

    #[test]
    fn image_of_identity_is_scaled_bob_marginal() {
        let mut rng = seeded(6);
        for d in [2, 3, 4] {
            let w = random_popt(d, &mut rng);
            let m = map_from_operator(&w, d).unwrap();
            let image = apply(&m, &Matrix::identity(d)).unwrap();
            let marginal = partial_trace(&w, (d, d), Side::A).unwrap().scale_real(d as f64);
            assert!(image.max_abs_diff(&marginal) <= 1e-11);
            assert!((image.trace().re / d as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unital_decompose_identity() {
        let u = unital_decompose(&MatrixMap::identity(3), 0.0).unwrap();
        assert!(u.m.max_abs_diff(&Matrix::identity(3)) < 1e-14);
        assert!(u.wtilde.max_abs_diff_units(&MatrixMap::identity(3)) < 1e-14);
        assert_eq!(u.epsilon, 0.0);
    }

    #[test]
    fn unital_decompose_product_state() {
        let mut rng = seeded(7);
        let d = 2;
        let (ra, rb) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let m = map_from_operator(&kron(&ra, &rb), d).unwrap();
        let u = unital_decompose(&m, 0.0).unwrap();
        assert!(u.m.max_abs_diff(&rb.scale_real(d as f64)) < 1e-12);
        for _ in 0..10 {
            let x = random_ginibre(d, &mut rng);
            let want = Matrix::identity(d).scale(x.trace_product(&ra.transpose()));
            assert!(apply(&u.wtilde, &x).unwrap().max_abs_diff(&want) < 1e-10);
        }
        assert!(u.unitality_error() <= UNITAL_TOL);
    }

    #[test]
    fn singular_image_needs_regularization() {
        let mut w = Matrix::zeros(4);
        w[(0, 0)] = C64::new(1.0, 0.0);
        let m = map_from_operator(&w, 2).unwrap();
        assert!(apply(&m, &Matrix::identity(2)).unwrap().max_abs_diff(&Matrix::diag(&[2.0, 0.0])) < 1e-15);
        assert!(matches!(unital_decompose(&m, 0.0), Err(Error::SingularM { .. })));
        let u = unital_decompose(&m, 1e-4).unwrap();
        assert!(u.unitality_error() <= 1e-8);
        assert!((u.m.trace().re / 2.0 - 1.0).abs() < 1e-12);
        assert_eq!(u.epsilon, 1e-4);
    }

    impl MatrixMap {
        fn max_abs_diff_units(&self, other: &MatrixMap) -> f64 {
            self.units.iter().zip(&other.units).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
        }
    }
}
