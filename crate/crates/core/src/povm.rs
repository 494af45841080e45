//! Finite POVMs: validation, seeded random construction, informationally
//! complete frames and qubit projective measurements.

use crate::error::{Error, Result};
use crate::matkernel::{eigh, psd_inv_sqrt, Matrix, C64};
use crate::random::{derive_seed, random_ginibre, random_ket, seeded};

/// Absolute tolerance on `‖Σ E − I‖`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Elements may have eigenvalues down to `-PSD_ELEMENT_TOL`.
pub const PSD_ELEMENT_TOL: f64 = 1e-9;
pub const IC_MAX_RETRIES: u64 = 16;

/// A finite POVM. Outcome labels are element indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<Matrix>,
}

/// Diagnostic returned by [`validate_povm`].
#[derive(Clone, Debug, PartialEq)]
pub struct PovmReport {
    /// Smallest eigenvalue over all elements.
    pub min_eigenvalue: f64,
    /// Spectral norm of `Σ E − I`.
    pub completeness_residual: f64,
    pub max_hermiticity_error: f64,
}

impl PovmReport {
    pub fn is_ok(&self) -> bool {
        self.is_ok_within(COMPLETENESS_TOL)
    }

    pub fn is_ok_within(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -PSD_ELEMENT_TOL.max(tol)
            && self.completeness_residual <= tol
            && self.max_hermiticity_error <= 1e-12_f64.max(tol)
    }
}

impl Povm {
    /// Validates and wraps a list of elements.
    pub fn new(elements: Vec<Matrix>) -> Result<Self> {
        let p = Self::from_elements_unchecked(elements)?;
        let report = validate_povm(&p);
        if !report.is_ok() {
            return Err(Error::InvalidPovm {
                completeness: report.completeness_residual,
                min_eigenvalue: report.min_eigenvalue,
            });
        }
        Ok(p)
    }

    /// Wraps elements after checking only shapes. Use [`validate_povm`] for diagnostics.
    pub fn from_elements_unchecked(elements: Vec<Matrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("a POVM needs at least one element".into()));
        };
        let dim = first.dim();
        if dim == 0 || elements.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch("POVM elements differ in dimension".into()));
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<Matrix> {
        self.elements
    }

    /// Coarse mixture: pick one of `povms` uniformly and measure it, keeping the
    /// label of every element. The result has `Σ len` outcomes.
    pub fn mixture(povms: &[Povm]) -> Result<Self> {
        if povms.is_empty() {
            return Err(Error::InvalidArgument("empty mixture".into()));
        }
        let w = 1.0 / povms.len() as f64;
        let elements = povms.iter().flat_map(|p| p.elements.iter().map(|e| e.scale_real(w))).collect();
        Self::from_elements_unchecked(elements)
    }

    /// Embeds the POVM into dimension `d ≥ dim` by zero blocks, assigning the
    /// complement of the original space to outcome 0 so completeness survives.
    pub fn padded(&self, d: usize) -> Result<Self> {
        if d < self.dim {
            return Err(Error::DimensionMismatch(format!("cannot pad {} down to {d}", self.dim)));
        }
        let n = self.dim;
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(k, e)| {
                Matrix::from_fn(d, |i, j| {
                    if i < n && j < n {
                        e[(i, j)]
                    } else if k == 0 && i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Self::from_elements_unchecked(elements)
    }
}

/// Reports the worst PSD violation and the completeness residual.
pub fn validate_povm(p: &Povm) -> PovmReport {
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_hermiticity_error: f64 = 0.0;
    let mut sum = Matrix::zeros(p.dim);
    for e in &p.elements {
        max_hermiticity_error = max_hermiticity_error.max(e.hermiticity_error());
        let h = e.hermitian_part();
        let min = eigh(&h).map(|s| s.min()).unwrap_or(f64::NEG_INFINITY);
        min_eigenvalue = min_eigenvalue.min(min);
        sum = &sum + &h;
    }
    let residual = &sum - &Matrix::identity(p.dim);
    let completeness_residual = eigh(&residual.hermitian_part()).map(|e| e.norm()).unwrap_or(f64::INFINITY);
    PovmReport { min_eigenvalue, completeness_residual, max_hermiticity_error }
}

/// Normalizes positive operators `P_i` to `S^{-1/2} P_i S^{-1/2}` with `S = Σ P_i`.
fn normalize_to_povm(positives: Vec<Matrix>) -> Result<Povm> {
    let d = positives[0].dim();
    let mut s = Matrix::zeros(d);
    for p in &positives {
        s = &s + p;
    }
    let s_inv_half = psd_inv_sqrt(&s.hermitian_part(), 0.0)?;
    let elements = positives.iter().map(|p| (&(&s_inv_half * p) * &s_inv_half).hermitian_part()).collect();
    Povm::from_elements_unchecked(elements)
}

/// Random POVM with `k` full-rank elements, deterministic in `seed`.
pub fn random_povm(d: usize, k: usize, seed: u64) -> Result<Povm> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument("random_povm needs d >= 1 and k >= 1".into()));
    }
    let mut rng = seeded(seed);
    let positives = (0..k)
        .map(|_| {
            let g = random_ginibre(d, &mut rng);
            &g.dagger() * &g
        })
        .collect();
    normalize_to_povm(positives)
}

/// Rank and conditioning of the Gram matrix `G[i][j] = tr(E_i E_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub rank: usize,
    /// Ratio of the largest to the `d²`-th largest Gram eigenvalue; infinite when rank < `d²`.
    pub condition_number: f64,
}

impl FrameReport {
    pub fn is_informationally_complete(&self, d: usize) -> bool {
        self.rank == d * d
    }
}

pub fn frame_gram(p: &Povm) -> Matrix {
    let k = p.len();
    Matrix::from_fn(k, |i, j| C64::new(p.elements[i].trace_product(&p.elements[j]).re, 0.0))
}

pub fn frame_report(p: &Povm) -> Result<FrameReport> {
    let spectrum = eigh(&frame_gram(p))?;
    let top = spectrum.max().max(0.0);
    let rank = spectrum.values.iter().filter(|&&v| v > 1e-10 * top).count();
    let need = p.dim * p.dim;
    let condition_number = if rank >= need && need <= spectrum.values.len() {
        top / spectrum.values[need - 1]
    } else {
        f64::INFINITY
    };
    Ok(FrameReport { rank, condition_number })
}

/// Fails with `FrameSingular` unless the POVM spans all Hermitian matrices.
pub fn require_informationally_complete(p: &Povm) -> Result<FrameReport> {
    let report = frame_report(p)?;
    if !report.is_informationally_complete(p.dim) {
        return Err(Error::FrameSingular { rank: report.rank, required: p.dim * p.dim });
    }
    Ok(report)
}

/// Informationally complete POVM with exactly `d²` elements.
///
/// `d = 2` gives the tetrahedral POVM (independent of `seed`). Larger `d` uses
/// random rank-one elements, normalized as in [`random_povm`], redrawn until
/// the frame is invertible.
pub fn ic_povm(d: usize, seed: u64) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidArgument("ic_povm needs d >= 2".into()));
    }
    if d == 2 {
        return Ok(tetrahedral_povm());
    }
    let mut last = FrameReport { rank: 0, condition_number: f64::INFINITY };
    for attempt in 0..IC_MAX_RETRIES {
        let mut rng = seeded(derive_seed(seed, attempt));
        let positives = (0..d * d)
            .map(|_| {
                let g = random_ket(d, &mut rng);
                Matrix::projector(&g)
            })
            .collect();
        let povm = normalize_to_povm(positives)?;
        last = frame_report(&povm)?;
        if last.is_informationally_complete(d) {
            return Ok(povm);
        }
    }
    Err(Error::FrameSingular { rank: last.rank, required: d * d })
}

/// `E_i = (I + s_i·σ)/4` for the vertices `s_i` of a regular tetrahedron.
pub fn tetrahedral_povm() -> Povm {
    let r2 = 2f64.sqrt();
    let vertices = [
        [0.0, 0.0, 1.0],
        [2.0 * r2 / 3.0, 0.0, -1.0 / 3.0],
        [-r2 / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-r2 / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
    ];
    let elements = vertices.iter().map(|s| bloch_operator(s, 0.25)).collect();
    Povm { dim: 2, elements }
}

/// `weight · (I + n·σ)`
fn bloch_operator(n: &[f64; 3], weight: f64) -> Matrix {
    let (x, y, z) = (n[0], n[1], n[2]);
    Matrix::from_fn(2, |i, j| {
        let v = match (i, j) {
            (0, 0) => C64::new(1.0 + z, 0.0),
            (1, 1) => C64::new(1.0 - z, 0.0),
            (0, 1) => C64::new(x, -y),
            _ => C64::new(x, y),
        };
        v * weight
    })
}

/// Two-outcome projective qubit measurement along the Bloch direction `(θ, φ)`.
/// Outcome 0 is the `+1` eigenprojector.
pub fn qubit_projective(theta: f64, phi: f64) -> Povm {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let m = [-n[0], -n[1], -n[2]];
    Povm { dim: 2, elements: vec![bloch_operator(&n, 0.5), bloch_operator(&m, 0.5)] }
}
