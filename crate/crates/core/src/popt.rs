//! States that are positive on pure tensors (POPT states).
//!
//! A POPT state is a trace-one Hermitian `W` on `C^d ⊗ C^d` with
//! `⟨αβ|W|αβ⟩ ≥ 0` for every product vector. Every density matrix qualifies;
//! `SWAP/d` and partial transposes of entangled states are POPT without being
//! PSD. Deciding pure-tensor positivity exactly is hard, so membership is
//! backed by evidence: a spectral check (a certificate when it succeeds) plus
//! a multi-restart see-saw search for a negative product expectation.

use crate::error::{Error, Result};
use crate::matkernel::{eigh, partial_transpose, swap, Ket, Matrix, Side, C64, PSD_TOL};
use crate::random::{derive_seed, random_ket, seeded};

/// Absolute tolerance on product expectations of a trace-one `W`.
pub const POP_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-9;
pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_ITERS: usize = 50;
/// A see-saw restart counts as converged once one full sweep moves its value by at most this.
pub const SEESAW_CONVERGED: f64 = 1e-10;

/// Knobs for the pure-tensor positivity search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvidenceOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub pop_tol: f64,
    pub psd_tol: f64,
}

impl Default for EvidenceOptions {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS, iters: DEFAULT_ITERS, seed: 0, pop_tol: POP_TOL, psd_tol: PSD_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityEvidence {
    pub min_product_value: f64,
    pub restarts: usize,
    pub certified_psd: bool,
}

/// A validated POPT state on `C^dA ⊗ C^dB`.
#[derive(Clone, Debug)]
pub struct PoptState {
    dims: (usize, usize),
    w: Matrix,
    evidence: PositivityEvidence,
}

impl PoptState {
    /// Checks Hermiticity, unit trace and pure-tensor positivity of `w`.
    ///
    /// Fails with `NotPoptWitnessed` when the see-saw finds a product vector
    /// with expectation below `-pop_tol`.
    pub fn new(w: Matrix, dims: (usize, usize), opts: &EvidenceOptions) -> Result<Self> {
        check_candidate(&w, dims)?;
        let w = w.hermitian_part();
        let spectrum = eigh(&w)?;
        let certified_psd = spectrum.min() >= -opts.psd_tol * spectrum.norm();
        let min = min_product_overlap(&w, dims, opts.restarts, opts.iters, opts.seed)?;
        if min.value < -opts.pop_tol {
            return Err(Error::NotPoptWitnessed { value: min.value, alpha: min.alpha, beta: min.beta });
        }
        let evidence = PositivityEvidence { min_product_value: min.value, restarts: opts.restarts, certified_psd };
        Ok(Self { dims, w, evidence })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Local dimension when `dA = dB`.
    pub fn local_dim(&self) -> Result<usize> {
        match self.dims {
            (a, b) if a == b => Ok(a),
            (a, b) => Err(Error::DimensionMismatch(format!("expected equal local dims, got ({a}, {b})"))),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn evidence(&self) -> &PositivityEvidence {
        &self.evidence
    }

    /// `ω(Q, R) = tr((Q ⊗ R) W)`
    pub fn omega(&self, q: &Matrix, r: &Matrix) -> f64 {
        crate::matkernel::trace_kron_product(q, r, &self.w).re
    }

    /// Zero-pads unequal local dimensions to `max(dA, dB)`.
    pub fn padded_to_square(&self, opts: &EvidenceOptions) -> Result<Self> {
        let (da, db) = self.dims;
        if da == db {
            return Ok(self.clone());
        }
        let d = da.max(db);
        let w = Matrix::from_fn(d * d, |r, c| {
            let (i, j) = (r / d, r % d);
            let (k, l) = (c / d, c % d);
            if i < da && k < da && j < db && l < db {
                self.w[(i * db + j, k * db + l)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(w, (d, d), opts)
    }
}

fn check_candidate(w: &Matrix, (da, db): (usize, usize)) -> Result<()> {
    if da == 0 || db == 0 || w.dim() != da * db {
        return Err(Error::DimensionMismatch(format!("{0}x{0} operator with dims ({da}, {db})", w.dim())));
    }
    if !w.is_hermitian() {
        return Err(Error::NotHermitian { deviation: w.hermiticity_error() });
    }
    let trace = w.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::BadTrace { trace });
    }
    Ok(())
}

/// Wraps a density matrix; the result is certified PSD.
pub fn from_quantum(rho: &Matrix, dims: (usize, usize), opts: &EvidenceOptions) -> Result<PoptState> {
    check_candidate(rho, dims)?;
    let spectrum = eigh(rho)?;
    if spectrum.min() < -opts.psd_tol * spectrum.norm() {
        return Err(Error::NotPsd { min_eigenvalue: spectrum.min() });
    }
    PoptState::new(rho.clone(), dims, opts)
}

/// `SWAP/d`, the Choi matrix of the transpose map.
pub fn choi_of_transpose(d: usize, opts: &EvidenceOptions) -> Result<PoptState> {
    if d < 2 {
        return Err(Error::InvalidArgument("choi_of_transpose needs d >= 2".into()));
    }
    PoptState::new(swap(d).scale_real(1.0 / d as f64), (d, d), opts)
}

/// Partial transpose of a density matrix on Bob's factor.
pub fn partial_transpose_family(rho: &Matrix, dims: (usize, usize), opts: &EvidenceOptions) -> Result<PoptState> {
    check_candidate(rho, dims)?;
    let spectrum = eigh(rho)?;
    if spectrum.min() < -opts.psd_tol * spectrum.norm() {
        return Err(Error::NotPsd { min_eigenvalue: spectrum.min() });
    }
    PoptState::new(partial_transpose(rho, dims, Side::B)?, dims, opts)
}

/// Result of the pure-tensor minimization.
#[derive(Clone, Debug)]
pub struct ProductMinimum {
    /// Smallest `⟨αβ|W|αβ⟩` found; an upper bound on the true minimum.
    pub value: f64,
    pub alpha: Ket,
    pub beta: Ket,
    /// Whether the restart that produced `value` stopped moving before its iteration budget ran out.
    pub converged: bool,
}

/// `(1 ⊗ ⟨β|) W (1 ⊗ |β⟩)`
pub fn contract_bob(w: &Matrix, (da, db): (usize, usize), beta: &Ket) -> Matrix {
    Matrix::from_fn(da, |i, k| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..db {
            for l in 0..db {
                acc += beta[j].conj() * w[(i * db + j, k * db + l)] * beta[l];
            }
        }
        acc
    })
    .hermitian_part()
}

/// `(⟨α| ⊗ 1) W (|α⟩ ⊗ 1)`
pub fn contract_alice(w: &Matrix, (da, db): (usize, usize), alpha: &Ket) -> Matrix {
    Matrix::from_fn(db, |j, l| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..da {
            for k in 0..da {
                acc += alpha[i].conj() * w[(i * db + j, k * db + l)] * alpha[k];
            }
        }
        acc
    })
    .hermitian_part()
}

/// Minimizes `⟨αβ|W|αβ⟩` over unit product vectors by alternating exact
/// minimization over each factor, from `restarts` random starting points.
///
/// Restart `r` draws its start from `derive_seed(seed, r)`, so the result for
/// `n` restarts is never worse than for any prefix of them.
pub fn min_product_overlap(
    w: &Matrix,
    dims: (usize, usize),
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<ProductMinimum> {
    let (da, db) = dims;
    if w.dim() != da * db {
        return Err(Error::DimensionMismatch(format!("{0}x{0} operator with dims ({da}, {db})", w.dim())));
    }
    if !w.is_hermitian() {
        return Err(Error::NotHermitian { deviation: w.hermiticity_error() });
    }
    let mut best: Option<ProductMinimum> = None;
    for r in 0..restarts.max(1) {
        let candidate = seesaw_restart(w, dims, iters.max(1), derive_seed(seed, r as u64))?;
        if best.as_ref().is_none_or(|b| candidate.value < b.value) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seesaw_restart(w: &Matrix, dims: (usize, usize), iters: usize, seed: u64) -> Result<ProductMinimum> {
    let mut rng = seeded(seed);
    let mut beta = random_ket(dims.1, &mut rng);
    let mut alpha = random_ket(dims.0, &mut rng);
    let mut value = f64::INFINITY;
    let mut converged = false;
    for _ in 0..iters {
        alpha = eigh(&contract_bob(w, dims, &beta))?.min_vector();
        let e = eigh(&contract_alice(w, dims, &alpha))?;
        beta = e.min_vector();
        let next = e.min();
        let step = value - next;
        value = next.min(value);
        if step.abs() <= SEESAW_CONVERGED {
            converged = true;
            break;
        }
    }
    Ok(ProductMinimum { value, alpha, beta, converged })
}

/// Outcome of [`classify`].
#[derive(Clone, Debug)]
pub enum Classification {
    /// `W` is PSD, hence a density matrix.
    Quantum { min_eigenvalue: f64 },
    /// Not PSD, but no negative product expectation was found.
    PoptBeyondQuantum { min_eigenvalue: f64, min_product_value: f64 },
    /// A product vector with negative expectation was found.
    NotPoptEvidence { value: f64, alpha: Ket, beta: Ket },
    /// Not PSD and the see-saw ran out of iterations before settling.
    Inconclusive { min_eigenvalue: f64, min_product_value: f64 },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Quantum { .. } => "quantum",
            Self::PoptBeyondQuantum { .. } => "popt_beyond_quantum",
            Self::NotPoptEvidence { .. } => "not_popt_evidence",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Sorts a trace-one Hermitian candidate into quantum, POPT-beyond-quantum,
/// witnessed non-POPT, or inconclusive.
pub fn classify(w: &Matrix, dims: (usize, usize), opts: &EvidenceOptions) -> Result<Classification> {
    check_candidate(w, dims)?;
    let w = w.hermitian_part();
    let spectrum = eigh(&w)?;
    let min_eigenvalue = spectrum.min();
    if min_eigenvalue >= -opts.psd_tol * spectrum.norm() {
        return Ok(Classification::Quantum { min_eigenvalue });
    }
    let min = min_product_overlap(&w, dims, opts.restarts, opts.iters, opts.seed)?;
    if min.value < -opts.pop_tol {
        return Ok(Classification::NotPoptEvidence { value: min.value, alpha: min.alpha, beta: min.beta });
    }
    if !min.converged {
        return Ok(Classification::Inconclusive { min_eigenvalue, min_product_value: min.value });
    }
    Ok(Classification::PoptBeyondQuantum { min_eigenvalue, min_product_value: min.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::{kron, max_entangled};
    use crate::random::{random_density, random_ket};

    fn opts() -> EvidenceOptions {
        EvidenceOptions::default()
    }

    fn isotropic(p: f64, d: usize) -> Matrix {
        let phi = Matrix::projector(&max_entangled(d));
        let noise = Matrix::identity(d * d).scale_real(1.0 / (d * d) as f64);
        &phi.scale_real(p) + &noise.scale_real(1.0 - p)
    }

    #[test]
    fn from_quantum_cases() {
        let mixed = Matrix::identity(4).scale_real(0.25);
        let s = from_quantum(&mixed, (2, 2), &opts()).unwrap();
        assert!(s.evidence().certified_psd);
        let phi = Matrix::projector(&max_entangled(2));
        assert!(from_quantum(&phi, (2, 2), &opts()).unwrap().evidence().certified_psd);
        let bad = Matrix::diag(&[0.6, 0.25, 0.25, -0.1]);
        assert!(matches!(from_quantum(&bad, (2, 2), &opts()), Err(Error::NotPsd { .. })));
        let short = Matrix::identity(4).scale_real(0.9 / 4.0);
        assert!(matches!(from_quantum(&short, (2, 2), &opts()), Err(Error::BadTrace { .. })));
    }

    #[test]
    fn swap_over_two_spectrum_and_trace() {
        let s = choi_of_transpose(2, &opts()).unwrap();
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-15);
        let e = eigh(s.matrix()).unwrap();
        for (got, want) in e.values.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(!s.evidence().certified_psd);
    }

    #[test]
    fn swap_product_expectation_is_overlap_squared() {
        let mut rng = seeded(1000);
        for d in [2, 3] {
            let w = swap(d).scale_real(1.0 / d as f64);
            for _ in 0..1000 / 2 {
                let a = random_ket(d, &mut rng);
                let b = random_ket(d, &mut rng);
                let v = w.expectation(&a.kron(&b));
                assert!((v - a.inner(&b).norm_sqr() / d as f64).abs() < 1e-14);
                assert!(v >= -1e-15);
            }
        }
    }

    #[test]
    fn partial_transpose_cases() {
        let phi = Matrix::projector(&max_entangled(2));
        let s = partial_transpose_family(&phi, (2, 2), &opts()).unwrap();
        assert!(s.matrix().max_abs_diff(&swap(2).scale_real(0.5)) < 1e-15);

        let mut rng = seeded(2);
        let (ra, rb) = (random_density(2, &mut rng), random_density(2, &mut rng));
        let s = partial_transpose_family(&kron(&ra, &rb), (2, 2), &opts()).unwrap();
        assert!(s.matrix().max_abs_diff(&kron(&ra, &rb.transpose())) < 1e-15);
        assert!(s.evidence().certified_psd);

        // Isotropic states are NPT above p = 1/(d+1) = 1/3; at p = 3/4 the smallest
        // eigenvalue of the partial transpose is (1 - p)/4 - p/2 = -5/16.
        let s = partial_transpose_family(&isotropic(0.75, 2), (2, 2), &opts()).unwrap();
        let min = eigh(s.matrix()).unwrap().min();
        assert!((min + 5.0 / 16.0).abs() < 1e-14);
        assert!(!s.evidence().certified_psd);
    }

    #[test]
    fn min_product_overlap_bounds() {
        let mut rng = seeded(3);
        let rho = random_density(4, &mut rng);
        let m = min_product_overlap(&rho, (2, 2), 16, 50, 1).unwrap();
        let lmin = eigh(&rho).unwrap().min();
        assert!(m.value >= 0.0 && m.value >= lmin - 1e-10);

        let m = min_product_overlap(&swap(2).scale_real(0.5), (2, 2), 16, 50, 1).unwrap();
        assert!(m.value <= 1e-10);
        assert!(m.alpha.inner(&m.beta).norm() < 1e-5);

        let w = Matrix::diag(&[-0.2, 0.4, 0.4, 0.4]);
        let m = min_product_overlap(&w, (2, 2), 16, 50, 1).unwrap();
        assert!(m.value <= -0.2 + 1e-10);
    }

    #[test]
    fn min_product_overlap_monotone_in_restarts() {
        let mut rng = seeded(4);
        for _ in 0..5 {
            let w = &random_density(9, &mut rng) - &Matrix::identity(9).scale_real(0.11);
            let mut last = f64::INFINITY;
            for restarts in [1, 2, 4, 8, 16, 32] {
                let v = min_product_overlap(&w, (3, 3), restarts, 20, 77).unwrap().value;
                assert!(v <= last);
                last = v;
            }
        }
    }

    #[test]
    fn partial_transposes_of_random_states_stay_nonnegative() {
        let mut rng = seeded(5);
        for _ in 0..50 {
            let rho = random_density(4, &mut rng);
            let pt = partial_transpose(&rho, (2, 2), Side::B).unwrap();
            let m = min_product_overlap(&pt, (2, 2), DEFAULT_RESTARTS, DEFAULT_ITERS, 9).unwrap();
            assert!(m.value >= -1e-8);
        }
    }

    #[test]
    fn classify_cases() {
        let mixed = Matrix::identity(4).scale_real(0.25);
        assert!(matches!(classify(&mixed, (2, 2), &opts()).unwrap(), Classification::Quantum { .. }));
        for d in [2, 3, 4] {
            let c = classify(&swap(d).scale_real(1.0 / d as f64), (d, d), &opts()).unwrap();
            assert!(matches!(c, Classification::PoptBeyondQuantum { .. }), "d={d}: {c:?}");
        }
        let w = Matrix::diag(&[-0.2, 0.4, 0.4, 0.4]);
        match classify(&w, (2, 2), &opts()).unwrap() {
            Classification::NotPoptEvidence { value, alpha, beta } => {
                assert!(value <= -0.2 + 1e-10);
                assert!((alpha[0].norm() - 1.0).abs() < 1e-8);
                assert!((beta[0].norm() - 1.0).abs() < 1e-8);
            }
            other => panic!("expected witness, got {other:?}"),
        }
        assert!(matches!(PoptState::new(w, (2, 2), &opts()), Err(Error::NotPoptWitnessed { .. })));
    }

    #[test]
    fn density_matrices_always_classify_quantum() {
        let mut rng = seeded(6);
        for d in [2, 3] {
            for _ in 0..10 {
                let rho = random_density(d * d, &mut rng);
                let s = from_quantum(&rho, (d, d), &opts()).unwrap();
                assert!(matches!(classify(s.matrix(), (d, d), &opts()).unwrap(), Classification::Quantum { .. }));
            }
        }
    }

    #[test]
    fn npt_partial_transposes_are_never_inconclusive_at_qubits() {
        let mut rng = seeded(7);
        for _ in 0..30 {
            let psi = random_ket(4, &mut rng);
            let rho = Matrix::projector(&psi);
            let pt = partial_transpose(&rho, (2, 2), Side::B).unwrap();
            let c = classify(&pt, (2, 2), &opts()).unwrap();
            assert!(matches!(c, Classification::PoptBeyondQuantum { .. }), "{c:?}");
        }
    }

    #[test]
    fn padding_embeds_unequal_dims() {
        let mut rng = seeded(8);
        let rho = random_density(6, &mut rng);
        let s = from_quantum(&rho, (2, 3), &opts()).unwrap();
        let p = s.padded_to_square(&opts()).unwrap();
        assert_eq!(p.dims(), (3, 3));
        assert!((p.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(p.evidence().certified_psd);
    }
}
