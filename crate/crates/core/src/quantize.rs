//! Turns a POPT state into a genuine quantum simulation.
//!
//! Given `W`, the Choi map `𝒲` is split into `M = 𝒲(I)` and a unital part
//! `W̃`. The pure state `|ψ⟩ = ((M^{1/2})ᵀ ⊗ 1)|Φ⟩` together with the relabeling
//! `Q ↦ W̃(Qᵀ)ᵀ` of Alice's POVM elements reproduces every correlation
//! `tr((Q ⊗ R) W)`; Bob's measurements are left untouched.

use rand::Rng;

use crate::chojam::{apply, map_from_popt, unital_decompose, UnitalDecomposition};
use crate::error::{Error, Result};
use crate::matkernel::{psd_sqrt, trace_kron_product, Ket, Matrix, C64};
use crate::popt::PoptState;
use crate::povm::{random_povm, validate_povm, Povm};
use crate::random::{derive_seed, seeded};

/// Fallback regularization used when the image of the identity is singular.
pub const FALLBACK_EPSILON: f64 = 1e-6;
/// Transformed POVMs must validate at this completeness tolerance.
pub const TRANSFORM_TOL: f64 = 1e-8;

/// A quantum state plus the relabeling of Alice's measurements.
#[derive(Clone, Debug)]
pub struct QuantumSimulation {
    pub d: usize,
    /// `|ψ⟩⟨ψ|`
    pub sigma: Matrix,
    pub psi: Ket,
    pub decomposition: UnitalDecomposition,
}

impl QuantumSimulation {
    pub fn epsilon(&self) -> f64 {
        self.decomposition.epsilon
    }

    /// `f(Q) = W̃(Qᵀ)ᵀ` for a single operator.
    pub fn transform_element(&self, q: &Matrix) -> Result<Matrix> {
        Ok(apply(&self.decomposition.wtilde, &q.transpose())?.transpose().hermitian_part())
    }

    /// `tr((f(Q) ⊗ R) σ)`
    pub fn probability(&self, q: &Matrix, r: &Matrix) -> Result<f64> {
        Ok(trace_kron_product(&self.transform_element(q)?, r, &self.sigma).re)
    }
}

/// Builds the simulation for `state`. `epsilon = 0` requires an invertible
/// image of the identity and otherwise fails with `SingularM`.
pub fn quantize(state: &PoptState, epsilon: f64) -> Result<QuantumSimulation> {
    let d = state.local_dim()?;
    let map = map_from_popt(state)?;
    let decomposition = unital_decompose(&map, epsilon)?;
    let sqrt_m = psd_sqrt(&decomposition.m)?;
    let scale = 1.0 / (d as f64).sqrt();
    // ((√M)ᵀ ⊗ 1)|Φ⟩ has amplitude √M[j][i]/√d on |i⟩|j⟩.
    let psi = Ket((0..d * d).map(|k| sqrt_m[(k % d, k / d)] * scale).collect());
    let sigma = Matrix::projector(&psi);
    Ok(QuantumSimulation { d, sigma, psi, decomposition })
}

/// [`quantize`] at `epsilon`, retrying once at [`FALLBACK_EPSILON`] when the
/// exact path hits `SingularM`. The flag reports whether the retry ran.
pub fn quantize_with_fallback(state: &PoptState, epsilon: f64) -> Result<(QuantumSimulation, bool)> {
    match quantize(state, epsilon) {
        Ok(sim) => Ok((sim, false)),
        Err(Error::SingularM { .. }) if epsilon == 0.0 => Ok((quantize(state, FALLBACK_EPSILON)?, true)),
        Err(e) => Err(e),
    }
}

/// Relabels Alice's POVM: `Q̃_a = W̃(Q_aᵀ)ᵀ`.
pub fn transform_povm(sim: &QuantumSimulation, p: &Povm) -> Result<Povm> {
    if p.dim() != sim.d {
        return Err(Error::DimensionMismatch(format!("POVM dim {}, simulation dim {}", p.dim(), sim.d)));
    }
    let elements = p.elements().iter().map(|q| sim.transform_element(q)).collect::<Result<Vec<_>>>()?;
    let out = Povm::from_elements_unchecked(elements)?;
    let report = validate_povm(&out);
    if !report.is_ok_within(TRANSFORM_TOL) {
        return Err(Error::InvalidPovm {
            completeness: report.completeness_residual,
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    Ok(out)
}

/// Largest gap `|tr((Q_a ⊗ R_b) W) − tr((f(Q_a) ⊗ R_b) σ)|` over `trials`
/// random POVM pairs (2 to 4 outcomes each) and all of their outcome pairs.
pub fn verify_simulation(state: &PoptState, sim: &QuantumSimulation, trials: usize, seed: u64) -> Result<f64> {
    let d = state.local_dim()?;
    if d != sim.d {
        return Err(Error::DimensionMismatch(format!("state dim {d}, simulation dim {}", sim.d)));
    }
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = seeded(derive_seed(seed, t as u64));
        let (ka, kb) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let alice = random_povm(d, ka, rng.random())?;
        let bob = random_povm(d, kb, rng.random())?;
        let transformed = transform_povm(sim, &alice)?;
        for (q, qt) in alice.elements().iter().zip(transformed.elements()) {
            for r in bob.elements() {
                let target = state.omega(q, r);
                let simulated = trace_kron_product(qt, r, &sim.sigma).re;
                worst = worst.max((target - simulated).abs());
            }
        }
    }
    Ok(worst)
}

/// Copy of `sim` whose state is replaced by `I/d²`; used to check that
/// [`verify_simulation`] can fail.
pub fn with_maximally_mixed_state(sim: &QuantumSimulation) -> QuantumSimulation {
    let n = sim.d * sim.d;
    let mut out = sim.clone();
    out.sigma = Matrix::identity(n).scale(C64::new(1.0 / n as f64, 0.0));
    out
}
