//! Recovering a POPT operator from a black-box preparation: tabulate the
//! preparation on informationally complete frames, check that its marginals
//! are well defined, and solve for `W` by linear least squares.

use crate::error::{Error, Result};
use crate::matkernel::{kron, partial_trace, Matrix, Side, C64};
use crate::popt::{EvidenceOptions, PoptState};
use crate::povm::{ic_povm, random_povm, require_informationally_complete, Povm};
use crate::random::derive_seed;

/// Entries and normalizations of a tabulation may be off by this much.
pub const ORACLE_TOL: f64 = 1e-9;
/// Least-squares residual above which the data is not a linear preparation.
pub const RESIDUAL_THRESHOLD: f64 = 1e-6;
/// Trace drift tolerated (and renormalized away) in the reconstruction.
pub const TRACE_RENORM_TOL: f64 = 1e-6;

/// A preparation seen only through its outcome probabilities.
pub trait PreparationOracle {
    fn dims(&self) -> (usize, usize);
    /// Probability assigned to Alice's effect `q` jointly with Bob's effect `r`.
    fn eval(&self, q: &Matrix, r: &Matrix) -> f64;
}

/// Oracle backed by an explicit operator, `ω(Q, R) = tr((Q ⊗ R) W)`.
#[derive(Clone, Debug)]
pub struct PoptOracle {
    state: PoptState,
}

impl PoptOracle {
    pub fn new(state: PoptState) -> Self {
        Self { state }
    }
}

impl PreparationOracle for PoptOracle {
    fn dims(&self) -> (usize, usize) {
        self.state.dims()
    }

    fn eval(&self, q: &Matrix, r: &Matrix) -> f64 {
        self.state.omega(q, r)
    }
}

/// `values[a][b] = ω(A_a, B_b)` for frames `A` and `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
}

impl Tabulation {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// The frame pair used when none is supplied: each side is an equal mixture of
/// two independent IC POVMs, so the system is overdetermined and the
/// least-squares residual is a meaningful linearity test.
pub fn default_frames(d: usize, seed: u64) -> Result<(Povm, Povm)> {
    let side = |k: u64| -> Result<Povm> {
        Povm::mixture(&[ic_povm(d, derive_seed(seed, 2 * k))?, ic_povm_shifted(d, derive_seed(seed, 2 * k + 1))?])
    };
    Ok((side(0)?, side(1)?))
}

/// IC POVM that differs from the `d = 2` tetrahedron by a fixed rotation, so
/// two draws never coincide.
fn ic_povm_shifted(d: usize, seed: u64) -> Result<Povm> {
    if d != 2 {
        return ic_povm(d, seed);
    }
    // Rotation by π/4 about the z axis.
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let u = Matrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new(1.0, 0.0),
        (1, 1) => phase,
        _ => C64::new(0.0, 0.0),
    });
    let elements = ic_povm(2, seed)?.elements().iter().map(|e| &(&u * e) * &u.dagger()).collect();
    Povm::new(elements)
}

/// Evaluates the oracle on every pair of frame elements.
pub fn tabulate_omega(o: &dyn PreparationOracle, ic_a: &Povm, ic_b: &Povm) -> Result<Tabulation> {
    check_frames(o.dims(), ic_a, ic_b)?;
    let mut values = Vec::with_capacity(ic_a.len());
    let mut total = 0.0;
    for (a, q) in ic_a.elements().iter().enumerate() {
        let mut row = Vec::with_capacity(ic_b.len());
        for (b, r) in ic_b.elements().iter().enumerate() {
            let v = o.eval(q, r);
            if !v.is_finite() || !(-ORACLE_TOL..=1.0 + ORACLE_TOL).contains(&v) {
                return Err(Error::InvalidArgument(format!("oracle value {v} at ({a}, {b}) outside [0, 1]")));
            }
            total += v;
            row.push(v);
        }
        values.push(row);
    }
    if (total - 1.0).abs() > ORACLE_TOL {
        return Err(Error::InvalidArgument(format!("tabulation sums to {total}")));
    }
    Ok(Tabulation { values })
}

fn check_frames((da, db): (usize, usize), ic_a: &Povm, ic_b: &Povm) -> Result<()> {
    if ic_a.dim() != da || ic_b.dim() != db {
        return Err(Error::DimensionMismatch(format!(
            "frames of dims ({}, {}) for a ({da}, {db}) preparation",
            ic_a.dim(),
            ic_b.dim()
        )));
    }
    require_informationally_complete(ic_a)?;
    require_informationally_complete(ic_b)?;
    Ok(())
}

/// Largest marginal discrepancy found by [`verify_oracle_no_signaling`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSignaling {
    pub max_violation: f64,
    pub tol: f64,
}

impl OracleSignaling {
    pub fn is_ok(&self) -> bool {
        self.max_violation <= self.tol
    }
}

/// Compares `Σ_b ω(Q_a, R_b)` across pairs of random Bob POVMs for random
/// Alice effects, and symmetrically for Bob's effects.
pub fn verify_oracle_no_signaling(o: &dyn PreparationOracle, trials: usize, seed: u64, tol: f64) -> Result<OracleSignaling> {
    let (da, db) = o.dims();
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let s = |k: u64| derive_seed(seed, 8 * t + k);
        let alice = random_povm(da, 2 + (t as usize % 3), s(0))?;
        let (r1, r2) = (random_povm(db, 2, s(1))?, random_povm(db, 3, s(2))?);
        for q in alice.elements() {
            let m1: f64 = r1.elements().iter().map(|r| o.eval(q, r)).sum();
            let m2: f64 = r2.elements().iter().map(|r| o.eval(q, r)).sum();
            worst = worst.max((m1 - m2).abs());
        }
        let bob = random_povm(db, 2 + (t as usize % 3), s(3))?;
        let (q1, q2) = (random_povm(da, 2, s(4))?, random_povm(da, 3, s(5))?);
        for r in bob.elements() {
            let m1: f64 = q1.elements().iter().map(|q| o.eval(q, r)).sum();
            let m2: f64 = q2.elements().iter().map(|q| o.eval(q, r)).sum();
            worst = worst.max((m1 - m2).abs());
        }
    }
    Ok(OracleSignaling { max_violation: worst, tol })
}

/// Reconstructed state with its fit quality.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub state: PoptState,
    /// Euclidean norm of `tr((A_a ⊗ B_b) W) − T[a][b]` over all entries.
    pub residual: f64,
    /// Trace of the least-squares solution before renormalization.
    pub raw_trace: f64,
}

/// Solves `tr((A_a ⊗ B_b) W) = T[a][b]` for Hermitian `W` in the least-squares
/// sense over the `(dA·dB)²` real coordinates of `W`.
///
/// Fails with `ResidualTooLarge` when the data is inconsistent with any linear
/// preparation and with `BadTrace` when the fitted trace is not one.
pub fn reconstruct_popt(t: &Tabulation, ic_a: &Povm, ic_b: &Povm, opts: &EvidenceOptions) -> Result<Reconstruction> {
    let dims = (ic_a.dim(), ic_b.dim());
    check_frames(dims, ic_a, ic_b)?;
    if t.rows() != ic_a.len() || t.values.iter().any(|row| row.len() != ic_b.len()) {
        return Err(Error::DimensionMismatch(format!(
            "tabulation {}x{} for frames with {} and {} elements",
            t.rows(),
            t.cols(),
            ic_a.len(),
            ic_b.len()
        )));
    }
    let n = dims.0 * dims.1;
    let mut design = Vec::with_capacity(ic_a.len() * ic_b.len());
    let mut target = Vec::with_capacity(design.capacity());
    for (q, row) in ic_a.elements().iter().zip(&t.values) {
        for (r, &v) in ic_b.elements().iter().zip(row) {
            design.push(hermitian_coordinates(&kron(q, r)));
            target.push(v);
        }
    }
    let (x, residual) = least_squares(design, target, n * n)?;
    if residual > RESIDUAL_THRESHOLD {
        return Err(Error::ResidualTooLarge { residual, threshold: RESIDUAL_THRESHOLD });
    }
    let w = from_hermitian_coordinates(&x, n);
    let raw_trace = w.trace().re;
    if (raw_trace - 1.0).abs() > TRACE_RENORM_TOL {
        return Err(Error::BadTrace { trace: raw_trace });
    }
    let state = PoptState::new(w.scale_real(1.0 / raw_trace), dims, opts)?;
    Ok(Reconstruction { state, residual, raw_trace })
}

/// Real coordinates `c` with `tr(A H) = Σ c_k h_k` for Hermitian `A`, where `H`
/// is expanded on `E_kk`, `E_kl + E_lk` and `i(E_kl − E_lk)` (`k < l`).
fn hermitian_coordinates(a: &Matrix) -> Vec<f64> {
    let n = a.dim();
    let mut c = Vec::with_capacity(n * n);
    for k in 0..n {
        c.push(a[(k, k)].re);
        for l in k + 1..n {
            c.push(2.0 * a[(k, l)].re);
            c.push(2.0 * a[(k, l)].im);
        }
    }
    c
}

fn from_hermitian_coordinates(h: &[f64], n: usize) -> Matrix {
    let mut w = Matrix::zeros(n);
    let mut it = h.iter();
    for k in 0..n {
        w[(k, k)] = C64::new(*it.next().expect("n² coordinates"), 0.0);
        for l in k + 1..n {
            let (re, im) = (*it.next().expect("n² coordinates"), *it.next().expect("n² coordinates"));
            w[(k, l)] = C64::new(re, im);
            w[(l, k)] = C64::new(re, -im);
        }
    }
    w
}

/// Householder QR solve of an overdetermined system given by rows.
/// Returns the minimizer and the norm of the residual.
fn least_squares(mut rows: Vec<Vec<f64>>, mut b: Vec<f64>, cols: usize) -> Result<(Vec<f64>, f64)> {
    let m = rows.len();
    if m < cols {
        return Err(Error::FrameSingular { rank: m, required: cols });
    }
    let scale = rows.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for j in 0..cols {
        let norm = (j..m).map(|i| rows[i][j] * rows[i][j]).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return Err(Error::FrameSingular { rank: j, required: cols });
        }
        let alpha = if rows[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| rows[i][j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for k in j..cols {
            let dot: f64 = (j..m).map(|i| v[i - j] * rows[i][k]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                rows[i][k] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..m).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in j..m {
            b[i] -= f * v[i - j];
        }
    }
    let mut x = vec![0.0; cols];
    for j in (0..cols).rev() {
        let s: f64 = (j + 1..cols).map(|k| rows[j][k] * x[k]).sum();
        x[j] = (b[j] - s) / rows[j][j];
    }
    let residual = b[cols..].iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((x, residual))
}

/// `p(a) = tr(Q_a tr_B(W))`, Alice's outcome distribution implied by `W`.
pub fn alice_marginal(w: &Matrix, dims: (usize, usize), alice: &Povm) -> Result<Vec<f64>> {
    let reduced = partial_trace(w, dims, Side::B)?;
    Ok(alice.elements().iter().map(|q| reduced.trace_product(q).re).collect())
}
