//! CHSH game layer: correlation tables, reference values, see-saw lower
//! bounds on the quantum value and a sampled-constraint LP upper bound over
//! POPT states with fixed measurements.

mod simplex;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matkernel::{eigh, kron, paulis, trace_kron_product, Ket, Matrix, C64};
use crate::popt::PoptState;
use crate::povm::Povm;
use crate::quantize::{transform_povm, QuantumSimulation};
use crate::random::{derive_seed, random_hermitian, random_ket, seeded};

/// Entries may dip this far below zero before a table is rejected.
pub const NEGATIVITY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// `1/2 + 1/(2√2)`
pub const TSIRELSON: f64 = 0.5 + 0.353_553_390_593_273_73;

/// `p(a, b | x, y)` over finite settings and outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
    p: Vec<f64>,
}

impl CorrelationTable {
    /// Validates nonnegativity (to `1e-12`) and per-setting normalization.
    pub fn new(shape: [usize; 4], p: Vec<f64>) -> Result<Self> {
        let t = Self::from_raw(shape, p)?;
        for x in 0..t.nx {
            for y in 0..t.ny {
                let mut total = 0.0;
                for a in 0..t.na {
                    for b in 0..t.nb {
                        let v = t.get(x, y, a, b);
                        if !v.is_finite() || v < -1e-12 {
                            return Err(Error::InvalidArgument(format!("p({a},{b}|{x},{y}) = {v}")));
                        }
                        total += v;
                    }
                }
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::InvalidArgument(format!("settings ({x},{y}) sum to {total}")));
                }
            }
        }
        Ok(t)
    }

    fn from_raw([nx, ny, na, nb]: [usize; 4], p: Vec<f64>) -> Result<Self> {
        if nx * ny * na * nb == 0 || p.len() != nx * ny * na * nb {
            return Err(Error::DimensionMismatch(format!(
                "shape [{nx}, {ny}, {na}, {nb}] with {} entries",
                p.len()
            )));
        }
        Ok(Self { nx, ny, na, nb, p })
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.nx, self.ny, self.na, self.nb]
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.ny + y) * self.na + a) * self.nb + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.index(x, y, a, b)]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.nb).map(|b| self.get(x, y, a, b)).sum()
    }

    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.na).map(|a| self.get(x, y, a, b)).sum()
    }
}

/// Table of `tr((Q^x_a ⊗ R^y_b) W)` for a bare operator `W`.
///
/// Entries below `-1e-10` fail with `NotPoptWitnessed`, carrying the product of
/// eigenvectors of the offending elements with the most negative expectation.
pub fn correlations_from_operator(w: &Matrix, alice: &[Povm], bob: &[Povm]) -> Result<CorrelationTable> {
    let (Some(pa), Some(pb)) = (alice.first(), bob.first()) else {
        return Err(Error::InvalidArgument("need at least one setting per party".into()));
    };
    let (na, nb) = (pa.len(), pb.len());
    if alice.iter().any(|p| p.len() != na) || bob.iter().any(|p| p.len() != nb) {
        return Err(Error::DimensionMismatch("settings differ in outcome count".into()));
    }
    if w.dim() != pa.dim() * pb.dim() || alice.iter().any(|p| p.dim() != pa.dim()) || bob.iter().any(|p| p.dim() != pb.dim()) {
        return Err(Error::DimensionMismatch(format!("operator {0}x{0} vs POVM dims", w.dim())));
    }
    let mut p = Vec::with_capacity(alice.len() * bob.len() * na * nb);
    for ma in alice {
        for mb in bob {
            for q in ma.elements() {
                for r in mb.elements() {
                    let v = trace_kron_product(q, r, w).re;
                    if v < -NEGATIVITY_TOL {
                        return Err(product_witness(w, q, r));
                    }
                    p.push(v);
                }
            }
        }
    }
    CorrelationTable::from_raw([alice.len(), bob.len(), na, nb], p)
}

fn product_witness(w: &Matrix, q: &Matrix, r: &Matrix) -> Error {
    let (eq, er) = match (eigh(&q.hermitian_part()), eigh(&r.hermitian_part())) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Error::NotPoptWitnessed { value: f64::NEG_INFINITY, alpha: Ket(vec![]), beta: Ket(vec![]) },
    };
    let mut best = (f64::INFINITY, Ket(vec![]), Ket(vec![]));
    for i in 0..eq.values.len() {
        for j in 0..er.values.len() {
            let (a, b) = (eq.vector(i), er.vector(j));
            let v = w.expectation(&a.kron(&b));
            if v < best.0 {
                best = (v, a, b);
            }
        }
    }
    Error::NotPoptWitnessed { value: best.0, alpha: best.1, beta: best.2 }
}

/// `p(a, b | x, y) = tr((Q^x_a ⊗ R^y_b) W)`
pub fn correlations_from_popt(state: &PoptState, alice: &[Povm], bob: &[Povm]) -> Result<CorrelationTable> {
    correlations_from_operator(state.matrix(), alice, bob)
}

/// The same table reproduced by the quantum simulation: `tr((f(Q^x_a) ⊗ R^y_b) σ)`.
pub fn correlations_from_simulation(sim: &QuantumSimulation, alice: &[Povm], bob: &[Povm]) -> Result<CorrelationTable> {
    let transformed = alice.iter().map(|p| transform_povm(sim, p)).collect::<Result<Vec<_>>>()?;
    correlations_from_operator(&sim.sigma, &transformed, bob)
}

fn require_chsh_shape(t: &CorrelationTable) -> Result<()> {
    if t.shape() != [2, 2, 2, 2] {
        return Err(Error::DimensionMismatch(format!("CHSH needs a 2x2x2x2 table, got {:?}", t.shape())));
    }
    Ok(())
}

/// Winning probability `(1/4) Σ_{x,y} Σ_{a⊕b = x·y} p(a, b | x, y)`.
pub fn chsh_value(t: &CorrelationTable) -> Result<f64> {
    require_chsh_shape(t)?;
    let mut total = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if a ^ b == x & y {
                        total += t.get(x, y, a, b);
                    }
                }
            }
        }
    }
    Ok(total / 4.0)
}

/// Deterministic local strategy: `a = alice[x]`, `b = bob[y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub alice: [usize; 2],
    pub bob: [usize; 2],
}

impl DeterministicStrategy {
    pub fn table(&self) -> CorrelationTable {
        let mut p = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                p[((x * 2 + y) * 2 + self.alice[x]) * 2 + self.bob[y]] = 1.0;
            }
        }
        CorrelationTable { nx: 2, ny: 2, na: 2, nb: 2, p }
    }
}

/// Exhaustive maximum over the 16 deterministic strategy pairs, with every maximizer.
pub fn classical_chsh_max() -> (f64, Vec<DeterministicStrategy>) {
    let mut best = f64::NEG_INFINITY;
    let mut winners = Vec::new();
    for code in 0..16usize {
        let s = DeterministicStrategy { alice: [code & 1, (code >> 1) & 1], bob: [(code >> 2) & 1, (code >> 3) & 1] };
        let v = chsh_value(&s.table()).expect("2x2x2x2");
        if v > best {
            best = v;
            winners.clear();
        }
        if v == best {
            winners.push(s);
        }
    }
    (best, winners)
}

/// `p(a, b | x, y) = 1/2` when `a ⊕ b = x·y`, else 0.
pub fn pr_box() -> CorrelationTable {
    let mut p = vec![0.0; 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if a ^ b == x & y {
                        p[((x * 2 + y) * 2 + a) * 2 + b] = 0.5;
                    }
                }
            }
        }
    }
    CorrelationTable { nx: 2, ny: 2, na: 2, nb: 2, p }
}

/// Largest change of either party's marginal across the other party's settings.
#[derive(Clone, Debug, PartialEq)]
pub struct NoSignalingReport {
    pub max_violation: f64,
    pub tol: f64,
}

impl NoSignalingReport {
    pub fn is_ok(&self) -> bool {
        self.max_violation <= self.tol
    }
}

pub fn check_no_signaling(t: &CorrelationTable, tol: f64) -> NoSignalingReport {
    let mut worst: f64 = 0.0;
    for x in 0..t.nx {
        for a in 0..t.na {
            let reference = t.alice_marginal(x, 0, a);
            for y in 1..t.ny {
                worst = worst.max((t.alice_marginal(x, y, a) - reference).abs());
            }
        }
    }
    for y in 0..t.ny {
        for b in 0..t.nb {
            let reference = t.bob_marginal(0, y, b);
            for x in 1..t.nx {
                worst = worst.max((t.bob_marginal(x, y, b) - reference).abs());
            }
        }
    }
    NoSignalingReport { max_violation: worst, tol }
}

/// Best strategy found by [`seesaw_max_chsh`].
#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub value: f64,
    pub alice: [Povm; 2],
    pub bob: [Povm; 2],
    /// Values after each full sweep of the winning restart; nondecreasing.
    pub trace: Vec<f64>,
}

/// `tr_B((1 ⊗ B) W)` on `C^d ⊗ C^d`
fn reduce_bob(w: &Matrix, d: usize, b: &Matrix) -> Matrix {
    Matrix::from_fn(d, |i, k| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d {
            for m in 0..d {
                acc += b[(j, m)] * w[(i * d + m, k * d + j)];
            }
        }
        acc
    })
    .hermitian_part()
}

/// `tr_A((A ⊗ 1) W)`
fn reduce_alice(w: &Matrix, d: usize, a: &Matrix) -> Matrix {
    Matrix::from_fn(d, |j, l| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += a[(i, k)] * w[(k * d + j, i * d + l)];
            }
        }
        acc
    })
    .hermitian_part()
}

/// Projector onto the nonnegative eigenspace and the resulting `±1` observable.
fn sign_measurement(k: &Matrix) -> Result<(Matrix, Matrix)> {
    let e = eigh(k)?;
    let plus = e.map_values(|v| if v >= 0.0 { 1.0 } else { 0.0 });
    let observable = e.map_values(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    Ok((plus, observable))
}

fn observable_povm(plus: &Matrix) -> Result<Povm> {
    let d = plus.dim();
    Povm::from_elements_unchecked(vec![plus.clone(), &Matrix::identity(d) - plus])
}

fn chsh_from_observables(w: &Matrix, a: &[Matrix; 2], b: &[Matrix; 2]) -> f64 {
    let mut s = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let sign = if x & y == 1 { -1.0 } else { 1.0 };
            s += sign * trace_kron_product(&a[x], &b[y], w).re;
        }
    }
    0.5 + s / 8.0
}

/// Lower bound on the CHSH value of the bipartite operator `w` on `C^d ⊗ C^d`,
/// by alternating exact maximization over two-outcome projective measurements.
///
/// With Bob's observables fixed, Alice's optimal observable for setting `x` is
/// the sign of `Σ_y (−1)^{xy} tr_B((1 ⊗ B_y) w)`, and symmetrically for Bob.
/// `w` is usually a density matrix, but any Hermitian trace-one operator is
/// accepted (POPT states included).
pub fn seesaw_max_chsh(w: &Matrix, d: usize, restarts: usize, iters: usize, seed: u64) -> Result<SeesawResult> {
    if w.dim() != d * d {
        return Err(Error::DimensionMismatch(format!("{0}x{0} operator, local dim {d}", w.dim())));
    }
    if !w.is_hermitian() {
        return Err(Error::NotHermitian { deviation: w.hermiticity_error() });
    }
    let mut best: Option<SeesawResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = seeded(derive_seed(seed, r as u64));
        let mut b_obs = [random_observable(d, &mut rng)?, random_observable(d, &mut rng)?];
        let mut b_plus = b_obs.clone().map(|o| (&o + &Matrix::identity(d)).scale_real(0.5));
        let mut a_obs = [Matrix::identity(d), Matrix::identity(d)];
        let mut a_plus = a_obs.clone();
        let mut trace: Vec<f64> = Vec::new();
        for _ in 0..iters.max(1) {
            for x in 0..2 {
                let mut k = Matrix::zeros(d);
                for (y, b) in b_obs.iter().enumerate() {
                    let sign = if x & y == 1 { -1.0 } else { 1.0 };
                    k = &k + &reduce_bob(w, d, b).scale_real(sign);
                }
                (a_plus[x], a_obs[x]) = sign_measurement(&k)?;
            }
            for y in 0..2 {
                let mut k = Matrix::zeros(d);
                for (x, a) in a_obs.iter().enumerate() {
                    let sign = if x & y == 1 { -1.0 } else { 1.0 };
                    k = &k + &reduce_alice(w, d, a).scale_real(sign);
                }
                (b_plus[y], b_obs[y]) = sign_measurement(&k)?;
            }
            let value = chsh_from_observables(w, &a_obs, &b_obs);
            let settled = trace.last().is_some_and(|&last| value - last <= 1e-14);
            trace.push(value);
            if settled {
                break;
            }
        }
        let value = *trace.last().expect("at least one sweep");
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(SeesawResult {
                value,
                alice: [observable_povm(&a_plus[0])?, observable_povm(&a_plus[1])?],
                bob: [observable_povm(&b_plus[0])?, observable_povm(&b_plus[1])?],
                trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix> {
    if d == 1 {
        return Ok(Matrix::identity(1));
    }
    Ok(sign_measurement(&random_hermitian(d, rng))?.1)
}

/// CHSH-optimal qubit settings for `|Φ⟩`: Alice measures σz and σx, Bob
/// measures `(σz ± σx)/√2`.
pub fn tsirelson_settings() -> ([Povm; 2], [Povm; 2]) {
    use crate::povm::qubit_projective;
    use std::f64::consts::FRAC_PI_4;
    (
        [qubit_projective(0.0, 0.0), qubit_projective(2.0 * FRAC_PI_4, 0.0)],
        [qubit_projective(FRAC_PI_4, 0.0), qubit_projective(-FRAC_PI_4, 0.0)],
    )
}

/// Operator `G` with `chsh_value = tr(G W)` for fixed settings.
pub fn chsh_operator(alice: &[Povm; 2], bob: &[Povm; 2]) -> Result<Matrix> {
    let d = alice[0].dim();
    let mut g = Matrix::zeros(d * d);
    for x in 0..2 {
        for y in 0..2 {
            if alice[x].len() != 2 || bob[y].len() != 2 {
                return Err(Error::DimensionMismatch("CHSH settings need two outcomes".into()));
            }
            for a in 0..2 {
                for b in 0..2 {
                    if a ^ b == x & y {
                        let term = kron(&alice[x].elements()[a], &bob[y].elements()[b]);
                        g = &g + &term.scale_real(0.25);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Solution of the sampled-constraint LP.
#[derive(Clone, Debug)]
pub struct LpBound {
    pub value: f64,
    /// Maximizer: Hermitian, trace one, nonnegative on every sampled product vector.
    pub w: Matrix,
    pub constraints: usize,
    pub pivots: usize,
}

/// The `n` product vectors used as constraints; sample `k` depends only on `(seed, k)`.
pub fn sampled_product_vectors(n: usize, seed: u64) -> Vec<(Ket, Ket)> {
    let mut rng = seeded(seed);
    (0..n).map(|_| (random_ket(2, &mut rng), random_ket(2, &mut rng))).collect()
}

fn bloch(v: &Ket) -> [f64; 4] {
    let rho = Matrix::projector(v);
    let [sx, sy, sz] = paulis();
    [1.0, rho.trace_product(&sx).re, rho.trace_product(&sy).re, rho.trace_product(&sz).re]
}

fn pauli_basis() -> Vec<Matrix> {
    let [sx, sy, sz] = paulis();
    let single = [Matrix::identity(2), sx, sy, sz];
    let mut out = Vec::with_capacity(15);
    for a in 0..4 {
        for b in 0..4 {
            if a + b > 0 {
                out.push(kron(&single[a], &single[b]));
            }
        }
    }
    out
}

/// Upper bound on the CHSH value over two-qubit POPT states for fixed settings.
///
/// Maximizes `tr(G W)` over Hermitian trace-one `W` subject to
/// `⟨αβ|W|αβ⟩ ≥ 0` on `n_constraints` sampled product vectors. Writing
/// `W = (I + Σ_k x_k P_k)/4` over the 15 nontrivial two-qubit Paulis turns this
/// into an LP in 15 free variables, solved through its standard-form dual.
/// The constraint sets are nested in `n_constraints` for a fixed seed, so the
/// bound is nonincreasing in it.
pub fn popt_chsh_lp_bound(alice: &[Povm; 2], bob: &[Povm; 2], n_constraints: usize, seed: u64) -> Result<LpBound> {
    if alice.iter().chain(bob).any(|p| p.dim() != 2) {
        return Err(Error::DimensionMismatch("the LP bound is implemented for qubits".into()));
    }
    let g = chsh_operator(alice, bob)?;
    let basis = pauli_basis();
    let offset = g.trace().re / 4.0;
    let gains: Vec<f64> = basis.iter().map(|p| g.trace_product(p).re / 4.0).collect();

    // Constraint k reads −p_k·x ≤ 1 with p_k the correlation tensor of the product vector.
    let columns: Vec<Vec<f64>> = sampled_product_vectors(n_constraints, seed)
        .iter()
        .map(|(a, b)| {
            let (ra, rb) = (bloch(a), bloch(b));
            (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .filter(|&(i, j)| i + j > 0)
                .map(|(i, j)| -ra[i] * rb[j])
                .collect()
        })
        .collect();
    let cost = vec![1.0; columns.len()];
    let problem = simplex::StandardForm { columns: &columns, rhs: &gains, cost: &cost };
    let (outcome, solution) = simplex::solve(&problem, 100_000)?;
    let solution = match outcome {
        simplex::Outcome::Optimal => solution.expect("optimal carries a solution"),
        // Dual infeasible: the primal objective is unbounded above.
        simplex::Outcome::Infeasible => return Err(Error::Unbounded { constraints: n_constraints }),
        simplex::Outcome::Unbounded => return Err(Error::Lp("primal infeasible".into())),
    };
    let mut w = Matrix::identity(4);
    for (x, p) in solution.duals.iter().zip(&basis) {
        w = &w + &p.scale_real(*x);
    }
    let w = w.scale_real(0.25);
    Ok(LpBound { value: offset + solution.objective, w, constraints: n_constraints, pivots: solution.pivots })
}
