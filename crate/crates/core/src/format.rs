//! JSON file format shared by every CLI artifact.
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major nested arrays.
//! Output is deterministic byte for byte and floats round-trip exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chojam::{MatrixMap, UnitalDecomposition};
use crate::error::{Error, Result};
use crate::games::CorrelationTable;
use crate::matkernel::{Ket, Matrix, C64, MAX_DIM};
use crate::popt::{EvidenceOptions, PoptState, TRACE_TOL};
use crate::povm::Povm;
use crate::quantize::QuantumSimulation;
use crate::reconstruct::Tabulation;

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Popt,
    Density,
    PovmList,
    Table,
    Simulation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRecord {
    pub min_product_value: f64,
    pub restarts: usize,
    pub certified_psd: bool,
}

/// On-disk artifact. Which optional fields are present depends on `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub kind: Kind,
    /// Local dimensions `(dA, dB)`; `[0, 0]` for tables with no underlying state.
    pub dims: [usize; 2],
    /// The operator for `popt`/`density`, the state `σ` for `simulation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity_evidence: Option<EvidenceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povms: Option<Vec<Vec<RawMatrix>>>,
    /// `[nx, ny, na, nb]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 4]>,
    /// `p[x][y][a][b]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    /// POPT operator that a simulation reproduces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<[f64; 2]>>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Images `W̃(|i⟩⟨j|)` in row-major `(i, j)` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wtilde_units: Option<Vec<RawMatrix>>,
}

impl MatrixFile {
    fn empty(kind: Kind, dims: [usize; 2]) -> Self {
        Self {
            kind,
            dims,
            matrix: None,
            positivity_evidence: None,
            povms: None,
            shape: None,
            p: None,
            source: None,
            psi: None,
            m: None,
            epsilon: None,
            wtilde_units: None,
        }
    }

    pub fn from_popt(state: &PoptState) -> Self {
        let (da, db) = state.dims();
        let e = state.evidence();
        Self {
            matrix: Some(to_raw(state.matrix())),
            positivity_evidence: Some(EvidenceRecord {
                min_product_value: e.min_product_value,
                restarts: e.restarts,
                certified_psd: e.certified_psd,
            }),
            ..Self::empty(Kind::Popt, [da, db])
        }
    }

    /// A `popt` file holding an operator that has not been validated.
    pub fn from_operator(w: &Matrix, (da, db): (usize, usize)) -> Self {
        Self { matrix: Some(to_raw(w)), ..Self::empty(Kind::Popt, [da, db]) }
    }

    pub fn from_density(rho: &Matrix, (da, db): (usize, usize)) -> Self {
        Self { matrix: Some(to_raw(rho)), ..Self::empty(Kind::Density, [da, db]) }
    }

    pub fn from_povms(povms: &[Povm]) -> Self {
        let d = povms.first().map_or(0, Povm::dim);
        let raw = povms.iter().map(|p| p.elements().iter().map(to_raw).collect()).collect();
        Self { povms: Some(raw), ..Self::empty(Kind::PovmList, [d, d]) }
    }

    pub fn from_table(t: &CorrelationTable, dims: [usize; 2]) -> Self {
        let [nx, ny, na, nb] = t.shape();
        let p = (0..nx)
            .map(|x| (0..ny).map(|y| (0..na).map(|a| (0..nb).map(|b| t.get(x, y, a, b)).collect()).collect()).collect())
            .collect();
        Self { shape: Some(t.shape()), p: Some(p), ..Self::empty(Kind::Table, dims) }
    }

    /// A tabulation is stored as a table with a single setting per party.
    pub fn from_tabulation(t: &Tabulation, dims: [usize; 2]) -> Self {
        Self {
            shape: Some([1, 1, t.rows(), t.cols()]),
            p: Some(vec![vec![t.values.clone()]]),
            ..Self::empty(Kind::Table, dims)
        }
    }

    pub fn from_simulation(state: &PoptState, sim: &QuantumSimulation) -> Self {
        let dec = &sim.decomposition;
        Self {
            matrix: Some(to_raw(&sim.sigma)),
            source: Some(to_raw(state.matrix())),
            psi: Some(sim.psi.0.iter().map(|z| [z.re, z.im]).collect()),
            m: Some(to_raw(&dec.m)),
            epsilon: Some(dec.epsilon),
            wtilde_units: Some(dec.wtilde.units().iter().map(to_raw).collect()),
            ..Self::empty(Kind::Simulation, [sim.d, sim.d])
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    fn expect_kind(&self, allowed: &[Kind]) -> Result<()> {
        if allowed.contains(&self.kind) {
            return Ok(());
        }
        Err(Error::Parse(format!("expected kind {allowed:?}, found {:?}", self.kind)))
    }

    fn local_dims(&self) -> Result<(usize, usize)> {
        let [da, db] = self.dims;
        if da == 0 || db == 0 || da.saturating_mul(db) > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("unsupported dims [{da}, {db}]")));
        }
        Ok((da, db))
    }
}

fn to_raw(m: &Matrix) -> RawMatrix {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn from_raw(raw: &RawMatrix, n: usize, what: &str) -> Result<Matrix> {
    if raw.len() != n || raw.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!("{what} must be {n}x{n}")));
    }
    let data = raw.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    Matrix::from_vec(data)
}

fn required<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field.as_ref().ok_or_else(|| Error::Parse(format!("missing field `{name}`")))
}

/// Parses the JSON text; rejects malformed JSON, unknown fields and non-finite numbers.
pub fn parse_matrix_file(text: &str) -> Result<MatrixFile> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let raw_matrices = file
        .matrix
        .iter()
        .chain(&file.source)
        .chain(&file.m)
        .chain(file.wtilde_units.iter().flatten())
        .chain(file.povms.iter().flatten().flatten());
    let finite = raw_matrices.flatten().flatten().flatten().all(|v| v.is_finite())
        && file.psi.iter().flatten().flatten().all(|v| v.is_finite())
        && file.p.iter().flatten().flatten().flatten().flatten().all(|v| v.is_finite())
        && file.epsilon.is_none_or(f64::is_finite)
        && file.positivity_evidence.as_ref().is_none_or(|e| e.min_product_value.is_finite());
    if !finite {
        return Err(Error::Parse("non-finite number".into()));
    }
    Ok(file)
}

/// Hermitian, trace-one operator from a `popt` or `density` file, without the
/// positivity search.
pub fn load_operator(text: &str) -> Result<(Matrix, (usize, usize))> {
    let file = parse_matrix_file(text)?;
    file.expect_kind(&[Kind::Popt, Kind::Density])?;
    operator_of(&file)
}

fn operator_of(file: &MatrixFile) -> Result<(Matrix, (usize, usize))> {
    let dims = file.local_dims()?;
    let w = from_raw(required(&file.matrix, "matrix")?, dims.0 * dims.1, "matrix")?;
    check_hermitian_trace_one(&w)?;
    Ok((w, dims))
}

fn check_hermitian_trace_one(w: &Matrix) -> Result<()> {
    if !w.is_hermitian() {
        return Err(Error::NotHermitian { deviation: w.hermiticity_error() });
    }
    let trace = w.trace();
    if (trace.re - 1.0).abs() > TRACE_TOL {
        return Err(Error::BadTrace { trace: trace.re });
    }
    Ok(())
}

/// Validated POPT state; a `density` file must also be positive semidefinite.
pub fn load_popt(text: &str, opts: &EvidenceOptions) -> Result<PoptState> {
    let file = parse_matrix_file(text)?;
    file.expect_kind(&[Kind::Popt, Kind::Density])?;
    let (w, dims) = operator_of(&file)?;
    match file.kind {
        Kind::Density => crate::popt::from_quantum(&w, dims, opts),
        _ => PoptState::new(w, dims, opts),
    }
}

pub fn load_povm_list(text: &str) -> Result<Vec<Povm>> {
    let file = parse_matrix_file(text)?;
    file.expect_kind(&[Kind::PovmList])?;
    let (d, _) = file.local_dims()?;
    required(&file.povms, "povms")?
        .iter()
        .map(|elements| Povm::new(elements.iter().map(|e| from_raw(e, d, "POVM element")).collect::<Result<_>>()?))
        .collect()
}

fn raw_table(file: &MatrixFile) -> Result<([usize; 4], Vec<f64>)> {
    file.expect_kind(&[Kind::Table])?;
    let shape = *required(&file.shape, "shape")?;
    let p = required(&file.p, "p")?;
    let [nx, ny, na, nb] = shape;
    if shape.contains(&0) {
        return Err(Error::DimensionMismatch(format!("empty table shape {shape:?}")));
    }
    let consistent = p.len() == nx
        && p.iter().all(|px| px.len() == ny && px.iter().all(|pxy| pxy.len() == na && pxy.iter().all(|r| r.len() == nb)));
    if !consistent {
        return Err(Error::DimensionMismatch(format!("p does not have shape {shape:?}")));
    }
    Ok((shape, p.iter().flatten().flatten().flatten().copied().collect()))
}

pub fn load_table(text: &str) -> Result<CorrelationTable> {
    let (shape, p) = raw_table(&parse_matrix_file(text)?)?;
    CorrelationTable::new(shape, p)
}

/// A single-setting table read back as a tabulation, with its dims.
pub fn load_tabulation(text: &str) -> Result<(Tabulation, (usize, usize))> {
    let file = parse_matrix_file(text)?;
    let ([nx, ny, na, nb], p) = raw_table(&file)?;
    if nx != 1 || ny != 1 {
        return Err(Error::DimensionMismatch(format!("a tabulation has one setting per party, got [{nx}, {ny}]")));
    }
    debug_assert_eq!(p.len(), na * nb);
    let values = p.chunks(nb).map(<[f64]>::to_vec).collect();
    Ok((Tabulation { values }, file.local_dims()?))
}

/// Stored simulation: the source operator (not re-validated as POPT) and the
/// state plus relabeling map, exactly as written.
pub struct SimulationFile {
    pub source: Matrix,
    pub dims: (usize, usize),
    pub simulation: QuantumSimulation,
}

pub fn load_simulation(text: &str) -> Result<SimulationFile> {
    let file = parse_matrix_file(text)?;
    file.expect_kind(&[Kind::Simulation])?;
    let dims = file.local_dims()?;
    if dims.0 != dims.1 {
        return Err(Error::DimensionMismatch(format!("simulation dims must be equal, got {dims:?}")));
    }
    let d = dims.0;
    let n = d * d;
    let source = from_raw(required(&file.source, "source")?, n, "source")?;
    check_hermitian_trace_one(&source)?;
    let sigma = from_raw(required(&file.matrix, "matrix")?, n, "matrix")?;
    check_hermitian_trace_one(&sigma)?;
    let psi = required(&file.psi, "psi")?;
    if psi.len() != n {
        return Err(Error::DimensionMismatch(format!("psi must have {n} entries")));
    }
    let psi = Ket(psi.iter().map(|&[re, im]| C64::new(re, im)).collect());
    let m = from_raw(required(&file.m, "M")?, d, "M")?;
    if !m.is_hermitian() {
        return Err(Error::NotHermitian { deviation: m.hermiticity_error() });
    }
    let epsilon = *required(&file.epsilon, "epsilon")?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let units = required(&file.wtilde_units, "wtilde_units")?
        .iter()
        .map(|u| from_raw(u, d, "wtilde unit"))
        .collect::<Result<Vec<_>>>()?;
    let wtilde = MatrixMap::from_units(d, d, units)?;
    let simulation = QuantumSimulation { d, sigma, psi, decomposition: UnitalDecomposition { m, wtilde, epsilon } };
    Ok(SimulationFile { source, dims, simulation })
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
