//! Command-line front end. Every command returns a [`Report`]: human-readable
//! lines plus the same data as a JSON value for `--json`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::{self, MatrixFile};
use crate::games::{self, CorrelationTable};
use crate::matkernel::{kron, max_entangled, partial_transpose, swap, Ket, Matrix, Side, C64};
use crate::popt::{classify, Classification, EvidenceOptions, PoptState, DEFAULT_ITERS};
use crate::povm::Povm;
use crate::quantize::{quantize, quantize_with_fallback, verify_simulation, FALLBACK_EPSILON};
use crate::random::{random_density, random_pure_density, seeded};
use crate::reconstruct::{default_frames, reconstruct_popt, tabulate_omega, verify_oracle_no_signaling, PoptOracle};

/// Exit status for results that are computed but negative (a witness, a failed verification).
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "popt", version, about = "Positive-on-pure-tensor states and their quantum simulation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Tolerance for positivity and verification checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 64)]
    pub restarts: usize,
    /// Depolarizing regularization; 0 retries at 1e-6 when the exact path is singular.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the result as one line of JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an example state or table.
    Gen {
        family: Family,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Classify an operator as quantum, POPT beyond quantum, or witnessed non-POPT.
    Check { file: PathBuf },
    /// Build the quantum simulation of a POPT state.
    Quantize { file: PathBuf },
    /// Compare a simulation against its source on random POVM pairs.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// CHSH values: the classical optimum, a see-saw lower bound for a state, or a table's value.
    Chsh {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        state: Option<PathBuf>,
        /// Fixed settings for `--state`: a POVM list with Alice's two settings.
        #[arg(long, requires = "bob")]
        alice: Option<PathBuf>,
        #[arg(long, requires = "alice")]
        bob: Option<PathBuf>,
        #[arg(long)]
        classical: bool,
        #[arg(long, default_value_t = 200)]
        iters: usize,
    },
    /// Sampled-constraint LP upper bound on the CHSH value over two-qubit POPT states.
    LpBound {
        #[arg(long, default_value_t = 10_000)]
        constraints: usize,
        /// POVM list with Alice's two settings; defaults to the CHSH-optimal ones.
        #[arg(long, requires = "bob")]
        alice: Option<PathBuf>,
        #[arg(long, requires = "alice")]
        bob: Option<PathBuf>,
    },
    /// Recover a POPT state from an oracle file or a stored tabulation.
    Reconstruct {
        /// State file used as a black-box preparation.
        oracle: Option<PathBuf>,
        #[arg(long, conflicts_with = "oracle")]
        tabulation: Option<PathBuf>,
        /// Also write the tabulation taken from the oracle.
        #[arg(long)]
        save_tabulation: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// `SWAP/d`
    Swap,
    /// Maximally entangled state.
    Maxent,
    /// Maximally mixed state.
    Mixed,
    /// `|00⟩⟨00|`, whose image of the identity is singular.
    Zero,
    /// Random product of two density matrices.
    Product,
    /// Partial transpose of a random pure entangled state.
    Pt,
    /// Random density matrix.
    RandomQuantum,
    /// The PR-box table.
    PrBox,
}

/// Outcome of a command.
#[derive(Debug)]
pub struct Report {
    pub lines: Vec<String>,
    pub json: Value,
    pub exit: i32,
    /// Written to stderr regardless of `--json`.
    pub notices: Vec<String>,
}

impl Report {
    fn ok(lines: Vec<String>, json: Value) -> Self {
        Self { lines, json, exit: 0, notices: Vec::new() }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::NotHermitian { .. }
        | Error::NotPsd { .. }
        | Error::BadTrace { .. }
        | Error::DimensionMismatch(_)
        | Error::InvalidPovm { .. }
        | Error::InvalidArgument(_) => EXIT_INVARIANT,
        _ => EXIT_FAILURE,
    }
}

/// Error rendered for the user; carries a witness when there is one.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.to_string(), "exit": exit_code(e) });
    if let Error::NotPoptWitnessed { value, alpha, beta } = e {
        v["witness"] = json!({ "value": value, "alpha": ket_json(alpha), "beta": ket_json(beta) });
    }
    v
}

fn ket_json(k: &Ket) -> Value {
    json!(k.0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn ket_text(k: &Ket) -> String {
    let parts: Vec<String> = k.0.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

fn evidence_options(g: &Global) -> EvidenceOptions {
    EvidenceOptions { restarts: g.restarts, iters: DEFAULT_ITERS, seed: g.seed, pop_tol: g.tol, ..EvidenceOptions::default() }
}

fn require_out(g: &Global) -> Result<&Path> {
    g.out.as_deref().ok_or_else(|| Error::InvalidArgument("--out is required".into()))
}

fn write(path: &Path, file: &MatrixFile) -> Result<()> {
    format::write_atomic(path, &file.to_json()).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen { family, d } => gen(g, *family, *d),
        Command::Check { file } => check(g, file),
        Command::Quantize { file } => quantize_cmd(g, file),
        Command::Verify { file, trials } => verify(g, file, *trials),
        Command::Chsh { table, state, alice, bob, classical, iters } => {
            chsh(g, table.as_deref(), state.as_deref(), alice.as_deref().zip(bob.as_deref()), *classical, *iters)
        }
        Command::LpBound { constraints, alice, bob } => lp_bound(g, *constraints, alice.as_deref().zip(bob.as_deref())),
        Command::Reconstruct { oracle, tabulation, save_tabulation, trials } => {
            reconstruct(g, oracle.as_deref(), tabulation.as_deref(), save_tabulation.as_deref(), *trials)
        }
    }
}

fn gen(g: &Global, family: Family, d: usize) -> Result<Report> {
    if !(2..=8).contains(&d) {
        return Err(Error::InvalidArgument(format!("--d must lie in 2..=8, got {d}")));
    }
    let out = require_out(g)?;
    let opts = evidence_options(g);
    let dims = (d, d);
    let n = d * d;
    let mut rng = seeded(g.seed);
    let file = match family {
        Family::Swap => MatrixFile::from_popt(&PoptState::new(swap(d).scale_real(1.0 / d as f64), dims, &opts)?),
        Family::Maxent => MatrixFile::from_density(&Matrix::projector(&max_entangled(d)), dims),
        Family::Mixed => MatrixFile::from_density(&Matrix::identity(n).scale_real(1.0 / n as f64), dims),
        Family::Zero => {
            let mut w = Matrix::zeros(n);
            w[(0, 0)] = C64::new(1.0, 0.0);
            MatrixFile::from_density(&w, dims)
        }
        Family::Product => MatrixFile::from_density(&kron(&random_density(d, &mut rng), &random_density(d, &mut rng)), dims),
        Family::Pt => {
            let w = partial_transpose(&random_pure_density(n, &mut rng), dims, Side::B)?;
            MatrixFile::from_popt(&PoptState::new(w, dims, &opts)?)
        }
        Family::RandomQuantum => MatrixFile::from_density(&random_density(n, &mut rng), dims),
        Family::PrBox => MatrixFile::from_table(&games::pr_box(), [0, 0]),
    };
    write(out, &file)?;
    let name = family.to_possible_value().expect("no skipped variants").get_name().to_owned();
    Ok(Report::ok(
        vec![format!("wrote {name} ({:?}) to {}", file.kind, out.display())],
        json!({ "command": "gen", "family": name, "d": d, "out": out.display().to_string() }),
    ))
}

fn check(g: &Global, path: &Path) -> Result<Report> {
    let (w, dims) = format::load_operator(&format::read_file(path)?)?;
    let c = classify(&w, dims, &evidence_options(g))?;
    let label = c.label();
    let mut lines = vec![format!("classification: {label}")];
    let mut out = json!({ "command": "check", "classification": label });
    let mut exit = 0;
    match &c {
        Classification::Quantum { min_eigenvalue } => {
            lines.push(format!("min eigenvalue: {min_eigenvalue:e}"));
            out["min_eigenvalue"] = json!(min_eigenvalue);
        }
        Classification::PoptBeyondQuantum { min_eigenvalue, min_product_value }
        | Classification::Inconclusive { min_eigenvalue, min_product_value } => {
            lines.push(format!("min eigenvalue: {min_eigenvalue:e}"));
            lines.push(format!("min product expectation: {min_product_value:e}"));
            out["min_eigenvalue"] = json!(min_eigenvalue);
            out["min_product_value"] = json!(min_product_value);
        }
        Classification::NotPoptEvidence { value, alpha, beta } => {
            lines.push(format!("witness value: {value:e}"));
            lines.push(format!("alpha: {}", ket_text(alpha)));
            lines.push(format!("beta: {}", ket_text(beta)));
            out["witness"] = json!({ "value": value, "alpha": ket_json(alpha), "beta": ket_json(beta) });
            exit = EXIT_FAILURE;
        }
    }
    Ok(Report { lines, json: out, exit, notices: Vec::new() })
}

fn quantize_cmd(g: &Global, path: &Path) -> Result<Report> {
    let out = require_out(g)?;
    let state = format::load_popt(&format::read_file(path)?, &evidence_options(g))?;
    let (sim, retried) = if g.eps == 0.0 { quantize_with_fallback(&state, 0.0)? } else { (quantize(&state, g.eps)?, false) };
    write(out, &MatrixFile::from_simulation(&state, &sim))?;
    let mut report = Report::ok(
        vec![format!("epsilon: {:e}", sim.epsilon()), format!("wrote simulation to {}", out.display())],
        json!({ "command": "quantize", "epsilon": sim.epsilon(), "retried": retried, "out": out.display().to_string() }),
    );
    if retried {
        report.notices.push(format!("notice: image of the identity is singular; retried with epsilon = {FALLBACK_EPSILON:e}"));
    }
    Ok(report)
}

fn verify(g: &Global, path: &Path, trials: usize) -> Result<Report> {
    let file = format::load_simulation(&format::read_file(path)?)?;
    let state = PoptState::new(file.source, file.dims, &evidence_options(g))?;
    let deviation = verify_simulation(&state, &file.simulation, trials, g.seed)?;
    // A regularized simulation is only accurate to O(ε).
    let allowed = g.tol.max(10.0 * file.simulation.epsilon());
    let ok = deviation <= allowed;
    Ok(Report {
        lines: vec![format!("max deviation: {deviation:e}"), format!("{}", if ok { "ok" } else { "FAILED" })],
        json: json!({ "command": "verify", "max_deviation": deviation, "allowed": allowed, "ok": ok, "trials": trials }),
        exit: if ok { 0 } else { EXIT_FAILURE },
        notices: Vec::new(),
    })
}

fn two_settings(path: &Path) -> Result<[Povm; 2]> {
    let povms = format::load_povm_list(&format::read_file(path)?)?;
    <[Povm; 2]>::try_from(povms).map_err(|v| Error::DimensionMismatch(format!("expected 2 settings, got {}", v.len())))
}

fn chsh(
    g: &Global,
    table: Option<&Path>,
    state: Option<&Path>,
    settings: Option<(&Path, &Path)>,
    classical: bool,
    iters: usize,
) -> Result<Report> {
    if table.is_none() && state.is_none() && !classical {
        return Err(Error::InvalidArgument("give --table, --state or --classical".into()));
    }
    let mut lines = Vec::new();
    let mut out = json!({ "command": "chsh" });
    if classical {
        let (value, winners) = games::classical_chsh_max();
        lines.push(format!("classical: {value} ({} optimal deterministic strategies)", winners.len()));
        out["classical"] = json!(value);
    }
    if let Some(path) = table {
        let t: CorrelationTable = format::load_table(&format::read_file(path)?)?;
        let value = games::chsh_value(&t)?;
        let signaling = games::check_no_signaling(&t, 1e-10);
        lines.push(format!("table: {value}"));
        lines.push(format!("no-signaling violation: {:e}", signaling.max_violation));
        out["table"] = json!(value);
        out["no_signaling_violation"] = json!(signaling.max_violation);
    }
    if let Some(path) = state {
        let (w, dims) = format::load_operator(&format::read_file(path)?)?;
        if dims.0 != dims.1 {
            return Err(Error::DimensionMismatch(format!("CHSH needs equal local dims, got {dims:?}")));
        }
        match settings {
            Some((a, b)) => {
                let (alice, bob) = (two_settings(a)?, two_settings(b)?);
                let value = games::chsh_value(&games::correlations_from_operator(&w, &alice, &bob)?)?;
                lines.push(format!("fixed settings: {value}"));
                out["fixed_settings"] = json!(value);
            }
            None => {
                let r = games::seesaw_max_chsh(&w, dims.0, g.restarts, iters, g.seed)?;
                lines.push(format!("see-saw: {}", r.value));
                out["seesaw"] = json!(r.value);
            }
        }
    }
    Ok(Report::ok(lines, out))
}

fn lp_bound(g: &Global, constraints: usize, settings: Option<(&Path, &Path)>) -> Result<Report> {
    let (alice, bob) = match settings {
        Some((a, b)) => (two_settings(a)?, two_settings(b)?),
        None => games::tsirelson_settings(),
    };
    let r = games::popt_chsh_lp_bound(&alice, &bob, constraints, g.seed)?;
    Ok(Report::ok(
        vec![format!("lp bound: {}", r.value), format!("constraints: {}, pivots: {}", r.constraints, r.pivots)],
        json!({ "command": "lp-bound", "value": r.value, "constraints": r.constraints, "pivots": r.pivots }),
    ))
}

fn reconstruct(g: &Global, oracle: Option<&Path>, tabulation: Option<&Path>, save: Option<&Path>, trials: usize) -> Result<Report> {
    let out = require_out(g)?;
    let opts = evidence_options(g);
    let mut lines = Vec::new();
    let mut report = json!({ "command": "reconstruct" });
    let (table, dims) = match (oracle, tabulation) {
        (Some(path), None) => {
            let state = format::load_popt(&format::read_file(path)?, &opts)?;
            let dims = state.dims();
            let oracle = PoptOracle::new(state);
            let signaling = verify_oracle_no_signaling(&oracle, trials, g.seed, 1e-10)?;
            lines.push(format!("oracle marginal discrepancy: {:e}", signaling.max_violation));
            report["oracle_signaling"] = json!(signaling.max_violation);
            let (fa, fb) = frames(dims, g.seed)?;
            let t = tabulate_omega(&oracle, &fa, &fb)?;
            if let Some(p) = save {
                write(p, &MatrixFile::from_tabulation(&t, [dims.0, dims.1]))?;
            }
            (t, dims)
        }
        (None, Some(path)) => format::load_tabulation(&format::read_file(path)?)?,
        _ => return Err(Error::InvalidArgument("give an oracle file or --tabulation".into())),
    };
    let (fa, fb) = frames(dims, g.seed)?;
    let r = reconstruct_popt(&table, &fa, &fb, &opts)?;
    write(out, &MatrixFile::from_popt(&r.state))?;
    lines.push(format!("residual: {:e}", r.residual));
    lines.push(format!("wrote state to {}", out.display()));
    report["residual"] = json!(r.residual);
    report["out"] = json!(out.display().to_string());
    Ok(Report::ok(lines, report))
}

fn frames((da, db): (usize, usize), seed: u64) -> Result<(Povm, Povm)> {
    if da != db {
        return Err(Error::DimensionMismatch(format!("reconstruction uses equal local dims, got ({da}, {db})")));
    }
    default_frames(da, seed)
}
