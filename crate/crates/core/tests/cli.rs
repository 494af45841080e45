use std::path::Path;
use std::process::{Command, Output};

fn popt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popt")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn swap_quantize_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    assert!(popt(dir.path(), &["gen", "swap", "--d", "2", "--out", "swap.json"]).status.success());
    assert!(popt(dir.path(), &["quantize", "swap.json", "--out", "sim.json"]).status.success());
    let o = popt(dir.path(), &["verify", "sim.json", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn pr_box_table_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    assert!(popt(dir.path(), &["gen", "pr-box", "--out", "pr.json"]).status.success());
    let o = popt(dir.path(), &["chsh", "--table", "pr.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "table: 1"), "{}", stdout(&o));
}

#[test]
fn negative_product_entry_is_witnessed() {
    let dir = tempfile::tempdir().unwrap();
    let w = popt::matkernel::Matrix::diag(&[-0.2, 0.4, 0.4, 0.4]);
    std::fs::write(dir.path().join("neg.json"), popt::format::MatrixFile::from_operator(&w, (2, 2)).to_json()).unwrap();
    let o = popt(dir.path(), &["check", "neg.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness value: -2e-1"));
    assert!(stdout(&o).contains("alpha:"));
}

#[test]
fn parse_and_invariant_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(popt(dir.path(), &["gen", "maxent", "--out", "m.json"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    std::fs::write(dir.path().join("trunc.json"), &text[..text.len() / 3]).unwrap();
    assert_eq!(popt(dir.path(), &["check", "trunc.json"]).status.code(), Some(2));
    assert_eq!(popt(dir.path(), &["check", "missing.json"]).status.code(), Some(2));

    let w = popt::matkernel::Matrix::identity(4).scale_real(0.225);
    std::fs::write(dir.path().join("short.json"), popt::format::MatrixFile::from_operator(&w, (2, 2)).to_json()).unwrap();
    let o = popt(dir.path(), &["check", "short.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trace"));
}

#[test]
fn singular_identity_image_retries_with_notice() {
    let dir = tempfile::tempdir().unwrap();
    assert!(popt(dir.path(), &["gen", "zero", "--out", "z.json"]).status.success());
    let o = popt(dir.path(), &["quantize", "z.json", "--out", "zs.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("retried with epsilon = 1e-6"));
    assert_eq!(popt(dir.path(), &["verify", "zs.json"]).status.code(), Some(0));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for tag in ["a", "b"] {
        let pt = format!("pt_{tag}.json");
        let sim = format!("sim_{tag}.json");
        let rec = format!("rec_{tag}.json");
        assert!(popt(dir.path(), &["gen", "pt", "--d", "3", "--seed", "7", "--out", &pt]).status.success());
        assert!(popt(dir.path(), &["quantize", &pt, "--out", &sim]).status.success());
        assert!(popt(dir.path(), &["reconstruct", &pt, "--out", &rec]).status.success());
    }
    for stem in ["pt", "sim", "rec"] {
        let a = std::fs::read(dir.path().join(format!("{stem}_a.json"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("{stem}_b.json"))).unwrap();
        assert_eq!(a, b, "{stem}");
    }
    let first = stdout(&popt(dir.path(), &["chsh", "--state", "pt_a.json", "--json"]));
    let second = stdout(&popt(dir.path(), &["chsh", "--state", "pt_a.json", "--json"]));
    assert_eq!(first, second);
}

#[test]
fn reconstruct_from_saved_tabulation() {
    let dir = tempfile::tempdir().unwrap();
    assert!(popt(dir.path(), &["gen", "random-quantum", "--out", "rho.json"]).status.success());
    assert!(popt(dir.path(), &["reconstruct", "rho.json", "--out", "r1.json", "--save-tabulation", "t.json"]).status.success());
    assert!(popt(dir.path(), &["reconstruct", "--tabulation", "t.json", "--out", "r2.json"]).status.success());
    let (a, _) = popt::format::load_operator(&std::fs::read_to_string(dir.path().join("r1.json")).unwrap()).unwrap();
    let (b, _) = popt::format::load_operator(&std::fs::read_to_string(dir.path().join("r2.json")).unwrap()).unwrap();
    let (rho, _) = popt::format::load_operator(&std::fs::read_to_string(dir.path().join("rho.json")).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!((&a - &rho).frobenius_norm() <= 1e-9);
}

#[test]
fn lp_bound_prints_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = popt(dir.path(), &["lp-bound", "--constraints", "2000", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((0.853553..1.0).contains(&value));
    assert_eq!(popt(dir.path(), &["lp-bound", "--constraints", "3"]).status.code(), Some(1));
}
