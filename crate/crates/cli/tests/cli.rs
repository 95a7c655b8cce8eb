use std::process::Command;

fn pme() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pme"))
}

#[test]
fn waiting_run_reports_the_crossing_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = pme()
        .args(["waiting", "--case", "2", "--M", "50", "--tau", "1/50", "--T", "0.3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("t*_h left  = 0.200000"), "{stdout}");
    for f in ["series.csv", "steps.csv", "ratios.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn every_section_gets_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("runs.ini");
    std::fs::write(&cfg, "T = 0.01\nM = 20\nm = 2\ncase = 1\ntau = 1/200\n[a]\nproblem = smooth\n[b]\nproblem = smooth\ncase = 2\n").unwrap();
    let out = pme().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("a/series.csv").is_file());
    assert!(dir.path().join("b/steps.csv").is_file());
}

#[test]
fn bad_input_exits_nonzero() {
    let out = pme().args(["simulate", "--problem", "nope"]).output().unwrap();
    assert!(!out.status.success());
    let out = pme().args(["simulate", "--theta", "0.5", "--problem", "waiting"]).output().unwrap();
    assert!(!out.status.success());
}
