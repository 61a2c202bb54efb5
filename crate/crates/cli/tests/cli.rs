use std::path::Path;
use std::process::{Command, Output};

fn rumorloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumorloc"))
        .args(args)
        .output()
        .unwrap()
}

fn small_run(sub: &str, method: &str, out: &Path) -> Output {
    rumorloc(&[
        sub,
        "--network",
        "ba",
        "--nodes",
        "200",
        "--sensor-pct",
        "10",
        "--missing",
        "0,0.15",
        "--method",
        method,
        "--trials",
        "10",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, method) in [
        ("recover", "cs"),
        ("recover", "dn-renewal"),
        ("localize", "cs"),
        ("localize", "dn"),
    ] {
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        assert!(small_run(sub, method, &a).status.success());
        assert!(small_run(sub, method, &b).status.success());
        let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        assert_eq!(a, b, "{sub} {method}");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("experiment,network,nodes,"));
        assert_eq!(text.lines().count(), 1 + 2 * 10);
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "network = tree\nnodes = 60\nsensor_pct = 10\nmissing = 0\nmethod = none\ntrials = 5\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let o = rumorloc(&[
        "localize",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(rumorloc(&["recover", "--mode", "sideways"]).status.code(), Some(2));
    assert_eq!(rumorloc(&["recover", "--missing", "1.5"]).status.code(), Some(2));
    assert_eq!(rumorloc(&["recover", "--bogus"]).status.code(), Some(2));
    assert_eq!(rumorloc(&[]).status.code(), Some(2));
    let missing = rumorloc(&["recover", "--network", "/nonexistent/edges.txt", "--trials", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}
