use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capa-secbeam"))
}

fn rows(path: &std::path::Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn single_run_writes_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("single.csv");
    let status = bin().args(["single", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let rows = rows(&out);
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], "capa-fp");
    assert!(rows.iter().all(|r| r[8].is_empty()));
}

#[test]
fn modes_and_thread_counts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let status = bin()
            .args(["power", "--trials", "3", "--values", "1:100:3", "--schemes", "capa-fp,mimo-zf", "--seed", "7"])
            .args(extra)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let seq = run("a.csv", &["--sequential"]);
    assert_eq!(seq, run("b.csv", &["--threads", "3"]));
    let text = String::from_utf8(seq).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 3);
    assert!(text.lines().nth(1).unwrap().starts_with("capa-fp,1.00000000000e0,0,7,"));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario": {"num_luts": 2, "num_eves": 1}, "fp": {"max_iters": 5}}"#).unwrap();
    let out = bin().args(["single", "--schemes", "capa-fp", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let row = rdr.records().next().unwrap().unwrap();
    let secrecy: Vec<f64> = parse_list(&row[5]);
    assert_eq!(secrecy.len(), 2);
    assert!(row[6].parse::<usize>().unwrap() <= 5);
}

fn parse_list(s: &str) -> Vec<f64> {
    s.trim_matches(|c| c == '[' || c == ']').split(',').map(|t| t.parse().unwrap()).collect()
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.json");
    std::fs::write(&bad_cfg, r#"{"scenario": {"no_such_field": 1}}"#).unwrap();
    let cases: Vec<Vec<std::ffi::OsString>> = vec![
        vec!["warp".into()],
        vec!["power".into(), "--schemes".into(), "capa-xyz".into()],
        vec!["power".into(), "--values".into(), "1:0:3".into()],
        vec!["single".into(), "--config".into(), dir.path().join("missing.json").into()],
        vec!["single".into(), "--config".into(), bad_cfg.into()],
        vec!["single".into(), "--out".into(), dir.path().join("no/such/dir.csv").into()],
        vec!["power".into(), "--trials".into(), "0".into()],
    ];
    for args in cases {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}
