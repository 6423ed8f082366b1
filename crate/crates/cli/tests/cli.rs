use std::process::{Command, Output};

fn latdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latdec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dmt_csv_has_header_and_reference_values() {
    let o = latdec(&["--command", "dmt-curves", "--m", "2", "--n", "4", "--r-grid", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,optimal,nld_bound,vblast");
    assert_eq!(lines[1], "0,8,6,2");
    assert_eq!(lines[3], "2,0,0,0");
}

#[test]
fn short_vector_csv_footers() {
    let o = latdec(&["--command", "short-vector-scaling", "--eps", "0.2,0.3,0.5", "--trials", "20000", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("epsilon,prob,ci_low,ci_high,trials\n"));
    assert!(text.lines().any(|l| l.starts_with("# slope,slope=")));
    assert!(text.contains("# reference_exponents,full_diversity=4,lattice=4"));
}

#[test]
fn ser_sweep_json_is_well_formed() {
    let o = latdec(&["--command", "ser-sweep", "--decoders", "ml,nld", "--snr-db", "10", "--trials", "2000", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "ser-sweep");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["decoder"], "ml");
    assert_eq!(rows[0]["trials"], 2000);
}

#[test]
fn primitive_count_passes_bound() {
    let o = latdec(&["--command", "primitive-count", "--dim", "4", "--k-min", "1", "--k-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("1,464,16,pass"));
    assert!(text.contains("2,5312,256,pass"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(&cfg, "command = \"dmt-curves\"\nm = 1\nn = 1\nr_grid = [0.0]\n").unwrap();
    let o = latdec(&["--config", cfg.to_str().unwrap(), "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "r,optimal,nld_bound,vblast\n0,3,3,1\n");
}

#[test]
fn unknown_config_key_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"dmt-curves\"\nbogus = 1\n").unwrap();
    let o = latdec(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn invalid_settings_exit_with_config_code() {
    let unknown = latdec(&["--command", "ser-sweep", "--decoders", "ml,zf", "--snr-db", "10"]);
    assert_eq!(unknown.status.code(), Some(2));
    let err = String::from_utf8_lossy(&unknown.stderr);
    assert!(err.contains("ml") && err.contains("nld") && err.contains("lll"), "{err}");

    assert_eq!(latdec(&["--command", "short-vector-scaling", "--eps", ""]).status.code(), Some(2));
    assert_eq!(latdec(&["--command", "nope"]).status.code(), Some(2));
    assert_eq!(latdec(&["--command", "ser-sweep", "--snr-db", "10", "--trials", "10"]).status.code(), Some(2));
    assert_eq!(latdec(&["--help"]).status.code(), Some(0));
}

#[test]
fn exceeded_budget_exits_with_budget_code() {
    let o = latdec(&["--command", "primitive-count", "--dim", "6", "--k-min", "3", "--k-max", "3", "--budget", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_a_failure() {
    let o = latdec(&["--command", "dmt-curves", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
