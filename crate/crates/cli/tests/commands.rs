use std::path::Path;
use std::process::{Command, Output};

fn energylab(args: &[&str]) -> Output {
    energylab_in(Path::new("."), args, &[])
}

fn energylab_in(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_energylab"));
    cmd.current_dir(dir).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn energy_prints_the_exact_value() {
    let o = energylab(&["energy", "--set", "ap:0:1:64", "--k", "3", "--op", "diff"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // 64^3 + 2 (63*64/2)^2
    assert!(stdout(&o).starts_with("E_3^diff(A, B) = 8390656\n"), "{}", stdout(&o));
}

#[test]
fn energy_json_and_inline_sets() {
    let o = energylab(&["energy", "--set", "{1,2,4}", "--op", "ratio", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["value"], "19");
    assert_eq!(doc["exact"], true);
}

#[test]
fn decomp_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = energylab_in(
        dir.path(),
        &["decomp", "--A", "gp:1:2:64", "--V", "gp:1:2:64", "--op", "ratio", "--k", "3", "--c1", "1/4", "--out", "cert.txt"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("cert.txt").is_file());

    let o = energylab_in(dir.path(), &["verify", "cert.txt"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).ends_with("certificate verified\n"));
}

#[test]
fn tampered_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = energylab_in(
        dir.path(),
        &["decomp", "--A", "ap:0:1:40", "--op", "diff", "--k", "2", "--c1", "1/2", "--out", "c.txt"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = dir.path().join("c.txt");
    let text = std::fs::read_to_string(&path).unwrap();
    let t_line = text.lines().find(|l| l.starts_with("t:")).unwrap();
    let t: u64 = t_line[2..].trim().parse().unwrap();
    std::fs::write(&path, text.replace(t_line, &format!("t: {}", t * 4))).unwrap();
    let o = energylab_in(dir.path(), &["verify", "c.txt"], &[]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("certificate REJECTED"));
}

#[test]
fn balance_prints_both_exponents() {
    let o = energylab(&["check", "--claim", "balance", "--b1", "13/6:-1/6", "--b2", "-14/19:11/19"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "x = 331/85\nresult = 129/85\n");
}

#[test]
fn check_emits_the_fixed_csv_columns() {
    let o = energylab(&["check", "--claim", "holder_mixed", "--A", "rand:500:3:12", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("claim,family,n,lhs,rhs,ratio,pass_mode,verdict"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("holder_mixed,rand:500:3:12,12,") && row.ends_with(",exact,pass"), "{row}");
    assert_eq!(lines.next(), None);
}

#[test]
fn scan_has_a_trailing_slope_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = energylab_in(
        dir.path(),
        &["scan", "--claim", "cor_convex_49_38", "--family", "ap:1:1", "--sizes", "16,32,64", "--f", "square", "--g", "square", "--out", "scan.csv"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("cor_convex_49_38,ap:1:1,slope,"));
    assert!(rows[4].ends_with(",constant-free-trend,pass"));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let args = ["scan", "--claim", "thm_main_38", "--family", "rand:10000:0x51", "--sizes", "8,16,24,32", "--f", "square", "--g", "square", "--format", "json"];
    let dir = Path::new(".");
    let one = energylab_in(dir, &args, &[("ENERGYLAB_THREADS", "1")]);
    let four = energylab_in(dir, &args, &[("ENERGYLAB_THREADS", "4")]);
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    let seq = energylab_in(dir, &seq_args, &[]);
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, seq.stdout);
}

#[test]
fn incidence_from_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.txt"), "0 0\n1 1\n2 2\n1 0\n").unwrap();
    std::fs::write(dir.path().join("l.txt"), "1 0\n0 0\n0 1\n").unwrap();
    let o = energylab_in(dir.path(), &["incidence", "--points", "p.txt", "--lines", "l.txt"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // y = x holds 3 points, y = 0 holds 2, y = 1 holds 1
    assert!(stdout(&o).contains("incidences = 6\nnaive = 6\n"), "{}", stdout(&o));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "1\n2\n3\n5\n8\n").unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"command": "energy", "set": "a.txt", "k": "2", "op": "sum"}"#,
    )
    .unwrap();
    let from_config = energylab(&["--config", dir.path().join("run.json").to_str().unwrap()]);
    let from_flags = energylab_in(dir.path(), &["energy", "--set", "a.txt", "--k", "2", "--op", "sum"], &[]);
    assert_eq!(from_config.status.code(), Some(0), "{}", stderr(&from_config));
    assert_eq!(from_config.stdout, from_flags.stdout);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"command": "energy", "sett": "ap:0:1:4"}"#).unwrap();
    let o = energylab(&["--config", dir.path().join("bad.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sett"), "{}", stderr(&o));

    let o = energylab(&["verify", "/no/such/cert.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));

    let o = energylab(&["energy", "--set", "ap:0:1:8", "--k", "1/2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = energylab(&["scan", "--claim", "no_such_claim", "--family", "ap:0:1", "--sizes", "4,8,16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cs_sandwich"), "valid names are listed: {}", stderr(&o));

    let o = energylab_in(Path::new("."), &["gen", "--family", "ap:0:1:3"], &[("ENERGYLAB_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(2));
}
