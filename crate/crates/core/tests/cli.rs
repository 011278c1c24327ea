use std::fs;
use std::path::Path;
use std::process::Command;

use wglite::cli::main_with;

const SMALL: &str = r#"
[downlink]
latency_ms = 30
jitter_ms = 2
bandwidth_kbps = 10000

[workload]
trials = 2
ping_count = 4
transfer_bytes = 200000

[[flow]]
id = 1
dir = "down"
transport = "datagram"
first_byte = 4
packet_bytes = 1000
count = 20
"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("wglite").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn small_scenario(dir: &Path) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, SMALL).unwrap();
    p.to_string_lossy().into_owned()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for e in walk(dir) {
        files.push((
            e.strip_prefix(dir).unwrap().to_string_lossy().into_owned(),
            fs::read(&e).unwrap(),
        ));
    }
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn bench_run_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = small_scenario(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let (code, stdout, stderr) = run(&[
            "bench",
            "run",
            "--scenario",
            &scen,
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stderr}");
        assert!(stdout.contains("wireguard_like"));
    }
    let ta = tree(&a);
    assert_eq!(ta, tree(&b));
    let names: Vec<&str> = ta.iter().map(|(n, _)| n.as_str()).collect();
    assert!(
        names.contains(&"trials.csv")
            && names.contains(&"summary.csv")
            && names.contains(&"report.txt")
    );
    assert_eq!(names.iter().filter(|n| n.ends_with(".tsv")).count(), 6);
}

#[test]
fn bench_run_csv_format_and_trials_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = small_scenario(tmp.path());
    let out = tmp.path().join("o");
    let (code, stdout, _) = run(&[
        "bench",
        "run",
        "--scenario",
        &scen,
        "--presets",
        "wireguard_like",
        "--seed",
        "1",
        "--trials",
        "1",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("protocol,"));
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 2);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = small_scenario(tmp.path());
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(
        run(&[
            "bench",
            "run",
            "--scenario",
            &scen,
            "--presets",
            "tor_like",
            "--seed",
            "1",
            "--out",
            out
        ])
        .0,
        2
    );
    // no seed on the command line or in the file
    assert_eq!(
        run(&["bench", "run", "--scenario", &scen, "--out", out]).0,
        2
    );
    assert_eq!(
        run(&[
            "bench",
            "run",
            "--scenario",
            "/nonexistent.toml",
            "--seed",
            "1",
            "--out",
            out
        ])
        .0,
        2
    );
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[downlink]\nlatency_ms = -1\nbandwidth_kbps = 10\n").unwrap();
    assert_eq!(
        run(&[
            "bench",
            "run",
            "--scenario",
            bad.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out
        ])
        .0,
        2
    );
    assert_eq!(run(&["bench", "frobnicate"]).0, 2);
}

#[test]
fn aggregate_schema_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let (code, _, err) = run(&["bench", "aggregate", empty.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    let header_only = tmp.path().join("h.csv");
    let header = include_str!("../data/reference_trials.csv")
        .lines()
        .next()
        .unwrap();
    fs::write(&header_only, format!("{header}\n")).unwrap();
    assert_eq!(
        run(&["bench", "aggregate", header_only.to_str().unwrap()]).0,
        2
    );
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, format!("{header}\nx,1,a,1,1,1,1,1,1,1\n")).unwrap();
    assert_eq!(run(&["bench", "aggregate", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn aggregate_single_row_and_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one.csv");
    let header = include_str!("../data/reference_trials.csv")
        .lines()
        .next()
        .unwrap();
    fs::write(&one, format!("{header}\nsolo,1,1.5,2,3,4,6,5,7,8\n")).unwrap();
    let (code, out, _) = run(&[
        "bench",
        "aggregate",
        one.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().nth(1).unwrap(),
        "solo,1.5,2.0,3.0,4.0,6.0,5.0,7.0,8.0"
    );

    let summary = tmp.path().join("summary.csv");
    let (code, table, _) = run(&[
        "bench",
        "aggregate",
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference_trials.csv"),
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(table.contains("17002.2"));
    assert!(fs::read_to_string(summary)
        .unwrap()
        .contains("openvpn,21911.4"));
}

#[test]
fn vectors_pass() {
    let (code, out, _) = run(&["vectors"]);
    assert_eq!(code, 0);
    assert!(!out.contains("MISMATCH"));
    let (code, out, _) = run(&["vectors", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn sim_trace_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let scen = small_scenario(tmp.path());
    let (code, out, _) = run(&["sim", "trace", "--scenario", &scen, "--seed", "3"]);
    assert_eq!(code, 0);
    let trace = wglite::netsim::Trace::parse_tsv(&out).unwrap();
    assert!(trace.events.len() >= 20 * 3);

    let file = tmp.path().join("t.tsv");
    let (code, _, _) = run(&[
        "sim",
        "trace",
        "--scenario",
        &scen,
        "--seed",
        "3",
        "--presets",
        "openvpn_like",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(file)
        .unwrap()
        .contains("\tdeliver.down\t"));

    // a scenario without flows needs --presets
    assert_eq!(run(&["sim", "trace", "--scenario", "default"]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_wglite");
    assert_eq!(
        Command::new(bin)
            .arg("vectors")
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    let st = Command::new(bin)
        .args(["bench", "run", "--presets", "nope", "--out", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
}
