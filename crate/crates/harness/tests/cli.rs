mod common;

use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use tabeval::transcript::GenerationMode;

use common::*;

fn tabeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabeval"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&tabeval(&["--help"])), 0);
    assert_eq!(code(&tabeval(&["--version"])), 0);
    assert_eq!(code(&tabeval(&[])), 1);
    assert_eq!(code(&tabeval(&["frobnicate"])), 1);
    assert_eq!(code(&tabeval(&["replay", "--dataset", "x.jsonl"])), 1);
}

#[test]
fn describe_text_and_json() {
    let e2e = fixture("e2e.jsonl");
    let livesum = fixture("livesum.jsonl");
    let out = tabeval(&["describe", "--dataset", s(&e2e), "--dataset", s(&livesum)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("e2e") && text.contains("livesum"), "{text}");
    assert!(text.contains("5.40") && text.contains("1138.40"), "{text}");

    let out = tabeval(&["describe", "--dataset", s(&livesum), "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let team = &v["livesum"]["tables"]["team"];
    assert_eq!(team["rows"]["mean"].as_f64(), Some(3.0));
    assert_eq!(team["cols"]["max"].as_f64(), Some(9.0));
}

#[test]
fn describe_bad_dataset_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "not json\n").unwrap();
    let out = tabeval(&["describe", "--dataset", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(
        code(&tabeval(&[
            "describe",
            "--dataset",
            s(&tmp.path().join("absent.jsonl"))
        ])),
        2
    );
}

#[test]
fn convert_matches_checked_in_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &str, Option<&str>, &str); 3] = [
        ("e2e", "sources/e2e.csv", None, "e2e.jsonl"),
        ("livesum", "sources/livesum.jsonl", None, "livesum.jsonl"),
        (
            "rotowire",
            "sources/rotowire.data",
            Some("sources/rotowire.text"),
            "rotowire.jsonl",
        ),
    ];
    for (format, input, text, expected) in cases {
        let output = tmp.path().join(expected);
        let input = fixture(input);
        let mut args = vec![
            "convert",
            "--format",
            format,
            "--input",
            s(&input),
            "--output",
            s(&output),
        ];
        let text_path = text.map(fixture);
        if let Some(t) = &text_path {
            args.extend(["--text", s(t)]);
        }
        let out = tabeval(&args);
        assert_eq!(code(&out), 0, "{format}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(
            fs::read_to_string(&output).unwrap(),
            fs::read_to_string(fixture(expected)).unwrap(),
            "{format}"
        );
    }
    let out = tabeval(&[
        "convert",
        "--format",
        "rotowire",
        "--input",
        s(&fixture("sources/rotowire.data")),
        "--output",
        s(&tmp.path().join("x.jsonl")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn replay_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let recs = records("rotowire.jsonl");
    let transcript = tmp.path().join("t.jsonl");
    write_transcript(
        &transcript,
        &transcript_of(&recs, GenerationMode::Unstructured, |_, r| oracle_markdown(r)),
    );
    let out_dir = tmp.path().join("out");
    let out = tabeval(&[
        "replay",
        "--dataset",
        s(&fixture("rotowire.jsonl")),
        "--mode",
        "unstructured",
        "--out-dir",
        s(&out_dir),
        "--transcript",
        s(&transcript),
        "--concurrency",
        "4",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("player: presence") && stdout.contains("exact 1.000"),
        "{stdout}"
    );
    for f in [
        "report.json",
        "scores.csv",
        "errors.json",
        "transcript.jsonl",
        "manifest.json",
    ] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let scores = fs::read_to_string(out_dir.join("scores.csv")).unwrap();
    assert!(scores.starts_with("example_id,table_type,present,generation_failed,cell_f1"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["concurrency"], 4);
}

#[test]
fn replay_rejects_unknown_norm_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tabeval(&[
        "replay",
        "--dataset",
        s(&fixture("e2e.jsonl")),
        "--mode",
        "structured",
        "--out-dir",
        s(tmp.path()),
        "--transcript",
        s(&tmp.path().join("t.jsonl")),
        "--norm-flags",
        "no-such-flag",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unreachable_endpoint_exits_3() {
    // Bind then drop to get a port nothing listens on.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let tmp = tempfile::tempdir().unwrap();
    let endpoint = format!("http://127.0.0.1:{port}/v1");
    let out = tabeval(&[
        "run",
        "--dataset",
        s(&fixture("e2e.jsonl")),
        "--mode",
        "structured",
        "--out-dir",
        s(tmp.path()),
        "--endpoint",
        &endpoint,
        "--model",
        "m",
        "--retry-limit",
        "0",
        "--concurrency",
        "1",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let transcript = fs::read_to_string(tmp.path().join("transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), 1);
    assert!(transcript.contains("\"transport\""));
}

#[test]
fn run_without_exemplar_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tabeval(&[
        "run",
        "--dataset",
        s(&fixture("e2e.jsonl")),
        "--mode",
        "unstructured",
        "--out-dir",
        s(tmp.path()),
        "--model",
        "m",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--exemplar"));
}
