mod support;

use std::path::Path;
use std::process::{Command, Output};

use support::FIXTURE;

fn polarflip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarflip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_csv_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}.csv"));
        ok(&polarflip(&[
            "simulate",
            "--code",
            FIXTURE,
            "--decoder",
            "dscf",
            "--metric",
            "beta-relu:2.801,2.196",
            "--omega",
            "2",
            "--attempts",
            "16",
            "--ebn0",
            "2,2.5",
            "--seed",
            "42",
            "--min-errors",
            "30",
            "--min-frames",
            "500",
            "--workers",
            workers,
            "--out",
            path_str(&out),
        ]));
        files.push(std::fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "ebn0_db,frames,frame_errors,fer,mean_attempts,undetected,censored"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!("# SC baseline\ncode = {FIXTURE}\ndecoder = sc\nebn0 = 1.0\nseed = 9\nmin_frames = 50\nmin_errors = 1000\nmax_frames = 200\n"),
    )
    .unwrap();
    let csv = ok(&polarflip(&[
        "simulate",
        "--config",
        path_str(&cfg),
        "--max-frames",
        "120",
    ]));
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "1");
    assert_eq!(fields[1], "120");
    assert_eq!(fields[4], "1");
    assert_eq!(fields[6], "1");
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "this line has no equals sign\n").unwrap();
    assert!(!polarflip(&["simulate", "--config", path_str(&cfg)])
        .status
        .success());
    assert!(!polarflip(&["simulate", "--code", "/nonexistent/mask"])
        .status
        .success());
    assert!(!polarflip(&[
        "simulate",
        "--code",
        FIXTURE,
        "--decoder",
        "dscf",
        "--metric",
        "gamma"
    ])
    .status
    .success());
    assert!(
        !polarflip(&["simulate", "--code", FIXTURE, "--ebn0", "x,y"])
            .status
            .success()
    );

    let llr = dir.path().join("short.llr");
    std::fs::write(&llr, "1.0\n2.0\n").unwrap();
    assert!(
        !polarflip(&["decode", "--code", FIXTURE, "--llr-file", path_str(&llr)])
            .status
            .success()
    );
    std::fs::write(&llr, "1.0\nnot-a-number\n").unwrap();
    assert!(
        !polarflip(&["decode", "--code", FIXTURE, "--llr-file", path_str(&llr)])
            .status
            .success()
    );
}

#[test]
fn decode_reads_llr_file_and_dumps_trace() {
    let dir = tempfile::tempdir().unwrap();
    let llr = dir.path().join("frame.llr");
    // All-zero codeword, clean channel.
    std::fs::write(&llr, "4.0\n".repeat(256)).unwrap();
    let trace = dir.path().join("trace.csv");
    let text = ok(&polarflip(&[
        "decode",
        "--code",
        FIXTURE,
        "--llr-file",
        path_str(&llr),
        "--decoder",
        "dscf:2:64:beta-exact:2.206,1.225",
        "--trace",
        path_str(&trace),
    ]));
    assert!(
        text.contains("attempt 1 flips={} metric=0 crc=pass"),
        "{text}"
    );
    assert!(text.contains(&format!("u_hat={}", "0".repeat(256))));
    let csv = std::fs::read_to_string(trace).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "index,frozen,decision_llr,t,u_hat"
    );
    assert_eq!(csv.lines().count(), 257);
}

#[test]
fn decode_seeded_frame_lists_attempts() {
    let text = ok(&polarflip(&[
        "decode",
        "--code",
        FIXTURE,
        "--decoder",
        "dscf",
        "--metric",
        "alpha-exact:0.3367",
        "--seed",
        "3",
        "--index",
        "5",
        "--ebn0",
        "1.5",
    ]));
    assert!(text.lines().any(|l| l.starts_with("attempt 1 flips={}")));
    assert!(text.contains("payload="));
}

#[test]
fn construct_reproduces_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mask.frozen");
    ok(&polarflip(&[
        "construct",
        "--n",
        "8",
        "--k",
        "128",
        "--crc-width",
        "24",
        "--crc-poly",
        "1B2B117",
        "--design-ebn0",
        "2",
        "--out",
        path_str(&out),
    ]));
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        std::fs::read_to_string(FIXTURE).unwrap()
    );
}

#[test]
fn train_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("beta.txt");
    ok(&polarflip(&[
        "train",
        "--n",
        "6",
        "--k",
        "26",
        "--crc-width",
        "6",
        "--crc-poly",
        "43",
        "--form",
        "relu",
        "--ebn0",
        "1,2",
        "--samples",
        "300",
        "--epochs",
        "2",
        "--batch",
        "64",
        "--seed",
        "5",
        "--out",
        path_str(&out),
    ]));
    let report = std::fs::read_to_string(out).unwrap();
    for key in [
        "metric_form=relu",
        "beta_1=",
        "beta_2=",
        "final_loss=",
        "seed=5",
        "code_sha256=",
    ] {
        assert!(report.contains(key), "{key} missing from\n{report}");
    }
}
