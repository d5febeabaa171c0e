use std::fs;
use std::process::Command;

use flexsim::engine::{METRICS_HEADER, SUMMARY_HEADER};
use flexsim::{load_workload, Workload};

fn flexsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flexsim"))
}

#[test]
fn synthetic_run_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    let summary = dir.path().join("summary.csv");
    let tasks = dir.path().join("tasks.csv");
    let usage = dir.path().join("usage.csv");
    let status = flexsim()
        .args([
            "--scheduler",
            "oversub",
            "--nodes",
            "5",
            "--horizon",
            "1800",
        ])
        .args(["--synthetic", "n=200,rate=0.3,seed=9"])
        .arg("--out")
        .arg(&metrics)
        .arg("--summary")
        .arg(&summary)
        .arg("--dump-workload")
        .arg(&tasks)
        .arg(&usage)
        .output()
        .unwrap()
        .status;
    assert!(status.success());

    let m = fs::read_to_string(&metrics).unwrap();
    assert_eq!(m.lines().next().unwrap(), METRICS_HEADER.join(","));
    assert_eq!(m.lines().count(), 1 + 180);

    let s = fs::read_to_string(&summary).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], SUMMARY_HEADER.join(","));
    assert!(lines[1].starts_with("oversub,5,320,640,180,"));

    // replaying the dumped workload reproduces the metrics
    let replay = dir.path().join("replay.csv");
    let status = flexsim()
        .args([
            "--scheduler",
            "oversub",
            "--nodes",
            "5",
            "--horizon",
            "1800",
        ])
        .arg("--workload")
        .arg(&tasks)
        .arg("--usage")
        .arg(&usage)
        .arg("--out")
        .arg(&replay)
        .arg("--summary")
        .arg(dir.path().join("s2.csv"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(fs::read(&replay).unwrap(), fs::read(&metrics).unwrap());
    let w: Workload = load_workload(&tasks, &usage).unwrap();
    assert_eq!(w.len(), 200);
}

#[test]
fn malformed_workload_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.csv");
    let usage = dir.path().join("usage.csv");
    fs::write(
        &tasks,
        "task_id,job_id,arrival_s,duration_s,cpu_req,mem_req\n1,1,0,60,x,2\n",
    )
    .unwrap();
    fs::write(&usage, "task_id,offset_s,cpu_use,mem_use\n1,0,1,1\n").unwrap();
    let out = flexsim()
        .arg("--workload")
        .arg(&tasks)
        .arg("--usage")
        .arg(&usage)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tasks.csv:2"), "{err}");
}

#[test]
fn unknown_scheduler_is_rejected() {
    let out = flexsim()
        .args(["--scheduler", "bogus", "--synthetic", "n=1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
