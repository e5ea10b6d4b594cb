//! End-to-end checks of the binary: exit codes, output artifacts, and the
//! determinism contract, all through real process invocations.

use std::path::Path;
use std::process::{Command, Output};

use bicell::experiment_runner::{read_snapshot, summary_excluding_timing, TIMESERIES_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bicell"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn base_config(out_dir: &Path, extra: &str) -> String {
    format!(
        "count_x = 24\nd1 = 0.1\nd2 = 0.1\na = 1\nb = 1\nD1 = 1\nD2 = 1\n\
         preset = random\namplitude = 1\nseed = 4\nt_end = 2\ndt = 0.001\n\
         snapshot_stride = 500\nout_dir = {}\n{extra}",
        out_dir.display()
    )
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_writes_artifacts_and_honors_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), "run.cfg", &base_config(&out_dir, ""));

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).starts_with("simulate: ok ("));

    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("config.seed = 9"));
    assert!(summary.contains("run.status = ok"));

    let series = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    assert!(series.starts_with(TIMESERIES_HEADER));
    // 2000 steps recorded plus the initial sample and the header line.
    assert_eq!(series.lines().count(), 2002);

    let (t0, state) = read_snapshot(&out_dir.join("snap_000000.bin")).unwrap();
    assert_eq!(t0, 0.0);
    assert_eq!(state.grid().axis(0).count, 24);
    let (t_final, _) = read_snapshot(&out_dir.join("snap_002000.bin")).unwrap();
    assert_eq!(t_final, 2.0);
}

#[test]
fn verify_passes_and_repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // Long enough that unit windows and snapshots exist past the burn-in
    // (about 2.6 here); shorter runs make the tail checks report FAIL for
    // lack of post-transient evidence.
    let body = base_config(&out_dir, "").replace("t_end = 2", "t_end = 4");
    let cfg = write_config(dir.path(), "run.cfg", &body);

    let run = || {
        let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        let text = stdout_of(&out);
        assert!(text.trim_end().ends_with("verify: PASS"), "stdout: {text}");
        let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
        (text, summary_excluding_timing(&summary))
    };
    let (stdout_a, summary_a) = run();
    let (stdout_b, summary_b) = run();
    assert_eq!(stdout_a, stdout_b);
    assert_eq!(summary_a, summary_b);
    assert!(summary_a.contains("run.all_pass = true"));
}

#[test]
fn verify_reports_diagnostic_failure_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // Far outside the absorbing ball with far too little time to enter it:
    // the absorption diagnostic honestly fails while the run itself is fine.
    let body = base_config(
        &out_dir,
        "check_windows = false\ncheck_tails = false\ncheck_truncated_h1 = false\n",
    )
    .replace("amplitude = 1", "amplitude = 12")
    .replace("t_end = 2", "t_end = 0.2");
    let cfg = write_config(dir.path(), "run.cfg", &body);

    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("verify: FAIL"), "stdout: {text}");
    assert!(text.contains("absorption"), "stdout: {text}");
}

#[test]
fn config_problems_exit_2_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    // Missing file.
    let out = bin()
        .args(["verify", "--config"])
        .arg(dir.path().join("nope.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Duplicate key, with both line numbers named.
    let body = format!("{}d1 = 0.2\n", base_config(&out_dir, ""));
    let cfg = write_config(dir.path(), "dup.cfg", &body);
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("duplicate key `d1`"), "stderr: {}", stderr_of(&out));

    // Unknown key, named with its line.
    let body = base_config(&out_dir, "dx = 0.5\n");
    let cfg = write_config(dir.path(), "unknown.cfg", &body);
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown keys: `dx`"), "stderr: {}", stderr_of(&out));

    // Clap usage error: missing required --config.
    let out = bin().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_blowup_exits_3_and_preserves_partial_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let body = base_config(&out_dir, "blowup_threshold = 1.5\n")
        .replace("amplitude = 1", "amplitude = 4");
    let cfg = write_config(dir.path(), "run.cfg", &body);

    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("blowup guard tripped"), "stderr: {}", stderr_of(&out));

    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("run.status = numerical-failure"));
    assert!(summary.contains("run.error = "));
    assert!(summary.contains("constants.k0 = "));
}

#[test]
fn bounds_prints_constants_without_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), "run.cfg", &base_config(&out_dir, ""));

    let out = bin().args(["bounds", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("constants.k0 = "));
    assert!(text.contains("run.status = bounds-only"));

    assert!(out_dir.join("summary.txt").exists());
    assert!(!out_dir.join("timeseries.csv").exists());
}

#[test]
fn trace_reports_volume_growth_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let body = base_config(
        &out_dir,
        "trace_m = 2\ntrace_settle = 1\ntrace_align = 1\ntrace_measure = 2\n",
    )
    .replace("count_x = 24", "count_x = 16");
    let cfg = write_config(dir.path(), "run.cfg", &body);

    let out = bin().args(["trace", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("trace: m = 2, q_m = "), "stdout: {text}");

    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("trace.m = 2"));
    assert!(summary.contains("trace.q_m = "));
}

#[test]
fn sweep_isolates_failing_cells_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    // The amplitude-6 cell trips the blowup guard immediately; the other
    // cell must still complete and the process must report the worst code.
    let body = "count_x = 16\nd1 = 0.1\nd2 = 0.1\na = 1\nb = 1\nD1 = 1\nD2 = 1\n\
         preset = random\nseed = 4\nt_end = 0.5\ndt = 0.002\nsnapshot_stride = 0\n\
         blowup_threshold = 3\ncheck_windows = false\ncheck_tails = false\n\
         check_truncated_h1 = false\nsweep.amplitude = 1, 6\n";
    let cfg = write_config(dir.path(), "sweep.cfg", body);

    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("run 0000 [amplitude = 1]: pass"), "stdout: {text}");
    assert!(text.contains("run 0001 [amplitude = 6]: numerical-failure"), "stdout: {text}");
    assert!(text.contains("blowup guard tripped"), "stdout: {text}");

    let aggregate = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    let lines: Vec<&str> = aggregate.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("run,dir,amplitude,status"));
    assert!(lines[1].contains(",pass,true,"));
    assert!(lines[2].contains(",numerical-failure,false,"));
    assert!(out_dir.join("run_0000").join("summary.txt").exists());
    assert!(out_dir.join("run_0001").join("summary.txt").exists());
}
