use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cournot-la"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn clear_prints_uniform_price() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["clear", "--bids", "1105,1046,995", "--csv", "clear.csv"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("uniform price 41.46"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("clear.csv")).unwrap();
    assert!(csv.starts_with("kind,id,value,lmp"));
}

#[test]
fn clear_with_line_cap_reports_congestion() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["clear", "--bids", "781,1268,645", "--line-cap", "1-3=16"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("congested"), "{out}");
    assert!(out.contains("Reverse"), "{out}");
}

#[test]
fn clear_rejects_out_of_range_bids() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["clear", "--bids", "2500,0,0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn nash_writes_benchmark_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["nash", "--grid", "5", "--json", "bench.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("converged after"));
    assert!(dir.path().join("nash.csv").exists());
    let bench: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert_eq!(bench["converged"], true);
}

#[test]
fn congested_nash_reports_cycle_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["nash", "--congested", "--grid", "10"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.contains("NOT converged"), "{out}");
    assert!(out.contains("cycle"), "{out}");
}

#[test]
fn learn_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "learn",
            "--mode",
            "convergence",
            "--seeds",
            "1,2",
            "--iterations",
            "1000",
            "--grid",
            "5",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let run = dir.path().join("run");
    for f in [
        "benchmark.json",
        "sweep.json",
        "trace_seed1.csv",
        "trace_seed2.csv",
        "summary_seed1.json",
    ] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let trace = std::fs::read_to_string(run.join("trace_seed1.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,supplier,kind,action_mw,profit_per_h,lmp"));
    assert_eq!(trace.lines().count(), 1 + 3 * 1000);

    let o = cli(
        &[
            "report",
            "--trace",
            "run/trace_seed1.csv",
            "--benchmark",
            "run/benchmark.json",
            "--json",
            "s.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let from_report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    let from_learn: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("summary_seed1.json")).unwrap()).unwrap();
    assert_eq!(from_report["rows"], from_learn["rows"]);
}

#[test]
fn learn_runs_from_shipped_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/threebus.json");
    let o = cli(
        &[
            "learn",
            "--scenario",
            scenario.to_str().unwrap(),
            "--mode",
            "rationality",
            "--iterations",
            "2000",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("grid best response"));
}

#[test]
fn thread_cap_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cournot-la"))
        .args([
            "learn",
            "--mode",
            "rationality",
            "--seeds",
            "1,2,3",
            "--iterations",
            "500",
            "--out",
            "t",
        ])
        .env("COURNOT_LA_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("3 seeds (3 ok)"));
}

#[test]
fn scenario_command_matches_shipped_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["scenario"], dir.path());
    let shipped =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/threebus.json")).unwrap();
    assert_eq!(stdout(&o).trim(), shipped.trim());
}
