use std::path::Path;
use std::process::{Command, Output};

fn nse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nse"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_writes_one_row_per_method_and_instance() {
    let out = stdout(&nse(&[
        "solve",
        "--width",
        "6",
        "--height",
        "6",
        "--instance-count",
        "2",
        "--episodes",
        "5",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("salp-6x6-m4-s0,naive,4,0.5,0,"));
}

#[test]
fn sweeps_run() {
    let out = stdout(&nse(&[
        "sweep-fraction",
        "--width",
        "6",
        "--height",
        "5",
        "--instance-count",
        "1",
        "--methods",
        "recon",
        "--fractions",
        "0,1",
        "--timing",
    ]));
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().next().unwrap().ends_with("rescore_s"));

    let out = stdout(&nse(&[
        "sweep-agents",
        "--domain",
        "overcooked",
        "--width",
        "6",
        "--height",
        "6",
        "--instance-count",
        "1",
        "--counts",
        "1,3",
        "--methods",
        "naive",
    ]));
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",naive,1,") && rows[1].contains(",naive,3,"));
}

#[test]
fn generated_files_validate_and_feed_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = stdout(&nse(&[
        "gen-instances",
        "--domain",
        "warehouse",
        "--width",
        "9",
        "--height",
        "7",
        "--agents",
        "3",
        "--count",
        "2",
        "--seed",
        "4",
        "--out-dir",
        d,
    ]));
    let paths: Vec<&str> = out.lines().collect();
    assert_eq!(paths.len(), 2);
    assert!(paths[1].ends_with("warehouse_9x7_m3_s5.txt"));
    assert!(Path::new(paths[0]).exists());

    let summary = stdout(&nse(&["validate-instance", paths[0], paths[1]]));
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.contains("warehouse 9x7, 3 agents"));

    let out = stdout(&nse(&[
        "solve",
        "--instance",
        paths[0],
        "--methods",
        "naive,considerate",
        "--episodes",
        "3",
    ]));
    assert!(out
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("warehouse_9x7_m3_s4,naive,3,"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nwidth = 5\nheight = 5\ninstance_count = 1\nmethods = naive, recon\nepisodes = 2\n").unwrap();
    let out = stdout(&nse(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--agents",
        "2",
    ]));
    assert!(out
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("salp-5x5-m2-s0,naive,2,"));
}

#[test]
fn bad_inputs_fail_with_a_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(
        &bad,
        "domain salp\nwidth 3\nheight 1\nagents 1\nseed 0\ngrid\nA?L\nend\nagent 0 0 0 A\n",
    )
    .unwrap();
    let path = bad.to_str().unwrap();

    let out = nse(&["validate-instance", path]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("[instance]") && err.contains("line 7, column 2"),
        "{err}"
    );

    let out = nse(&["solve", "--instance", path]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[instance]"));

    let out = nse(&["solve", "--update-fraction", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));

    let out = nse(&["solve", "--methods", "telepathy"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method 'telepathy'"));

    let out = nse(&[
        "gen-instances",
        "--domain",
        "warehouse",
        "--width",
        "3",
        "--height",
        "3",
        "--agents",
        "9",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[instance]"));
}
