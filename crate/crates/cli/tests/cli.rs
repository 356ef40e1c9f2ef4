use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 7] = [
    "--fine-level",
    "4",
    "--coarse-levels",
    "2,3",
    "--layers",
    "1,1.5",
    "--linear",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lod-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV lines with the `wall_time` column blanked.
fn without_wall_time(csv: &str) -> Vec<String> {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "wall_time").unwrap();
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[col] = "";
            f.join(",")
        })
        .collect()
}

#[test]
fn convergence_csv_has_fixed_columns() {
    let mut args = vec!["convergence"];
    args.extend(SMALL);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "H,coarse_layers,fine_layers,l2_error,h1_error,h1_seminorm_error,eoc_l2,eoc_h1,newton_iterations,wall_time,error"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "2.50000e-1");
    assert_eq!(first[6], "", "first row has no EOC");
    assert_eq!(lines.count(), 1);
}

#[test]
fn identical_runs_give_identical_tables() {
    let mut args = vec!["convergence"];
    args.extend(SMALL);
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out.json");
    fs::write(
        &cfg,
        "# small study\nfine_level = 4\ncoarse_levels = 2,3\nlayers = 1,1\nlinear = true\nformat = csv\nepsilon = 0.1\n",
    )
    .unwrap();
    let o = run(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--layers",
        "2,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["coarse_layers"], 2.0);
        assert!(row["error"].is_null());
    }
    assert!(json["average_eoc_l2"].is_number());
}

#[test]
fn failed_row_gives_exit_code_one() {
    let o = run(&[
        "convergence",
        "--fine-level",
        "4",
        "--coarse-levels",
        "2,3",
        "--layers",
        "1,1",
        "--fine-layers",
        "4,1",
        "--linear",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(','), "first row succeeds");
    assert!(rows[1].contains("rank deficient"));
}

#[test]
fn invalid_configuration_is_rejected() {
    let o = run(&["convergence", "--epsilon=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let o = run(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!run(&["convergence", "--layers", "1", "--layer-multiplier", "1"])
        .status
        .success());
}

#[test]
fn decay_emits_profiles() {
    let o = run(&["decay", "--fine-level", "4", "--decay-level", "2", "--decay-nodes", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("node,k,tail_energy,fitted_theta\n"));
    assert!(out.lines().skip(1).any(|l| l.split(',').nth(2) == Some("0.00000e0")));
}

#[test]
fn solve_writes_solution_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("history.csv");
    let o = run(&[
        "solve",
        "--fine-level",
        "4",
        "--coarse-levels",
        "2",
        "--layers",
        "1",
        "--history",
        history.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("x,y,u\n"));
    assert_eq!(out.lines().count(), 1 + 17 * 17);
    let hist = fs::read_to_string(Path::new(&history)).unwrap();
    assert!(hist.starts_with("iter,residual_norm,zeta\n0,"));
}
