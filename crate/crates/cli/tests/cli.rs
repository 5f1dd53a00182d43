use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/switchgrass_pdu.toml")
}

fn feedflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feedflow")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run(cmd: &str, out: &Path, extra: &[&str]) -> Output {
    let sc = scenario();
    let mut args = vec![cmd, "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    feedflow(&args)
}

/// Data rows of a versioned CSV as header-keyed records.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# feedflow"));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_scenario_validates() {
    let sc = scenario();
    let o = feedflow(&["validate", "--scenario", sc.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn corrupted_file_is_a_parse_error_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario()).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replacen("[bale]", "[bale\n", 1)).unwrap();
    let o = feedflow(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn cyclic_graph_is_an_invariant_error_naming_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario()).unwrap();
    let cyclic = text.replacen(
        "[equipment.bale_conveyor]\n",
        "[equipment.bale_conveyor]\npredecessors = [\"grinder_1\"]\n",
        1,
    );
    let path = dir.path().join("cyclic.toml");
    std::fs::write(&path, cyclic).unwrap();
    let o = feedflow(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let msg = stderr(&o) + &String::from_utf8_lossy(&o.stdout);
    assert!(msg.contains("cycle") && msg.contains("bale_conveyor") && msg.contains("grinder_1"), "{msg}");
}

#[test]
fn hybrid_solve_writes_a_flat_reactor_feed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", dir.path(), &["--delta", "10", "--pattern", "6L,10M,4H*10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let feed = column(&dir.path().join("trajectory.csv"), "reactor_feed");
    let first = feed[0];
    assert!(feed.iter().all(|x| (x - first).abs() <= 1e-6 * first));
    let svg = std::fs::read_to_string(dir.path().join("reactor_feed.svg")).unwrap();
    let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<&str> = points.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
    assert!(ys.iter().all(|y| *y == ys[0]), "reactor feed line is not flat");
    for f in ["infeed.svg", "inventory.svg", "kpis.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let k = json(&dir.path().join("kpis.json"));
    let horizon = (k["kpis"]["min_time_hours"].as_f64().unwrap() * 6.0).round() as usize;
    assert_eq!(feed.len(), horizon);
}

#[test]
fn feed_forward_in_feed_stops_at_times() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "solve",
        dir.path(),
        &["--delta", "10", "--control", "bffpc", "--milling", "without", "--pattern", "random:seed=7"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let infeed = column(&dir.path().join("trajectory.csv"), "X");
    assert!(infeed.iter().any(|&x| x.abs() < 1e-9));
    assert_eq!(json(&dir.path().join("kpis.json"))["config"]["seed"], 7);
}

#[test]
fn processed_mass_does_not_depend_on_the_period_length() {
    let mut masses = Vec::new();
    for delta in ["10", "5"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run("solve", dir.path(), &["--delta", delta, "--control", "bffpc"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        masses.push(json(&dir.path().join("kpis.json"))["kpis"]["mass_processed"].as_f64().unwrap());
    }
    for m in masses {
        assert!((m - 78.4).abs() < 1e-6, "{m}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--delta", "10", "--control", "bffpc", "--seed", "3"];
    assert_eq!(code(&run("solve", a.path(), &args)), 0);
    assert_eq!(code(&run("solve", b.path(), &args)), 0);
    for f in ["trajectory.csv", "kpis.json", "reactor_feed.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn infeasible_horizon_exits_one_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", dir.path(), &["--delta", "10", "--horizon", "10"]);
    assert_eq!(code(&o), 1);
    let reason = std::fs::read_to_string(dir.path().join("reason.txt")).unwrap();
    assert!(reason.contains("infeasible"));
}

#[test]
fn bad_settings_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run("solve", dir.path(), &["--delta", "7"])), 3);
    assert_eq!(code(&run("solve", dir.path(), &["--pattern", "6Q"])), 2);
    assert_eq!(code(&run("solve", dir.path(), &["--control", "pid"])), 2);
    assert_eq!(code(&run("solve", dir.path(), &["--pattern", "60L,100M,40H", "--seed", "1"])), 3);
    assert_eq!(code(&run("solve", dir.path(), &["--pattern", "6L*10"])), 3);
}

#[test]
fn mps_export_writes_one_model_per_option() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", dir.path(), &["--delta", "10", "--expansion", "fixed", "--export-mps"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("hpc_k0.0.mps")).unwrap();
    assert!(text.contains("ROWS") && text.contains("COLUMNS") && text.trim_end().ends_with("ENDATA"));
    assert!(!dir.path().join("hpc_k0.1.mps").exists());
}

const TOY: &str = r#"
name = "one_bale"
period_min = 10

[moisture]
levels = ["dry"]

[bale]
width_m = 1.0
height_m = 1.0
length_m = 2.0
mass_dry_mg = 0.5
density_dry_mg_per_m3 = { dry = 0.2 }
count = { dry = 1 }

[economics]
pellet_price_usd_per_dry_mg = 80
adjustment_penalty_usd_per_dry_mg_per_min = 5
expansion_options = [0.0, 1.0]

[pattern]
default = "1D"

[equipment.feed]
kind = "conveyor"
max_infeed_dry_mg_per_h = 0.9
unit_cost_usd_per_h = 1

[equipment.bin]
kind = "storage"
predecessors = ["feed"]
max_infeed_dry_mg_per_h = 5
unit_cost_usd_per_h = 2
mass_capacity_dry_mg = 1
volume_capacity_m3 = 10
inflow_density_dry_mg_per_m3 = 0.2
"#;

#[test]
fn one_bale_minimum_time_is_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("toy.toml");
    std::fs::write(&sc, TOY).unwrap();
    let out = dir.path().join("out");
    for bisect in [false, true] {
        let mut args = vec!["mintime", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()];
        if bisect {
            args.push("--bisect");
        }
        let o = feedflow(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        // 0.5 dry Mg at 0.9 dry Mg/h, rounded up to whole 10-minute periods.
        let want = (0.5f64 / 0.9 * 6.0).ceil() / 6.0;
        let got = json(&out.join("mintime.json"))["hours"].as_f64().unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        let (header, rows) = read_csv(&out.join("log.csv"));
        assert_eq!(header, ["iter", "stage", "T_dry", "feasible", "objective"]);
        assert!(!rows.is_empty());
    }
}

#[test]
fn comparing_a_run_with_itself_gives_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("compare", dir.path(), &["--delta", "10", "--control", "bffpc"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = json(&dir.path().join("comparison.json"));
    for d in c["deltas"].as_array().unwrap() {
        assert!(d["percent"].is_null() || d["percent"].as_f64().unwrap() == 0.0, "{d}");
    }
    assert!(c["mismatch"].is_null());
    assert!(dir.path().join("a/trajectory.csv").exists() && dir.path().join("b/trajectory.csv").exists());
}

#[test]
fn optimized_expansion_doubles_the_storage_for_block_feeding() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "compare",
        dir.path(),
        &["--delta", "10", "--pattern", "60L,100M,40H", "--expansion", "fixed", "--expansion-b", "optimized", "--mintime"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = json(&dir.path().join("b/kpis.json"));
    assert_eq!(b["kpis"]["expansion"].as_f64(), Some(1.0));
    let a = json(&dir.path().join("a/kpis.json"));
    assert_eq!(a["kpis"]["expansion"].as_f64(), Some(0.0));
    assert!(b["kpis"]["coefficient_of_variation"].as_f64().unwrap() < 1e-6);
}
