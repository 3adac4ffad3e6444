use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use viewpath::files::{ArmFile, SceneFile};

const SMALL: &[&str] = &["--m", "30", "--n", "4", "--voxel-size", "0.1"];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn viewpath(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viewpath"));
    for (k, _) in std::env::vars() {
        if k.starts_with("VIEWPATH_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn plan(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["plan", "--layout", "linear", "--path", "straight", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    viewpath(&args)
}

#[test]
fn help_and_usage_errors() {
    let o = viewpath(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Exit codes"));
    let o = viewpath(&["plan", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error[usage]"));
    let o = viewpath(&["plan", "--scene", "a.toml", "--layout", "linear"]);
    assert_eq!(code(&o), 2);
    let o = viewpath(&["sweep", "--param", "v-base", "--values", "0.3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plan_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = plan(dir.path(), &["--dump-candidates"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("executable         yes"));
    for f in ["viewpath.txt", "base_path.txt", "report.csv", "observed.ply", "visibility.csv", "candidates.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let cands = fs::read_to_string(dir.path().join("candidates.csv")).unwrap();
    let header = cands.lines().next().unwrap();
    assert!(header.starts_with("layer,"));
    // Three layers after the start, 30 candidates each.
    assert_eq!(cands.lines().count(), 1 + 3 * 30);
    let ply = fs::read_to_string(dir.path().join("observed.ply")).unwrap();
    assert!(ply.starts_with("ply\nformat ascii 1.0\n"));
}

#[test]
fn unfiltered_plan_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = plan(dir.path(), &["--no-joint-filter"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    if s.contains("executable         no") {
        assert!(dir.path().join("viewpath_executed.txt").is_file());
    }
    let o = plan(dir.path(), &["--no-joint-filter", "--planner", "see-nearest"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plan_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = plan(a.path(), &["--all-images"]);
    let ob = plan(b.path(), &["--all-images"]);
    assert_eq!(code(&oa), 0);
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["viewpath.txt", "base_path.txt", "report.csv", "observed.ply", "visibility.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

fn samples(o: &Output) -> String {
    let s = stdout(o);
    let n = s.split_whitespace().find(|w| w.starts_with("N=")).expect("N= in output");
    n.to_string()
}

#[test]
fn flag_beats_env_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "layout = \"linear\"\npath = \"straight\"\n[planner]\nn = 5\nm = 30\nvoxel_size = 0.1\n").unwrap();
    let out = dir.path().join("o");
    let (cfg, out) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    let o = viewpath(&["plan", "--config", cfg, "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(samples(&o), "N=5");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viewpath"));
    let o = cmd.env("VIEWPATH_N", "3").args(["plan", "--config", cfg, "--out", out]).output().unwrap();
    assert_eq!(samples(&o), "N=3");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viewpath"));
    let o = cmd.env("VIEWPATH_N", "3").args(["plan", "--config", cfg, "--out", out, "--n", "4"]).output().unwrap();
    assert_eq!(samples(&o), "N=4");
}

#[test]
fn error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = viewpath(&["plan", "--scene", missing.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 6, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[io]"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "voxel_size = \"big\"\n").unwrap();
    let o = viewpath(&["plan", "--scene", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[parse]"));

    let o = viewpath(&["plan", "--v-base=-1", "--out", out]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[validation]"));

    let arm = fs::read_to_string(data("arm.toml")).unwrap().replacen("ready = [0.0,", "ready = [9.0,", 1);
    let arm_path = dir.path().join("arm.toml");
    fs::write(&arm_path, arm).unwrap();
    let o = viewpath(&["plan", "--arm", arm_path.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    // Waypoints through the middle of the cube.
    let wp = dir.path().join("wp.txt");
    fs::write(&wp, "-2 0\n2 0\n").unwrap();
    let o = viewpath(&["plan", "--scene", data("single_cube.toml").to_str().unwrap(), "--waypoints", wp.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn oracle_check_small() {
    let o = viewpath(&["oracle-check", "--instances", "3", "--verbose"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("0 failures"));
    let o = viewpath(&["oracle-check", "--instances", "3", "--budget", "1"]);
    assert_eq!(code(&o), 7, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[oracle]"));
}

#[test]
fn compare_and_sweep_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["compare", "--layouts", "linear", "--paths", "straight", "--out", out];
    args.extend_from_slice(SMALL);
    let o = viewpath(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let txt = fs::read_to_string(dir.path().join("compare.txt")).unwrap();
    assert_eq!(txt, stdout(&o));
    for t in ["Coverage study", "Joint reachability ablation", "stopping", "Entire camera stream", "Executability audit"] {
        assert!(txt.contains(t), "{t}");
    }
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(csv.starts_with("layout,path,n,variant,mode,"));

    let mut args = vec!["sweep", "--layout", "linear", "--path", "straight", "--param", "t-step", "--values", "1,2", "--all-images"];
    args.extend_from_slice(SMALL);
    let o = viewpath(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("t_step,n,"));
    assert!(lines[1].starts_with("1,4,"));
}

#[test]
fn generated_scenario_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    let o = viewpath(&["gen-scenario", "--layout", "linear", "--path", "straight", "--voxel-size", "0.1", "--n", "4", "--out", g.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let text = fs::read_to_string(g.join("scene.toml")).unwrap();
    let (sf, d) = SceneFile::load(&g.join("scene.toml")).unwrap();
    let again = SceneFile::from_scene(&sf.to_scene(&d).unwrap(), sf.voxel_size).unwrap().to_toml();
    assert_eq!(again, text);

    let text = fs::read_to_string(g.join("arm.toml")).unwrap();
    let arm = ArmFile::parse(&text).unwrap().to_arm().unwrap();
    assert_eq!(ArmFile::from_arm(&arm).to_toml(), text);

    // Generated layout and path against the same scene and waypoints from files.
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = plan(&a, &[]);
    let mut args: Vec<String> = vec![
        "plan".into(),
        "--scene".into(),
        g.join("scene.toml").to_str().unwrap().to_string(),
        "--waypoints".into(),
        g.join("waypoints.txt").to_str().unwrap().to_string(),
        "--out".into(),
        b.to_str().unwrap().to_string(),
    ];
    args.extend(SMALL.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let ob = viewpath(&args);
    assert_eq!(code(&ob), 0, "{}", stderr(&ob));
    assert_eq!(fs::read(a.join("viewpath.txt")).unwrap(), fs::read(b.join("viewpath.txt")).unwrap());
    assert_eq!(fs::read(a.join("base_path.txt")).unwrap(), fs::read(g.join("base_path.txt")).unwrap());
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(b.join("report.csv")).unwrap());
    let _ = oa;
}

#[test]
fn shipped_data_loads() {
    for s in ["triangle.toml", "linear.toml", "single_cube.toml"] {
        let (sf, d) = SceneFile::load(&data(s)).unwrap();
        sf.to_scene(&d).unwrap();
    }
    ArmFile::load(&data("arm.toml")).unwrap().to_arm().unwrap();
    let o = viewpath(&["plan", "--config", data("example.toml").to_str().unwrap(), "--m", "20", "--n", "4", "--out", tempfile::tempdir().unwrap().path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
