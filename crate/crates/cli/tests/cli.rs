use std::path::Path;
use std::process::{Command, Output};

fn corrmfg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrmfg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_toy_passes_at_interior_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrmfg(&["verify", "toy", "--beta", "1/5", "--c0", "1/20", "--c1", "3/32"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("Opt pass"));
    assert!(dir.path().join("verify.json").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn negative_controls_exit_one_with_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrmfg(&["verify", "toy", "--c1", "0"], &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness phi0: t=1"));
    let o = corrmfg(&["verify", "toy", "--perturb-m1", "1/100"], &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Con FAIL"));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrmfg(&["verify", "does-not-exist.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"game\": 3}").unwrap();
    let o = corrmfg(&["verify", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let o = corrmfg(&["verify", "toy", "--beta", "1/2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dpp_prints_phi0_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = corrmfg(&["dpp", "toy", "--phi", "phi0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("V(0, +1) = 0") && s.contains("V(0, -1) = 0"), "{s}");
    let csv = std::fs::read_to_string(dir.path().join("dpp.csv")).unwrap();
    assert!(csv.starts_with("strategy,t,history,flow_node,value,action,tie"));
}

#[test]
fn replay_reproduces_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[(&[&str], &[&str])] = &[
        (&["dpp", "toy"], &["dpp.csv"]),
        (&["window-scan", "--grid", "8"], &["window.csv"]),
        (&["epsilon-scan", "toy", "--N", "3,6", "--reps", "2000"], &["epsilon.csv", "epsilon_summary.csv"]),
        (&["chaos-scan", "toy", "--N", "5,50", "--reps", "500"], &["chaos.csv"]),
        (&["simulate", "toy", "--N", "4", "--deviation", "flip", "--reps", "2000"], &["simulate.csv", "simulate_states.csv"]),
    ];
    for (i, (args, files)) in runs.iter().enumerate() {
        let first = dir.path().join(format!("run{i}"));
        let again = dir.path().join(format!("replay{i}"));
        assert_eq!(corrmfg(args, &first).status.code(), Some(0), "{args:?}");
        let manifest = first.join("manifest.json");
        let o = corrmfg(&["replay", manifest.to_str().unwrap()], &again);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        for f in *files {
            let a = std::fs::read(first.join(f)).unwrap();
            let b = std::fs::read(again.join(f)).unwrap();
            assert_eq!(a, b, "{f} differs after replay");
        }
    }
}

#[test]
fn tampered_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(corrmfg(&["verify", "toy"], dir.path()).status.code(), Some(0));
    let path = dir.path().join("manifest.json");
    let text = std::fs::read_to_string(&path).unwrap().replace("3/32", "1/16");
    std::fs::write(&path, text).unwrap();
    let o = corrmfg(&["replay", path.to_str().unwrap()], &dir.path().join("r"));
    assert_eq!(o.status.code(), Some(2));
}
