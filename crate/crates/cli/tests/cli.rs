use std::path::Path;
use std::process::{Command, Output};

fn qecforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qecforge"))
        .args(args)
        .env("QECFORGE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn root_file(dir: &Path) -> String {
    let path = dir.join("root.lattice");
    let o = qecforge(&["lattice", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn census_counts_and_depth_guard() {
    let o = qecforge(&["census", "--depth", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "depth,count\n0,1\n1,36\n2,1440\n");
    assert_eq!(stdout(&qecforge(&["census", "--depth", "0"])), "depth,count\n0,1\n");
    assert_eq!(qecforge(&["census", "--depth", "5"]).status.code(), Some(4));
}

#[test]
fn estimate_exact_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let root = root_file(dir.path());
    let exact = qecforge(&[
        "estimate",
        &root,
        "--exact",
        "--criterion",
        "residual",
        "--scope",
        "z-only",
    ]);
    assert!(exact.status.success());
    assert_eq!(stdout(&exact).trim(), "exact P_L = 0.00317056874949195");

    let silent = dir.path().join("silent.toml");
    std::fs::write(&silent, "base_px = 0.0\nbase_pz = 0.0\n").unwrap();
    let o = qecforge(&[
        "estimate",
        &root,
        "--noise",
        silent.to_str().unwrap(),
        "--trials",
        "5000",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("P_L = 0.000000 "), "{}", stdout(&o));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = root_file(dir.path());
    // selector naming a face that does not exist
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "base_px = 0.0\nbase_pz = 0.1\n[[override]]\ntarget = \"face 99\"\nadd_pz = 0.1\n",
    )
    .unwrap();
    assert_eq!(
        qecforge(&["estimate", &root, "--noise", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // too large to enumerate
    let big = dir.path().join("big.lattice");
    qecforge(&["lattice", "--rows", "5", "--cols", "5", "--out", big.to_str().unwrap()]);
    assert_eq!(
        qecforge(&["estimate", big.to_str().unwrap(), "--exact"]).status.code(),
        Some(4)
    );
    // a corrupted lattice file
    let text = std::fs::read_to_string(&root).unwrap().replacen("\n0 1 ", "\n0 5 ", 1);
    let broken = dir.path().join("broken.lattice");
    std::fs::write(&broken, text).unwrap();
    assert_eq!(qecforge(&["estimate", broken.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(
        qecforge(&["train", "dephasing", "--agents", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(qecforge(&["train", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(qecforge(&["explore", "--p-expl", "0"]).status.code(), Some(2));
}

#[test]
fn explore_tree_sizes() {
    let o = qecforge(&["explore", "--p-expl", "1", "--radius", "1", "--estimator-trials", "500"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 37);
    let o = qecforge(&["explore", "--radius", "0", "--estimator-trials", "500"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn train_writes_outputs_and_replays_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = qecforge(&[
            "train",
            "dephasing",
            "--desk-scale",
            "--agents",
            "2",
            "--trials",
            "8",
            "--estimator-trials",
            "4000",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for file in [
        "curve.csv",
        "agents.csv",
        "scenario.toml",
        "best_agent_0.json",
        "manifest.json",
    ] {
        assert!(a.join(file).is_file(), "missing {file}");
    }
    let curve = std::fs::read_to_string(a.join("curve.csv")).unwrap();
    assert!(curve.starts_with("trial_index,mean_qubits,std_qubits,reward_rate,mean_final_PL,mean_qubits_rewarded\n"));
    assert_eq!(curve.lines().count(), 9);
    assert_eq!(curve, std::fs::read_to_string(b.join("curve.csv")).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["schema_version"], 1);

    // warm start from the saved best agent
    let out = dir.path().join("warm");
    let o = qecforge(&[
        "train",
        "transfer-plaquette",
        "--agents",
        "1",
        "--trials",
        "2",
        "--estimator-trials",
        "2000",
        "--pretrained",
        a.join("best_agent_0.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lattice_from_moves() {
    let o = qecforge(&["lattice", "--actions", "0,0,0,8;0,4,0,4;0,8,4,8"]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("21 qubits (3 added)"), "{err}");
    assert!(err.contains("distance Z 4"), "{err}");
    assert_eq!(qecforge(&["lattice", "--actions", "0,0,0"]).status.code(), Some(2));
    // an illegal move is an invariant violation
    assert_eq!(qecforge(&["lattice", "--actions", "0,0,0,1"]).status.code(), Some(3));
}
