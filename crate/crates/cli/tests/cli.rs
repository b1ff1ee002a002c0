use std::path::Path;
use std::process::{Command, Output};

fn eqvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqvar"))
        .args(args)
        .env_remove("EQVAR_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = eqvar(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_small(dir: &Path, p: &str, n: &str) {
    ok(&["simulate", "--out", s(dir), "--p", p, "--n", n, "--seed", "3", "--edge-prob", "0.5"]);
}

#[test]
fn simulate_writes_files_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    simulate_small(&dir, "6", "50");
    for f in [
        "data.csv",
        "truth_edges.txt",
        "truth_adjacency.csv",
        "weights.csv",
        "variances.csv",
        "manifest.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn fig2_preset_makes_ten_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fig2");
    ok(&["simulate", "--preset", "fig2", "--p", "5", "--n", "20", "--out", s(&dir)]);
    let subdirs = std::fs::read_dir(&dir).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(subdirs, 10);
    assert!(dir.join("b_0.9").join("data.csv").exists());
}

#[test]
fn unknown_config_key_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[simulate]\npp = 4\n").unwrap();
    let out = eqvar(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pp"));
}

#[test]
fn learn_then_replay_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_small(&sim, "6", "80");
    let learn = tmp.path().join("learn");
    let data = sim.join("data.csv");
    ok(&[
        "learn", "--data", s(&data), "--out", s(&learn), "--iterations", "200", "--chains", "2",
        "--neighborhood", "transposition", "--jobs", "2",
    ]);
    for f in ["pip.csv", "dag.txt", "warm_start.json", "manifest.json", "chain_001/trace.csv", "chain_000/samples.jsonl"] {
        assert!(learn.join(f).exists(), "{f}");
    }
    let warm: Vec<usize> = serde_json::from_str::<serde_json::Value>(
        &std::fs::read_to_string(learn.join("warm_start.json")).unwrap(),
    )
    .unwrap()["ordering"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    assert_eq!(warm.len(), 6);

    let again = tmp.path().join("again");
    ok(&["replay", s(&learn.join("manifest.json")), "--out", s(&again)]);
    for f in ["pip.csv", "chain_000/trace.csv", "chain_001/samples.jsonl", "dag.txt"] {
        assert_eq!(
            std::fs::read(learn.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }

    let report = ok(&["eval", "--truth", s(&sim), "--learn", s(&learn)]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["hd"].as_f64().unwrap() >= 0.0);

    let diag = tmp.path().join("diag");
    let summary = ok(&["diagnose", s(&learn), "--out", s(&diag)]);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["chains"], 2);
    assert!(diag.join("gr.csv").exists());
}

#[test]
fn decomposable_baseline_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_small(&sim, "5", "60");
    let learn = tmp.path().join("learn");
    ok(&[
        "learn", "--data", s(&sim.join("data.csv")), "--out", s(&learn), "--iterations", "50",
        "--score", "decomposable", "--init", "random",
    ]);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(learn.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["score"], "decomposable");
}

#[test]
fn perfect_recovery_fixture_and_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("t");
    let learn = tmp.path().join("l");
    std::fs::create_dir_all(&truth).unwrap();
    std::fs::create_dir_all(&learn).unwrap();
    let adj = "0,1,0\n0,0,1\n0,0,0\n";
    std::fs::write(truth.join("truth_adjacency.csv"), adj).unwrap();
    std::fs::write(learn.join("pip.csv"), adj).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--truth", s(&truth), "--learn", s(&learn)])).unwrap();
    for k in ["hd", "fnr_pct", "fdr_pct", "flip_pct"] {
        assert_eq!(v[k].as_f64().unwrap(), 0.0, "{k}");
    }
    std::fs::remove_file(learn.join("pip.csv")).unwrap();
    assert!(!eqvar(&["eval", "--truth", s(&truth), "--learn", s(&learn)]).status.success());
}

#[test]
fn batch_eval_reports_mean_and_se() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("t");
    let learn = tmp.path().join("l");
    for (k, pip) in ["0,1\n0,0\n", "0,0\n1,0\n"].iter().enumerate() {
        let (t, l) = (truth.join(format!("rep_{k}")), learn.join(format!("rep_{k}")));
        std::fs::create_dir_all(&t).unwrap();
        std::fs::create_dir_all(&l).unwrap();
        std::fs::write(t.join("truth_adjacency.csv"), "0,1\n0,0\n").unwrap();
        std::fs::write(l.join("pip.csv"), pip).unwrap();
    }
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--batch", "--truth", s(&truth), "--learn", s(&learn)])).unwrap();
    assert_eq!(v["hd"]["mean"].as_f64().unwrap(), 1.0);
    assert_eq!(v["hd"]["se"].as_f64().unwrap(), 1.0);
    assert_eq!(v["replicates"].as_array().unwrap().len(), 2);
}

#[test]
fn diagnose_flags_disagreeing_chains_and_rejects_one_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let line = |edges: &str| format!("{{\"iteration\":0,\"ordering\":[1,2,3],\"edges\":{edges}}}\n");
    std::fs::write(a.join("samples.jsonl"), line("[[1,2]]").repeat(12)).unwrap();
    std::fs::write(b.join("samples.jsonl"), line("[]").repeat(12)).unwrap();
    let out = tmp.path().join("d");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["diagnose", s(&a), s(&b), "--out", s(&out)])).unwrap();
    assert_eq!(v["infinite"], 1);
    assert!(!eqvar(&["diagnose", s(&a), "--out", s(&out)]).status.success());
}

#[test]
fn oracle_tables_and_guard() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_small(&sim, "3", "100");
    let out = tmp.path().join("oracle");
    ok(&["oracle", "--data", s(&sim.join("data.csv")), "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("order_probs.csv")).unwrap();
    let probs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 6);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);

    let trend = tmp.path().join("trend");
    ok(&["oracle-trend", "--truth", s(&sim), "--out", s(&trend), "--ns", "30,300", "--replicates", "3"]);
    assert_eq!(std::fs::read_to_string(trend.join("trend.csv")).unwrap().lines().count(), 7);

    let big = tmp.path().join("big");
    simulate_small(&big, "7", "30");
    let res = eqvar(&["oracle", "--data", s(&big.join("data.csv")), "--out", s(&tmp.path().join("o7"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("exact enumeration"));
}

#[test]
fn itd_prints_a_json_array() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_small(&sim, "5", "100");
    let order: Vec<usize> = serde_json::from_str(&ok(&["itd", "--data", s(&sim.join("data.csv"))])).unwrap();
    let mut sorted = order.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, vec![1, 2, 3, 4, 5]);
}

#[test]
fn config_file_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[simulate]\np = 4\nn = 30\n").unwrap();
    let out = tmp.path().join("sim");
    let status = Command::new(env!("CARGO_BIN_EXE_eqvar"))
        .args(["simulate", "--out", s(&out)])
        .env("EQVAR_CONFIG", &cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read_to_string(out.join("data.csv")).unwrap();
    assert_eq!(first.lines().count(), 30);
    assert_eq!(first.lines().next().unwrap().split(',').count(), 4);
}
