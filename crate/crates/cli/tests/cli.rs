use std::path::Path;
use std::process::{Command, Output};

fn lcp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcp")).current_dir(dir).args(args).output().expect("spawn lcp")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_RUN: &str = "epochs = 2\nn_train = 300\nn_val = 50\nn_test = 50\nhidden = 16\nbatch_size = 64\n";

#[test]
fn audit_without_scores_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcp(dir.path(), &["audit", "--schema", "builtin:fh37k"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--scores"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lcp(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.dsl"), "schema s\nattrs a b\ngroup g exclusive : a\n").unwrap();
    let out = lcp(dir.path(), &["schema-validate", "--schema", "bad.dsl"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("E_GROUP_SIZE: line 3"), "{err}");

    let out = lcp(dir.path(), &["schema-validate", "--schema", "missing.dsl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E_IO:"));
}

#[test]
fn audit_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("s.dsl"),
        "schema tiny\nattrs a b c\ngroup g exclusive exhaustive : a b\nrequire c : a\n",
    )
    .unwrap();
    // consistent, incomplete, impossible (a and b), impossible (c without a)
    std::fs::write(p.join("preds.csv"), "id,a,b,c\nr0,0.9,0.1,0.7\nr1,0.2,0.3,0.1\nr2,0.8,0.6,0\nr3,0.1,0.9,0.9\n")
        .unwrap();
    let out = lcp(p, &["audit", "--schema", "s.dsl", "--scores", "preds.csv", "--threshold", "0.5", "--out", "report.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_total"], 4);
    assert_eq!(report["n_consistent"], 1);
    assert_eq!(report["n_incomplete"], 1);
    assert_eq!(report["n_impossible"], 2);
    assert_eq!(report["failure_ratio"], 0.75);
    assert_eq!(report["per_rule_counts"]["exclude:a|b"], 1);
    assert_eq!(report["per_rule_counts"]["require:c:a"], 1);
}

#[test]
fn compensate_fills_empty_groups() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("s.dsl"), "schema tiny\nattrs a b c\ngroup g exclusive exhaustive : a b c\n").unwrap();
    std::fs::write(p.join("scores.csv"), "id,a,b,c\nx,-1,0.4,0.2\ny,0.9,0,0\n").unwrap();
    let out = lcp(p, &["compensate", "--schema", "s.dsl", "--scores", "scores.csv", "--out", "comp.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(p.join("comp.csv")).unwrap(), "id,a,b,c\nx,0,1,0\ny,1,0,0\n");
}

#[test]
fn training_twice_gives_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("cfg.txt"), SMALL_RUN).unwrap();
    for name in ["a.bin", "b.bin"] {
        let out = lcp(p, &["train", "--config", "cfg.txt", "--out", name, "--log", "log.jsonl"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(p.join("a.bin")).unwrap();
    assert!(a.starts_with(b"LCPM"));
    assert_eq!(a, std::fs::read(p.join("b.bin")).unwrap());
    let log = std::fs::read_to_string(p.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["p_ex"].is_number() && v["p_d"].is_number() && v["loss"].is_number());
    }
    let out = lcp(p, &["train", "--config", "cfg.txt", "--out", "c.bin", "--seed", "99"]);
    assert!(out.status.success());
    assert_ne!(a, std::fs::read(p.join("c.bin")).unwrap());
}

#[test]
fn synth_train_eval_metrics_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("cfg.txt"), SMALL_RUN).unwrap();
    let steps: [&[&str]; 5] = [
        &["synth", "data", "--config", "cfg.txt", "--out-dir", "data"],
        &["train", "--config", "cfg.txt", "--out", "m.bin", "--features", "data/train_features.csv", "--labels", "data/train_labels.csv"],
        &[
            "eval", "--model", "m.bin", "--features", "data/test_features.csv", "--scores-out", "s.csv", "--preds-out", "p.csv",
            "--compensated-out", "c.csv",
        ],
        &["metrics", "--schema", "builtin:fh37k", "--preds", "c.csv", "--labels", "data/test_labels.csv", "--out", "m.json"],
        &["audit", "--schema", "builtin:fh37k", "--scores", "c.csv", "--binary", "--out", "a.json"],
    ];
    for args in steps {
        let out = lcp(p, args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
    let audit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("a.json")).unwrap()).unwrap();
    assert_eq!(audit["n_incomplete"], 0);
    assert_eq!(audit["n_total"], 50);
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("m.json")).unwrap()).unwrap();
    let plain = metrics["plain"]["acc_avg"].as_f64().unwrap();
    let enforced = metrics["consistency enforced"]["acc_avg"].as_f64().unwrap();
    assert!(enforced <= plain);
}

#[test]
fn fmr_report_covers_every_category() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = lcp(p, &["synth", "embeddings", "--out", "e.emb", "--identities", "80", "--images", "4", "--dim", "16"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = lcp(
        p,
        &[
            "--threads", "2", "fmr-report", "--embeddings", "e.emb", "--min-conf", "0", "--target-fmr", "0.01", "--out", "r.json",
            "--histograms", "h.csv", "--bins", "20",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    for tag in ["WM", "WF", "BM", "BF"] {
        for cat in ["CA-CA", "CA-CS", "CA-S2S", "CS-CS", "CS-S2S", "S2S-S2S"] {
            assert!(table.lines().any(|l| l.starts_with(tag) && l.contains(cat)), "{tag} {cat}\n{table}");
        }
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 24);
    assert_eq!(report["reference"], "WM");
    let hist = std::fs::read_to_string(p.join("h.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 4 * 12 * 20);

    let out = lcp(p, &["fmr-report", "--embeddings", "e.emb", "--min-conf", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E_INPUT"));
    let out = lcp(p, &["fmr-report", "--embeddings", "e.emb", "--min-conf", "0", "--target-fmr", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E_INSUFFICIENT"));
}
