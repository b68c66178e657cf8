use std::path::Path;
use std::process::Command;

fn nearopt(args: &[&str], cwd: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_nearopt"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn sample_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    nearopt(&["profiles", "--out", "p.csv", "--snapshots", "24", "--seed", "3"], d);
    let msg = nearopt(
        &[
            "sample", "--profiles", "p.csv", "--snapshots", "24", "--out", "store.jsonl",
            "--levels", "0,0.1,0.5", "--n-dirs", "4", "--seed", "9", "--export-lp", "model.lp",
        ],
        d,
    );
    assert!(msg.contains("records"), "{msg}");
    assert!(d.join("store.jsonl.header.json").exists());
    assert!(std::fs::read_to_string(d.join("model.lp")).unwrap().contains("Subject To"));

    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    nearopt(&["analyze", "export", "--store", "store.jsonl", "--submissions", "empty.jsonl", "--out", "empty"], d);
    for f in ["mad.csv", "priorities.csv", "correlations.csv"] {
        assert_eq!(std::fs::read_to_string(d.join("empty").join(f)).unwrap().lines().count(), 1, "{f}");
    }

    let store = std::fs::read_to_string(d.join("store.jsonl")).unwrap();
    let priorities = [vec!["co2"], vec!["co2", "visual-impact"], vec!["land-use"], vec!["co2", "slack", "heat-price", "vulnerability"]];
    let subs: Vec<String> = store
        .lines()
        .skip(1)
        .zip(priorities.iter().cycle())
        .enumerate()
        .map(|(i, (line, pr))| {
            let rec: serde_json::Value = serde_json::from_str(line).unwrap();
            serde_json::json!({
                "session_id": format!("s{i}"),
                "final_point": rec["point"],
                "final_metrics": rec["metrics"],
                "stated_priorities": pr,
                "willingness_to_pay": i as f64,
            })
            .to_string()
        })
        .collect();
    std::fs::write(d.join("subs.jsonl"), subs.join("\n") + "\n").unwrap();
    for report in ["mad", "priorities", "correlations", "hulls"] {
        nearopt(&["analyze", report, "--store", "store.jsonl", "--submissions", "subs.jsonl", "--out", "out"], d);
    }
    nearopt(&["analyze", "export", "--store", "store.jsonl", "--submissions", "subs.jsonl", "--out", "bundle"], d);
    assert!(d.join("bundle/strips.csv").exists());
    for f in ["mad.csv", "priorities.csv", "correlations.csv", "hulls.csv"] {
        let single = std::fs::read(d.join("out").join(f)).unwrap();
        assert_eq!(single, std::fs::read(d.join("bundle").join(f)).unwrap(), "{f}");
    }
    let hulls = std::fs::read_to_string(d.join("bundle/hulls.csv")).unwrap();
    assert!(hulls.lines().count() > 1);
}

#[test]
fn mismatched_profiles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    nearopt(&["profiles", "--out", "p.csv", "--snapshots", "24"], dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_nearopt"))
        .args(["sample", "--profiles", "p.csv", "--out", "s.jsonl"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--snapshots 24"));
}
