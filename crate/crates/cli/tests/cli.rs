use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgforge_core::kg::{load_dataset, LoadMode};

fn kgforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgforge"))
        .args(args)
        .env_remove("LLM_MODEL")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn toy(dir: &Path) -> PathBuf {
    let root = dir.join("toy");
    let o = kgforge(&["fixtures", "toy", "--out", p(&root)]);
    assert!(o.status.success(), "{}", stderr(&o));
    root
}

#[test]
fn stats_reports_toy_counts() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let o = kgforge(&["stats", p(&root)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "entities\t8\nrelations\t3\ntrain\t12\nvalid\t2\ntest\t2\n");

    let o = kgforge(&["stats", p(&root), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_train"], 12);
}

#[test]
fn stats_on_missing_directory_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let o = kgforge(&["stats", p(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let cfg = root.join("run.json");
    assert_eq!(kgforge(&["enrich", "--config", p(&cfg), "--strategy", "Q"]).status.code(), Some(2));
    assert_eq!(kgforge(&["enrich", "--config", p(&cfg)]).status.code(), Some(2));
    let o = kgforge(&["enrich", "--config", "/does/not/exist.json", "--strategy", "E"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exist.json"));
    let o = kgforge(&["enrich", "--config", p(&cfg), "--strategy", "S", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn entity_strategy_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let out = dir.path().join("bundles");
    let o = kgforge(&["enrich", "--config", p(&root.join("run.json")), "--strategy", "E", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("entity/entity2textlong.txt")).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with("/m/0bay\tAmerican film director"));
    assert!(!out.join("relation").exists());
}

#[test]
fn structure_strategy_obeys_count_law() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let out = dir.path().join("b");
    let o = kgforge(&[
        "enrich", "--config", p(&root.join("run.json")), "--strategy", "S", "--k", "3", "--self-loop", "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("structure/manifest.json")).unwrap()).unwrap();
    let n_pairs = manifest["settings"]["n_pairs"].as_u64().unwrap();
    let n_loops = manifest["settings"]["n_self_loops"].as_u64().unwrap();
    assert_eq!(n_loops, 8);
    assert_eq!(manifest["settings"]["config"]["k"], 3);

    let aug = dir.path().join("aug");
    let o = kgforge(&["compose", "--base", p(&root), "--bundle", p(&out.join("structure")), "--out", p(&aug)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let base = load_dataset(&root, LoadMode::Strict).unwrap().graph;
    let augmented = load_dataset(&aug, LoadMode::Strict).unwrap().graph;
    // pairs are distinct (head, tail) by construction
    assert_eq!((augmented.train().len() - base.train().len()) as u64, n_pairs + n_loops);
    let original = fs::read_to_string(root.join("train.txt")).unwrap();
    assert!(fs::read_to_string(aug.join("train.txt")).unwrap().starts_with(&original));
}

#[test]
fn missing_fixture_entries_are_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    fs::write(root.join("fixture.jsonl"), "").unwrap();
    let cfg = root.join("run.json");
    let o = kgforge(&["enrich", "--config", p(&cfg), "--strategy", "R", "--modes", "g"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(root.join("out/relation/audit.json").is_file());
    let o = kgforge(&["enrich", "--config", p(&cfg), "--strategy", "R", "--modes", "g", "--allow-partial"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn compose_without_bundles_copies_base() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let out = dir.path().join("copy");
    let o = kgforge(&["compose", "--config", p(&root.join("run.json")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["train.txt", "valid.txt", "test.txt", "entity2text.txt", "relation2text.txt", "entity2textlong.txt"] {
        assert_eq!(fs::read(root.join(name)).unwrap(), fs::read(out.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn compose_rejects_bundle_from_other_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let other = dir.path().join("syn");
    assert!(kgforge(&["fixtures", "synthetic", "--out", p(&other)]).status.success());
    let o = kgforge(&["enrich", "--config", p(&other.join("run.json")), "--strategy", "R"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = kgforge(&[
        "compose", "--base", p(&root), "--bundle", p(&other.join("out/relation")), "--out", p(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bundle was built for dataset"));
}

#[test]
fn eval_against_identical_copy_has_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let copy = dir.path().join("copy");
    assert!(kgforge(&["compose", "--base", p(&root), "--out", p(&copy)]).status.success());
    let out = dir.path().join("eval");
    let o = kgforge(&[
        "eval", "--config", p(&root.join("run.json")), "--base", p(&root), "--augmented", p(&copy), "--seeds", "2",
        "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    for key in ["mr", "mrr", "hits1", "hits3", "hits10", "accuracy"] {
        assert_eq!(report["median_delta"][key], 0.0, "{key}");
    }
    assert_eq!(fs::read_to_string(out.join("comparison.txt")).unwrap(), stdout(&o));
}

#[test]
fn eval_with_missing_augmented_dir_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let root = toy(dir.path());
    let missing = dir.path().join("no_such_augmented");
    let o = kgforge(&["eval", "--base", p(&root), "--augmented", p(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_augmented"));
}
