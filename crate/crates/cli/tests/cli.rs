use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn toolprint(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toolprint"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("TOOLPRINT_WORKERS")
        .output()
        .expect("spawn toolprint")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(dir: &Path, chunk_sizes: &str) -> PathBuf {
    let path = dir.join("small.json");
    let text = format!(
        r#"{{
  "name": "small",
  "seed": 11,
  "corpora": [
    {{ "name": "c", "source": "synthetic", "spec": {{ "n_docs": 300, "genre": "twitter" }}, "groups": ["C1"] }}
  ],
  "corpus_groups": ["C1"],
  "tools": [
    {{ "name": "a", "kind": "lexicon_compound", "output_class": "continuous", "params": {{ "lexicon": {{}} }} }},
    {{ "name": "b", "kind": "pattern_average", "output_class": "continuous", "params": {{ "lexicon": {{}} }} }},
    {{ "name": "c", "kind": "lexicon_compound", "output_class": "discrete3", "params": {{ "lexicon": {{}} }} }}
  ],
  "chunk_sizes": {chunk_sizes},
  "classifiers": [{{ "type": "knn", "k": 3 }}, {{ "type": "tree", "max_depth": 3 }}]
}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn standalone_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let tweets = examples().join("tweets.json");
    let tools = examples().join("tools.json");

    ok(&toolprint(d, &["--seed", "5", "score", "--synthetic", p(&tweets), "--tools", p(&tools)]));
    let scores = d.join("scores.csv");
    assert!(scores.exists() && d.join("scores.json").exists() && d.join("corpus.jsonl").exists());
    let header = std::fs::read_to_string(&scores).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "doc_id,vader_like,textblob_like,stanza_like,siebert_like,bert5_like");

    let rescored = d.join("rescored");
    let corpus = d.join("corpus.jsonl");
    ok(&toolprint(
        &rescored,
        &["--seed", "5", "score", "--corpus", p(&corpus), "--tools", p(&tools)],
    ));
    assert_eq!(
        std::fs::read_to_string(&scores).unwrap(),
        std::fs::read_to_string(rescored.join("scores.csv")).unwrap()
    );

    ok(&toolprint(d, &["normalize", "--scores", p(&scores), "--norm", "N3"]));
    let n3 = std::fs::read_to_string(d.join("scores_N3.csv")).unwrap();
    for line in n3.lines().skip(1) {
        for v in line.split(',').skip(1) {
            let v: f64 = v.parse().unwrap();
            assert!(v == -1.0 || v == 0.0 || v == 1.0, "{v}");
        }
    }

    let feats = d.join("feats");
    ok(&toolprint(&feats, &["--seed", "5", "features", "--scores", p(&scores), "--chunk-size", "100"]));
    let dataset = feats.join("dataset.csv");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(feats.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_chunks"], 24);
    assert_eq!(std::fs::read_to_string(&dataset).unwrap().lines().count(), 1 + 24 * 5);

    let model_dir = d.join("model");
    ok(&toolprint(&model_dir, &["--seed", "5", "train", "--dataset", p(&dataset), "--classifier", "tree"]));
    let model = model_dir.join("model.json");
    assert!(model.exists());

    let eval_dir = d.join("eval");
    ok(&toolprint(&eval_dir, &["eval", "--model", p(&model), "--dataset", p(&dataset)]));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("metrics.json")).unwrap()).unwrap();
    let f1 = metrics["macro_f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));

    ok(&toolprint(d, &["dcor", "--scores", p(&scores)]));
    let dcor = std::fs::read_to_string(d.join("dcor.csv")).unwrap();
    assert_eq!(dcor.lines().count(), 6);
    roxmltree::Document::parse(&std::fs::read_to_string(d.join("dcor.svg")).unwrap()).unwrap();

    ok(&toolprint(d, &["vote", "--scores", p(&scores), "--norm", "N1"]));
    assert_eq!(std::fs::read_to_string(d.join("agreement_N1.csv")).unwrap().lines().count(), 6);

    ok(&toolprint(d, &["describe", "--scores", p(&scores)]));
    assert!(d.join("describe.json").exists() && d.join("boxplot.svg").exists());
}

#[test]
fn monte_carlo_features() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&toolprint(
        d,
        &[
            "score",
            "--synthetic",
            p(&examples().join("tweets.json")),
            "--tools",
            p(&examples().join("tools.json")),
        ],
    ));
    ok(&toolprint(
        d,
        &["features", "--scores", p(&d.join("scores.csv")), "--monte-carlo", "20", "--subset-size", "4"],
    ));
    let text = std::fs::read_to_string(d.join("dataset.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 20 * 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(manifest["feature_names"].as_array().unwrap().len(), 4);
}

#[test]
fn run_writes_reports_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[50]");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    ok(&toolprint(&first, &["run", p(&cfg)]));
    ok(&toolprint(&second, &["--workers", "2", "run", p(&cfg)]));
    for name in ["cells.csv", "aggregates.csv", "dcor_C1.csv", "agreement_raw.csv", "summary.json"] {
        assert!(first.join(name).exists(), "{name}");
    }
    assert!(first.join("tree_C1_all_raw_c50_tree3.dot").exists());
    assert_eq!(
        std::fs::read_to_string(first.join("cells.csv")).unwrap(),
        std::fs::read_to_string(second.join("cells.csv")).unwrap()
    );

    let again = dir.path().join("again");
    ok(&toolprint(&again, &["report", p(&first.join("summary.json")), "--formats", "csv"]));
    assert_eq!(
        std::fs::read_to_string(first.join("cells.csv")).unwrap(),
        std::fs::read_to_string(again.join("cells.csv")).unwrap()
    );
    assert!(!again.join("summary.json").exists());
}

#[test]
fn mc_forces_monte_carlo_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[50]");
    let out = dir.path().join("out");
    ok(&toolprint(&out, &["mc", p(&cfg), "--formats", "csv"]));
    let cells = std::fs::read_to_string(out.join("cells.csv")).unwrap();
    assert!(cells.lines().skip(1).all(|l| l.contains("_m100_l15_")), "{cells}");
}

#[test]
fn partial_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[50, 1000]");
    let out = toolprint(&dir.path().join("out"), &["run", p(&cfg), "--formats", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let cells = std::fs::read_to_string(dir.path().join("out/cells.csv")).unwrap();
    assert!(cells.contains("exceeds"));
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "bogus": 1}"#).unwrap();
    let out = toolprint(dir.path(), &["run", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let missing = toolprint(dir.path(), &["run", p(&dir.path().join("missing.json"))]);
    assert_eq!(missing.status.code(), Some(2));

    let cfg = small_config(dir.path(), "[0]");
    assert_eq!(toolprint(dir.path(), &["run", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[50]");
    let out = Command::new(env!("CARGO_BIN_EXE_toolprint"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(["run", p(&cfg), "--formats", "json"])
        .env("TOOLPRINT_WORKERS", "3")
        .output()
        .unwrap();
    ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["timing"]["workers"], 3);
}
