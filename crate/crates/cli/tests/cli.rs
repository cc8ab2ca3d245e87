//! End-to-end tests of the `stc` binary over a mock backend.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stc_core::scorer::MockFixture;

fn stc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stc"))
}

fn run(args: &[&str]) -> Output {
    stc().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// A self-contained workspace: mock model, vocabularies, split files,
/// embeddings, and a config wired to absolute paths.
struct Workspace {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    config: PathBuf,
    out: PathBuf,
}

fn write_workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let mut fixture = MockFixture::with_default_logit(Some(0.0));
    fixture.insert(
        "the love is as MASK as rose.",
        vec![
            ("thorny".to_string(), Some(3.0)),
            ("red".to_string(), Some(2.0)),
            ("soft".to_string(), Some(1.0)),
        ],
    );
    fixture.insert(
        "the anger is as MASK as fire.",
        vec![("hot".to_string(), Some(2.5))],
    );
    fixture.insert(
        "the child is as MASK as tree.",
        vec![("tall".to_string(), Some(2.0))],
    );
    fixture.insert(
        "the anger is as hot as MASK.",
        vec![("fire".to_string(), Some(2.0))],
    );
    fixture.insert(
        "the child is as tall as MASK.",
        vec![
            ("father".to_string(), Some(3.0)),
            ("tree".to_string(), Some(2.0)),
            ("tower".to_string(), Some(1.0)),
        ],
    );
    fixture.insert(
        "the tall MASK.",
        vec![
            ("father".to_string(), Some(3.0)),
            ("tree".to_string(), Some(2.0)),
            ("tower".to_string(), Some(1.0)),
        ],
    );
    fixture.save(&root.join("mock.json")).unwrap();

    std::fs::write(
        root.join("vocab_si.txt"),
        "thorny\nred\nsoft\nhot\ndull\ntall\n",
    )
    .unwrap();
    std::fs::write(
        root.join("vocab_sg.txt"),
        "father\ntree\ntower\nstone\nfire\n",
    )
    .unwrap();
    std::fs::write(
        root.join("train.tsv"),
        "love\tthorny\trose\t8\nanger\thot\tfire\t9\n",
    )
    .unwrap();
    std::fs::write(
        root.join("test.tsv"),
        "love\tthorny\trose\t8\nanger\thot\tfire\t9\nchild\ttall\ttree\t7\n",
    )
    .unwrap();
    // `love` sits opposite every SG vector except `fire`; `anger` points away
    // from all of them so its SG candidates survive the similarity filter
    std::fs::write(
        root.join("glove.txt"),
        "child 1.0 0.0\nfather 0.61 0.7924014134263012\ntree 0.3 0.954\n\
         tower 0.0 1.0\nstone 0.2 0.9797958971132712\nfire -0.8 0.6\n\
         love -1.0 0.0\nanger 0.3 -0.954\n",
    )
    .unwrap();

    let out = root.join("out");
    let config = serde_json::json!({
        "model": {"backend": "mock", "identifier": root.join("mock.json")},
        "vocab": {"si": root.join("vocab_si.txt"), "sg": root.join("vocab_sg.txt")},
        "patterns": {"mode": "fixed", "ids": ["p1"]},
        "data": {"train": root.join("train.tsv"), "test": root.join("test.tsv")},
        "ks": [1, 2, 3],
        "filter": {"enabled": true, "threshold": 0.48, "embedding_path": root.join("glove.txt")},
        "synonyms": {"kind": "identity"},
        "output_dir": out,
        "seed": 7
    });
    let config_path = root.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    Workspace {
        dir,
        config: config_path,
        out,
    }
}

fn only_run_dir(out: &Path, prefix: &str) -> PathBuf {
    let mut matches: Vec<PathBuf> = std::fs::read_dir(out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with(prefix))
                .unwrap_or(false)
        })
        .collect();
    assert_eq!(matches.len(), 1, "expected one {prefix}-* dir");
    matches.remove(0)
}

#[test]
fn split_norms_writes_split_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let norms = dir.path().join("norms.tsv");
    let rows: Vec<String> = (0..20)
        .map(|i| format!("tenor{i}\tattr{i}\tvehicle{i}\t7"))
        .collect();
    std::fs::write(&norms, rows.join("\n")).unwrap();
    let out = dir.path().join("out");

    let output = run(&[
        "split-norms",
        "--input",
        norms.to_str().unwrap(),
        "--test-fraction",
        "0.25",
        "--seed",
        "3",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("15 train / 5 test"));

    let run_dir = only_run_dir(&out, "split-norms");
    for file in ["train.tsv", "test.tsv", "manifest.json", "config.json"] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["train_pairs"], 15);
    assert_eq!(manifest["test_pairs"], 5);
}

#[test]
fn split_norms_missing_input_is_a_usage_error() {
    let output = run(&[
        "split-norms",
        "--input",
        "/nonexistent/norms.tsv",
        "--test-fraction",
        "0.2",
        "--output-dir",
        "/tmp",
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("/nonexistent/norms.tsv"));
}

#[test]
fn build_ant_dataset_matches_hand_counts_on_a_tiny_corpus() {
    let dir = tempfile::tempdir().unwrap();
    // ten sentences: seven with one amod, two without, one too long
    let mut blocks: Vec<String> = Vec::new();
    let adjs = ["red", "tall", "soft", "cold", "warm", "dark", "pale"];
    for (i, adj) in adjs.iter().enumerate() {
        blocks.push(format!(
            "1\tthe\tthe\tDET\t_\t_\t3\tdet\t_\t_\n\
             2\t{adj}\t{adj}\tADJ\t_\t_\t3\tamod\t_\t_\n\
             3\tnoun{i}\tnoun{i}\tNOUN\t_\t_\t4\tnsubj\t_\t_\n\
             4\tstood\tstood\tVERB\t_\t_\t0\troot\t_\t_\n"
        ));
    }
    for subj in ["dog", "cat"] {
        blocks.push(format!(
            "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
             2\t{subj}\t{subj}\tNOUN\t_\t_\t3\tnsubj\t_\t_\n\
             3\truns\truns\tVERB\t_\t_\t0\troot\t_\t_\n"
        ));
    }
    let mut long = String::new();
    for i in 1..=70 {
        let (head, deprel) = match i {
            2 => (3, "amod"),
            3 => (4, "nsubj"),
            4 => (0, "root"),
            _ => (4, "dep"),
        };
        long.push_str(&format!("{i}\tw{i}\tw{i}\tX\t_\t_\t{head}\t{deprel}\t_\t_\n"));
    }
    blocks.push(long);
    let corpus = dir.path().join("tiny.conllu");
    std::fs::write(&corpus, blocks.join("\n")).unwrap();
    let out = dir.path().join("out");

    let output = run(&[
        "build-ant-dataset",
        "--corpus",
        corpus.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("kept 7 examples"), "{text}");
    assert!(text.contains("too long (>=64):   1"), "{text}");
    assert!(text.contains("no amod relation:  2"), "{text}");

    let run_dir = only_run_dir(&out, "build-ant-dataset");
    let dataset = std::fs::read_to_string(run_dir.join("dataset.jsonl")).unwrap();
    assert_eq!(dataset.lines().count(), 7);
    assert!(run_dir.join("stats.json").exists());
    assert!(run_dir.join("skip_report.txt").exists());
}

#[test]
fn build_ant_dataset_missing_corpus_is_a_usage_error() {
    let output = run(&[
        "build-ant-dataset",
        "--corpus",
        "/nonexistent/corpus.conllu",
        "--output-dir",
        "/tmp",
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("/nonexistent/corpus.conllu"));
}

#[test]
fn predict_prints_the_fixture_ranking() {
    let ws = write_workspace();
    let output = run(&[
        "predict",
        "--config",
        ws.config.to_str().unwrap(),
        "--tenor",
        "love",
        "--vehicle",
        "rose",
        "-k",
        "3",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let thorny = text.find("thorny").expect("thorny in output");
    let red = text.find("red").expect("red in output");
    let soft = text.find("soft").expect("soft in output");
    assert!(thorny < red && red < soft, "ranking order wrong: {text}");

    let run_dir = only_run_dir(&ws.out, "predict");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("prediction.json")).unwrap())
            .unwrap();
    assert_eq!(report["task"], "si");
    assert_eq!(report["candidates"][0]["word"], "thorny");
    // every output embeds the resolved config
    assert!(report["provenance"]["config"]["seed"].is_number());
}

#[test]
fn predict_filters_similar_vehicles() {
    let ws = write_workspace();
    let output = run(&[
        "predict",
        "--config",
        ws.config.to_str().unwrap(),
        "--tenor",
        "child",
        "--attribute",
        "tall",
        "-k",
        "2",
        "--patterns",
        "p4",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("filtered out: father"), "{text}");
    let tree = text.find("tree").unwrap();
    let tower = text.find("tower").unwrap();
    assert!(tree < tower);
}

#[test]
fn predict_requires_exactly_one_missing_slot() {
    let ws = write_workspace();
    let output = run(&[
        "predict",
        "--config",
        ws.config.to_str().unwrap(),
        "--tenor",
        "love",
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("exactly one"));
}

#[test]
fn evaluate_emits_metric_rows_and_csv() {
    let ws = write_workspace();
    let output = run(&["evaluate", "--config", ws.config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let run_dir = only_run_dir(&ws.out, "evaluate");
    let si: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("metrics_si.json")).unwrap())
            .unwrap();
    // all three SI gold words rank first under the fixture
    assert_eq!(si["rows"][0]["metric"], "mrr");
    assert!((si["rows"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((si["rows"][1]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(si["synonym_expansion"], false);

    let sg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("metrics_sg.json")).unwrap())
            .unwrap();
    // (anger, fire) and (child, tree) rank their gold vehicle first, the
    // latter because the filter drops `father`; (love, rose) has a gold
    // outside the vocabulary. MRR = (0 + 1 + 1) / 3
    assert!((sg["rows"][0]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert_eq!(sg["filter_threshold"], 0.48);

    let csv = std::fs::read_to_string(run_dir.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "task,method,mrr,r@1,r@2,r@3");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn evaluate_with_search_mode_picks_a_subset_first() {
    let ws = write_workspace();
    // switch the config to search mode
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ws.config).unwrap()).unwrap();
    config["patterns"] = serde_json::json!({"mode": "search", "objective": "mrr"});
    std::fs::write(&ws.config, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let output = run(&[
        "evaluate",
        "--config",
        ws.config.to_str().unwrap(),
        "--task",
        "si",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stderr(&output).contains("pattern search selected"));

    let run_dir = only_run_dir(&ws.out, "evaluate");
    let si: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("metrics_si.json")).unwrap())
            .unwrap();
    assert!(si["pattern_source"]
        .as_str()
        .unwrap()
        .starts_with("search"));
}

#[test]
fn pattern_search_reports_all_subsets() {
    let ws = write_workspace();
    let output = run(&[
        "pattern-search",
        "--config",
        ws.config.to_str().unwrap(),
        "--task",
        "si",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("best subset"));

    let run_dir = only_run_dir(&ws.out, "pattern-search");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(run_dir.join("search_report_si.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["subset_count"], 511);
    assert_eq!(report["split"], "train");
    assert_eq!(report["ranked_subsets"].as_array().unwrap().len(), 511);
    assert!(run_dir.join("search_table_si.txt").exists());
}

#[test]
fn diversity_report_emits_p_at_k_and_common_words() {
    let ws = write_workspace();
    let output = run(&[
        "diversity-report",
        "--config",
        ws.config.to_str().unwrap(),
        "--task",
        "si",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let run_dir = only_run_dir(&ws.out, "diversity-report");
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(run_dir.join("diversity_si.json")).unwrap(),
    )
    .unwrap();
    // both records have distinct top-1 words
    assert!((report["p_at_k"]["p@1"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    // the default probe list includes "good", absent from the fixture
    assert!((report["common_words"]["good"]["k1"].as_f64().unwrap() - 0.0).abs() < 1e-9);
    assert!(run_dir.join("p_at_k_si.csv").exists());
    assert!(run_dir.join("common_words_si.csv").exists());
}

#[test]
fn finetune_zero_epochs_round_trips_the_base_model() {
    let ws = write_workspace();
    let dir = tempfile::tempdir().unwrap();
    // minimal dataset: one masked example
    let dataset = dir.path().join("ant.jsonl");
    std::fs::write(
        &dataset,
        r#"{"text": "a red MASK", "mask_index": 2, "masked_word": "rose", "pos": "noun"}"#,
    )
    .unwrap();
    let mock_path = ws.config.parent().unwrap().join("mock.json");
    let manifest = serde_json::json!({
        "dataset": dataset,
        "optimizer": "adam",
        "learning_rate": 5e-5,
        "batch_size": 32,
        "max_sequence_length": 64,
        "epochs": 0,
        "seed": 42,
        "warmup_steps": 0,
        "weight_decay": 0.0,
        "base_model": {"backend": "mock", "identifier": mock_path},
        "output_dir": dir.path().join("tuned")
    });
    let manifest_path = dir.path().join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();

    let output = run(&["finetune", "--manifest", manifest_path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let model: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(model["backend"], "mock");
}

#[test]
fn finetune_missing_manifest_is_a_usage_error() {
    let output = run(&["finetune", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn bad_config_path_is_a_usage_error() {
    let output = run(&[
        "evaluate",
        "--config",
        "/nonexistent/config.json",
    ]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn workers_flag_does_not_change_results() {
    let ws = write_workspace();
    let a = run(&[
        "evaluate",
        "--config",
        ws.config.to_str().unwrap(),
        "--task",
        "si",
        "--workers",
        "1",
    ]);
    assert_eq!(exit_code(&a), 0, "{}", stderr(&a));
    let ws2 = write_workspace();
    let b = run(&[
        "evaluate",
        "--config",
        ws2.config.to_str().unwrap(),
        "--task",
        "si",
        "--workers",
        "4",
    ]);
    assert_eq!(exit_code(&b), 0, "{}", stderr(&b));

    let read_values = |out: &Path| -> Vec<(String, f64)> {
        let run_dir = only_run_dir(out, "evaluate");
        let v: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(run_dir.join("metrics_si.json")).unwrap(),
        )
        .unwrap();
        v["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|row| {
                (
                    row["metric"].as_str().unwrap().to_string(),
                    row["value"].as_f64().unwrap(),
                )
            })
            .collect()
    };
    assert_eq!(read_values(&ws.out), read_values(&ws2.out));
}
