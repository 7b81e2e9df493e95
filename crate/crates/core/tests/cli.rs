use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_controster"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes_distinguish_usage_and_runtime_errors() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["split", "--bogus"]).status.code(), Some(2));
    let out = run(&["stats", "--in", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim().lines().count(), 1, "diagnostic should be one line: {err}");
    assert!(run(&["--help"]).status.success());
}

#[test]
fn split_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("all.jsonl");
    let gen = run(&["gensynth", "--preset", "indomain", "--count", "200", "--seed", "3", "--out", path(&corpus)]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        fs::create_dir(&out_dir).unwrap();
        let args = ["split", "--in", path(&corpus), "--sizes", "140,20,40", "--iters", "300", "--seed", "7", "--out-dir", path(&out_dir)];
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        assert_eq!(files.len(), 3);
        outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
    let lines: usize = outputs[0].iter().map(|b| b.iter().filter(|&&c| c == b'\n').count()).sum();
    assert_eq!(lines, 200);
}

#[test]
fn stats_and_evaluate_on_generated_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let weak = dir.path().join("weak.jsonl");
    assert!(run(&["gensynth", "--preset", "indomain", "--count", "300", "--out", path(&gold)]).status.success());
    assert!(run(&["corrupt", "--in", path(&gold), "--out", path(&weak)]).status.success());
    let stats = run(&["stats", "--in", path(&gold)]);
    assert!(stats.status.success());
    let text = String::from_utf8_lossy(&stats.stdout);
    assert!(text.contains("Total Entries (Sentences)") && text.contains("300"));
    let eval = run(&["evaluate", "--gold", path(&gold), "--pred", path(&weak)]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(String::from_utf8_lossy(&eval.stdout).contains("Weighted Avg"));
}

const ONE_CELL: &str = r#"
[grid]
variants = ["indomain_weak"]
weak_sizes = [60]
strong_sizes = [20]
seeds = [1]

[model]
embedding_dim = 8
hidden_dim = 8

[train]
K = 1
epochs_per_phase = 1
warmup_epochs = 1

[epochs]
ood = 1
weak = 1
strong = 2

[synthetic]
weak = 60
strong = 30
test = 30
ood = 0
"#;

#[test]
fn experiment_writes_one_row_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, ONE_CELL).unwrap();
    let out = dir.path().join("out");
    let first = run(&["experiment", "--config", path(&config), "--out-dir", path(&out)]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 2, "header plus one row:\n{results}");
    assert!(results.lines().nth(1).unwrap().starts_with("indomain_weak,60,20,1,"));
    assert!(out.join("summary.csv").exists());
    assert!(out.join("f1_by_strong_size.svg").exists());
    assert!(out.join("f1_by_weak_size.svg").exists());

    let second = run(&["experiment", "--config", path(&config), "--out-dir", path(&out), "--plot-format", "png"]);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stderr).contains("0 cells trained, 1 reused"));
    assert_eq!(fs::read_to_string(out.join("results.csv")).unwrap(), results);
    assert!(out.join("f1_by_strong_size.png").exists());

    let replot = run(&["experiment", "--replot", "--out-dir", path(&out)]);
    assert!(replot.status.success(), "{}", String::from_utf8_lossy(&replot.stderr));
}

#[test]
fn experiment_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, format!("{ONE_CELL}\nbogus = 1\n")).unwrap();
    let o = run(&["experiment", "--config", path(&config), "--out-dir", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("o").join("results.csv").exists());
}

#[test]
fn train_then_evaluate_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let weak = dir.path().join("weak.jsonl");
    assert!(run(&["gensynth", "--preset", "indomain", "--count", "120", "--out", path(&gold)]).status.success());
    assert!(run(&["corrupt", "--in", path(&gold), "--out", path(&weak)]).status.success());
    let plan = dir.path().join("plan.toml");
    fs::write(
        &plan,
        r#"
[model]
embedding_dim = 8
hidden_dim = 8

[train]
K = 1
epochs_per_phase = 1

[[stage]]
name = "weak"
corpus = "weak.jsonl"
quality = "weak"

[[stage]]
name = "strong"
corpus = "gold.jsonl"
epochs = 2

[[eval]]
corpus = "gold.jsonl"
"#,
    )
    .unwrap();
    let model = dir.path().join("model.json");
    let log = dir.path().join("log.csv");
    let t = run(&["train", "--config", path(&plan), "--out", path(&model), "--log", path(&log)]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    let log_text = fs::read_to_string(&log).unwrap();
    assert!(log_text.starts_with("stage,corpus,entity_type,precision,recall,f1,support"));
    assert!(log_text.contains("strong,"));
    let e = run(&["evaluate", "--gold", path(&gold), "--model", path(&model)]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    assert!(String::from_utf8_lossy(&e.stdout).contains("Weighted Avg"));
}
