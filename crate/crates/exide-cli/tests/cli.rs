//! End-to-end tests of the `exide` binary: every subcommand is exercised
//! through a real process so argument parsing, exit codes and output
//! bytes are all covered.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exide() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exide"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    exide().args(args).output().expect("the exide binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited normally")
}

#[test]
fn stats_reports_corpus_totals() {
    let output = run(&["stats", "--corpus", &fixture("mini_corpus.json")]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("texts:     3"), "got:\n{text}");
    assert!(text.contains("sentences: 20"));
    assert!(text.contains("rules:     21"));
    assert!(text.contains("tokens:    520"));
    assert!(text.contains("includes                   13"));
    assert!(text.contains("less than                  0"));
    assert!(text.contains("sequential                 12"));
    assert!(text.contains("parallel                   2"));
}

#[test]
fn stats_sums_repeated_corpora() {
    let output = run(&[
        "stats",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--corpus",
        &fixture("scenarios_corpus.json"),
        "--json",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let value: serde_json::Value =
        serde_json::from_str(&stdout(&output)).expect("stats --json emits JSON");
    assert_eq!(value["texts"], 6);
    assert_eq!(value["sentences"], 33);
    assert_eq!(value["rules"], 31);
    assert_eq!(value["tokens"], 834);
    assert_eq!(value["judgement_histogram"]["includes"], 22);
    assert_eq!(value["dependency_histogram"]["sequential"], 18);
}

#[test]
fn agreement_matches_reference_values() {
    let output =
        run(&["agreement", "--categorical", &fixture("agreement_categorical.csv")]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    assert_eq!(
        stdout(&output),
        "items: 10\nraters: 3\nfleiss_kappa: 0.44999999999999996\n"
    );

    let output = run(&[
        "agreement",
        "--ratings",
        &fixture("agreement_ratings.csv"),
        "--icc-form",
        "single",
    ]);
    assert_eq!(code(&output), 0);
    assert_eq!(
        stdout(&output),
        "subjects: 6\nraters: 3\nicc_single: 0.22352941176470587\n"
    );

    let output = run(&["agreement", "--ratings", &fixture("agreement_ratings.csv")]);
    assert_eq!(code(&output), 0);
    assert_eq!(
        stdout(&output),
        "subjects: 6\nraters: 3\nicc_average: 0.4634146341463414\n"
    );

    let output = run(&["agreement", "--categorical", &fixture("agreement_perfect.csv")]);
    assert_eq!(code(&output), 0);
    assert_eq!(stdout(&output), "items: 4\nraters: 2\nfleiss_kappa: 1\n");
}

#[test]
fn agreement_rejects_degenerate_grids() {
    let dir = tempfile::tempdir().expect("tempdir");

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "A,B\nA\n").unwrap();
    let output = run(&["agreement", "--categorical", ragged.to_str().unwrap()]);
    assert_eq!(code(&output), 2, "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("expected 2"));

    let single = dir.path().join("single.csv");
    std::fs::write(&single, "A\nB\nA\n").unwrap();
    let output = run(&["agreement", "--categorical", single.to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("at least 2 raters"));

    let words = dir.path().join("words.csv");
    std::fs::write(&words, "1,2\n3,oops\n").unwrap();
    let output = run(&["agreement", "--ratings", words.to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("not a number"));
}

#[test]
fn replayed_pipeline_is_deterministic_across_concurrency() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut runs = Vec::new();
    for (sub, concurrency) in [("one", "1"), ("eight", "8")] {
        let out_dir = dir.path().join(sub);
        let output = run(&[
            "pipeline",
            "--corpus",
            &fixture("mini_corpus.json"),
            "--id",
            "bank_deposit",
            "--transcript",
            &fixture("transcripts/mini_corpus_p1.jsonl"),
            "--concurrency",
            concurrency,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
        runs.push(std::fs::read(out_dir.join("bank_deposit.json")).unwrap());
    }
    assert_eq!(runs[0], runs[1], "concurrency changed the output bytes");

    let piped = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "bank_deposit",
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
    ]);
    assert_eq!(code(&piped), 0);
    assert_eq!(piped.stdout, runs[0], "stdout and --out disagree");
}

#[test]
fn eval_reproduces_recorded_scores() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run_dir = dir.path().join("run");
    let output = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "ecommerce_shopping",
        "--transcript",
        &fixture("transcripts/ecommerce_deepseek_v3.jsonl"),
        "--model",
        "deepseek-v3",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let report_dir = dir.path().join("reports");
    let output = run(&[
        "eval",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--pred",
        run_dir.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(
        text.contains("== model=deepseek-v3 variant=implicit-mapping (1 document)"),
        "got:\n{text}"
    );
    assert!(text.contains("entity      micro P 1.000  R 1.000  F1 1.000 | macro F1 1.000"));
    assert!(text.contains("dependency  macro F1 0.431 | accuracy 0.600"));

    let report_file = report_dir.join("report_deepseek-v3_implicit-mapping.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_file).unwrap())
            .expect("report file is JSON");
    assert_eq!(report["dependency"]["accuracy"], 0.6);
    assert_eq!(report["dependency"]["macro_f1"], 0.4305555555555555);
    assert_eq!(report["entity"]["micro"]["f1"], 1.0);
    assert_eq!(report["judgement"]["accuracy"], 1.0);
}

#[test]
fn eval_skips_dependency_scores_when_rule_counts_differ() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run_dir = dir.path().join("run");
    let output = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "ecommerce_shopping",
        "--transcript",
        &fixture("transcripts/ecommerce_deepseek_v3.jsonl"),
        "--model",
        "deepseek-v3",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let result_file = run_dir.join("ecommerce_shopping.json");
    let mut result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&result_file).unwrap()).unwrap();
    result["rules"].as_array_mut().unwrap().pop();
    result["predictions"] = serde_json::Value::Array(Vec::new());
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, serde_json::to_string(&result).unwrap()).unwrap();

    let report_dir = dir.path().join("reports");
    let output = run(&[
        "eval",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--pred",
        truncated.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    assert!(stdout(&output).contains("dependency  skipped"));
    assert!(stderr(&output).contains("ecommerce_shopping"));

    let report_file = report_dir.join("report_deepseek-v3_implicit-mapping.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_file).unwrap()).unwrap();
    assert!(report["dependency"].is_null());
    assert!(report["entity"]["micro"]["f1"].as_f64().unwrap() > 0.0);
}

#[test]
fn record_writes_a_transcript_that_replays_identically() {
    let dir = tempfile::tempdir().expect("tempdir");
    let transcript = dir.path().join("rerecorded.jsonl");
    let first = dir.path().join("first");
    let output = run(&[
        "record",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "flight_booking",
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
        "--record-to",
        transcript.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    assert!(stdout(&output).contains("flight_booking: 5 rules, 10 predictions, 0 failures"));

    let second = dir.path().join("second");
    let output = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "flight_booking",
        "--transcript",
        transcript.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    assert_eq!(
        std::fs::read(first.join("flight_booking.json")).unwrap(),
        std::fs::read(second.join("flight_booking.json")).unwrap(),
        "replaying the recorded transcript changed the result"
    );
}

#[test]
fn record_requires_a_transcript_destination() {
    let output = run(&[
        "record",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
    ]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("--record-to"));
}

#[test]
fn graph_renders_gold_dependencies_as_dot() {
    let output = run(&[
        "graph",
        "--corpus",
        &fixture("scenarios_corpus.json"),
        "--id",
        "car_rental",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let dot = stdout(&output);
    assert!(dot.starts_with("digraph rule_flow {"), "got:\n{dot}");
    assert!(dot.contains("r0 -> r1 [kind=conditional, label=\"sedan or SUV\"];"));
    assert!(dot.contains("r0 -> r2 [kind=conditional, label=\"business vehicle or RV\"];"));
}

#[test]
fn graph_check_fails_on_a_sequential_cycle() {
    let rule = serde_json::json!({
        "condition": {
            "slot_type": "Step",
            "judgement": "includes",
            "reference": { "kind": "enumeration", "values": ["go"] }
        },
        "action": "proceed"
    });
    let result = serde_json::json!({
        "graph": {
            "nodes": [rule.clone(), rule],
            "edges": [
                { "from": 0, "to": 1, "kind": "sequential" },
                { "from": 1, "to": 0, "kind": "sequential" }
            ]
        }
    });
    let dir = tempfile::tempdir().expect("tempdir");
    let file = dir.path().join("looped.json");
    std::fs::write(&file, serde_json::to_string(&result).unwrap()).unwrap();

    let warned = run(&["graph", "--from-result", file.to_str().unwrap()]);
    assert_eq!(code(&warned), 0, "without --check diagnostics only warn");
    assert!(stderr(&warned).contains("sequential cycle"));

    let checked = run(&["graph", "--from-result", file.to_str().unwrap(), "--check"]);
    assert_eq!(code(&checked), 2);
    assert!(stderr(&checked).contains("sequential cycle"));
    assert!(stderr(&checked).contains("graph validation found"));
}

#[test]
fn gen_prompt_renders_without_any_backend() {
    let output = run(&[
        "gen-prompt",
        "extraction",
        "--corpus",
        &fixture("scenarios_corpus.json"),
        "--id",
        "bank_fx_purchase",
        "--variant",
        "p5",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("Input: Our bank supports up to 39 currency types"));
    assert!(text.contains("Pseudo-code"), "got:\n{text}");

    let output = run(&[
        "gen-prompt",
        "dependency",
        "--corpus",
        &fixture("scenarios_corpus.json"),
        "--id",
        "bank_fx_purchase",
        "--rule-a",
        "0",
        "--rule-b",
        "1",
        "--rules-only",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("Business text: (not provided)"));
    assert!(text.contains("Rule A: < <currency types, includes, RMB, USD, JPY, GBP, HKD>"));

    let output = run(&[
        "gen-prompt",
        "dependency",
        "--corpus",
        &fixture("scenarios_corpus.json"),
        "--id",
        "bank_fx_purchase",
        "--rule-a",
        "0",
        "--rule-b",
        "9",
    ]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("out of range"));

    let output = run(&[
        "gen-prompt",
        "generation",
        "--domain",
        "hotel booking",
        "--constraint",
        "language=English",
    ]);
    assert_eq!(code(&output), 0);
    let text = stdout(&output);
    assert!(text.contains("domain of hotel booking"));
    assert!(text.contains("language: English"));
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let output = run(&["--help"]);
    assert_eq!(code(&output), 0);

    let output = run(&["no-such-command"]);
    assert_eq!(code(&output), 1);

    let output = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
        "--endpoint",
        "http://localhost:1",
    ]);
    assert_eq!(code(&output), 1, "conflicting backends are a usage error");

    let output = run(&["pipeline", "--corpus", &fixture("mini_corpus.json")]);
    assert_eq!(code(&output), 1, "a missing backend is a usage error");
    assert!(stderr(&output).contains("--transcript <file> or --endpoint <url>"));

    let output = run(&[
        "pipeline",
        "--corpus",
        &fixture("mini_corpus.json"),
        "--id",
        "flight_booking",
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
        "--variant",
        "p2",
    ]);
    assert_eq!(code(&output), 2, "a transcript miss is a runtime error");
    assert!(stderr(&output).contains("no transcript entry"));

    let output = run(&[
        "pipeline",
        "--corpus",
        "definitely-missing.json",
        "--transcript",
        &fixture("transcripts/mini_corpus_p1.jsonl"),
    ]);
    assert_eq!(code(&output), 3, "an unreadable corpus is an IO error");
}
