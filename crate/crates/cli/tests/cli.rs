use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dagver_core::corpus::{fixtures, fx_proj, fx_run, generate_random_pair, random_base, BaseMix, PairKind};
use dagver_core::io::{to_canonical_json, workflow_to_json, write_corpus, PairBundle};
use dagver_core::orchestrator::{verify, Tracked, VerifyConfig};
use dagver_core::workflow::{Link, OpaqueProps, Operator, Properties, Schema, TableSemantics, Workflow};
use tempfile::TempDir;

const REPORT_SCHEMA: &str = include_str!("../../../schema/verify-report.schema.json");

fn dagver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dagver")).args(args).env_remove("VEER_SEED").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

struct PairFiles {
    _dir: TempDir,
    p: PathBuf,
    q: PathBuf,
}

fn pair_files(p: &Workflow, q: &Workflow) -> PairFiles {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &workflow_to_json(p));
    let q = write(dir.path(), "q.json", &workflow_to_json(q));
    PairFiles { _dir: dir, p, q }
}

fn verify_files(files: &PairFiles, extra: &[&str]) -> Output {
    let mut args = vec!["verify", "--p", files.p.to_str().unwrap(), "--q", files.q.to_str().unwrap()];
    args.extend_from_slice(extra);
    dagver(&args)
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn udf_chain(id: &str, token: &str) -> Workflow {
    let ops = vec![
        Operator::new("src", Properties::source("t", Schema::ints(&["x"]))),
        Operator::new("udf", Properties::Udf(OpaqueProps { token: token.into(), inputs: 1, schema: None })),
        Operator::new("sink", Properties::Sink),
    ];
    Workflow::new(id, TableSemantics::Set, ops, vec![Link::simple("src", "udf"), Link::simple("udf", "sink")]).unwrap()
}

#[test]
fn identical_files_exit_zero() {
    let w = fx_run().p;
    let files = pair_files(&w, &w);
    let out = verify_files(&files, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "true");
    assert_eq!((r["decompositions_explored"].as_u64(), r["ev_calls"].as_u64()), (Some(0), Some(0)));
}

#[test]
fn projection_difference_exits_one_without_verifier_calls() {
    let f = fx_proj();
    let files = pair_files(&f.p, &f.q);
    let out = verify_files(&files, &["--symbolic", "on"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["ev_calls"], 0);
    assert!(r["witness"]["symbolic"].is_object());
}

#[test]
fn udf_edit_exits_two() {
    let files = pair_files(&udf_chain("p", "a"), &udf_chain("q", "b"));
    let out = verify_files(&files, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["verdict"], "unknown");
}

#[test]
fn malformed_json_exits_three_with_location() {
    let dir = TempDir::new().unwrap();
    let good = write(dir.path(), "good.json", &workflow_to_json(&fx_run().p));
    let bad = write(dir.path(), "bad.json", "{\n  \"id\": \"w\",\n  \"operators\": [\n}");
    let out = dagver(&["verify", "--p", good.to_str().unwrap(), "--q", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:4:1"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_flags_and_missing_files_exit_three() {
    let w = fx_run().p;
    let files = pair_files(&w, &w);
    assert_eq!(verify_files(&files, &["--seg", "sideways"]).status.code(), Some(3));
    assert_eq!(verify_files(&files, &["--ev", "smt"]).status.code(), Some(3));
    assert_eq!(verify_files(&files, &["--budget", "0"]).status.code(), Some(3));
    assert_eq!(dagver(&["verify", "--p", "/nonexistent.json", "--q", "/nonexistent.json"]).status.code(), Some(3));
    assert_eq!(dagver(&["verify"]).status.code(), Some(3));
}

#[test]
fn seed_variable_overrides_the_flag() {
    let f = fx_run();
    let files = pair_files(&f.p, &f.q);
    let args = ["verify", "--p", files.p.to_str().unwrap(), "--q", files.q.to_str().unwrap(), "--seed", "1"];
    let bad = Command::new(env!("CARGO_BIN_EXE_dagver")).args(args).env("VEER_SEED", "not-a-number").output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    let good = Command::new(env!("CARGO_BIN_EXE_dagver")).args(args).env("VEER_SEED", "7").output().unwrap();
    assert_eq!(good.status.code(), Some(0));
}

#[test]
fn verdicts_match_the_library() {
    for (name, f) in fixtures() {
        let dir = TempDir::new().unwrap();
        let p = write(dir.path(), "p.json", &workflow_to_json(&f.p));
        let q = write(dir.path(), "q.json", &workflow_to_json(&f.q));
        let m = write(dir.path(), "m.json", &to_canonical_json(&f.tracked));
        let out = dagver(&["verify", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--mapping", m.to_str().unwrap(), "--ev", "canonical,oracle"]);
        let cfg = VerifyConfig::default().with_evs(&["canonical", "oracle"]);
        let lib = verify(&f.p, &f.q, Some(&Tracked::Mapping(f.tracked.clone())), &cfg).unwrap();
        assert_eq!(report(&out)["verdict"], lib.verdict.name(), "{name}");
        let expected = match lib.verdict.name() {
            "true" => 0,
            "false" => 1,
            _ => 2,
        };
        assert_eq!(out.status.code(), Some(expected), "{name}");
    }
}

#[test]
fn delta_file_is_accepted() {
    let base = random_base(5, 14, BaseMix::Spj);
    let g = generate_random_pair(&base, PairKind::Equivalent, 2, None, 5).unwrap();
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &workflow_to_json(&g.p));
    let q = write(dir.path(), "q.json", &workflow_to_json(&g.q));
    let d = write(dir.path(), "d.json", &to_canonical_json(&g.delta));
    let out = dagver(&["verify", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--delta", d.to_str().unwrap()]);
    assert_eq!(report(&out)["mappings"][0]["tracked"], true);
    assert_ne!(out.status.code(), Some(3));
}

#[test]
fn reports_validate_against_the_schema() {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut outputs = Vec::new();
    for (_, f) in fixtures() {
        let files = pair_files(&f.p, &f.q);
        outputs.push(verify_files(&files, &["--ev", "canonical,oracle"]));
        outputs.push(verify_files(&files, &["--seg", "off", "--symbolic", "off"]));
    }
    let files = pair_files(&udf_chain("p", "a"), &udf_chain("q", "b"));
    outputs.push(verify_files(&files, &[]));
    for out in &outputs {
        let r = report(out);
        let errors: Vec<String> = validator.iter_errors(&r).map(|e| format!("{e} at {}", e.instance_path)).collect();
        assert!(errors.is_empty(), "{errors:?}");
    }
    let witnesses: Vec<&str> = outputs.iter().filter_map(|o| report(o)["witness"].as_object().and_then(|w| w.keys().next().cloned())).map(|k| match k.as_str() {
        "decomposition" => "decomposition",
        "counterexample" => "counterexample",
        _ => "symbolic",
    }).collect();
    for kind in ["decomposition", "counterexample", "symbolic"] {
        assert!(witnesses.contains(&kind), "no {kind} witness exercised");
    }
}

fn bench_corpus(dir: &Path) {
    let base = random_base(21, 16, BaseMix::Spj);
    let bundles: Vec<PairBundle> = (0..3u64)
        .map(|i| PairBundle::from_generated(format!("pair-{i}"), &generate_random_pair(&base, PairKind::Equivalent, 2, None, 40 + i).unwrap()))
        .collect();
    write_corpus(dir, &bundles).unwrap();
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn bench_plus_explores_no_more_than_baseline() {
    let dir = TempDir::new().unwrap();
    bench_corpus(dir.path());
    let out = dagver(&["bench", "--corpus", dir.path().to_str().unwrap(), "--modes", "baseline,plus", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&out);
    assert_eq!(table[0], ["pair_id", "mode", "verdict", "decompositions_explored", "ev_calls", "ms"]);
    assert_eq!(table.len(), 1 + 3 * 2);
    for pair in table[1..].chunks(2) {
        assert_eq!((pair[0][1].as_str(), pair[1][1].as_str()), ("baseline", "plus"));
        assert_eq!(pair[0][0], pair[1][0]);
        let explored = |r: &Vec<String>| r[3].parse::<usize>().unwrap();
        assert!(explored(&pair[1]) <= explored(&pair[0]), "{pair:?}");
    }
}

#[test]
fn bench_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    bench_corpus(dir.path());
    let run = || {
        let out = dagver(&["bench", "--corpus", dir.path().to_str().unwrap(), "--seeds", "1,2"]);
        rows(&out).into_iter().map(|mut r| {
            r.pop();
            r
        }).collect::<Vec<_>>()
    };
    let first = run();
    assert_eq!(first.len(), 1 + 3 * 2 * 2);
    assert!(first[1][0].ends_with("@1"));
    assert_eq!(first, run());
}

#[test]
fn empty_corpus_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let out = dagver(&["bench", "--corpus", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "pair_id,mode,verdict,decompositions_explored,ev_calls,ms\n");
}

#[test]
fn unknown_mode_exits_three() {
    let dir = TempDir::new().unwrap();
    let out = dagver(&["bench", "--corpus", dir.path().to_str().unwrap(), "--modes", "baseline,turbo"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn corpus_command_writes_readable_bundles() {
    let dir = TempDir::new().unwrap();
    let out = dagver(&["corpus", "--out", dir.path().to_str().unwrap(), "--kind", "spj", "--count", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let bundles = dagver_core::io::read_corpus(dir.path()).unwrap();
    assert_eq!(bundles.len(), 2);
    assert!(bundles.iter().all(|b| b.versions().is_ok() && b.tracked().is_some()));
}
