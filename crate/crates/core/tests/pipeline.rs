use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use polyglot_forge::pipeline::{
    InputKind, InputSpec, Overrides, Pipeline, PipelineConfig, PipelineError, RunOptions, Stage, StageManifest,
};
use serde_json::json;

fn bi_line(src: &str, tgt: &str) -> String {
    json!({"src_lang": "en", "src_txt": src, "tgt_lang": "de", "tgt_txt": tgt}).to_string()
}

fn write_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let mut bi = Vec::new();
    for i in 0..40 {
        bi.push(bi_line(&format!("sentence number {i}"), &format!("Satz Nummer {i}")));
    }
    // Duplicates, a missing translation, a repeat run and a length mismatch.
    bi.push(bi_line("sentence number 3", "Satz Nummer 3"));
    bi.push(bi_line("sentence  number 4 ", "Satz Nummer 4"));
    bi.push(bi_line("orphan", ""));
    bi.push(bi_line("aaaaaaaaaa", "a"));
    bi.push(bi_line("one two three four five six seven eight nine ten", "x"));
    bi.push("{not json".to_owned());
    let bi_path = dir.join("en_de.jsonl");
    fs::write(&bi_path, bi.join("\n") + "\n").unwrap();

    let mono: String = (0..25).map(|i| format!("строка номер {i}\n")).collect();
    let mono_path = dir.join("ru.txt");
    fs::write(&mono_path, mono).unwrap();
    (bi_path, mono_path)
}

fn config(dir: &Path, out: &str, threads: usize) -> PipelineConfig {
    let (bi, mono) = (dir.join("en_de.jsonl"), dir.join("ru.txt"));
    let text = json!({
        "inputs": [
            {"path": bi, "kind": "bi"},
            {"path": mono, "kind": "mono", "format": "text", "lang": "ru"},
        ],
        "mix": {"rows": [
            {"data_type": "bilingual", "category": "very-low", "original_tokens": 1000, "rate": 2},
            {"data_type": "monolingual", "category": "very-low", "original_tokens": 500, "rate": 0.5},
        ]},
        "chunk": {"size": 4},
        "seed": 3,
        "threads": threads,
        "output_dir": dir.join(out),
    })
    .to_string();
    PipelineConfig::load(Some(&text), &Overrides::default()).unwrap()
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn manifest(pipeline: &Pipeline, stage: Stage) -> StageManifest {
    let text = fs::read_to_string(pipeline.stage_dir(stage).join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn full_run_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    for (out, threads) in [("one", 1), ("four", 4)] {
        let p = Pipeline::new(config(dir.path(), out, threads)).unwrap();
        p.run_all(&RunOptions::default()).unwrap();
        p.run_stage(Stage::Report, &RunOptions::default()).unwrap();
    }
    let a = tree(&dir.path().join("one"));
    let b = tree(&dir.path().join("four"));
    assert!(a.contains_key("chunk/docs.jsonl"));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        // Manifests record the input paths, which differ only by directory name.
        if !k.ends_with(".json") && !k.ends_with(".tsv") {
            assert_eq!(v, &b[k], "{k}");
        }
    }
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = Pipeline::new(config(dir.path(), "out", 2)).unwrap();
    p.run_all(&RunOptions::default()).unwrap();
    let first = tree(p.output_dir());
    p.run_all(&RunOptions::default()).unwrap();
    assert_eq!(first, tree(p.output_dir()));
}

#[test]
fn stage_counts_balance() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = Pipeline::new(config(dir.path(), "out", 1)).unwrap();
    let outcomes = p.run_all(&RunOptions::default()).unwrap();
    assert_eq!(outcomes.len(), Stage::ALL.len());

    let ingest = manifest(&p, Stage::Ingest);
    assert_eq!(ingest.error_count, 1);
    assert_eq!(ingest.errors.len(), 1);
    assert!(ingest.errors[0].contains("en_de.jsonl:46"), "{:?}", ingest.errors);
    assert_eq!(ingest.counts["records.bi"], 45);
    assert_eq!(ingest.counts["records.mono"], 25);

    let clean = manifest(&p, Stage::Clean);
    let dropped: u64 = clean
        .counts
        .iter()
        .filter(|(k, _)| k.starts_with("dropped."))
        .map(|(_, v)| v)
        .sum();
    assert_eq!(clean.counts["kept"] + dropped, 70);
    assert_eq!(dropped, 3);

    let dedup = manifest(&p, Stage::Dedup);
    assert_eq!(dedup.counts["kept"] + dedup.counts["duplicates"], clean.counts["kept"]);
    assert_eq!(dedup.counts["duplicates"], 2);

    let chunk = manifest(&p, Stage::Chunk);
    let mix = manifest(&p, Stage::Mix);
    assert_eq!(chunk.counts["pairs.in"], mix.counts["records.bi"]);
    assert_eq!(chunk.counts["pairs.packed"], chunk.counts["pairs.in"]);
    // Rate 2 doubles every bilingual record in the very-low tier.
    assert_eq!(mix.counts["records.bi"], 2 * 40);
}

#[test]
fn stage_without_predecessor_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = Pipeline::new(config(dir.path(), "out", 1)).unwrap();
    let err = p.run_stage(Stage::Dedup, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Data { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn explicit_stage_inputs_bypass_predecessors() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = Pipeline::new(config(dir.path(), "out", 1)).unwrap();
    p.run_stage(Stage::Ingest, &RunOptions::default()).unwrap();
    let opts = RunOptions {
        stage_inputs: vec![InputSpec::new(
            InputKind::Bi,
            p.stage_dir(Stage::Ingest).join("bi.jsonl"),
        )],
        ..RunOptions::default()
    };
    let out = p.run_stage(Stage::Dedup, &opts).unwrap();
    assert_eq!(out.manifest.inputs.len(), 1);
    assert_eq!(out.manifest.counts["duplicates"], 2);
}

#[test]
fn plan_only_writes_no_records() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = Pipeline::new(config(dir.path(), "out", 1)).unwrap();
    let opts = RunOptions {
        plan_only: true,
        ..RunOptions::default()
    };
    let out = p.run_stage(Stage::Mix, &opts).unwrap();
    let names: Vec<&str> = out.manifest.outputs.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["mix/plan.json", "mix/plan.txt"]);
    assert!(!p.stage_dir(Stage::Mix).join("bi.jsonl").exists());
}

#[test]
fn empty_mix_keeps_every_record_once() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let mut cfg = config(dir.path(), "out", 1);
    cfg.mix.rows.clear();
    let p = Pipeline::new(cfg).unwrap();
    p.run_all(&RunOptions::default()).unwrap();
    let mix = manifest(&p, Stage::Mix);
    let dedup = manifest(&p, Stage::Dedup);
    assert_eq!(
        mix.counts["records.bi"] + mix.counts["records.mono"],
        dedup.counts["kept"]
    );
    assert!(mix.warnings.iter().any(|w| w.contains("no mix rows")));
    assert!(!p.stage_dir(Stage::Mix).join("plan.json").exists());
    let err = p
        .run_stage(
            Stage::Mix,
            &RunOptions {
                plan_only: true,
                ..RunOptions::default()
            },
        )
        .unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
