use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use super::config::{DocFormat, InputFormat, InputKind, InputSpec};
use super::io::{parse_batch, parse_json, write_small, LineBatches, OutputFile};
use super::manifest::StageManifest;
use super::{Pipeline, PipelineError, RunOptions, Stage};
use crate::bidoc::{chunk_by_direction, write_text, ChunkOptions};
use crate::census::{classify_tier, CorpusStats, ResourceTier, StatKey};
use crate::cleanse::{clean_record, dedup_mask, ContentKey, DedupIndex, DropReport, Verdict};
use crate::codefilter::{
    bucket_for, code_metrics, judge_metrics, language_frequency_filter, CodeFileMeta, CodeVerdict,
};
use crate::langid::{normalize_code, CodeTable, Method, Subtags};
use crate::mixer::{derive_monolingual_mix, interleave, plan_mix_with, DataType, MixPlan, Rate, SamplePlan};
use crate::model::{BiRecord, Extra, LanguageTag, MonoRecord, Record, RecordKind};
use crate::script::{dataset_script, Script, ScriptRanges};

pub(super) fn run(p: &Pipeline, stage: Stage, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    match stage {
        Stage::Ingest => ingest(p),
        Stage::Clean => clean(p, opts),
        Stage::Dedup => dedup(p, opts),
        Stage::Stats => stats(p, opts),
        Stage::Codefilter => codefilter(p, opts),
        Stage::Mix => mix(p, opts),
        Stage::Chunk => chunk(p, opts),
        Stage::Report => report(p),
    }
}

fn new_manifest(p: &Pipeline, stage: Stage) -> StageManifest {
    StageManifest::new(stage.as_str(), p.config.seed)
}

fn kind_file(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Bi => "bi.jsonl",
        RecordKind::Mono => "mono.jsonl",
    }
}

fn output(p: &Pipeline, stage: Stage, name: &str) -> Result<OutputFile, PipelineError> {
    OutputFile::create(p.stage_dir(stage).join(name), format!("{stage}/{name}"))
}

/// Bilingual and monolingual outputs of a record stage.
struct KindOutputs {
    bi: OutputFile,
    mono: OutputFile,
}

impl KindOutputs {
    fn create(p: &Pipeline, stage: Stage) -> Result<Self, PipelineError> {
        Ok(Self {
            bi: output(p, stage, kind_file(RecordKind::Bi))?,
            mono: output(p, stage, kind_file(RecordKind::Mono))?,
        })
    }

    fn get(&mut self, kind: RecordKind) -> &mut OutputFile {
        match kind {
            RecordKind::Bi => &mut self.bi,
            RecordKind::Mono => &mut self.mono,
        }
    }

    fn finish(self, m: &mut StageManifest) -> Result<(), PipelineError> {
        m.outputs.push(self.bi.finish()?);
        m.outputs.push(self.mono.finish()?);
        Ok(())
    }
}

struct RecordInput {
    path: PathBuf,
    label: String,
    kind: RecordKind,
}

fn predecessor(p: &Pipeline, stage: Stage) -> Stage {
    match stage {
        Stage::Clean => Stage::Ingest,
        Stage::Dedup => Stage::Clean,
        Stage::Chunk if p.stage_dir(Stage::Mix).join(kind_file(RecordKind::Bi)).is_file() => Stage::Mix,
        _ => Stage::Dedup,
    }
}

/// Explicit `stage_inputs`, else both record files of the predecessor stage.
fn record_inputs(p: &Pipeline, stage: Stage, opts: &RunOptions) -> Result<Vec<RecordInput>, PipelineError> {
    if !opts.stage_inputs.is_empty() {
        return opts
            .stage_inputs
            .iter()
            .map(|s| {
                let kind = match s.kind {
                    InputKind::Bi => RecordKind::Bi,
                    InputKind::Mono => RecordKind::Mono,
                    InputKind::Code => {
                        return Err(PipelineError::Invalid(format!(
                            "{stage} reads bi or mono records, not code files ({})",
                            s.label()
                        )))
                    }
                };
                if !s.path.is_file() {
                    return Err(PipelineError::Invalid(format!("{} is not a readable file", s.label())));
                }
                Ok(RecordInput {
                    path: s.path.clone(),
                    label: s.label(),
                    kind,
                })
            })
            .collect();
    }
    let pred = predecessor(p, stage);
    let dir = p.stage_dir(pred);
    let mut inputs = Vec::new();
    for kind in [RecordKind::Bi, RecordKind::Mono] {
        let path = dir.join(kind_file(kind));
        if !path.is_file() {
            return Err(PipelineError::Data {
                stage,
                message: format!("missing {}; run `{pred}` first", path.display()),
            });
        }
        inputs.push(RecordInput {
            path,
            label: format!("{pred}/{}", kind_file(kind)),
            kind,
        });
    }
    Ok(inputs)
}

fn parse_record(bytes: &[u8], kind: RecordKind) -> Result<Record, String> {
    match kind {
        RecordKind::Bi => parse_json::<BiRecord>(bytes).map(Record::Bi),
        RecordKind::Mono => parse_json::<MonoRecord>(bytes).map(Record::Mono),
    }
}

/// Streams a record file batch by batch. With `log` set, the file digest and
/// bad lines go into the manifest.
fn scan_records<F>(input: &RecordInput, m: &mut StageManifest, log: bool, mut f: F) -> Result<(), PipelineError>
where
    F: FnMut(Vec<Record>) -> Result<(), PipelineError>,
{
    let mut batches = LineBatches::open(&input.path, input.label.clone())?;
    let mut n = 0u64;
    let kind = input.kind;
    while let Some(batch) = batches.next_batch()? {
        let (ok, bad) = parse_batch(&batch, |b| parse_record(b, kind));
        if log {
            m.record_errors(&input.label, bad);
        }
        n += ok.len() as u64;
        f(ok.into_iter().map(|(_, r)| r).collect())?;
    }
    let entry = batches.finish(n)?;
    if log {
        m.inputs.push(entry);
    }
    Ok(())
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Side {
    Src,
    Tgt,
    Mono,
}

impl Side {
    fn as_str(&self) -> &'static str {
        match self {
            Side::Src => "src",
            Side::Tgt => "tgt",
            Side::Mono => "mono",
        }
    }

    fn subtag_key(&self) -> &'static str {
        match self {
            Side::Src => "src_subtags",
            Side::Tgt => "tgt_subtags",
            Side::Mono => "subtags",
        }
    }
}

struct RawMeta {
    url: Option<String>,
    collection: String,
    source: String,
    extra: Extra,
}

enum RawItem {
    Bi {
        src: (String, String, String),
        tgt: (String, String, String),
        meta: RawMeta,
    },
    Mono {
        side: (String, String, String),
        meta: RawMeta,
    },
}

impl RawItem {
    /// `(side, denotation, text)` for every side present.
    fn sides(&self) -> Vec<(Side, &str, &str)> {
        match self {
            RawItem::Bi { src, tgt, .. } => vec![(Side::Src, &src.0, &src.1), (Side::Tgt, &tgt.0, &tgt.1)],
            RawItem::Mono { side, .. } => vec![(Side::Mono, &side.0, &side.1)],
        }
    }
}

fn take_str(map: &mut Map<String, Value>, key: &str) -> Result<Option<String>, String> {
    match map.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(format!("{key}: expected a string")),
    }
}

fn meta_from(map: &mut Map<String, Value>, spec: &InputSpec) -> Result<RawMeta, String> {
    let url = take_str(map, "url")?;
    let line_collection = take_str(map, "collection")?;
    let line_source = take_str(map, "source")?;
    let collection = spec
        .collection
        .clone()
        .or(line_collection)
        .unwrap_or_else(|| spec.default_collection());
    let source = spec
        .source
        .clone()
        .or(line_source)
        .unwrap_or_else(|| collection.clone());
    Ok(RawMeta {
        url,
        collection,
        source,
        extra: std::mem::take(map),
    })
}

fn default_meta(spec: &InputSpec) -> RawMeta {
    let collection = spec.collection.clone().unwrap_or_else(|| spec.default_collection());
    RawMeta {
        url: None,
        source: spec.source.clone().unwrap_or_else(|| collection.clone()),
        collection,
        extra: Extra::new(),
    }
}

/// `(denotation, text, original denotation)` for one side of a JSON line.
fn json_side(
    map: &mut Map<String, Value>,
    lang_key: &str,
    text_key: &str,
    orig_key: &str,
    fallback: &Option<String>,
) -> Result<(String, String, String), String> {
    let text = take_str(map, text_key)?.ok_or_else(|| format!("missing {text_key}"))?;
    let den = take_str(map, lang_key)?
        .or_else(|| fallback.clone())
        .ok_or_else(|| format!("missing {lang_key}"))?;
    let orig = take_str(map, orig_key)?.unwrap_or_else(|| den.clone());
    Ok((den, text, orig))
}

fn parse_raw(bytes: &[u8], spec: &InputSpec) -> Result<RawItem, String> {
    match (spec.kind, spec.format) {
        (InputKind::Bi, InputFormat::Jsonl) => {
            let mut map: Map<String, Value> = parse_json(bytes)?;
            let src = json_side(&mut map, "src_lang", "src_txt", "original_src_lang", &spec.src_lang)?;
            let tgt = json_side(&mut map, "tgt_lang", "tgt_txt", "original_tgt_lang", &spec.tgt_lang)?;
            let meta = meta_from(&mut map, spec)?;
            Ok(RawItem::Bi { src, tgt, meta })
        }
        (InputKind::Mono, InputFormat::Jsonl) => {
            let mut map: Map<String, Value> = parse_json(bytes)?;
            let side = json_side(&mut map, "lang", "text", "original_lang", &spec.lang)?;
            let meta = meta_from(&mut map, spec)?;
            Ok(RawItem::Mono { side, meta })
        }
        (InputKind::Bi, InputFormat::Tsv) => {
            let line = std::str::from_utf8(bytes).map_err(|_| "invalid UTF-8".to_owned())?;
            let mut cols = line.split('\t');
            let (Some(s), Some(t), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err("expected two tab-separated columns".into());
            };
            let den = |d: &Option<String>| d.clone().unwrap_or_default();
            let (sd, td) = (den(&spec.src_lang), den(&spec.tgt_lang));
            Ok(RawItem::Bi {
                src: (sd.clone(), s.to_owned(), sd),
                tgt: (td.clone(), t.to_owned(), td),
                meta: default_meta(spec),
            })
        }
        (InputKind::Mono, InputFormat::Text) => {
            let line = std::str::from_utf8(bytes).map_err(|_| "invalid UTF-8".to_owned())?;
            let d = spec.lang.clone().unwrap_or_default();
            Ok(RawItem::Mono {
                side: (d.clone(), line.to_owned(), d),
                meta: default_meta(spec),
            })
        }
        (kind, format) => Err(format!("{format:?} is not supported for {kind:?} inputs")),
    }
}

struct Resolved {
    tag: LanguageTag,
    method: Method,
    subtags: Subtags,
}

fn attach_subtags(extra: &mut Extra, side: Side, subtags: &Subtags) {
    if !subtags.is_empty() {
        extra.insert(
            side.subtag_key().to_owned(),
            serde_json::to_value(subtags).expect("subtags serialize"),
        );
    }
}

fn ingest(p: &Pipeline) -> Result<StageManifest, PipelineError> {
    let cfg = &p.config;
    let table = CodeTable::builtin();
    let ranges = ScriptRanges::builtin();
    let detect = cfg.detect_config();
    let mut m = new_manifest(p, Stage::Ingest);
    let mut outs = KindOutputs::create(p, Stage::Ingest)?;
    let mut scripts_tsv = String::from("input\tside\tdenotation\tcode\tmethod\tscript\tpath\tshare\n");

    let raw_inputs: Vec<&InputSpec> = cfg.inputs.iter().filter(|s| s.kind != InputKind::Code).collect();
    if raw_inputs.is_empty() {
        return Err(PipelineError::Invalid("ingest: no bi or mono inputs configured".into()));
    }

    for spec in raw_inputs {
        let label = spec.label();

        // Pass 1: first non-empty lines per (side, denotation).
        let mut samples: BTreeMap<(Side, String), Vec<String>> = BTreeMap::new();
        let mut batches = LineBatches::open(&spec.path, label.clone())?;
        while let Some(batch) = batches.next_batch()? {
            let (ok, _) = parse_batch(&batch, |b| parse_raw(b, spec));
            for (_, item) in &ok {
                for (side, den, text) in item.sides() {
                    let bucket = samples.entry((side, den.to_owned())).or_default();
                    if bucket.len() < detect.sample_size && !text.trim().is_empty() {
                        bucket.push(text.to_owned());
                    }
                }
            }
        }

        let mut resolved: HashMap<(Side, String), Resolved> = HashMap::new();
        for ((side, den), lines) in &samples {
            let norm = normalize_code(den, table);
            if norm.method == Method::Unknown {
                m.warnings.push(format!(
                    "{label}: {} denotation {den:?} is not a known language code",
                    side.as_str()
                ));
            }
            let detected = dataset_script(lines, ranges, detect).ok();
            let script = detected.map(|d| d.script).unwrap_or(Script::UNKNOWN);
            let tag = LanguageTag::new(&norm.code, script.as_str()).unwrap_or_else(|_| LanguageTag::unknown());
            let (path, share) = match detected {
                Some(d) => (
                    serde_json::to_value(d.path)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned)),
                    format!("{:.4}", d.share),
                ),
                None => (Some("undetectable".into()), "0.0000".into()),
            };
            let _ = writeln!(
                scripts_tsv,
                "{label}\t{}\t{den}\t{}\t{}\t{script}\t{}\t{share}",
                side.as_str(),
                norm.code,
                norm.method,
                path.unwrap_or_default()
            );
            resolved.insert(
                (*side, den.clone()),
                Resolved {
                    tag,
                    method: norm.method,
                    subtags: norm.subtags,
                },
            );
        }

        // Pass 2: emit harmonized records.
        let mut batches = LineBatches::open(&spec.path, label.clone())?;
        let mut n = 0u64;
        while let Some(batch) = batches.next_batch()? {
            let (ok, bad) = parse_batch(&batch, |b| parse_raw(b, spec));
            m.record_errors(&label, bad);
            n += ok.len() as u64;
            let mut records = Vec::with_capacity(ok.len());
            for (_, item) in ok {
                for (side, den, _) in item.sides() {
                    let r = &resolved[&(side, den.to_owned())];
                    m.count(&format!("normalize.{}", r.method), 1);
                }
                let look = |side: Side, den: &str| &resolved[&(side, den.to_owned())];
                let record = match item {
                    RawItem::Bi { src, tgt, mut meta } => {
                        let (s, t) = (look(Side::Src, &src.0), look(Side::Tgt, &tgt.0));
                        attach_subtags(&mut meta.extra, Side::Src, &s.subtags);
                        attach_subtags(&mut meta.extra, Side::Tgt, &t.subtags);
                        Record::Bi(BiRecord {
                            src_lang: s.tag.clone(),
                            src_txt: src.1,
                            tgt_lang: t.tag.clone(),
                            tgt_txt: tgt.1,
                            url: meta.url,
                            collection: meta.collection,
                            source: meta.source,
                            original_src_lang: src.2,
                            original_tgt_lang: tgt.2,
                            extra: meta.extra,
                        })
                    }
                    RawItem::Mono { side, mut meta } => {
                        let r = look(Side::Mono, &side.0);
                        attach_subtags(&mut meta.extra, Side::Mono, &r.subtags);
                        Record::Mono(MonoRecord {
                            text: side.1,
                            lang: r.tag.clone(),
                            url: meta.url,
                            collection: meta.collection,
                            source: meta.source,
                            original_lang: side.2,
                            extra: meta.extra,
                        })
                    }
                };
                records.push(record);
            }
            let kind = match spec.kind {
                InputKind::Mono => RecordKind::Mono,
                _ => RecordKind::Bi,
            };
            outs.get(kind).write_jsonl(&records)?;
            m.count(&format!("records.{kind}"), records.len() as u64);
        }
        m.inputs.push(batches.finish(n)?);
    }

    outs.finish(&mut m)?;
    let scripts_path = p.stage_dir(Stage::Ingest).join("scripts.tsv");
    let rows = scripts_tsv.lines().count() as u64 - 1;
    m.outputs.push(write_small(
        scripts_path,
        "ingest/scripts.tsv".into(),
        scripts_tsv.as_bytes(),
        rows,
    )?);
    Ok(m)
}

// ---------------------------------------------------------------- clean

#[derive(Serialize)]
struct AuditDrop<'a> {
    reason: &'static str,
    record: &'a Record,
}

fn clean(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let cfg = p.config.clean;
    let mut m = new_manifest(p, Stage::Clean);
    let inputs = record_inputs(p, Stage::Clean, opts)?;
    let mut outs = KindOutputs::create(p, Stage::Clean)?;
    let mut audit = if opts.audit_drops {
        Some(output(p, Stage::Clean, "dropped.jsonl")?)
    } else {
        None
    };
    let mut report = DropReport::default();

    for input in &inputs {
        let out = outs.get(input.kind);
        scan_records(input, &mut m, true, |records| {
            let verdicts: Vec<Verdict> = records.par_iter().map(|r| clean_record(r, &cfg)).collect();
            let mut kept = Vec::with_capacity(records.len());
            let mut dropped = Vec::new();
            for (r, v) in records.into_iter().zip(verdicts) {
                report.record(v);
                match v {
                    Verdict::Keep => kept.push(r),
                    Verdict::Drop(reason) => dropped.push((reason, r)),
                }
            }
            out.write_jsonl(&kept)?;
            if let Some(a) = audit.as_mut() {
                let rows: Vec<AuditDrop> = dropped
                    .iter()
                    .map(|(reason, record)| AuditDrop {
                        reason: reason.as_str(),
                        record,
                    })
                    .collect();
                a.write_jsonl(&rows)?;
            }
            Ok(())
        })?;
    }

    outs.finish(&mut m)?;
    if let Some(a) = audit {
        m.outputs.push(a.finish()?);
    }
    let mut tsv = Vec::new();
    report.write_tsv(&mut tsv).expect("write to Vec");
    m.outputs.push(write_small(
        p.stage_dir(Stage::Clean).join("drops.tsv"),
        "clean/drops.tsv".into(),
        &tsv,
        1 + report.dropped.len() as u64,
    )?);
    m.count("kept", report.kept);
    for (reason, n) in &report.dropped {
        m.count(&format!("dropped.{reason}"), *n);
    }
    Ok(m)
}

// ---------------------------------------------------------------- dedup

fn dedup(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let mut m = new_manifest(p, Stage::Dedup);
    let inputs = record_inputs(p, Stage::Dedup, opts)?;
    let mut outs = KindOutputs::create(p, Stage::Dedup)?;
    let index = DedupIndex::new();
    let mut kept = 0u64;

    for input in &inputs {
        let out = outs.get(input.kind);
        scan_records(input, &mut m, true, |records| {
            let mask = dedup_mask(&records, &index);
            let survivors: Vec<Record> = records
                .into_iter()
                .zip(mask)
                .filter_map(|(r, keep)| keep.then_some(r))
                .collect();
            kept += survivors.len() as u64;
            out.write_jsonl(&survivors)?;
            Ok(())
        })?;
    }
    let seen: u64 = m.inputs.iter().map(|e| e.records).sum();
    outs.finish(&mut m)?;
    m.count("kept", kept);
    m.count("duplicates", seen - kept);
    Ok(m)
}

// ---------------------------------------------------------------- stats

#[derive(Serialize)]
struct TierReport {
    bilingual: crate::census::TierSummary,
    monolingual: crate::census::TierSummary,
}

fn gather_stats(
    inputs: &[RecordInput],
    m: &mut StageManifest,
    log: bool,
) -> Result<(CorpusStats, CorpusStats), PipelineError> {
    let mut bi = CorpusStats::default();
    let mut mono = CorpusStats::default();
    for input in inputs {
        let mut acc = CorpusStats::default();
        scan_records(input, m, log, |records| {
            let part = crate::census::aggregate_par(&records);
            acc = std::mem::take(&mut acc).merge(part);
            Ok(())
        })?;
        match input.kind {
            RecordKind::Bi => bi = bi.merge(acc),
            RecordKind::Mono => mono = mono.merge(acc),
        }
    }
    Ok((bi, mono))
}

fn stats(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let mut m = new_manifest(p, Stage::Stats);
    let inputs = record_inputs(p, Stage::Stats, opts)?;
    let (bi, mono) = gather_stats(&inputs, &mut m, true)?;
    let dir = p.stage_dir(Stage::Stats);

    let summary = TierReport {
        bilingual: bi.tier_summary(),
        monolingual: mono.tier_summary(),
    };
    m.count("keys.bi", bi.len() as u64);
    m.count("keys.mono", mono.len() as u64);
    m.count("segments", bi.total_segments() + mono.total_segments());
    m.count("tokens", bi.total_tokens() + mono.total_tokens());

    let all = bi.merge(mono);
    let mut tsv = Vec::new();
    all.write_tsv(&mut tsv).expect("write to Vec");
    m.outputs.push(write_small(
        dir.join("stats.tsv"),
        "stats/stats.tsv".into(),
        &tsv,
        all.len() as u64,
    )?);
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    m.outputs.push(write_small(
        dir.join("tier_summary.json"),
        "stats/tier_summary.json".into(),
        &json,
        ResourceTier::ALL.len() as u64 * 2,
    )?);
    Ok(m)
}

// ---------------------------------------------------------------- codefilter

const CODE_AUDIT_HEADER: &str =
    "input\tline\tlanguage_label\tforks\tbucket\tavg_line_len\tmax_line_len\talnum_fraction\tverdict\treason\n";

fn code_inputs<'a>(p: &'a Pipeline, opts: &'a RunOptions) -> Vec<&'a InputSpec> {
    let from = if opts.stage_inputs.is_empty() {
        &p.config.inputs
    } else {
        &opts.stage_inputs
    };
    from.iter().filter(|s| s.kind == InputKind::Code).collect()
}

fn codefilter(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let rules = &p.config.code_rules;
    let mut m = new_manifest(p, Stage::Codefilter);
    let inputs = code_inputs(p, opts);
    if inputs.is_empty() {
        return Err(PipelineError::Invalid("codefilter: no code inputs configured".into()));
    }

    let mut label_counts: BTreeMap<String, u64> = BTreeMap::new();
    for spec in &inputs {
        let mut batches = LineBatches::open(&spec.path, spec.label())?;
        while let Some(batch) = batches.next_batch()? {
            let (ok, _) = parse_batch(&batch, parse_json::<CodeFileMeta>);
            for (_, meta) in ok {
                *label_counts.entry(meta.language_label).or_insert(0) += 1;
            }
        }
    }
    let retained = language_frequency_filter(&label_counts, rules.language_min_count, &rules.always_keep);

    let mut kept_out = output(p, Stage::Codefilter, "code.jsonl")?;
    let mut audit = String::from(CODE_AUDIT_HEADER);
    let mut audit_rows = 0u64;
    for spec in &inputs {
        let label = spec.label();
        let mut batches = LineBatches::open(&spec.path, label.clone())?;
        let mut n = 0u64;
        while let Some(batch) = batches.next_batch()? {
            let (ok, bad) = parse_batch(&batch, |b| {
                let meta: CodeFileMeta = parse_json(b)?;
                let metrics = code_metrics(&meta.content);
                let verdict = if retained.contains(&meta.language_label) {
                    verdict_columns(judge_metrics(meta.forks, &metrics, rules))
                } else {
                    "drop\trare-language".to_owned()
                };
                Ok((meta.language_label, meta.forks, metrics, verdict))
            });
            m.record_errors(&label, bad);
            n += ok.len() as u64;
            let lines: BTreeMap<usize, &Vec<u8>> = batch.iter().map(|(i, b)| (*i, b)).collect();
            for (line, (lang, forks, metrics, verdict)) in ok {
                let _ = writeln!(
                    audit,
                    "{label}\t{line}\t{lang}\t{forks}\t{}\t{:.4}\t{}\t{:.4}\t{verdict}",
                    bucket_for(forks),
                    metrics.avg_line_len,
                    metrics.max_line_len,
                    metrics.alnum_fraction
                );
                audit_rows += 1;
                let reason = verdict.split('\t').nth(1).unwrap_or("");
                m.count(
                    &format!("verdict.{}", if reason.is_empty() { "keep" } else { reason }),
                    1,
                );
                if reason.is_empty() {
                    let mut bytes = lines[&line].clone();
                    bytes.push(b'\n');
                    kept_out.write_raw(&bytes, 1)?;
                }
            }
        }
        m.inputs.push(batches.finish(n)?);
    }
    m.outputs.push(kept_out.finish()?);
    let dir = p.stage_dir(Stage::Codefilter);
    m.outputs.push(write_small(
        dir.join("audit.tsv"),
        "codefilter/audit.tsv".into(),
        audit.as_bytes(),
        audit_rows,
    )?);

    let mut langs = String::from("language_label\tfiles\tretained\n");
    for (label, n) in &label_counts {
        let _ = writeln!(langs, "{label}\t{n}\t{}", retained.contains(label));
    }
    m.outputs.push(write_small(
        dir.join("languages.tsv"),
        "codefilter/languages.tsv".into(),
        langs.as_bytes(),
        label_counts.len() as u64,
    )?);
    Ok(m)
}

/// `verdict<TAB>reason` audit columns; the reason is empty for kept files.
fn verdict_columns(v: CodeVerdict) -> String {
    match v {
        CodeVerdict::Keep => "keep\t".to_owned(),
        CodeVerdict::Drop(r) => format!("drop\t{r}"),
    }
}

// ---------------------------------------------------------------- mix

#[derive(Serialize)]
struct PlanManifest<'a> {
    tool_version: String,
    seed: u64,
    plan: &'a MixPlan,
    monolingual_mix: MixPlan,
}

/// Sampling rate per (data type, resource tier) for rows whose category names a tier.
fn tier_rates(plan: &MixPlan) -> HashMap<(DataType, ResourceTier), Rate> {
    plan.rows
        .iter()
        .filter(|r| matches!(r.data_type, DataType::Bilingual | DataType::Monolingual))
        .filter_map(|r| {
            let tier = r.category.parse::<ResourceTier>().ok()?;
            Some(((r.data_type, tier), r.rate))
        })
        .collect()
}

fn remove_stale(dir: &std::path::Path, names: &[&str]) -> Result<(), PipelineError> {
    for name in names {
        let stale = dir.join(name);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(super::io::io_err(format!("remove {}", stale.display())))?;
        }
    }
    Ok(())
}

/// Computes the plan and writes `plan.json` and `plan.txt`.
fn write_plan(p: &Pipeline, m: &mut StageManifest) -> Result<MixPlan, PipelineError> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Mix);
    let plan = plan_mix_with(&cfg.mix.rows, cfg.mix.policy).map_err(|e| PipelineError::Invalid(format!("mix: {e}")))?;
    m.warnings.extend(plan.discrepancies.iter().map(|d| d.to_string()));

    let manifest = PlanManifest {
        tool_version: format!("polyglot-forge {}", crate::VERSION),
        seed: cfg.seed,
        plan: &plan,
        monolingual_mix: derive_monolingual_mix(&plan),
    };
    let mut json = serde_json::to_vec_pretty(&manifest).expect("plan serializes");
    json.push(b'\n');
    m.outputs.push(write_small(
        dir.join("plan.json"),
        "mix/plan.json".into(),
        &json,
        plan.rows.len() as u64,
    )?);
    let table = plan.render_table();
    m.outputs.push(write_small(
        dir.join("plan.txt"),
        "mix/plan.txt".into(),
        table.as_bytes(),
        plan.rows.len() as u64,
    )?);
    m.count("plan.rows", plan.rows.len() as u64);
    m.count("plan.final_tokens", plan.total_final_tokens());

    Ok(plan)
}

fn mix(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let cfg = &p.config;
    let mut m = new_manifest(p, Stage::Mix);
    let dir = p.stage_dir(Stage::Mix);
    let plan = if cfg.mix.rows.is_empty() && !opts.plan_only {
        m.warnings
            .push("no mix rows configured; every record is kept once".into());
        remove_stale(&dir, &["plan.json", "plan.txt"])?;
        None
    } else {
        Some(write_plan(p, &mut m)?)
    };

    if opts.plan_only {
        remove_stale(&dir, &[kind_file(RecordKind::Bi), kind_file(RecordKind::Mono)])?;
        return Ok(m);
    }

    let inputs = record_inputs(p, Stage::Mix, opts)?;
    let (bi, mono) = gather_stats(&inputs, &mut m, false)?;
    let tiers: HashMap<StatKey, ResourceTier> = bi
        .iter()
        .chain(mono.iter())
        .map(|(k, s)| (k.clone(), classify_tier(s.tokens)))
        .collect();
    let plans: HashMap<(DataType, ResourceTier), SamplePlan> = plan
        .as_ref()
        .map(tier_rates)
        .unwrap_or_default()
        .into_iter()
        .map(|(k, rate)| (k, SamplePlan::new(rate, cfg.seed)))
        .collect();

    let mut lines: HashMap<RecordKind, Vec<Vec<u8>>> = HashMap::new();
    for input in &inputs {
        let data_type = match input.kind {
            RecordKind::Bi => DataType::Bilingual,
            RecordKind::Mono => DataType::Monolingual,
        };
        let mut row_counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let sink = lines.entry(input.kind).or_default();
        scan_records(input, &mut m, true, |records| {
            let sampled: Vec<(String, u64, Vec<u8>)> = records
                .par_iter()
                .map(|r| {
                    let tier = tiers[&StatKey::of(r)];
                    let (row, copies) = match plans.get(&(data_type, tier)) {
                        Some(sp) => (format!("{data_type}/{tier}"), sp.copies(&r.content_digest().0)),
                        None => ("unplanned".to_owned(), 1),
                    };
                    let mut line = serde_json::to_vec(r).expect("record serializes");
                    line.push(b'\n');
                    (row, copies, line)
                })
                .collect();
            for (row, copies, line) in sampled {
                let e = row_counts.entry(row).or_default();
                e.0 += 1;
                e.1 += copies;
                for _ in 0..copies {
                    sink.push(line.clone());
                }
            }
            Ok(())
        })?;
        for (row, (seen, emitted)) in row_counts {
            m.count(&format!("sampled.{row}.in"), seen);
            m.count(&format!("sampled.{row}.out"), emitted);
        }
    }

    let mut outs = KindOutputs::create(p, Stage::Mix)?;
    for kind in [RecordKind::Bi, RecordKind::Mono] {
        let mut kind_lines = lines.remove(&kind).unwrap_or_default();
        interleave(&mut kind_lines, cfg.seed);
        let out = outs.get(kind);
        for l in &kind_lines {
            out.write_raw(l, 1)?;
        }
        m.count(&format!("records.{kind}"), kind_lines.len() as u64);
    }
    outs.finish(&mut m)?;
    Ok(m)
}

// ---------------------------------------------------------------- chunk

fn chunk(p: &Pipeline, opts: &RunOptions) -> Result<StageManifest, PipelineError> {
    let cfg = &p.config.chunk;
    let mut m = new_manifest(p, Stage::Chunk);
    let inputs = record_inputs(p, Stage::Chunk, opts)?;
    let mut records: Vec<BiRecord> = Vec::new();
    for input in inputs.iter().filter(|i| i.kind == RecordKind::Bi) {
        scan_records(input, &mut m, true, |batch| {
            records.extend(batch.into_iter().filter_map(|r| match r {
                Record::Bi(b) => Some(b),
                Record::Mono(_) => None,
            }));
            Ok(())
        })?;
    }
    let chunk_opts = ChunkOptions {
        chunk: cfg.size,
        drop_remainder: cfg.drop_remainder || opts.drop_remainder,
        strict_listing: cfg.strict_listing || opts.strict_listing,
    };
    let docs = chunk_by_direction(&records, chunk_opts);
    let packed: usize = docs.iter().map(|d| d.n_pairs).sum();
    m.count("pairs.in", records.len() as u64);
    m.count("pairs.packed", packed as u64);
    m.count("docs", docs.len() as u64);
    let directions: BTreeSet<_> = docs.iter().map(|d| &d.pair).collect();
    m.count("directions", directions.len() as u64);

    let dir = p.stage_dir(Stage::Chunk);
    let entry = match cfg.format {
        DocFormat::Jsonl => {
            let mut out = output(p, Stage::Chunk, "docs.jsonl")?;
            out.write_jsonl(&docs)?;
            out.finish()?
        }
        DocFormat::Text => {
            let mut buf = Vec::new();
            write_text(&docs, &cfg.delimiter, &mut buf).expect("write to Vec");
            write_small(dir.join("docs.txt"), "chunk/docs.txt".into(), &buf, docs.len() as u64)?
        }
    };
    m.outputs.push(entry);
    Ok(m)
}

// ---------------------------------------------------------------- report

#[derive(Serialize)]
struct Report {
    tool_version: String,
    seed: u64,
    data_versions: super::manifest::DataVersions,
    stages: BTreeMap<String, Value>,
}

fn report(p: &Pipeline) -> Result<StageManifest, PipelineError> {
    let mut m = new_manifest(p, Stage::Report);
    let mut stages = BTreeMap::new();
    let mut summary = String::from("stage\tinputs\toutputs\terrors\twarnings\n");
    for stage in [
        Stage::Ingest,
        Stage::Clean,
        Stage::Dedup,
        Stage::Stats,
        Stage::Codefilter,
        Stage::Mix,
        Stage::Chunk,
    ] {
        let path = p.stage_dir(stage).join("manifest.json");
        let Ok(bytes) = std::fs::read(&path) else {
            continue;
        };
        let label = format!("{stage}/manifest.json");
        let value: StageManifest = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Data {
            stage: Stage::Report,
            message: format!("{label}: {e}"),
        })?;
        m.inputs.push(super::manifest::FileEntry {
            path: label,
            sha256: {
                use sha2::Digest;
                hex::encode(sha2::Sha256::digest(&bytes))
            },
            records: 1,
        });
        let _ = writeln!(
            summary,
            "{stage}\t{}\t{}\t{}\t{}",
            value.inputs.len(),
            value.outputs.len(),
            value.error_count,
            value.warnings.len()
        );
        m.warnings
            .extend(value.warnings.iter().map(|w| format!("{stage}: {w}")));
        stages.insert(
            stage.as_str().to_owned(),
            serde_json::to_value(&value).expect("manifest serializes"),
        );
    }
    if stages.is_empty() {
        return Err(PipelineError::Data {
            stage: Stage::Report,
            message: "no stage manifests found; run a stage first".into(),
        });
    }
    let report = Report {
        tool_version: format!("polyglot-forge {}", crate::VERSION),
        seed: p.config.seed,
        data_versions: super::manifest::DataVersions::builtin(),
        stages,
    };
    let dir = p.stage_dir(Stage::Report);
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    let n = report.stages.len() as u64;
    m.outputs.push(write_small(
        dir.join("report.json"),
        "report/report.json".into(),
        &json,
        n,
    )?);
    m.outputs.push(write_small(
        dir.join("report.tsv"),
        "report/report.tsv".into(),
        summary.as_bytes(),
        n,
    )?);
    Ok(m)
}
