use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use polyglot_forge::bidoc::{chunk_by_direction, ChunkOptions};
use polyglot_forge::census::aggregate_par;
use polyglot_forge::cleanse::{clean_birecord, dedup, CleanConfig, DedupIndex, Verdict};
use polyglot_forge::codefilter::code_metrics;
use polyglot_forge::langid::{normalize_code, CodeTable};
use polyglot_forge::mixer::{plan_mix, DataType, MixInput, Rate};
use polyglot_forge::model::{BiRecord, Extra, Record};
use polyglot_forge::script::{line_script, ScriptRanges};

const WORDS: [&str; 12] = [
    "river",
    "Fluss",
    "река",
    "川",
    "brücke",
    "мост",
    "橋",
    "stone",
    "камень",
    "石",
    "light",
    "Licht",
];

fn sentence(i: usize, len: usize) -> String {
    (0..len)
        .map(|j| WORDS[(i * 7 + j * 3) % WORDS.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

fn records(n: usize) -> Vec<BiRecord> {
    (0..n)
        .map(|i| BiRecord {
            src_lang: "eng_Latn".parse().unwrap(),
            src_txt: format!("{} {i}", sentence(i, 12)),
            tgt_lang: if i % 2 == 0 { "deu_Latn" } else { "rus_Cyrl" }.parse().unwrap(),
            tgt_txt: format!("{} {}", sentence(i + 1, 14), i % (n / 2).max(1)),
            url: None,
            collection: "bench".into(),
            source: "bench".into(),
            original_src_lang: "en".into(),
            original_tgt_lang: "de".into(),
            extra: Extra::new(),
        })
        .collect()
}

fn bench_script(c: &mut Criterion) {
    let ranges = ScriptRanges::builtin();
    let lines: Vec<String> = (0..1000).map(|i| sentence(i, 20)).collect();
    let bytes: usize = lines.iter().map(String::len).sum();
    let mut g = c.benchmark_group("script");
    g.throughput(Throughput::Bytes(bytes as u64));
    g.bench_function("line_script", |b| {
        b.iter(|| {
            lines
                .iter()
                .filter(|l| line_script(black_box(l), ranges).script.as_str() != "Zzzz")
                .count()
        })
    });
    g.finish();
}

fn bench_langid(c: &mut Criterion) {
    let table = CodeTable::builtin();
    let codes = ["en", "eng", "en-GB", "zh-Hant-TW", "fil", "xx-unknown", "deu", "pt_BR"];
    c.bench_function("langid/normalize_code", |b| {
        b.iter(|| {
            codes
                .iter()
                .map(|c| normalize_code(black_box(c), table).code.len())
                .sum::<usize>()
        })
    });
}

fn bench_clean_dedup(c: &mut Criterion) {
    let recs = records(10_000);
    let cfg = CleanConfig::default();
    let mut g = c.benchmark_group("cleanse");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("clean_birecord", |b| {
        b.iter(|| recs.iter().filter(|r| clean_birecord(r, &cfg) == Verdict::Keep).count())
    });
    g.bench_function("dedup", |b| {
        b.iter_batched(
            DedupIndex::new,
            |index| dedup(recs.iter(), &index).count(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn bench_census(c: &mut Criterion) {
    let recs: Vec<Record> = records(10_000).into_iter().map(Record::Bi).collect();
    let mut g = c.benchmark_group("census");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("aggregate_par", |b| {
        b.iter(|| aggregate_par(black_box(&recs)).total_tokens())
    });
    g.finish();
}

fn bench_code_metrics(c: &mut Criterion) {
    let file: String = (0..400)
        .map(|i| format!("    let x{i} = compute({i}, \"{}\");\n", sentence(i, 3)))
        .collect();
    let mut g = c.benchmark_group("codefilter");
    g.throughput(Throughput::Bytes(file.len() as u64));
    g.bench_function("code_metrics", |b| b.iter(|| code_metrics(black_box(&file))));
    g.finish();
}

fn bench_mix(c: &mut Criterion) {
    let types = [DataType::Instruction, DataType::Code, DataType::Book, DataType::Paper];
    let rows: Vec<MixInput> = (0..24)
        .map(|i| MixInput {
            data_type: if i < 8 {
                types[i % 4]
            } else if i < 16 {
                DataType::Monolingual
            } else {
                DataType::Bilingual
            },
            category: format!("row{i}"),
            original_tokens: 1_000_000_000 + i as u64 * 37_000_000,
            rate: Rate::from_parts(5 + i as u64, 1),
            reported_final: None,
        })
        .collect();
    c.bench_function("mixer/plan_mix_24_rows", |b| {
        b.iter(|| plan_mix(black_box(&rows)).unwrap().rows.len())
    });
}

fn bench_chunk(c: &mut Criterion) {
    let recs = records(10_000);
    let mut g = c.benchmark_group("bidoc");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("chunk_by_direction", |b| {
        b.iter(|| chunk_by_direction(black_box(&recs), ChunkOptions::default()).len())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_script,
    bench_langid,
    bench_clean_dedup,
    bench_census,
    bench_code_metrics,
    bench_mix,
    bench_chunk
);
criterion_main!(benches);
