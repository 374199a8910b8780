//! JSON pipeline configuration. Validation reports every offending key at
//! once instead of stopping at the first.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bidoc::{DEFAULT_CHUNK, DEFAULT_DELIMITER};
use crate::cleanse::CleanConfig;
use crate::codefilter::CodeFilterRules;
use crate::mixer::{FinalPolicy, MixInput};
use crate::script::{DetectConfig, DEFAULT_SAMPLE_SIZE, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Mono,
    Bi,
    Code,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Jsonl,
    /// Bilingual only: `src<TAB>tgt` per line.
    Tsv,
    /// Monolingual only: one segment per line.
    Text,
}

/// A raw input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    pub kind: InputKind,
    #[serde(default)]
    pub format: InputFormat,
    /// Defaults to the per-line value, then the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Denotations used when a line does not carry its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt_lang: Option<String>,
}

impl InputSpec {
    pub fn new(kind: InputKind, path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            kind,
            format: InputFormat::Jsonl,
            collection: None,
            source: None,
            lang: None,
            src_lang: None,
            tgt_lang: None,
        }
    }

    pub(crate) fn label(&self) -> String {
        self.path.display().to_string()
    }

    pub(crate) fn default_collection(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".into())
    }
}

/// `[KIND:]PATH` with KIND one of `bi` (default), `mono`, `code`.
impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, path) = match s.split_once(':') {
            Some(("bi", p)) => (InputKind::Bi, p),
            Some(("mono", p)) => (InputKind::Mono, p),
            Some(("code", p)) => (InputKind::Code, p),
            _ => (InputKind::Bi, s),
        };
        if path.is_empty() {
            return Err(format!("empty input path in {s:?}"));
        }
        Ok(InputSpec::new(kind, path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSettings {
    pub sample_size: usize,
    pub threshold: f64,
}

impl Default for DetectSettings {
    fn default() -> Self {
        Self {
            sample_size: DEFAULT_SAMPLE_SIZE,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl From<DetectSettings> for DetectConfig {
    fn from(s: DetectSettings) -> Self {
        DetectConfig {
            sample_size: s.sample_size,
            threshold: s.threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSettings {
    pub policy: FinalPolicy,
    pub rows: Vec<MixInput>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocFormat {
    #[default]
    Jsonl,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkSettings {
    pub size: usize,
    pub drop_remainder: bool,
    pub strict_listing: bool,
    pub format: DocFormat,
    /// Written between documents in text output.
    pub delimiter: String,
}

impl Default for ChunkSettings {
    fn default() -> Self {
        Self {
            size: DEFAULT_CHUNK,
            drop_remainder: false,
            strict_listing: false,
            format: DocFormat::Jsonl,
            delimiter: DEFAULT_DELIMITER.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub inputs: Vec<InputSpec>,
    pub clean: CleanConfig,
    pub code_rules: CodeFilterRules,
    pub detect: DetectSettings,
    pub mix: MixSettings,
    pub chunk: ChunkSettings,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            clean: CleanConfig::default(),
            code_rules: CodeFilterRules::default(),
            detect: DetectSettings::default(),
            mix: MixSettings::default(),
            chunk: ChunkSettings::default(),
            seed: 0,
            threads: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Replaces the configured inputs when non-empty.
    pub inputs: Vec<InputSpec>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid configuration:\n  {}", .issues.join("\n  "))]
pub struct ConfigError {
    pub issues: Vec<String>,
}

const TOP_KEYS: &[&str] = &[
    "inputs",
    "clean",
    "code_rules",
    "detect",
    "mix",
    "chunk",
    "seed",
    "threads",
    "output_dir",
];
const INPUT_KEYS: &[&str] = &[
    "path",
    "kind",
    "format",
    "collection",
    "source",
    "lang",
    "src_lang",
    "tgt_lang",
];
const CLEAN_KEYS: &[&str] = &["max_consecutive_repeats", "length_ratio_max", "min_chars"];
const CODE_KEYS: &[&str] = &["popular", "moderate", "rare", "language_min_count", "always_keep"];
const BUCKET_KEYS: &[&str] = &["avg_line_max", "max_line_max", "alnum_min"];
const DETECT_KEYS: &[&str] = &["sample_size", "threshold"];
const MIX_KEYS: &[&str] = &["policy", "rows"];
const ROW_KEYS: &[&str] = &["data_type", "category", "original_tokens", "rate", "reported_final"];
const CHUNK_KEYS: &[&str] = &["size", "drop_remainder", "strict_listing", "format", "delimiter"];

fn unknown_keys(value: &Value, allowed: &[&str], path: &str, issues: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys().filter(|k| !allowed.contains(&k.as_str())) {
            let at = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            issues.push(format!("{at}: unknown key"));
        }
    }
}

fn take<T: DeserializeOwned>(map: &Map<String, Value>, key: &str, issues: &mut Vec<String>) -> Option<T> {
    let v = map.get(key)?;
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            issues.push(format!("{key}: {e}"));
            None
        }
    }
}

fn check_nested(map: &Map<String, Value>, issues: &mut Vec<String>) {
    if let Some(Value::Array(items)) = map.get("inputs") {
        for (i, item) in items.iter().enumerate() {
            unknown_keys(item, INPUT_KEYS, &format!("inputs[{i}]"), issues);
        }
    }
    if let Some(v) = map.get("clean") {
        unknown_keys(v, CLEAN_KEYS, "clean", issues);
    }
    if let Some(v) = map.get("code_rules") {
        unknown_keys(v, CODE_KEYS, "code_rules", issues);
        for bucket in ["popular", "moderate", "rare"] {
            if let Some(b) = v.get(bucket) {
                unknown_keys(b, BUCKET_KEYS, &format!("code_rules.{bucket}"), issues);
            }
        }
    }
    if let Some(v) = map.get("detect") {
        unknown_keys(v, DETECT_KEYS, "detect", issues);
    }
    if let Some(v) = map.get("mix") {
        unknown_keys(v, MIX_KEYS, "mix", issues);
        if let Some(Value::Array(rows)) = v.get("rows") {
            for (i, row) in rows.iter().enumerate() {
                unknown_keys(row, ROW_KEYS, &format!("mix.rows[{i}]"), issues);
            }
        }
    }
    if let Some(v) = map.get("chunk") {
        unknown_keys(v, CHUNK_KEYS, "chunk", issues);
    }
}

/// Deserializes array elements one at a time so each bad element is reported.
fn take_each<T: DeserializeOwned>(value: Option<&Value>, path: &str, issues: &mut Vec<String>) -> Vec<T> {
    let Some(value) = value else {
        return Vec::new();
    };
    let Value::Array(items) = value else {
        issues.push(format!("{path}: expected an array"));
        return Vec::new();
    };
    items
        .iter()
        .enumerate()
        .filter_map(|(i, item)| match serde_json::from_value(item.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                // Unknown keys were already listed by name.
                if !e.to_string().starts_with("unknown field") {
                    issues.push(format!("{path}[{i}]: {e}"));
                }
                None
            }
        })
        .collect()
}

/// Deserializes an object section key by key over the defaults, so each bad
/// field is reported with its own path.
fn take_section<T: DeserializeOwned + Serialize>(
    value: Option<&Value>,
    default: T,
    allowed: &[&str],
    path: &str,
    issues: &mut Vec<String>,
) -> T {
    let Some(value) = value else {
        return default;
    };
    let Value::Object(given) = value else {
        issues.push(format!("{path}: expected an object"));
        return default;
    };
    let Ok(Value::Object(base)) = serde_json::to_value(&default) else {
        return default;
    };
    let mut merged = base.clone();
    for (k, v) in given.iter().filter(|(k, _)| allowed.contains(&k.as_str())) {
        let mut probe = base.clone();
        probe.insert(k.clone(), v.clone());
        match serde_json::from_value::<T>(Value::Object(probe)) {
            Ok(_) => {
                merged.insert(k.clone(), v.clone());
            }
            Err(e) => issues.push(format!("{path}.{k}: {e}")),
        }
    }
    serde_json::from_value(Value::Object(merged)).unwrap_or(default)
}

fn strip_unknown(value: &Value, allowed: &[&str]) -> Value {
    match value {
        Value::Object(map) => Value::Object(
            map.iter()
                .filter(|(k, _)| allowed.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        ),
        other => other.clone(),
    }
}

impl PipelineConfig {
    /// Parses `json` (or starts from defaults), applies overrides, validates.
    pub fn load(json: Option<&str>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut issues = Vec::new();
        let mut cfg = PipelineConfig::default();
        if let Some(text) = json {
            match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(map)) => cfg = Self::from_map(&map, &mut issues),
                Ok(_) => issues.push("configuration must be a JSON object".into()),
                Err(e) => issues.push(format!("not valid JSON: {e}")),
            }
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = overrides.threads {
            cfg.threads = threads;
        }
        if !overrides.inputs.is_empty() {
            cfg.inputs = overrides.inputs.clone();
        }
        if let Some(dir) = &overrides.output_dir {
            cfg.output_dir = dir.clone();
        }
        issues.extend(cfg.semantic_issues());
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError { issues })
        }
    }

    pub fn load_file(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            issues: vec![format!("{}: {e}", path.display())],
        })?;
        Self::load(Some(&text), overrides)
    }

    fn from_map(map: &Map<String, Value>, issues: &mut Vec<String>) -> Self {
        unknown_keys(&Value::Object(map.clone()), TOP_KEYS, "", issues);
        check_nested(map, issues);
        let d = PipelineConfig::default();
        let mix_value = map.get("mix").map(|v| strip_unknown(v, MIX_KEYS));
        let mix = match &mix_value {
            Some(Value::Object(m)) => MixSettings {
                policy: take(m, "policy", issues).unwrap_or_default(),
                rows: take_each(m.get("rows"), "mix.rows", issues),
            },
            Some(_) => {
                issues.push("mix: expected an object".into());
                MixSettings::default()
            }
            None => MixSettings::default(),
        };
        let code_rules = map.get("code_rules").map(|v| match v {
            Value::Object(m) => Value::Object(
                m.iter()
                    .map(|(k, v)| match k.as_str() {
                        "popular" | "moderate" | "rare" => (k.clone(), strip_unknown(v, BUCKET_KEYS)),
                        _ => (k.clone(), v.clone()),
                    })
                    .collect(),
            ),
            other => other.clone(),
        });
        PipelineConfig {
            inputs: take_each(map.get("inputs"), "inputs", issues),
            clean: take_section(map.get("clean"), d.clean, CLEAN_KEYS, "clean", issues),
            code_rules: take_section(
                code_rules.as_ref(),
                d.code_rules.clone(),
                CODE_KEYS,
                "code_rules",
                issues,
            ),
            detect: take_section(map.get("detect"), d.detect, DETECT_KEYS, "detect", issues),
            mix,
            chunk: take_section(map.get("chunk"), d.chunk.clone(), CHUNK_KEYS, "chunk", issues),
            seed: take(map, "seed", issues).unwrap_or(d.seed),
            threads: take(map, "threads", issues).unwrap_or(d.threads),
            output_dir: take(map, "output_dir", issues).unwrap_or(d.output_dir.clone()),
        }
    }

    /// Range and cross-field checks on an already-typed config.
    pub fn semantic_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.threads < 1 {
            issues.push("threads: must be >= 1".into());
        }
        if let Err(e) = self.clean.validate() {
            issues.push(format!("clean: {e}"));
        }
        if let Err(e) = self.code_rules.validate() {
            issues.push(format!("code_rules: {e}"));
        }
        if self.detect.sample_size < 1 {
            issues.push("detect.sample_size: must be >= 1".into());
        }
        if !(self.detect.threshold > 0.0 && self.detect.threshold <= 1.0) {
            issues.push("detect.threshold: must be in (0, 1]".into());
        }
        if self.chunk.size < 1 {
            issues.push("chunk.size: must be >= 1".into());
        }
        for (i, row) in self.mix.rows.iter().enumerate() {
            if !row.rate.is_positive() {
                issues.push(format!("mix.rows[{i}].rate: must be positive"));
            }
        }
        for (i, input) in self.inputs.iter().enumerate() {
            let at = format!("inputs[{i}]");
            match (input.kind, input.format) {
                (_, InputFormat::Jsonl) => {}
                (InputKind::Bi, InputFormat::Tsv) => {
                    if input.src_lang.is_none() || input.tgt_lang.is_none() {
                        issues.push(format!("{at}: tsv input needs src_lang and tgt_lang"));
                    }
                }
                (InputKind::Mono, InputFormat::Text) => {
                    if input.lang.is_none() {
                        issues.push(format!("{at}: text input needs lang"));
                    }
                }
                (kind, format) => issues.push(format!("{at}.format: {format:?} is not supported for {kind:?} inputs")),
            }
            if !input.path.is_file() {
                issues.push(format!("{at}.path: {} is not a readable file", input.path.display()));
            }
        }
        issues
    }

    pub fn detect_config(&self) -> DetectConfig {
        self.detect.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let cfg = PipelineConfig::load(None, &Overrides::default()).unwrap();
        assert_eq!(cfg.threads, 1);
        assert_eq!(cfg.chunk.size, 10);
        assert_eq!(cfg.clean.max_consecutive_repeats, 5);
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let err = PipelineConfig::load(
            Some(r#"{"sede": 1, "clean": {"max_repeats": 3}, "chunk": {"sise": 2}, "mix": {"rows": [{"data_type": "code", "category": "x", "original_tokens": 1, "rate": 1, "bogus": 0}]}}"#),
            &Overrides::default(),
        )
        .unwrap_err();
        let text = err.issues.join("\n");
        for key in ["sede", "clean.max_repeats", "chunk.sise", "mix.rows[0].bogus"] {
            assert!(text.contains(&format!("{key}: unknown key")), "{text}");
        }
        assert_eq!(err.issues.len(), 4, "{text}");
    }

    #[test]
    fn type_errors_and_ranges() {
        let err = PipelineConfig::load(
            Some(r#"{"threads": 0, "seed": "x", "detect": {"threshold": 2.0}}"#),
            &Overrides::default(),
        )
        .unwrap_err();
        let text = err.issues.join("\n");
        assert!(text.contains("seed:"));
        assert!(text.contains("threads: must be >= 1"));
        assert!(text.contains("detect.threshold"));
    }

    #[test]
    fn overrides_win() {
        let cfg = PipelineConfig::load(
            Some(r#"{"seed": 3, "threads": 2}"#),
            &Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.threads), (9, 2));
    }

    #[test]
    fn cli_input_syntax() {
        let s: InputSpec = "mono:a/b.jsonl".parse().unwrap();
        assert_eq!((s.kind, s.path.as_path()), (InputKind::Mono, Path::new("a/b.jsonl")));
        let s: InputSpec = "x.jsonl".parse().unwrap();
        assert_eq!(s.kind, InputKind::Bi);
        assert!("code:".parse::<InputSpec>().is_err());
    }
}
