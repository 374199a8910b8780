use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::langid::CodeTable;
use crate::script::ScriptRanges;

/// Per-line failures kept verbatim in a manifest; the rest are only counted.
pub const MAX_LISTED_ERRORS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataVersions {
    pub unicode_scripts: String,
    pub iso639: String,
}

impl DataVersions {
    pub fn builtin() -> Self {
        Self {
            unicode_scripts: ScriptRanges::builtin().unicode_version().to_owned(),
            iso639: CodeTable::builtin().version().to_owned(),
        }
    }
}

/// Written as `manifest.json` in each stage directory. Contains nothing that
/// depends on wall time or thread count, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    pub data_versions: DataVersions,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub error_count: u64,
    pub errors: Vec<String>,
}

impl StageManifest {
    pub(crate) fn new(stage: &str, seed: u64) -> Self {
        Self {
            stage: stage.to_owned(),
            tool_version: format!("polyglot-forge {}", crate::VERSION),
            seed,
            data_versions: DataVersions::builtin(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            warnings: Vec::new(),
            error_count: 0,
            errors: Vec::new(),
        }
    }

    pub(crate) fn count(&mut self, key: &str, n: u64) {
        *self.counts.entry(key.to_owned()).or_insert(0) += n;
    }

    pub(crate) fn record_errors(&mut self, file: &str, errors: Vec<(usize, String)>) {
        for (line, msg) in errors {
            self.error_count += 1;
            if self.errors.len() < MAX_LISTED_ERRORS {
                self.errors.push(format!("{file}:{line}: {msg}"));
            }
        }
    }
}
