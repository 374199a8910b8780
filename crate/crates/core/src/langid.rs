//! Language-code normalization to ISO 639-3.
//!
//! Resolution runs in three steps: the primary subtag is accepted as-is when it
//! is already a registered code; otherwise the denotation is looked up in the
//! alias table (ISO 639-1, 639-2/B, English names, legacy OPUS spellings);
//! otherwise the code is `unknown`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use crate::model::{LanguageTag, PairLabel, UNKNOWN_CODE};

const BUILTIN_CODES: &str = include_str!("../data/iso639_codes.tsv");
const BUILTIN_ALIASES: &str = include_str!("../data/language_aliases.tsv");

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodeTableError {
    #[error("line {line}: expected two tab-separated columns")]
    Columns { line: usize },
    #[error("line {line}: {code:?} is not a 3-letter lowercase code")]
    BadCode { line: usize, code: String },
    #[error("line {line}: alias {alias:?} points at unregistered code {code:?}")]
    DanglingAlias { line: usize, alias: String, code: String },
}

/// Registered codes plus alias map. Immutable once built.
#[derive(Debug, Clone)]
pub struct CodeTable {
    codes: HashSet<String>,
    aliases: HashMap<String, String>,
    version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Alias,
    Unknown,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Alias => "alias",
            Method::Unknown => "unknown",
        })
    }
}

/// Subtags parsed off a denotation. They never enter the code itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Subtags {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<String>,
}

impl Subtags {
    pub fn is_empty(&self) -> bool {
        self.script.is_none() && self.region.is_none() && self.variants.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalizedCode {
    pub code: String,
    pub method: Method,
    #[serde(skip_serializing_if = "Subtags::is_empty")]
    pub subtags: Subtags,
}

fn parse_subtags<'a>(rest: impl Iterator<Item = &'a str>) -> Subtags {
    let mut out = Subtags::default();
    for sub in rest.filter(|s| !s.is_empty()) {
        let alpha = sub.bytes().all(|b| b.is_ascii_alphabetic());
        let digits = sub.bytes().all(|b| b.is_ascii_digit());
        match sub.len() {
            4 if alpha && out.script.is_none() => {
                let mut s = sub.to_ascii_lowercase();
                s[..1].make_ascii_uppercase();
                out.script = Some(s);
            }
            2 | 3 if (alpha || (digits && sub.len() == 3)) && out.region.is_none() => {
                out.region = Some(sub.to_ascii_uppercase());
            }
            _ => out.variants.push(sub.to_owned()),
        }
    }
    out
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn is_code_shape(code: &str) -> bool {
    code.len() == 3 && code.bytes().all(|b| b.is_ascii_lowercase())
}

impl CodeTable {
    /// The vendored registry snapshot shipped with the crate.
    pub fn builtin() -> &'static CodeTable {
        static TABLE: OnceLock<CodeTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            CodeTable::from_tsv(BUILTIN_CODES, BUILTIN_ALIASES).expect("vendored language tables are well-formed")
        })
    }

    /// Builds a table from a code list (first column is the code) and an alias
    /// TSV of `denotation<TAB>iso639_3`. Lines starting with `#` are comments.
    pub fn from_tsv(codes_tsv: &str, aliases_tsv: &str) -> Result<Self, CodeTableError> {
        let mut codes = HashSet::new();
        for (line, row) in data_lines(codes_tsv) {
            let code = row.split('\t').next().unwrap_or("").trim();
            if !is_code_shape(code) {
                return Err(CodeTableError::BadCode {
                    line,
                    code: code.to_owned(),
                });
            }
            codes.insert(code.to_owned());
        }
        let version = codes_tsv
            .lines()
            .find_map(|l| l.strip_prefix("# source: "))
            .unwrap_or("custom")
            .to_owned();
        let mut table = CodeTable {
            codes,
            aliases: HashMap::new(),
            version,
        };
        table.extend_aliases(aliases_tsv)?;
        Ok(table)
    }

    /// Adds (or overrides) aliases from a `denotation<TAB>iso639_3` TSV.
    pub fn extend_aliases(&mut self, aliases_tsv: &str) -> Result<(), CodeTableError> {
        for (line, row) in data_lines(aliases_tsv) {
            let mut cols = row.split('\t');
            let (Some(alias), Some(code), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(CodeTableError::Columns { line });
            };
            let code = code.trim().to_ascii_lowercase();
            if !self.codes.contains(&code) {
                return Err(CodeTableError::DanglingAlias {
                    line,
                    alias: alias.to_owned(),
                    code,
                });
            }
            self.aliases.insert(canonical_denotation(alias), code);
        }
        Ok(())
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.contains(code)
    }

    pub fn alias(&self, denotation: &str) -> Option<&str> {
        self.aliases.get(&canonical_denotation(denotation)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }
}

fn canonical_denotation(s: &str) -> String {
    s.trim().to_lowercase().replace('_', "-")
}

/// Resolves a source-dataset language denotation to an ISO 639-3 code.
pub fn normalize_code(denotation: &str, table: &CodeTable) -> NormalizedCode {
    let canon = canonical_denotation(denotation);
    let mut parts = canon.split('-');
    let primary = parts.next().unwrap_or("");

    if table.contains(primary) {
        return NormalizedCode {
            code: primary.to_owned(),
            method: Method::Exact,
            subtags: parse_subtags(parts),
        };
    }
    if let Some(code) = table.aliases.get(&canon) {
        return NormalizedCode {
            code: code.clone(),
            method: Method::Alias,
            subtags: Subtags::default(),
        };
    }
    if let Some(code) = table.aliases.get(primary) {
        return NormalizedCode {
            code: code.clone(),
            method: Method::Alias,
            subtags: parse_subtags(parts),
        };
    }
    NormalizedCode {
        code: UNKNOWN_CODE.to_owned(),
        method: Method::Unknown,
        subtags: Subtags::default(),
    }
}

/// `{src}-{tgt}` as a string, e.g. `eng_Latn-zho_Hani`.
pub fn make_pair_label(src: &LanguageTag, tgt: &LanguageTag) -> String {
    PairLabel::new(src.clone(), tgt.clone()).to_string()
}

/// Orders the two tags by rendered form so X-Y and Y-X share one key.
pub fn canonical_pair(src: &LanguageTag, tgt: &LanguageTag) -> (LanguageTag, LanguageTag) {
    if src <= tgt {
        (src.clone(), tgt.clone())
    } else {
        (tgt.clone(), src.clone())
    }
}
