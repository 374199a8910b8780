//! Quality filters for source-code files, bucketed by fork count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFileMeta {
    pub content: String,
    pub forks: u64,
    pub language_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BucketRule {
    pub avg_line_max: f64,
    pub max_line_max: u64,
    pub alnum_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeFilterRules {
    /// forks > 25
    pub popular: BucketRule,
    /// 15 <= forks <= 25
    pub moderate: BucketRule,
    /// forks < 15
    pub rare: BucketRule,
    pub language_min_count: u64,
    pub always_keep: BTreeSet<String>,
}

impl Default for CodeFilterRules {
    fn default() -> Self {
        Self {
            popular: BucketRule {
                avg_line_max: 120.0,
                max_line_max: 300,
                alnum_min: 0.30,
            },
            moderate: BucketRule {
                avg_line_max: 90.0,
                max_line_max: 150,
                alnum_min: 0.40,
            },
            rare: BucketRule {
                avg_line_max: 80.0,
                max_line_max: 120,
                alnum_min: 0.45,
            },
            language_min_count: 50_000,
            always_keep: BTreeSet::from(["llvm".to_owned()]),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("bucket {bucket}: thresholds must be positive and alnum_min in (0, 1)")]
pub struct CodeRulesError {
    pub bucket: Bucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Rare,
    Moderate,
    Popular,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bucket::Rare => "rare",
            Bucket::Moderate => "moderate",
            Bucket::Popular => "popular",
        })
    }
}

/// `< 15` rare, `15..=25` moderate, `> 25` popular.
pub fn bucket_for(forks: u64) -> Bucket {
    match forks {
        0..=14 => Bucket::Rare,
        15..=25 => Bucket::Moderate,
        _ => Bucket::Popular,
    }
}

impl CodeFilterRules {
    pub fn rule(&self, bucket: Bucket) -> &BucketRule {
        match bucket {
            Bucket::Rare => &self.rare,
            Bucket::Moderate => &self.moderate,
            Bucket::Popular => &self.popular,
        }
    }

    pub fn validate(&self) -> Result<(), CodeRulesError> {
        for bucket in [Bucket::Rare, Bucket::Moderate, Bucket::Popular] {
            let r = self.rule(bucket);
            let ok = r.avg_line_max > 0.0 && r.max_line_max > 0 && r.alnum_min > 0.0 && r.alnum_min < 1.0;
            if !ok {
                return Err(CodeRulesError { bucket });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeMetrics {
    pub avg_line_len: f64,
    pub max_line_len: u64,
    pub alnum_fraction: f64,
}

/// Letters (any `L*` category) and decimal digits.
pub fn is_alnum(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_alphanumeric();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
            | GeneralCategory::DecimalNumber
    )
}

/// Line-length and alphanumeric statistics, in code points. Lines are split on
/// LF; a trailing LF does not start a new line.
pub fn code_metrics(content: &str) -> CodeMetrics {
    let mut lines = 0u64;
    let mut total_len = 0u64;
    let mut max_len = 0u64;
    let mut alnum = 0u64;
    for line in content.split_terminator('\n') {
        let mut len = 0u64;
        for c in line.chars() {
            len += 1;
            if is_alnum(c) {
                alnum += 1;
            }
        }
        lines += 1;
        total_len += len;
        max_len = max_len.max(len);
    }
    if lines == 0 || total_len == 0 {
        return CodeMetrics {
            avg_line_len: 0.0,
            max_line_len: max_len,
            alnum_fraction: 0.0,
        };
    }
    CodeMetrics {
        avg_line_len: total_len as f64 / lines as f64,
        max_line_len: max_len,
        alnum_fraction: alnum as f64 / total_len as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeDropReason {
    AvgLineLength,
    MaxLineLength,
    AlnumFraction,
}

impl fmt::Display for CodeDropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeDropReason::AvgLineLength => "avg-line-length",
            CodeDropReason::MaxLineLength => "max-line-length",
            CodeDropReason::AlnumFraction => "alnum-fraction",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "lowercase")]
pub enum CodeVerdict {
    Keep,
    Drop(CodeDropReason),
}

impl CodeVerdict {
    pub fn is_keep(&self) -> bool {
        matches!(self, CodeVerdict::Keep)
    }
}

/// Applies the bucket rule for `forks` to precomputed metrics. All comparisons
/// are strict.
pub fn judge_metrics(forks: u64, m: &CodeMetrics, rules: &CodeFilterRules) -> CodeVerdict {
    let rule = rules.rule(bucket_for(forks));
    if m.avg_line_len.is_nan() || m.avg_line_len >= rule.avg_line_max {
        CodeVerdict::Drop(CodeDropReason::AvgLineLength)
    } else if m.max_line_len >= rule.max_line_max {
        CodeVerdict::Drop(CodeDropReason::MaxLineLength)
    } else if m.alnum_fraction.is_nan() || m.alnum_fraction <= rule.alnum_min {
        CodeVerdict::Drop(CodeDropReason::AlnumFraction)
    } else {
        CodeVerdict::Keep
    }
}

pub fn keep_code_file(meta: &CodeFileMeta, rules: &CodeFilterRules) -> CodeVerdict {
    judge_metrics(meta.forks, &code_metrics(&meta.content), rules)
}

/// Labels seen at least `min_count` times, plus any always-keep label present.
pub fn language_frequency_filter(
    counts: &BTreeMap<String, u64>,
    min_count: u64,
    always_keep: &BTreeSet<String>,
) -> BTreeSet<String> {
    counts
        .iter()
        .filter(|(label, &n)| n >= min_count || always_keep.contains(*label))
        .map(|(label, _)| label.clone())
        .collect()
}
