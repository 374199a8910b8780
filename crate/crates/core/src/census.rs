//! Whitespace token census and resource tiers.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::langid::canonical_pair;
use crate::model::{LanguageTag, PairLabel, Record};

/// Number of maximal non-whitespace runs.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Token-count bands, ordered from smallest to largest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceTier {
    VeryLow,
    Low,
    MediumLow,
    Medium,
    MediumHigh,
    High,
    VeryHigh,
}

impl ResourceTier {
    /// Largest first, with the exclusive lower bound of each band.
    pub const BANDS: [(ResourceTier, u64); 6] = [
        (ResourceTier::VeryHigh, 10_000_000_000),
        (ResourceTier::High, 1_000_000_000),
        (ResourceTier::MediumHigh, 500_000_000),
        (ResourceTier::Medium, 100_000_000),
        (ResourceTier::MediumLow, 10_000_000),
        (ResourceTier::Low, 1_000_000),
    ];

    pub const ALL: [ResourceTier; 7] = [
        ResourceTier::VeryHigh,
        ResourceTier::High,
        ResourceTier::MediumHigh,
        ResourceTier::Medium,
        ResourceTier::MediumLow,
        ResourceTier::Low,
        ResourceTier::VeryLow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ResourceTier::VeryHigh => "very-high",
            ResourceTier::High => "high",
            ResourceTier::MediumHigh => "medium-high",
            ResourceTier::Medium => "medium",
            ResourceTier::MediumLow => "medium-low",
            ResourceTier::Low => "low",
            ResourceTier::VeryLow => "very-low",
        }
    }
}

impl fmt::Display for ResourceTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceTier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '_'], "-");
        ResourceTier::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| format!("unknown resource tier {s:?}"))
    }
}

impl Serialize for ResourceTier {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Strict greater-than at each threshold, checked from the top band down.
pub fn classify_tier(tokens: u64) -> ResourceTier {
    ResourceTier::BANDS
        .iter()
        .find(|&&(_, floor)| tokens > floor)
        .map(|&(tier, _)| tier)
        .unwrap_or(ResourceTier::VeryLow)
}

/// A language (monolingual) or an order-independent language pair (bilingual).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatKey {
    Lang(LanguageTag),
    Pair(PairLabel),
}

impl StatKey {
    pub fn of(record: &Record) -> StatKey {
        match record {
            Record::Mono(r) => StatKey::Lang(r.lang.clone()),
            Record::Bi(r) => {
                let (a, b) = canonical_pair(&r.src_lang, &r.tgt_lang);
                StatKey::Pair(PairLabel::new(a, b))
            }
        }
    }
}

impl fmt::Display for StatKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatKey::Lang(t) => t.fmt(f),
            StatKey::Pair(p) => p.fmt(f),
        }
    }
}

impl Serialize for StatKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KeyStats {
    pub segments: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TierRow {
    pub keys: u64,
    pub tokens: u64,
}

/// Per-tier key and token totals. Every tier is present, possibly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierSummary {
    rows: BTreeMap<ResourceTier, TierRow>,
}

impl Default for TierSummary {
    fn default() -> Self {
        Self {
            rows: ResourceTier::ALL.iter().map(|&t| (t, TierRow::default())).collect(),
        }
    }
}

impl TierSummary {
    pub fn add(&mut self, tier: ResourceTier, keys: u64, tokens: u64) {
        let row = self.rows.entry(tier).or_default();
        row.keys += keys;
        row.tokens += tokens;
    }

    pub fn get(&self, tier: ResourceTier) -> TierRow {
        self.rows.get(&tier).copied().unwrap_or_default()
    }

    pub fn total_tokens(&self) -> u64 {
        self.rows.values().map(|r| r.tokens).sum()
    }

    pub fn total_keys(&self) -> u64 {
        self.rows.values().map(|r| r.keys).sum()
    }

    /// Rows from very-high down to very-low.
    pub fn iter(&self) -> impl Iterator<Item = (ResourceTier, TierRow)> + '_ {
        ResourceTier::ALL.iter().map(|&t| (t, self.get(t)))
    }
}

impl Serialize for TierSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            tier: ResourceTier,
            keys: u64,
            tokens: u64,
            tokens_display: String,
        }
        #[derive(Serialize)]
        struct Out {
            tiers: Vec<Row>,
            total_keys: u64,
            total_tokens: u64,
            total_tokens_display: String,
        }
        Out {
            tiers: self
                .iter()
                .map(|(tier, r)| Row {
                    tier,
                    keys: r.keys,
                    tokens: r.tokens,
                    tokens_display: format_sci(r.tokens, 2),
                })
                .collect(),
            total_keys: self.total_keys(),
            total_tokens: self.total_tokens(),
            total_tokens_display: format_sci(self.total_tokens(), 2),
        }
        .serialize(serializer)
    }
}

/// Segment and token totals per language or pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    per_key: BTreeMap<StatKey, KeyStats>,
}

impl CorpusStats {
    pub fn add_record(&mut self, record: &Record) {
        let tokens = match record {
            Record::Mono(r) => count_tokens(&r.text),
            Record::Bi(r) => count_tokens(&r.src_txt) + count_tokens(&r.tgt_txt),
        };
        self.add(StatKey::of(record), 1, tokens);
    }

    pub fn add(&mut self, key: StatKey, segments: u64, tokens: u64) {
        let entry = self.per_key.entry(key).or_default();
        entry.segments += segments;
        entry.tokens += tokens;
    }

    /// Commutative merge of two shards.
    pub fn merge(mut self, other: CorpusStats) -> CorpusStats {
        let (mut big, small) = if self.per_key.len() >= other.per_key.len() {
            (std::mem::take(&mut self.per_key), other.per_key)
        } else {
            (other.per_key, std::mem::take(&mut self.per_key))
        };
        for (k, v) in small {
            let e = big.entry(k).or_default();
            e.segments += v.segments;
            e.tokens += v.tokens;
        }
        CorpusStats { per_key: big }
    }

    pub fn get(&self, key: &StatKey) -> Option<KeyStats> {
        self.per_key.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StatKey, &KeyStats)> {
        self.per_key.iter()
    }

    pub fn len(&self) -> usize {
        self.per_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_key.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.per_key.values().map(|s| s.tokens).sum()
    }

    pub fn total_segments(&self) -> u64 {
        self.per_key.values().map(|s| s.segments).sum()
    }

    pub fn tier_summary(&self) -> TierSummary {
        let mut summary = TierSummary::default();
        for s in self.per_key.values() {
            summary.add(classify_tier(s.tokens), 1, s.tokens);
        }
        summary
    }

    /// `key<TAB>segments<TAB>tokens<TAB>tier`, sorted by key.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "key\tsegments\ttokens\ttier")?;
        for (k, s) in &self.per_key {
            writeln!(w, "{k}\t{}\t{}\t{}", s.segments, s.tokens, classify_tier(s.tokens))?;
        }
        Ok(())
    }
}

pub fn aggregate<'a, I>(records: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a Record>,
{
    let mut stats = CorpusStats::default();
    for r in records {
        stats.add_record(r);
    }
    stats
}

/// Sharded parallel version of [`aggregate`]; identical result.
pub fn aggregate_par(records: &[Record]) -> CorpusStats {
    records
        .par_iter()
        .fold(CorpusStats::default, |mut acc, r| {
            acc.add_record(r);
            acc
        })
        .reduce(CorpusStats::default, CorpusStats::merge)
}

/// Scientific notation with `sig` significant digits, rounded half up on the
/// exact integer, e.g. `428_680_000_000 -> "4.3E+11"`.
pub fn format_sci(n: u64, sig: u32) -> String {
    let sig = sig.max(1);
    if n == 0 {
        let zeros = "0".repeat(sig as usize - 1);
        return if sig == 1 {
            "0E+00".to_owned()
        } else {
            format!("0.{zeros}E+00")
        };
    }
    let digits = n.ilog10() + 1;
    let mut exp = digits as i32 - 1;
    let mantissa: u128 = if digits > sig {
        let div = 10u128.pow(digits - sig);
        (n as u128 + div / 2) / div
    } else {
        n as u128 * 10u128.pow(sig - digits)
    };
    let mut mantissa = mantissa;
    if mantissa >= 10u128.pow(sig) {
        mantissa /= 10;
        exp += 1;
    }
    let m = mantissa.to_string();
    let body = if m.len() > 1 {
        format!("{}.{}", &m[..1], &m[1..])
    } else {
        m
    };
    format!("{body}E{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}
