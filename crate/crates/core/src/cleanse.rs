//! Noise filters and exact content deduplication.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use dashmap::DashSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::model::{BiRecord, MonoRecord, Record};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub max_consecutive_repeats: usize,
    pub length_ratio_max: f64,
    pub min_chars: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            max_consecutive_repeats: 5,
            length_ratio_max: 9.0,
            min_chars: 1,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CleanConfigError {
    #[error("max_consecutive_repeats must be >= 1")]
    Repeats,
    #[error("length_ratio_max must be > 1, got {0}")]
    Ratio(f64),
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), CleanConfigError> {
        if self.max_consecutive_repeats < 1 {
            return Err(CleanConfigError::Repeats);
        }
        if self.length_ratio_max.is_nan() || self.length_ratio_max <= 1.0 {
            return Err(CleanConfigError::Ratio(self.length_ratio_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    MissingTranslation,
    Empty,
    Repeat,
    LengthMismatch,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::MissingTranslation => "missing-translation",
            DropReason::Empty => "empty",
            DropReason::Repeat => "repeat",
            DropReason::LengthMismatch => "length-mismatch",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Drop(DropReason),
}

/// Longest run of one repeated item.
fn longest_run<T: PartialEq>(items: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<T> = None;
    for item in items {
        if prev.as_ref() == Some(&item) {
            run += 1;
        } else {
            run = 1;
        }
        best = best.max(run);
        prev = Some(item);
    }
    best
}

/// True when a whitespace-delimited word or a single character repeats more
/// than `k` times in a row.
pub fn has_excessive_repeat(text: &str, k: usize) -> bool {
    longest_run(text.split_whitespace()) > k || longest_run(text.chars()) > k
}

fn char_len(s: &str) -> usize {
    s.trim().chars().count()
}

pub fn clean_birecord(rec: &BiRecord, cfg: &CleanConfig) -> Verdict {
    let src_len = char_len(&rec.src_txt);
    let tgt_len = char_len(&rec.tgt_txt);
    if src_len < cfg.min_chars.max(1) || tgt_len < cfg.min_chars.max(1) {
        return Verdict::Drop(DropReason::MissingTranslation);
    }
    let k = cfg.max_consecutive_repeats;
    if has_excessive_repeat(&rec.src_txt, k) || has_excessive_repeat(&rec.tgt_txt, k) {
        return Verdict::Drop(DropReason::Repeat);
    }
    let (long, short) = (src_len.max(tgt_len), src_len.min(tgt_len));
    if long as f64 / short as f64 > cfg.length_ratio_max {
        return Verdict::Drop(DropReason::LengthMismatch);
    }
    Verdict::Keep
}

pub fn clean_monorecord(rec: &MonoRecord, cfg: &CleanConfig) -> Verdict {
    if char_len(&rec.text) < cfg.min_chars.max(1) {
        return Verdict::Drop(DropReason::Empty);
    }
    if has_excessive_repeat(&rec.text, cfg.max_consecutive_repeats) {
        return Verdict::Drop(DropReason::Repeat);
    }
    Verdict::Keep
}

pub fn clean_record(rec: &Record, cfg: &CleanConfig) -> Verdict {
    match rec {
        Record::Mono(r) => clean_monorecord(r, cfg),
        Record::Bi(r) => clean_birecord(r, cfg),
    }
}

/// Kept count plus one counter per drop reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub kept: u64,
    pub dropped: BTreeMap<DropReason, u64>,
}

impl DropReport {
    pub fn record(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Keep => self.kept += 1,
            Verdict::Drop(r) => *self.dropped.entry(r).or_insert(0) += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.kept + self.dropped.values().sum::<u64>()
    }

    /// `reason<TAB>count` rows, `kept` first.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "reason\tcount")?;
        writeln!(w, "kept\t{}", self.kept)?;
        for (reason, n) in &self.dropped {
            writeln!(w, "{reason}\t{n}")?;
        }
        Ok(())
    }
}

/// Truncated SHA-256 of a record's canonical content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentDigest(pub [u8; 16]);

impl ContentDigest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_u128(&self) -> u128 {
        u128::from_le_bytes(self.0)
    }
}

/// NFC, then whitespace runs collapsed to one space and trimmed.
pub fn canonical_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn hash_fields(domain: &[u8], fields: &[&str]) -> ContentDigest {
    let mut h = Sha256::new();
    h.update(domain);
    for f in fields {
        let canon = canonical_text(f);
        h.update((canon.len() as u64).to_le_bytes());
        h.update(canon.as_bytes());
    }
    let full = h.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&full[..16]);
    ContentDigest(out)
}

/// Things that can be deduplicated by content. Metadata never enters the digest.
pub trait ContentKey {
    fn content_digest(&self) -> ContentDigest;
}

impl ContentKey for BiRecord {
    fn content_digest(&self) -> ContentDigest {
        hash_fields(b"bi\0", &[&self.src_txt, &self.tgt_txt])
    }
}

impl ContentKey for MonoRecord {
    fn content_digest(&self) -> ContentDigest {
        hash_fields(b"mono\0", &[&self.text])
    }
}

impl ContentKey for Record {
    fn content_digest(&self) -> ContentDigest {
        match self {
            Record::Mono(r) => r.content_digest(),
            Record::Bi(r) => r.content_digest(),
        }
    }
}

impl<T: ContentKey + ?Sized> ContentKey for &T {
    fn content_digest(&self) -> ContentDigest {
        (**self).content_digest()
    }
}

/// Concurrent set of seen digests. May be shared across files.
#[derive(Debug, Default)]
pub struct DedupIndex {
    seen: DashSet<ContentDigest>,
}

impl DedupIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Atomically inserts; true when the digest was not present before.
    pub fn insert(&self, digest: ContentDigest) -> bool {
        self.seen.insert(digest)
    }

    pub fn contains(&self, digest: &ContentDigest) -> bool {
        self.seen.contains(digest)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Keeps the first occurrence of each content digest, in input order.
pub fn dedup<'a, T, I>(records: I, index: &'a DedupIndex) -> impl Iterator<Item = T> + 'a
where
    T: ContentKey + 'a,
    I: IntoIterator<Item = T>,
    I::IntoIter: 'a,
{
    records.into_iter().filter(move |r| index.insert(r.content_digest()))
}

/// Keep-mask for a batch. Digests are computed in parallel; insertion runs in
/// batch order so the survivors do not depend on thread scheduling.
pub fn dedup_mask<T: ContentKey + Sync>(records: &[T], index: &DedupIndex) -> Vec<bool> {
    let digests: Vec<ContentDigest> = records.par_iter().map(ContentKey::content_digest).collect();
    digests.into_iter().map(|d| index.insert(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Extra;

    pub(crate) fn bi(src: &str, tgt: &str) -> BiRecord {
        BiRecord {
            src_lang: "eng_Latn".parse().unwrap(),
            src_txt: src.into(),
            tgt_lang: "fra_Latn".parse().unwrap(),
            tgt_txt: tgt.into(),
            url: None,
            collection: "c".into(),
            source: "s".into(),
            original_src_lang: "en".into(),
            original_tgt_lang: "fr".into(),
            extra: Extra::new(),
        }
    }

    #[test]
    fn repeat_boundaries() {
        assert!(has_excessive_repeat("go go go go go go", 5));
        assert!(!has_excessive_repeat("go go go go go", 5));
        assert!(has_excessive_repeat("baaaaaad", 5));
        assert!(!has_excessive_repeat("baaaaad", 5));
        assert!(!has_excessive_repeat("", 5));
        assert!(has_excessive_repeat("ha  ha ha\tha ha\nha", 5));
        assert!(has_excessive_repeat("!!!!!!", 5));
        assert!(!has_excessive_repeat("ab", 1));
        assert!(has_excessive_repeat("aa", 1));
    }

    #[test]
    fn run_length_matches_brute_force() {
        // Brute force: try every start and extend while equal.
        fn brute(chars: &[char]) -> usize {
            let mut best = 0;
            for i in 0..chars.len() {
                let mut j = i;
                while j < chars.len() && chars[j] == chars[i] {
                    j += 1;
                }
                best = best.max(j - i);
            }
            best
        }
        for s in ["", "a", "abba", "xxxxyyyyyyyz", "ééééé", "aaabbbaaaa"] {
            let chars: Vec<char> = s.chars().collect();
            assert_eq!(longest_run(s.chars()), brute(&chars), "{s}");
        }
    }

    #[test]
    fn bitext_filters() {
        let cfg = CleanConfig::default();
        assert_eq!(
            clean_birecord(&bi("Hello.", ""), &cfg),
            Verdict::Drop(DropReason::MissingTranslation)
        );
        assert_eq!(
            clean_birecord(&bi("Hello.", "   "), &cfg),
            Verdict::Drop(DropReason::MissingTranslation)
        );
        assert_eq!(
            clean_birecord(&bi("Hi", &"x".repeat(200)), &cfg),
            Verdict::Drop(DropReason::Repeat)
        );
        let long: String = (0..200).map(|i| if i % 2 == 0 { 'a' } else { 'b' }).collect();
        assert_eq!(
            clean_birecord(&bi("Hi", &long), &cfg),
            Verdict::Drop(DropReason::LengthMismatch)
        );
        assert_eq!(clean_birecord(&bi("Good morning", "Bonjour"), &cfg), Verdict::Keep);
        // 18/2 = 9 is not above the ratio.
        assert_eq!(clean_birecord(&bi("Hi", "abcdefghijabcdefgh"), &cfg), Verdict::Keep);
    }

    #[test]
    fn config_validation() {
        assert!(CleanConfig::default().validate().is_ok());
        let bad = CleanConfig {
            max_consecutive_repeats: 0,
            ..CleanConfig::default()
        };
        assert_eq!(bad.validate(), Err(CleanConfigError::Repeats));
        let bad = CleanConfig {
            length_ratio_max: 1.0,
            ..CleanConfig::default()
        };
        assert_eq!(bad.validate(), Err(CleanConfigError::Ratio(1.0)));
    }

    #[test]
    fn dedup_first_occurrence() {
        let a = bi("a", "b");
        let b = bi("c", "d");
        let idx = DedupIndex::new();
        let out: Vec<_> = dedup(vec![a.clone(), b.clone(), a.clone()], &idx).collect();
        assert_eq!(out, vec![a.clone(), b.clone()]);
        let idx2 = DedupIndex::new();
        let again: Vec<_> = dedup(out.clone(), &idx2).collect();
        assert_eq!(again, out);
    }

    #[test]
    fn digest_ignores_metadata_and_whitespace_form() {
        let a = bi("Hello  world", "Bonjour");
        let mut a2 = a.clone();
        a2.url = Some("http://elsewhere".into());
        a2.collection = "other".into();
        assert_eq!(a.content_digest(), a2.content_digest());
        // Decomposed e + combining acute equals precomposed é after NFC.
        let c1 = bi("caf\u{e9}", "x");
        let c2 = bi("cafe\u{301}", " x ");
        assert_eq!(c1.content_digest(), c2.content_digest());
        // Field boundaries are length-prefixed.
        assert_ne!(bi("ab", "c").content_digest(), bi("a", "bc").content_digest());
    }

    #[test]
    fn pre_populated_index_drops_cross_file_duplicates() {
        let idx = DedupIndex::new();
        idx.insert(bi("a", "b").content_digest());
        let out: Vec<_> = dedup(vec![bi("a", "b"), bi("x", "y")], &idx).collect();
        assert_eq!(out.len(), 1);
        assert_eq!(dedup_mask(&[bi("x", "y"), bi("q", "r")], &idx), vec![false, true]);
    }

    #[test]
    fn drop_report_tsv() {
        let mut r = DropReport::default();
        r.record(Verdict::Keep);
        r.record(Verdict::Drop(DropReason::Repeat));
        r.record(Verdict::Drop(DropReason::Repeat));
        assert_eq!(r.total(), 3);
        let mut out = Vec::new();
        r.write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "reason\tcount\nkept\t1\nrepeat\t2\n");
    }
}
