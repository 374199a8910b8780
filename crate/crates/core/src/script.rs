//! ISO 15924 writing-system detection from the Unicode Scripts property.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Serialize, Serializer};
use unicode_general_category::{get_general_category, GeneralCategory};

const BUILTIN_SCRIPTS: &str = include_str!("../data/scripts.tsv");

pub const DEFAULT_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Minimum share that both Han and kana (or Hangul) need for a composite code.
pub const COMPOSITE_MIN_SHARE: f64 = 0.05;

/// A four-letter ISO 15924 code such as `Latn`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Script([u8; 4]);

impl Script {
    pub const COMMON: Script = Script(*b"Zyyy");
    pub const INHERITED: Script = Script(*b"Zinh");
    pub const UNKNOWN: Script = Script(*b"Zzzz");
    pub const HAN: Script = Script(*b"Hani");
    pub const HIRAGANA: Script = Script(*b"Hira");
    pub const KATAKANA: Script = Script(*b"Kana");
    pub const HANGUL: Script = Script(*b"Hang");
    pub const JAPANESE: Script = Script(*b"Jpan");
    pub const KOREAN: Script = Script(*b"Kore");

    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII letters.
        std::str::from_utf8(&self.0).unwrap_or("Zzzz")
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Script({})", self.as_str())
    }
}

impl Serialize for Script {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScriptDataError {
    #[error("invalid script code {0:?}")]
    Code(String),
    #[error("line {0}: expected start<TAB>end<TAB>script")]
    Row(usize),
    #[error("line {0}: ranges overlap or are out of order")]
    Order(usize),
}

impl FromStr for Script {
    type Err = ScriptDataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.as_bytes();
        if b.len() == 4 && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_lowercase) {
            Ok(Script([b[0], b[1], b[2], b[3]]))
        } else {
            Err(ScriptDataError::Code(s.to_owned()))
        }
    }
}

/// Sorted, disjoint code-point ranges mapped to scripts. Unmapped points are `Zzzz`.
#[derive(Debug, Clone)]
pub struct ScriptRanges {
    ranges: Vec<(u32, u32, Script)>,
    ascii: [Script; 128],
    version: String,
}

impl ScriptRanges {
    /// Vendored Unicode Scripts table.
    pub fn builtin() -> &'static ScriptRanges {
        static RANGES: OnceLock<ScriptRanges> = OnceLock::new();
        RANGES.get_or_init(|| ScriptRanges::from_tsv(BUILTIN_SCRIPTS).expect("vendored script table is well-formed"))
    }

    /// Parses `start<TAB>end<TAB>Script` rows with hex code points.
    pub fn from_tsv(text: &str) -> Result<Self, ScriptDataError> {
        let mut ranges: Vec<(u32, u32, Script)> = Vec::new();
        let mut version = String::from("unversioned");
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(v) = line.strip_prefix("# unicode-version\t") {
                version = v.trim().to_owned();
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(start), Some(end), Some(script)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(ScriptDataError::Row(lineno));
            };
            let start = u32::from_str_radix(start.trim(), 16).map_err(|_| ScriptDataError::Row(lineno))?;
            let end = u32::from_str_radix(end.trim(), 16).map_err(|_| ScriptDataError::Row(lineno))?;
            let script: Script = script.trim().parse()?;
            if end < start || ranges.last().is_some_and(|&(_, prev_end, _)| start <= prev_end) {
                return Err(ScriptDataError::Order(lineno));
            }
            ranges.push((start, end, script));
        }
        let mut out = ScriptRanges {
            ranges,
            ascii: [Script::UNKNOWN; 128],
            version,
        };
        for c in 0..128u32 {
            out.ascii[c as usize] = out.lookup_slow(c);
        }
        Ok(out)
    }

    fn lookup_slow(&self, cp: u32) -> Script {
        match self.ranges.binary_search_by(|&(start, end, _)| {
            if cp < start {
                std::cmp::Ordering::Greater
            } else if cp > end {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => self.ranges[i].2,
            Err(_) => Script::UNKNOWN,
        }
    }

    pub fn lookup(&self, c: char) -> Script {
        let cp = c as u32;
        if cp < 128 {
            self.ascii[cp as usize]
        } else {
            self.lookup_slow(cp)
        }
    }

    /// The script a character counts towards, or `None` for ignorable characters
    /// (Common, Inherited, unassigned, whitespace, digits, punctuation).
    pub fn countable(&self, c: char) -> Option<Script> {
        if c.is_whitespace() {
            return None;
        }
        let script = self.lookup(c);
        if script == Script::COMMON || script == Script::INHERITED || script == Script::UNKNOWN {
            return None;
        }
        if c.is_ascii() {
            return c.is_ascii_alphabetic().then_some(script);
        }
        match get_general_category(c) {
            GeneralCategory::DecimalNumber
            | GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation => None,
            _ => Some(script),
        }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn unicode_version(&self) -> &str {
        &self.version
    }
}

/// Per-script code-point tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptCounts {
    counts: BTreeMap<Script, u64>,
    /// Countable code points.
    counted: u64,
    /// All non-whitespace code points, ignorable ones included.
    visible: u64,
}

impl ScriptCounts {
    pub fn add_text(&mut self, text: &str, ranges: &ScriptRanges) {
        for c in text.chars() {
            if c.is_whitespace() {
                continue;
            }
            self.visible += 1;
            if let Some(s) = ranges.countable(c) {
                *self.counts.entry(s).or_insert(0) += 1;
                self.counted += 1;
            }
        }
    }

    pub fn get(&self, script: Script) -> u64 {
        self.counts.get(&script).copied().unwrap_or(0)
    }

    pub fn counted(&self) -> u64 {
        self.counted
    }

    pub fn visible(&self) -> u64 {
        self.visible
    }

    /// Folds Han with kana into `Jpan`, or Han with Hangul into `Kore`, when
    /// both sides exceed [`COMPOSITE_MIN_SHARE`] of the counted code points.
    fn composited(&self) -> BTreeMap<Script, u64> {
        let mut counts = self.counts.clone();
        if self.counted == 0 {
            return counts;
        }
        let share = |n: u64| n as f64 / self.counted as f64;
        let han = self.get(Script::HAN);
        let kana = self.get(Script::HIRAGANA) + self.get(Script::KATAKANA);
        let hangul = self.get(Script::HANGUL);
        if share(han) > COMPOSITE_MIN_SHARE && share(kana) > COMPOSITE_MIN_SHARE {
            counts.remove(&Script::HAN);
            counts.remove(&Script::HIRAGANA);
            counts.remove(&Script::KATAKANA);
            counts.insert(Script::JAPANESE, han + kana);
        } else if share(han) > COMPOSITE_MIN_SHARE && share(hangul) > COMPOSITE_MIN_SHARE {
            counts.remove(&Script::HAN);
            counts.remove(&Script::HANGUL);
            counts.insert(Script::KOREAN, han + hangul);
        }
        counts
    }

    /// Plurality script and its count. Ties go to the alphabetically first code.
    pub fn plurality(&self) -> Option<(Script, u64)> {
        self.composited().into_iter().fold(None, |best, (s, n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((s, n)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineScript {
    pub script: Script,
    pub confidence: f64,
}

/// Plurality script of one line and its share of countable code points.
pub fn line_script(line: &str, ranges: &ScriptRanges) -> LineScript {
    let mut counts = ScriptCounts::default();
    counts.add_text(line, ranges);
    match counts.plurality() {
        Some((script, n)) => LineScript {
            script,
            confidence: n as f64 / counts.counted() as f64,
        },
        None => LineScript {
            script: Script::UNKNOWN,
            confidence: 0.0,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionPath {
    Sample,
    FirstLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetScript {
    pub script: Script,
    pub path: DetectionPath,
    /// Winning share of the sample's visible code points.
    pub share: f64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("undetectable: no non-empty lines")]
pub struct Undetectable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub sample_size: usize,
    pub threshold: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            sample_size: DEFAULT_SAMPLE_SIZE,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// One script for a whole dataset.
///
/// Tallies the first `sample_size` non-empty lines. The plurality script wins
/// when its share of all visible code points in the sample reaches
/// `threshold`; otherwise the first non-empty line decides on its own.
pub fn dataset_script<I, S>(lines: I, ranges: &ScriptRanges, cfg: DetectConfig) -> Result<DatasetScript, Undetectable>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let sample_size = cfg.sample_size.max(1);
    let mut counts = ScriptCounts::default();
    let mut first: Option<String> = None;
    for line in lines
        .into_iter()
        .filter(|l| !l.as_ref().trim().is_empty())
        .take(sample_size)
    {
        let line = line.as_ref();
        if first.is_none() {
            first = Some(line.to_owned());
        }
        counts.add_text(line, ranges);
    }
    let first = first.ok_or(Undetectable)?;

    if let Some((script, n)) = counts.plurality() {
        let share = n as f64 / counts.visible() as f64;
        if share >= cfg.threshold {
            return Ok(DatasetScript {
                script,
                path: DetectionPath::Sample,
                share,
            });
        }
    }
    let fallback = line_script(&first, ranges);
    Ok(DatasetScript {
        script: fallback.script,
        path: DetectionPath::FirstLine,
        share: fallback.confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r() -> &'static ScriptRanges {
        ScriptRanges::builtin()
    }

    #[test]
    fn builtin_table_is_pinned() {
        assert_eq!(r().unicode_version(), "17.0.0");
        assert!(r().len() > 900);
    }

    #[test]
    fn simple_lines() {
        let l = line_script("hello world", r());
        assert_eq!((l.script.as_str(), l.confidence), ("Latn", 1.0));
        let l = line_script("привет", r());
        assert_eq!((l.script.as_str(), l.confidence), ("Cyrl", 1.0));
        let l = line_script("123 … !!", r());
        assert_eq!((l.script, l.confidence), (Script::UNKNOWN, 0.0));
        let l = line_script("", r());
        assert_eq!(l.script, Script::UNKNOWN);
    }

    #[test]
    fn native_digits_and_marks_are_ignored() {
        // Arabic-Indic digits carry the Arab script property but are digits.
        assert_eq!(r().countable('\u{0663}'), None);
        assert_eq!(r().countable('\u{0301}'), None);
        assert_eq!(r().countable('a'), Some("Latn".parse().unwrap()));
        let l = line_script("abc ١٢٣ д", r());
        assert_eq!(l.script.as_str(), "Latn");
        assert!((l.confidence - 0.75).abs() < 1e-12);
    }

    #[test]
    fn composite_japanese_and_korean() {
        assert_eq!(line_script("日本語のテキストです", r()).script, Script::JAPANESE);
        assert_eq!(line_script("한국어 텍스트", r()).script, Script::HANGUL);
        assert_eq!(line_script("大韓民國 한국어 텍스트", r()).script, Script::KOREAN);
        assert_eq!(line_script("中文文本", r()).script, Script::HAN);
        // One kana among many ideographs stays below the composite share.
        let mostly_han = format!("{}の", "漢".repeat(40));
        assert_eq!(line_script(&mostly_han, r()).script, Script::HAN);
    }

    #[test]
    fn dataset_majority_and_fallback() {
        let latin = vec!["the quick brown fox"; 100];
        let d = dataset_script(&latin, r(), DetectConfig::default()).unwrap();
        assert_eq!((d.script.as_str(), d.path), ("Latn", DetectionPath::Sample));

        let mut noisy = vec!["日本語".to_owned()];
        noisy.extend((0..100).map(|i| format!("{i:05} -- ({i}) !!")));
        let d = dataset_script(&noisy, r(), DetectConfig::default()).unwrap();
        assert_eq!((d.script, d.path), (Script::HAN, DetectionPath::FirstLine));

        let empty: Vec<&str> = vec!["", "   "];
        assert_eq!(dataset_script(&empty, r(), DetectConfig::default()), Err(Undetectable));
    }

    #[test]
    fn lines_beyond_sample_do_not_matter() {
        let mut lines = vec!["Ελληνικά κείμενα"; 3];
        lines.extend(vec!["русский текст здесь"; 50]);
        let cfg = DetectConfig {
            sample_size: 3,
            threshold: 0.5,
        };
        assert_eq!(dataset_script(&lines, r(), cfg).unwrap().script.as_str(), "Grek");
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(matches!(
            ScriptRanges::from_tsv("0041\t005A\tlatn\n"),
            Err(ScriptDataError::Code(c)) if c == "latn"
        ));
        assert!(matches!(
            ScriptRanges::from_tsv("0041\t005A\tLatn\n0050\t0060\tGrek\n"),
            Err(ScriptDataError::Order(2))
        ));
        let t = ScriptRanges::from_tsv("0041\t005A\tLatn\n").unwrap();
        assert_eq!(t.lookup('я'), Script::UNKNOWN);
    }
}
