//! Harmonized record schema and streaming JSONL I/O.
//!
//! Every stage of the pipeline reads and writes one JSON object per line.
//! Bilingual rows carry exactly nine keys (`src_lang`, `src_txt`, `tgt_lang`,
//! `tgt_txt`, `url`, `collection`, `source`, `original_src_lang`,
//! `original_tgt_lang`); monolingual rows carry `text`, `lang`, `url`,
//! `collection`, `source`, `original_lang`. Keys that are not part of the
//! schema are kept in [`Extra`] and written back after the schema keys.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::iter;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Opaque side map for keys outside the schema.
pub type Extra = serde_json::Map<String, serde_json::Value>;

pub const UNKNOWN_CODE: &str = "unknown";
pub const UNKNOWN_SCRIPT: &str = "Zzzz";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid language tag {0:?}: expected <iso639-3>_<Script>")]
pub struct TagParseError(pub String);

/// ISO 639-3 code (or `unknown`) joined with an ISO 15924 script, e.g. `eng_Latn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguageTag {
    code: String,
    script: String,
}

fn valid_code(code: &str) -> bool {
    code == UNKNOWN_CODE || (code.len() == 3 && code.bytes().all(|b| b.is_ascii_lowercase()))
}

fn valid_script(script: &str) -> bool {
    let b = script.as_bytes();
    b.len() == 4 && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_lowercase)
}

impl LanguageTag {
    pub fn new(code: &str, script: &str) -> Result<Self, TagParseError> {
        if !valid_code(code) || !valid_script(script) {
            return Err(TagParseError(format!("{code}_{script}")));
        }
        Ok(Self {
            code: code.to_owned(),
            script: script.to_owned(),
        })
    }

    pub fn unknown() -> Self {
        Self {
            code: UNKNOWN_CODE.to_owned(),
            script: UNKNOWN_SCRIPT.to_owned(),
        }
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn script(&self) -> &str {
        &self.script
    }

    pub fn with_script(&self, script: &str) -> Result<Self, TagParseError> {
        Self::new(&self.code, script)
    }

    fn rendered_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.code.bytes().chain(iter::once(b'_')).chain(self.script.bytes())
    }
}

// Ordered by rendered form so that canonical pair ordering matches string sort.
impl Ord for LanguageTag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rendered_bytes().cmp(other.rendered_bytes())
    }
}

impl PartialOrd for LanguageTag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.code, self.script)
    }
}

impl FromStr for LanguageTag {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (code, script) = s.rsplit_once('_').ok_or_else(|| TagParseError(s.to_owned()))?;
        Self::new(code, script).map_err(|_| TagParseError(s.to_owned()))
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Source/target language pair, rendered `eng_Latn-zho_Hani`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairLabel {
    pub src: LanguageTag,
    pub tgt: LanguageTag,
}

impl PairLabel {
    pub fn new(src: LanguageTag, tgt: LanguageTag) -> Self {
        Self { src, tgt }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

impl FromStr for PairLabel {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Tags never contain '-', so the single hyphen is unambiguous.
        let (src, tgt) = s.split_once('-').ok_or_else(|| TagParseError(s.to_owned()))?;
        Ok(Self {
            src: src.parse()?,
            tgt: tgt.parse()?,
        })
    }
}

impl Serialize for PairLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonoRecord {
    pub text: String,
    pub lang: LanguageTag,
    #[serde(default)]
    pub url: Option<String>,
    pub collection: String,
    pub source: String,
    pub original_lang: String,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiRecord {
    pub src_lang: LanguageTag,
    pub src_txt: String,
    pub tgt_lang: LanguageTag,
    pub tgt_txt: String,
    #[serde(default)]
    pub url: Option<String>,
    pub collection: String,
    pub source: String,
    pub original_src_lang: String,
    pub original_tgt_lang: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl BiRecord {
    pub fn pair(&self) -> PairLabel {
        PairLabel::new(self.src_lang.clone(), self.tgt_lang.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Mono,
    Bi,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Mono => "mono",
            RecordKind::Bi => "bi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Record {
    Bi(BiRecord),
    Mono(MonoRecord),
}

impl Record {
    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Mono(_) => RecordKind::Mono,
            Record::Bi(_) => RecordKind::Bi,
        }
    }

    pub fn extra(&self) -> &Extra {
        match self {
            Record::Mono(r) => &r.extra,
            Record::Bi(r) => &r.extra,
        }
    }
}

impl From<MonoRecord> for Record {
    fn from(r: MonoRecord) -> Self {
        Record::Mono(r)
    }
}

impl From<BiRecord> for Record {
    fn from(r: BiRecord) -> Self {
        Record::Bi(r)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordErrorKind {
    #[error("invalid UTF-8")]
    Utf8,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A per-line failure. Reading continues with the next line.
#[derive(Debug, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct RecordError {
    pub line: usize,
    #[source]
    pub kind: RecordErrorKind,
}

impl RecordError {
    /// Whether the underlying stream failed, as opposed to a bad line.
    pub fn is_io(&self) -> bool {
        matches!(self.kind, RecordErrorKind::Io(_))
    }
}

/// Lazily parses one `T` per line. Yields `(line_number, value)` with 1-based
/// line numbers. After an I/O error the iterator is exhausted.
pub struct JsonlReader<R, T> {
    inner: R,
    buf: Vec<u8>,
    line: usize,
    done: bool,
    _marker: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            buf: Vec::with_capacity(4096),
            line: 0,
            done: false,
            _marker: PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<(usize, T), RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.buf.clear();
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                self.line += 1;
                let mut bytes = self.buf.as_slice();
                if let Some(rest) = bytes.strip_suffix(b"\n") {
                    bytes = rest;
                }
                if let Some(rest) = bytes.strip_suffix(b"\r") {
                    bytes = rest;
                }
                let line = self.line;
                let parsed = match std::str::from_utf8(bytes) {
                    Err(_) => Err(RecordErrorKind::Utf8),
                    Ok(text) => serde_json::from_str::<T>(text).map_err(RecordErrorKind::Json),
                };
                Some(parsed.map(|v| (line, v)).map_err(|kind| RecordError { line, kind }))
            }
            Err(e) => {
                self.done = true;
                Some(Err(RecordError {
                    line: self.line + 1,
                    kind: RecordErrorKind::Io(e),
                }))
            }
        }
    }
}

/// Reads records of one kind from a JSONL stream.
pub fn read_jsonl<'a, R: BufRead + 'a>(
    stream: R,
    kind: RecordKind,
) -> Box<dyn Iterator<Item = Result<(usize, Record), RecordError>> + 'a> {
    match kind {
        RecordKind::Mono => {
            Box::new(JsonlReader::<R, MonoRecord>::new(stream).map(|r| r.map(|(n, v)| (n, Record::Mono(v)))))
        }
        RecordKind::Bi => Box::new(JsonlReader::<R, BiRecord>::new(stream).map(|r| r.map(|(n, v)| (n, Record::Bi(v))))),
    }
}

#[derive(Debug, thiserror::Error)]
#[error("write failed after {written} records: {source}")]
pub struct WriteError {
    pub written: usize,
    #[source]
    pub source: io::Error,
}

/// Writes one JSON object per line in schema field order. Returns the count written.
pub fn write_jsonl<'a, T, I, W>(records: I, sink: &mut W) -> Result<usize, WriteError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
    W: Write,
{
    let mut written = 0;
    for rec in records {
        write_line(rec, sink).map_err(|source| WriteError { written, source })?;
        written += 1;
    }
    sink.flush().map_err(|source| WriteError { written, source })?;
    Ok(written)
}

pub(crate) fn write_line<T: Serialize, W: Write>(value: &T, sink: &mut W) -> io::Result<()> {
    serde_json::to_writer(&mut *sink, value).map_err(io::Error::from)?;
    sink.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn tag(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    fn bi_line() -> &'static str {
        r#"{"src_lang":"eng_Latn","src_txt":"Hello.","tgt_lang":"fra_Latn","tgt_txt":"Bonjour.","url":null,"collection":"opus","source":"Tatoeba","original_src_lang":"en","original_tgt_lang":"fr"}"#
    }

    #[test]
    fn tag_render_and_parse() {
        let t = tag("eng_Latn");
        assert_eq!(t.code(), "eng");
        assert_eq!(t.script(), "Latn");
        assert_eq!(t.to_string(), "eng_Latn");
        assert_eq!(tag("unknown_Zzzz"), LanguageTag::unknown());
        assert!("en_Latn".parse::<LanguageTag>().is_err());
        assert!("eng_latn".parse::<LanguageTag>().is_err());
        assert!("eng".parse::<LanguageTag>().is_err());
    }

    #[test]
    fn pair_label_renders_with_single_hyphen() {
        let p = PairLabel::new(tag("eng_Latn"), tag("zho_Hani"));
        assert_eq!(p.to_string(), "eng_Latn-zho_Hani");
        assert_eq!("eng_Latn-zho_Hani".parse::<PairLabel>().unwrap(), p);
    }

    #[test]
    fn tag_order_matches_rendered_string_order() {
        let mut tags = [tag("unknown_Zzzz"), tag("unk_Latn"), tag("eng_Latn"), tag("eng_Cyrl")];
        let mut rendered: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
        tags.sort();
        rendered.sort();
        let sorted: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
        assert_eq!(sorted, rendered);
    }

    #[test]
    fn reads_one_bilingual_line() {
        let recs: Vec<_> = read_jsonl(Cursor::new(format!("{}\n", bi_line())), RecordKind::Bi)
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(recs.len(), 1);
        let (line, Record::Bi(r)) = &recs[0] else {
            panic!("expected bilingual")
        };
        assert_eq!(*line, 1);
        assert_eq!(r.src_txt, "Hello.");
        assert_eq!(r.tgt_lang, tag("fra_Latn"));
        assert_eq!(r.url, None);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert_eq!(read_jsonl(Cursor::new(Vec::new()), RecordKind::Mono).count(), 0);
    }

    #[test]
    fn bad_line_does_not_stop_stream() {
        let missing = bi_line().replace(r#","tgt_txt":"Bonjour.""#, "");
        let input = format!("{}\n{}\nnot json\n{}\n", bi_line(), missing, bi_line());
        let results: Vec<_> = read_jsonl(Cursor::new(input), RecordKind::Bi).collect();
        assert_eq!(results.len(), 4);
        assert!(results[0].is_ok());
        let err = results[1].as_ref().unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.to_string().contains("tgt_txt"), "{err}");
        assert_eq!(results[2].as_ref().unwrap_err().line, 3);
        assert_eq!(results[3].as_ref().unwrap().0, 4);
    }

    #[test]
    fn invalid_utf8_is_per_line_error() {
        let mut input = Vec::new();
        input.extend_from_slice(b"{\"text\":\"\xff\"}\n");
        input.extend_from_slice(
            br#"{"text":"ok","lang":"eng_Latn","collection":"c","source":"s","original_lang":"en"}"#,
        );
        let results: Vec<_> = read_jsonl(Cursor::new(input), RecordKind::Mono).collect();
        assert!(matches!(results[0].as_ref().unwrap_err().kind, RecordErrorKind::Utf8));
        assert!(results[1].is_ok());
    }

    #[test]
    fn writes_schema_order_and_escapes_newlines() {
        let mut extra = Extra::new();
        extra.insert("zz_note".into(), serde_json::json!(1));
        let rec = MonoRecord {
            text: "two\nlines".into(),
            lang: tag("eng_Latn"),
            url: Some("http://x".into()),
            collection: "c".into(),
            source: "s".into(),
            original_lang: "en".into(),
            extra,
        };
        let mut out = Vec::new();
        assert_eq!(write_jsonl([&rec], &mut out).unwrap(), 1);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.matches('\n').count(), 1);
        assert_eq!(
            text,
            "{\"text\":\"two\\nlines\",\"lang\":\"eng_Latn\",\"url\":\"http://x\",\"collection\":\"c\",\"source\":\"s\",\"original_lang\":\"en\",\"zz_note\":1}\n"
        );
    }

    #[test]
    fn bilingual_schema_has_nine_fields() {
        let (_, rec) = JsonlReader::<_, BiRecord>::new(Cursor::new(bi_line()))
            .next()
            .unwrap()
            .unwrap();
        let value = serde_json::to_value(&rec).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 9);
        let mut out = Vec::new();
        write_jsonl([&rec], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), bi_line());
    }

    #[test]
    fn unknown_fields_survive_round_trip() {
        let line = bi_line().replace("}", r#","alignment_score":0.93}"#);
        let (_, rec) = JsonlReader::<_, BiRecord>::new(Cursor::new(line.clone()))
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(rec.extra["alignment_score"], serde_json::json!(0.93));
        let mut out = Vec::new();
        write_jsonl([&rec], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), line);
    }

    #[test]
    fn zero_records_write_nothing() {
        let mut out = Vec::new();
        assert_eq!(write_jsonl(std::iter::empty::<&MonoRecord>(), &mut out).unwrap(), 0);
        assert!(out.is_empty());
    }

    struct FailAfter(usize);

    impl Write for FailAfter {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            if buf.contains(&b'\n') {
                if self.0 == 0 {
                    return Err(io::Error::other("disk full"));
                }
                self.0 -= 1;
            }
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn sink_failure_reports_partial_count() {
        let (_, rec) = JsonlReader::<_, BiRecord>::new(Cursor::new(bi_line()))
            .next()
            .unwrap()
            .unwrap();
        let recs = vec![rec.clone(), rec.clone(), rec];
        let err = write_jsonl(&recs, &mut FailAfter(2)).unwrap_err();
        assert_eq!(err.written, 2);
    }
}
