//! Hashing readers/writers and batched line parsing for stage files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::manifest::FileEntry;
use super::PipelineError;

pub(crate) const BATCH_LINES: usize = 8192;
const IO_BUFFER: usize = 1 << 20;

/// Hashes every byte that passes through.
pub(crate) struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

pub(crate) struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> PipelineError {
    let context = context.into();
    move |source| PipelineError::Io { context, source }
}

/// One line of an input file, 1-based numbering, line terminator stripped.
pub(crate) type Line = (usize, Vec<u8>);

/// Reads a file in batches of lines while hashing its bytes.
pub(crate) struct LineBatches {
    reader: BufReader<HashingReader<File>>,
    label: String,
    line: usize,
    done: bool,
}

impl LineBatches {
    pub(crate) fn open(path: &Path, label: String) -> Result<Self, PipelineError> {
        let file = File::open(path).map_err(io_err(format!("open {}", path.display())))?;
        Ok(Self {
            reader: BufReader::with_capacity(
                IO_BUFFER,
                HashingReader {
                    inner: file,
                    hasher: Sha256::new(),
                },
            ),
            label,
            line: 0,
            done: false,
        })
    }

    pub(crate) fn next_batch(&mut self) -> Result<Option<Vec<Line>>, PipelineError> {
        if self.done {
            return Ok(None);
        }
        let mut batch = Vec::with_capacity(BATCH_LINES);
        while batch.len() < BATCH_LINES {
            let mut buf = Vec::new();
            let n = self
                .reader
                .read_until(b'\n', &mut buf)
                .map_err(io_err(format!("read {}", self.label)))?;
            if n == 0 {
                self.done = true;
                break;
            }
            self.line += 1;
            if buf.last() == Some(&b'\n') {
                buf.pop();
            }
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
            batch.push((self.line, buf));
        }
        Ok((!batch.is_empty()).then_some(batch))
    }

    /// Drains the rest of the file so the digest covers every byte.
    pub(crate) fn finish(mut self, records: u64) -> Result<FileEntry, PipelineError> {
        io::copy(&mut self.reader, &mut io::sink()).map_err(io_err(format!("read {}", self.label)))?;
        let hasher = self.reader.into_inner().hasher;
        Ok(FileEntry {
            path: self.label,
            sha256: hex::encode(hasher.finalize()),
            records,
        })
    }
}

/// Parsed records and `(line, message)` failures.
pub(crate) type Parsed<T> = (Vec<(usize, T)>, Vec<(usize, String)>);

/// Parses a batch in parallel, keeping input order. Failures are returned as
/// `(line, message)`.
pub(crate) fn parse_batch<T, F>(batch: &[Line], parse: F) -> Parsed<T>
where
    T: Send,
    F: Fn(&[u8]) -> Result<T, String> + Sync,
{
    let results: Vec<(usize, Result<T, String>)> = batch.par_iter().map(|(n, bytes)| (*n, parse(bytes))).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut bad = Vec::new();
    for (n, r) in results {
        match r {
            Ok(v) => ok.push((n, v)),
            Err(e) => bad.push((n, e)),
        }
    }
    (ok, bad)
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, String> {
    let text = std::str::from_utf8(bytes).map_err(|_| "invalid UTF-8".to_owned())?;
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// A stage output file. The recorded path is relative to the output directory.
pub(crate) struct OutputFile {
    writer: HashingWriter<BufWriter<File>>,
    path: PathBuf,
    label: String,
    records: u64,
}

impl OutputFile {
    pub(crate) fn create(path: PathBuf, label: String) -> Result<Self, PipelineError> {
        let file = File::create(&path).map_err(io_err(format!("create {}", path.display())))?;
        Ok(Self {
            writer: HashingWriter {
                inner: BufWriter::with_capacity(IO_BUFFER, file),
                hasher: Sha256::new(),
            },
            path,
            label,
            records: 0,
        })
    }

    pub(crate) fn write_raw(&mut self, bytes: &[u8], records: u64) -> Result<(), PipelineError> {
        self.records += records;
        let path = &self.path;
        self.writer.write_all(bytes).map_err(|source| PipelineError::Io {
            context: format!("write {}", path.display()),
            source,
        })
    }

    /// Serializes in parallel, writes in order.
    pub(crate) fn write_jsonl<T: Serialize + Sync>(&mut self, values: &[T]) -> Result<(), PipelineError> {
        for line in serialize_lines(values)? {
            self.write_raw(&line, 1)?;
        }
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<FileEntry, PipelineError> {
        self.writer
            .flush()
            .map_err(io_err(format!("write {}", self.path.display())))?;
        Ok(FileEntry {
            path: self.label,
            sha256: hex::encode(self.writer.hasher.finalize()),
            records: self.records,
        })
    }
}

/// One JSON line (with LF) per value.
pub(crate) fn serialize_lines<T: Serialize + Sync>(values: &[T]) -> Result<Vec<Vec<u8>>, PipelineError> {
    values
        .par_iter()
        .map(|v| {
            let mut line = serde_json::to_vec(v).map_err(|e| PipelineError::Io {
                context: "serialize record".into(),
                source: e.into(),
            })?;
            line.push(b'\n');
            Ok(line)
        })
        .collect()
}

/// Writes a small text artifact and returns its manifest entry.
pub(crate) fn write_small(
    path: PathBuf,
    label: String,
    bytes: &[u8],
    records: u64,
) -> Result<FileEntry, PipelineError> {
    let mut out = OutputFile::create(path, label)?;
    out.write_raw(bytes, records)?;
    out.finish()
}
