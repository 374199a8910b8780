//! Ten-pair pseudo-documents built from sentence-aligned bitext.
//!
//! Each line is `[{src_tag}]: {src_txt} [{tgt_tag}]: {tgt_txt}`; lines are
//! joined with LF and a document never mixes language directions.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::model::{BiRecord, PairLabel};

pub const DEFAULT_CHUNK: usize = 10;
/// Blank line between documents in raw-text output.
pub const DEFAULT_DELIMITER: &str = "\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoDoc {
    pub pair: PairLabel,
    pub body: String,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkOptions {
    pub chunk: usize,
    /// Discard a trailing document shorter than `chunk`.
    pub drop_remainder: bool,
    /// Put a space before each line break, as in the typeset listing.
    pub strict_listing: bool,
}

impl Default for ChunkOptions {
    fn default() -> Self {
        Self {
            chunk: DEFAULT_CHUNK,
            drop_remainder: false,
            strict_listing: false,
        }
    }
}

pub fn format_pair_line(rec: &BiRecord) -> String {
    format!(
        "[{}]: {} [{}]: {}",
        rec.src_lang, rec.src_txt, rec.tgt_lang, rec.tgt_txt
    )
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("records for {found} mixed into a {expected} document stream")]
pub struct MixedDirection {
    pub expected: PairLabel,
    pub found: PairLabel,
}

/// Greedy packing of one direction's records, in input order.
#[allow(clippy::result_large_err)]
pub fn chunk_pairs(records: &[BiRecord], opts: ChunkOptions) -> Result<Vec<PseudoDoc>, MixedDirection> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let pair = first.pair();
    if let Some(bad) = records
        .iter()
        .find(|r| r.src_lang != pair.src || r.tgt_lang != pair.tgt)
    {
        return Err(MixedDirection {
            expected: pair,
            found: bad.pair(),
        });
    }
    let chunk = opts.chunk.max(1);
    let separator = if opts.strict_listing { " \n" } else { "\n" };
    Ok(records
        .chunks(chunk)
        .filter(|group| !(opts.drop_remainder && group.len() < chunk))
        .map(|group| PseudoDoc {
            pair: pair.clone(),
            body: group.iter().map(format_pair_line).collect::<Vec<_>>().join(separator),
            n_pairs: group.len(),
        })
        .collect())
}

/// Splits a mixed stream by direction (first-seen order within each
/// direction preserved) and chunks each direction independently. Output is
/// ordered by pair label.
pub fn chunk_by_direction(records: &[BiRecord], opts: ChunkOptions) -> Vec<PseudoDoc> {
    let mut groups: BTreeMap<PairLabel, Vec<BiRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.pair()).or_default().push(r.clone());
    }
    groups
        .values()
        .flat_map(|g| chunk_pairs(g, opts).expect("grouped by direction"))
        .collect()
}

/// Raw-text output: document bodies separated by `delimiter` (a blank line by
/// default), with a final newline.
pub fn write_text<W: Write>(docs: &[PseudoDoc], delimiter: &str, w: &mut W) -> io::Result<()> {
    for (i, d) in docs.iter().enumerate() {
        if i > 0 {
            w.write_all(delimiter.as_bytes())?;
        }
        w.write_all(d.body.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
