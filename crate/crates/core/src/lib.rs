//! Compilation, cleaning, census and data-mix planning for massively
//! multilingual monolingual and bilingual corpora.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`model`]: record schema and streaming JSONL I/O
//! - [`langid`]: language-code normalization to ISO 639-3
//! - [`script`]: ISO 15924 writing-system detection
//! - [`cleanse`]: repeat / missing-translation / length filters and exact dedup
//! - [`codefilter`]: fork-bucketed quality filters for code files
//! - [`census`]: whitespace token census and resource tiers
//! - [`mixer`]: data-mix plans, record sampling, token budgets
//! - [`bidoc`]: pseudo-documents from bitext
//! - [`pipeline`]: config-driven stage orchestration used by the CLI

pub mod bidoc;
pub mod census;
pub mod cleanse;
pub mod codefilter;
pub mod langid;
pub mod mixer;
pub mod model;
pub mod pipeline;
pub mod script;

pub use census::{classify_tier, count_tokens, CorpusStats, ResourceTier};
pub use cleanse::{CleanConfig, DedupIndex, DropReason, Verdict};
pub use langid::{normalize_code, CodeTable};
pub use mixer::{plan_mix, training_budget, MixPlan, Rate, SamplePlan};
pub use model::{BiRecord, LanguageTag, MonoRecord, PairLabel, Record, RecordKind};
pub use script::{dataset_script, line_script, Script, ScriptRanges};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
