//! Stage orchestration: each stage reads its predecessor's files from the
//! output directory, writes its own files plus a `manifest.json`.
//!
//! ```text
//! ingest -> clean -> dedup -> stats
//!                         \-> mix -> chunk
//! codefilter (independent)     report (collects manifests)
//! ```

mod config;
mod io;
mod manifest;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::{
    ChunkSettings, ConfigError, DetectSettings, DocFormat, InputFormat, InputKind, InputSpec, MixSettings, Overrides,
    PipelineConfig,
};
pub use manifest::{DataVersions, FileEntry, StageManifest, MAX_LISTED_ERRORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Clean,
    Dedup,
    Stats,
    Codefilter,
    Mix,
    Chunk,
    Report,
}

impl Stage {
    /// What `all` runs, in order.
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Clean,
        Stage::Dedup,
        Stage::Stats,
        Stage::Mix,
        Stage::Chunk,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Clean => "clean",
            Stage::Dedup => "dedup",
            Stage::Stats => "stats",
            Stage::Codefilter => "codefilter",
            Stage::Mix => "mix",
            Stage::Chunk => "chunk",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Stage::Ingest,
            Stage::Clean,
            Stage::Dedup,
            Stage::Stats,
            Stage::Codefilter,
            Stage::Mix,
            Stage::Chunk,
            Stage::Report,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Per-invocation switches that are not part of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub plan_only: bool,
    pub strict_listing: bool,
    pub drop_remainder: bool,
    pub audit_drops: bool,
    /// Already-harmonized files read instead of the predecessor stage output.
    pub stage_inputs: Vec<InputSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{stage}: {message}")]
    Data { stage: Stage, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 for configuration or validation problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Invalid(_) => 1,
            PipelineError::Data { .. } | PipelineError::Io { .. } => 2,
        }
    }
}

/// What one stage did.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: Stage,
    pub manifest_path: PathBuf,
    pub manifest: StageManifest,
}

impl StageOutcome {
    pub fn record_errors(&self) -> u64 {
        self.manifest.error_count
    }
}

pub struct Pipeline {
    config: PipelineConfig,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads.max(1))
            .build()
            .map_err(|e| PipelineError::Invalid(format!("thread pool: {e}")))?;
        Ok(Self { config, pool })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.output_dir.join(stage.as_str())
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    /// Runs one stage inside this pipeline's thread pool.
    pub fn run_stage(&self, stage: Stage, opts: &RunOptions) -> Result<StageOutcome, PipelineError> {
        let dir = self.stage_dir(stage);
        std::fs::create_dir_all(&dir).map_err(io::io_err(format!("create {}", dir.display())))?;
        let manifest = self.pool.install(|| stages::run(self, stage, opts))?;
        let manifest_path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&manifest_path, text).map_err(io::io_err(format!("write {}", manifest_path.display())))?;
        Ok(StageOutcome {
            stage,
            manifest_path,
            manifest,
        })
    }

    /// Runs [`Stage::ALL`] in order, stopping at the first failing stage.
    pub fn run_all(&self, opts: &RunOptions) -> Result<Vec<StageOutcome>, PipelineError> {
        Stage::ALL.iter().map(|&s| self.run_stage(s, opts)).collect()
    }
}
