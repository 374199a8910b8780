use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyglot_forge::pipeline::{
    InputSpec, Overrides, Pipeline, PipelineConfig, PipelineError, RunOptions, Stage, StageOutcome,
};

/// Builds multilingual pretraining corpora: ingest, clean, deduplicate,
/// census, code filtering, mix planning and pseudo-document chunking.
#[derive(Debug, Parser)]
#[command(name = "polyglot-forge", version)]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, env = "POLYGLOT_FORGE_THREADS")]
    threads: Option<usize>,

    /// `[bi|mono|code:]PATH`, repeatable. Raw files for `ingest`, `all` and
    /// `codefilter`; harmonized JSONL for the other stages.
    #[arg(long = "input", global = true, value_name = "SPEC")]
    inputs: Vec<InputSpec>,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize language codes, detect scripts, write harmonized JSONL.
    Ingest,
    /// Drop missing translations, repeats and length mismatches.
    Clean(CleanArgs),
    /// Remove exact content duplicates across all files.
    Dedup,
    /// Per-language and per-pair token census with resource tiers.
    Stats,
    /// Quality-filter source-code files.
    Codefilter,
    /// Plan the data mix and sample records.
    Mix(MixArgs),
    /// Pack bitext into pseudo-documents.
    Chunk(ChunkArgs),
    /// Collect every stage manifest into one report.
    Report,
    /// ingest, clean, dedup, stats, mix, chunk.
    All(AllArgs),
}

#[derive(Debug, Args)]
struct CleanArgs {
    /// Also write every dropped record with its reason.
    #[arg(long)]
    audit_drops: bool,
}

#[derive(Debug, Args)]
struct MixArgs {
    /// Write the plan without sampling any records.
    #[arg(long)]
    plan_only: bool,
}

#[derive(Debug, Args)]
struct ChunkArgs {
    /// Space before each line break inside a document.
    #[arg(long)]
    strict_listing: bool,
    /// Discard a trailing document with fewer pairs than the chunk size.
    #[arg(long)]
    drop_remainder: bool,
}

#[derive(Debug, Args)]
struct AllArgs {
    #[command(flatten)]
    clean: CleanArgs,
    #[command(flatten)]
    chunk: ChunkArgs,
}

fn takes_raw_inputs(command: &Command) -> bool {
    matches!(command, Command::Ingest | Command::Codefilter | Command::All(_))
}

fn run(cli: Cli) -> Result<Vec<StageOutcome>, PipelineError> {
    let raw = takes_raw_inputs(&cli.command);
    let overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
        inputs: if raw { cli.inputs.clone() } else { Vec::new() },
        output_dir: cli.output_dir.clone(),
    };
    let config = match &cli.config {
        Some(path) => PipelineConfig::load_file(path, &overrides)?,
        None => PipelineConfig::load(None, &overrides)?,
    };
    let pipeline = Pipeline::new(config)?;
    let mut opts = RunOptions {
        stage_inputs: if raw { Vec::new() } else { cli.inputs },
        ..RunOptions::default()
    };
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Clean(a) => {
            opts.audit_drops = a.audit_drops;
            Stage::Clean
        }
        Command::Dedup => Stage::Dedup,
        Command::Stats => Stage::Stats,
        Command::Codefilter => Stage::Codefilter,
        Command::Mix(a) => {
            opts.plan_only = a.plan_only;
            Stage::Mix
        }
        Command::Chunk(a) => {
            opts.strict_listing = a.strict_listing;
            opts.drop_remainder = a.drop_remainder;
            Stage::Chunk
        }
        Command::Report => Stage::Report,
        Command::All(a) => {
            opts.audit_drops = a.clean.audit_drops;
            opts.strict_listing = a.chunk.strict_listing;
            opts.drop_remainder = a.chunk.drop_remainder;
            return pipeline.run_all(&opts);
        }
    };
    Ok(vec![pipeline.run_stage(stage, &opts)?])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcomes) => {
            let mut bad_lines = false;
            for o in &outcomes {
                for w in &o.manifest.warnings {
                    eprintln!("{}: {w}", o.stage);
                }
                println!(
                    "{}: {} output file(s), manifest {}",
                    o.stage,
                    o.manifest.outputs.len(),
                    o.manifest_path.display()
                );
                if o.record_errors() > 0 {
                    bad_lines = true;
                    eprintln!(
                        "error: {}: {} malformed line(s); first ones are listed in {}",
                        o.stage,
                        o.record_errors(),
                        o.manifest_path.display()
                    );
                }
            }
            if bad_lines {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
