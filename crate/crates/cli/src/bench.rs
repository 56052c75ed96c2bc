use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use mdiica::study::{run_study, summarize, summary_table, trials_csv, StudyConfig, StudySummary};
use serde::Serialize;
use serde_path_to_error::Segment;

use crate::io::write_atomic;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Study configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of logical cores
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the seed in the config file
    #[arg(long, env = "MDIICA_SEED")]
    seed: Option<u64>,
    /// Write measured times to the elapsed_ms column (the CSV is then no
    /// longer reproducible byte-for-byte)
    #[arg(long)]
    timing: bool,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    seed: u64,
    n: usize,
    reps: usize,
    #[serde(flatten)]
    summary: &'a StudySummary,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn load(args: &BenchArgs) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read {}", args.config.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        anyhow!("{}: invalid config at {}: {}", args.config.display(), pointer(e.path()), e.inner())
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn run(args: BenchArgs) -> Result<ExitCode> {
    let cfg = load(&args)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let results = pool
        .install(|| run_study(&cfg))
        .map_err(|issue| anyhow!("{}: invalid config at {issue}", args.config.display()))?;

    let summary = summarize(&results);
    write_atomic(&args.out.join("trials.csv"), trials_csv(&results, args.timing).as_bytes())?;
    let file = SummaryFile {
        seed: cfg.seed,
        n: cfg.n,
        reps: cfg.reps,
        summary: &summary,
    };
    write_atomic(&args.out.join("summary.json"), serde_json::to_string_pretty(&file)?.as_bytes())?;
    print!("{}", summary_table(&summary));
    Ok(ExitCode::SUCCESS)
}
