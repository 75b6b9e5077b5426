//! The `bench` subcommand: every pair of a corpus directory under each
//! requested mode, one CSV row per run.

use std::path::PathBuf;
use std::thread;

use clap::{Args, ValueEnum};
use dagver_core::io::{read_corpus, PairBundle};
use dagver_core::orchestrator::{verify, VerifyConfig};
use serde::Serialize;

use crate::{budget, CliError, EvArgs};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Plain decomposition search.
    Baseline,
    /// Segmentation, pruning, ranking and the symbolic shortcut.
    Plus,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Plus => "plus",
        }
    }

    fn config(self) -> VerifyConfig {
        match self {
            Mode::Baseline => VerifyConfig::baseline(),
            Mode::Plus => VerifyConfig::plus(),
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of pair bundles (`*.json`).
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "baseline,plus")]
    modes: Vec<Mode>,
    /// Seeds for sampled inputs; with several, pair ids get an `@seed` suffix.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[command(flatten)]
    evs: EvArgs,
    /// Pairs verified concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Serialize)]
struct Row {
    pair_id: String,
    mode: &'static str,
    verdict: String,
    decompositions_explored: usize,
    ev_calls: usize,
    ms: u64,
}

struct Job<'a> {
    bundle: &'a PairBundle,
    pair_id: String,
    mode: Mode,
    seed: u64,
}

fn run_job(job: &Job<'_>, args: &BenchArgs) -> Result<Row, CliError> {
    let (p, q) = job.bundle.versions()?;
    let cfg = VerifyConfig { evs: args.evs.ev.clone(), seed: job.seed, budget: budget(args.evs.budget)?, ..job.mode.config() };
    let row = match verify(&p, &q, job.bundle.tracked().as_ref(), &cfg) {
        Ok(r) => Row {
            pair_id: job.pair_id.clone(),
            mode: job.mode.name(),
            verdict: r.verdict.name().to_string(),
            decompositions_explored: r.decompositions_explored,
            ev_calls: r.ev_calls,
            ms: r.elapsed_ms,
        },
        Err(e) => {
            eprintln!("{}: {e}", job.pair_id);
            Row { pair_id: job.pair_id.clone(), mode: job.mode.name(), verdict: "error".into(), decompositions_explored: 0, ev_calls: 0, ms: 0 }
        }
    };
    Ok(row)
}

pub fn run(args: BenchArgs) -> Result<u8, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    budget(args.evs.budget)?;
    let bundles = read_corpus(&args.corpus)?;
    let mut jobs = Vec::new();
    for b in &bundles {
        for &seed in &args.seeds {
            let pair_id = if args.seeds.len() > 1 { format!("{}@{seed}", b.id) } else { b.id.clone() };
            for &mode in &args.modes {
                jobs.push(Job { bundle: b, pair_id: pair_id.clone(), mode, seed });
            }
        }
    }
    let workers = args.jobs.min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let rows: Vec<Result<Row, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = jobs.chunks(chunk).map(|part| s.spawn(|| part.iter().map(|j| run_job(j, &args)).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("bench worker panicked")).collect()
    });
    let stdout = std::io::stdout();
    let mut out = csv::Writer::from_writer(stdout.lock());
    if rows.is_empty() {
        out.write_record(["pair_id", "mode", "verdict", "decompositions_explored", "ev_calls", "ms"]).map_err(csv_error)?;
    }
    for row in rows {
        out.serialize(row?).map_err(csv_error)?;
    }
    out.flush().map_err(|e| CliError::Output(e.to_string()))?;
    Ok(0)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}
