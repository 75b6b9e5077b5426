//! `dagver`: verify that two versions of a dataflow produce the same
//! result, or benchmark the verifier over a directory of version pairs.

mod bench;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dagver_core::accel::SegmentationMethod;
use dagver_core::corpus::{spj_corpus, standard_corpus};
use dagver_core::ev::Verdict;
use dagver_core::io::{read_json, read_workflow, to_canonical_json, write_corpus, IoError, PairBundle};
use dagver_core::orchestrator::{verify, Tracked, VerifyConfig};
use dagver_core::workflow::TableSemantics;

const EXIT_INPUT: u8 = 3;
const SEED_VAR: &str = "VEER_SEED";

#[derive(Parser)]
#[command(name = "dagver", version, about = "Equivalence verification for versions of dataflow DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify two workflow versions; prints a JSON report.
    Verify(VerifyArgs),
    /// Run a corpus of pairs under several modes; prints CSV.
    Bench(bench::BenchArgs),
    /// Write a generated corpus of version pairs to a directory.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    Set,
    Bag,
    Orderedbag,
}

impl From<Semantics> for TableSemantics {
    fn from(s: Semantics) -> Self {
        match s {
            Semantics::Set => TableSemantics::Set,
            Semantics::Bag => TableSemantics::Bag,
            Semantics::Orderedbag => TableSemantics::OrderedBag,
        }
    }
}

/// Verifier options shared by `verify` and `bench`.
#[derive(Args, Clone)]
struct EvArgs {
    /// Comma-separated verifier names, tried in order.
    #[arg(long, value_delimiter = ',', default_value = "canonical")]
    ev: Vec<String>,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    /// Edit mapping recorded for the pair.
    #[arg(long, conflicts_with = "delta")]
    mapping: Option<PathBuf>,
    /// Edit operations recorded for the pair.
    #[arg(long)]
    delta: Option<PathBuf>,
    #[command(flatten)]
    evs: EvArgs,
    #[arg(long, default_value = "boundary")]
    seg: SegmentationMethod,
    #[arg(long, value_enum, default_value = "on")]
    prune: Switch,
    #[arg(long, value_enum, default_value = "on")]
    rank: Switch,
    #[arg(long, value_enum, default_value = "on")]
    symbolic: Switch,
    #[arg(long, default_value_t = dagver_core::edit::DEFAULT_MAPPING_CAP)]
    mapping_cap: usize,
    /// Seed for sampled inputs; the VEER_SEED environment variable wins.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    semantics: Option<Semantics>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKind {
    /// Two hundred labelled pairs over random bases.
    Standard,
    /// Equivalent pairs over select-project-join bases.
    Spj,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "standard")]
    kind: CorpusKind,
    /// Number of pairs for the SPJ corpus.
    #[arg(long, default_value_t = 50)]
    count: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Verify(#[from] dagver_core::orchestrator::VerifyError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(String),
}

fn budget(seconds: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(seconds).map_err(|_| CliError::Usage(format!("invalid budget {seconds}")))
}

fn seed_override(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_VAR} is not an unsigned integer: {v}"))),
        Err(_) => Ok(flag),
    }
}

fn exit_for(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::True => 0,
        Verdict::False => 1,
        Verdict::Unknown => 2,
    }
}

fn run_verify(args: VerifyArgs) -> Result<u8, CliError> {
    let p = read_workflow(&args.p)?;
    let q = read_workflow(&args.q)?;
    let tracked = match (&args.mapping, &args.delta) {
        (Some(m), _) => Some(Tracked::Mapping(read_json(m)?)),
        (None, Some(d)) => Some(Tracked::Edits(read_json(d)?)),
        (None, None) => None,
    };
    let cfg = VerifyConfig {
        evs: args.evs.ev.clone(),
        mapping_cap: args.mapping_cap,
        segmentation: args.seg,
        pruning: args.prune.on(),
        ranking: args.rank.on(),
        symbolic: args.symbolic.on(),
        seed: seed_override(args.seed)?,
        semantics: args.semantics.map(Into::into),
        budget: budget(args.evs.budget)?,
        ..VerifyConfig::default()
    };
    let result = verify(&p, &q, tracked.as_ref(), &cfg)?;
    writeln!(std::io::stdout().lock(), "{}", to_canonical_json(&result)).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(exit_for(result.verdict))
}

fn run_corpus(args: CorpusArgs) -> Result<u8, CliError> {
    let pairs = match args.kind {
        CorpusKind::Standard => standard_corpus(),
        CorpusKind::Spj => spj_corpus(args.count),
    };
    let bundles: Vec<PairBundle> = pairs.iter().enumerate().map(|(i, g)| PairBundle::from_generated(format!("pair-{i:03}"), g)).collect();
    write_corpus(&args.out, &bundles)?;
    eprintln!("wrote {} pairs to {}", bundles.len(), args.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Bench(args) => bench::run(args),
        Command::Corpus(args) => run_corpus(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
