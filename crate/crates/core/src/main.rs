use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nedkit::corpus::Split;
use nedkit::fixture::{self, FixtureSpec};
use nedkit::pipeline::{run_all, run_stage, Manifest, PipelineConfig, Stage, StageOptions, CONFIG_ENV};
use nedkit::Result;

#[derive(Parser)]
#[command(name = "nedkit", version, about = "Biomedical named entity disambiguation pipeline")]
struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, short, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set params.k=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, short, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct SplitArg {
    /// Split to process (train, dev, test, pretrain).
    #[arg(long)]
    split: Option<Split>,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the cross-KB mapping to the KB.
    KbAugment,
    /// Convert raw documents into grouped word-level corpora.
    Preprocess,
    /// Drop sentence groups made only of frequent entities.
    Downsample(SplitArg),
    /// Corpus, ambiguity and KB statistics.
    Stats,
    /// Embed KB entities for retrieval.
    Index,
    /// Retrieve, rerank and post-process mentions of one split.
    Link(SplitArg),
    /// Accuracy, recall and slice report for linked predictions.
    Evaluate(SplitArg),
    /// Accuracy over a grid of backoff thresholds.
    Sweep {
        #[command(flatten)]
        split: SplitArg,
        /// Comma-separated thresholds; defaults to the config grid.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Hard negatives from retrieval for one split.
    Mine(SplitArg),
    /// kb-augment, preprocess, index, link and evaluate in order.
    Run,
    /// Write the synthetic fixture and a config pointing at it.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FixtureSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = FixtureSpec::default().entities)]
        entities: usize,
        #[arg(long, default_value_t = FixtureSpec::default().documents)]
        documents: usize,
    },
    /// Print the effective config.
    Config,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        cfg.set(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(m: &Manifest) {
    println!("[{}]", m.stage);
    for o in &m.outputs {
        println!("  wrote {} ({} bytes)", o.path, o.bytes);
    }
    for (k, v) in &m.counts {
        println!("  {k} = {v}");
    }
    for (k, v) in &m.metrics {
        println!("  {k} = {v:.4}");
    }
}

fn stage(cli: &Cli, stage: Stage, opts: StageOptions) -> Result<()> {
    let cfg = load_config(cli)?;
    report(&run_stage(stage, &cfg, &opts)?);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let split = |s: &SplitArg| StageOptions {
        split: s.split,
        grid: Vec::new(),
    };
    match &cli.command {
        Command::KbAugment => stage(cli, Stage::KbAugment, StageOptions::default()),
        Command::Preprocess => stage(cli, Stage::Preprocess, StageOptions::default()),
        Command::Downsample(s) => stage(cli, Stage::Downsample, split(s)),
        Command::Stats => stage(cli, Stage::Stats, StageOptions::default()),
        Command::Index => stage(cli, Stage::Index, StageOptions::default()),
        Command::Link(s) => stage(cli, Stage::Link, split(s)),
        Command::Evaluate(s) => stage(cli, Stage::Evaluate, split(s)),
        Command::Sweep { split: s, grid } => stage(
            cli,
            Stage::Sweep,
            StageOptions {
                split: s.split,
                grid: grid.clone(),
            },
        ),
        Command::Mine(s) => stage(cli, Stage::Mine, split(s)),
        Command::Run => {
            let cfg = load_config(cli)?;
            for m in run_all(&cfg, &StageOptions::default())? {
                report(&m);
            }
            Ok(())
        }
        Command::Fixture {
            out,
            seed,
            entities,
            documents,
        } => {
            let f = fixture::generate(&FixtureSpec {
                entities: *entities,
                documents: *documents,
                seed: *seed,
            });
            for p in f.write(out)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Config => {
            print!("{}", load_config(cli)?.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
