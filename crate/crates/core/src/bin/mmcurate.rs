use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmcurate::curate::{self, CurationConfig};
use mmcurate::synthbench::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "mmcurate", version, about = "Weak-supervision curation of image-text corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for stage outputs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Perceptual-hash dedup keeping the best-aligned member per group.
    Dedup(StageArgs),
    /// Assemble operator scores for the dedup survivors.
    Score(StageArgs),
    /// Generate candidate labeling functions.
    LfGen(StageArgs),
    /// Search LF combinations against the evaluation set.
    Search(StageArgs),
    /// Fit the winning combination, score and select the top fraction.
    Fit(StageArgs),
    /// Run every stage.
    Curate(StageArgs),
    /// Write per-LF diagnostics and weights.
    Report(StageArgs),
    /// Write a synthetic corpus with ground truth and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Skip image fixtures.
        #[arg(long)]
        no_images: bool,
    },
}

fn load(args: &StageArgs) -> mmcurate::Result<CurationConfig> {
    let mut config = CurationConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn synth(out: &Path, seed: u64, n: usize, images: bool) -> mmcurate::Result<()> {
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        n,
        seed,
        images,
        duplicates: synthbench::DuplicatePlan {
            groups: defaults.duplicates.groups.min(n / (2 * defaults.duplicates.max_size)),
            ..defaults.duplicates
        },
        ..defaults
    };
    let corpus = synthbench::generate(&config)?;
    let layout = corpus.write_to(out)?;
    let operators: Vec<_> = config.operators.iter().map(|o| o.name.clone()).collect();
    CurationConfig::for_synth(&layout, &operators, seed).save(out.join("config.toml"))?;
    println!("wrote {} samples to {} (digest {})", n, out.display(), corpus.digest()?);
    Ok(())
}

fn run(cli: Cli) -> mmcurate::Result<()> {
    match cli.command {
        Command::Dedup(a) => {
            let d = curate::stage_dedup(&load(&a)?, &a.out)?;
            println!("{} groups, {} kept", d.groups.len(), d.kept.len());
        }
        Command::Score(a) => {
            let t = curate::stage_score(&load(&a)?, &a.out)?;
            println!("{} samples x {} operators", t.n_samples(), t.n_operators());
        }
        Command::LfGen(a) => {
            let g = curate::stage_lf_gen(&load(&a)?, &a.out)?;
            let n: usize = g.operators.iter().map(|o| o.candidates.len()).sum();
            println!("{n} candidate LFs over {} operators", g.operators.len());
        }
        Command::Search(a) => {
            let o = curate::stage_search(&load(&a)?, &a.out)?;
            let b = o.best();
            println!("best {} (M = {:.4}, F1 = {:.4})", b.combination.encode(&o.grid), b.metric, b.f1);
        }
        Command::Fit(a) => {
            let d = curate::stage_fit(&load(&a)?, &a.out)?;
            println!("fit {} LFs, converged = {}", d.lfs.len(), d.model.converged);
        }
        Command::Curate(a) => {
            let s = curate::run_pipeline(&load(&a)?, &a.out)?;
            println!(
                "{} samples, {} after dedup, {} curated; best {} (M = {:.4})",
                s.samples, s.survivors, s.curated, s.best, s.metric
            );
        }
        Command::Report(a) => {
            let r = curate::stage_report(&load(&a)?, &a.out)?;
            print!("{}", r.to_csv_string()?);
        }
        Command::Synth { out, seed, n, no_images } => synth(&out, seed, n, !no_images)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
