use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weightshare::pipeline::{Pipeline, PipelineConfig, ReportRow};
use weightshare::Error;

#[derive(Parser)]
#[command(
    name = "weightshare",
    version,
    about = "Whole-network weight-sharing compression"
)]
struct Cli {
    /// TOML configuration; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and WEIGHTSHARE_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for data generation, training and search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    skip_merge: bool,
    #[arg(long, global = true)]
    skip_huffman: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the baseline network and fix the threshold τ.
    Train,
    /// Quantize with a single fixed bin count.
    RandomUb {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Search the bin count with NSGA-II.
    Search,
    /// Merge neighbouring bins of every accepted solution.
    Merge,
    /// Huffman-code the final codebooks.
    Encode,
    /// Summarise all stages.
    Report,
    /// Run every stage in order.
    RunAll,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => 1,
        Error::Io(_)
        | Error::Format(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::MissingArtifact { .. } => 2,
        _ => 3,
    }
}

fn print_table(rows: &[ReportRow]) {
    println!(
        "{:<10} {:>6} {:>7} {:>8} {:>8} {:>7} {:>7} {:>7}",
        "method", "k", "params", "avg_bits", "CR", "top1", "val_f1", "test_f1"
    );
    for r in rows {
        let k = r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>6} {:>7} {:>8.3} {:>8.3} {:>7.4} {:>7.4} {:>7.4}",
            r.method, k, r.params, r.avg_bits, r.cr, r.top1, r.val_f1, r.test_f1
        );
    }
}

fn run(cli: Cli) -> weightshare::Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.apply_env();
    if let Some(out) = cli.out {
        config.paths.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    config.flags.skip_merge |= cli.skip_merge;
    config.flags.skip_huffman |= cli.skip_huffman;
    let pipeline = Pipeline::new(config)?;

    match cli.command {
        Command::Train => {
            let b = pipeline.train()?;
            println!(
                "baseline {:?}: {} params, tau = {:.4}, test F1 = {:.4}",
                b.arch, b.params, b.tau, b.test.f1
            );
        }
        Command::RandomUb { k } => {
            let r = pipeline.random_ub(k)?;
            println!(
                "random UB k={}: d = {}, CR = {:.3}, val F1 = {:.4}",
                r.k, r.compression.d, r.compression.cr_fixed, r.validation.f1
            );
        }
        Command::Search => {
            let f = pipeline.search()?;
            let accepted = f.solutions.iter().filter(|s| s.accepted).count();
            println!(
                "front: {} solutions, {} at or above tau = {:.4}",
                f.solutions.len(),
                accepted,
                f.tau
            );
        }
        Command::Merge => {
            let m = pipeline.merge()?;
            for s in &m.solutions {
                println!(
                    "k={}: d {} -> {}, val F1 {:.4} -> {:.4}",
                    s.k, s.d, s.m, s.val_f1_before, s.val_f1
                );
            }
        }
        Command::Encode => {
            let e = pipeline.encode()?;
            for s in &e.solutions {
                println!(
                    "{}: {} bytes, CR {:.3} (fixed {:.3})",
                    s.file, s.file_bytes, s.compression.cr_huffman, s.compression.cr_fixed
                );
            }
        }
        Command::Report => print_table(&pipeline.report()?),
        Command::RunAll => print_table(&pipeline.run_all()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
