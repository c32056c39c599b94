use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use blockgcl_cli::config::{apply_overrides, ConfigError, RunConfig};
use blockgcl_cli::plot::{self, PlotKind};
use blockgcl_cli::run::{self, SbmParams};
use blockgcl_core::Precision;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "blockgcl", version, about = "Blockwise-trained deep GCN encoders with a CCA-style contrastive loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run or sweep configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (or SVG file for `plot`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `sweep` [default: available cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config precision (f32 or f64).
    #[arg(long, global = true)]
    precision: Option<Precision>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one encoder, then write loss log, MAD profile, probe accuracies and a checkpoint.
    Train,
    /// Train every (dataset, mode, depth, block size) cell over several seeds.
    Sweep,
    /// Per-layer MAD of a checkpoint, or of a fresh training run.
    Mad {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Linear probe on a checkpoint's output or on saved embeddings.
    Probe {
        #[arg(long, conflicts_with = "embeddings", required_unless_present = "embeddings")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Write a stochastic block model dataset directory.
    GenSynthetic {
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        #[arg(long, default_value_t = 50)]
        nodes_per_block: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.02)]
        p_out: f64,
        #[arg(long, default_value_t = 16)]
        features: usize,
    },
    /// Render `results.csv` or `mad_profiles.csv` as SVG.
    Plot {
        /// depth-accuracy or mad-layers
        kind: PlotKind,
        /// CSV written by `sweep`.
        input: PathBuf,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli.config.as_deref().ok_or_else(|| ConfigError {
        line: 0,
        key: "--config".into(),
        msg: "this command needs a config file".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    apply_overrides(&mut cfg, cli.seed, cli.precision);
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Train => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli);
            let summary = run::train(&cfg, &out)?;
            println!("{summary}");
            println!("wrote {}", out.display());
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let out = out_dir(cli);
            let workers = cli
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let s = run::sweep(&cfg, &out, workers)?;
            println!(
                "{} cells, {} runs, {} failed; wrote {}",
                s.cells,
                s.runs,
                s.failed_runs,
                out.join(run::RESULTS_FILE).display()
            );
        }
        Command::Mad { checkpoint } => {
            let cfg = load_config(cli)?;
            let profile = run::mad(&cfg, checkpoint.as_deref(), &out_dir(cli))?;
            for (l, v) in profile.iter().enumerate() {
                println!("layer {}: {}", l + 1, blockgcl_cli::report::opt(*v));
            }
        }
        Command::Probe { checkpoint, embeddings } => {
            let cfg = load_config(cli)?;
            let r = run::probe(&cfg, checkpoint.as_deref(), embeddings.as_deref(), &out_dir(cli))?;
            println!("accuracy {:.4} ± {:.4}", r.mean, r.std);
        }
        Command::GenSynthetic {
            blocks,
            nodes_per_block,
            p_in,
            p_out,
            features,
        } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("sbm"));
            let params = SbmParams {
                blocks: *blocks,
                nodes_per_block: *nodes_per_block,
                p_in: *p_in,
                p_out: *p_out,
                features: *features,
                seed: cli.seed.unwrap_or(0),
            };
            let g = run::gen_synthetic(&params, &out).context("generating SBM")?;
            println!(
                "{} nodes, {} edges, {} classes -> {}",
                g.num_nodes(),
                g.num_edges(),
                g.num_classes(),
                out.display()
            );
        }
        Command::Plot { kind, input } => {
            let out = cli.out.clone().unwrap_or_else(|| default_svg(input));
            let n = plot::plot(*kind, input, &out)?;
            println!("{n} series -> {}", out.display());
        }
    }
    Ok(())
}

fn default_svg(input: &Path) -> PathBuf {
    input.with_extension("svg")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(blockgcl_cli::exit_code(&e) as u8)
        }
    }
}
