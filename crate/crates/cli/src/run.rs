//! Single runs, depth sweeps and the diagnostic subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use blockgcl_core::{
    full_forward, generate_sbm, linear_probe, load_checkpoint, load_dataset, mad_profile, normalized_adjacency,
    run_experiment, save_dataset, GraphDataset, ProbeResult, TrainMode,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::{self, opt, write_csv};

pub const DATA_DIR_ENV: &str = "BLOCKGCL_DATA_DIR";

pub const LOSS_FILE: &str = "loss.csv";
pub const MAD_FILE: &str = "mad.csv";
pub const PROBE_FILE: &str = "probe.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const CHECKPOINT_FILE: &str = "encoder.ckpt";
pub const RESULTS_FILE: &str = "results.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const MAD_PROFILES_FILE: &str = "mad_profiles.csv";

pub const RESULTS_COLUMNS: &str =
    "dataset,mode,depth,block_size,acc_mean,acc_std,final_mad_last_layer,status,seeds";
pub const MAD_PROFILE_COLUMNS: &str = "dataset,mode,depth,block_size,layer,mad";

/// Finds a dataset directory: the value itself, then relative to the config
/// file, then under `$BLOCKGCL_DATA_DIR`.
pub fn resolve_dataset(name: &str, base_dir: Option<&Path>) -> anyhow::Result<PathBuf> {
    let mut tried = Vec::new();
    let direct = PathBuf::from(name);
    tried.push(direct.clone());
    if let Some(base) = base_dir {
        tried.push(base.join(name));
    }
    if let Some(root) = std::env::var_os(DATA_DIR_ENV) {
        tried.push(PathBuf::from(root).join(name));
    }
    if let Some(found) = tried.iter().find(|p| p.is_dir()) {
        return Ok(found.clone());
    }
    let listed: Vec<String> = tried.iter().map(|p| p.display().to_string()).collect();
    bail!(
        "dataset {name:?} not found (tried {}; set {DATA_DIR_ENV} to the directory holding it)",
        listed.join(", ")
    )
}

pub fn load_named(name: &str, base_dir: Option<&Path>) -> anyhow::Result<GraphDataset> {
    let dir = resolve_dataset(name, base_dir)?;
    load_dataset(&dir).with_context(|| format!("loading dataset from {}", dir.display()))
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub dataset: String,
    pub probe: ProbeResult,
    pub final_mad: Option<f64>,
    pub final_loss: Option<f64>,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: accuracy {:.4} ± {:.4}, last-layer MAD {}, final loss {}",
            self.dataset,
            self.probe.mean,
            self.probe.std,
            opt(self.final_mad),
            self.final_loss.map_or_else(|| "NA".into(), |l| format!("{l:.6}")),
        )
    }
}

/// `train`: fit, MAD profile, probe; writes loss, MAD, probe CSVs and a checkpoint.
pub fn train(cfg: &RunConfig, out: &Path) -> anyhow::Result<TrainSummary> {
    let name = cfg.single_dataset()?;
    let g = load_named(name, cfg.base_dir.as_deref())?;
    fs::create_dir_all(out)?;
    let result = run_experiment(&g, &cfg.train, Some(&cfg.probe))?;
    let header = cfg.header();
    let record = &result.record;
    write_csv(&out.join(LOSS_FILE), &header, "epoch,block,loss,wall_ms", &report::loss_rows(record))?;
    write_csv(&out.join(MAD_FILE), &header, "layer,mad", &report::mad_rows(&record.mad))?;
    let probe = record.probe.clone().expect("probe requested");
    write_csv(&out.join(PROBE_FILE), &header, "repeat,test_accuracy", &report::probe_rows(&probe))?;
    if cfg.save_embeddings {
        write_csv(
            &out.join(EMBEDDINGS_FILE),
            &header,
            &report::embedding_columns(result.embeddings.cols()),
            &report::embedding_rows(&result.embeddings),
        )?;
    }
    result.encoder.save(cfg.train.seed, out.join(CHECKPOINT_FILE))?;
    Ok(TrainSummary {
        dataset: name.to_string(),
        probe,
        final_mad: record.mad.last().copied().flatten(),
        final_loss: record.epochs.last().map(|e| e.total_loss()),
    })
}

/// `mad`: per-layer MAD of a saved encoder, or of a freshly trained one.
pub fn mad(cfg: &RunConfig, checkpoint: Option<&Path>, out: &Path) -> anyhow::Result<Vec<Option<f64>>> {
    let g = load_named(cfg.single_dataset()?, cfg.base_dir.as_deref())?;
    let g = if cfg.train.normalize_features { g.row_normalized() } else { g };
    let profile = match checkpoint {
        Some(path) => {
            let (enc, _) = load_checkpoint::<f64>(path)?;
            mad_profile(&enc, &g)?
        }
        None => run_experiment(&g, &cfg.train, None)?.record.mad,
    };
    fs::create_dir_all(out)?;
    write_csv(&out.join(MAD_FILE), &cfg.header(), "layer,mad", &report::mad_rows(&profile))?;
    Ok(profile)
}

/// `probe`: linear evaluation of a saved encoder or an embedding CSV.
pub fn probe(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    embeddings: Option<&Path>,
    out: &Path,
) -> anyhow::Result<ProbeResult> {
    let g = load_named(cfg.single_dataset()?, cfg.base_dir.as_deref())?;
    let g = if cfg.train.normalize_features { g.row_normalized() } else { g };
    let z = match (checkpoint, embeddings) {
        (Some(path), None) => {
            let (enc, _) = load_checkpoint::<f64>(path)?;
            full_forward(&enc, &normalized_adjacency(&g), g.features())?
        }
        (None, Some(path)) => report::read_embeddings(path)?,
        _ => bail!("probe needs exactly one of --checkpoint or --embeddings"),
    };
    let result = linear_probe(&z, &g, &cfg.probe, cfg.train.seed)?;
    fs::create_dir_all(out)?;
    write_csv(&out.join(PROBE_FILE), &cfg.header(), "repeat,test_accuracy", &report::probe_rows(&result))?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub features: usize,
    pub seed: u64,
}

pub fn gen_synthetic(p: &SbmParams, out: &Path) -> anyhow::Result<GraphDataset> {
    let g = generate_sbm(p.blocks, p.nodes_per_block, p.p_in, p.p_out, p.features, p.seed)?;
    save_dataset(&g, out)?;
    Ok(g)
}

/// One cell of a sweep grid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub dataset: String,
    pub mode: TrainMode,
    pub depth: usize,
    pub block_size: usize,
}

/// Grid in output order. End-to-end cells are one block of `depth` layers and
/// appear once per depth; blockwise block sizes above the depth are skipped.
pub fn sweep_cells(cfg: &RunConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for dataset in &cfg.datasets {
        for &mode in &cfg.modes {
            for &depth in &cfg.depths {
                let sizes: Vec<usize> = match mode {
                    TrainMode::End2End => vec![depth],
                    TrainMode::Blockwise => cfg.block_sizes.iter().copied().filter(|&b| b <= depth).collect(),
                };
                for block_size in sizes {
                    cells.push(Cell {
                        dataset: dataset.clone(),
                        mode,
                        depth,
                        block_size,
                    });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone)]
struct RunOutcome {
    accuracy: f64,
    accuracy_std: f64,
    mad: Vec<Option<f64>>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn clean(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub cells: usize,
    pub runs: usize,
    pub failed_runs: usize,
}

/// `sweep`: every grid cell × `runs` seeds (`seed + run index`) on a bounded
/// worker pool. Results are gathered in grid order, so files do not depend on
/// scheduling.
pub fn sweep(cfg: &RunConfig, out: &Path, workers: usize) -> anyhow::Result<SweepSummary> {
    if cfg.datasets.is_empty() {
        return Err(crate::config::ConfigError {
            line: 0,
            key: "datasets".into(),
            msg: "no dataset given".into(),
        }
        .into());
    }
    let cells = sweep_cells(cfg);
    let datasets: Vec<(String, Result<GraphDataset, String>)> = cfg
        .datasets
        .iter()
        .map(|d| {
            let loaded = load_named(d, cfg.base_dir.as_deref()).map_err(|e| format!("{e:#}"));
            (d.clone(), loaded)
        })
        .collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.runs as u64).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let outcomes: Vec<Result<RunOutcome, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let g = datasets
                    .iter()
                    .find(|(n, _)| *n == cell.dataset)
                    .map(|(_, g)| g.as_ref())
                    .expect("every cell's dataset was loaded");
                let g = g.map_err(Clone::clone)?;
                let mut train = cfg.train.clone();
                train.mode = cell.mode;
                train.depth = cell.depth;
                train.block_size = cell.block_size;
                train.seed = cfg.train.seed.wrapping_add(r);
                let result = run_experiment(g, &train, Some(&cfg.probe)).map_err(|e| e.to_string())?;
                let probe = result.record.probe.expect("probe requested");
                Ok(RunOutcome {
                    accuracy: probe.mean,
                    accuracy_std: probe.std,
                    mad: result.record.mad,
                })
            })
            .collect()
    });

    let header = cfg.header();
    let mut results = Vec::with_capacity(cells.len());
    let mut runs = Vec::with_capacity(jobs.len());
    let mut profiles = Vec::new();
    let mut summary = SweepSummary {
        cells: cells.len(),
        runs: jobs.len(),
        failed_runs: 0,
    };
    for (c, cell) in cells.iter().enumerate() {
        let key = format!("{},{},{},{}", cell.dataset, cell.mode, cell.depth, cell.block_size);
        let mine: Vec<(u64, &Result<RunOutcome, String>)> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|((jc, _), _)| *jc == c)
            .map(|((_, r), o)| (cfg.train.seed.wrapping_add(*r), o))
            .collect();
        let ok: Vec<&RunOutcome> = mine.iter().filter_map(|(_, o)| o.as_ref().ok()).collect();
        let errors: Vec<&String> = mine.iter().filter_map(|(_, o)| o.as_ref().err()).collect();
        summary.failed_runs += errors.len();
        for (seed, o) in &mine {
            runs.push(match o {
                Ok(o) => format!(
                    "{key},{seed},{},{},{},ok",
                    o.accuracy,
                    o.accuracy_std,
                    opt(o.mad.last().copied().flatten())
                ),
                Err(e) => format!("{key},{seed},NA,NA,NA,failed: {}", clean(e)),
            });
        }
        let (acc_mean, acc_std) = if ok.is_empty() {
            ("NA".to_string(), "NA".to_string())
        } else {
            let (m, s) = mean_std(&ok.iter().map(|o| o.accuracy).collect::<Vec<_>>());
            (format!("{m:.6}"), format!("{s:.6}"))
        };
        let last: Vec<f64> = ok.iter().filter_map(|o| o.mad.last().copied().flatten()).collect();
        let final_mad = if last.is_empty() {
            "NA".to_string()
        } else {
            format!("{:.6}", last.iter().sum::<f64>() / last.len() as f64)
        };
        let status = match errors.first() {
            None => "ok".to_string(),
            Some(e) => format!("failed {}/{}: {}", errors.len(), mine.len(), clean(e)),
        };
        let seeds: Vec<String> = mine.iter().map(|(s, _)| s.to_string()).collect();
        results.push(format!("{key},{acc_mean},{acc_std},{final_mad},{status},{}", seeds.join(";")));
        for layer in 0..cell.depth {
            let vals: Vec<f64> = ok.iter().filter_map(|o| o.mad.get(layer).copied().flatten()).collect();
            let v = if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            };
            if !ok.is_empty() {
                profiles.push(format!("{key},{},{}", layer + 1, opt(v)));
            }
        }
    }
    fs::create_dir_all(out)?;
    write_csv(&out.join(RESULTS_FILE), &header, RESULTS_COLUMNS, &results)?;
    write_csv(
        &out.join(RUNS_FILE),
        &header,
        "dataset,mode,depth,block_size,seed,acc_mean,acc_std,final_mad_last_layer,status",
        &runs,
    )?;
    write_csv(&out.join(MAD_PROFILES_FILE), &header, MAD_PROFILE_COLUMNS, &profiles)?;
    Ok(summary)
}
