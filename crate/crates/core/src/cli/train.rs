use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{write_atomic, CliError, GlobalOpts};
use crate::io::JsonLines;
use crate::reid::{dataset_loss, train_projection, TrainConfig, TrainOutput};

#[derive(Clone, Debug, Default, Args)]
pub struct TrainArgs {
    /// JSON lines of {"label": int, "features": [numbers]}
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub learn_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub out_dim: Option<usize>,
    /// Triplet margin
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: u32,
    pub features: Vec<f64>,
}

pub const PROJECTION_FILE: &str = "projection.json";
pub const LOSS_FILE: &str = "loss.csv";

pub fn read_samples(path: &Path) -> Result<Vec<(Vec<f64>, u32)>, CliError> {
    let reader = BufReader::new(File::open(path)?);
    JsonLines::<_, Sample>::new(reader, path)
        .map(|r| r.map(|(_, s)| (s.features, s.label)).map_err(CliError::from))
        .collect()
}

pub fn cmd_train_embed(args: &TrainArgs, g: &GlobalOpts) -> Result<TrainOutput, CliError> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        out_dim: args.out_dim.unwrap_or(d.out_dim),
        steps: args.steps.unwrap_or(d.steps),
        learn_rate: args.learn_rate.unwrap_or(d.learn_rate),
        batch_size: args.batch_size.unwrap_or(d.batch_size),
        alpha: args.alpha.unwrap_or(d.alpha),
        seed: g.seed.unwrap_or(d.seed),
    };
    let out = g.require_out("output directory")?;
    let samples = read_samples(&args.samples)?;
    let trained = train_projection(&samples, &cfg)?;
    let before = dataset_loss(&samples, &trained.initial, cfg.alpha)?;
    let after = dataset_loss(&samples, &trained.projection, cfg.alpha)?;

    std::fs::create_dir_all(out)?;
    write_atomic(&out.join(PROJECTION_FILE), |w| {
        serde_json::to_writer(&mut *w, &trained.projection).map_err(|e| CliError::input(e.to_string()))?;
        Ok(w.write_all(b"\n")?)
    })?;
    let mut csv = String::from("step,loss\n");
    for (i, l) in trained.loss_history.iter().enumerate() {
        let _ = writeln!(csv, "{i},{l}");
    }
    write_atomic(&out.join(LOSS_FILE), |w| Ok(w.write_all(csv.as_bytes())?))?;
    g.say(format!(
        "train-embed: {} samples, {} steps, dataset loss {before:.6} -> {after:.6}",
        samples.len(),
        cfg.steps
    ));
    Ok(trained)
}

