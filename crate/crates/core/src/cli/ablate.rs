use std::path::{Path, PathBuf};

use clap::Args;

use super::bench::read_candidate_file;
use super::run::read_first_masks;
use super::sim::{CANDIDATES_FILE, FIRST_MASKS_FILE, FLOW_DIR, GT_FILE};
use super::{worker_threads, write_atomic, CliError, GlobalOpts};
use crate::eval::{ablation_sweep, config_grid, rows_to_csv, AblationRow, EvalSequence};
use crate::io::read_mask_stream;

#[derive(Clone, Debug, Default, Args)]
pub struct AblateArgs {
    /// A sequence directory (as written by `sim`) or a directory of them
    #[arg(long)]
    pub sequences: PathBuf,
    /// Re-ID distance thresholds, comma separated
    #[arg(long, value_delimiter = ',')]
    pub rho_reid: Vec<f64>,
    /// IoU thresholds, comma separated
    #[arg(long, value_delimiter = ',')]
    pub rho_iou: Vec<f64>,
    /// Re-ID path settings: on, off or both (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub reid: Vec<String>,
    #[arg(long)]
    pub tolerance: Option<u32>,
}

fn parse_switch(s: &str) -> Result<bool, CliError> {
    match s.trim() {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(CliError::input(format!("--reid expects on/off, got {other:?}"))),
    }
}

pub fn load_sequence_dir(dir: &Path) -> Result<EvalSequence, CliError> {
    let flow = dir.join(FLOW_DIR);
    Ok(EvalSequence {
        name: dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
        first_masks: read_first_masks(&dir.join(FIRST_MASKS_FILE))?,
        inputs: read_candidate_file(&dir.join(CANDIDATES_FILE), Some(&flow), None)?,
        ground_truth: read_mask_stream(&dir.join(GT_FILE))?,
    })
}

/// `dir` itself when it holds a candidate stream, else its subdirectories
/// that do, in name order.
pub fn load_sequences(dir: &Path) -> Result<Vec<EvalSequence>, CliError> {
    if dir.join(CANDIDATES_FILE).is_file() {
        return Ok(vec![load_sequence_dir(dir)?]);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(CANDIDATES_FILE).is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(CliError::input(format!("{}: no sequences found", dir.display())));
    }
    subdirs.iter().map(|d| load_sequence_dir(d)).collect()
}

pub fn cmd_ablate(args: &AblateArgs, g: &GlobalOpts) -> Result<Vec<AblationRow>, CliError> {
    let base = g.cascade_config()?;
    let or_base = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let rho_reid = or_base(&args.rho_reid, base.rho_reid);
    let rho_iou = or_base(&args.rho_iou, base.rho_iou);
    let reid = if args.reid.is_empty() {
        vec![base.reid_path_enabled]
    } else {
        args.reid.iter().map(|s| parse_switch(s)).collect::<Result<_, _>>()?
    };
    let grid = config_grid(&base, &rho_reid, &rho_iou, &reid);
    for p in &grid {
        p.config.validate().map_err(|e| CliError::input(format!("{}: {e}", p.label)))?;
    }
    let seqs = load_sequences(&args.sequences)?;
    let rows = ablation_sweep(&seqs, &grid, worker_threads(), args.tolerance)?;
    let csv = rows_to_csv(&rows);
    match &g.out {
        Some(out) => {
            write_atomic(out, |w| Ok(w.write_all(csv.as_bytes())?))?;
            g.say(format!("ablate: {} configs x {} sequences -> {}", grid.len(), seqs.len(), out.display()));
        }
        None => print!("{csv}"),
    }
    Ok(rows)
}
