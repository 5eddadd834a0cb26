use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use super::{write_atomic, CliError, GlobalOpts};
use crate::eval::{score_sequence, SequenceScore};
use crate::io::read_mask_stream;

#[derive(Clone, Debug, Default, Args)]
pub struct EvalArgs {
    /// Predicted mask stream
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth mask stream
    #[arg(long)]
    pub gt: PathBuf,
    /// Boundary tolerance in pixels (default: 0.75% of the frame diagonal)
    #[arg(long)]
    pub tolerance: Option<u32>,
}

pub fn cmd_eval(args: &EvalArgs, g: &GlobalOpts) -> Result<SequenceScore, CliError> {
    let pred = read_mask_stream(&args.pred)?;
    if pred.is_empty() {
        return Err(CliError::input(format!("{}: no frames", args.pred.display())));
    }
    let gt = read_mask_stream(&args.gt)?;
    if gt.is_empty() {
        return Err(CliError::input(format!("{}: no frames", args.gt.display())));
    }
    let score = score_sequence(pred, gt, args.tolerance)?;
    g.say(format!("J={:.3} F={:.3} G={:.3}", score.j_mean, score.f_mean, score.g_mean));
    if let Some(out) = &g.out {
        let csv = score_csv(&score);
        write_atomic(out, |w| Ok(w.write_all(csv.as_bytes())?))?;
    }
    Ok(score)
}

/// Per-instance rows followed by the sequence mean.
pub fn score_csv(s: &SequenceScore) -> String {
    let mut out = String::from("instance,J,F,G\n");
    for (id, i) in &s.per_instance {
        let _ = writeln!(out, "{id},{:.6},{:.6},{:.6}", i.j_mean, i.f_mean, (i.j_mean + i.f_mean) / 2.0);
    }
    let _ = writeln!(out, "mean,{:.6},{:.6},{:.6}", s.j_mean, s.f_mean, s.g_mean);
    out
}
