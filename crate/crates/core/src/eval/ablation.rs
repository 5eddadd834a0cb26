//! Parameter sweeps over the cascade: run every configuration on every
//! sequence, score, and rank by G.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::score::{dataset_score, score_sequence, EvalFrame, SequenceScore};
use crate::cascade::{run_sequence, CascadeConfig, SequenceFrame};
use crate::error::{Error, Result};
use crate::maskcore::BitMask;

/// One scored sequence: tracker inputs plus aligned ground truth.
#[derive(Clone, Debug)]
pub struct EvalSequence {
    pub name: String,
    pub first_masks: BTreeMap<u32, BitMask>,
    pub inputs: Vec<SequenceFrame>,
    pub ground_truth: Vec<EvalFrame>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub config: CascadeConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub label: String,
    pub j: f64,
    pub f: f64,
    pub g: f64,
}

fn flag(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Cartesian product of the given axes on top of `base`.
pub fn config_grid(base: &CascadeConfig, rho_reid: &[f64], rho_iou: &[f64], reid: &[bool]) -> Vec<GridPoint> {
    let rr: Vec<f64> = if rho_reid.is_empty() { vec![base.rho_reid] } else { rho_reid.to_vec() };
    let ri: Vec<f64> = if rho_iou.is_empty() { vec![base.rho_iou] } else { rho_iou.to_vec() };
    let re: Vec<bool> = if reid.is_empty() { vec![base.reid_path_enabled] } else { reid.to_vec() };
    let mut out = Vec::new();
    for &a in &rr {
        for &b in &ri {
            for &c in &re {
                let config = CascadeConfig {
                    rho_reid: a,
                    rho_iou: b,
                    reid_path_enabled: c,
                    ..base.clone()
                };
                out.push(GridPoint {
                    label: format!("rho_reid={a};rho_iou={b};reid={}", flag(c)),
                    config,
                });
            }
        }
    }
    out
}

/// Scores one configuration on one sequence.
pub fn evaluate(seq: &EvalSequence, config: &CascadeConfig, tolerance: Option<u32>) -> Result<SequenceScore> {
    let run = run_sequence(&seq.first_masks, &seq.inputs, config.clone())?;
    let pred = run.results.into_iter().map(|r| EvalFrame {
        frame: r.frame_id,
        masks: r.instances.into_iter().map(|i| (i.id, i.mask)).collect(),
    });
    score_sequence(pred, seq.ground_truth.iter().cloned(), tolerance)
}

/// Runs the grid over all sequences on up to `threads` workers. Rows are
/// sorted by descending G, grid order breaking ties, so output does not
/// depend on scheduling.
pub fn ablation_sweep(
    sequences: &[EvalSequence],
    grid: &[GridPoint],
    threads: usize,
    tolerance: Option<u32>,
) -> Result<Vec<AblationRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty configuration grid".into()));
    }
    if sequences.is_empty() {
        return Err(Error::InvalidArgument("no sequences to evaluate".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..sequences.len()).map(move |s| (g, s)))
        .collect();
    let slots: Vec<Mutex<Option<Result<SequenceScore>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(g, s)) = jobs.get(k) else { break };
                let r = evaluate(&sequences[s], &grid[g].config, tolerance);
                *slots[k].lock().unwrap() = Some(r);
            });
        }
    });
    let mut scores: Vec<Vec<SequenceScore>> = vec![Vec::new(); grid.len()];
    for ((g, _), slot) in jobs.iter().zip(slots) {
        let r = slot.into_inner().unwrap().expect("every job ran");
        scores[*g].push(r?);
    }
    let mut rows: Vec<(usize, AblationRow)> = grid
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(i, (gp, ss))| {
            let (j, f, g) = dataset_score(ss);
            (i, AblationRow { label: gp.label.clone(), j, f, g })
        })
        .collect();
    rows.sort_by(|a, b| b.1.g.total_cmp(&a.1.g).then(a.0.cmp(&b.0)));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// CSV with header `config,J,F,G`.
pub fn rows_to_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("config,J,F,G\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{:.6},{:.6}", r.label, r.j, r.f, r.g);
    }
    s
}
