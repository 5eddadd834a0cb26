use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::run::{read_first_masks, read_flow};
use super::sim::{resolve_scene, SimArgs};
use super::{write_atomic, CliError, GlobalOpts};
use crate::cascade::{run_sequence, CascadeConfig, EngineStats, SequenceFrame};
use crate::io::{CandidateLine, JsonLines};
use crate::maskcore::BitMask;
use crate::simulator::generate;

#[derive(Clone, Debug, Default, Args)]
pub struct BenchArgs {
    /// Benchmark a simulator preset instead of files
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the preset's frame count
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub first_masks: Option<PathBuf>,
    #[arg(long)]
    pub flow_dir: Option<PathBuf>,
    /// Passes over the sequence
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Fail (exit 3) when the median exceeds twice this report's median
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Fail (exit 3) when the median exceeds this many microseconds
    #[arg(long)]
    pub budget_us: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub label: String,
    pub frames: usize,
    pub repetitions: usize,
    pub instances: usize,
    pub mean_candidates_per_frame: f64,
    pub max_candidates_per_frame: usize,
    pub stats: EngineStats,
    /// Association time per frame and repetition, microseconds.
    pub latencies_us: Vec<f64>,
    pub median_us: f64,
    pub p95_us: f64,
    pub mean_us: f64,
    pub fps: f64,
    pub machine: String,
}

impl BenchReport {
    pub fn from_latencies(label: String, frames: usize, repetitions: usize, latencies_us: Vec<f64>) -> Self {
        let mut sorted = latencies_us.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median_us = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
        };
        // nearest rank
        let p95_us = if n == 0 { 0.0 } else { sorted[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1] };
        let mean_us = if n == 0 { 0.0 } else { sorted.iter().sum::<f64>() / n as f64 };
        BenchReport {
            label,
            frames,
            repetitions,
            instances: 0,
            mean_candidates_per_frame: 0.0,
            max_candidates_per_frame: 0,
            stats: EngineStats::default(),
            latencies_us,
            median_us,
            p95_us,
            mean_us,
            fps: if mean_us > 0.0 { 1e6 / mean_us } else { 0.0 },
            machine: machine_descriptor(),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "bench {}: {} frames x {} reps, {} instances, {:.1} candidates/frame (max {})\n\
             latency us: median {:.1}  p95 {:.1}  mean {:.1}  fps {:.1}\n\
             machine: {}",
            self.label,
            self.frames,
            self.repetitions,
            self.instances,
            self.mean_candidates_per_frame,
            self.max_candidates_per_frame,
            self.median_us,
            self.p95_us,
            self.mean_us,
            self.fps,
            self.machine
        )
    }
}

pub fn machine_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map_or(1, usize::from);
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    format!(
        "{cpu}; {} {}; {threads} threads; {profile} build",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Memory-resident benchmark input.
pub struct BenchInput {
    pub label: String,
    pub first_masks: BTreeMap<u32, BitMask>,
    pub frames: Vec<SequenceFrame>,
}

pub fn load_bench_input(args: &BenchArgs, g: &GlobalOpts) -> Result<BenchInput, CliError> {
    if let Some(name) = &args.preset {
        let spec = resolve_scene(
            &SimArgs {
                preset: Some(name.clone()),
                spec: None,
                frames: args.frames,
            },
            g.seed,
        )?;
        let seq = generate(&spec)?;
        return Ok(BenchInput {
            label: name.clone(),
            first_masks: seq.first_masks(),
            frames: seq.inputs(),
        });
    }
    let (Some(cands), Some(first)) = (&args.candidates, &args.first_masks) else {
        return Err(CliError::input("bench needs --preset or both --candidates and --first-masks"));
    };
    Ok(BenchInput {
        label: cands.display().to_string(),
        first_masks: read_first_masks(first)?,
        frames: read_candidate_file(cands, args.flow_dir.as_deref(), args.frames)?,
    })
}

/// Loads a whole candidate stream (and its flow files) into memory.
pub fn read_candidate_file(
    path: &Path,
    flow_dir: Option<&Path>,
    limit: Option<u32>,
) -> Result<Vec<SequenceFrame>, CliError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for item in JsonLines::<_, CandidateLine>::new(reader, path) {
        if limit.is_some_and(|n| out.len() >= n as usize) {
            break;
        }
        let (line, cl) = item?;
        let at = |e: crate::Error| {
            let msg = format!("{}:{line}: {e}", path.display());
            if e.is_consistency() {
                CliError::consistency(msg)
            } else {
                CliError::input(msg)
            }
        };
        let candidates = cl.decode().map_err(at)?;
        let flow = match (&cl.flow, flow_dir) {
            (Some(rel), Some(d)) if d.is_dir() => Some(read_flow(&d.join(rel)).map_err(at)?),
            _ => None,
        };
        out.push(SequenceFrame { candidates, flow });
    }
    Ok(out)
}

/// Times association only; inputs are parsed beforehand.
pub fn bench_input(input: &BenchInput, config: &CascadeConfig, repetitions: usize) -> Result<BenchReport, CliError> {
    if repetitions == 0 {
        return Err(CliError::input("repetitions must be >= 1"));
    }
    let mut latencies = Vec::with_capacity(repetitions * input.frames.len());
    let mut stats: Option<EngineStats> = None;
    for _ in 0..repetitions {
        let run = run_sequence(&input.first_masks, &input.frames, config.clone())?;
        latencies.extend_from_slice(&run.timings_us);
        match &stats {
            None => stats = Some(run.stats),
            Some(s) if *s != run.stats => {
                return Err(CliError::consistency("association differed between repetitions"))
            }
            Some(_) => {}
        }
    }
    let counts: Vec<usize> = input.frames.iter().map(|f| f.candidates.len()).collect();
    let mut r = BenchReport::from_latencies(input.label.clone(), input.frames.len(), repetitions, latencies);
    r.instances = input.first_masks.len();
    r.mean_candidates_per_frame = counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64;
    r.max_candidates_per_frame = counts.iter().copied().max().unwrap_or(0);
    r.stats = stats.unwrap_or_default();
    Ok(r)
}

/// Median may grow to at most twice the baseline's.
pub fn regression_gate(report: &BenchReport, baseline: &BenchReport) -> Result<(), CliError> {
    if report.median_us > 2.0 * baseline.median_us {
        return Err(CliError::consistency(format!(
            "median {:.1} us exceeds twice the baseline median {:.1} us",
            report.median_us, baseline.median_us
        )));
    }
    Ok(())
}

pub fn read_report(path: &Path) -> Result<BenchReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_report(path: &Path, report: &BenchReport) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, report).map_err(|e| CliError::input(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn cmd_bench(args: &BenchArgs, g: &GlobalOpts) -> Result<BenchReport, CliError> {
    let config = g.cascade_config()?;
    let input = load_bench_input(args, g)?;
    if input.frames.is_empty() {
        return Err(CliError::input("no frames to benchmark"));
    }
    let report = bench_input(&input, &config, args.repetitions)?;
    if let Some(out) = &g.out {
        write_report(out, &report)?;
    }
    g.say(report.to_text());
    if let Some(b) = &args.baseline {
        regression_gate(&report, &read_report(b)?)?;
    }
    if let Some(budget) = args.budget_us {
        if report.median_us > budget {
            return Err(CliError::consistency(format!(
                "median {:.1} us exceeds budget {budget:.1} us",
                report.median_us
            )));
        }
    }
    Ok(report)
}
