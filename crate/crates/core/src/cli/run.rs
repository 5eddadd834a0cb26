use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{write_atomic, CliError, GlobalOpts};
use crate::cascade::{CascadeConfig, CascadeEngine, EngineStats, FrameResult};
use crate::error::Error;
use crate::flow::FlowField;
use crate::io::{write_json_line, CandidateLine, JsonLines, MaskLine};
use crate::maskcore::BitMask;

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// JSON manifest; explicit flags override its fields
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Candidate stream (JSON lines)
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// First-frame masks (mask stream, first line is used)
    #[arg(long)]
    pub first_masks: Option<PathBuf>,
    /// Directory holding the OVSF files named by candidate lines
    #[arg(long)]
    pub flow_dir: Option<PathBuf>,
    /// Also write one PPM per frame into this directory
    #[arg(long)]
    pub dump_masks: Option<PathBuf>,
}

/// Everything a run needs, resolved and checked up front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub candidates: PathBuf,
    pub first_masks: PathBuf,
    #[serde(default)]
    pub flow_dir: Option<PathBuf>,
    #[serde(default)]
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub dump_masks: Option<PathBuf>,
    #[serde(default)]
    pub quiet: bool,
}

impl RunManifest {
    pub fn resolve(args: &RunArgs, g: &GlobalOpts) -> Result<Self, CliError> {
        let base: Option<RunManifest> = match &args.manifest {
            None => None,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
                Some(serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?)
            }
        };
        let pick = |flag: &Option<PathBuf>, from: Option<&PathBuf>, name: &str| {
            flag.clone()
                .or_else(|| from.cloned())
                .ok_or_else(|| CliError::input(format!("missing {name}")))
        };
        let b = base.as_ref();
        let m = RunManifest {
            candidates: pick(&args.candidates, b.map(|m| &m.candidates), "--candidates")?,
            first_masks: pick(&args.first_masks, b.map(|m| &m.first_masks), "--first-masks")?,
            flow_dir: args.flow_dir.clone().or_else(|| b.and_then(|m| m.flow_dir.clone())),
            config: g.config.clone().or_else(|| b.and_then(|m| m.config.clone())),
            out: pick(&g.out, b.map(|m| &m.out), "--out")?,
            dump_masks: args.dump_masks.clone().or_else(|| b.and_then(|m| m.dump_masks.clone())),
            quiet: g.quiet || b.is_some_and(|m| m.quiet),
        };
        m.check()?;
        Ok(m)
    }

    /// Referenced inputs must exist. A missing flow directory is tolerated
    /// (identity flow is used instead).
    pub fn check(&self) -> Result<(), CliError> {
        for p in [Some(&self.candidates), Some(&self.first_masks), self.config.as_ref()]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(CliError::input(format!("{}: no such file", p.display())));
            }
        }
        Ok(())
    }

    pub fn load_config(&self) -> Result<CascadeConfig, CliError> {
        GlobalOpts {
            config: self.config.clone(),
            ..GlobalOpts::default()
        }
        .cascade_config()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub frames: u64,
    pub instances: usize,
    pub stats: EngineStats,
    pub mean_latency_us: f64,
    pub max_latency_us: f64,
    pub flow_fallback: bool,
    pub output: PathBuf,
}

pub fn cmd_run(args: &RunArgs, g: &GlobalOpts) -> Result<RunSummary, CliError> {
    let m = RunManifest::resolve(args, g)?;
    run_manifest(&m)
}

/// Streams the candidate file through the cascade, one line at a time.
pub fn run_manifest(m: &RunManifest) -> Result<RunSummary, CliError> {
    let config = m.load_config()?;
    let first = read_first_masks(&m.first_masks)?;
    let dims = first
        .values()
        .next()
        .map(BitMask::dims)
        .ok_or_else(|| CliError::input(format!("{}: no instances", m.first_masks.display())))?;

    let flow_dir = match &m.flow_dir {
        Some(d) if d.is_dir() => Some(d.clone()),
        Some(d) => {
            log::warn!("flow directory {} not found; using identity flow", d.display());
            None
        }
        None => None,
    };
    let flow_fallback = m.flow_dir.is_some() && flow_dir.is_none();
    if let Some(d) = &m.dump_masks {
        std::fs::create_dir_all(d)?;
    }

    let mut engine = CascadeEngine::new(config)?;
    let mut frames = 0u64;
    let mut lat_sum = 0.0;
    let mut lat_max: f64 = 0.0;
    let reader = BufReader::new(File::open(&m.candidates)?);
    let mut lines = JsonLines::<_, CandidateLine>::new(reader, &m.candidates);

    write_atomic(&m.out, |w| {
        while let Some(item) = lines.next() {
            let (line_no, cl) = item?;
            let at_line = |e: Error| -> CliError {
                if e.is_consistency() {
                    CliError::consistency(format!("{}:{line_no}: {e}", m.candidates.display()))
                } else {
                    CliError::input(format!("{}:{line_no}: {e}", m.candidates.display()))
                }
            };
            if (cl.width, cl.height) != dims {
                return Err(at_line(Error::DimensionMismatch {
                    expected: dims,
                    actual: (cl.width, cl.height),
                }));
            }
            let cands = cl.decode().map_err(at_line)?;
            let flow = match (&cl.flow, &flow_dir) {
                (Some(rel), Some(dir)) => Some(read_flow(&dir.join(rel)).map_err(at_line)?),
                _ => None,
            };
            let t0 = Instant::now();
            let result = if frames == 0 {
                engine.init(cl.frame, &first, &cands)
            } else {
                engine.step(cl.frame, &cands, flow.as_ref())
            }
            .map_err(at_line)?;
            let dt = t0.elapsed().as_secs_f64() * 1e6;
            lat_sum += dt;
            lat_max = lat_max.max(dt);
            frames += 1;
            write_json_line(&mut *w, &MaskLine::from_result(&result))?;
            if let Some(d) = &m.dump_masks {
                write_ppm(&d.join(format!("frame_{:06}.ppm", result.frame_id)), &result, dims)?;
            }
        }
        if frames == 0 {
            return Err(CliError::input(format!("{}: no frames", m.candidates.display())));
        }
        Ok(())
    })?;

    let summary = RunSummary {
        frames,
        instances: engine.instances().len(),
        stats: engine.stats().clone(),
        mean_latency_us: lat_sum / frames as f64,
        max_latency_us: lat_max,
        flow_fallback,
        output: m.out.clone(),
    };
    let summary_path = summary_path(&m.out);
    write_atomic(&summary_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(|e| CliError::input(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    if !m.quiet {
        let s = &summary.stats;
        println!(
            "run: {} frames, {} instances, paths IOU={} REID={} FLOW={}, mean {:.1} us/frame -> {}",
            summary.frames,
            summary.instances,
            s.iou_events,
            s.reid_events,
            s.flow_events,
            summary.mean_latency_us,
            m.out.display()
        );
    }
    Ok(summary)
}

/// `<out>.summary.json` next to the prediction file.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".summary.json");
    out.with_file_name(name)
}

pub(crate) fn read_first_masks(path: &Path) -> Result<BTreeMap<u32, BitMask>, CliError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = JsonLines::<_, MaskLine>::new(reader, path);
    let (line, ml) = lines
        .next()
        .ok_or_else(|| CliError::input(format!("{}: empty file", path.display())))??;
    let frame = ml.decode().map_err(|e| {
        if e.is_consistency() {
            CliError::consistency(format!("{}:{line}: {e}", path.display()))
        } else {
            CliError::input(format!("{}:{line}: {e}", path.display()))
        }
    })?;
    Ok(frame.masks)
}

pub(crate) fn read_flow(path: &Path) -> crate::Result<FlowField> {
    let f = File::open(path).map_err(|e| Error::Flow(format!("{}: {e}", path.display())))?;
    FlowField::read_ovsf(BufReader::new(f)).map_err(|e| Error::Flow(format!("{}: {e}", path.display())))
}

fn write_ppm(path: &Path, r: &FrameResult, (w, h): (u32, u32)) -> Result<(), CliError> {
    let mut img = vec![0u8; w as usize * h as usize * 3];
    for inst in &r.instances {
        let c = palette(inst.id);
        for (start, end) in inst.mask.fg_runs() {
            for k in start as usize..end as usize {
                // column-major index -> row-major pixel
                let (x, y) = (k / h as usize, k % h as usize);
                let p = (y * w as usize + x) * 3;
                img[p..p + 3].copy_from_slice(&c);
            }
        }
    }
    let mut f = std::io::BufWriter::new(File::create(path)?);
    write!(f, "P6\n{w} {h}\n255\n")?;
    f.write_all(&img)?;
    f.flush()?;
    Ok(())
}

fn palette(id: u32) -> [u8; 3] {
    let x = id.wrapping_mul(0x9e37_79b9).rotate_left(7);
    [(x >> 16) as u8 | 0x40, (x >> 8) as u8 | 0x40, x as u8 | 0x40]
}
