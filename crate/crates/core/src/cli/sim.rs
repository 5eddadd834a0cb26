use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;

use super::{CliError, GlobalOpts};
use crate::io::{write_json_line, CandidateLine, MaskLine};
use crate::simulator::{preset, SceneSpec, Simulation, PRESETS};

#[derive(Clone, Debug, Default, Args)]
pub struct SimArgs {
    /// Built-in scene: crossing, exit-reenter, crowd, static
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Scene description (JSON)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the number of frames
    #[arg(long)]
    pub frames: Option<u32>,
}

/// Files written by `sim`, with line counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimInventory {
    pub dir: PathBuf,
    pub frames: u32,
    pub candidates: usize,
    pub false_positives: usize,
    pub flow_files: usize,
    pub files: Vec<(PathBuf, u64)>,
}

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const FIRST_MASKS_FILE: &str = "first_masks.jsonl";
pub const GT_FILE: &str = "gt.jsonl";
pub const FLOW_DIR: &str = "flow";
pub const SPEC_FILE: &str = "spec.json";

pub fn resolve_scene(args: &SimArgs, seed: Option<u64>) -> Result<SceneSpec, CliError> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), _) => preset(name).map_err(|_| {
            CliError::input(format!("unknown preset {name:?} (known: {})", PRESETS.join(", ")))
        })?,
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
        }
        (None, None) => return Err(CliError::input("one of --preset or --spec is required")),
    };
    if let Some(n) = args.frames {
        spec.frames = n;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_sim(args: &SimArgs, g: &GlobalOpts) -> Result<SimInventory, CliError> {
    let spec = resolve_scene(args, g.seed)?;
    let out = g.require_out("output directory")?;
    let inv = write_scene(&spec, out)?;
    if !g.quiet {
        println!(
            "sim: {} frames, {} candidates ({} false positives), {} flow files",
            inv.frames, inv.candidates, inv.false_positives, inv.flow_files
        );
        for (p, n) in &inv.files {
            println!("  {:>8}  {}", n, p.display());
        }
    }
    Ok(inv)
}

/// Renders `spec` frame by frame into `dir`.
pub fn write_scene(spec: &SceneSpec, dir: &Path) -> Result<SimInventory, CliError> {
    let sim = Simulation::new(spec.clone())?;
    let flow_dir = dir.join(FLOW_DIR);
    std::fs::create_dir_all(&flow_dir)?;
    let mut cands = BufWriter::new(File::create(dir.join(CANDIDATES_FILE))?);
    let mut gt = BufWriter::new(File::create(dir.join(GT_FILE))?);
    let mut inv = SimInventory {
        dir: dir.to_path_buf(),
        frames: spec.frames,
        ..SimInventory::default()
    };
    for t in 0..sim.len() {
        let f = sim.frame(t)?;
        if t == 0 {
            let mut first = BufWriter::new(File::create(dir.join(FIRST_MASKS_FILE))?);
            write_json_line(&mut first, &MaskLine::from_masks(f.frame_id, &f.gt))?;
            first.flush()?;
        }
        let flow_name = match &f.flow {
            Some(fl) => {
                let name = format!("frame_{:06}.ovsf", f.frame_id);
                let mut w = BufWriter::new(File::create(flow_dir.join(&name))?);
                fl.write_ovsf(&mut w)?;
                w.flush()?;
                inv.flow_files += 1;
                Some(name)
            }
            None => None,
        };
        inv.candidates += f.candidates.len();
        inv.false_positives += f.candidate_sources.iter().filter(|s| s.is_none()).count();
        let line = CandidateLine::from_candidates(f.frame_id, spec.width, spec.height, &f.candidates, flow_name);
        write_json_line(&mut cands, &line)?;
        write_json_line(&mut gt, &MaskLine::from_masks(f.frame_id, &f.gt))?;
    }
    cands.flush()?;
    gt.flush()?;
    let spec_text = serde_json::to_string_pretty(spec).map_err(|e| CliError::input(e.to_string()))?;
    std::fs::write(dir.join(SPEC_FILE), spec_text + "\n")?;

    let lines = |n: u32| u64::from(n);
    inv.files = vec![
        (dir.join(CANDIDATES_FILE), lines(spec.frames)),
        (dir.join(FIRST_MASKS_FILE), 1),
        (dir.join(GT_FILE), lines(spec.frames)),
        (flow_dir, inv.flow_files as u64),
        (dir.join(SPEC_FILE), 1),
    ];
    Ok(inv)
}
