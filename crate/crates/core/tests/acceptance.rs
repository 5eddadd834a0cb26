//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use common::{dense, dense_iou, dense_warp, nms_reference, random_boxes, random_mask};
use ovslink::cascade::{run_sequence, AssocPath, CascadeConfig};
use ovslink::cli::{
    cmd_ablate, cmd_bench, load_sequences, read_report, regression_gate, run_manifest, write_scene,
    write_report, AblateArgs, BenchArgs, GlobalOpts, RunManifest,
};
use ovslink::eval::{contour_f, dataset_score, jaccard, score_sequence, EvalFrame};
use ovslink::flow::{warp_mask, FlowField};
use ovslink::maskcore::{mask_iou, nms, BitMask, PixelRect};
use ovslink::reid::{triplet_loss, triplet_loss_grad, TripletBatch};
use ovslink::simulator::{generate, preset, DetectorModel, SimSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Runs `f` and returns its result with the peak heap growth it caused.
fn peak_growth<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let base = CURRENT.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let out = f();
    (out, PEAK.load(Ordering::Relaxed).saturating_sub(base))
}

type Outcome = Result<String, String>;

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let e = started.elapsed();
    if e > limit {
        Err(format!("took {:.1}s, limit {:.0}s", e.as_secs_f64(), limit.as_secs_f64()))
    } else {
        Ok(())
    }
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for (w, h) in [(8, 8), (64, 64), (512, 512)] {
        for _ in 0..1000 {
            let a = random_mask(&mut rng, w, h);
            let b = random_mask(&mut rng, w, h);
            if mask_iou(&a, &b).unwrap() != dense_iou(&dense(&a), &dense(&b)) {
                mismatches += 1;
            }
        }
    }
    let mut nms_mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(0..=200);
        let boxes = random_boxes(&mut rng, n);
        let (s, t) = (rng.gen_range(0.0..0.5), rng.gen_range(0.1..0.9));
        if nms(&boxes, s, t) != nms_reference(&boxes, s, t) {
            nms_mismatches += 1;
        }
    }
    within(Duration::from_secs(60), t0)?;
    if mismatches + nms_mismatches > 0 {
        return Err(format!("{mismatches} IoU and {nms_mismatches} NMS mismatches"));
    }
    Ok(format!("3000 masks, 1000 NMS sets, 0 mismatches in {:.1}s", t0.elapsed().as_secs_f64()))
}

/// Keeps mining and hinge decisions stable under the finite-difference step.
fn away_from_boundaries(batch: &TripletBatch, alpha: f64, gap: f64) -> bool {
    let Ok(mined) = batch.mine() else { return false };
    if mined.iter().any(|t| t.margin_term(alpha).abs() < gap) {
        return false;
    }
    let f = batch.feats();
    let l = batch.labels();
    let d = |i: usize, j: usize| f[i].iter().zip(&f[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    for t in &mined {
        let a = t.anchor;
        let near_tie = (0..f.len()).filter(|&j| j != a).any(|j| {
            let (best, dj) = if l[j] == l[a] { (t.positive, t.d_ap) } else { (t.negative, t.d_an) };
            j != best && (d(a, j) - dj).abs() < gap
        });
        if near_tie {
            return false;
        }
    }
    true
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (alpha, h, dim) = (1.0, 1e-5, 8);
    let mut worst: f64 = 0.0;
    let mut resampled = 0;
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(8..=32);
        let k = rng.gen_range(2..=4u32);
        let labels: Vec<u32> = (0..n).map(|i| i as u32 % k).collect();
        let feats: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let batch = TripletBatch::new(feats.clone(), labels.clone()).unwrap();
        if !away_from_boundaries(&batch, alpha, 1e-3) {
            resampled += 1;
            continue;
        }
        let analytic = triplet_loss_grad(&batch, alpha).unwrap();
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for c in 0..dim {
                let mut plus = feats.clone();
                plus[i][c] += h;
                let mut minus = feats.clone();
                minus[i][c] -= h;
                let lp = triplet_loss(&TripletBatch::new(plus, labels.clone()).unwrap(), alpha).unwrap();
                let lm = triplet_loss(&TripletBatch::new(minus, labels.clone()).unwrap(), alpha).unwrap();
                let numeric = (lp - lm) / (2.0 * h);
                diff += (analytic[i][c] - numeric).powi(2);
                na += analytic[i][c].powi(2);
                nn += numeric.powi(2);
            }
        }
        let rel = diff.sqrt() / na.sqrt().max(nn.sqrt()).max(1e-12);
        worst = worst.max(rel);
        checked += 1;
    }
    within(Duration::from_secs(60), t0)?;
    if worst >= 1e-5 {
        return Err(format!("max relative error {worst:.3e} >= 1e-5"));
    }
    Ok(format!("100 batches ({resampled} resampled near boundaries), max relative error {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..500 {
        let (w, h) = (rng.gen_range(1..=96), rng.gen_range(1..=96));
        let m = random_mask(&mut rng, w, h);
        if warp_mask(&m, &FlowField::identity(w, h).unwrap()).unwrap() != m {
            bad += 1;
        }
    }
    let mut bad_shift = 0;
    for _ in 0..500 {
        let (w, h) = (rng.gen_range(1..=96), rng.gen_range(1..=96));
        let m = random_mask(&mut rng, w, h);
        let (dx, dy) = (rng.gen_range(-100..=100i64), rng.gen_range(-100..=100i64));
        let warped = warp_mask(&m, &FlowField::constant(w, h, dx as f32, dy as f32).unwrap()).unwrap();
        let n = (w * h) as usize;
        let oracle = dense_warp(&m, &vec![dx as f32; n], &vec![dy as f32; n]);
        if warped != m.translate(-dx, -dy) || dense(&warped) != oracle {
            bad_shift += 1;
        }
    }
    if bad + bad_shift > 0 {
        return Err(format!("{bad} identity and {bad_shift} translation mismatches"));
    }
    Ok("500 identity + 500 translation cases, 0 mismatches".into())
}

/// Ids whose own candidates vanish for a while and then come back.
fn reappearing(seq: &SimSequence) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for &id in seq.first_masks().keys() {
        let seen: Vec<bool> = seq.frames.iter().map(|f| f.candidate_sources.contains(&Some(id))).collect();
        let Some(gap) = (1..seen.len()).find(|&t| seen[t - 1] && !seen[t]) else { continue };
        if seen[gap..].iter().any(|&s| s) {
            out.insert(id, gap);
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let on = CascadeConfig::default();
    let off = CascadeConfig { reid_path_enabled: false, ..CascadeConfig::default() };
    let (mut total, mut recovered) = (0, 0);
    let mut batches = Vec::new();
    for name in ["crossing", "exit-reenter"] {
        for batch in 0..5u64 {
            let (mut s_on, mut s_off) = (Vec::new(), Vec::new());
            for seed in batch * 20..(batch + 1) * 20 {
                let mut spec = preset(name).unwrap();
                spec.seed = seed;
                let seq = generate(&spec).unwrap();
                let r_on = run_sequence(&seq.first_masks(), seq.inputs(), on.clone()).unwrap();
                let r_off = run_sequence(&seq.first_masks(), seq.inputs(), off.clone()).unwrap();
                for (id, gap) in reappearing(&seq) {
                    total += 1;
                    let hit = (gap..seq.frames.len()).any(|t| {
                        let i = r_on.results[t].get(id).unwrap();
                        i.path == AssocPath::Reid && i.matched_candidate.map(|k| seq.frames[t].candidate_sources[k]) == Some(Some(id))
                    });
                    recovered += usize::from(hit);
                }
                let gt = seq.ground_truth();
                let pred = |r: &ovslink::cascade::SequenceRun| -> Vec<EvalFrame> {
                    r.results
                        .iter()
                        .map(|f| EvalFrame {
                            frame: f.frame_id,
                            masks: f.instances.iter().map(|i| (i.id, i.mask.clone())).collect(),
                        })
                        .collect()
                };
                s_on.push(score_sequence(pred(&r_on), gt.clone(), None).unwrap());
                s_off.push(score_sequence(pred(&r_off), gt, None).unwrap());
            }
            batches.push((name, batch, dataset_score(&s_on).2, dataset_score(&s_off).2));
        }
    }
    within(Duration::from_secs(300), t0)?;
    let rate = recovered as f64 / total.max(1) as f64;
    let worst = batches.iter().map(|b| b.2 - b.3).fold(f64::INFINITY, f64::min);
    let losing: Vec<String> = batches.iter().filter(|b| b.2 <= b.3).map(|b| format!("{}#{}", b.0, b.1)).collect();
    let msg = format!(
        "recovered {recovered}/{total} ({:.1}%), min batch G gain {worst:+.4} over {} batches",
        100.0 * rate,
        batches.len()
    );
    if total < 200 || rate < 0.95 || !losing.is_empty() {
        return Err(format!("{msg}; non-improving batches {losing:?}"));
    }
    Ok(msg)
}

fn quiet_out(out: Option<PathBuf>) -> GlobalOpts {
    GlobalOpts { out, quiet: true, ..GlobalOpts::default() }
}

fn criterion_5(tmp: &Path) -> Outcome {
    let suite = tmp.join("suite");
    for name in ["crossing", "exit-reenter"] {
        for seed in 0..3 {
            let mut spec = preset(name).unwrap();
            spec.seed = seed;
            write_scene(&spec, &suite.join(format!("{name}-{seed}"))).map_err(|e| e.to_string())?;
        }
    }
    let args = AblateArgs {
        sequences: suite.clone(),
        rho_reid: vec![2.1, 2.2, 2.3, 2.4, 2.5],
        rho_iou: vec![0.1, 0.2, 0.3, 0.4],
        reid: vec!["on".into()],
        tolerance: None,
    };
    let (a, b) = (tmp.join("ablate_a.csv"), tmp.join("ablate_b.csv"));
    cmd_ablate(&args, &quiet_out(Some(a.clone()))).map_err(|e| e.to_string())?;
    cmd_ablate(&args, &quiet_out(Some(b.clone()))).map_err(|e| e.to_string())?;
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let rows = ta.lines().count() - 1;
    let n = load_sequences(&suite).map_err(|e| e.to_string())?.len();
    if rows != 20 || ta != tb {
        return Err(format!("{rows} rows, identical={}", ta == tb));
    }
    let best = ta.lines().nth(1).unwrap_or_default();
    Ok(format!("20 rows over {n} sequences, byte-identical reruns, best {best}"))
}

fn streaming_scene(frames: u32) -> ovslink::simulator::SceneSpec {
    let mut spec = preset("static").unwrap();
    spec.frames = frames;
    spec.seed = 6;
    spec.detector = DetectorModel { fp_rate: 0.5, jitter: 1, miss_prob: 0.1, ..DetectorModel::default() };
    spec
}

fn criterion_6(tmp: &Path) -> Outcome {
    let mut peaks = Vec::new();
    let mut processed = 0;
    for frames in [1_000u32, 10_000] {
        let dir = tmp.join(format!("stream-{frames}"));
        write_scene(&streaming_scene(frames), &dir).map_err(|e| e.to_string())?;
        let m = RunManifest {
            candidates: dir.join("candidates.jsonl"),
            first_masks: dir.join("first_masks.jsonl"),
            flow_dir: Some(dir.join("flow")),
            config: None,
            out: dir.join("pred.jsonl"),
            dump_masks: None,
            quiet: true,
        };
        let (summary, peak) = peak_growth(|| run_manifest(&m));
        let summary = summary.map_err(|e| e.to_string())?;
        let lines = std::fs::read_to_string(&m.out).unwrap().lines().count() as u64;
        if summary.stats.frames_processed != u64::from(frames) || lines != u64::from(frames) {
            return Err(format!(
                "{frames} frames: processed {} and wrote {lines}",
                summary.stats.frames_processed
            ));
        }
        processed = summary.stats.frames_processed;
        peaks.push(peak);
    }
    let (p1, p10) = (peaks[0], peaks[1]);
    let msg = format!("peak heap growth {} KiB at 1k frames, {} KiB at 10k; {processed} frames visited once", p1 / 1024, p10 / 1024);
    if p10 as f64 > 1.5 * p1 as f64 + 64.0 * 1024.0 {
        return Err(msg);
    }
    Ok(msg)
}

fn criterion_7() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("bench");
    std::fs::create_dir_all(&dir).unwrap();
    let (latest, baseline) = (dir.join("crowd_latest.json"), dir.join("crowd_baseline.json"));
    let args = BenchArgs { preset: Some("crowd".into()), repetitions: 5, ..BenchArgs::default() };
    let report = cmd_bench(&args, &quiet_out(Some(latest.clone()))).map_err(|e| e.to_string())?;
    if !baseline.exists() {
        write_report(&baseline, &report).map_err(|e| e.to_string())?;
    }
    let base = read_report(&baseline).map_err(|e| e.to_string())?;
    let msg = format!(
        "crowd: {} instances, {:.1} candidates/frame, median {:.0} us, p95 {:.0} us (baseline median {:.0} us)",
        report.instances, report.mean_candidates_per_frame, report.median_us, report.p95_us, base.median_us
    );
    if report.median_us >= 5000.0 {
        return Err(format!("{msg}; over the 5000 us budget"));
    }
    regression_gate(&report, &base).map_err(|e| format!("{msg}; {}", e.message))?;
    Ok(msg)
}

fn rect(x0: u32, y0: u32, x1: u32, y1: u32) -> BitMask {
    BitMask::from_rect(10, 10, PixelRect { x0, y0, x1, y1 }).unwrap()
}

fn frame(t: u64, m: BitMask) -> EvalFrame {
    EvalFrame { frame: t, masks: [(1, m)].into_iter().collect() }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for _ in 0..300 {
        let (w, h) = (rng.gen_range(4..=48), rng.gen_range(4..=48));
        let a = random_mask(&mut rng, w, h);
        let b = random_mask(&mut rng, w, h);
        let tol = rng.gen_range(0..4);
        if jaccard(&a, &b).unwrap() != jaccard(&b, &a).unwrap() {
            failures.push("jaccard symmetry");
        }
        if contour_f(&a, &b, tol).unwrap() != contour_f(&b, &a, tol).unwrap() {
            failures.push("contour symmetry");
        }
        if jaccard(&a, &a).unwrap() != 1.0 || contour_f(&a, &a, tol).unwrap() != 1.0 {
            failures.push("perfect match");
        }
        if !a.is_empty() && !b.is_empty() && contour_f(&a, &b, w.max(h)).unwrap() != 1.0 {
            failures.push("tolerance saturation");
        }
    }
    let (l, r) = (rect(0, 0, 3, 3), rect(6, 6, 10, 10));
    if jaccard(&l, &r).unwrap() != 0.0 || contour_f(&l, &r, 1).unwrap() != 0.0 {
        failures.push("disjoint");
    }
    // 4x4 square; frame 1 exact, frame 2 keeps its top half:
    // J = 8/16, boundary precision 6/8, recall 6/12, F = 0.6
    let gt = rect(2, 2, 6, 6);
    let pred = vec![frame(0, rect(0, 0, 1, 1)), frame(1, gt.clone()), frame(2, rect(2, 2, 6, 4))];
    let truth = vec![frame(0, gt.clone()), frame(1, gt.clone()), frame(2, gt)];
    let s = score_sequence(pred, truth, Some(0)).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    if s.frames_scored != 2 || !close(s.j_mean, 0.75) || !close(s.f_mean, 0.8) || !close(s.g_mean, 0.775) {
        failures.push("toy sequence");
    }
    failures.dedup();
    if !failures.is_empty() {
        return Err(format!("failed: {failures:?}"));
    }
    Ok(format!(
        "300 random pairs; toy sequence J={} F={} G={}",
        s.j_mean, s.f_mean, s.g_mean
    ))
}

fn main() {
    let tmp = tempfile::TempDir::new().unwrap();
    let criteria: Vec<(u32, Box<dyn FnOnce() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(|| criterion_5(tmp.path()))),
        (6, Box::new(|| criterion_6(tmp.path()))),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {n}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
