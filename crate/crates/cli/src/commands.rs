//! The four subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pcflow::grid::{RegionPartition, ScalarGrid, Vec2, VectorGrid};
use pcflow::io::{self, FGrid};
use pcflow::metrics::{apd, dice, endpoint_error, hausdorff, normal_jump, ContourSamples};
use pcflow::tracker::{initial_levelsets, levelset_normals, track_sequence, TrackResult};
use pcflow::{flow, synth};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::settings::Settings;

pub fn frame_name(prefix: &str, t: usize, ext: &str) -> String {
    format!("{prefix}_{t:04}.{ext}")
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(dir, e.to_string()))
}

struct Outputs<'a> {
    dir: &'a Path,
    manifest: &'a mut RunManifest,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.manifest.outputs.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::input(&p, e.to_string()))
    }
}

fn load_frames(paths: &[PathBuf], manifest: &mut RunManifest) -> Result<Vec<ScalarGrid>> {
    let mut frames = Vec::with_capacity(paths.len());
    for p in paths {
        manifest.add_input(p)?;
        let f = io::read_image(p)?;
        if let Some(first) = frames.first() {
            check_dims(p, (first as &ScalarGrid).dims(), f.dims())?;
        }
        frames.push(f);
    }
    io::normalize_frames(&mut frames);
    Ok(frames)
}

fn check_dims(path: &Path, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(CliError::input(
            path,
            format!("size {}x{} does not match {}x{}", got.0, got.1, expected.0, expected.1),
        ));
    }
    Ok(())
}

fn load_mask(path: &Path, dims: (usize, usize), manifest: &mut RunManifest) -> Result<RegionPartition> {
    manifest.add_input(path)?;
    let m = io::read_mask(path)?;
    check_dims(path, dims, m.dims())?;
    if m.structure_labels().is_empty() {
        return Err(CliError::input(path, "mask has no structure pixels"));
    }
    Ok(m)
}

pub fn synth(settings: &Settings, out: &Path, manifest: &mut RunManifest) -> Result<()> {
    let spec = settings.synth()?;
    let seq = synth::generate(&spec)?;
    create_dir(out)?;
    let mut o = Outputs { dir: out, manifest };
    for (t, f) in seq.frames.iter().enumerate() {
        io::write_pgm(&o.path(&frame_name("frame", t, "pgm")), &io::grid_to_pgm16(f))?;
        io::write_mask(&o.path(&frame_name("gt_mask", t, "pgm")), &seq.gt_regions[t])?;
    }
    for (t, (fwd, back)) in seq.gt_flows.iter().zip(&seq.gt_backward).enumerate() {
        io::write_fgrid(&o.path(&frame_name("gt_flow", t, "fgrid")), &FGrid::from_vector(fwd))?;
        io::write_fgrid(&o.path(&frame_name("gt_backward", t + 1, "fgrid")), &FGrid::from_vector(back))?;
    }
    Ok(())
}

pub fn flow(
    settings: &Settings,
    inputs: [&Path; 3],
    gt: Option<&Path>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let [p0, p1, pm] = inputs;
    let cfg = settings.solver()?;
    let frames = load_frames(&[p0.to_path_buf(), p1.to_path_buf()], manifest)?;
    let mask = load_mask(pm, frames[0].dims(), manifest)?;
    let part = levelset_normals(mask.clone(), &initial_levelsets(&mask)?)?;
    let sol = flow::solve_infinitesimal(&frames[0], &frames[1], &part, None, &cfg)?;
    let v = &sol.velocity;
    let jump = normal_jump(v, &cfg);
    create_dir(out)?;
    let mut o = Outputs { dir: out, manifest };
    io::write_fgrid(&o.path("flow.fgrid"), &FGrid::from_vector(&v.field))?;
    let (w, h) = v.field.dims();
    let colors = io::flow_color(&v.field, settings.flow_color_max());
    io::write_ppm(&o.path("flow.ppm"), w, h, &colors)?;
    let mut report = String::new();
    let _ = writeln!(report, "mode = {}", cfg.mode);
    let _ = writeln!(report, "normal_jump_max = {:e}", jump.max);
    let _ = writeln!(report, "normal_jump_mean = {:e}", jump.mean);
    let _ = writeln!(report, "raw_jump_max = {:e}", jump.raw_max);
    let _ = writeln!(report, "raw_jump_mean = {:e}", jump.raw_mean);
    let _ = writeln!(report, "max_speed = {:e}", v.field.max_norm());
    let _ = writeln!(report, "cg_iterations = {}", sol.cg.iterations);
    let _ = writeln!(report, "cg_converged = {}", sol.cg.converged);
    let _ = writeln!(report, "cg_final_residual = {:e}", sol.cg.final_residual());
    if let Some(gt) = gt {
        o.manifest.add_input(gt)?;
        let g = io::read_fgrid(gt)?
            .to_vector()
            .map_err(|m| CliError::input(gt, m))?;
        check_dims(gt, (w, h), g.dims())?;
        let (mean, max) = endpoint_error(&v.field, &g, None)?;
        let _ = writeln!(report, "ee_mean = {mean:e}");
        let _ = writeln!(report, "ee_max = {max:e}");
    }
    o.text("jump.txt", &report)
}

fn track_outputs(o: &mut Outputs<'_>, t: usize, frame: &ScalarGrid, res: &TrackResult) -> Result<()> {
    io::write_mask(&o.path(&frame_name("mask", t, "pgm")), &res.final_region)?;
    io::write_fgrid(&o.path(&frame_name("psi", t, "fgrid")), &FGrid::from_scalar(&res.psi_final))?;
    io::write_fgrid(&o.path(&frame_name("bmap", t, "fgrid")), &FGrid::from_vector(&res.backward_map))?;
    let (w, h) = frame.dims();
    io::write_ppm(
        &o.path(&frame_name("overlay", t, "ppm")),
        w,
        h,
        &io::mask_overlay(frame, &res.final_region),
    )?;
    let mut diag = String::from(
        "iteration\tresidual\tarea\tnormal_jump_max\tregion_change\tarea_change\tcg_iterations\tcg_converged\tsubsteps\n",
    );
    for d in &res.diagnostics {
        let _ = writeln!(
            diag,
            "{}\t{:.6e}\t{}\t{:.6e}\t{}\t{:.6e}\t{}\t{}\t{}",
            d.iteration,
            d.residual,
            d.area,
            d.normal_jump_max,
            d.region_change,
            d.area_change,
            d.cg_iterations,
            d.cg_converged,
            d.substeps
        );
    }
    o.text(&frame_name("diag", t, "tsv"), &diag)
}

pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| CliError::Usage(format!("bad glob `{pattern}`: {e}")))?;
    let mut out: Vec<PathBuf> = paths
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::input(e.path().to_path_buf(), e.error().to_string()))?;
    out.sort();
    Ok(out)
}

pub fn track(settings: &Settings, pattern: &str, mask: &Path, out: &Path, manifest: &mut RunManifest) -> Result<()> {
    let cfg = settings.track()?;
    let paths = expand_glob(pattern)?;
    if paths.len() < 2 {
        return Err(CliError::input(
            pattern,
            format!("tracking needs at least 2 frames, found {}", paths.len()),
        ));
    }
    let frames = load_frames(&paths, manifest)?;
    let r0 = load_mask(mask, frames[0].dims(), manifest)?;
    let seq = track_sequence(&frames, &r0, &cfg)?;
    create_dir(out)?;
    let mut o = Outputs { dir: out, manifest };
    io::write_mask(&o.path(&frame_name("mask", 0, "pgm")), &r0)?;
    let psi0 = initial_levelsets(&r0)?;
    let (w, h) = r0.dims();
    let union = ScalarGrid::from_fn(w, h, |x, y| psi0.iter().map(|(_, p)| p.get(x, y)).fold(f64::INFINITY, f64::min));
    io::write_fgrid(&o.path(&frame_name("psi", 0, "fgrid")), &FGrid::from_scalar(&union))?;
    io::write_ppm(&o.path(&frame_name("overlay", 0, "ppm")), w, h, &io::mask_overlay(&frames[0], &r0))?;
    let mut table = String::from("frame\titerations\tconverged\tresidual_initial\tresidual_final\tnormal_jump_max\n");
    for (k, res) in seq.transitions.iter().enumerate() {
        let t = k + 1;
        track_outputs(&mut o, t, &frames[t], res)?;
        let jmax = res.diagnostics.iter().map(|d| d.normal_jump_max).fold(0.0, f64::max);
        let _ = writeln!(
            table,
            "{t}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}",
            res.iterations_used,
            res.converged,
            res.residual_trace[0],
            res.residual_trace.last().copied().unwrap_or(f64::NAN),
            jmax
        );
    }
    o.text("frames.tsv", &table)?;
    match seq.failure {
        None => Ok(()),
        Some((t, e)) => {
            o.manifest.status = format!("failed at frame {}: {e}", t + 1);
            Err(CliError::Core(e))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub frame: usize,
    pub dice: f64,
    pub apd: f64,
    pub hd: f64,
    pub ee_mean: f64,
    pub ee_max: f64,
    pub normal_jump_max: f64,
}

pub const EVAL_COLUMNS: [&str; 7] = ["frame", "dice", "apd", "hd", "ee_mean", "ee_max", "normal_jump_max"];

fn binary(part: &RegionPartition) -> RegionPartition {
    let labels = part.labels().iter().map(|&l| u8::from(l != 0)).collect();
    RegionPartition::new(part.width(), part.height(), labels).expect("same shape")
}

fn numbered(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<usize>> {
    let pattern = dir.join(format!("{prefix}_*.{ext}"));
    let mut out = Vec::new();
    for p in expand_glob(&pattern.to_string_lossy())? {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if let Some(n) = stem.strip_prefix(&format!("{prefix}_")).and_then(|n| n.parse().ok()) {
            out.push(n);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn read_jumps(dir: &Path) -> Vec<(usize, f64)> {
    let Ok(text) = std::fs::read_to_string(dir.join("frames.tsv")) else {
        return Vec::new();
    };
    text.lines()
        .skip(1)
        .filter_map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            Some((cols.first()?.parse().ok()?, cols.get(5)?.parse().ok()?))
        })
        .collect()
}

fn shape_distances(a: &RegionPartition, b: &RegionPartition) -> (f64, f64) {
    match (ContourSamples::from_mask(a, 1), ContourSamples::from_mask(b, 1)) {
        (Ok(ca), Ok(cb)) => (apd(&ca, &cb), hausdorff(&ca, &cb)),
        _ => (f64::NAN, f64::NAN),
    }
}

pub fn evaluate(result: &Path, gt: &Path, manifest: &mut RunManifest) -> Result<Vec<EvalRow>> {
    let frames = numbered(result, "mask", "pgm")?;
    let gt_frames = numbered(gt, "gt_mask", "pgm")?;
    if frames.is_empty() {
        return Err(CliError::input(result, "no mask_XXXX.pgm files"));
    }
    if frames.len() != gt_frames.len() {
        return Err(CliError::input(
            gt,
            format!(
                "frame count mismatch: {} result masks, {} ground-truth masks",
                frames.len(),
                gt_frames.len()
            ),
        ));
    }
    let jumps = read_jumps(result);
    let mut rows = Vec::with_capacity(frames.len());
    for &t in &frames {
        let rp = result.join(frame_name("mask", t, "pgm"));
        let gp = gt.join(frame_name("gt_mask", t, "pgm"));
        if !gp.exists() {
            return Err(CliError::input(&gp, format!("missing ground truth for frame {t}")));
        }
        manifest.add_input(&rp)?;
        manifest.add_input(&gp)?;
        let a = binary(&io::read_mask(&rp)?);
        let b = binary(&io::read_mask(&gp)?);
        check_dims(&gp, a.dims(), b.dims())?;
        let d = dice(&a, &b, 1)?;
        let (apd, hd) = shape_distances(&a, &b);
        let (mut ee_mean, mut ee_max) = (f64::NAN, f64::NAN);
        let bp = result.join(frame_name("bmap", t, "fgrid"));
        let gbp = gt.join(frame_name("gt_backward", t, "fgrid"));
        if bp.exists() && gbp.exists() {
            manifest.add_input(&bp)?;
            manifest.add_input(&gbp)?;
            let map = io::read_fgrid(&bp)?.to_vector().map_err(|m| CliError::input(&bp, m))?;
            let g = io::read_fgrid(&gbp)?.to_vector().map_err(|m| CliError::input(&gbp, m))?;
            check_dims(&gbp, map.dims(), g.dims())?;
            let (w, h) = map.dims();
            let est = VectorGrid::from_fn(w, h, |x, y| Vec2::new(x as f64, y as f64) - map.get(x, y));
            (ee_mean, ee_max) = endpoint_error(&est, &g, None)?;
        }
        let normal_jump_max = jumps
            .iter()
            .find(|(f, _)| *f == t)
            .map_or(f64::NAN, |(_, j)| *j);
        rows.push(EvalRow {
            frame: t,
            dice: d,
            apd,
            hd,
            ee_mean,
            ee_max,
            normal_jump_max,
        });
    }
    Ok(rows)
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Tab-separated table, one row per frame and a closing `mean±std` row.
pub fn eval_table(rows: &[EvalRow]) -> String {
    let mut out = EVAL_COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4e}",
            r.frame, r.dice, r.apd, r.hd, r.ee_mean, r.ee_max, r.normal_jump_max
        );
    }
    let cols: [fn(&EvalRow) -> f64; 6] = [
        |r| r.dice,
        |r| r.apd,
        |r| r.hd,
        |r| r.ee_mean,
        |r| r.ee_max,
        |r| r.normal_jump_max,
    ];
    out.push_str("summary");
    for c in cols {
        let (m, s) = mean_std(rows.iter().map(c));
        let _ = write!(out, "\t{m:.4}±{s:.4}");
    }
    out.push('\n');
    out
}

pub fn eval(result: &Path, gt: &Path, out: &Path, manifest: &mut RunManifest) -> Result<String> {
    let rows = evaluate(result, gt, manifest)?;
    let table = eval_table(&rows);
    create_dir(out)?;
    let mut o = Outputs { dir: out, manifest };
    o.text("eval.tsv", &table)?;
    Ok(table)
}
