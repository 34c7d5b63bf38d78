//! Large-deformation tracking by repeated infinitesimal solves.
//!
//! Each inner iteration solves for the velocity taking the warped reference
//! `I = J0 ∘ φ⁻¹` towards `J1` on the current regions, transports the
//! backward map `φ⁻¹` and every structure's level set by a fraction `dt` of
//! it, and re-warps. Each structure label carries its own level set; the
//! partition is read off as the highest label whose level set is `≤ 0`.

mod topology;
mod transport;

pub use topology::{is_simple, topology_guard, CLAMP};
pub use transport::{substeps, transport_map, transport_scalar, transport_step, warp_image, Transport, CFL};

use crate::error::{Error, Result};
use crate::flow::{solve_infinitesimal_from, SolverConfig};
use crate::grid::{ensure_dims, normals_from_levelset, reinitialize, signed_distance, RegionPartition, ScalarGrid, VectorGrid};
use crate::metrics::normal_jump;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackConfig {
    pub solver: SolverConfig,
    /// Pseudo-time step per inner iteration, as a fraction of the solved flow.
    pub dt: f64,
    pub max_inner_iters: usize,
    /// Sub-pixel region change (px²) below which an iteration counts as
    /// settled; see [`region_change_area`].
    pub converge_tol: f64,
    pub topology_preserve: bool,
    /// Level sets are rebuilt as signed distances every this many
    /// iterations; 0 disables it.
    pub reinit_every: usize,
}

/// Consecutive settled iterations required to stop.
pub const SETTLED_ITERATIONS: usize = 3;

/// Default relative CG tolerance for the inner solves. The outer loop
/// re-solves the remaining misalignment every iteration, so inner solves
/// need far less accuracy than a one-shot flow estimate.
pub const TRACK_CG_REL_TOL: f64 = 1e-2;

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            solver: SolverConfig::default().with_cg(TRACK_CG_REL_TOL, None),
            dt: 0.5,
            max_inner_iters: 200,
            converge_tol: 0.5,
            topology_preserve: true,
            reinit_every: 10,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.converge_tol.is_finite() && self.converge_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "converge_tol must be positive, got {}",
                self.converge_tol
            )));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidConfig("max_inner_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the per-iteration diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationDiag {
    pub iteration: usize,
    /// Mean `|I − J1|` after the iteration's warp.
    pub residual: f64,
    /// Structure pixels after the iteration.
    pub area: usize,
    pub normal_jump_max: f64,
    /// Pixels whose label changed during the iteration.
    pub region_change: usize,
    /// Sub-pixel area swept by the boundaries during the iteration.
    pub area_change: f64,
    pub cg_iterations: usize,
    pub cg_converged: bool,
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub final_region: RegionPartition,
    /// Pointwise minimum of the structure level sets.
    pub psi_final: ScalarGrid,
    /// Level set per structure label, in increasing label order.
    pub psi_structures: Vec<(u8, ScalarGrid)>,
    /// `φ⁻¹`: for each pixel of `J1`, its source coordinates in `J0`.
    pub backward_map: VectorGrid,
    /// `J0 ∘ φ⁻¹`.
    pub warped: ScalarGrid,
    pub iterations_used: usize,
    pub converged: bool,
    /// Mean `|I − J1|` before the first iteration and after each one.
    pub residual_trace: Vec<f64>,
    pub diagnostics: Vec<IterationDiag>,
}

fn mean_abs_diff(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
    let n = a.len().max(1) as f64;
    crate::exec::sum_indexed(a.len(), |i| (a.data()[i] - b.data()[i]).abs()) / n
}

/// Fractional inside coverage of a pixel from a distance-like level set.
fn coverage(psi: f64) -> f64 {
    (0.5 - psi).clamp(0.0, 1.0)
}

/// Symmetric-difference area between two level-set regions, with each pixel
/// counted by its fractional coverage so that sub-pixel boundary motion
/// registers.
pub fn region_change_area(old: &ScalarGrid, new: &ScalarGrid) -> f64 {
    crate::exec::sum_indexed(old.len(), |i| (coverage(new.data()[i]) - coverage(old.data()[i])).abs())
}

fn partition_from(psis: &[(u8, ScalarGrid)], w: usize, h: usize) -> Result<RegionPartition> {
    let labels = crate::exec::map_indexed(w * h, |i| {
        psis.iter()
            .rev()
            .find(|(_, p)| p.data()[i] <= 0.0)
            .map_or(0, |(l, _)| *l)
    });
    RegionPartition::new(w, h, labels)
}

/// Replaces the partition's normals with level-set normals, each interface
/// pair using the level set of its inner (higher) label.
pub fn levelset_normals(mut part: RegionPartition, psis: &[(u8, ScalarGrid)]) -> Result<RegionPartition> {
    let labels = part.labels().to_vec();
    let mut normals = part.normals().to_vec();
    for (label, psi) in psis {
        let idx: Vec<usize> = (0..part.pairs().len())
            .filter(|&k| labels[part.pairs()[k].inner] == *label)
            .collect();
        let sub: Vec<_> = idx.iter().map(|&k| part.pairs()[k]).collect();
        for (k, n) in idx.into_iter().zip(normals_from_levelset(psi, &sub)) {
            normals[k] = n;
        }
    }
    part.set_normals(normals)?;
    Ok(part)
}

fn union_min(psis: &[(u8, ScalarGrid)]) -> ScalarGrid {
    let (w, h) = psis[0].1.dims();
    ScalarGrid::from_fn(w, h, |x, y| {
        psis.iter().map(|(_, p)| p.get(x, y)).fold(f64::INFINITY, f64::min)
    })
}

/// Initial level sets for every structure of `r0`.
pub fn initial_levelsets(r0: &RegionPartition) -> Result<Vec<(u8, ScalarGrid)>> {
    let labels = r0.structure_labels();
    if labels.is_empty() {
        return Err(Error::InvalidArgument("initial mask has no structure pixels".into()));
    }
    labels
        .into_iter()
        .map(|l| Ok((l, signed_distance(r0, l)?)))
        .collect()
}

/// Registers `j0` to `j1` and carries the structures of `r0` along.
pub fn evolve_pair(j0: &ScalarGrid, j1: &ScalarGrid, r0: &RegionPartition, cfg: &TrackConfig) -> Result<TrackResult> {
    ensure_dims(j0.dims(), r0.dims())?;
    evolve_levelsets(j0, j1, initial_levelsets(r0)?, cfg)
}

/// [`evolve_pair`] starting from given per-structure level sets.
pub fn evolve_levelsets(
    j0: &ScalarGrid,
    j1: &ScalarGrid,
    mut psis: Vec<(u8, ScalarGrid)>,
    cfg: &TrackConfig,
) -> Result<TrackResult> {
    cfg.validate()?;
    ensure_dims(j0.dims(), j1.dims())?;
    if psis.is_empty() {
        return Err(Error::InvalidArgument("no structures to track".into()));
    }
    for (_, p) in &psis {
        ensure_dims(j0.dims(), p.dims())?;
    }
    let (w, h) = j0.dims();
    let mut map = VectorGrid::identity_map(w, h);
    let mut warped = j0.clone();
    let mut part = partition_from(&psis, w, h)?;
    for (label, _) in &psis {
        if part.count(*label) == 0 {
            return Err(Error::VanishedRegion { label: *label, iteration: 0 });
        }
    }
    let mut residual_trace = vec![mean_abs_diff(&warped, j1)];
    let mut diagnostics = Vec::new();
    let mut settled = 0;
    let mut converged = false;
    let mut iterations_used = 0;
    let mut guess: Option<VectorGrid> = None;
    for it in 1..=cfg.max_inner_iters {
        iterations_used = it;
        let with_normals = levelset_normals(part.clone(), &psis)?;
        let sol = solve_infinitesimal_from(&warped, j1, &with_normals, None, &cfg.solver, guess.as_ref())?;
        let jump = normal_jump(&sol.velocity, &cfg.solver);
        let v = sol.velocity;
        // what is left of this flow after moving by dt of it
        let keep = (1.0 - cfg.dt).max(0.0);
        guess = Some(VectorGrid::from_fn(w, h, |x, y| v.field.get(x, y) * keep));
        let before: Vec<ScalarGrid> = psis.iter().map(|(_, p)| p.clone()).collect();
        let n_sub = substeps(&v.field, cfg.dt);
        let sub = cfg.dt / n_sub as f64;
        for _ in 0..n_sub {
            // the map uses the partition the velocity was solved on
            map = transport_map(&map, &v.field, &v.partition, sub);
            for (_, psi) in psis.iter_mut() {
                let next = transport_scalar(psi, &v.field, sub);
                *psi = if cfg.topology_preserve {
                    topology_guard(psi, &next)
                } else {
                    next
                };
            }
        }
        let area_change: f64 = before
            .iter()
            .zip(&psis)
            .map(|(a, (_, b))| region_change_area(a, b))
            .sum();
        if cfg.reinit_every > 0 && it % cfg.reinit_every == 0 {
            for (_, psi) in psis.iter_mut() {
                *psi = reinitialize(psi);
            }
        }
        let next_part = partition_from(&psis, w, h)?;
        for (label, _) in &psis {
            if next_part.count(*label) == 0 {
                return Err(Error::VanishedRegion {
                    label: *label,
                    iteration: it,
                });
            }
        }
        let change = part.symmetric_difference(&next_part)?;
        part = next_part;
        warped = warp_image(j0, &map);
        let residual = mean_abs_diff(&warped, j1);
        residual_trace.push(residual);
        diagnostics.push(IterationDiag {
            iteration: it,
            residual,
            area: part.labels().iter().filter(|&&l| l != 0).count(),
            normal_jump_max: jump.max,
            region_change: change,
            area_change,
            cg_iterations: sol.cg.iterations,
            cg_converged: sol.cg.converged,
            substeps: n_sub,
        });
        if area_change < cfg.converge_tol {
            settled += 1;
            if settled >= SETTLED_ITERATIONS {
                converged = true;
                break;
            }
        } else {
            settled = 0;
        }
    }
    let part = levelset_normals(part, &psis)?;
    Ok(TrackResult {
        final_region: part,
        psi_final: union_min(&psis),
        psi_structures: psis,
        backward_map: map,
        warped,
        iterations_used,
        converged,
        residual_trace,
        diagnostics,
    })
}

/// Outcome of a multi-frame run: one result per completed transition and
/// the first failure, if any.
#[derive(Debug)]
pub struct SequenceResult {
    pub transitions: Vec<TrackResult>,
    /// Index `t` of the failed transition `t → t + 1` and its error.
    pub failure: Option<(usize, Error)>,
}

impl SequenceResult {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Region per frame, starting with the initial one.
    pub fn regions<'a>(&'a self, r0: &'a RegionPartition) -> impl Iterator<Item = &'a RegionPartition> + 'a {
        std::iter::once(r0).chain(self.transitions.iter().map(|t| &t.final_region))
    }
}

/// Chains [`evolve_pair`] frame to frame, each transition starting from the
/// previous one's level sets (rebuilt as signed distances).
pub fn track_sequence(frames: &[ScalarGrid], r0: &RegionPartition, cfg: &TrackConfig) -> Result<SequenceResult> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "tracking needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    cfg.validate()?;
    for f in frames {
        ensure_dims(frames[0].dims(), f.dims())?;
    }
    ensure_dims(frames[0].dims(), r0.dims())?;
    let mut psis = initial_levelsets(r0)?;
    let mut transitions = Vec::with_capacity(frames.len() - 1);
    for t in 0..frames.len() - 1 {
        match evolve_levelsets(&frames[t], &frames[t + 1], psis.clone(), cfg) {
            Ok(res) => {
                psis = res
                    .psi_structures
                    .iter()
                    .map(|(l, p)| (*l, reinitialize(p)))
                    .collect();
                transitions.push(res);
            }
            Err(e) => {
                return Ok(SequenceResult {
                    transitions,
                    failure: Some((t, e)),
                })
            }
        }
    }
    Ok(SequenceResult {
        transitions,
        failure: None,
    })
}

#[cfg(test)]
mod tests;
