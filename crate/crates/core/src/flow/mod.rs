//! Infinitesimal motion between two frames given a region partition.
//!
//! The velocity is solved from `A v = −(J1 − I) ∇I` by conjugate gradient,
//! with `A` one of the four [`Mode`] operators. Inside and outside fields
//! live on one grid, each on its own label's pixels.

mod cg;
mod config;
mod ghost;
mod operator;

pub use cg::{solve_cg, solve_cg_from, CgOutcome};
pub use config::{Mode, SolverConfig, DEFAULT_CG_REL_TOL};
pub use ghost::{ghost_values_hard, ghost_values_soft, Ghosts, InterfaceLaw};
pub use operator::{apply_operator, assemble_rhs, LinearOperator, MotionOperator};

use crate::error::Result;
use crate::grid::{ensure_dims, normals_from_levelset, RegionPartition, ScalarGrid, VectorGrid};

/// Velocity `v_i` on structure pixels and `v_o` on background pixels,
/// together with the partition that says which is which.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseVelocity {
    pub field: VectorGrid,
    pub partition: RegionPartition,
}

impl PiecewiseVelocity {
    pub fn new(field: VectorGrid, partition: RegionPartition) -> Result<Self> {
        ensure_dims(partition.dims(), field.dims())?;
        Ok(PiecewiseVelocity { field, partition })
    }

    pub fn zeros(partition: RegionPartition) -> Self {
        let (w, h) = partition.dims();
        PiecewiseVelocity {
            field: VectorGrid::zeros(w, h),
            partition,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub velocity: PiecewiseVelocity,
    pub cg: CgOutcome,
}

/// Solves for the velocity taking `img` towards `next` on `part`.
///
/// When `psi` is given the interface normals are recomputed from its
/// gradient; otherwise the partition's stored normals are used.
pub fn solve_infinitesimal(
    img: &ScalarGrid,
    next: &ScalarGrid,
    part: &RegionPartition,
    psi: Option<&ScalarGrid>,
    cfg: &SolverConfig,
) -> Result<FlowSolution> {
    solve_infinitesimal_from(img, next, part, psi, cfg, None)
}

/// [`solve_infinitesimal`] with CG started from `guess`.
pub fn solve_infinitesimal_from(
    img: &ScalarGrid,
    next: &ScalarGrid,
    part: &RegionPartition,
    psi: Option<&ScalarGrid>,
    cfg: &SolverConfig,
    guess: Option<&VectorGrid>,
) -> Result<FlowSolution> {
    if let Some(g) = guess {
        ensure_dims(part.dims(), g.dims())?;
    }
    ensure_dims(part.dims(), img.dims())?;
    ensure_dims(img.dims(), next.dims())?;
    let mut part = part.clone();
    if let Some(psi) = psi {
        ensure_dims(part.dims(), psi.dims())?;
        let normals = normals_from_levelset(psi, part.pairs());
        part.set_normals(normals)?;
    }
    let op = MotionOperator::new(img, &part, cfg)?;
    let b = op.rhs(img, next)?;
    let max_iter = cfg.max_iter_for(2 * b.len());
    let x0 = guess.map(|g| g.data());
    let cg = solve_cg_from(&op, b.data(), x0, cfg.cg_rel_tol, max_iter)?;
    let (w, h) = part.dims();
    let field = VectorGrid::new(w, h, cg.solution.clone())?;
    Ok(FlowSolution {
        velocity: PiecewiseVelocity {
            field,
            partition: part,
        },
        cg,
    })
}
