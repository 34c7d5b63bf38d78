//! Segmentation and flow accuracy measures.

mod contours;

pub use contours::{apd, hausdorff, ContourSamples};

use crate::error::Result;
use crate::flow::{InterfaceLaw, PiecewiseVelocity, SolverConfig};
use crate::grid::{ensure_dims, RegionPartition, VectorGrid};

/// `2|A∩B| / (|A|+|B|)` for the pixels carrying `label`; 1 when both are empty.
pub fn dice(a: &RegionPartition, b: &RegionPartition, label: u8) -> Result<f64> {
    ensure_dims(a.dims(), b.dims())?;
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        let (ia, ib) = (la == label, lb == label);
        na += ia as usize;
        nb += ib as usize;
        both += (ia && ib) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Mean and max of `‖v − gt‖` over all pixels, or over the structure pixels
/// (nonzero label) of `mask`.
pub fn endpoint_error(
    v: &VectorGrid,
    gt: &VectorGrid,
    mask: Option<&RegionPartition>,
) -> Result<(f64, f64)> {
    ensure_dims(v.dims(), gt.dims())?;
    if let Some(m) = mask {
        ensure_dims(v.dims(), m.dims())?;
    }
    let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
    for (i, (a, b)) in v.data().iter().zip(gt.data()).enumerate() {
        if mask.is_some_and(|m| m.labels()[i] == 0) {
            continue;
        }
        let e = (*a - *b).norm();
        sum += e;
        max = max.max(e);
        n += 1;
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    Ok((sum / n as f64, max))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalJump {
    /// `|ghost_i(y)·N − ghost_o(x)·N|` under the configured interface law.
    pub max: f64,
    pub mean: f64,
    /// `|(v(y) − v(x))·N|` between the two adjacent pixels.
    pub raw_max: f64,
    pub raw_mean: f64,
}

/// Normal-velocity mismatch over the interface faces of `v.partition`,
/// using its stored normals.
pub fn normal_jump(v: &PiecewiseVelocity, cfg: &SolverConfig) -> NormalJump {
    let part = &v.partition;
    let labels = part.labels();
    let field = v.field.data();
    let law = InterfaceLaw::for_config(cfg);
    let mut out = NormalJump::default();
    let pairs = part.pairs();
    if pairs.is_empty() {
        return out;
    }
    for (pair, &n) in pairs.iter().zip(part.normals()) {
        let (vi, vo) = (field[pair.inner], field[pair.outer]);
        let g = law.ghosts(
            vi,
            vo,
            n,
            cfg.alpha_for(labels[pair.inner]),
            cfg.alpha_for(labels[pair.outer]),
        );
        let j = (g.inner_at_outer.dot(n) - g.outer_at_inner.dot(n)).abs();
        let raw = (vo - vi).dot(n).abs();
        out.max = out.max.max(j);
        out.mean += j;
        out.raw_max = out.raw_max.max(raw);
        out.raw_mean += raw;
    }
    out.mean /= pairs.len() as f64;
    out.raw_mean /= pairs.len() as f64;
    out
}
