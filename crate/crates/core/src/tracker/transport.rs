//! First-order upwind transport of level sets and backward maps, and
//! warping of the reference frame.

use crate::exec;
use crate::grid::{bilinear_sample, clamp_coord, RegionPartition, ScalarGrid, Vec2, VectorGrid};

/// Largest `‖v‖·dt` a single upwind sub-step may take.
pub const CFL: f64 = 0.5;

/// Number of equal sub-steps that keep `dt·max‖v‖ ≤ CFL`.
pub fn substeps(v: &VectorGrid, dt: f64) -> usize {
    let m = v.max_norm() * dt;
    if m <= CFL {
        1
    } else {
        (m / CFL).ceil() as usize
    }
}

// One-sided difference on the side `v` flows in from. `same` says whether a
// neighbour may be used; a missing upwind neighbour falls back to the other
// side when `fallback` is set, else contributes nothing.
fn upwind(u: impl Fn(usize) -> f64, i: usize, lo: Option<usize>, hi: Option<usize>, vel: f64, fallback: bool) -> f64 {
    let back = lo.map(|j| u(i) - u(j));
    let fwd = hi.map(|j| u(j) - u(i));
    let pick = if vel > 0.0 { (back, fwd) } else { (fwd, back) };
    match pick {
        (Some(d), _) => d,
        (None, Some(d)) if fallback => d,
        _ => 0.0,
    }
}

fn axis_neighbors(w: usize, h: usize, i: usize) -> [Option<usize>; 4] {
    let (x, y) = (i % w, i / w);
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < h).then(|| i + w),
    ]
}

fn step_scalar(u: &[f64], v: &[Vec2], w: usize, h: usize, dt: f64) -> Vec<f64> {
    exec::map_indexed(w * h, |i| {
        let [l, r, t, b] = axis_neighbors(w, h, i);
        let get = |j: usize| u[j];
        let dx = upwind(get, i, l, r, v[i].x, false);
        let dy = upwind(get, i, t, b, v[i].y, false);
        u[i] - dt * (v[i].x * dx + v[i].y * dy)
    })
}

/// One upwind step of `∂τ ψ = −∇ψ·v`. Pixels at the grid border see no
/// inflow from outside.
pub fn transport_scalar(psi: &ScalarGrid, v: &VectorGrid, dt: f64) -> ScalarGrid {
    let (w, h) = psi.dims();
    let data = step_scalar(psi.data(), v.data(), w, h, dt);
    ScalarGrid::new(w, h, data).expect("upwind update of finite data")
}

/// One upwind step of the backward map, componentwise. Differences never
/// cross a label boundary of `part`, falling back to the same-label side.
/// Results are clamped into the image domain.
pub fn transport_map(map: &VectorGrid, v: &VectorGrid, part: &RegionPartition, dt: f64) -> VectorGrid {
    let (w, h) = map.dims();
    let m = map.data();
    let vel = v.data();
    let labels = part.labels();
    let data = exec::map_indexed(w * h, |i| {
        let same = |j: Option<usize>| j.filter(|&j| labels[j] == labels[i]);
        let [l, r, t, b] = axis_neighbors(w, h, i).map(same);
        let comp = |c: fn(Vec2) -> f64| {
            let get = |j: usize| c(m[j]);
            let dx = upwind(get, i, l, r, vel[i].x, true);
            let dy = upwind(get, i, t, b, vel[i].y, true);
            c(m[i]) - dt * (vel[i].x * dx + vel[i].y * dy)
        };
        Vec2::new(
            clamp_coord(comp(|p| p.x), w),
            clamp_coord(comp(|p| p.y), h),
        )
    });
    VectorGrid::new(w, h, data).expect("clamped coordinates are finite")
}

/// Generic entry point mirroring the two transports above; `part` selects
/// the region-aware stencil for vector fields.
pub trait Transport: Sized {
    fn transport(&self, v: &VectorGrid, part: &RegionPartition, dt: f64) -> Self;
}

impl Transport for ScalarGrid {
    fn transport(&self, v: &VectorGrid, _part: &RegionPartition, dt: f64) -> Self {
        transport_scalar(self, v, dt)
    }
}

impl Transport for VectorGrid {
    fn transport(&self, v: &VectorGrid, part: &RegionPartition, dt: f64) -> Self {
        transport_map(self, v, part, dt)
    }
}

/// Transports `field` by the piecewise velocity over pseudo-time `dt`,
/// sub-stepping to respect the CFL bound.
pub fn transport_step<T: Transport>(field: &T, v: &crate::flow::PiecewiseVelocity, dt: f64) -> T {
    let n = substeps(&v.field, dt);
    let sub = dt / n as f64;
    let mut out = field.transport(&v.field, &v.partition, sub);
    for _ in 1..n {
        out = out.transport(&v.field, &v.partition, sub);
    }
    out
}

/// `I(x) = J0(φ⁻¹(x))` by bilinear interpolation.
pub fn warp_image(j0: &ScalarGrid, backward_map: &VectorGrid) -> ScalarGrid {
    let (w, h) = backward_map.dims();
    let m = backward_map.data();
    ScalarGrid::from_fn(w, h, |x, y| bilinear_sample(j0, m[y * w + x]))
}
