use super::partition::axis_direction;
use super::{InterfacePair, ScalarGrid, Vec2};

const FLAT: f64 = 1e-8;

/// Unit normal per interface pair from the level-set gradient, averaged over
/// the two endpoints (central differences, one-sided at the grid border).
/// Where the gradient vanishes the axis direction from `inner` to `outer` is
/// used instead.
pub fn normals_from_levelset(psi: &ScalarGrid, pairs: &[InterfacePair]) -> Vec<Vec2> {
    let w = psi.width();
    pairs
        .iter()
        .map(|p| {
            let g = (central_gradient(psi, p.inner) + central_gradient(psi, p.outer)) * 0.5;
            let len = g.norm();
            if len < FLAT {
                axis_direction(w, p.inner, p.outer)
            } else {
                g * (1.0 / len)
            }
        })
        .collect()
}

fn central_gradient(psi: &ScalarGrid, i: usize) -> Vec2 {
    let (w, h) = psi.dims();
    let (x, y) = (i % w, i / w);
    let d = |lo: Option<f64>, c: f64, hi: Option<f64>| match (lo, hi) {
        (Some(a), Some(b)) => 0.5 * (b - a),
        (None, Some(b)) => b - c,
        (Some(a), None) => c - a,
        (None, None) => 0.0,
    };
    let c = psi.get(x, y);
    let gx = d(
        (x > 0).then(|| psi.get(x - 1, y)),
        c,
        (x + 1 < w).then(|| psi.get(x + 1, y)),
    );
    let gy = d(
        (y > 0).then(|| psi.get(x, y - 1)),
        c,
        (y + 1 < h).then(|| psi.get(x, y + 1)),
    );
    Vec2::new(gx, gy)
}
