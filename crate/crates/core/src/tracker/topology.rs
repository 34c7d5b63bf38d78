//! Digital-topology guard for level-set updates.
//!
//! Foreground is `{ψ ≤ 0}` with 8-connectivity, background 4-connectivity.

use crate::grid::ScalarGrid;

/// Magnitude a rejected pixel is clamped to, keeping its old sign.
pub const CLAMP: f64 = 1e-4;

// 3×3 ring around the centre, clockwise from the top-left corner
const RING: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

/// Whether flipping the centre pixel preserves topology, given the
/// foreground state of its 8-neighbourhood (out-of-grid cells are
/// background), in [`RING`] order.
pub fn is_simple(ring: [bool; 8]) -> bool {
    // foreground 8-components: every ring cell touches the centre
    let fg = components(ring, true, |a, b| {
        let (pa, pb) = (RING[a], RING[b]);
        (pa.0 - pb.0).abs() <= 1 && (pa.1 - pb.1).abs() <= 1
    });
    if fg.iter().filter(|c| !c.is_empty()).count() != 1 {
        return false;
    }
    // background 4-components that contain a 4-neighbour of the centre
    let bg = components(ring, false, |a, b| {
        let (pa, pb) = (RING[a], RING[b]);
        (pa.0 - pb.0).abs() + (pa.1 - pb.1).abs() == 1
    });
    let touching = bg
        .iter()
        .filter(|c| c.iter().any(|&k| RING[k].0 == 0 || RING[k].1 == 0))
        .count();
    touching == 1
}

fn components(ring: [bool; 8], state: bool, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = [false; 8];
    let mut out = Vec::new();
    for s in 0..8 {
        if ring[s] != state || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let a = comp[k];
            for b in 0..8 {
                if ring[b] == state && !seen[b] && adjacent(a, b) {
                    seen[b] = true;
                    comp.push(b);
                }
            }
            k += 1;
        }
        out.push(comp);
    }
    out
}

fn ring_at(fg: &[bool], w: usize, h: usize, x: usize, y: usize) -> [bool; 8] {
    RING.map(|(dx, dy)| {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && fg[ny as usize * w + nx as usize]
    })
}

/// Rejects sign changes at non-simple points. Pixels are visited in raster
/// order and every accepted flip is visible to later decisions.
pub fn topology_guard(psi_old: &ScalarGrid, psi_new: &ScalarGrid) -> ScalarGrid {
    assert_eq!(psi_old.dims(), psi_new.dims(), "topology_guard: dimension mismatch");
    let (w, h) = psi_old.dims();
    let mut fg: Vec<bool> = psi_old.data().iter().map(|&v| v <= 0.0).collect();
    let mut out = psi_new.clone();
    let data = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let now = data[i] <= 0.0;
            if now == fg[i] {
                continue;
            }
            if is_simple(ring_at(&fg, w, h, x, y)) {
                fg[i] = now;
            } else {
                data[i] = if fg[i] { -CLAMP } else { CLAMP };
            }
        }
    }
    out
}
