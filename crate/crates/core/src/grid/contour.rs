//! Marching-squares extraction of the `{psi ≤ 0}` boundary.

use super::{ScalarGrid, Vec2};

/// Grid edge identifier: `(x, y, vertical)` names the edge leaving pixel
/// `(x, y)` rightwards (`vertical == false`) or downwards.
pub type EdgeKey = (usize, usize, bool);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    pub key_a: EdgeKey,
    pub key_b: EdgeKey,
}

/// Boundary segments, one or two per grid cell the zero level set crosses.
/// Saddle cells are disambiguated by the cell-centre average.
pub fn marching_squares(psi: &ScalarGrid) -> Vec<Segment> {
    let (w, h) = psi.dims();
    let mut out = Vec::new();
    if w < 2 || h < 2 {
        return out;
    }
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
            let vals = corners.map(|(cx, cy)| psi.get(cx, cy));
            let inside = vals.map(|v| v <= 0.0);
            let case = inside
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &b)| acc | (usize::from(b) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // edge k joins corner k and corner k+1 (mod 4)
            let edge = |k: usize| -> (Vec2, EdgeKey) {
                let (p, q) = (k, (k + 1) % 4);
                let (vp, vq) = (vals[p], vals[q]);
                let t = vp / (vp - vq);
                let pp = Vec2::new(corners[p].0 as f64, corners[p].1 as f64);
                let pq = Vec2::new(corners[q].0 as f64, corners[q].1 as f64);
                let key = match k {
                    0 => (x, y, false),
                    1 => (x + 1, y, true),
                    2 => (x, y + 1, false),
                    _ => (x, y, true),
                };
                (pp + (pq - pp) * t, key)
            };
            let mut push = |e0: usize, e1: usize| {
                let (a, ka) = edge(e0);
                let (b, kb) = edge(e1);
                out.push(Segment {
                    a,
                    b,
                    key_a: ka,
                    key_b: kb,
                });
            };
            if case == 5 || case == 10 {
                let centre_inside = vals.iter().sum::<f64>() * 0.25 <= 0.0;
                // isolate the corners whose state differs from the centre
                for k in 0..4 {
                    if inside[k] != centre_inside {
                        push((k + 3) % 4, k);
                    }
                }
                continue;
            }
            let crossing: Vec<usize> = (0..4)
                .filter(|&k| inside[k] != inside[(k + 1) % 4])
                .collect();
            debug_assert_eq!(crossing.len(), 2);
            push(crossing[0], crossing[1]);
        }
    }
    out
}

pub fn zero_crossing_segments(psi: &ScalarGrid) -> Vec<(Vec2, Vec2)> {
    marching_squares(psi)
        .into_iter()
        .map(|s| (s.a, s.b))
        .collect()
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 <= f64::EPSILON {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
