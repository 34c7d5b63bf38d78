//! Sub-pixel boundary contours and the distances between them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::contour::{marching_squares, point_segment_distance, EdgeKey};
use crate::grid::{RegionPartition, ScalarGrid, Vec2};

/// Closed boundary loops of one region, each an ordered polygon whose
/// consecutive vertices are at most 2 px apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSamples {
    loops: Vec<Vec<Vec2>>,
}

const MAX_SPACING: f64 = 2.0;

impl ContourSamples {
    /// A single closed polygon; long edges are subdivided to keep the
    /// spacing bound.
    pub fn from_points(points: Vec<Vec2>) -> Result<Self> {
        Self::from_loops(vec![points])
    }

    pub fn from_loops(loops: Vec<Vec<Vec2>>) -> Result<Self> {
        if loops.is_empty() {
            return Err(Error::InvalidArgument("contour has no loops".into()));
        }
        let mut out = Vec::with_capacity(loops.len());
        for pts in loops {
            if pts.len() < 3 {
                return Err(Error::InvalidArgument(format!(
                    "contour loop needs at least 3 points, got {}",
                    pts.len()
                )));
            }
            if pts.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidArgument("contour point is not finite".into()));
            }
            out.push(densify(&pts));
        }
        Ok(ContourSamples { loops: out })
    }

    /// Zero crossings of `psi` (inside where `psi ≤ 0`). The field is padded
    /// with an outside border so regions touching the frame still close.
    pub fn from_levelset(psi: &ScalarGrid) -> Result<Self> {
        let (w, h) = psi.dims();
        let (lo, hi) = psi.min_max();
        let pad = hi.abs().max(lo.abs()) + 1.0;
        let padded = ScalarGrid::from_fn(w + 2, h + 2, |x, y| {
            if x == 0 || y == 0 || x == w + 1 || y == h + 1 {
                pad
            } else {
                psi.get(x - 1, y - 1)
            }
        });
        let segs = marching_squares(&padded);
        let loops = chain(&segs)
            .into_iter()
            .map(|l| l.into_iter().map(|p| p - Vec2::new(1.0, 1.0)).collect())
            .collect::<Vec<Vec<Vec2>>>();
        Self::from_loops(loops)
    }

    /// Boundary of the pixels carrying `label`, passing half way between
    /// inside and outside pixel centres.
    pub fn from_mask(part: &RegionPartition, label: u8) -> Result<Self> {
        let (w, h) = part.dims();
        let labels = part.labels();
        if !labels.contains(&label) {
            return Err(Error::DegenerateRegion { label });
        }
        let psi = ScalarGrid::from_fn(w, h, |x, y| {
            if labels[y * w + x] == label {
                -0.5
            } else {
                0.5
            }
        });
        Self::from_levelset(&psi)
    }

    pub fn loops(&self) -> &[Vec<Vec2>] {
        &self.loops
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.loops.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.loops.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn translated(&self, d: Vec2) -> Self {
        ContourSamples {
            loops: self
                .loops
                .iter()
                .map(|l| l.iter().map(|&p| p + d).collect())
                .collect(),
        }
    }

    /// Distance from `p` to the nearest edge of any loop.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let mut best = f64::INFINITY;
        for l in &self.loops {
            for k in 0..l.len() {
                let d = point_segment_distance(p, l[k], l[(k + 1) % l.len()]);
                if d < best {
                    best = d;
                }
            }
        }
        best
    }
}

fn densify(pts: &[Vec2]) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(pts.len());
    for k in 0..pts.len() {
        let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
        out.push(a);
        let n = ((b - a).norm() / MAX_SPACING).ceil() as usize;
        for s in 1..n {
            out.push(a + (b - a) * (s as f64 / n as f64));
        }
    }
    out
}

/// Links marching-squares segments sharing an edge crossing into loops.
fn chain(segs: &[crate::grid::contour::Segment]) -> Vec<Vec<Vec2>> {
    let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, s) in segs.iter().enumerate() {
        by_key.entry(s.key_a).or_default().push(i);
        by_key.entry(s.key_b).or_default().push(i);
    }
    let mut used = vec![false; segs.len()];
    let mut loops = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut pts = vec![segs[start].a];
        let mut key = segs[start].key_b;
        let mut tip = segs[start].b;
        while key != segs[start].key_a {
            pts.push(tip);
            let Some(&next) = by_key[&key].iter().find(|&&j| !used[j]) else {
                break;
            };
            used[next] = true;
            let s = segs[next];
            if s.key_a == key {
                key = s.key_b;
                tip = s.b;
            } else {
                key = s.key_a;
                tip = s.a;
            }
        }
        if pts.len() >= 3 {
            loops.push(pts);
        }
    }
    loops
}

fn directed<F: Fn(f64, f64) -> f64>(
    a: &ContourSamples,
    b: &ContourSamples,
    init: f64,
    fold: F,
) -> f64 {
    a.points().fold(init, |acc, p| fold(acc, b.distance_to(p)))
}

/// Symmetric Hausdorff distance, with point-to-polyline distances.
pub fn hausdorff(a: &ContourSamples, b: &ContourSamples) -> f64 {
    let ab = directed(a, b, 0.0, f64::max);
    let ba = directed(b, a, 0.0, f64::max);
    ab.max(ba)
}

/// Average perpendicular distance: mean over both directions of each
/// sample's distance to the other contour.
pub fn apd(a: &ContourSamples, b: &ContourSamples) -> f64 {
    let ab = directed(a, b, 0.0, |s, d| s + d) / a.len() as f64;
    let ba = directed(b, a, 0.0, |s, d| s + d) / b.len() as f64;
    0.5 * (ab + ba)
}
