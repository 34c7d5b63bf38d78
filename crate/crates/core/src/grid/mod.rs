//! Structured-grid primitives.
//!
//! Pixel `(x, y)` is column `x`, row `y`, stored row-major. Spacing is one
//! pixel in both axes; pixel centres sit at integer coordinates.

pub mod contour;
mod distance;
mod normals;
mod partition;

pub use distance::{reinitialize, signed_distance};
pub use normals::normals_from_levelset;
pub use partition::{InterfacePair, RegionPartition, NEIGHBORS};

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// `(self·n) n`, assuming `n` is unit length.
    pub fn along(self, n: Vec2) -> Vec2 {
        n * self.dot(n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

const UNIT_TOL: f64 = 1e-6;

fn check_unit(n: Vec2) -> Result<()> {
    if (n.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!(
            "normal ({}, {}) is not unit length",
            n.x, n.y
        )));
    }
    Ok(())
}

/// Normal component `(v·N) N`.
pub fn project_normal(v: Vec2, n: Vec2) -> Result<Vec2> {
    check_unit(n)?;
    Ok(v.along(n))
}

/// Tangential component `v − (v·N) N`.
pub fn project_tangent(v: Vec2, n: Vec2) -> Result<Vec2> {
    check_unit(n)?;
    Ok(v - v.along(n))
}

/// 2D raster of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "grid data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at pixel ({}, {})",
                i % width.max(1),
                i / width.max(1)
            )));
        }
        Ok(ScalarGrid {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        ScalarGrid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> f64 + Sync + Send,
    ) -> Self {
        let data = exec::map_indexed(width * height, |i| f(i % width, i / width));
        ScalarGrid {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Bilinear interpolation at `p`, clamped to the pixel-centre domain.
    pub fn sample(&self, p: Vec2) -> f64 {
        bilinear_sample(self, p)
    }
}

/// Per-pixel 2-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGrid {
    width: usize,
    height: usize,
    data: Vec<Vec2>,
}

impl VectorGrid {
    pub fn new(width: usize, height: usize, data: Vec<Vec2>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "vector grid has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite vector at pixel ({}, {})",
                i % width.max(1),
                i / width.max(1)
            )));
        }
        Ok(VectorGrid {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, Vec2::ZERO)
    }

    pub fn filled(width: usize, height: usize, v: Vec2) -> Self {
        VectorGrid {
            width,
            height,
            data: vec![v; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> Vec2 + Sync + Send,
    ) -> Self {
        let data = exec::map_indexed(width * height, |i| f(i % width, i / width));
        VectorGrid {
            width,
            height,
            data,
        }
    }

    /// The map sending every pixel to its own centre coordinates.
    pub fn identity_map(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| Vec2::new(x as f64, y as f64))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Vec2] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vec2] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Vec2> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Vec2 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: Vec2) {
        self.data[y * self.width + x] = v;
    }

    pub fn max_norm(&self) -> f64 {
        exec::max_indexed(self.data.len(), |i| self.data[i].norm())
    }

    /// Splits into the two component grids.
    pub fn components(&self) -> (ScalarGrid, ScalarGrid) {
        let xs = self.data.iter().map(|v| v.x).collect();
        let ys = self.data.iter().map(|v| v.y).collect();
        (
            ScalarGrid {
                width: self.width,
                height: self.height,
                data: xs,
            },
            ScalarGrid {
                width: self.width,
                height: self.height,
                data: ys,
            },
        )
    }

    pub fn from_components(x: &ScalarGrid, y: &ScalarGrid) -> Result<Self> {
        ensure_dims(x.dims(), y.dims())?;
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&a, &b)| Vec2::new(a, b))
            .collect();
        Ok(VectorGrid {
            width: x.width,
            height: x.height,
            data,
        })
    }
}

pub(crate) fn ensure_dims(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Bilinear interpolation of the four pixel centres around `p`, with `p`
/// clamped into `[0, w−1] × [0, h−1]` first.
pub fn bilinear_sample(img: &ScalarGrid, p: Vec2) -> f64 {
    let (w, h) = img.dims();
    let px = clamp_coord(p.x, w);
    let py = clamp_coord(p.y, h);
    let x0 = (px.floor() as usize).min(w.saturating_sub(2));
    let y0 = (py.floor() as usize).min(h.saturating_sub(2));
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = px - x0 as f64;
    let fy = py - y0 as f64;
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bot = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    top * (1.0 - fy) + bot * fy
}

pub(crate) fn clamp_coord(c: f64, n: usize) -> f64 {
    if c.is_nan() {
        return 0.0;
    }
    c.clamp(0.0, (n - 1) as f64)
}

/// Spatial gradient that never differences across a label boundary.
///
/// Central differences where both axis neighbours share the pixel's label,
/// one-sided differences where only one does, zero where neither does.
pub fn gradient_region_aware(img: &ScalarGrid, part: &RegionPartition) -> Result<VectorGrid> {
    ensure_dims(img.dims(), part.dims())?;
    let (w, h) = img.dims();
    let labels = part.labels();
    let value = img.data();
    let axis = |i: usize, lo: Option<usize>, hi: Option<usize>| -> f64 {
        let same = |j: Option<usize>| j.filter(|&j| labels[j] == labels[i]);
        match (same(lo), same(hi)) {
            (Some(a), Some(b)) => 0.5 * (value[b] - value[a]),
            (None, Some(b)) => value[b] - value[i],
            (Some(a), None) => value[i] - value[a],
            (None, None) => 0.0,
        }
    };
    Ok(VectorGrid::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let gx = axis(i, (x > 0).then(|| i - 1), (x + 1 < w).then(|| i + 1));
        let gy = axis(i, (y > 0).then(|| i - w), (y + 1 < h).then(|| i + w));
        Vec2::new(gx, gy)
    }))
}

/// Whole-grid gradient: central differences, one-sided at the grid border.
pub fn gradient(img: &ScalarGrid) -> VectorGrid {
    let part = RegionPartition::uniform(img.width(), img.height(), 1);
    gradient_region_aware(img, &part).expect("dimensions match by construction")
}
