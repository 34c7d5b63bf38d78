use super::{ensure_dims, Vec2};
use crate::error::{Error, Result};

/// Offsets of the four neighbours: left, right, up, down.
pub const NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

const NO_FACE: u32 = u32::MAX;

/// A 4-neighbour pixel pair straddling a label boundary. `inner` carries the
/// higher label (the structure side), `outer` the lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfacePair {
    pub inner: usize,
    pub outer: usize,
}

/// Label map plus the derived interface faces and their unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    pairs: Vec<InterfacePair>,
    normals: Vec<Vec2>,
    faces: Vec<[u32; 4]>,
}

impl RegionPartition {
    /// Builds the partition; normals default to the axis direction from
    /// `inner` to `outer` until replaced by [`Self::set_normals`].
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "label map has {} entries, expected {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        let mut pairs = Vec::new();
        let mut faces = vec![[NO_FACE; 4]; labels.len()];
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                // right (dir 1 from i, dir 0 from j) and down (dir 3 / dir 2)
                for (j, di, dj) in [
                    ((x + 1 < width).then(|| i + 1), 1usize, 0usize),
                    ((y + 1 < height).then(|| i + width), 3, 2),
                ] {
                    let Some(j) = j else { continue };
                    if labels[i] == labels[j] {
                        continue;
                    }
                    let k = pairs.len() as u32;
                    let (inner, outer) = if labels[i] > labels[j] {
                        (i, j)
                    } else {
                        (j, i)
                    };
                    pairs.push(InterfacePair { inner, outer });
                    faces[i][di] = k;
                    faces[j][dj] = k;
                }
            }
        }
        let normals = pairs
            .iter()
            .map(|p| axis_direction(width, p.inner, p.outer))
            .collect();
        Ok(RegionPartition {
            width,
            height,
            labels,
            pairs,
            normals,
            faces,
        })
    }

    pub fn uniform(width: usize, height: usize, label: u8) -> Self {
        Self::new(width, height, vec![label; width * height]).expect("sizes agree")
    }

    /// Label 1 where `mask` is true, 0 elsewhere.
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Result<Self> {
        Self::new(width, height, mask.iter().map(|&b| u8::from(b)).collect())
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

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn pairs(&self) -> &[InterfacePair] {
        &self.pairs
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    /// Replaces the per-pair normals. Each must be unit length to 1e-9.
    pub fn set_normals(&mut self, normals: Vec<Vec2>) -> Result<()> {
        if normals.len() != self.pairs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} interface pairs",
                normals.len(),
                self.pairs.len()
            )));
        }
        if let Some(n) = normals.iter().find(|n| (n.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "interface normal ({}, {}) is not unit length",
                n.x, n.y
            )));
        }
        self.normals = normals;
        Ok(())
    }

    pub fn with_normals(mut self, normals: Vec<Vec2>) -> Result<Self> {
        self.set_normals(normals)?;
        Ok(self)
    }

    /// Index of the interface pair on face `dir` (see [`NEIGHBORS`]) of pixel `i`.
    pub fn face(&self, i: usize, dir: usize) -> Option<usize> {
        let k = self.faces[i][dir];
        (k != NO_FACE).then_some(k as usize)
    }

    /// Neighbour of pixel `i` in direction `dir`, if inside the grid.
    pub fn neighbor(&self, i: usize, dir: usize) -> Option<usize> {
        neighbor(self.width, self.height, i, dir)
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Distinct nonzero labels in ascending order.
    pub fn structure_labels(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    /// Number of pixels whose label differs between the two partitions.
    pub fn symmetric_difference(&self, other: &RegionPartition) -> Result<usize> {
        ensure_dims(self.dims(), other.dims())?;
        Ok(self
            .labels
            .iter()
            .zip(&other.labels)
            .filter(|(a, b)| a != b)
            .count())
    }

    pub fn mask(&self, label: u8) -> Vec<bool> {
        self.labels.iter().map(|&l| l == label).collect()
    }
}

pub(crate) fn neighbor(width: usize, height: usize, i: usize, dir: usize) -> Option<usize> {
    let (dx, dy) = NEIGHBORS[dir];
    let x = (i % width) as isize + dx;
    let y = (i / width) as isize + dy;
    if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
        return None;
    }
    Some(y as usize * width + x as usize)
}

pub(crate) fn axis_direction(width: usize, from: usize, to: usize) -> Vec2 {
    let dx = (to % width) as f64 - (from % width) as f64;
    let dy = (to / width) as f64 - (from / width) as f64;
    Vec2::new(dx, dy)
}
