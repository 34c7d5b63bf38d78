//! Raster and float-grid file formats.
//!
//! - PGM `P5`, 8- or 16-bit, for images and label masks.
//! - PPM `P6`, 8-bit, for flow colour coding and overlays.
//! - `FGRID`: a three-line text header (`FGRID`, `width height`, `channels`)
//!   followed by row-major little-endian `f32` samples, channels interleaved.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{RegionPartition, ScalarGrid, Vec2, VectorGrid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .filter(|t| !t.is_empty())
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad or missing {what}"))
    }
}

/// Parses a binary `P5` graymap.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Pgm, String> {
    let mut r = HeaderReader { bytes, pos: 0 };
    if r.token() != Some("P5") {
        return Err("not a binary PGM (expected P5)".into());
    }
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // exactly one whitespace byte before the raster
    let start = r.pos + 1;
    let n = width * height;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    if bytes.len() < start + need {
        return Err(format!("truncated raster: need {need} bytes"));
    }
    let raster = &bytes[start..start + need];
    let data = if wide {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster.iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

pub fn encode_pgm(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        for &v in &pgm.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(pgm.data.iter().map(|&v| v as u8));
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    decode_pgm(&read_bytes(path)?).map_err(|m| Error::parse(path, m))
}

pub fn write_pgm(path: &Path, pgm: &Pgm) -> Result<()> {
    write_bytes(path, &encode_pgm(pgm))
}

/// Raw intensities divided by `maxval`.
pub fn pgm_to_grid(pgm: &Pgm) -> ScalarGrid {
    let scale = 1.0 / pgm.maxval as f64;
    ScalarGrid::new(
        pgm.width,
        pgm.height,
        pgm.data.iter().map(|&v| v as f64 * scale).collect(),
    )
    .expect("finite")
}

/// Quantizes `[0, 1]` intensities (clamped) to a 16-bit graymap.
pub fn grid_to_pgm16(img: &ScalarGrid) -> Pgm {
    Pgm {
        width: img.width(),
        height: img.height(),
        maxval: 65535,
        data: img
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect(),
    }
}

/// Min–max normalization of a sequence using the first frame's range, with
/// the same affine map for every frame and results clamped to `[0, 1]`.
pub fn normalize_frames(frames: &mut [ScalarGrid]) {
    let Some(first) = frames.first() else { return };
    let (lo, hi) = first.min_max();
    let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
    for f in frames.iter_mut() {
        for v in f.data_mut() {
            *v = ((*v - lo) * scale).clamp(0.0, 1.0);
        }
    }
}

pub fn read_image(path: &Path) -> Result<ScalarGrid> {
    Ok(pgm_to_grid(&read_pgm(path)?))
}

/// Label mask from a graymap: zero is background, distinct nonzero grey
/// levels become labels `1, 2, …` in increasing order.
pub fn read_mask(path: &Path) -> Result<RegionPartition> {
    let pgm = read_pgm(path)?;
    let mut levels: Vec<u16> = pgm.data.iter().copied().filter(|&v| v != 0).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() > 255 {
        return Err(Error::parse(path, "more than 255 labels"));
    }
    let labels = pgm
        .data
        .iter()
        .map(|&v| {
            if v == 0 {
                0
            } else {
                levels.binary_search(&v).unwrap() as u8 + 1
            }
        })
        .collect();
    RegionPartition::new(pgm.width, pgm.height, labels)
        .map_err(|e| Error::parse(path, e.to_string()))
}

/// Inverse of [`read_mask`]: labels spread over `0..=255`.
pub fn mask_to_pgm(part: &RegionPartition) -> Pgm {
    let max = part.labels().iter().copied().max().unwrap_or(0).max(1) as u32;
    Pgm {
        width: part.width(),
        height: part.height(),
        maxval: 255,
        data: part
            .labels()
            .iter()
            .map(|&l| ((l as u32 * 255) / max) as u16)
            .collect(),
    }
}

pub fn write_mask(path: &Path, part: &RegionPartition) -> Result<()> {
    write_pgm(path, &mask_to_pgm(part))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FGrid {
    pub fn from_scalar(g: &ScalarGrid) -> Self {
        FGrid {
            width: g.width(),
            height: g.height(),
            channels: 1,
            data: g.data().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_vector(g: &VectorGrid) -> Self {
        FGrid {
            width: g.width(),
            height: g.height(),
            channels: 2,
            data: g
                .data()
                .iter()
                .flat_map(|v| [v.x as f32, v.y as f32])
                .collect(),
        }
    }

    pub fn to_scalar(&self) -> std::result::Result<ScalarGrid, String> {
        if self.channels != 1 {
            return Err(format!("expected 1 channel, found {}", self.channels));
        }
        ScalarGrid::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| v as f64).collect(),
        )
        .map_err(|e| e.to_string())
    }

    pub fn to_vector(&self) -> std::result::Result<VectorGrid, String> {
        if self.channels != 2 {
            return Err(format!("expected 2 channels, found {}", self.channels));
        }
        let data = self
            .data
            .chunks_exact(2)
            .map(|c| Vec2::new(c[0] as f64, c[1] as f64))
            .collect();
        VectorGrid::new(self.width, self.height, data).map_err(|e| e.to_string())
    }
}

pub fn encode_fgrid(g: &FGrid) -> Vec<u8> {
    let mut out = format!("FGRID\n{} {}\n{}\n", g.width, g.height, g.channels).into_bytes();
    for v in &g.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fgrid(bytes: &[u8]) -> std::result::Result<FGrid, String> {
    let mut lines = 0;
    let mut pos = 0;
    while lines < 3 {
        let nl = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or("truncated FGRID header")?;
        pos += nl + 1;
        lines += 1;
    }
    let header = std::str::from_utf8(&bytes[..pos]).map_err(|_| "FGRID header is not text")?;
    let mut it = header.lines();
    if it.next() != Some("FGRID") {
        return Err("missing FGRID magic".into());
    }
    let dims: Vec<usize> = it
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad dimension `{t}`")))
        .collect::<std::result::Result<_, _>>()?;
    let [width, height] = dims[..] else {
        return Err("expected `width height`".into());
    };
    let channels: usize = it
        .next()
        .unwrap_or("")
        .trim()
        .parse()
        .map_err(|_| "bad channel count")?;
    if channels != 1 && channels != 2 {
        return Err(format!("unsupported channel count {channels}"));
    }
    let n = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() != 4 * n {
        return Err(format!(
            "expected {} data bytes, found {}",
            4 * n,
            payload.len()
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FGrid {
        width,
        height,
        channels,
        data,
    })
}

pub fn read_fgrid(path: &Path) -> Result<FGrid> {
    decode_fgrid(&read_bytes(path)?).map_err(|m| Error::parse(path, m))
}

pub fn write_fgrid(path: &Path, g: &FGrid) -> Result<()> {
    write_bytes(path, &encode_fgrid(g))
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    write_bytes(path, &encode_ppm(width, height, rgb))
}

fn color_wheel() -> Vec<[f64; 3]> {
    const RY: usize = 15;
    const YG: usize = 6;
    const GC: usize = 4;
    const CB: usize = 11;
    const BM: usize = 13;
    const MR: usize = 6;
    let ramp = |i: usize, n: usize| (255 * i / n) as f64;
    let mut wheel = Vec::with_capacity(RY + YG + GC + CB + BM + MR);
    wheel.extend((0..RY).map(|i| [255.0, ramp(i, RY), 0.0]));
    wheel.extend((0..YG).map(|i| [255.0 - ramp(i, YG), 255.0, 0.0]));
    wheel.extend((0..GC).map(|i| [0.0, 255.0, ramp(i, GC)]));
    wheel.extend((0..CB).map(|i| [0.0, 255.0 - ramp(i, CB), 255.0]));
    wheel.extend((0..BM).map(|i| [ramp(i, BM), 0.0, 255.0]));
    wheel.extend((0..MR).map(|i| [255.0, 0.0, 255.0 - ramp(i, MR)]));
    wheel
}

/// Middlebury colour coding: hue from direction, saturation from magnitude
/// relative to `max_magnitude` (the field's own maximum when `None`).
pub fn flow_color(flow: &VectorGrid, max_magnitude: Option<f64>) -> Vec<[u8; 3]> {
    let wheel = color_wheel();
    let ncols = wheel.len();
    let max = max_magnitude.unwrap_or_else(|| flow.max_norm());
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    flow.data()
        .iter()
        .map(|v| {
            let (u, w) = (v.x * scale, v.y * scale);
            let rad = u.hypot(w);
            let a = (-w).atan2(-u) / std::f64::consts::PI;
            let fk = (a + 1.0) / 2.0 * (ncols - 1) as f64;
            let k0 = (fk.floor() as usize).min(ncols - 1);
            let k1 = (k0 + 1) % ncols;
            let f = fk - k0 as f64;
            let mut px = [0u8; 3];
            for c in 0..3 {
                let col = (1.0 - f) * wheel[k0][c] / 255.0 + f * wheel[k1][c] / 255.0;
                let col = if rad <= 1.0 {
                    1.0 - rad * (1.0 - col)
                } else {
                    col * 0.75
                };
                px[c] = (255.0 * col).floor().clamp(0.0, 255.0) as u8;
            }
            px
        })
        .collect()
}

/// Greyscale image with the boundary pixels of every structure painted red.
pub fn mask_overlay(img: &ScalarGrid, part: &RegionPartition) -> Vec<[u8; 3]> {
    let mut rgb: Vec<[u8; 3]> = img
        .data()
        .iter()
        .map(|&v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g]
        })
        .collect();
    for p in part.pairs() {
        rgb[p.inner] = [255, 0, 0];
    }
    rgb
}
