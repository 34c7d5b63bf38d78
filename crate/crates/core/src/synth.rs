//! Textured counter-rotating disc sequences with exact ground truth.
//!
//! Frame `t` is frame 0 pulled back through `F_t(p) = c + s^t R(θ t)(p − c)`,
//! where `θ` is the inside rotation for points of the disc and the outside
//! rotation elsewhere. Both regions share the radial scaling, so the normal
//! (radial) velocity is continuous across the disc boundary while the
//! tangential velocity jumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{bilinear_sample, RegionPartition, ScalarGrid, Vec2, VectorGrid};

/// Minimum distance, in pixels, between the disc and the frame border.
pub const MIN_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub disc_center: Vec2,
    pub disc_radius: f64,
    /// Radial scale factor applied per frame.
    pub contraction_per_frame: f64,
    pub rotation_inside_deg: f64,
    pub rotation_outside_deg: f64,
    pub frames: usize,
    pub texture_seed: u64,
    /// Box blur radius in pixels.
    pub texture_smoothing: f64,
    /// Number of times the box blur is applied; three passes are close to a
    /// Gaussian and keep frames smooth enough for bilinear resampling.
    pub texture_passes: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 128,
            height: 128,
            disc_center: Vec2::new(64.0, 64.0),
            disc_radius: 30.0,
            contraction_per_frame: 0.97,
            rotation_inside_deg: 3.0,
            rotation_outside_deg: -3.0,
            frames: 10,
            texture_seed: 1,
            texture_smoothing: 2.0,
            texture_passes: 3,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.width < 8 || self.height < 8 {
            return bad(format!(
                "frame size {}x{} is below 8x8",
                self.width, self.height
            ));
        }
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        if !(self.disc_radius.is_finite() && self.disc_radius > 0.0) {
            return bad(format!("disc radius {} must be positive", self.disc_radius));
        }
        let s = self.contraction_per_frame;
        if !(s > 0.0 && s <= 1.0) {
            return bad(format!("contraction {s} must lie in (0, 1]"));
        }
        if !(self.texture_smoothing.is_finite() && self.texture_smoothing >= 0.0) {
            return bad(format!(
                "texture smoothing {} must be >= 0",
                self.texture_smoothing
            ));
        }
        if !(self.disc_center.is_finite()
            && self.rotation_inside_deg.is_finite()
            && self.rotation_outside_deg.is_finite())
        {
            return bad("disc centre and rotations must be finite".into());
        }
        for t in 0..self.frames {
            let r = self.radius_at(t);
            let c = self.disc_center;
            let margin = (c.x - r)
                .min(c.y - r)
                .min((self.width - 1) as f64 - (c.x + r))
                .min((self.height - 1) as f64 - (c.y + r));
            if margin < MIN_MARGIN {
                return bad(format!(
                    "disc comes within {margin:.2} px of the border at frame {t} (need {MIN_MARGIN})"
                ));
            }
        }
        Ok(())
    }

    pub fn radius_at(&self, t: usize) -> f64 {
        self.disc_radius * self.contraction_per_frame.powi(t as i32)
    }

    fn inside(&self, t: usize, x: Vec2) -> bool {
        (x - self.disc_center).norm() <= self.radius_at(t)
    }

    fn angle(&self, inside: bool) -> f64 {
        if inside {
            self.rotation_inside_deg.to_radians()
        } else {
            self.rotation_outside_deg.to_radians()
        }
    }

    /// `F_t(p)` for a frame-0 point `p`.
    pub fn forward_map(&self, t: usize, p: Vec2) -> Vec2 {
        let th = self.angle(self.inside(0, p)) * t as f64;
        let s = self.contraction_per_frame.powi(t as i32);
        self.disc_center + rotate(p - self.disc_center, th) * s
    }

    /// `F_t⁻¹(x)` for a frame-`t` point `x`.
    pub fn inverse_map(&self, t: usize, x: Vec2) -> Vec2 {
        let th = self.angle(self.inside(t, x)) * t as f64;
        let s = self.contraction_per_frame.powi(-(t as i32));
        self.disc_center + rotate(x - self.disc_center, -th) * s
    }

    /// Displacement of a frame-`t` pixel to its position in frame `t + 1`.
    pub fn forward_displacement(&self, t: usize, x: Vec2) -> Vec2 {
        let th = self.angle(self.inside(t, x));
        let d = x - self.disc_center;
        rotate(d, th) * self.contraction_per_frame - d
    }

    /// `x − F_t(F_{t+1}⁻¹(x))` for a frame-`t + 1` pixel `x`: how far it moved
    /// since frame `t`.
    pub fn backward_displacement(&self, t: usize, x: Vec2) -> Vec2 {
        let th = self.angle(self.inside(t + 1, x));
        let d = x - self.disc_center;
        d - rotate(d, -th) * (1.0 / self.contraction_per_frame)
    }

    pub fn region_at(&self, t: usize) -> RegionPartition {
        let (w, h) = (self.width, self.height);
        let labels = exec::map_indexed(w * h, |i| {
            u8::from(self.inside(t, Vec2::new((i % w) as f64, (i / w) as f64)))
        });
        RegionPartition::new(w, h, labels).expect("labels sized to the frame")
    }
}

fn rotate(v: Vec2, th: f64) -> Vec2 {
    let (s, c) = th.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

#[derive(Debug, Clone)]
pub struct SynthSequence {
    pub frames: Vec<ScalarGrid>,
    /// `gt_flows[t]`: displacement of frame `t` pixels into frame `t + 1`.
    pub gt_flows: Vec<VectorGrid>,
    /// `gt_backward[t]`: displacement of frame `t + 1` pixels since frame `t`.
    pub gt_backward: Vec<VectorGrid>,
    pub gt_regions: Vec<RegionPartition>,
}

/// Seeded uniform noise smoothed by a normalized box kernel of radius
/// `round(smoothing)`, rescaled to `[0, 1]`.
pub fn texture(seed: u64, width: usize, height: usize, smoothing: f64) -> Result<ScalarGrid> {
    texture_with_passes(seed, width, height, smoothing, 1)
}

/// [`texture`] with the box kernel applied `passes` times.
pub fn texture_with_passes(
    seed: u64,
    width: usize,
    height: usize,
    smoothing: f64,
    passes: usize,
) -> Result<ScalarGrid> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing {smoothing} must be >= 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.random::<f64>()).collect();
    let r = smoothing.round() as usize;
    let blurred = if r == 0 {
        noise
    } else {
        let mut g = noise;
        for _ in 0..passes {
            let horiz = box_pass(&g, width, height, r, true);
            g = box_pass(&horiz, width, height, r, false);
        }
        g
    };
    let (lo, hi) = blurred
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    let data = blurred
        .iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect();
    ScalarGrid::new(width, height, data)
}

// one axis of a box filter, with the window shrunk at the borders
fn box_pass(src: &[f64], w: usize, h: usize, r: usize, horizontal: bool) -> Vec<f64> {
    exec::map_indexed(w * h, |i| {
        let (x, y) = (i % w, i / w);
        let (c, n) = if horizontal { (x, w) } else { (y, h) };
        let lo = c.saturating_sub(r);
        let hi = (c + r).min(n - 1);
        let sum: f64 = (lo..=hi)
            .map(|k| {
                if horizontal {
                    src[y * w + k]
                } else {
                    src[k * w + x]
                }
            })
            .sum();
        sum / (hi - lo + 1) as f64
    })
}

pub fn generate(spec: &SynthSpec) -> Result<SynthSequence> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    // textures cover twice the frame so pulled-back points stay on texture
    let (cw, ch) = (2 * w, 2 * h);
    let offset = Vec2::new((w / 2) as f64, (h / 2) as f64);
    let (sm, passes) = (spec.texture_smoothing, spec.texture_passes);
    let object = texture_with_passes(spec.texture_seed, cw, ch, sm, passes)?;
    let background = texture_with_passes(
        spec.texture_seed ^ 0x9e37_79b9_7f4a_7c15,
        cw,
        ch,
        sm,
        passes,
    )?;
    let frame0 = |p: Vec2| -> f64 {
        let q = p + offset;
        if spec.inside(0, p) {
            0.3 + 0.7 * bilinear_sample(&object, q)
        } else {
            0.7 * bilinear_sample(&background, q)
        }
    };
    let frames = (0..spec.frames)
        .map(|t| {
            ScalarGrid::from_fn(w, h, |x, y| {
                frame0(spec.inverse_map(t, Vec2::new(x as f64, y as f64)))
            })
        })
        .collect();
    let pairs = spec.frames - 1;
    let gt_flows = (0..pairs)
        .map(|t| {
            VectorGrid::from_fn(w, h, |x, y| {
                spec.forward_displacement(t, Vec2::new(x as f64, y as f64))
            })
        })
        .collect();
    let gt_backward = (0..pairs)
        .map(|t| {
            VectorGrid::from_fn(w, h, |x, y| {
                spec.backward_displacement(t, Vec2::new(x as f64, y as f64))
            })
        })
        .collect();
    let gt_regions = (0..spec.frames).map(|t| spec.region_at(t)).collect();
    Ok(SynthSequence {
        frames,
        gt_flows,
        gt_backward,
        gt_regions,
    })
}
