use super::{contour, RegionPartition, ScalarGrid, Vec2};
use crate::error::{Error, Result};
use crate::exec;

/// Signed Euclidean distance for structure `label`: negative inside, positive
/// outside, from an exact two-pass distance transform over pixel centres.
///
/// A pixel's magnitude is the distance to the nearest opposite pixel centre
/// minus half a pixel, which puts the zero crossing midway between the two
/// sides of every interface face.
pub fn signed_distance(part: &RegionPartition, label: u8) -> Result<ScalarGrid> {
    let (w, h) = part.dims();
    let inside = part.mask(label);
    let n_in = inside.iter().filter(|&&b| b).count();
    if n_in == 0 || n_in == inside.len() {
        return Err(Error::DegenerateRegion { label });
    }
    let to_inside = squared_edt(w, h, &inside);
    let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
    let to_outside = squared_edt(w, h, &outside);
    let data = exec::map_indexed(w * h, |i| {
        if inside[i] {
            -(to_outside[i].sqrt() - 0.5)
        } else {
            to_inside[i].sqrt() - 0.5
        }
    });
    ScalarGrid::new(w, h, data)
}

/// Rebuilds `psi` as a signed distance to its own zero level set, located to
/// sub-pixel accuracy by edge interpolation. The sign of every pixel, and so
/// the region `{psi ≤ 0}`, is left unchanged.
pub fn reinitialize(psi: &ScalarGrid) -> ScalarGrid {
    let segments = contour::zero_crossing_segments(psi);
    let (w, h) = psi.dims();
    if segments.is_empty() {
        return psi.clone();
    }
    let data = exec::map_indexed(w * h, |i| {
        let p = Vec2::new((i % w) as f64, (i / w) as f64);
        let d = segments
            .iter()
            .map(|&(a, b)| contour::point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min);
        let inside = psi.data()[i] <= 0.0;
        if inside {
            -d
        } else {
            d.max(1e-9)
        }
    });
    ScalarGrid::new(w, h, data).expect("finite by construction")
}

/// Squared distance from each pixel centre to the nearest `target` pixel
/// (Felzenszwalb–Huttenlocher, separable).
fn squared_edt(w: usize, h: usize, target: &[bool]) -> Vec<f64> {
    const FAR: f64 = 1e20;
    let mut grid: Vec<f64> = target.iter().map(|&t| if t { 0.0 } else { FAR }).collect();
    let mut col = vec![0.0; h];
    let mut out = vec![0.0; h.max(w)];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        edt_1d(&col, &mut out[..h]);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    exec::for_each_row(&mut grid, w, |_, row| {
        let input = row.to_vec();
        edt_1d(&input, row);
    });
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let parabola = |p: usize| {
            ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
        };
        let mut s = parabola(v[k]);
        while s <= z[k] {
            k -= 1;
            s = parabola(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(w: usize, h: usize, c: Vec2, r: f64) -> RegionPartition {
        let labels = (0..w * h)
            .map(|i| {
                let p = Vec2::new((i % w) as f64, (i / w) as f64);
                u8::from((p - c).norm() <= r)
            })
            .collect();
        RegionPartition::new(w, h, labels).unwrap()
    }

    fn brute_force_sq(w: usize, h: usize, target: &[bool]) -> Vec<f64> {
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                (0..w * h)
                    .filter(|&j| target[j])
                    .map(|j| {
                        let (a, b) = ((j % w) as f64, (j / w) as f64);
                        (x - a).powi(2) + (y - b).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn edt_matches_brute_force() {
        let (w, h) = (13, 9);
        let target: Vec<bool> = (0..w * h).map(|i| (i * 7919) % 11 == 0).collect();
        let fast = squared_edt(w, h, &target);
        let slow = brute_force_sq(w, h, &target);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn disc_distance_close_to_analytic() {
        let c = Vec2::new(32.0, 32.0);
        let part = disc(64, 64, c, 10.0);
        let psi = signed_distance(&part, 1).unwrap();
        for y in 2..62 {
            for x in 2..62 {
                let exact = (Vec2::new(x as f64, y as f64) - c).norm() - 10.0;
                assert!((psi.get(x, y) - exact).abs() <= 1.0, "({x},{y})");
            }
        }
    }

    #[test]
    fn single_pixel_region() {
        let mut labels = vec![0u8; 25];
        labels[12] = 1;
        let part = RegionPartition::new(5, 5, labels).unwrap();
        let psi = signed_distance(&part, 1).unwrap();
        assert!(psi.get(2, 2) <= 0.0);
        for (x, y) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            let v = psi.get(x, y);
            assert!(v > 0.0 && v <= 1.5);
        }
    }

    #[test]
    fn half_plane_is_linear() {
        let c = 5;
        let labels = (0..12 * 6).map(|i| u8::from(i % 12 < c)).collect();
        let part = RegionPartition::new(12, 6, labels).unwrap();
        let psi = signed_distance(&part, 1).unwrap();
        for y in 0..6 {
            for x in 0..12 {
                assert!((psi.get(x, y) - (x as f64 - c as f64 + 0.5)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_regions_rejected() {
        let part = RegionPartition::uniform(4, 4, 0);
        assert!(matches!(
            signed_distance(&part, 1),
            Err(Error::DegenerateRegion { label: 1 })
        ));
        let full = RegionPartition::uniform(4, 4, 1);
        assert!(signed_distance(&full, 1).is_err());
    }

    #[test]
    fn sign_changes_only_across_interface_pairs() {
        let part = disc(20, 20, Vec2::new(9.3, 10.1), 5.5);
        let psi = signed_distance(&part, 1).unwrap();
        for p in part.pairs() {
            assert!(psi.data()[p.inner] * psi.data()[p.outer] <= 0.0);
        }
        for (i, &l) in part.labels().iter().enumerate() {
            assert_eq!(l == 1, psi.data()[i] <= 0.0);
        }
    }

    #[test]
    fn reinitialize_keeps_sign_and_restores_distance() {
        let c = Vec2::new(20.0, 20.0);
        let exact = ScalarGrid::from_fn(40, 40, |x, y| {
            (Vec2::new(x as f64, y as f64) - c).norm() - 8.3
        });
        let squashed = ScalarGrid::from_fn(40, 40, |x, y| {
            let v = exact.get(x, y);
            v * (0.2 + 0.01 * x as f64)
        });
        let re = reinitialize(&squashed);
        for i in 0..exact.len() {
            assert_eq!(re.data()[i] <= 0.0, squashed.data()[i] <= 0.0);
            assert!((re.data()[i] - exact.data()[i]).abs() < 0.15, "pixel {i}");
        }
    }
}
