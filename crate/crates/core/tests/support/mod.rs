//! Brute-force oracles shared by the integration and acceptance tests. Kept
//! independent of the library's operator code: the dense matrix is built
//! entry by entry from the stencil coefficients, not by probing `apply`.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pcflow::grid::NEIGHBORS;
use pcflow::{Mode, RegionPartition, ScalarGrid, SolverConfig, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Region-aware gradient written out directly.
pub fn gradient_oracle(img: &ScalarGrid, labels: &[u8], global: bool) -> Vec<[f64; 2]> {
    let (w, h) = img.dims();
    let mut out = vec![[0.0; 2]; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let same = |xx: isize, yy: isize| -> Option<f64> {
                if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                    return None;
                }
                let j = yy as usize * w + xx as usize;
                (global || labels[j] == labels[i]).then(|| img.data()[j])
            };
            let c = img.data()[i];
            for (axis, (lo, hi)) in [
                (
                    same(x as isize - 1, y as isize),
                    same(x as isize + 1, y as isize),
                ),
                (
                    same(x as isize, y as isize - 1),
                    same(x as isize, y as isize + 1),
                ),
            ]
            .into_iter()
            .enumerate()
            {
                out[i][axis] = match (lo, hi) {
                    (Some(a), Some(b)) => (b - a) / 2.0,
                    (None, Some(b)) => b - c,
                    (Some(a), None) => c - a,
                    (None, None) => 0.0,
                };
            }
        }
    }
    out
}

fn alpha(cfg: &SolverConfig, label: u8) -> f64 {
    if cfg.mode == Mode::Global {
        cfg.alpha_in
    } else if let Some(&a) = cfg.label_alphas.get(label as usize) {
        a
    } else if label == 0 {
        cfg.alpha_out
    } else {
        cfg.alpha_in
    }
}

/// Interface spring weight per mode, from the closed-form coefficients.
fn coupling(cfg: &SolverConfig, a_in: f64, a_out: f64) -> f64 {
    match cfg.mode {
        Mode::Hard => a_in * a_out / (a_in + a_out),
        Mode::Soft => cfg.beta * a_in * a_out / (a_in * a_out + cfg.beta * (a_in + a_out)),
        Mode::RegionOnly => 0.0,
        Mode::Global => unreachable!(),
    }
}

/// Dense `2n × 2n` matrix, unknown ordering `[v0.x, v0.y, v1.x, ...]`.
pub fn dense_operator(
    img: &ScalarGrid,
    part: &RegionPartition,
    cfg: &SolverConfig,
) -> DMatrix<f64> {
    let (w, h) = part.dims();
    let n = w * h;
    let labels = part.labels();
    let grad = gradient_oracle(img, labels, cfg.mode == Mode::Global);
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut add_block = |i: usize, j: usize, m: [[f64; 2]; 2], s: f64| {
        for r in 0..2 {
            for c in 0..2 {
                a[(2 * i + r, 2 * j + c)] += s * m[r][c];
            }
        }
    };
    let eye = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..n {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for (dir, (dx, dy)) in NEIGHBORS.iter().enumerate() {
            let (xx, yy) = (x + dx, y + dy);
            if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                continue;
            }
            let j = yy as usize * w + xx as usize;
            if cfg.mode == Mode::Global || labels[i] == labels[j] {
                let al = alpha(cfg, labels[i]);
                add_block(i, i, eye, al);
                add_block(i, j, eye, -al);
            } else {
                let k = part.face(i, dir).unwrap();
                let pair = part.pairs()[k];
                let nrm = part.normals()[k];
                let c = coupling(
                    cfg,
                    alpha(cfg, labels[pair.inner]),
                    alpha(cfg, labels[pair.outer]),
                );
                let nn = [
                    [nrm.x * nrm.x, nrm.x * nrm.y],
                    [nrm.x * nrm.y, nrm.y * nrm.y],
                ];
                add_block(i, i, nn, c);
                add_block(i, j, nn, -c);
            }
        }
        let g = grad[i];
        add_block(
            i,
            i,
            [[g[0] * g[0], g[0] * g[1]], [g[0] * g[1], g[1] * g[1]]],
            1.0,
        );
    }
    a
}

pub fn flatten(v: &[Vec2]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|p| [p.x, p.y]))
}

pub fn unflatten(v: &DVector<f64>) -> Vec<Vec2> {
    (0..v.len() / 2)
        .map(|i| Vec2::new(v[2 * i], v[2 * i + 1]))
        .collect()
}

/// Minimum-norm solution through the SVD pseudo-inverse.
pub fn dense_min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12 * svd.singular_values.max()).unwrap()
}

pub struct Instance {
    pub img: ScalarGrid,
    pub next: ScalarGrid,
    pub part: RegionPartition,
    pub v: Vec<Vec2>,
    pub cfg: SolverConfig,
}

/// Random image, partition (blob plus scattered labels, up to 3 labels),
/// unit normals, velocity and weights.
pub fn random_instance(rng: &mut ChaCha8Rng, max_side: usize, mode: Mode) -> Instance {
    let w = rng.random_range(2..=max_side);
    let h = rng.random_range(2..=max_side);
    let n = w * h;
    let cx = rng.random_range(0.0..w as f64);
    let cy = rng.random_range(0.0..h as f64);
    let r = rng.random_range(0.5..(w.max(h) as f64));
    let scatter = rng.random_range(0.0..0.3);
    let max_label = if rng.random_bool(0.25) { 2 } else { 1 };
    let labels: Vec<u8> = (0..n)
        .map(|i| {
            if rng.random_bool(scatter) {
                return rng.random_range(0..=max_label);
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            u8::from((x - cx).hypot(y - cy) <= r)
        })
        .collect();
    let mut part = RegionPartition::new(w, h, labels).unwrap();
    let normals = (0..part.pairs().len())
        .map(|_| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    part.set_normals(normals).unwrap();
    let img = ScalarGrid::new(w, h, (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    let next = ScalarGrid::new(w, h, (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    let v = (0..n)
        .map(|_| Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
        .collect();
    let mut cfg = SolverConfig::default().with_mode(mode);
    loop {
        cfg.alpha_in = 10f64.powf(rng.random_range(-1.0..1.5));
        cfg.alpha_out = 10f64.powf(rng.random_range(-1.0..1.5));
        cfg.beta = 10f64.powf(rng.random_range(-1.0..4.0));
        if max_label == 2 && rng.random_bool(0.5) {
            cfg.label_alphas = vec![
                cfg.alpha_out,
                cfg.alpha_in,
                10f64.powf(rng.random_range(-1.0..1.5)),
            ];
        }
        if cfg.validate().is_ok() {
            break;
        }
    }
    Instance {
        img,
        next,
        part,
        v,
        cfg,
    }
}
