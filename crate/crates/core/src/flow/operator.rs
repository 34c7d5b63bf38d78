use super::ghost::InterfaceLaw;
use super::{Mode, PiecewiseVelocity, SolverConfig};
use crate::error::Result;
use crate::exec;
use crate::grid::{self, ensure_dims, RegionPartition, ScalarGrid, Vec2, VectorGrid};

/// Symmetric linear map on flattened velocity fields, as required by CG.
pub trait LinearOperator {
    /// Number of pixels (each carries a 2-vector unknown).
    fn pixels(&self) -> usize;
    fn apply(&self, v: &[Vec2], out: &mut [Vec2]);
}

/// One of the four motion operators, bound to an image and a partition.
///
/// Row `x` of region weight `α` reads
/// `α Σ_{y∼x} (v(x) − ghost(y)) + ∇I(x) ∇I(x)ᵀ v(x)`, where `ghost(y)` is
/// `v(y)` for same-label neighbours and the interface law's extrapolated
/// value across a label boundary. Ghosts are recomputed on every
/// application. Neighbours outside the grid contribute nothing.
#[derive(Debug, Clone)]
pub struct MotionOperator<'a> {
    part: &'a RegionPartition,
    law: InterfaceLaw,
    alpha: Vec<f64>,
    grad: VectorGrid,
    mode: Mode,
    /// Pixels with four in-grid neighbours and no interface face, which take
    /// the plain five-point stencil.
    plain: Vec<bool>,
}

impl<'a> MotionOperator<'a> {
    pub fn new(img: &ScalarGrid, part: &'a RegionPartition, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        ensure_dims(part.dims(), img.dims())?;
        let grad = data_gradient(img, part, cfg.mode)?;
        let mut alpha = vec![0.0; 256];
        for label in 0..=255u8 {
            alpha[label as usize] = cfg.alpha_for(label);
        }
        let (w, h) = part.dims();
        let labels = part.labels();
        let plain = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                x > 0
                    && y > 0
                    && x + 1 < w
                    && y + 1 < h
                    && (cfg.mode == Mode::Global
                        || [i - 1, i + 1, i - w, i + w].iter().all(|&j| labels[j] == labels[i]))
            })
            .collect();
        Ok(MotionOperator {
            part,
            law: InterfaceLaw::for_config(cfg),
            alpha,
            grad,
            mode: cfg.mode,
            plain,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn law(&self) -> InterfaceLaw {
        self.law
    }

    pub fn partition(&self) -> &RegionPartition {
        self.part
    }

    /// Image gradient used by the data term.
    pub fn gradient(&self) -> &VectorGrid {
        &self.grad
    }

    pub fn alpha_of(&self, label: u8) -> f64 {
        self.alpha[label as usize]
    }

    /// `−(J1 − I) ∇I` with this operator's gradient.
    pub fn rhs(&self, img: &ScalarGrid, next: &ScalarGrid) -> Result<VectorGrid> {
        ensure_dims(img.dims(), next.dims())?;
        rhs_with_gradient(img, next, &self.grad)
    }

    /// Ghost value of the field living on pixel `i` as seen from across face
    /// `dir`, given the neighbour index `j`.
    fn ghost(&self, v: &[Vec2], i: usize, j: usize, dir: usize) -> Vec2 {
        let labels = self.part.labels();
        if labels[i] == labels[j] || self.mode == Mode::Global {
            return v[j];
        }
        self.ghost_pair(v[i], v[j], i, dir)
    }

    /// Applies the operator and returns the number of neighbour reads.
    pub fn apply_counted(&self, v: &[Vec2], out: &mut [Vec2]) -> usize {
        let (w, h) = self.part.dims();
        assert_eq!(v.len(), w * h);
        assert_eq!(out.len(), w * h);
        let labels = self.part.labels();
        let grad = self.grad.data();
        let mut counts = vec![0usize; h];
        {
            let mut rows: Vec<(&mut [Vec2], &mut usize)> =
                out.chunks_mut(w).zip(counts.iter_mut()).collect();
            let work = |y: usize, row: &mut [Vec2], count: &mut usize| {
                for (x, o) in row.iter_mut().enumerate() {
                    let i = y * w + x;
                    let vi = v[i];
                    let a = self.alpha[labels[i] as usize];
                    let g = grad[i];
                    if self.plain[i] {
                        *count += 4;
                        let acc = (vi - v[i - 1]) + (vi - v[i + 1]) + (vi - v[i - w]) + (vi - v[i + w]);
                        *o = acc * a + g * g.dot(vi);
                        continue;
                    }
                    let mut acc = Vec2::ZERO;
                    for dir in 0..4 {
                        let Some(j) = self.part.neighbor(i, dir) else {
                            continue;
                        };
                        *count += 1;
                        acc += vi - self.ghost(v, i, j, dir);
                    }
                    *o = acc * a + g * g.dot(vi);
                }
            };
            exec_rows(&mut rows, work);
        }
        counts.iter().sum()
    }

    /// Ghost seen by pixel `i` across face `dir` for velocity `vi` on `i` and
    /// `vj` on the neighbour.
    fn ghost_pair(&self, vi: Vec2, vj: Vec2, i: usize, dir: usize) -> Vec2 {
        let labels = self.part.labels();
        let k = self
            .part
            .face(i, dir)
            .expect("differing labels imply an interface face");
        let pair = self.part.pairs()[k];
        let n = self.part.normals()[k];
        let a_in = self.alpha[labels[pair.inner] as usize];
        let a_out = self.alpha[labels[pair.outer] as usize];
        if i == pair.inner {
            self.law.ghosts(vi, vj, n, a_in, a_out).inner_at_outer
        } else {
            self.law.ghosts(vj, vi, n, a_in, a_out).outer_at_inner
        }
    }

    /// Applies the operator to a grid-shaped velocity.
    pub fn apply_field(&self, v: &PiecewiseVelocity) -> Result<VectorGrid> {
        ensure_dims(self.part.dims(), v.field.dims())?;
        let mut out = vec![Vec2::ZERO; v.field.len()];
        self.apply(v.field.data(), &mut out);
        VectorGrid::new(self.part.width(), self.part.height(), out)
    }

    /// Discrete form of the within-region energy
    /// `½ Σ (J1 − I + ∇I·v)² + ½ Σ_regions α Σ_{same-label faces} |Δv|²`.
    pub fn energy(&self, img: &ScalarGrid, next: &ScalarGrid, v: &[Vec2]) -> f64 {
        let (w, h) = self.part.dims();
        let labels = self.part.labels();
        let grad = self.grad.data();
        exec::sum_indexed(w * h, |i| {
            let r = next.data()[i] - img.data()[i] + grad[i].dot(v[i]);
            let mut e = 0.5 * r * r;
            for dir in [1usize, 3] {
                if let Some(j) = self.part.neighbor(i, dir) {
                    if labels[i] == labels[j] || self.mode == Mode::Global {
                        e += 0.5 * self.alpha[labels[i] as usize] * (v[j] - v[i]).norm_sq();
                    }
                }
            }
            e
        })
    }

    /// The quadratic CG minimizes: `½ vᵀAv − bᵀv + ½ Σ (J1 − I)²`.
    pub fn quadratic_energy(&self, img: &ScalarGrid, next: &ScalarGrid, v: &[Vec2]) -> Result<f64> {
        let b = self.rhs(img, next)?;
        let mut av = vec![Vec2::ZERO; v.len()];
        self.apply(v, &mut av);
        Ok(exec::sum_indexed(v.len(), |i| {
            let r = next.data()[i] - img.data()[i];
            0.5 * av[i].dot(v[i]) - b.data()[i].dot(v[i]) + 0.5 * r * r
        }))
    }
}

impl LinearOperator for MotionOperator<'_> {
    fn pixels(&self) -> usize {
        self.part.labels().len()
    }

    fn apply(&self, v: &[Vec2], out: &mut [Vec2]) {
        self.apply_counted(v, out);
    }
}

fn exec_rows<F>(rows: &mut [(&mut [Vec2], &mut usize)], work: F)
where
    F: Fn(usize, &mut [Vec2], &mut usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !exec::is_sequential() {
        use rayon::prelude::*;
        rows.par_iter_mut()
            .enumerate()
            .for_each(|(y, (row, c))| work(y, row, c));
        return;
    }
    for (y, (row, c)) in rows.iter_mut().enumerate() {
        work(y, row, c);
    }
}

fn data_gradient(img: &ScalarGrid, part: &RegionPartition, mode: Mode) -> Result<VectorGrid> {
    match mode {
        Mode::Global => Ok(grid::gradient(img)),
        _ => grid::gradient_region_aware(img, part),
    }
}

fn rhs_with_gradient(img: &ScalarGrid, next: &ScalarGrid, grad: &VectorGrid) -> Result<VectorGrid> {
    let (w, h) = img.dims();
    let data = exec::map_indexed(w * h, |i| {
        grad.data()[i] * (-(next.data()[i] - img.data()[i]))
    });
    VectorGrid::new(w, h, data)
}

/// Right-hand side `b(x) = −(J1(x) − I(x)) ∇I(x)` with the region-aware gradient.
pub fn assemble_rhs(
    img: &ScalarGrid,
    next: &ScalarGrid,
    part: &RegionPartition,
) -> Result<VectorGrid> {
    ensure_dims(img.dims(), next.dims())?;
    let grad = grid::gradient_region_aware(img, part)?;
    rhs_with_gradient(img, next, &grad)
}

/// Applies the operator selected by `cfg` to `v`.
pub fn apply_operator(
    v: &PiecewiseVelocity,
    img: &ScalarGrid,
    cfg: &SolverConfig,
) -> Result<VectorGrid> {
    MotionOperator::new(img, &v.partition, cfg)?.apply_field(v)
}
