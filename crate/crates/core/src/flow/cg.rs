use super::operator::LinearOperator;
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<Vec2>,
    /// `‖r_k‖₂` after each iteration, starting with `‖b‖₂`.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CgOutcome {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

fn dot(a: &[Vec2], b: &[Vec2]) -> f64 {
    exec::sum_indexed(a.len(), |i| a[i].dot(b[i]))
}

/// Conjugate gradient from a zero initial guess; see [`solve_cg_from`].
pub fn solve_cg<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[Vec2],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    solve_cg_from(op, b, None, rel_tol, max_iter)
}

/// Conjugate gradient from `x0` (zero when `None`).
///
/// Stops at the first iterate whose true residual satisfies
/// `‖Av − b‖ ≤ rel_tol·‖b‖`; the recursive residual is only used to decide
/// when to check. After `max_iter` iterations the last iterate is returned
/// with `converged == false`.
/// A zero right-hand side always returns the zero solution.
pub fn solve_cg_from<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[Vec2],
    x0: Option<&[Vec2]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.pixels();
    assert_eq!(b.len(), n);
    let b_norm = dot(b, b).sqrt();
    if !b_norm.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![Vec2::ZERO; n],
            residual_history: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }
    let mut ap = vec![Vec2::ZERO; n];
    let (mut x, mut r) = match x0 {
        Some(x0) => {
            assert_eq!(x0.len(), n);
            op.apply(x0, &mut ap);
            let r: Vec<Vec2> = (0..n).map(|i| b[i] - ap[i]).collect();
            (x0.to_vec(), r)
        }
        None => (vec![Vec2::ZERO; n], b.to_vec()),
    };
    let mut rr = dot(&r, &r);
    if !rr.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut history = vec![rr.sqrt()];
    let target = rel_tol * b_norm;
    if rr.sqrt() <= target {
        return Ok(CgOutcome {
            solution: x,
            residual_history: history,
            iterations: 0,
            converged: true,
        });
    }
    let mut p = r.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NonFinite {
                iteration: iterations,
            });
        }
        if pap <= 0.0 {
            // r lies in the kernel: the system is inconsistent along p
            history.push(rr.sqrt());
            break;
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += p[i] * step;
            r[i] -= ap[i] * step;
        }
        let mut rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(Error::NonFinite {
                iteration: iterations,
            });
        }
        if rr_new.sqrt() <= target {
            // confirm with the true residual, restart from it if drifted
            op.apply(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rr_new = dot(&r, &r);
            if rr_new.sqrt() <= target {
                history.push(rr_new.sqrt());
                converged = true;
                break;
            }
            p.copy_from_slice(&r);
            rr = rr_new;
            history.push(rr.sqrt());
            continue;
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
        history.push(rr.sqrt());
    }
    Ok(CgOutcome {
        solution: x,
        residual_history: history,
        iterations,
        converged,
    })
}
