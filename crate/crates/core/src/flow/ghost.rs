//! Closed-form ghost values across an interface face.
//!
//! For a face between `x` (inner side, field `v_i`) and `y` (outer side,
//! field `v_o`), each field is extrapolated one pixel past the interface so
//! that the Laplacian stencil never reads the other region's unknowns.
//! Every law here only moves the normal component `π_N`; tangential
//! components are copied from the known side.

use super::{Mode, SolverConfig};
use crate::grid::Vec2;

/// Extrapolated values `(v_i(y), v_o(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghosts {
    pub inner_at_outer: Vec2,
    pub outer_at_inner: Vec2,
}

/// How the two sides of an interface face are tied together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceLaw {
    /// `v_i(y)·N = v_o(x)·N` exactly, normal derivative ratio `α_o/α_i`.
    Hard,
    /// Robin condition `α ∂_N v = −β (v_i(y)·N − v_o(x)·N) N` on both sides.
    Soft { beta: f64 },
    /// Zero normal derivative: ghosts copy the same-side value.
    Neumann,
    /// One field across the face: ghosts are the neighbour's own value.
    Continuous,
}

impl InterfaceLaw {
    pub fn for_config(cfg: &SolverConfig) -> Self {
        match cfg.mode {
            Mode::Hard => InterfaceLaw::Hard,
            Mode::Soft => InterfaceLaw::Soft { beta: cfg.beta },
            Mode::RegionOnly => InterfaceLaw::Neumann,
            Mode::Global => InterfaceLaw::Continuous,
        }
    }

    /// Fractions `(k_i, k_o)` of `π_N(v_o(y) − v_i(x))` moved into each ghost.
    pub fn normal_fractions(self, alpha_in: f64, alpha_out: f64) -> (f64, f64) {
        match self {
            InterfaceLaw::Hard => {
                let s = alpha_in + alpha_out;
                (alpha_out / s, alpha_in / s)
            }
            InterfaceLaw::Soft { beta } => {
                let d = alpha_in * alpha_out + beta * (alpha_in + alpha_out);
                (beta * alpha_out / d, beta * alpha_in / d)
            }
            InterfaceLaw::Neumann => (0.0, 0.0),
            InterfaceLaw::Continuous => (1.0, 1.0),
        }
    }

    /// Weight of the normal spring `c·π_N(v(x) − v(y))` the law induces in the
    /// operator rows of both sides. `Continuous` couples the full vector with
    /// the region weight instead and reports `None`.
    pub fn coupling(self, alpha_in: f64, alpha_out: f64) -> Option<f64> {
        match self {
            InterfaceLaw::Continuous => None,
            _ => {
                let (k_i, _) = self.normal_fractions(alpha_in, alpha_out);
                Some(alpha_in * k_i)
            }
        }
    }

    pub fn ghosts(
        self,
        v_in_x: Vec2,
        v_out_y: Vec2,
        n: Vec2,
        alpha_in: f64,
        alpha_out: f64,
    ) -> Ghosts {
        if self == InterfaceLaw::Continuous {
            return Ghosts {
                inner_at_outer: v_out_y,
                outer_at_inner: v_in_x,
            };
        }
        let (k_i, k_o) = self.normal_fractions(alpha_in, alpha_out);
        let jump = (v_out_y - v_in_x).along(n);
        Ghosts {
            inner_at_outer: v_in_x + jump * k_i,
            outer_at_inner: v_out_y - jump * k_o,
        }
    }
}

pub fn ghost_values_hard(v_in_x: Vec2, v_out_y: Vec2, n: Vec2, cfg: &SolverConfig) -> Ghosts {
    InterfaceLaw::Hard.ghosts(v_in_x, v_out_y, n, cfg.alpha_in, cfg.alpha_out)
}

pub fn ghost_values_soft(v_in_x: Vec2, v_out_y: Vec2, n: Vec2, cfg: &SolverConfig) -> Ghosts {
    InterfaceLaw::Soft { beta: cfg.beta }.ghosts(v_in_x, v_out_y, n, cfg.alpha_in, cfg.alpha_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(a_i: f64, a_o: f64, beta: f64) -> SolverConfig {
        SolverConfig::new(Mode::Soft, a_i, a_o, beta).unwrap()
    }

    const X: Vec2 = Vec2::new(1.0, 0.0);

    #[test]
    fn hard_symmetric_alpha_example() {
        let g = ghost_values_hard(
            Vec2::new(1.0, 0.0),
            Vec2::new(3.0, 2.0),
            X,
            &cfg(1.0, 1.0, 3.0),
        );
        assert_eq!(g.inner_at_outer, Vec2::new(2.0, 0.0));
        assert_eq!(g.outer_at_inner, Vec2::new(2.0, 2.0));
        assert_eq!(g.inner_at_outer.dot(X), g.outer_at_inner.dot(X));
    }

    #[test]
    fn matched_and_tangential_inputs() {
        let c = cfg(1.5, 0.7, 4.0);
        let v = Vec2::new(-0.3, 2.2);
        for g in [
            ghost_values_hard(v, v, X, &c),
            ghost_values_soft(v, v, X, &c),
        ] {
            assert_eq!(g.inner_at_outer, v);
            assert_eq!(g.outer_at_inner, v);
        }
        let a = Vec2::new(1.0, 0.0);
        let b = Vec2::new(1.0, 5.0);
        let g = ghost_values_hard(a, b, X, &c);
        assert_eq!(g.inner_at_outer, a);
        assert_eq!(g.outer_at_inner, b);
    }

    #[test]
    fn soft_example_satisfies_discrete_robin_condition() {
        let c = cfg(1.0, 1.0, 3.0);
        let (a, b) = (Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        let g = ghost_values_soft(a, b, X, &c);
        // k = β α_o / (α_i α_o + β(α_i + α_o)) = 3/7
        assert!((g.inner_at_outer - Vec2::new(6.0 / 7.0, 0.0)).norm() < 1e-15);
        assert!((g.outer_at_inner - Vec2::new(8.0 / 7.0, 0.0)).norm() < 1e-15);
        let jump = g.inner_at_outer.dot(X) - g.outer_at_inner.dot(X);
        // α_i (v_i(y) − v_i(x)) = −β J N and α_o (v_o(y) − v_o(x)) = −β J N
        let r_in = (g.inner_at_outer - a) * c.alpha_in + X * (c.beta * jump);
        let r_out = (b - g.outer_at_inner) * c.alpha_out + X * (c.beta * jump);
        assert!(r_in.norm() < 1e-14 && r_out.norm() < 1e-14);
    }

    #[test]
    fn soft_tends_to_hard() {
        let c = cfg(1.0, 1.0, 1e6);
        let (a, b) = (Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        let s = ghost_values_soft(a, b, X, &c);
        let h = ghost_values_hard(a, b, X, &c);
        assert!((s.inner_at_outer - h.inner_at_outer).norm() < 1e-5);
        assert!((s.outer_at_inner - h.outer_at_inner).norm() < 1e-5);
    }

    #[test]
    fn coupling_is_shared_by_both_sides() {
        for law in [InterfaceLaw::Hard, InterfaceLaw::Soft { beta: 2.5 }] {
            let (a_i, a_o) = (0.8, 3.1);
            let (k_i, k_o) = law.normal_fractions(a_i, a_o);
            assert!((a_i * k_i - a_o * k_o).abs() < 1e-14);
            assert!(law.coupling(a_i, a_o).unwrap() > 0.0);
        }
        assert_eq!(InterfaceLaw::Neumann.coupling(1.0, 1.0), Some(0.0));
        assert_eq!(InterfaceLaw::Hard.coupling(2.0, 2.0), Some(1.0));
    }

    proptest! {
        #[test]
        fn hard_identity_holds(
            ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0,
            t in 0.0f64..6.3, a_i in 0.1f64..10.0, a_o in 0.1f64..10.0,
        ) {
            let n = Vec2::new(t.cos(), t.sin());
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            let g = InterfaceLaw::Hard.ghosts(a, b, n, a_i, a_o);
            prop_assert!((g.inner_at_outer.dot(n) - g.outer_at_inner.dot(n)).abs() < 1e-12);
            let tan = Vec2::new(-n.y, n.x);
            prop_assert!((g.inner_at_outer.dot(tan) - a.dot(tan)).abs() < 1e-12);
            prop_assert!((g.outer_at_inner.dot(tan) - b.dot(tan)).abs() < 1e-12);
            // flux balance α_i (v_i(y) − v_i(x))·N = α_o (v_o(y) − v_o(x))·N
            let flux_in = a_i * (g.inner_at_outer - a).dot(n);
            let flux_out = a_o * (b - g.outer_at_inner).dot(n);
            prop_assert!((flux_in - flux_out).abs() < 1e-10);
        }

        #[test]
        fn soft_distance_to_hard_shrinks_with_beta(
            ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0, t in 0.0f64..6.3,
        ) {
            let n = Vec2::new(t.cos(), t.sin());
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            let h = InterfaceLaw::Hard.ghosts(a, b, n, 1.0, 1.0);
            let mut last = f64::INFINITY;
            for beta in [10.0, 100.0, 1000.0, 1e4] {
                let s = InterfaceLaw::Soft { beta }.ghosts(a, b, n, 1.0, 1.0);
                let d = (s.inner_at_outer - h.inner_at_outer).norm() + (s.outer_at_inner - h.outer_at_inner).norm();
                prop_assert!(d <= last + 1e-15);
                last = d;
            }
            prop_assert!(last <= 1e-3);
        }
    }
}
