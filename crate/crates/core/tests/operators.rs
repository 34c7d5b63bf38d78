mod support;

use pcflow::flow::{assemble_rhs, solve_cg, solve_infinitesimal, MotionOperator};
use pcflow::{
    Mode, PiecewiseVelocity, RegionPartition, ScalarGrid, SolverConfig, Vec2, VectorGrid,
};
use support::*;

fn apply(inst: &Instance) -> Vec<Vec2> {
    let op = MotionOperator::new(&inst.img, &inst.part, &inst.cfg).unwrap();
    let mut out = vec![Vec2::ZERO; inst.v.len()];
    pcflow::flow::LinearOperator::apply(&op, &inst.v, &mut out);
    out
}

#[test]
fn four_by_four_hard_matches_dense_assembly() {
    let labels = (0..16)
        .map(|i| u8::from((1..3).contains(&(i % 4)) && (1..3).contains(&(i / 4))))
        .collect();
    let part = RegionPartition::new(4, 4, labels).unwrap();
    let img = ScalarGrid::from_fn(4, 4, |x, y| ((x * 5 + y * 11) % 7) as f64 / 7.0);
    let v: Vec<Vec2> = (0..16)
        .map(|i| Vec2::new((i as f64).sin(), (i as f64 * 0.7).cos()))
        .collect();
    let cfg = SolverConfig::new(Mode::Hard, 1.3, 0.6, 1.0).unwrap();
    let a = dense_operator(&img, &part, &cfg);
    let inst = Instance {
        next: img.clone(),
        img,
        part,
        v,
        cfg,
    };
    let got = flatten(&apply(&inst));
    let want = &a * flatten(&inst.v);
    assert!((got - want).amax() < 1e-12);
}

#[test]
fn operators_match_dense_oracle_and_are_symmetric() {
    let mut r = rng(11);
    for mode in Mode::ALL {
        for _ in 0..25 {
            let inst = random_instance(&mut r, 8, mode);
            let a = dense_operator(&inst.img, &inst.part, &inst.cfg);
            let got = flatten(&apply(&inst));
            let want = &a * flatten(&inst.v);
            let scale = 1.0 + want.amax();
            assert!((got - want).amax() <= 1e-10 * scale, "{mode}");
            assert!(
                (a.clone() - a.transpose()).amax() <= 1e-10 * (1.0 + a.amax()),
                "{mode} not symmetric"
            );
        }
    }
}

#[test]
fn single_label_modes_coincide() {
    let mut r = rng(3);
    for _ in 0..10 {
        let mut inst = random_instance(&mut r, 10, Mode::Hard);
        let (w, h) = inst.part.dims();
        inst.part = RegionPartition::uniform(w, h, 0);
        inst.cfg.alpha_out = inst.cfg.alpha_in;
        inst.cfg.label_alphas.clear();
        let base = apply(&inst);
        for mode in [Mode::Soft, Mode::Global] {
            inst.cfg.mode = mode;
            if inst.cfg.validate().is_err() {
                continue;
            }
            let other = apply(&inst);
            for (p, q) in base.iter().zip(&other) {
                assert!((*p - *q).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn rhs_matches_direct_evaluation() {
    let mut r = rng(5);
    for _ in 0..10 {
        let inst = random_instance(&mut r, 9, Mode::Hard);
        let b = assemble_rhs(&inst.img, &inst.next, &inst.part).unwrap();
        let g = gradient_oracle(&inst.img, inst.part.labels(), false);
        for i in 0..b.len() {
            let d = inst.next.data()[i] - inst.img.data()[i];
            let want = Vec2::new(-d * g[i][0], -d * g[i][1]);
            assert!((b.data()[i] - want).norm() < 1e-14);
        }
    }
}

#[test]
fn cg_matches_dense_solve() {
    let mut r = rng(19);
    for mode in Mode::ALL {
        for _ in 0..6 {
            let mut inst = random_instance(&mut r, 8, mode);
            inst.cfg = inst.cfg.clone().with_cg(1e-13, Some(5000));
            let op = MotionOperator::new(&inst.img, &inst.part, &inst.cfg).unwrap();
            let b = op.rhs(&inst.img, &inst.next).unwrap();
            let out = solve_cg(&op, b.data(), inst.cfg.cg_rel_tol, 5000).unwrap();
            assert!(out.converged);
            let a = dense_operator(&inst.img, &inst.part, &inst.cfg);
            let x = dense_min_norm_solve(&a, &flatten(b.data()));
            let got = flatten(&out.solution);
            assert!(
                (&got - &x).norm() <= 1e-8 * x.norm().max(1e-300),
                "{mode}: {}",
                (&got - &x).norm() / x.norm()
            );
        }
    }
}

#[test]
fn converged_residual_meets_tolerance_and_energy_descends() {
    let mut r = rng(23);
    for mode in Mode::ALL {
        for _ in 0..8 {
            let mut inst = random_instance(&mut r, 12, mode);
            inst.cfg = inst.cfg.clone().with_cg(1e-8, Some(4000));
            let sol =
                solve_infinitesimal(&inst.img, &inst.next, &inst.part, None, &inst.cfg).unwrap();
            assert!(sol.cg.converged);
            let op = MotionOperator::new(&inst.img, &inst.part, &inst.cfg).unwrap();
            let b = op.rhs(&inst.img, &inst.next).unwrap();
            let av = op.apply_field(&sol.velocity).unwrap();
            let res: f64 = av
                .data()
                .iter()
                .zip(b.data())
                .map(|(p, q)| (*p - *q).norm_sq())
                .sum::<f64>()
                .sqrt();
            let bn: f64 = b.data().iter().map(|p| p.norm_sq()).sum::<f64>().sqrt();
            assert!(res <= 1e-8 * bn * (1.0 + 1e-6));
            let zero = vec![Vec2::ZERO; b.len()];
            let v = sol.velocity.field.data();
            assert!(
                op.energy(&inst.img, &inst.next, v)
                    <= op.energy(&inst.img, &inst.next, &zero) + 1e-12
            );
            let q = op.quadratic_energy(&inst.img, &inst.next, v).unwrap();
            let q0 = op.quadratic_energy(&inst.img, &inst.next, &zero).unwrap();
            assert!(q <= q0 + 1e-12);
        }
    }
}

#[test]
fn psd_on_random_instances() {
    let mut r = rng(31);
    for mode in Mode::ALL {
        for _ in 0..50 {
            let inst = random_instance(&mut r, 16, mode);
            let av = apply(&inst);
            let q: f64 = av.iter().zip(&inst.v).map(|(a, b)| a.dot(*b)).sum();
            let n2: f64 = inst.v.iter().map(|p| p.norm_sq()).sum();
            assert!(q >= -1e-9 * n2, "{mode}: {q}");
        }
    }
}

#[test]
fn matched_frames_give_zero_velocity() {
    let img = ScalarGrid::from_fn(12, 12, |x, y| {
        ((x as f64 * 0.9).sin() * (y as f64 * 0.4).cos() + 1.0) / 2.0
    });
    let part =
        RegionPartition::new(12, 12, (0..144).map(|i| u8::from(i % 12 > 5)).collect()).unwrap();
    for mode in Mode::ALL {
        let s = solve_infinitesimal(
            &img,
            &img,
            &part,
            None,
            &SolverConfig::default().with_mode(mode),
        )
        .unwrap();
        assert!(s.velocity.field.data().iter().all(|v| *v == Vec2::ZERO));
        assert_eq!(s.cg.iterations, 0);
    }
}

#[test]
fn recovers_subpixel_translation() {
    // smooth texture, J1(x) = I(x − 0.5 e_x)
    let f = |x: f64, y: f64| {
        0.5 + 0.2 * (0.31 * x).sin() * (0.23 * y).cos() + 0.15 * (0.17 * x + 0.29 * y).sin()
    };
    let (w, h) = (40, 40);
    let img = ScalarGrid::from_fn(w, h, |x, y| f(x as f64, y as f64));
    let next = ScalarGrid::from_fn(w, h, |x, y| f(x as f64 - 0.5, y as f64));
    let part = RegionPartition::uniform(w, h, 0);
    let cfg = SolverConfig::default()
        .with_mode(Mode::Hard)
        .with_alphas(0.05, 0.05);
    let s = solve_infinitesimal(&img, &next, &part, None, &cfg).unwrap();
    let mut mean = Vec2::ZERO;
    let mut count = 0.0;
    for y in 5..h - 5 {
        for x in 5..w - 5 {
            mean += s.velocity.field.get(x, y);
            count += 1.0;
        }
    }
    let mean = mean * (1.0 / count);
    assert!((mean - Vec2::new(0.5, 0.0)).norm() <= 0.1, "{mean:?}");
}

#[test]
fn operator_cost_is_mode_independent() {
    let part = RegionPartition::new(
        16,
        16,
        (0..256).map(|i| u8::from((i * 37) % 5 == 0)).collect(),
    )
    .unwrap();
    let img = ScalarGrid::from_fn(16, 16, |x, y| ((x ^ y) % 4) as f64);
    let v = vec![Vec2::new(1.0, -1.0); 256];
    let mut out = vec![Vec2::ZERO; 256];
    let reads: Vec<usize> = Mode::ALL
        .iter()
        .map(|&m| {
            MotionOperator::new(&img, &part, &SolverConfig::default().with_mode(m))
                .unwrap()
                .apply_counted(&v, &mut out)
        })
        .collect();
    let in_grid: usize = (0..256)
        .map(|i| (0..4).filter(|&d| part.neighbor(i, d).is_some()).count())
        .sum();
    assert!(reads.iter().all(|&r| r == in_grid));
}

#[test]
fn apply_operator_checks_dimensions() {
    let part = RegionPartition::uniform(4, 4, 0);
    let v = PiecewiseVelocity::new(VectorGrid::zeros(4, 4), part).unwrap();
    let img = ScalarGrid::filled(5, 4, 0.0);
    assert!(pcflow::flow::apply_operator(&v, &img, &SolverConfig::default()).is_err());
}
