use super::*;
use crate::flow::PiecewiseVelocity;
use crate::grid::Vec2;
use crate::metrics::dice;
use crate::synth::{generate, texture, SynthSpec};

fn small_spec(frames: usize) -> SynthSpec {
    SynthSpec {
        width: 64,
        height: 64,
        disc_center: Vec2::new(32.0, 32.0),
        disc_radius: 14.0,
        frames,
        ..SynthSpec::default()
    }
}

fn disc_mask(w: usize, h: usize, c: Vec2, r: f64) -> RegionPartition {
    let labels = (0..w * h)
        .map(|i| u8::from((Vec2::new((i % w) as f64, (i / w) as f64) - c).norm() <= r))
        .collect();
    RegionPartition::new(w, h, labels).unwrap()
}

fn jacobian_dets(map: &VectorGrid, part: &RegionPartition) -> Vec<f64> {
    let (w, h) = map.dims();
    let l = part.labels();
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            if [i - 1, i + 1, i - w, i + w].iter().any(|&j| l[j] != l[i]) {
                continue;
            }
            let dx = (map.get(x + 1, y) - map.get(x - 1, y)) * 0.5;
            let dy = (map.get(x, y + 1) - map.get(x, y - 1)) * 0.5;
            out.push(dx.x * dy.y - dx.y * dy.x);
        }
    }
    out
}

#[test]
fn identical_frames_are_a_fixed_point() {
    let j0 = texture(4, 40, 40, 2.0).unwrap();
    let r0 = disc_mask(40, 40, Vec2::new(20.0, 20.0), 8.0);
    let res = evolve_pair(&j0, &j0, &r0, &TrackConfig::default()).unwrap();
    assert!(res.converged);
    assert!(res.iterations_used <= 3);
    assert_eq!(res.final_region.labels(), r0.labels());
    let psi0 = signed_distance(&r0, 1).unwrap();
    for (a, b) in res.psi_final.data().iter().zip(psi0.data()) {
        assert!((a - b).abs() <= 1e-9);
    }
    let id = VectorGrid::identity_map(40, 40);
    for (a, b) in res.backward_map.data().iter().zip(id.data()) {
        assert!((*a - *b).norm() <= 1e-9);
    }
}

#[test]
fn contracted_disc_is_tracked() {
    let spec = small_spec(2);
    let seq = generate(&spec).unwrap();
    let res = evolve_pair(&seq.frames[0], &seq.frames[1], &seq.gt_regions[0], &TrackConfig::default()).unwrap();
    let d = dice(&res.final_region, &seq.gt_regions[1], 1).unwrap();
    assert!(d >= 0.95, "dice {d}");
    let first = res.residual_trace[0];
    let last = *res.residual_trace.last().unwrap();
    assert!(last <= 0.5 * first, "residual {first} -> {last}");
    let dets = jacobian_dets(&res.backward_map, &res.final_region);
    assert!(dets.iter().all(|&d| d > 0.0));
    let (w, h) = res.backward_map.dims();
    assert!(res
        .backward_map
        .data()
        .iter()
        .all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64));
    let thresholded: Vec<bool> = res.psi_final.data().iter().map(|&v| v <= 0.0).collect();
    assert_eq!(thresholded, res.final_region.mask(1));
}

#[test]
fn repeated_frames_keep_the_initial_region() {
    let j0 = texture(9, 32, 32, 2.0).unwrap();
    let frames = vec![j0; 5];
    let r0 = disc_mask(32, 32, Vec2::new(15.0, 16.0), 6.0);
    let seq = track_sequence(&frames, &r0, &TrackConfig::default()).unwrap();
    assert!(seq.is_complete());
    assert_eq!(seq.transitions.len(), 4);
    for r in seq.regions(&r0) {
        assert_eq!(r.labels(), r0.labels());
    }
}

#[test]
fn two_structures_get_their_own_levelsets() {
    let (w, h) = (48, 32);
    let mut labels = disc_mask(w, h, Vec2::new(12.0, 16.0), 6.0).labels().to_vec();
    for (i, l) in disc_mask(w, h, Vec2::new(34.0, 16.0), 6.0).labels().iter().enumerate() {
        if *l == 1 {
            labels[i] = 2;
        }
    }
    let r0 = RegionPartition::new(w, h, labels).unwrap();
    let j0 = texture(2, w, h, 2.0).unwrap();
    let res = evolve_pair(&j0, &j0, &r0, &TrackConfig::default()).unwrap();
    assert_eq!(res.psi_structures.len(), 2);
    assert_eq!(res.final_region.labels(), r0.labels());
}

#[test]
fn region_leaving_the_frame_is_reported() {
    let (w, h) = (32, 24);
    let base = texture(5, w + 8, h, 2.0).unwrap();
    let j0 = ScalarGrid::from_fn(w, h, |x, y| base.get(x + 4, y));
    let j1 = ScalarGrid::from_fn(w, h, |x, y| base.get(x + 1, y));
    let labels = (0..w * h).map(|i| u8::from(i % w == w - 1 && (i / w) % 2 == 0)).collect();
    let r0 = RegionPartition::new(w, h, labels).unwrap();
    let cfg = TrackConfig {
        topology_preserve: false,
        dt: 1.0,
        solver: SolverConfig::default().with_alphas(0.05, 0.05),
        ..TrackConfig::default()
    };
    match evolve_pair(&j0, &j1, &r0, &cfg) {
        Err(Error::VanishedRegion { label: 1, iteration }) => assert!(iteration >= 1),
        other => panic!("expected a vanished region, got {other:?}"),
    }
}

#[test]
fn failed_transition_keeps_partial_results() {
    let (w, h) = (32, 24);
    let base = texture(5, w + 8, h, 2.0).unwrap();
    let j0 = ScalarGrid::from_fn(w, h, |x, y| base.get(x + 4, y));
    let j1 = ScalarGrid::from_fn(w, h, |x, y| base.get(x + 1, y));
    let labels = (0..w * h).map(|i| u8::from(i % w == w - 1 && (i / w) % 2 == 0)).collect();
    let r0 = RegionPartition::new(w, h, labels).unwrap();
    let cfg = TrackConfig {
        topology_preserve: false,
        dt: 1.0,
        solver: SolverConfig::default().with_alphas(0.05, 0.05),
        ..TrackConfig::default()
    };
    let seq = track_sequence(&[j0.clone(), j0, j1], &r0, &cfg).unwrap();
    assert_eq!(seq.transitions.len(), 1);
    assert!(matches!(seq.failure, Some((1, Error::VanishedRegion { .. }))));
}

#[test]
fn transport_with_guard_keeps_two_discs_apart() {
    let (w, h) = (48, 24);
    let r0 = {
        let mut l = disc_mask(w, h, Vec2::new(14.0, 12.0), 6.0).labels().to_vec();
        for (i, b) in disc_mask(w, h, Vec2::new(33.0, 12.0), 6.0).labels().iter().enumerate() {
            l[i] |= b;
        }
        RegionPartition::new(w, h, l).unwrap()
    };
    // both halves drift towards the midpoint
    let v = VectorGrid::from_fn(w, h, |x, _| Vec2::new(if x < 24 { 0.4 } else { -0.4 }, 0.0));
    let vel = PiecewiseVelocity::new(v.clone(), RegionPartition::uniform(w, h, 0)).unwrap();
    let count = |psi: &ScalarGrid| {
        let m: Vec<bool> = psi.data().iter().map(|&v| v <= 0.0).collect();
        topology::tests_support::components8(&m, w, h)
    };
    let mut guarded = signed_distance(&r0, 1).unwrap();
    let mut free = guarded.clone();
    for _ in 0..50 {
        let next = transport_step(&guarded, &vel, 0.5);
        guarded = topology_guard(&guarded, &next);
        free = transport_step(&free, &vel, 0.5);
        assert_eq!(count(&guarded), 2);
    }
    assert_eq!(count(&free), 1);
}
