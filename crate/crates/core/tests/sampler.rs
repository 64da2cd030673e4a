use polyrl_core::rng::substream;
use polyrl_core::sampler::{rotate_towards, sample_action, sample_eta, ActionSpace};
use polyrl_core::vector::{cos_angle, dot};
use polyrl_core::Vector;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn pre_clip_angle_and_forward_bias(
        dim in 2usize..9,
        seed in any::<u64>(),
        eta in 0.01f64..1.5,
    ) {
        let space = ActionSpace::symmetric(dim, 1.0).unwrap();
        let mut rng = substream(seed, 0);
        let prev = space.sample_uniform(&mut rng);
        let s = sample_action(&prev, eta, &space, &mut rng).unwrap();
        prop_assume!(!s.fallback);
        let c = cos_angle(&prev, &s.pre_clip).unwrap();
        prop_assert!((c.clamp(-1.0, 1.0).acos() - eta).abs() < 1e-9);
        prop_assert!(dot(&prev, &s.pre_clip) > 0.0);
        prop_assert!(space.contains(&s.action));
    }

    #[test]
    fn rotation_keeps_the_parallel_part(
        p in prop::collection::vec(-1.0f64..1.0, 3),
        eta in 0.05f64..1.4,
    ) {
        let prev = [0.3, -0.2, 0.9];
        let prev_sq = dot(&prev, &prev);
        if let Some(q) = rotate_towards(&prev, prev_sq, &p, eta.tan()) {
            // projection on prev has the magnitude of p's projection
            let along = dot(&q, &prev) / prev_sq.sqrt();
            let p_along = dot(&p, &prev).abs() / prev_sq.sqrt();
            prop_assert!((along - p_along).abs() < 1e-9);
        }
    }
}

#[test]
fn clipping_stays_in_asymmetric_box() {
    let space = ActionSpace::new(Vector::from([-0.2, -1.0, 0.0]), Vector::from([1.0, 0.5, 2.0])).unwrap();
    let mut rng = substream(11, 0);
    let mut prev = space.sample_uniform(&mut rng);
    for _ in 0..20_000 {
        let s = sample_action(&prev, 0.3, &space, &mut rng).unwrap();
        assert!(space.contains(&s.action));
        prev = s.action;
    }
}

#[test]
fn azimuth_is_uniform_in_3d() {
    // Around prev = e_z the component orthogonal to prev must have a uniform
    // azimuth; chi-square over 12 sectors.
    let space = ActionSpace::symmetric(3, 1.0).unwrap();
    let prev = [0.0, 0.0, 0.5];
    let mut rng = substream(5, 0);
    let sectors = 12;
    let n = 100_000;
    let mut counts = vec![0usize; sectors];
    for _ in 0..n {
        let s = sample_action(&prev, 0.4, &space, &mut rng).unwrap();
        let a = s.pre_clip[1].atan2(s.pre_clip[0]);
        let k = (((a + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)) * sectors as f64) as usize;
        counts[k.min(sectors - 1)] += 1;
    }
    let e = n as f64 / sectors as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99th percentile of chi-square with 11 degrees of freedom
    assert!(chi2 < 24.725, "chi2 {chi2} counts {counts:?}");
}

#[test]
fn eta_distribution() {
    let mut rng = substream(9, 0);
    let n = 50_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_eta(0.2, 1e-4, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 0.2).abs() < 4.0 * (1e-4f64 / n as f64).sqrt());
    assert!((var / 1e-4 - 1.0).abs() < 0.03);
    assert_eq!(sample_eta(0.2, 0.0, &mut rng), 0.2);
    assert!(sample_eta(-3.0, 0.0, &mut rng) > 0.0);
    assert!(sample_eta(3.0, 0.0, &mut rng) < std::f64::consts::FRAC_PI_2);
    let _: f64 = rng.random();
}
