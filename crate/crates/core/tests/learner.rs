use polyrl_core::learner::{FeatureMap, LinearQ};
use polyrl_core::rng::substream;
use polyrl_core::Vector;
use rand::Rng;

fn setup() -> (FeatureMap, LinearQ) {
    let fm = FeatureMap::new(8, 16, Vector::from([0.0, 0.0]), Vector::from([100.0, 100.0]), 16).unwrap();
    let q = LinearQ::new(&fm, 0.01, 0.99, 1.0).unwrap();
    (fm, q)
}

fn random_weights(q: &mut LinearQ, seed: u64) {
    let mut rng = substream(seed, 0);
    q.weights_mut().iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
}

#[test]
fn epsilon_greedy_picks_greedy_at_the_expected_rate() {
    let (fm, mut q) = setup();
    random_weights(&mut q, 1);
    let s = [37.0, 61.0];
    let best = q.greedy_index(&fm, &s).unwrap();
    let mut rng = substream(2, 0);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| q.epsilon_greedy_index(&fm, &s, 0.1, &mut rng).unwrap().0 == best)
        .count();
    let rate = hits as f64 / n as f64;
    assert!((rate - (0.9 + 0.1 / 16.0)).abs() < 0.01, "{rate}");
}

#[test]
fn full_exploration_is_uniform_over_directions() {
    let (fm, mut q) = setup();
    random_weights(&mut q, 3);
    let mut rng = substream(4, 0);
    let n = 160_000;
    let mut counts = [0usize; 16];
    for _ in 0..n {
        let (i, greedy) = q.epsilon_greedy_index(&fm, &[10.0, 10.0], 1.0, &mut rng).unwrap();
        assert!(!greedy);
        counts[i] += 1;
    }
    let e = n as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99.9% quantile of chi-square with 15 degrees of freedom
    assert!(chi2 < 37.697, "{chi2}");
}

#[test]
fn q_gradient_is_the_active_feature_indicator() {
    let (fm, mut q) = setup();
    random_weights(&mut q, 5);
    let s = [12.3, 88.8];
    let a = 7;
    let active = fm.active(&s, a).unwrap();
    let base = q.q_value(&fm, &s, a).unwrap();
    let h = 1e-6;
    let probe: Vec<usize> = active.iter().copied().chain([0, 1, fm.len() - 1, active[0] + 1]).collect();
    for i in probe {
        let w0 = q.weights()[i];
        q.weights_mut()[i] = w0 + h;
        let fd = (q.q_value(&fm, &s, a).unwrap() - base) / h;
        q.weights_mut()[i] = w0;
        let want = if active.contains(&i) { 1.0 } else { 0.0 };
        assert!((fd - want).abs() < 1e-6, "weight {i}: {fd}");
    }
}

#[test]
fn update_moves_along_the_gradient_only() {
    let (fm, mut q) = setup();
    random_weights(&mut q, 6);
    let before = q.weights().to_vec();
    let s = [40.0, 40.0];
    let td = q.td_update(&fm, &s, 3, 1.0, &[41.0, 40.0], false).unwrap();
    let active = fm.active(&s, 3).unwrap();
    let changed: Vec<usize> = (0..before.len()).filter(|&i| q.weights()[i] != before[i]).collect();
    assert_eq!(changed.len(), 8);
    for i in changed {
        assert!(active.contains(&i));
        assert!((q.weights()[i] - before[i] - 0.01 * td).abs() < 1e-15);
    }
}

#[test]
fn replaying_the_same_transitions_gives_the_same_weights() {
    let run = || {
        let (fm, mut q) = setup();
        let mut rng = substream(8, 0);
        for _ in 0..2000 {
            let s = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
            let a = rng.random_range(0..16);
            let s2 = [s[0] + rng.random_range(-1.0..1.0), s[1]];
            let r = if rng.random::<f64>() < 0.05 { 100.0 } else { 0.0 };
            q.td_update(&fm, &s, a, r, &s2, r > 0.0).unwrap();
        }
        q.weights().to_vec()
    };
    assert_eq!(run(), run());
}

#[test]
fn continuous_actions_map_to_the_closest_direction() {
    let (_, q) = setup();
    for (k, d) in q.directions().iter().enumerate() {
        let mut nudged = d.clone();
        nudged[0] += 0.05;
        nudged[1] -= 0.05;
        assert_eq!(q.nearest_index(&d.scaled(3.0)), k);
        assert_eq!(q.nearest_index(&nudged), k);
    }
}
