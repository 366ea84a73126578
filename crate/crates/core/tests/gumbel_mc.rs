use torquegnn::torque::{gumbel_select, ScoredEdge};

fn scored(id: usize, torque: f64) -> ScoredEdge {
    ScoredEdge { edge: (id, id + 1), distance: 1.0, energy: torque, torque }
}

/// `lo` and `hi` pin the min-max range, so every middle copy normalizes to `mid`.
fn pool(mid: f64, copies: usize) -> Vec<ScoredEdge> {
    let mut c = vec![scored(0, 0.0), scored(1, 1.0)];
    c.extend((0..copies).map(|k| scored(k + 2, mid)));
    c
}

#[test]
fn argmax_frequency_matches_logit_ratio() {
    const DRAWS: usize = 100_000;
    for (mid, seed) in [(0.3, 11u64), (0.5, 12), (0.85, 13)] {
        for tau in [1.0, 0.3] {
            let picks = gumbel_select(&pool(mid, DRAWS), tau, 1.0, seed, true).unwrap();
            let middle: Vec<_> = picks.iter().filter(|c| c.torque == mid).collect();
            assert_eq!(middle.len(), DRAWS);
            let pi0 = middle[0].normalized;
            let pi1 = 1.0 - pi0;
            let freq = middle.iter().filter(|c| c.p_select > c.p_discard).count() as f64 / DRAWS as f64;
            // Temperature rescales both perturbed logits alike and leaves the argmax alone.
            let expected = pi1 / (pi0 + pi1);
            assert!((freq - expected).abs() < 0.01, "mid {mid} tau {tau}: {freq} vs {expected}");
        }
    }
}

#[test]
fn probabilities_are_complementary_under_noise() {
    let picks = gumbel_select(&pool(0.4, 5_000), 0.2, 1.0, 5, true).unwrap();
    for c in &picks {
        assert!((c.p_discard + c.p_select - 1.0).abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn mean_soft_weight_tracks_selection_probability() {
    // Noise pulls individual weights both ways but the average stays on the
    // favoured side of one half.
    let picks = gumbel_select(&pool(0.2, 50_000), 1.0, 1.0, 21, true).unwrap();
    let mean: f64 = picks.iter().filter(|c| c.torque == 0.2).map(|c| c.p_select).sum::<f64>() / 50_000.0;
    assert!(mean > 0.5 && mean < 0.8, "{mean}");
}

#[test]
fn inference_is_noise_free() {
    let a = gumbel_select(&pool(0.3, 10), 1.0, 1.0, 1, false).unwrap();
    let b = gumbel_select(&pool(0.3, 10), 1.0, 1.0, 2, false).unwrap();
    assert_eq!(a, b);
    let c = a.iter().find(|c| c.torque == 0.3).unwrap();
    assert!((c.p_select - (1.0 - c.normalized)).abs() < 1e-12);
}
