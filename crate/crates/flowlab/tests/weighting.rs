//! Property tests and brute-force oracles for the weighting scheme.

use flowlab::weighting::{
    compute_weights, compute_weights_with, dro_weights, entropic_objective, normalize_weights,
    select_temperature, LossVector, Temperature, TemperaturePolicy,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loss_vec(values: Vec<f64>) -> LossVector {
    LossVector::new(values).unwrap()
}

/// Uniform point on the simplex via normalized exponentials.
fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn simplex_from(values: Vec<f64>) -> flowlab::weighting::SimplexWeights {
    let w = flowlab::weighting::WeightVector::from_values(
        values.iter().map(|v| v.min(1.0)).collect(),
        Temperature::Value(1.0),
    )
    .unwrap();
    normalize_weights(&w).unwrap()
}

proptest! {
    /// Order reversal: smaller loss never gets the smaller weight, and the
    /// ordering is strict when neither weight underflowed.
    #[test]
    fn order_reversal(
        losses in proptest::collection::vec(0.0f64..50.0, 2..40),
        tau in 0.1f64..10.0,
    ) {
        let lv = loss_vec(losses.clone());
        let w = compute_weights_with(&lv, tau).unwrap();
        for i in 0..losses.len() {
            for j in 0..losses.len() {
                if losses[i] <= losses[j] {
                    prop_assert!(w.values()[i] >= w.values()[j]);
                }
                if losses[i] < losses[j] && w.values()[i] > 0.0 && w.values()[j] > 0.0 {
                    prop_assert!(w.values()[i] > w.values()[j]);
                }
            }
        }
    }

    /// Weights always land in [0, 1].
    #[test]
    fn weights_live_in_unit_interval(
        losses in proptest::collection::vec(0.0f64..1e6, 1..50),
        tau in 1e-3f64..1e3,
    ) {
        let w = compute_weights_with(&loss_vec(losses), tau).unwrap();
        for &v in w.values() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    /// Normalized weights sum to one.
    #[test]
    fn normalized_weights_sum_to_one(
        losses in proptest::collection::vec(0.0f64..20.0, 1..60),
        tau in 0.05f64..50.0,
    ) {
        let w = compute_weights_with(&loss_vec(losses), tau).unwrap();
        let pi = normalize_weights(&w).unwrap();
        let total: f64 = pi.values().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    /// The DRO weighting is monotone: bigger loss, bigger weight.
    #[test]
    fn dro_is_monotone(
        losses in proptest::collection::vec(0.0f64..30.0, 2..40),
        tau in 0.1f64..10.0,
    ) {
        let pi = dro_weights(&loss_vec(losses.clone()), tau).unwrap();
        for i in 0..losses.len() {
            for j in 0..losses.len() {
                if losses[i] <= losses[j] {
                    prop_assert!(pi.values()[i] <= pi.values()[j] + 1e-15);
                }
            }
        }
    }

    /// DRO/FLOW duality: dro_weights(ℓ, τ) equals the normalized FLOW
    /// weights of the reflected losses `max(ℓ) − ℓ`.
    #[test]
    fn dro_flow_duality(
        losses in proptest::collection::vec(0.0f64..25.0, 1..40),
        tau in 0.1f64..10.0,
    ) {
        let max = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let reflected: Vec<f64> = losses.iter().map(|&l| max - l).collect();
        let via_dro = dro_weights(&loss_vec(losses), tau).unwrap();
        let via_flow =
            normalize_weights(&compute_weights_with(&loss_vec(reflected), tau).unwrap()).unwrap();
        for (a, b) in via_dro.values().iter().zip(via_flow.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    /// Median is exactly Percentile(50).
    #[test]
    fn median_equals_percentile_fifty(
        losses in proptest::collection::vec(0.0f64..10.0, 1..30),
    ) {
        let lv = loss_vec(losses);
        let med = select_temperature(&lv, &TemperaturePolicy::Median).unwrap();
        let p50 = select_temperature(&lv, &TemperaturePolicy::Percentile(50.0)).unwrap();
        prop_assert_eq!(med, p50);
    }
}

#[test]
fn temperature_limits() {
    let losses = loss_vec(vec![0.3, 1.1, 4.0, 0.05, 2.2]);
    let max_loss: f64 = 4.0;

    // τ → ∞: normalized weights approach uniform
    let w = compute_weights_with(&losses, 1e9 * max_loss).unwrap();
    let pi = normalize_weights(&w).unwrap();
    let n = losses.len() as f64;
    for &p in pi.values() {
        assert!((p - 1.0 / n).abs() < 1e-6, "deviation {}", (p - 1.0 / n).abs());
    }

    // τ → 0⁺: mass concentrates on the argmin loss
    let w = compute_weights_with(&losses, 1e-3).unwrap();
    let pi = normalize_weights(&w).unwrap();
    assert!(pi.values()[3] > 1.0 - 1e-9);
}

/// Prop.-1 optimality oracle: the normalized exponential weights minimize
/// the entropic objective against a dense random simplex sample and all
/// one-hot vertices.
#[test]
fn normalized_weights_minimize_entropic_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = rng.gen_range(2..=10);
        let losses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..8.0)).collect();
        let tau = rng.gen_range(0.1..10.0);
        let lv = loss_vec(losses);
        let star = normalize_weights(&compute_weights_with(&lv, tau).unwrap()).unwrap();
        let g_star = entropic_objective(&star, &lv, tau).unwrap();

        for _ in 0..10_000 {
            let candidate = simplex_from(random_simplex(n, &mut rng));
            let g = entropic_objective(&candidate, &lv, tau).unwrap();
            assert!(
                g_star <= g + 1e-10,
                "simplex point beat the closed form: {g_star} > {g}"
            );
        }
        for hot in 0..n {
            let mut v = vec![0.0; n];
            v[hot] = 1.0;
            let g = entropic_objective(&simplex_from(v), &lv, tau).unwrap();
            assert!(g_star <= g + 1e-10, "vertex {hot} beat the closed form");
        }
    }
}

#[test]
fn degenerate_chain_ends_in_uniform_weights() {
    let lv = loss_vec(vec![0.0, 0.0, 0.0]);
    let tau = select_temperature(&lv, &TemperaturePolicy::Median).unwrap();
    assert_eq!(tau, Temperature::DegenerateUniform);
    let w = compute_weights(&lv, tau).unwrap();
    assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
    let pi = normalize_weights(&w).unwrap();
    for &p in pi.values() {
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }
}
