use jigsaw_core::synth::{derive_seed, random_truth, rng_for, synthesize, Confusion, ScorerModel};
use jigsaw_core::*;

fn perfect_rate(
    accuracy: f64,
    puzzles: usize,
    options: &BuildOptions,
    policy: &CutPolicy,
    master: u64,
) -> f64 {
    let model = ScorerModel::new(accuracy, Confusion::default(), 0).unwrap();
    let hits = Execution::default()
        .map_range(puzzles, |i| {
            let seed = derive_seed(master, i as u64);
            let truth = random_truth(0, 0, &mut rng_for(seed)).unwrap();
            let matrix = synthesize(&truth, &model.with_seed(derive_seed(seed, 1))).unwrap();
            solve_matrix(&matrix, options, policy).is_ok_and(|s| s.assignment == truth)
        })
        .into_iter()
        .filter(|&hit| hit)
        .count();
    hits as f64 / puzzles as f64
}

#[test]
fn perfect_rate_rises_with_accuracy() {
    let options = BuildOptions::default().with_outsiders(false);
    let rates: Vec<f64> = [0.2, 0.4, 0.65, 0.9]
        .iter()
        .map(|&a| perfect_rate(a, 500, &options, &CutPolicy::default(), 3))
        .collect();
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    assert!(rates[3] > rates[0]);
}

#[test]
fn noiseless_scorer_is_recovered_at_zero_cost() {
    let model =
        ScorerModel::new(1.0, Confusion::ConfusableNeighbor { concentration: 1.0 }, 9).unwrap();
    for i in 0..40 {
        let truth = random_truth(i % 8, i % 4, &mut rng_for(i as u64)).unwrap();
        let s = solve_matrix(
            &synthesize(&truth, &model).unwrap(),
            &BuildOptions::default(),
            &CutPolicy::default(),
        )
        .unwrap();
        assert_eq!(s.assignment, truth);
        assert!(s.cost.abs() < 1e-9);
    }
}

/// Rows barely above chance carry no usable signal, so a complete puzzle is
/// solved about as often as a uniformly random permutation would be.
#[test]
fn near_chance_scorer_matches_the_random_bound() {
    let trials = 100_000usize;
    let rate = perfect_rate(
        1.0 / 9.0 + 1e-6,
        trials,
        &BuildOptions::default().with_outsiders(false),
        &CutPolicy::new(0.0, true).unwrap(),
        17,
    );
    let p = 1.0 / 40320.0;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!(
        (rate - p).abs() <= 3.0 * sigma,
        "rate {rate}, expected {p} +- {}",
        3.0 * sigma
    );
}

/// Regression value for 2000 seeded complete puzzles at 0.65 accuracy.
#[test]
fn pinned_rate_at_typical_accuracy() {
    let rate = perfect_rate(
        0.65,
        2000,
        &BuildOptions::default(),
        &CutPolicy::default(),
        2024,
    );
    let again = perfect_rate(
        0.65,
        2000,
        &BuildOptions::default(),
        &CutPolicy::default(),
        2024,
    );
    assert_eq!(rate.to_bits(), again.to_bits());
    assert_eq!(rate, 144.0 / 2000.0);
}
