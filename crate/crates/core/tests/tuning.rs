//! Hyperparameter search on synthetic annotations.

mod common;

use sess::tuning::{evaluate_params, random_search};
use sess::{mock_provider, HyperParams, SearchSpace};

#[test]
fn planted_params_beat_most_random_trials() {
    let p = mock_provider(77, 16);
    let planted = HyperParams::new(0.6, 0.3, 0.2, 4, 1.8).unwrap();
    let ds = common::planted_dataset(&p, &planted, 8, 0.02, 5);
    let own = evaluate_params(&planted, &ds, &p).unwrap();
    let (_, history) = random_search(&SearchSpace::default(), &ds, &p, 60, 3, |_, _| {}).unwrap();
    let beaten = history.iter().filter(|t| own.pearson >= t.pearson).count();
    assert!(beaten as f64 >= 0.95 * history.len() as f64, "{beaten} of {}", history.len());
}

#[test]
fn single_trial_is_the_best() {
    let p = mock_provider(1, 8);
    let ds = common::planted_dataset(&p, &HyperParams::default(), 2, 0.05, 1);
    let (best, history) = random_search(&SearchSpace::default(), &ds, &p, 1, 9, |_, _| {}).unwrap();
    assert_eq!(history.len(), 1);
    assert_eq!(best, history[0]);
}

#[test]
fn best_is_the_maximum_and_history_is_seeded() {
    let p = mock_provider(4, 8);
    let ds = common::planted_dataset(&p, &HyperParams::default(), 3, 0.05, 2);
    let run = |seed| random_search(&SearchSpace::default(), &ds, &p, 30, seed, |_, _| {}).unwrap();
    let (best, history) = run(8);
    let max = history.iter().map(|t| t.pearson).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best.pearson, max);
    assert_eq!(run(8).1, history);
    assert_ne!(run(9).1, history);
}
