//! Statistical properties of the estimators across many reruns.

use elastic_commit::estimator::{
    clopper_pearson, estimate_concealment_exact, estimate_soundness_for, estimate_z_channel, CommitPattern,
    Scenario, TrialPlan,
};
use elastic_commit::protocol::{derive_params, ProtocolParams};
use elastic_commit::Probability;
use statrs::distribution::{Binomial, Discrete};

const REPETITIONS: u64 = 300;
const TRIALS: u64 = 100;

fn loose_params() -> ProtocolParams {
    derive_params(256, 0.1, 0.2, 0.02, 0.01, 0.05, 0.02).unwrap()
}

/// Honest rejection probability: the channel flips a Binomial(n, δ) number
/// of bits and Bob rejects when that count leaves the list.
fn exact_rejection_rate(params: &ProtocolParams) -> f64 {
    let (lo, hi) = params.list_distances();
    let flips = Binomial::new(params.delta().value(), params.n() as u64).unwrap();
    1.0 - (lo..=hi).map(|d| flips.pmf(d as u64)).sum::<f64>()
}

fn rejections(params: ProtocolParams, seed: u64) -> u64 {
    let plan = TrialPlan::new(params, Scenario::Honest, TRIALS, seed).unwrap();
    estimate_soundness_for(&plan, CommitPattern::Random).unwrap().successes.unwrap()
}

#[test]
fn ninety_nine_percent_intervals_cover_the_exact_rate() {
    let params = loose_params();
    let truth = exact_rejection_rate(&params);
    let covered = (0..REPETITIONS)
        .filter(|&r| {
            let (lo, hi) = clopper_pearson(rejections(params, 1000 + r), TRIALS, 0.99);
            lo <= truth && truth <= hi
        })
        .count();
    let coverage = covered as f64 / REPETITIONS as f64;
    assert!(coverage >= 0.95, "coverage {coverage} of true rate {truth}");
}

#[test]
fn reruns_land_in_the_previous_ninety_nine_percent_interval() {
    let params = loose_params();
    let inside = (0..REPETITIONS)
        .filter(|&r| {
            let (lo, hi) = clopper_pearson(rejections(params, 2 * r), TRIALS, 0.99);
            let rerun = rejections(params, 2 * r + 1) as f64 / TRIALS as f64;
            lo <= rerun && rerun <= hi
        })
        .count();
    let frequency = inside as f64 / REPETITIONS as f64;
    assert!(frequency >= 0.95, "rerun inside previous interval in {frequency} of repetitions");
}

#[test]
fn crossover_equals_delta_across_the_elastic_range() {
    let (gamma, delta) = (0.1_f64, 0.2_f64);
    let bits = 1_000_000.0;
    let sigma = (delta * (1.0 - delta) / bits).sqrt();
    for i in 0..=10 {
        let s = gamma + (delta - gamma) * i as f64 / 10.0;
        let r = estimate_z_channel(
            Probability::new(gamma).unwrap(),
            Probability::new(delta).unwrap(),
            Probability::new(s).unwrap(),
            10_000,
            100,
            40 + i,
        )
        .unwrap();
        assert!((r.point_estimate - delta).abs() <= 3.0 * sigma, "s={s}: {}", r.point_estimate);
    }
}

#[test]
fn dishonest_bob_lowering_the_noise_learns_more() {
    let params = derive_params(14, 0.1, 0.2, 0.02, 0.01, 0.05, 0.15)
        .unwrap()
        .with_commit_bits(2)
        .unwrap();
    let honest = TrialPlan::new(params, Scenario::Honest, 60, 3).unwrap();
    let sharp = TrialPlan::new(params, Scenario::DishonestBob { s: params.gamma() }, 60, 3).unwrap();
    let honest = estimate_concealment_exact(&honest).unwrap();
    let sharp = estimate_concealment_exact(&sharp).unwrap();
    assert!(
        sharp.extra["mean_min_entropy"] < honest.extra["mean_min_entropy"],
        "{} vs {}",
        sharp.extra["mean_min_entropy"],
        honest.extra["mean_min_entropy"]
    );
    for r in [&honest, &sharp] {
        assert!(r.ci_low <= r.point_estimate && r.point_estimate <= r.ci_high);
    }
}
