//! Acceptance criteria, run in order. Each criterion prints one line:
//!
//! ```text
//! [PASS] 6 soundness: ...
//! ```
//!
//! Lines go straight to stderr so they show up without `--nocapture`. The
//! test fails at the end if any criterion failed.

use std::io::Write;
use std::time::{Duration, Instant};

use elastic_commit::adversary::CensusMode;
use elastic_commit::capacity::{capacity_ec, capacity_gap, capacity_rec, capacity_unc, gamma_grid, gamma_star, unc_impossible};
use elastic_commit::estimator::{
    estimate_binding, estimate_census, estimate_concealment_exact, estimate_soundness_for, estimate_z_channel,
    exact_view_secrecy, AttackMode, CommitPattern, Scenario, TrialPlan,
};
use elastic_commit::hashing::{all_seeds, Construction, HashFamilySpec};
use elastic_commit::protocol::{derive_params, run_commit, ProtocolParams};
use elastic_commit::rng::{substream, Role};
use elastic_commit::{capacity::ChannelFamily, channel::ChannelInstance, BitVector, Probability};

/// H(0.2) - H(0.125) to 50 digits (mpmath).
const REC_ORACLE: f64 = 0.178_363_651_687_765_941_882_042_582_067_242_133_425_729_690_744_95;

fn p(v: f64) -> Probability {
    Probability::new(v).unwrap()
}

struct Ledger {
    failures: Vec<String>,
}

impl Ledger {
    fn record(&mut self, id: &str, name: &str, pass: bool, elapsed: Duration, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let line = format!("[{tag}] {id} {name}: {detail} ({:.2?})", elapsed);
        writeln!(std::io::stderr(), "{line}").unwrap();
        if !pass {
            self.failures.push(line);
        }
    }
}

/// Interior (γ, δ) grid with γ < δ < 1/2.
fn interior_grid(points: usize) -> Vec<(f64, f64)> {
    let mut grid = Vec::with_capacity(points * points);
    for j in 1..=points {
        let delta = 0.5 * j as f64 / (points + 1) as f64;
        for gamma in gamma_grid(delta, points) {
            grid.push((gamma, delta));
        }
    }
    grid
}

fn criterion_1(ledger: &mut Ledger) {
    let start = Instant::now();
    let value = capacity_rec(p(0.1), p(0.2)).unwrap().value;
    let elapsed = start.elapsed();
    let err = (value - REC_ORACLE).abs();
    ledger.record(
        "1",
        "capacity formula",
        err <= 1e-12 && elapsed < Duration::from_millis(1),
        elapsed,
        format!("C_REC(0.1, 0.2) = {value:.15}, |error| = {err:.1e}"),
    );
}

fn criterion_2(ledger: &mut Ledger) {
    let start = Instant::now();
    let mut violations = 0;
    let grid = interior_grid(200);
    for &(g, d) in &grid {
        let ec = capacity_ec(p(g), p(d)).unwrap().value;
        let rec = capacity_rec(p(g), p(d)).unwrap().value;
        let unc = capacity_unc(p(g), p(d)).unwrap().value;
        if !(ec > rec && rec > unc) {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    ledger.record(
        "2",
        "capacity ordering",
        violations == 0 && elapsed < Duration::from_secs(1),
        elapsed,
        format!("{violations} violations of EC > REC > UNC on {} points", grid.len()),
    );
}

fn criterion_3(ledger: &mut Ledger) {
    let start = Instant::now();
    let mut mismatches = 0;
    for &(g, d) in &interior_grid(200) {
        let zero = capacity_unc(p(g), p(d)).unwrap().value == 0.0;
        if zero != (d >= 2.0 * g * (1.0 - g)) || zero != unc_impossible(p(g), p(d)) {
            mismatches += 1;
        }
    }
    let mut worst = 0.0f64;
    for i in 1..=1000 {
        let d = 0.5 * i as f64 / 1001.0;
        let g = gamma_star(p(d)).unwrap().value();
        worst = worst.max((2.0 * g * (1.0 - g) - d).abs());
    }
    ledger.record(
        "3",
        "UNC threshold",
        mismatches == 0 && worst <= 1e-12,
        start.elapsed(),
        format!("{mismatches} threshold mismatches; max |2γ*(1-γ*) - δ| = {worst:.1e}"),
    );
}

fn criterion_4(ledger: &mut Ledger) {
    let start = Instant::now();
    let nonpositive = interior_grid(200)
        .iter()
        .filter(|&&(g, d)| capacity_gap(p(g), p(d)).unwrap() <= 0.0)
        .count();
    let mut worst_second_difference = f64::NEG_INFINITY;
    let mut worst_argmax_offset = 0.0f64;
    let mut argmax_ok = true;
    for d in [0.1, 0.2, 0.3, 0.4] {
        let points = 2000;
        let gammas = gamma_grid(d, points);
        let gaps: Vec<f64> = gammas.iter().map(|&g| capacity_gap(p(g), p(d)).unwrap()).collect();
        for w in gaps.windows(3) {
            worst_second_difference = worst_second_difference.max(w[0] - 2.0 * w[1] + w[2]);
        }
        let best = (0..gaps.len()).max_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
        let step = d / (points + 1) as f64;
        let offset = (gammas[best] - gamma_star(p(d)).unwrap().value()).abs();
        worst_argmax_offset = worst_argmax_offset.max(offset / step);
        argmax_ok &= offset <= step;
    }
    ledger.record(
        "4",
        "gap properties",
        nonpositive == 0 && worst_second_difference <= 1e-9 && argmax_ok,
        start.elapsed(),
        format!(
            "{nonpositive} non-positive gaps; max second difference {worst_second_difference:.2e}; \
             argmax within {worst_argmax_offset:.2} grid steps of γ*"
        ),
    );
}

fn criterion_5(ledger: &mut Ledger) {
    let start = Instant::now();
    let bits = 1_000_000.0;
    let sigma = (0.2f64 * 0.8 / bits).sqrt();
    let mut worst = 0.0f64;
    for s in [0.10, 0.125, 0.15, 0.175, 0.20] {
        let r = estimate_z_channel(p(0.1), p(0.2), p(s), 10_000, 100, 5).unwrap();
        assert_eq!(r.trials, 1_000_000);
        worst = worst.max((r.point_estimate - 0.2).abs() / sigma);
    }
    let elapsed = start.elapsed();
    ledger.record(
        "5",
        "converse construction",
        worst <= 3.0 && elapsed < Duration::from_secs(30),
        elapsed,
        format!("max |crossover - δ| = {worst:.2}σ over 5 values of s"),
    );
}

fn criterion_6(ledger: &mut Ledger) {
    let start = Instant::now();
    let params = ProtocolParams::with_defaults(1024, 0.1, 0.2).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for pattern in CommitPattern::ALL {
        let plan = TrialPlan::new(params, Scenario::Honest, 10_000, 6).unwrap();
        let r = estimate_soundness_for(&plan, pattern).unwrap();
        pass &= r.consistent_with_bound();
        parts.push(format!(
            "{pattern:?} {}/{} [{:.1e}, {:.1e}]",
            r.successes.unwrap(),
            r.trials,
            r.ci_low,
            r.ci_high
        ));
        if pattern == CommitPattern::Random {
            parts.push(format!("bound {:.5}", r.comparison_bound));
        }
    }
    let elapsed = start.elapsed();
    ledger.record(
        "6",
        "soundness",
        pass && elapsed < Duration::from_secs(120),
        elapsed,
        format!("rejections {}", parts.join(", ")),
    );
}

fn criterion_7(ledger: &mut Ledger) {
    let start = Instant::now();
    // Toeplitz n=8, l=4: every pair x != x' collides under exactly 1/16 of seeds.
    let spec = HashFamilySpec::new(8, 4, 2).unwrap();
    let seeds = all_seeds(spec, Construction::Toeplitz).unwrap();
    let tables: Vec<Vec<u64>> = seeds.iter().map(|s| (0..256).map(|x| s.eval_u64(x)).collect()).collect();
    let mut toeplitz_exact = true;
    for a in 0..256usize {
        for b in a + 1..256 {
            let hits = tables.iter().filter(|t| t[a] == t[b]).count();
            toeplitz_exact &= hits * 16 == seeds.len();
        }
    }

    // Polynomial n=4, l=2, ξ=4: on any 4 distinct inputs the outputs are
    // uniform on 256 joint values.
    let spec = HashFamilySpec::new(4, 2, 4).unwrap();
    let seeds = all_seeds(spec, Construction::Polynomial).unwrap();
    let tables: Vec<[u64; 16]> = seeds
        .iter()
        .map(|s| std::array::from_fn(|x| s.eval_u64(x as u64)))
        .collect();
    let mut poly_exact = true;
    for a in 0..16 {
        for b in a + 1..16 {
            for c in b + 1..16 {
                for d in c + 1..16 {
                    let mut cells = [0usize; 256];
                    for t in &tables {
                        cells[(t[a] | t[b] << 2 | t[c] << 4 | t[d] << 6) as usize] += 1;
                    }
                    poly_exact &= cells.iter().all(|&k| k * 256 == seeds.len());
                }
            }
        }
    }
    ledger.record(
        "7",
        "hash universality",
        toeplitz_exact && poly_exact,
        start.elapsed(),
        format!("Toeplitz pairwise collisions exactly 2^-4: {toeplitz_exact}; polynomial 4-wise joint uniformity: {poly_exact}"),
    );
}

fn small_params(n: usize) -> ProtocolParams {
    derive_params(n, 0.1, 0.2, 0.02, 0.01, 0.05, 0.15).unwrap()
}

/// Key distribution given a view, from the full joint law of the channel
/// input and the channel noise.
fn brute_force_key_masses(
    params: &ProtocolParams,
    y: &BitVector,
    g1: &elastic_commit::hashing::HashSeed,
    h1: &BitVector,
    g2: &elastic_commit::hashing::HashSeed,
    h2: &BitVector,
    ext: &elastic_commit::hashing::HashSeed,
) -> Vec<f64> {
    let n = params.n();
    let delta = params.delta().value();
    let mut masses = vec![0.0; 1 << params.m()];
    for xv in 0..1u64 << n {
        let x = BitVector::from_u64(xv, n);
        let hashes_match = g1.eval(&x).unwrap() == *h1 && g2.eval(&x).unwrap() == *h2;
        let key = ext.eval(&x).unwrap().iter().fold(0usize, |acc, b| acc << 1 | b as usize);
        for ev in 0..1u64 << n {
            let e = BitVector::from_u64(ev, n);
            if x.xor(&e).unwrap() != *y || !hashes_match {
                continue;
            }
            let mut mass = 1.0 / (1u64 << n) as f64;
            for bit in e.iter() {
                mass *= if bit { delta } else { 1.0 - delta };
            }
            masses[key] += mass;
        }
    }
    let total: f64 = masses.iter().sum();
    masses.iter().map(|m| m / total).collect()
}

fn key_index_order(params: &ProtocolParams, masses: &[f64]) -> Vec<f64> {
    // The estimator indexes keys by `to_u64` of the output word; the brute
    // force folds the bits MSB-first from `iter()`. Map one onto the other.
    let m = params.m();
    (0..masses.len())
        .map(|fold| {
            let bits: Vec<bool> = (0..m).map(|i| fold >> (m - 1 - i) & 1 == 1).collect();
            masses[BitVector::from_bits(bits).to_u64() as usize]
        })
        .collect()
}

fn criterion_8(ledger: &mut Ledger) {
    let start = Instant::now();
    let params = small_params(16).with_commit_bits(1).unwrap();
    let plan = TrialPlan::new(params, Scenario::Honest, 200, 8).unwrap();
    let r = estimate_concealment_exact(&plan).unwrap();

    let small = small_params(10).with_commit_bits(2).unwrap();
    let mut worst = 0.0f64;
    for t in 0..5 {
        let c = BitVector::random(2, &mut substream(80, t, Role::Commitment));
        let mut channel = ChannelInstance::new(ChannelFamily::bsc(0.2).unwrap(), 10, 80, t);
        let session = run_commit(&small, &c, &mut channel, &mut substream(80, t, Role::Alice)).unwrap();
        let view = session.bob_view().unwrap();
        let exact = exact_view_secrecy(&view, &small, small.delta()).unwrap();
        let tr = view.transcript;
        let brute = brute_force_key_masses(
            &small,
            view.y,
            tr.g1.as_ref().unwrap(),
            tr.h1.as_ref().unwrap(),
            tr.g2.as_ref().unwrap(),
            tr.h2.as_ref().unwrap(),
            tr.ext.as_ref().unwrap(),
        );
        let exact = key_index_order(&small, &exact.key_masses);
        for (a, b) in exact.iter().zip(&brute) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    ledger.record(
        "8",
        "concealment",
        r.point_estimate < r.comparison_bound && worst <= 1e-12 && elapsed < Duration::from_secs(300),
        elapsed,
        format!(
            "mean distance {:.4} [{:.4}, {:.4}] vs exact-entropy hash bound {:.4}; n=10 brute-force max deviation {worst:.1e}",
            r.point_estimate, r.ci_low, r.ci_high, r.comparison_bound
        ),
    );
}

fn criterion_9(ledger: &mut Ledger) {
    let start = Instant::now();
    let params = small_params(16);
    let scenario = Scenario::CheatingAlice { s: params.gamma() };
    let plan = TrialPlan::new(params, scenario, 1000, 9).unwrap();
    let main = estimate_binding(&plan, AttackMode::Exhaustive).unwrap();

    let weak = params.with_hash_lengths(4, 2).unwrap();
    let control = estimate_binding(&TrialPlan::new(weak, scenario, 1000, 90).unwrap(), AttackMode::Exhaustive).unwrap();

    let census = estimate_census(&plan, CensusMode::Exhaustive).unwrap();
    let census_ok = census.sent_ci_low <= census.scaled_bound && census.within_cap_fraction >= 0.99;
    let elapsed = start.elapsed();
    ledger.record(
        "9",
        "binding",
        main.successes == Some(0) && control.point_estimate > 0.5 && census_ok && elapsed < Duration::from_secs(600),
        elapsed,
        format!(
            "l1={} l2={}: {}/{} double openings (mean {:.1} consistent second openings); \
             control l1=4 l2=2: rate {:.3}; census mean I(h1) {:.2} [{:.2}, {:.2}] vs {:.2}, \
             max I(h) <= {} in {:.1}% of runs",
            params.l1(),
            params.l2(),
            main.successes.unwrap(),
            main.trials,
            main.extra["mean_search_size"],
            control.point_estimate,
            census.mean_sent_count,
            census.sent_ci_low,
            census.sent_ci_high,
            census.scaled_bound,
            census.max_count_cap,
            100.0 * census.within_cap_fraction
        ),
    );
}

fn criterion_10(ledger: &mut Ledger) {
    let start = Instant::now();
    let runs = [(256usize, 2000u64, 200u64), (1024, 1000, 50), (4096, 100, 5)];
    let mut soundness = Vec::new();
    let mut binding = Vec::new();
    for (n, honest, cheating) in runs {
        let params = derive_params(n, 0.1, 0.2, 0.02, 0.01, 0.05, 0.02).unwrap();
        let plan = TrialPlan::new(params, Scenario::Honest, honest, 10).unwrap();
        soundness.push(estimate_soundness_for(&plan, CommitPattern::Random).unwrap().point_estimate);
        let plan = TrialPlan::new(params, Scenario::CheatingAlice { s: params.gamma() }, cheating, 10).unwrap();
        binding.push(estimate_binding(&plan, AttackMode::Sampled(64)).unwrap().point_estimate);
    }
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    ledger.record(
        "10",
        "monotonicity in n",
        non_increasing(&soundness) && soundness[0] > soundness[2] && non_increasing(&binding),
        start.elapsed(),
        format!("n = 256, 1024, 4096 at α1 = 0.02: rejection {soundness:.4?}; sampled binding {binding:.4?}"),
    );
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger { failures: Vec::new() };
    criterion_1(&mut ledger);
    criterion_2(&mut ledger);
    criterion_3(&mut ledger);
    criterion_4(&mut ledger);
    criterion_5(&mut ledger);
    criterion_6(&mut ledger);
    criterion_7(&mut ledger);
    criterion_8(&mut ledger);
    criterion_9(&mut ledger);
    criterion_10(&mut ledger);
    assert!(ledger.failures.is_empty(), "failed criteria:\n{}", ledger.failures.join("\n"));
}
