//! Monte Carlo and exact small-instance estimates of soundness, binding and
//! concealment.
//!
//! Trial `t` of a plan draws everything from the substreams of
//! `(master_seed, t)`, and counts are summed with an associative reduction,
//! so a report depends only on the plan and never on the worker count or
//! scheduling. Long counting runs can checkpoint their cursor and tallies to
//! a JSON file and resume from it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::adversary::{
    binding_attack_exhaustive, binding_attack_sampled, cheating_commit, collision_census,
    converse_sample_bits, dishonest_bob_set, CensusMode, CheatingAliceConfig, EXHAUSTIVE_LIMIT,
};
use crate::bits::BitVector;
use crate::capacity::ChannelFamily;
use crate::channel::ChannelInstance;
use crate::error::{Error, Result};
use crate::infotheory::{
    binding_bound_second_round_union, distance_to_uniform, expected_collision_bound,
    leftover_hash_bound, lemma4_bound, Probability,
};
use crate::protocol::{bob_test, run_commit, soundness_bound, BobView, ProtocolParams};
use crate::rng::{substream, Role};

pub const CONFIDENCE: f64 = 0.95;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Largest block length for exact per-view enumeration.
pub const EXACT_LIMIT: usize = 20;

/// Smoothing and slack used when the min-entropy lower bound is turned into
/// a concealment bound.
pub const LEMMA4_ZETA: f64 = 0.005;
pub const LEMMA4_EPS1: f64 = 1.0 / 1024.0;

/// `η` in the expected-collision bound, as a fraction of `β1`.
pub const CENSUS_ETA_FRACTION: f64 = 0.5;

/// Trials per checkpoint write.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scenario {
    Honest,
    CheatingAlice { s: Probability },
    DishonestBob { s: Probability },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trials: u64,
    pub master_seed: u64,
    pub params: ProtocolParams,
    pub scenario: Scenario,
    /// Forces the honest channel's crossover, e.g. a noiseless channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover_override: Option<Probability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl TrialPlan {
    pub fn new(params: ProtocolParams, scenario: Scenario, trials: u64, master_seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::domain("a trial plan needs at least one trial"));
        }
        Ok(Self {
            trials,
            master_seed,
            params,
            scenario,
            crossover_override: None,
            checkpoint: None,
        })
    }

    pub fn with_crossover_override(mut self, s: Probability) -> Self {
        self.crossover_override = Some(s);
        self
    }

    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Self {
        self.checkpoint = Some(path.into());
        self
    }

    fn with_scenario(&self, scenario: Scenario) -> Self {
        Self {
            scenario,
            checkpoint: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Soundness,
    Binding,
    Concealment,
    /// Crossover between the committed word and Bob's output under the
    /// converse construction.
    Crossover,
}

/// Where a report's comparison bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundProvenance {
    /// `2 exp(-2 n α1²)`.
    ChernoffSoundness,
    /// `(8n+1)(8n) 2^(-n β2)`.
    SecondRoundUnion,
    /// Leftover hash bound at the exact conditional min-entropy of each
    /// view, averaged over views.
    LeftoverHashExact,
    /// The channel crossover δ itself.
    ChannelCrossover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub property: Property,
    pub scenario: Scenario,
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub trials: u64,
    /// Event count for rate estimates; absent for averaged distances.
    pub successes: Option<u64>,
    pub comparison_bound: f64,
    pub provenance: BoundProvenance,
    pub extra: BTreeMap<String, f64>,
}

impl SecurityReport {
    /// True when the bound is not contradicted: the lower end of the interval
    /// does not exceed it.
    pub fn consistent_with_bound(&self) -> bool {
        self.ci_low <= self.comparison_bound
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn rate(
        property: Property,
        scenario: Scenario,
        successes: u64,
        trials: u64,
        comparison_bound: f64,
        provenance: BoundProvenance,
    ) -> Self {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, CONFIDENCE);
        Self {
            property,
            scenario,
            point_estimate: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            confidence: CONFIDENCE,
            trials,
            successes: Some(successes),
            comparison_bound,
            provenance,
            extra: BTreeMap::new(),
        }
    }
}

/// Exact binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n > 0");
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (k as f64, n as f64);
    let low = if k == 0.0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("positive shapes").inverse_cdf(tail)
    };
    let high = if k == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("positive shapes").inverse_cdf(1.0 - tail)
    };
    (low, high)
}

/// Mean of `values` with a percentile bootstrap interval. The interval is
/// widened if needed so that it contains the mean.
pub fn bootstrap_mean_ci<R: Rng + ?Sized>(
    values: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> (f64, f64, f64) {
    assert!(!values.is_empty() && resamples > 0);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let sum: f64 = (0..values.len()).map(|_| values[rng.gen_range(0..values.len())]).sum();
            sum / values.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let lo = ((tail * resamples as f64).floor() as usize).min(resamples - 1);
    let hi = (((1.0 - tail) * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
    (mean, means[lo].min(mean), means[hi].max(mean))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Tally {
    trials: u64,
    successes: u64,
    aux: u64,
    class_trials: [u64; 3],
    class_successes: [u64; 3],
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.successes += o.successes;
        self.aux += o.aux;
        for i in 0..3 {
            self.class_trials[i] += o.class_trials[i];
            self.class_successes[i] += o.class_successes[i];
        }
        self
    }
}

struct Outcome {
    success: bool,
    aux: u64,
    class: usize,
}

impl From<Outcome> for Tally {
    fn from(o: Outcome) -> Tally {
        let mut t = Tally {
            trials: 1,
            successes: o.success as u64,
            aux: o.aux,
            ..Tally::default()
        };
        t.class_trials[o.class] = 1;
        t.class_successes[o.class] = o.success as u64;
        t
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointState {
    run: String,
    cursor: u64,
    tally: Tally,
}

fn run_fingerprint(label: &str, plan: &TrialPlan) -> Result<String> {
    let mut plan = plan.clone();
    plan.checkpoint = None;
    Ok(format!("{label}:{}", serde_json::to_string(&plan)?))
}

fn load_checkpoint(path: &Path, run: &str, trials: u64) -> Result<Option<(u64, Tally)>> {
    if !path.exists() {
        return Ok(None);
    }
    let state: CheckpointState = serde_json::from_str(&fs::read_to_string(path)?)?;
    if state.run != run {
        return Err(Error::domain(format!(
            "checkpoint {} belongs to a different run",
            path.display()
        )));
    }
    if state.cursor > trials || state.tally.trials != state.cursor {
        return Err(Error::domain(format!("checkpoint {} is inconsistent", path.display())));
    }
    Ok(Some((state.cursor, state.tally)))
}

fn save_checkpoint(path: &Path, run: &str, cursor: u64, tally: Tally) -> Result<()> {
    let state = CheckpointState {
        run: run.to_string(),
        cursor,
        tally,
    };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&state)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_counted<F>(label: &str, plan: &TrialPlan, trial: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<Outcome> + Sync,
{
    let run = run_fingerprint(label, plan)?;
    let (mut cursor, mut tally) = match &plan.checkpoint {
        Some(path) => load_checkpoint(path, &run, plan.trials)?.unwrap_or_default(),
        None => (0, Tally::default()),
    };
    while cursor < plan.trials {
        let end = (cursor + CHUNK).min(plan.trials);
        let chunk = (cursor..end)
            .into_par_iter()
            .map(|t| trial(t).map(Tally::from))
            .try_reduce(Tally::default, |a, b| Ok(a + b))?;
        tally = tally + chunk;
        cursor = end;
        if let Some(path) = &plan.checkpoint {
            save_checkpoint(path, &run, cursor, tally)?;
        }
    }
    Ok(tally)
}

/// Committed strings used by the soundness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitPattern {
    Zeros,
    Ones,
    Random,
}

impl CommitPattern {
    pub const ALL: [CommitPattern; 3] = [CommitPattern::Zeros, CommitPattern::Ones, CommitPattern::Random];

    fn string(self, m: usize, master_seed: u64, trial: u64) -> BitVector {
        match self {
            CommitPattern::Zeros => BitVector::zeros(m),
            CommitPattern::Ones => BitVector::ones(m),
            CommitPattern::Random => BitVector::random(m, &mut substream(master_seed, trial, Role::Commitment)),
        }
    }

    fn name(self) -> &'static str {
        match self {
            CommitPattern::Zeros => "zeros",
            CommitPattern::Ones => "ones",
            CommitPattern::Random => "random",
        }
    }
}

fn require_honest(plan: &TrialPlan) -> Result<()> {
    if plan.scenario != Scenario::Honest {
        return Err(Error::domain("soundness is estimated on honest runs only"));
    }
    Ok(())
}

/// Honest commit then reveal; true when Bob rejects.
fn honest_rejects(plan: &TrialPlan, pattern: CommitPattern, t: u64) -> Result<bool> {
    let p = &plan.params;
    let c = pattern.string(p.m(), plan.master_seed, t);
    let mut channel = ChannelInstance::new(ChannelFamily::bsc(p.delta().value())?, p.n(), plan.master_seed, t);
    if let Some(s) = plan.crossover_override {
        channel.override_crossover(s);
    }
    let mut rng = substream(plan.master_seed, t, Role::Alice);
    let session = run_commit(p, &c, &mut channel, &mut rng)?;
    let alice = session.alice_view()?;
    Ok(!bob_test(alice.c, alice.x, &session.bob_view()?, p)?.accepted)
}

/// Rejection rate of honest runs. Trial `t` commits to
/// `CommitPattern::ALL[t % 3]`; per-pattern rates go in `extra`.
pub fn estimate_soundness(plan: &TrialPlan) -> Result<SecurityReport> {
    require_honest(plan)?;
    let tally = run_counted("soundness", plan, |t| {
        let class = (t % 3) as usize;
        Ok(Outcome {
            success: honest_rejects(plan, CommitPattern::ALL[class], t)?,
            aux: 0,
            class,
        })
    })?;
    let mut report = SecurityReport::rate(
        Property::Soundness,
        plan.scenario,
        tally.successes,
        tally.trials,
        soundness_bound(&plan.params),
        BoundProvenance::ChernoffSoundness,
    );
    for (i, pattern) in CommitPattern::ALL.iter().enumerate() {
        if tally.class_trials[i] > 0 {
            report.extra.insert(
                format!("rejection_rate_{}", pattern.name()),
                tally.class_successes[i] as f64 / tally.class_trials[i] as f64,
            );
        }
    }
    Ok(report)
}

/// Rejection rate of honest runs that all commit with `pattern`.
pub fn estimate_soundness_for(plan: &TrialPlan, pattern: CommitPattern) -> Result<SecurityReport> {
    require_honest(plan)?;
    let tally = run_counted(&format!("soundness-{}", pattern.name()), plan, |t| {
        Ok(Outcome {
            success: honest_rejects(plan, pattern, t)?,
            aux: 0,
            class: 0,
        })
    })?;
    Ok(SecurityReport::rate(
        Property::Soundness,
        plan.scenario,
        tally.successes,
        tally.trials,
        soundness_bound(&plan.params),
        BoundProvenance::ChernoffSoundness,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "candidates")]
pub enum AttackMode {
    /// Every word of the block length; `n ≤` [`EXHAUSTIVE_LIMIT`].
    Exhaustive,
    /// This many distinct BSC(κ_s) perturbations of `x`.
    Sampled(usize),
}

fn cheating_s(plan: &TrialPlan) -> Result<Probability> {
    match plan.scenario {
        Scenario::CheatingAlice { s } => Ok(s),
        _ => Err(Error::domain("binding is estimated against a cheating Alice")),
    }
}

fn cheating_session(
    plan: &TrialPlan,
    s: Probability,
    t: u64,
) -> Result<(crate::protocol::CommitSession, crate::adversary::AliceKnowledge)> {
    let p = &plan.params;
    let family = ChannelFamily::rec(p.gamma().value(), p.delta().value())?;
    let mut channel = ChannelInstance::new(family, p.n(), plan.master_seed, t);
    let c = BitVector::random(p.m(), &mut substream(plan.master_seed, t, Role::Commitment));
    let config = CheatingAliceConfig::fixed(p, s)?;
    let mut rng = substream(plan.master_seed, t, Role::Alice);
    cheating_commit(p, &config, &c, &mut channel, &mut rng)
}

/// Fraction of cheating-Alice sessions where the attack finds two accepted
/// openings of different strings. `extra` holds the mean number of second
/// openings consistent with the hashes and how often the first opening was
/// accepted.
pub fn estimate_binding(plan: &TrialPlan, attack: AttackMode) -> Result<SecurityReport> {
    let s = cheating_s(plan)?;
    let n = plan.params.n();
    if attack == AttackMode::Exhaustive && n > EXHAUSTIVE_LIMIT {
        return Err(Error::Budget {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let label = match attack {
        AttackMode::Exhaustive => "binding-exhaustive".to_string(),
        AttackMode::Sampled(k) => format!("binding-sampled-{k}"),
    };
    let tally = run_counted(&label, plan, |t| {
        let (session, knowledge) = cheating_session(plan, s, t)?;
        let bob = session.bob_view()?;
        let result = match attack {
            AttackMode::Exhaustive => binding_attack_exhaustive(&knowledge, &bob, &plan.params)?,
            AttackMode::Sampled(k) => {
                let mut rng = substream(plan.master_seed, t, Role::Adversary);
                binding_attack_sampled(&knowledge, &bob, &plan.params, k, &mut rng)?
            }
        };
        Ok(Outcome {
            success: result.success,
            aux: result.search_size as u64,
            // Class 1 marks an accepted first opening.
            class: result.first_accepted as usize,
        })
    })?;
    let mut report = SecurityReport::rate(
        Property::Binding,
        plan.scenario,
        tally.successes,
        tally.trials,
        binding_bound_second_round_union(n, plan.params.beta2()),
        BoundProvenance::SecondRoundUnion,
    );
    report.extra.insert("s".into(), s.value());
    report
        .extra
        .insert("mean_search_size".into(), tally.aux as f64 / tally.trials as f64);
    report.extra.insert(
        "first_opening_acceptance".into(),
        tally.class_trials[1] as f64 / tally.trials as f64,
    );
    Ok(report)
}

/// The three crossovers a binding sweep visits: γ, the midpoint and δ.
pub fn binding_sweep_points(params: &ProtocolParams) -> Result<[Probability; 3]> {
    let (g, d) = (params.gamma().value(), params.delta().value());
    Ok([params.gamma(), Probability::new((g + d) / 2.0)?, params.delta()])
}

/// [`estimate_binding`] at each of [`binding_sweep_points`]. Binding is the
/// maximum over these.
pub fn estimate_binding_sweep(plan: &TrialPlan, attack: AttackMode) -> Result<Vec<SecurityReport>> {
    binding_sweep_points(&plan.params)?
        .into_iter()
        .map(|s| estimate_binding(&plan.with_scenario(Scenario::CheatingAlice { s }), attack))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub runs: u64,
    pub s: Probability,
    /// Mean `I(h1)` and its bootstrap interval.
    pub mean_sent_count: f64,
    pub sent_ci_low: f64,
    pub sent_ci_high: f64,
    pub mean_census_size: f64,
    /// Expected-collision bound per census word, at `η = β1/2`.
    pub collision_bound: f64,
    /// `collision_bound × mean_census_size`.
    pub scaled_bound: f64,
    pub max_count_cap: usize,
    /// Fraction of runs with `max_h I(h) ≤ max_count_cap`.
    pub within_cap_fraction: f64,
    pub worst_max_count: usize,
}

/// First-round collision census over cheating-Alice sessions.
pub fn estimate_census(plan: &TrialPlan, mode: CensusMode) -> Result<CensusSummary> {
    let s = cheating_s(plan)?;
    let p = &plan.params;
    let reports = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let (session, knowledge) = cheating_session(plan, s, t)?;
            let mut rng = substream(plan.master_seed, t, Role::Sampler);
            collision_census(&knowledge, &session.bob_view()?, p, mode, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let sent: Vec<f64> = reports.iter().map(|r| r.sent_count as f64).collect();
    let mut rng = substream(plan.master_seed, plan.trials, Role::Sampler);
    let (mean_sent_count, sent_ci_low, sent_ci_high) =
        bootstrap_mean_ci(&sent, BOOTSTRAP_RESAMPLES, CONFIDENCE, &mut rng);
    let runs = reports.len() as u64;
    let mean_census_size = reports.iter().map(|r| r.census_size as f64).sum::<f64>() / runs as f64;
    let collision_bound = expected_collision_bound(p.n(), p.beta1(), CENSUS_ETA_FRACTION * p.beta1())?;
    let max_count_cap = 8 * p.n() + 1;
    let within = reports.iter().filter(|r| r.max_count <= max_count_cap).count();
    Ok(CensusSummary {
        runs,
        s,
        mean_sent_count,
        sent_ci_low,
        sent_ci_high,
        mean_census_size,
        collision_bound,
        scaled_bound: collision_bound * mean_census_size,
        max_count_cap,
        within_cap_fraction: within as f64 / runs as f64,
        worst_max_count: reports.iter().map(|r| r.max_count).max().unwrap_or(0),
    })
}

/// Exact secrecy of the key for one of Bob's views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSecrecy {
    /// Conditional distribution of `Ext(X)`, indexed by the key as an integer.
    pub key_masses: Vec<f64>,
    pub distance: f64,
    /// `H∞(X | view)` in bits.
    pub min_entropy: f64,
    /// Words consistent with both hashes.
    pub consistent: u64,
}

/// Weights every `x` with `G1(x) = h1` and `G2(x) = h2` by the likelihood
/// of `y` through a BSC with the given crossover, and pushes the posterior
/// through `Ext`.
pub fn exact_view_secrecy(
    view: &BobView<'_>,
    params: &ProtocolParams,
    crossover: Probability,
) -> Result<ViewSecrecy> {
    let n = params.n();
    if n > EXACT_LIMIT {
        return Err(Error::Budget { n, limit: EXACT_LIMIT });
    }
    let t = view.transcript;
    let missing = || Error::domain("Bob's view is missing commit messages");
    let (g1, h1) = (t.g1.as_ref().ok_or_else(missing)?, t.h1.as_ref().ok_or_else(missing)?);
    let (g2, h2) = (t.g2.as_ref().ok_or_else(missing)?, t.h2.as_ref().ok_or_else(missing)?);
    let ext = t.ext.as_ref().ok_or_else(missing)?;
    let (h1, h2, y) = (h1.to_u64(), h2.to_u64(), view.y.to_u64());
    let s = crossover.value();
    let weight: Vec<f64> = (0..=n as i32).map(|d| s.powi(d) * (1.0 - s).powi(n as i32 - d)).collect();

    let mut key_masses = vec![0.0; 1usize << params.m()];
    let (mut total, mut peak, mut consistent) = (0.0f64, 0.0f64, 0u64);
    for x in 0..1u64 << n {
        if g2.eval_u64(x) != h2 || g1.eval_u64(x) != h1 {
            continue;
        }
        consistent += 1;
        let w = weight[(x ^ y).count_ones() as usize];
        key_masses[ext.eval_u64(x) as usize] += w;
        total += w;
        peak = peak.max(w);
    }
    if total <= 0.0 {
        return Err(Error::Internal("no word is consistent with the view".into()));
    }
    key_masses.iter_mut().for_each(|m| *m /= total);
    Ok(ViewSecrecy {
        distance: distance_to_uniform(&key_masses),
        key_masses,
        min_entropy: -(peak / total).log2(),
        consistent,
    })
}

/// Average exact distance of the key from uniform over `plan.trials`
/// sampled views, with a bootstrap interval. The comparison bound is the
/// leftover hash bound at each view's exact min-entropy, averaged; the bound
/// from the asymptotic min-entropy estimate is in `extra`.
pub fn estimate_concealment_exact(plan: &TrialPlan) -> Result<SecurityReport> {
    let p = &plan.params;
    let n = p.n();
    if n > EXACT_LIMIT {
        return Err(Error::Budget { n, limit: EXACT_LIMIT });
    }
    let (family, bob_s) = match plan.scenario {
        Scenario::Honest => (ChannelFamily::bsc(p.delta().value())?, None),
        Scenario::DishonestBob { s } => (ChannelFamily::ec(p.gamma().value(), p.delta().value())?, Some(s)),
        Scenario::CheatingAlice { .. } => {
            return Err(Error::domain("concealment is estimated against Bob"));
        }
    };
    let views = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let mut channel = ChannelInstance::new(family, n, plan.master_seed, t);
            if let Some(s) = bob_s {
                dishonest_bob_set(&mut channel, s)?;
            } else if let Some(s) = plan.crossover_override {
                channel.override_crossover(s);
            }
            let crossover = bob_s.or(plan.crossover_override).unwrap_or(p.delta());
            let c = BitVector::random(p.m(), &mut substream(plan.master_seed, t, Role::Commitment));
            let mut rng = substream(plan.master_seed, t, Role::Alice);
            let session = run_commit(p, &c, &mut channel, &mut rng)?;
            exact_view_secrecy(&session.bob_view()?, p, crossover)
        })
        .collect::<Result<Vec<_>>>()?;

    let distances: Vec<f64> = views.iter().map(|v| v.distance).collect();
    let mut rng = substream(plan.master_seed, plan.trials, Role::Sampler);
    let (mean, ci_low, ci_high) = bootstrap_mean_ci(&distances, BOOTSTRAP_RESAMPLES, CONFIDENCE, &mut rng);
    let count = views.len() as f64;
    let m = p.m() as f64;
    let exact_bound = views.iter().map(|v| leftover_hash_bound(v.min_entropy, m)).sum::<f64>() / count;
    let asymptotic_k = lemma4_bound(n, p.delta(), p.kappa(), p.beta1(), p.beta2(), LEMMA4_ZETA, LEMMA4_EPS1);

    let mut extra = BTreeMap::new();
    extra.insert(
        "mean_min_entropy".into(),
        views.iter().map(|v| v.min_entropy).sum::<f64>() / count,
    );
    extra.insert(
        "max_view_distance".into(),
        distances.iter().copied().fold(0.0, f64::max),
    );
    extra.insert("lemma4_min_entropy".into(), asymptotic_k);
    extra.insert("lemma4_lhl_bound".into(), leftover_hash_bound(asymptotic_k, m));
    Ok(SecurityReport {
        property: Property::Concealment,
        scenario: plan.scenario,
        point_estimate: mean,
        ci_low,
        ci_high,
        confidence: CONFIDENCE,
        trials: plan.trials,
        successes: None,
        comparison_bound: exact_bound,
        provenance: BoundProvenance::LeftoverHashExact,
        extra,
    })
}

/// Empirical crossover between the committed word `z` and Bob's `y` when
/// Alice drives the channel at `s`. Each bit is one Bernoulli trial, so
/// `trials` in the report is `blocks × bits`.
pub fn estimate_z_channel(
    gamma: Probability,
    delta: Probability,
    s: Probability,
    bits: usize,
    blocks: u64,
    master_seed: u64,
) -> Result<SecurityReport> {
    if bits == 0 || blocks == 0 {
        return Err(Error::domain("need at least one bit and one block"));
    }
    let flips = (0..blocks)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(master_seed, t, Role::Private);
            let v = converse_sample_bits(gamma, delta, s, bits, &mut rng)?;
            Ok::<u64, Error>(v.z.hamming_distance(&v.y)? as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let mut report = SecurityReport::rate(
        Property::Crossover,
        Scenario::CheatingAlice { s },
        flips,
        bits as u64 * blocks,
        delta.value(),
        BoundProvenance::ChannelCrossover,
    );
    report.extra.insert("s".into(), s.value());
    report.extra.insert("blocks".into(), blocks as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn small_params(n: usize) -> ProtocolParams {
        crate::protocol::derive_params(n, 0.1, 0.2, 0.02, 0.01, 0.05, 0.15)
            .unwrap()
            .with_commit_bits(1)
            .unwrap()
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // Reference values from the beta quantile definition, computed with
        // scipy.stats.beta.ppf.
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.308_497_107_818_760_8).abs() < 1e-9, "{hi}");
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.187_086_028_447_398_55).abs() < 1e-9, "{lo}");
        assert!((hi - 0.812_913_971_552_601_5).abs() < 1e-9, "{hi}");
        assert_eq!(clopper_pearson(10, 10, 0.95).1, 1.0);
    }

    #[test]
    fn bootstrap_of_constant_is_degenerate() {
        let mut rng = substream(1, 0, Role::Sampler);
        assert_eq!(bootstrap_mean_ci(&[0.25; 40], 200, 0.95, &mut rng), (0.25, 0.25, 0.25));
    }

    #[test]
    fn noiseless_channel_is_always_rejected() {
        let params = ProtocolParams::with_defaults(256, 0.1, 0.2).unwrap();
        let plan = TrialPlan::new(params, Scenario::Honest, 30, 5)
            .unwrap()
            .with_crossover_override(Probability::ZERO);
        let r = estimate_soundness(&plan).unwrap();
        assert_eq!(r.successes, Some(30));
        assert_eq!(r.point_estimate, 1.0);
    }

    #[test]
    fn generous_slack_never_rejects() {
        let params = crate::protocol::derive_params(512, 0.1, 0.2, 0.02, 0.01, 0.05, 0.199).unwrap();
        assert!(soundness_bound(&params) < 1e-17);
        let plan = TrialPlan::new(params, Scenario::Honest, 200, 9).unwrap();
        let r = estimate_soundness(&plan).unwrap();
        assert_eq!(r.successes, Some(0));
        assert!(r.consistent_with_bound());
    }

    #[test]
    fn reports_do_not_depend_on_worker_count() {
        let plan = TrialPlan::new(small_params(16), Scenario::CheatingAlice { s: p(0.1) }, 40, 3).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_binding(&plan, AttackMode::Exhaustive).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| estimate_binding(&plan, AttackMode::Exhaustive).unwrap());
        assert_eq!(one, many);
    }

    #[test]
    fn checkpoint_resumes_to_the_same_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let params = ProtocolParams::with_defaults(128, 0.1, 0.2).unwrap();
        let plan = TrialPlan::new(params, Scenario::Honest, 1500, 11).unwrap();
        let fresh = estimate_soundness(&plan).unwrap();

        // A partial state as if the run stopped after the first chunk.
        let partial = TrialPlan { trials: CHUNK, ..plan.clone() }.with_checkpoint(&path);
        let run = run_fingerprint("soundness", &plan).unwrap();
        estimate_soundness(&partial).unwrap();
        let state: CheckpointState = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(state.cursor, CHUNK);
        save_checkpoint(&path, &run, state.cursor, state.tally).unwrap();

        let resumed = estimate_soundness(&plan.clone().with_checkpoint(&path)).unwrap();
        assert_eq!(fresh, resumed);

        let other = TrialPlan { master_seed: 12, ..plan }.with_checkpoint(&path);
        assert!(estimate_soundness(&other).is_err());
    }

    #[test]
    fn exhaustive_binding_refuses_large_blocks() {
        let params = ProtocolParams::with_defaults(32, 0.1, 0.2)
            .or_else(|_| crate::protocol::derive_params(32, 0.1, 0.2, 0.02, 0.01, 0.05, 0.15))
            .unwrap();
        let plan = TrialPlan::new(params, Scenario::CheatingAlice { s: p(0.1) }, 1, 0).unwrap();
        assert!(matches!(
            estimate_binding(&plan, AttackMode::Exhaustive),
            Err(Error::Budget { n: 32, .. })
        ));
    }

    #[test]
    fn revealing_hashes_leak_the_whole_key() {
        let params = small_params(12).with_hash_lengths(12, 12).unwrap().with_commit_bits(2).unwrap();
        let plan = TrialPlan::new(params, Scenario::Honest, 10, 4).unwrap();
        let r = estimate_concealment_exact(&plan).unwrap();
        assert!((r.point_estimate - 0.75).abs() < 1e-12, "{}", r.point_estimate);
        assert_eq!(r.extra["mean_min_entropy"], 0.0);
    }

    #[test]
    fn key_distance_shrinks_with_key_length() {
        let base = small_params(14);
        let mut previous = f64::INFINITY;
        for m in [4, 2, 1] {
            let plan = TrialPlan::new(base.with_commit_bits(m).unwrap(), Scenario::Honest, 30, 8).unwrap();
            let d = estimate_concealment_exact(&plan).unwrap().point_estimate;
            assert!(d <= previous + 1e-12, "m={m}: {d} > {previous}");
            previous = d;
        }
    }

    #[test]
    fn z_channel_at_delta_is_the_plain_channel() {
        let r = estimate_z_channel(p(0.1), p(0.2), p(0.2), 10_000, 10, 1).unwrap();
        let sigma = (0.2f64 * 0.8 / 1e5).sqrt();
        assert!((r.point_estimate - 0.2).abs() < 3.0 * sigma);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn clopper_pearson_brackets_the_rate(n in 1u64..500, frac in 0.0f64..=1.0, conf in 0.5f64..0.999) {
            let k = ((n as f64) * frac).floor() as u64;
            let (lo, hi) = clopper_pearson(k, n, conf);
            let rate = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= rate + 1e-12 && rate <= hi + 1e-12 && hi <= 1.0);
        }

        #[test]
        fn bootstrap_brackets_the_mean(values in prop::collection::vec(0.0f64..1.0, 1..50), seed: u64) {
            let mut rng = substream(seed, 0, Role::Sampler);
            let (mean, lo, hi) = bootstrap_mean_ci(&values, 100, 0.95, &mut rng);
            prop_assert!(lo <= mean && mean <= hi);
        }
    }
}
