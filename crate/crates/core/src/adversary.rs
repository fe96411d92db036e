//! Cheating strategies.
//!
//! The cheating Alice sets her elastic channel to `s ∈ [γ, δ]` and passes her
//! input `x` through a private BSC(κ_s) to get `z`. Seen from `y`, the word `z`
//! went through a BSC(δ), exactly as an honest input would have, so she
//! commits to `z`: the hashes and the pad are computed from `z`, and `z` is
//! her first opening. At `s = δ` the private channel is noiseless and she
//! is honest.
//!
//! Binding attacks then look for a second opening `(c', x')` whose hashes
//! match the commitment and whose pad decodes to a different string. The
//! search only sees [`AliceKnowledge`]; `y` enters only when the two openings
//! are scored with [`bob_test`], so a success means Alice had a second
//! opening available that Bob would have accepted.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::channel::{flip_iid, ChannelInstance, CrossoverControl, Party};
use crate::error::{Error, Result};
use crate::hashing::HashSeed;
use crate::infotheory::{kappa, Probability};
use crate::protocol::{bob_test, BobView, CommitSession, ProtocolParams, Transcript};
use crate::rng::bernoulli;

/// Largest block length the exhaustive attack will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FixedS,
    AdaptiveSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheatingAliceConfig {
    s: Probability,
    strategy: Strategy,
    schedule: Option<Vec<Probability>>,
}

fn check_in_range(params: &ProtocolParams, s: Probability) -> Result<()> {
    if s < params.gamma() || s > params.delta() {
        return Err(Error::domain(format!(
            "crossover {s} outside [{}, {}]",
            params.gamma(),
            params.delta()
        )));
    }
    Ok(())
}

impl CheatingAliceConfig {
    pub fn fixed(params: &ProtocolParams, s: Probability) -> Result<Self> {
        check_in_range(params, s)?;
        Ok(Self {
            s,
            strategy: Strategy::FixedS,
            schedule: None,
        })
    }

    /// Per-position crossovers. `s` reports the schedule's mean.
    pub fn adaptive(params: &ProtocolParams, schedule: Vec<Probability>) -> Result<Self> {
        if schedule.len() != params.n() {
            return Err(Error::domain(format!(
                "schedule has {} entries, expected n={}",
                schedule.len(),
                params.n()
            )));
        }
        for &s in &schedule {
            check_in_range(params, s)?;
        }
        let mean = schedule.iter().map(|s| s.value()).sum::<f64>() / schedule.len().max(1) as f64;
        Ok(Self {
            s: Probability::new(mean.clamp(params.gamma().value(), params.delta().value()))?,
            strategy: Strategy::AdaptiveSchedule,
            schedule: Some(schedule),
        })
    }

    pub fn s(&self) -> Probability {
        self.s
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn schedule(&self) -> Option<&[Probability]> {
        self.schedule.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseViews {
    pub x: BitVector,
    pub z: BitVector,
    pub y: BitVector,
}

/// Draws `x` uniform, `y = BSC(s)(x)` and `z = BSC(κ_s)(x)` with independent
/// noise. `z` and `y` then differ like the two ends of a BSC(δ).
pub fn converse_sample<R: RngCore + ?Sized>(
    params: &ProtocolParams,
    s: Probability,
    rng: &mut R,
) -> Result<ConverseViews> {
    converse_sample_bits(params.gamma(), params.delta(), s, params.n(), rng)
}

/// [`converse_sample`] for an arbitrary word length, without protocol
/// parameters.
pub fn converse_sample_bits<R: RngCore + ?Sized>(
    gamma: Probability,
    delta: Probability,
    s: Probability,
    bits: usize,
    rng: &mut R,
) -> Result<ConverseViews> {
    if s < gamma || s > delta {
        return Err(Error::domain(format!("crossover {s} outside [{gamma}, {delta}]")));
    }
    let k = kappa(s, delta)?;
    let x = BitVector::random(bits, rng);
    let y = flip_iid(&x, s.value(), rng);
    let z = flip_iid(&x, k.value(), rng);
    Ok(ConverseViews { x, z, y })
}

/// What a cheating Alice knows after the commit phase. Deliberately has no
/// access to `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliceKnowledge {
    pub config: CheatingAliceConfig,
    pub c: BitVector,
    pub x: BitVector,
    /// The word committed to, `z`.
    pub word: BitVector,
    pub transcript: Transcript,
}

impl AliceKnowledge {
    fn seeds(&self) -> Result<(&HashSeed, &BitVector, &HashSeed, &BitVector, &HashSeed, &BitVector)> {
        let t = &self.transcript;
        let missing = || Error::domain("commit phase incomplete");
        Ok((
            t.g1.as_ref().ok_or_else(missing)?,
            t.h1.as_ref().ok_or_else(missing)?,
            t.g2.as_ref().ok_or_else(missing)?,
            t.h2.as_ref().ok_or_else(missing)?,
            t.ext.as_ref().ok_or_else(missing)?,
            t.q.as_ref().ok_or_else(missing)?,
        ))
    }
}

/// Runs the commit phase as the cheating Alice over `channel`, which must
/// grant Alice elasticity.
pub fn cheating_commit<R: RngCore + ?Sized>(
    params: &ProtocolParams,
    config: &CheatingAliceConfig,
    c: &BitVector,
    channel: &mut ChannelInstance,
    rng: &mut R,
) -> Result<(CommitSession, AliceKnowledge)> {
    let ctl = channel.grant(Party::Alice)?;
    let n = params.n();
    let mut session = CommitSession::new(*params, c.clone())?;
    let x = BitVector::random(n, rng);
    let (y, z) = match config.schedule() {
        None => {
            channel.set_crossover(&ctl, config.s)?;
            let y = channel.transmit(&x)?;
            let k = kappa(config.s, params.delta())?;
            (y, flip_iid(&x, k.value(), rng))
        }
        Some(schedule) => {
            let y = channel.transmit_adaptive(&ctl, &x, schedule)?;
            let mut z = x.clone();
            for (i, &s) in schedule.iter().enumerate() {
                if bernoulli(rng, kappa(s, params.delta())?.value()) {
                    z.flip(i);
                }
            }
            (y, z)
        }
    };
    session.record_transmission(x, z, y)?;
    session.finish_commit(rng)?;
    let view = session.alice_view()?;
    let knowledge = AliceKnowledge {
        config: config.clone(),
        c: view.c.clone(),
        x: view.x.clone(),
        word: view.word.clone(),
        transcript: view.transcript.clone(),
    };
    Ok((session, knowledge))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    pub c: BitVector,
    pub x: BitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingAttackResult {
    pub success: bool,
    /// Two accepted openings with different strings, when found.
    pub openings: Option<[Opening; 2]>,
    /// Candidates other than the committed word that match both hashes and
    /// decode to a different string.
    pub search_size: usize,
    /// Whether the committed opening itself passes Bob's test.
    pub first_accepted: bool,
    /// Distinct candidates examined (before hash filtering) that lie on
    /// Bob's list.
    pub pool_in_list: usize,
}

/// Second openings consistent with the commitment: `x' ≠ word`,
/// `G1(x') = h1`, `G2(x') = h2` and `Ext(x') ≠ Ext(word)`. Blind to `y`.
pub fn second_openings_exhaustive(
    knowledge: &AliceKnowledge,
    params: &ProtocolParams,
) -> Result<Vec<Opening>> {
    let n = params.n();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Budget {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (g1, h1, g2, h2, ext, q) = knowledge.seeds()?;
    let (h1, h2) = (h1.to_u64(), h2.to_u64());
    let word = knowledge.word.to_u64();
    let key = ext.eval_u64(word);
    let q = q.to_u64();
    let m = params.m();
    let mut out = Vec::new();
    for cand in 0..1u64 << n {
        if cand == word || g2.eval_u64(cand) != h2 || g1.eval_u64(cand) != h1 {
            continue;
        }
        let k = ext.eval_u64(cand);
        if k != key {
            out.push(Opening {
                c: BitVector::from_u64(q ^ k, m),
                x: BitVector::from_u64(cand, n),
            });
        }
    }
    Ok(out)
}

fn committed_opening(knowledge: &AliceKnowledge) -> Opening {
    Opening {
        c: knowledge.c.clone(),
        x: knowledge.word.clone(),
    }
}

/// Scores candidate second openings against Bob's actual view.
fn score(
    knowledge: &AliceKnowledge,
    candidates: Vec<Opening>,
    bob: &BobView<'_>,
    params: &ProtocolParams,
    pool_in_list: usize,
) -> Result<BindingAttackResult> {
    let first = committed_opening(knowledge);
    let first_accepted = bob_test(&first.c, &first.x, bob, params)?.accepted;
    let search_size = candidates.len();
    let mut openings = None;
    if first_accepted {
        for cand in candidates {
            if bob_test(&cand.c, &cand.x, bob, params)?.accepted {
                openings = Some([first, cand]);
                break;
            }
        }
    }
    Ok(BindingAttackResult {
        success: openings.is_some(),
        openings,
        search_size,
        first_accepted,
        pool_in_list,
    })
}

/// Enumerates every `x' ∈ {0,1}^n` for a second opening. `n` must not exceed
/// [`EXHAUSTIVE_LIMIT`].
pub fn binding_attack_exhaustive(
    knowledge: &AliceKnowledge,
    bob: &BobView<'_>,
    params: &ProtocolParams,
) -> Result<BindingAttackResult> {
    let candidates = second_openings_exhaustive(knowledge, params)?;
    let y = bob.y.to_u64();
    let pool_in_list = (0..1u64 << params.n())
        .filter(|v| params.distance_in_list((v ^ y).count_ones() as usize))
        .count();
    score(knowledge, candidates, bob, params, pool_in_list)
}

/// Samples `candidates` words `x ⊕ e` with `e` drawn from BSC(κ_s) noise,
/// so the number of flipped bits is Binomial(n, κ_s), and keeps those that
/// pass the hash and pad filters.
pub fn binding_attack_sampled<R: RngCore + ?Sized>(
    knowledge: &AliceKnowledge,
    bob: &BobView<'_>,
    params: &ProtocolParams,
    candidates: usize,
    rng: &mut R,
) -> Result<BindingAttackResult> {
    if candidates == 0 {
        return Err(Error::domain("sampled attack needs at least one candidate"));
    }
    let pool = sample_pool(knowledge, params, candidates, rng)?;
    let pool_in_list = pool
        .iter()
        .filter(|v| params.distance_in_list(v.hamming_distance(bob.y).expect("lengths match")))
        .count();
    let openings = filter_pool(knowledge, params, pool)?;
    score(knowledge, openings, bob, params, pool_in_list)
}

/// Distinct words `x ⊕ e`, `e ~ BSC(κ_s)^n`, from `draws` draws.
fn sample_pool<R: RngCore + ?Sized>(
    knowledge: &AliceKnowledge,
    params: &ProtocolParams,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<BitVector>> {
    let k = kappa(knowledge.config.s, params.delta())?.value();
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for _ in 0..draws {
        let cand = flip_iid(&knowledge.x, k, rng);
        if seen.insert(cand.clone()) {
            pool.push(cand);
        }
    }
    Ok(pool)
}

fn filter_pool(knowledge: &AliceKnowledge, params: &ProtocolParams, pool: Vec<BitVector>) -> Result<Vec<Opening>> {
    let (g1, h1, g2, h2, ext, q) = knowledge.seeds()?;
    let key = ext.eval(&knowledge.word)?;
    let mut out = Vec::new();
    for cand in pool {
        if cand == knowledge.word || g2.eval(&cand)? != *h2 || g1.eval(&cand)? != *h1 {
            continue;
        }
        let k = ext.eval(&cand)?;
        if k != key {
            out.push(Opening {
                c: q.xor(&k)?,
                x: cand,
            });
        }
    }
    debug_assert!(out.iter().all(|o| o.c.len() == params.m()));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "draws")]
pub enum CensusMode {
    /// Every word on Bob's list; `n ≤` [`EXHAUSTIVE_LIMIT`].
    Exhaustive,
    /// Words on Bob's list among this many BSC(κ_s) perturbations of `x`.
    Sampled(usize),
}

/// First-round hash collisions among the committed word and the candidate
/// set on Bob's list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    /// Number of distinct words counted, including the committed word.
    pub census_size: usize,
    /// `I(h1)`: words in the census hashing to the `h1` that was sent.
    pub sent_count: usize,
    /// `max_h I(h)` over all first-round hash values.
    pub max_count: usize,
    /// Bucket occupancy → number of hash values with that occupancy, over
    /// occupied buckets only.
    pub histogram: BTreeMap<usize, usize>,
}

pub fn collision_census<R: RngCore + ?Sized>(
    knowledge: &AliceKnowledge,
    bob: &BobView<'_>,
    params: &ProtocolParams,
    mode: CensusMode,
    rng: &mut R,
) -> Result<CensusReport> {
    let (g1, h1, ..) = knowledge.seeds()?;
    let mut members: Vec<BitVector> = match mode {
        CensusMode::Exhaustive => {
            let n = params.n();
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::Budget {
                    n,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let y = bob.y.to_u64();
            (0..1u64 << n)
                .filter(|v| params.distance_in_list((v ^ y).count_ones() as usize))
                .map(|v| BitVector::from_u64(v, n))
                .collect()
        }
        CensusMode::Sampled(draws) => sample_pool(knowledge, params, draws, rng)?
            .into_iter()
            .filter(|v| params.distance_in_list(v.hamming_distance(bob.y).expect("lengths match")))
            .collect(),
    };
    if !members.contains(&knowledge.word) {
        members.push(knowledge.word.clone());
    }
    let mut buckets: HashMap<BitVector, usize> = HashMap::new();
    for v in &members {
        *buckets.entry(g1.eval(v)?).or_default() += 1;
    }
    let mut histogram = BTreeMap::new();
    for &count in buckets.values() {
        *histogram.entry(count).or_default() += 1;
    }
    Ok(CensusReport {
        census_size: members.len(),
        sent_count: buckets.get(h1).copied().unwrap_or(0),
        max_count: buckets.values().copied().max().unwrap_or(0),
        histogram,
    })
}

/// Dishonest Bob privately moves the crossover of `channel` to `s`.
pub fn dishonest_bob_set(channel: &mut ChannelInstance, s: Probability) -> Result<CrossoverControl> {
    channel.set_crossover_as(Party::Bob, s)
}
