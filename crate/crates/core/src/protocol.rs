//! The commitment protocol over a BSC(delta) with an elastic sender.
//!
//! Commit phase, in order:
//!
//! 1. Alice sends a uniform `x ∈ {0,1}^n` over the noisy channel; Bob gets `y`.
//! 2. Bob picks `G1` from a `4n`-universal family into `l1` bits and sends it.
//! 3. Alice replies `h1 = G1(x)`.
//! 4. Bob picks `G2` from a 2-universal family into `l2` bits and sends it.
//! 5. Alice replies `h2 = G2(x)`.
//! 6. Alice picks an extractor `Ext` into `m` bits and sends it together with
//!    `q = c ⊕ Ext(x)`.
//!
//! To open, Alice reveals `(c̃, x̃)` and Bob accepts when `x̃` lies in the
//! Hamming shell of radius `n(δ ± α1)` around `y`, both hashes match and the
//! pad decodes to `c̃`.
//!
//! [`CommitSession`] enforces the step order; any call out of order is a
//! [`Error::Phase`].

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::channel::ChannelInstance;
use crate::error::{ConfigError, Error, Result};
use crate::hashing::{sample_seed, sample_seed_with, Construction, HashFamilySpec, HashSeed};
use crate::infotheory::{binary_entropy, kappa, Probability};

/// Slack allowed when comparing a Hamming distance with the real-valued ends
/// of the acceptance shell, so that e.g. `10 · (0.2 − 0.1)` still admits 1.
pub const LIST_TOLERANCE: f64 = 1e-9;

/// Default slack constants and shell half-width.
pub const DEFAULT_BETA1: f64 = 0.02;
pub const DEFAULT_BETA2: f64 = 0.01;
pub const DEFAULT_BETA3: f64 = 0.05;
pub const DEFAULT_ALPHA1: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    n: usize,
    gamma: Probability,
    delta: Probability,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    alpha1: f64,
    kappa: Probability,
    rate: f64,
    l1: usize,
    l2: usize,
    m: usize,
}

/// Checks the constraints and derives `κ`, the rate and all lengths.
pub fn derive_params(
    n: usize,
    gamma: f64,
    delta: f64,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    alpha1: f64,
) -> Result<ProtocolParams> {
    if n == 0 {
        return Err(ConfigError::ZeroBlockLength.into());
    }
    if !(gamma > 0.0 && gamma < delta && delta < 0.5) {
        return Err(ConfigError::ChannelOrdering { gamma, delta }.into());
    }
    if !(beta1 > 0.0 && beta2 > 0.0) {
        return Err(ConfigError::NonPositiveSlack { beta1, beta2 }.into());
    }
    if !(beta3 > beta1 + beta2) {
        return Err(ConfigError::Beta3TooSmall {
            beta3,
            sum: beta1 + beta2,
        }
        .into());
    }
    if !(alpha1 > 0.0 && alpha1 < delta && alpha1 < 0.5 - delta) {
        return Err(ConfigError::AlphaOutOfRange { alpha1 }.into());
    }
    let (g, d) = (Probability::new(gamma)?, Probability::new(delta)?);
    let k = kappa(g, d)?;
    let rate = binary_entropy(d) - binary_entropy(k) - beta3;
    if !(rate > 0.0) {
        return Err(ConfigError::NonPositiveRate { rate }.into());
    }
    let nf = n as f64;
    let l1 = (nf * (binary_entropy(k) + beta1)).ceil() as usize;
    let l2 = (nf * beta2).ceil() as usize;
    let m = (nf * rate).floor() as usize;
    if m == 0 {
        return Err(ConfigError::EmptyCommitment { n }.into());
    }
    for len in [l1, l2] {
        if len > n {
            return Err(ConfigError::HashTooLong { len, n }.into());
        }
    }
    Ok(ProtocolParams {
        n,
        gamma: g,
        delta: d,
        beta1,
        beta2,
        beta3,
        alpha1,
        kappa: k,
        rate,
        l1,
        l2,
        m,
    })
}

impl ProtocolParams {
    /// Default slack constants and `α1`.
    pub fn with_defaults(n: usize, gamma: f64, delta: f64) -> Result<Self> {
        derive_params(
            n,
            gamma,
            delta,
            DEFAULT_BETA1,
            DEFAULT_BETA2,
            DEFAULT_BETA3,
            DEFAULT_ALPHA1,
        )
    }

    /// Replaces the derived hash lengths, e.g. to weaken the hashes for a
    /// positive control. Zero is allowed.
    pub fn with_hash_lengths(mut self, l1: usize, l2: usize) -> Result<Self> {
        for len in [l1, l2] {
            if len > self.n {
                return Err(ConfigError::HashTooLong { len, n: self.n }.into());
            }
        }
        self.l1 = l1;
        self.l2 = l2;
        Ok(self)
    }

    /// Replaces the derived committed-string length. Zero is allowed.
    pub fn with_commit_bits(mut self, m: usize) -> Result<Self> {
        if m > self.n {
            return Err(ConfigError::HashTooLong { len: m, n: self.n }.into());
        }
        self.m = m;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> Probability {
        self.gamma
    }

    pub fn delta(&self) -> Probability {
        self.delta
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn beta3(&self) -> f64 {
        self.beta3
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn kappa(&self) -> Probability {
        self.kappa
    }

    /// `H(δ) − H(κ) − β3`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g1_spec(&self) -> HashFamilySpec {
        HashFamilySpec::new(self.n, self.l1, 4 * self.n).expect("lengths validated")
    }

    pub fn g2_spec(&self) -> HashFamilySpec {
        HashFamilySpec::new(self.n, self.l2, 2).expect("lengths validated")
    }

    pub fn ext_spec(&self) -> HashFamilySpec {
        HashFamilySpec::new(self.n, self.m, 2).expect("lengths validated")
    }

    /// Real-valued ends `n(δ − α1)`, `n(δ + α1)` of the acceptance shell.
    pub fn list_interval(&self) -> (f64, f64) {
        let n = self.n as f64;
        let d = self.delta.value();
        (n * (d - self.alpha1), n * (d + self.alpha1))
    }

    /// Integer distances admitted by the shell, as an inclusive range. Empty
    /// when `low > high`.
    pub fn list_distances(&self) -> (usize, usize) {
        let (lo, hi) = self.list_interval();
        let low = (lo - LIST_TOLERANCE).ceil().max(0.0) as usize;
        let high = ((hi + LIST_TOLERANCE).floor().max(0.0) as usize).min(self.n);
        (low, high)
    }

    /// Whether a word at Hamming distance `d` from `y` is on the list.
    pub fn distance_in_list(&self, d: usize) -> bool {
        let (low, high) = self.list_distances();
        low <= d && d <= high
    }
}

/// Whether `x_tilde` lies in the list around `y`, i.e.
/// `n(δ − α1) ≤ d_H(x̃, y) ≤ n(δ + α1)`.
pub fn list_membership(x_tilde: &BitVector, y: &BitVector, params: &ProtocolParams) -> Result<bool> {
    if x_tilde.len() != params.n || y.len() != params.n {
        return Err(Error::domain(format!(
            "list membership needs two {}-bit words, got {} and {}",
            params.n,
            x_tilde.len(),
            y.len()
        )));
    }
    Ok(params.distance_in_list(x_tilde.hamming_distance(y)?))
}

/// `2 exp(−2 n α1²)`, the two-sided Chernoff bound on an honest opening
/// falling outside the list.
pub fn soundness_bound(params: &ProtocolParams) -> f64 {
    2.0 * (-2.0 * params.n as f64 * params.alpha1 * params.alpha1).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    ListMembership,
    Hash1,
    Hash2,
    Pad,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::ListMembership => "list-membership",
            Check::Hash1 => "hash1",
            Check::Hash2 => "hash2",
            Check::Pad => "pad",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealOutcome {
    pub accepted: bool,
    pub failed_checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    Transmitted,
    FirstHashChosen,
    FirstHashSent,
    SecondHashChosen,
    SecondHashSent,
    Committed,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Start => "start",
            Phase::Transmitted => "C1 done",
            Phase::FirstHashChosen => "C2 done",
            Phase::FirstHashSent => "C3 done",
            Phase::SecondHashChosen => "C4 done",
            Phase::SecondHashSent => "C5 done",
            Phase::Committed => "committed",
        }
    }
}

/// Messages on the public noiseless channel. Fields fill in as the commit
/// phase progresses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub g1: Option<HashSeed>,
    pub h1: Option<BitVector>,
    pub g2: Option<HashSeed>,
    pub h2: Option<BitVector>,
    pub ext: Option<HashSeed>,
    pub q: Option<BitVector>,
}

/// Everything Alice holds after the commit phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliceView<'a> {
    pub c: &'a BitVector,
    pub x: &'a BitVector,
    /// Word the hashes and pad were computed from; equals `x` for an honest
    /// Alice.
    pub word: &'a BitVector,
    pub transcript: &'a Transcript,
}

/// Everything Bob holds after the commit phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BobView<'a> {
    pub y: &'a BitVector,
    pub transcript: &'a Transcript,
}

/// One run of the commit phase. Serialises to JSON with hex bit vectors and
/// wire-format seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitSession {
    params: ProtocolParams,
    c: BitVector,
    x: Option<BitVector>,
    word: Option<BitVector>,
    y: Option<BitVector>,
    transcript: Transcript,
    phase: Phase,
}

impl CommitSession {
    pub fn new(params: ProtocolParams, c: BitVector) -> Result<Self> {
        if c.len() != params.m {
            return Err(Error::domain(format!(
                "committed string has {} bits, expected m={}",
                c.len(),
                params.m
            )));
        }
        Ok(Self {
            params,
            c,
            x: None,
            word: None,
            y: None,
            transcript: Transcript::default(),
            phase: Phase::Start,
        })
    }

    fn advance(&mut self, from: Phase, to: Phase, step: &'static str) -> Result<()> {
        if self.phase != from {
            return Err(Error::Phase {
                attempted: step,
                phase: self.phase.name(),
            });
        }
        self.phase = to;
        Ok(())
    }

    /// C1: Alice draws a uniform `x` and sends it over `channel`.
    pub fn transmit<R: RngCore + ?Sized>(&mut self, channel: &mut ChannelInstance, rng: &mut R) -> Result<()> {
        self.check_phase(Phase::Start, "C1")?;
        let x = BitVector::random(self.params.n, rng);
        let y = channel.transmit(&x)?;
        self.record_transmission(x.clone(), x, y)
    }

    /// C1 for a dishonest Alice who chose the channel input, the word she
    /// will commit to, and drove the channel herself.
    pub(crate) fn record_transmission(&mut self, x: BitVector, word: BitVector, y: BitVector) -> Result<()> {
        let n = self.params.n;
        if x.len() != n || word.len() != n || y.len() != n {
            return Err(Error::domain(format!("C1 words must have {n} bits")));
        }
        self.advance(Phase::Start, Phase::Transmitted, "C1")?;
        self.x = Some(x);
        self.word = Some(word);
        self.y = Some(y);
        Ok(())
    }

    fn check_phase(&self, expected: Phase, step: &'static str) -> Result<()> {
        if self.phase != expected {
            return Err(Error::Phase {
                attempted: step,
                phase: self.phase.name(),
            });
        }
        Ok(())
    }

    fn word(&self) -> &BitVector {
        self.word.as_ref().expect("set in C1")
    }

    /// C2: Bob draws `G1`.
    pub fn choose_first_hash<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.advance(Phase::Transmitted, Phase::FirstHashChosen, "C2")?;
        self.transcript.g1 = Some(sample_seed(self.params.g1_spec(), rng));
        Ok(())
    }

    /// C3: Alice answers `h1 = G1(x)`.
    pub fn send_first_hash(&mut self) -> Result<()> {
        self.advance(Phase::FirstHashChosen, Phase::FirstHashSent, "C3")?;
        let h1 = self.transcript.g1.as_ref().expect("set in C2").eval(self.word())?;
        self.transcript.h1 = Some(h1);
        Ok(())
    }

    /// C4: Bob draws `G2`.
    pub fn choose_second_hash<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.advance(Phase::FirstHashSent, Phase::SecondHashChosen, "C4")?;
        self.transcript.g2 = Some(sample_seed_with(self.params.g2_spec(), Construction::Toeplitz, rng)?);
        Ok(())
    }

    /// C5: Alice answers `h2 = G2(x)`.
    pub fn send_second_hash(&mut self) -> Result<()> {
        self.advance(Phase::SecondHashChosen, Phase::SecondHashSent, "C5")?;
        let h2 = self.transcript.g2.as_ref().expect("set in C4").eval(self.word())?;
        self.transcript.h2 = Some(h2);
        Ok(())
    }

    /// C6: Alice draws `Ext` and sends it with `q = c ⊕ Ext(x)`.
    pub fn send_pad<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.advance(Phase::SecondHashSent, Phase::Committed, "C6")?;
        let ext = sample_seed_with(self.params.ext_spec(), Construction::Toeplitz, rng)?;
        let q = self.c.xor(&ext.eval(self.word())?)?;
        self.transcript.ext = Some(ext);
        self.transcript.q = Some(q);
        Ok(())
    }

    /// C2 to C6 in order.
    pub fn finish_commit<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.choose_first_hash(rng)?;
        self.send_first_hash()?;
        self.choose_second_hash(rng)?;
        self.send_second_hash()?;
        self.send_pad(rng)
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn alice_view(&self) -> Result<AliceView<'_>> {
        self.check_phase(Phase::Committed, "Alice's view")?;
        Ok(AliceView {
            c: &self.c,
            x: self.x.as_ref().expect("set in C1"),
            word: self.word(),
            transcript: &self.transcript,
        })
    }

    pub fn bob_view(&self) -> Result<BobView<'_>> {
        self.check_phase(Phase::Committed, "Bob's view")?;
        Ok(BobView {
            y: self.y.as_ref().expect("set in C1"),
            transcript: &self.transcript,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Runs C1 to C6 with an honest Alice. Both parties draw from `rng`.
pub fn run_commit<R: RngCore + ?Sized>(
    params: &ProtocolParams,
    c: &BitVector,
    channel: &mut ChannelInstance,
    rng: &mut R,
) -> Result<CommitSession> {
    if channel.block_len() != params.n {
        return Err(Error::domain(format!(
            "channel block length {} differs from n={}",
            channel.block_len(),
            params.n
        )));
    }
    let mut session = CommitSession::new(*params, c.clone())?;
    session.transmit(channel, rng)?;
    session.finish_commit(rng)?;
    Ok(session)
}

/// Bob's reveal-phase test. All four conditions are always evaluated.
pub fn bob_test(
    c_tilde: &BitVector,
    x_tilde: &BitVector,
    view: &BobView<'_>,
    params: &ProtocolParams,
) -> Result<RevealOutcome> {
    if c_tilde.len() != params.m || x_tilde.len() != params.n {
        return Err(Error::domain(format!(
            "opening has {} and {} bits, expected m={} and n={}",
            c_tilde.len(),
            x_tilde.len(),
            params.m,
            params.n
        )));
    }
    let t = view.transcript;
    let missing = || Error::domain("Bob's view is missing commit messages");
    let (g1, h1) = (t.g1.as_ref().ok_or_else(missing)?, t.h1.as_ref().ok_or_else(missing)?);
    let (g2, h2) = (t.g2.as_ref().ok_or_else(missing)?, t.h2.as_ref().ok_or_else(missing)?);
    let (ext, q) = (t.ext.as_ref().ok_or_else(missing)?, t.q.as_ref().ok_or_else(missing)?);
    let mut failed = Vec::new();
    if !list_membership(x_tilde, view.y, params)? {
        failed.push(Check::ListMembership);
    }
    if g1.eval(x_tilde)? != *h1 {
        failed.push(Check::Hash1);
    }
    if g2.eval(x_tilde)? != *h2 {
        failed.push(Check::Hash2);
    }
    if q.xor(&ext.eval(x_tilde)?)? != *c_tilde {
        failed.push(Check::Pad);
    }
    Ok(RevealOutcome {
        accepted: failed.is_empty(),
        failed_checks: failed,
    })
}
