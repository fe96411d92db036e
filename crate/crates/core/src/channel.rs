//! Simulated elastic binary symmetric channels.
//!
//! A [`ChannelInstance`] starts at crossover `delta`. Only a party holding a
//! [`CrossoverControl`] for that instance can move it, and the current value
//! is readable only through that token, so protocol code driving an honest
//! party has no way to observe it.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::capacity::ChannelFamily;
use crate::error::{Error, Result};
use crate::infotheory::Probability;
use crate::rng::{bernoulli, substream, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
        })
    }
}

/// Closed interval of crossover probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRange {
    pub low: Probability,
    pub high: Probability,
}

impl CrossoverRange {
    pub fn contains(&self, s: Probability) -> bool {
        self.low <= s && s <= self.high
    }
}

/// Which parties may privately move the crossover, and how far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityRights {
    pub alice: Option<CrossoverRange>,
    pub bob: Option<CrossoverRange>,
}

impl ElasticityRights {
    pub fn for_family(family: &ChannelFamily) -> Self {
        let delta = family.delta();
        let range = |low: Option<Probability>| low.map(|low| CrossoverRange { low, high: delta });
        Self {
            alice: range(family.alice_floor()),
            bob: range(family.bob_floor()),
        }
    }

    pub fn range(&self, party: Party) -> Option<CrossoverRange> {
        match party {
            Party::Alice => self.alice,
            Party::Bob => self.bob,
        }
    }

    pub fn alice_may_set(&self) -> bool {
        self.alice.is_some()
    }

    pub fn bob_may_set(&self) -> bool {
        self.bob.is_some()
    }
}

static NEXT_CHANNEL_ID: AtomicU64 = AtomicU64::new(1);

/// Capability to set and read the crossover of one channel instance, held by
/// the dishonest party of a scenario.
#[derive(Debug)]
pub struct CrossoverControl {
    channel: u64,
    party: Party,
    range: CrossoverRange,
}

impl CrossoverControl {
    pub fn party(&self) -> Party {
        self.party
    }

    pub fn range(&self) -> CrossoverRange {
        self.range
    }

    pub fn current(&self, ch: &ChannelInstance) -> Result<Probability> {
        ch.check_token(self)?;
        Ok(ch.current)
    }
}

pub struct ChannelInstance {
    id: u64,
    family: ChannelFamily,
    rights: ElasticityRights,
    block_len: usize,
    current: Probability,
    rng: ChaCha20Rng,
}

impl fmt::Debug for ChannelInstance {
    // current crossover deliberately left out
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelInstance")
            .field("family", &self.family)
            .field("block_len", &self.block_len)
            .finish_non_exhaustive()
    }
}

impl ChannelInstance {
    /// A channel for `block_len`-bit blocks whose noise comes from the
    /// channel substream of `(master_seed, trial)`.
    pub fn new(family: ChannelFamily, block_len: usize, master_seed: u64, trial: u64) -> Self {
        Self::with_rng(family, block_len, substream(master_seed, trial, Role::Channel))
    }

    pub fn with_rng(family: ChannelFamily, block_len: usize, rng: ChaCha20Rng) -> Self {
        Self {
            id: NEXT_CHANNEL_ID.fetch_add(1, Ordering::Relaxed),
            family,
            rights: ElasticityRights::for_family(&family),
            block_len,
            current: family.delta(),
            rng,
        }
    }

    pub fn family(&self) -> &ChannelFamily {
        &self.family
    }

    pub fn rights(&self) -> &ElasticityRights {
        &self.rights
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Hands `party` control of the crossover if the family grants it.
    pub fn grant(&self, party: Party) -> Result<CrossoverControl> {
        let range = self.rights.range(party).ok_or_else(|| Error::RightsViolation {
            party,
            family: self.family.to_string(),
        })?;
        Ok(CrossoverControl {
            channel: self.id,
            party,
            range,
        })
    }

    fn check_token(&self, ctl: &CrossoverControl) -> Result<()> {
        if ctl.channel != self.id {
            return Err(Error::RightsViolation {
                party: ctl.party,
                family: format!("{} (token issued for another channel)", self.family),
            });
        }
        Ok(())
    }

    fn check_range(ctl: &CrossoverControl, s: Probability) -> Result<()> {
        if !ctl.range.contains(s) {
            return Err(Error::domain(format!(
                "crossover {s} outside {}'s range [{}, {}]",
                ctl.party, ctl.range.low, ctl.range.high
            )));
        }
        Ok(())
    }

    pub fn set_crossover(&mut self, ctl: &CrossoverControl, s: Probability) -> Result<()> {
        self.check_token(ctl)?;
        Self::check_range(ctl, s)?;
        self.current = s;
        Ok(())
    }

    /// [`ChannelInstance::grant`] followed by [`ChannelInstance::set_crossover`].
    pub fn set_crossover_as(&mut self, party: Party, s: Probability) -> Result<CrossoverControl> {
        let ctl = self.grant(party)?;
        self.set_crossover(&ctl, s)?;
        Ok(ctl)
    }

    /// Sets the crossover without any rights check. Only for degenerate test
    /// configurations such as a noiseless channel.
    pub fn override_crossover(&mut self, s: Probability) {
        self.current = s;
    }

    fn check_len(&self, x: &BitVector) -> Result<()> {
        if x.len() != self.block_len {
            return Err(Error::domain(format!(
                "input has {} bits, channel block length is {}",
                x.len(),
                self.block_len
            )));
        }
        Ok(())
    }

    /// Flips each bit independently with the current crossover.
    pub fn transmit(&mut self, x: &BitVector) -> Result<BitVector> {
        self.check_len(x)?;
        let s = self.current.value();
        Ok(flip_iid(x, s, &mut self.rng))
    }

    /// Flips bit `i` with probability `schedule[i]`.
    pub fn transmit_adaptive(
        &mut self,
        ctl: &CrossoverControl,
        x: &BitVector,
        schedule: &[Probability],
    ) -> Result<BitVector> {
        self.check_token(ctl)?;
        self.check_len(x)?;
        if schedule.len() != x.len() {
            return Err(Error::domain(format!(
                "schedule has {} entries for {} bits",
                schedule.len(),
                x.len()
            )));
        }
        for &s in schedule {
            Self::check_range(ctl, s)?;
        }
        let mut y = x.clone();
        for (i, s) in schedule.iter().enumerate() {
            if bernoulli(&mut self.rng, s.value()) {
                y.flip(i);
            }
        }
        Ok(y)
    }
}

/// Passes `x` through a BSC with crossover `p` driven by `rng`.
pub fn flip_iid<R: rand::RngCore + ?Sized>(x: &BitVector, p: f64, rng: &mut R) -> BitVector {
    let mut y = x.clone();
    for i in 0..x.len() {
        if bernoulli(rng, p) {
            y.flip(i);
        }
    }
    y
}
