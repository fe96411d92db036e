//! String commitment over elastic binary symmetric channels.
//!
//! The crate covers the whole pipeline around one commitment scheme:
//! closed-form capacities ([`capacity`]), the channels themselves
//! ([`channel`]), the universal hash families ([`hashing`]), the commit and
//! reveal protocol ([`protocol`]), cheating strategies against it
//! ([`adversary`]) and Monte Carlo / exact estimators of its security
//! ([`estimator`]).

pub mod adversary;
pub mod bits;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod gf2n;
pub mod hashing;
pub mod infotheory;
pub mod protocol;
pub mod rng;

pub use bits::BitVector;
pub use error::{ConfigError, Error, Result};
pub use infotheory::Probability;
