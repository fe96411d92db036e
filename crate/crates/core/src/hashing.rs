//! Universal hash families on fixed-length bit strings.
//!
//! Two constructions are provided:
//!
//! * **Polynomial**: a uniformly random polynomial of degree `ξ − 1` over
//!   GF(2^n), evaluated at the field element whose coefficient of `z^i` is bit
//!   `i` of the input. The output is the low `l` bits of the value. Values on
//!   any `ξ` distinct inputs are jointly uniform.
//! * **Toeplitz**: an `l × n` Toeplitz matrix over GF(2) with
//!   `T[i][j] = t[i − j + n − 1]`, described by `n + l − 1` bits. Distinct
//!   inputs collide with probability exactly `2^(−l)`, but the zero input
//!   always hashes to zero, so only `ξ = 2` is accepted and only the
//!   collision property holds.
//!
//! # Wire format
//!
//! ```text
//! byte 0        construction tag: 0 = polynomial, 1 = Toeplitz
//! bytes 1..5    n, u32 big-endian
//! bytes 5..9    l, u32 big-endian
//! bytes 9..13   ξ, u32 big-endian
//! bytes 13..    description bits, most significant bit first, zero padded
//! ```
//!
//! Polynomial description bits are the coefficients back to back, constant
//! term first, each as `n` bits from `z^0` upward. Toeplitz description bits
//! are `t[0], t[1], …, t[n + l − 2]`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::gf2n::Field;

/// Largest number of output cells `2^(l·points)` a universality test may tabulate.
pub const MAX_TEST_CELLS: usize = 1 << 24;

/// Largest number of seeds [`all_seeds`] will enumerate.
pub const MAX_ENUMERATED_SEEDS: u64 = 1 << 24;

const HEADER_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Polynomial,
    Toeplitz,
}

impl Construction {
    fn tag(self) -> u8 {
        match self {
            Construction::Polynomial => 0,
            Construction::Toeplitz => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Construction::Polynomial),
            1 => Ok(Construction::Toeplitz),
            t => Err(Error::Wire(format!("unknown construction tag {t}"))),
        }
    }
}

/// Maps `n`-bit strings to `l`-bit strings with `ξ`-wise independence.
///
/// `l = 0` is allowed: the hash is then the constant empty string, which is
/// what a zero-length hash output in the protocol degenerates to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashFamilySpec {
    input_bits: usize,
    output_bits: usize,
    independence: usize,
}

impl HashFamilySpec {
    pub fn new(input_bits: usize, output_bits: usize, independence: usize) -> Result<Self> {
        if input_bits == 0 {
            return Err(Error::domain("hash input length must be positive"));
        }
        if output_bits > input_bits {
            return Err(Error::domain(format!(
                "hash output length {output_bits} exceeds input length {input_bits}"
            )));
        }
        if independence < 2 {
            return Err(Error::domain(format!(
                "independence must be at least 2, got {independence}"
            )));
        }
        if input_bits > crate::gf2n::MAX_DEGREE {
            return Err(Error::domain(format!(
                "hash input length {input_bits} exceeds {}",
                crate::gf2n::MAX_DEGREE
            )));
        }
        Ok(Self {
            input_bits,
            output_bits,
            independence,
        })
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn independence(&self) -> usize {
        self.independence
    }

    /// Number of random bits in a seed of the given construction.
    pub fn seed_bits(&self, construction: Construction) -> usize {
        match construction {
            Construction::Polynomial => self.independence * self.input_bits,
            Construction::Toeplitz => self.input_bits + self.output_bits.max(1) - 1,
        }
    }

    fn check_construction(&self, construction: Construction) -> Result<()> {
        if construction == Construction::Toeplitz && self.independence != 2 {
            return Err(Error::domain(format!(
                "Toeplitz family is only pairwise universal, got independence {}",
                self.independence
            )));
        }
        Ok(())
    }
}

/// One member of a hash family.
#[derive(Clone)]
pub struct HashSeed {
    spec: HashFamilySpec,
    construction: Construction,
    /// Polynomial: `ξ` field elements of `words` words each, constant term
    /// first. Toeplitz: the `t` bits, bit `k` at word `k / 64`.
    data: Vec<u64>,
    field: Option<Arc<Field>>,
}

impl PartialEq for HashSeed {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.construction == other.construction && self.data == other.data
    }
}

impl Eq for HashSeed {}

impl fmt::Debug for HashSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HashSeed")
            .field("spec", &self.spec)
            .field("construction", &self.construction)
            .field("seed_bits", &self.spec.seed_bits(self.construction))
            .finish()
    }
}

fn element_words(n: usize) -> usize {
    n.div_ceil(64)
}

fn mask_tail(words: &mut [u64], bits: usize) {
    let rem = bits % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

/// 64 bits of `words` starting at bit `offset`; bits past the end read as zero.
#[inline]
fn window64(words: &[u64], offset: usize) -> u64 {
    let (q, r) = (offset / 64, offset % 64);
    let lo = words.get(q).copied().unwrap_or(0);
    if r == 0 {
        lo
    } else {
        let hi = words.get(q + 1).copied().unwrap_or(0);
        (lo >> r) | (hi << (64 - r))
    }
}

impl HashSeed {
    /// Builds a seed from its description. Polynomial coefficients are given
    /// as `ξ` bit vectors of length `n`, constant term first; a Toeplitz
    /// description is one bit vector of length `n + l − 1`.
    pub fn from_parts(
        spec: HashFamilySpec,
        construction: Construction,
        parts: &[BitVector],
    ) -> Result<Self> {
        spec.check_construction(construction)?;
        let n = spec.input_bits;
        let data = match construction {
            Construction::Polynomial => {
                if parts.len() != spec.independence {
                    return Err(Error::domain(format!(
                        "expected {} coefficients, got {}",
                        spec.independence,
                        parts.len()
                    )));
                }
                let mut data = Vec::with_capacity(spec.independence * element_words(n));
                for c in parts {
                    if c.len() != n {
                        return Err(Error::domain(format!(
                            "coefficient has {} bits, expected {n}",
                            c.len()
                        )));
                    }
                    data.extend_from_slice(c.words());
                }
                data
            }
            Construction::Toeplitz => {
                let bits = spec.seed_bits(construction);
                match parts {
                    [t] if t.len() == bits => t.words().to_vec(),
                    _ => {
                        return Err(Error::domain(format!(
                            "Toeplitz description must be one vector of {bits} bits"
                        )))
                    }
                }
            }
        };
        Self::assemble(spec, construction, data)
    }

    fn assemble(spec: HashFamilySpec, construction: Construction, data: Vec<u64>) -> Result<Self> {
        let field = match construction {
            Construction::Polynomial => Some(Field::get(spec.input_bits)?),
            Construction::Toeplitz => None,
        };
        Ok(Self {
            spec,
            construction,
            data,
            field,
        })
    }

    pub fn spec(&self) -> HashFamilySpec {
        self.spec
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    /// The description as bit vectors, in the shape [`HashSeed::from_parts`] takes.
    pub fn parts(&self) -> Vec<BitVector> {
        let n = self.spec.input_bits;
        match self.construction {
            Construction::Polynomial => self
                .data
                .chunks_exact(element_words(n))
                .map(|c| BitVector::from_words(c.to_vec(), n))
                .collect(),
            Construction::Toeplitz => vec![BitVector::from_words(
                self.data.clone(),
                self.spec.seed_bits(self.construction),
            )],
        }
    }

    /// Hashes `x`, which must have `input_bits` bits.
    pub fn eval(&self, x: &BitVector) -> Result<BitVector> {
        let n = self.spec.input_bits;
        if x.len() != n {
            return Err(Error::domain(format!(
                "hash input has {} bits, expected {n}",
                x.len()
            )));
        }
        let l = self.spec.output_bits;
        if n <= 64 {
            return Ok(BitVector::from_u64(self.eval_u64(x.to_u64()), l));
        }
        let words = match self.construction {
            Construction::Polynomial => {
                let field = self.field.as_ref().expect("polynomial seed has a field");
                let mut v = field.eval_poly(&self.data, x.words());
                v.truncate(element_words(l));
                mask_tail(&mut v, l);
                v
            }
            Construction::Toeplitz => {
                let mut v = self.toeplitz(x.words());
                v.truncate(element_words(l));
                v
            }
        };
        Ok(BitVector::from_words(words, l))
    }

    /// [`HashSeed::eval`] for `input_bits ≤ 64`, on bare words. Input bits at
    /// or above `input_bits` must be zero.
    pub fn eval_u64(&self, x: u64) -> u64 {
        let (n, l) = (self.spec.input_bits, self.spec.output_bits);
        assert!(n <= 64, "eval_u64 needs input_bits <= 64");
        debug_assert!(n == 64 || x >> n == 0);
        let v = match self.construction {
            Construction::Polynomial => self
                .field
                .as_ref()
                .expect("polynomial seed has a field")
                .eval_poly_small(&self.data, x),
            Construction::Toeplitz => {
                let rev = x.reverse_bits() >> (64 - n);
                let mut out = 0u64;
                for i in 0..l {
                    let w = window64(&self.data, i) & (u64::MAX >> (64 - n));
                    out |= u64::from((rev & w).count_ones() & 1) << i;
                }
                out
            }
        };
        if l == 64 {
            v
        } else {
            v & ((1u64 << l) - 1)
        }
    }

    /// Output bit `i` is the parity of `x_j · t[i + (n − 1 − j)]` over `j`,
    /// i.e. the inner product of the reversed input with `t[i..i + n]`.
    fn toeplitz(&self, x: &[u64]) -> Vec<u64> {
        let (n, l) = (self.spec.input_bits, self.spec.output_bits);
        let rev = BitVector::from_bits((0..n).rev().map(|j| (x[j / 64] >> (j % 64)) & 1 == 1));
        let rev = rev.words();
        let mut out = vec![0u64; element_words(l).max(1)];
        for i in 0..l {
            let mut acc = 0u64;
            for (k, r) in rev.iter().enumerate() {
                acc ^= r & window64(&self.data, i + 64 * k);
            }
            if acc.count_ones() & 1 == 1 {
                out[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }

    /// Serialises to the wire format described in the module docs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.spec.seed_bits(self.construction) / 8 + 1);
        out.push(self.construction.tag());
        for v in [
            self.spec.input_bits,
            self.spec.output_bits,
            self.spec.independence,
        ] {
            out.extend_from_slice(&(v as u32).to_be_bytes());
        }
        let bits = BitVector::from_bits(self.parts().iter().flat_map(|p| p.iter().collect::<Vec<_>>()));
        out.extend(bits.to_bytes_msb());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Wire(format!(
                "seed needs at least {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let construction = Construction::from_tag(bytes[0])?;
        let field = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
        let spec = HashFamilySpec::new(field(1), field(5), field(9))
            .map_err(|e| Error::Wire(format!("bad family header: {e}")))?;
        spec.check_construction(construction)
            .map_err(|e| Error::Wire(e.to_string()))?;
        let total = spec.seed_bits(construction);
        let bits = BitVector::from_bytes_msb(&bytes[HEADER_LEN..], total)?;
        let parts: Vec<BitVector> = match construction {
            Construction::Polynomial => {
                let n = spec.input_bits;
                (0..spec.independence)
                    .map(|c| BitVector::from_bits((0..n).map(|j| bits.get(c * n + j))))
                    .collect()
            }
            Construction::Toeplitz => vec![bits],
        };
        Self::from_parts(spec, construction, &parts)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        Self::from_bytes(&hex::decode(s).map_err(|e| Error::Wire(e.to_string()))?)
    }
}

impl Serialize for HashSeed {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for HashSeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        HashSeed::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Draws a uniform member of the polynomial family.
pub fn sample_seed<R: RngCore + ?Sized>(spec: HashFamilySpec, rng: &mut R) -> HashSeed {
    sample_seed_with(spec, Construction::Polynomial, rng).expect("polynomial family accepts every spec")
}

/// Draws a uniform member of the given family.
pub fn sample_seed_with<R: RngCore + ?Sized>(
    spec: HashFamilySpec,
    construction: Construction,
    rng: &mut R,
) -> Result<HashSeed> {
    spec.check_construction(construction)?;
    let data = match construction {
        Construction::Polynomial => {
            let w = element_words(spec.input_bits);
            let mut data = vec![0u64; spec.independence * w];
            rng.fill(&mut data[..]);
            for c in data.chunks_exact_mut(w) {
                mask_tail(c, spec.input_bits);
            }
            data
        }
        Construction::Toeplitz => {
            let bits = spec.seed_bits(construction);
            BitVector::random(bits, rng).words().to_vec()
        }
    };
    HashSeed::assemble(spec, construction, data)
}

pub fn eval_hash(seed: &HashSeed, x: &BitVector) -> Result<BitVector> {
    seed.eval(x)
}

/// Every member of a family, in order of the description read as a binary
/// number with bit 0 least significant. Only for tiny families.
pub fn all_seeds(spec: HashFamilySpec, construction: Construction) -> Result<Vec<HashSeed>> {
    spec.check_construction(construction)?;
    let bits = spec.seed_bits(construction);
    if bits as u64 >= 64 || 1u64 << bits > MAX_ENUMERATED_SEEDS {
        return Err(Error::Budget {
            n: bits,
            limit: MAX_ENUMERATED_SEEDS.trailing_zeros() as usize,
        });
    }
    let n = spec.input_bits;
    (0..1u64 << bits)
        .map(|v| {
            let data = match construction {
                Construction::Polynomial => (0..spec.independence)
                    .map(|c| (v >> (c * n)) & ((1u64 << n) - 1))
                    .collect(),
                Construction::Toeplitz => vec![v],
            };
            HashSeed::assemble(spec, construction, data)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalityReport {
    pub spec: HashFamilySpec,
    /// Number of distinct inputs whose joint output was tabulated.
    pub points: usize,
    pub samples: u64,
    pub cells: usize,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    /// Upper-tail probability of the statistic under uniformity.
    pub p_value: f64,
}

impl UniversalityReport {
    /// Whether the statistic lies inside the central band of the given mass
    /// (e.g. 0.99) of the chi-square distribution.
    pub fn within_band(&self, mass: f64) -> bool {
        let tail = (1.0 - mass) / 2.0;
        self.p_value >= tail && self.p_value <= 1.0 - tail
    }
}

/// Chi-square test of the joint output of `ξ` fixed distinct inputs (the
/// field elements `0, 1, …, ξ − 1`) against uniform on `l·ξ` bits, over
/// sampled polynomial seeds.
pub fn universality_test<R: RngCore + ?Sized>(
    spec: HashFamilySpec,
    samples: u64,
    rng: &mut R,
) -> Result<UniversalityReport> {
    universality_test_points(spec, spec.independence, samples, rng)
}

/// [`universality_test`] on the first `points` inputs only; any
/// `points ≤ ξ` must also be jointly uniform.
pub fn universality_test_points<R: RngCore + ?Sized>(
    spec: HashFamilySpec,
    points: usize,
    samples: u64,
    rng: &mut R,
) -> Result<UniversalityReport> {
    let n = spec.input_bits;
    let l = spec.output_bits;
    if points == 0 || points > spec.independence {
        return Err(Error::domain(format!(
            "points must be in 1..={}, got {points}",
            spec.independence
        )));
    }
    if n < 64 && (1u64 << n) < points as u64 {
        return Err(Error::domain(format!(
            "only {} distinct {n}-bit inputs, need {points}",
            1u64 << n
        )));
    }
    let cell_bits = l * points;
    if cell_bits >= 63 || 1usize << cell_bits > MAX_TEST_CELLS {
        return Err(Error::Budget {
            n: cell_bits,
            limit: MAX_TEST_CELLS.trailing_zeros() as usize,
        });
    }
    if samples == 0 {
        return Err(Error::domain("universality test needs at least one sample"));
    }
    let cells = 1usize << cell_bits;
    let inputs: Vec<BitVector> = (0..points as u64).map(|v| BitVector::from_u64(v, n)).collect();
    let mut counts = vec![0u64; cells];
    for _ in 0..samples {
        let seed = sample_seed(spec, rng);
        let mut cell = 0usize;
        for (k, x) in inputs.iter().enumerate() {
            let h = seed.eval(x)?;
            let v = if l == 0 { 0 } else { h.to_u64() as usize };
            cell |= v << (k * l);
        }
        counts[cell] += 1;
    }
    let expected = samples as f64 / cells as f64;
    let chi_square: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = cells - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Internal(e.to_string()))?;
        dist.sf(chi_square)
    };
    Ok(UniversalityReport {
        spec,
        points,
        samples,
        cells,
        chi_square,
        degrees_of_freedom: dof,
        p_value,
    })
}
