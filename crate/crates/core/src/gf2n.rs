//! Arithmetic in GF(2^n) for arbitrary `n`.
//!
//! Elements are little-endian `u64` words: bit `i` of word `i / 64` is the
//! coefficient of `z^(i mod 64 + 64 (i / 64))`. The modulus for each degree is
//! fixed and reproducible: the irreducible trinomial `z^n + z^k + 1` with the
//! smallest `k` if one exists, otherwise the irreducible pentanomial
//! `z^n + z^a + z^b + z^c + 1` with `(a, b, c)` lexicographically smallest.
//! Degree 1 uses `z + 1`.
//!
//! Carry-less products use PCLMULQDQ when the CPU has it and a 4-bit window
//! table otherwise.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 1 << 16;

pub struct Field {
    degree: usize,
    words: usize,
    /// Exponents strictly between 0 and `degree`, descending.
    taps: Vec<usize>,
    /// The modulus minus its leading term.
    low: Vec<u64>,
    fold_by_word: bool,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GF(2^{}) mod z^{}", self.degree, self.degree)?;
        for t in &self.taps {
            write!(f, " + z^{t}")?;
        }
        f.write_str(" + 1")
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<Field>>> {
    static FIELDS: OnceLock<Mutex<HashMap<usize, Arc<Field>>>> = OnceLock::new();
    FIELDS.get_or_init(Default::default)
}

impl Field {
    /// The field of the given degree, built once per process.
    pub fn get(degree: usize) -> Result<Arc<Field>> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::domain(format!(
                "field degree {degree} outside 1..={MAX_DEGREE}"
            )));
        }
        if let Some(f) = cache().lock().expect("field cache poisoned").get(&degree) {
            return Ok(Arc::clone(f));
        }
        // Built outside the lock; a racing builder computes the same modulus.
        let field = Arc::new(Field::with_taps(degree, find_modulus(degree)));
        let mut map = cache().lock().expect("field cache poisoned");
        Ok(Arc::clone(map.entry(degree).or_insert(field)))
    }

    fn with_taps(degree: usize, taps: Vec<usize>) -> Field {
        let top = taps.first().copied().unwrap_or(0);
        let mut low = vec![0u64; top / 64 + 1];
        low[0] = 1;
        for &t in &taps {
            low[t / 64] |= 1 << (t % 64);
        }
        Field {
            degree,
            words: degree.div_ceil(64),
            fold_by_word: top < 63 && degree > 128 + top,
            taps,
            low,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Words per element.
    pub fn words(&self) -> usize {
        self.words
    }

    /// Exponents of the modulus, highest first, ending in 0.
    pub fn modulus_exponents(&self) -> Vec<usize> {
        let mut e = vec![self.degree];
        e.extend(&self.taps);
        e.push(0);
        e
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.words]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = self.zero();
        v[0] = 1;
        v
    }

    /// The element `z`.
    pub fn generator(&self) -> Vec<u64> {
        let mut v = self.zero();
        if self.degree == 1 {
            // z = 1 mod (z + 1)
            v[0] = 1;
        } else {
            v[0] = 2;
        }
        v
    }

    fn check(&self, a: &[u64]) {
        assert_eq!(a.len(), self.words, "element has wrong word count");
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.check(a);
        self.check(b);
        let mut out = self.zero();
        if has_wide_clmul() {
            // SAFETY: the CPU supports the 512-bit carry-less multiply.
            unsafe { mul_wide_hw(self, a, b, &mut out) }
        } else if has_clmul() {
            // SAFETY: the CPU supports pclmulqdq.
            unsafe { mul_hw(self, a, b, &mut out) }
        } else {
            mul_into::<Soft>(self, a, b, &mut out, &mut Scratch::new(self.words));
        }
        out
    }

    pub fn square(&self, a: &[u64]) -> Vec<u64> {
        self.check(a);
        let mut wide = vec![0u64; 2 * self.words];
        for (i, w) in a.iter().enumerate() {
            let (lo, hi) = spread(*w);
            wide[2 * i] = lo;
            wide[2 * i + 1] = hi;
        }
        let mut hi = vec![0u64; self.words + 1];
        if has_clmul() {
            // SAFETY: the CPU supports pclmulqdq.
            unsafe { reduce_hw(self, &mut wide, &mut hi) }
        } else {
            reduce::<Soft>(self, &mut wide, &mut hi);
        }
        wide.truncate(self.words);
        wide
    }

    /// `a^e` by square-and-multiply.
    pub fn pow(&self, a: &[u64], mut e: u128) -> Vec<u64> {
        let mut base = a.to_vec();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.square(&base);
            e >>= 1;
        }
        acc
    }

    /// Product in a field of degree at most 64, on bare words.
    pub fn mul_small(&self, a: u64, b: u64) -> u64 {
        assert!(self.degree <= 64, "mul_small needs degree <= 64");
        if has_clmul() {
            // SAFETY: the CPU supports pclmulqdq.
            unsafe { mul_small_hw(self, a, b) }
        } else {
            mul_small_generic::<Soft>(self, a, b)
        }
    }

    /// Evaluates `sum_i coeffs[i] x^i` by Horner's rule. `coeffs` holds the
    /// coefficients back to back, `words()` words each, constant term first.
    pub fn eval_poly(&self, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
        self.check(x);
        assert_eq!(coeffs.len() % self.words, 0, "ragged coefficient array");
        if has_wide_clmul() {
            // SAFETY: the CPU supports the 512-bit carry-less multiply.
            unsafe { horner_wide_hw(self, coeffs, x) }
        } else if has_clmul() {
            // SAFETY: the CPU supports pclmulqdq.
            unsafe { horner_hw(self, coeffs, x) }
        } else {
            horner::<Soft>(self, coeffs, x)
        }
    }

    /// Portable-path version of [`Field::eval_poly`], for cross-checking the
    /// hardware path.
    pub fn eval_poly_portable(&self, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
        horner::<Soft>(self, coeffs, x)
    }

    /// [`Field::eval_poly`] for degree at most 64.
    pub fn eval_poly_small(&self, coeffs: &[u64], x: u64) -> u64 {
        assert!(self.degree <= 64, "eval_poly_small needs degree <= 64");
        if has_clmul() {
            // SAFETY: the CPU supports pclmulqdq.
            unsafe { horner_small_hw(self, coeffs, x) }
        } else {
            horner_small::<Soft>(self, coeffs, x)
        }
    }
}

/// Whether the hardware carry-less multiply is in use.
pub fn has_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

trait Kernel {
    fn clmul(a: u64, b: u64) -> u128;

    /// `out ^= a * b`
    fn mul_acc(a: &[u64], b: &[u64], out: &mut [u64]) {
        schoolbook::<Self>(a, b, out)
    }
}

/// Column-wise (product scanning) so each output word is written once.
#[inline(always)]
fn schoolbook<K: Kernel + ?Sized>(a: &[u64], b: &[u64], out: &mut [u64]) {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return;
    }
    let mut carry = 0u64;
    for k in 0..na + nb - 1 {
        let mut acc = carry as u128;
        for i in k.saturating_sub(nb - 1)..=k.min(na - 1) {
            acc ^= K::clmul(a[i], b[k - i]);
        }
        out[k] ^= acc as u64;
        carry = (acc >> 64) as u64;
    }
    out[na + nb - 1] ^= carry;
}

struct Soft;

impl Kernel for Soft {
    #[inline(always)]
    fn clmul(a: u64, b: u64) -> u128 {
        let mut table = [0u128; 16];
        let a = a as u128;
        for i in 1..16 {
            table[i] = if i & 1 == 1 { a } else { 0 } ^ (table[i >> 1] << 1);
        }
        let mut r = 0u128;
        for nibble in (0..16).rev() {
            r = (r << 4) ^ table[((b >> (4 * nibble)) & 15) as usize];
        }
        r
    }
}

#[cfg(target_arch = "x86_64")]
mod hw {
    use std::arch::x86_64::{
        _mm_clmulepi64_si128, _mm_cvtsi128_si64, _mm_cvtsi64_si128, _mm_extract_epi64,
        _mm_loadl_epi64, _mm_setzero_si128, _mm_srli_si128, _mm_xor_si128,
        _mm256_castsi256_si128, _mm256_extracti128_si256, _mm256_xor_si256,
        _mm512_castsi512_si256, _mm512_clmulepi64_epi128, _mm512_extracti64x4_epi64,
        _mm512_alignr_epi64, _mm512_mask_storeu_epi64, _mm512_maskz_loadu_epi64, _mm512_set1_epi64,
        _mm512_setzero_si512, _mm512_xor_si512, __m512i, __mmask8,
    };

    #[target_feature(enable = "pclmulqdq,sse4.1")]
    #[inline]
    pub(super) fn clmul(a: u64, b: u64) -> u128 {
        let r = _mm_clmulepi64_si128(_mm_cvtsi64_si128(a as i64), _mm_cvtsi64_si128(b as i64), 0);
        let lo = _mm_extract_epi64(r, 0) as u64;
        let hi = _mm_extract_epi64(r, 1) as u64;
        (hi as u128) << 64 | lo as u128
    }

    /// Product scanning with the column sum kept in an xmm register.
    #[target_feature(enable = "pclmulqdq,sse4.1")]
    pub(super) fn mul_acc(a: &[u64], b: &[u64], out: &mut [u64]) {
        let (na, nb) = (a.len(), b.len());
        if na == 0 || nb == 0 {
            return;
        }
        assert!(out.len() >= na + nb);
        let mut carry = _mm_setzero_si128();
        for k in 0..na + nb - 1 {
            let mut acc = carry;
            for i in k.saturating_sub(nb - 1)..=k.min(na - 1) {
                // SAFETY: i < na and k - i < nb by the loop bounds.
                let (x, y) = unsafe {
                    (
                        _mm_loadl_epi64(a.as_ptr().add(i).cast()),
                        _mm_loadl_epi64(b.as_ptr().add(k - i).cast()),
                    )
                };
                acc = _mm_xor_si128(acc, _mm_clmulepi64_si128(x, y, 0));
            }
            out[k] ^= _mm_cvtsi128_si64(acc) as u64;
            carry = _mm_srli_si128(acc, 8);
        }
        out[na + nb - 1] ^= _mm_cvtsi128_si64(carry) as u64;
    }

    /// Product scanning eight partial products at a time. With `b` reversed,
    /// the operands of one output column are contiguous in both inputs.
    #[target_feature(enable = "pclmulqdq,sse4.1,avx2,avx512f,vpclmulqdq")]
    pub(super) fn mul_acc_512(a: &[u64], b: &[u64], out: &mut [u64]) {
        let (na, nb) = (a.len(), b.len());
        if na == 0 || nb == 0 {
            return;
        }
        assert!(out.len() >= na + nb);
        let mut stack = [0u64; 64];
        let mut heap = Vec::new();
        let rev: &mut [u64] = if nb <= stack.len() {
            &mut stack[..nb]
        } else {
            heap.resize(nb, 0);
            &mut heap
        };
        for (r, v) in rev.iter_mut().zip(b.iter().rev()) {
            *r = *v;
        }
        let mut carry = _mm_setzero_si128();
        for k in 0..na + nb - 1 {
            let first = k.saturating_sub(nb - 1);
            let count = k.min(na - 1) + 1 - first;
            // rev[nb - 1 - (k - i)] pairs with a[i]
            let rev_first = nb - 1 + first - k;
            let mut wide = _mm512_setzero_si512();
            let mut t = 0;
            while t < count {
                let m = (count - t).min(8);
                let mask: __mmask8 = if m == 8 { 0xFF } else { (1u8 << m) - 1 };
                // SAFETY: the masked lanes stay within a[first..first + count]
                // and rev[rev_first..rev_first + count].
                let (x, y) = unsafe {
                    (
                        _mm512_maskz_loadu_epi64(mask, a.as_ptr().add(first + t).cast()),
                        _mm512_maskz_loadu_epi64(mask, rev.as_ptr().add(rev_first + t).cast()),
                    )
                };
                wide = _mm512_xor_si512(wide, _mm512_clmulepi64_epi128(x, y, 0x00));
                wide = _mm512_xor_si512(wide, _mm512_clmulepi64_epi128(x, y, 0x11));
                t += 8;
            }
            let half = _mm256_xor_si256(
                _mm512_castsi512_si256(wide),
                _mm512_extracti64x4_epi64::<1>(wide),
            );
            let quarter = _mm_xor_si128(
                _mm256_castsi256_si128(half),
                _mm256_extracti128_si256::<1>(half),
            );
            let acc = _mm_xor_si128(carry, quarter);
            out[k] ^= _mm_cvtsi128_si64(acc) as u64;
            carry = _mm_srli_si128(acc, 8);
        }
        out[na + nb - 1] ^= _mm_cvtsi128_si64(carry) as u64;
    }
    fn lane_mask(avail: usize) -> __mmask8 {
        if avail >= 8 {
            0xFF
        } else {
            ((1u16 << avail) - 1) as u8
        }
    }

    /// `(cur : prev) >> 64 (8 - c)`: block `cur` moved up by `c` words, with
    /// the words it pushes out of `prev` filling the bottom.
    #[target_feature(enable = "avx512f")]
    fn shift_up(cur: __m512i, prev: __m512i, c: usize) -> __m512i {
        match c {
            0 => cur,
            1 => _mm512_alignr_epi64::<7>(cur, prev),
            2 => _mm512_alignr_epi64::<6>(cur, prev),
            3 => _mm512_alignr_epi64::<5>(cur, prev),
            4 => _mm512_alignr_epi64::<4>(cur, prev),
            5 => _mm512_alignr_epi64::<3>(cur, prev),
            6 => _mm512_alignr_epi64::<2>(cur, prev),
            7 => _mm512_alignr_epi64::<1>(cur, prev),
            _ => prev,
        }
    }

    const ROW_BLOCKS: usize = 24;

    /// Operand scanning: each word of `a` is broadcast against 8-word blocks
    /// of `b`. A product landing `c` words off an 8-word boundary goes to the
    /// accumulator for shift `c`, so every accumulator update is aligned, and
    /// the nine shift classes are realigned once at the end.
    #[target_feature(enable = "pclmulqdq,sse4.1,avx2,avx512f,vpclmulqdq")]
    pub(super) fn mul_acc_rows(a: &[u64], b: &[u64], out: &mut [u64]) {
        let (na, nb) = (a.len(), b.len());
        if na == 0 || nb == 0 {
            return;
        }
        let chunks = nb.div_ceil(8);
        let blocks = (na - 1) / 8 + chunks;
        if chunks > 8 || blocks + 1 > ROW_BLOCKS {
            return mul_acc_512(a, b, out);
        }
        assert!(out.len() >= na + nb);
        let mut bv = [_mm512_setzero_si512(); 8];
        for (t, v) in bv.iter_mut().enumerate().take(chunks) {
            // SAFETY: the mask keeps the load inside b.
            *v = unsafe { _mm512_maskz_loadu_epi64(lane_mask(nb - 8 * t), b.as_ptr().add(8 * t).cast()) };
        }
        let mut acc = [[_mm512_setzero_si512(); ROW_BLOCKS]; 9];
        for (i, &ai) in a.iter().enumerate() {
            let (s, r) = (i / 8, i % 8);
            let x = _mm512_set1_epi64(ai as i64);
            for (t, &bt) in bv.iter().enumerate().take(chunks) {
                let u = s + t;
                acc[r][u] = _mm512_xor_si512(acc[r][u], _mm512_clmulepi64_epi128(x, bt, 0x00));
                acc[r + 1][u] = _mm512_xor_si512(acc[r + 1][u], _mm512_clmulepi64_epi128(x, bt, 0x10));
            }
        }
        let len = out.len();
        for v in 0..=blocks {
            if 8 * v >= len {
                break;
            }
            let mut sum = _mm512_setzero_si512();
            for (c, row) in acc.iter().enumerate() {
                let prev = if v == 0 { _mm512_setzero_si512() } else { row[v - 1] };
                sum = _mm512_xor_si512(sum, shift_up(row[v], prev, c));
            }
            let mask = lane_mask(len - 8 * v);
            // SAFETY: the mask keeps the access inside out.
            unsafe {
                let p = out.as_mut_ptr().add(8 * v);
                let cur = _mm512_maskz_loadu_epi64(mask, p.cast());
                _mm512_mask_storeu_epi64(p.cast(), mask, _mm512_xor_si512(cur, sum));
            }
        }
    }
}

/// Whether the 512-bit carry-less multiply is in use.
pub fn has_wide_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("pclmulqdq")
            && std::arch::is_x86_feature_detected!("sse4.1")
            && std::arch::is_x86_feature_detected!("avx2")
            && std::arch::is_x86_feature_detected!("avx512f")
            && std::arch::is_x86_feature_detected!("vpclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

struct Hw;

/// [`Hw`] with the 512-bit multiply for operands of more than a few words.
struct Wide;

#[cfg(target_arch = "x86_64")]
impl Kernel for Wide {
    #[inline(always)]
    fn clmul(a: u64, b: u64) -> u128 {
        // SAFETY: Wide is only instantiated behind a has_wide_clmul check.
        unsafe { hw::clmul(a, b) }
    }

    fn mul_acc(a: &[u64], b: &[u64], out: &mut [u64]) {
        // SAFETY: as above.
        unsafe {
            if a.len() >= 4 && b.len() >= 4 {
                hw::mul_acc_rows(a, b, out)
            } else {
                hw::mul_acc(a, b, out)
            }
        }
    }
}

#[cfg(not(target_arch = "x86_64"))]
impl Kernel for Wide {
    fn clmul(a: u64, b: u64) -> u128 {
        Soft::clmul(a, b)
    }
}

#[cfg(target_arch = "x86_64")]
impl Kernel for Hw {
    #[inline(always)]
    fn clmul(a: u64, b: u64) -> u128 {
        // SAFETY: Hw is only instantiated behind a pclmulqdq check.
        unsafe { hw::clmul(a, b) }
    }

    fn mul_acc(a: &[u64], b: &[u64], out: &mut [u64]) {
        // SAFETY: as above.
        unsafe { hw::mul_acc(a, b, out) }
    }
}

#[cfg(not(target_arch = "x86_64"))]
impl Kernel for Hw {
    fn clmul(a: u64, b: u64) -> u128 {
        Soft::clmul(a, b)
    }
}

const KARATSUBA_CUTOFF: usize = 16;

/// `out ^= a * b` for equal-length operands.
fn mul_wide<K: Kernel>(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_CUTOFF {
        K::mul_acc(a, b, out);
        return;
    }
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);
    let k = n - h;
    let mut z0 = vec![0u64; 2 * h];
    let mut z2 = vec![0u64; 2 * k];
    mul_wide::<K>(a0, b0, &mut z0);
    mul_wide::<K>(a1, b1, &mut z2);
    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..h {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = vec![0u64; 2 * k];
    mul_wide::<K>(&sa, &sb, &mut z1);
    for (i, v) in z0.iter().enumerate() {
        z1[i] ^= v;
        out[i] ^= v;
    }
    for (i, v) in z2.iter().enumerate() {
        z1[i] ^= v;
        out[2 * h + i] ^= v;
    }
    for (i, v) in z1.iter().enumerate() {
        out[h + i] ^= v;
    }
}

struct Scratch {
    wide: Vec<u64>,
    hi: Vec<u64>,
}

impl Scratch {
    fn new(words: usize) -> Self {
        Self {
            wide: vec![0; 2 * words + 1],
            hi: vec![0; words + 1],
        }
    }
}

/// Reduces a double-width product in place; the result is in the low
/// `field.words` words and everything above is zero.
#[inline(always)]
fn reduce<K: Kernel>(field: &Field, t: &mut [u64], hi: &mut [u64]) {
    if field.fold_by_word {
        fold_words::<K>(field, t);
    } else {
        reduce_by_shift::<K>(field, t, hi);
    }
}

/// Word-at-a-time reduction for a modulus whose low part fits in one word
/// and whose degree leaves room for a two-word fold: every word above the
/// top is folded down once, from the highest word, then the partial top
/// word.
#[inline(always)]
fn fold_words<K: Kernel>(field: &Field, t: &mut [u64]) {
    let (n, w) = (field.degree, field.words);
    let low = field.low[0];
    let s = 64 * w - n;
    for i in (w..2 * w).rev() {
        let v = t[i];
        if v == 0 {
            continue;
        }
        t[i] = 0;
        xor_at(t, 64 * (i - w) + s, K::clmul(v, low));
    }
    let r = n % 64;
    if r != 0 {
        let v = t[w - 1] >> r;
        t[w - 1] &= (1u64 << r) - 1;
        let p = K::clmul(v, low);
        t[0] ^= p as u64;
        t[1] ^= (p >> 64) as u64;
    }
}

/// `t ^= p << offset`
#[inline(always)]
fn xor_at(t: &mut [u64], offset: usize, p: u128) {
    let (q, b) = (offset / 64, offset % 64);
    let (lo, hi) = (p as u64, (p >> 64) as u64);
    if b == 0 {
        t[q] ^= lo;
        t[q + 1] ^= hi;
    } else {
        t[q] ^= lo << b;
        t[q + 1] ^= (lo >> (64 - b)) | (hi << b);
        t[q + 2] ^= hi >> (64 - b);
    }
}

#[inline(always)]
fn reduce_by_shift<K: Kernel>(field: &Field, t: &mut [u64], hi: &mut [u64]) {
    let n = field.degree;
    let (wq, wr) = (n / 64, n % 64);
    loop {
        // hi = t >> n
        let mut any = 0u64;
        for (i, h) in hi.iter_mut().enumerate() {
            let src = wq + i;
            let lo_part = t.get(src).copied().unwrap_or(0);
            *h = if wr == 0 {
                lo_part
            } else {
                let up = t.get(src + 1).copied().unwrap_or(0);
                (lo_part >> wr) | (up << (64 - wr))
            };
            any |= *h;
        }
        if any == 0 {
            return;
        }
        // clear bits >= n
        if wr == 0 {
            t[wq..].fill(0);
        } else {
            t[wq] &= (1u64 << wr) - 1;
            t[wq + 1..].fill(0);
        }
        // t ^= hi * (modulus - z^n)
        let used = hi.iter().rposition(|w| *w != 0).map_or(0, |p| p + 1);
        K::mul_acc(&hi[..used], &field.low, t);
    }
}

#[inline(always)]
fn mul_into<K: Kernel>(field: &Field, a: &[u64], b: &[u64], out: &mut [u64], s: &mut Scratch) {
    s.wide.fill(0);
    let w = field.words;
    mul_wide::<K>(a, b, &mut s.wide[..2 * w]);
    reduce::<K>(field, &mut s.wide, &mut s.hi);
    out.copy_from_slice(&s.wide[..w]);
}

#[inline(always)]
fn horner<K: Kernel>(field: &Field, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
    let w = field.words;
    let mut acc = field.zero();
    let mut s = Scratch::new(w);
    let mut tmp = field.zero();
    for c in coeffs.chunks_exact(w).rev() {
        mul_into::<K>(field, &acc, x, &mut tmp, &mut s);
        for (a, (t, c)) in acc.iter_mut().zip(tmp.iter().zip(c)) {
            *a = t ^ c;
        }
    }
    acc
}

#[inline(always)]
fn reduce_small<K: Kernel>(field: &Field, mut p: u128) -> u64 {
    let n = field.degree;
    let mask = (1u128 << n) - 1;
    let low = field.low[0];
    loop {
        let hi = p >> n;
        if hi == 0 {
            return p as u64;
        }
        p = (p & mask) ^ K::clmul(hi as u64, low);
    }
}

#[inline(always)]
fn mul_small_generic<K: Kernel>(field: &Field, a: u64, b: u64) -> u64 {
    reduce_small::<K>(field, K::clmul(a, b))
}

#[inline(always)]
fn horner_small<K: Kernel>(field: &Field, coeffs: &[u64], x: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs.iter().rev() {
        acc = mul_small_generic::<K>(field, acc, x) ^ c;
    }
    acc
}

#[cfg_attr(target_arch = "x86_64", target_feature(enable = "pclmulqdq,sse4.1"))]
unsafe fn mul_hw(field: &Field, a: &[u64], b: &[u64], out: &mut [u64]) {
    mul_into::<Hw>(field, a, b, out, &mut Scratch::new(field.words))
}

#[cfg_attr(
    target_arch = "x86_64",
    target_feature(enable = "pclmulqdq,sse4.1,avx2,avx512f,vpclmulqdq")
)]
unsafe fn mul_wide_hw(field: &Field, a: &[u64], b: &[u64], out: &mut [u64]) {
    mul_into::<Wide>(field, a, b, out, &mut Scratch::new(field.words))
}

#[cfg_attr(
    target_arch = "x86_64",
    target_feature(enable = "pclmulqdq,sse4.1,avx2,avx512f,vpclmulqdq")
)]
unsafe fn horner_wide_hw(field: &Field, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
    horner::<Wide>(field, coeffs, x)
}

#[cfg_attr(target_arch = "x86_64", target_feature(enable = "pclmulqdq,sse4.1"))]
unsafe fn reduce_hw(field: &Field, t: &mut [u64], hi: &mut [u64]) {
    reduce::<Hw>(field, t, hi)
}

#[cfg_attr(target_arch = "x86_64", target_feature(enable = "pclmulqdq,sse4.1"))]
unsafe fn mul_small_hw(field: &Field, a: u64, b: u64) -> u64 {
    mul_small_generic::<Hw>(field, a, b)
}

#[cfg_attr(target_arch = "x86_64", target_feature(enable = "pclmulqdq,sse4.1"))]
unsafe fn horner_hw(field: &Field, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
    horner::<Hw>(field, coeffs, x)
}

#[cfg_attr(target_arch = "x86_64", target_feature(enable = "pclmulqdq,sse4.1"))]
unsafe fn horner_small_hw(field: &Field, coeffs: &[u64], x: u64) -> u64 {
    horner_small::<Hw>(field, coeffs, x)
}

/// Interleaves zero bits: bit `i` of `w` moves to bit `2i` of the result.
fn spread(w: u64) -> (u64, u64) {
    fn half(mut x: u64) -> u64 {
        x &= 0xFFFF_FFFF;
        x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
        x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
        x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
        x = (x | (x << 2)) & 0x3333_3333_3333_3333;
        x = (x | (x << 1)) & 0x5555_5555_5555_5555;
        x
    }
    (half(w), half(w >> 32))
}

// ---- modulus search ----

fn find_modulus(n: usize) -> Vec<usize> {
    if n == 1 {
        return Vec::new();
    }
    let small = small_irreducibles((n / 2).min(PREFILTER_DEGREE));
    // Swan: every trinomial of degree divisible by 8 is reducible.
    let trinomials = if n % 8 == 0 { 1..1 } else { 1..n };
    for k in trinomials {
        let taps = vec![k];
        if passes_prefilter(n, &taps, &small) && is_irreducible(n, &taps) {
            return taps;
        }
    }
    for a in 3..n {
        for b in 2..a {
            for c in 1..b {
                let taps = vec![a, b, c];
                if passes_prefilter(n, &taps, &small) && is_irreducible(n, &taps) {
                    return taps;
                }
            }
        }
    }
    unreachable!("every degree >= 2 has an irreducible trinomial or pentanomial below 2^16")
}

const PREFILTER_DEGREE: usize = 10;

/// Irreducible polynomials of degree 1..=max_degree as bit masks, by trial
/// division.
fn small_irreducibles(max_degree: usize) -> Vec<u32> {
    let mut found: Vec<u32> = Vec::new();
    for d in 1..=max_degree {
        for p in (1u32 << d)..(1u32 << (d + 1)) {
            let deg = |q: u32| 31 - q.leading_zeros() as usize;
            if found
                .iter()
                .take_while(|g| 2 * deg(**g) <= d)
                .all(|g| small_mod(p, *g) != 0)
            {
                found.push(p);
            }
        }
    }
    found
}

fn small_mod(mut p: u32, g: u32) -> u32 {
    let dg = 31 - g.leading_zeros();
    while p != 0 && 31 - p.leading_zeros() >= dg {
        p ^= g << (31 - p.leading_zeros() - dg);
    }
    p
}

fn small_mulmod(a: u32, b: u32, g: u32) -> u32 {
    let mut r = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a = small_mod(a << 1, g);
    }
    small_mod(r, g)
}

/// `z^e mod g`
fn small_pow_z(e: usize, g: u32) -> u32 {
    let mut acc = small_mod(1, g);
    let mut base = small_mod(2, g);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = small_mulmod(acc, base, g);
        }
        base = small_mulmod(base, base, g);
        e >>= 1;
    }
    acc
}

/// Rejects candidates with a small irreducible factor.
fn passes_prefilter(n: usize, taps: &[usize], small: &[u32]) -> bool {
    small.iter().all(|&g| {
        let mut r = small_pow_z(n, g) ^ small_mod(1, g);
        for &t in taps {
            r ^= small_pow_z(t, g);
        }
        r != 0
    })
}

/// Rabin's test: `f` of degree `n` is irreducible iff `z^(2^n) = z mod f` and
/// `gcd(z^(2^(n/p)) - z, f) = 1` for every prime `p` dividing `n`.
fn is_irreducible(n: usize, taps: &[usize]) -> bool {
    let field = Field::with_taps(n, taps.to_vec());
    let z = field.generator();
    let mut powers = HashMap::new();
    let divisors: Vec<usize> = prime_factors(n).into_iter().map(|p| n / p).collect();
    let mut cur = z.clone();
    for i in 1..=n {
        cur = field.square(&cur);
        if divisors.contains(&i) {
            powers.insert(i, cur.clone());
        }
    }
    if cur != z {
        return false;
    }
    let modulus = modulus_poly(&field);
    divisors.iter().all(|d| {
        let mut g = powers[d].clone();
        g[0] ^= 2;
        poly_gcd_is_one(g, modulus.clone())
    })
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn modulus_poly(field: &Field) -> Vec<u64> {
    let mut m = vec![0u64; field.degree / 64 + 1];
    for e in field.modulus_exponents() {
        m[e / 64] |= 1 << (e % 64);
    }
    m
}

fn poly_degree(p: &[u64]) -> Option<usize> {
    p.iter()
        .rposition(|w| *w != 0)
        .map(|i| i * 64 + 63 - p[i].leading_zeros() as usize)
}

/// `a mod b` in GF(2)[z], in place.
fn poly_rem(a: &mut Vec<u64>, b: &[u64], db: usize) {
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        let shift = da - db;
        let (wq, wr) = (shift / 64, shift % 64);
        for (i, &w) in b.iter().enumerate() {
            if w == 0 {
                continue;
            }
            a[i + wq] ^= w << wr;
            if wr != 0 && i + wq + 1 < a.len() {
                a[i + wq + 1] ^= w >> (64 - wr);
            }
        }
    }
}

fn poly_gcd_is_one(mut a: Vec<u64>, mut b: Vec<u64>) -> bool {
    loop {
        let Some(db) = poly_degree(&b) else {
            return poly_degree(&a) == Some(0);
        };
        let len = a.len().max(b.len());
        a.resize(len, 0);
        poly_rem(&mut a, &b, db);
        std::mem::swap(&mut a, &mut b);
    }
}
