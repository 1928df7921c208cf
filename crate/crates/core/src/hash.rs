//! Seeded hash families over the Mersenne prime field `2^61 - 1`.
//!
//! A degree-`k-1` polynomial with uniformly random coefficients is a
//! `k`-wise independent map into the field. Coefficients are drawn from a
//! ChaCha stream keyed by a `u64` seed, so a family is fully determined by
//! its seed.

use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The field modulus `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Number of sign bits taken from one field element in [`SignBits`].
pub const SIGN_BITS_PER_WORD: usize = 60;

/// Reduces `x < 2^125` modulo `2^61 - 1`.
#[inline]
fn reduce(x: u128) -> u64 {
    debug_assert!(x >> 125 == 0);
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let s = lo + (hi & MERSENNE_61) + (hi >> 61);
    let s = (s & MERSENNE_61) + (s >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed for sub-structure `(stream, index)` of
/// a master seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = mix64(master ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix64(a ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix64(b ^ index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

/// A ChaCha generator for the given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn field_element(rng: &mut ChaCha8Rng) -> u64 {
    loop {
        let v = rng.next_u64() & MERSENNE_61;
        if v < MERSENNE_61 {
            return v;
        }
    }
}

/// A random polynomial of degree `K - 1` over the field; `K`-wise
/// independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyHash<const K: usize> {
    coeffs: [u64; K],
}

impl<const K: usize> PolyHash<K> {
    pub fn from_rng(rng: &mut ChaCha8Rng) -> Self {
        let mut coeffs = [0u64; K];
        for c in &mut coeffs {
            *c = field_element(rng);
        }
        Self { coeffs }
    }

    pub fn new(seed: u64) -> Self {
        Self::from_rng(&mut rng_from_seed(seed))
    }

    /// Evaluates the polynomial at `x`, giving a value in `[0, 2^61 - 1)`.
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let x = reduce(x as u128);
        let mut acc = self.coeffs[K - 1];
        for &c in self.coeffs[..K - 1].iter().rev() {
            acc = reduce(mul_mod(acc, x) as u128 + c as u128);
        }
        acc
    }

    /// `+1` or `-1` from the low bit of the value.
    #[inline]
    pub fn sign(&self, x: u64) -> i64 {
        1 - 2 * (self.eval(x) & 1) as i64
    }

    /// A value in `0..buckets`.
    #[inline]
    pub fn bucket(&self, x: u64, buckets: usize) -> usize {
        (self.eval(x) % buckets as u64) as usize
    }
}

/// Four-wise independent hash.
pub type Hash4 = PolyHash<4>;
/// Pairwise independent hash.
pub type Hash2 = PolyHash<2>;

// Sign masks of the eight bits of every byte, low bit first.
const BYTE_MASKS: [[i64; 8]; 256] = {
    let mut t = [[0i64; 8]; 256];
    let mut v = 0;
    while v < 256 {
        let mut b = 0;
        while b < 8 {
            t[v][b] = -(((v >> b) & 1) as i64);
            b += 1;
        }
        v += 1;
    }
    t
};

/// Many four-wise independent sign functions evaluated together.
///
/// Sign `j` is bit `j % 60` of polynomial `j / 60`. For any four distinct
/// inputs the values of one polynomial are uniform on the field, so the 60
/// bits behave as 60 independent four-wise independent sign functions (up
/// to a bias of order `2^-61`).
#[derive(Clone, Debug)]
pub struct SignBits {
    polys: Vec<Hash4>,
    len: usize,
}

impl SignBits {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let words = len.div_ceil(SIGN_BITS_PER_WORD);
        let polys = (0..words).map(|_| Hash4::from_rng(&mut rng)).collect();
        Self { polys, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Writes a mask for every sign function into `out`: `0` for `+1` and
    /// `-1` (all bits set) for `-1`. Masks let callers apply a sign with
    /// xor and subtract instead of a multiply.
    pub fn fill(&self, x: u64, out: &mut Vec<i64>) {
        out.clear();
        out.resize(self.len, 0);
        let xr = reduce(x as u128);
        let x2 = mul_mod(xr, xr);
        let x3 = mul_mod(x2, xr);
        for (p, chunk) in self.polys.iter().zip(out.chunks_mut(SIGN_BITS_PER_WORD)) {
            let c = &p.coeffs;
            let v = reduce(
                c[0] as u128
                    + mul_mod(c[1], xr) as u128
                    + mul_mod(c[2], x2) as u128
                    + mul_mod(c[3], x3) as u128,
            );
            let mut bytes = chunk.chunks_mut(8);
            for (k, dst) in (&mut bytes).enumerate() {
                let src = &BYTE_MASKS[((v >> (8 * k)) & 0xff) as usize];
                dst.copy_from_slice(&src[..dst.len()]);
            }
        }
    }
}
