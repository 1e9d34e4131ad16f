//! Schnorr groups: the order-`Q` subgroup of `Z*_P` with `P = 2Q + 1`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{CryptoError, Result};

/// Public group parameters shared by every signing party.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SchnorrGroup {
    p: BigUint,
    q: BigUint,
    g: BigUint,
}

impl std::fmt::Debug for SchnorrGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchnorrGroup")
            .field("p_bits", &self.p.bits())
            .field("q", &format_args!("{:x}", self.q))
            .field("g", &format_args!("{:x}", self.g))
            .finish()
    }
}

// Generated once with `SchnorrGroup::generate(256, ..)`; P = 2Q + 1, g = 2^2 mod P.
const DEFAULT_Q_HEX: &str = "dd513bc7893c37be9699749f0ca322ba93980f0450c0394311dc2babcfe700e7";

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

impl SchnorrGroup {
    /// Validates and wraps explicit parameters.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        let one = BigUint::one();
        if q < BigUint::from(3u32) || !is_probable_prime(&q) || !is_probable_prime(&p) {
            return Err(CryptoError::InvalidGroup("P and Q must be prime".into()));
        }
        let (r, rem) = (&p - &one).div_rem(&q);
        if !rem.is_zero() || r < BigUint::from(2u32) {
            return Err(CryptoError::InvalidGroup("P is not r*Q + 1 with r >= 2".into()));
        }
        if g <= one || g >= p || g.modpow(&q, &p) != one {
            return Err(CryptoError::InvalidGroup("g does not have order Q".into()));
        }
        Ok(Self { p, q, g })
    }

    /// Builds the group for a safe prime `P = 2Q + 1` from the seed element
    /// `h`, taking `g = h^2 mod P`.
    pub fn from_safe_prime(q: BigUint, h: BigUint) -> Result<Self> {
        let p = (&q << 1u32) + 1u32;
        let g = h.modpow(&BigUint::from(2u32), &p);
        Self::new(p, q, g)
    }

    /// Draws a fresh safe-prime group with a `q_bits`-bit subgroup order.
    pub fn generate<R: RngCore + ?Sized>(q_bits: u64, rng: &mut R) -> Result<Self> {
        if q_bits < 8 {
            return Err(CryptoError::GroupGeneration(format!(
                "q_bits must be at least 8, got {q_bits}"
            )));
        }
        let max_attempts = 200 * q_bits * q_bits;
        for _ in 0..max_attempts {
            let mut q = random_bits(rng, q_bits);
            q.set_bit(q_bits - 1, true);
            q.set_bit(0, true);
            if !sieve_candidate(&q) {
                continue;
            }
            if !is_probable_prime(&q) {
                continue;
            }
            let p = (&q << 1u32) + 1u32;
            if !is_probable_prime(&p) {
                continue;
            }
            // h = 2 works for every safe prime P > 5: 4 is a non-trivial square.
            for h in 2u32..64 {
                if let Ok(group) = Self::from_safe_prime(q.clone(), BigUint::from(h)) {
                    return Ok(group);
                }
            }
        }
        Err(CryptoError::GroupGeneration(format!(
            "no {q_bits}-bit safe prime found in {max_attempts} attempts"
        )))
    }

    /// Toy group (P = 23, Q = 11, g = 4) used by hand-checked vectors.
    pub fn toy() -> Self {
        Self::from_safe_prime(BigUint::from(11u32), BigUint::from(2u32)).expect("toy group")
    }

    /// Fixed group with a 256-bit Q.
    pub fn default_256() -> Self {
        let q = BigUint::parse_bytes(DEFAULT_Q_HEX.as_bytes(), 16).expect("default Q");
        Self::from_safe_prime(q, BigUint::from(2u32)).expect("default group")
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// `g^e mod P`.
    pub fn pow_g(&self, exponent: &BigUint) -> BigUint {
        self.g.modpow(exponent, &self.p)
    }

    pub fn pow(&self, base: &BigUint, exponent: &BigUint) -> BigUint {
        base.modpow(exponent, &self.p)
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    /// Uniform element of `Z*_Q`, i.e. in `[1, Q - 1]`.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let bound = &self.q - 1u32;
        random_below(rng, &bound) + 1u32
    }

    /// True when `y` lies in the order-`Q` subgroup.
    pub fn contains(&self, y: &BigUint) -> bool {
        !y.is_zero() && y < &self.p && y.modpow(&self.q, &self.p).is_one()
    }

    /// Byte length of `P`, the width of encoded group elements.
    pub fn element_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }
}

fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let nbytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess = nbytes as u64 * 8 - bits;
    if excess > 0 {
        buf[0] &= 0xff >> excess;
    }
    BigUint::from_bytes_be(&buf)
}

/// Uniform integer in `[0, bound)` by rejection sampling.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    let bits = bound.bits();
    loop {
        let candidate = random_bits(rng, bits);
        if &candidate < bound {
            return candidate;
        }
    }
}

fn sieve_candidate(q: &BigUint) -> bool {
    for &sp in SMALL_PRIMES.iter().skip(1) {
        let sp_big = BigUint::from(sp);
        if q == &sp_big {
            return true;
        }
        let r = (q % sp).try_into().unwrap_or(0u32);
        // q ≡ 0 makes q composite; q ≡ (sp-1)/2 makes 2q+1 divisible by sp.
        if r == 0 || (2 * r + 1) % sp == 0 {
            return false;
        }
    }
    true
}

/// Miller–Rabin with the first 54 primes as fixed bases. Deterministic, not
/// certified.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'bases: for &a in SMALL_PRIMES.iter().take(24) {
        let a = BigUint::from(a);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_group_matches_hand_values() {
        let g = SchnorrGroup::toy();
        assert_eq!(g.p(), &BigUint::from(23u32));
        assert_eq!(g.q(), &BigUint::from(11u32));
        assert_eq!(g.g(), &BigUint::from(4u32));
        assert!(g.pow_g(g.q()).is_one());
    }

    #[test]
    fn generated_groups_are_sound() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for bits in [8u64, 16, 32, 64] {
            let g = SchnorrGroup::generate(bits, &mut rng).unwrap();
            assert_eq!(g.q().bits(), bits);
            assert_eq!(g.p(), &((g.q() << 1u32) + 1u32));
            assert!(g.pow_g(g.q()).is_one());
            assert!(!g.g().is_one());
        }
    }

    #[test]
    fn default_group_has_256_bit_order() {
        let g = SchnorrGroup::default_256();
        assert_eq!(g.q().bits(), 256);
        assert_eq!(g.p().bits(), 257);
    }

    #[test]
    fn rejects_tiny_bit_sizes_and_bad_parameters() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        assert!(SchnorrGroup::generate(7, &mut rng).is_err());
        // 5 has order 22 mod 23.
        let bad = SchnorrGroup::new(23u32.into(), 11u32.into(), 5u32.into());
        assert!(bad.is_err());
        assert!(SchnorrGroup::new(21u32.into(), 10u32.into(), 4u32.into()).is_err());
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        fn slow(n: u64) -> bool {
            n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
        }
        for n in 0u64..5000 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), slow(n), "n = {n}");
        }
    }

    #[test]
    fn random_scalar_stays_in_zq_star() {
        let g = SchnorrGroup::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let s = g.random_scalar(&mut rng);
            assert!(s >= BigUint::one() && &s < g.q());
            seen.insert(s);
        }
        assert_eq!(seen.len(), 10);
    }
}
