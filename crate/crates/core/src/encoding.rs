//! Integer encodings: prime-power codes of sequences and canonical indices
//! of finite sets.
//!
//! A sequence `(z_1, ..., z_n)` is coded as `Π p_i^(z_i + 1)` with
//! `p_1 = 2, p_2 = 3, ...`; the empty sequence is coded as 1. A finite set
//! `F` has canonical index `Σ_{x ∈ F} 2^x`. Both are exact and use
//! arbitrary-precision naturals.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::sample::{LabeledInstance, Sample};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("code 0 is not the encoding of any sequence")]
    Zero,
    #[error("code {code} is not in the range of the encoding (prime {prime} is skipped)")]
    NotInRange { code: String, prime: u64 },
    #[error("decoded sequence has odd length {0}; not a sample")]
    OddLength(usize),
    #[error("label {0} at position {1} is not 0 or 1")]
    BadLabel(u64, usize),
    #[error("exponent too large to decode")]
    Overflow,
}

/// Iterator over the primes 2, 3, 5, 7, ... by trial division against the
/// primes produced so far. Sequences encoded here are short, so this is
/// never the bottleneck.
#[derive(Debug, Default, Clone)]
pub struct Primes {
    found: Vec<u64>,
}

impl Primes {
    pub fn new() -> Self {
        Primes { found: Vec::new() }
    }
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let mut candidate = match self.found.last() {
            None => 2,
            Some(2) => 3,
            Some(&p) => p + 2,
        };
        loop {
            let is_prime = self
                .found
                .iter()
                .take_while(|&&p| p * p <= candidate)
                .all(|&p| candidate % p != 0);
            if is_prime {
                self.found.push(candidate);
                return Some(candidate);
            }
            candidate += 2;
        }
    }
}

/// `p_i`, 1-based: `nth_prime(1) == 2`.
pub fn nth_prime(i: usize) -> u64 {
    assert!(i >= 1, "primes are 1-indexed");
    Primes::new().nth(i - 1).expect("infinitely many primes")
}

/// `⟨Z⟩ = Π_{i=1}^{n} p_i^(z_i + 1)`; the empty sequence maps to 1.
pub fn encode_sequence(z: &[u64]) -> BigUint {
    let mut code = BigUint::one();
    for (&zi, p) in z.iter().zip(Primes::new()) {
        let exp = u32::try_from(zi + 1).expect("sequence entry too large to encode");
        match p.checked_pow(exp) {
            Some(power) => code *= power,
            None => code *= BigUint::from(p).pow(exp),
        }
    }
    code
}

/// Inverse of [`encode_sequence`] on its range.
pub fn decode_sequence(code: &BigUint) -> Result<Vec<u64>, DecodeError> {
    if code.is_zero() {
        return Err(DecodeError::Zero);
    }
    let mut rest = code.clone();
    let mut out = Vec::new();
    for p in Primes::new() {
        if rest.is_one() {
            return Ok(out);
        }
        let exp = valuation(&mut rest, p);
        if exp == 0 {
            return Err(DecodeError::NotInRange {
                code: code.to_string(),
                prime: p,
            });
        }
        out.push(exp - 1);
    }
    unreachable!("prime iterator is infinite")
}

/// Divides the largest power of `p` out of `n` and returns its exponent.
fn valuation(n: &mut BigUint, p: u64) -> u64 {
    if p == 2 {
        let tz = n.trailing_zeros().unwrap_or(0);
        *n >>= tz;
        return tz;
    }
    let Ok(p) = u32::try_from(p) else {
        let p = BigUint::from(p);
        let mut exp = 0;
        while (&*n % &p).is_zero() {
            *n /= &p;
            exp += 1;
        }
        return exp;
    };
    // strip the largest power of p that fits a u32 first, then single factors
    let (mut chunk, mut k) = (p, 1);
    while let Some(next) = chunk.checked_mul(p) {
        chunk = next;
        k += 1;
    }
    let mut exp = 0;
    while (&*n % chunk).is_zero() {
        *n /= chunk;
        exp += k;
    }
    while (&*n % p).is_zero() {
        *n /= p;
        exp += 1;
    }
    exp
}

/// `⟨S⟩ = ⟨(x_1, y_1, ..., x_T, y_T)⟩`.
pub fn encode_sample(s: &Sample) -> BigUint {
    s.encode()
}

pub fn decode_sample(code: &BigUint) -> Result<Sample, DecodeError> {
    let flat = decode_sequence(code)?;
    if flat.len() % 2 != 0 {
        return Err(DecodeError::OddLength(flat.len()));
    }
    flat.chunks(2)
        .enumerate()
        .map(|(t, pair)| match pair[1] {
            0 | 1 => Ok(LabeledInstance::new(pair[0], pair[1] == 1)),
            other => Err(DecodeError::BadLabel(other, t)),
        })
        .collect()
}

/// Canonical index `y = Σ_{x ∈ F} 2^x` of a finite set.
pub fn canonical_index(set: &BTreeSet<u64>) -> BigUint {
    let mut y = BigUint::zero();
    for &x in set {
        y.set_bit(x, true);
    }
    y
}

/// `D_y`: the positions of the on bits of `y`.
pub fn decode_canonical(y: &BigUint) -> BTreeSet<u64> {
    (0..y.bits()).filter(|&i| y.bit(i)).collect()
}

/// A canonical index held by its set of on-bit positions.
///
/// Supports of the DR constructions contain instances such as `2^e·11^j`
/// whose canonical index has astronomically many bits; the index is the
/// same natural number, stored sparsely. [`CanonicalIndex::to_natural`]
/// materializes it when that is feasible.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalIndex {
    positions: BTreeSet<BigUint>,
}

impl CanonicalIndex {
    /// Largest bit position [`CanonicalIndex::to_natural`] will materialize.
    pub const MATERIALIZE_LIMIT: u64 = 1 << 24;

    pub fn of_set<I: IntoIterator<Item = BigUint>>(set: I) -> Self {
        CanonicalIndex {
            positions: set.into_iter().collect(),
        }
    }

    pub fn from_natural(y: &BigUint) -> Self {
        CanonicalIndex {
            positions: decode_canonical(y).into_iter().map(BigUint::from).collect(),
        }
    }

    /// `D_y`.
    pub fn decode(&self) -> &BTreeSet<BigUint> {
        &self.positions
    }

    pub fn to_natural(&self) -> Option<BigUint> {
        let mut y = BigUint::zero();
        for p in &self.positions {
            let bitpos = p.to_u64().filter(|&b| b <= Self::MATERIALIZE_LIMIT)?;
            y.set_bit(bitpos, true);
        }
        Some(y)
    }
}

impl fmt::Display for CanonicalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_natural() {
            Some(y) => write!(f, "{y}"),
            None => {
                write!(f, "Σ2^{{")?;
                for (i, p) in self.positions.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of the product formula with u128, independent of
    /// the prime iterator.
    fn product_formula(z: &[u64]) -> u128 {
        const P: [u128; 6] = [2, 3, 5, 7, 11, 13];
        z.iter()
            .zip(P)
            .map(|(&zi, p)| p.pow(zi as u32 + 1))
            .product()
    }

    #[test]
    fn primes_start_correctly() {
        let first: Vec<u64> = Primes::new().take(10).collect();
        assert_eq!(first, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(nth_prime(1), 2);
        assert_eq!(nth_prime(6), 13);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_sequence(&[]), BigUint::one());
        assert_eq!(encode_sequence(&[0]), BigUint::from(2u32));
        assert_eq!(encode_sequence(&[1, 2]), BigUint::from(108u32));
        assert_eq!(product_formula(&[1, 2]), 108);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_sequence(&BigUint::one()).unwrap(), Vec::<u64>::new());
        assert_eq!(decode_sequence(&BigUint::from(108u32)).unwrap(), vec![1, 2]);
        assert!(matches!(
            decode_sequence(&BigUint::from(10u32)),
            Err(DecodeError::NotInRange { prime: 3, .. })
        ));
        assert_eq!(decode_sequence(&BigUint::zero()), Err(DecodeError::Zero));
    }

    #[test]
    fn sample_examples() {
        assert_eq!(encode_sample(&Sample::empty()), BigUint::one());
        assert_eq!(encode_sample(&Sample::from_pairs(&[(3, 1)])), BigUint::from(144u32));
        assert_eq!(
            encode_sample(&Sample::from_pairs(&[(0, 0), (1, 1)])),
            BigUint::from(7350u32)
        );
        assert_eq!(product_formula(&[0, 0, 1, 1]), 7350);
    }

    #[test]
    fn decode_sample_rejects_bad_labels_and_odd_lengths() {
        // (3, 2): label 2
        let code = encode_sequence(&[3, 2]);
        assert_eq!(decode_sample(&code), Err(DecodeError::BadLabel(2, 0)));
        assert_eq!(decode_sample(&encode_sequence(&[3])), Err(DecodeError::OddLength(1)));
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_index(&BTreeSet::new()), BigUint::zero());
        assert_eq!(canonical_index(&BTreeSet::from([0, 2])), BigUint::from(5u32));
        assert_eq!(decode_canonical(&BigUint::from(5u32)), BTreeSet::from([0, 2]));
    }

    #[test]
    fn sparse_canonical_index_matches_dense() {
        let set = BTreeSet::from([1u64, 4, 9]);
        let dense = canonical_index(&set);
        let sparse = CanonicalIndex::of_set(set.iter().map(|&x| BigUint::from(x)));
        assert_eq!(sparse.to_natural(), Some(dense.clone()));
        assert_eq!(CanonicalIndex::from_natural(&dense), sparse);
        let huge = CanonicalIndex::of_set([BigUint::from(11u32).pow(30)]);
        assert_eq!(huge.to_natural(), None);
    }

    /// Every sequence of length ≤ 6 with entries ≤ 20 round-trips; checked
    /// exhaustively on a sub-range here and sampled across the full range.
    #[test]
    fn round_trip_and_injective_exhaustive_small() {
        let mut seen = std::collections::HashSet::new();
        let mut count = 0;
        for len in 0..=3usize {
            let total = 21u64.pow(len as u32);
            for mut n in 0..total {
                let mut z = Vec::with_capacity(len);
                for _ in 0..len {
                    z.push(n % 21);
                    n /= 21;
                }
                let code = encode_sequence(&z);
                assert_eq!(decode_sequence(&code).unwrap(), z);
                assert!(seen.insert(code));
                count += 1;
            }
        }
        assert_eq!(count, 1 + 21 + 441 + 9261);
    }

    proptest! {
        #[test]
        fn round_trip(z in proptest::collection::vec(0u64..=20, 0..=6)) {
            prop_assert_eq!(decode_sequence(&encode_sequence(&z)).unwrap(), z);
        }

        #[test]
        fn prefix_law(pairs in proptest::collection::vec((0u64..50, 0u8..2), 0..8)) {
            let s = Sample::from_pairs(&pairs);
            for n in 0..=s.len() {
                let p = s.prefix(n);
                prop_assert_eq!(decode_sample(&encode_sample(&p)).unwrap(), p);
            }
        }

        #[test]
        fn canonical_round_trip(set in proptest::collection::btree_set(0u64..200, 0..20)) {
            prop_assert_eq!(decode_canonical(&canonical_index(&set)), set);
        }
    }
}
