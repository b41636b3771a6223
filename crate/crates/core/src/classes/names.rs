use std::collections::HashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::sample::Instance;

/// Bidirectional map between compact domain indices and the naturals they
/// stand for.
///
/// The prime-power and block constructions use sparse instances (`3e+2`, `2^e·7^j`, ...);
/// finite-class machinery works on the dense indices `0..len`, reports print
/// the true naturals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstanceNames {
    names: Vec<BigUint>,
    index: HashMap<BigUint, Instance>,
}

#[derive(Serialize, Deserialize)]
struct NamesFile {
    /// `names[i]` is the natural represented by compact index `i`, in decimal.
    names: Vec<String>,
}

impl InstanceNames {
    /// Distinct naturals, assigned compact indices in the given order.
    pub fn new<I: IntoIterator<Item = BigUint>>(naturals: I) -> Self {
        let mut out = InstanceNames::default();
        for n in naturals {
            out.intern(n);
        }
        out
    }

    /// Compact index `i` names the natural `i + offset`.
    pub fn offset(domain_size: usize, offset: u64) -> Self {
        InstanceNames::new((0..domain_size as u64).map(|i| BigUint::from(i + offset)))
    }

    pub fn identity(domain_size: usize) -> Self {
        InstanceNames::offset(domain_size, 0)
    }

    /// Index of `n`, inserting it if new.
    pub fn intern(&mut self, n: BigUint) -> Instance {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        let i = self.names.len() as Instance;
        self.index.insert(n.clone(), i);
        self.names.push(n);
        i
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn natural(&self, x: Instance) -> Option<&BigUint> {
        self.names.get(x as usize)
    }

    pub fn compact(&self, n: &BigUint) -> Option<Instance> {
        self.index.get(n).copied()
    }

    pub fn compact_u64(&self, n: u64) -> Option<Instance> {
        self.compact(&BigUint::from(n))
    }

    pub fn naturals(&self) -> &[BigUint] {
        &self.names
    }

    /// Decimal rendering of the natural behind `x` (or `#x` if unmapped).
    pub fn display(&self, x: Instance) -> String {
        self.natural(x)
            .map(|n| n.to_string())
            .unwrap_or_else(|| format!("#{x}"))
    }

    pub fn to_json(&self) -> String {
        let file = NamesFile {
            names: self.names.iter().map(|n| n.to_string()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("names serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: NamesFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut naturals = Vec::with_capacity(file.names.len());
        for s in file.names {
            naturals.push(s.parse::<BigUint>().map_err(|e| format!("{s:?}: {e}"))?);
        }
        Ok(InstanceNames::new(naturals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_names_and_round_trip() {
        let names = InstanceNames::offset(4, 1);
        assert_eq!(names.display(0), "1");
        assert_eq!(names.compact_u64(4), Some(3));
        assert_eq!(names.compact_u64(0), None);
        let back = InstanceNames::from_json(&names.to_json()).unwrap();
        assert_eq!(back, names);
    }

    #[test]
    fn intern_is_idempotent() {
        let mut names = InstanceNames::default();
        let a = names.intern(BigUint::from(1024u32));
        let b = names.intern(BigUint::from(7u32));
        assert_eq!(names.intern(BigUint::from(1024u32)), a);
        assert_eq!((a, b), (0, 1));
    }
}
