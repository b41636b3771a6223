//! Labeled instances and samples (finite sequences of them).

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::encoding::encode_sequence;

/// A domain instance. Finite classes index their domain as `0..domain_size`.
pub type Instance = u64;

/// Binary label; `true` is the label 1.
pub type Label = bool;

#[inline]
pub fn bit(label: Label) -> u8 {
    label as u8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub x: Instance,
    pub y: Label,
}

impl LabeledInstance {
    pub fn new(x: Instance, y: Label) -> Self {
        LabeledInstance { x, y }
    }
}

impl fmt::Display for LabeledInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, bit(self.y))
    }
}

/// A finite sequence of labeled instances. The empty sample is `Sample::empty()`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sample {
    items: Vec<LabeledInstance>,
}

impl Sample {
    pub fn empty() -> Self {
        Sample { items: Vec::new() }
    }

    pub fn new(items: Vec<LabeledInstance>) -> Self {
        Sample { items }
    }

    /// Builds a sample from `(x, y)` pairs with `y` given as 0/1.
    ///
    /// Any nonzero `y` is read as label 1.
    pub fn from_pairs(pairs: &[(Instance, u8)]) -> Self {
        Sample {
            items: pairs
                .iter()
                .map(|&(x, y)| LabeledInstance::new(x, y != 0))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[LabeledInstance] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledInstance> {
        self.items.iter()
    }

    pub fn get(&self, t: usize) -> Option<LabeledInstance> {
        self.items.get(t).copied()
    }

    /// The length-`n` prefix `S_n`.
    ///
    /// # Panics
    /// If `n > self.len()`.
    pub fn prefix(&self, n: usize) -> Sample {
        assert!(n <= self.items.len(), "prefix length {n} exceeds sample length {}", self.items.len());
        Sample {
            items: self.items[..n].to_vec(),
        }
    }

    pub fn push(&mut self, item: LabeledInstance) {
        self.items.push(item);
    }

    pub fn pop(&mut self) -> Option<LabeledInstance> {
        self.items.pop()
    }

    /// `self ⌢ ((x, y))` as a new sample.
    pub fn extended(&self, x: Instance, y: Label) -> Sample {
        let mut items = Vec::with_capacity(self.items.len() + 1);
        items.extend_from_slice(&self.items);
        items.push(LabeledInstance::new(x, y));
        Sample { items }
    }

    pub fn concat(&self, other: &Sample) -> Sample {
        let mut items = self.items.clone();
        items.extend_from_slice(&other.items);
        Sample { items }
    }

    pub fn contains_instance(&self, x: Instance) -> bool {
        self.items.iter().any(|it| it.x == x)
    }

    /// Label recorded for `x`, if `x` occurs (first occurrence).
    pub fn label_of(&self, x: Instance) -> Option<Label> {
        self.items.iter().find(|it| it.x == x).map(|it| it.y)
    }

    /// Flattened `(x_1, y_1, ..., x_T, y_T)`.
    pub fn flatten(&self) -> Vec<u64> {
        self.items
            .iter()
            .flat_map(|it| [it.x, it.y as u64])
            .collect()
    }

    /// Prime-power code of the flattened sample.
    pub fn encode(&self) -> BigUint {
        encode_sequence(&self.flatten())
    }
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            return write!(f, "ε");
        }
        write!(f, "(")?;
        for (i, it) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{it}")?;
        }
        write!(f, ")")
    }
}

impl FromIterator<LabeledInstance> for Sample {
    fn from_iter<I: IntoIterator<Item = LabeledInstance>>(iter: I) -> Self {
        Sample {
            items: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Sample {
    type Item = &'a LabeledInstance;
    type IntoIter = std::slice::Iter<'a, LabeledInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_bounds() {
        let s = Sample::from_pairs(&[(3, 1), (4, 0), (5, 1)]);
        assert_eq!(s.prefix(0), Sample::empty());
        assert_eq!(s.prefix(2), Sample::from_pairs(&[(3, 1), (4, 0)]));
        assert_eq!(s.prefix(3), s);
    }

    #[test]
    #[should_panic]
    fn prefix_past_end_panics() {
        Sample::from_pairs(&[(0, 0)]).prefix(2);
    }

    #[test]
    fn display() {
        assert_eq!(Sample::empty().to_string(), "ε");
        assert_eq!(Sample::from_pairs(&[(9, 1), (10, 0)]).to_string(), "((9,1),(10,0))");
    }
}
