//! Hypothesis classes: finite tables of 0/1 rows over a domain prefix, and
//! budgeted enumerable classes.

mod builders;
mod enumerable;
mod names;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{Instance, Label, Sample};

pub use builders::{from_file, from_json_str, hd_prime, random_class, singletons, thresholds, ClassFile};
pub use enumerable::{EnumerableClass, Hypothesis, Realizability, Slot};
pub use names::InstanceNames;

/// A hypothesis restricted to the represented domain: bit `x` is `h(x)`.
pub type Row = u128;

/// Largest domain a [`FiniteClass`] can represent.
pub const MAX_DOMAIN: usize = 128;

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("domain size {0} exceeds the supported maximum of {MAX_DOMAIN}")]
    DomainTooLarge(usize),
    #[error("row has bits set beyond the domain size {0}")]
    RowOutOfDomain(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading class file: {0}")]
    Io(#[from] std::io::Error),
    #[error("enumeration slot {0} could not be evaluated within budget")]
    EvaluationBudget(usize),
    #[error("builder precondition violated: {0}")]
    Precondition(String),
}

#[inline]
pub fn row_value(row: Row, x: Instance) -> Label {
    x < MAX_DOMAIN as u64 && (row >> x) & 1 == 1
}

/// A finite class over the domain `{0, ..., domain_size - 1}`.
///
/// Rows are kept sorted and deduplicated, so two classes with the same
/// behaviors compare equal and the row slice is a canonical memo key.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteClass {
    domain_size: usize,
    rows: Vec<Row>,
}

impl FiniteClass {
    pub fn new<I: IntoIterator<Item = Row>>(domain_size: usize, rows: I) -> Result<Self, ClassError> {
        if domain_size > MAX_DOMAIN {
            return Err(ClassError::DomainTooLarge(domain_size));
        }
        let mask = domain_mask(domain_size);
        let mut rows: Vec<Row> = rows.into_iter().collect();
        if rows.iter().any(|r| r & !mask != 0) {
            return Err(ClassError::RowOutOfDomain(domain_size));
        }
        rows.sort_unstable();
        rows.dedup();
        Ok(FiniteClass { domain_size, rows })
    }

    /// Rows must already be sorted, deduplicated and inside the domain.
    pub(crate) fn from_sorted_unchecked(domain_size: usize, rows: Vec<Row>) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        FiniteClass { domain_size, rows }
    }

    pub fn empty(domain_size: usize) -> Self {
        FiniteClass {
            domain_size,
            rows: Vec::new(),
        }
    }

    /// Builds a class from explicit supports.
    pub fn from_supports<I, S>(domain_size: usize, supports: I) -> Result<Self, ClassError>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = Instance>,
    {
        let mut rows = Vec::new();
        for support in supports {
            let mut row: Row = 0;
            for x in support {
                if x >= domain_size as Instance || x >= MAX_DOMAIN as Instance {
                    return Err(ClassError::RowOutOfDomain(domain_size));
                }
                row |= 1 << x;
            }
            rows.push(row);
        }
        FiniteClass::new(domain_size, rows)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = Instance> {
        0..self.domain_size as Instance
    }

    pub fn contains_row(&self, row: Row) -> bool {
        self.rows.binary_search(&row).is_ok()
    }

    /// `H^(x,y)`. Instances outside the domain are labeled 0 by every row.
    pub fn constrain(&self, x: Instance, y: Label) -> FiniteClass {
        FiniteClass {
            domain_size: self.domain_size,
            rows: self
                .rows
                .iter()
                .copied()
                .filter(|&r| row_value(r, x) == y)
                .collect(),
        }
    }

    /// `H_S`, the version space of `S`.
    pub fn restrict(&self, s: &Sample) -> FiniteClass {
        FiniteClass {
            domain_size: self.domain_size,
            rows: self
                .rows
                .iter()
                .copied()
                .filter(|&r| empirical_loss_row(r, s) == 0)
                .collect(),
        }
    }

    pub fn is_realizable(&self, s: &Sample) -> bool {
        self.rows.iter().any(|&r| empirical_loss_row(r, s) == 0)
    }

    /// Instances on which both labels are realized.
    pub fn splitting_instances(&self) -> Vec<Instance> {
        let all_or = self.rows.iter().fold(0u128, |a, &r| a | r);
        let all_and = self.rows.iter().fold(domain_mask(self.domain_size), |a, &r| a & r);
        let split = all_or & !all_and;
        (0..self.domain_size as Instance)
            .filter(|&x| (split >> x) & 1 == 1)
            .collect()
    }

    pub fn is_subset_of(&self, other: &FiniteClass) -> bool {
        self.rows.iter().all(|&r| other.contains_row(r))
    }

    pub fn row_string(&self, row: Row) -> String {
        (0..self.domain_size)
            .map(|x| if (row >> x) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn row_strings(&self) -> Vec<String> {
        self.rows.iter().map(|&r| self.row_string(r)).collect()
    }

    pub fn to_file(&self) -> ClassFile {
        ClassFile {
            domain_size: self.domain_size,
            hypotheses: self.row_strings(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("class file serializes")
    }
}

impl fmt::Debug for FiniteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteClass")
            .field("domain_size", &self.domain_size)
            .field("rows", &self.row_strings())
            .finish()
    }
}

impl fmt::Display for FiniteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.row_strings().join(", "))
    }
}

pub(crate) fn domain_mask(domain_size: usize) -> Row {
    if domain_size >= 128 {
        u128::MAX
    } else {
        (1u128 << domain_size) - 1
    }
}

pub(crate) fn empirical_loss_row(row: Row, s: &Sample) -> usize {
    s.iter().filter(|it| row_value(row, it.x) != it.y).count()
}

/// `L_S(h)`: the number of disagreements between `h` and `S`.
pub fn empirical_loss(h: &Hypothesis, s: &Sample) -> Option<usize> {
    let mut loss = 0;
    for it in s {
        if h.eval(it.x)? != it.y {
            loss += 1;
        }
    }
    Some(loss)
}

/// Serializable summary of a class, for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSummary {
    pub domain_size: usize,
    pub rows: usize,
}

impl From<&FiniteClass> for ClassSummary {
    fn from(h: &FiniteClass) -> Self {
        ClassSummary {
            domain_size: h.domain_size,
            rows: h.len(),
        }
    }
}
