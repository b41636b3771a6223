use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::sample::{Instance, Label, Sample};

use super::{row_value, ClassError, FiniteClass, Row, MAX_DOMAIN};

type Evaluator = Arc<dyn Fn(Instance) -> Option<Label> + Send + Sync>;

/// A hypothesis `h: N -> {0,1}`, evaluated under whatever budget its
/// evaluator carries. `None` from [`Hypothesis::eval`] means the evaluation
/// did not finish within that budget.
#[derive(Clone)]
pub struct Hypothesis {
    eval: Evaluator,
    support: Option<BTreeSet<Instance>>,
    tag: Option<String>,
}

impl Hypothesis {
    /// The characteristic function of a finite set.
    pub fn from_support<I: IntoIterator<Item = Instance>>(support: I) -> Self {
        let support: BTreeSet<Instance> = support.into_iter().collect();
        let lookup = support.clone();
        Hypothesis {
            eval: Arc::new(move |x| Some(lookup.contains(&x))),
            support: Some(support),
            tag: None,
        }
    }

    pub fn from_row(row: Row) -> Self {
        Hypothesis::from_support((0..MAX_DOMAIN as Instance).filter(|&x| row_value(row, x)))
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(Instance) -> Option<Label> + Send + Sync + 'static,
    {
        Hypothesis {
            eval: Arc::new(f),
            support: None,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn eval(&self, x: Instance) -> Option<Label> {
        (self.eval)(x)
    }

    pub fn support(&self) -> Option<&BTreeSet<Instance>> {
        self.support.as_ref()
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    /// Row over `0..domain_size`, or `None` if some evaluation ran out of budget.
    pub fn row(&self, domain_size: usize) -> Option<Row> {
        let mut row: Row = 0;
        for x in 0..domain_size.min(MAX_DOMAIN) as Instance {
            if self.eval(x)? {
                row |= 1 << x;
            }
        }
        Some(row)
    }

    /// Whether `h` agrees with every item of `s` (`None` if undecided).
    pub fn consistent_with(&self, s: &Sample) -> Option<bool> {
        for it in s {
            if self.eval(it.x)? != it.y {
                return Some(false);
            }
        }
        Some(true)
    }
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypothesis")
            .field("support", &self.support)
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

/// One enumeration slot. `Absent` marks an index whose enumeration did not
/// produce a hypothesis (within budget).
#[derive(Clone, Debug)]
pub enum Slot {
    Present(Hypothesis),
    Absent,
}

/// Tri-state realizability for enumerable classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Realizability {
    /// Witnessed by the hypothesis at this enumeration index.
    Yes(usize),
    No,
    Unknown,
}

type Generator = Arc<dyn Fn(usize) -> Slot + Send + Sync>;

/// A class given by a deterministic generator `index -> Slot`, explored up
/// to `enumeration_budget` indices.
///
/// `complete` is set only when the slots below the budget are known to be
/// the entire class (e.g. a finite class embedded here); only then can a
/// negative answer be certified.
#[derive(Clone)]
pub struct EnumerableClass {
    generator: Generator,
    enumeration_budget: usize,
    domain_cap: usize,
    complete: bool,
}

impl EnumerableClass {
    /// `domain_cap` bounds the instances used when materializing to a
    /// [`FiniteClass`] or searching for shattered trees.
    pub fn new<F>(generator: F, enumeration_budget: usize, domain_cap: usize) -> Self
    where
        F: Fn(usize) -> Slot + Send + Sync + 'static,
    {
        EnumerableClass {
            generator: Arc::new(generator),
            enumeration_budget,
            domain_cap: domain_cap.min(MAX_DOMAIN),
            complete: false,
        }
    }

    /// Embeds a finite class; the enumeration lists its rows in order.
    pub fn from_finite(h: &FiniteClass) -> Self {
        let rows = h.rows().to_vec();
        let len = rows.len();
        let mut out = EnumerableClass::new(
            move |i| match rows.get(i) {
                Some(&r) => Slot::Present(Hypothesis::from_row(r)),
                None => Slot::Absent,
            },
            len,
            h.domain_size(),
        );
        out.complete = true;
        out
    }

    pub fn with_budget(&self, enumeration_budget: usize) -> Self {
        EnumerableClass {
            enumeration_budget,
            complete: self.complete && enumeration_budget >= self.enumeration_budget,
            ..self.clone()
        }
    }

    pub fn enumeration_budget(&self) -> usize {
        self.enumeration_budget
    }

    pub fn domain_cap(&self) -> usize {
        self.domain_cap
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn slot(&self, i: usize) -> Slot {
        (self.generator)(i)
    }

    /// Indices below the budget whose slots are absent.
    pub fn absent_slots(&self) -> Vec<usize> {
        (0..self.enumeration_budget)
            .filter(|&i| matches!(self.slot(i), Slot::Absent))
            .collect()
    }

    pub fn present(&self) -> impl Iterator<Item = (usize, Hypothesis)> + '_ {
        (0..self.enumeration_budget).filter_map(move |i| match self.slot(i) {
            Slot::Present(h) => Some((i, h)),
            Slot::Absent => None,
        })
    }

    pub fn is_realizable(&self, s: &Sample) -> Realizability {
        let mut undecided = false;
        for (i, h) in self.present() {
            match h.consistent_with(s) {
                Some(true) => return Realizability::Yes(i),
                Some(false) => {}
                None => undecided = true,
            }
        }
        if self.complete && !undecided {
            Realizability::No
        } else {
            Realizability::Unknown
        }
    }

    /// Rows of all present hypotheses over `0..domain_cap`.
    pub fn materialize(&self) -> Result<FiniteClass, ClassError> {
        let mut rows = Vec::new();
        for (i, h) in self.present() {
            rows.push(h.row(self.domain_cap).ok_or(ClassError::EvaluationBudget(i))?);
        }
        FiniteClass::new(self.domain_cap, rows)
    }
}

impl fmt::Debug for EnumerableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnumerableClass")
            .field("enumeration_budget", &self.enumeration_budget)
            .field("domain_cap", &self.domain_cap)
            .field("complete", &self.complete)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{singletons, thresholds};

    #[test]
    fn embedded_finite_class_round_trips() {
        let h = thresholds(2).unwrap();
        let e = EnumerableClass::from_finite(&h);
        assert_eq!(e.materialize().unwrap(), h);
        assert!(e.absent_slots().is_empty());
        let s = Sample::from_pairs(&[(1, 1), (0, 0)]);
        assert_eq!(e.is_realizable(&s), Realizability::No);
        assert!(matches!(e.is_realizable(&Sample::empty()), Realizability::Yes(0)));
    }

    #[test]
    fn incomplete_enumerations_never_answer_no() {
        let e = EnumerableClass::new(
            |i| {
                if i % 2 == 0 {
                    Slot::Present(Hypothesis::from_support([i as Instance]))
                } else {
                    Slot::Absent
                }
            },
            8,
            8,
        );
        assert_eq!(e.absent_slots(), vec![1, 3, 5, 7]);
        let s = Sample::from_pairs(&[(1, 1)]);
        assert_eq!(e.is_realizable(&s), Realizability::Unknown);
        assert_eq!(e.is_realizable(&Sample::from_pairs(&[(2, 1)])), Realizability::Yes(2));
    }

    #[test]
    fn budgeted_evaluation_is_reported() {
        let e = EnumerableClass::new(
            |i| Slot::Present(Hypothesis::from_fn(move |x| if x < 3 { Some(x as usize == i) } else { None })),
            3,
            4,
        );
        assert!(matches!(e.materialize(), Err(ClassError::EvaluationBudget(0))));
        let small = EnumerableClass::new(|i| Slot::Present(Hypothesis::from_support([i as Instance])), 4, 4);
        assert_eq!(small.materialize().unwrap(), singletons(4));
    }
}
