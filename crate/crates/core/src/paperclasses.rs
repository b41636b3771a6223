//! Budgeted instantiations of the halting-based classes: the RER halting
//! class, `H_halting`, the two decidably representable classes with their
//! decider, the block-diagonal class `H_split` with its forcing samples, and
//! the step-count class `H_init`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::classes::{ClassError, EnumerableClass, FiniteClass, Hypothesis, InstanceNames, Row, Slot};
use crate::encoding::CanonicalIndex;
use crate::littlestone::{verify_shattered_tree, ShatteredTree};
use crate::machine::{halting_time, run_two_place, Convergence, HaltingOracle, ProgramIndex, RunOutcome, ToyProgram};
use crate::sample::{Instance, Label, LabeledInstance, Sample};

#[derive(Debug, Error)]
pub enum PaperError {
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("program {e} halts on {x} but its certificate index was not found within budget")]
    CertificateBudget { e: ProgramIndex, x: u64 },
    #[error("convergence of program {e} on {x} unknown within budget")]
    Unknown { e: ProgramIndex, x: u64 },
    #[error("{0}")]
    Precondition(String),
}

/// A finite class over compact indices together with the naturals they
/// name and the hypothesis supports in natural coordinates.
#[derive(Clone, Debug)]
pub struct NamedClass {
    pub class: FiniteClass,
    pub names: InstanceNames,
    pub supports: Vec<BTreeSet<BigUint>>,
}

impl NamedClass {
    fn from_supports(supports: Vec<BTreeSet<BigUint>>, names: InstanceNames) -> Result<Self, PaperError> {
        let rows = supports
            .iter()
            .map(|s| s.iter().map(|n| names.compact(n).expect("support interned")).collect::<Vec<_>>());
        let class = FiniteClass::from_supports(names.len(), rows)?;
        Ok(NamedClass { class, names, supports })
    }

    fn interning(supports: Vec<BTreeSet<BigUint>>, extra: impl IntoIterator<Item = BigUint>) -> Result<Self, PaperError> {
        let mut names = InstanceNames::new(extra);
        for s in &supports {
            for n in s {
                names.intern(n.clone());
            }
        }
        Self::from_supports(supports, names)
    }

    /// Compact index of the natural `n`.
    pub fn instance(&self, n: &BigUint) -> Option<Instance> {
        self.names.compact(n)
    }

    /// A sample given in natural coordinates, mapped to compact indices.
    pub fn sample(&self, items: &[(BigUint, Label)]) -> Option<Sample> {
        items
            .iter()
            .map(|(n, y)| Some(LabeledInstance::new(self.instance(n)?, *y)))
            .collect()
    }

    pub fn canonical_indices(&self) -> Vec<CanonicalIndex> {
        self.supports.iter().map(|s| CanonicalIndex::of_set(s.iter().cloned())).collect()
    }
}

fn set<const N: usize>(items: [BigUint; N]) -> BTreeSet<BigUint> {
    items.into_iter().collect()
}

/// `2^e · y^i`.
pub fn prime_power_instance(e: u64, y: u32, i: u64) -> BigUint {
    (BigUint::one() << e as usize) * BigUint::from(y).pow(i as u32)
}

/// The three instances `3e, 3e+1, 3e+2` of block `e`.
pub fn rer_halt_block(e: u64) -> [u64; 3] {
    [3 * e, 3 * e + 1, 3 * e + 2]
}

/// `⋃_e {1_{3e}} ∪ ⋃_{φ_e(e)↓} {1_{3e,3e+1}, 1_{3e,3e+1,3e+2}}` for
/// `e <= e_max`, with halting judged by `halts_within(e, e, s_max)`.
pub fn build_h_rer_halt(oracle: &dyn HaltingOracle, e_max: u64, s_max: u64) -> Result<FiniteClass, PaperError> {
    let mut supports = Vec::new();
    for e in 0..=e_max {
        let [a, b, c] = rer_halt_block(e);
        supports.push(vec![a]);
        if oracle.halts_within(e, e, s_max).is_some() {
            supports.push(vec![a, b]);
            supports.push(vec![a, b, c]);
        }
    }
    Ok(FiniteClass::from_supports(3 * (e_max as usize + 1), supports)?)
}

/// `⋃_{φ_e(e)↓} {1_{2e,2e+1}} ∪ ⋃_{φ_e(e)↑} {1_{2e}}` for `e <= e_max`.
pub fn build_h_halting(oracle: &dyn HaltingOracle, e_max: u64, s_max: u64) -> Result<FiniteClass, PaperError> {
    let supports = (0..=e_max).map(|e| {
        if oracle.halts_within(e, e, s_max).is_some() {
            vec![2 * e, 2 * e + 1]
        } else {
            vec![2 * e]
        }
    });
    Ok(FiniteClass::from_supports(2 * (e_max as usize + 1), supports)?)
}

/// What the two decidably representable classes need to know about one
/// program index `e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrBlock {
    pub e: ProgramIndex,
    /// `c_0(e)`, present iff `φ_e(0)↓`.
    pub c0: Option<usize>,
    /// `φ_e(e)` when it converges and `φ_e(0)↓`.
    pub value: Option<BigUint>,
    /// `c_e(e)`, present iff `value` is.
    pub ce: Option<usize>,
}

impl DrBlock {
    /// Queries the oracle about `e`: with `Some(steps)` convergence means
    /// halting within `steps`; with `None` the oracle's own budget is used
    /// and an undecided answer is an error.
    pub fn query(oracle: &dyn HaltingOracle, e: ProgramIndex, steps: Option<u64>) -> Result<Self, PaperError> {
        let converge = |x: u64| -> Result<Option<BigUint>, PaperError> {
            match steps {
                Some(s) => Ok(oracle.halts_within(e, x, s)),
                None => match oracle.converges(e, x) {
                    Convergence::Halts(v) => Ok(Some(v)),
                    Convergence::Diverges => Ok(None),
                    Convergence::Unknown => Err(PaperError::Unknown { e, x }),
                },
            }
        };
        let cert = |x: u64| oracle.certificate_index(e, x).ok_or(PaperError::CertificateBudget { e, x });
        let mut block = DrBlock { e, c0: None, value: None, ce: None };
        if converge(0)?.is_none() {
            return Ok(block);
        }
        block.c0 = Some(cert(0)?);
        if let Some(v) = converge(e)? {
            block.value = Some(v);
            block.ce = Some(cert(e)?);
        }
        Ok(block)
    }

    pub fn base(&self) -> BigUint {
        BigUint::one() << self.e as usize
    }

    /// `2^e · y^{c_0(e)}`.
    pub fn with_c0(&self, y: u32) -> Option<BigUint> {
        self.c0.map(|c| prime_power_instance(self.e, y, c as u64))
    }

    /// `2^e · y^{c_e(e)}`.
    pub fn with_ce(&self, y: u32) -> Option<BigUint> {
        self.ce.map(|c| prime_power_instance(self.e, y, c as u64))
    }

    fn bit(&self) -> Option<u8> {
        self.value.as_ref().and_then(|v| v.to_u8()).filter(|&b| b <= 1)
    }

    /// The supports `H^DR_ext` contributes for this `e`.
    pub fn ext_supports(&self) -> Vec<BTreeSet<BigUint>> {
        let (Some(three), Some(five)) = (self.with_c0(3), self.with_c0(5)) else {
            return Vec::new();
        };
        let base = self.base();
        let mut out = vec![set([base.clone(), three.clone()])];
        match self.bit() {
            Some(1) => {
                out.push(set([base.clone(), five.clone(), self.with_ce(7).unwrap()]));
                out.push(set([base, five, self.with_ce(11).unwrap()]));
            }
            Some(0) => {
                let thirteen = self.with_ce(13).unwrap();
                out.push(set([base.clone(), five, thirteen.clone()]));
                out.push(set([base, three, thirteen]));
            }
            _ => {}
        }
        out
    }

    /// The supports `H^DR_halt` contributes for this `e`.
    pub fn halt_supports(&self) -> Vec<BTreeSet<BigUint>> {
        let (Some(three), Some(five)) = (self.with_c0(3), self.with_c0(5)) else {
            return Vec::new();
        };
        let base = self.base();
        let mut out = vec![set([base.clone(), three])];
        if self.value.is_some() {
            out.push(set([base.clone(), five.clone(), self.with_ce(7).unwrap()]));
            out.push(set([base, five, self.with_ce(11).unwrap()]));
        }
        out
    }
}

fn build_dr(
    oracle: &dyn HaltingOracle,
    e_max: u64,
    steps: u64,
    supports: impl Fn(&DrBlock) -> Vec<BTreeSet<BigUint>>,
) -> Result<NamedClass, PaperError> {
    let mut all = Vec::new();
    for e in 0..=e_max {
        all.extend(supports(&DrBlock::query(oracle, e, Some(steps))?));
    }
    // every 2^e is an instance, hypotheses or not
    NamedClass::interning(all, (0..=e_max).map(|e| BigUint::one() << e as usize))
}

/// The truncation of `H^DR_ext` to `e <= e_max`.
pub fn build_h_dr_ext(oracle: &dyn HaltingOracle, e_max: u64, steps: u64) -> Result<NamedClass, PaperError> {
    build_dr(oracle, e_max, steps, DrBlock::ext_supports)
}

/// The truncation of `H^DR_halt` to `e <= e_max`.
pub fn build_h_dr_halt(oracle: &dyn HaltingOracle, e_max: u64, steps: u64) -> Result<NamedClass, PaperError> {
    build_dr(oracle, e_max, steps, DrBlock::halt_supports)
}

/// `n = 2^e · y^i` with `y` an odd prime from `primes` and `i > 0`.
pub(crate) fn split_prime_power(n: &BigUint, primes: &[u32]) -> Option<(u64, u32, u64)> {
    if n.is_zero() {
        return None;
    }
    let e = n.trailing_zeros()?;
    let mut rest = n >> e as usize;
    for &y in primes {
        let y_big = BigUint::from(y);
        let mut i = 0u64;
        while (&rest % &y_big).is_zero() {
            rest /= &y_big;
            i += 1;
        }
        if i > 0 {
            return rest.is_one().then_some((e, y, i));
        }
    }
    None
}

/// The decider for the canonical indices of `H^DR_ext` supports: pattern
/// match on the shape of `D_y`, check the certificates, then evaluate
/// `φ_e(e)`.
pub fn dr_decider_h_dr_ext(oracle: &dyn HaltingOracle, y: &CanonicalIndex) -> bool {
    let d = y.decode();
    if d.len() != 2 && d.len() != 3 {
        return false;
    }
    let Some(base) = d.iter().find(|n| n.count_ones() == 1) else {
        return false;
    };
    let e = base.trailing_zeros().unwrap_or(0);
    let mut parts = Vec::new();
    for n in d.iter().filter(|&n| n != base) {
        match split_prime_power(n, &[3, 5, 7, 11, 13]) {
            Some((e2, p, i)) if e2 == e => parts.push((p, i)),
            _ => return false,
        }
    }
    parts.sort();
    let cert = |i: u64, x: u64| i as usize > 0 && oracle.check_certificate(e, i as usize, x);
    match parts.as_slice() {
        [(3, i)] => cert(*i, 0),
        [(5, i), (7 | 11 | 13, j)] | [(3, i), (13, j)] => {
            if !(cert(*i, 0) && cert(*j, e)) {
                return false;
            }
            let has_13 = parts.iter().any(|&(p, _)| p == 13);
            // the certificate guarantees φ_e(e) halts
            match oracle.halts_within(e, e, u64::MAX).and_then(|r| r.to_u8()) {
                Some(0) => has_13,
                Some(1) => !has_13,
                _ => false,
            }
        }
        _ => false,
    }
}

/// `s_1(n) = 0 + 1 + ... + n`.
pub fn s1(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// `s_2(n) = s_1(0) + ... + s_1(n)`.
pub fn s2(n: u64) -> u64 {
    n * (n + 1) * (n + 2) / 6
}

/// Position of `n` in the partition `ℕ = ⊔_i ⊔_{j<=i} N_{i,j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    /// `I_1(n)`.
    pub i: u64,
    /// `I_2(n)`.
    pub j: u64,
    /// `I(n) = i - j`, the learner index whose behavior labels the block.
    pub learner: u64,
    /// `m(n) = min N_{i,j}`.
    pub start: u64,
}

impl BlockPartition {
    pub fn of(n: u64) -> Self {
        let mut i = 0;
        while s2(i + 1) <= n {
            i += 1;
        }
        let mut j = 0;
        while s2(i) + s1(j + 1) <= n {
            j += 1;
        }
        BlockPartition {
            i,
            j,
            learner: i - j,
            start: s2(i) + s1(j),
        }
    }

    /// `N_{i,j}` as a range.
    pub fn block(i: u64, j: u64) -> std::ops::Range<u64> {
        assert!(j <= i, "N_{{i,j}} needs j <= i");
        s2(i) + s1(j)..s2(i) + s1(j + 1)
    }
}

pub fn block_of(n: u64) -> BlockPartition {
    BlockPartition::of(n)
}

/// `L(n)` for every `n` of one block `N_{i,j}`, in order, plus whether each
/// call ran out of steps.
pub fn block_labels(i: u64, j: u64, step_budget: u64) -> Vec<(u64, Label, bool)> {
    let learner = ToyProgram::from_index_u64(i - j);
    let mut history = Sample::empty();
    let mut out = Vec::new();
    for n in BlockPartition::block(i, j) {
        let outcome = run_two_place(&learner, &history.encode(), &BigUint::from(n), step_budget);
        let exhausted = matches!(outcome, RunOutcome::Running);
        let label = outcome.output().is_some_and(|v| v.is_zero());
        history.push(LabeledInstance::new(n, label));
        out.push((n, label, exhausted));
    }
    out
}

/// `L(n) = 1` iff learner `A_{I(n)}` outputs 0 on `(⟨S^n⟩, n)` within the
/// step budget.
pub fn diagonal_label(n: u64, step_budget: u64) -> Label {
    let b = BlockPartition::of(n);
    block_labels(b.i, b.j, step_budget)
        .into_iter()
        .find(|&(m, _, _)| m == n)
        .map(|(_, y, _)| y)
        .expect("n lies in its own block")
}

/// The block `N_{M+e, M}` labeled by `h_{M+e}`: `M + 1` instances on which
/// learner `e` is wrong every time it answers within budget.
pub fn forcing_sample(e: u64, big_m: u64, step_budget: u64) -> Sample {
    block_labels(big_m + e, big_m, step_budget)
        .into_iter()
        .map(|(n, y, _)| LabeledInstance::new(n, y))
        .collect()
}

/// `H_split` restricted to `h_0..h_{i_max}` over `N_0 ∪ ... ∪ N_{i_max}`.
#[derive(Clone, Debug)]
pub struct HSplit {
    pub i_max: u64,
    pub step_budget: u64,
    labels: Arc<Vec<Label>>,
    /// Instances whose learner call ran out of steps (labelled 0).
    pub exhausted: Vec<u64>,
}

impl HSplit {
    pub fn domain_size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, n: u64) -> Option<Label> {
        self.labels.get(n as usize).copied()
    }

    /// `h_i`'s support.
    pub fn support(&self, i: u64) -> BTreeSet<u64> {
        (s2(i)..s2(i + 1)).filter(|&n| self.labels[n as usize]).collect()
    }

    /// The class as an enumeration `i ↦ h_i`; slots past `i_max` are absent.
    pub fn enumerable(&self) -> EnumerableClass {
        let labels = Arc::clone(&self.labels);
        let i_max = self.i_max;
        let domain = self.domain_size();
        EnumerableClass::new(
            move |i| {
                let i = i as u64;
                if i > i_max {
                    return Slot::Absent;
                }
                let support = (s2(i)..s2(i + 1)).filter(|&n| labels[n as usize]);
                Slot::Present(Hypothesis::from_support(support).with_tag(format!("h_{i}")))
            },
            i_max as usize + 1,
            domain,
        )
    }

    pub fn truncation(&self) -> Result<FiniteClass, PaperError> {
        let supports = (0..=self.i_max).map(|i| self.support(i));
        Ok(FiniteClass::from_supports(self.domain_size(), supports)?)
    }
}

pub fn build_h_split(step_budget: u64, i_max: u64) -> Result<HSplit, PaperError> {
    let domain = s2(i_max + 1);
    if domain > crate::classes::MAX_DOMAIN as u64 {
        return Err(ClassError::DomainTooLarge(domain as usize).into());
    }
    let mut labels = Vec::with_capacity(domain as usize);
    let mut exhausted = Vec::new();
    for i in 0..=i_max {
        for j in 0..=i {
            for (n, y, out) in block_labels(i, j, step_budget) {
                debug_assert_eq!(n as usize, labels.len());
                labels.push(y);
                if out {
                    exhausted.push(n);
                }
            }
        }
    }
    Ok(HSplit {
        i_max,
        step_budget,
        labels: Arc::new(labels),
        exhausted,
    })
}

/// `H_init` truncated to `s <= s_max` and instances `x <= x_max`:
/// `h_s(x) = 1` iff program `x` halts on input `x` within `s` steps.
#[derive(Clone, Debug)]
pub struct HInit {
    pub class: FiniteClass,
    /// Self-halting time of each instance, if within `s_max`.
    pub times: Vec<Option<u64>>,
    pub s_max: u64,
}

impl HInit {
    /// Row of `h_s`.
    pub fn row(&self, s: u64) -> Row {
        self.times
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_some_and(|t| t <= s))
            .fold(0, |r, (x, _)| r | (1 << x))
    }
}

pub fn build_h_init(s_max: u64, x_max: u64) -> Result<HInit, PaperError> {
    let domain = x_max as usize + 1;
    if domain > crate::classes::MAX_DOMAIN {
        return Err(ClassError::DomainTooLarge(domain).into());
    }
    let times: Vec<Option<u64>> = (0..=x_max).map(|x| halting_time(x, x, s_max)).collect();
    let mut init = HInit {
        class: FiniteClass::empty(domain),
        times,
        s_max,
    };
    // h_s only changes at halting times, so those s (and 0) cover every row
    let mut steps: BTreeSet<u64> = init.times.iter().flatten().copied().collect();
    steps.insert(0);
    init.class = FiniteClass::new(domain, steps.into_iter().map(|s| init.row(s)))?;
    Ok(init)
}

/// `k` instances and rows with `h_i(x_j) = 1` iff `i >= j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    pub instances: Vec<Instance>,
    pub rows: Vec<Row>,
}

impl Thresholds {
    pub fn holds(&self) -> bool {
        let k = self.instances.len();
        self.rows.len() == k
            && (0..k).all(|i| (0..k).all(|j| crate::classes::row_value(self.rows[i], self.instances[j]) == (i >= j)))
    }

    /// A shattered tree of depth `floor(log2 k)` built by bisection: the
    /// node for thresholds `lo..hi` queries the middle instance.
    pub fn shattered_tree(&self) -> ShatteredTree {
        let k = self.instances.len();
        let depth = if k == 0 { 0 } else { k.ilog2() };
        let mut nodes = vec![0; (1usize << depth) - 1];
        fn fill(nodes: &mut [Instance], xs: &[Instance], node: usize, lo: usize, hi: usize, level: u32, depth: u32) {
            if level == depth {
                return;
            }
            let mid = (lo + hi).div_ceil(2);
            nodes[node - 1] = xs[mid];
            // label 0 keeps thresholds below mid, label 1 those from mid on
            fill(nodes, xs, 2 * node, lo, mid - 1, level + 1, depth);
            fill(nodes, xs, 2 * node + 1, mid, hi, level + 1, depth);
        }
        if depth > 0 {
            fill(&mut nodes, &self.instances, 1, 0, k - 1, 0, depth);
        }
        ShatteredTree { depth, nodes }
    }

    pub fn subclass(&self, domain_size: usize) -> Result<FiniteClass, ClassError> {
        FiniteClass::new(domain_size, self.rows.iter().copied())
    }

    pub fn verify(&self, domain_size: usize) -> Result<bool, PaperError> {
        let tree = self.shattered_tree();
        let sub = self.subclass(domain_size)?;
        Ok(self.holds() && verify_shattered_tree(&sub, &tree, tree.depth).unwrap_or(false))
    }
}

/// Depth-first search for `k` thresholds among instances `<= x_max`.
pub fn find_thresholds(h: &FiniteClass, k: usize, x_max: u64) -> Option<Thresholds> {
    let xs: Vec<Instance> = h.domain().filter(|&x| x <= x_max).collect();
    let mut found = Thresholds {
        instances: Vec::new(),
        rows: Vec::new(),
    };
    fn extend(h: &FiniteClass, xs: &[Instance], k: usize, acc: &mut Thresholds) -> bool {
        if acc.instances.len() == k {
            return true;
        }
        for &x in xs {
            if acc.instances.contains(&x) || acc.rows.iter().any(|&r| crate::classes::row_value(r, x)) {
                continue;
            }
            for &r in h.rows() {
                let covers = crate::classes::row_value(r, x)
                    && acc.instances.iter().all(|&p| crate::classes::row_value(r, p));
                if covers && !acc.rows.contains(&r) {
                    acc.instances.push(x);
                    acc.rows.push(r);
                    if extend(h, xs, k, acc) {
                        return true;
                    }
                    acc.instances.pop();
                    acc.rows.pop();
                }
            }
        }
        false
    }
    extend(h, &xs, k, &mut found).then_some(found)
}
