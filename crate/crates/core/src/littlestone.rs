//! Littlestone dimension: a memoized game recursion, an independent
//! shattered-tree search, and a fuel-driven enumerator of shattered trees
//! for enumerable classes.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::classes::{row_value, EnumerableClass, FiniteClass, Row, Slot};
use crate::sample::{Instance, Sample};

/// Memo table for [`ldim`] keyed on the sorted row set.
///
/// Row sets from one domain only; a memo must not be shared between classes
/// of different domain sizes.
#[derive(Debug, Default)]
pub struct LdimMemo {
    table: HashMap<Vec<Row>, i32>,
}

impl LdimMemo {
    pub fn new() -> Self {
        LdimMemo::default()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn ldim(&mut self, h: &FiniteClass) -> i32 {
        self.rows(h.domain_size(), h.rows())
    }

    /// `Ldim` of the class with these (sorted, distinct) rows.
    pub fn rows(&mut self, domain_size: usize, rows: &[Row]) -> i32 {
        match rows.len() {
            0 => return -1,
            1 => return 0,
            _ => {}
        }
        if let Some(&v) = self.table.get(rows) {
            return v;
        }
        // a depth-d shattered tree needs 2^d distinct behaviors
        let cap = (usize::BITS - 1 - rows.len().leading_zeros()) as i32;
        let split = splitting_mask(domain_size, rows);
        let mut best = 0;
        for x in (0..domain_size as Instance).filter(|&x| (split >> x) & 1 == 1) {
            let (zero, one): (Vec<Row>, Vec<Row>) = rows.iter().partition(|&&r| !row_value(r, x));
            let small = if zero.len() <= one.len() { &zero } else { &one };
            let large = if zero.len() <= one.len() { &one } else { &zero };
            // 1 + min(a, b) cannot beat `best` unless both sides can
            let a = self.rows(domain_size, small);
            if a + 1 <= best {
                continue;
            }
            let b = self.rows(domain_size, large);
            best = best.max(1 + a.min(b));
            if best == cap {
                break;
            }
        }
        self.table.insert(rows.to_vec(), best);
        best
    }
}

fn splitting_mask(domain_size: usize, rows: &[Row]) -> Row {
    let any = rows.iter().fold(0, |a, &r| a | r);
    let all = rows.iter().fold(crate::classes::domain_mask(domain_size), |a, &r| a & r);
    any & !all
}

/// Exact Littlestone dimension; `-1` for the empty class.
pub fn ldim(h: &FiniteClass) -> i32 {
    LdimMemo::new().ldim(h)
}

/// A complete binary tree of instances in heap order: node `i` (1-based)
/// has children `2i` (label 0) and `2i + 1` (label 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShatteredTree {
    pub depth: u32,
    pub nodes: Vec<Instance>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("a depth-{depth} tree has {expected} nodes, got {got}")]
    LengthMismatch { depth: u32, expected: usize, got: usize },
}

impl ShatteredTree {
    /// Node index visited at level `j` (1-based) along the path `ys`:
    /// `i_j = 2^(j-1) + Σ_{k<j} y_k 2^(j-1-k)`.
    pub fn path_index(ys: &[bool], j: usize) -> usize {
        let mut i = 1usize << (j - 1);
        for (k, &y) in ys.iter().take(j - 1).enumerate() {
            if y {
                i += 1 << (j - 2 - k);
            }
        }
        i
    }

    /// The labeled path `((x_{i_1}, y_1), ..., (x_{i_d}, y_d))`.
    pub fn path_sample(&self, ys: &[bool]) -> Sample {
        (1..=ys.len())
            .map(|j| crate::sample::LabeledInstance::new(self.nodes[Self::path_index(ys, j) - 1], ys[j - 1]))
            .collect()
    }

    /// Renders the tree with one node per line, children indented under
    /// their parent and prefixed by the edge label.
    pub fn render(&self, name: &dyn Fn(Instance) -> String) -> String {
        let mut out = String::new();
        self.render_node(1, 0, None, name, &mut out);
        out
    }

    fn render_node(&self, i: usize, indent: usize, edge: Option<bool>, name: &dyn Fn(Instance) -> String, out: &mut String) {
        if i > self.nodes.len() {
            return;
        }
        let label = match edge {
            None => String::new(),
            Some(y) => format!("{}: ", y as u8),
        };
        out.push_str(&format!("{}{}x = {}\n", "  ".repeat(indent), label, name(self.nodes[i - 1])));
        self.render_node(2 * i, indent + 1, Some(false), name, out);
        self.render_node(2 * i + 1, indent + 1, Some(true), name, out);
    }
}

impl fmt::Display for ShatteredTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|x| x.to_string()))
    }
}

/// Checks all `2^d` root-to-leaf labelings for a consistent hypothesis.
pub fn verify_shattered_tree(h: &FiniteClass, tree: &ShatteredTree, d: u32) -> Result<bool, TreeError> {
    let expected = (1usize << d) - 1;
    if tree.nodes.len() != expected || tree.depth != d {
        return Err(TreeError::LengthMismatch {
            depth: d,
            expected,
            got: tree.nodes.len(),
        });
    }
    if d == 0 {
        return Ok(!h.is_empty());
    }
    for path in 0..(1u64 << d) {
        let ys: Vec<bool> = (0..d).map(|k| (path >> (d - 1 - k)) & 1 == 1).collect();
        if !h.is_realizable(&tree.path_sample(&ys)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches every instance labeling of the depth-`d` tree; `None`
/// certifies that no `H`-shattered tree of depth `d` exists.
pub fn find_shattered_tree(h: &FiniteClass, d: u32) -> Option<ShatteredTree> {
    let mut search = TreeSearch {
        domain_size: h.domain_size(),
        failed: HashSet::new(),
    };
    let sub = search.subtree(h.rows(), d)?;
    let mut nodes = vec![0; (1usize << d) - 1];
    sub.write(1, &mut nodes);
    Some(ShatteredTree { depth: d, nodes })
}

struct TreeSearch {
    domain_size: usize,
    /// Row sets known not to shatter any tree of the given depth.
    failed: HashSet<(Vec<Row>, u32)>,
}

enum Subtree {
    Leaf,
    Node(Instance, Box<Subtree>, Box<Subtree>),
}

impl Subtree {
    fn write(&self, i: usize, nodes: &mut [Instance]) {
        if let Subtree::Node(x, zero, one) = self {
            nodes[i - 1] = *x;
            zero.write(2 * i, nodes);
            one.write(2 * i + 1, nodes);
        }
    }
}

impl TreeSearch {
    fn subtree(&mut self, rows: &[Row], depth: u32) -> Option<Subtree> {
        if depth == 0 {
            return (!rows.is_empty()).then_some(Subtree::Leaf);
        }
        // every leaf needs its own hypothesis
        if (rows.len() as u128) < (1u128 << depth) {
            return None;
        }
        let key = (rows.to_vec(), depth);
        if self.failed.contains(&key) {
            return None;
        }
        for x in 0..self.domain_size as Instance {
            let (zero, one): (Vec<Row>, Vec<Row>) = rows.iter().partition(|&&r| !row_value(r, x));
            let Some(left) = self.subtree(&zero, depth - 1) else { continue };
            let Some(right) = self.subtree(&one, depth - 1) else { continue };
            return Some(Subtree::Node(x, Box::new(left), Box::new(right)));
        }
        self.failed.insert(key);
        None
    }
}

/// Largest `d` for which [`find_shattered_tree`] finds a witness (`-1` for
/// the empty class), with the witness.
pub fn deepest_shattered_tree(h: &FiniteClass) -> (i32, Option<ShatteredTree>) {
    if h.is_empty() {
        return (-1, None);
    }
    let mut best = (0, find_shattered_tree(h, 0));
    let mut d = 1;
    while let Some(t) = find_shattered_tree(h, d) {
        best = (d as i32, Some(t));
        d += 1;
    }
    best
}

/// Result of a fuel-limited enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnumerationOutcome {
    Found(ShatteredTree),
    /// The enumeration finished without a witness and the class is known to
    /// be complete, so none exists.
    Absent,
    FuelExhausted,
}

/// Enumerator of depth-`d` shattered trees of `H_{S'}` for an enumerable
/// `H`, advanced one unit of work per [`TreeEnumerator::step`].
///
/// Stage `k` looks at hypotheses with index `< k` and instances `< k`:
/// each unit is either one enumeration slot, one hypothesis evaluation, or
/// the tree search over the finite matrix gathered so far. Stages grow until
/// both the enumeration budget and the domain cap are reached.
pub struct TreeEnumerator<'a> {
    class: &'a EnumerableClass,
    filter: Sample,
    depth: u32,
    stage: usize,
    tasks: Vec<Task>,
    slots: HashMap<usize, Option<crate::classes::Hypothesis>>,
    values: HashMap<(usize, Instance), Option<bool>>,
    done: Option<EnumerationOutcome>,
}

#[derive(Clone, Copy, Debug)]
enum Task {
    Slot(usize),
    Eval(usize, Instance),
    Search,
}

impl<'a> TreeEnumerator<'a> {
    /// Enumerates trees of `H_filter`.
    pub fn new(class: &'a EnumerableClass, filter: Sample, depth: u32) -> Self {
        TreeEnumerator {
            class,
            filter,
            depth,
            stage: 0,
            tasks: Vec::new(),
            slots: HashMap::new(),
            values: HashMap::new(),
            done: None,
        }
    }

    fn last_stage(&self) -> usize {
        self.class
            .enumeration_budget()
            .max(self.class.domain_cap())
    }

    fn plan_stage(&mut self) {
        let k = self.stage;
        let hyps = k.min(self.class.enumeration_budget());
        let xs = k.min(self.class.domain_cap()) as Instance;
        let mut tasks = vec![Task::Search];
        for i in (0..hyps).rev() {
            let needed = self.filter.iter().map(|it| it.x).chain(0..xs);
            let evals: Vec<Task> = needed
                .filter(|&x| !self.values.contains_key(&(i, x)))
                .map(|x| Task::Eval(i, x))
                .collect();
            tasks.extend(evals.into_iter().rev());
            if !self.slots.contains_key(&i) {
                tasks.push(Task::Slot(i));
            }
        }
        // popped from the back: slots and evaluations in index order, search last
        self.tasks = tasks;
    }

    /// Performs one unit of work; returns the outcome once known.
    pub fn step(&mut self) -> Option<EnumerationOutcome> {
        if let Some(done) = &self.done {
            return Some(done.clone());
        }
        loop {
            let Some(task) = self.tasks.pop() else {
                if self.stage >= self.last_stage() {
                    let outcome = if self.class.is_complete() {
                        EnumerationOutcome::Absent
                    } else {
                        EnumerationOutcome::FuelExhausted
                    };
                    self.done = Some(outcome.clone());
                    return Some(outcome);
                }
                self.stage += 1;
                self.plan_stage();
                continue;
            };
            match task {
                Task::Slot(i) => {
                    let slot = match self.class.slot(i) {
                        Slot::Present(h) => Some(h),
                        Slot::Absent => None,
                    };
                    self.slots.insert(i, slot);
                    return None;
                }
                Task::Eval(i, x) => {
                    let Some(Some(h)) = self.slots.get(&i) else { continue };
                    if self.values.contains_key(&(i, x)) {
                        continue;
                    }
                    let v = h.eval(x);
                    self.values.insert((i, x), v);
                    return None;
                }
                Task::Search => {
                    if let Some(tree) = self.search() {
                        let outcome = EnumerationOutcome::Found(tree);
                        self.done = Some(outcome.clone());
                        return Some(outcome);
                    }
                    return None;
                }
            }
        }
    }

    /// Tree search over the hypotheses seen so far that are consistent with
    /// the filter and fully evaluated on the current instances.
    fn search(&self) -> Option<ShatteredTree> {
        let k = self.stage;
        let xs = k.min(self.class.domain_cap());
        let mut rows = Vec::new();
        'hyp: for i in 0..k.min(self.class.enumeration_budget()) {
            let Some(Some(_)) = self.slots.get(&i) else { continue };
            for it in &self.filter {
                if self.values.get(&(i, it.x)).copied().flatten() != Some(it.y) {
                    continue 'hyp;
                }
            }
            let mut row: Row = 0;
            for x in 0..xs as Instance {
                match self.values.get(&(i, x)).copied().flatten() {
                    Some(true) => row |= 1 << x,
                    Some(false) => {}
                    None => continue 'hyp,
                }
            }
            rows.push(row);
        }
        let matrix = FiniteClass::new(xs, rows).expect("rows are masked to the stage");
        find_shattered_tree(&matrix, self.depth)
    }

    /// Runs until an outcome or until `fuel` units are spent.
    pub fn run(&mut self, fuel: u64) -> EnumerationOutcome {
        for _ in 0..fuel {
            if let Some(outcome) = self.step() {
                return outcome;
            }
        }
        self.done.clone().unwrap_or(EnumerationOutcome::FuelExhausted)
    }
}

/// First depth-`d` shattered tree of an enumerable class found within
/// `fuel` units of work.
pub fn enumerate_shattered_trees(h: &EnumerableClass, d: u32, fuel: u64) -> EnumerationOutcome {
    TreeEnumerator::new(h, Sample::empty(), d).run(fuel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{hd_prime, random_class, singletons, thresholds};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Textbook recursion with no pruning, no memo and every instance
    /// considered.
    fn naive_ldim(n: usize, rows: &[Row]) -> i32 {
        if rows.is_empty() {
            return -1;
        }
        let mut best = 0;
        for x in 0..n as Instance {
            let zero: Vec<Row> = rows.iter().copied().filter(|&r| !row_value(r, x)).collect();
            let one: Vec<Row> = rows.iter().copied().filter(|&r| row_value(r, x)).collect();
            if !zero.is_empty() && !one.is_empty() {
                best = best.max(1 + naive_ldim(n, &zero).min(naive_ldim(n, &one)));
            }
        }
        best
    }

    #[test]
    fn ldim_examples() {
        assert_eq!(ldim(&FiniteClass::empty(3)), -1);
        assert_eq!(ldim(&FiniteClass::new(3, [5]).unwrap()), 0);
        assert_eq!(ldim(&thresholds(3).unwrap()), 3);
        assert_eq!(ldim(&hd_prime(3).unwrap()), 3);
        assert_eq!(ldim(&singletons(5)), 1);
        assert_eq!(ldim(&thresholds(5).unwrap()), 5);
    }

    #[test]
    fn tree_examples() {
        let s2 = singletons(2);
        let t = find_shattered_tree(&s2, 1).unwrap();
        assert!(t.nodes == vec![0] || t.nodes == vec![1]);
        assert!(find_shattered_tree(&s2, 2).is_none());
        let h = hd_prime(3).unwrap();
        let t = find_shattered_tree(&h, 3).unwrap();
        assert_eq!(verify_shattered_tree(&h, &t, 3), Ok(true));
        assert!(find_shattered_tree(&h, 4).is_none());
    }

    #[test]
    fn repeated_instance_tree_fails_on_constants() {
        let constants = FiniteClass::new(3, [0, 0b111]).unwrap();
        let t = ShatteredTree { depth: 2, nodes: vec![1, 1, 1] };
        assert_eq!(verify_shattered_tree(&constants, &t, 2), Ok(false));
        let bad = ShatteredTree { depth: 2, nodes: vec![1] };
        assert!(verify_shattered_tree(&constants, &bad, 2).is_err());
    }

    #[test]
    fn path_index_formula() {
        // i_3 for y = (1, 0) is 4 + 2 = 6
        assert_eq!(ShatteredTree::path_index(&[true, false], 3), 6);
        assert_eq!(ShatteredTree::path_index(&[], 1), 1);
        assert_eq!(ShatteredTree::path_index(&[false], 2), 2);
        assert_eq!(ShatteredTree::path_index(&[true, true, true], 4), 15);
    }

    #[test]
    fn memoized_recursion_matches_naive_on_random_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let h = random_class(&mut rng, 6, 20);
            assert_eq!(ldim(&h), naive_ldim(h.domain_size(), h.rows()), "{h}");
        }
    }

    #[test]
    fn enumerator_examples() {
        let h = hd_prime(2).unwrap();
        let e = EnumerableClass::from_finite(&h);
        assert_eq!(enumerate_shattered_trees(&e, 1, 0), EnumerationOutcome::FuelExhausted);
        match enumerate_shattered_trees(&e, 2, 100_000) {
            EnumerationOutcome::Found(t) => assert_eq!(verify_shattered_tree(&h, &t, 2), Ok(true)),
            other => panic!("expected a witness, got {other:?}"),
        }
        assert_eq!(enumerate_shattered_trees(&e, 3, 100_000), EnumerationOutcome::Absent);
    }

    #[test]
    fn incomplete_enumeration_cannot_certify_absence() {
        let e = EnumerableClass::new(|i| Slot::Present(crate::classes::Hypothesis::from_support([i as u64])), 5, 5);
        assert_eq!(enumerate_shattered_trees(&e, 2, 1_000_000), EnumerationOutcome::FuelExhausted);
        assert!(matches!(enumerate_shattered_trees(&e, 1, 1_000_000), EnumerationOutcome::Found(_)));
    }

    fn arb_class() -> impl Strategy<Value = FiniteClass> {
        (1usize..=5).prop_flat_map(|n| {
            proptest::collection::vec(0u128..(1u128 << n), 0..=12).prop_map(move |rows| FiniteClass::new(n, rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn engines_agree(h in arb_class()) {
            let (depth, witness) = deepest_shattered_tree(&h);
            prop_assert_eq!(ldim(&h), depth);
            if let Some(t) = witness {
                prop_assert_eq!(verify_shattered_tree(&h, &t, t.depth), Ok(true));
            }
        }

        #[test]
        fn monotone_under_subsets(h in arb_class(), keep in proptest::collection::vec(any::<bool>(), 12)) {
            let sub = FiniteClass::new(
                h.domain_size(),
                h.rows().iter().zip(keep.iter().cycle()).filter(|(_, &k)| k).map(|(&r, _)| r),
            ).unwrap();
            prop_assert!(ldim(&sub) <= ldim(&h));
        }

        #[test]
        fn splitting_and_remark_laws(h in arb_class()) {
            let d = ldim(&h);
            let mut attained = false;
            for x in h.domain() {
                let (z, o) = (h.constrain(x, false), h.constrain(x, true));
                let (a, b) = (ldim(&z), ldim(&o));
                if !z.is_empty() && !o.is_empty() {
                    prop_assert!(d >= 1 + a.min(b));
                    attained |= d == 1 + a.min(b);
                }
                if a == d { prop_assert!(b < d || h.is_empty()); }
                if b == d { prop_assert!(a < d || h.is_empty()); }
            }
            if d >= 1 { prop_assert!(attained); }
        }

        #[test]
        fn embedded_enumerator_finds_verified_witness(h in arb_class()) {
            let d = ldim(&h);
            prop_assume!(d >= 0);
            let e = EnumerableClass::from_finite(&h);
            match enumerate_shattered_trees(&e, d as u32, 1_000_000) {
                EnumerationOutcome::Found(t) => prop_assert_eq!(verify_shattered_tree(&h, &t, d as u32), Ok(true)),
                other => prop_assert!(false, "no witness: {:?}", other),
            }
            prop_assert_eq!(enumerate_shattered_trees(&e, d as u32 + 1, 1_000_000), EnumerationOutcome::Absent);
        }
    }
}
