//! Significant inputs: closed-form classification for optimal and
//! anytime-optimal learning, and an exhaustive oracle over all learners.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::classes::{EnumerableClass, FiniteClass, Row};
use crate::game::{mistakes_on_sample, realizable_samples, Minimax};
use crate::learners::sol;
use crate::littlestone::{ldim, LdimMemo};
use crate::sample::{Instance, Label, Sample};

/// Largest instance the exhaustive oracle accepts.
pub const ORACLE_MAX_DOMAIN: usize = 5;
pub const ORACLE_MAX_ROWS: usize = 8;
pub const ORACLE_MAX_HORIZON: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("sample {0} is not realizable by the class")]
    Unrealizable(Sample),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance too large for the exhaustive oracle: {0}")]
    TooLarge(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    AOptimal,
    Optimal,
}

/// Per-step Ldim checks for one round `t` of `S ⌢ (x, ·)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepCheck {
    pub t: usize,
    pub before: i32,
    /// `max_r Ldim(H_{S_{t-1}}^{(x_t, r)})`.
    pub best_branch: i32,
    /// `Ldim(H_{S_t})`, absent for the query step.
    pub after: Option<i32>,
}

impl StepCheck {
    pub fn keeps_dimension(&self) -> bool {
        self.before == self.best_branch
    }

    pub fn drops_at_most_one(&self) -> bool {
        self.after.map_or(true, |a| a >= self.before - 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Evidence {
    /// `(Ldim(H_S^{(x,0)}), Ldim(H_S^{(x,1)}))`.
    pub branches: (i32, i32),
    pub steps: Vec<StepCheck>,
    /// Predictions some qualifying learner makes (oracle verdicts only).
    pub allowed: Option<Vec<Label>>,
    pub violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignificanceVerdict {
    pub kind: Kind,
    pub significant: bool,
    pub forced_prediction: Option<Label>,
    pub evidence: Evidence,
}

fn branches(memo: &mut LdimMemo, vs: &FiniteClass, x: Instance) -> (i32, i32) {
    (memo.ldim(&vs.constrain(x, false)), memo.ldim(&vs.constrain(x, true)))
}

fn realizable(h: &FiniteClass, s: &Sample) -> Result<FiniteClass, SigError> {
    let vs = h.restrict(s);
    if vs.is_empty() {
        return Err(SigError::Unrealizable(s.clone()));
    }
    Ok(vs)
}

/// Anytime-optimal significance: the branch dimensions differ and the
/// larger one is the dimension of the version space. When both branches
/// lose dimension, a wrong prediction costs at most `Ldim(H_S)` in total
/// and either prediction is anytime optimal.
pub fn is_aopt_significant(h: &FiniteClass, s: &Sample, x: Instance) -> Result<SignificanceVerdict, SigError> {
    let vs = realizable(h, s)?;
    let mut memo = LdimMemo::new();
    let (zero, one) = branches(&mut memo, &vs, x);
    let check = StepCheck {
        t: s.len() + 1,
        before: memo.ldim(&vs),
        best_branch: zero.max(one),
        after: None,
    };
    let violation = if zero == one {
        Some(format!("both branches have Ldim {zero}"))
    } else if !check.keeps_dimension() {
        Some(format!("best branch has Ldim {} < {}", check.best_branch, check.before))
    } else {
        None
    };
    let significant = violation.is_none();
    Ok(SignificanceVerdict {
        kind: Kind::AOptimal,
        significant,
        forced_prediction: significant.then_some(one > zero),
        evidence: Evidence {
            branches: (zero, one),
            steps: vec![check],
            allowed: None,
            violation,
        },
    })
}

fn step_checks(memo: &mut LdimMemo, h: &FiniteClass, s: &Sample, x: Option<Instance>) -> Vec<StepCheck> {
    let mut vs = h.clone();
    let mut steps = Vec::new();
    for (t, it) in s.iter().enumerate() {
        let (zero, one) = branches(memo, &vs, it.x);
        let before = memo.ldim(&vs);
        vs = vs.constrain(it.x, it.y);
        steps.push(StepCheck {
            t: t + 1,
            before,
            best_branch: zero.max(one),
            after: Some(memo.ldim(&vs)),
        });
    }
    if let Some(x) = x {
        let (zero, one) = branches(memo, &vs, x);
        steps.push(StepCheck {
            t: s.len() + 1,
            before: memo.ldim(&vs),
            best_branch: zero.max(one),
            after: None,
        });
    }
    steps
}

/// Optimal significance by the two per-step conditions.
pub fn is_opt_significant(h: &FiniteClass, s: &Sample, x: Instance) -> Result<SignificanceVerdict, SigError> {
    let vs = realizable(h, s)?;
    let mut memo = LdimMemo::new();
    let steps = step_checks(&mut memo, h, s, Some(x));
    let violation = steps.iter().find_map(|c| {
        if !c.keeps_dimension() {
            Some(format!("step {}: best branch has Ldim {} < {}", c.t, c.best_branch, c.before))
        } else if !c.drops_at_most_one() {
            Some(format!("step {}: Ldim drops from {} to {}", c.t, c.before, c.after.unwrap_or(-1)))
        } else {
            None
        }
    });
    let (zero, one) = branches(&mut memo, &vs, x);
    let significant = violation.is_none();
    Ok(SignificanceVerdict {
        kind: Kind::Optimal,
        significant,
        forced_prediction: significant.then_some(one >= zero),
        evidence: Evidence {
            branches: (zero, one),
            steps,
            allowed: None,
            violation,
        },
    })
}

/// Existence of a learner meeting a mistake budget, with some predictions
/// pinned along one history.
///
/// A learner is a table over realizable histories of fresh instances, and
/// the entries at different histories are independent, so existence is
/// decided by backward induction: at every history the adversary picks an
/// instance, the learner a prediction and the adversary a label.
struct Solver<'a> {
    h: &'a FiniteClass,
    kind: Kind,
    horizon: usize,
    path: &'a Sample,
    query: Instance,
    /// Prediction required at `(path_t, x_{t+1})`; the last entry is for
    /// the query.
    pins: Vec<Option<Label>>,
    minimax: Minimax,
    root_budget: usize,
    memo: HashMap<(Vec<Row>, u128, usize, usize), bool>,
}

impl<'a> Solver<'a> {
    fn new(h: &'a FiniteClass, kind: Kind, horizon: usize, path: &'a Sample, query: Instance) -> Self {
        let mut minimax = Minimax::new();
        let root_budget = minimax.value(h, Some(horizon));
        Solver {
            h,
            kind,
            horizon,
            path,
            query,
            pins: vec![None; path.len() + 1],
            minimax,
            root_budget,
            memo: HashMap::new(),
        }
    }

    fn exists(&mut self, pins: Vec<Option<Label>>) -> bool {
        self.pins = pins;
        self.feasible(self.h.clone(), 0, self.horizon, usize::MAX, Some(0))
    }

    /// Whether the learner can play from a history with version space `vs`
    /// (seen instances `seen`, `rounds` left) making at most `allowance`
    /// further mistakes while meeting every budget below.
    fn feasible(&mut self, vs: FiniteClass, seen: u128, rounds: usize, allowance: usize, depth: Option<usize>) -> bool {
        let budget = match (self.kind, depth) {
            (Kind::Optimal, Some(0)) => self.root_budget,
            (Kind::Optimal, _) => usize::MAX,
            (Kind::AOptimal, _) => self.minimax.value(&vs, Some(rounds)),
        };
        let allowance = allowance.min(budget).min(rounds);
        if rounds == 0 {
            return true;
        }
        let key = (vs.rows().to_vec(), seen, rounds, allowance);
        if depth.is_none() {
            if let Some(&v) = self.memo.get(&key) {
                return v;
            }
        }
        let mut ok = true;
        for x in vs.domain().filter(|&x| seen >> x & 1 == 0) {
            let on_path = depth.filter(|&k| {
                if k < self.path.len() {
                    self.path.items()[k].x == x
                } else {
                    x == self.query
                }
            });
            let pin = on_path.and_then(|k| self.pins[k]);
            let labels: Vec<(Label, FiniteClass)> = [false, true]
                .into_iter()
                .map(|y| (y, vs.constrain(x, y)))
                .filter(|(_, sub)| !sub.is_empty())
                .collect();
            let predictions = match pin {
                Some(p) => vec![p],
                None => vec![false, true],
            };
            let answered = predictions.into_iter().any(|p| {
                labels.iter().all(|(y, sub)| {
                    let cost = (p != *y) as usize;
                    if cost > allowance {
                        return false;
                    }
                    let next = on_path.filter(|&k| k < self.path.len() && self.path.items()[k].y == *y).map(|k| k + 1);
                    self.feasible(sub.clone(), seen | 1 << x, rounds - 1, allowance - cost, next)
                })
            });
            if !answered {
                ok = false;
                break;
            }
        }
        if depth.is_none() {
            self.memo.insert(key, ok);
        }
        ok
    }
}

fn check_caps(h: &FiniteClass, horizon: usize) -> Result<(), SigError> {
    if h.domain_size() > ORACLE_MAX_DOMAIN || h.len() > ORACLE_MAX_ROWS || horizon > ORACLE_MAX_HORIZON {
        return Err(SigError::TooLarge(format!(
            "domain {} (max {ORACLE_MAX_DOMAIN}), rows {} (max {ORACLE_MAX_ROWS}), horizon {horizon} (max {ORACLE_MAX_HORIZON})",
            h.domain_size(),
            h.len()
        )));
    }
    Ok(())
}

fn check_query(h: &FiniteClass, s: &Sample, x: Instance, horizon: usize) -> Result<(), SigError> {
    check_caps(h, horizon)?;
    realizable(h, s)?;
    if s.contains_instance(x) || s.len() >= horizon || x as usize >= h.domain_size() {
        return Err(SigError::Precondition(format!(
            "query ({s}, {x}) needs a fresh instance inside the domain and |S| < horizon"
        )));
    }
    Ok(())
}

/// Predictions at `(S, x)` made by some learner of the given kind, over
/// all learners whose bounds are taken within `horizon` rounds.
pub fn oracle_predictions(h: &FiniteClass, s: &Sample, x: Instance, horizon: usize, kind: Kind) -> Result<Vec<Label>, SigError> {
    check_query(h, s, x, horizon)?;
    let mut solver = Solver::new(h, kind, horizon, s, x);
    let mut allowed = Vec::new();
    for r in [false, true] {
        let mut pins = vec![None; s.len() + 1];
        pins[s.len()] = Some(r);
        if solver.exists(pins) {
            allowed.push(r);
        }
    }
    Ok(allowed)
}

fn oracle_verdict(h: &FiniteClass, s: &Sample, x: Instance, horizon: usize, kind: Kind) -> Result<SignificanceVerdict, SigError> {
    let allowed = oracle_predictions(h, s, x, horizon, kind)?;
    let vs = h.restrict(s);
    let significant = allowed.len() == 1;
    Ok(SignificanceVerdict {
        kind,
        significant,
        forced_prediction: significant.then(|| allowed[0]),
        evidence: Evidence {
            branches: branches(&mut LdimMemo::new(), &vs, x),
            allowed: Some(allowed),
            ..Evidence::default()
        },
    })
}

/// Optimal significance straight from the definition: whether every
/// learner with the optimal horizon-capped bound predicts the same at
/// `(S, x)`. Exact once `horizon` reaches the domain size.
pub fn brute_force_opt_significant(h: &FiniteClass, s: &Sample, x: Instance, horizon: usize) -> Result<SignificanceVerdict, SigError> {
    oracle_verdict(h, s, x, horizon, Kind::Optimal)
}

/// The anytime-optimal counterpart of [`brute_force_opt_significant`].
pub fn brute_force_aopt_significant(h: &FiniteClass, s: &Sample, x: Instance, horizon: usize) -> Result<SignificanceVerdict, SigError> {
    oracle_verdict(h, s, x, horizon, Kind::AOptimal)
}

/// `{M_A(S)}` over all learners optimal within `horizon`.
pub fn optimal_mistake_counts(h: &FiniteClass, s: &Sample, horizon: usize) -> Result<BTreeSet<usize>, SigError> {
    check_caps(h, horizon)?;
    realizable(h, s)?;
    if s.len() > horizon {
        return Err(SigError::Precondition("sample longer than the horizon".into()));
    }
    let fresh = s.iter().enumerate().all(|(t, it)| !s.prefix(t).contains_instance(it.x));
    if !fresh {
        return Err(SigError::Precondition(format!("sample {s} repeats an instance")));
    }
    // the query slot is left free, so any instance will do
    let mut solver = Solver::new(h, Kind::Optimal, horizon, s, Instance::MAX);
    let mut counts = BTreeSet::new();
    for bits in 0u32..1 << s.len() {
        let predictions: Vec<Label> = (0..s.len()).map(|t| bits >> t & 1 == 1).collect();
        let mut pins: Vec<Option<Label>> = predictions.iter().map(|&p| Some(p)).collect();
        pins.push(None);
        if solver.exists(pins) {
            counts.insert(s.iter().zip(&predictions).filter(|(it, &p)| it.y != p).count());
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MistakeCount {
    /// Mistakes of SOL along `S`.
    pub m: usize,
    pub ldim: i32,
    pub ldim_after: i32,
    /// `Ldim(H_S) = Ldim(H) - m`.
    pub holds: bool,
    /// `M_A(S)` over every optimal learner, when the oracle was run.
    pub oracle_counts: Option<BTreeSet<usize>>,
}

/// At an optimally significant input every optimal learner has made the
/// same number `m` of mistakes on `S`, and `Ldim(H_S) = Ldim(H) - m`.
pub fn check_corollary_5_2(h: &FiniteClass, s: &Sample, x: Instance, oracle_horizon: Option<usize>) -> Result<MistakeCount, SigError> {
    let verdict = is_opt_significant(h, s, x)?;
    if !verdict.significant {
        return Err(SigError::Precondition(format!(
            "({s}, {x}) is not optimally significant: {}",
            verdict.evidence.violation.unwrap_or_default()
        )));
    }
    let m = mistakes_on_sample(&sol(h.clone()), s).expect("sol is total");
    let d = ldim(h);
    let after = ldim(&h.restrict(s));
    let oracle_counts = oracle_horizon.map(|t| optimal_mistake_counts(h, s, t)).transpose()?;
    Ok(MistakeCount {
        m,
        ldim: d,
        ldim_after: after,
        holds: after == d - m as i32,
        oracle_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionsAgreement {
    /// Every step keeps the dimension at its best branch and loses at most
    /// one.
    pub condition_a: bool,
    /// Every optimal learner errs exactly `Ldim(H) - Ldim(H_S)` times on `S`.
    pub condition_b: bool,
    pub optimal_counts: BTreeSet<usize>,
    pub agree: bool,
}

/// Compares the per-step Ldim conditions on `S` with the mistake counts of
/// all optimal learners on `S`.
pub fn lemma_a1_check(h: &FiniteClass, s: &Sample, horizon: usize) -> Result<ConditionsAgreement, SigError> {
    let optimal_counts = optimal_mistake_counts(h, s, horizon)?;
    let steps = step_checks(&mut LdimMemo::new(), h, s, None);
    let condition_a = steps.iter().all(|c| c.keeps_dimension() && c.drops_at_most_one());
    let target = (ldim(h) - ldim(&h.restrict(s))) as usize;
    let condition_b = optimal_counts.iter().all(|&m| m == target);
    Ok(ConditionsAgreement {
        condition_a,
        condition_b,
        optimal_counts,
        agree: condition_a == condition_b,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ldim1Report {
    pub ldim: i32,
    pub truncation_rows: usize,
    pub enumerated_rows: usize,
    /// Stand-in for an infinite class: the enumeration is not known to be
    /// complete and keeps producing rows past the truncation.
    pub infinite_proxy: bool,
    pub precondition: Option<String>,
    pub inputs_checked: usize,
    pub non_significant: Vec<(Sample, Instance)>,
}

impl Ldim1Report {
    pub fn all_significant(&self) -> bool {
        self.precondition.is_none() && self.non_significant.is_empty()
    }
}

/// Sweeps inputs over the first `truncation` instances, with samples of at
/// most `max_prefix` items, against the whole enumerated class, checking
/// every one is optimally significant.
pub fn verify_ldim1_all_significant(h: &EnumerableClass, truncation: usize, max_prefix: usize) -> Result<Ldim1Report, SigError> {
    let materialize = |c: &EnumerableClass| c.materialize().map_err(|e| SigError::Precondition(e.to_string()));
    let full = materialize(h)?;
    let truncated = materialize(&h.with_budget(truncation.min(h.enumeration_budget())))?;
    let d = ldim(&full);
    let infinite_proxy = !h.is_complete() && truncated.len() < full.len();
    let precondition = if d != 1 {
        Some(format!("Ldim of the enumerated class is {d}, not 1"))
    } else if !infinite_proxy {
        Some(format!(
            "class does not look infinite: {} rows at the truncation, {} enumerated{}",
            truncated.len(),
            full.len(),
            if h.is_complete() { ", enumeration complete" } else { "" }
        ))
    } else {
        None
    };
    let cap = truncation.min(full.domain_size());
    let mut non_significant = Vec::new();
    let mut inputs_checked = 0;
    for s in realizable_samples(&full, max_prefix, cap) {
        for x in 0..cap as Instance {
            if s.contains_instance(x) {
                continue;
            }
            inputs_checked += 1;
            if !is_opt_significant(&full, &s, x)?.significant {
                non_significant.push((s.clone(), x));
            }
        }
    }
    Ok(Ldim1Report {
        ldim: d,
        truncation_rows: truncated.len(),
        enumerated_rows: full.len(),
        infinite_proxy,
        precondition,
        inputs_checked,
        non_significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{hd_prime, random_class, singletons, Hypothesis, Slot};
    use crate::learners::Learner;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Every input a learner can be asked within `horizon` rounds.
    fn inputs(h: &FiniteClass, horizon: usize) -> Vec<(Sample, Instance)> {
        realizable_samples(h, horizon - 1, h.domain_size())
            .into_iter()
            .flat_map(|s| {
                let xs: Vec<Instance> = h.domain().filter(|&x| !s.contains_instance(x)).collect();
                xs.into_iter().map(move |x| (s.clone(), x))
            })
            .collect()
    }

    fn table_mistakes(h: &FiniteClass, table: &HashMap<(Sample, Instance), Label>, s: &Sample, left: usize) -> usize {
        if left == 0 {
            return 0;
        }
        let mut best = 0;
        for x in h.domain().filter(|&x| !s.contains_instance(x)) {
            for y in [false, true] {
                let next = s.extended(x, y);
                if h.is_realizable(&next) {
                    let hit = (table[&(s.clone(), x)] != y) as usize;
                    best = best.max(hit + table_mistakes(h, table, &next, left - 1));
                }
            }
        }
        best
    }

    /// Predictions at each input over every learner table that qualifies.
    fn literal_allowed(h: &FiniteClass, horizon: usize, kind: Kind) -> HashMap<(Sample, Instance), BTreeSet<Label>> {
        let keys = inputs(h, horizon);
        assert!(keys.len() <= 16);
        let mut minimax = Minimax::new();
        let histories = realizable_samples(h, horizon - 1, h.domain_size());
        let mut allowed: HashMap<_, BTreeSet<Label>> = HashMap::new();
        for bits in 0u32..1 << keys.len() {
            let table: HashMap<_, _> = keys.iter().enumerate().map(|(i, k)| (k.clone(), bits >> i & 1 == 1)).collect();
            let qualifies = match kind {
                Kind::Optimal => table_mistakes(h, &table, &Sample::empty(), horizon) == minimax.value(h, Some(horizon)),
                Kind::AOptimal => histories.iter().all(|s| {
                    let left = horizon - s.len();
                    table_mistakes(h, &table, s, left) == minimax.value(&h.restrict(s), Some(left))
                }),
            };
            if qualifies {
                for (k, p) in table {
                    allowed.entry(k).or_default().insert(p);
                }
            }
        }
        allowed
    }

    #[test]
    fn closed_form_examples() {
        let h = FiniteClass::from_supports(2, [vec![0], vec![0, 1]]).unwrap();
        let v = is_aopt_significant(&h, &Sample::from_pairs(&[(0, 1)]), 1).unwrap();
        assert!(!v.significant);
        assert_eq!(v.forced_prediction, None);

        let hd = hd_prime(3).unwrap();
        let v = is_opt_significant(&hd, &Sample::empty(), 8).unwrap();
        assert!(v.significant);
        assert_eq!(v.forced_prediction, Some(false));
        assert_eq!(v.evidence.branches, (3, 0));
        // a chain of four thresholds: both branches at 0 lose dimension
        let chain = FiniteClass::from_supports(4, [vec![], vec![1], vec![1, 2], vec![0, 1, 2]]).unwrap();
        let v = is_aopt_significant(&chain, &Sample::empty(), 0).unwrap();
        assert_eq!(v.evidence.branches, (1, 0));
        assert!(!v.significant);
        assert_eq!(brute_force_aopt_significant(&chain, &Sample::empty(), 0, 4).unwrap().evidence.allowed, Some(vec![false, true]));
        assert!(matches!(
            is_aopt_significant(&singletons(3), &Sample::from_pairs(&[(0, 1), (1, 1)]), 2),
            Err(SigError::Unrealizable(_))
        ));
    }

    #[test]
    fn forced_mistake_count_examples() {
        let hd = hd_prime(3).unwrap();
        let c = check_corollary_5_2(&hd, &Sample::empty(), 8, None).unwrap();
        assert_eq!((c.m, c.ldim, c.ldim_after, c.holds), (0, 3, 3, true));
        // after (9,1) SOL has erred once but the dimension fell by three
        let err = check_corollary_5_2(&hd, &Sample::from_pairs(&[(8, 1)]), 9, None).unwrap_err();
        assert!(matches!(err, SigError::Precondition(_)));
    }

    #[test]
    fn oracle_examples() {
        // hd_prime(2): thresholds on 0..4 and E = {4}
        let hd = hd_prime(2).unwrap();
        let v = brute_force_opt_significant(&hd, &Sample::empty(), 4, 5).unwrap();
        assert_eq!((v.significant, v.forced_prediction), (true, Some(false)));
        let one = singletons(1);
        let v = brute_force_opt_significant(&one, &Sample::empty(), 0, 1).unwrap();
        assert_eq!((v.significant, v.forced_prediction), (true, Some(true)));
        assert!(matches!(
            brute_force_opt_significant(&singletons(6), &Sample::empty(), 0, 4),
            Err(SigError::TooLarge(_))
        ));
    }

    #[test]
    fn dimension_drop_of_two_breaks_both_conditions() {
        // singletons plus a pair: labeling 2 positive drops Ldim from 2... to 0
        let h = FiniteClass::from_supports(4, [vec![0], vec![1], vec![2], vec![3], vec![0, 1], vec![]]).unwrap();
        let s = Sample::from_pairs(&[(2, 1)]);
        let steps = step_checks(&mut LdimMemo::new(), &h, &s, None);
        assert!(steps[0].after.unwrap() <= steps[0].before - 2);
        let r = lemma_a1_check(&h, &s, 4).unwrap();
        assert!(!r.condition_a && !r.condition_b && r.agree);
        let r = lemma_a1_check(&h, &Sample::empty(), 4).unwrap();
        assert!(r.condition_a && r.condition_b);
        assert_eq!(r.optimal_counts, BTreeSet::from([0]));
    }

    #[test]
    fn ldim1_sweep() {
        let embedded = EnumerableClass::new(|i| Slot::Present(Hypothesis::from_support([i as u64])), 64, 64);
        let r = verify_ldim1_all_significant(&embedded, 6, 2).unwrap();
        assert!(r.infinite_proxy);
        assert!(r.all_significant(), "{:?}", r.non_significant);
        assert!(r.inputs_checked > 6);

        let finite = EnumerableClass::from_finite(&singletons(2));
        let r = verify_ldim1_all_significant(&finite, 2, 1).unwrap();
        assert!(!r.infinite_proxy && r.precondition.is_some());
        assert!(r.non_significant.contains(&(Sample::empty(), 0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solver_matches_literal_tables(seed in any::<u64>(), horizon in 1usize..3, aopt in any::<bool>()) {
            let h = random_class(&mut ChaCha8Rng::seed_from_u64(seed), 3, 6);
            prop_assume!(inputs(&h, horizon).len() <= 14);
            let kind = if aopt { Kind::AOptimal } else { Kind::Optimal };
            let literal = literal_allowed(&h, horizon, kind);
            for (s, x) in inputs(&h, horizon) {
                let solved = oracle_predictions(&h, &s, x, horizon, kind).unwrap();
                let expected: Vec<Label> = literal.get(&(s.clone(), x)).map(|b| b.iter().copied().collect()).unwrap_or_default();
                prop_assert_eq!(solved, expected, "input ({}, {})", s, x);
            }
        }

        #[test]
        fn closed_forms_match_oracle(seed in any::<u64>()) {
            let h = random_class(&mut ChaCha8Rng::seed_from_u64(seed), 4, 8);
            let horizon = 4;
            for s in realizable_samples(&h, 2, 4) {
                for x in h.domain().filter(|&x| !s.contains_instance(x)) {
                    let opt = is_opt_significant(&h, &s, x).unwrap();
                    let oracle = brute_force_opt_significant(&h, &s, x, horizon).unwrap();
                    prop_assert_eq!(opt.significant, oracle.significant);
                    prop_assert_eq!(opt.forced_prediction, oracle.forced_prediction);
                    let aopt = is_aopt_significant(&h, &s, x).unwrap();
                    let oracle = brute_force_aopt_significant(&h, &s, x, horizon).unwrap();
                    prop_assert_eq!(aopt.forced_prediction, oracle.forced_prediction);
                    if let (Some(a), Some(o)) = (aopt.forced_prediction, opt.forced_prediction) {
                        prop_assert_eq!(a, o);
                    }
                    if let Some(p) = opt.forced_prediction {
                        prop_assert_eq!(sol(h.clone()).predict(&s, x).unwrap(), p);
                    }
                }
            }
        }

        #[test]
        fn step_conditions_and_mistake_counts(seed in any::<u64>()) {
            let h = random_class(&mut ChaCha8Rng::seed_from_u64(seed), 4, 8);
            for s in realizable_samples(&h, 3, 4) {
                prop_assert!(lemma_a1_check(&h, &s, 4).unwrap().agree, "sample {}", s);
                for x in h.domain().filter(|&x| !s.contains_instance(x)) {
                    if let Ok(c) = check_corollary_5_2(&h, &s, x, Some(4)) {
                        prop_assert!(c.holds);
                        prop_assert_eq!(c.oracle_counts, Some(BTreeSet::from([c.m])));
                    }
                }
            }
        }
    }
}
