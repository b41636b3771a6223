//! Exact mistake-bound games: a learner against an exhaustive adversary,
//! the minimax optimal bound, post-sample bounds and the optimality
//! verdicts built from them.
//!
//! The adversary presents instances not seen before in the run, each with a
//! label that keeps the sample realizable, for at most `T_max` rounds.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::classes::{FiniteClass, Row};
use crate::learners::{Learner, PredictError, StateKey};
use crate::littlestone::LdimMemo;
use crate::sample::{Instance, Label, LabeledInstance, Sample};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("learner failed: {0}")]
    Learner(#[from] PredictError),
    #[error("sample {0} is not realizable by the class")]
    Unrealizable(Sample),
}

/// How far the adversary may go: at most `t_max` rounds, instances below
/// `instance_cap` (the whole domain if unset).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Horizon {
    pub t_max: usize,
    pub instance_cap: Option<usize>,
}

impl Horizon {
    pub fn new(t_max: usize) -> Self {
        assert!(t_max >= 1, "a horizon needs at least one round");
        Horizon { t_max, instance_cap: None }
    }

    pub fn with_instance_cap(self, cap: usize) -> Self {
        Horizon {
            instance_cap: Some(cap),
            ..self
        }
    }

    pub fn extended(self, extra: usize) -> Self {
        Horizon {
            t_max: self.t_max + extra,
            ..self
        }
    }

    fn cap(&self, h: &FiniteClass) -> usize {
        self.instance_cap.unwrap_or(usize::MAX).min(h.domain_size())
    }
}

/// A mistake count with a run achieving it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GameValue {
    pub value: usize,
    /// The adversary's sample; for post-sample values, only the
    /// continuation.
    pub witness: Sample,
    pub horizon: usize,
}

/// `M_A(S)`: mistakes of `a` along `s`.
pub fn mistakes_on_sample<L: Learner + ?Sized>(a: &L, s: &Sample) -> Result<usize, PredictError> {
    let mut m = 0;
    for (t, it) in s.iter().enumerate() {
        if a.predict(&s.prefix(t), it.x)? != it.y {
            m += 1;
        }
    }
    Ok(m)
}

fn mask_of(s: &Sample) -> u128 {
    s.iter().filter(|it| it.x < 128).fold(0, |m, it| m | (1 << it.x))
}

type MemoKey = (StateKey, Vec<Row>, usize, u128);

/// The exhaustive adversary against one learner on one class.
///
/// Values of positions are memoized when the learner provides a state key;
/// the key is `(state, version space, rounds left, seen instances)`, with
/// the seen set dropped for version-space-measurable learners, which make
/// no mistake and do not move on instances the version space agrees on.
pub struct Adversary<'a, L: Learner + ?Sized> {
    learner: &'a L,
    class: &'a FiniteClass,
    cap: usize,
    memo: HashMap<MemoKey, usize>,
    positions: u64,
}

impl<'a, L: Learner + ?Sized> Adversary<'a, L> {
    pub fn new(learner: &'a L, class: &'a FiniteClass, horizon: Horizon) -> Self {
        Adversary {
            learner,
            class,
            cap: horizon.cap(class),
            memo: HashMap::new(),
            positions: 0,
        }
    }

    /// Positions evaluated so far (memo hits excluded).
    pub fn positions(&self) -> u64 {
        self.positions
    }

    fn moves(&self, vs: &FiniteClass, seen: u128) -> Vec<(Instance, Vec<(Label, FiniteClass)>)> {
        let xs: Vec<Instance> = if self.learner.version_space_measurable() {
            vs.splitting_instances().into_iter().filter(|&x| (x as usize) < self.cap).collect()
        } else {
            (0..self.cap as Instance).filter(|&x| seen >> x & 1 == 0).collect()
        };
        xs.into_iter()
            .map(|x| {
                let labels = [false, true]
                    .into_iter()
                    .map(|y| (y, vs.constrain(x, y)))
                    .filter(|(_, sub)| !sub.is_empty())
                    .collect();
                (x, labels)
            })
            .collect()
    }

    fn key(&self, history: &Sample, vs: &FiniteClass, remaining: usize, seen: u128) -> Option<MemoKey> {
        let state = self.learner.state_key(history)?;
        let seen = if self.learner.version_space_measurable() { 0 } else { seen };
        Some((state, vs.rows().to_vec(), remaining, seen))
    }

    /// Most mistakes the adversary can still force in `remaining` rounds
    /// from `history`, whose version space is `vs`.
    pub fn value(&mut self, history: &mut Sample, vs: &FiniteClass, remaining: usize) -> Result<usize, PredictError> {
        if remaining == 0 || vs.is_empty() {
            return Ok(0);
        }
        let seen = mask_of(history);
        let key = self.key(history, vs, remaining, seen);
        if let Some(v) = key.as_ref().and_then(|k| self.memo.get(k)) {
            return Ok(*v);
        }
        self.positions += 1;
        let mut best = 0;
        'search: for (x, labels) in self.moves(vs, seen) {
            let p = self.learner.predict(history, x)?;
            for (y, sub) in labels {
                // a move can add at most one mistake per remaining round
                if (p != y) as usize + remaining - 1 <= best {
                    continue;
                }
                history.push(LabeledInstance::new(x, y));
                let v = self.value(history, &sub, remaining - 1);
                history.pop();
                let v = (p != y) as usize + v?;
                if v > best {
                    best = v;
                    if best == remaining {
                        break 'search;
                    }
                }
            }
        }
        if let Some(k) = key {
            self.memo.insert(k, best);
        }
        Ok(best)
    }

    /// The value from `prefix` with a continuation achieving it.
    pub fn solve(&mut self, prefix: &Sample, rounds: usize) -> Result<GameValue, GameError> {
        let vs = self.class.restrict(prefix);
        if vs.is_empty() {
            return Err(GameError::Unrealizable(prefix.clone()));
        }
        let mut history = prefix.clone();
        let value = self.value(&mut history, &vs, rounds)?;
        // walk down along moves that keep the value
        let mut witness = Sample::empty();
        let (mut vs, mut left, mut need) = (vs, rounds, value);
        while need > 0 {
            let seen = mask_of(&history);
            let mut next = None;
            'find: for (x, labels) in self.moves(&vs, seen) {
                let p = self.learner.predict(&history, x)?;
                for (y, sub) in labels {
                    let hit = (p != y) as usize;
                    if hit + left - 1 < need {
                        continue;
                    }
                    history.push(LabeledInstance::new(x, y));
                    let v = self.value(&mut history, &sub, left - 1);
                    history.pop();
                    if hit + v? == need {
                        next = Some((x, y, sub, hit));
                        break 'find;
                    }
                }
            }
            let (x, y, sub, hit) = next.expect("a move realizes the computed value");
            history.push(LabeledInstance::new(x, y));
            witness.push(LabeledInstance::new(x, y));
            vs = sub;
            left -= 1;
            need -= hit;
        }
        Ok(GameValue {
            value,
            witness,
            horizon: rounds,
        })
    }
}

/// `M_A(H)` truncated to the horizon.
pub fn mistake_bound<L: Learner + ?Sized>(a: &L, h: &FiniteClass, horizon: Horizon) -> Result<GameValue, GameError> {
    Adversary::new(a, h, horizon).solve(&Sample::empty(), horizon.t_max)
}

/// A bound at two horizons, `T` and `T + 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stabilized {
    pub at: GameValue,
    pub recheck: GameValue,
}

impl Stabilized {
    pub fn is_stable(&self) -> bool {
        self.at.value == self.recheck.value
    }
}

/// [`mistake_bound`] re-run two rounds further.
pub fn mistake_bound_stable<L: Learner + ?Sized>(a: &L, h: &FiniteClass, horizon: Horizon) -> Result<Stabilized, GameError> {
    let mut adv = Adversary::new(a, h, horizon);
    let at = adv.solve(&Sample::empty(), horizon.t_max)?;
    let recheck = adv.solve(&Sample::empty(), horizon.t_max + 2)?;
    Ok(Stabilized { at, recheck })
}

/// `M_A^S(H)`: mistakes the adversary can force after `s` within
/// `horizon.t_max` further rounds.
pub fn post_sample_mistake_bound<L: Learner + ?Sized>(
    a: &L,
    h: &FiniteClass,
    s: &Sample,
    horizon: Horizon,
) -> Result<GameValue, GameError> {
    Adversary::new(a, h, horizon).solve(s, horizon.t_max)
}

/// Minimax over all deterministic learners, with the prediction ties
/// broken to 1.
#[derive(Default)]
pub struct Minimax {
    memo: HashMap<(Vec<Row>, usize), usize>,
}

impl Minimax {
    pub fn new() -> Self {
        Minimax::default()
    }

    /// `V(H)` within `rounds` rounds (`None` for unbounded).
    pub fn value(&mut self, h: &FiniteClass, rounds: Option<usize>) -> usize {
        let r = rounds.unwrap_or(usize::MAX);
        if h.is_empty() || r == 0 {
            return 0;
        }
        let key = (h.rows().to_vec(), r);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let next = rounds.map(|r| r - 1);
        let mut best = 0;
        for x in h.splitting_instances() {
            let zero = self.value(&h.constrain(x, false), next);
            let one = self.value(&h.constrain(x, true), next);
            // predicting p costs one on the other label
            let v = (1 + one).max(zero).min((1 + zero).max(one));
            best = best.max(v);
        }
        self.memo.insert(key, best);
        best
    }

    /// The minimax prediction at `x` for version space `h`.
    pub fn prediction(&mut self, h: &FiniteClass, x: Instance) -> Label {
        let zero = self.value(&h.constrain(x, false), None) as i64 - h.constrain(x, false).is_empty() as i64;
        let one = self.value(&h.constrain(x, true), None) as i64 - h.constrain(x, true).is_empty() as i64;
        // cost of predicting 0 is max(zero, 1 + one), of predicting 1 max(1 + zero, one)
        (1 + zero).max(one) <= zero.max(1 + one)
    }
}

/// `M(H)` by the minimax recursion.
pub fn optimal_mistake_bound(h: &FiniteClass) -> usize {
    Minimax::new().value(h, None)
}

/// `M^S(H)`, the minimax value of `H_S`.
pub fn optimal_post_sample_bound(h: &FiniteClass, s: &Sample) -> Result<usize, GameError> {
    let vs = h.restrict(s);
    if vs.is_empty() {
        return Err(GameError::Unrealizable(s.clone()));
    }
    Ok(Minimax::new().value(&vs, None))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OptimalityVerdict {
    pub optimal: bool,
    pub learner: GameValue,
    /// Minimax value within the same horizon.
    pub optimal_bound: usize,
    /// A run on which the learner exceeds the optimal bound.
    pub counterexample: Option<Sample>,
}

/// Whether `M_A(H)` equals the minimax value, both within the horizon.
pub fn is_optimal<L: Learner + ?Sized>(a: &L, h: &FiniteClass, horizon: Horizon) -> Result<OptimalityVerdict, GameError> {
    let learner = mistake_bound(a, h, horizon)?;
    let optimal_bound = Minimax::new().value(h, Some(horizon.t_max));
    let optimal = learner.value == optimal_bound;
    let counterexample = (!optimal).then(|| learner.witness.clone());
    Ok(OptimalityVerdict {
        optimal,
        learner,
        optimal_bound,
        counterexample,
    })
}

/// A history after which the learner can be forced past the optimum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PostSampleGap {
    pub prefix: Sample,
    pub learner_bound: usize,
    pub optimal_bound: usize,
    pub continuation: Sample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnytimeVerdict {
    pub anytime_optimal: bool,
    pub prefixes_checked: usize,
    /// Every violating prefix, shortest first.
    pub counterexamples: Vec<PostSampleGap>,
}

/// Realizable samples of fresh instances below `cap` with at most
/// `max_len` items, shortest first.
pub fn realizable_samples(h: &FiniteClass, max_len: usize, cap: usize) -> Vec<Sample> {
    let mut levels = vec![vec![(Sample::empty(), h.clone())]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (s, vs) in levels.last().unwrap() {
            for x in 0..cap.min(h.domain_size()) as Instance {
                if s.contains_instance(x) {
                    continue;
                }
                for y in [false, true] {
                    let sub = vs.constrain(x, y);
                    if !sub.is_empty() {
                        next.push((s.extended(x, y), sub));
                    }
                }
            }
        }
        levels.push(next);
    }
    levels.into_iter().flatten().map(|(s, _)| s).collect()
}

/// Compares `M_A^S(H)` with `M^S(H)` for every realizable `S` of length at
/// most `max_prefix`, each within `horizon.t_max` further rounds.
pub fn is_anytime_optimal<L: Learner + ?Sized>(
    a: &L,
    h: &FiniteClass,
    horizon: Horizon,
    max_prefix: usize,
) -> Result<AnytimeVerdict, GameError> {
    let mut adv = Adversary::new(a, h, horizon);
    let mut minimax = Minimax::new();
    let prefixes = realizable_samples(h, max_prefix, horizon.cap(h));
    let mut counterexamples = Vec::new();
    for s in &prefixes {
        let learner = adv.solve(s, horizon.t_max)?;
        let optimal_bound = minimax.value(&h.restrict(s), Some(horizon.t_max));
        if learner.value != optimal_bound {
            counterexamples.push(PostSampleGap {
                prefix: s.clone(),
                learner_bound: learner.value,
                optimal_bound,
                continuation: learner.witness,
            });
        }
    }
    Ok(AnytimeVerdict {
        anytime_optimal: counterexamples.is_empty(),
        prefixes_checked: prefixes.len(),
        counterexamples,
    })
}

/// One round of a replayed run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DuelStep {
    pub t: usize,
    pub x: Instance,
    pub prediction: Label,
    pub y: Label,
    pub mistake: bool,
    /// Version space size and Littlestone dimension after the round.
    pub version_space: usize,
    pub ldim: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Duel {
    pub learner: String,
    pub bound: GameValue,
    pub steps: Vec<DuelStep>,
}

impl Duel {
    pub fn to_tsv(&self, name: &dyn Fn(Instance) -> String) -> String {
        let mut out = String::from("t\tx\tprediction\ty\tmistake\tversion_space\tldim\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.t,
                name(s.x),
                s.prediction as u8,
                s.y as u8,
                s.mistake as u8,
                s.version_space,
                s.ldim
            );
        }
        out
    }
}

/// Replays `s` against `a`, recording each round.
pub fn transcript<L: Learner + ?Sized>(a: &L, h: &FiniteClass, s: &Sample) -> Result<Vec<DuelStep>, PredictError> {
    let mut memo = LdimMemo::new();
    let mut vs = h.clone();
    let mut steps = Vec::new();
    for (t, it) in s.iter().enumerate() {
        let prediction = a.predict(&s.prefix(t), it.x)?;
        vs = vs.constrain(it.x, it.y);
        steps.push(DuelStep {
            t: t + 1,
            x: it.x,
            prediction,
            y: it.y,
            mistake: prediction != it.y,
            version_space: vs.len(),
            ldim: memo.ldim(&vs),
        });
    }
    Ok(steps)
}

/// The learner against the exhaustive adversary, with the worst run
/// replayed.
pub fn duel<L: Learner + ?Sized>(a: &L, h: &FiniteClass, horizon: Horizon) -> Result<Duel, GameError> {
    let bound = mistake_bound(a, h, horizon)?;
    let steps = transcript(a, h, &bound.witness)?;
    Ok(Duel {
        learner: a.name(),
        bound,
        steps,
    })
}
