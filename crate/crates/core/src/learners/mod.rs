//! The learner abstraction and the concrete learners: SOL, the
//! significant-input predictor, the conservative predictor, constants, toy
//! machine programs, the thresholds-gap learner, and the hand-built optimal
//! learners for the halting classes.

mod hand_built;
mod sig;

use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::classes::{FiniteClass, Row};
use crate::littlestone::LdimMemo;
use crate::machine::{run_two_place, RunOutcome, ToyProgram};
use crate::sample::{Instance, Label, Sample};

pub use hand_built::{learner_b_dr_ext, learner_b_dr_halt, learner_b_rer_halt, BDrExt, BDrHalt, BRerHalt, Matching};
pub use sig::{sig_predictor, SigPredictor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredictError {
    /// The prediction did not converge within the learner's budget.
    #[error("fuel exhausted")]
    FuelExhausted,
    /// The learner converged to something other than 0 or 1.
    #[error("output {0} is not a label")]
    InvalidOutput(String),
    /// The instance is outside what the learner can interpret.
    #[error("instance {0} is outside the learner's domain")]
    UnknownInstance(Instance),
}

/// Summary of a learner's internal state after a history, used by the game
/// search to share work between histories.
pub type StateKey = Vec<u128>;

/// A deterministic online learner `A(S, x)`.
///
/// Learners hold no mutable state between calls: everything is derived from
/// the history argument, so identical `(history, x)` give identical answers.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError>;

    /// A key such that two realizable histories with equal keys (and equal
    /// version spaces) lead to identical future predictions. `None` means no
    /// such summary is known and the full history must be used.
    fn state_key(&self, _history: &Sample) -> Option<StateKey> {
        None
    }

    /// Whether the learner predicts the common label on every instance all
    /// version-space hypotheses agree on, without changing its state key.
    /// Such instances are then no-ops the adversary can skip.
    fn version_space_measurable(&self) -> bool {
        false
    }

    fn fuel_limited(&self) -> bool {
        false
    }

    /// Index of the toy program computing this learner, if any.
    fn program_index(&self) -> Option<BigUint> {
        None
    }
}

impl<L: Learner + ?Sized> Learner for Arc<L> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        (**self).predict(history, x)
    }
    fn state_key(&self, history: &Sample) -> Option<StateKey> {
        (**self).state_key(history)
    }
    fn version_space_measurable(&self) -> bool {
        (**self).version_space_measurable()
    }
    fn fuel_limited(&self) -> bool {
        (**self).fuel_limited()
    }
    fn program_index(&self) -> Option<BigUint> {
        (**self).program_index()
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        (**self).predict(history, x)
    }
    fn state_key(&self, history: &Sample) -> Option<StateKey> {
        (**self).state_key(history)
    }
    fn version_space_measurable(&self) -> bool {
        (**self).version_space_measurable()
    }
    fn fuel_limited(&self) -> bool {
        (**self).fuel_limited()
    }
    fn program_index(&self) -> Option<BigUint> {
        (**self).program_index()
    }
}

/// Predictions along a run: `A(S_{t-1}, x_t)` for each `t`.
pub fn predictions<L: Learner + ?Sized>(a: &L, s: &Sample) -> Result<Vec<Label>, PredictError> {
    (0..s.len())
        .map(|t| a.predict(&s.prefix(t), s.items()[t].x))
        .collect()
}

/// The Standard Optimal Learner: predict 1 iff
/// `Ldim(H_S^(x,1)) >= Ldim(H_S^(x,0))`.
pub struct Sol {
    class: FiniteClass,
    memo: Mutex<LdimMemo>,
}

impl Sol {
    pub fn new(class: FiniteClass) -> Self {
        Sol {
            class,
            memo: Mutex::new(LdimMemo::new()),
        }
    }

    pub fn class(&self) -> &FiniteClass {
        &self.class
    }

    /// `(Ldim(H_S^(x,0)), Ldim(H_S^(x,1)))`.
    pub fn branch_dims(&self, history: &Sample, x: Instance) -> (i32, i32) {
        let vs = self.class.restrict(history);
        let mut memo = self.memo.lock().expect("ldim memo poisoned");
        (
            memo.ldim(&vs.constrain(x, false)),
            memo.ldim(&vs.constrain(x, true)),
        )
    }
}

pub fn sol(class: FiniteClass) -> Sol {
    Sol::new(class)
}

impl Learner for Sol {
    fn name(&self) -> String {
        "sol".into()
    }

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        let (zero, one) = self.branch_dims(history, x);
        Ok(one >= zero)
    }

    fn state_key(&self, _history: &Sample) -> Option<StateKey> {
        Some(Vec::new())
    }

    fn version_space_measurable(&self) -> bool {
        true
    }
}

/// Predicts 0 except on instances already seen with label 1.
#[derive(Debug, Clone, Default)]
pub struct Conservative;

pub fn conservative_learner() -> Conservative {
    Conservative
}

impl Learner for Conservative {
    fn name(&self) -> String {
        "conservative".into()
    }

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        Ok(history.iter().any(|it| it.x == x && it.y))
    }

    fn state_key(&self, history: &Sample) -> Option<StateKey> {
        let mut key = vec![0u128; 1];
        for it in history.iter().filter(|it| it.y) {
            let (word, bit) = ((it.x / 128) as usize, it.x % 128);
            if key.len() <= word {
                key.resize(word + 1, 0);
            }
            key[word] |= 1 << bit;
        }
        Some(key)
    }
}

#[derive(Debug, Clone)]
pub struct Constant(pub Label);

impl Learner for Constant {
    fn name(&self) -> String {
        format!("const{}", self.0 as u8)
    }

    fn predict(&self, _history: &Sample, _x: Instance) -> Result<Label, PredictError> {
        Ok(self.0)
    }

    fn state_key(&self, _history: &Sample) -> Option<StateKey> {
        Some(Vec::new())
    }
}

/// The two-place toy program `A_e`, called as `A_e(⟨S⟩, x)` with a step
/// budget per prediction.
#[derive(Debug, Clone)]
pub struct ToyLearner {
    program: ToyProgram,
    step_budget: u64,
}

impl ToyLearner {
    pub fn new(program: ToyProgram, step_budget: u64) -> Self {
        ToyLearner { program, step_budget }
    }

    pub fn from_index(e: u64, step_budget: u64) -> Self {
        ToyLearner::new(ToyProgram::from_index_u64(e), step_budget)
    }

    pub fn program(&self) -> &ToyProgram {
        &self.program
    }

    /// Raw run of the program on `(⟨S⟩, x)`.
    pub fn call(&self, history: &Sample, x: Instance) -> RunOutcome {
        run_two_place(&self.program, &history.encode(), &BigUint::from(x), self.step_budget)
    }
}

impl Learner for ToyLearner {
    fn name(&self) -> String {
        format!("toy:{}", self.program.index())
    }

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        match self.call(history, x) {
            RunOutcome::Running => Err(PredictError::FuelExhausted),
            RunOutcome::Halted { output, .. } => match output.to_u8() {
                Some(0) => Ok(false),
                Some(1) => Ok(true),
                _ => Err(PredictError::InvalidOutput(output.to_string())),
            },
        }
    }

    fn fuel_limited(&self) -> bool {
        true
    }

    fn program_index(&self) -> Option<BigUint> {
        Some(self.program.index())
    }
}

/// When the thresholds-gap learner stops following SOL.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapRule {
    /// Predict 0 whenever the history is not realizable by the thresholds.
    /// Negative labels on threshold instances can leave only `1_E` alive,
    /// after which every instance of `E` is a mistake: the bound is `2d - 1`.
    WholeHistory,
    /// After a positive label outside every threshold's support, predict 0
    /// while at most `d - 2` mistakes have been made. The bound stays `d`.
    WithinBudget,
}

/// The thresholds-gap learner on `H_d ∪ {1_E}`: SOL of the full class
/// except where the gap rule says to predict 0.
pub struct ThresholdsGap {
    sol: Sol,
    thresholds: FiniteClass,
    rule: GapRule,
    budget: usize,
}

impl ThresholdsGap {
    /// `full` must contain every row of `thresholds`, over the same domain.
    pub fn new(full: FiniteClass, thresholds: FiniteClass, rule: GapRule) -> Self {
        assert_eq!(full.domain_size(), thresholds.domain_size());
        assert!(thresholds.is_subset_of(&full));
        let budget = crate::littlestone::ldim(&full).max(0) as usize;
        ThresholdsGap {
            sol: Sol::new(full),
            thresholds,
            rule,
            budget,
        }
    }

    /// The learner for `hd_prime(d)` under [`GapRule::WithinBudget`].
    pub fn for_hd_prime(d: u32) -> Result<Self, crate::classes::ClassError> {
        Self::for_hd_prime_with(d, GapRule::WithinBudget)
    }

    pub fn for_hd_prime_with(d: u32, rule: GapRule) -> Result<Self, crate::classes::ClassError> {
        let full = crate::classes::hd_prime(d)?;
        let base = crate::classes::thresholds(d)?;
        let lifted = FiniteClass::new(full.domain_size(), base.rows().iter().copied())?;
        Ok(ThresholdsGap::new(full, lifted, rule))
    }

    fn outside(&self, x: Instance) -> bool {
        self.thresholds.rows().iter().all(|&r| !crate::classes::row_value(r, x))
    }

    /// Whether a positive label outside the thresholds has been seen, and
    /// the mistakes made so far.
    fn replay(&self, history: &Sample) -> Result<(bool, usize), PredictError> {
        let (mut flagged, mut mistakes) = (false, 0);
        if self.rule == GapRule::WithinBudget {
            for (t, it) in history.iter().enumerate() {
                let p = self.decide(&history.prefix(t), it.x, flagged, mistakes)?;
                mistakes += (p != it.y) as usize;
                flagged |= it.y && self.outside(it.x);
            }
        }
        Ok((flagged, mistakes))
    }

    fn decide(&self, history: &Sample, x: Instance, flagged: bool, mistakes: usize) -> Result<Label, PredictError> {
        let zero = match self.rule {
            GapRule::WholeHistory => !self.thresholds.is_realizable(history),
            GapRule::WithinBudget => flagged && mistakes + 2 <= self.budget,
        };
        if zero {
            Ok(false)
        } else {
            self.sol.predict(history, x)
        }
    }
}

impl Learner for ThresholdsGap {
    fn name(&self) -> String {
        match self.rule {
            GapRule::WholeHistory => "hd-gap-whole".into(),
            GapRule::WithinBudget => "hd-gap".into(),
        }
    }

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        let (flagged, mistakes) = self.replay(history)?;
        self.decide(history, x, flagged, mistakes)
    }

    fn state_key(&self, history: &Sample) -> Option<StateKey> {
        match self.rule {
            GapRule::WholeHistory => Some(vec![self.thresholds.is_realizable(history) as u128]),
            GapRule::WithinBudget => {
                let (flagged, mistakes) = self.replay(history).ok()?;
                Some(vec![flagged as u128, mistakes as u128])
            }
        }
    }
}

/// A learner that predicts by a row once its history has been replayed
/// through a deterministic state machine.
///
/// `State::key` must determine every future prediction and transition given
/// the version space.
pub trait Replay: Send + Sync {
    type State: Clone;

    fn initial(&self) -> Self::State;

    fn predict_in(&self, state: &Self::State, x: Instance) -> Result<Label, PredictError>;

    /// Called after each history item with the prediction that was made.
    fn advance(&self, state: Self::State, history: &Sample, x: Instance, y: Label, predicted: Label)
        -> Result<Self::State, PredictError>;

    fn key(&self, state: &Self::State) -> StateKey;

    fn replay(&self, history: &Sample) -> Result<Self::State, PredictError> {
        let mut state = self.initial();
        for (t, it) in history.iter().enumerate() {
            let p = self.predict_in(&state, it.x)?;
            state = self.advance(state, &history.prefix(t + 1), it.x, it.y, p)?;
        }
        Ok(state)
    }
}

/// Bit mask of the instances in `0..domain_size` where `f` is 1.
pub(crate) fn row_of(domain_size: usize, f: impl Fn(Instance) -> bool) -> Row {
    (0..domain_size.min(128) as Instance)
        .filter(|&x| f(x))
        .fold(0, |r, x| r | (1 << x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{hd_prime, thresholds};

    #[test]
    fn sol_examples() {
        let h = FiniteClass::from_supports(2, [vec![0], vec![0, 1]]).unwrap();
        assert_eq!(sol(h).predict(&Sample::from_pairs(&[(0, 1)]), 1), Ok(true));
        // instance named 9 is stored at 8
        let hd = sol(hd_prime(3).unwrap());
        assert_eq!(hd.branch_dims(&Sample::empty(), 8), (3, 0));
        assert_eq!(hd.predict(&Sample::empty(), 8), Ok(false));
        let t2 = sol(thresholds(2).unwrap());
        // instance named 1 is stored at 0
        assert_eq!(t2.branch_dims(&Sample::empty(), 0), (-1, 2));
        assert_eq!(t2.predict(&Sample::empty(), 0), Ok(true));
    }

    #[test]
    fn conservative_examples() {
        let c = conservative_learner();
        assert_eq!(c.predict(&Sample::empty(), 4), Ok(false));
        assert_eq!(c.predict(&Sample::from_pairs(&[(5, 1)]), 5), Ok(true));
        assert_eq!(c.predict(&Sample::from_pairs(&[(5, 0)]), 5), Ok(false));
    }

    #[test]
    fn toy_constants() {
        let zero = ToyLearner::from_index(0, 100);
        let one = ToyLearner::from_index(1, 100);
        let s = Sample::from_pairs(&[(3, 1), (7, 0)]);
        assert_eq!(zero.predict(&s, 9), Ok(false));
        assert_eq!(one.predict(&s, 9), Ok(true));
        // DECJZ 0 0 loops: register 0 starts at 0
        assert_eq!(ToyLearner::from_index(3, 100).predict(&s, 9), Err(PredictError::FuelExhausted));
    }

    #[test]
    fn thresholds_gap_switches_to_zero() {
        let a = ThresholdsGap::for_hd_prime(3).unwrap();
        let on_e = Sample::from_pairs(&[(8, 1)]);
        assert_eq!(a.predict(&Sample::empty(), 8), Ok(false));
        assert_eq!(a.predict(&on_e, 9), Ok(false));
        assert_eq!(sol(hd_prime(3).unwrap()).predict(&on_e, 9), Ok(true));
        // a negative label on a threshold instance only trips the whole-history rule
        let neg = Sample::from_pairs(&[(0, 0)]);
        assert_eq!(a.predict(&neg, 8), Ok(true));
        let whole = ThresholdsGap::for_hd_prime_with(3, GapRule::WholeHistory).unwrap();
        assert_eq!(whole.predict(&neg, 8), Ok(false));
    }
}
