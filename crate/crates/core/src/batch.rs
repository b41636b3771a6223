//! Losses and regret with exact rationals, the online-to-batch conversion,
//! seeded PAC evaluation and the unrealizable-labeling finder.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{row_value, FiniteClass};
use crate::learners::{Learner, PredictError};
use crate::sample::{Instance, Label, LabeledInstance, Sample};

/// Largest `(2 · domain_cap)^T` the regret enumeration accepts.
pub const REGRET_SEQUENCE_LIMIT: u64 = 1_000_000;
pub const LABELING_MAX_INSTANCES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BatchError {
    #[error("learner failed: {0}")]
    Learner(#[from] PredictError),
    #[error("conversion needs a nonempty sample")]
    EmptySample,
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(String),
    #[error("hypothesis has no value at instance {0}")]
    Uncovered(Instance),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("{0} sequences exceed the enumeration limit")]
    TooManySequences(String),
    #[error("{0} instances exceed the labeling limit of {LABELING_MAX_INSTANCES}")]
    TooManyInstances(usize),
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn indicator(y: Label) -> BigRational {
    if y {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// Probability of predicting 1 at each covered instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilisticHypothesis {
    values: BTreeMap<Instance, BigRational>,
}

impl ProbabilisticHypothesis {
    pub fn new(values: BTreeMap<Instance, BigRational>) -> Result<Self, BatchError> {
        if let Some(v) = values.values().find(|v| v.is_negative() || **v > BigRational::one()) {
            return Err(BatchError::OutOfRange(v.to_string()));
        }
        Ok(ProbabilisticHypothesis { values })
    }

    pub fn from_row(row: u128, domain_size: usize) -> Self {
        ProbabilisticHypothesis {
            values: (0..domain_size as Instance).map(|x| (x, indicator(row_value(row, x)))).collect(),
        }
    }

    pub fn value(&self, x: Instance) -> Option<&BigRational> {
        self.values.get(&x)
    }

    pub fn values(&self) -> &BTreeMap<Instance, BigRational> {
        &self.values
    }
}

impl fmt::Display for ProbabilisticHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(x, v)| format!("{x}:{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `ℓ(h, (x, y)) = |h(x) - y|`.
pub fn point_loss(h: &ProbabilisticHypothesis, x: Instance, y: Label) -> Result<BigRational, BatchError> {
    let v = h.value(x).ok_or(BatchError::Uncovered(x))?;
    Ok((v - indicator(y)).abs())
}

/// A learner whose prediction is the probability of answering 1.
pub trait ProbabilisticLearner {
    fn probability(&self, history: &Sample, x: Instance) -> Result<BigRational, PredictError>;
}

/// A deterministic learner seen as predicting probability 0 or 1.
pub struct Deterministic<L>(pub L);

impl<L: Learner> ProbabilisticLearner for Deterministic<L> {
    fn probability(&self, history: &Sample, x: Instance) -> Result<BigRational, PredictError> {
        self.0.predict(history, x).map(indicator)
    }
}

impl ProbabilisticLearner for ProbabilisticHypothesis {
    fn probability(&self, _: &Sample, x: Instance) -> Result<BigRational, PredictError> {
        self.value(x).cloned().ok_or(PredictError::UnknownInstance(x))
    }
}

/// Predicts the same probability everywhere.
pub struct ConstantProbability(pub BigRational);

impl ProbabilisticLearner for ConstantProbability {
    fn probability(&self, _: &Sample, _: Instance) -> Result<BigRational, PredictError> {
        Ok(self.0.clone())
    }
}

struct RegretSearch<'a, A: ProbabilisticLearner + ?Sized> {
    learner: &'a A,
    h: &'a FiniteClass,
    cap: Instance,
}

impl<A: ProbabilisticLearner + ?Sized> RegretSearch<'_, A> {
    fn best(&self, history: &mut Sample, paid: &BigRational, losses: &mut [usize], left: usize) -> Result<BigRational, PredictError> {
        if left == 0 {
            let comparator = losses.iter().min().copied().unwrap_or(0);
            return Ok(paid - BigRational::from_integer(comparator.into()));
        }
        let mut best: Option<BigRational> = None;
        for x in 0..self.cap {
            let p = self.learner.probability(history, x)?;
            for y in [false, true] {
                let cost = (&p - indicator(y)).abs();
                for (loss, &row) in losses.iter_mut().zip(self.h.rows()) {
                    *loss += (row_value(row, x) != y) as usize;
                }
                history.push(LabeledInstance::new(x, y));
                let v = self.best(history, &(paid + cost), losses, left - 1);
                history.pop();
                for (loss, &row) in losses.iter_mut().zip(self.h.rows()) {
                    *loss -= (row_value(row, x) != y) as usize;
                }
                let v = v?;
                if best.as_ref().map_or(true, |b| v > *b) {
                    best = Some(v);
                }
            }
        }
        Ok(best.expect("at least one instance"))
    }
}

/// `sup_S [Σ ℓ(A_t, (x_t, y_t)) - min_h Σ ℓ(h, (x_t, y_t))]` over every
/// sequence of length `t` with instances below `domain_cap`.
pub fn expected_regret<A: ProbabilisticLearner + ?Sized>(
    a: &A,
    h: &FiniteClass,
    t: usize,
    domain_cap: usize,
) -> Result<BigRational, BatchError> {
    let cap = domain_cap.min(h.domain_size());
    let count = (2 * cap as u64).checked_pow(t as u32).filter(|&n| n <= REGRET_SEQUENCE_LIMIT);
    if count.is_none() || cap == 0 {
        return Err(BatchError::TooManySequences(format!("(2·{cap})^{t}")));
    }
    if t == 0 {
        return Ok(BigRational::zero());
    }
    let search = RegretSearch {
        learner: a,
        h,
        cap: cap as Instance,
    };
    let mut losses = vec![0; h.len()];
    Ok(search.best(&mut Sample::empty(), &BigRational::zero(), &mut losses, t)?)
}

/// The average of `A(S_{t-1}, ·)` over `t = 1..=|S|`, on instances below
/// `domain_size`.
pub fn online_to_batch<L: Learner + ?Sized>(a: &L, s: &Sample, domain_size: usize) -> Result<ProbabilisticHypothesis, BatchError> {
    if s.is_empty() {
        return Err(BatchError::EmptySample);
    }
    let mut counts = vec![0i64; domain_size];
    for t in 0..s.len() {
        let prefix = s.prefix(t);
        for (x, c) in counts.iter_mut().enumerate() {
            *c += a.predict(&prefix, x as Instance)? as i64;
        }
    }
    let n = s.len() as i64;
    Ok(ProbabilisticHypothesis {
        values: counts.into_iter().enumerate().map(|(x, c)| (x as Instance, rational(c, n))).collect(),
    })
}

/// A distribution over labeled instances with finite support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDistribution {
    support: Vec<(Instance, Label, BigRational)>,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    x: Instance,
    y: u8,
    weight: String,
}

impl FiniteDistribution {
    pub fn new(support: Vec<(Instance, Label, BigRational)>) -> Result<Self, BatchError> {
        if support.is_empty() {
            return Err(BatchError::Distribution("empty support".into()));
        }
        if let Some((x, y, w)) = support.iter().find(|(_, _, w)| !w.is_positive()) {
            return Err(BatchError::Distribution(format!("weight {w} at ({x},{}) is not positive", *y as u8)));
        }
        let total: BigRational = support.iter().map(|(_, _, w)| w).sum();
        if !total.is_one() {
            return Err(BatchError::Distribution(format!("weights sum to {total}")));
        }
        Ok(FiniteDistribution { support })
    }

    /// Equal weight on each item.
    pub fn uniform(items: &[(Instance, Label)]) -> Result<Self, BatchError> {
        let w = rational(1, items.len().max(1) as i64);
        FiniteDistribution::new(items.iter().map(|&(x, y)| (x, y, w.clone())).collect())
    }

    pub fn support(&self) -> &[(Instance, Label, BigRational)] {
        &self.support
    }

    /// Parses `[{"x": 0, "y": 1, "weight": "1/4"}, ...]`.
    pub fn from_json(text: &str) -> Result<Self, BatchError> {
        let items: Vec<WeightFile> = serde_json::from_str(text).map_err(|e| BatchError::Distribution(e.to_string()))?;
        let support = items
            .into_iter()
            .map(|w| {
                let weight = BigRational::from_str(&w.weight).map_err(|e| BatchError::Distribution(format!("weight {}: {e}", w.weight)))?;
                Ok((w.x, w.y != 0, weight))
            })
            .collect::<Result<_, BatchError>>()?;
        FiniteDistribution::new(support)
    }

    pub fn to_json(&self) -> String {
        let items: Vec<WeightFile> = self
            .support
            .iter()
            .map(|(x, y, w)| WeightFile {
                x: *x,
                y: *y as u8,
                weight: w.to_string(),
            })
            .collect();
        serde_json::to_string_pretty(&items).expect("serializable")
    }

    /// Integer weights over a common denominator, for exact sampling.
    fn integer_weights(&self) -> Result<Vec<u64>, BatchError> {
        let denominator = self.support.iter().fold(BigInt::one(), |l, (_, _, w)| l.lcm(w.denom()));
        self.support
            .iter()
            .map(|(_, _, w)| {
                (w * BigRational::from_integer(denominator.clone()))
                    .to_integer()
                    .to_u64()
                    .ok_or_else(|| BatchError::Distribution("common denominator exceeds 64 bits".into()))
            })
            .collect()
    }

    /// `m` independent draws.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Result<Sample, BatchError> {
        let index = WeightedIndex::new(self.integer_weights()?).map_err(|e| BatchError::Distribution(e.to_string()))?;
        Ok((0..m)
            .map(|_| {
                let (x, y, _) = &self.support[index.sample(rng)];
                LabeledInstance::new(*x, *y)
            })
            .collect())
    }

    pub fn max_instance(&self) -> Instance {
        self.support.iter().map(|(x, _, _)| *x).max().unwrap_or(0)
    }
}

/// `L_D(h) = E_{(x,y)~D} ℓ(h, (x, y))`.
pub fn distribution_error(h: &ProbabilisticHypothesis, d: &FiniteDistribution) -> Result<BigRational, BatchError> {
    let mut total = BigRational::zero();
    for (x, y, w) in d.support() {
        total += point_loss(h, *x, *y)? * w;
    }
    Ok(total)
}

/// `L_D(H) = min_h L_D(h)`.
pub fn class_error(h: &FiniteClass, d: &FiniteDistribution) -> Result<BigRational, BatchError> {
    h.rows()
        .iter()
        .map(|&r| distribution_error(&ProbabilisticHypothesis::from_row(r, h.domain_size()), d))
        .try_fold(None::<BigRational>, |best, e| {
            let e = e?;
            Ok(Some(match best {
                Some(b) if b <= e => b,
                _ => e,
            }))
        })
        .map(|b| b.unwrap_or_else(BigRational::one))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacReport {
    pub trials: usize,
    pub m: usize,
    pub class_error: BigRational,
    /// Trials with `L_D(B_S) > L_D(H) + ε`.
    pub failures: usize,
    pub errors: Vec<BigRational>,
    pub delta: BigRational,
}

impl PacReport {
    pub fn failure_rate(&self) -> BigRational {
        rational(self.failures as i64, self.trials.max(1) as i64)
    }

    pub fn passed(&self) -> bool {
        self.failure_rate() <= self.delta
    }
}

#[derive(Clone, Debug)]
pub struct PacConfig {
    pub eps: BigRational,
    pub delta: BigRational,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Draws `trials` samples of size `m` from `d` and converts `a` on each.
pub fn pac_evaluate<L: Learner + ?Sized>(
    a: &L,
    h: &FiniteClass,
    d: &FiniteDistribution,
    config: &PacConfig,
) -> Result<PacReport, BatchError> {
    if d.max_instance() as usize >= h.domain_size() {
        return Err(BatchError::Distribution(format!("instance {} outside the class domain", d.max_instance())));
    }
    let class_error = class_error(h, d)?;
    let threshold = &class_error + &config.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut errors = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        let s = d.draw(&mut rng, config.m)?;
        let b = online_to_batch(a, &s, h.domain_size())?;
        errors.push(distribution_error(&b, d)?);
    }
    Ok(PacReport {
        trials: config.trials,
        m: config.m,
        failures: errors.iter().filter(|e| **e > threshold).count(),
        class_error,
        errors,
        delta: config.delta.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelingSearch {
    /// The first labeling, in lexicographic order with 0 before 1, that
    /// no hypothesis realizes.
    Unrealizable(Vec<Label>),
    AllRealizable,
}

pub fn find_unrealizable_labeling(h: &FiniteClass, xs: &[Instance]) -> Result<LabelingSearch, BatchError> {
    if xs.len() > LABELING_MAX_INSTANCES {
        return Err(BatchError::TooManyInstances(xs.len()));
    }
    let pattern = |row: u128| xs.iter().fold(0u32, |p, &x| p << 1 | row_value(row, x) as u32);
    let mut realized = vec![false; 1 << xs.len()];
    for &r in h.rows() {
        realized[pattern(r) as usize] = true;
    }
    Ok(match realized.iter().position(|r| !r) {
        Some(p) => LabelingSearch::Unrealizable((0..xs.len()).rev().map(|i| p >> i & 1 == 1).collect()),
        None => LabelingSearch::AllRealizable,
    })
}
