use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::classes::InstanceNames;
use crate::machine::HaltingOracle;
use crate::paperclasses::{prime_power_instance, split_prime_power, DrBlock, PaperError};
use crate::sample::{Instance, Label, Sample};

use super::{row_of, Learner, PredictError, Replay, StateKey};

/// Replayed state of the hand-built learners: predict 0 until the first
/// mistake, then match a finite support.
#[derive(Clone, Debug, Default)]
pub struct Matching {
    pub mistakes: u8,
    /// Block index of the first mistake.
    pub block: Option<u64>,
    /// Whether the next mistake is resolved against the block's hypotheses.
    pub resolve: bool,
    pub support: BTreeSet<BigUint>,
}

fn natural(names: &InstanceNames, x: Instance) -> Result<&BigUint, PredictError> {
    names.natural(x).ok_or(PredictError::UnknownInstance(x))
}

fn oracle_error(e: PaperError) -> PredictError {
    match e {
        PaperError::Unknown { .. } | PaperError::CertificateBudget { .. } => PredictError::FuelExhausted,
        other => PredictError::InvalidOutput(other.to_string()),
    }
}

fn toggle(mut support: BTreeSet<BigUint>, n: &BigUint, y: Label) -> BTreeSet<BigUint> {
    if y {
        support.insert(n.clone());
    } else {
        support.remove(n);
    }
    support
}

/// The only candidate support consistent with the history, if unique.
fn resolve(candidates: Vec<BTreeSet<BigUint>>, names: &InstanceNames, history: &Sample) -> Option<BTreeSet<BigUint>> {
    let consistent: Vec<_> = candidates
        .into_iter()
        .filter(|s| {
            history
                .iter()
                .all(|it| names.natural(it.x).is_some_and(|n| s.contains(n) == it.y))
        })
        .collect();
    match <[_; 1]>::try_from(consistent) {
        Ok([only]) => Some(only),
        Err(_) => None,
    }
}

fn matching_key(names: &InstanceNames, state: &Matching) -> StateKey {
    let row = row_of(names.len(), |x| names.natural(x).is_some_and(|n| state.support.contains(n)));
    vec![
        state.mistakes as u128,
        state.block.map_or(0, |e| e as u128 + 1),
        state.resolve as u128,
        row,
    ]
}

macro_rules! replay_learner {
    ($ty:ty, $name:expr) => {
        impl Learner for $ty {
            fn name(&self) -> String {
                $name.into()
            }

            fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
                let state = self.replay(history)?;
                self.predict_in(&state, x)
            }

            fn state_key(&self, history: &Sample) -> Option<StateKey> {
                self.replay(history).ok().map(|s| self.key(&s))
            }
        }
    };
}

/// Optimal learner for the RER halting class over instances `3e, 3e+1,
/// 3e+2`: predict 0 until a mistake on `x_1` in block `e`, then match
/// `1_{3e,3e+1,x_1}`; a second mistake on `3e+2` or `3e+1` pins the target.
pub struct BRerHalt {
    names: InstanceNames,
}

impl BRerHalt {
    pub fn new(names: InstanceNames) -> Self {
        BRerHalt { names }
    }
}

pub fn learner_b_rer_halt(names: InstanceNames) -> BRerHalt {
    BRerHalt::new(names)
}

impl Replay for BRerHalt {
    type State = Matching;

    fn initial(&self) -> Matching {
        Matching::default()
    }

    fn predict_in(&self, state: &Matching, x: Instance) -> Result<Label, PredictError> {
        Ok(state.support.contains(natural(&self.names, x)?))
    }

    fn advance(&self, state: Matching, _history: &Sample, x: Instance, y: Label, predicted: Label) -> Result<Matching, PredictError> {
        if predicted == y {
            return Ok(state);
        }
        let n = natural(&self.names, x)?;
        let small = |k: u64| BigUint::from(k);
        let mut next = match (state.mistakes, state.block) {
            (0, _) => {
                let e = (n / 3u32).to_u64().ok_or(PredictError::UnknownInstance(x))?;
                Matching {
                    block: Some(e),
                    support: [small(3 * e), small(3 * e + 1), n.clone()].into_iter().collect(),
                    ..state
                }
            }
            (1, Some(e)) if *n == small(3 * e + 2) && y => Matching {
                support: [small(3 * e), small(3 * e + 1), small(3 * e + 2)].into_iter().collect(),
                ..state
            },
            (1, Some(e)) if *n == small(3 * e + 1) && !y => Matching {
                support: [small(3 * e)].into_iter().collect(),
                ..state
            },
            _ => Matching {
                support: toggle(state.support.clone(), n, y),
                ..state
            },
        };
        next.mistakes = next.mistakes.saturating_add(1);
        Ok(next)
    }

    fn key(&self, state: &Matching) -> StateKey {
        matching_key(&self.names, state)
    }
}

replay_learner!(BRerHalt, "b-rer-halt");

/// Shared first-mistake analysis of the two decidably representable
/// classes.
struct DrLearner {
    oracle: Arc<dyn HaltingOracle>,
    names: InstanceNames,
}

impl DrLearner {
    fn block(&self, e: u64) -> Result<DrBlock, PredictError> {
        DrBlock::query(self.oracle.as_ref(), e, None).map_err(oracle_error)
    }

    fn power_of_two(n: &BigUint) -> Option<u64> {
        (n.count_ones() == 1).then(|| n.trailing_zeros().unwrap_or(0))
    }

    fn advance(
        &self,
        state: Matching,
        history: &Sample,
        x: Instance,
        y: Label,
        first: impl FnOnce(&BigUint) -> Result<Matching, PredictError>,
        candidates: impl FnOnce(&DrBlock) -> Vec<BTreeSet<BigUint>>,
    ) -> Result<Matching, PredictError> {
        let n = natural(&self.names, x)?;
        let mut next = match (state.mistakes, state.block) {
            (0, _) => first(n)?,
            (1, Some(e)) if state.resolve => {
                let block = self.block(e)?;
                match resolve(candidates(&block), &self.names, history) {
                    Some(support) => Matching { support, ..state },
                    None => Matching {
                        support: toggle(state.support.clone(), n, y),
                        ..state
                    },
                }
            }
            _ => Matching {
                support: toggle(state.support.clone(), n, y),
                ..state
            },
        };
        next.mistakes = state.mistakes.saturating_add(1);
        Ok(next)
    }

    fn pair(n: &BigUint, e: u64) -> Matching {
        Matching {
            mistakes: 0,
            block: Some(e),
            resolve: false,
            support: [BigUint::one() << e as usize, n.clone()].into_iter().collect(),
        }
    }
}

/// Optimal learner for `H^DR_ext`.
///
/// After a first mistake on `2^e·y^i` it matches `1_{2^e, 2^e·y^i}` and
/// adds the next mistaken instance. After a first mistake on `2^e` it
/// matches `1_{2^e, 2^e·5^{c_0(e)}}` if `φ_e(e) = 1`,
/// `1_{2^e, 2^e·3^{c_0(e)}, 2^e·13^{c_e(e)}}` if `φ_e(e) = 0`, and
/// `1_{2^e, 2^e·3^{c_0(e)}}` otherwise; the next mistake leaves a single
/// consistent hypothesis of block `e`, which it then matches.
pub struct BDrExt(DrLearner);

impl BDrExt {
    pub fn new(oracle: Arc<dyn HaltingOracle>, names: InstanceNames) -> Self {
        BDrExt(DrLearner { oracle, names })
    }
}

pub fn learner_b_dr_ext(oracle: Arc<dyn HaltingOracle>, names: InstanceNames) -> BDrExt {
    BDrExt::new(oracle, names)
}

impl Replay for BDrExt {
    type State = Matching;

    fn initial(&self) -> Matching {
        Matching::default()
    }

    fn predict_in(&self, state: &Matching, x: Instance) -> Result<Label, PredictError> {
        Ok(state.support.contains(natural(&self.0.names, x)?))
    }

    fn advance(&self, state: Matching, history: &Sample, x: Instance, y: Label, predicted: Label) -> Result<Matching, PredictError> {
        if predicted == y {
            return Ok(state);
        }
        let first = |n: &BigUint| {
            if let Some(e) = DrLearner::power_of_two(n) {
                let block = self.0.block(e)?;
                let base = block.base();
                let support: BTreeSet<BigUint> = match block.value.as_ref().and_then(|v| v.to_u8()) {
                    Some(1) => [Some(base), block.with_c0(5)].into_iter().flatten().collect(),
                    Some(0) => [Some(base), block.with_c0(3), block.with_ce(13)].into_iter().flatten().collect(),
                    _ => [Some(base), block.with_c0(3)].into_iter().flatten().collect(),
                };
                return Ok(Matching {
                    mistakes: 0,
                    block: Some(e),
                    resolve: true,
                    support,
                });
            }
            Ok(match split_prime_power(n, &[3, 5, 7, 11, 13]) {
                Some((e, _, _)) => DrLearner::pair(n, e),
                None => Matching {
                    support: [n.clone()].into_iter().collect(),
                    ..Matching::default()
                },
            })
        };
        self.0.advance(state, history, x, y, first, DrBlock::ext_supports)
    }

    fn key(&self, state: &Matching) -> StateKey {
        matching_key(&self.0.names, state)
    }
}

replay_learner!(BDrExt, "b-dr-ext");

/// Optimal learner for `H^DR_halt`: after a first mistake on `2^e·y^i`
/// (`y` in 5, 7, 11) it matches `1_{2^e, 2^e·5^{c_0(e)}, 2^e·y^i}`, on
/// `2^e·3^i` it matches `1_{2^e, 2^e·3^i}`, and on `2^e` it matches
/// `1_{2^e, 2^e·5^{c_0(e)}}`; one more mistake pins the target.
pub struct BDrHalt(DrLearner);

impl BDrHalt {
    pub fn new(oracle: Arc<dyn HaltingOracle>, names: InstanceNames) -> Self {
        BDrHalt(DrLearner { oracle, names })
    }
}

pub fn learner_b_dr_halt(oracle: Arc<dyn HaltingOracle>, names: InstanceNames) -> BDrHalt {
    BDrHalt::new(oracle, names)
}

impl Replay for BDrHalt {
    type State = Matching;

    fn initial(&self) -> Matching {
        Matching::default()
    }

    fn predict_in(&self, state: &Matching, x: Instance) -> Result<Label, PredictError> {
        Ok(state.support.contains(natural(&self.0.names, x)?))
    }

    fn advance(&self, state: Matching, history: &Sample, x: Instance, y: Label, predicted: Label) -> Result<Matching, PredictError> {
        if predicted == y {
            return Ok(state);
        }
        let first = |n: &BigUint| {
            let five = |e: u64| -> Result<BigUint, PredictError> {
                let c0 = self.0.block(e)?.c0.ok_or(PredictError::FuelExhausted)?;
                Ok(prime_power_instance(e, 5, c0 as u64))
            };
            if let Some(e) = DrLearner::power_of_two(n) {
                return Ok(Matching {
                    mistakes: 0,
                    block: Some(e),
                    resolve: true,
                    support: [BigUint::one() << e as usize, five(e)?].into_iter().collect(),
                });
            }
            Ok(match split_prime_power(n, &[3, 5, 7, 11]) {
                Some((e, 3, _)) => DrLearner::pair(n, e),
                Some((e, _, _)) => Matching {
                    mistakes: 0,
                    block: Some(e),
                    resolve: true,
                    support: [BigUint::one() << e as usize, five(e)?, n.clone()].into_iter().collect(),
                },
                None => Matching {
                    support: [n.clone()].into_iter().collect(),
                    ..Matching::default()
                },
            })
        };
        self.0.advance(state, history, x, y, first, DrBlock::halt_supports)
    }

    fn key(&self, state: &Matching) -> StateKey {
        matching_key(&self.0.names, state)
    }
}

replay_learner!(BDrHalt, "b-dr-halt");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::TableOracle;
    use crate::paperclasses::{build_h_dr_ext, build_h_dr_halt};

    fn support(items: &[BigUint]) -> BTreeSet<BigUint> {
        items.iter().cloned().collect()
    }

    #[test]
    fn rer_halt_cases() {
        let b = learner_b_rer_halt(InstanceNames::identity(9));
        assert_eq!(b.predict(&Sample::empty(), 7), Ok(false));
        // e = 1: mistake on (5, 1) then nothing changes
        let s = Sample::from_pairs(&[(5, 1)]);
        let st = b.replay(&s).unwrap();
        assert_eq!(st.support, support(&[3u32.into(), 4u32.into(), 5u32.into()]));
        let s = Sample::from_pairs(&[(3, 1), (4, 0)]);
        assert_eq!(b.replay(&s).unwrap().support, support(&[3u32.into()]));
    }

    #[test]
    fn dr_ext_first_mistakes() {
        let oracle: Arc<dyn HaltingOracle> = Arc::new(TableOracle::new().halts(1, 0, 0).halts(1, 1, 1));
        let c = build_h_dr_ext(oracle.as_ref(), 1, 100).unwrap();
        let b = learner_b_dr_ext(Arc::clone(&oracle), c.names.clone());
        let two = BigUint::from(2u32);
        let x = c.instance(&two).unwrap();
        let st = b.replay(&Sample::from_pairs(&[(x, 1)])).unwrap();
        // c_0(1) = 2 under the synthetic certificates
        assert_eq!(st.support, support(&[two.clone(), prime_power_instance(1, 5, 2)]));
        let three = prime_power_instance(1, 3, 2);
        let st = b.replay(&Sample::from_pairs(&[(c.instance(&three).unwrap(), 1)])).unwrap();
        assert_eq!(st.support, support(&[two, three]));
    }

    #[test]
    fn dr_halt_first_mistake_on_base() {
        let oracle: Arc<dyn HaltingOracle> = Arc::new(TableOracle::new().halts(2, 0, 0).halts(2, 2, 7));
        let c = build_h_dr_halt(oracle.as_ref(), 2, 100).unwrap();
        let b = learner_b_dr_halt(Arc::clone(&oracle), c.names.clone());
        let four = BigUint::from(4u32);
        let st = b.replay(&Sample::from_pairs(&[(c.instance(&four).unwrap(), 1)])).unwrap();
        assert_eq!(st.support, support(&[four, prime_power_instance(2, 5, 3)]));
    }
}
