use crate::classes::EnumerableClass;
use crate::littlestone::{EnumerationOutcome, TreeEnumerator};
use crate::sample::{Instance, Label, Sample};

use super::{Learner, PredictError};

/// The significant-input predictor of an enumerable class of Littlestone
/// dimension `d`.
///
/// It replays the history keeping `m`, the number of its own mistakes, and
/// at every step races the shattered-tree enumerators of `H_S^(x,0)` and
/// `H_S^(x,1)` at depth `d - m`; the first side to produce a tree is the
/// prediction. `fuel` is shared by all races of one prediction.
pub struct SigPredictor {
    class: EnumerableClass,
    d: i32,
    fuel: u64,
}

impl SigPredictor {
    pub fn new(class: EnumerableClass, d: i32, fuel: u64) -> Self {
        SigPredictor { class, d, fuel }
    }

    /// One race: `Ok(r)` if the `r` side found a depth-`depth` tree first.
    fn race(&self, history: &Sample, x: Instance, depth: i32, fuel: &mut u64) -> Result<Label, PredictError> {
        if depth < 0 {
            *fuel = 0;
            return Err(PredictError::FuelExhausted);
        }
        let mut sides = [false, true].map(|r| (r, TreeEnumerator::new(&self.class, history.extended(x, r), depth as u32), true));
        while *fuel > 0 && sides.iter().any(|s| s.2) {
            for (r, en, live) in sides.iter_mut() {
                if !*live || *fuel == 0 {
                    continue;
                }
                *fuel -= 1;
                match en.step() {
                    Some(EnumerationOutcome::Found(_)) => return Ok(*r),
                    Some(_) => *live = false,
                    None => {}
                }
            }
        }
        *fuel = 0;
        Err(PredictError::FuelExhausted)
    }
}

pub fn sig_predictor(class: EnumerableClass, d: i32, fuel: u64) -> SigPredictor {
    SigPredictor::new(class, d, fuel)
}

impl Learner for SigPredictor {
    fn name(&self) -> String {
        "sig".into()
    }

    fn predict(&self, history: &Sample, x: Instance) -> Result<Label, PredictError> {
        let mut fuel = self.fuel;
        let mut m = 0;
        for (t, it) in history.iter().enumerate() {
            let p = self.race(&history.prefix(t), it.x, self.d - m, &mut fuel)?;
            if p != it.y {
                m += 1;
            }
        }
        self.race(history, x, self.d - m, &mut fuel)
    }

    fn fuel_limited(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::hd_prime;
    use crate::learners::sol;

    #[test]
    fn agrees_with_sol_on_the_e_instance() {
        let h = hd_prime(3).unwrap();
        let p = sig_predictor(EnumerableClass::from_finite(&h), 3, 1_000_000);
        assert_eq!(p.predict(&Sample::empty(), 8), Ok(false));
        assert_eq!(p.predict(&Sample::empty(), 8), sol(h).predict(&Sample::empty(), 8));
    }

    #[test]
    fn zero_fuel_exhausts() {
        let h = hd_prime(3).unwrap();
        let p = sig_predictor(EnumerableClass::from_finite(&h), 3, 0);
        assert_eq!(p.predict(&Sample::empty(), 8), Err(PredictError::FuelExhausted));
    }
}
