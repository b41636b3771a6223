use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{check_trace, run_index, HaltingEnumerator, ProgramIndex, RunOutcome};

/// What an oracle knows about `φ_e(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Convergence {
    Halts(BigUint),
    Diverges,
    /// Not halted within the oracle's budget; divergence not certified.
    Unknown,
}

impl Convergence {
    pub fn value(&self) -> Option<&BigUint> {
        match self {
            Convergence::Halts(v) => Some(v),
            _ => None,
        }
    }

    pub fn halts(&self) -> bool {
        matches!(self, Convergence::Halts(_))
    }
}

/// Query surface for `φ_e(x)↓` and the certificate index `c_x(e)`.
///
/// Answers must be monotone: a program reported halting within `s` steps is
/// reported halting within every `s' >= s`.
pub trait HaltingOracle: Send + Sync {
    /// `Some(φ_e(x))` if program `e` halts on `x` within `s` steps.
    fn halts_within(&self, e: ProgramIndex, x: u64, s: u64) -> Option<BigUint>;

    /// The oracle's best knowledge of `φ_e(x)` under its own budget.
    fn converges(&self, e: ProgramIndex, x: u64) -> Convergence;

    /// `c_x(e)`, if known.
    fn certificate_index(&self, e: ProgramIndex, x: u64) -> Option<usize>;

    /// Whether `C_i^(x)` is a halting certificate for program `e`.
    fn check_certificate(&self, e: ProgramIndex, i: usize, x: u64) -> bool;
}

/// The real toy machine, with a step budget for convergence questions and
/// a diagonal budget for certificate searches.
#[derive(Debug)]
pub struct MachineOracle {
    step_budget: u64,
    diagonal_budget: u64,
    enumerators: Mutex<HashMap<u64, HaltingEnumerator>>,
}

impl MachineOracle {
    pub fn new(step_budget: u64, diagonal_budget: u64) -> Self {
        MachineOracle {
            step_budget,
            diagonal_budget,
            enumerators: Mutex::new(HashMap::new()),
        }
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    fn with_enumerator<R>(&self, x: u64, f: impl FnOnce(&mut HaltingEnumerator) -> R) -> R {
        let mut map = self.enumerators.lock().expect("enumerator cache poisoned");
        f(map.entry(x).or_insert_with(|| HaltingEnumerator::new(x)))
    }
}

impl HaltingOracle for MachineOracle {
    fn halts_within(&self, e: ProgramIndex, x: u64, s: u64) -> Option<BigUint> {
        run_index(e, x, s).output().cloned()
    }

    fn converges(&self, e: ProgramIndex, x: u64) -> Convergence {
        match run_index(e, x, self.step_budget) {
            RunOutcome::Halted { output, .. } => Convergence::Halts(output),
            RunOutcome::Running => Convergence::Unknown,
        }
    }

    fn certificate_index(&self, e: ProgramIndex, x: u64) -> Option<usize> {
        let budget = self.diagonal_budget;
        self.with_enumerator(x, |en| en.index_of(e, budget))
    }

    fn check_certificate(&self, e: ProgramIndex, i: usize, x: u64) -> bool {
        if i == 0 {
            return false;
        }
        let cert = self.with_enumerator(x, |en| en.certificate(i));
        cert.e == e && check_trace(e, x, &cert.trace)
    }
}

/// An exact, budget-free oracle given by a finite table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleEntry {
    /// `φ_e(x)↓ = value`. `cert` overrides the synthetic certificate index
    /// `e + 1`.
    Halts { value: u64, cert: Option<usize> },
    Diverges,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("reading oracle file: {0}")]
    Io(#[from] std::io::Error),
    #[error("oracle file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("oracle key {0:?} is not of the form \"e,x\"")]
    Key(String),
    #[error("oracle entry for {0:?} must be {{\"halts\": v}} or \"diverges\"")]
    Entry(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Halts {
        halts: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cert: Option<usize>,
    },
    Word(String),
}

/// Pairs `(e, x)` absent from the table diverge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableOracle {
    entries: BTreeMap<(ProgramIndex, u64), OracleEntry>,
}

impl TableOracle {
    pub fn new() -> Self {
        TableOracle::default()
    }

    pub fn set(&mut self, e: ProgramIndex, x: u64, entry: OracleEntry) -> &mut Self {
        self.entries.insert((e, x), entry);
        self
    }

    pub fn halts(mut self, e: ProgramIndex, x: u64, value: u64) -> Self {
        self.set(e, x, OracleEntry::Halts { value, cert: None });
        self
    }

    pub fn diverges(mut self, e: ProgramIndex, x: u64) -> Self {
        self.set(e, x, OracleEntry::Diverges);
        self
    }

    pub fn entry(&self, e: ProgramIndex, x: u64) -> &OracleEntry {
        self.entries.get(&(e, x)).unwrap_or(&OracleEntry::Diverges)
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let raw: BTreeMap<String, EntryRepr> = serde_json::from_str(text)?;
        let mut out = TableOracle::new();
        for (key, repr) in raw {
            let (e, x) = key
                .split_once(',')
                .and_then(|(e, x)| Some((e.trim().parse().ok()?, x.trim().parse().ok()?)))
                .ok_or_else(|| OracleError::Key(key.clone()))?;
            let entry = match repr {
                EntryRepr::Halts { halts, cert } => OracleEntry::Halts { value: halts, cert },
                EntryRepr::Word(w) if w == "diverges" => OracleEntry::Diverges,
                EntryRepr::Word(_) => return Err(OracleError::Entry(key)),
            };
            out.set(e, x, entry);
        }
        Ok(out)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        TableOracle::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<String, EntryRepr> = self
            .entries
            .iter()
            .map(|(&(e, x), entry)| {
                let repr = match *entry {
                    OracleEntry::Halts { value, cert } => EntryRepr::Halts { halts: value, cert },
                    OracleEntry::Diverges => EntryRepr::Word("diverges".into()),
                };
                (format!("{e},{x}"), repr)
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("oracle serializes")
    }
}

impl HaltingOracle for TableOracle {
    fn halts_within(&self, e: ProgramIndex, x: u64, _s: u64) -> Option<BigUint> {
        match *self.entry(e, x) {
            OracleEntry::Halts { value, .. } => Some(BigUint::from(value)),
            OracleEntry::Diverges => None,
        }
    }

    fn converges(&self, e: ProgramIndex, x: u64) -> Convergence {
        match *self.entry(e, x) {
            OracleEntry::Halts { value, .. } => Convergence::Halts(BigUint::from(value)),
            OracleEntry::Diverges => Convergence::Diverges,
        }
    }

    fn certificate_index(&self, e: ProgramIndex, x: u64) -> Option<usize> {
        match *self.entry(e, x) {
            OracleEntry::Halts { cert, .. } => Some(cert.unwrap_or(e as usize + 1)),
            OracleEntry::Diverges => None,
        }
    }

    fn check_certificate(&self, e: ProgramIndex, i: usize, x: u64) -> bool {
        i > 0 && self.certificate_index(e, x) == Some(i)
    }
}
