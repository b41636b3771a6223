use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

pub type Register = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    /// Increment register `r`.
    Inc(Register),
    /// If register `r` is zero jump to `t`, otherwise decrement it and
    /// continue.
    DecJz(Register, usize),
    /// Stop; the output is register 0.
    Halt,
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instr::Inc(r) => write!(f, "INC {r}"),
            Instr::DecJz(r, t) => write!(f, "DECJZ {r} {t}"),
            Instr::Halt => write!(f, "HALT"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty program")]
    Empty,
    #[error("jump target {target} out of bounds for a program of length {len}")]
    TargetOutOfBounds { target: usize, len: usize },
}

/// A register-machine program. Execution starts at instruction 0 and stops
/// when the program counter reaches `len()`, either through `HALT` or by
/// running past the last instruction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ToyProgram {
    instrs: Vec<Instr>,
}

impl ToyProgram {
    pub fn new(instrs: Vec<Instr>) -> Result<Self, ProgramError> {
        if instrs.is_empty() {
            return Err(ProgramError::Empty);
        }
        let len = instrs.len();
        for i in &instrs {
            if let Instr::DecJz(_, t) = *i {
                if t >= len {
                    return Err(ProgramError::TargetOutOfBounds { target: t, len });
                }
            }
        }
        Ok(ToyProgram { instrs })
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Registers a run allocates: every referenced register, and at least
    /// the three used by two-place calls.
    pub fn register_count(&self) -> usize {
        let max_ref = self
            .instrs
            .iter()
            .filter_map(|i| match *i {
                Instr::Inc(r) | Instr::DecJz(r, _) => Some(r),
                Instr::Halt => None,
            })
            .max()
            .unwrap_or(0);
        (max_ref + 1).max(3)
    }

    /// A syntactically different program with the same input/output
    /// behavior: a trailing `HALT` is appended.
    pub fn padded(&self) -> ToyProgram {
        let mut instrs = self.instrs.clone();
        instrs.push(Instr::Halt);
        ToyProgram { instrs }
    }

    /// The program with Gödel number `n`.
    ///
    /// The on-bit positions `q_1 < q_2 < ...` of `n + 1` give one
    /// instruction code per instruction, `c_1 = q_1` and
    /// `c_j = q_j - q_{j-1} - 1`; codes decode through [`decode_instr`].
    pub fn from_index(n: &BigUint) -> ToyProgram {
        let m = n + 1u32;
        let mut codes = Vec::new();
        let mut prev: Option<u64> = None;
        for q in (0..m.bits()).filter(|&q| m.bit(q)) {
            codes.push(match prev {
                None => q,
                Some(p) => q - p - 1,
            });
            prev = Some(q);
        }
        let len = codes.len();
        let instrs = codes.into_iter().map(|c| decode_instr(c, len)).collect();
        ToyProgram { instrs }
    }

    pub fn from_index_u64(n: u64) -> ToyProgram {
        ToyProgram::from_index(&BigUint::from(n))
    }

    /// Inverse of [`ToyProgram::from_index`].
    pub fn index(&self) -> BigUint {
        let len = self.instrs.len();
        let mut m = BigUint::zero();
        let mut pos: u64 = 0;
        for (j, i) in self.instrs.iter().enumerate() {
            let c = encode_instr(*i, len);
            pos = if j == 0 { c } else { pos + c + 1 };
            m.set_bit(pos, true);
        }
        m - BigUint::one()
    }

    pub fn index_u64(&self) -> Option<u64> {
        self.index().to_u64()
    }
}

/// Code 0 is `HALT`; code `c >= 1` has `q = c - 1`, with even `q` giving
/// `INC q/2` and odd `q` giving `DECJZ r t` where `(q - 1)/2 = r·len + t`.
pub fn decode_instr(code: u64, len: usize) -> Instr {
    if code == 0 {
        return Instr::Halt;
    }
    let q = code - 1;
    if q % 2 == 0 {
        Instr::Inc((q / 2) as usize)
    } else {
        let k = (q - 1) / 2;
        let len = len as u64;
        Instr::DecJz((k / len) as usize, (k % len) as usize)
    }
}

pub fn encode_instr(i: Instr, len: usize) -> u64 {
    match i {
        Instr::Halt => 0,
        Instr::Inc(r) => 2 * r as u64 + 1,
        Instr::DecJz(r, t) => 2 * (r as u64 * len as u64 + t as u64) + 2,
    }
}

impl fmt::Display for ToyProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instrs {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for ToyProgram {
    type Err = ProgramError;

    /// One instruction per line; blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self, ProgramError> {
        let mut instrs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ProgramError::Parse { line: k + 1, msg };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
            let instr = match parts.as_slice() {
                ["HALT"] => Instr::Halt,
                ["INC", r] => Instr::Inc(num(r)?),
                ["DECJZ", r, t] => Instr::DecJz(num(r)?, num(t)?),
                _ => return Err(err(format!("unrecognized instruction {line:?}"))),
            };
            instrs.push(instr);
        }
        ToyProgram::new(instrs)
    }
}
