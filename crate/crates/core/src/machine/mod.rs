//! A toy register machine standing in for Turing machines: Gödel-numbered
//! programs, step-bounded runs, the dovetailed enumeration of halting
//! computations, certificate checking, and halting oracles.

mod oracle;
mod program;

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

pub use oracle::{Convergence, HaltingOracle, MachineOracle, OracleEntry, OracleError, TableOracle};
pub use program::{decode_instr, encode_instr, Instr, ProgramError, Register, ToyProgram};

/// Program index `e`.
pub type ProgramIndex = u64;

/// A machine snapshot: program counter and every register.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub pc: usize,
    #[serde(serialize_with = "serialize_registers")]
    pub registers: Vec<BigUint>,
}

fn serialize_registers<S: serde::Serializer>(regs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(regs.iter().map(|r| r.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { output: BigUint, steps: u64 },
    Running,
}

impl RunOutcome {
    pub fn output(&self) -> Option<&BigUint> {
        match self {
            RunOutcome::Halted { output, .. } => Some(output),
            RunOutcome::Running => None,
        }
    }
}

/// A program together with its current configuration.
#[derive(Clone, Debug)]
pub struct Machine {
    program: ToyProgram,
    config: Configuration,
    steps: u64,
}

impl Machine {
    /// One-place call: the input goes in register 0.
    pub fn new(program: ToyProgram, input: &BigUint) -> Self {
        Machine::with_registers(program, &[input.clone()])
    }

    /// Two-place call `A(a, b)`: register 0 starts at 0, registers 1 and 2
    /// hold the arguments.
    pub fn two_place(program: ToyProgram, a: &BigUint, b: &BigUint) -> Self {
        Machine::with_registers(program, &[BigUint::zero(), a.clone(), b.clone()])
    }

    fn with_registers(program: ToyProgram, init: &[BigUint]) -> Self {
        let mut registers = vec![BigUint::zero(); program.register_count().max(init.len())];
        registers[..init.len()].clone_from_slice(init);
        Machine {
            program,
            config: Configuration { pc: 0, registers },
            steps: 0,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.config.pc >= self.program.len()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn output(&self) -> &BigUint {
        &self.config.registers[0]
    }

    /// Executes one instruction; returns whether the machine has halted.
    pub fn step(&mut self) -> bool {
        if self.is_halted() {
            return true;
        }
        let c = &mut self.config;
        match self.program.instrs()[c.pc] {
            Instr::Inc(r) => {
                c.registers[r] += 1u32;
                c.pc += 1;
            }
            Instr::DecJz(r, t) => {
                if c.registers[r].is_zero() {
                    c.pc = t;
                } else {
                    c.registers[r] -= 1u32;
                    c.pc += 1;
                }
            }
            Instr::Halt => c.pc = self.program.len(),
        }
        self.steps += 1;
        self.is_halted()
    }

    /// Steps until halted or until `budget` total steps have been used.
    pub fn run_until(&mut self, budget: u64) -> RunOutcome {
        while !self.is_halted() && self.steps < budget {
            self.step();
        }
        self.outcome()
    }

    pub fn outcome(&self) -> RunOutcome {
        if self.is_halted() {
            RunOutcome::Halted {
                output: self.output().clone(),
                steps: self.steps,
            }
        } else {
            RunOutcome::Running
        }
    }
}

/// Runs `program` on `input` for at most `step_budget` steps.
pub fn run(program: &ToyProgram, input: &BigUint, step_budget: u64) -> RunOutcome {
    Machine::new(program.clone(), input).run_until(step_budget)
}

pub fn run_index(e: ProgramIndex, input: u64, step_budget: u64) -> RunOutcome {
    run(&ToyProgram::from_index_u64(e), &BigUint::from(input), step_budget)
}

/// Two-place run `A_e(a, b)` with output in register 0.
pub fn run_two_place(program: &ToyProgram, a: &BigUint, b: &BigUint, step_budget: u64) -> RunOutcome {
    Machine::two_place(program.clone(), a, b).run_until(step_budget)
}

/// Full configuration trace of `program` on `input`, initial through
/// halting, if it halts within `step_budget`.
pub fn trace(program: &ToyProgram, input: &BigUint, step_budget: u64) -> Option<Vec<Configuration>> {
    let mut m = Machine::new(program.clone(), input);
    let mut out = vec![m.configuration().clone()];
    while !m.is_halted() {
        if m.steps() >= step_budget {
            return None;
        }
        m.step();
        out.push(m.configuration().clone());
    }
    Some(out)
}

/// `C_i^(x)`: a halting computation of program `e` on input `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HaltingCertificate {
    pub e: ProgramIndex,
    pub x: u64,
    pub trace: Vec<Configuration>,
}

impl HaltingCertificate {
    pub fn steps(&self) -> u64 {
        self.trace.len() as u64 - 1
    }
}

/// Dovetails all `(e, s)` pairs in diagonal order (`e + s` ascending, then
/// `e` ascending), listing the pairs where program `e` halts on `x` in
/// exactly `s` steps.
///
/// Each program is advanced one step per diagonal, so reaching diagonal `d`
/// costs `O(d^2)` machine steps in total.
#[derive(Clone, Debug)]
pub struct HaltingEnumerator {
    x: u64,
    /// Machines for programs `0..=diagonal`, still running.
    running: Vec<Option<Machine>>,
    found: Vec<(ProgramIndex, u64)>,
    /// Position in `found` by program index.
    position: HashMap<ProgramIndex, usize>,
    next_diagonal: u64,
}

impl HaltingEnumerator {
    pub fn new(x: u64) -> Self {
        HaltingEnumerator {
            x,
            running: Vec::new(),
            found: Vec::new(),
            position: HashMap::new(),
            next_diagonal: 0,
        }
    }

    pub fn input(&self) -> u64 {
        self.x
    }

    /// Diagonals processed so far.
    pub fn diagonals(&self) -> u64 {
        self.next_diagonal
    }

    /// Processes diagonal `d = next_diagonal`: pairs `(e, d - e)` for
    /// `e = 0..=d`.
    pub fn advance(&mut self) {
        let d = self.next_diagonal;
        let input = BigUint::from(self.x);
        self.running
            .push(Some(Machine::new(ToyProgram::from_index_u64(d), &input)));
        for e in 0..=d {
            let slot = &mut self.running[e as usize];
            let Some(m) = slot.as_mut() else { continue };
            // program e now sits at step d - e
            if e < d && m.step() || e == d && m.is_halted() {
                self.position.insert(e, self.found.len());
                self.found.push((e, m.steps()));
                *slot = None;
            }
        }
        self.next_diagonal += 1;
    }

    /// The `i`-th (1-based) halting pair, advancing as needed. Always
    /// terminates since infinitely many programs halt (every all-`HALT`
    /// program does).
    pub fn nth(&mut self, i: usize) -> (ProgramIndex, u64) {
        assert!(i >= 1, "certificates are 1-indexed");
        while self.found.len() < i {
            self.advance();
        }
        self.found[i - 1]
    }

    /// 1-based certificate index of program `e`, exploring at most
    /// `max_diagonals` diagonals.
    pub fn index_of(&mut self, e: ProgramIndex, max_diagonals: u64) -> Option<usize> {
        loop {
            if let Some(&p) = self.position.get(&e) {
                return Some(p + 1);
            }
            if self.next_diagonal >= max_diagonals {
                return None;
            }
            self.advance();
        }
    }

    pub fn certificate(&mut self, i: usize) -> HaltingCertificate {
        let (e, s) = self.nth(i);
        let trace = trace(&ToyProgram::from_index_u64(e), &BigUint::from(self.x), s)
            .expect("enumerated pair halts within its step count");
        HaltingCertificate { e, x: self.x, trace }
    }
}

/// The `i`-th halting computation on input `x` (1-based).
pub fn enumerate_halting_computations(x: u64, i: usize) -> HaltingCertificate {
    HaltingEnumerator::new(x).certificate(i)
}

/// Checks a configuration trace against a fresh simulation of program `e`
/// on `x`, configuration by configuration.
pub fn check_trace(e: ProgramIndex, x: u64, trace: &[Configuration]) -> bool {
    let mut m = Machine::new(ToyProgram::from_index_u64(e), &BigUint::from(x));
    let mut k = 0;
    loop {
        match trace.get(k) {
            Some(c) if c == m.configuration() => {}
            _ => return false,
        }
        if m.is_halted() {
            return k + 1 == trace.len();
        }
        m.step();
        k += 1;
    }
}

/// `P_cert(e, i, x)`: 1 iff `C_i^(x)` is a halting certificate for program
/// `e` on input `x`. Total: the trace is finite.
pub fn p_cert(e: ProgramIndex, i: usize, x: u64) -> bool {
    if i == 0 {
        return false;
    }
    let cert = enumerate_halting_computations(x, i);
    cert.e == e && check_trace(e, x, &cert.trace)
}

/// `c_x(e)` within `max_diagonals` diagonals of the dovetail.
pub fn certificate_index(e: ProgramIndex, x: u64, max_diagonals: u64) -> Option<usize> {
    HaltingEnumerator::new(x).index_of(e, max_diagonals)
}

/// Smallest `s` with program `e` halting on `x` within `s` steps, searched
/// up to `step_budget`.
pub fn halting_time(e: ProgramIndex, x: u64, step_budget: u64) -> Option<u64> {
    match run_index(e, x, step_budget) {
        RunOutcome::Halted { steps, .. } => Some(steps),
        RunOutcome::Running => None,
    }
}

/// Output as a small natural, when it fits.
pub fn output_u64(outcome: &RunOutcome) -> Option<u64> {
    outcome.output().and_then(|v| v.to_u64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(text: &str) -> ToyProgram {
        text.parse().unwrap()
    }

    #[test]
    fn run_examples() {
        let halt = prog("HALT");
        for x in 0..5u32 {
            assert_eq!(
                run(&halt, &BigUint::from(x), 10),
                RunOutcome::Halted { output: BigUint::from(x), steps: 1 }
            );
        }
        let lp = prog("DECJZ 1 0");
        assert_eq!(run(&lp, &BigUint::from(3u32), 1000), RunOutcome::Running);
        let succ = prog("INC 0\nHALT");
        assert_eq!(
            run(&succ, &BigUint::from(5u32), 100),
            RunOutcome::Halted { output: BigUint::from(6u32), steps: 2 }
        );
        assert_eq!(run(&succ, &BigUint::from(5u32), 1), RunOutcome::Running);
    }

    #[test]
    fn padding_preserves_behavior() {
        for n in 0..300u64 {
            let p = ToyProgram::from_index_u64(n);
            let q = p.padded();
            assert_ne!(p, q);
            assert_ne!(p.index(), q.index());
            for x in 0..=5u32 {
                let a = run(&p, &BigUint::from(x), 200);
                let b = run(&q, &BigUint::from(x), 201);
                assert_eq!(a.output(), b.output(), "program {n} input {x}");
            }
        }
    }

    /// Independent count of the diagonal order: walk `(e, s)` pairs directly.
    fn brute_force_pairs(x: u64, count: usize) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut d = 0u64;
        while out.len() < count {
            for e in 0..=d {
                let s = d - e;
                if halting_time(e, x, s) == Some(s) {
                    out.push((e, s));
                }
            }
            d += 1;
        }
        out.truncate(count);
        out
    }

    #[test]
    fn dovetail_matches_direct_diagonal_walk() {
        for x in 0..3u64 {
            let mut en = HaltingEnumerator::new(x);
            let expect = brute_force_pairs(x, 40);
            for (i, pair) in expect.iter().enumerate() {
                assert_eq!(en.nth(i + 1), *pair);
            }
        }
    }

    #[test]
    fn first_certificate_is_earliest_pair() {
        let c = enumerate_halting_computations(0, 1);
        // program 0 is HALT: halts on every input in one step, diagonal 1
        assert_eq!((c.e, c.steps()), (0, 1));
        assert!(p_cert(c.e, 1, 0));
        assert!(!p_cert(c.e, 0, 0));
    }

    #[test]
    fn certificates_are_distinct() {
        let mut en = HaltingEnumerator::new(1);
        let mut seen = std::collections::HashSet::new();
        for i in 1..=50 {
            let c = en.certificate(i);
            assert!(seen.insert((c.e, c.trace.clone())));
        }
    }

    #[test]
    fn certificate_index_is_monotone_and_looping_is_unknown() {
        let i = certificate_index(1, 2, 50).unwrap();
        assert_eq!(certificate_index(1, 2, 500), Some(i));
        assert!(p_cert(1, i, 2));
        // DECJZ 0 0 loops on input 0
        assert_eq!(ToyProgram::from_index_u64(3).instrs(), &[Instr::DecJz(0, 0)]);
        assert_eq!(certificate_index(3, 0, 300), None);
    }

    #[test]
    fn tampered_traces_are_rejected() {
        let mut c = enumerate_halting_computations(2, 7);
        assert!(check_trace(c.e, 2, &c.trace));
        let last = c.trace.len() - 1;
        c.trace[last].registers[0] += 1u32;
        assert!(!check_trace(c.e, 2, &c.trace));
        c.trace.pop();
        assert!(!check_trace(c.e, 2, &c.trace));
    }
}
