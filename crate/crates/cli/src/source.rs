use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use conline::classes::{self, EnumerableClass, InstanceNames};
use conline::learners::{
    conservative_learner, learner_b_dr_ext, learner_b_dr_halt, learner_b_rer_halt, sig_predictor, sol, Constant, GapRule,
    Learner, ThresholdsGap, ToyLearner,
};
use conline::littlestone::ldim;
use conline::machine::{HaltingOracle, MachineOracle, TableOracle};
use conline::paperclasses::{build_h_dr_ext, build_h_dr_halt, build_h_halting, build_h_init, build_h_rer_halt, build_h_split};
use conline::{FiniteClass, Instance, Label, LabeledInstance, Sample};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::Failure;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builder {
    Thresholds,
    HdPrime,
    Singletons,
    Random,
    RerHalt,
    Halting,
    DrExt,
    DrHalt,
    Split,
    Init,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    /// TableOracle JSON file (keys "e,x", values {"halts": v} or "diverges").
    #[arg(long, env = "CONLINE_ORACLE", conflicts_with = "machine")]
    pub oracle: Option<PathBuf>,
    /// Use the step-budgeted toy machine instead of a table.
    #[arg(long)]
    pub machine: bool,
    /// Step budget for machine runs and budgeted halting questions.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Diagonal budget for machine certificate searches.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub diagonals: u64,
}

impl OracleArgs {
    /// The oracle file, the toy machine, or the built-in demo table.
    pub fn resolve(&self, e_max: u64) -> Result<Arc<dyn HaltingOracle>, Failure> {
        if self.machine {
            return Ok(Arc::new(MachineOracle::new(self.steps, self.diagonals)));
        }
        match &self.oracle {
            Some(path) => Ok(Arc::new(TableOracle::from_file(path)?)),
            None => Ok(Arc::new(demo_oracle(e_max))),
        }
    }
}

/// Cycles through the four cases by `e mod 4`: `φ_e(0)` diverges;
/// `φ_e(0)` halts and `φ_e(e)` diverges; `φ_e(e) = 1`; `φ_e(e) = 0`.
pub fn demo_oracle(e_max: u64) -> TableOracle {
    let mut o = TableOracle::new();
    for e in 0..=e_max {
        o = match e % 4 {
            0 => o.diverges(e, 0).diverges(e, e),
            1 => o.halts(e, 0, 0).diverges(e, e),
            2 => o.halts(e, 0, 0).halts(e, e, 1),
            _ => o.halts(e, 0, 0).halts(e, e, 0),
        };
    }
    o
}

#[derive(Args, Debug, Clone)]
pub struct ClassArgs {
    /// Construct the class with a named builder.
    #[arg(long, value_enum, required_unless_present = "class", conflicts_with = "class")]
    pub builder: Option<Builder>,
    /// Load a class file written by `build`.
    #[arg(long)]
    pub class: Option<PathBuf>,
    /// Names sidecar for --class (default: <class>.names.json when present).
    #[arg(long, requires = "class")]
    pub names: Option<PathBuf>,
    /// Dimension for thresholds and hd-prime.
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    /// Size for singletons.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Largest program index for rer-halt, halting, dr-ext and dr-halt.
    #[arg(long, default_value_t = 3)]
    pub e_max: u64,
    /// Largest hypothesis index for split.
    #[arg(long, default_value_t = 4)]
    pub i_max: u64,
    /// Step bound for init.
    #[arg(long, default_value_t = 1000)]
    pub s_max: u64,
    /// Largest instance for init.
    #[arg(long, default_value_t = 127)]
    pub x_max: u64,
    /// Domain and row caps for random.
    #[arg(long, default_value_t = 5)]
    pub domain: usize,
    #[arg(long, default_value_t = 12)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub class_seed: u64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

pub struct Loaded {
    pub class: FiniteClass,
    pub names: InstanceNames,
    pub oracle: Arc<dyn HaltingOracle>,
    pub label: String,
}

impl Loaded {
    pub fn name(&self, x: Instance) -> String {
        self.names.display(x)
    }

    pub fn compact(&self, n: &BigUint) -> Result<Instance, Failure> {
        self.names
            .compact(n)
            .ok_or_else(|| Failure::Usage(format!("{n} is not an instance of the class")))
    }

    pub fn sample_string(&self, s: &Sample) -> String {
        let items: Vec<String> = s.iter().map(|it| format!("({},{})", self.name(it.x), it.y as u8)).collect();
        format!("({})", items.join(","))
    }
}

impl ClassArgs {
    pub fn load(&self) -> Result<Loaded, Failure> {
        let oracle = self.oracle.resolve(self.e_max)?;
        if let Some(path) = &self.class {
            let class = classes::from_file(path)?;
            let names = match self.names.clone().or_else(|| default_sidecar(path)) {
                Some(p) => InstanceNames::from_json(&std::fs::read_to_string(&p)?).map_err(Failure::Runtime)?,
                None => InstanceNames::identity(class.domain_size()),
            };
            if names.len() != class.domain_size() {
                return Err(Failure::Usage(format!(
                    "names file has {} entries for a domain of {}",
                    names.len(),
                    class.domain_size()
                )));
            }
            return Ok(Loaded { class, names, oracle, label: path.display().to_string() });
        }
        let builder = self.builder.expect("clap requires --builder or --class");
        let steps = self.oracle.steps;
        let (class, names) = match builder {
            Builder::Thresholds => one_based(classes::thresholds(self.d)?),
            Builder::HdPrime => one_based(classes::hd_prime(self.d)?),
            Builder::Singletons => identity(classes::singletons(self.n)),
            Builder::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.class_seed);
                identity(classes::random_class(&mut rng, self.domain, self.rows))
            }
            Builder::RerHalt => identity(build_h_rer_halt(oracle.as_ref(), self.e_max, steps)?),
            Builder::Halting => identity(build_h_halting(oracle.as_ref(), self.e_max, steps)?),
            Builder::DrExt => {
                let c = build_h_dr_ext(oracle.as_ref(), self.e_max, steps)?;
                (c.class, c.names)
            }
            Builder::DrHalt => {
                let c = build_h_dr_halt(oracle.as_ref(), self.e_max, steps)?;
                (c.class, c.names)
            }
            Builder::Split => identity(build_h_split(steps, self.i_max)?.truncation()?),
            Builder::Init => identity(build_h_init(self.s_max, self.x_max)?.class),
        };
        let label = builder.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        Ok(Loaded { class, names, oracle, label })
    }
}

/// Threshold-style classes name their instances `1..=n`.
fn one_based(class: FiniteClass) -> (FiniteClass, InstanceNames) {
    let names = InstanceNames::offset(class.domain_size(), 1);
    (class, names)
}

fn identity(class: FiniteClass) -> (FiniteClass, InstanceNames) {
    let names = InstanceNames::identity(class.domain_size());
    (class, names)
}

pub fn sidecar_path(class_path: &Path) -> PathBuf {
    class_path.with_extension("names.json")
}

fn default_sidecar(class_path: &Path) -> Option<PathBuf> {
    Some(sidecar_path(class_path)).filter(|p| p.exists())
}

pub const LEARNER_NAMES: &str = "sol, sig, conservative, b-rer-halt, b-dr-ext, b-dr-halt, const0, const1, hd-gap, hd-gap-whole, toy:<index>";

/// Resolves a registry name against a loaded class.
pub fn learner(name: &str, src: &Loaded, fuel: u64, steps: u64) -> Result<Box<dyn Learner>, Failure> {
    let unknown = || Failure::Usage(format!("unknown learner {name:?}; expected one of {LEARNER_NAMES}"));
    Ok(match name {
        "sol" => Box::new(sol(src.class.clone())),
        "sig" => Box::new(sig_predictor(EnumerableClass::from_finite(&src.class), ldim(&src.class), fuel)),
        "conservative" => Box::new(conservative_learner()),
        "const0" => Box::new(Constant(false)),
        "const1" => Box::new(Constant(true)),
        "b-rer-halt" => Box::new(learner_b_rer_halt(src.names.clone())),
        "b-dr-ext" => Box::new(learner_b_dr_ext(Arc::clone(&src.oracle), src.names.clone())),
        "b-dr-halt" => Box::new(learner_b_dr_halt(Arc::clone(&src.oracle), src.names.clone())),
        "hd-gap" | "hd-gap-whole" => {
            let rule = if name == "hd-gap" { GapRule::WithinBudget } else { GapRule::WholeHistory };
            let d = (1..=6)
                .find(|&d| classes::hd_prime(d).is_ok_and(|h| h == src.class))
                .ok_or_else(|| Failure::Usage(format!("{name} needs an hd-prime class")))?;
            Box::new(ThresholdsGap::for_hd_prime_with(d, rule)?)
        }
        _ => {
            let index = name.strip_prefix("toy:").ok_or_else(unknown)?;
            let e = index.parse::<u64>().map_err(|_| unknown())?;
            Box::new(ToyLearner::from_index(e, steps))
        }
    })
}

/// Parses `n:y,n:y,...` with instances given as naturals.
pub fn parse_sample(text: &str, src: &Loaded) -> Result<Sample, Failure> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Sample::empty());
    }
    text.split(',')
        .map(|item| {
            let (n, y) = item
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("sample item {item:?} is not n:y")))?;
            let n: BigUint = n.trim().parse().map_err(|_| Failure::Usage(format!("{n:?} is not a natural")))?;
            let y: Label = match y.trim() {
                "0" => false,
                "1" => true,
                other => return Err(Failure::Usage(format!("label {other:?} is not 0 or 1"))),
            };
            Ok(LabeledInstance::new(src.compact(&n)?, y))
        })
        .collect()
}
