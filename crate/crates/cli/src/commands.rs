use std::path::PathBuf;

use clap::{Args, ValueEnum};
use conline::batch::{distribution_error, online_to_batch, pac_evaluate, FiniteDistribution, PacConfig};
use conline::game::{duel, realizable_samples, Horizon, Minimax};
use conline::littlestone::{deepest_shattered_tree, ldim, verify_shattered_tree};
use conline::significance::{
    brute_force_aopt_significant, brute_force_opt_significant, is_aopt_significant, is_opt_significant, SignificanceVerdict,
};
use conline::{Instance, Sample};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{Failure, Report};
use crate::source::{learner, parse_sample, sidecar_path, ClassArgs, Loaded};

#[derive(Args, Debug)]
pub struct LdimArgs {
    #[command(flatten)]
    pub class: ClassArgs,
}

pub fn ldim_cmd(args: &LdimArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    let mut r = Report::new("ldim");
    let (d, tree) = deepest_shattered_tree(&src.class);
    r.set("class", src.label.clone());
    r.set("domain_size", src.class.domain_size());
    r.set("hypotheses", src.class.len());
    r.set("ldim", d);
    r.line(&[&"class", &src.label]);
    r.line(&[&"domain_size", &src.class.domain_size()]);
    r.line(&[&"hypotheses", &src.class.len()]);
    r.line(&[&"ldim", &d]);
    if let Some(tree) = tree {
        let ok = verify_shattered_tree(&src.class, &tree, tree.depth).unwrap_or(false);
        r.check("witness tree is shattered", ok, format!("depth {}", tree.depth));
        r.expect_eq("witness depth equals ldim", tree.depth as i32, d);
        r.set(
            "tree",
            json!({"depth": tree.depth, "nodes": tree.nodes.iter().map(|&x| src.name(x)).collect::<Vec<_>>()}),
        );
        r.line(&[&"tree"]);
        r.tsv.push_str(&tree.render(&|x| src.name(x)));
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct DuelArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value = "sol")]
    pub learner: String,
    /// Rounds the adversary may play (default 2·ldim + 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
    /// Per-prediction fuel for the sig learner.
    #[arg(long, default_value_t = 100_000)]
    pub fuel: u64,
}

fn default_horizon(src: &Loaded, horizon: Option<u64>) -> usize {
    horizon.map_or_else(|| 2 * ldim(&src.class).max(0) as usize + 2, |t| t as usize)
}

pub fn duel_cmd(args: &DuelArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    let a = learner(&args.learner, &src, args.fuel, args.class.oracle.steps)?;
    let t = default_horizon(&src, args.horizon);
    let run = duel(&*a, &src.class, Horizon::new(t))?;
    let optimal = Minimax::new().value(&src.class, Some(t));
    let mut r = Report::new("duel");
    r.line(&[&"# learner", &run.learner]);
    r.line(&[&"# horizon", &t]);
    r.line(&[&"# bound", &run.bound.value]);
    r.line(&[&"# optimal_bound", &optimal]);
    r.tsv.push_str(&run.to_tsv(&|x| src.name(x)));
    r.set("learner", run.learner.clone());
    r.set("horizon", t);
    r.set("bound", run.bound.value);
    r.set("optimal_bound", optimal);
    r.set("witness", src.sample_string(&run.bound.witness));
    r.set(
        "steps",
        run.steps
            .iter()
            .map(|s| {
                json!({"t": s.t, "x": src.name(s.x), "prediction": s.prediction as u8, "y": s.y as u8,
                       "mistake": s.mistake, "version_space": s.version_space, "ldim": s.ldim})
            })
            .collect::<Value>(),
    );
    let replayed = run.steps.iter().filter(|s| s.mistake).count();
    r.expect_eq("witness replays to the bound", replayed, run.bound.value);
    Ok(r)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SigKind {
    Aopt,
    Opt,
    Both,
}

#[derive(Args, Debug)]
pub struct SignificanceArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, value_enum, default_value_t = SigKind::Both)]
    pub kind: SigKind,
    /// Sweep every realizable history of at most this length.
    #[arg(long, default_value_t = 1)]
    pub max_prefix: usize,
    /// Also run the exhaustive learner oracle with this horizon and check
    /// agreement (tiny classes only).
    #[arg(long)]
    pub oracle_horizon: Option<usize>,
}

fn label_cell(v: &SignificanceVerdict) -> String {
    v.forced_prediction.map_or("-".into(), |y| (y as u8).to_string())
}

pub fn significance_cmd(args: &SignificanceArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    let mut r = Report::new("significance");
    let kinds: &[SigKind] = match args.kind {
        SigKind::Both => &[SigKind::Aopt, SigKind::Opt],
        SigKind::Aopt => &[SigKind::Aopt],
        SigKind::Opt => &[SigKind::Opt],
    };
    let mut header = vec!["history", "x", "kind", "significant", "forced", "ldim_0", "ldim_1"];
    if args.oracle_horizon.is_some() {
        header.push("oracle");
    }
    r.tsv.push_str(&(header.join("\t") + "\n"));
    let mut rows = Vec::new();
    let mut disagreements = 0usize;
    let mut cells = 0usize;
    for s in realizable_samples(&src.class, args.max_prefix, src.class.domain_size()) {
        for x in src.class.domain().filter(|&x| !s.contains_instance(x)) {
            for &kind in kinds {
                let (name, v) = match kind {
                    SigKind::Aopt => ("aopt", is_aopt_significant(&src.class, &s, x)?),
                    _ => ("opt", is_opt_significant(&src.class, &s, x)?),
                };
                let oracle = match args.oracle_horizon {
                    None => None,
                    Some(t) => Some(match kind {
                        SigKind::Aopt => brute_force_aopt_significant(&src.class, &s, x, t)?,
                        _ => brute_force_opt_significant(&src.class, &s, x, t)?,
                    }),
                };
                cells += 1;
                let history = src.sample_string(&s);
                let (b0, b1) = v.evidence.branches;
                let mut line = format!("{history}\t{}\t{name}\t{}\t{}\t{b0}\t{b1}", src.name(x), v.significant as u8, label_cell(&v));
                let mut row = json!({"history": history, "x": src.name(x), "kind": name, "significant": v.significant,
                                     "forced": v.forced_prediction.map(|y| y as u8), "ldim_0": b0, "ldim_1": b1,
                                     "violation": v.evidence.violation});
                if let Some(o) = &oracle {
                    if (o.significant, o.forced_prediction) != (v.significant, v.forced_prediction) {
                        disagreements += 1;
                    }
                    line.push_str(&format!("\t{}", o.significant as u8));
                    row["oracle_significant"] = json!(o.significant);
                }
                r.tsv.push_str(&line);
                r.tsv.push('\n');
                rows.push(row);
            }
        }
    }
    r.set("class", src.label.clone());
    r.set("verdicts", rows);
    if args.oracle_horizon.is_some() {
        r.check(
            "closed form agrees with the learner oracle",
            disagreements == 0,
            format!("{disagreements} of {cells} verdicts differ"),
        );
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Class file to write; the names sidecar goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn build_cmd(args: &BuildArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    let sidecar = sidecar_path(&args.out);
    std::fs::write(&args.out, src.class.to_json())?;
    std::fs::write(&sidecar, src.names.to_json())?;
    let mut r = Report::new("build");
    r.set("class", src.label.clone());
    r.set("out", args.out.display().to_string());
    r.set("names", sidecar.display().to_string());
    r.set("domain_size", src.class.domain_size());
    r.set("hypotheses", src.class.len());
    r.line(&[&"out", &args.out.display()]);
    r.line(&[&"names", &sidecar.display()]);
    r.line(&[&"domain_size", &src.class.domain_size()]);
    r.line(&[&"hypotheses", &src.class.len()]);
    let reloaded = conline::classes::from_file(&args.out)?;
    r.check("class file round-trips", reloaded == src.class, args.out.display().to_string());
    Ok(r)
}

/// `p/q`, an integer, or a finite decimal.
pub fn parse_rational(text: &str) -> Result<BigRational, String> {
    let text = text.trim();
    if let Some((int, frac)) = text.split_once('.') {
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| format!("{text:?} is not a number"))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(num, den));
    }
    text.parse::<BigRational>().map_err(|_| format!("{text:?} is not a rational"))
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value = "sol")]
    pub learner: String,
    /// Training sample `n:y,n:y,...`; otherwise drawn from --dist.
    #[arg(long, conflicts_with = "dist")]
    pub sample: Option<String>,
    /// JSON finite distribution `[{"x":1,"y":1,"weight":"1/4"}, ...]` over
    /// instance names.
    #[arg(long, required_unless_present = "sample")]
    pub dist: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub fuel: u64,
}

/// A distribution file whose `x` fields are instance names.
fn load_dist(path: &PathBuf, src: &Loaded) -> Result<FiniteDistribution, Failure> {
    let named = FiniteDistribution::from_json(&std::fs::read_to_string(path)?)?;
    let support = named
        .support()
        .iter()
        .map(|(x, y, w)| Ok((src.compact(&BigUint::from(*x))?, *y, w.clone())))
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(FiniteDistribution::new(support)?)
}

pub fn convert_cmd(args: &ConvertArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    let a = learner(&args.learner, &src, args.fuel, args.class.oracle.steps)?;
    let (s, dist) = match (&args.sample, &args.dist) {
        (Some(text), _) => (parse_sample(text, &src)?, None),
        (None, Some(path)) => {
            let d = load_dist(path, &src)?;
            let s = d.draw(&mut ChaCha8Rng::seed_from_u64(args.seed), args.m)?;
            (s, Some(d))
        }
        (None, None) => unreachable!("clap requires --sample or --dist"),
    };
    let b = online_to_batch(&*a, &s, src.class.domain_size())?;
    let mut r = Report::new("convert");
    r.set("learner", a.name());
    r.set("sample", src.sample_string(&s));
    r.line(&[&"# learner", &a.name()]);
    r.line(&[&"# sample", &src.sample_string(&s)]);
    r.line(&[&"x", &"p"]);
    let mut values = serde_json::Map::new();
    let mut off = Vec::new();
    for (&x, p) in b.values() {
        r.line(&[&src.name(x), p]);
        values.insert(src.name(x), json!(p.to_string()));
        if *p != prefix_average(&*a, &s, x)? {
            off.push(src.name(x));
        }
    }
    r.set("hypothesis", Value::Object(values));
    r.check(
        "value is the average of the prefix predictors",
        off.is_empty(),
        format!("{} instances differ {:?}", off.len(), off),
    );
    if let Some(d) = dist {
        let err = distribution_error(&b, &d)?;
        r.line(&[&"# distribution_error", &err]);
        r.set("distribution_error", err.to_string());
    }
    Ok(r)
}

/// `(1/m) Σ_t A(S_t, x)` computed directly.
fn prefix_average(a: &dyn conline::learners::Learner, s: &Sample, x: Instance) -> Result<BigRational, Failure> {
    if s.is_empty() {
        return Ok(BigRational::zero());
    }
    let mut ones = 0i64;
    for t in 0..s.len() {
        if a.predict(&s.prefix(t), x)? {
            ones += 1;
        }
    }
    Ok(BigRational::new(ones.into(), (s.len() as i64).into()))
}

#[derive(Args, Debug)]
pub struct PacArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value = "sol")]
    pub learner: String,
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value = "1/5", value_parser = parse_rational)]
    pub eps: BigRational,
    #[arg(long, default_value = "1/10", value_parser = parse_rational)]
    pub delta: BigRational,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub fuel: u64,
}

pub fn pac_cmd(args: &PacArgs) -> Result<Report, Failure> {
    let src = args.class.load()?;
    if args.eps < BigRational::zero() || args.delta < BigRational::zero() || args.delta > BigRational::one() {
        return Err(Failure::Usage("--eps must be non-negative and --delta within [0, 1]".into()));
    }
    let a = learner(&args.learner, &src, args.fuel, args.class.oracle.steps)?;
    let d = load_dist(&args.dist, &src)?;
    let config = PacConfig {
        eps: args.eps.clone(),
        delta: args.delta.clone(),
        m: args.m,
        trials: args.trials as usize,
        seed: args.seed,
    };
    let report = pac_evaluate(&*a, &src.class, &d, &config)?;
    let mut r = Report::new("pac-eval");
    let rate = report.failure_rate();
    for (k, v) in [
        ("learner", a.name()),
        ("m", report.m.to_string()),
        ("trials", report.trials.to_string()),
        ("class_error", report.class_error.to_string()),
        ("eps", args.eps.to_string()),
        ("delta", report.delta.to_string()),
        ("failures", report.failures.to_string()),
        ("failure_rate", rate.to_string()),
    ] {
        r.line(&[&k, &v]);
        r.set(k, v);
    }
    r.set("errors", report.errors.iter().map(|e| e.to_string()).collect::<Vec<_>>());
    r.check(
        "failure rate within delta",
        report.passed(),
        format!("{} of {} trials exceed L_D(H) + eps", report.failures, report.trials),
    );
    Ok(r)
}
