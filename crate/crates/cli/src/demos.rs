use std::collections::BTreeSet;
use std::sync::Arc;

use clap::Args;
use conline::classes::{hd_prime, InstanceNames};
use conline::encoding::CanonicalIndex;
use conline::game::{is_anytime_optimal, is_optimal, mistake_bound_stable, mistakes_on_sample, Horizon, Stabilized};
use conline::learners::{learner_b_dr_ext, learner_b_dr_halt, learner_b_rer_halt, sol, Learner, ThresholdsGap, ToyLearner};
use conline::littlestone::{ldim, verify_shattered_tree};
use conline::machine::TableOracle;
use conline::paperclasses::{
    build_h_dr_ext, build_h_dr_halt, build_h_init, build_h_rer_halt, build_h_split, dr_decider_h_dr_ext, find_thresholds,
    forcing_sample, prime_power_instance, rer_halt_block, DrBlock, NamedClass,
};
use conline::significance::{is_aopt_significant, is_opt_significant, SigError, SignificanceVerdict};
use conline::{FiniteClass, LabeledInstance, Sample};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::json;

use crate::report::{Failure, Report};
use crate::source::OracleArgs;

/// Horizon for the B learners: every run that forces two mistakes fits,
/// and the re-check two rounds later confirms nothing more is possible.
const B_HORIZON: usize = 4;

fn stable_bound<L: Learner + ?Sized>(r: &mut Report, name: &str, a: &L, h: &FiniteClass, t: usize) -> Result<Stabilized, Failure> {
    let b = mistake_bound_stable(a, h, Horizon::new(t))?;
    r.check(
        format!("{name} bound is stable"),
        b.is_stable(),
        format!("{} at horizon {t}, {} at {}", b.at.value, b.recheck.value, t + 2),
    );
    Ok(b)
}

#[derive(Args, Debug)]
pub struct HdPrimeArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=3))]
    pub d: u32,
}

pub fn demo_hdprime(args: &HdPrimeArgs) -> Result<Report, Failure> {
    let d = args.d;
    let h = hd_prime(d)?;
    let names = InstanceNames::offset(h.domain_size(), 1);
    let show = |s: &Sample| {
        let items: Vec<String> = s.iter().map(|it| format!("({},{})", names.display(it.x), it.y as u8)).collect();
        format!("({})", items.join(","))
    };
    let base = 1u64 << d;
    let e_sample: Sample = (base..base + d as u64 - 1).map(|x| LabeledInstance::new(x, true)).collect();
    let gap = ThresholdsGap::for_hd_prime(d)?;
    let sol = sol(h.clone());
    let t = 2 * d as usize + 2;
    let mut r = Report::new("demo-hdprime");
    r.line(&[&"learner", &"e_sample_mistakes", &"bound", &"optimal_bound"]);
    let optimal = conline::game::optimal_mistake_bound(&h);
    let mut rows = Vec::new();
    for (a, want_e) in [(&gap as &dyn Learner, d as usize - 1), (&sol, 1)] {
        let on_e = mistakes_on_sample(a, &e_sample)?;
        let bound = stable_bound(&mut r, &a.name(), a, &h, t)?;
        r.line(&[&a.name(), &on_e, &bound.at.value, &optimal]);
        rows.push(json!({"learner": a.name(), "e_sample_mistakes": on_e, "bound": bound.at.value}));
        r.expect_eq(format!("{} mistakes on {}", a.name(), show(&e_sample)), on_e, want_e);
        r.expect_eq(format!("{} bound", a.name()), bound.at.value, d as usize);
    }
    r.expect_eq("optimal bound", optimal, d as usize);
    let verdict = is_optimal(&gap, &h, Horizon::new(t))?;
    r.expect_eq("hd-gap is optimal", verdict.optimal, true);
    r.set("d", d);
    r.set("e_sample", show(&e_sample));
    r.set("optimal_bound", optimal);
    r.set("rows", rows);
    // with d = 2 the gap learner has no deferred mistake to spend
    if d >= 3 {
        let any = is_anytime_optimal(&gap, &h, Horizon::new(t), 1)?;
        let target = Sample::from_pairs(&[(base, 1)]);
        let hit = any.counterexamples.iter().find(|c| c.prefix == target);
        r.expect_eq("hd-gap is anytime optimal", any.anytime_optimal, false);
        r.check(
            format!("a-optimality witness {}", show(&target)),
            hit.is_some(),
            hit.map_or("prefix not among the counterexamples".into(), |c| {
                format!("after it hd-gap errs {} where {} is optimal", c.learner_bound, c.optimal_bound)
            }),
        );
        r.line(&[&"# anytime_optimal", &(any.anytime_optimal as u8)]);
        r.line(&[&"# witness", &show(&target)]);
        r.set("anytime_optimal", any.anytime_optimal);
        r.set(
            "counterexamples",
            any.counterexamples.iter().map(|c| show(&c.prefix)).collect::<Vec<_>>(),
        );
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct RerHaltArgs {
    #[arg(long, default_value_t = 8)]
    pub e_max: u64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

fn forced(v: &SignificanceVerdict) -> String {
    v.forced_prediction.map_or("-".into(), |y| (y as u8).to_string())
}

pub fn demo_rer_halt(args: &RerHaltArgs) -> Result<Report, Failure> {
    let oracle = args.oracle.resolve(args.e_max)?;
    let steps = args.oracle.steps;
    let h = build_h_rer_halt(oracle.as_ref(), args.e_max, steps)?;
    let mut r = Report::new("demo-rer-halt");
    r.line(&[&"e", &"halts", &"history", &"x", &"aopt_significant", &"forced"]);
    let mut rows = Vec::new();
    let mut any_halts = false;
    for e in 0..=args.e_max {
        let halts = oracle.halts_within(e, e, steps).is_some();
        any_halts |= halts;
        let [a, b, _] = rer_halt_block(e);
        let s = Sample::from_pairs(&[(a, 1)]);
        let v = is_aopt_significant(&h, &s, b)?;
        r.line(&[&e, &(halts as u8), &s, &b, &(v.significant as u8), &forced(&v)]);
        rows.push(json!({"e": e, "halts": halts, "significant": v.significant, "forced": v.forced_prediction.map(|y| y as u8)}));
        r.expect_eq(format!("forced prediction at e = {e} is the halting bit"), v.forced_prediction, Some(halts));
    }
    let b = learner_b_rer_halt(InstanceNames::identity(h.domain_size()));
    let bound = stable_bound(&mut r, "b-rer-halt", &b, &h, B_HORIZON)?;
    let dim = ldim(&h);
    r.line(&[&"# ldim", &dim]);
    r.line(&[&"# b-rer-halt bound", &bound.at.value]);
    r.line(&[&"# witness", &bound.at.witness]);
    r.expect_eq("b-rer-halt bound equals ldim", bound.at.value as i32, dim);
    if any_halts {
        r.expect_eq("ldim with a halting block", dim, 2);
    }
    r.set("e_max", args.e_max);
    r.set("ldim", dim);
    r.set("b_bound", bound.at.value);
    r.set("witness", bound.at.witness.to_string());
    r.set("rows", rows);
    Ok(r)
}

#[derive(Args, Debug)]
pub struct DrArgs {
    #[arg(long, default_value_t = 3)]
    pub e_max: u64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

fn show_named(c: &NamedClass, s: &Sample) -> String {
    let items: Vec<String> = s.iter().map(|it| format!("({},{})", c.names.display(it.x), it.y as u8)).collect();
    format!("({})", items.join(","))
}

/// `S^e = ((2^e, 1))` and `x(e) = 2^e 3^{c_0(e)}`, when `c_0(e)` exists.
fn significance_input(c: &NamedClass, block: &DrBlock) -> Option<(Sample, conline::Instance)> {
    let s = c.sample(&[(block.base(), true)])?;
    let x = c.instance(&block.with_c0(3)?)?;
    Some((s, x))
}

/// Nearby sets that are not supports: dropped elements, shifted
/// exponents, swapped primes and foreign factors.
pub fn perturbations(supports: &[BTreeSet<BigUint>], want: usize) -> Vec<BTreeSet<BigUint>> {
    let members: BTreeSet<&BTreeSet<BigUint>> = supports.iter().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |s: BTreeSet<BigUint>, out: &mut Vec<BTreeSet<BigUint>>| {
        if out.len() < want && !members.contains(&s) && seen.insert(s.clone()) {
            out.push(s);
        }
    };
    for support in supports {
        let e = support.iter().map(|n| n.trailing_zeros().unwrap_or(0)).min().unwrap_or(0);
        for n in support {
            let mut s = support.clone();
            s.remove(n);
            push(s, &mut out);
        }
        for n in support.iter().filter(|n| n.count_ones() > 1) {
            let odd = n >> e as usize;
            for (y, i) in [3u32, 5, 7, 11, 13].into_iter().filter_map(|y| exponent(&odd, y).map(|i| (y, i))) {
                for k in 1..=10 {
                    let mut s = support.clone();
                    s.remove(n);
                    s.insert(prime_power_instance(e, y, i + k));
                    push(s, &mut out);
                }
                for y2 in [3u32, 5, 7, 11, 13].into_iter().filter(|&y2| y2 != y) {
                    let mut s = support.clone();
                    s.remove(n);
                    s.insert(prime_power_instance(e, y2, i));
                    push(s, &mut out);
                }
            }
        }
        for j in 1..=5 {
            let mut s = support.clone();
            s.insert(prime_power_instance(e, 17, j));
            push(s, &mut out);
        }
    }
    out
}

/// `i` with `n = y^i`, `i > 0`.
fn exponent(n: &BigUint, y: u32) -> Option<u64> {
    let y = BigUint::from(y);
    let mut rest = n.clone();
    let mut i = 0;
    while rest > BigUint::from(1u32) && (&rest % &y) == BigUint::from(0u32) {
        rest /= &y;
        i += 1;
    }
    (i > 0 && rest == BigUint::from(1u32)).then_some(i)
}

/// One row of the four-case significance table for block 2. Blocks 1 and 3
/// have `φ_e(e)` in {0, 1}, so labelling `2^2` with 0 still leaves a class
/// of dimension 2, as the remaining blocks of the full class do.
fn b3_case(label: &str, subject: TableOracle, want: Option<u8>, r: &mut Report, steps: u64) -> Result<serde_json::Value, Failure> {
    let oracle = subject.halts(1, 0, 0).halts(1, 1, 1).halts(3, 0, 0).halts(3, 3, 0);
    let c = build_h_dr_ext(&oracle, 3, steps)?;
    let block = DrBlock::query(&oracle, 2, Some(steps))?;
    let (significant, forced_label, input) = match significance_input(&c, &block) {
        None => (false, None, "x(2) undefined".to_string()),
        Some((s, x)) => match is_opt_significant(&c.class, &s, x) {
            Err(SigError::Unrealizable(_)) => (false, None, format!("{} unrealizable", show_named(&c, &s))),
            Err(e) => return Err(e.into()),
            Ok(v) => (v.significant, v.forced_prediction.map(|y| y as u8), format!("{} | {}", show_named(&c, &s), c.names.display(x))),
        },
    };
    r.line(&[&label, &input, &(significant as u8), &forced_label.map_or("-".into(), |y| y.to_string())]);
    r.expect_eq(format!("case {label}"), forced_label, want);
    r.expect_eq(format!("case {label} significant"), significant, want.is_some());
    Ok(json!({"case": label, "input": input, "significant": significant, "forced": forced_label}))
}

pub fn demo_dr_ext(args: &DrArgs) -> Result<Report, Failure> {
    let oracle = args.oracle.resolve(args.e_max)?;
    let steps = args.oracle.steps;
    let c = build_h_dr_ext(oracle.as_ref(), args.e_max, steps)?;
    let mut r = Report::new("demo-dr-ext");
    let dim = ldim(&c.class);
    let mut with_bit = false;
    for e in 0..=args.e_max {
        let block = DrBlock::query(oracle.as_ref(), e, Some(steps))?;
        with_bit |= block.value.as_ref().and_then(|v| v.to_u8()).is_some_and(|b| b <= 1);
    }
    r.line(&[&"# hypotheses", &c.class.len()]);
    r.line(&[&"# ldim", &dim]);
    r.check("ldim at most 2", dim <= 2, format!("ldim {dim}"));
    if with_bit {
        r.expect_eq("ldim with a block whose diagonal value is 0 or 1", dim, 2);
    }
    let members = c.canonical_indices();
    let accepted = members.iter().filter(|y| dr_decider_h_dr_ext(oracle.as_ref(), y)).count();
    r.expect_eq("decider accepts every member", accepted, members.len());
    let others = perturbations(&c.supports, 100);
    let rejected = others
        .iter()
        .filter(|s| !dr_decider_h_dr_ext(oracle.as_ref(), &CanonicalIndex::of_set(s.iter().cloned())))
        .count();
    r.line(&[&"# decider", &format!("{accepted}/{} members accepted, {rejected}/{} perturbations rejected", members.len(), others.len())]);
    r.expect_eq("perturbed non-members", others.len(), 100);
    r.expect_eq("decider rejects every perturbation", rejected, others.len());
    let b = learner_b_dr_ext(Arc::clone(&oracle), c.names.clone());
    let bound = stable_bound(&mut r, "b-dr-ext", &b, &c.class, B_HORIZON)?;
    r.line(&[&"# b-dr-ext bound", &bound.at.value]);
    r.check("b-dr-ext bound at most 2", bound.at.value <= 2, format!("bound {}", bound.at.value));
    r.line(&[&"case", &"input", &"significant", &"forced"]);
    let table = vec![
        b3_case("0 diverges", TableOracle::new(), None, &mut r, steps)?,
        b3_case("0 halts, e diverges", TableOracle::new().halts(2, 0, 0), None, &mut r, steps)?,
        b3_case("0 halts, e gives 1", TableOracle::new().halts(2, 0, 0).halts(2, 2, 1), Some(0), &mut r, steps)?,
        b3_case("0 halts, e gives 0", TableOracle::new().halts(2, 0, 0).halts(2, 2, 0), Some(1), &mut r, steps)?,
        b3_case("0 halts, e gives 2", TableOracle::new().halts(2, 0, 0).halts(2, 2, 2), None, &mut r, steps)?,
    ];
    r.set("e_max", args.e_max);
    r.set("ldim", dim);
    r.set("members", members.iter().map(|y| y.to_string()).collect::<Vec<_>>());
    r.set("perturbations_rejected", rejected);
    r.set("b_bound", bound.at.value);
    r.set("cases", table);
    Ok(r)
}

pub fn demo_dr_halt(args: &DrArgs) -> Result<Report, Failure> {
    let oracle = args.oracle.resolve(args.e_max)?;
    let steps = args.oracle.steps;
    let c = build_h_dr_halt(oracle.as_ref(), args.e_max, steps)?;
    let mut r = Report::new("demo-dr-halt");
    let dim = ldim(&c.class);
    r.line(&[&"# hypotheses", &c.class.len()]);
    r.line(&[&"# ldim", &dim]);
    let b = learner_b_dr_halt(Arc::clone(&oracle), c.names.clone());
    let bound = stable_bound(&mut r, "b-dr-halt", &b, &c.class, B_HORIZON)?;
    r.line(&[&"# b-dr-halt bound", &bound.at.value]);
    r.check("b-dr-halt bound at most 2", bound.at.value <= 2, format!("bound {}", bound.at.value));
    r.expect_eq("b-dr-halt bound equals ldim", bound.at.value as i32, dim);
    r.line(&[&"e", &"e_halts", &"input", &"aopt_significant", &"forced"]);
    let mut rows = Vec::new();
    for e in 0..=args.e_max {
        let block = DrBlock::query(oracle.as_ref(), e, Some(steps))?;
        let Some((s, x)) = significance_input(&c, &block) else {
            r.line(&[&e, &"-", &"x(e) undefined", &"-", &"-"]);
            continue;
        };
        let halts = block.value.is_some();
        let v = is_aopt_significant(&c.class, &s, x)?;
        let input = format!("{} | {}", show_named(&c, &s), c.names.display(x));
        r.line(&[&e, &(halts as u8), &input, &(v.significant as u8), &forced(&v)]);
        r.expect_eq(format!("forced prediction at e = {e}"), v.forced_prediction, Some(!halts));
        rows.push(json!({"e": e, "e_halts": halts, "input": input, "forced": v.forced_prediction.map(|y| y as u8)}));
    }
    r.set("e_max", args.e_max);
    r.set("ldim", dim);
    r.set("b_bound", bound.at.value);
    r.set("rows", rows);
    Ok(r)
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Toy program index of the learner to defeat.
    #[arg(long, default_value_t = 0)]
    pub e: u64,
    /// Forcing block parameter: the sample has M + 1 instances.
    #[arg(long = "M", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(0..=7))]
    pub i_max: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
}

pub fn demo_split(args: &SplitArgs) -> Result<Report, Failure> {
    let a = ToyLearner::from_index(args.e, args.steps);
    let s = forcing_sample(args.e, args.m, args.steps);
    let mut r = Report::new("demo-split");
    r.line(&[&"t", &"n", &"prediction", &"y"]);
    let mut predictions = Vec::new();
    for (t, it) in s.iter().enumerate() {
        let p = a.predict(&s.prefix(t), it.x)?;
        r.line(&[&(t + 1), &it.x, &(p as u8), &(it.y as u8)]);
        predictions.push(p as u8);
    }
    let mistakes = mistakes_on_sample(&a, &s)?;
    r.line(&[&"# mistakes", &mistakes]);
    r.expect_eq(format!("toy:{} mistakes on the forcing sample", args.e), mistakes as u64, args.m + 1);
    let split = build_h_split(args.steps, args.i_max)?;
    let dim = ldim(&split.truncation()?);
    r.line(&[&"# split_ldim", &dim]);
    r.line(&[&"# split_exhausted", &split.exhausted.len()]);
    r.expect_eq("split truncation ldim", dim, 1);
    r.set("e", args.e);
    r.set("M", args.m);
    r.set("sample", s.to_string());
    r.set("predictions", predictions);
    r.set("mistakes", mistakes);
    r.set("split_ldim", dim);
    r.set("split_exhausted", split.exhausted.clone());
    Ok(r)
}

#[derive(Args, Debug)]
pub struct InitArgs {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=16))]
    pub k: u64,
    #[arg(long, default_value_t = 1000)]
    pub s_max: u64,
    #[arg(long, default_value_t = 127, value_parser = clap::value_parser!(u64).range(0..=127))]
    pub x_max: u64,
}

pub fn demo_init(args: &InitArgs) -> Result<Report, Failure> {
    let h = build_h_init(args.s_max, args.x_max)?;
    let mut r = Report::new("demo-init");
    r.set("s_max", args.s_max);
    r.set("x_max", args.x_max);
    r.set("hypotheses", h.class.len());
    r.line(&[&"# hypotheses", &h.class.len()]);
    let Some(found) = find_thresholds(&h.class, args.k as usize, args.x_max) else {
        r.check(format!("{} thresholds", args.k), false, "none found".to_string());
        return Ok(r);
    };
    r.line(&[&"instance", &"halting_time"]);
    for &x in &found.instances {
        let time = h.times[x as usize].map_or("-".into(), |t| t.to_string());
        r.line(&[&x, &time]);
    }
    let tree = found.shattered_tree();
    let sub = found.subclass(h.class.domain_size())?;
    let verified = verify_shattered_tree(&sub, &tree, tree.depth).unwrap_or(false);
    let dim = ldim(&sub);
    r.check("threshold pattern holds", found.holds(), format!("{:?}", found.instances));
    r.check("tree shatters the subclass", verified, format!("depth {}", tree.depth));
    r.check("subclass ldim at least the tree depth", dim >= tree.depth as i32, format!("ldim {dim}"));
    r.line(&[&"# tree_depth", &tree.depth]);
    r.line(&[&"# subclass_ldim", &dim]);
    r.tsv.push_str(&tree.to_string());
    r.set("instances", found.instances.clone());
    r.set("tree", json!({"depth": tree.depth, "nodes": tree.nodes}));
    r.set("subclass_ldim", dim);
    Ok(r)
}
