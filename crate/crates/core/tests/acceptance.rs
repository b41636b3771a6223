//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p conline-core --test acceptance`.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use conline::batch::{online_to_batch, pac_evaluate, FiniteDistribution, PacConfig};
use conline::classes::{hd_prime, random_class, thresholds, InstanceNames};
use conline::encoding::{
    canonical_index, decode_canonical, decode_sample, decode_sequence, encode_sample, encode_sequence, CanonicalIndex,
};
use conline::game::{
    is_anytime_optimal, mistake_bound, mistake_bound_stable, mistakes_on_sample, optimal_mistake_bound,
    optimal_post_sample_bound, post_sample_mistake_bound, realizable_samples, Horizon,
};
use conline::learners::{learner_b_rer_halt, sol, Learner, ThresholdsGap, ToyLearner};
use conline::littlestone::{deepest_shattered_tree, find_shattered_tree, ldim, verify_shattered_tree};
use conline::machine::TableOracle;
use conline::paperclasses::{
    build_h_dr_ext, build_h_init, build_h_rer_halt, build_h_split, dr_decider_h_dr_ext, find_thresholds, forcing_sample,
    prime_power_instance, rer_halt_block, DrBlock,
};
use conline::significance::{
    brute_force_aopt_significant, brute_force_opt_significant, is_aopt_significant, is_opt_significant, lemma_a1_check,
};
use conline::{FiniteClass, Instance, LabeledInstance, Sample};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn seeded_classes(n: u64, domain: usize, rows: usize) -> Vec<FiniteClass> {
    (0..n)
        .map(|seed| random_class(&mut ChaCha8Rng::seed_from_u64(seed), domain, rows))
        .collect()
}

fn splits(h: &FiniteClass) -> impl Iterator<Item = (FiniteClass, FiniteClass)> + '_ {
    h.domain().filter_map(|x| {
        let (zero, one) = (h.constrain(x, false), h.constrain(x, true));
        (!zero.is_empty() && !one.is_empty()).then_some((zero, one))
    })
}

/// Littlestone dimension straight from the tree recursion.
fn naive_ldim(h: &FiniteClass) -> i32 {
    if h.is_empty() {
        return -1;
    }
    splits(h).map(|(z, o)| 1 + naive_ldim(&z).min(naive_ldim(&o))).max().unwrap_or(0)
}

/// Minimax mistake count over all learners, against fresh instances.
fn naive_minimax(h: &FiniteClass) -> usize {
    splits(h)
        .map(|(z, o)| {
            let (z, o) = (naive_minimax(&z), naive_minimax(&o));
            (z.max(o + 1)).min((z + 1).max(o))
        })
        .max()
        .unwrap_or(0)
}

/// Mistakes an adversary forces on `a` within `left` fresh rounds.
fn naive_bound(a: &dyn Learner, h: &FiniteClass, history: &mut Sample, left: usize) -> usize {
    if left == 0 {
        return 0;
    }
    let vs = h.restrict(history);
    let mut best = 0;
    for x in h.domain() {
        if history.contains_instance(x) {
            continue;
        }
        let p = a.predict(history, x).expect("learner answers");
        for y in [false, true] {
            if vs.constrain(x, y).is_empty() {
                continue;
            }
            history.push(LabeledInstance::new(x, y));
            best = best.max((p != y) as usize + naive_bound(a, h, history, left - 1));
            history.pop();
        }
    }
    best
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed < limit {
        Ok(String::new())
    } else {
        Err(format!("took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn dimension_equivalence() -> Outcome {
    let start = Instant::now();
    for (i, h) in seeded_classes(50, 5, 12).iter().enumerate() {
        let d = ldim(h);
        let (depth, tree) = deepest_shattered_tree(h);
        ensure!(d == naive_ldim(h), "class {i}: ldim {d}, tree recursion {}", naive_ldim(h));
        ensure!(optimal_mistake_bound(h) as i32 == d, "class {i}: M(H) {} vs ldim {d}", optimal_mistake_bound(h));
        ensure!(naive_minimax(h) as i32 == d, "class {i}: naive minimax {}", naive_minimax(h));
        ensure!(depth == d, "class {i}: deepest tree {depth} vs ldim {d}");
        if d > 0 {
            let tree = tree.ok_or(format!("class {i}: no tree at depth {d}"))?;
            ensure!(verify_shattered_tree(h, &tree, d as u32) == Ok(true), "class {i}: tree does not verify");
        }
        ensure!(find_shattered_tree(h, (d + 1) as u32).is_none(), "class {i}: tree deeper than ldim");
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok("50 classes, M(H) = ldim = deepest verified tree".into())
}

fn sol_optimality() -> Outcome {
    let start = Instant::now();
    for (i, h) in seeded_classes(50, 5, 12).iter().enumerate() {
        let d = ldim(h).max(0) as usize;
        let b = mistake_bound_stable(&sol(h.clone()), h, Horizon::new(2 * d + 2)).map_err(|e| e.to_string())?;
        ensure!(b.is_stable(), "class {i}: {} then {}", b.at.value, b.recheck.value);
        ensure!(b.at.value == d, "class {i}: SOL bound {} vs ldim {d}", b.at.value);
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok("50 classes, stable at 2·ldim+2 and 2·ldim+4".into())
}

fn post_sample_bounds() -> Outcome {
    let mut checked = 0;
    for (i, h) in seeded_classes(20, 5, 12).iter().enumerate() {
        let a = sol(h.clone());
        for s in realizable_samples(h, 3, h.domain_size()) {
            let want = ldim(&h.restrict(&s)) as usize;
            let opt = optimal_post_sample_bound(h, &s).map_err(|e| e.to_string())?;
            let got = post_sample_mistake_bound(&a, h, &s, Horizon::new(h.domain_size())).map_err(|e| e.to_string())?;
            ensure!(opt == want, "class {i}, S = {s}: M^S(H) {opt} vs ldim(H_S) {want}");
            ensure!(got.value == want, "class {i}, S = {s}: SOL after S {} vs {want}", got.value);
            checked += 1;
        }
    }
    Ok(format!("{checked} realizable samples with |S| <= 3"))
}

fn gap_table() -> Outcome {
    let start = Instant::now();
    let h = hd_prime(3).map_err(|e| e.to_string())?;
    let gap = ThresholdsGap::for_hd_prime(3).map_err(|e| e.to_string())?;
    let sol = sol(h.clone());
    // instances are stored one below their names: (9,1) is stored (8,1)
    let e_sample = Sample::from_pairs(&[(8, 1), (9, 1)]);
    let on_e = (mistakes_on_sample(&gap, &e_sample), mistakes_on_sample(&sol, &e_sample));
    ensure!(on_e == (Ok(2), Ok(1)), "mistakes on ((9,1),(10,1)): {on_e:?}");
    let bound = mistake_bound_stable(&gap, &h, Horizon::new(8)).map_err(|e| e.to_string())?;
    ensure!(bound.is_stable() && bound.at.value == 3, "gap learner bound {} / {}", bound.at.value, bound.recheck.value);
    ensure!(optimal_mistake_bound(&h) == 3, "M(H) = {}", optimal_mistake_bound(&h));
    let any = is_anytime_optimal(&gap, &h, Horizon::new(8), 1).map_err(|e| e.to_string())?;
    ensure!(!any.anytime_optimal, "gap learner reported anytime optimal");
    let witness = Sample::from_pairs(&[(8, 1)]);
    let hit = any
        .counterexamples
        .iter()
        .find(|c| c.prefix == witness)
        .ok_or("((9,1)) is not a counterexample")?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "errs 2 vs 1, bound 3 = M(H), after ((9,1)) errs {} where {} is optimal",
        hit.learner_bound, hit.optimal_bound
    ))
}

fn tiny_sweep() -> Vec<(FiniteClass, Sample)> {
    seeded_classes(10, 4, 8)
        .into_iter()
        .flat_map(|h| realizable_samples(&h, 2, h.domain_size()).into_iter().map(move |s| (h.clone(), s)))
        .collect()
}

fn significance_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut inputs = 0;
    for (h, s) in tiny_sweep() {
        for x in h.domain().filter(|&x| !s.contains_instance(x)) {
            let pairs = [
                (is_opt_significant(&h, &s, x), brute_force_opt_significant(&h, &s, x, 4)),
                (is_aopt_significant(&h, &s, x), brute_force_aopt_significant(&h, &s, x, 4)),
            ];
            for (closed, oracle) in pairs {
                let (c, o) = (closed.map_err(|e| e.to_string())?, oracle.map_err(|e| e.to_string())?);
                ensure!(
                    (c.significant, c.forced_prediction) == (o.significant, o.forced_prediction),
                    "{:?} at S = {s}, x = {x} on {:?}: closed form {:?}, oracle {:?}",
                    c.kind,
                    h.row_strings(),
                    c.forced_prediction,
                    o.forced_prediction
                );
            }
            inputs += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("{inputs} inputs, both kinds agree"))
}

fn step_conditions() -> Outcome {
    let sweep = tiny_sweep();
    for (h, s) in &sweep {
        let c = lemma_a1_check(h, s, 4).map_err(|e| e.to_string())?;
        ensure!(c.agree, "S = {s} on {:?}: condition A {} vs B {}", h.row_strings(), c.condition_a, c.condition_b);
    }
    Ok(format!("{} samples, zero counterexamples", sweep.len()))
}

fn rer_halt_reduction() -> Outcome {
    let halting = [0, 2, 3, 5, 8];
    let oracle = (0..=8u64).fold(TableOracle::new(), |o, e| {
        if halting.contains(&e) {
            o.halts(e, e, 0)
        } else {
            o.diverges(e, e)
        }
    });
    let h = build_h_rer_halt(&oracle, 8, 1000).map_err(|e| e.to_string())?;
    for e in 0..=8 {
        let [a, b, _] = rer_halt_block(e);
        let v = is_aopt_significant(&h, &Sample::from_pairs(&[(a, 1)]), b).map_err(|e| e.to_string())?;
        let bit = halting.contains(&e);
        ensure!(v.forced_prediction == Some(bit), "e = {e}: forced {:?}, halting bit {bit}", v.forced_prediction);
    }
    let learner = learner_b_rer_halt(InstanceNames::identity(h.domain_size()));
    let bound = mistake_bound_stable(&learner, &h, Horizon::new(4)).map_err(|e| e.to_string())?;
    ensure!(bound.is_stable() && bound.at.value == 2, "bound {} then {}", bound.at.value, bound.recheck.value);
    for bits in [[false, false], [true, false], [false, true], [true, true]] {
        let small = (0..2u64).fold(TableOracle::new(), |o, e| if bits[e as usize] { o.halts(e, e, 0) } else { o.diverges(e, e) });
        let h = build_h_rer_halt(&small, 1, 1000).map_err(|e| e.to_string())?;
        let b = learner_b_rer_halt(InstanceNames::identity(h.domain_size()));
        let got = mistake_bound(&b, &h, Horizon::new(4)).map_err(|e| e.to_string())?.value;
        let want = naive_bound(&b, &h, &mut Sample::empty(), 4);
        ensure!(got == want, "blocks {bits:?}: engine {got}, naive adversary {want}");
    }
    Ok(format!("forced prediction = halting bit for e <= 8, bound {}", bound.at.value))
}

fn non_members(supports: &[BTreeSet<BigUint>], want: usize) -> Vec<BTreeSet<BigUint>> {
    let members: HashSet<&BTreeSet<BigUint>> = supports.iter().collect();
    let mut out: Vec<BTreeSet<BigUint>> = Vec::new();
    let mut offer = |s: BTreeSet<BigUint>| {
        if out.len() < want && !members.contains(&s) && !out.contains(&s) {
            out.push(s);
        }
    };
    for f in supports {
        let e = f.iter().filter_map(|n| n.trailing_zeros()).min().unwrap_or(0);
        for n in f {
            let mut s = f.clone();
            s.remove(n);
            offer(s);
            let mut s = f.clone();
            s.remove(n);
            s.insert(n * 3u32);
            offer(s);
        }
        for j in 1..=4 {
            let mut s = f.clone();
            s.insert(prime_power_instance(e, 17, j));
            offer(s);
        }
    }
    for n in 0..want as u64 {
        offer(BTreeSet::from([BigUint::from(3 * n + 5)]));
    }
    out
}

fn dr_case(subject: TableOracle) -> Result<Option<bool>, String> {
    let oracle = subject.halts(1, 0, 0).halts(1, 1, 1).halts(3, 0, 0).halts(3, 3, 0);
    let c = build_h_dr_ext(&oracle, 3, 1000).map_err(|e| e.to_string())?;
    let block = DrBlock::query(&oracle, 2, Some(1000)).map_err(|e| e.to_string())?;
    let input = block
        .with_c0(3)
        .and_then(|x| Some((c.sample(&[(block.base(), true)])?, c.instance(&x)?)));
    let Some((s, x)) = input else { return Ok(None) };
    match is_opt_significant(&c.class, &s, x) {
        Ok(v) => Ok(v.forced_prediction),
        Err(conline::significance::SigError::Unrealizable(_)) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

fn dr_ext_class() -> Outcome {
    let oracle = TableOracle::new()
        .diverges(0, 0)
        .halts(1, 0, 0)
        .diverges(1, 1)
        .halts(2, 0, 0)
        .halts(2, 2, 1)
        .halts(3, 0, 0)
        .halts(3, 3, 0);
    let c = build_h_dr_ext(&oracle, 3, 1000).map_err(|e| e.to_string())?;
    let d = ldim(&c.class);
    ensure!(d == 2 && naive_ldim(&c.class) == 2, "ldim {d}");
    let (_, tree) = deepest_shattered_tree(&c.class);
    let tree = tree.ok_or("no depth-2 tree")?;
    ensure!(verify_shattered_tree(&c.class, &tree, 2) == Ok(true), "depth-2 tree does not verify");
    let members = c.canonical_indices();
    ensure!(members.iter().all(|y| dr_decider_h_dr_ext(&oracle, y)), "a member support is rejected");
    let others = non_members(&c.supports, 100);
    ensure!(others.len() == 100, "only {} perturbations", others.len());
    for s in &others {
        let y = CanonicalIndex::of_set(s.iter().cloned());
        ensure!(!dr_decider_h_dr_ext(&oracle, &y), "non-member {s:?} accepted");
    }
    let cases = [
        ("0 diverges", TableOracle::new(), None),
        ("0 halts, e diverges", TableOracle::new().halts(2, 0, 0), None),
        ("e gives 1", TableOracle::new().halts(2, 0, 0).halts(2, 2, 1), Some(false)),
        ("e gives 0", TableOracle::new().halts(2, 0, 0).halts(2, 2, 0), Some(true)),
    ];
    for (name, subject, want) in cases {
        let got = dr_case(subject)?;
        ensure!(got == want, "case {name}: forced {got:?}, expected {want:?}");
    }
    Ok(format!("ldim 2, {} members accepted, 100 non-members rejected, four cases", members.len()))
}

fn split_forcing() -> Outcome {
    for (e, constant) in [(0, false), (1, true)] {
        let a = ToyLearner::from_index(e, 1000);
        let probe = Sample::from_pairs(&[(4, 1), (7, 0)]);
        for x in 0..10 {
            ensure!(a.predict(&probe, x) == Ok(constant), "toy:{e} is not const{}", constant as u8);
        }
        for m in 1..=3 {
            let s = forcing_sample(e, m, 1000);
            let mistakes = mistakes_on_sample(&a, &s).map_err(|e| e.to_string())?;
            ensure!(mistakes as u64 == m + 1, "toy:{e}, M = {m}: {mistakes} mistakes");
        }
    }
    let h = build_h_split(1000, 4).map_err(|e| e.to_string())?.truncation().map_err(|e| e.to_string())?;
    ensure!(ldim(&h) == 1 && naive_ldim(&h) == 1, "split truncation ldim {}", ldim(&h));
    Ok("const0 and const1 err M+1 for M in 1..=3, split ldim 1".into())
}

fn init_thresholds() -> Outcome {
    let h = build_h_init(1000, 127).map_err(|e| e.to_string())?;
    let found = find_thresholds(&h.class, 4, 127).ok_or("no 4 thresholds")?;
    ensure!(found.holds(), "threshold pattern fails on {:?}", found.instances);
    let sub = found.subclass(h.class.domain_size()).map_err(|e| e.to_string())?;
    let tree = found.shattered_tree();
    ensure!(tree.depth >= 2, "tree depth {}", tree.depth);
    ensure!(verify_shattered_tree(&sub, &tree, tree.depth) == Ok(true), "tree does not shatter the subclass");
    ensure!(ldim(&sub) >= 2, "subclass ldim {}", ldim(&sub));
    Ok(format!("instances {:?}, verified depth-{} tree", found.instances, tree.depth))
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn conversion() -> Outcome {
    let h = thresholds(2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let row = h.rows()[rng.gen_range(0..h.len())];
    let weights: Vec<i64> = (0..h.domain_size()).map(|_| rng.gen_range(1..=10)).collect();
    let total: i64 = weights.iter().sum();
    let support = (0..h.domain_size() as Instance)
        .map(|x| (x, row >> x & 1 == 1, ratio(weights[x as usize], total)))
        .collect();
    let d = FiniteDistribution::new(support).map_err(|e| e.to_string())?;
    let a = sol(h.clone());
    let loss = |p: &dyn Fn(Instance) -> BigRational| {
        d.support()
            .iter()
            .fold(BigRational::zero(), |acc, (x, y, w)| acc + w * (p(*x) - if *y { BigRational::one() } else { BigRational::zero() }).abs())
    };
    let config = PacConfig { eps: ratio(1, 5), delta: ratio(1, 10), m: 40, trials: 200, seed: 3 };
    let report = pac_evaluate(&a, &h, &d, &config).map_err(|e| e.to_string())?;
    let mut draws = ChaCha8Rng::seed_from_u64(config.seed);
    for (trial, reported) in report.errors.iter().enumerate() {
        let s = d.draw(&mut draws, config.m).map_err(|e| e.to_string())?;
        let b = online_to_batch(&a, &s, h.domain_size()).map_err(|e| e.to_string())?;
        let prefix_preds: Vec<Vec<bool>> = (0..s.len())
            .map(|t| h.domain().map(|x| a.predict(&s.prefix(t), x).unwrap()).collect())
            .collect();
        let n = s.len() as i64;
        for x in h.domain() {
            let ones = prefix_preds.iter().filter(|p| p[x as usize]).count() as i64;
            ensure!(b.value(x) == Some(&ratio(ones, n)), "trial {trial}: B({x}) is not the prefix average");
        }
        let average = prefix_preds
            .iter()
            .map(|p| loss(&|x: Instance| if p[x as usize] { BigRational::one() } else { BigRational::zero() }))
            .fold(BigRational::zero(), |acc, l| acc + l)
            / BigRational::from_integer(n.into());
        ensure!(&average == reported, "trial {trial}: L_D {reported} vs prefix average {average}");
        ensure!(loss(&|x: Instance| b.value(x).cloned().unwrap()) == average, "trial {trial}: L_D not linear");
    }
    let good = report.errors.iter().filter(|e| **e <= ratio(1, 5)).count();
    ensure!(good >= 180, "only {good}/200 trials with L_D <= 1/5");
    Ok(format!("{good}/200 trials with L_D <= 1/5, conversion linear on every trial"))
}

fn encodings() -> Outcome {
    let mut z = Vec::with_capacity(6);
    let mut count = 0u64;
    for len in 0..=6 {
        z.clear();
        z.resize(len, 0u64);
        loop {
            let code = encode_sequence(&z);
            ensure!(decode_sequence(&code).as_deref() == Ok(&z[..]), "{z:?} does not round-trip");
            count += 1;
            let Some(i) = z.iter().rposition(|&v| v < 20) else { break };
            z[i] += 1;
            z[i + 1..].iter_mut().for_each(|v| *v = 0);
        }
    }
    let mut seen = HashSet::new();
    for a in 0..=20u64 {
        for b in 0..=20 {
            for c in 0..=20 {
                for seq in [vec![], vec![a], vec![a, b], vec![a, b, c]] {
                    seen.insert((encode_sequence(&seq), seq));
                }
            }
        }
    }
    let codes: HashSet<&BigUint> = seen.iter().map(|(c, _)| c).collect();
    ensure!(codes.len() == seen.len(), "two short sequences share a code");
    for y in 0u64..1 << 16 {
        let set = decode_canonical(&BigUint::from(y));
        ensure!(canonical_index(&set) == BigUint::from(y), "canonical index {y} does not round-trip");
        let named = CanonicalIndex::of_set(set.iter().map(|&n| BigUint::from(n)));
        ensure!(named.to_natural() == Some(BigUint::from(y)), "set of {y} does not round-trip");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let s: Sample = (0..rng.gen_range(0..8))
            .map(|_| LabeledInstance::new(rng.gen_range(0..40), rng.gen()))
            .collect();
        for n in 0..=s.len() {
            ensure!(decode_sample(&encode_sample(&s.prefix(n))) == Ok(s.prefix(n)), "prefix {n} of {s}");
        }
    }
    Ok(format!("{count} sequences round-trip, 2^16 canonical indices, 2000 sample prefixes"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("optimal bound = ldim = deepest tree", dimension_equivalence),
        ("SOL is optimal", sol_optimality),
        ("post-sample bound = ldim of the version space", post_sample_bounds),
        ("gap learner table at d = 3", gap_table),
        ("significance closed forms vs oracle", significance_vs_oracle),
        ("step conditions vs optimal mistake counts", step_conditions),
        ("halting bit forced on the rer-halt class", rer_halt_reduction),
        ("decidable-support class", dr_ext_class),
        ("forcing samples on toy learners", split_forcing),
        ("thresholds inside the self-halting class", init_thresholds),
        ("online-to-batch conversion", conversion),
        ("encoding round-trips", encodings),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
