//! End-to-end acceptance checks. Each check prints one PASS or FAIL line;
//! the process fails if any check fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use tseitin_cli::experiment::{run_switch_experiment, Generator, SwitchConfig, TrialRecord};
use tseitin_cli::stats::{chi_square_two_sample, THREE_SIGMA_P};
use tseitin_core::census::census;
use tseitin_core::consistency::{Assignment, Consistency, Strict};
use tseitin_core::frege::*;
use tseitin_core::gen::associated_edges;
use tseitin_core::grid::{Dir, Torus};
use tseitin_core::pairing::{build_pairing, non_chosen_by_sq};
use tseitin_core::partition::Partition;
use tseitin_core::resolution::{build_grid_refutation, check_resolution, grid_cnf};
use tseitin_core::restriction::{
    apply_full, canonical_clauses, compose_default, sample_full, sample_partial, uniform, Setup,
};
use tseitin_core::tree::Tree;
use tseitin_core::tseitin::Instance;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took <= limit;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] {id:>2} {name}: {} ({:.1}s, limit {}s)", out.detail, took.as_secs_f64(), limit.as_secs());
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn solution_counts() -> Outcome {
    let torus = Torus::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ok = 0;
    for _ in 0..10 {
        let mut charges: Vec<bool> = (0..9).map(|_| rng.next_u32() & 1 == 1).collect();
        if charges.iter().filter(|&&c| c).count() % 2 == 1 {
            charges[0] = !charges[0];
        }
        let inst = Instance::torus(&torus, charges).unwrap();
        let brute = inst.brute_force_solutions().unwrap().len();
        if brute == 1024 && inst.solution_count().to_string() == "1024" {
            ok += 1;
        }
    }
    outcome(ok == 10, format!("{ok}/10 even charge vectors have exactly 1024 solutions"))
}

fn restriction_audits() -> Outcome {
    let setup = Setup::new(135, 3).unwrap();
    let nodes = setup.big().graph().node_count();
    let reduced = canonical_clauses(&setup.reduced_inst.to_cnf());
    let mut ok = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = sample_full(&setup, 11, &mut rng).unwrap();
        let a = apply_full(&setup, &sigma).unwrap();
        if a.satisfied + a.tautology + a.new_axiom == nodes && a.new_axiom == 9 && a.clauses == reduced {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 restrictions reduce the 135-grid formula to the 3-grid formula"))
}

/// Alive sets with 2 to 6 non-chosen centers per sub-square and an even total.
fn alive_with_counts(part: &Partition, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let q = part.sub_squares();
    let mut counts: Vec<usize> = (0..q).map(|_| 2 + uniform(rng, 5)).collect();
    if counts.iter().sum::<usize>() % 2 == 1 {
        let sq = uniform(rng, q);
        counts[sq] = if counts[sq] == 6 { 5 } else { counts[sq] + 1 };
    }
    let mut alive = vec![false; part.center_count()];
    for (sq, &c) in counts.iter().enumerate() {
        let mut idx: Vec<usize> = (0..part.delta()).collect();
        for i in 0..=c {
            let j = i + uniform(rng, idx.len() - i);
            idx.swap(i, j);
            alive[part.center(sq, idx[i])] = true;
        }
    }
    alive
}

fn pairings() -> Outcome {
    let mut ok = 0;
    let mut first_error = String::new();
    for (n1, n2) in [(135, 3), (201, 5)] {
        let part = Partition::new(n1, n2).unwrap();
        for seed in 0..500 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alive = alive_with_counts(&part, &mut rng);
            let non_chosen = non_chosen_by_sq(&part, &alive).concat();
            let verdict = build_pairing(&part, &alive).map_err(|e| e.to_string()).and_then(|pi| {
                pi.validate(&part, &non_chosen).map_err(String::from)?;
                if build_pairing(&part, &alive).ok() != Some(pi) {
                    return Err("rebuild differs".into());
                }
                Ok(())
            });
            match verdict {
                Ok(()) => ok += 1,
                Err(e) if first_error.is_empty() => first_error = format!("n2={n2} seed {seed}: {e}"),
                Err(_) => {}
            }
        }
    }
    let mut detail = format!("{ok}/1000 pairings valid and deterministic");
    if !first_error.is_empty() {
        detail += &format!("; first failure {first_error}");
    }
    outcome(ok == 1000, detail)
}

fn experiment(generator: Generator) -> Vec<TrialRecord> {
    let cfg = SwitchConfig { n1: 135, n2: 3, k: 11, t: 2, s: 8, m: 4, generator, trials: 1000, seed: 2024, ..SwitchConfig::default() };
    run_switch_experiment(&cfg).unwrap().0
}

fn representation(records: &[TrialRecord]) -> Outcome {
    let free: Vec<_> = records.iter().filter(|r| !r.cap_hit).collect();
    let ok = free.iter().filter(|r| r.verified && r.error.is_empty()).count();
    let mut depths = BTreeMap::new();
    for r in &free {
        *depths.entry(r.depth).or_insert(0) += 1;
    }
    outcome(
        ok == free.len() && !free.is_empty(),
        format!("{ok}/{} runs below the cap represent the OR; depth histogram {depths:?}; {} runs hit the cap", free.len(), records.len() - free.len()),
    )
}

const PINNED_A: usize = 6;

fn round_trips(records: &[TrialRecord]) -> Outcome {
    let hits: Vec<_> = records.iter().filter(|r| r.cap_hit).collect();
    let ok = hits.iter().filter(|r| r.verified).count();
    let within = hits.iter().filter(|r| r.bits <= r.fixed_bits + PINNED_A * r.s).count();
    let max_a = hits.iter().map(|r| r.measured_a).fold(0.0, f64::max);
    let max_bits = hits.iter().map(|r| r.bits).max().unwrap_or(0);
    outcome(
        hits.len() == 1000 && ok == 1000 && within == 1000,
        format!("{ok}/{} cap-hit round trips exact, {within} within the bit budget at A={PINNED_A}; measured A max {max_a:.3}, max {max_bits} bits", hits.len()),
    )
}

fn inequalities(sets: &[&[TrialRecord]]) -> Outcome {
    let hits: Vec<_> = sets.iter().flat_map(|s| s.iter()).filter(|r| r.cap_hit && r.error.is_empty()).collect();
    let bad = hits.iter().filter(|r| !r.inequalities).count();
    let max_exp = hits.iter().map(|r| r.max_stage_exposure).max().unwrap_or(0);
    let max_alive = hits.iter().map(|r| r.alive_star).max().unwrap_or(0);
    outcome(
        bad == 0 && !hits.is_empty(),
        format!("{bad} violations over {} cap-hit runs; max stage exposure {max_exp}, max alive after {max_alive}", hits.len()),
    )
}

fn counting() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (m, k, s) in [(27, 9, 1), (27, 9, 2), (135, 27, 3)] {
        let c = census(m, k, s);
        ok &= c.all_hold();
        parts.push(format!("({m},{k},{s}) {:?}/{:?}/{:?}/{:?}", c.geometric, c.product, c.power, c.chain));
    }
    outcome(ok, parts.join(", "))
}

fn resolution() -> Outcome {
    let mut rows = Vec::new();
    for n in [3, 5, 7] {
        let (proof, st) = build_grid_refutation(n).unwrap();
        let ok = check_resolution(&proof, &grid_cnf(n).unwrap()).unwrap();
        rows.push((n, ok, st.max_equation, (st.steps as f64).log2()));
    }
    let checked = rows.iter().all(|r| r.1);
    // Width and log-size per unit n may not grow past their value at n = 3.
    let c = rows[0].2 as f64 / 3.0;
    let width_ok = rows.iter().all(|&(n, _, w, _)| w as f64 <= c * n as f64);
    let slope = rows[0].3 / 3.0;
    let size_ok = rows.iter().all(|&(n, _, _, l)| l <= slope * n as f64 + 1e-9);
    let desc: Vec<String> = rows.iter().map(|(n, _, w, l)| format!("n={n}: width {w}, log2 size {l:.2}")).collect();
    outcome(checked && width_ok && size_ok, format!("{}; c={c:.3}, log2 size / n <= {slope:.3}", desc.join("; ")))
}

fn lc_oracle() -> Outcome {
    let torus = Torus::new(9).unwrap();
    let charges = vec![true; 81];
    let lc = Strict::new(&torus, &charges);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut agree, mut consistent, mut total) = (0, 0, 0);
    while total < 10_000 {
        let (r0, c0) = (uniform(&mut rng, 9), uniform(&mut rng, 9));
        let mut tau = Assignment::new();
        for _ in 0..1 + uniform(&mut rng, 6) {
            let v = torus.node((r0 + uniform(&mut rng, 2)) % 9, (c0 + uniform(&mut rng, 2)) % 9);
            let e = torus.edge_at(v, Dir::ALL[uniform(&mut rng, 4)]);
            tau.insert(e, rng.next_u32() & 1 == 1);
        }
        match lc.subsystem_size(&tau) {
            Ok(n) if n <= 24 => {}
            _ => continue,
        }
        total += 1;
        let fast = lc.check(&tau).unwrap();
        consistent += fast as usize;
        agree += (fast == lc.check_brute_force(&tau).unwrap()) as usize;
    }
    outcome(agree == total, format!("{agree}/{total} agree ({consistent} consistent, {} not)", total - consistent))
}

fn evaluations() -> Outcome {
    let mut verdicts = Vec::new();
    // Fixture: truth-table trees for every axiom of the 9 x 9 grid.
    let torus = Torus::new(9).unwrap();
    let charges = vec![true; 81];
    let lc = Strict::new(&torus, &charges);
    let axioms = tseitin_axioms(torus.graph(), &charges);
    let fixture = Evaluation::truth_table(&lc, &axioms, 4).unwrap();
    verdicts.push(("fixture accepted", check_evaluation(&lc, &fixture, &axioms).is_ok()));
    verdicts.push(("axiom trees are 1-trees", axioms.iter().all(|a| fixture.map[a].is_b_tree(true))));

    let ax = axioms[0].clone();
    let Formula::Or(inner, _) = &ax else { unreachable!("axioms are ORs") };
    let inner = (**inner).clone();
    let neg = fixture.map.keys().find(|f| matches!(f, Formula::Not(_))).cloned().unwrap();
    let Formula::Not(x) = &neg else { unreachable!() };
    let Formula::Var(xv) = **x else { unreachable!() };
    let mutate = |f: &dyn Fn(&mut Evaluation)| {
        let mut e = fixture.clone();
        f(&mut e);
        check_evaluation(&lc, &e, &axioms)
    };
    let depth = mutate(&|e| e.t = 2);
    verdicts.push(("depth mutation", matches!(depth, Err(EvalError::TooDeep { .. }))));
    let atom = mutate(&|e| {
        e.map.insert(Formula::Var(xv), Tree::leaf(true));
    });
    verdicts.push(("atom mutation", matches!(atom, Err(EvalError::Atom(_)))));
    let axiom = mutate(&|e| {
        let zero = e.map[&ax].map_leaves(&|_| false);
        e.map.insert(ax.clone(), zero);
    });
    verdicts.push(("axiom mutation", matches!(axiom, Err(EvalError::Axiom(_)))));
    let negation = mutate(&|e| {
        e.map.insert(neg.clone(), Tree::query(xv, Tree::leaf(true), Tree::leaf(true)));
    });
    verdicts.push(("negation mutation", matches!(negation, Err(EvalError::Negation(_)))));
    let or = mutate(&|e| {
        let flipped = e.map[&inner].negate();
        e.map.insert(inner.clone(), flipped);
    });
    verdicts.push(("or mutation", matches!(or, Err(EvalError::Or(_)))));

    // Restriction of functionally equivalent evaluations on the 45-grid.
    let setup = Setup::relaxed(45, 3).unwrap();
    let big_charges = vec![true; setup.big().graph().node_count()];
    let big = Strict::new(setup.big(), &big_charges);
    let weak = setup.weak();
    let pool = associated_edges(&setup);
    let mut preserved = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = sample_partial(&setup, 11, &mut rng).unwrap();
        let sigma = compose_default(&setup, &rho).unwrap();
        let image = |e: usize| sigma.image(e);
        let pick = |rng: &mut ChaCha8Rng| Formula::Var(pool[uniform(rng, pool.len())]);
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let left = Formula::or(Formula::or(a.clone(), Formula::not(b.clone())), Formula::and(c.clone(), a.clone()));
        let right = Formula::or(Formula::and(c, a.clone()), Formula::or(a, Formula::not(b)));
        let (Ok(e1), Ok(e2)) = (Evaluation::truth_table(&big, [&left], 3), Evaluation::truth_table(&big, [&right], 3)) else {
            continue;
        };
        let depth = e1.map.values().map(Tree::depth).max().unwrap_or(0);
        let ok = (|| -> Option<bool> {
            let r1 = restrict_evaluation(&weak, &e1, &image).ok()?;
            let r2 = restrict_evaluation(&weak, &e2, &image).ok()?;
            Some(
                check_evaluation(&weak, &r1, &[]).is_ok()
                    && check_evaluation(&weak, &r2, &[]).is_ok()
                    && check_equivalent(&weak, &r1, &r2) == Ok(None)
                    && r1.map.values().all(|t| t.depth() <= depth),
            )
        })();
        preserved += (ok == Some(true)) as usize;
    }
    verdicts.push(("restriction preserves evaluations in 100/100 samples", preserved == 100));

    // Line-by-line checks on proofs over the 33-grid.
    let torus = Torus::new(33).unwrap();
    let charges = vec![true; 33 * 33];
    let lc = Strict::new(&torus, &charges);
    let axioms = tseitin_axioms(torus.graph(), &charges);
    let line_evals = |p: &Proof, t: usize| -> Vec<Evaluation> {
        p.lines.iter().map(|l| Evaluation::truth_table(&lc, [&l.formula], t).unwrap()).collect()
    };
    let ax = &axioms[0];
    let text = format!("a: x0 | ~x0 ; em\nb: x1 | (x0 | ~x0) ; exp a\nc: {ax} ; axiom\nd: x9 | ({ax}) ; exp c\n");
    let proof = Proof::parse(&text).unwrap();
    let evals = line_evals(&proof, 5);
    verdicts.push(("noproof positive", check_noproof(&lc, &proof, &evals, &axioms, 80).is_ok()));
    let fake = Proof::parse(&format!("{text}e: 0 ; con d\n")).unwrap();
    let fake_evals = line_evals(&fake, 5);
    verdicts.push((
        "fabricated contradiction rejected",
        matches!(check_noproof(&lc, &fake, &fake_evals, &axioms, 80), Err(NoproofError::Proof(e)) if e.line() == 4),
    ));
    let mut zero = evals.clone();
    let z = zero[2].map[ax].map_leaves(&|_| false);
    zero[2].map.insert(ax.clone(), z);
    verdicts.push((
        "axiom mapped to a 0-tree rejected",
        matches!(check_noproof(&lc, &proof, &zero, &axioms, 80), Err(NoproofError::Evaluation { line: 2, err: EvalError::Axiom(_) })),
    ));

    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    let ok = verdicts.len() - failed.len();
    let mut detail = format!("{ok}/{} expected verdicts", verdicts.len());
    if !failed.is_empty() {
        detail += &format!("; unexpected: {}", failed.join(", "));
    }
    outcome(failed.is_empty(), detail)
}

fn distributions() -> Outcome {
    let setup = Setup::relaxed(45, 3).unwrap();
    let part = &setup.part;
    let trials = 100_000u64;
    // Category: number of alive centers in each sub-square, base 4.
    let profile = |alive: &[bool]| -> usize {
        (0..part.sub_squares()).fold(0, |acc, sq| acc * 4 + (0..part.delta()).filter(|&l| alive[part.center(sq, l)]).count())
    };
    let slots = 4usize.pow(part.sub_squares() as u32);
    let (mut a, mut b) = (vec![0u64; slots], vec![0u64; slots]);
    let (mut ca, mut cb) = (vec![0u64; part.center_count()], vec![0u64; part.center_count()]);
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(2 * i);
        let full = sample_full(&setup, 11, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(2 * i + 1);
        let composed = compose_default(&setup, &sample_partial(&setup, 11, &mut rng).unwrap()).unwrap();
        a[profile(full.alive())] += 1;
        b[profile(composed.alive())] += 1;
        for c in 0..part.center_count() {
            ca[c] += full.alive()[c] as u64;
            cb[c] += composed.alive()[c] as u64;
        }
    }
    // Pool sparse profiles so every kept category expects at least 5 per sample.
    let (mut pa, mut pb, mut rest) = (Vec::new(), Vec::new(), (0, 0));
    for (&x, &y) in a.iter().zip(&b) {
        if x + y >= 10 {
            pa.push(x);
            pb.push(y);
        } else {
            rest.0 += x;
            rest.1 += y;
        }
    }
    pa.push(rest.0);
    pb.push(rest.1);
    let prof = chi_square_two_sample(&pa, &pb);
    let cent = chi_square_two_sample(&ca, &cb);
    outcome(
        prof.p_value > THREE_SIGMA_P && cent.p_value > THREE_SIGMA_P,
        format!(
            "alive profiles chi2={:.1} dof={} p={:.4}; per-center chi2={:.1} dof={} p={:.4}; threshold p>{THREE_SIGMA_P}",
            prof.statistic, prof.dof, prof.p_value, cent.statistic, cent.dof, cent.p_value
        ),
    )
}

fn main() {
    let mut pass = Vec::new();
    pass.push(run(1, "solution counting", secs(30), solution_counts));
    pass.push(run(2, "restriction correctness", secs(120), restriction_audits));
    pass.push(run(3, "pairing validity", secs(60), pairings));
    let start = Instant::now();
    let random = experiment(Generator::Random);
    let random_time = start.elapsed();
    pass.push(run(4, "ECDT representation", secs(300).saturating_sub(random_time), || representation(&random)));
    let start = Instant::now();
    let adversarial = experiment(Generator::Adversarial);
    let adversarial_time = start.elapsed();
    pass.push(run(5, "encode/decode bijection", secs(600).saturating_sub(adversarial_time), || round_trips(&adversarial)));
    pass.push(run(6, "combinatorial inequalities", secs(60), || inequalities(&[&random, &adversarial])));
    pass.push(run(7, "counting arithmetic", secs(1), counting));
    pass.push(run(8, "resolution upper bound", secs(300), resolution));
    pass.push(run(9, "local-consistency oracle", secs(300), lc_oracle));
    pass.push(run(10, "evaluation machinery", secs(120), evaluations));
    pass.push(run(11, "distribution equivalence", secs(300), distributions));
    let failed = pass.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", pass.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
