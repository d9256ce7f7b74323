use std::collections::BTreeSet;

use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use tseitin_core::codec::{decode, encode};
use tseitin_core::consistency::{Assignment, Consistency, LcError, Strict};
use tseitin_core::ecdt::{build_ecdt, Context};
use tseitin_core::gen::{adversarial_trees, random_trees};
use tseitin_core::grid::{Dir, Torus};
use tseitin_core::pairing::{build_pairing, non_chosen_by_sq};
use tseitin_core::partition::Partition;
use tseitin_core::resolution::{check_resolution, parity_clauses, resolve_parities, ProofBuilder};
use tseitin_core::restriction::{
    alive_bounds, alive_counts, apply_full, canonical_clauses, compose_default, sample_full, sample_partial, Setup,
};
use tseitin_core::tree::{complete_tree, functionally_equivalent, restrict_by_assignment, Tree};
use tseitin_core::tseitin::Instance;

fn charges3() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 9).prop_map(|mut c| {
        if c.iter().filter(|&&b| b).count() % 2 == 1 {
            c[0] ^= true;
        }
        c
    })
}

const N: usize = 15;

/// A small assignment on edges of a 3 x 4 block of the torus.
fn local_assignment(max: usize) -> impl Strategy<Value = Assignment> {
    prop::collection::btree_map(0usize..48, any::<bool>(), 0..=max).prop_map(|m| {
        let t = Torus::new(N).unwrap();
        m.into_iter().map(|(i, b)| (t.graph().incident(t.node(5 + i / 16, 5 + (i / 4) % 4))[i % 4], b)).collect()
    })
}

fn small_tree() -> impl Strategy<Value = Tree> {
    let t = Torus::new(N).unwrap();
    let vars: Vec<usize> = (6..8).flat_map(|r| t.graph().incident(t.node(r, 6)).to_vec()).collect();
    let leaf = any::<bool>().prop_map(Tree::leaf);
    leaf.prop_recursive(3, 15, 2, move |inner| {
        (prop::sample::select(vars.clone()), inner.clone(), inner).prop_map(|(x, z, o)| Tree::query(x, z, o))
    })
    .prop_filter("no repeated queries on a branch", |t| t.validate().is_ok())
}

fn grid() -> (Torus, Vec<bool>) {
    (Torus::new(N).unwrap(), vec![true; N * N])
}

/// Skips cases whose supports exceed the closure limit.
macro_rules! within {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(LcError::SupportTooLarge { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        }
    };
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cnf_models_are_brute_force_solutions(ch in charges3()) {
        let t = Torus::new(3).unwrap();
        let inst = Instance::torus(&t, ch).unwrap();
        let sols = inst.brute_force_solutions().unwrap();
        let cnf = inst.to_cnf();
        let models: Vec<u32> = (0u32..1 << 18)
            .filter(|&m| cnf.satisfied_by(&(0..18).map(|e| m >> e & 1 == 1).collect::<Vec<_>>()))
            .collect();
        prop_assert_eq!(&models, &sols);
        prop_assert_eq!(inst.solution_count(), (sols.len() as u64).into());
    }

    #[test]
    fn samples_solve_and_face_flips_preserve(ch in charges3(), seed in any::<u64>(), r in 0usize..3, c in 0usize..3) {
        let t = Torus::new(3).unwrap();
        let inst = Instance::torus(&t, ch).unwrap();
        let mut x = inst.sample_solution(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(inst.is_solution(&x));
        let v = t.node(r, c);
        let face = [t.edge_at(v, Dir::Right), t.edge_at(v, Dir::Down), t.edge_at(t.step(v, Dir::Right), Dir::Down), t.edge_at(t.step(v, Dir::Down), Dir::Right)];
        for e in face {
            x[e] ^= true;
        }
        prop_assert!(inst.is_solution(&x));
    }

    #[test]
    fn strict_consistency_matches_brute_force(tau in local_assignment(6), x in 0usize..48) {
        let (t, ch) = grid();
        let lc = Strict::new(&t, &ch);
        let x = t.graph().incident(t.node(5 + x / 16, 5 + (x / 4) % 4))[x % 4];
        let ok = within!(lc.check(&tau));
        if within!(lc.subsystem_size(&tau)) <= 24 {
            prop_assert_eq!(ok, lc.check_brute_force(&tau).unwrap());
        }
        if ok {
            for drop in tau.keys() {
                let mut sub = tau.clone();
                sub.remove(drop);
                prop_assert!(lc.check(&sub).unwrap());
            }
            let ext = within!(lc.extend(&tau, x));
            prop_assert!(ext.contains_key(&x) && lc.check(&ext).unwrap());
            if let Some(b) = within!(lc.implied(&tau, x)).filter(|_| !tau.contains_key(&x)) {
                let mut flip = tau.clone();
                flip.insert(x, !b);
                prop_assert!(!lc.check(&flip).unwrap());
            }
        }
    }

    #[test]
    fn restriction_composes_and_commutes_with_negation(tree in small_tree(), a in local_assignment(2), b in local_assignment(2)) {
        let (t, ch) = grid();
        let lc = Strict::new(&t, &ch);
        let Some(ab) = tseitin_core::consistency::union(&a, &b) else { return Ok(()) };
        if !within!(lc.check(&ab)) {
            return Ok(());
        }
        let both = within!(restrict_by_assignment(&lc, &tree, &ab));
        let step = match within!(restrict_by_assignment(&lc, &tree, &a)) {
            Some(r) => within!(restrict_by_assignment(&lc, &r, &ab)),
            None => None,
        };
        prop_assert_eq!(step, both.clone());
        let neg = within!(restrict_by_assignment(&lc, &tree.negate(), &ab));
        prop_assert_eq!(neg, both.map(|r| r.negate()));
    }

    #[test]
    fn equivalent_trees_agree_on_b_trees(tree in small_tree(), alpha in local_assignment(2)) {
        let (t, ch) = grid();
        let lc = Strict::new(&t, &ch);
        if !within!(tree.is_locally_consistent(&lc)) || !within!(lc.check(&alpha)) {
            return Ok(());
        }
        let vars = tseitin_core::tree::variables(&tree);
        let full = complete_tree(&vars, &mut |a| tree.evaluate(|x| a.get(&x).copied()).unwrap());
        let other = within!(restrict_by_assignment(&lc, &full, &Assignment::new())).unwrap();
        prop_assert!(within!(functionally_equivalent(&lc, &tree, &other)));
        for b in [false, true] {
            if within!(restrict_by_assignment(&lc, &tree, &alpha)).is_some_and(|r| r.is_b_tree(b)) {
                prop_assert!(within!(restrict_by_assignment(&lc, &other, &alpha)).is_some_and(|r| r.is_b_tree(b)));
            }
        }
    }

    #[test]
    fn parity_sums_verify(m1 in 1usize..5, m2 in 1usize..5, overlap in 0usize..4, p1 in any::<bool>(), p2 in any::<bool>()) {
        let a: Vec<u32> = (1..=m1 as u32).collect();
        let start = (m1 - overlap.min(m1 - 1)) as u32;
        let b: Vec<u32> = (start..start + m2 as u32).collect();
        let (ea, eb) = (parity_clauses(&a, p1).unwrap(), parity_clauses(&b, p2).unwrap());
        let mut pb = ProofBuilder::new();
        pb.inputs(&ea);
        pb.inputs(&eb);
        let (sum, _) = resolve_parities(&mut pb, &ea, &eb, start).unwrap();
        let cnf = tseitin_core::tseitin::Cnf { vars: 10, clauses: ea.clauses.iter().chain(&eb.clauses).cloned().collect() };
        prop_assert!(check_resolution(&pb.proof, &cnf).is_ok());
        for m in 0u32..1 << 10 {
            let x = |v: u32| m >> v & 1 == 1;
            let xor = a.iter().chain(&b).filter(|&&v| x(v)).count() % 2 == 1;
            if !(a.contains(&start) && b.contains(&start)) {
                break;
            }
            prop_assert_eq!(sum.satisfied_by(&x), xor == (p1 ^ p2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_restrictions_pass_audit(seed in any::<u64>()) {
        let setup = Setup::relaxed(45, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = sample_full(&setup, 11, &mut rng).unwrap();
        let audit = apply_full(&setup, &sigma).unwrap();
        prop_assert_eq!(audit.clauses, canonical_clauses(&setup.reduced_inst.to_cnf()));
        let (lo, hi) = alive_bounds(11, 3);
        prop_assert!(alive_counts(&setup.part, sigma.alive()).iter().all(|&c| lo <= c && c <= hi));
        let rho = sample_partial(&setup, 11, &mut rng).unwrap();
        let p1 = build_pairing(&setup.part, rho.alive()).unwrap();
        prop_assert_eq!(&p1, &build_pairing(&setup.part, rho.alive()).unwrap());
        p1.validate(&setup.part, &non_chosen_by_sq(&setup.part, rho.alive()).concat()).unwrap();
        let composed = compose_default(&setup, &rho).unwrap();
        prop_assert_eq!(apply_full(&setup, &composed).unwrap().clauses, canonical_clauses(&setup.reduced_inst.to_cnf()));
    }

    #[test]
    fn dense_profiles_always_pair(mut counts in prop::collection::vec(2usize..=6, 25), fix in 0usize..25) {
        let part = Partition::new(201, 5).unwrap();
        if counts.iter().sum::<usize>() % 2 == 1 {
            counts[fix] = if counts[fix] == 6 { 5 } else { counts[fix] + 1 };
        }
        let mut alive = vec![false; part.center_count()];
        for (sq, &c) in counts.iter().enumerate() {
            for l in 0..=c {
                alive[part.center(sq, l)] = true;
            }
        }
        let groups = non_chosen_by_sq(&part, &alive);
        prop_assert_eq!(groups.iter().map(Vec::len).collect::<Vec<_>>(), counts);
        let p = build_pairing(&part, &alive).unwrap();
        p.validate(&part, &groups.concat()).unwrap();
    }

    #[test]
    fn stage_records_satisfy_size_bounds(seed in any::<u64>(), adversarial in any::<bool>()) {
        let setup = Setup::relaxed(45, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = Context::new(&setup, sample_partial(&setup, 11, &mut rng).unwrap()).unwrap();
        let trees = if adversarial { adversarial_trees(&mut rng, &ctx, 4, 2) } else { random_trees(&mut rng, &setup, 4, 2).unwrap() };
        let res = build_ecdt(&ctx, &trees, 8, 2).unwrap();
        let restricted: Vec<Tree> = ctx.restricted(&trees).unwrap().into_iter().flatten().collect();
        match &res.cap {
            None => prop_assert!(res.represents(&ctx.weak(), &restricted).unwrap()),
            Some(cap) => {
                let mut seen = BTreeSet::new();
                for st in cap.stages.iter().filter(|s| !s.degenerate) {
                    let supp = st.forcing.support();
                    prop_assert!(4 * st.disappearing().len() >= supp.len());
                    prop_assert!(st.newly_exposed() <= 4 * supp.len());
                    prop_assert!(supp.iter().all(|c| seen.insert(*c)));
                }
            }
        }
    }

    #[test]
    fn transcripts_are_consumed_exactly(seed in any::<u64>(), flip in any::<prop::sample::Index>()) {
        let setup = Setup::relaxed(45, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = Context::new(&setup, sample_partial(&setup, 11, &mut rng).unwrap()).unwrap();
        let trees = adversarial_trees(&mut rng, &ctx, 4, 2);
        let Ok(enc) = encode(&ctx, &trees, 8, 2) else { return Ok(()) };
        prop_assert_eq!(decode(&setup, &enc.rho_star, &trees, &enc.bits, 8, 2).unwrap(), ctx.rho.clone());
        let mut longer = enc.bits.clone();
        longer.push(false);
        prop_assert!(decode(&setup, &enc.rho_star, &trees, &longer, 8, 2).is_err());
        let i = flip.index(enc.bits.len());
        let mut bad = tseitin_core::bits::BitVec::new();
        for (j, b) in enc.bits.iter().enumerate() {
            bad.push(b ^ (i == j));
        }
        if let Ok(other) = decode(&setup, &enc.rho_star, &trees, &bad, 8, 2) {
            prop_assert_ne!(other, ctx.rho.clone());
        }
    }
}
