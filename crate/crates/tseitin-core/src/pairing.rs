//! Graphical pairings: single edges and stars of size four covering the
//! non-chosen alive centers, each component in distinct adjacent sub-squares.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::gf2::System;
use crate::grid::{Dir, Torus};
use crate::partition::{Center, Partition};

/// Per-sub-square target below which the exact search replaces the
/// constructive proof.
pub const SMALL_A: usize = 16;

/// Search nodes explored before the exact search gives up.
pub const SEARCH_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairingError {
    /// No pairing exists for these per-sub-square counts.
    Infeasible,
    /// The exact search ran out of budget.
    Budget,
    /// The constructive rule produced negative counts.
    Regime { sub_square: usize },
}

impl fmt::Display for PairingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairingError::Infeasible => write!(f, "no graphical pairing exists for the non-chosen centers"),
            PairingError::Budget => write!(f, "pairing search exceeded {SEARCH_BUDGET} nodes"),
            PairingError::Regime { sub_square } => {
                write!(f, "alive counts outside the constructive regime at sub-square {sub_square}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Edge(Center, Center),
    Star { center: Center, leaves: [Center; 3] },
}

impl Component {
    pub fn centers(&self) -> Vec<Center> {
        match *self {
            Component::Edge(a, b) => vec![a, b],
            Component::Star { center, leaves } => vec![center, leaves[0], leaves[1], leaves[2]],
        }
    }

    pub fn edges(&self) -> Vec<(Center, Center)> {
        match *self {
            Component::Edge(a, b) => vec![(a, b)],
            Component::Star { center, leaves } => leaves.iter().map(|&l| (center, l)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GraphicalPairing {
    pub components: Vec<Component>,
}

impl GraphicalPairing {
    /// All edges, each as (smaller, larger) center, sorted.
    pub fn edges(&self) -> Vec<(Center, Center)> {
        let mut out: Vec<_> = self.components.iter().flat_map(|c| c.edges()).map(|(a, b)| (a.min(b), a.max(b))).collect();
        out.sort_unstable();
        out
    }

    /// Component index of every covered center.
    pub fn component_of(&self, centers: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; centers];
        for (i, c) in self.components.iter().enumerate() {
            for v in c.centers() {
                out[v] = Some(i);
            }
        }
        out
    }

    /// Checks the pairing definition against the given non-chosen centers.
    pub fn validate(&self, part: &Partition, non_chosen: &[Center]) -> Result<(), &'static str> {
        let mut covered = BTreeSet::new();
        for comp in &self.components {
            let cs = comp.centers();
            let sqs: BTreeSet<_> = cs.iter().map(|&c| part.center_sq(c)).collect();
            if sqs.len() != cs.len() {
                return Err("component centers share a sub-square");
            }
            for (a, b) in comp.edges() {
                if part.sq_dir(part.center_sq(a), part.center_sq(b)).is_none() {
                    return Err("edge between non-adjacent sub-squares");
                }
            }
            for c in cs {
                if !covered.insert(c) {
                    return Err("center covered twice");
                }
            }
        }
        let want: BTreeSet<_> = non_chosen.iter().copied().collect();
        if covered != want {
            return Err("covered set differs from the non-chosen centers");
        }
        Ok(())
    }
}

/// Non-chosen alive centers grouped by sub-square, increasing.
pub fn non_chosen_by_sq(part: &Partition, alive: &[bool]) -> Vec<Vec<Center>> {
    (0..part.sub_squares())
        .map(|sq| {
            let mut v: Vec<_> = (0..part.delta()).map(|l| part.center(sq, l)).filter(|&c| alive[c]).collect();
            if !v.is_empty() {
                v.remove(0);
            }
            v
        })
        .collect()
}

/// The deterministic pairing of the non-chosen alive centers.
pub fn build_pairing(part: &Partition, alive: &[bool]) -> Result<GraphicalPairing, PairingError> {
    let groups = non_chosen_by_sq(part, alive);
    let total: usize = groups.iter().map(|g| g.len()).sum();
    if total == 0 {
        return Ok(GraphicalPairing::default());
    }
    if total % 2 == 1 {
        return Err(PairingError::Infeasible);
    }
    let alive_count = alive.iter().filter(|&&a| a).count();
    let a = alive_count / part.sub_squares();
    if a >= SMALL_A {
        constructive(part, &groups, a)
    } else {
        exact(part, &groups)
    }
}

/// Exact search over per-sub-square counts. Centers inside a sub-square are
/// interchangeable, so each step takes the lowest uncovered center of the
/// tightest sub-square and tries the 20 component shapes through it.
fn exact(part: &Partition, groups: &[Vec<Center>]) -> Result<GraphicalPairing, PairingError> {
    let q = part.sub_squares();
    let mut counts: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut plan: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut failed: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut budget = SEARCH_BUDGET;
    if !search(part, &mut counts, &mut plan, &mut failed, &mut budget)? {
        return Err(PairingError::Infeasible);
    }
    // materialize: the k-th use of a sub-square takes its k-th center
    let mut next = vec![0usize; q];
    let mut take = |sq: usize| {
        let c = groups[sq][next[sq]];
        next[sq] += 1;
        c
    };
    let mut components = Vec::with_capacity(plan.len());
    for (hub, others) in plan {
        let h = take(hub);
        if others.len() == 1 {
            let o = take(others[0]);
            components.push(Component::Edge(h, o));
        } else {
            let leaves = [take(others[0]), take(others[1]), take(others[2])];
            components.push(Component::Star { center: h, leaves });
        }
    }
    Ok(GraphicalPairing { components })
}

/// Shapes through sub-square `s`, as (hub sub-square, other sub-squares):
/// 4 edges, 4 stars centered in `s`, 12 stars with `s` as a leaf.
pub fn shapes(part: &Partition, s: usize) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::with_capacity(20);
    for d in Dir::ALL {
        out.push((s, vec![part.sq_step(s, d)]));
    }
    for missing in Dir::ALL {
        let leaves: Vec<_> = Dir::ALL.into_iter().filter(|&d| d != missing).map(|d| part.sq_step(s, d)).collect();
        out.push((s, leaves));
    }
    for d in Dir::ALL {
        let hub = part.sq_step(s, d);
        let back = d.opposite();
        for missing in Dir::ALL.into_iter().filter(|&x| x != back) {
            let leaves: Vec<_> = Dir::ALL.into_iter().filter(|&x| x != missing).map(|x| part.sq_step(hub, x)).collect();
            out.push((hub, leaves));
        }
    }
    out
}

fn search(
    part: &Partition,
    counts: &mut Vec<usize>,
    plan: &mut Vec<(usize, Vec<usize>)>,
    failed: &mut BTreeSet<Vec<usize>>,
    budget: &mut usize,
) -> Result<bool, PairingError> {
    if counts.iter().all(|&c| c == 0) {
        return Ok(true);
    }
    if failed.contains(counts) {
        return Ok(false);
    }
    // every center needs a partner in an adjacent sub-square; branch on the
    // sub-square with the least slack
    let mut best: Option<(isize, usize)> = None;
    for (sq, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let around: usize = Dir::ALL.iter().map(|&d| counts[part.sq_step(sq, d)]).sum();
        let slack = around as isize - c as isize;
        if slack < 0 {
            failed.insert(counts.clone());
            return Ok(false);
        }
        if best.is_none_or(|(b, _)| slack < b) {
            best = Some((slack, sq));
        }
    }
    let Some((_, s)) = best else { return Ok(true) };
    if *budget == 0 {
        return Err(PairingError::Budget);
    }
    *budget -= 1;
    let mut options = shapes(part, s);
    // prefer partners with many remaining centers
    options.sort_by_key(|(hub, others)| {
        let load: usize = others.iter().chain([hub]).filter(|&&u| u != s).map(|&u| counts[u]).sum();
        (others.len(), core::cmp::Reverse(load))
    });
    for (hub, others) in options {
        let mut used = others.clone();
        used.push(hub);
        let mut need = vec![0usize; counts.len()];
        for &u in &used {
            need[u] += 1;
        }
        if need.iter().any(|&n| n > 1) || need.iter().zip(counts.iter()).any(|(&n, &c)| n > c) {
            continue;
        }
        for &u in &used {
            counts[u] -= 1;
        }
        plan.push((hub, others));
        if search(part, counts, plan, failed, budget)? {
            return Ok(true);
        }
        plan.pop();
        for &u in &used {
            counts[u] += 1;
        }
    }
    failed.insert(counts.clone());
    Ok(false)
}

/// The constructive rule: `m = ceil(0.26 a)` edges between adjacent
/// sub-squares plus a parity correction from an auxiliary Tseitin solve,
/// the lowest-indexed centers of each sub-square becoming star centers.
fn constructive(part: &Partition, groups: &[Vec<Center>], a: usize) -> Result<GraphicalPairing, PairingError> {
    let q = part.sub_squares();
    let n2 = part.n2();
    let m = (26 * a).div_ceil(100);
    let aux = Torus::new_unchecked(n2);
    let mut sys = System::new(aux.graph().edge_count());
    for s in 0..q {
        sys.push(aux.graph().incident(s).iter().copied(), groups[s].len() % 2 == 1);
    }
    let beta = sys.solve().ok_or(PairingError::Infeasible)?;
    // edges between s and its neighbour in direction d
    let between = |s: usize, d: Dir| m + beta[aux.edge_at(s, d)] as usize;
    let mut star_count = vec![0usize; q];
    for s in 0..q {
        let leaving: usize = Dir::ALL.iter().map(|&d| between(s, d)).sum();
        let b = groups[s].len();
        if leaving < b || (leaving - b) % 2 == 1 || (leaving - b) / 2 > b {
            return Err(PairingError::Regime { sub_square: s });
        }
        star_count[s] = (leaving - b) / 2;
    }
    // star i of sub-square s omits direction i mod 4
    let star_dirs = |i: usize| -> Vec<Dir> {
        let missing = Dir::from_index(i);
        Dir::ALL.into_iter().filter(|&d| d != missing).collect()
    };
    let stars_towards = |s: usize, d: Dir| (0..star_count[s]).filter(|&i| star_dirs(i).contains(&d)).count();
    // degree-one slots of s, per direction: leaves for the neighbour's stars, then plain edges
    let mut leaf_slots: Vec<[Vec<Center>; 4]> = Vec::with_capacity(q);
    let mut plain_slots: Vec<[Vec<Center>; 4]> = Vec::with_capacity(q);
    for s in 0..q {
        let mut pool = groups[s][star_count[s]..].iter().copied();
        let mut leaves: [Vec<Center>; 4] = Default::default();
        let mut plain: [Vec<Center>; 4] = Default::default();
        for d in Dir::ALL {
            let t = part.sq_step(s, d);
            let incoming = stars_towards(t, d.opposite());
            let outgoing = stars_towards(s, d);
            let total = between(s, d);
            if incoming + outgoing > total {
                return Err(PairingError::Regime { sub_square: s });
            }
            for _ in 0..incoming {
                leaves[d.index()].push(pool.next().ok_or(PairingError::Regime { sub_square: s })?);
            }
            for _ in 0..total - incoming - outgoing {
                plain[d.index()].push(pool.next().ok_or(PairingError::Regime { sub_square: s })?);
            }
        }
        if pool.next().is_some() {
            return Err(PairingError::Regime { sub_square: s });
        }
        leaf_slots.push(leaves);
        plain_slots.push(plain);
    }
    let mut components = Vec::new();
    let mut leaf_next = vec![[0usize; 4]; q];
    for s in 0..q {
        for i in 0..star_count[s] {
            let mut leaves = [0; 3];
            for (k, d) in star_dirs(i).into_iter().enumerate() {
                let t = part.sq_step(s, d);
                let back = d.opposite().index();
                leaves[k] = leaf_slots[t][back][leaf_next[t][back]];
                leaf_next[t][back] += 1;
            }
            components.push(Component::Star { center: groups[s][i], leaves });
        }
    }
    for s in 0..q {
        for d in [Dir::Right, Dir::Down] {
            let t = part.sq_step(s, d);
            let mine = &plain_slots[s][d.index()];
            let theirs = &plain_slots[t][d.opposite().index()];
            for (&a, &b) in mine.iter().zip(theirs) {
                components.push(Component::Edge(a, b));
            }
        }
    }
    Ok(GraphicalPairing { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alive_with_counts(part: &Partition, counts: &[usize]) -> Vec<bool> {
        let mut alive = vec![false; part.center_count()];
        for (sq, &c) in counts.iter().enumerate() {
            for l in 0..c {
                alive[part.center(sq, l)] = true;
            }
        }
        alive
    }

    #[test]
    fn twenty_shapes() {
        let part = Partition::relaxed(45, 3).unwrap();
        let s = shapes(&part, 4);
        assert_eq!(s.len(), 20);
        let distinct: BTreeSet<_> = s.iter().cloned().collect();
        assert_eq!(distinct.len(), 20);
    }

    #[test]
    fn empty_and_single_edge() {
        let part = Partition::relaxed(45, 3).unwrap();
        let alive = alive_with_counts(&part, &[1; 9]);
        assert_eq!(build_pairing(&part, &alive).unwrap(), GraphicalPairing::default());
        let alive = alive_with_counts(&part, &[2, 2, 1, 1, 1, 1, 1, 1, 1]);
        let p = build_pairing(&part, &alive).unwrap();
        assert_eq!(p.components, vec![Component::Edge(part.center(0, 1), part.center(1, 1))]);
        let diagonal = alive_with_counts(&part, &[2, 1, 1, 1, 2, 1, 1, 1, 1]);
        assert_eq!(build_pairing(&part, &diagonal), Err(PairingError::Infeasible));
    }

    #[test]
    fn two_per_square_is_valid() {
        let part = Partition::relaxed(45, 3).unwrap();
        let alive = alive_with_counts(&part, &[3; 9]);
        let p = build_pairing(&part, &alive).unwrap();
        let nc: Vec<_> = non_chosen_by_sq(&part, &alive).concat();
        assert_eq!(nc.len(), 18);
        p.validate(&part, &nc).unwrap();
    }

    #[test]
    fn constructive_regime() {
        let part = Partition::new(331, 3).unwrap();
        assert!(part.delta() >= 20);
        let counts = [20, 20, 21, 20, 20, 20, 20, 20, 20];
        let alive = alive_with_counts(&part, &counts);
        let p = build_pairing(&part, &alive).unwrap();
        let nc: Vec<_> = non_chosen_by_sq(&part, &alive).concat();
        p.validate(&part, &nc).unwrap();
    }
}
