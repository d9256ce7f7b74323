//! Decision tree workloads for experiments.

use alloc::vec::Vec;
use rand_core::RngCore;

use crate::consistency::{Consistency, LcError, Strict};
use crate::ecdt::Context;
use crate::grid::Dir;
use crate::restriction::{uniform, Setup};
use crate::tree::Tree;

/// Grid edges that have an associated center.
pub fn associated_edges(setup: &Setup) -> Vec<usize> {
    (0..setup.edges()).filter(|&e| setup.paths.associated_center(e).is_some()).collect()
}

fn coin<R: RngCore + ?Sized>(rng: &mut R, num: u32, den: u32) -> bool {
    rng.next_u32() % den < num
}

fn grow<R: RngCore + ?Sized>(rng: &mut R, depth: usize, used: &mut Vec<usize>, pick: &mut dyn FnMut(&mut R) -> usize) -> Tree {
    if depth == 0 || (!used.is_empty() && coin(rng, 1, 8)) {
        return Tree::leaf(coin(rng, 1, 2));
    }
    let x = loop {
        let x = pick(rng);
        if !used.contains(&x) {
            break x;
        }
    };
    used.push(x);
    let zero = grow(rng, depth - 1, used, pick);
    let one = grow(rng, depth - 1, used, pick);
    used.pop();
    if zero == one {
        zero
    } else {
        Tree::query(x, zero, one)
    }
}

/// A random tree of depth at most `t` over `pool`, locally consistent under `lc`.
pub fn random_tree<R: RngCore + ?Sized, C: Consistency + ?Sized>(rng: &mut R, lc: &C, pool: &[usize], t: usize) -> Result<Tree, LcError> {
    loop {
        let tree = grow(rng, t, &mut Vec::new(), &mut |r| pool[uniform(r, pool.len())]);
        if tree.is_locally_consistent(lc)? {
            return Ok(tree);
        }
    }
}

/// `m` random trees over the edges with associated centers, checked against
/// the all-ones Tseitin instance on the big grid.
pub fn random_trees<R: RngCore + ?Sized>(rng: &mut R, setup: &Setup, m: usize, t: usize) -> Result<Vec<Tree>, LcError> {
    let pool = associated_edges(setup);
    let charges = alloc::vec![true; setup.big().graph().node_count()];
    let lc = Strict::new(setup.big(), &charges);
    (0..m).map(|_| random_tree(rng, &lc, &pool, t)).collect()
}

/// Trees querying first edges at chosen centers of `ctx`, each with a 1-leaf,
/// so that forcing them needs information at chosen centers.
pub fn adversarial_trees<R: RngCore + ?Sized>(rng: &mut R, ctx: &Context, m: usize, t: usize) -> Vec<Tree> {
    let part = &ctx.setup.part;
    let sqs = part.sub_squares();
    let mut pick = |r: &mut R| {
        let c = ctx.chosen(uniform(r, sqs));
        part.first_edge(c, Dir::ALL[uniform(r, 4)])
    };
    (0..m)
        .map(|_| loop {
            let tree = grow(rng, t, &mut Vec::new(), &mut pick);
            if tree.has_leaf(true) && tree.depth() > 0 {
                break tree;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::sample_partial;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    #[test]
    fn trees_respect_depth_and_vars() {
        let s = Setup::relaxed(45, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in random_trees(&mut rng, &s, 20, 2).unwrap() {
            assert!(t.depth() <= 2);
            t.validate().unwrap();
        }
        let ctx = Context::new(&s, sample_partial(&s, 11, &mut rng).unwrap()).unwrap();
        for t in adversarial_trees(&mut rng, &ctx, 20, 2) {
            assert!(t.depth() >= 1 && t.depth() <= 2 && t.has_leaf(true));
        }
    }
}
