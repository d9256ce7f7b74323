//! Tseitin instances: a connected graph with a parity charge per node.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::RngCore;

use crate::grid::{Graph, Torus};

/// Largest edge count accepted by the brute-force enumerator.
pub const BRUTE_FORCE_MAX_EDGES: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TseitinError {
    Disconnected,
    OddCharge,
    ChargeLength { expected: usize, got: usize },
    TooLarge { edges: usize },
}

impl fmt::Display for TseitinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TseitinError::Disconnected => write!(f, "graph is not connected"),
            TseitinError::OddCharge => write!(f, "total charge is odd, the instance has no solution"),
            TseitinError::ChargeLength { expected, got } => {
                write!(f, "charge vector has {got} entries, graph has {expected} nodes")
            }
            TseitinError::TooLarge { edges } => {
                write!(f, "{edges} edges exceed the brute-force limit of {BRUTE_FORCE_MAX_EDGES}")
            }
        }
    }
}

/// A CNF over variables `1..=vars`; literals are signed 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Cnf {
    pub vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| x[l.unsigned_abs() as usize - 1] == (l > 0)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    charges: Vec<bool>,
}

impl Instance {
    pub fn new(graph: Graph, charges: Vec<bool>) -> Result<Self, TseitinError> {
        if charges.len() != graph.node_count() {
            return Err(TseitinError::ChargeLength { expected: graph.node_count(), got: charges.len() });
        }
        if !graph.is_connected() {
            return Err(TseitinError::Disconnected);
        }
        Ok(Instance { graph, charges })
    }

    /// The torus with every charge equal to one.
    pub fn torus_all_ones(torus: &Torus) -> Self {
        let nodes = torus.graph().node_count();
        Instance { graph: torus.graph().clone(), charges: vec![true; nodes] }
    }

    pub fn torus(torus: &Torus, charges: Vec<bool>) -> Result<Self, TseitinError> {
        Self::new(torus.graph().clone(), charges)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn charges(&self) -> &[bool] {
        &self.charges
    }

    pub fn charge(&self, v: usize) -> bool {
        self.charges[v]
    }

    pub fn total_charge(&self) -> bool {
        self.charges.iter().fold(false, |a, &b| a ^ b)
    }

    pub fn is_contradiction(&self) -> bool {
        self.total_charge()
    }

    /// Dimension of the cycle space, `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.graph.edge_count() + 1 - self.graph.node_count()
    }

    /// Whether the parity constraint of `v` holds under total assignment `x`.
    pub fn node_satisfied(&self, v: usize, x: &[bool]) -> bool {
        let p = self.graph.incident(v).iter().fold(false, |a, &e| a ^ x[e]);
        p == self.charges[v]
    }

    pub fn is_solution(&self, x: &[bool]) -> bool {
        (0..self.graph.node_count()).all(|v| self.node_satisfied(v, x))
    }

    /// One clause per wrong-parity pattern of each node, node-major, patterns in
    /// lexicographic order with the lowest-numbered incident edge most significant.
    pub fn to_cnf(&self) -> Cnf {
        let mut clauses = Vec::new();
        for v in 0..self.graph.node_count() {
            clauses.extend(node_clauses(&self.graph, v, self.charges[v]));
        }
        Cnf { vars: self.graph.edge_count(), clauses }
    }

    /// `2^(|E|-|V|+1)` for even total charge, zero otherwise.
    pub fn solution_count(&self) -> BigUint {
        if self.total_charge() {
            BigUint::zero()
        } else {
            BigUint::one() << self.cycle_rank()
        }
    }

    /// Uniform solution: random non-tree edges of a BFS tree rooted at node 0,
    /// tree edges fixed by peeling leaves.
    pub fn sample_solution<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Vec<bool>, TseitinError> {
        sample_solution(&self.graph, &self.charges, rng)
    }

    /// All solutions as edge bitmasks (bit `e` is `x_e`), increasing.
    pub fn brute_force_solutions(&self) -> Result<Vec<u32>, TseitinError> {
        let m = self.graph.edge_count();
        if m > BRUTE_FORCE_MAX_EDGES {
            return Err(TseitinError::TooLarge { edges: m });
        }
        let masks: Vec<(u32, bool)> = (0..self.graph.node_count())
            .map(|v| (self.graph.incident(v).iter().fold(0u32, |a, &e| a | (1 << e)), self.charges[v]))
            .collect();
        Ok((0u32..(1u32 << m))
            .filter(|&x| masks.iter().all(|&(mask, c)| ((x & mask).count_ones() % 2 == 1) == c))
            .collect())
    }
}

/// The clauses of one node's parity constraint, in the order of [`Instance::to_cnf`].
pub fn node_clauses(graph: &Graph, v: usize, charge: bool) -> Vec<Vec<i32>> {
    let inc = graph.incident(v);
    let d = inc.len();
    let mut out = Vec::with_capacity(1 << d.saturating_sub(1));
    for pat in 0u32..(1 << d) {
        if (pat.count_ones() % 2 == 1) == charge {
            continue;
        }
        let clause = inc
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let lit = e as i32 + 1;
                if (pat >> (d - 1 - i)) & 1 == 1 {
                    -lit
                } else {
                    lit
                }
            })
            .collect();
        out.push(clause);
    }
    out
}

/// [`Instance::sample_solution`] without building an instance; `graph` must be connected.
pub fn sample_solution<R: RngCore + ?Sized>(graph: &Graph, charges: &[bool], rng: &mut R) -> Result<Vec<bool>, TseitinError> {
    if charges.iter().fold(false, |a, &b| a ^ b) {
        return Err(TseitinError::OddCharge);
    }
    let (order, parent) = graph.bfs_order(0);
    let m = graph.edge_count();
    let mut is_tree = vec![false; m];
    for p in parent.iter().flatten() {
        is_tree[*p] = true;
    }
    let mut x = vec![false; m];
    let mut residual = charges.to_vec();
    let mut word = 0u32;
    let mut left = 0;
    for e in 0..m {
        if is_tree[e] {
            continue;
        }
        if left == 0 {
            word = rng.next_u32();
            left = 32;
        }
        x[e] = word & 1 == 1;
        word >>= 1;
        left -= 1;
        if x[e] {
            let (a, b) = graph.edge(e);
            residual[a] ^= true;
            residual[b] ^= true;
        }
    }
    for &v in order.iter().rev() {
        if let Some(e) = parent[v] {
            if residual[v] {
                x[e] = true;
                residual[v] = false;
                residual[graph.other(e, v)] ^= true;
            }
        }
    }
    Ok(x)
}

/// Expand a bitmask into a boolean vector of length `m`.
pub fn mask_to_vec(mask: u32, m: usize) -> Vec<bool> {
    (0..m).map(|e| (mask >> e) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_node(charge: bool) -> Instance {
        // node 0 of the 3-torus; its clauses come first
        let t = Torus::new(3).unwrap();
        let mut charges = vec![false; 9];
        charges[0] = charge;
        Instance { graph: t.graph().clone(), charges }
    }

    #[test]
    fn clause_counts() {
        for c in [false, true] {
            let cnf = single_node(c).to_cnf();
            let first: Vec<_> = cnf.clauses[..8].to_vec();
            assert!(first.iter().all(|cl| cl.len() == 4));
            let negs: Vec<_> = first.iter().map(|cl| cl.iter().filter(|&&l| l < 0).count() % 2).collect();
            let want = if c { 0 } else { 1 };
            assert!(negs.iter().all(|&p| p == want));
        }
        let t = Torus::new(3).unwrap();
        assert_eq!(Instance::torus_all_ones(&t).to_cnf().clauses.len(), 72);
    }

    #[test]
    fn contradiction_and_counts() {
        let t = Torus::new(3).unwrap();
        let ones = Instance::torus_all_ones(&t);
        assert!(ones.is_contradiction());
        assert_eq!(ones.solution_count(), BigUint::zero());
        let mut two = vec![false; 9];
        two[0] = true;
        two[4] = true;
        let inst = Instance::torus(&t, two).unwrap();
        assert!(!inst.is_contradiction());
        assert_eq!(inst.solution_count(), BigUint::from(1024u32));
        assert!(!Instance::torus(&t, vec![false; 9]).unwrap().is_contradiction());
    }

    #[test]
    fn small_graphs() {
        let g = Graph::new(2, vec![(0, 1)]);
        let inst = Instance::new(g, vec![true, true]).unwrap();
        assert_eq!(inst.brute_force_solutions().unwrap(), vec![1]);
        let c4 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        let inst = Instance::new(c4, vec![false; 4]).unwrap();
        assert_eq!(inst.brute_force_solutions().unwrap(), vec![0, 15]);
        let split = Graph::new(4, vec![(0, 1), (2, 3)]);
        assert_eq!(Instance::new(split, vec![false; 4]), Err(TseitinError::Disconnected));
    }

    #[test]
    fn cnf_matches_brute_force() {
        let t = Torus::new(3).unwrap();
        let mut charges = vec![false; 9];
        charges[2] = true;
        charges[7] = true;
        let inst = Instance::torus(&t, charges).unwrap();
        let cnf = inst.to_cnf();
        let sols = inst.brute_force_solutions().unwrap();
        assert_eq!(sols.len(), 1024);
        let mut k = 0;
        for x in 0u32..(1 << 18) {
            let v = mask_to_vec(x, 18);
            let sat = cnf.satisfied_by(&v);
            assert_eq!(sat, sols.binary_search(&x).is_ok());
            k += sat as usize;
        }
        assert_eq!(k, 1024);
    }

    #[test]
    fn samples_are_solutions_and_deterministic() {
        let t = Torus::new(5).unwrap();
        let mut charges = vec![false; 25];
        charges[3] = true;
        charges[11] = true;
        let inst = Instance::torus(&t, charges).unwrap();
        let a = inst.sample_solution(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = inst.sample_solution(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(inst.is_solution(&a));
        let ones = Instance::torus_all_ones(&t);
        assert_eq!(ones.sample_solution(&mut ChaCha8Rng::seed_from_u64(1)), Err(TseitinError::OddCharge));
    }
}
