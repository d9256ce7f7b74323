//! Partial assignments to edge variables, closures and local consistency.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::gf2::System;
use crate::grid::{Graph, Torus, UnionFind};
use crate::tseitin::Instance;

/// Edge variable to value.
pub type Assignment = BTreeMap<usize, bool>;

/// Largest number of free variables the brute-force checker enumerates.
pub const BRUTE_FORCE_MAX_VARS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LcError {
    SupportTooLarge { support: usize, limit: usize },
    NoGiantComponent,
    TooManyVariables { vars: usize },
    Inconsistent,
}

impl fmt::Display for LcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LcError::SupportTooLarge { support, limit } => {
                write!(f, "support of {support} nodes exceeds the limit {limit}")
            }
            LcError::NoGiantComponent => write!(f, "no untouched row, the giant component is undefined"),
            LcError::TooManyVariables { vars } => {
                write!(f, "{vars} free variables exceed the brute-force limit {BRUTE_FORCE_MAX_VARS}")
            }
            LcError::Inconsistent => write!(f, "assignment is not locally consistent"),
        }
    }
}

/// Nodes touching an assigned variable.
pub fn support(graph: &Graph, tau: &Assignment) -> BTreeSet<usize> {
    let mut s = BTreeSet::new();
    for &e in tau.keys() {
        let (a, b) = graph.edge(e);
        s.insert(a);
        s.insert(b);
    }
    s
}

/// Union of two assignments, `None` on a direct conflict.
pub fn union(a: &Assignment, b: &Assignment) -> Option<Assignment> {
    let mut out = a.clone();
    for (&x, &v) in b {
        if *out.entry(x).or_insert(v) != v {
            return None;
        }
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureResult {
    pub closure: BTreeSet<usize>,
    pub giant: BTreeSet<usize>,
    pub small: Vec<Vec<usize>>,
}

/// Largest node set accepted by [`closure`]: `floor(2n/3)`.
pub fn closure_limit(torus: &Torus) -> usize {
    2 * torus.n() / 3
}

/// `U` together with every component of the complement except the one
/// containing a full untouched row.
pub fn closure(torus: &Torus, u: &BTreeSet<usize>) -> Result<ClosureResult, LcError> {
    let limit = closure_limit(torus);
    if u.len() > limit {
        return Err(LcError::SupportTooLarge { support: u.len(), limit });
    }
    let n = torus.n();
    let g = torus.graph();
    let free_row = (0..n).find(|&r| (0..n).all(|c| !u.contains(&torus.node(r, c)))).ok_or(LcError::NoGiantComponent)?;
    let mut comp = vec![usize::MAX; g.node_count()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..g.node_count() {
        if u.contains(&s) || comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for w in torus.neighbors(v) {
                if !u.contains(&w) && comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    let giant_id = comp[torus.node(free_row, 0)];
    let mut closure = u.clone();
    let mut small = Vec::new();
    let mut giant = BTreeSet::new();
    for (id, members) in comps.into_iter().enumerate() {
        if id == giant_id {
            giant.extend(members);
        } else {
            closure.extend(members.iter().copied());
            small.push(members);
        }
    }
    Ok(ClosureResult { closure, giant, small })
}

/// A local consistency notion on partial edge assignments.
pub trait Consistency {
    fn graph(&self) -> &Graph;

    fn check(&self, tau: &Assignment) -> Result<bool, LcError>;

    /// The value of `x` if exactly one extension is consistent (or `x` is assigned).
    fn implied(&self, tau: &Assignment, x: usize) -> Result<Option<bool>, LcError> {
        if let Some(&b) = tau.get(&x) {
            return Ok(Some(b));
        }
        let mut t = tau.clone();
        t.insert(x, false);
        let zero = self.check(&t)?;
        t.insert(x, true);
        let one = self.check(&t)?;
        Ok(match (zero, one) {
            (true, false) => Some(false),
            (false, true) => Some(true),
            _ => None,
        })
    }

    fn pairwise(&self, a: &Assignment, b: &Assignment) -> Result<bool, LcError> {
        match union(a, b) {
            Some(u) => self.check(&u),
            None => Ok(false),
        }
    }

    /// A consistent extension of `tau` assigning `x`, trying 0 before 1.
    fn extend(&self, tau: &Assignment, x: usize) -> Result<Assignment, LcError> {
        if tau.contains_key(&x) {
            return Ok(tau.clone());
        }
        for b in [false, true] {
            let mut t = tau.clone();
            t.insert(x, b);
            if self.check(&t)? {
                return Ok(t);
            }
        }
        Err(LcError::Inconsistent)
    }
}

/// Consistency on the torus via closures of the support.
#[derive(Clone, Copy, Debug)]
pub struct Strict<'a> {
    pub torus: &'a Torus,
    pub charges: &'a [bool],
}

impl<'a> Strict<'a> {
    pub fn new(torus: &'a Torus, charges: &'a [bool]) -> Self {
        Strict { torus, charges }
    }

    /// The constraints of the closure nodes over their incident variables,
    /// with `tau` substituted: (free variables, equations as (vars, rhs)).
    fn subsystem(&self, tau: &Assignment) -> Result<(Vec<usize>, Vec<(Vec<usize>, bool)>), LcError> {
        let g = self.torus.graph();
        let c = closure(self.torus, &support(g, tau))?.closure;
        let mut free = BTreeSet::new();
        let mut eqs = Vec::with_capacity(c.len());
        for &v in &c {
            let mut rhs = self.charges[v];
            let mut vars = Vec::new();
            for &e in g.incident(v) {
                match tau.get(&e) {
                    Some(&b) => rhs ^= b,
                    None => {
                        free.insert(e);
                        vars.push(e);
                    }
                }
            }
            eqs.push((vars, rhs));
        }
        Ok((free.into_iter().collect(), eqs))
    }

    /// Exhaustive extension search over the closure subsystem.
    pub fn check_brute_force(&self, tau: &Assignment) -> Result<bool, LcError> {
        let (free, eqs) = self.subsystem(tau)?;
        if free.len() > BRUTE_FORCE_MAX_VARS {
            return Err(LcError::TooManyVariables { vars: free.len() });
        }
        let masks: Vec<(u32, bool)> = eqs
            .iter()
            .map(|(vars, rhs)| {
                let m = vars.iter().fold(0u32, |m, e| m | 1 << free.binary_search(e).unwrap());
                (m, *rhs)
            })
            .collect();
        Ok((0u32..(1u32 << free.len())).any(|x| masks.iter().all(|&(m, r)| ((x & m).count_ones() & 1 == 1) == r)))
    }

    /// Number of free variables in the closure subsystem of `tau`.
    pub fn subsystem_size(&self, tau: &Assignment) -> Result<usize, LcError> {
        Ok(self.subsystem(tau)?.0.len())
    }
}

impl Consistency for Strict<'_> {
    fn graph(&self) -> &Graph {
        self.torus.graph()
    }

    fn check(&self, tau: &Assignment) -> Result<bool, LcError> {
        let (free, eqs) = self.subsystem(tau)?;
        let mut sys = System::new(free.len());
        for (vars, rhs) in eqs {
            sys.push(vars.iter().map(|e| free.binary_search(e).unwrap()), rhs);
        }
        Ok(sys.is_consistent())
    }
}

/// The reduced-grid rule: after substituting `tau`, the graph of unassigned
/// edges has exactly one component of odd residual charge and that component
/// contains an edge.
#[derive(Clone, Copy, Debug)]
pub struct Weak<'a> {
    pub inst: &'a Instance,
}

impl<'a> Weak<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Weak { inst }
    }
}

impl Consistency for Weak<'_> {
    fn graph(&self) -> &Graph {
        self.inst.graph()
    }

    fn check(&self, tau: &Assignment) -> Result<bool, LcError> {
        let g = self.inst.graph();
        let nodes = g.node_count();
        let mut residual = self.inst.charges().to_vec();
        let mut uf = UnionFind::new(nodes);
        let mut has_edge = vec![false; nodes];
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            match tau.get(&e) {
                Some(&true) => {
                    residual[a] ^= true;
                    residual[b] ^= true;
                }
                Some(&false) => {}
                None => {
                    uf.union(a, b);
                    has_edge[a] = true;
                    has_edge[b] = true;
                }
            }
        }
        let mut odd = vec![false; nodes];
        let mut edged = vec![false; nodes];
        for v in 0..nodes {
            let r = uf.find(v);
            odd[r] ^= residual[v];
            edged[r] |= has_edge[v];
        }
        let odd_roots: Vec<usize> = (0..nodes).filter(|&v| uf.find(v) == v && odd[v]).collect();
        Ok(odd_roots.len() == 1 && edged[odd_roots[0]])
    }
}
