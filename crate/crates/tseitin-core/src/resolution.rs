//! Parity equations as clause sets, their resolution sums, and a
//! column-by-column resolution refutation of the grid Tseitin formula.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::Torus;
use crate::tseitin::{Cnf, Instance};

/// Literals are signed 1-based variables.
pub type Clause = Vec<i32>;

/// Largest equation accepted by [`parity_clauses`].
pub const MAX_PARITY_VARS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolutionError {
    Width(usize),
    PivotAbsent(u32),
    GridSize(usize),
    /// An input clause is not in the formula.
    NotInput { step: usize },
    ForwardReference { step: usize },
    /// Parents do not clash on exactly the pivot, or the stored resolvent differs.
    BadResolvent { step: usize },
}

impl fmt::Display for ResolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolutionError::Width(m) => write!(f, "equation over {m} variables, need 1 to {MAX_PARITY_VARS}"),
            ResolutionError::PivotAbsent(x) => write!(f, "pivot x{x} is not in both equations"),
            ResolutionError::GridSize(n) => write!(f, "grid side {n} must be odd and between 3 and 9"),
            ResolutionError::NotInput { step } => write!(f, "step {step}: clause is not in the formula"),
            ResolutionError::ForwardReference { step } => write!(f, "step {step}: parent does not precede it"),
            ResolutionError::BadResolvent { step } => write!(f, "step {step}: not a resolvent of its parents"),
        }
    }
}

/// The full-width clauses of `sum(vars) = parity`: one clause per
/// wrong-parity assignment, negative literals where that assignment is 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityClauseSet {
    /// Sorted 1-based variables.
    pub vars: Vec<u32>,
    pub parity: bool,
    pub clauses: Vec<Clause>,
}

impl ParityClauseSet {
    fn build(vars: &[u32], parity: bool) -> Self {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        let m = vars.len();
        let mut clauses = Vec::with_capacity(1 << m.saturating_sub(1));
        for pat in 0u32..(1 << m) {
            if (pat.count_ones() % 2 == 1) == parity {
                continue;
            }
            clauses.push(
                vars.iter()
                    .enumerate()
                    .map(|(i, &x)| if (pat >> (m - 1 - i)) & 1 == 1 { -(x as i32) } else { x as i32 })
                    .collect(),
            );
        }
        ParityClauseSet { vars, parity, clauses }
    }

    /// Whether `x` (indexed by 1-based variable) satisfies every clause.
    pub fn satisfied_by(&self, x: &dyn Fn(u32) -> bool) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| x(l.unsigned_abs()) == (l > 0)))
    }
}

/// Clause set of `sum(vars) = parity` over 1 to 20 distinct variables.
pub fn parity_clauses(vars: &[u32], parity: bool) -> Result<ParityClauseSet, ResolutionError> {
    let mut v = vars.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() || v.len() > MAX_PARITY_VARS || v.len() != vars.len() || v[0] == 0 {
        return Err(ResolutionError::Width(vars.len()));
    }
    Ok(ParityClauseSet::build(&v, parity))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Input,
    Resolve { left: usize, right: usize, pivot: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    /// Literals sorted by variable.
    pub clause: Clause,
    pub by: Justification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResolutionProof {
    pub steps: Vec<Step>,
}

impl ResolutionProof {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn max_width(&self) -> usize {
        self.steps.iter().map(|s| s.clause.len()).max().unwrap_or(0)
    }
}

impl fmt::Display for ResolutionProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            write!(f, "{i}:")?;
            for l in &s.clause {
                write!(f, " {l}")?;
            }
            match s.by {
                Justification::Input => writeln!(f, " 0 ; input")?,
                Justification::Resolve { left, right, pivot } => writeln!(f, " 0 ; res {left} {right} {pivot}")?,
            }
        }
        Ok(())
    }
}

fn normalize(c: &[i32]) -> Clause {
    let mut c = c.to_vec();
    c.sort_unstable_by_key(|l| (l.unsigned_abs(), *l));
    c.dedup();
    c
}

/// The resolvent of `a` and `b` on `pivot` when they clash on it alone.
pub fn resolve(a: &[i32], b: &[i32], pivot: u32) -> Option<Clause> {
    let clashes = a.iter().filter(|&&l| b.contains(&-l)).count();
    let p = pivot as i32;
    if clashes != 1 || !((a.contains(&p) && b.contains(&-p)) || (a.contains(&-p) && b.contains(&p))) {
        return None;
    }
    let rest: Vec<i32> = a.iter().chain(b).copied().filter(|l| l.unsigned_abs() != pivot).collect();
    Some(normalize(&rest))
}

/// Checks every step against `cnf`; `Ok(true)` iff the last clause is empty.
pub fn check_resolution(proof: &ResolutionProof, cnf: &Cnf) -> Result<bool, ResolutionError> {
    let mut inputs: Vec<Clause> = cnf.clauses.iter().map(|c| normalize(c)).collect();
    inputs.sort();
    for (i, s) in proof.steps.iter().enumerate() {
        match s.by {
            Justification::Input => {
                if inputs.binary_search(&normalize(&s.clause)).is_err() {
                    return Err(ResolutionError::NotInput { step: i });
                }
            }
            Justification::Resolve { left, right, pivot } => {
                if left >= i || right >= i {
                    return Err(ResolutionError::ForwardReference { step: i });
                }
                match resolve(&proof.steps[left].clause, &proof.steps[right].clause, pivot) {
                    Some(r) if r == normalize(&s.clause) => {}
                    _ => return Err(ResolutionError::BadResolvent { step: i }),
                }
            }
        }
    }
    Ok(proof.steps.last().is_some_and(|s| s.clause.is_empty()))
}

/// Appends steps, reusing earlier steps for repeated clauses.
#[derive(Debug, Default)]
pub struct ProofBuilder {
    pub proof: ResolutionProof,
    index: BTreeMap<Clause, usize>,
}

impl ProofBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, clause: Clause, by: Justification) -> usize {
        if let Some(&i) = self.index.get(&clause) {
            return i;
        }
        let i = self.proof.steps.len();
        self.index.insert(clause.clone(), i);
        self.proof.steps.push(Step { clause, by });
        i
    }

    pub fn input(&mut self, clause: &[i32]) -> usize {
        self.push(normalize(clause), Justification::Input)
    }

    fn step_of(&self, clause: &[i32]) -> usize {
        self.index[clause]
    }

    /// Adds every clause of `set` as an input.
    pub fn inputs(&mut self, set: &ParityClauseSet) {
        for c in &set.clauses {
            self.input(c);
        }
    }

    fn derive(&mut self, a: &[i32], b: &[i32], pivot: u32) -> Clause {
        let r = resolve(a, b, pivot).expect("clash on the pivot alone");
        let (left, right) = (self.step_of(a), self.step_of(b));
        self.push(r.clone(), Justification::Resolve { left, right, pivot });
        r
    }
}

/// Counts from one [`resolve_parities`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SumStats {
    /// Clause pairs of the two inputs.
    pub pairs: usize,
    /// Resolvents on the pivot.
    pub resolvents: usize,
    /// Steps eliminating other shared variables.
    pub eliminations: usize,
}

/// Derives the clause set of the sum of two equations, both already in
/// `pb`: resolve every clashing pair on `pivot`, then eliminate each other
/// shared variable in increasing order.
pub fn resolve_parities(
    pb: &mut ProofBuilder,
    a: &ParityClauseSet,
    b: &ParityClauseSet,
    pivot: u32,
) -> Result<(ParityClauseSet, SumStats), ResolutionError> {
    if a.vars.binary_search(&pivot).is_err() || b.vars.binary_search(&pivot).is_err() {
        return Err(ResolutionError::PivotAbsent(pivot));
    }
    let shared: Vec<u32> = a.vars.iter().copied().filter(|x| b.vars.binary_search(x).is_ok()).collect();
    let mut stats = SumStats { pairs: a.clauses.len() * b.clauses.len(), ..SumStats::default() };
    // Index b's clauses by their signs on the shared variables.
    let key = |c: &[i32]| -> Vec<i32> { c.iter().copied().filter(|l| shared.binary_search(&l.unsigned_abs()).is_ok()).collect() };
    let mut by_key: BTreeMap<Vec<i32>, Vec<usize>> = BTreeMap::new();
    for (j, c) in b.clauses.iter().enumerate() {
        by_key.entry(key(c)).or_default().push(j);
    }
    let mut cur: Vec<Clause> = Vec::new();
    for c in &a.clauses {
        let want: Vec<i32> = key(c).into_iter().map(|l| if l.unsigned_abs() == pivot { -l } else { l }).collect();
        for &j in by_key.get(&want).into_iter().flatten() {
            cur.push(pb.derive(c, &b.clauses[j], pivot));
            stats.resolvents += 1;
        }
    }
    for &z in shared.iter().filter(|&&z| z != pivot) {
        let zi = z as i32;
        let mut pos: BTreeMap<Clause, &Clause> = BTreeMap::new();
        for c in &cur {
            if c.contains(&zi) {
                pos.insert(c.iter().copied().filter(|&l| l != zi).collect(), c);
            }
        }
        let mut next = Vec::new();
        for c in &cur {
            if c.contains(&-zi) {
                let rest: Clause = c.iter().copied().filter(|&l| l != -zi).collect();
                if let Some(p) = pos.get(&rest) {
                    next.push(pb.derive(p, c, z));
                    stats.eliminations += 1;
                }
            }
        }
        cur = next;
    }
    let vars: Vec<u32> = a.vars.iter().chain(&b.vars).copied().filter(|x| shared.binary_search(x).is_err()).collect();
    let target = ParityClauseSet::build(&vars, a.parity ^ b.parity);
    let mut got = cur;
    got.sort();
    got.dedup();
    let mut want = target.clauses.clone();
    want.sort();
    debug_assert_eq!(got, want);
    Ok((target, stats))
}

/// Statistics of a grid refutation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefutationStats {
    pub steps: usize,
    /// Most variables in any intermediate equation.
    pub max_equation: usize,
    pub max_clause: usize,
}

/// Resolution refutation of the all-ones Tseitin formula on the `n x n`
/// torus: add node equations column by column, top to bottom, until `0 = 1`.
pub fn build_grid_refutation(n: usize) -> Result<(ResolutionProof, RefutationStats), ResolutionError> {
    if n.is_multiple_of(2) || !(3..=9).contains(&n) {
        return Err(ResolutionError::GridSize(n));
    }
    let torus = Torus::new(n).map_err(|_| ResolutionError::GridSize(n))?;
    let g = torus.graph();
    let node_eq = |v: usize| ParityClauseSet::build(&g.incident(v).iter().map(|&e| e as u32 + 1).collect::<Vec<_>>(), true);
    let mut pb = ProofBuilder::new();
    let mut stats = RefutationStats::default();
    let mut acc: Option<ParityClauseSet> = None;
    for c in 0..n {
        for r in 0..n {
            let eq = node_eq(torus.node(r, c));
            pb.inputs(&eq);
            acc = Some(match acc {
                None => eq,
                Some(prev) => {
                    let pivot = *prev.vars.iter().find(|x| eq.vars.binary_search(x).is_ok()).expect("adjacent to processed nodes");
                    resolve_parities(&mut pb, &prev, &eq, pivot)?.0
                }
            });
            stats.max_equation = stats.max_equation.max(acc.as_ref().map_or(0, |a| a.vars.len()));
        }
    }
    stats.steps = pb.proof.len();
    stats.max_clause = pb.proof.max_width();
    Ok((pb.proof, stats))
}

/// The formula [`build_grid_refutation`] refutes.
pub fn grid_cnf(n: usize) -> Result<Cnf, ResolutionError> {
    let torus = Torus::new(n).map_err(|_| ResolutionError::GridSize(n))?;
    Ok(Instance::torus_all_ones(&torus).to_cnf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn small_parity_sets() {
        let s = parity_clauses(&[1, 2], false).unwrap();
        assert_eq!(s.clauses, vec![vec![1, -2], vec![-1, 2]]);
        assert_eq!(parity_clauses(&[1], true).unwrap().clauses, vec![vec![1]]);
        let s = parity_clauses(&[1, 2, 3, 4], true).unwrap();
        assert_eq!(s.clauses.len(), 8);
        for m in 0u32..16 {
            assert_eq!(s.satisfied_by(&|x| m >> (x - 1) & 1 == 1), m.count_ones() % 2 == 1);
        }
        assert!(parity_clauses(&[], true).is_err());
        assert!(parity_clauses(&(1..=21).collect::<Vec<_>>(), true).is_err());
    }

    #[test]
    fn checker_basics() {
        let cnf = Cnf { vars: 1, clauses: vec![vec![1], vec![-1]] };
        let p = ResolutionProof {
            steps: vec![
                Step { clause: vec![1], by: Justification::Input },
                Step { clause: vec![-1], by: Justification::Input },
                Step { clause: vec![], by: Justification::Resolve { left: 0, right: 1, pivot: 1 } },
            ],
        };
        assert_eq!(check_resolution(&p, &cnf), Ok(true));
        assert_eq!(resolve(&[1, 2], &[-1, -2], 1), None);
        let cnf = Cnf { vars: 2, clauses: vec![vec![1, 2], vec![-1, -2]] };
        let bad = ResolutionProof {
            steps: vec![
                Step { clause: vec![1, 2], by: Justification::Input },
                Step { clause: vec![-1, -2], by: Justification::Input },
                Step { clause: vec![], by: Justification::Resolve { left: 0, right: 1, pivot: 1 } },
            ],
        };
        assert_eq!(check_resolution(&bad, &cnf), Err(ResolutionError::BadResolvent { step: 2 }));
    }

    #[test]
    fn sums_of_equations() {
        let mut pb = ProofBuilder::new();
        let a = parity_clauses(&[1, 2], true).unwrap();
        let b = parity_clauses(&[1, 3], true).unwrap();
        pb.inputs(&a);
        pb.inputs(&b);
        let (s, st) = resolve_parities(&mut pb, &a, &b, 1).unwrap();
        assert_eq!((s.vars.clone(), s.parity), (vec![2, 3], false));
        assert_eq!(st, SumStats { pairs: 4, resolvents: 2, eliminations: 0 });
        let cnf = Cnf { vars: 3, clauses: a.clauses.iter().chain(&b.clauses).cloned().collect() };
        assert_eq!(check_resolution(&pb.proof, &cnf), Ok(false));
        let (same, _) = resolve_parities(&mut pb, &a, &a, 1).unwrap();
        assert!(same.vars.is_empty() && same.clauses.is_empty());
        assert_eq!(resolve_parities(&mut pb, &a, &b, 2), Err(ResolutionError::PivotAbsent(2)));
    }

    #[test]
    fn grid_three_is_refuted() {
        let (p, st) = build_grid_refutation(3).unwrap();
        assert_eq!(check_resolution(&p, &grid_cnf(3).unwrap()), Ok(true));
        assert!(st.max_equation <= 2 * 3 + 2);
        assert!(build_grid_refutation(4).is_err());
    }
}
