//! Full restrictions, partial restrictions, their sampling, composition
//! through a pairing and the clause-level audit of a full restriction.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::consistency::Weak;
use crate::grid::{Dir, Torus};
use crate::pairing::{build_pairing, non_chosen_by_sq, GraphicalPairing, PairingError};
use crate::partition::{Center, GeometryError, Partition, PathId, PathTable};
use crate::tree::Image;
use crate::tseitin::{node_clauses, sample_solution, Cnf, Instance, TseitinError};

/// Rejection-sampling attempts before giving up.
pub const MAX_TRIES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RestrictionError {
    EvenK(usize),
    Infeasible { k: usize, lo: usize, hi: usize, delta: usize },
    Rejection { tries: usize },
    EmptySubSquare(usize),
    Mismatch,
    Pairing(PairingError),
    Tseitin(TseitinError),
    BadBase { node: usize },
    Audit { node: usize },
}

impl fmt::Display for RestrictionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RestrictionError::EvenK(k) => write!(f, "k={k} must be odd"),
            RestrictionError::Infeasible { k, lo, hi, delta } => {
                write!(f, "k={k} cannot be split into per-sub-square counts in [{lo}, {hi}] with {delta} centers each")
            }
            RestrictionError::Rejection { tries } => write!(f, "no admissible alive set after {tries} tries"),
            RestrictionError::EmptySubSquare(sq) => write!(f, "sub-square {sq} has no alive center"),
            RestrictionError::Mismatch => write!(f, "pairing does not match the alive set"),
            RestrictionError::Pairing(e) => write!(f, "{e}"),
            RestrictionError::Tseitin(e) => write!(f, "{e}"),
            RestrictionError::BadBase { node } => write!(f, "base assignment violates the charge at node {node}"),
            RestrictionError::Audit { node } => write!(f, "clauses of node {node} fit no audit case"),
        }
    }
}

impl From<PairingError> for RestrictionError {
    fn from(e: PairingError) -> Self {
        RestrictionError::Pairing(e)
    }
}

impl From<TseitinError> for RestrictionError {
    fn from(e: TseitinError) -> Self {
        RestrictionError::Tseitin(e)
    }
}

/// Geometry shared by all restrictions of one `(n1, n2)` pair.
#[derive(Clone, Debug)]
pub struct Setup {
    pub part: Partition,
    pub paths: PathTable,
    pub reduced: Torus,
    pub reduced_inst: Instance,
}

impl Setup {
    pub fn new(n1: usize, n2: usize) -> Result<Self, GeometryError> {
        Ok(Self::from_partition(Partition::new(n1, n2)?))
    }

    pub fn relaxed(n1: usize, n2: usize) -> Result<Self, GeometryError> {
        Ok(Self::from_partition(Partition::relaxed(n1, n2)?))
    }

    pub fn from_partition(part: Partition) -> Self {
        let paths = PathTable::new(&part);
        let reduced = Torus::new_unchecked(part.n2());
        let reduced_inst = Instance::torus_all_ones(&reduced);
        Setup { part, paths, reduced, reduced_inst }
    }

    pub fn big(&self) -> &Torus {
        self.part.torus()
    }

    pub fn edges(&self) -> usize {
        self.big().graph().edge_count()
    }

    /// Consistency rule on the reduced grid.
    pub fn weak(&self) -> Weak<'_> {
        Weak::new(&self.reduced_inst)
    }

    /// Reduced variable of the chosen path leaving sub-square `sq` in direction `d`.
    pub fn reduced_var(&self, sq: usize, d: Dir) -> usize {
        self.reduced.edge_at(sq, d)
    }

    /// The two sub-squares joined by reduced variable `y` (owner first).
    pub fn reduced_ends(&self, y: usize) -> (usize, usize) {
        self.reduced.graph().edge(y)
    }
}

/// Integer per-sub-square alive counts allowed for `k`: `[floor(0.99k/q), ceil(1.01k/q)]`, at least 1.
pub fn alive_bounds(k: usize, n2: usize) -> (usize, usize) {
    let q = n2 * n2;
    let lo = (99 * k / (100 * q)).max(1);
    let hi = (101 * k).div_ceil(100 * q);
    (lo, hi)
}

pub fn alive_counts(part: &Partition, alive: &[bool]) -> Vec<usize> {
    (0..part.sub_squares()).map(|sq| (0..part.delta()).filter(|&l| alive[part.center(sq, l)]).count()).collect()
}

/// The alive center with the lowest row in each sub-square.
pub fn chosen_centers(part: &Partition, alive: &[bool]) -> Result<Vec<Center>, RestrictionError> {
    (0..part.sub_squares())
        .map(|sq| {
            (0..part.delta())
                .map(|l| part.center(sq, l))
                .find(|&c| alive[c])
                .ok_or(RestrictionError::EmptySubSquare(sq))
        })
        .collect()
}

/// Counts within bounds and a pairing of the non-chosen centers exists.
pub fn is_admissible(part: &Partition, alive: &[bool], k: usize) -> bool {
    let (lo, hi) = alive_bounds(k, part.n2());
    let counts = alive_counts(part, alive);
    counts.iter().sum::<usize>() == k
        && counts.iter().all(|&c| (lo..=hi).contains(&c))
        && build_pairing(part, alive).is_ok()
}

fn check_k(part: &Partition, k: usize) -> Result<(), RestrictionError> {
    if k.is_multiple_of(2) {
        return Err(RestrictionError::EvenK(k));
    }
    let q = part.sub_squares();
    let (lo, hi) = alive_bounds(k, part.n2());
    let top = hi.min(part.delta());
    if lo * q > k || top * q < k || lo > part.delta() {
        return Err(RestrictionError::Infeasible { k, lo, hi, delta: part.delta() });
    }
    Ok(())
}

/// Uniform admissible `k`-subset of the centers by rejection.
pub fn sample_alive<R: RngCore + ?Sized>(part: &Partition, k: usize, rng: &mut R) -> Result<Vec<bool>, RestrictionError> {
    check_k(part, k)?;
    let m = part.center_count();
    let mut idx: Vec<usize> = (0..m).collect();
    for _ in 0..MAX_TRIES {
        for i in 0..k {
            let j = i + uniform(rng, m - i);
            idx.swap(i, j);
        }
        let mut alive = vec![false; m];
        for &c in &idx[..k] {
            alive[c] = true;
        }
        if is_admissible(part, &alive, k) {
            return Ok(alive);
        }
    }
    Err(RestrictionError::Rejection { tries: MAX_TRIES })
}

/// Uniform integer in `0..n` by rejection.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    let n = n as u64;
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % n) as usize;
        }
    }
}

fn base_charges(part: &Partition, zero_at: impl Iterator<Item = Center>) -> Vec<bool> {
    let mut charges = vec![true; part.torus().graph().node_count()];
    for c in zero_at {
        charges[part.center_node(c)] = false;
    }
    charges
}

fn check_base(part: &Partition, charges: &[bool], x: &[bool]) -> Result<(), RestrictionError> {
    let g = part.torus().graph();
    for v in 0..g.node_count() {
        let p = g.incident(v).iter().fold(false, |a, &e| a ^ x[e]);
        if p != charges[v] {
            return Err(RestrictionError::BadBase { node: v });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullRestriction {
    alive: Vec<bool>,
    chosen: Vec<Center>,
    sigma0: Vec<bool>,
    /// Grid edge to reduced variable plus one (zero: not on a chosen path).
    reduced_of: Vec<u32>,
}

impl FullRestriction {
    pub fn new(setup: &Setup, alive: Vec<bool>, sigma0: Vec<bool>) -> Result<Self, RestrictionError> {
        let part = &setup.part;
        let chosen = chosen_centers(part, &alive)?;
        let charges = base_charges(part, chosen.iter().copied());
        check_base(part, &charges, &sigma0)?;
        let mut reduced_of = vec![0u32; setup.edges()];
        for sq in 0..part.sub_squares() {
            for d in [Dir::Right, Dir::Down] {
                let other = chosen[part.sq_step(sq, d)];
                let id = setup.paths.id_between(part, chosen[sq], other).expect("adjacent sub-squares");
                let y = setup.reduced_var(sq, d) as u32 + 1;
                for e in setup.paths.path(id).edges() {
                    reduced_of[e] = y;
                }
            }
        }
        Ok(FullRestriction { alive, chosen, sigma0, reduced_of })
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn chosen(&self) -> &[Center] {
        &self.chosen
    }

    pub fn sigma0(&self) -> &[bool] {
        &self.sigma0
    }

    /// Reduced variable of the chosen path through `e`, if any.
    pub fn reduced_var(&self, e: usize) -> Option<usize> {
        match self.reduced_of[e] {
            0 => None,
            y => Some(y as usize - 1),
        }
    }

    /// `sigma0(e)` off chosen paths, otherwise `y_P` when `sigma0(e) = 1` and `not y_P` when 0.
    pub fn image(&self, e: usize) -> Image {
        match self.reduced_var(e) {
            None => Image::Const(self.sigma0[e]),
            Some(path) => Image::Lit { path, negated: !self.sigma0[e] },
        }
    }

    /// Grid path id of chosen reduced variable `y`.
    pub fn chosen_path(&self, setup: &Setup, y: usize) -> PathId {
        let (a, b) = setup.reduced_ends(y);
        setup.paths.id_between(&setup.part, self.chosen[a], self.chosen[b]).expect("adjacent sub-squares")
    }
}

pub fn sample_full<R: RngCore + ?Sized>(setup: &Setup, k: usize, rng: &mut R) -> Result<FullRestriction, RestrictionError> {
    let alive = sample_alive(&setup.part, k, rng)?;
    let chosen = chosen_centers(&setup.part, &alive)?;
    let charges = base_charges(&setup.part, chosen.into_iter());
    let sigma0 = sample_solution(setup.big().graph(), &charges, rng)?;
    FullRestriction::new(setup, alive, sigma0)
}

/// Value of an edge variable under a partial restriction:
/// `base XOR (XOR of z_P over paths)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialImage {
    pub base: bool,
    pub paths: Vec<PathId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialRestriction {
    alive: Vec<bool>,
    rho0: Vec<bool>,
}

impl PartialRestriction {
    pub fn new(setup: &Setup, alive: Vec<bool>, rho0: Vec<bool>) -> Result<Self, RestrictionError> {
        let charges = base_charges(&setup.part, (0..alive.len()).filter(|&c| alive[c]));
        check_base(&setup.part, &charges, &rho0)?;
        Ok(PartialRestriction { alive, rho0 })
    }

    /// Builds without checking the charges of `rho0`.
    pub fn from_parts(alive: Vec<bool>, rho0: Vec<bool>) -> Self {
        PartialRestriction { alive, rho0 }
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn is_alive(&self, c: Center) -> bool {
        self.alive[c]
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn rho0(&self) -> &[bool] {
        &self.rho0
    }

    pub fn into_parts(self) -> (Vec<bool>, Vec<bool>) {
        (self.alive, self.rho0)
    }

    pub fn chosen(&self, part: &Partition) -> Result<Vec<Center>, RestrictionError> {
        chosen_centers(part, &self.alive)
    }

    /// Alive paths (both endpoints alive) through `e`.
    pub fn alive_paths(&self, setup: &Setup, e: usize) -> Vec<PathId> {
        setup
            .paths
            .through(e)
            .iter()
            .map(|&id| id as usize)
            .filter(|&id| {
                let (a, b) = setup.paths.endpoints(id);
                self.alive[a] && self.alive[b]
            })
            .collect()
    }

    pub fn image(&self, setup: &Setup, e: usize) -> PartialImage {
        PartialImage { base: self.rho0[e], paths: self.alive_paths(setup, e) }
    }
}

pub fn sample_partial<R: RngCore + ?Sized>(setup: &Setup, k: usize, rng: &mut R) -> Result<PartialRestriction, RestrictionError> {
    let alive = sample_alive(&setup.part, k, rng)?;
    let charges = base_charges(&setup.part, (0..alive.len()).filter(|&c| alive[c]));
    let rho0 = sample_solution(setup.big().graph(), &charges, rng)?;
    Ok(PartialRestriction { alive, rho0 })
}

/// `sigma = pi(rho)`: flips `rho0` along the pairing edges and along the chosen paths.
pub fn compose(setup: &Setup, rho: &PartialRestriction, pi: &GraphicalPairing) -> Result<FullRestriction, RestrictionError> {
    let part = &setup.part;
    let non_chosen: Vec<Center> = non_chosen_by_sq(part, &rho.alive).concat();
    pi.validate(part, &non_chosen).map_err(|_| RestrictionError::Mismatch)?;
    let chosen = rho.chosen(part)?;
    let mut sigma0 = rho.rho0.clone();
    let mut flip = |a: Center, b: Center| {
        let id = setup.paths.id_between(part, a, b).expect("adjacent sub-squares");
        for e in setup.paths.path(id).edges() {
            sigma0[e] ^= true;
        }
    };
    for (a, b) in pi.edges() {
        flip(a, b);
    }
    for sq in 0..part.sub_squares() {
        for d in [Dir::Right, Dir::Down] {
            flip(chosen[sq], chosen[part.sq_step(sq, d)]);
        }
    }
    FullRestriction::new(setup, rho.alive.clone(), sigma0)
}

/// The deterministic pairing of `rho`'s alive set composed with `rho`.
pub fn compose_default(setup: &Setup, rho: &PartialRestriction) -> Result<FullRestriction, RestrictionError> {
    let pi = build_pairing(&setup.part, &rho.alive)?;
    compose(setup, rho, &pi)
}

/// Per-node outcome of substituting a full restriction into the grid axioms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Audit {
    pub satisfied: usize,
    pub tautology: usize,
    pub new_axiom: usize,
    /// Surviving clauses over reduced variables, literals sorted by variable,
    /// clauses sorted.
    pub clauses: Vec<Vec<i32>>,
}

fn normalize(clause: &mut Vec<i32>) {
    clause.sort_unstable_by_key(|l| (l.unsigned_abs(), *l));
    clause.dedup();
}

/// Sorted clauses with sorted literals, for order-insensitive comparison.
pub fn canonical_clauses(cnf: &Cnf) -> Vec<Vec<i32>> {
    let mut out: Vec<Vec<i32>> = cnf
        .clauses
        .iter()
        .map(|c| {
            let mut c = c.clone();
            normalize(&mut c);
            c
        })
        .collect();
    out.sort();
    out
}

/// Substitutes `sigma` into every clause of the all-ones grid formula and
/// classifies each node as satisfied, tautological or a reduced axiom.
pub fn apply_full(setup: &Setup, sigma: &FullRestriction) -> Result<Audit, RestrictionError> {
    let g = setup.big().graph();
    let mut audit = Audit { satisfied: 0, tautology: 0, new_axiom: 0, clauses: Vec::new() };
    let chosen_sq: BTreeMap<usize, usize> =
        sigma.chosen.iter().enumerate().map(|(sq, &c)| (setup.part.center_node(c), sq)).collect();
    for v in 0..g.node_count() {
        let mut all_sat = true;
        let mut kept: Vec<Vec<i32>> = Vec::new();
        for clause in node_clauses(g, v, true) {
            let mut sat = false;
            let mut reduced = Vec::new();
            for &l in &clause {
                let e = l.unsigned_abs() as usize - 1;
                match sigma.image(e) {
                    Image::Const(c) => sat |= c == (l > 0),
                    Image::Lit { path, negated } => {
                        let y = path as i32 + 1;
                        reduced.push(if (l > 0) != negated { y } else { -y });
                    }
                }
            }
            if sat {
                continue;
            }
            all_sat = false;
            normalize(&mut reduced);
            let taut = reduced.windows(2).any(|w| w[0] == -w[1]);
            if !taut {
                kept.push(reduced);
            }
        }
        if all_sat {
            audit.satisfied += 1;
        } else if kept.is_empty() {
            audit.tautology += 1;
        } else {
            let Some(&sq) = chosen_sq.get(&v) else {
                return Err(RestrictionError::Audit { node: v });
            };
            let mut want = node_clauses(setup.reduced.graph(), sq, true);
            for c in want.iter_mut() {
                normalize(c);
            }
            want.sort();
            kept.sort();
            if kept != want {
                return Err(RestrictionError::Audit { node: v });
            }
            audit.new_axiom += 1;
            audit.clauses.extend(kept);
        }
    }
    audit.clauses.sort();
    Ok(audit)
}
