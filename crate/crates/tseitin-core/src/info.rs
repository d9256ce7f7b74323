//! Information pieces and sets on centers, forcing, signatures and
//! conflicts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::consistency::{Assignment, Consistency, LcError};
use crate::grid::Dir;
use crate::pairing::Component;
use crate::partition::{Center, Partition};
use crate::restriction::{PartialRestriction, Setup};

/// Directions in signature order (clockwise from up).
pub const CLOCKWISE: [Dir; 4] = [Dir::Up, Dir::Right, Dir::Down, Dir::Left];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Piece {
    /// An edge between centers of adjacent sub-squares, smaller center first.
    Edge(Center, Center),
    /// No edge from the center in the given direction.
    NonEdge(Center, Dir),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InfoError {
    NotAdjacent(Center, Center),
    Clash { center: Center, dir: Dir },
    OddOpen(Center),
}

impl fmt::Display for InfoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfoError::NotAdjacent(a, b) => write!(f, "centers {a} and {b} are not in adjacent sub-squares"),
            InfoError::Clash { center, dir } => write!(f, "two different pieces at center {center} direction {dir:?}"),
            InfoError::OddOpen(c) => write!(f, "center {c} has an odd number of edges but is not closed"),
        }
    }
}

/// A set of pieces stored by slot: `(center, direction)` maps to the
/// partner of an edge or `None` for a non-edge. An edge fills one slot
/// at each endpoint.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct InfoSet {
    slots: BTreeMap<(Center, Dir), Option<Center>>,
}

impl InfoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, v: Center, d: Dir) -> Option<Option<Center>> {
        self.slots.get(&(v, d)).copied()
    }

    /// Inserts a piece; fails if a different piece already occupies a slot.
    pub fn insert(&mut self, part: &Partition, p: Piece) -> Result<(), InfoError> {
        match p {
            Piece::NonEdge(v, d) => self.put(v, d, None),
            Piece::Edge(a, b) => {
                let d = part.sq_dir(part.center_sq(a), part.center_sq(b)).ok_or(InfoError::NotAdjacent(a, b))?;
                self.check(a, d, Some(b))?;
                self.check(b, d.opposite(), Some(a))?;
                self.slots.insert((a, d), Some(b));
                self.slots.insert((b, d.opposite()), Some(a));
                Ok(())
            }
        }
    }

    fn check(&self, v: Center, d: Dir, val: Option<Center>) -> Result<(), InfoError> {
        match self.slots.get(&(v, d)) {
            Some(&old) if old != val => Err(InfoError::Clash { center: v, dir: d }),
            _ => Ok(()),
        }
    }

    fn put(&mut self, v: Center, d: Dir, val: Option<Center>) -> Result<(), InfoError> {
        self.check(v, d, val)?;
        self.slots.insert((v, d), val);
        Ok(())
    }

    pub fn remove(&mut self, part: &Partition, p: Piece) {
        match p {
            Piece::NonEdge(v, d) => {
                self.slots.remove(&(v, d));
            }
            Piece::Edge(a, b) => {
                if let Some(d) = part.sq_dir(part.center_sq(a), part.center_sq(b)) {
                    self.slots.remove(&(a, d));
                    self.slots.remove(&(b, d.opposite()));
                }
            }
        }
    }

    pub fn contains(&self, part: &Partition, p: Piece) -> bool {
        match p {
            Piece::NonEdge(v, d) => self.slot(v, d) == Some(None),
            Piece::Edge(a, b) => match part.sq_dir(part.center_sq(a), part.center_sq(b)) {
                Some(d) => self.slot(a, d) == Some(Some(b)),
                None => false,
            },
        }
    }

    /// All pieces in canonical order (by center, then direction).
    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::with_capacity(self.slots.len());
        for (&(v, d), &val) in &self.slots {
            match val {
                None => out.push(Piece::NonEdge(v, d)),
                Some(w) if v < w => out.push(Piece::Edge(v, w)),
                Some(_) => {}
            }
        }
        out
    }

    /// All edges as `(smaller, larger)`.
    pub fn edges(&self) -> Vec<(Center, Center)> {
        self.slots.iter().filter_map(|(&(v, _), &val)| val.filter(|&w| v < w).map(|w| (v, w))).collect()
    }

    pub fn support(&self) -> BTreeSet<Center> {
        let mut out = BTreeSet::new();
        for (&(v, _), &val) in &self.slots {
            out.insert(v);
            if let Some(w) = val {
                out.insert(w);
            }
        }
        out
    }

    pub fn directions(&self, v: Center) -> usize {
        Dir::ALL.iter().filter(|&&d| self.slots.contains_key(&(v, d))).count()
    }

    pub fn edge_count(&self, v: Center) -> usize {
        Dir::ALL.iter().filter(|&&d| matches!(self.slot(v, d), Some(Some(_)))).count()
    }

    /// Pieces in all four directions at `v` with an odd number of edges.
    pub fn is_closed_at(&self, v: Center) -> bool {
        self.directions(v) == 4 && self.edge_count(v) % 2 == 1
    }

    /// Every center with pieces in all four directions has odd edge degree.
    pub fn is_locally_consistent(&self) -> bool {
        self.support().into_iter().all(|v| self.directions(v) < 4 || self.edge_count(v) % 2 == 1)
    }

    pub fn is_closed(&self) -> bool {
        self.is_locally_consistent() && self.support().into_iter().all(|v| self.is_closed_at(v))
    }

    /// Centers where the set is closed.
    pub fn closed_centers(&self) -> BTreeSet<Center> {
        self.support().into_iter().filter(|&v| self.is_closed_at(v)).collect()
    }

    /// Union, failing on a slot clash.
    pub fn union(&self, other: &InfoSet) -> Result<InfoSet, InfoError> {
        let mut out = self.clone();
        for (&(v, d), &val) in &other.slots {
            out.put(v, d, val)?;
        }
        Ok(out)
    }

    pub fn extend(&mut self, other: &InfoSet) -> Result<(), InfoError> {
        for (&(v, d), &val) in &other.slots {
            self.put(v, d, val)?;
        }
        Ok(())
    }

    /// Pairwise local consistency.
    pub fn pairwise(&self, other: &InfoSet) -> bool {
        self.union(other).map(|u| u.is_locally_consistent()).unwrap_or(false)
    }

    /// Pieces restricted to the given centers (edges kept when either end is in).
    pub fn restricted(&self, keep: &dyn Fn(Center) -> bool) -> InfoSet {
        let mut out = InfoSet::new();
        for (&(v, d), &val) in &self.slots {
            if keep(v) || val.is_some_and(&keep) {
                out.slots.insert((v, d), val);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pieces().len()
    }
}

/// The closed information set of one pairing component: its edges plus
/// non-edges in the remaining directions of each member.
pub fn component_info(part: &Partition, comp: &Component) -> InfoSet {
    let mut out = InfoSet::new();
    for (a, b) in comp.edges() {
        out.insert(part, Piece::Edge(a.min(b), a.max(b))).expect("pairing edges join adjacent sub-squares");
    }
    for v in comp.centers() {
        for d in Dir::ALL {
            if out.slot(v, d).is_none() {
                out.slots.insert((v, d), None);
            }
        }
    }
    out
}

/// Whether grid edge `e` lies on the path between centers `v` and `w`.
pub fn on_path(setup: &Setup, v: Center, w: Center, e: usize) -> bool {
    match setup.paths.id_between(&setup.part, v, w) {
        Some(id) => setup.paths.through(e).contains(&(id as u32)),
        None => false,
    }
}

/// The value `(rho, info)` forces on grid variable `e`, if any. Edges on no
/// path keep their `rho0` value.
pub fn forces(setup: &Setup, rho: &PartialRestriction, info: &InfoSet, e: usize) -> Option<bool> {
    let base = rho.rho0()[e];
    let Some((v, d)) = setup.paths.associated_center(e) else { return Some(base) };
    if !rho.is_alive(v) {
        return Some(base);
    }
    if !info.is_closed_at(v) {
        return None;
    }
    match info.slot(v, d) {
        Some(Some(w)) if on_path(setup, v, w, e) => Some(!base),
        _ => Some(base),
    }
}

/// The restriction forcing what `(rho, info)` forces: centers where `info`
/// is closed die and `rho0` is negated along every edge of `info`. Every
/// other center of the support must have even edge degree.
pub fn apply_info(setup: &Setup, rho: &PartialRestriction, info: &InfoSet) -> Result<PartialRestriction, InfoError> {
    let mut alive = rho.alive().to_vec();
    let mut rho0 = rho.rho0().to_vec();
    for v in info.support() {
        if info.is_closed_at(v) {
            alive[v] = false;
        } else if info.edge_count(v) % 2 == 1 {
            return Err(InfoError::OddOpen(v));
        }
    }
    for (a, b) in info.edges() {
        let id = setup.paths.id_between(&setup.part, a, b).ok_or(InfoError::NotAdjacent(a, b))?;
        for e in setup.paths.path(id).edges() {
            rho0[e] ^= true;
        }
    }
    Ok(PartialRestriction::from_parts(alive, rho0))
}

/// Nine bits: chosen flag, four presence bits and four edge bits, each
/// group in clockwise order from up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub u16);

impl Signature {
    pub const BITS: u32 = 9;

    pub fn new(chosen: bool, present: [bool; 4], edge: [bool; 4]) -> Self {
        let mut x = chosen as u16;
        for b in present.into_iter().chain(edge) {
            x = (x << 1) | b as u16;
        }
        Signature(x)
    }

    pub fn chosen(self) -> bool {
        self.0 >> 8 & 1 == 1
    }

    pub fn present(self, d: Dir) -> bool {
        self.0 >> (7 - clockwise_index(d)) & 1 == 1
    }

    pub fn edge(self, d: Dir) -> bool {
        self.0 >> (3 - clockwise_index(d)) & 1 == 1
    }

    /// Edge bits only where presence bits are set.
    pub fn is_valid(self) -> bool {
        self.0 < 512 && CLOCKWISE.iter().all(|&d| !self.edge(d) || self.present(d))
    }

    pub fn edge_count(self) -> usize {
        CLOCKWISE.iter().filter(|&&d| self.edge(d)).count()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{:04b}|{:04b}", self.0 >> 8, (self.0 >> 4) & 15, self.0 & 15)
    }
}

pub fn clockwise_index(d: Dir) -> usize {
    match d {
        Dir::Up => 0,
        Dir::Right => 1,
        Dir::Down => 2,
        Dir::Left => 3,
    }
}

pub fn signature_of(v: Center, chosen: bool, j: &InfoSet) -> Signature {
    let present = CLOCKWISE.map(|d| j.slot(v, d).is_some());
    let edge = CLOCKWISE.map(|d| matches!(j.slot(v, d), Some(Some(_))));
    Signature::new(chosen, present, edge)
}

/// The reduced-grid assignment a chosen center's signature describes.
pub fn signature_assignment(setup: &Setup, v: Center, sig: Signature) -> Assignment {
    let sq = setup.part.center_sq(v);
    let mut out = Assignment::new();
    for d in CLOCKWISE {
        if sig.present(d) {
            out.insert(setup.reduced_var(sq, d), sig.edge(d));
        }
    }
    out
}

/// Whether `e_set` conflicts with branch variables `vars` and `info`:
/// some associated center with a signature is not covered in all four
/// directions by `info` plus the signature, or the reduced assignment `tau`
/// plus the signatures of the chosen associated centers is inconsistent.
pub fn conflict<C: Consistency + ?Sized>(
    setup: &Setup,
    lc: &C,
    e_set: &BTreeMap<Center, Signature>,
    vars: &[usize],
    info: &InfoSet,
    tau: &Assignment,
) -> Result<bool, LcError> {
    let mut combined = tau.clone();
    for &e in vars {
        let Some((v, _)) = setup.paths.associated_center(e) else { continue };
        let Some(&sig) = e_set.get(&v) else { continue };
        if Dir::ALL.iter().any(|&d| info.slot(v, d).is_none() && !sig.present(d)) {
            return Ok(true);
        }
        if sig.chosen() {
            for (y, b) in signature_assignment(setup, v, sig) {
                if *combined.entry(y).or_insert(b) != b {
                    return Ok(true);
                }
            }
        }
    }
    Ok(!lc.check(&combined)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::build_pairing;
    use crate::restriction::sample_partial;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn setup() -> Setup {
        Setup::relaxed(45, 3).unwrap()
    }

    #[test]
    fn signature_layout() {
        let mut j = InfoSet::new();
        let part = &setup().part;
        let v = part.center(4, 0);
        let w = part.center(part.sq_step(4, Dir::Up), 0);
        j.insert(part, Piece::Edge(v.min(w), v.max(w))).unwrap();
        j.insert(part, Piece::NonEdge(v, Dir::Left)).unwrap();
        let sig = signature_of(v, true, &j);
        assert_eq!(alloc::format!("{sig}"), "1|1001|1000");
        assert!(sig.is_valid());
        assert!(sig.present(Dir::Left) && !sig.edge(Dir::Left));
        assert!(!Signature(0b0_0000_0001).is_valid());
    }

    #[test]
    fn slots_detect_clashes() {
        let s = setup();
        let part = &s.part;
        let v = part.center(0, 0);
        let w = part.center(part.sq_step(0, Dir::Right), 1);
        let mut i = InfoSet::new();
        i.insert(part, Piece::Edge(v.min(w), v.max(w))).unwrap();
        assert!(i.insert(part, Piece::NonEdge(v, Dir::Right)).is_err());
        assert!(i.insert(part, Piece::NonEdge(w, Dir::Left)).is_err());
        assert_eq!(i.pieces(), alloc::vec![Piece::Edge(v.min(w), v.max(w))]);
        assert!(!i.is_closed_at(v));
        for d in [Dir::Left, Dir::Up, Dir::Down] {
            i.insert(part, Piece::NonEdge(v, d)).unwrap();
        }
        assert!(i.is_closed_at(v));
        assert!(!i.is_closed());
    }

    #[test]
    fn forces_and_apply_agree() {
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let rho = sample_partial(&s, 11, &mut rng).unwrap();
            let pi = build_pairing(&s.part, rho.alive()).unwrap();
            let mut info = InfoSet::new();
            for comp in &pi.components {
                info.extend(&component_info(&s.part, comp)).unwrap();
            }
            assert!(info.is_closed());
            let star = apply_info(&s, &rho, &info).unwrap();
            for e in 0..s.edges() {
                if let Some(b) = forces(&s, &rho, &info, e) {
                    assert_eq!(forces(&s, &star, &InfoSet::new(), e), Some(b), "edge {e}");
                }
            }
            assert!(PartialRestriction::new(&s, star.alive().to_vec(), star.rho0().to_vec()).is_ok());
            assert_eq!(apply_info(&s, &rho, &InfoSet::new()).unwrap(), rho);
        }
    }

    #[test]
    fn three_directions_do_not_force() {
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = sample_partial(&s, 11, &mut rng).unwrap();
        let v = (0..s.part.center_count()).find(|&c| rho.is_alive(c)).unwrap();
        let e = s.part.first_edge(v, Dir::Up);
        assert_eq!(s.paths.associated_center(e), Some((v, Dir::Up)));
        let mut i = InfoSet::new();
        for d in [Dir::Up, Dir::Down, Dir::Left] {
            i.insert(&s.part, Piece::NonEdge(v, d)).unwrap();
        }
        assert_eq!(forces(&s, &rho, &i, e), None);
        let dead = (0..s.part.center_count()).find(|&c| !rho.is_alive(c)).unwrap();
        let e = s.part.first_edge(dead, Dir::Right);
        assert_eq!(forces(&s, &rho, &InfoSet::new(), e), Some(rho.rho0()[e]));
    }
}
