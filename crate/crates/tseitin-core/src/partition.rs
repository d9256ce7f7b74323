//! Sub-square partition of the `n1 x n1` torus, centers, the five-segment
//! paths between centers of adjacent sub-squares and associated centers.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{Dir, GridError, Torus};

/// Smallest group width accepted in strict mode.
pub const D_MIN: usize = 40;

/// Smallest group width accepted in relaxed mode (brute-force tests).
pub const D_MIN_RELAXED: usize = 10;

/// A center, numbered `sub_square * delta + index`.
pub type Center = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeometryError {
    Grid(GridError),
    BadSides { n1: usize, n2: usize },
    GroupTooSmall { d: usize, min: usize },
    NoCenters { d: usize },
    StripTooNarrow { strip: usize, delta: usize },
    Spacing { group: usize, gap: usize },
    NotAdjacent { a: Center, b: Center },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::Grid(e) => write!(f, "{e}"),
            GeometryError::BadSides { n1, n2 } => {
                write!(f, "need odd n1 > n2 >= 3, got n1={n1}, n2={n2}")
            }
            GeometryError::GroupTooSmall { d, min } => write!(f, "group width D={d} below minimum {min}"),
            GeometryError::NoCenters { d } => write!(f, "D={d} gives floor(D/5) = 0 centers per group"),
            GeometryError::StripTooNarrow { strip, delta } => {
                write!(f, "strip of {strip} rows cannot host {delta} designated rows")
            }
            GeometryError::Spacing { group, gap } => {
                write!(f, "centers in group {group} only {gap} apart (need at least 3)")
            }
            GeometryError::NotAdjacent { a, b } => write!(f, "centers {a} and {b} are not in adjacent sub-squares"),
        }
    }
}

impl From<GridError> for GeometryError {
    fn from(e: GridError) -> Self {
        GeometryError::Grid(e)
    }
}

/// One group of consecutive rows (or columns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub start: usize,
    pub size: usize,
    /// Inclusive absolute range of central rows.
    pub central: (usize, usize),
    /// Absolute center rows, increasing.
    pub centers: Vec<usize>,
    /// First row of the strip between this group's central area and the next one's.
    pub strip_start: usize,
    pub strip_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    torus: Torus,
    n2: usize,
    d: usize,
    delta: usize,
    margin: usize,
    groups: Vec<Group>,
}

impl Partition {
    /// Strict construction (`D >= 40`).
    pub fn new(n1: usize, n2: usize) -> Result<Self, GeometryError> {
        Self::build(n1, n2, D_MIN)
    }

    /// Relaxed construction (`D >= 10`, at least two centers per group).
    pub fn relaxed(n1: usize, n2: usize) -> Result<Self, GeometryError> {
        Self::build(n1, n2, D_MIN_RELAXED)
    }

    fn build(n1: usize, n2: usize, d_min: usize) -> Result<Self, GeometryError> {
        if n2 < 3 || n2.is_multiple_of(2) || n1 <= n2 || n1.is_multiple_of(2) {
            return Err(GeometryError::BadSides { n1, n2 });
        }
        let torus = Torus::new(n1)?;
        let d = n1 / n2;
        let delta = d / 5;
        if delta == 0 {
            return Err(GeometryError::NoCenters { d });
        }
        if d < d_min {
            return Err(GeometryError::GroupTooSmall { d, min: d_min });
        }
        let margin = d.div_ceil(8);
        let extra = n1 - d * n2;
        let mut groups = Vec::with_capacity(n2);
        let mut start = 0;
        for g in 0..n2 {
            let size = if g < extra { d + 1 } else { d };
            let lo = start + margin;
            let hi = start + size - 1 - margin;
            let count = hi - lo + 1;
            let mut centers = Vec::with_capacity(delta);
            for l in 1..=delta {
                // floor((l - 1/2) * count / delta)
                let idx = ((2 * l - 1) * count) / (2 * delta);
                centers.push(lo + idx);
            }
            for w in centers.windows(2) {
                if w[1] - w[0] < 3 {
                    return Err(GeometryError::Spacing { group: g, gap: w[1] - w[0] });
                }
            }
            groups.push(Group { start, size, central: (lo, hi), centers, strip_start: (hi + 1) % n1, strip_len: 0 });
            start += size;
        }
        for g in 0..n2 {
            let next = &groups[(g + 1) % n2];
            let next_lo = next.central.0;
            let this_hi = groups[g].central.1;
            let strip = (next_lo + n1 - this_hi - 1) % n1;
            if strip < delta {
                return Err(GeometryError::StripTooNarrow { strip, delta });
            }
            groups[g].strip_len = strip;
        }
        Ok(Partition { torus, n2, d, delta, margin, groups })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn n1(&self) -> usize {
        self.torus.n()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn sub_squares(&self) -> usize {
        self.n2 * self.n2
    }

    pub fn center_count(&self) -> usize {
        self.sub_squares() * self.delta
    }

    pub fn sq(&self, i: usize, j: usize) -> usize {
        (i % self.n2) * self.n2 + (j % self.n2)
    }

    pub fn sq_coords(&self, sq: usize) -> (usize, usize) {
        (sq / self.n2, sq % self.n2)
    }

    /// The sub-square adjacent to `sq` in direction `d` (with wraparound).
    pub fn sq_step(&self, sq: usize, d: Dir) -> usize {
        let (i, j) = self.sq_coords(sq);
        let n = self.n2 as isize;
        let (di, dj) = d.delta();
        self.sq((i as isize + di).rem_euclid(n) as usize, (j as isize + dj).rem_euclid(n) as usize)
    }

    /// Direction from `a` to the adjacent sub-square `b`, if any.
    pub fn sq_dir(&self, a: usize, b: usize) -> Option<Dir> {
        Dir::ALL.into_iter().find(|&d| self.sq_step(a, d) == b)
    }

    pub fn center(&self, sq: usize, l: usize) -> Center {
        sq * self.delta + l
    }

    pub fn center_sq(&self, c: Center) -> usize {
        c / self.delta
    }

    /// Zero-based index of the center inside its sub-square (ordered by row).
    pub fn center_index(&self, c: Center) -> usize {
        c % self.delta
    }

    pub fn center_pos(&self, c: Center) -> (usize, usize) {
        let (i, j) = self.sq_coords(self.center_sq(c));
        let l = self.center_index(c);
        (self.groups[i].centers[l], self.groups[j].centers[l])
    }

    pub fn center_node(&self, c: Center) -> usize {
        let (r, col) = self.center_pos(c);
        self.torus.node(r, col)
    }

    /// Designated strip row of a center for its downward paths.
    pub fn designated_row(&self, c: Center) -> usize {
        let (i, _) = self.sq_coords(self.center_sq(c));
        (self.groups[i].strip_start + self.center_index(c)) % self.n1()
    }

    /// Designated strip column of a center for its rightward paths.
    pub fn designated_col(&self, c: Center) -> usize {
        let (_, j) = self.sq_coords(self.center_sq(c));
        (self.groups[j].strip_start + self.center_index(c)) % self.n1()
    }

    /// The grid edge leaving center `c` that every path in direction `d` starts with.
    pub fn first_edge(&self, c: Center, d: Dir) -> usize {
        let v = self.center_node(c);
        let t = &self.torus;
        match d {
            Dir::Down => t.edge_at(v, Dir::Left),
            Dir::Up => t.edge_at(v, Dir::Right),
            Dir::Right => t.edge_at(v, Dir::Down),
            Dir::Left => t.edge_at(v, Dir::Up),
        }
    }

    /// The five-segment path from `c` to `c2` in an adjacent sub-square.
    pub fn path_between(&self, c: Center, c2: Center) -> Result<PathSpec, GeometryError> {
        let d = self
            .sq_dir(self.center_sq(c), self.center_sq(c2))
            .ok_or(GeometryError::NotAdjacent { a: c, b: c2 })?;
        Ok(match d {
            Dir::Down | Dir::Right => self.forward_path(c, c2, d),
            Dir::Up | Dir::Left => {
                let p = self.forward_path(c2, c, d.opposite());
                let mut segments = p.segments;
                segments.reverse();
                for s in segments.iter_mut() {
                    s.reverse();
                }
                PathSpec { from: c, to: c2, dir: d, segments }
            }
        })
    }

    fn walk(&self, start: usize, d: Dir, steps: usize, out: &mut Vec<usize>) -> usize {
        let mut v = start;
        for _ in 0..steps {
            out.push(self.torus.edge_at(v, d));
            v = self.torus.step(v, d);
        }
        v
    }

    fn forward_path(&self, u: Center, w: Center, d: Dir) -> PathSpec {
        let n = self.n1();
        let t = &self.torus;
        let (ru, cu) = self.center_pos(u);
        let (rw, cw) = self.center_pos(w);
        let mut segs: [Vec<usize>; 5] = Default::default();
        match d {
            Dir::Down => {
                let row = self.designated_row(u);
                let vu = t.node(ru, cu);
                segs[0].push(t.edge_at(vu, Dir::Left));
                let a = t.node(ru, cu + n - 1);
                let b = self.walk(a, Dir::Down, (row + n - ru) % n, &mut segs[1]);
                let target = (cw + 1) % n;
                let from = (cu + n - 1) % n;
                let c = if target >= from {
                    self.walk(b, Dir::Right, target - from, &mut segs[2])
                } else {
                    self.walk(b, Dir::Left, from - target, &mut segs[2])
                };
                self.walk(c, Dir::Down, (rw + n - row) % n, &mut segs[3]);
                segs[4].push(t.edge_at(t.node(rw, cw), Dir::Right));
            }
            Dir::Right => {
                let col = self.designated_col(u);
                let vu = t.node(ru, cu);
                segs[0].push(t.edge_at(vu, Dir::Down));
                let a = t.node(ru + 1, cu);
                let b = self.walk(a, Dir::Right, (col + n - cu) % n, &mut segs[1]);
                let target = (rw + n - 1) % n;
                let from = (ru + 1) % n;
                let c = if target >= from {
                    self.walk(b, Dir::Down, target - from, &mut segs[2])
                } else {
                    self.walk(b, Dir::Up, from - target, &mut segs[2])
                };
                self.walk(c, Dir::Right, (cw + n - col) % n, &mut segs[3]);
                segs[4].push(t.edge_at(t.node(rw, cw), Dir::Up));
            }
            _ => unreachable!("forward paths go down or right"),
        }
        PathSpec { from: u, to: w, dir: d, segments: segs }
    }

    /// One line per sub-square: bounds, central ranges and center coordinates.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# n1={} n2={} D={} delta={} margin={}\n",
            self.n1(),
            self.n2,
            self.d,
            self.delta,
            self.margin
        ));
        for sq in 0..self.sub_squares() {
            let (i, j) = self.sq_coords(sq);
            let (gr, gc) = (&self.groups[i], &self.groups[j]);
            out.push_str(&format!(
                "sq ({i},{j}) rows {}..{} cols {}..{} central rows {}..{} cols {}..{} centers",
                gr.start,
                gr.start + gr.size - 1,
                gc.start,
                gc.start + gc.size - 1,
                gr.central.0,
                gr.central.1,
                gc.central.0,
                gc.central.1
            ));
            for l in 0..self.delta {
                let (r, c) = self.center_pos(self.center(sq, l));
                out.push_str(&format!(" ({r},{c})"));
            }
            out.push('\n');
        }
        out
    }
}

/// A path between two centers of adjacent sub-squares, oriented from `from`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpec {
    pub from: Center,
    pub to: Center,
    /// Direction of `to`'s sub-square as seen from `from`'s.
    pub dir: Dir,
    pub segments: [Vec<usize>; 5],
}

impl PathSpec {
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.segments.iter().flatten().copied()
    }
}

/// Index of a path: `(upper_or_left_center * 2 + kind) * delta + target_index`
/// where kind 0 is rightward and kind 1 downward.
pub type PathId = usize;

/// All inter-center paths with per-edge incidence lists and associated centers.
#[derive(Clone, Debug)]
pub struct PathTable {
    delta: usize,
    paths: Vec<PathSpec>,
    through_start: Vec<u32>,
    through: Vec<u32>,
    assoc: Vec<Option<(Center, Dir)>>,
}

impl PathTable {
    pub fn new(part: &Partition) -> Self {
        let delta = part.delta();
        let m = part.center_count();
        let mut paths = Vec::with_capacity(2 * m * delta);
        for u in 0..m {
            let sq = part.center_sq(u);
            for d in [Dir::Right, Dir::Down] {
                let nsq = part.sq_step(sq, d);
                for l in 0..delta {
                    let w = part.center(nsq, l);
                    paths.push(part.forward_path(u, w, d));
                }
            }
        }
        let edges = part.torus().graph().edge_count();
        let mut count = vec![0u32; edges + 1];
        for p in &paths {
            for e in p.edges() {
                count[e + 1] += 1;
            }
        }
        for i in 0..edges {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut through = vec![0u32; count[edges] as usize];
        for (id, p) in paths.iter().enumerate() {
            for e in p.edges() {
                through[fill[e] as usize] = id as u32;
                fill[e] += 1;
            }
        }
        let mut assoc = vec![None; edges];
        for p in &paths {
            for (k, seg) in p.segments.iter().enumerate() {
                let owner = if k < 3 { (p.from, p.dir) } else { (p.to, p.dir.opposite()) };
                for &e in seg {
                    assoc[e].get_or_insert(owner);
                }
            }
        }
        PathTable { delta, paths, through_start: count, through, assoc }
    }

    /// Endpoints shared by every path through `e` (brute-force intersection).
    pub fn common_endpoints(&self, e: usize) -> Vec<Center> {
        let ids = self.through(e);
        let Some(first) = ids.first() else { return Vec::new() };
        let first = &self.paths[*first as usize];
        [first.from, first.to]
            .into_iter()
            .filter(|&c| {
                ids.iter().all(|&id| {
                    let p = &self.paths[id as usize];
                    p.from == c || p.to == c
                })
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, id: PathId) -> &PathSpec {
        &self.paths[id]
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    /// Ids of all paths containing grid edge `e`, increasing.
    pub fn through(&self, e: usize) -> &[u32] {
        let a = self.through_start[e] as usize;
        let b = self.through_start[e + 1] as usize;
        &self.through[a..b]
    }

    /// The common endpoint of all paths through `e` and their direction from it.
    /// An edge on a single path belongs to the endpoint whose half of the path
    /// contains it (segments 1 to 3 for the upper or left endpoint).
    pub fn associated_center(&self, e: usize) -> Option<(Center, Dir)> {
        self.assoc[e]
    }

    /// Id of the path joining `a` and `b` (any order), if they are in adjacent sub-squares.
    pub fn id_between(&self, part: &Partition, a: Center, b: Center) -> Option<PathId> {
        let d = part.sq_dir(part.center_sq(a), part.center_sq(b))?;
        let (u, w, kind) = match d {
            Dir::Right => (a, b, 0),
            Dir::Down => (a, b, 1),
            Dir::Left => (b, a, 0),
            Dir::Up => (b, a, 1),
        };
        Some((u * 2 + kind) * self.delta + part.center_index(w))
    }

    /// Endpoints of a path as stored (upper/left first).
    pub fn endpoints(&self, id: PathId) -> (Center, Center) {
        let p = &self.paths[id];
        (p.from, p.to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn spec_geometry_examples() {
        let p = Partition::relaxed(45, 3).unwrap();
        assert_eq!((p.d(), p.delta(), p.sub_squares()), (15, 3, 9));
        assert_eq!(p.groups()[0].central, (2, 12));
        assert_eq!(p.groups()[0].centers, vec![3, 7, 11]);
        assert_eq!(p.groups()[0].strip_len, 4);
        let p = Partition::relaxed(47, 3).unwrap();
        let sizes: Vec<_> = p.groups().iter().map(|g| g.size).collect();
        assert_eq!(sizes, vec![16, 16, 15]);
        assert_eq!(Partition::relaxed(9, 3), Err(GeometryError::NoCenters { d: 3 }));
        assert!(matches!(Partition::new(45, 3), Err(GeometryError::GroupTooSmall { .. })));
        let p = Partition::new(135, 3).unwrap();
        assert_eq!((p.d(), p.delta(), p.center_count()), (45, 9, 81));
        assert_eq!(p.groups()[0].strip_len, 12);
    }

    #[test]
    fn path_segments_are_nonempty_and_simple() {
        let p = Partition::relaxed(45, 3).unwrap();
        let table = PathTable::new(&p);
        let t = p.torus();
        for path in table.paths() {
            assert!(path.segments.iter().all(|s| !s.is_empty()));
            let mut v = p.center_node(path.from);
            let mut seen = BTreeSet::new();
            seen.insert(v);
            for e in path.edges() {
                v = t.graph().other(e, v);
                assert!(seen.insert(v), "path revisits a node");
            }
            assert_eq!(v, p.center_node(path.to));
        }
    }

    #[test]
    fn first_segment_matches_first_edge() {
        let p = Partition::relaxed(45, 3).unwrap();
        for c in 0..p.center_count() {
            for d in Dir::ALL {
                let nsq = p.sq_step(p.center_sq(c), d);
                let path = p.path_between(c, p.center(nsq, 1)).unwrap();
                assert_eq!(path.segments[0], vec![p.first_edge(c, d)]);
            }
        }
    }

    #[test]
    fn wrap_adjacency_crosses_seam() {
        let p = Partition::relaxed(45, 3).unwrap();
        let a = p.center(p.sq(0, 0), 0);
        let b = p.center(p.sq(2, 0), 0);
        let path = p.path_between(a, b).unwrap();
        assert_eq!(path.dir, Dir::Up);
        let wraps = path.edges().any(|e| p.torus().canonical(e).2);
        assert!(wraps);
    }
}
