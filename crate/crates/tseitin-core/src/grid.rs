//! Graphs used throughout the crate: general connected graphs and the
//! `n x n` torus with its canonical node and edge numbering.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// The four grid directions. The discriminants are the stable encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Left, Dir::Right, Dir::Up, Dir::Down];

    pub fn opposite(self) -> Dir {
        match self {
            Dir::Left => Dir::Right,
            Dir::Right => Dir::Left,
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Dir {
        Dir::ALL[i & 3]
    }

    /// Row/column offsets of one step in this direction.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Dir::Left => (0, -1),
            Dir::Right => (0, 1),
            Dir::Up => (-1, 0),
            Dir::Down => (1, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridError {
    EvenOrSmall(usize),
    Disconnected,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::EvenOrSmall(n) => write!(f, "torus side must be odd and at least 3, got {n}"),
            GridError::Disconnected => write!(f, "graph is not connected"),
        }
    }
}

/// An undirected multigraph given by an edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); nodes];
        for (i, &(a, b)) in edges.iter().enumerate() {
            adj[a].push(i);
            if a != b {
                adj[b].push(i);
            }
        }
        Graph { nodes, edges, adj }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge indices incident to `v`, in increasing order.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        self.bfs_order(0).0.len() == self.nodes
    }

    /// BFS from `root`: visiting order and the parent edge of every reached node.
    pub fn bfs_order(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut parent = vec![None; self.nodes];
        let mut seen = vec![false; self.nodes];
        let mut order = Vec::with_capacity(self.nodes);
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &e in &self.adj[v] {
                let w = self.other(e, v);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(e);
                    queue.push_back(w);
                }
            }
        }
        (order, parent)
    }
}

/// The `n x n` torus. Nodes are numbered row-major; node `v` owns edge
/// `2v` (to its right neighbour) and `2v + 1` (to the node below).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Torus {
    n: usize,
    graph: Graph,
}

impl Torus {
    pub fn new(n: usize) -> Result<Self, GridError> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(GridError::EvenOrSmall(n));
        }
        Ok(Self::new_unchecked(n))
    }

    /// Any `n >= 3`; used for auxiliary tori whose side may be even.
    pub fn new_unchecked(n: usize) -> Self {
        let mut edges = Vec::with_capacity(2 * n * n);
        for r in 0..n {
            for c in 0..n {
                let v = r * n + c;
                edges.push((v, r * n + (c + 1) % n));
                edges.push((v, ((r + 1) % n) * n + c));
            }
        }
        Torus { n, graph: Graph::new(n * n, edges) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node(&self, r: usize, c: usize) -> usize {
        (r % self.n) * self.n + (c % self.n)
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v / self.n, v % self.n)
    }

    pub fn step(&self, v: usize, d: Dir) -> usize {
        let (r, c) = self.coords(v);
        let n = self.n as isize;
        let (dr, dc) = d.delta();
        let r2 = (r as isize + dr).rem_euclid(n) as usize;
        let c2 = (c as isize + dc).rem_euclid(n) as usize;
        self.node(r2, c2)
    }

    /// The edge leaving `v` in direction `d`.
    pub fn edge_at(&self, v: usize, d: Dir) -> usize {
        match d {
            Dir::Right => 2 * v,
            Dir::Down => 2 * v + 1,
            Dir::Left => 2 * self.step(v, Dir::Left),
            Dir::Up => 2 * self.step(v, Dir::Up) + 1,
        }
    }

    /// Neighbours in the order left, right, up, down.
    pub fn neighbors(&self, v: usize) -> [usize; 4] {
        Dir::ALL.map(|d| self.step(v, d))
    }

    /// Canonical form: lexicographically smaller endpoint first plus a wrap flag.
    pub fn canonical(&self, e: usize) -> ((usize, usize), (usize, usize), bool) {
        let (a, b) = self.graph.edge(e);
        let (pa, pb) = (self.coords(a), self.coords(b));
        let wrap = pa.0.abs_diff(pb.0) > 1 || pa.1.abs_diff(pb.1) > 1;
        if pa <= pb {
            (pa, pb, wrap)
        } else {
            (pb, pa, wrap)
        }
    }

    /// Whether `e` is horizontal.
    pub fn is_horizontal(&self, e: usize) -> bool {
        e.is_multiple_of(2)
    }
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let t = Torus::new(3).unwrap();
        assert_eq!(t.graph().node_count(), 9);
        assert_eq!(t.graph().edge_count(), 18);
        for v in 0..9 {
            assert_eq!(t.graph().incident(v).len(), 4);
        }
        assert!(Torus::new(2).is_err());
        assert!(Torus::new(1).is_err());
    }

    #[test]
    fn wraparound_neighbors() {
        let t = Torus::new(3).unwrap();
        let mut nb: Vec<_> = t.neighbors(0).iter().map(|&v| t.coords(v)).collect();
        nb.sort();
        assert_eq!(nb, vec![(0, 1), (0, 2), (1, 0), (2, 0)]);
    }

    #[test]
    fn edge_at_is_consistent() {
        let t = Torus::new(5).unwrap();
        for v in 0..25 {
            for d in Dir::ALL {
                let e = t.edge_at(v, d);
                assert_eq!(t.graph().other(e, v), t.step(v, d));
                assert_eq!(t.edge_at(t.step(v, d), d.opposite()), e);
            }
        }
    }

    #[test]
    fn canonical_form_marks_wrap() {
        let t = Torus::new(3).unwrap();
        let e = t.edge_at(t.node(0, 2), Dir::Right);
        assert_eq!(t.canonical(e), ((0, 0), (0, 2), true));
        let e = t.edge_at(t.node(1, 1), Dir::Down);
        assert_eq!(t.canonical(e), ((1, 1), (2, 1), false));
    }
}
