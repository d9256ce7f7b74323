//! Decision trees over edge variables, their restrictions and the
//! representation checks built on top of them.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::consistency::{union, Assignment, Consistency, LcError};

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(bool),
    Query { var: usize, zero: Tree, one: Tree },
}

/// An immutable, shareable decision tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree(Arc<Node>);

/// A root-to-leaf path as its minimal assignment plus the leaf label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub assignment: Assignment,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    Missing(usize),
    RepeatedQuery(usize),
    TooDeep { depth: usize, limit: usize },
    NoBranch,
    Lc(LcError),
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::Missing(x) => write!(f, "no value for queried variable x{x}"),
            TreeError::RepeatedQuery(x) => write!(f, "variable x{x} queried twice on one branch"),
            TreeError::TooDeep { depth, limit } => write!(f, "tree depth {depth} exceeds {limit}"),
            TreeError::NoBranch => write!(f, "no branch survives the restriction"),
            TreeError::Lc(e) => write!(f, "{e}"),
        }
    }
}

impl From<LcError> for TreeError {
    fn from(e: LcError) -> Self {
        TreeError::Lc(e)
    }
}

impl Tree {
    pub fn leaf(b: bool) -> Self {
        Tree(Arc::new(Node::Leaf(b)))
    }

    pub fn query(var: usize, zero: Tree, one: Tree) -> Self {
        Tree(Arc::new(Node::Query { var, zero, one }))
    }

    /// `x` itself: a single query with leaves 0 and 1.
    pub fn var(x: usize) -> Self {
        Self::query(x, Self::leaf(false), Self::leaf(true))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn depth(&self) -> usize {
        match self.node() {
            Node::Leaf(_) => 0,
            Node::Query { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self.node() {
            Node::Leaf(_) => 1,
            Node::Query { zero, one, .. } => 1 + zero.size() + one.size(),
        }
    }

    pub fn check_depth(&self, limit: usize) -> Result<(), TreeError> {
        let depth = self.depth();
        if depth > limit {
            return Err(TreeError::TooDeep { depth, limit });
        }
        Ok(())
    }

    /// Rejects trees querying a variable twice on one branch.
    pub fn validate(&self) -> Result<(), TreeError> {
        fn go(t: &Tree, seen: &mut Vec<usize>) -> Result<(), TreeError> {
            if let Node::Query { var, zero, one } = t.node() {
                if seen.contains(var) {
                    return Err(TreeError::RepeatedQuery(*var));
                }
                seen.push(*var);
                go(zero, seen)?;
                go(one, seen)?;
                seen.pop();
            }
            Ok(())
        }
        go(self, &mut Vec::new())
    }

    pub fn evaluate(&self, x: impl Fn(usize) -> Option<bool>) -> Result<bool, TreeError> {
        let mut t = self;
        loop {
            match t.node() {
                Node::Leaf(b) => return Ok(*b),
                Node::Query { var, zero, one } => {
                    t = if x(*var).ok_or(TreeError::Missing(*var))? { one } else { zero };
                }
            }
        }
    }

    /// Branches in depth-first order, 0-edge first.
    pub fn branches(&self) -> Vec<Branch> {
        fn go(t: &Tree, cur: &mut Assignment, out: &mut Vec<Branch>) {
            match t.node() {
                Node::Leaf(b) => out.push(Branch { assignment: cur.clone(), label: *b }),
                Node::Query { var, zero, one } => {
                    cur.insert(*var, false);
                    go(zero, cur, out);
                    cur.insert(*var, true);
                    go(one, cur, out);
                    cur.remove(var);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Assignment::new(), &mut out);
        out
    }

    pub fn leaves(&self) -> Vec<bool> {
        self.branches().into_iter().map(|b| b.label).collect()
    }

    pub fn is_b_tree(&self, b: bool) -> bool {
        match self.node() {
            Node::Leaf(l) => *l == b,
            Node::Query { zero, one, .. } => zero.is_b_tree(b) && one.is_b_tree(b),
        }
    }

    pub fn has_leaf(&self, b: bool) -> bool {
        match self.node() {
            Node::Leaf(l) => *l == b,
            Node::Query { zero, one, .. } => zero.has_leaf(b) || one.has_leaf(b),
        }
    }

    pub fn negate(&self) -> Tree {
        self.map_leaves(&|b| !b)
    }

    pub fn map_leaves(&self, f: &dyn Fn(bool) -> bool) -> Tree {
        match self.node() {
            Node::Leaf(b) => Tree::leaf(f(*b)),
            Node::Query { var, zero, one } => Tree::query(*var, zero.map_leaves(f), one.map_leaves(f)),
        }
    }

    /// Same shape and variables, leaves compared through `f`.
    pub fn same_shape(&self, other: &Tree, f: &dyn Fn(bool, bool) -> bool) -> bool {
        match (self.node(), other.node()) {
            (Node::Leaf(a), Node::Leaf(b)) => f(*a, *b),
            (Node::Query { var: x, zero: z1, one: o1 }, Node::Query { var: y, zero: z2, one: o2 }) => {
                x == y && z1.same_shape(z2, f) && o1.same_shape(o2, f)
            }
            _ => false,
        }
    }

    /// Every branch is consistent under `lc`.
    pub fn is_locally_consistent<C: Consistency + ?Sized>(&self, lc: &C) -> Result<bool, LcError> {
        for b in self.branches() {
            if !lc.check(&b.assignment)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Replaces every leaf `b` reached by branch `k` (depth-first order) with `f(k, b)`.
    pub fn append(&self, f: &mut dyn FnMut(usize, bool) -> Tree) -> Tree {
        fn go(t: &Tree, k: &mut usize, f: &mut dyn FnMut(usize, bool) -> Tree) -> Tree {
            match t.node() {
                Node::Leaf(b) => {
                    let out = f(*k, *b);
                    *k += 1;
                    out
                }
                Node::Query { var, zero, one } => {
                    let z = go(zero, k, f);
                    let o = go(one, k, f);
                    Tree::query(*var, z, o)
                }
            }
        }
        go(self, &mut 0, f)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Leaf(b) => write!(f, "#{}", *b as u8),
            Node::Query { var, zero, one } => write!(f, "(x{var} (0 {zero}) (1 {one}))"),
        }
    }
}

/// Joins two optional subtrees under a query, collapsing when one side is empty.
fn join(var: usize, zero: Option<Tree>, one: Option<Tree>) -> Option<Tree> {
    match (zero, one) {
        (Some(z), Some(o)) => Some(Tree::query(var, z, o)),
        (Some(t), None) | (None, Some(t)) => Some(t),
        (None, None) => None,
    }
}

/// `T` restricted by `alpha`: the branches pairwise consistent with `alpha`,
/// with queries answered by `alpha` or forced by the surviving branches removed.
/// `None` when no branch survives.
pub fn restrict_by_assignment<C: Consistency + ?Sized>(
    lc: &C,
    t: &Tree,
    alpha: &Assignment,
) -> Result<Option<Tree>, LcError> {
    fn go<C: Consistency + ?Sized>(lc: &C, t: &Tree, cur: &mut Assignment) -> Result<Option<Tree>, LcError> {
        match t.node() {
            Node::Leaf(b) => Ok(Some(Tree::leaf(*b))),
            Node::Query { var, zero, one } => {
                if let Some(&b) = cur.get(var) {
                    return go(lc, if b { one } else { zero }, cur);
                }
                let mut sub = [None, None];
                for (b, child) in [(false, zero), (true, one)] {
                    cur.insert(*var, b);
                    if lc.check(cur)? {
                        sub[b as usize] = go(lc, child, cur)?;
                    }
                    cur.remove(var);
                }
                let [z, o] = sub;
                Ok(join(*var, z, o))
            }
        }
    }
    if !lc.check(alpha)? {
        return Ok(None);
    }
    go(lc, t, &mut alpha.clone())
}

/// Value of an edge variable under a full restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Image {
    Const(bool),
    /// `x = y_p XOR negated`.
    Lit { path: usize, negated: bool },
}

/// `T` restricted by a full restriction given as `image(x)`: a tree over the
/// reduced variables whose branches are the induced assignments of the
/// branches pairwise consistent with the restriction under `lc`.
pub fn restrict_by_full<C: Consistency + ?Sized>(
    lc: &C,
    t: &Tree,
    image: &dyn Fn(usize) -> Image,
) -> Result<Option<Tree>, LcError> {
    fn go<C: Consistency + ?Sized>(
        lc: &C,
        t: &Tree,
        image: &dyn Fn(usize) -> Image,
        cur: &mut Assignment,
    ) -> Result<Option<Tree>, LcError> {
        match t.node() {
            Node::Leaf(b) => Ok(Some(Tree::leaf(*b))),
            Node::Query { var, zero, one } => match image(*var) {
                Image::Const(c) => go(lc, if c { one } else { zero }, image, cur),
                Image::Lit { path, negated } => {
                    if let Some(&y) = cur.get(&path) {
                        return go(lc, if y ^ negated { one } else { zero }, image, cur);
                    }
                    let mut sub = [None, None];
                    for y in [false, true] {
                        cur.insert(path, y);
                        if lc.check(cur)? {
                            sub[y as usize] = go(lc, if y ^ negated { one } else { zero }, image, cur)?;
                        }
                        cur.remove(&path);
                    }
                    let [z, o] = sub;
                    Ok(join(path, z, o))
                }
            },
        }
    }
    if !lc.check(&Assignment::new())? {
        return Ok(None);
    }
    go(lc, t, image, &mut Assignment::new())
}

/// The branch induced on reduced variables by a grid branch, or `None` when
/// it conflicts with the restriction (first two consistency properties).
pub fn induced_assignment(tau: &Assignment, image: &dyn Fn(usize) -> Image) -> Option<Assignment> {
    let mut out = Assignment::new();
    for (&x, &v) in tau {
        match image(x) {
            Image::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Image::Lit { path, negated } => {
                if *out.entry(path).or_insert(v ^ negated) != v ^ negated {
                    return None;
                }
            }
        }
    }
    Some(out)
}

pub fn functionally_equivalent<C: Consistency + ?Sized>(lc: &C, t1: &Tree, t2: &Tree) -> Result<bool, LcError> {
    for (a, b) in [(t1, t2), (t2, t1)] {
        for br in a.branches() {
            match restrict_by_assignment(lc, b, &br.assignment)? {
                Some(r) if r.is_b_tree(br.label) => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Whether the OR of `trees` restricted by `tau` evaluates to `label`:
/// some restriction is a 1-tree, or every restriction has no 1-leaf.
pub fn or_decided<C: Consistency + ?Sized>(
    lc: &C,
    trees: &[Tree],
    tau: &Assignment,
    label: bool,
) -> Result<bool, LcError> {
    if label {
        for t in trees {
            if let Some(r) = restrict_by_assignment(lc, t, tau)? {
                if r.is_b_tree(true) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    } else {
        for t in trees {
            if let Some(r) = restrict_by_assignment(lc, t, tau)? {
                if r.has_leaf(true) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `t` represents the OR of `trees`.
pub fn represents<C: Consistency + ?Sized>(lc: &C, t: &Tree, trees: &[Tree]) -> Result<bool, LcError> {
    for br in t.branches() {
        if !or_decided(lc, trees, &br.assignment, br.label)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A shared top tree plus, per formula and per top leaf (depth-first order),
/// a completion tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonPdt {
    pub top: Tree,
    pub completions: Vec<Vec<Tree>>,
}

impl CommonPdt {
    /// The top tree with formula `j`'s completions appended at its leaves.
    pub fn appended(&self, j: usize) -> Tree {
        self.top.append(&mut |k, _| self.completions[j][k].clone())
    }
}

/// Checks depth bounds and that every branch of every appended tree decides
/// the OR of the corresponding tree list.
pub fn check_common_pdt<C: Consistency + ?Sized>(
    lc: &C,
    cpdt: &CommonPdt,
    lists: &[Vec<Tree>],
    ell: usize,
    t: usize,
) -> Result<bool, LcError> {
    if cpdt.top.depth() > t || cpdt.completions.len() != lists.len() {
        return Ok(false);
    }
    let leaves = cpdt.top.branches();
    for (j, list) in lists.iter().enumerate() {
        if cpdt.completions[j].len() != leaves.len() {
            return Ok(false);
        }
        for (k, top) in leaves.iter().enumerate() {
            let comp = &cpdt.completions[j][k];
            if comp.depth() > ell {
                return Ok(false);
            }
            for br in comp.branches() {
                let Some(full) = union(&top.assignment, &br.assignment) else { continue };
                if !lc.check(&full)? {
                    continue;
                }
                if !or_decided(lc, list, &full, br.label)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// All trees in a list restricted by the same assignment, dropping failures.
pub fn restrict_all<C: Consistency + ?Sized>(lc: &C, trees: &[Tree], alpha: &Assignment) -> Result<Vec<Tree>, LcError> {
    let mut out = Vec::with_capacity(trees.len());
    for t in trees {
        if let Some(r) = restrict_by_assignment(lc, t, alpha)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// The complete tree querying `vars` in order with leaves from `f`.
pub fn complete_tree(vars: &[usize], f: &mut dyn FnMut(&Assignment) -> bool) -> Tree {
    fn go(vars: &[usize], cur: &mut Assignment, f: &mut dyn FnMut(&Assignment) -> bool) -> Tree {
        match vars.split_first() {
            None => Tree::leaf(f(cur)),
            Some((&x, rest)) => {
                cur.insert(x, false);
                let z = go(rest, cur, f);
                cur.insert(x, true);
                let o = go(rest, cur, f);
                cur.remove(&x);
                Tree::query(x, z, o)
            }
        }
    }
    go(vars, &mut Assignment::new(), f)
}

/// Distinct variables queried anywhere in the tree, increasing.
pub fn variables(t: &Tree) -> Vec<usize> {
    let mut out = vec![];
    fn go(t: &Tree, out: &mut Vec<usize>) {
        if let Node::Query { var, zero, one } = t.node() {
            out.push(*var);
            go(zero, out);
            go(one, out);
        }
    }
    go(t, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::consistency::{Strict, Weak};
    use crate::grid::Torus;
    use crate::tseitin::Instance;

    fn nine() -> (Torus, Vec<bool>) {
        (Torus::new(9).unwrap(), vec![true; 81])
    }

    #[test]
    fn evaluation_and_branches() {
        assert_eq!(Tree::leaf(true).evaluate(|_| None), Ok(true));
        let t = Tree::query(3, Tree::var(5), Tree::leaf(true));
        assert_eq!(t.evaluate(|x| Some(x == 3)), Ok(true));
        assert_eq!(t.evaluate(|x| if x == 3 { Some(false) } else { None }), Err(TreeError::Missing(5)));
        let br = t.branches();
        assert_eq!(br.len(), 3);
        assert_eq!(br[0].assignment, Assignment::from([(3, false), (5, false)]));
        assert!(!br[0].label && br[1].label && br[2].label);
        assert_eq!(t.to_string(), "(x3 (0 (x5 (0 #0) (1 #1))) (1 #1))");
        let bad = Tree::query(1, Tree::var(1), Tree::leaf(true));
        assert_eq!(bad.validate(), Err(TreeError::RepeatedQuery(1)));
    }

    #[test]
    fn restriction_examples() {
        let (t, ch) = nine();
        let lc = Strict::new(&t, &ch);
        let tree = Tree::var(4);
        let r = restrict_by_assignment(&lc, &tree, &Assignment::from([(4, true)])).unwrap().unwrap();
        assert_eq!(r, Tree::leaf(true));
        let r = restrict_by_assignment(&lc, &tree, &Assignment::new()).unwrap().unwrap();
        assert_eq!(r, tree);
        // three edges of a node force the fourth
        let v = t.node(4, 4);
        let inc = t.graph().incident(v).to_vec();
        let alpha: Assignment = inc[..3].iter().map(|&e| (e, false)).collect();
        let r = restrict_by_assignment(&lc, &Tree::var(inc[3]), &alpha).unwrap().unwrap();
        assert_eq!(r, Tree::leaf(true));
    }

    #[test]
    fn equivalence_and_representation() {
        let (t, ch) = nine();
        let lc = Strict::new(&t, &ch);
        let xy = Tree::query(0, Tree::leaf(false), Tree::var(40));
        let yx = Tree::query(40, Tree::leaf(false), Tree::var(0));
        assert!(functionally_equivalent(&lc, &xy, &xy).unwrap());
        assert!(functionally_equivalent(&lc, &xy, &yx).unwrap());
        assert!(!functionally_equivalent(&lc, &Tree::leaf(true), &Tree::leaf(false)).unwrap());
        assert!(represents(&lc, &xy, core::slice::from_ref(&xy)).unwrap());
        assert!(!represents(&lc, &Tree::leaf(false), &[Tree::var(0)]).unwrap());
        assert!(represents(&lc, &Tree::var(0), &[Tree::var(0), Tree::leaf(false)]).unwrap());
    }

    #[test]
    fn full_restriction_examples() {
        let t3 = Torus::new(3).unwrap();
        let inst = Instance::torus_all_ones(&t3);
        let lc = Weak::new(&inst);
        let image = |x: usize| match x {
            0 => Image::Const(true),
            1 => Image::Lit { path: 5, negated: true },
            2 => Image::Lit { path: 5, negated: false },
            _ => Image::Const(false),
        };
        let r = restrict_by_full(&lc, &Tree::var(0), &image).unwrap().unwrap();
        assert_eq!(r, Tree::leaf(true));
        let r = restrict_by_full(&lc, &Tree::var(1), &image).unwrap().unwrap();
        assert_eq!(r, Tree::query(5, Tree::leaf(true), Tree::leaf(false)));
        let two = Tree::query(2, Tree::var(1), Tree::var(1));
        let r = restrict_by_full(&lc, &two, &image).unwrap().unwrap();
        assert_eq!(r, Tree::query(5, Tree::leaf(true), Tree::leaf(false)));
    }

    #[test]
    fn common_tree_examples() {
        let (t, ch) = nine();
        let lc = Strict::new(&t, &ch);
        let lists = vec![vec![Tree::var(0), Tree::var(40)]];
        let comp = Tree::query(0, Tree::var(40), Tree::leaf(true));
        let good = CommonPdt { top: Tree::leaf(false), completions: vec![vec![comp]] };
        assert!(check_common_pdt(&lc, &good, &lists, 2, 0).unwrap());
        let wrong = Tree::query(0, Tree::var(40), Tree::leaf(false));
        let bad = CommonPdt { top: Tree::leaf(false), completions: vec![vec![wrong]] };
        assert!(!check_common_pdt(&lc, &bad, &lists, 2, 0).unwrap());
        let top = Tree::var(0);
        let split = CommonPdt { top, completions: vec![vec![Tree::var(40), Tree::leaf(true)]] };
        assert!(check_common_pdt(&lc, &split, &lists, 1, 1).unwrap());
        assert_eq!(split.appended(0).depth(), 2);
    }
}
