//! The extended canonical decision tree of an OR of restricted decision
//! trees, built stage by stage with exposed centers and information sets.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::consistency::{union, Assignment, Consistency, LcError, Weak};
use crate::grid::Dir;
use crate::info::{component_info, forces, InfoError, InfoSet, Piece};
use crate::pairing::{build_pairing, GraphicalPairing};
use crate::partition::Center;
use crate::restriction::{compose, FullRestriction, PartialRestriction, RestrictionError, Setup};
use crate::tree::{induced_assignment, or_decided, restrict_by_full, Image, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EcdtError {
    TooDeep { tree: usize, depth: usize, limit: usize },
    Lc(LcError),
    Info(InfoError),
    NotForced { var: usize },
    Invariant { which: u8, center: Option<Center> },
    /// A stage neither answered a query nor exposed a center.
    Stalled { tree: usize, branch: usize, degenerate: bool },
}

impl fmt::Display for EcdtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EcdtError::TooDeep { tree, depth, limit } => write!(f, "tree {tree} has depth {depth} > {limit}"),
            EcdtError::Lc(e) => write!(f, "{e}"),
            EcdtError::Info(e) => write!(f, "{e}"),
            EcdtError::NotForced { var } => write!(f, "forcing information leaves x{var} unforced"),
            EcdtError::Stalled { tree, branch, degenerate } => {
                write!(f, "stage on branch {branch} of tree {tree} made no progress (degenerate: {degenerate})")
            }
            EcdtError::Invariant { which, center } => match center {
                Some(c) => write!(f, "invariant {which} violated at center {c}"),
                None => write!(f, "invariant {which} violated"),
            },
        }
    }
}

impl From<LcError> for EcdtError {
    fn from(e: LcError) -> Self {
        EcdtError::Lc(e)
    }
}

impl From<InfoError> for EcdtError {
    fn from(e: InfoError) -> Self {
        EcdtError::Info(e)
    }
}

/// A partial restriction with its deterministic pairing and full restriction.
#[derive(Clone, Debug)]
pub struct Context<'a> {
    pub setup: &'a Setup,
    pub rho: PartialRestriction,
    pub pi: GraphicalPairing,
    pub sigma: FullRestriction,
    comp_of: Vec<Option<usize>>,
    is_chosen: Vec<bool>,
}

impl<'a> Context<'a> {
    pub fn new(setup: &'a Setup, rho: PartialRestriction) -> Result<Self, RestrictionError> {
        let pi = build_pairing(&setup.part, rho.alive())?;
        Self::with_pairing(setup, rho, pi)
    }

    pub fn with_pairing(setup: &'a Setup, rho: PartialRestriction, pi: GraphicalPairing) -> Result<Self, RestrictionError> {
        let sigma = compose(setup, &rho, &pi)?;
        let comp_of = pi.component_of(setup.part.center_count());
        let mut is_chosen = alloc::vec![false; setup.part.center_count()];
        for &c in sigma.chosen() {
            is_chosen[c] = true;
        }
        Ok(Context { setup, rho, pi, sigma, comp_of, is_chosen })
    }

    pub fn weak(&self) -> Weak<'a> {
        self.setup.weak()
    }

    pub fn chosen(&self, sq: usize) -> Center {
        self.sigma.chosen()[sq]
    }

    pub fn is_chosen(&self, c: Center) -> bool {
        self.is_chosen[c]
    }

    /// The closed information set of the pairing component containing `c`.
    pub fn component(&self, c: Center) -> Option<InfoSet> {
        self.comp_of[c].map(|i| component_info(&self.setup.part, &self.pi.components[i]))
    }

    pub fn component_index(&self, c: Center) -> Option<usize> {
        self.comp_of[c]
    }

    pub fn image(&self, e: usize) -> Image {
        self.sigma.image(e)
    }

    /// Every tree restricted by the full restriction (`None` when no branch survives).
    pub fn restricted(&self, trees: &[Tree]) -> Result<Vec<Option<Tree>>, LcError> {
        let weak = self.weak();
        trees.iter().map(|t| restrict_by_full(&weak, t, &|e| self.image(e))).collect()
    }

    /// Information pieces recorded for reduced variable `y` answered `b`.
    pub fn answer_pieces(&self, y: usize, b: bool) -> [Option<Piece>; 2] {
        answer_pieces(self.setup, y, b, |sq| self.chosen(sq))
    }
}

/// Pieces for a reduced variable: an edge between the two chosen centers
/// for 1, a non-edge at each end for 0.
pub fn answer_pieces(setup: &Setup, y: usize, b: bool, mut chosen: impl FnMut(usize) -> Center) -> [Option<Piece>; 2] {
    let (sa, sb) = setup.reduced_ends(y);
    let (ca, cb) = (chosen(sa), chosen(sb));
    if b {
        [Some(Piece::Edge(ca.min(cb), ca.max(cb))), None]
    } else {
        let d = setup.part.sq_dir(sa, sb).expect("reduced edge joins adjacent sub-squares");
        [Some(Piece::NonEdge(ca, d)), Some(Piece::NonEdge(cb, d.opposite()))]
    }
}

/// Bookkeeping attached to a branch of the tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageState {
    /// Reduced-grid answers on the branch, including locally implied ones.
    pub tau: Assignment,
    pub exposed: BTreeSet<Center>,
    pub info: InfoSet,
}

/// A 1-branch of an input tree, indexed by tree and branch position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub tree: usize,
    pub branch: usize,
    pub psi: Assignment,
    pub induced: Option<Assignment>,
}

/// All 1-branches of `trees` in the fixed order (tree, then depth-first branch).
pub fn one_branches(trees: &[Tree]) -> Vec<(usize, usize, Assignment)> {
    let mut out = Vec::new();
    for (i, t) in trees.iter().enumerate() {
        for (b, br) in t.branches().into_iter().enumerate() {
            if br.label {
                out.push((i, b, br.assignment));
            }
        }
    }
    out
}

pub fn candidates(ctx: &Context, trees: &[Tree]) -> Vec<Candidate> {
    one_branches(trees)
        .into_iter()
        .map(|(tree, branch, psi)| {
            let induced = induced_assignment(&psi, &|e| ctx.image(e));
            Candidate { tree, branch, psi, induced }
        })
        .collect()
}

/// A possible forcing information together with the extension it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forcing {
    pub j: InfoSet,
    /// The reduced assignment completing the chosen associated centers.
    pub plus: Assignment,
    /// Alive associated centers not closed in the current information set.
    pub needed: BTreeSet<Center>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForcingError {
    /// No consistent completion of the branch at its associated centers.
    Degenerate,
    Ecdt(EcdtError),
}

impl From<EcdtError> for ForcingError {
    fn from(e: EcdtError) -> Self {
        ForcingError::Ecdt(e)
    }
}

impl From<LcError> for ForcingError {
    fn from(e: LcError) -> Self {
        ForcingError::Ecdt(EcdtError::Lc(e))
    }
}

/// Depth-first search for a consistent completion, trying 0 before 1.
fn complete<C: Consistency + ?Sized>(lc: &C, cur: &mut Assignment, vars: &[usize]) -> Result<bool, LcError> {
    let Some((&y, rest)) = vars.split_first() else { return Ok(true) };
    if cur.contains_key(&y) {
        return complete(lc, cur, rest);
    }
    for b in [false, true] {
        cur.insert(y, b);
        if lc.check(cur)? && complete(lc, cur, rest)? {
            return Ok(true);
        }
        cur.remove(&y);
    }
    Ok(false)
}

/// Reduced variables incident to sub-square `sq`.
pub fn incident_vars(setup: &Setup, sq: usize) -> [usize; 4] {
    Dir::ALL.map(|d| setup.reduced_var(sq, d))
}

/// Checks the properties of a possible forcing information, plus closure at
/// every needed center.
fn forcing_valid(ctx: &Context, psi: &Assignment, state: &StageState, j: &InfoSet, needed: &BTreeSet<Center>) -> bool {
    let Ok(all) = state.info.union(j) else { return false };
    if !all.is_locally_consistent() {
        return false;
    }
    if !psi.iter().all(|(&e, &v)| forces(ctx.setup, &ctx.rho, &all, e) == Some(v)) {
        return false;
    }
    if !needed.iter().all(|&v| j.is_closed_at(v)) {
        return false;
    }
    let mut comps = InfoSet::new();
    for c in j.support() {
        if !ctx.is_chosen(c) {
            match ctx.component(c) {
                Some(ci) => {
                    if comps.extend(&ci).is_err() {
                        return false;
                    }
                }
                None => return false,
            }
        }
    }
    j.restricted(&|c| !ctx.is_chosen(c)) == comps
}

/// A possible forcing information for the 1-branch `psi` at `state`: the
/// pairing components of non-chosen associated centers, and at chosen
/// associated centers the pieces of a consistent completion, minimized by a
/// canonical single scan.
pub fn find_forcing_info(ctx: &Context, psi: &Assignment, state: &StageState) -> Result<Forcing, ForcingError> {
    let setup = ctx.setup;
    let part = &setup.part;
    let weak = ctx.weak();
    let induced = induced_assignment(psi, &|e| ctx.image(e)).ok_or(EcdtError::NotForced { var: 0 })?;
    let mut needed = BTreeSet::new();
    for &e in psi.keys() {
        if let Some((v, _)) = setup.paths.associated_center(e) {
            if ctx.rho.is_alive(v) && !state.info.is_closed_at(v) {
                needed.insert(v);
            }
        }
    }
    let mut j = InfoSet::new();
    let mut plus = union(&state.tau, &induced).ok_or(ForcingError::Degenerate)?;
    let mut fill = Vec::new();
    for &v in &needed {
        if ctx.is_chosen(v) {
            fill.extend(incident_vars(setup, part.center_sq(v)));
        } else {
            let comp = ctx.component(v).ok_or(EcdtError::Invariant { which: 4, center: Some(v) })?;
            j.extend(&comp).map_err(EcdtError::from)?;
        }
    }
    fill.sort_unstable();
    fill.dedup();
    if !weak.check(&plus)? || !complete(&weak, &mut plus, &fill)? {
        return Err(ForcingError::Degenerate);
    }
    for &v in needed.iter().filter(|&&v| ctx.is_chosen(v)) {
        let sq = part.center_sq(v);
        for d in Dir::ALL {
            let p = if plus[&setup.reduced_var(sq, d)] {
                let w = ctx.chosen(part.sq_step(sq, d));
                Piece::Edge(v.min(w), v.max(w))
            } else {
                Piece::NonEdge(v, d)
            };
            j.insert(part, p).map_err(EcdtError::from)?;
        }
    }
    if !forcing_valid(ctx, psi, state, &j, &needed) {
        let var = psi.keys().copied().find(|&e| forces(setup, &ctx.rho, &state.info.union(&j).unwrap_or_default(), e).is_none());
        return Err(EcdtError::NotForced { var: var.unwrap_or(0) }.into());
    }
    for p in j.pieces() {
        let mut smaller = j.clone();
        smaller.remove(part, p);
        if forcing_valid(ctx, psi, state, &smaller, &needed) {
            j = smaller;
        }
    }
    Ok(Forcing { j, plus, needed })
}

/// Chosen centers at distance at most one from the chosen part of `support`.
pub fn neighborhood(ctx: &Context, support: &BTreeSet<Center>) -> BTreeSet<Center> {
    let part = &ctx.setup.part;
    let mut out = BTreeSet::new();
    for &c in support.iter().filter(|&&c| ctx.is_chosen(c)) {
        let sq = part.center_sq(c);
        out.insert(ctx.chosen(sq));
        for d in Dir::ALL {
            out.insert(ctx.chosen(part.sq_step(sq, d)));
        }
    }
    out
}

/// Everything recorded about one stage on one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub tree: usize,
    pub branch: usize,
    pub psi: Assignment,
    pub forcing: InfoSet,
    pub needed: BTreeSet<Center>,
    pub exposed_before: BTreeSet<Center>,
    /// Chosen centers whose incident variables the stage queries.
    pub sj: BTreeSet<Center>,
    pub queried: Vec<usize>,
    pub exposed_after: BTreeSet<Center>,
    pub tau_after: Assignment,
    /// Whether the stage ended with the branch forced.
    pub followed: bool,
    pub degenerate: bool,
}

impl StageRecord {
    /// `K`: the forcing information plus non-edges completing every chosen
    /// center with an odd number of edges.
    pub fn closing(&self, ctx: &Context) -> InfoSet {
        let mut k = self.forcing.clone();
        for c in self.forcing.support() {
            if ctx.is_chosen(c) && self.forcing.edge_count(c) % 2 == 1 {
                for d in Dir::ALL {
                    if self.forcing.slot(c, d).is_none() {
                        k.insert(&ctx.setup.part, Piece::NonEdge(c, d)).expect("empty slot");
                    }
                }
            }
        }
        k
    }

    /// Centers with an odd number of edges in the forcing information.
    pub fn disappearing(&self) -> BTreeSet<Center> {
        self.forcing.support().into_iter().filter(|&c| self.forcing.edge_count(c) % 2 == 1).collect()
    }

    /// Associated centers of the branch in the forcing support and not exposed before.
    pub fn a(&self, setup: &Setup) -> usize {
        let supp = self.forcing.support();
        let mut assoc = BTreeSet::new();
        for &e in self.psi.keys() {
            if let Some((v, _)) = setup.paths.associated_center(e) {
                if supp.contains(&v) && !self.exposed_before.contains(&v) {
                    assoc.insert(v);
                }
            }
        }
        assoc.len()
    }

    pub fn b(&self, setup: &Setup) -> usize {
        self.disappearing().len() - self.a(setup)
    }

    pub fn newly_exposed(&self) -> usize {
        self.exposed_after.len() - self.exposed_before.len()
    }
}

/// When to stop growing a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    /// A branch reaches this many queries, checked after each query.
    Length(usize),
    /// A branch exposes at least `l / 4` centers beyond the initial state,
    /// checked when a stage exposes its centers.
    Exposed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapHit {
    /// Queried variables on the stopping branch.
    pub branch: Assignment,
    pub state: StageState,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcdtResult {
    /// The finished tree when no branch reached the stopping rule.
    pub tree: Option<Tree>,
    pub cap: Option<Box<CapHit>>,
    pub degenerate: bool,
    /// Leaves where no answer to the next query is locally consistent.
    pub dead_leaves: usize,
    /// Dead leaves where the OR is not decided either way.
    pub ambiguous: Vec<Assignment>,
    pub stages: usize,
}

impl EcdtResult {
    /// Whether the finished tree represents the OR of the restricted trees,
    /// ignoring ambiguous dead leaves.
    pub fn represents<C: Consistency + ?Sized>(&self, lc: &C, restricted: &[Tree]) -> Result<bool, LcError> {
        let Some(t) = &self.tree else { return Ok(false) };
        for br in t.branches() {
            if self.ambiguous.contains(&br.assignment) {
                continue;
            }
            if !or_decided(lc, restricted, &br.assignment, br.label)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

enum Halt {
    Cap(Box<CapHit>),
    Error(EcdtError),
}

impl From<EcdtError> for Halt {
    fn from(e: EcdtError) -> Self {
        Halt::Error(e)
    }
}

impl From<LcError> for Halt {
    fn from(e: LcError) -> Self {
        Halt::Error(EcdtError::Lc(e))
    }
}

impl From<InfoError> for Halt {
    fn from(e: InfoError) -> Self {
        Halt::Error(EcdtError::Info(e))
    }
}

struct StageStart {
    cand: usize,
    forcing: Forcing,
    sj: BTreeSet<Center>,
    queried: Vec<usize>,
    degenerate: bool,
    before: StageState,
}

struct Builder<'c, 'a> {
    ctx: &'c Context<'a>,
    weak: Weak<'a>,
    cands: Vec<Candidate>,
    restricted: Vec<Tree>,
    stop: Stop,
    base_exposed: usize,
    path: Vec<StageRecord>,
    degenerate: bool,
    dead_leaves: usize,
    ambiguous: Vec<Assignment>,
    stages: usize,
}

impl Builder<'_, '_> {
    fn next_candidate(&self, tau: &Assignment) -> Result<Option<usize>, LcError> {
        for (i, c) in self.cands.iter().enumerate() {
            if let Some(ind) = &c.induced {
                if self.weak.pairwise(tau, ind)? {
                    return Ok(Some(i));
                }
            }
        }
        Ok(None)
    }

    fn record(&self, start: &StageStart, state: &StageState, followed: bool) -> StageRecord {
        let cand = &self.cands[start.cand];
        StageRecord {
            tree: cand.tree,
            branch: cand.branch,
            psi: cand.psi.clone(),
            forcing: start.forcing.j.clone(),
            needed: start.forcing.needed.clone(),
            exposed_before: start.before.exposed.clone(),
            sj: start.sj.clone(),
            queried: start.queried.clone(),
            exposed_after: state.exposed.clone(),
            tau_after: state.tau.clone(),
            followed,
            degenerate: start.degenerate,
        }
    }

    /// Stops inside a stage; the stage record holds the answers so far.
    fn halt(&self, start: &StageStart, state: &StageState, branch: &Assignment) -> Halt {
        let mut stages = self.path.clone();
        stages.push(self.record(start, state, false));
        Halt::Cap(Box::new(CapHit { branch: branch.clone(), state: state.clone(), stages }))
    }

    fn grow(&mut self, state: StageState, branch: &mut Assignment) -> Result<Tree, Halt> {
        let Some(ci) = self.next_candidate(&state.tau)? else { return Ok(Tree::leaf(false)) };
        self.stages += 1;
        let cand = &self.cands[ci];
        let (forcing, sj, mut queried, degenerate) = match find_forcing_info(self.ctx, &cand.psi, &state) {
            Ok(f) => {
                let sj = neighborhood(self.ctx, &f.j.support());
                let q: Vec<usize> = sj.iter().flat_map(|&c| incident_vars(self.ctx.setup, self.ctx.setup.part.center_sq(c))).collect();
                (f, sj, q, false)
            }
            Err(ForcingError::Degenerate) => {
                self.degenerate = true;
                let f = Forcing { j: InfoSet::new(), plus: Assignment::new(), needed: BTreeSet::new() };
                let q = cand.induced.as_ref().map(|m| m.keys().copied().collect()).unwrap_or_default();
                (f, BTreeSet::new(), q, true)
            }
            Err(ForcingError::Ecdt(e)) => return Err(e.into()),
        };
        queried.sort_unstable();
        queried.dedup();
        queried.retain(|y| !state.tau.contains_key(y));
        let mut next = state.clone();
        for c in forcing.j.support() {
            if !self.ctx.is_chosen(c) {
                if let Some(ci) = self.ctx.component(c) {
                    next.info.extend(&ci)?;
                }
            }
        }
        next.exposed.extend(sj.iter().copied());
        next.exposed.extend(forcing.j.support());
        let start = StageStart { cand: ci, forcing, sj, queried, degenerate, before: state };
        if let Stop::Exposed(l) = self.stop {
            if 4 * (next.exposed.len() - self.base_exposed) >= l {
                return Err(self.halt(&start, &next, branch));
            }
        }
        let vars = start.queried.clone();
        self.expand(next, &start, &vars, branch)
    }

    fn expand(&mut self, mut state: StageState, start: &StageStart, vars: &[usize], branch: &mut Assignment) -> Result<Tree, Halt> {
        let Some((&y, rest)) = vars.split_first() else { return self.finish(state, start, branch) };
        if state.tau.contains_key(&y) {
            return self.expand(state, start, rest, branch);
        }
        let mut ok = [false; 2];
        for b in [false, true] {
            state.tau.insert(y, b);
            ok[b as usize] = self.weak.check(&state.tau)?;
        }
        state.tau.remove(&y);
        match ok {
            [false, false] => {
                self.dead_leaves += 1;
                let label = or_decided(&self.weak, &self.restricted, &state.tau, true)?;
                if !label && !or_decided(&self.weak, &self.restricted, &state.tau, false)? {
                    self.ambiguous.push(branch.clone());
                }
                Ok(Tree::leaf(label))
            }
            [true, true] => {
                let mut kids = [None, None];
                for b in [false, true] {
                    let mut s = state.clone();
                    self.answer(&mut s, y, b)?;
                    branch.insert(y, b);
                    let r = match self.stop {
                        Stop::Length(cap) if branch.len() >= cap => Err(self.halt(start, &s, branch)),
                        _ => self.expand(s, start, rest, branch),
                    };
                    branch.remove(&y);
                    kids[b as usize] = Some(r?);
                }
                let [z, o] = kids;
                Ok(Tree::query(y, z.expect("built"), o.expect("built")))
            }
            _ => {
                let b = ok[1];
                self.answer(&mut state, y, b)?;
                let sub = self.expand(state, start, rest, branch)?;
                Ok(forced_node(y, b, sub))
            }
        }
    }

    fn answer(&self, state: &mut StageState, y: usize, b: bool) -> Result<(), InfoError> {
        state.tau.insert(y, b);
        for p in self.ctx.answer_pieces(y, b).into_iter().flatten() {
            state.info.insert(&self.ctx.setup.part, p)?;
        }
        Ok(())
    }

    fn finish(&mut self, state: StageState, start: &StageStart, branch: &mut Assignment) -> Result<Tree, Halt> {
        check_invariants(self.ctx, &start.before, &state)?;
        let cand = &self.cands[start.cand];
        let followed = cand.psi.iter().all(|(&e, &v)| forces(self.ctx.setup, &self.ctx.rho, &state.info, e) == Some(v));
        if followed {
            return Ok(Tree::leaf(true));
        }
        if state.tau.len() == start.before.tau.len() && state.exposed.len() == start.before.exposed.len() {
            return Err(EcdtError::Stalled { tree: cand.tree, branch: cand.branch, degenerate: start.degenerate }.into());
        }
        self.path.push(self.record(start, &state, followed));
        let out = self.grow(state, branch);
        self.path.pop();
        out
    }
}

/// A query whose other answer is locally inconsistent; that side is a 0-leaf.
pub fn forced_node(y: usize, b: bool, sub: Tree) -> Tree {
    if b {
        Tree::query(y, Tree::leaf(false), sub)
    } else {
        Tree::query(y, sub, Tree::leaf(false))
    }
}

/// Invariants after a stage: monotone exposure, `I` locally consistent and
/// closed on `S`, pairing components exposed whole and recorded exactly,
/// every variable at an exposed chosen center answered as recorded.
pub fn check_invariants(ctx: &Context, prev: &StageState, state: &StageState) -> Result<(), EcdtError> {
    let setup = ctx.setup;
    let part = &setup.part;
    if !prev.exposed.is_subset(&state.exposed) || prev.info.union(&state.info).as_ref() != Ok(&state.info) {
        return Err(EcdtError::Invariant { which: 1, center: None });
    }
    if !state.info.is_locally_consistent() {
        return Err(EcdtError::Invariant { which: 2, center: None });
    }
    for &c in &state.exposed {
        if !state.info.is_closed_at(c) {
            return Err(EcdtError::Invariant { which: 2, center: Some(c) });
        }
        if ctx.is_chosen(c) {
            let sq = part.center_sq(c);
            for d in Dir::ALL {
                let y = setup.reduced_var(sq, d);
                let want = match state.tau.get(&y) {
                    Some(&b) => b,
                    None => return Err(EcdtError::Invariant { which: 5, center: Some(c) }),
                };
                if matches!(state.info.slot(c, d), Some(Some(_))) != want {
                    return Err(EcdtError::Invariant { which: 5, center: Some(c) });
                }
            }
        } else {
            let comp = ctx.component(c).ok_or(EcdtError::Invariant { which: 4, center: Some(c) })?;
            for m in comp.support() {
                if !state.exposed.contains(&m) {
                    return Err(EcdtError::Invariant { which: 3, center: Some(m) });
                }
            }
            for d in Dir::ALL {
                if state.info.slot(c, d) != comp.slot(c, d) {
                    return Err(EcdtError::Invariant { which: 4, center: Some(c) });
                }
            }
        }
    }
    Ok(())
}

/// Builds the tree from an initial state. With `Stop::Length(s)` this is the
/// single-switch construction; with `Stop::Exposed(l)` it is one round of
/// the common partial decision tree.
pub fn build_ecdt_from(ctx: &Context, trees: &[Tree], t: usize, stop: Stop, init: StageState) -> Result<EcdtResult, EcdtError> {
    for (i, tr) in trees.iter().enumerate() {
        if tr.depth() > t {
            return Err(EcdtError::TooDeep { tree: i, depth: tr.depth(), limit: t });
        }
    }
    let mut b = Builder {
        ctx,
        weak: ctx.weak(),
        cands: candidates(ctx, trees),
        restricted: ctx.restricted(trees)?.into_iter().flatten().collect(),
        stop,
        base_exposed: init.exposed.len(),
        path: Vec::new(),
        degenerate: false,
        dead_leaves: 0,
        ambiguous: Vec::new(),
        stages: 0,
    };
    let mut branch = Assignment::new();
    let res = b.grow(init, &mut branch);
    let (tree, cap) = match res {
        Ok(t) => (Some(t), None),
        Err(Halt::Cap(c)) => (None, Some(c)),
        Err(Halt::Error(e)) => return Err(e),
    };
    Ok(EcdtResult { tree, cap, degenerate: b.degenerate, dead_leaves: b.dead_leaves, ambiguous: b.ambiguous, stages: b.stages })
}

pub fn build_ecdt(ctx: &Context, trees: &[Tree], s_cap: usize, t: usize) -> Result<EcdtResult, EcdtError> {
    build_ecdt_from(ctx, trees, t, Stop::Length(s_cap), StageState::default())
}

/// Summary numbers for the stages of a stopped branch up to stage `g`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageStats {
    pub g: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub exposed: usize,
    pub max_stage_exposure: usize,
    pub disappearing: usize,
    pub support_k: usize,
    pub disjoint: bool,
}

/// First stage after which at least `s / 4` centers are exposed.
pub fn cutoff(stages: &[StageRecord], s: usize) -> Option<usize> {
    stages.iter().position(|r| 4 * r.exposed_after.len() >= s).map(|i| i + 1)
}

pub fn stage_stats(setup: &Setup, stages: &[StageRecord], g: usize) -> StageStats {
    let used = &stages[..g];
    let a: usize = used.iter().map(|r| r.a(setup)).sum();
    let b: usize = used.iter().map(|r| r.b(setup)).sum();
    let exposed = used.last().map_or(0, |r| r.exposed_after.len());
    let mut seen = BTreeSet::new();
    let mut disjoint = true;
    let mut support_k = 0;
    for r in used {
        let supp = r.forcing.support();
        support_k += supp.len();
        for c in supp {
            disjoint &= seen.insert(c);
        }
    }
    StageStats {
        g,
        a,
        b,
        c: exposed.saturating_sub(a + b),
        exposed,
        max_stage_exposure: used.iter().map(|r| r.newly_exposed()).max().unwrap_or(0),
        disappearing: used.iter().map(|r| r.disappearing().len()).sum(),
        support_k,
        disjoint,
    }
}

/// Per-stage exposure per stage, for reporting.
pub fn exposures(stages: &[StageRecord]) -> BTreeMap<usize, usize> {
    stages.iter().enumerate().map(|(i, r)| (i + 1, r.newly_exposed())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restriction::sample_partial;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn setup() -> Setup {
        Setup::relaxed(45, 3).unwrap()
    }

    fn ctx(s: &Setup, seed: u64) -> Context<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Context::new(s, sample_partial(s, 11, &mut rng).unwrap()).unwrap()
    }

    #[test]
    fn constant_trees() {
        let s = setup();
        let c = ctx(&s, 1);
        let r = build_ecdt(&c, &[Tree::leaf(false), Tree::leaf(false)], 8, 2).unwrap();
        assert_eq!(r.tree, Some(Tree::leaf(false)));
        let r = build_ecdt(&c, &[Tree::leaf(false), Tree::leaf(true)], 8, 2).unwrap();
        assert_eq!(r.tree, Some(Tree::leaf(true)));
    }

    #[test]
    fn dead_center_needs_no_information() {
        let s = setup();
        let c = ctx(&s, 2);
        let dead = (0..s.part.center_count()).find(|&v| !c.rho.is_alive(v)).unwrap();
        let e = s.part.first_edge(dead, Dir::Down);
        let psi: Assignment = [(e, c.rho.rho0()[e])].into_iter().collect();
        let f = find_forcing_info(&c, &psi, &StageState::default()).unwrap();
        assert!(f.j.is_empty());
    }

    #[test]
    fn non_chosen_center_takes_its_component() {
        let s = setup();
        let c = ctx(&s, 3);
        let v = (0..s.part.center_count()).find(|&v| c.rho.is_alive(v) && !c.is_chosen(v)).unwrap();
        let e = s.part.first_edge(v, Dir::Right);
        let val = match c.image(e) {
            Image::Const(b) => b,
            Image::Lit { .. } => unreachable!("non-chosen paths are constant"),
        };
        let psi: Assignment = [(e, val)].into_iter().collect();
        let f = find_forcing_info(&c, &psi, &StageState::default()).unwrap();
        assert_eq!(f.j, c.component(v).unwrap());
    }

    #[test]
    fn chosen_center_query_represents() {
        let s = setup();
        for seed in 0..6 {
            let c = ctx(&s, 10 + seed);
            let u = c.chosen(4);
            let e = s.part.first_edge(u, Dir::Up);
            let trees = [Tree::query(e, Tree::leaf(false), Tree::leaf(true))];
            let r = build_ecdt(&c, &trees, 100, 2).unwrap();
            assert!(r.tree.is_some());
            let restricted: Vec<Tree> = c.restricted(&trees).unwrap().into_iter().flatten().collect();
            assert!(r.represents(&c.weak(), &restricted).unwrap());
            let r = build_ecdt(&c, &trees, 4, 2).unwrap();
            let cap = r.cap.expect("stage queries many variables");
            assert!(cap.branch.len() >= 4);
            assert!(!cap.stages[0].forcing.is_empty());
        }
    }
}
