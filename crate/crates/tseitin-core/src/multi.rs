//! A common partial decision tree for several ORs of decision trees: a
//! shared top tree after which each OR is decided by a shallow completion.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::consistency::{Assignment, Consistency, LcError, Weak};
use crate::ecdt::{build_ecdt_from, incident_vars, Context, EcdtError, StageRecord, StageState, Stop};
use crate::info::InfoSet;
use crate::tree::{or_decided, CommonPdt, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiError {
    Ecdt(EcdtError),
    /// A round's tree finished without exposing enough centers although the
    /// OR was not representable at depth `ell`.
    ShortRound { formula: usize },
}

impl fmt::Display for MultiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiError::Ecdt(e) => write!(f, "{e}"),
            MultiError::ShortRound { formula } => write!(f, "round for formula {formula} ended early"),
        }
    }
}

impl From<EcdtError> for MultiError {
    fn from(e: EcdtError) -> Self {
        MultiError::Ecdt(e)
    }
}

impl From<LcError> for MultiError {
    fn from(e: LcError) -> Self {
        MultiError::Ecdt(EcdtError::Lc(e))
    }
}

/// A decision tree of depth at most `ell` over the variables of `trees`
/// whose every branch consistent with `tau` decides their OR; the shallowest
/// one found by iterative deepening.
pub fn decide_tree<C: Consistency + ?Sized>(lc: &C, trees: &[Tree], tau: &Assignment, ell: usize) -> Result<Option<Tree>, LcError> {
    let mut vars: Vec<usize> = trees.iter().flat_map(crate::tree::variables).collect();
    vars.sort_unstable();
    vars.dedup();
    for d in 0..=ell {
        let mut memo = BTreeMap::new();
        if let Some(t) = search(lc, trees, &vars, &mut tau.clone(), d, &mut memo)? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

type Memo = BTreeMap<(Assignment, usize), Option<Tree>>;

fn search<C: Consistency + ?Sized>(
    lc: &C,
    trees: &[Tree],
    vars: &[usize],
    tau: &mut Assignment,
    d: usize,
    memo: &mut Memo,
) -> Result<Option<Tree>, LcError> {
    if let Some(r) = memo.get(&(tau.clone(), d)) {
        return Ok(r.clone());
    }
    let mut out = None;
    if or_decided(lc, trees, tau, true)? {
        out = Some(Tree::leaf(true));
    } else if or_decided(lc, trees, tau, false)? {
        out = Some(Tree::leaf(false));
    } else if d > 0 {
        'vars: for &y in vars {
            if tau.contains_key(&y) {
                continue;
            }
            let mut kids = [None, None];
            for b in [false, true] {
                tau.insert(y, b);
                let sub = if lc.check(tau)? { search(lc, trees, vars, tau, d - 1, memo)? } else { Some(Tree::leaf(false)) };
                tau.remove(&y);
                match sub {
                    Some(t) => kids[b as usize] = Some(t),
                    None => continue 'vars,
                }
            }
            let [z, o] = kids;
            out = Some(Tree::query(y, z.expect("set"), o.expect("set")));
            break;
        }
    }
    memo.insert((tau.clone(), d), out.clone());
    Ok(out)
}

/// One round: the chosen formula, the state it started from, the stages
/// of its long branch and the variables then queried in the top tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub formula: usize,
    pub start: StageState,
    pub stages: Vec<StageRecord>,
    pub exposed_after: usize,
    pub block: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiCap {
    /// Top-tree queries on the stopping branch.
    pub branch: Assignment,
    pub tau: Assignment,
    pub rounds: Vec<Round>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiResult {
    pub cpdt: Option<CommonPdt>,
    pub cap: Option<Box<MultiCap>>,
    pub rounds: usize,
    pub dead_leaves: usize,
    /// Top leaves where some OR has no deciding completion.
    pub undecided: usize,
}

enum Halt {
    Cap(Box<MultiCap>),
    Error(MultiError),
}

impl<E: Into<MultiError>> From<E> for Halt {
    fn from(e: E) -> Self {
        Halt::Error(e.into())
    }
}

struct Builder<'c, 'a> {
    ctx: &'c Context<'a>,
    weak: Weak<'a>,
    lists: &'c [Vec<Tree>],
    restricted: Vec<Vec<Tree>>,
    ell: usize,
    s_cap: usize,
    t: usize,
    rounds: Vec<Round>,
    completions: Vec<Vec<Tree>>,
    total_rounds: usize,
    dead_leaves: usize,
    undecided: usize,
}

impl Builder<'_, '_> {
    fn leaf(&mut self, tau: &Assignment) -> Result<Tree, Halt> {
        for (j, r) in self.restricted.iter().enumerate() {
            let t = match decide_tree(&self.weak, r, tau, self.ell)? {
                Some(t) => t,
                None => {
                    self.undecided += 1;
                    Tree::leaf(false)
                }
            };
            self.completions[j].push(t);
        }
        Ok(Tree::leaf(false))
    }

    /// A leaf on a locally inconsistent branch; its completions are trivial.
    fn pruned(&mut self) -> Tree {
        for c in &mut self.completions {
            c.push(Tree::leaf(false));
        }
        Tree::leaf(false)
    }

    fn top(&mut self, state: StageState, branch: &mut Assignment) -> Result<Tree, Halt> {
        let mut pick = None;
        for (j, r) in self.restricted.iter().enumerate() {
            if decide_tree(&self.weak, r, &state.tau, self.ell)?.is_none() {
                pick = Some(j);
                break;
            }
        }
        let Some(j) = pick else { return self.leaf(&state.tau) };
        self.total_rounds += 1;
        let res = build_ecdt_from(self.ctx, &self.lists[j], self.t, Stop::Exposed(self.ell), state.clone())?;
        let Some(cap) = res.cap else { return Err(MultiError::ShortRound { formula: j }.into()) };
        let part = &self.ctx.setup.part;
        let mut block: Vec<usize> = cap
            .state
            .exposed
            .iter()
            .filter(|&&c| self.ctx.is_chosen(c))
            .flat_map(|&c| incident_vars(self.ctx.setup, part.center_sq(c)))
            .filter(|y| !state.tau.contains_key(y))
            .collect();
        block.sort_unstable();
        block.dedup();
        self.rounds.push(Round { formula: j, start: state.clone(), stages: cap.stages.clone(), exposed_after: cap.state.exposed.len(), block: block.clone() });
        let mut base = StageState { tau: state.tau.clone(), exposed: cap.state.exposed.clone(), info: InfoSet::new() };
        for &c in &base.exposed {
            if !self.ctx.is_chosen(c) {
                if let Some(ci) = self.ctx.component(c) {
                    base.info.extend(&ci).map_err(EcdtError::from)?;
                }
            }
        }
        for (&y, &b) in &state.tau {
            for p in self.ctx.answer_pieces(y, b).into_iter().flatten() {
                if !base.info.contains(part, p) {
                    base.info.insert(part, p).map_err(EcdtError::from)?;
                }
            }
        }
        let out = self.query(base, &block, branch);
        self.rounds.pop();
        out
    }

    fn query(&mut self, mut state: StageState, vars: &[usize], branch: &mut Assignment) -> Result<Tree, Halt> {
        let Some((&y, rest)) = vars.split_first() else { return self.top(state, branch) };
        if state.tau.contains_key(&y) {
            return self.query(state, rest, branch);
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
                self.leaf(&state.tau)
            }
            [true, true] => {
                let mut kids = [None, None];
                for b in [false, true] {
                    let mut s = state.clone();
                    answer(self.ctx, &mut s, y, b)?;
                    branch.insert(y, b);
                    let r = if branch.len() >= self.s_cap {
                        Err(Halt::Cap(Box::new(MultiCap { branch: branch.clone(), tau: s.tau.clone(), rounds: self.rounds.clone() })))
                    } else {
                        self.query(s, rest, branch)
                    };
                    branch.remove(&y);
                    kids[b as usize] = Some(r?);
                }
                let [z, o] = kids;
                Ok(Tree::query(y, z.expect("built"), o.expect("built")))
            }
            _ => {
                let b = ok[1];
                answer(self.ctx, &mut state, y, b)?;
                let mut kids = [None, None];
                for side in [false, true] {
                    kids[side as usize] = Some(if side == b { self.query(state.clone(), rest, branch)? } else { self.pruned() });
                }
                let [z, o] = kids;
                Ok(Tree::query(y, z.expect("built"), o.expect("built")))
            }
        }
    }
}

fn answer(ctx: &Context, state: &mut StageState, y: usize, b: bool) -> Result<(), EcdtError> {
    state.tau.insert(y, b);
    for p in ctx.answer_pieces(y, b).into_iter().flatten() {
        state.info.insert(&ctx.setup.part, p)?;
    }
    Ok(())
}

/// Builds an `ell`-common partial decision tree for the ORs of `lists`
/// under `ctx.sigma`, stopping when a top branch reaches `s_cap` queries.
pub fn build_common_pdt(ctx: &Context, lists: &[Vec<Tree>], ell: usize, s_cap: usize, t: usize) -> Result<MultiResult, MultiError> {
    let mut restricted = Vec::with_capacity(lists.len());
    for l in lists {
        restricted.push(ctx.restricted(l)?.into_iter().flatten().collect());
    }
    let mut b = Builder {
        ctx,
        weak: ctx.weak(),
        lists,
        restricted,
        ell,
        s_cap,
        t,
        rounds: Vec::new(),
        completions: alloc::vec![Vec::new(); lists.len()],
        total_rounds: 0,
        dead_leaves: 0,
        undecided: 0,
    };
    let mut branch = Assignment::new();
    let (cpdt, cap) = match b.top(StageState::default(), &mut branch) {
        Ok(top) => (Some(CommonPdt { top, completions: core::mem::take(&mut b.completions) }), None),
        Err(Halt::Cap(c)) => (None, Some(c)),
        Err(Halt::Error(e)) => return Err(e),
    };
    Ok(MultiResult { cpdt, cap, rounds: b.total_rounds, dead_leaves: b.dead_leaves, undecided: b.undecided })
}

/// The restricted tree lists the common tree is checked against.
pub fn restricted_lists(ctx: &Context, lists: &[Vec<Tree>]) -> Result<Vec<Vec<Tree>>, LcError> {
    lists.iter().map(|l| Ok(ctx.restricted(l)?.into_iter().flatten().collect())).collect()
}
