//! Encoding a restriction whose extended canonical decision tree is deep as
//! a smaller restriction plus a short bit string, and decoding it back.
//!
//! There is one decoder. The encoder runs it against the ground truth and
//! records every answer it gives, so both sides read the same bits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::bits::{width, BitReader, BitVec, Overrun};
use crate::consistency::{Assignment, Consistency, LcError, Weak};
use crate::ecdt::{answer_pieces, build_ecdt, cutoff, incident_vars, one_branches, stage_stats, Context, EcdtError, StageRecord, StageStats};
use crate::grid::Dir;
use crate::info::{apply_info, component_info, conflict, on_path, signature_of, InfoError, InfoSet, Piece, Signature};
use crate::multi::{build_common_pdt, MultiError};
use crate::pairing::{shapes, Component};
use crate::partition::Center;
use crate::restriction::{PartialRestriction, Setup};
use crate::tree::Tree;

/// Bits used for a pairing component shape.
pub const SHAPE_BITS: u32 = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodecError {
    /// The tree did not reach the depth cap.
    NotCapHit,
    /// A stage on the stopping branch used the degenerate fallback.
    Degenerate,
    /// The stopping branch never exposed `s / 4` centers.
    NoCutoff,
    Ecdt(EcdtError),
    Info(InfoError),
    Lc(LcError),
    Overrun(Overrun),
    Invalid(&'static str),
    NoBranch { stage: usize },
    Trailing(usize),
    /// Re-encoding the decoded restriction does not give the input.
    Mismatch,
    Multi(MultiError),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::NotCapHit => f.write_str("the tree did not reach the depth cap"),
            CodecError::Degenerate => f.write_str("a stage used the degenerate fallback"),
            CodecError::NoCutoff => f.write_str("the stopping branch exposes too few centers"),
            CodecError::Ecdt(e) => write!(f, "{e}"),
            CodecError::Info(e) => write!(f, "{e}"),
            CodecError::Lc(e) => write!(f, "{e}"),
            CodecError::Overrun(e) => write!(f, "{e}"),
            CodecError::Invalid(what) => write!(f, "invalid stream: {what}"),
            CodecError::NoBranch { stage } => write!(f, "no branch accepted at stage {stage}"),
            CodecError::Trailing(n) => write!(f, "{n} unread bits after the last stage"),
            CodecError::Mismatch => f.write_str("decoded restriction does not re-encode to the input"),
            CodecError::Multi(e) => write!(f, "{e}"),
        }
    }
}

impl From<EcdtError> for CodecError {
    fn from(e: EcdtError) -> Self {
        CodecError::Ecdt(e)
    }
}

impl From<InfoError> for CodecError {
    fn from(e: InfoError) -> Self {
        CodecError::Info(e)
    }
}

impl From<LcError> for CodecError {
    fn from(e: LcError) -> Self {
        CodecError::Lc(e)
    }
}

impl From<MultiError> for CodecError {
    fn from(e: MultiError) -> Self {
        CodecError::Multi(e)
    }
}

impl From<Overrun> for CodecError {
    fn from(e: Overrun) -> Self {
        CodecError::Overrun(e)
    }
}

/// A question the decoder asks of the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Question<'q> {
    /// Does some variable of the candidate have an undiscovered associated center?
    Discover { vars: &'q [usize] },
    /// Position of the first such variable.
    DiscoverIndex { vars: &'q [usize] },
    Signature(Center),
    /// Is this 1-branch the forceable branch of the current stage?
    Accept { tree: usize, branch: usize },
    Shape(Center),
    /// Index of the member of `v`'s pairing component in sub-square `sq`.
    Member { v: Center, sq: usize },
    /// Is the chosen center of `sq` the lowest alive center of the current restriction?
    ChosenAlive(usize),
    ChosenIndex(usize),
    Answer(usize),
    /// Is this newly exposed center in the support of a later stage?
    LaterStage(Center),
    /// Index of the formula handled by the next round.
    Formula,
    /// Answer to a query of the common top tree.
    TopAnswer(usize),
}

pub trait Channel {
    fn ask(&mut self, q: Question<'_>, bits: u32, dec: &Decoder<'_>) -> Result<u64, CodecError>;
}

/// Reads answers from a bit stream.
pub struct Reader<'b>(pub BitReader<'b>);

impl Channel for Reader<'_> {
    fn ask(&mut self, _q: Question<'_>, bits: u32, _dec: &Decoder<'_>) -> Result<u64, CodecError> {
        Ok(self.0.read(bits)?)
    }
}

/// The decoder state between stages.
#[derive(Clone, Debug)]
pub struct Decoder<'a> {
    setup: &'a Setup,
    weak: Weak<'a>,
    w_t: u32,
    w_delta: u32,
    lists: Vec<Vec<(usize, usize, Assignment)>>,
    /// The tree list whose branches the current stage searches.
    pub list: usize,
    pub round: usize,
    pub stage: usize,
    pub top_len: usize,
    pub alive: Vec<bool>,
    pub rho0: Vec<bool>,
    pub info: InfoSet,
    pub tau: Assignment,
    pub exposed: BTreeSet<Center>,
    pub exposed_chosen: BTreeSet<Center>,
    /// Pairing components recovered so far.
    pub pi_info: InfoSet,
    pub known: BTreeMap<usize, Center>,
    pub e_set: BTreeMap<Center, Signature>,
}

fn invalid<T>(what: &'static str) -> Result<T, CodecError> {
    Err(CodecError::Invalid(what))
}

impl<'a> Decoder<'a> {
    pub fn new(setup: &'a Setup, rho_star: &PartialRestriction, lists: &[Vec<Tree>], t: usize) -> Self {
        Decoder {
            setup,
            weak: setup.weak(),
            w_t: width(t),
            w_delta: width(setup.part.delta()),
            lists: lists.iter().map(|l| one_branches(l)).collect(),
            list: 0,
            round: 0,
            stage: 0,
            top_len: 0,
            alive: rho_star.alive().to_vec(),
            rho0: rho_star.rho0().to_vec(),
            info: InfoSet::new(),
            tau: Assignment::new(),
            exposed: BTreeSet::new(),
            exposed_chosen: BTreeSet::new(),
            pi_info: InfoSet::new(),
            known: BTreeMap::new(),
            e_set: BTreeMap::new(),
        }
    }

    pub fn lowest_alive(&self, sq: usize) -> Option<Center> {
        let part = &self.setup.part;
        (0..part.delta()).map(|l| part.center(sq, l)).find(|&c| self.alive[c])
    }

    fn get_chosen<C: Channel>(&mut self, ch: &mut C, sq: usize) -> Result<Center, CodecError> {
        if let Some(&c) = self.known.get(&sq) {
            return Ok(c);
        }
        let c = if ch.ask(Question::ChosenAlive(sq), 1, self)? == 1 {
            match self.lowest_alive(sq) {
                Some(c) => c,
                None => return invalid("no alive center in sub-square"),
            }
        } else {
            let l = ch.ask(Question::ChosenIndex(sq), self.w_delta, self)? as usize;
            if l >= self.setup.part.delta() {
                return invalid("center index out of range");
            }
            self.setup.part.center(sq, l)
        };
        self.known.insert(sq, c);
        Ok(c)
    }

    /// The value the current state forces on `e` for candidate testing.
    fn view(&self, e: usize) -> Option<bool> {
        let base = self.rho0[e];
        let Some((v, d)) = self.setup.paths.associated_center(e) else { return Some(base) };
        if self.info.is_closed_at(v) {
            if let Some(Some(w)) = self.info.slot(v, d) {
                if on_path(self.setup, v, w, e) {
                    let pending = self.e_set.get(&v).is_some_and(|s| s.edge(d));
                    return Some(base ^ !pending);
                }
            }
            Some(base)
        } else if self.alive[v] {
            None
        } else {
            Some(base)
        }
    }

    fn find_branch<C: Channel>(&mut self, ch: &mut C) -> Result<usize, CodecError> {
        for idx in 0..self.lists[self.list].len() {
            let (tree, branch, psi) = &self.lists[self.list][idx];
            let (tree, branch) = (*tree, *branch);
            let vars: Vec<usize> = psi.keys().copied().collect();
            if !psi.iter().all(|(&e, &v)| self.view(e) == Some(v)) {
                continue;
            }
            loop {
                if conflict(self.setup, &self.weak, &self.e_set, &vars, &self.info, &self.tau)? {
                    break;
                }
                if ch.ask(Question::Discover { vars: &vars }, 1, self)? == 1 {
                    let i = ch.ask(Question::DiscoverIndex { vars: &vars }, self.w_t, self)? as usize;
                    let Some(&e) = vars.get(i) else { return invalid("branch index out of range") };
                    let Some((v, _)) = self.setup.paths.associated_center(e) else {
                        return invalid("variable has no associated center");
                    };
                    if self.alive[v] || self.e_set.contains_key(&v) {
                        return invalid("discovered center is alive or known");
                    }
                    let sig = Signature(ch.ask(Question::Signature(v), Signature::BITS, self)? as u16);
                    if !sig.is_valid() {
                        return invalid("signature");
                    }
                    self.e_set.insert(v, sig);
                    continue;
                }
                if ch.ask(Question::Accept { tree, branch }, 1, self)? == 1 {
                    return Ok(idx);
                }
                break;
            }
        }
        Err(CodecError::NoBranch { stage: self.stage + 1 })
    }

    fn recover_component<C: Channel>(&mut self, ch: &mut C, v: Center) -> Result<Component, CodecError> {
        let part = &self.setup.part;
        let sq = part.center_sq(v);
        let table = shapes(part, sq);
        let idx = ch.ask(Question::Shape(v), SHAPE_BITS, self)? as usize;
        let Some((hub, others)) = table.get(idx).cloned() else { return invalid("shape index") };
        let mut member_sqs = Vec::new();
        if hub != sq {
            member_sqs.push(hub);
        }
        member_sqs.extend(others.iter().copied().filter(|&x| x != sq));
        let mut members = BTreeMap::new();
        members.insert(sq, v);
        for m in member_sqs {
            let l = ch.ask(Question::Member { v, sq: m }, self.w_delta, self)? as usize;
            if l >= self.setup.part.delta() {
                return invalid("center index out of range");
            }
            members.insert(m, self.setup.part.center(m, l));
        }
        if idx < 4 {
            let w = members[&others[0]];
            Ok(Component::Edge(v.min(w), v.max(w)))
        } else {
            let center = members[&hub];
            let leaves: Vec<Center> = others.iter().map(|x| members[x]).collect();
            Ok(Component::Star { center, leaves: [leaves[0], leaves[1], leaves[2]] })
        }
    }

    /// One stage. Returns whether `done` held once the stage exposed its
    /// centers, in which case its answers are not read.
    fn stage_step<C: Channel>(&mut self, ch: &mut C, done: &dyn Fn(&Self) -> bool, later_when_done: bool) -> Result<bool, CodecError> {
        let setup = self.setup;
        let part = &setup.part;
        let idx = self.find_branch(ch)?;
        let psi = self.lists[self.list][idx].2.clone();
        let mut a = BTreeSet::new();
        for &e in psi.keys() {
            if let Some((v, _)) = setup.paths.associated_center(e) {
                if self.e_set.contains_key(&v) && !self.info.is_closed_at(v) {
                    a.insert(v);
                }
            }
        }
        for &v in &a {
            if self.e_set[&v].chosen() {
                let sq = part.center_sq(v);
                if self.known.get(&sq).is_some_and(|&c| c != v) {
                    return invalid("two chosen centers in one sub-square");
                }
                self.known.insert(sq, v);
            }
        }
        let mut j = InfoSet::new();
        let mut chosen_part = BTreeSet::new();
        let mut i_pi = InfoSet::new();
        for &v in &a {
            let sig = self.e_set[&v];
            if sig.chosen() {
                chosen_part.insert(v);
                let sq = part.center_sq(v);
                for d in Dir::ALL {
                    if !sig.present(d) {
                        continue;
                    }
                    let p = if sig.edge(d) {
                        let w = self.get_chosen(ch, part.sq_step(sq, d))?;
                        chosen_part.insert(w);
                        Piece::Edge(v.min(w), v.max(w))
                    } else {
                        Piece::NonEdge(v, d)
                    };
                    if !j.contains(part, p) {
                        j.insert(part, p)?;
                    }
                }
            } else if !i_pi.support().contains(&v) {
                let comp = self.recover_component(ch, v)?;
                let ci = component_info(part, &comp);
                i_pi.extend(&ci)?;
            }
        }
        j.extend(&i_pi)?;
        let supp = j.support();
        for &c in &supp {
            if let Some(&sig) = self.e_set.get(&c) {
                if sig != signature_of(c, chosen_part.contains(&c), &j) {
                    return invalid("signature disagrees with recovered information");
                }
            }
        }
        for &c in &supp {
            if j.edge_count(c) % 2 == 1 {
                if self.alive[c] {
                    return invalid("odd center is alive");
                }
                self.alive[c] = true;
            }
        }
        for (x, y) in j.edges() {
            let id = setup.paths.id_between(part, x, y).ok_or(InfoError::NotAdjacent(x, y))?;
            for e in setup.paths.path(id).edges() {
                self.rho0[e] ^= true;
            }
        }
        let mut sj_sqs = BTreeSet::new();
        for &c in &chosen_part {
            let sq = part.center_sq(c);
            sj_sqs.insert(sq);
            for d in Dir::ALL {
                sj_sqs.insert(part.sq_step(sq, d));
            }
        }
        let mut sj = BTreeSet::new();
        for &sq in &sj_sqs {
            sj.insert(self.get_chosen(ch, sq)?);
        }
        self.info.extend(&i_pi)?;
        self.pi_info.extend(&i_pi)?;
        let fresh: Vec<Center> = sj.iter().copied().filter(|c| !self.exposed.contains(c) && !supp.contains(c)).collect();
        self.exposed.extend(supp.iter().copied());
        self.exposed.extend(sj.iter().copied());
        self.exposed_chosen.extend(sj.iter().copied());
        self.exposed_chosen.extend(chosen_part.iter().copied());
        for c in &supp {
            self.e_set.remove(c);
        }
        self.stage += 1;
        if done(self) {
            if later_when_done {
                self.later(ch, &fresh)?;
            }
            return Ok(true);
        }
        let mut vars: Vec<usize> = sj_sqs.iter().flat_map(|&sq| incident_vars(setup, sq)).collect();
        vars.sort_unstable();
        vars.dedup();
        for y in vars {
            if self.tau.contains_key(&y) {
                continue;
            }
            let mut ok = [false; 2];
            for b in [false, true] {
                self.tau.insert(y, b);
                ok[b as usize] = self.weak.check(&self.tau)?;
            }
            self.tau.remove(&y);
            let b = match ok {
                [true, true] => ch.ask(Question::Answer(y), 1, self)? == 1,
                [true, false] => false,
                [false, true] => true,
                [false, false] => return invalid("no consistent answer"),
            };
            self.record(ch, y, b)?;
        }
        self.later(ch, &fresh)?;
        Ok(false)
    }

    /// Adds an answer to the branch and its pieces to the information set.
    fn record<C: Channel>(&mut self, ch: &mut C, y: usize, b: bool) -> Result<(), CodecError> {
        let setup = self.setup;
        self.tau.insert(y, b);
        let (sa, sb) = setup.reduced_ends(y);
        let (ca, cb) = (self.get_chosen(ch, sa)?, self.get_chosen(ch, sb)?);
        for p in answer_pieces(setup, y, b, |sq| if sq == sa { ca } else { cb }).into_iter().flatten() {
            if !self.info.contains(&setup.part, p) {
                self.info.insert(&setup.part, p)?;
            }
        }
        Ok(())
    }

    /// Signatures of newly exposed centers that later stages use.
    fn later<C: Channel>(&mut self, ch: &mut C, fresh: &[Center]) -> Result<(), CodecError> {
        for &c in fresh {
            if self.e_set.contains_key(&c) {
                continue;
            }
            if ch.ask(Question::LaterStage(c), 1, self)? == 1 {
                let sig = Signature(ch.ask(Question::Signature(c), Signature::BITS, self)? as u16);
                if !sig.is_valid() {
                    return invalid("signature");
                }
                self.e_set.insert(c, sig);
            }
        }
        Ok(())
    }

    fn finish(&self) -> Result<PartialRestriction, CodecError> {
        if !self.e_set.is_empty() {
            return invalid("signatures left unused");
        }
        Ok(PartialRestriction::from_parts(self.alive.clone(), self.rho0.clone()))
    }

    /// Decodes a single tree list until `s / 4` centers are exposed.
    pub fn run<C: Channel>(&mut self, ch: &mut C, s: usize) -> Result<PartialRestriction, CodecError> {
        while 4 * self.exposed.len() < s {
            self.stage_step(ch, &|d| 4 * d.exposed.len() >= s, false)?;
        }
        self.finish()
    }

    /// Decodes rounds of a common partial decision tree until the top
    /// branch reaches `s_cap` queries.
    pub fn run_multi<C: Channel>(&mut self, ch: &mut C, ell: usize, s_cap: usize) -> Result<PartialRestriction, CodecError> {
        let setup = self.setup;
        let w_m = width(self.lists.len());
        loop {
            let j = ch.ask(Question::Formula, w_m, self)? as usize;
            if j >= self.lists.len() {
                return invalid("formula index out of range");
            }
            self.list = j;
            let base = self.exposed.len();
            let start = self.tau.clone();
            while !self.stage_step(ch, &|d| 4 * (d.exposed.len() - base) >= ell, true)? {}
            self.round += 1;
            let mut vars: Vec<usize> = self
                .exposed_chosen
                .iter()
                .flat_map(|&c| incident_vars(setup, setup.part.center_sq(c)))
                .filter(|y| !start.contains_key(y))
                .collect();
            vars.sort_unstable();
            vars.dedup();
            self.tau = Assignment::new();
            self.info = self.pi_info.clone();
            for (y, b) in start {
                self.record(ch, y, b)?;
            }
            for y in vars {
                if self.tau.contains_key(&y) {
                    continue;
                }
                let mut ok = [false; 2];
                for b in [false, true] {
                    self.tau.insert(y, b);
                    ok[b as usize] = self.weak.check(&self.tau)?;
                }
                self.tau.remove(&y);
                let b = match ok {
                    [true, true] => {
                        self.top_len += 1;
                        ch.ask(Question::TopAnswer(y), 1, self)? == 1
                    }
                    [true, false] => false,
                    [false, true] => true,
                    [false, false] => return invalid("no consistent answer"),
                };
                self.record(ch, y, b)?;
                if self.top_len >= s_cap {
                    return self.finish();
                }
            }
        }
    }
}

/// Answers the decoder's questions from a known restriction.
struct Oracle<'c, 'a> {
    ctx: &'c Context<'a>,
    stages: Vec<&'c StageRecord>,
    owner: BTreeMap<Center, usize>,
    disappearing: BTreeMap<Center, usize>,
    /// Branch answers available to each stage.
    answers: Vec<&'c Assignment>,
    top: Option<&'c Assignment>,
    formulas: Vec<usize>,
    out: BitVec,
}

impl<'c, 'a> Oracle<'c, 'a> {
    fn new(ctx: &'c Context<'a>, stages: Vec<&'c StageRecord>, answers: Vec<&'c Assignment>) -> Result<(Self, InfoSet), CodecError> {
        let mut k_star = InfoSet::new();
        let mut owner = BTreeMap::new();
        let mut disappearing = BTreeMap::new();
        for (j, r) in stages.iter().enumerate() {
            if r.degenerate {
                return Err(CodecError::Degenerate);
            }
            k_star.extend(&r.closing(ctx))?;
            for c in r.forcing.support() {
                owner.insert(c, j);
            }
            for c in r.disappearing() {
                disappearing.insert(c, j);
            }
        }
        Ok((Oracle { ctx, stages, owner, disappearing, answers, top: None, formulas: Vec::new(), out: BitVec::new() }, k_star))
    }

    fn undiscovered(&self, vars: &[usize], dec: &Decoder<'_>) -> Option<usize> {
        vars.iter().position(|&e| {
            self.ctx.setup.paths.associated_center(e).is_some_and(|(v, _)| {
                self.disappearing.get(&v).is_some_and(|&j| j >= dec.stage) && !dec.e_set.contains_key(&v)
            })
        })
    }

    fn shape(&self, v: Center) -> Result<u64, CodecError> {
        let part = &self.ctx.setup.part;
        let comp = self.ctx.component_index(v).map(|i| self.ctx.pi.components[i]);
        let Some(comp) = comp else { return invalid("center has no pairing component") };
        let sq = part.center_sq(v);
        let (hub, mut others): (usize, Vec<usize>) = match comp {
            Component::Edge(a, b) => (sq, alloc::vec![part.center_sq(if a == v { b } else { a })]),
            Component::Star { center, leaves } => (part.center_sq(center), leaves.iter().map(|&l| part.center_sq(l)).collect()),
        };
        others.sort_unstable();
        let is_edge = matches!(comp, Component::Edge(..));
        for (i, (h, o)) in shapes(part, sq).into_iter().enumerate() {
            let mut o = o;
            o.sort_unstable();
            if (i < 4) == is_edge && h == hub && o == others {
                return Ok(i as u64);
            }
        }
        invalid("component shape not in table")
    }

    fn member(&self, v: Center, sq: usize) -> Result<u64, CodecError> {
        let part = &self.ctx.setup.part;
        let i = self.ctx.component_index(v).ok_or(CodecError::Invalid("center has no pairing component"))?;
        let m = self.ctx.pi.components[i].centers().into_iter().find(|&c| part.center_sq(c) == sq);
        m.map(|c| part.center_index(c) as u64).ok_or(CodecError::Invalid("no member in sub-square"))
    }
}

impl Channel for Oracle<'_, '_> {
    fn ask(&mut self, q: Question<'_>, bits: u32, dec: &Decoder<'_>) -> Result<u64, CodecError> {
        let ctx = self.ctx;
        let v = match q {
            Question::Discover { vars } => self.undiscovered(vars, dec).is_some() as u64,
            Question::DiscoverIndex { vars } => self.undiscovered(vars, dec).expect("asked after a discovery") as u64,
            Question::Signature(c) => {
                let &j = self.owner.get(&c).ok_or(CodecError::Invalid("signature of unused center"))?;
                signature_of(c, ctx.is_chosen(c), &self.stages[j].forcing).0 as u64
            }
            Question::Accept { tree, branch } => {
                let r = self.stages.get(dec.stage).ok_or(CodecError::Invalid("stage past the cutoff"))?;
                (r.tree == tree && r.branch == branch) as u64
            }
            Question::Shape(c) => self.shape(c)?,
            Question::Member { v, sq } => self.member(v, sq)?,
            Question::ChosenAlive(sq) => (dec.lowest_alive(sq) == Some(ctx.chosen(sq))) as u64,
            Question::ChosenIndex(sq) => ctx.setup.part.center_index(ctx.chosen(sq)) as u64,
            Question::Answer(y) => {
                let tau = self.answers.get(dec.stage.wrapping_sub(1)).ok_or(CodecError::Invalid("answer outside a stage"))?;
                *tau.get(&y).ok_or(CodecError::Invalid("answer not on branch"))? as u64
            }
            Question::LaterStage(c) => self.owner.get(&c).is_some_and(|&j| j >= dec.stage) as u64,
            Question::Formula => *self.formulas.get(dec.round).ok_or(CodecError::Invalid("round past the cap"))? as u64,
            Question::TopAnswer(y) => {
                let top = self.top.ok_or(CodecError::Invalid("no top tree"))?;
                *top.get(&y).ok_or(CodecError::Invalid("answer not on branch"))? as u64
            }
        };
        self.out.write(v, bits);
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub rho_star: PartialRestriction,
    pub bits: BitVec,
    pub stats: StageStats,
    /// The closing information of all stages up to the cutoff.
    pub k_star: InfoSet,
    pub stages: Vec<StageRecord>,
}

impl Encoding {
    /// `a ceil(log t) + b ceil(log Delta)`; the rest of the stream is charged to `A s`.
    pub fn fixed_cost(&self, t: usize, delta: usize) -> usize {
        self.stats.a * width(t) as usize + self.stats.b * width(delta) as usize
    }

    /// Smallest `A` with `|X| <= a ceil(log t) + b ceil(log Delta) + A s`.
    pub fn measured_a(&self, t: usize, delta: usize, s: usize) -> f64 {
        self.bits.len().saturating_sub(self.fixed_cost(t, delta)) as f64 / s as f64
    }
}

/// Encodes `ctx.rho` given trees whose extended canonical decision tree
/// under `ctx.sigma` reaches depth `s`.
pub fn encode(ctx: &Context, trees: &[Tree], s: usize, t: usize) -> Result<Encoding, CodecError> {
    let res = build_ecdt(ctx, trees, s, t)?;
    let cap = res.cap.ok_or(CodecError::NotCapHit)?;
    let g = cutoff(&cap.stages, s).ok_or(CodecError::NoCutoff)?;
    let stages = &cap.stages[..g];
    let tau = &stages[g - 1].tau_after;
    let (mut oracle, k_star) = Oracle::new(ctx, stages.iter().collect(), alloc::vec![tau; g])?;
    let rho_star = apply_info(ctx.setup, &ctx.rho, &k_star)?;
    let mut dec = Decoder::new(ctx.setup, &rho_star, core::slice::from_ref(&trees.to_vec()), t);
    let back = dec.run(&mut oracle, s)?;
    if back != ctx.rho || dec.stage != g {
        return Err(CodecError::Mismatch);
    }
    Ok(Encoding { rho_star, bits: oracle.out, stats: stage_stats(ctx.setup, &cap.stages, g), k_star, stages: stages.to_vec() })
}

/// Decodes without re-checking; the result is `rho` whenever the input came from `encode`.
pub fn decode_unchecked(setup: &Setup, rho_star: &PartialRestriction, trees: &[Tree], bits: &BitVec, s: usize, t: usize) -> Result<PartialRestriction, CodecError> {
    let mut dec = Decoder::new(setup, rho_star, core::slice::from_ref(&trees.to_vec()), t);
    let mut reader = Reader(BitReader::new(bits));
    let rho = dec.run(&mut reader, s)?;
    match reader.0.remaining() {
        0 => Ok(rho),
        n => Err(CodecError::Trailing(n)),
    }
}

/// Decodes and confirms the result encodes back to the same pair, so a
/// corrupted stream yields an error rather than a wrong restriction.
pub fn decode(setup: &Setup, rho_star: &PartialRestriction, trees: &[Tree], bits: &BitVec, s: usize, t: usize) -> Result<PartialRestriction, CodecError> {
    let rho = decode_unchecked(setup, rho_star, trees, bits, s, t)?;
    let ctx = Context::new(setup, rho.clone()).map_err(|_| CodecError::Mismatch)?;
    match encode(&ctx, trees, s, t) {
        Ok(enc) if &enc.rho_star == rho_star && &enc.bits == bits => Ok(rho),
        _ => Err(CodecError::Mismatch),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiEncoding {
    pub rho_star: PartialRestriction,
    pub bits: BitVec,
    pub rounds: usize,
    pub stats: StageStats,
    pub k_star: InfoSet,
}

impl MultiEncoding {
    /// Bits spent on round indices.
    pub fn index_bits(&self, m: usize) -> usize {
        self.rounds * width(m) as usize
    }
}

/// Encodes `ctx.rho` given tree lists whose common partial decision tree
/// has a top branch of `s_cap` queries.
pub fn encode_multi(ctx: &Context, lists: &[Vec<Tree>], ell: usize, s_cap: usize, t: usize) -> Result<MultiEncoding, CodecError> {
    let res = build_common_pdt(ctx, lists, ell, s_cap, t)?;
    let cap = res.cap.ok_or(CodecError::NotCapHit)?;
    let mut stages = Vec::new();
    let mut answers = Vec::new();
    let mut all = Vec::new();
    for r in &cap.rounds {
        let last = &r.stages.last().ok_or(CodecError::Invalid("empty round"))?.tau_after;
        for st in &r.stages {
            stages.push(st);
            answers.push(last);
            all.push(st.clone());
        }
    }
    let (mut oracle, k_star) = Oracle::new(ctx, stages, answers)?;
    oracle.top = Some(&cap.tau);
    oracle.formulas = cap.rounds.iter().map(|r| r.formula).collect();
    let rho_star = apply_info(ctx.setup, &ctx.rho, &k_star)?;
    let mut dec = Decoder::new(ctx.setup, &rho_star, lists, t);
    let back = dec.run_multi(&mut oracle, ell, s_cap)?;
    if back != ctx.rho || dec.round != cap.rounds.len() {
        return Err(CodecError::Mismatch);
    }
    let g = all.len();
    Ok(MultiEncoding { rho_star, bits: oracle.out, rounds: cap.rounds.len(), stats: stage_stats(ctx.setup, &all, g), k_star })
}

/// Decodes a multi-switch encoding and confirms it encodes back.
pub fn decode_multi(
    setup: &Setup,
    rho_star: &PartialRestriction,
    lists: &[Vec<Tree>],
    bits: &BitVec,
    ell: usize,
    s_cap: usize,
    t: usize,
) -> Result<PartialRestriction, CodecError> {
    let mut dec = Decoder::new(setup, rho_star, lists, t);
    let mut reader = Reader(BitReader::new(bits));
    let rho = dec.run_multi(&mut reader, ell, s_cap)?;
    if reader.0.remaining() != 0 {
        return Err(CodecError::Trailing(reader.0.remaining()));
    }
    let ctx = Context::new(setup, rho.clone()).map_err(|_| CodecError::Mismatch)?;
    match encode_multi(&ctx, lists, ell, s_cap, t) {
        Ok(enc) if &enc.rho_star == rho_star && &enc.bits == bits => Ok(rho),
        _ => Err(CodecError::Mismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::adversarial_trees;
    use crate::restriction::sample_partial;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    #[test]
    fn round_trip_on_adversarial_trees() {
        let s = Setup::relaxed(45, 3).unwrap();
        let mut ok = 0;
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ctx = Context::new(&s, sample_partial(&s, 11, &mut rng).unwrap()).unwrap();
            let trees = adversarial_trees(&mut rng, &ctx, 4, 2);
            let enc = match encode(&ctx, &trees, 8, 2) {
                Ok(e) => e,
                Err(CodecError::NotCapHit) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            let back = decode(&s, &enc.rho_star, &trees, &enc.bits, 8, 2).unwrap();
            assert_eq!(back, ctx.rho);
            let mut short = enc.bits.clone();
            short.truncate(enc.bits.len() - 1);
            assert!(decode(&s, &enc.rho_star, &trees, &short, 8, 2).is_err());
            ok += 1;
        }
        assert!(ok > 20, "{ok}");
    }

    #[test]
    fn multi_round_trip() {
        let s = Setup::relaxed(45, 3).unwrap();
        let mut ok = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ctx = Context::new(&s, sample_partial(&s, 11, &mut rng).unwrap()).unwrap();
            let lists: Vec<Vec<Tree>> = (0..3).map(|_| adversarial_trees(&mut rng, &ctx, 4, 2)).collect();
            let enc = match encode_multi(&ctx, &lists, 2, 3, 4) {
                Ok(e) => e,
                Err(CodecError::NotCapHit) => continue,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            assert!(enc.rounds >= 1);
            let back = decode_multi(&s, &enc.rho_star, &lists, &enc.bits, 2, 3, 4).unwrap();
            assert_eq!(back, ctx.rho);
            assert!(decode_multi(&s, &enc.rho_star, &lists, &BitVec::new(), 2, 3, 4).is_err());
            ok += 1;
        }
        assert!(ok > 15, "{ok}");
    }
}
