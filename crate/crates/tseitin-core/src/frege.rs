//! Frege formulas over edge variables, the five inference rules, proof
//! checking and t-evaluations.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::consistency::{Assignment, Consistency, LcError};
use crate::grid::Graph;
use crate::tree::{complete_tree, functionally_equivalent, represents, restrict_by_full, Image, Tree};
use crate::tseitin::node_clauses;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// `a & b`, written as `~(~a | ~b)`.
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    /// Left-nested OR of `fs`; `Const(false)` when empty.
    pub fn or_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
        fs.into_iter().reduce(Formula::or).unwrap_or(Formula::Const(false))
    }

    /// Number of connectives.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 0,
            Formula::Not(a) => 1 + a.size(),
            Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Maximum number of alternations of `|` and `~` on a root-to-leaf path;
    /// a run of equal connectives counts once.
    pub fn depth(&self) -> usize {
        fn go(f: &Formula, above: Option<bool>) -> usize {
            let (is_or, kids): (bool, Vec<&Formula>) = match f {
                Formula::Const(_) | Formula::Var(_) => return 0,
                Formula::Not(a) => (false, alloc::vec![&**a]),
                Formula::Or(a, b) => (true, alloc::vec![&**a, &**b]),
            };
            let step = (above != Some(is_or)) as usize;
            step + kids.into_iter().map(|k| go(k, Some(is_or))).max().unwrap_or(0)
        }
        go(self, None)
    }

    /// The maximal non-OR subformulas of the top OR-spine, left to right.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        fn go<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
            match f {
                Formula::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => out.push(f),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// A representative of the isomorphism class: OR-spines rebuilt from
    /// sorted canonical disjuncts.
    pub fn canonical(&self) -> Formula {
        match self {
            Formula::Const(_) | Formula::Var(_) => self.clone(),
            Formula::Not(a) => Formula::not(a.canonical()),
            Formula::Or(..) => {
                let mut ds: Vec<Formula> = self.disjuncts().into_iter().map(Formula::canonical).collect();
                ds.sort();
                Formula::or_all(ds)
            }
        }
    }

    /// Equal up to the order of binary ORs.
    pub fn is_isomorphic(&self, other: &Formula) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn vars(&self) -> Vec<usize> {
        fn go(f: &Formula, out: &mut Vec<usize>) {
            match f {
                Formula::Const(_) => {}
                Formula::Var(x) => out.push(*x),
                Formula::Not(a) => go(a, out),
                Formula::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Truth value under a total assignment of its variables.
    pub fn eval(&self, x: &dyn Fn(usize) -> bool) -> bool {
        match self {
            Formula::Const(c) => *c,
            Formula::Var(v) => x(*v),
            Formula::Not(a) => !a.eval(x),
            Formula::Or(a, b) => a.eval(x) || b.eval(x),
        }
    }

    /// Every subformula including `self`, children before parents.
    pub fn subformulas(&self) -> Vec<&Formula> {
        fn go<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
            match f {
                Formula::Const(_) | Formula::Var(_) => {}
                Formula::Not(a) => go(a, out),
                Formula::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
            out.push(f);
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Substitutes each variable by its image under a full restriction.
    pub fn restrict(&self, image: &dyn Fn(usize) -> Image) -> Formula {
        match self {
            Formula::Const(_) => self.clone(),
            Formula::Var(x) => match image(*x) {
                Image::Const(c) => Formula::Const(c),
                Image::Lit { path, negated: false } => Formula::Var(path),
                Image::Lit { path, negated: true } => Formula::not(Formula::Var(path)),
            },
            Formula::Not(a) => Formula::not(a.restrict(image)),
            Formula::Or(a, b) => Formula::or(a.restrict(image), b.restrict(image)),
        }
    }

    fn substitute(&self, w: &Witness) -> Option<Formula> {
        Some(match self {
            Formula::Const(_) => self.clone(),
            Formula::Var(p) => w.get(*p)?.clone()?,
            Formula::Not(a) => Formula::not(a.substitute(w)?),
            Formula::Or(a, b) => Formula::or(a.substitute(w)?, b.substitute(w)?),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(g: &Formula, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
            match g {
                Formula::Const(c) => f.write_str(if *c { "1" } else { "0" }),
                Formula::Var(x) => write!(f, "x{x}"),
                Formula::Not(a) => {
                    f.write_str("~")?;
                    go(a, f, true)
                }
                Formula::Or(a, b) => {
                    if nested {
                        f.write_str("(")?;
                    }
                    go(a, f, true)?;
                    f.write_str(" | ")?;
                    go(b, f, true)?;
                    if nested {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: &'static str,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

struct Parser<'s> {
    s: &'s [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip(&mut self) {
        while self.s.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: &'static str) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos, msg })
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.eat(b'|') {
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.eat(b'&') {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(b'~') {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(b'(') {
            let f = self.or()?;
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(f);
        }
        if self.eat(b'0') {
            return Ok(Formula::Const(false));
        }
        if self.eat(b'1') {
            return Ok(Formula::Const(true));
        }
        if self.eat(b'x') {
            let start = self.pos;
            while self.s.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
            let digits = core::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
            return match digits.parse() {
                Ok(x) => Ok(Formula::Var(x)),
                Err(_) => self.err("expected variable index"),
            };
        }
        self.err("expected formula")
    }
}

impl core::str::FromStr for Formula {
    type Err = ParseError;

    /// Grammar: `~` binds tightest, then `&`, then `|`; binary operators
    /// associate to the left.
    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let f = p.or()?;
        p.skip();
        if p.pos != s.len() {
            return p.err("trailing input");
        }
        Ok(f)
    }
}

/// The clauses of the Tseitin formula of `graph`, as OR formulas.
pub fn tseitin_axioms(graph: &Graph, charges: &[bool]) -> Vec<Formula> {
    let mut out = Vec::new();
    for v in 0..graph.node_count() {
        for clause in node_clauses(graph, v, charges[v]) {
            out.push(Formula::or_all(clause.into_iter().map(|l| {
                let x = Formula::Var(l.unsigned_abs() as usize - 1);
                if l > 0 {
                    x
                } else {
                    Formula::not(x)
                }
            })));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    ExcludedMiddle,
    Expansion,
    Contraction,
    Association,
    Cut,
}

impl Rule {
    pub const ALL: [Rule; 5] = [Rule::ExcludedMiddle, Rule::Expansion, Rule::Contraction, Rule::Association, Rule::Cut];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ExcludedMiddle => "em",
            Rule::Expansion => "exp",
            Rule::Contraction => "con",
            Rule::Association => "assoc",
            Rule::Cut => "cut",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }

    /// Premise schemas and conclusion schema over `p = x0`, `q = x1`, `r = x2`.
    pub fn schema(self) -> (Vec<Formula>, Formula) {
        use Formula::Var;
        let (p, q, r) = (Var(0), Var(1), Var(2));
        match self {
            Rule::ExcludedMiddle => (Vec::new(), Formula::or(p.clone(), Formula::not(p))),
            Rule::Expansion => (alloc::vec![p.clone()], Formula::or(q, p)),
            Rule::Contraction => (alloc::vec![Formula::or(p.clone(), p.clone())], p),
            Rule::Association => (
                alloc::vec![Formula::or(p.clone(), Formula::or(q.clone(), r.clone()))],
                Formula::or(Formula::or(p, q), r),
            ),
            Rule::Cut => (
                alloc::vec![Formula::or(p.clone(), q.clone()), Formula::or(Formula::not(p), r.clone())],
                Formula::or(q, r),
            ),
        }
    }
}

/// Images of the schema variables `p, q, r`.
pub type Witness = [Option<Formula>; 3];

fn unify(schema: &Formula, f: &Formula, w: &mut Witness) -> bool {
    match (schema, f) {
        (Formula::Var(p), _) => match &w[*p] {
            Some(g) => g == f,
            None => {
                w[*p] = Some(f.clone());
                true
            }
        },
        (Formula::Const(a), Formula::Const(b)) => a == b,
        (Formula::Not(a), Formula::Not(b)) => unify(a, b, w),
        (Formula::Or(a1, b1), Formula::Or(a2, b2)) => unify(a1, a2, w) && unify(b1, b2, w),
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InferenceError {
    PremiseCount { expected: usize, got: usize },
    NoWitness,
}

impl fmt::Display for InferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InferenceError::PremiseCount { expected, got } => write!(f, "rule takes {expected} premises, got {got}"),
            InferenceError::NoWitness => f.write_str("no substitution matches the rule"),
        }
    }
}

/// Finds the substitution under which `premises ⊢ conclusion` is an
/// instance of `rule`.
pub fn check_inference(rule: Rule, premises: &[&Formula], conclusion: &Formula) -> Result<Witness, InferenceError> {
    let (schemas, target) = rule.schema();
    if schemas.len() != premises.len() {
        return Err(InferenceError::PremiseCount { expected: schemas.len(), got: premises.len() });
    }
    let mut w: Witness = Default::default();
    for (s, f) in schemas.iter().zip(premises) {
        if !unify(s, f, &mut w) {
            return Err(InferenceError::NoWitness);
        }
    }
    if !unify(&target, conclusion, &mut w) {
        return Err(InferenceError::NoWitness);
    }
    debug_assert!(schemas.iter().zip(premises).all(|(s, f)| s.substitute(&w).as_ref() == Some(*f)));
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Axiom,
    Rule(Rule, Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub formula: Formula,
    pub by: Justification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Proof {
    pub lines: Vec<Line>,
}

impl Proof {
    pub fn size(&self) -> usize {
        self.lines.iter().map(|l| l.formula.size()).sum()
    }

    pub fn depth(&self) -> usize {
        self.lines.iter().map(|l| l.formula.depth()).max().unwrap_or(0)
    }

    /// Parses lines `<id>: <formula> ; <rule> <premise ids>` where the rule
    /// is `axiom` or a rule name. Ids are arbitrary tokens; blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Proof, ProofParseError> {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut lines = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |msg: String| ProofParseError { line: no + 1, msg };
            let (id, rest) = raw.split_once(':').ok_or_else(|| err("missing ':'".into()))?;
            let (formula, just) = rest.rsplit_once(';').ok_or_else(|| err("missing ';'".into()))?;
            let formula: Formula = formula.trim().parse().map_err(|e: ParseError| err(alloc::format!("{e}")))?;
            let mut words = just.split_whitespace();
            let by = match words.next() {
                Some("axiom") => Justification::Axiom,
                Some(name) => {
                    let rule = Rule::from_name(name).ok_or_else(|| err(alloc::format!("unknown rule {name}")))?;
                    let prem = words
                        .by_ref()
                        .map(|w| ids.get(w).copied().ok_or_else(|| err(alloc::format!("unknown line id {w}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    Justification::Rule(rule, prem)
                }
                None => return Err(err("missing justification".into())),
            };
            if words.next().is_some() {
                return Err(err("axiom takes no premises".into()));
            }
            if ids.insert(id.trim(), lines.len()).is_some() {
                return Err(err(alloc::format!("duplicate line id {}", id.trim())));
            }
            lines.push(Line { formula, by });
        }
        Ok(Proof { lines })
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.lines.iter().enumerate() {
            write!(f, "{i}: {} ; ", l.formula)?;
            match &l.by {
                Justification::Axiom => f.write_str("axiom")?,
                Justification::Rule(r, prem) => {
                    f.write_str(r.name())?;
                    for p in prem {
                        write!(f, " {p}")?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ProofParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "proof line {}: {}", self.line, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofError {
    NotAnAxiom { line: usize },
    ForwardReference { line: usize, premise: usize },
    Inference { line: usize, err: InferenceError },
}

impl ProofError {
    pub fn line(&self) -> usize {
        match self {
            ProofError::NotAnAxiom { line } | ProofError::ForwardReference { line, .. } | ProofError::Inference { line, .. } => *line,
        }
    }
}

impl fmt::Display for ProofError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProofError::NotAnAxiom { line } => write!(f, "line {line}: formula is not an axiom"),
            ProofError::ForwardReference { line, premise } => write!(f, "line {line}: premise {premise} does not precede it"),
            ProofError::Inference { line, err } => write!(f, "line {line}: {err}"),
        }
    }
}

/// Checks every line; the first failing line is reported.
pub fn check_proof(proof: &Proof, axioms: &[Formula]) -> Result<(), ProofError> {
    for (i, l) in proof.lines.iter().enumerate() {
        match &l.by {
            Justification::Axiom => {
                if !axioms.contains(&l.formula) {
                    return Err(ProofError::NotAnAxiom { line: i });
                }
            }
            Justification::Rule(rule, prem) => {
                if let Some(&p) = prem.iter().find(|&&p| p >= i) {
                    return Err(ProofError::ForwardReference { line: i, premise: p });
                }
                let premises: Vec<&Formula> = prem.iter().map(|&p| &proof.lines[p].formula).collect();
                check_inference(*rule, &premises, &l.formula).map_err(|err| ProofError::Inference { line: i, err })?;
            }
        }
    }
    Ok(())
}

/// A map from formulas to decision trees.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evaluation {
    pub t: usize,
    pub map: BTreeMap<Formula, Tree>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Missing(Formula),
    TooDeep { formula: Formula, depth: usize },
    Inconsistent(Formula),
    /// Constants and variables map to their own trees.
    Atom(Formula),
    /// An axiom is not mapped to a 1-tree.
    Axiom(Formula),
    /// A negation is not the leaf-negated tree of its argument.
    Negation(Formula),
    /// An OR's tree does not represent the OR of its disjuncts' trees.
    Or(Formula),
    /// Restriction left no branch of this formula's tree.
    Empty(Formula),
    Lc(LcError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Missing(g) => write!(f, "subformula {g} has no tree"),
            EvalError::TooDeep { formula, depth } => write!(f, "tree of {formula} has depth {depth}"),
            EvalError::Inconsistent(g) => write!(f, "tree of {g} is not locally consistent"),
            EvalError::Atom(g) => write!(f, "{g} is not mapped to its own tree"),
            EvalError::Axiom(g) => write!(f, "axiom {g} is not mapped to a 1-tree"),
            EvalError::Negation(g) => write!(f, "tree of {g} is not the negated tree of its argument"),
            EvalError::Or(g) => write!(f, "tree of {g} does not represent the OR of its disjuncts"),
            EvalError::Empty(g) => write!(f, "restriction removes every branch of the tree of {g}"),
            EvalError::Lc(e) => write!(f, "{e}"),
        }
    }
}

impl From<LcError> for EvalError {
    fn from(e: LcError) -> Self {
        EvalError::Lc(e)
    }
}

impl Evaluation {
    /// Maps every subformula of `formulas` to the complete tree over its
    /// variables, pruned to consistent branches under `lc`.
    pub fn truth_table<'f, C: Consistency + ?Sized>(
        lc: &C,
        formulas: impl IntoIterator<Item = &'f Formula>,
        t: usize,
    ) -> Result<Evaluation, EvalError> {
        let mut map = BTreeMap::new();
        for f in formulas {
            for g in f.subformulas() {
                if map.contains_key(g) {
                    continue;
                }
                let vars = g.vars();
                if vars.len() > t {
                    return Err(EvalError::TooDeep { formula: g.clone(), depth: vars.len() });
                }
                let full = complete_tree(&vars, &mut |a: &Assignment| g.eval(&|x| a[&x]));
                let tree = crate::tree::restrict_by_assignment(lc, &full, &Assignment::new())?
                    .ok_or_else(|| EvalError::Inconsistent(g.clone()))?;
                map.insert(g.clone(), tree);
            }
        }
        Ok(Evaluation { t, map })
    }

    pub fn get(&self, f: &Formula) -> Result<&Tree, EvalError> {
        self.map.get(f).ok_or_else(|| EvalError::Missing(f.clone()))
    }
}

/// Checks the four evaluation properties, plus depth and local consistency,
/// on every formula in the domain.
pub fn check_evaluation<C: Consistency + ?Sized>(lc: &C, eval: &Evaluation, axioms: &[Formula]) -> Result<(), EvalError> {
    for (f, tree) in &eval.map {
        if tree.depth() > eval.t {
            return Err(EvalError::TooDeep { formula: f.clone(), depth: tree.depth() });
        }
        if !tree.is_locally_consistent(lc)? {
            return Err(EvalError::Inconsistent(f.clone()));
        }
        let ok = match f {
            Formula::Const(c) => *tree == Tree::leaf(*c),
            Formula::Var(x) => *tree == Tree::var(*x),
            _ => true,
        };
        if !ok {
            return Err(EvalError::Atom(f.clone()));
        }
        if axioms.contains(f) && !tree.is_b_tree(true) {
            return Err(EvalError::Axiom(f.clone()));
        }
        match f {
            Formula::Not(a) => {
                if *tree != eval.get(a)?.negate() {
                    return Err(EvalError::Negation(f.clone()));
                }
            }
            Formula::Or(..) => {
                let kids = f.disjuncts().into_iter().map(|d| eval.get(d).cloned()).collect::<Result<Vec<_>, _>>()?;
                if !represents(lc, tree, &kids)? {
                    return Err(EvalError::Or(f.clone()));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// The evaluation `F|σ ↦ φ(F)|σ` over the reduced variables.
pub fn restrict_evaluation<C: Consistency + ?Sized>(lc: &C, eval: &Evaluation, image: &dyn Fn(usize) -> Image) -> Result<Evaluation, EvalError> {
    let mut map = BTreeMap::new();
    for (f, tree) in &eval.map {
        let r = restrict_by_full(lc, tree, image)?.ok_or_else(|| EvalError::Empty(f.clone()))?;
        if r.depth() > eval.t {
            return Err(EvalError::TooDeep { formula: f.clone(), depth: r.depth() });
        }
        let g = f.restrict(image);
        if let Formula::Not(a) = &g {
            if let Formula::Var(y) = **a {
                map.entry(Formula::Var(y)).or_insert_with(|| Tree::var(y));
            }
        }
        map.entry(g).or_insert(r);
    }
    Ok(Evaluation { t: eval.t, map })
}

/// A pair of isomorphic formulas whose trees are not functionally equivalent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub left: Formula,
    pub right: Formula,
}

/// Whether the trees of all isomorphic formula pairs are functionally equivalent.
pub fn check_equivalent<C: Consistency + ?Sized>(lc: &C, a: &Evaluation, b: &Evaluation) -> Result<Option<Disagreement>, LcError> {
    let mut classes: BTreeMap<Formula, Vec<&Formula>> = BTreeMap::new();
    for f in b.map.keys() {
        classes.entry(f.canonical()).or_default().push(f);
    }
    for (f, ta) in &a.map {
        for g in classes.get(&f.canonical()).into_iter().flatten() {
            if !functionally_equivalent(lc, ta, &b.map[*g])? {
                return Ok(Some(Disagreement { left: f.clone(), right: (*g).clone() }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoproofError {
    /// Tree depth above a sixteenth of the grid side.
    DepthBudget { t: usize, n: usize },
    LineCount { lines: usize, evaluations: usize },
    Proof(ProofError),
    Evaluation { line: usize, err: EvalError },
    NotEquivalent { lines: (usize, usize), pair: Disagreement },
    /// A line whose tree has a 0-branch although every hypothesis holds.
    ZeroBranch { line: usize, branch: Assignment },
    Lc(LcError),
}

impl fmt::Display for NoproofError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoproofError::DepthBudget { t, n } => write!(f, "depth {t} exceeds {n}/16"),
            NoproofError::LineCount { lines, evaluations } => write!(f, "{lines} lines but {evaluations} evaluations"),
            NoproofError::Proof(e) => write!(f, "{e}"),
            NoproofError::Evaluation { line, err } => write!(f, "line {line}: {err}"),
            NoproofError::NotEquivalent { lines, pair } => {
                write!(f, "lines {} and {}: trees of {} and {} differ", lines.0, lines.1, pair.left, pair.right)
            }
            NoproofError::ZeroBranch { line, .. } => write!(f, "line {line} has a 0-branch"),
            NoproofError::Lc(e) => write!(f, "{e}"),
        }
    }
}

impl From<LcError> for NoproofError {
    fn from(e: LcError) -> Self {
        NoproofError::Lc(e)
    }
}

/// Checks the hypotheses that force every line of `proof` to a 1-tree, then
/// that each line is one. `evals[i]` is the evaluation of line `i` and must
/// contain its subformulas.
pub fn check_noproof<C: Consistency + ?Sized>(
    lc: &C,
    proof: &Proof,
    evals: &[Evaluation],
    axioms: &[Formula],
    n: usize,
) -> Result<(), NoproofError> {
    if proof.lines.len() != evals.len() {
        return Err(NoproofError::LineCount { lines: proof.lines.len(), evaluations: evals.len() });
    }
    check_proof(proof, axioms).map_err(NoproofError::Proof)?;
    for (i, (line, ev)) in proof.lines.iter().zip(evals).enumerate() {
        if 16 * ev.t > n {
            return Err(NoproofError::DepthBudget { t: ev.t, n });
        }
        let err = |err| NoproofError::Evaluation { line: i, err };
        check_evaluation(lc, ev, axioms).map_err(err)?;
        for g in line.formula.subformulas() {
            ev.get(g).map_err(err)?;
        }
    }
    for i in 0..evals.len() {
        for j in i + 1..evals.len() {
            if let Some(pair) = check_equivalent(lc, &evals[i], &evals[j])? {
                return Err(NoproofError::NotEquivalent { lines: (i, j), pair });
            }
        }
    }
    for (i, (line, ev)) in proof.lines.iter().zip(evals).enumerate() {
        let tree = &ev.map[&line.formula];
        if let Some(br) = tree.branches().into_iter().find(|b| !b.label) {
            return Err(NoproofError::ZeroBranch { line: i, branch: br.assignment });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::Strict;
    use crate::grid::Torus;

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    #[test]
    fn size_and_depth() {
        assert_eq!((f("x3").size(), f("x3").depth()), (0, 0));
        assert_eq!(f("~(~x0 | ~x1)").depth(), 3);
        assert_eq!(f("x0 & x1"), f("~(~x0 | ~x1)"));
        assert_eq!(f("x0 | x1 | x2").depth(), 1);
        assert_eq!(f("~~x0").depth(), 1);
        assert_eq!(f("~(x0 | x1)").size(), 2);
    }

    #[test]
    fn display_round_trips() {
        for s in ["x0 | (x1 | x2)", "(x0 | x1) | x2", "~(~x0 | 1)", "0"] {
            let g = f(s);
            assert_eq!(f(&alloc::format!("{g}")), g);
        }
        assert!("x0 |".parse::<Formula>().is_err());
        assert!("(x0".parse::<Formula>().is_err());
    }

    #[test]
    fn inference_rules() {
        let w = check_inference(Rule::ExcludedMiddle, &[], &f("x0 | ~x0")).unwrap();
        assert_eq!(w[0], Some(f("x0")));
        let w = check_inference(Rule::Cut, &[&f("x0 | x1"), &f("~x0 | x2")], &f("x1 | x2")).unwrap();
        assert_eq!(w, [Some(f("x0")), Some(f("x1")), Some(f("x2"))]);
        assert_eq!(check_inference(Rule::Contraction, &[&f("x0 | x1")], &f("x1 | x0")), Err(InferenceError::NoWitness));
        assert!(check_inference(Rule::Association, &[&f("x0 | (x1 | x2)")], &f("(x0 | x1) | x2")).is_ok());
        assert!(check_inference(Rule::Association, &[&f("(x0 | x1) | x2")], &f("x0 | (x1 | x2)")).is_err());
        assert!(check_inference(Rule::Expansion, &[&f("x0")], &f("~x5 | x0")).is_ok());
    }

    #[test]
    fn proof_parsing_and_checking() {
        let p = Proof::parse("a: x0 | ~x0 ; em\nb: x1 | (x0 | ~x0) ; exp a\n").unwrap();
        assert_eq!(check_proof(&p, &[]), Ok(()));
        assert_eq!(Proof::parse(&alloc::format!("{p}")).unwrap(), p);
        let bad = Proof::parse("a: x0 ; axiom\nb: x0 | x0 ; con a\n").unwrap();
        assert_eq!(check_proof(&bad, &[f("x0")]).unwrap_err().line(), 1);
        assert!(matches!(check_proof(&bad, &[]), Err(ProofError::NotAnAxiom { line: 0 })));
    }

    #[test]
    fn isomorphism_ignores_or_order() {
        assert!(f("(x0 | x1) | x2").is_isomorphic(&f("x2 | (x1 | x0)")));
        assert!(!f("~(x0 | x1)").is_isomorphic(&f("~x0 | x1")));
    }

    #[test]
    fn truth_table_evaluation_of_grid_axioms() {
        let torus = Torus::new(9).unwrap();
        let charges = alloc::vec![true; 81];
        let lc = Strict::new(&torus, &charges);
        let axioms = tseitin_axioms(torus.graph(), &charges);
        assert_eq!(axioms.len(), 81 * 8);
        let ev = Evaluation::truth_table(&lc, &axioms[..16], 4).unwrap();
        check_evaluation(&lc, &ev, &axioms).unwrap();
        for a in &axioms[..16] {
            assert!(ev.map[a].is_b_tree(true));
        }
        let x = f("x0");
        let mut bad = ev.clone();
        let nx = Formula::not(x.clone());
        bad.map.insert(nx.clone(), Tree::query(0, Tree::leaf(true), Tree::leaf(true)));
        assert_eq!(check_evaluation(&lc, &bad, &axioms), Err(EvalError::Negation(nx)));
    }
}
