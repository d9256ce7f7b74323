//! Text and binary formats: DIMACS, decision-tree lists, restrictions,
//! switching transcripts and stage dumps.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tseitin_core::bits::BitVec;
use tseitin_core::ecdt::StageRecord;
use tseitin_core::resolution::{Justification, ResolutionProof, Step};
use tseitin_core::restriction::{FullRestriction, PartialRestriction, Setup};
use tseitin_core::tree::Tree;
use tseitin_core::tseitin::Cnf;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

pub fn write_dimacs(cnf: &Cnf, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("c {c}\n"));
    }
    out.push_str(&format!("p cnf {} {}\n", cnf.vars, cnf.clauses.len()));
    for cl in &cnf.clauses {
        for l in cl {
            out.push_str(&format!("{l} "));
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<Cnf, FormatError> {
    let mut header = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let nums: Vec<usize> = rest.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| syntax(i + 1, "bad header"))?;
            if nums.len() != 2 || header.is_some() {
                return Err(syntax(i + 1, "bad header"));
            }
            header = Some((nums[0], nums[1]));
            continue;
        }
        let (vars, _) = header.ok_or_else(|| syntax(i + 1, "clause before header"))?;
        for w in line.split_whitespace() {
            let l: i32 = w.parse().map_err(|_| syntax(i + 1, format!("bad literal {w}")))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else if l.unsigned_abs() as usize > vars {
                return Err(syntax(i + 1, format!("literal {l} exceeds {vars} variables")));
            } else {
                cur.push(l);
            }
        }
    }
    let (vars, count) = header.ok_or_else(|| FormatError::Invalid("missing header".into()))?;
    if !cur.is_empty() || clauses.len() != count {
        return Err(FormatError::Invalid(format!("header announces {count} clauses, found {}", clauses.len())));
    }
    Ok(Cnf { vars, clauses })
}

/// Parses the tree syntax `#0`, `#1` or `(x<var> (0 <tree>) (1 <tree>))`.
pub fn parse_tree(text: &str) -> Result<Tree, FormatError> {
    let toks: Vec<String> = text.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(String::from).collect();
    let mut pos = 0;
    let tree = tree_at(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(FormatError::Invalid("trailing input after tree".into()));
    }
    tree.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(tree)
}

fn tree_at(toks: &[String], pos: &mut usize) -> Result<Tree, FormatError> {
    let bad = |at: usize, msg: &str| FormatError::Invalid(format!("tree token {at}: {msg}"));
    let next = |pos: &mut usize| -> Result<&str, FormatError> {
        let t = toks.get(*pos).ok_or_else(|| FormatError::Invalid("unexpected end of tree".into()))?;
        *pos += 1;
        Ok(t)
    };
    match next(pos)? {
        "#0" => Ok(Tree::leaf(false)),
        "#1" => Ok(Tree::leaf(true)),
        "(" => {
            let var = next(pos)?.strip_prefix('x').and_then(|v| v.parse().ok()).ok_or_else(|| bad(*pos, "expected x<var>"))?;
            let mut kids = [None, None];
            for want in ["0", "1"] {
                if next(pos)? != "(" || next(pos)? != want {
                    return Err(bad(*pos, "expected a labelled child"));
                }
                kids[(want == "1") as usize] = Some(tree_at(toks, pos)?);
                if next(pos)? != ")" {
                    return Err(bad(*pos, "expected ')'"));
                }
            }
            if next(pos)? != ")" {
                return Err(bad(*pos, "expected ')'"));
            }
            let [z, o] = kids;
            Ok(Tree::query(var, z.expect("parsed"), o.expect("parsed")))
        }
        _ => Err(bad(*pos, "expected a tree")),
    }
}

/// One tree per line; blank lines and lines starting with `;` are skipped.
/// A line `--` separates the lists of a multi-switch input.
pub fn parse_tree_lists(text: &str) -> Result<Vec<Vec<Tree>>, FormatError> {
    let mut lists = vec![Vec::new()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if line == "--" {
            lists.push(Vec::new());
            continue;
        }
        let t = parse_tree(line).map_err(|e| syntax(i + 1, e.to_string()))?;
        lists.last_mut().expect("nonempty").push(t);
    }
    Ok(lists)
}

pub fn write_tree_lists(lists: &[Vec<Tree>]) -> String {
    let mut out = String::new();
    for (j, l) in lists.iter().enumerate() {
        if j > 0 {
            out.push_str("--\n");
        }
        for t in l {
            out.push_str(&format!("{t}\n"));
        }
    }
    out
}

/// SHA-256 of the canonical text of `lists`, first 16 hex digits.
pub fn tree_hash(lists: &[Vec<Tree>]) -> String {
    let digest = Sha256::digest(write_tree_lists(lists).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bit_string(s: &str, len: usize) -> Result<Vec<bool>, FormatError> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(FormatError::Invalid(format!("bad bit {c:?}"))),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != len {
        return Err(FormatError::Invalid(format!("expected {len} bits, found {}", bits.len())));
    }
    Ok(bits)
}

/// Parses lines `<i>: <literals> 0 ; input` or `<i>: <literals> 0 ; res <left> <right> <pivot>`
/// with consecutive step numbers from 0.
pub fn parse_resolution(text: &str) -> Result<ResolutionProof, FormatError> {
    let mut proof = ResolutionProof::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let err = |m: &str| syntax(i + 1, m);
        let (id, rest) = line.split_once(':').ok_or_else(|| err("expected `<id>:`"))?;
        if id.trim().parse::<usize>().ok() != Some(proof.steps.len()) {
            return Err(err("step ids must count up from 0"));
        }
        let (lits, by) = rest.split_once(';').ok_or_else(|| err("expected `;`"))?;
        let mut clause: Vec<i32> = lits.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| err("bad literal"))?;
        if clause.pop() != Some(0) || clause.contains(&0) {
            return Err(err("clause must end with a single 0"));
        }
        let words: Vec<&str> = by.split_whitespace().collect();
        let by = match words.as_slice() {
            ["input"] => Justification::Input,
            ["res", l, r, p] => {
                let num = |w: &str| w.parse::<usize>().map_err(|_| err("bad step reference"));
                let pivot = p.parse().map_err(|_| err("bad pivot"))?;
                Justification::Resolve { left: num(l)?, right: num(r)?, pivot }
            }
            _ => return Err(err("expected `input` or `res <left> <right> <pivot>`")),
        };
        proof.steps.push(Step { clause, by });
    }
    Ok(proof)
}

/// A saved restriction: alive centers and the values of every grid edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionFile {
    /// `partial` (values are rho0) or `full` (values are sigma0).
    pub kind: String,
    pub n1: usize,
    pub n2: usize,
    pub relaxed: bool,
    pub alive: Vec<usize>,
    /// One character per grid edge.
    pub values: String,
}

impl RestrictionFile {
    fn new(kind: &str, setup: &Setup, relaxed: bool, alive: &[bool], values: &[bool]) -> Self {
        RestrictionFile {
            kind: kind.into(),
            n1: setup.part.n1(),
            n2: setup.part.n2(),
            relaxed,
            alive: alive.iter().enumerate().filter(|(_, &a)| a).map(|(c, _)| c).collect(),
            values: bit_string(values),
        }
    }

    pub fn partial(setup: &Setup, relaxed: bool, rho: &PartialRestriction) -> Self {
        Self::new("partial", setup, relaxed, rho.alive(), rho.rho0())
    }

    pub fn full(setup: &Setup, relaxed: bool, sigma: &FullRestriction) -> Self {
        Self::new("full", setup, relaxed, sigma.alive(), sigma.sigma0())
    }

    pub fn setup(&self) -> Result<Setup, FormatError> {
        let s = if self.relaxed { Setup::relaxed(self.n1, self.n2) } else { Setup::new(self.n1, self.n2) };
        s.map_err(|e| FormatError::Invalid(e.to_string()))
    }

    fn parts(&self, setup: &Setup) -> Result<(Vec<bool>, Vec<bool>), FormatError> {
        let mut alive = vec![false; setup.part.center_count()];
        for &c in &self.alive {
            *alive.get_mut(c).ok_or_else(|| FormatError::Invalid(format!("center {c} out of range")))? = true;
        }
        Ok((alive, parse_bit_string(&self.values, setup.edges())?))
    }

    pub fn to_partial(&self, setup: &Setup) -> Result<PartialRestriction, FormatError> {
        if self.kind != "partial" {
            return Err(FormatError::Invalid(format!("expected a partial restriction, found {}", self.kind)));
        }
        let (alive, values) = self.parts(setup)?;
        PartialRestriction::new(setup, alive, values).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn to_full(&self, setup: &Setup) -> Result<FullRestriction, FormatError> {
        if self.kind != "full" {
            return Err(FormatError::Invalid(format!("expected a full restriction, found {}", self.kind)));
        }
        let (alive, values) = self.parts(setup)?;
        FullRestriction::new(setup, alive, values).map_err(|e| FormatError::Invalid(e.to_string()))
    }
}

const TRANSCRIPT_MAGIC: &str = "tseitin-transcript 1";

/// An encoded restriction: parameters, the tree-list hash, rho* and the bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub s: usize,
    pub t: usize,
    pub k: usize,
    /// Depth of the appended trees for multi-switch transcripts.
    pub multi: Option<usize>,
    pub trees: String,
    pub rho_star: RestrictionFile,
    pub bits: BitVec,
}

impl Transcript {
    /// Header lines `key value`, a blank line, then the packed bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let r = &self.rho_star;
        let mut h = format!("{TRANSCRIPT_MAGIC}\ns {}\nt {}\nk {}\nn1 {}\nn2 {}\nrelaxed {}\n", self.s, self.t, self.k, r.n1, r.n2, r.relaxed);
        if let Some(ell) = self.multi {
            h.push_str(&format!("ell {ell}\n"));
        }
        h.push_str(&format!("trees {}\n", self.trees));
        h.push_str(&format!("alive {}\n", r.alive.iter().map(usize::to_string).collect::<Vec<_>>().join(",")));
        h.push_str(&format!("rho0 {}\n", r.values));
        h.push_str(&format!("bits {}\n\n", self.bits.len()));
        let mut out = h.into_bytes();
        out.extend_from_slice(self.bits.as_bytes());
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, FormatError> {
        let split = data.windows(2).position(|w| w == b"\n\n").ok_or_else(|| FormatError::Invalid("missing header end".into()))?;
        let head = std::str::from_utf8(&data[..split]).map_err(|_| FormatError::Invalid("header is not UTF-8".into()))?;
        let mut lines = head.lines();
        if lines.next() != Some(TRANSCRIPT_MAGIC) {
            return Err(FormatError::Invalid("not a transcript".into()));
        }
        let mut kv = std::collections::BTreeMap::new();
        for (i, l) in lines.enumerate() {
            let (k, v) = l.split_once(' ').ok_or_else(|| syntax(i + 2, "expected `key value`"))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| FormatError::Invalid(format!("missing {k}")));
        let num = |k: &str| -> Result<usize, FormatError> { get(k)?.parse().map_err(|_| FormatError::Invalid(format!("bad {k}"))) };
        let multi = if kv.contains_key("ell") { Some(num("ell")?) } else { None };
        let alive = get("alive")?;
        let alive = if alive.is_empty() {
            Vec::new()
        } else {
            alive.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|_| FormatError::Invalid("bad alive list".into()))?
        };
        let rho_star = RestrictionFile {
            kind: "partial".into(),
            n1: num("n1")?,
            n2: num("n2")?,
            relaxed: get("relaxed")? == "true",
            alive,
            values: get("rho0")?.to_string(),
        };
        let len = num("bits")?;
        let bits = BitVec::from_bytes(data[split + 2..].to_vec(), len).ok_or_else(|| FormatError::Invalid("bit count does not match payload".into()))?;
        Ok(Transcript { s: num("s")?, t: num("t")?, k: num("k")?, multi, trees: get("trees")?.to_string(), rho_star, bits })
    }
}

/// JSON view of one stage of an extended canonical decision tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageDump {
    pub tree: usize,
    pub branch: usize,
    pub psi: Vec<(usize, bool)>,
    pub forcing: Vec<String>,
    pub support: Vec<usize>,
    pub s_j: Vec<usize>,
    pub queried: Vec<usize>,
    pub newly_exposed: usize,
    pub answers: Vec<(usize, bool)>,
    pub degenerate: bool,
}

impl StageDump {
    pub fn new(r: &StageRecord) -> Self {
        StageDump {
            tree: r.tree,
            branch: r.branch,
            psi: r.psi.iter().map(|(&e, &v)| (e, v)).collect(),
            forcing: r.forcing.pieces().iter().map(|p| format!("{p:?}")).collect(),
            support: r.forcing.support().into_iter().collect(),
            s_j: r.sj.iter().copied().collect(),
            queried: r.queried.clone(),
            newly_exposed: r.newly_exposed(),
            answers: r.tau_after.iter().map(|(&y, &b)| (y, b)).collect(),
            degenerate: r.degenerate,
        }
    }
}
