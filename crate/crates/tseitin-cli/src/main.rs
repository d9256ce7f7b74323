use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde_json::json;
use tseitin_cli::experiment::{self, records_csv, Generator, Report, SwitchConfig, TrialRecord};
use tseitin_cli::formats::{self, RestrictionFile, StageDump, Transcript};
use tseitin_core::census::census;
use tseitin_core::codec::{decode, decode_multi, encode, encode_multi};
use tseitin_core::consistency::Strict;
use tseitin_core::ecdt::{build_ecdt, Context};
use tseitin_core::frege::{check_noproof, check_proof, tseitin_axioms, Evaluation, Proof};
use tseitin_core::gen::{adversarial_trees, random_trees};
use tseitin_core::grid::Torus;
use tseitin_core::pairing::{build_pairing, non_chosen_by_sq};
use tseitin_core::resolution::{build_grid_refutation, check_resolution};
use tseitin_core::restriction::{apply_full, canonical_clauses, compose_default, sample_full, sample_partial, Setup};
use tseitin_core::tree::Tree;
use tseitin_core::tseitin::Instance;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Msg(String),
    #[error(transparent)]
    Format(#[from] formats::FormatError),
}

impl From<String> for CliError {
    fn from(s: String) -> Self {
        CliError::Msg(s)
    }
}

impl From<&str> for CliError {
    fn from(s: &str) -> Self {
        CliError::Msg(s.into())
    }
}

type Res<T> = Result<T, CliError>;

fn msg(e: impl std::fmt::Display) -> CliError {
    CliError::Msg(e.to_string())
}

#[derive(Parser)]
#[command(name = "tseitin", version, about = "Tseitin formulas on torus grids: restrictions, switching experiments and proof checking")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the Tseitin CNF of an n x n torus in DIMACS format.
    Gen(GenArgs),
    /// Sample, save or apply a restriction.
    Restrict(RestrictArgs),
    /// Build and validate pairings of non-chosen centers.
    Pair(PairArgs),
    /// Single-switch experiment.
    Switch(ExperimentArgs),
    /// Multi-switch experiment.
    Multiswitch(ExperimentArgs),
    /// Encode and decode restrictions, or decode a saved transcript.
    Roundtrip(RoundtripArgs),
    /// Exact counting inequalities for restriction spaces.
    Census(CensusArgs),
    /// Build and check resolution refutations of grid formulas.
    Refute(RefuteArgs),
    /// Check Frege proofs and their evaluations.
    Frege(FregeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Charges {
    /// Every node has charge 1 (a contradiction for odd n).
    Ones,
    /// Random charges with even total (satisfiable).
    Even,
    /// Random charges with odd total (a contradiction).
    Odd,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Charges::Ones)]
    charges: Charges,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the partition of an n1 x n1 grid into n2 x n2 sub-squares instead.
    #[arg(long, num_args = 2, value_names = ["N1", "N2"])]
    dump_geometry: Option<Vec<usize>>,
    #[arg(long)]
    relaxed: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long, default_value_t = 135)]
    n1: usize,
    #[arg(long, default_value_t = 3)]
    n2: usize,
    #[arg(long)]
    relaxed: bool,
}

impl GeometryArgs {
    fn setup(&self) -> Res<Setup> {
        let s = if self.relaxed { Setup::relaxed(self.n1, self.n2) } else { Setup::new(self.n1, self.n2) };
        s.map_err(msg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Partial,
    Full,
}

#[derive(Args)]
struct RestrictArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long, default_value_t = 11)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Kind::Partial)]
    kind: Kind,
    /// Apply a saved restriction to the grid formula and audit the result.
    #[arg(long)]
    apply: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    geo: GeometryArgs,
    #[arg(long, default_value_t = 11)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sampled alive sets.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Pair the alive centers of a saved restriction.
    #[arg(long)]
    restriction: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    relaxed: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    lists: Option<usize>,
    #[arg(long = "bound-a")]
    a: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Res<SwitchConfig> {
        let mut c = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::Msg(format!("{}: {e}", p.display())))?,
            None => SwitchConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(n1, n2, k, t, s, m, generator, trials, seed, ell, lists, a, c1, c2);
        c.relaxed |= self.relaxed;
        Ok(c)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Per-trial records as CSV.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Aggregate report as JSON; printed when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Encode with tree lists and a common partial decision tree.
    #[arg(long)]
    multi: bool,
    /// Write each cap-hit trial's transcript and trees here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the stage records of each cap-hit trial as JSON.
    #[arg(long)]
    dump_stages: Option<PathBuf>,
    /// Decode this transcript instead of running trials.
    #[arg(long, requires = "trees")]
    decode: Option<PathBuf>,
    /// Tree lists the transcript was made with.
    #[arg(long)]
    trees: Option<PathBuf>,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
}

#[derive(Args)]
struct RefuteArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Write the proof here.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Check this proof against `--cnf` instead of building one.
    #[arg(long, requires = "cnf")]
    check: Option<PathBuf>,
    #[arg(long)]
    cnf: Option<PathBuf>,
}

#[derive(Args)]
struct FregeArgs {
    proof: PathBuf,
    /// Allow the axioms of the all-ones formula on the n x n torus.
    #[arg(long)]
    grid: Option<usize>,
    /// Also check that truth-table evaluations of depth t map every line to a 1-tree.
    #[arg(long, requires = "grid")]
    t: Option<usize>,
}

fn read(p: &Path) -> Res<String> {
    fs::read_to_string(p).map_err(|e| CliError::Msg(format!("{}: {e}", p.display())))
}

fn write(p: &Path, data: impl AsRef<[u8]>) -> Res<()> {
    fs::write(p, data).map_err(|e| CliError::Msg(format!("{}: {e}", p.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Res<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn gen(a: &GenArgs) -> Res<bool> {
    if let Some(nn) = &a.dump_geometry {
        let setup = GeometryArgs { n1: nn[0], n2: nn[1], relaxed: a.relaxed }.setup()?;
        emit(&a.out, &setup.part.dump())?;
        return Ok(true);
    }
    let torus = Torus::new(a.n).map_err(msg)?;
    let nodes = torus.graph().node_count();
    let charges = match a.charges {
        Charges::Ones => vec![true; nodes],
        Charges::Even | Charges::Odd => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut c: Vec<bool> = (0..nodes).map(|_| rng.next_u32() & 1 == 1).collect();
            let odd = c.iter().filter(|&&b| b).count() % 2 == 1;
            if odd != matches!(a.charges, Charges::Odd) {
                c[0] = !c[0];
            }
            c
        }
    };
    let inst = Instance::torus(&torus, charges).map_err(msg)?;
    let comment = format!("tseitin torus n={} charges={}", a.n, if inst.is_contradiction() { "odd" } else { "even" });
    emit(&a.out, &formats::write_dimacs(&inst.to_cnf(), &[comment]))?;
    Ok(true)
}

fn restrict(a: &RestrictArgs) -> Res<bool> {
    if let Some(p) = &a.apply {
        let file: RestrictionFile = serde_json::from_str(&read(p)?).map_err(msg)?;
        let setup = file.setup()?;
        let sigma = match file.kind.as_str() {
            "full" => file.to_full(&setup)?,
            _ => compose_default(&setup, &file.to_partial(&setup)?).map_err(msg)?,
        };
        let audit = apply_full(&setup, &sigma).map_err(msg)?;
        let reduced = canonical_clauses(&setup.reduced_inst.to_cnf());
        let ok = audit.clauses == reduced;
        let v = json!({
            "satisfied": audit.satisfied,
            "tautology": audit.tautology,
            "new_axiom": audit.new_axiom,
            "clauses": audit.clauses.len(),
            "matches_reduced_formula": ok,
        });
        emit(&a.out, &pretty(&v))?;
        return Ok(ok);
    }
    let setup = a.geo.setup()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let file = match a.kind {
        Kind::Partial => RestrictionFile::partial(&setup, a.geo.relaxed, &sample_partial(&setup, a.k, &mut rng).map_err(msg)?),
        Kind::Full => RestrictionFile::full(&setup, a.geo.relaxed, &sample_full(&setup, a.k, &mut rng).map_err(msg)?),
    };
    emit(&a.out, &pretty(&file))?;
    Ok(true)
}

fn pair(a: &PairArgs) -> Res<bool> {
    let alive_sets: Vec<(Setup, Vec<bool>)> = match &a.restriction {
        Some(p) => {
            let file: RestrictionFile = serde_json::from_str(&read(p)?).map_err(msg)?;
            let setup = file.setup()?;
            let alive = file.to_partial(&setup)?.into_parts().0;
            vec![(setup, alive)]
        }
        None => {
            let mut out = Vec::with_capacity(a.trials);
            for i in 0..a.trials {
                let setup = a.geo.setup()?;
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                rng.set_stream(i as u64);
                let rho = sample_partial(&setup, a.k, &mut rng).map_err(msg)?;
                let alive = rho.into_parts().0;
                out.push((setup, alive));
            }
            out
        }
    };
    let mut rows = Vec::new();
    let mut ok = true;
    for (setup, alive) in &alive_sets {
        let non_chosen: Vec<_> = non_chosen_by_sq(&setup.part, alive).concat();
        let row = match build_pairing(&setup.part, alive) {
            Ok(pi) => {
                let valid = pi.validate(&setup.part, &non_chosen).err();
                let deterministic = build_pairing(&setup.part, alive).ok() == Some(pi.clone());
                ok &= valid.is_none() && deterministic;
                json!({ "edges": pi.edges(), "components": pi.components.len(), "invalid": valid, "deterministic": deterministic })
            }
            Err(e) => {
                ok = false;
                json!({ "error": e.to_string() })
            }
        };
        rows.push(row);
    }
    print!("{}", pretty(&json!({ "trials": rows.len(), "all_valid": ok, "pairings": rows })));
    Ok(ok)
}

fn experiment(a: &ExperimentArgs, multi: bool) -> Res<bool> {
    let cfg = a.cfg.load()?;
    let run = if multi { experiment::run_multi_experiment } else { experiment::run_switch_experiment };
    let (records, report): (Vec<TrialRecord>, Report) = run(&cfg).map_err(msg)?;
    if let Some(p) = &a.records {
        write(p, records_csv(&records).map_err(msg)?)?;
    }
    emit(&a.report, &pretty(&report))?;
    Ok(report.all_verified())
}

fn roundtrip(a: &RoundtripArgs) -> Res<bool> {
    if let Some(p) = &a.decode {
        let data = fs::read(p).map_err(|e| CliError::Msg(format!("{}: {e}", p.display())))?;
        let tr = Transcript::from_bytes(&data)?;
        let lists = formats::parse_tree_lists(&read(a.trees.as_ref().expect("required by clap"))?)?;
        if formats::tree_hash(&lists) != tr.trees {
            return Err("tree file does not match the transcript hash".into());
        }
        let setup = tr.rho_star.setup()?;
        let rho_star = tr.rho_star.to_partial(&setup)?;
        let rho = match tr.multi {
            Some(ell) => decode_multi(&setup, &rho_star, &lists, &tr.bits, ell, tr.s, tr.t),
            None => decode(&setup, &rho_star, &lists[0], &tr.bits, tr.s, tr.t),
        }
        .map_err(msg)?;
        print!("{}", pretty(&RestrictionFile::partial(&setup, tr.rho_star.relaxed, &rho)));
        return Ok(true);
    }
    let cfg = a.cfg.load()?;
    let setup = cfg.setup().map_err(msg)?;
    if let Some(d) = &a.out_dir {
        fs::create_dir_all(d).map_err(|e| CliError::Msg(format!("{}: {e}", d.display())))?;
    }
    let mut dumps: BTreeMap<usize, Vec<StageDump>> = BTreeMap::new();
    let (mut hits, mut passed) = (0, 0);
    for trial in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64);
        let rho = sample_partial(&setup, cfg.k, &mut rng).map_err(msg)?;
        let ctx = Context::new(&setup, rho).map_err(msg)?;
        let gen_list = |rng: &mut ChaCha8Rng| -> Res<Vec<Tree>> {
            match cfg.generator {
                Generator::Random => random_trees(rng, &setup, cfg.m, cfg.t).map_err(msg),
                Generator::Adversarial => Ok(adversarial_trees(rng, &ctx, cfg.m, cfg.t)),
            }
        };
        let lists: Vec<Vec<Tree>> = if a.multi {
            (0..cfg.lists).map(|_| gen_list(&mut rng)).collect::<Res<_>>()?
        } else {
            vec![gen_list(&mut rng)?]
        };
        let (rho_star, bits) = if a.multi {
            match encode_multi(&ctx, &lists, cfg.ell, cfg.s, cfg.t) {
                Ok(e) => (e.rho_star, e.bits),
                Err(_) => continue,
            }
        } else {
            if build_ecdt(&ctx, &lists[0], cfg.s, cfg.t).map_err(msg)?.cap.is_none() {
                continue;
            }
            let enc = encode(&ctx, &lists[0], cfg.s, cfg.t).map_err(|e| CliError::Msg(format!("trial {trial}: {e}")))?;
            dumps.insert(trial, enc.stages.iter().map(StageDump::new).collect());
            (enc.rho_star, enc.bits)
        };
        hits += 1;
        let tr = Transcript {
            s: cfg.s,
            t: cfg.t,
            k: cfg.k,
            multi: a.multi.then_some(cfg.ell),
            trees: formats::tree_hash(&lists),
            rho_star: RestrictionFile::partial(&setup, cfg.relaxed, &rho_star),
            bits,
        };
        let bytes = tr.to_bytes();
        if let Some(d) = &a.out_dir {
            write(&d.join(format!("trial-{trial}.bin")), &bytes)?;
            write(&d.join(format!("trial-{trial}.trees")), formats::write_tree_lists(&lists))?;
        }
        let back = Transcript::from_bytes(&bytes)?;
        let star = back.rho_star.to_partial(&setup)?;
        let rho = if a.multi {
            decode_multi(&setup, &star, &lists, &back.bits, cfg.ell, cfg.s, cfg.t)
        } else {
            decode(&setup, &star, &lists[0], &back.bits, cfg.s, cfg.t)
        };
        if rho.as_ref() == Ok(&ctx.rho) {
            passed += 1;
        }
    }
    if let Some(p) = &a.dump_stages {
        write(p, pretty(&dumps))?;
    }
    print!("{}", pretty(&json!({ "trials": cfg.trials, "cap_hits": hits, "round_trips": passed })));
    Ok(passed == hits)
}

fn census_cmd(a: &CensusArgs) -> Res<bool> {
    let c = census(a.m, a.k, a.s);
    let v = json!({
        "m": c.m, "k": c.k, "s": c.s,
        "full": c.full.to_string(),
        "tail_sum": c.sum.to_string(),
        "terms": c.terms.iter().map(|(j, b)| json!([j, b.to_string()])).collect::<Vec<_>>(),
        "geometric": format!("{:?}", c.geometric),
        "product": format!("{:?}", c.product),
        "power": format!("{:?}", c.power),
        "chain": format!("{:?}", c.chain),
    });
    print!("{}", pretty(&v));
    Ok(c.all_hold())
}

fn refute(a: &RefuteArgs) -> Res<bool> {
    if let Some(p) = &a.check {
        let proof = formats::parse_resolution(&read(p)?)?;
        let cnf = formats::parse_dimacs(&read(a.cnf.as_ref().expect("required by clap"))?)?;
        let mut v = json!({ "steps": proof.len() });
        let ok = match check_resolution(&proof, &cnf) {
            Ok(ok) => ok,
            Err(e) => {
                v["error"] = json!(e.to_string());
                false
            }
        };
        v["refutation"] = json!(ok);
        print!("{}", pretty(&v));
        return Ok(ok);
    }
    let (proof, stats) = build_grid_refutation(a.n).map_err(msg)?;
    let cnf = tseitin_core::resolution::grid_cnf(a.n).map_err(msg)?;
    let ok = check_resolution(&proof, &cnf).map_err(msg)?;
    if let Some(p) = &a.out {
        write(p, proof.to_string())?;
    }
    let v = json!({
        "n": a.n,
        "steps": stats.steps,
        "log2_steps": (stats.steps as f64).log2(),
        "max_equation": stats.max_equation,
        "max_clause": stats.max_clause,
        "refutation": ok,
    });
    print!("{}", pretty(&v));
    Ok(ok)
}

fn frege(a: &FregeArgs) -> Res<bool> {
    let proof = Proof::parse(&read(&a.proof)?).map_err(msg)?;
    let (torus, charges) = match a.grid {
        Some(n) => {
            let t = Torus::new(n).map_err(msg)?;
            let c = vec![true; t.graph().node_count()];
            (Some(t), c)
        }
        None => (None, Vec::new()),
    };
    let axioms = torus.as_ref().map(|t| tseitin_axioms(t.graph(), &charges)).unwrap_or_default();
    let lines: Vec<_> = proof.lines.iter().map(|l| json!({ "formula": l.formula.to_string(), "size": l.formula.size(), "depth": l.formula.depth() })).collect();
    let mut v = json!({ "lines": lines, "size": proof.size(), "depth": proof.depth() });
    let mut ok = match check_proof(&proof, &axioms) {
        Ok(()) => true,
        Err(e) => {
            v["error"] = json!({ "line": e.line(), "message": e.to_string() });
            false
        }
    };
    v["valid"] = json!(ok);
    if let (Some(t), Some(torus), true) = (a.t, &torus, ok) {
        let lc = Strict::new(torus, &charges);
        let evals = Evaluation::truth_table(&lc, proof.lines.iter().map(|l| &l.formula), t).map(|e| vec![e; proof.lines.len()]);
        let verdict = match evals {
            Ok(evals) => check_noproof(&lc, &proof, &evals, &axioms, torus.n()).map_err(msg),
            Err(e) => Err(msg(e)),
        };
        ok = verdict.is_ok();
        v["one_trees"] = json!(ok);
        if let Err(e) = verdict {
            v["evaluation_error"] = json!(e.to_string());
        }
    }
    print!("{}", pretty(&v));
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Restrict(a) => restrict(a),
        Cmd::Pair(a) => pair(a),
        Cmd::Switch(a) => experiment(a, false),
        Cmd::Multiswitch(a) => experiment(a, true),
        Cmd::Roundtrip(a) => roundtrip(a),
        Cmd::Census(a) => census_cmd(a),
        Cmd::Refute(a) => refute(a),
        Cmd::Frege(a) => frege(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
