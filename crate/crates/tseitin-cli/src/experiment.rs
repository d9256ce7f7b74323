//! Seeded Monte-Carlo switching experiments.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tseitin_core::codec::{decode, decode_multi, encode, encode_multi};
use tseitin_core::ecdt::{build_ecdt, Context, StageStats};
use tseitin_core::gen::{adversarial_trees, random_trees};
use tseitin_core::multi::{build_common_pdt, restricted_lists};
use tseitin_core::restriction::{sample_partial, Setup};
use tseitin_core::tree::{check_common_pdt, Tree};

use crate::stats::wilson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Random locally consistent trees over edges next to centers.
    Random,
    /// Trees querying first edges at chosen centers.
    Adversarial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig {
    pub n1: usize,
    pub n2: usize,
    /// Accept groups narrower than the standard geometry requires.
    pub relaxed: bool,
    pub k: usize,
    pub t: usize,
    /// Depth cap of the constructed tree.
    pub s: usize,
    /// Trees per list.
    pub m: usize,
    pub generator: Generator,
    pub trials: usize,
    pub seed: u64,
    /// Depth of the appended trees (multi-switch only).
    pub ell: usize,
    /// Number of tree lists (multi-switch only).
    pub lists: usize,
    /// Constants of the displayed bound.
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig {
            n1: 135,
            n2: 3,
            relaxed: false,
            k: 11,
            t: 2,
            s: 8,
            m: 4,
            generator: Generator::Random,
            trials: 100,
            seed: 0,
            ell: 2,
            lists: 3,
            a: 1.0,
            c1: 4.0,
            c2: 76.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl SwitchConfig {
    pub fn setup(&self) -> Result<Setup, ExperimentError> {
        let s = if self.relaxed { Setup::relaxed(self.n1, self.n2) } else { Setup::new(self.n1, self.n2) };
        s.map_err(|e| ExperimentError::Config(e.to_string()))
    }

    fn validate(&self, multi: bool) -> Result<Setup, ExperimentError> {
        let setup = self.setup()?;
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.s == 0 {
            return bad("s must be positive");
        }
        if self.m == 0 {
            return bad("m must be positive");
        }
        if self.generator == Generator::Adversarial && self.t == 0 {
            return bad("the adversarial generator needs t >= 1");
        }
        if multi && self.lists == 0 {
            return bad("lists must be positive");
        }
        if ![self.a, self.c1, self.c2].iter().all(|x| x.is_finite()) || self.c2 <= 0.0 {
            return bad("bound constants must be finite with c2 > 0");
        }
        Ok(setup)
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }

    /// `(A t log^c1 n' / (n / n'))^(s / c2)`, times `M^(s / ell)` for multi-switch.
    /// Display only.
    pub fn bound(&self, s: usize, multi: bool) -> f64 {
        let ratio = self.n1 as f64 / self.n2 as f64;
        let log_n = if multi { (self.n1 as f64).log2() } else { (self.n2 as f64).log2() };
        let base = self.a * self.t as f64 * log_n.powf(self.c1) / ratio;
        let mut b = base.powf(s as f64 / self.c2);
        if multi {
            b *= (self.lists as f64).powf(s as f64 / self.ell.max(1) as f64);
        }
        b
    }
}

/// One seeded trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub t: usize,
    pub s: usize,
    pub ell: usize,
    pub lists: usize,
    /// Depth of the finished tree, or `s` when the cap is hit.
    pub depth: usize,
    pub cap_hit: bool,
    pub degenerate: bool,
    pub dead_leaves: usize,
    pub g: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub max_stage_exposure: usize,
    pub disappearing: usize,
    pub support_k: usize,
    pub disjoint: bool,
    pub alive_star: usize,
    pub bits: usize,
    pub fixed_bits: usize,
    pub measured_a: f64,
    pub rounds: usize,
    /// Representation check when the cap is not hit, round trip otherwise.
    pub verified: bool,
    /// Whether the stage inequalities hold; true when the cap is not hit.
    pub inequalities: bool,
    pub error: String,
}

impl TrialRecord {
    fn stats(&mut self, st: &StageStats, t: usize, k: usize, s: usize, alive_star: usize) {
        self.g = st.g;
        self.a = st.a;
        self.b = st.b;
        self.c = st.c;
        self.max_stage_exposure = st.max_stage_exposure;
        self.disappearing = st.disappearing;
        self.support_k = st.support_k;
        self.disjoint = st.disjoint;
        self.alive_star = alive_star;
        self.inequalities = st.b <= 3 * st.a
            && st.c <= 15 * st.a
            && st.max_stage_exposure <= 16 * t
            && 4 * st.disappearing >= st.support_k
            && 64 * alive_star + s <= 64 * k
            && st.disjoint;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub s: usize,
    pub hits: usize,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
    /// Configured bound formula; display only.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub config: SwitchConfig,
    pub trials: usize,
    pub verified: usize,
    pub cap_hits: usize,
    pub degenerate: usize,
    pub inequality_violations: usize,
    pub errors: usize,
    pub max_bits: usize,
    pub max_measured_a: f64,
    /// `Pr[depth >= s']` for `s' = 1 ..= s` with 95% Wilson intervals.
    pub tail: Vec<TailPoint>,
}

impl Report {
    pub fn all_verified(&self) -> bool {
        self.verified == self.trials && self.inequality_violations == 0 && self.errors == 0
    }
}

fn fail(rec: &mut TrialRecord, e: impl std::fmt::Display) {
    rec.verified = false;
    rec.error = e.to_string();
}

fn base_record(cfg: &SwitchConfig, trial: usize, multi: bool) -> TrialRecord {
    TrialRecord {
        trial,
        seed: cfg.seed,
        n1: cfg.n1,
        n2: cfg.n2,
        k: cfg.k,
        t: cfg.t,
        s: cfg.s,
        ell: if multi { cfg.ell } else { 0 },
        lists: if multi { cfg.lists } else { 1 },
        inequalities: true,
        ..TrialRecord::default()
    }
}

fn gen_trees(cfg: &SwitchConfig, setup: &Setup, ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Vec<Tree>, String> {
    match cfg.generator {
        Generator::Random => random_trees(rng, setup, cfg.m, cfg.t).map_err(|e| e.to_string()),
        Generator::Adversarial => Ok(adversarial_trees(rng, ctx, cfg.m, cfg.t)),
    }
}

/// Runs one single-switch trial; reproducible from `(cfg, trial)`.
pub fn switch_trial(cfg: &SwitchConfig, setup: &Setup, trial: usize) -> TrialRecord {
    let mut rec = base_record(cfg, trial, false);
    let mut rng = cfg.rng(trial);
    let ctx = match sample_partial(setup, cfg.k, &mut rng).and_then(|rho| Context::new(setup, rho)) {
        Ok(c) => c,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    let trees = match gen_trees(cfg, setup, &ctx, &mut rng) {
        Ok(t) => t,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    let res = match build_ecdt(&ctx, &trees, cfg.s, cfg.t) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    rec.degenerate = res.degenerate;
    rec.dead_leaves = res.dead_leaves;
    match &res.tree {
        Some(tree) => {
            rec.depth = tree.depth();
            let restricted: Vec<Tree> = match ctx.restricted(&trees) {
                Ok(r) => r.into_iter().flatten().collect(),
                Err(e) => {
                    fail(&mut rec, e);
                    return rec;
                }
            };
            match res.represents(&ctx.weak(), &restricted) {
                Ok(v) => rec.verified = v,
                Err(e) => fail(&mut rec, e),
            }
        }
        None => {
            rec.depth = cfg.s;
            rec.cap_hit = true;
            let enc = match encode(&ctx, &trees, cfg.s, cfg.t) {
                Ok(e) => e,
                Err(e) => {
                    fail(&mut rec, e);
                    return rec;
                }
            };
            rec.bits = enc.bits.len();
            rec.fixed_bits = enc.fixed_cost(cfg.t, setup.part.delta());
            rec.measured_a = enc.measured_a(cfg.t, setup.part.delta(), cfg.s);
            rec.stats(&enc.stats, cfg.t, cfg.k, cfg.s, enc.rho_star.alive_count());
            match decode(setup, &enc.rho_star, &trees, &enc.bits, cfg.s, cfg.t) {
                Ok(back) => rec.verified = back == ctx.rho,
                Err(e) => fail(&mut rec, e),
            }
        }
    }
    rec
}

/// Runs one multi-switch trial; reproducible from `(cfg, trial)`.
pub fn multi_trial(cfg: &SwitchConfig, setup: &Setup, trial: usize) -> TrialRecord {
    let mut rec = base_record(cfg, trial, true);
    let mut rng = cfg.rng(trial);
    let ctx = match sample_partial(setup, cfg.k, &mut rng).and_then(|rho| Context::new(setup, rho)) {
        Ok(c) => c,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    let mut lists = Vec::with_capacity(cfg.lists);
    for _ in 0..cfg.lists {
        match gen_trees(cfg, setup, &ctx, &mut rng) {
            Ok(t) => lists.push(t),
            Err(e) => {
                fail(&mut rec, e);
                return rec;
            }
        }
    }
    let res = match build_common_pdt(&ctx, &lists, cfg.ell, cfg.s, cfg.t) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    rec.dead_leaves = res.dead_leaves;
    rec.rounds = res.rounds;
    match &res.cpdt {
        Some(cpdt) => {
            rec.depth = cpdt.top.depth();
            let check = restricted_lists(&ctx, &lists).and_then(|rl| check_common_pdt(&ctx.weak(), cpdt, &rl, cfg.ell, cfg.s));
            match check {
                Ok(v) => rec.verified = v,
                Err(e) => fail(&mut rec, e),
            }
        }
        None => {
            rec.depth = cfg.s;
            rec.cap_hit = true;
            let enc = match encode_multi(&ctx, &lists, cfg.ell, cfg.s, cfg.t) {
                Ok(e) => e,
                Err(e) => {
                    fail(&mut rec, e);
                    return rec;
                }
            };
            rec.bits = enc.bits.len();
            rec.rounds = enc.rounds;
            rec.fixed_bits = enc.index_bits(cfg.lists);
            rec.measured_a = enc.bits.len().saturating_sub(rec.fixed_bits) as f64 / cfg.s as f64;
            rec.stats(&enc.stats, cfg.t, cfg.k, cfg.s, enc.rho_star.alive_count());
            match decode_multi(setup, &enc.rho_star, &lists, &enc.bits, cfg.ell, cfg.s, cfg.t) {
                Ok(back) => rec.verified = back == ctx.rho,
                Err(e) => fail(&mut rec, e),
            }
        }
    }
    rec
}

/// Aggregates records in trial order.
pub fn report(cfg: &SwitchConfig, records: &[TrialRecord], multi: bool) -> Report {
    let n = records.len();
    let tail = (1..=cfg.s)
        .map(|s| {
            let hits = records.iter().filter(|r| r.error.is_empty() && r.depth >= s).count();
            let (lo, hi) = wilson(hits, n, 1.96);
            TailPoint { s, hits, p: if n == 0 { 0.0 } else { hits as f64 / n as f64 }, lo, hi, bound: cfg.bound(s, multi) }
        })
        .collect();
    Report {
        kind: if multi { "multiswitch" } else { "switch" }.into(),
        config: cfg.clone(),
        trials: n,
        verified: records.iter().filter(|r| r.verified).count(),
        cap_hits: records.iter().filter(|r| r.cap_hit).count(),
        degenerate: records.iter().filter(|r| r.degenerate).count(),
        inequality_violations: records.iter().filter(|r| !r.inequalities).count(),
        errors: records.iter().filter(|r| !r.error.is_empty()).count(),
        max_bits: records.iter().map(|r| r.bits).max().unwrap_or(0),
        max_measured_a: records.iter().map(|r| r.measured_a).fold(0.0, f64::max),
        tail,
    }
}

fn run(cfg: &SwitchConfig, multi: bool) -> Result<(Vec<TrialRecord>, Report), ExperimentError> {
    let setup = cfg.validate(multi)?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| if multi { multi_trial(cfg, &setup, i) } else { switch_trial(cfg, &setup, i) })
        .collect();
    let rep = report(cfg, &records, multi);
    Ok((records, rep))
}

pub fn run_switch_experiment(cfg: &SwitchConfig) -> Result<(Vec<TrialRecord>, Report), ExperimentError> {
    run(cfg, false)
}

pub fn run_multi_experiment(cfg: &SwitchConfig) -> Result<(Vec<TrialRecord>, Report), ExperimentError> {
    run(cfg, true)
}

/// Records as CSV with a header row.
pub fn records_csv(records: &[TrialRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SwitchConfig {
        SwitchConfig { n1: 45, n2: 3, relaxed: true, trials: 12, ..SwitchConfig::default() }
    }

    #[test]
    fn constant_trees_never_query() {
        let cfg = SwitchConfig { t: 0, ..small() };
        let (recs, rep) = run_switch_experiment(&cfg).unwrap();
        assert!(recs.iter().all(|r| r.depth == 0 && r.verified));
        assert_eq!(rep.tail[0].hits, 0);
        assert!(rep.all_verified());
    }

    #[test]
    fn replay_is_identical_and_tail_monotone() {
        let cfg = SwitchConfig { generator: Generator::Adversarial, ..small() };
        let (r1, p1) = run_switch_experiment(&cfg).unwrap();
        let (r2, p2) = run_switch_experiment(&cfg).unwrap();
        assert_eq!(records_csv(&r1).unwrap(), records_csv(&r2).unwrap());
        assert_eq!(serde_json::to_string(&p1).unwrap(), serde_json::to_string(&p2).unwrap());
        assert!(p1.tail.windows(2).all(|w| w[0].hits >= w[1].hits));
        assert_eq!(switch_trial(&cfg, &cfg.setup().unwrap(), 5), r1[5]);
    }

    #[test]
    fn multi_records_verify() {
        let cfg = SwitchConfig { generator: Generator::Adversarial, s: 3, ell: 2, trials: 6, ..small() };
        let (recs, rep) = run_multi_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(rep.all_verified(), "{recs:?}");
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(run_switch_experiment(&SwitchConfig { n2: 4, ..small() }).is_err());
        assert!(run_switch_experiment(&SwitchConfig { t: 0, generator: Generator::Adversarial, ..small() }).is_err());
        let cfg: Result<SwitchConfig, _> = serde_json::from_str(r#"{"n1": 45, "bogus": 1}"#);
        assert!(cfg.is_err());
    }
}
