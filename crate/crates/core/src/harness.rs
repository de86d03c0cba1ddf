//! Type-directed generation of well-typed terms and types, and the
//! differential campaigns: compiler correctness, backtranslation
//! approximation and the full-abstraction smoke test.
//!
//! Every campaign is deterministic in its seed. Campaigns run on a thread
//! with a large stack because evaluation and typechecking recurse on term
//! depth.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::backtranslation::{Backtranslator, Direction};
use crate::compilers::{compile, compile_fix_iso, z_type, Compiler};
use crate::dynamics::{eval, find_shrink_bound, EvalOutcome};
use crate::parse::{parse_ctx, parse_term, parse_type, ParseError};
use crate::statics::{check, type_eq_unchecked, typecheck_ctx_closed, TypeError};
use crate::syntax::{check_type_lang, name, subst_type, Lang, Name, ObjType, ProgCtx, Term, TermKind, TypeEnv, TypeKind};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Relative weights of type constructors during type generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeBias {
    pub unit: u32,
    pub bool: u32,
    pub arrow: u32,
    pub prod: u32,
    pub sum: u32,
    pub mu: u32,
}

impl Default for TypeBias {
    fn default() -> Self {
        TypeBias { unit: 3, bool: 4, arrow: 2, prod: 1, sum: 2, mu: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: u32,
    pub lang: Lang,
    pub type_bias: TypeBias,
}

impl GenConfig {
    pub fn new(lang: Lang, seed: u64) -> GenConfig {
        GenConfig { seed, max_depth: 4, lang, type_bias: TypeBias::default() }
    }

    pub fn with_seed(&self, seed: u64) -> GenConfig {
        GenConfig { seed, ..self.clone() }
    }

    pub fn with_depth(&self, max_depth: u32) -> GenConfig {
        GenConfig { max_depth, ..self.clone() }
    }
}

/// Seed of the `i`-th case of a campaign.
pub fn case_seed(seed: u64, i: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `f` on a thread with a 256 MiB stack.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

// ---------------------------------------------------------------------------
// Type generation
// ---------------------------------------------------------------------------

/// Recursive types used by the term generator; each has finite values.
pub fn mu_catalog() -> Vec<ObjType> {
    [
        "mu a. Unit + a",
        "mu a. Unit + Bool * a",
        "mu a. a -> Bool",
        "mu a. Bool + a * a",
        "mu a. Unit -> Unit + a",
    ]
    .iter()
    .map(|s| parse_type(s, Lang::Iso).expect("catalog type"))
    .collect()
}

/// A closed contractive type with at most `depth` constructor levels.
/// Recursion variables are only used under a constructor of their binder.
pub fn gen_contractive_type(rng: &mut impl Rng, depth: u32) -> ObjType {
    fn go(rng: &mut impl Rng, depth: u32, guarded: &mut Vec<Name>, pending: &mut Vec<Name>, next: &mut u32) -> ObjType {
        if depth <= 1 {
            let k = rng.gen_range(0..3 + guarded.len().min(2));
            return match k {
                0 => ObjType::unit(),
                1 | 2 => ObjType::bool(),
                _ => ObjType::new(TypeKind::TVar(guarded.choose(rng).unwrap().clone())),
            };
        }
        match rng.gen_range(0..10) {
            0 => ObjType::unit(),
            1 => ObjType::bool(),
            2 if !guarded.is_empty() => ObjType::new(TypeKind::TVar(guarded.choose(rng).unwrap().clone())),
            2..=3 => {
                let a = name(&format!("a{next}"));
                *next += 1;
                pending.push(a.clone());
                let body = go(rng, depth - 1, guarded, pending, next);
                pending.retain(|p| p != &a);
                guarded.retain(|g| g != &a);
                ObjType::mu_named(a, body)
            }
            k => {
                let newly: Vec<Name> = std::mem::take(pending);
                guarded.extend(newly.iter().cloned());
                let l = go(rng, depth - 1, guarded, &mut Vec::new(), next);
                let r = go(rng, depth - 1, guarded, &mut Vec::new(), next);
                guarded.truncate(guarded.len() - newly.len());
                *pending = newly;
                match k % 3 {
                    0 => ObjType::arrow(l, r),
                    1 => ObjType::prod(l, r),
                    _ => ObjType::sum(l, r),
                }
            }
        }
    }
    go(rng, depth, &mut Vec::new(), &mut Vec::new(), &mut 0)
}

/// An equivalent type obtained by unfolding randomly chosen μ subterms.
pub fn random_unfold(rng: &mut impl Rng, t: &ObjType) -> ObjType {
    let rebuilt = match t.kind() {
        TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_) => t.clone(),
        TypeKind::Arrow(a, b) => ObjType::arrow(random_unfold(rng, a), random_unfold(rng, b)),
        TypeKind::Prod(a, b) => ObjType::prod(random_unfold(rng, a), random_unfold(rng, b)),
        TypeKind::Sum(a, b) => ObjType::sum(random_unfold(rng, a), random_unfold(rng, b)),
        TypeKind::Mu(a, b) => ObjType::mu_named(a.clone(), random_unfold(rng, b)),
    };
    let mut out = rebuilt;
    while out.is_mu() && rng.gen_bool(0.4) {
        let TypeKind::Mu(a, b) = out.kind() else { unreachable!() };
        out = subst_type(b, a, &out);
    }
    out
}

// ---------------------------------------------------------------------------
// Term generation
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone)]
pub enum GenError {
    #[error("type `{ty}` is not a valid {lang} type: {why}")]
    BadType { ty: ObjType, lang: Lang, why: &'static str },
    #[error("type `{ty}` has no finite value")]
    Uninhabited { ty: ObjType },
    #[error("generated term `{term}` does not typecheck at `{ty}`: {err}")]
    IllTyped { term: Term, ty: ObjType, err: TypeError },
}

type Env = Vec<(Name, ObjType)>;

/// Seeded type-directed term generator.
pub struct TermGen {
    lang: Lang,
    max_depth: u32,
    bias: TypeBias,
    rng: ChaCha8Rng,
    fresh: u32,
    catalog: Vec<ObjType>,
}

impl TermGen {
    pub fn new(cfg: &GenConfig) -> TermGen {
        TermGen {
            lang: cfg.lang,
            max_depth: cfg.max_depth,
            bias: cfg.type_bias.clone(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            fresh: 0,
            catalog: if cfg.lang == Lang::Fix { Vec::new() } else { mu_catalog() },
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh(&mut self) -> Name {
        self.fresh += 1;
        name(&format!("x{}", self.fresh))
    }

    fn same(&self, a: &ObjType, b: &ObjType) -> bool {
        if self.lang == Lang::Equi {
            type_eq_unchecked(a, b)
        } else {
            a.alpha_eq(b)
        }
    }

    /// A type with finite values, at most `depth` constructor levels deep.
    pub fn gen_type(&mut self, depth: u32) -> ObjType {
        let b = &self.bias;
        let mut w = vec![b.unit, b.bool];
        if depth > 0 {
            w.extend([b.arrow, b.prod, b.sum]);
            if !self.catalog.is_empty() {
                w.push(b.mu);
            }
        }
        match pick(&mut self.rng, &w) {
            0 => ObjType::unit(),
            1 => ObjType::bool(),
            2 => ObjType::arrow(self.gen_type(depth - 1), self.gen_type(depth - 1)),
            3 => ObjType::prod(self.gen_type(depth - 1), self.gen_type(depth - 1)),
            4 => ObjType::sum(self.gen_type(depth - 1), self.gen_type(depth - 1)),
            _ => self.catalog.choose(&mut self.rng).unwrap().clone(),
        }
    }

    /// A closed term of type `ty`.
    pub fn gen_term(&mut self, ty: &ObjType) -> Term {
        self.term(&mut Vec::new(), ty, self.max_depth)
    }

    /// A small closed value of `ty`, if one exists.
    pub fn min_value(&mut self, ty: &ObjType) -> Option<Term> {
        self.min_value_in(ty, &mut Vec::new())
    }

    fn min_value_in(&mut self, ty: &ObjType, visiting: &mut Vec<ObjType>) -> Option<Term> {
        Some(match ty.kind() {
            TypeKind::Unit => Term::unit(),
            TypeKind::Bool => Term::boolean(self.rng.gen()),
            TypeKind::Arrow(a, b) => {
                let x = self.fresh();
                Term::lam_named(x, a.clone(), self.min_value_in(b, visiting)?)
            }
            TypeKind::Prod(a, b) => Term::pair(self.min_value_in(a, visiting)?, self.min_value_in(b, visiting)?),
            TypeKind::Sum(a, b) => {
                let left_first = self.rng.gen_bool(0.5);
                let (first, second) = if left_first { (a, b) } else { (b, a) };
                let wrap = |left: bool, v: Term| if left { Term::inl(v) } else { Term::inr(v) };
                match self.min_value_in(first, visiting) {
                    Some(v) => wrap(left_first, v),
                    None => wrap(!left_first, self.min_value_in(second, visiting)?),
                }
            }
            TypeKind::Mu(..) => {
                if visiting.iter().any(|v| v == ty) {
                    return None;
                }
                visiting.push(ty.clone());
                let inner = self.min_value_in(&ty.unfold(), visiting);
                visiting.pop();
                let inner = inner?;
                if self.lang == Lang::Iso {
                    Term::fold(ty.clone(), inner)
                } else {
                    inner
                }
            }
            TypeKind::TVar(_) => return None,
        })
    }

    fn vars_of(&self, env: &Env, ty: &ObjType) -> Vec<Name> {
        env.iter().filter(|(_, t)| self.same(t, ty)).map(|(x, _)| x.clone()).collect()
    }

    fn leaf(&mut self, env: &mut Env, ty: &ObjType) -> Term {
        let vars = self.vars_of(env, ty);
        if !vars.is_empty() && self.rng.gen_bool(0.5) {
            return Term::var_named(vars.choose(&mut self.rng).unwrap().clone());
        }
        self.min_value(ty).expect("generator types have finite values")
    }

    fn term(&mut self, env: &mut Env, ty: &ObjType, depth: u32) -> Term {
        if depth == 0 {
            return self.leaf(env, ty);
        }
        let vars = self.vars_of(env, ty);
        let unfoldable: Vec<ObjType> = if self.lang == Lang::Iso {
            self.catalog.iter().filter(|m| m.unfold().alpha_eq(ty)).cloned().collect()
        } else {
            Vec::new()
        };
        let is_arrow = matches!(ty.kind(), TypeKind::Arrow(..));
        // var, intro, app, proj, case, if, seq, fix, unfold
        let w = [
            if vars.is_empty() { 0 } else { 3 },
            5,
            2,
            1,
            1,
            1,
            1,
            if self.lang == Lang::Fix && is_arrow { 2 } else { 0 },
            if unfoldable.is_empty() { 0 } else { 2 },
        ];
        let d = depth - 1;
        match pick(&mut self.rng, &w) {
            0 => Term::var_named(vars.choose(&mut self.rng).unwrap().clone()),
            1 => self.intro(env, ty, depth),
            2 => {
                let s = self.gen_type(1);
                let f = self.term(env, &ObjType::arrow(s.clone(), ty.clone()), d);
                let a = self.term(env, &s, d);
                Term::app(f, a)
            }
            3 => {
                let s = self.gen_type(1);
                if self.rng.gen_bool(0.5) {
                    Term::proj1(self.term(env, &ObjType::prod(ty.clone(), s), d))
                } else {
                    Term::proj2(self.term(env, &ObjType::prod(s, ty.clone()), d))
                }
            }
            4 => self.case(env, ty, d),
            5 => {
                let c = self.term(env, &ObjType::bool(), d);
                Term::ite(c, self.term(env, ty, d), self.term(env, ty, d))
            }
            6 => {
                let a = self.term(env, &ObjType::unit(), d);
                Term::seq(a, self.term(env, ty, d))
            }
            7 => {
                let TypeKind::Arrow(a, b) = ty.kind() else { unreachable!() };
                let (f, x) = (self.fresh(), self.fresh());
                env.push((f.clone(), ty.clone()));
                env.push((x.clone(), a.clone()));
                let body = self.term(env, b, d);
                env.truncate(env.len() - 2);
                Term::fix(ty.clone(), Term::lam_named(f, ty.clone(), Term::lam_named(x, a.clone(), body)))
            }
            _ => {
                let m = unfoldable.choose(&mut self.rng).unwrap().clone();
                Term::unfold(m.clone(), self.term(env, &m, d))
            }
        }
    }

    fn case(&mut self, env: &mut Env, ty: &ObjType, d: u32) -> Term {
        let sums: Vec<ObjType> = self
            .catalog
            .iter()
            .filter(|m| matches!(m.unfold_all().kind(), TypeKind::Sum(..)))
            .cloned()
            .collect();
        let (scrut, s1, s2) = if !sums.is_empty() && self.rng.gen_bool(0.4) {
            let m = sums.choose(&mut self.rng).unwrap().clone();
            let TypeKind::Sum(s1, s2) = m.unfold_all().kind().clone() else { unreachable!() };
            let e = self.term(env, &m, d);
            let e = if self.lang == Lang::Iso { Term::unfold(m, e) } else { e };
            (e, s1, s2)
        } else {
            let (s1, s2) = (self.gen_type(1), self.gen_type(1));
            let e = self.term(env, &ObjType::sum(s1.clone(), s2.clone()), d);
            (e, s1, s2)
        };
        let (x1, x2) = (self.fresh(), self.fresh());
        env.push((x1.clone(), s1));
        let b1 = self.term(env, ty, d);
        env.pop();
        env.push((x2.clone(), s2));
        let b2 = self.term(env, ty, d);
        env.pop();
        Term::case_named(scrut, x1, b1, x2, b2)
    }

    fn intro(&mut self, env: &mut Env, ty: &ObjType, depth: u32) -> Term {
        let d = depth - 1;
        match ty.kind() {
            TypeKind::Unit => Term::unit(),
            TypeKind::Bool => Term::boolean(self.rng.gen()),
            TypeKind::Arrow(a, b) => {
                let x = self.fresh();
                env.push((x.clone(), a.clone()));
                let body = self.term(env, b, d);
                env.pop();
                Term::lam_named(x, a.clone(), body)
            }
            TypeKind::Prod(a, b) => Term::pair(self.term(env, a, d), self.term(env, b, d)),
            TypeKind::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    Term::inl(self.term(env, a, d))
                } else {
                    Term::inr(self.term(env, b, d))
                }
            }
            TypeKind::Mu(..) => {
                if self.lang == Lang::Iso {
                    Term::fold(ty.clone(), self.term(env, &ty.unfold(), d))
                } else {
                    self.intro(env, &ty.unfold_all(), depth)
                }
            }
            TypeKind::TVar(_) => unreachable!("open type in generator"),
        }
    }
}

fn pick(rng: &mut impl Rng, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut k = rng.gen_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if k < *w {
            return i;
        }
        k -= w;
    }
    unreachable!()
}

/// A closed term that typechecks in `cfg.lang`, at `target` when given.
pub fn gen_well_typed(cfg: &GenConfig, target: Option<&ObjType>) -> Result<(Term, ObjType), GenError> {
    let mut g = TermGen::new(cfg);
    let ty = match target {
        Some(t) => {
            check_type_lang(cfg.lang, t).map_err(|why| GenError::BadType { ty: t.clone(), lang: cfg.lang, why })?;
            if g.min_value(t).is_none() {
                return Err(GenError::Uninhabited { ty: t.clone() });
            }
            t.clone()
        }
        None => g.gen_type(2),
    };
    let t = g.gen_term(&ty);
    check(cfg.lang, &TypeEnv::empty(), &t, &ty).map_err(|err| GenError::IllTyped { term: t.clone(), ty: ty.clone(), err })?;
    Ok((t, ty))
}

/// A random value of a μ-free type.
pub fn gen_value(rng: &mut impl Rng, ty: &ObjType, depth: u32) -> Term {
    match ty.kind() {
        TypeKind::Unit => Term::unit(),
        TypeKind::Bool => Term::boolean(rng.gen()),
        TypeKind::Arrow(a, b) => Term::lam("v", a.clone(), gen_value(rng, b, depth.saturating_sub(1))),
        TypeKind::Prod(a, b) => Term::pair(gen_value(rng, a, depth), gen_value(rng, b, depth)),
        TypeKind::Sum(a, b) => {
            if rng.gen_bool(0.7) {
                Term::inl(gen_value(rng, a, depth))
            } else {
                Term::inr(gen_value(rng, b, depth))
            }
        }
        TypeKind::Mu(..) | TypeKind::TVar(_) => panic!("gen_value needs a μ-free type, got `{ty}`"),
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One line of the machine-readable report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub steps_source: Option<u64>,
    pub steps_target: Option<u64>,
    pub shrink_bound: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub case_id: String,
    pub seed: u64,
    pub reason: String,
    pub term: String,
    pub context: Option<String>,
    pub outcome_source: String,
    pub outcome_target: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignReport {
    pub name: String,
    pub cases_run: usize,
    pub passes: usize,
    pub failures: Vec<Failure>,
    pub records: Vec<CaseRecord>,
    /// Named counters, e.g. how often a conditional premise held.
    pub stats: BTreeMap<String, u64>,
    #[serde(serialize_with = "secs")]
    pub wall_time: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl CampaignReport {
    fn new(name: String) -> CampaignReport {
        CampaignReport {
            name,
            cases_run: 0,
            passes: 0,
            failures: Vec::new(),
            records: Vec::new(),
            stats: BTreeMap::new(),
            wall_time: Duration::ZERO,
        }
    }

    fn bump(&mut self, key: &str) {
        *self.stats.entry(key.to_string()).or_default() += 1;
    }

    fn push(&mut self, record: CaseRecord, failure: Option<Failure>) {
        self.cases_run += 1;
        match failure {
            None => self.passes += 1,
            Some(f) => self.failures.push(f),
        }
        self.records.push(record);
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Equal up to wall time.
    pub fn same_outcomes(&self, other: &CampaignReport) -> bool {
        self.records == other.records && self.failures == other.failures && self.stats == other.stats
    }

    /// One JSON object per case.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let stats: Vec<String> = self.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{}: {} cases, {} passed, {} failed{} ({:.2}s)",
            self.name,
            self.cases_run,
            self.passes,
            self.failures.len(),
            if stats.is_empty() { String::new() } else { format!(", {}", stats.join(" ")) },
            self.wall_time.as_secs_f64()
        )
    }
}

// ---------------------------------------------------------------------------
// Compiler campaigns
// ---------------------------------------------------------------------------

/// Deliberate compiler bugs for mutation testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    /// Swap `true` and `false` in the output.
    FlipBool,
    /// Compile `fix` with the Y combinator, which diverges under call-by-value.
    YFix,
    /// Keep the first `fold` when erasing.
    KeepFold,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::FlipBool, Fault::YFix, Fault::KeepFold];

    /// Whether the fault changes the output of `which`.
    pub fn applies(self, which: Compiler) -> bool {
        match self {
            Fault::FlipBool => true,
            Fault::YFix => which != Compiler::IE,
            Fault::KeepFold => which != Compiler::FI,
        }
    }
}

fn y_combinator(fix_ty: &ObjType) -> Term {
    let m = z_type(fix_ty);
    let f_ty = ObjType::arrow(fix_ty.clone(), fix_ty.clone());
    let self_app = Term::app(Term::unfold(m.clone(), Term::var("x")), Term::var("x"));
    let big_f = Term::lam("x", m.clone(), Term::app(Term::var("f"), self_app));
    Term::lam("f", f_ty, Term::app(big_f.clone(), Term::fold(m, big_f)))
}

fn erase_keeping_first_fold(t: &Term) -> Term {
    fn go(t: &Term, kept: &mut bool) -> Term {
        match t.kind() {
            TermKind::Fold(ty, a) if !*kept => {
                *kept = true;
                Term::fold(ty.clone(), go(a, kept))
            }
            TermKind::Fold(_, a) | TermKind::Unfold(_, a) => go(a, kept),
            _ => {
                let kids = t.children().into_iter().map(|k| go(k, kept)).collect();
                t.with_children(kids)
            }
        }
    }
    go(t, &mut false)
}

/// `compile` with a fault injected.
pub fn compile_faulty(which: Compiler, fault: Fault, t: &Term) -> Term {
    let out = match fault {
        Fault::FlipBool => compile(which, t),
        Fault::YFix => {
            let iso = t.map_bottom_up(&mut |s| match s.kind() {
                TermKind::Fix(ty, body) => Some(Term::app(y_combinator(ty), body.clone())),
                _ => None,
            });
            match which {
                Compiler::FI => iso,
                _ => compile(Compiler::IE, &iso),
            }
        }
        Fault::KeepFold => match which {
            Compiler::FI => compile(which, t),
            Compiler::IE => erase_keeping_first_fold(t),
            Compiler::FE => erase_keeping_first_fold(&compile_fix_iso(t)),
        },
    };
    if fault == Fault::FlipBool {
        out.map_bottom_up(&mut |s| match s.kind() {
            TermKind::True => Some(Term::ff()),
            TermKind::False => Some(Term::tt()),
            _ => None,
        })
    } else {
        out
    }
}

/// Fuel granted to a compiled program whose source took (or was allowed)
/// `fuel` steps.
pub fn target_fuel(fuel: u64) -> u64 {
    fuel.saturating_mul(10).saturating_add(1000)
}

/// Check one source term against its compilation. Returns the record and
/// the failure, if any.
pub fn check_compiled(
    which: Compiler,
    fault: Option<Fault>,
    id: &str,
    seed: u64,
    t: &Term,
    ty: &ObjType,
    fuel: u64,
) -> (CaseRecord, Option<Failure>) {
    let c = match fault {
        None => compile(which, t),
        Some(f) => compile_faulty(which, f, t),
    };
    // The target gets fuel linear in the source's actual steps; a source
    // that runs out of fuel is rerun with the target's larger budget when
    // the target terminates.
    let mut src = eval(t, fuel);
    let budget = if src.terminated() { target_fuel(src.steps()) } else { target_fuel(fuel) };
    let tgt = eval(&c, budget);
    if src.out_of_fuel() && tgt.terminated() {
        src = eval(t, budget);
    }
    let reason = if let Err(e) = check(which.target(), &TypeEnv::empty(), &c, ty) {
        Some(format!("type preservation: {e}"))
    } else {
        match (&src, &tgt) {
            (EvalOutcome::Stuck { .. }, _) => Some("source is stuck".to_string()),
            (_, EvalOutcome::Stuck { .. }) => Some("target is stuck".to_string()),
            (EvalOutcome::Value { v: a, steps: k }, EvalOutcome::Value { v: b, steps: k2 }) => {
                if a != b {
                    Some("different values".to_string())
                } else if which == Compiler::IE && k2 > k {
                    Some(format!("erasure took {k2} steps, source {k}"))
                } else {
                    None
                }
            }
            (EvalOutcome::Value { .. }, _) => Some("source terminates, target does not".to_string()),
            (_, EvalOutcome::Value { .. }) => Some("target terminates, source does not".to_string()),
            _ => None,
        }
    };
    let record = CaseRecord {
        case_id: id.to_string(),
        seed,
        verdict: if reason.is_none() { Verdict::Pass } else { Verdict::Fail },
        steps_source: src.terminated().then(|| src.steps()),
        steps_target: tgt.terminated().then(|| tgt.steps()),
        shrink_bound: if tgt.terminated() { find_shrink_bound(&c, tgt.steps()) } else { None },
    };
    let failure = reason.map(|reason| Failure {
        case_id: id.to_string(),
        seed,
        reason,
        term: t.to_string(),
        context: None,
        outcome_source: src.to_string(),
        outcome_target: tgt.to_string(),
    });
    (record, failure)
}

/// Generate `count` base-type source terms and check each against its
/// compilation: type preservation, equi-termination, equal values, and for
/// erasure no more steps than the source.
pub fn campaign_compiler(which: Compiler, count: usize, fuel: u64, cfg: &GenConfig) -> CampaignReport {
    campaign_compiler_with(which, None, count, fuel, cfg)
}

/// As [`campaign_compiler`], optionally with a fault injected.
pub fn campaign_compiler_with(which: Compiler, fault: Option<Fault>, count: usize, fuel: u64, cfg: &GenConfig) -> CampaignReport {
    let cfg = GenConfig { lang: which.source(), ..cfg.clone() };
    with_big_stack(move || {
        let start = Instant::now();
        let label = match fault {
            None => format!("compiler {which}"),
            Some(f) => format!("compiler {which} with {f:?}"),
        };
        let mut report = CampaignReport::new(label);
        for i in 0..count as u64 {
            let seed = case_seed(cfg.seed, i);
            let mut g = TermGen::new(&cfg.with_seed(seed));
            let ty = if g.rng().gen_bool(0.5) { ObjType::bool() } else { ObjType::unit() };
            let t = g.gen_term(&ty);
            let id = format!("{which}-{i:04}");
            if let Err(e) = check(cfg.lang, &TypeEnv::empty(), &t, &ty) {
                report.push(
                    CaseRecord { case_id: id.clone(), seed, verdict: Verdict::Fail, steps_source: None, steps_target: None, shrink_bound: None },
                    Some(Failure {
                        case_id: id,
                        seed,
                        reason: format!("generator produced an ill-typed term: {e}"),
                        term: t.to_string(),
                        context: None,
                        outcome_source: String::new(),
                        outcome_target: String::new(),
                    }),
                );
                continue;
            }
            let (rec, fail) = check_compiled(which, fault, &id, seed, &t, &ty, fuel);
            if rec.steps_source.is_none() {
                report.bump("source_diverged");
            }
            report.push(rec, fail);
        }
        report.wall_time = start.elapsed();
        report
    })
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{suite}:{line}: {msg}")]
    Format { suite: String, line: usize, msg: String },
    #[error("{suite}:{line}: {err}")]
    Parse { suite: String, line: usize, err: ParseError },
}

/// A curated context with its hole type and plugged terms.
#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub id: String,
    pub hole: ObjType,
    pub ctx: ProgCtx,
    pub ctx_lang: Lang,
    pub terms: Vec<Term>,
    /// λF, or λI when the hole type is recursive.
    pub term_lang: Lang,
}

pub const ISO_SUITE: &str = include_str!("../suite/iso.ctx");
pub const EQUI_SUITE: &str = include_str!("../suite/equi.ctx");
pub const FA_PAIRS: &str = include_str!("../suite/fa.pairs");

/// Parse a suite file: entries start with `hole:`, followed by one `ctx:`
/// line and any number of `term:` lines. `#` starts a comment.
pub fn load_suite(suite: &str, text: &str, ctx_lang: Lang) -> Result<Vec<SuiteEntry>, SuiteError> {
    let mut out: Vec<SuiteEntry> = Vec::new();
    let mut pending_hole: Option<(ObjType, usize)> = None;
    let fmt_err = |line: usize, msg: &str| SuiteError::Format { suite: suite.to_string(), line, msg: msg.to_string() };
    let parse_err = |line: usize, err: ParseError| SuiteError::Parse { suite: suite.to_string(), line, err };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (key, val) = l.split_once(':').ok_or_else(|| fmt_err(line, "expected `key: value`"))?;
        let val = val.trim();
        match key.trim() {
            "hole" => {
                if pending_hole.is_some() {
                    return Err(fmt_err(line, "`hole:` without `ctx:`"));
                }
                let t = parse_type(val, Lang::Iso).map_err(|e| parse_err(line, e))?;
                if ctx_lang == Lang::Iso && !t.is_mu_free() {
                    return Err(fmt_err(line, "hole types of λI contexts must be λF types"));
                }
                pending_hole = Some((t, line));
            }
            "ctx" => {
                let (hole, _) = pending_hole.take().ok_or_else(|| fmt_err(line, "`ctx:` before `hole:`"))?;
                let ctx = parse_ctx(val, ctx_lang).map_err(|e| parse_err(line, e))?;
                let term_lang = if hole.is_mu_free() { Lang::Fix } else { Lang::Iso };
                out.push(SuiteEntry { id: format!("{suite}-{:02}", out.len() + 1), hole, ctx, ctx_lang, terms: Vec::new(), term_lang });
            }
            "term" => {
                let e = out.last_mut().ok_or_else(|| fmt_err(line, "`term:` before any entry"))?;
                let t = parse_term(val, e.term_lang).map_err(|err| parse_err(line, err))?;
                e.terms.push(t);
            }
            _ => return Err(fmt_err(line, "unknown key")),
        }
    }
    if pending_hole.is_some() {
        return Err(fmt_err(text.lines().count(), "`hole:` without `ctx:`"));
    }
    Ok(out)
}

/// The λI contexts backtranslated into λF.
pub fn iso_suite() -> Vec<SuiteEntry> {
    load_suite("iso", ISO_SUITE, Lang::Iso).expect("embedded iso suite")
}

/// The λE contexts backtranslated into λI and λF.
pub fn equi_suite() -> Vec<SuiteEntry> {
    load_suite("equi", EQUI_SUITE, Lang::Equi).expect("embedded equi suite")
}

/// One backtranslation case: a target context, a source term and the
/// source hole type.
#[derive(Clone, Debug)]
pub struct BacktrCase {
    pub id: String,
    pub seed: u64,
    pub ctx: ProgCtx,
    pub term: Term,
    pub hole: ObjType,
}

/// The suite of `dir`, each entry filled to `per_entry` terms with small
/// generated λF terms of its hole type.
pub fn backtr_suite(dir: Direction, per_entry: usize, seed: u64) -> Vec<BacktrCase> {
    let entries = if dir == Direction::FI { iso_suite() } else { equi_suite() };
    let mut out = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if e.term_lang == Lang::Iso && dir != Direction::IC {
            continue;
        }
        let mut terms: Vec<(Term, u64)> = e.terms.iter().map(|t| (t.clone(), 0)).collect();
        let mut k = 0u64;
        while terms.len() < per_entry {
            let s = case_seed(seed ^ ((i as u64) << 20), k);
            k += 1;
            let cfg = GenConfig::new(e.term_lang, s).with_depth(2);
            let t = TermGen::new(&cfg).gen_term(&e.hole);
            terms.push((t, s));
        }
        for (j, (t, s)) in terms.into_iter().take(per_entry).enumerate() {
            let term = if dir == Direction::IC && e.term_lang == Lang::Fix { compile_fix_iso(&t) } else { t };
            out.push(BacktrCase { id: format!("{}-t{j:02}", e.id), seed: s, ctx: e.ctx.clone(), term, hole: e.hole.clone() });
        }
    }
    out
}

fn compiler_of(dir: Direction) -> Compiler {
    match dir {
        Direction::FI => Compiler::FI,
        Direction::IC => Compiler::IE,
        Direction::FE => Compiler::FE,
    }
}

/// Check both approximation directions and the typing of each
/// backtranslated context:
///
/// * if `C[compile t]` shrink-terminates within `n`, `⟨⟨C⟩⟩n[t]` terminates;
/// * if `⟨⟨C⟩⟩n[t]` terminates, so does `C[compile t]`.
pub fn campaign_backtr(dir: Direction, suite: &[BacktrCase], n: u32, fuel: u64) -> CampaignReport {
    let suite = suite.to_vec();
    with_big_stack(move || {
        let start = Instant::now();
        let mut report = CampaignReport::new(format!("backtranslation {dir} n={n}"));
        let mut bt = Backtranslator::new(dir);
        for case in &suite {
            let (rec, fail, premise) = check_backtr_case(&mut bt, case, n, fuel);
            if premise {
                report.bump("shrink_premise_held");
            }
            report.push(rec, fail);
        }
        report.wall_time = start.elapsed();
        report
    })
}

fn check_backtr_case(bt: &mut Backtranslator, case: &BacktrCase, n: u32, fuel: u64) -> (CaseRecord, Option<Failure>, bool) {
    let dir = bt.dir();
    let mut record = CaseRecord {
        case_id: case.id.clone(),
        seed: case.seed,
        verdict: Verdict::Fail,
        steps_source: None,
        steps_target: None,
        shrink_bound: None,
    };
    let fail = |reason: String, src: String, tgt: String| Failure {
        case_id: case.id.clone(),
        seed: case.seed,
        reason,
        term: case.term.to_string(),
        context: Some(case.ctx.to_string()),
        outcome_source: src,
        outcome_target: tgt,
    };
    let d = match typecheck_ctx_closed(dir.target(), &case.ctx, &case.hole) {
        Ok(d) => d,
        Err(e) => return (record, Some(fail(format!("context does not typecheck: {e}"), String::new(), String::new())), false),
    };
    let b = bt.backtranslate_derivation(n, &d);
    let want = bt.uval(n, &d.ty);
    match typecheck_ctx_closed(dir.source(), &b, &case.hole) {
        Ok(bd) if bd.ty == want => {}
        Ok(bd) => {
            let msg = format!("backtranslated context has type {}, expected {want}", bd.ty);
            return (record, Some(fail(msg, String::new(), String::new())), false);
        }
        Err(e) => return (record, Some(fail(format!("backtranslated context does not typecheck: {e}"), String::new(), String::new())), false),
    }
    let p = case.ctx.plug(&compile(compiler_of(dir), &case.term));
    let q = b.plug(&case.term);
    let p_out = eval(&p, fuel);
    let q_out = eval(&q, fuel);
    let bound = find_shrink_bound(&p, fuel);
    record.steps_target = p_out.terminated().then(|| p_out.steps());
    record.steps_source = q_out.terminated().then(|| q_out.steps());
    record.shrink_bound = bound;
    let premise = bound.is_some_and(|k| k <= n as u64);
    let reason = if p_out.is_stuck() || q_out.is_stuck() {
        Some("stuck program".to_string())
    } else if premise && !q_out.terminated() {
        Some(format!("target shrink-terminates within {n} but the backtranslation does not terminate"))
    } else if q_out.terminated() && !p_out.terminated() {
        Some("backtranslation terminates but the target program does not".to_string())
    } else {
        None
    };
    if reason.is_none() {
        record.verdict = Verdict::Pass;
    }
    let failure = reason.map(|r| fail(r, q_out.to_string(), p_out.to_string()));
    (record, failure, premise)
}

/// Replace the λI divergent terms emitted by the backtranslation with
/// their λF counterparts.
pub fn iso_omegas_to_fix(t: &Term) -> Term {
    fn omega_type(t: &Term) -> Option<ObjType> {
        let TermKind::App(f, a) = t.kind() else { return None };
        let TermKind::Fold(m, g) = a.kind() else { return None };
        if f != g {
            return None;
        }
        let TermKind::Lam(x, xm, body) = f.kind() else { return None };
        let TermKind::App(u, y) = body.kind() else { return None };
        let TermKind::Unfold(um, z) = u.kind() else { return None };
        let is_x = |v: &Term| matches!(v.kind(), TermKind::Var(w) if w == x);
        if !(is_x(y) && is_x(z) && xm == m && um == m) {
            return None;
        }
        let TypeKind::Mu(a, arrow) = m.kind() else { return None };
        let TypeKind::Arrow(dom, cod) = arrow.kind() else { return None };
        (matches!(dom.kind(), TypeKind::TVar(b) if b == a) && !cod.has_free_tvar(a)).then(|| cod.clone())
    }
    if t.holes() == 0 && t.is_closed() {
        if let Some(ty) = omega_type(t) {
            return crate::backtranslation::omega(Lang::Fix, &ty);
        }
    }
    let kids: Vec<Term> = t.children().into_iter().map(iso_omegas_to_fix).collect();
    if kids.is_empty() {
        t.clone()
    } else {
        t.with_children(kids)
    }
}

/// Check that the FE backtranslation of every λF-hole entry of `entries`
/// equals its IC backtranslation with the λI divergent terms replaced by
/// λF ones. Returns the number of contexts compared.
pub fn check_fe_is_fi_ic(entries: &[SuiteEntry], n: u32) -> Result<usize, String> {
    with_big_stack(|| {
        let mut ic = Backtranslator::new(Direction::IC);
        let mut fe = Backtranslator::new(Direction::FE);
        let mut compared = 0;
        for e in entries.iter().filter(|e| e.term_lang == Lang::Fix) {
            let d = typecheck_ctx_closed(Lang::Equi, &e.ctx, &e.hole).map_err(|err| format!("{}: {err}", e.id))?;
            let via_ic = iso_omegas_to_fix(ic.backtranslate_derivation(n, &d).term());
            let direct = fe.backtranslate_derivation(n, &d);
            if &via_ic != direct.term() {
                return Err(format!("{}: FE backtranslation differs from the IC one", e.id));
            }
            compared += 1;
        }
        Ok(compared)
    })
}

// ---------------------------------------------------------------------------
// Full-abstraction smoke test
// ---------------------------------------------------------------------------

/// Two λF terms of the same type that some context tells apart.
#[derive(Clone, Debug)]
pub struct FaPair {
    pub id: String,
    pub ty: ObjType,
    pub t1: Term,
    pub t2: Term,
}

/// Parse `type:`/`t1:`/`t2:` triples.
pub fn load_fa_pairs(text: &str) -> Result<Vec<FaPair>, SuiteError> {
    let mut out = Vec::new();
    let mut cur: (Option<ObjType>, Option<Term>) = (None, None);
    let fmt_err = |line: usize, msg: &str| SuiteError::Format { suite: "fa".into(), line, msg: msg.into() };
    let parse_err = |line: usize, err| SuiteError::Parse { suite: "fa".into(), line, err };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (key, val) = l.split_once(':').ok_or_else(|| fmt_err(line, "expected `key: value`"))?;
        let val = val.trim();
        match key.trim() {
            "type" => cur = (Some(parse_type(val, Lang::Fix).map_err(|e| parse_err(line, e))?), None),
            "t1" => cur.1 = Some(parse_term(val, Lang::Fix).map_err(|e| parse_err(line, e))?),
            "t2" => {
                let (Some(ty), Some(t1)) = cur.clone() else { return Err(fmt_err(line, "`t2:` needs `type:` and `t1:`")) };
                let t2 = parse_term(val, Lang::Fix).map_err(|e| parse_err(line, e))?;
                out.push(FaPair { id: format!("fa-{:02}", out.len() + 1), ty, t1, t2 });
                cur = (None, None);
            }
            _ => return Err(fmt_err(line, "unknown key")),
        }
    }
    Ok(out)
}

pub fn fa_pairs() -> Vec<FaPair> {
    load_fa_pairs(FA_PAIRS).expect("embedded pairs")
}

/// A pair told apart by a target context and by its backtranslation.
#[derive(Clone, Debug)]
pub struct Distinction {
    pub ctx_id: String,
    pub n: u32,
    /// Whether `t1` is the terminating side.
    pub first_terminates: bool,
    pub target_steps: u64,
    pub source_steps: u64,
}

/// Find a suite context whose target pluggings of the compiled pair differ
/// in termination, then check that its backtranslation (at
/// `max(min_n, bound + 1)`) differs the same way on the source pair.
pub fn distinguish(dir: Direction, pair: &FaPair, entries: &[SuiteEntry], min_n: u32, fuel: u64) -> Result<Distinction, String> {
    with_big_stack(|| distinguish_here(dir, pair, entries, min_n, fuel))
}

fn distinguish_here(dir: Direction, pair: &FaPair, entries: &[SuiteEntry], min_n: u32, fuel: u64) -> Result<Distinction, String> {
    let which = compiler_of(dir);
    let (s1, s2) = match dir {
        Direction::IC => (compile_fix_iso(&pair.t1), compile_fix_iso(&pair.t2)),
        _ => (pair.t1.clone(), pair.t2.clone()),
    };
    let mut tried = Vec::new();
    for e in entries.iter().filter(|e| e.hole.alpha_eq(&pair.ty)) {
        let p1 = e.ctx.plug(&compile(which, &s1));
        let p2 = e.ctx.plug(&compile(which, &s2));
        let (o1, o2) = (eval(&p1, fuel), eval(&p2, fuel));
        if o1.terminated() == o2.terminated() {
            tried.push(e.id.clone());
            continue;
        }
        let first_terminates = o1.terminated();
        let (p_term, t_term, t_div) = if first_terminates { (&p1, &s1, &s2) } else { (&p2, &s2, &s1) };
        let bound = find_shrink_bound(p_term, fuel).ok_or("terminating program without shrink bound")?;
        let n = min_n.max(bound as u32 + 1);
        let d = typecheck_ctx_closed(dir.target(), &e.ctx, &pair.ty).map_err(|err| err.to_string())?;
        let b = Backtranslator::new(dir).backtranslate_derivation(n, &d);
        let q_term = eval(&b.plug(t_term), fuel);
        let q_div = eval(&b.plug(t_div), fuel);
        if !q_term.terminated() || q_div.terminated() {
            return Err(format!(
                "{}: target context {} separates the pair but its backtranslation at n={n} gives {} / {}",
                pair.id,
                e.id,
                q_term.label(),
                q_div.label()
            ));
        }
        return Ok(Distinction {
            ctx_id: e.id.clone(),
            n,
            first_terminates,
            target_steps: if first_terminates { o1.steps() } else { o2.steps() },
            source_steps: q_term.steps(),
        });
    }
    Err(format!("{}: no suite context separates the pair (tried {})", pair.id, tried.join(", ")))
}
