//! Approximate backtranslation of target contexts into source contexts.
//!
//! `uval(n, τ)` is the source type of emulated values of target type `τ`
//! with precision `n`. Every helper (`upgrade`, `downgrade`, `casetag`,
//! `indn`, `caseup`, `inject`, `extract`, `omega`) is emitted as a closed
//! lambda and applied, never inlined. A [`Backtranslator`] memoises helpers
//! per `(n, d, τ)`, so emitted terms are DAGs sharing their helpers.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::statics::{typecheck_ctx_closed, CtxDerivation, Derivation, Rule, TypeError};
use crate::syntax::{check_type_lang, Lang, ObjType, ProgCtx, Term, TermKind, TypeEnv, TypeKind};

/// Which backtranslation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// λI contexts into λF.
    FI,
    /// λE contexts into λI.
    IC,
    /// λE contexts into λF.
    FE,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::FI, Direction::IC, Direction::FE];

    /// Language of the contexts being backtranslated.
    pub fn target(self) -> Lang {
        match self {
            Direction::FI => Lang::Iso,
            Direction::IC | Direction::FE => Lang::Equi,
        }
    }

    /// Language of the produced contexts.
    pub fn source(self) -> Lang {
        match self {
            Direction::FI | Direction::FE => Lang::Fix,
            Direction::IC => Lang::Iso,
        }
    }

    /// Whether the μ case of `uval` decrements and adds a failure summand.
    fn iso(self) -> bool {
        self == Direction::FI
    }

    pub fn from_name(s: &str) -> Option<Direction> {
        match s.to_ascii_uppercase().as_str() {
            "FI" => Some(Direction::FI),
            "IC" => Some(Direction::IC),
            "FE" => Some(Direction::FE),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::FI => "FI",
            Direction::IC => "IC",
            Direction::FE => "FE",
        })
    }
}

/// `(direction, n, τ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UValIndex {
    pub dir: Direction,
    pub n: u32,
    pub ty: ObjType,
}

impl UValIndex {
    pub fn new(dir: Direction, n: u32, ty: ObjType) -> UValIndex {
        UValIndex { dir, n, ty }
    }
}

#[derive(Debug, Error, Clone)]
pub enum BacktrError {
    #[error("type `{ty}` is not a valid {lang} type: {why}")]
    BadType { ty: ObjType, lang: Lang, why: &'static str },
    #[error("{helper} is undefined at the recursive type `{ty}` under {dir}")]
    MuIndex { helper: &'static str, dir: Direction, ty: ObjType },
    #[error("{helper} needs n ≥ 1")]
    ZeroIndex { helper: &'static str },
    #[error("context does not typecheck with hole type `{hole}`: {err}")]
    Context { hole: ObjType, err: TypeError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Helper {
    Up,
    Down,
    CaseTag,
    InDn,
    CaseUp,
    Inject,
    Extract,
    Omega,
}

/// Helper generator for one direction, with memo tables.
pub struct Backtranslator {
    dir: Direction,
    uvals: HashMap<(u32, ObjType), ObjType>,
    helpers: HashMap<(Helper, u32, u32, ObjType), Term>,
}

fn x() -> Term {
    Term::var("x")
}

impl Backtranslator {
    pub fn new(dir: Direction) -> Backtranslator {
        Backtranslator { dir, uvals: HashMap::new(), helpers: HashMap::new() }
    }

    pub fn dir(&self) -> Direction {
        self.dir
    }

    fn memo(&mut self, h: Helper, n: u32, d: u32, t: &ObjType, make: impl FnOnce(&mut Self) -> Term) -> Term {
        let key = (h, n, d, t.clone());
        if let Some(r) = self.helpers.get(&key) {
            return r.clone();
        }
        let r = make(self);
        self.helpers.insert(key, r.clone());
        r
    }

    /// `uval(n, τ)`; `τ` is assumed closed and contractive.
    pub fn uval(&mut self, n: u32, t: &ObjType) -> ObjType {
        if n == 0 {
            return ObjType::unit();
        }
        let key = (n, t.clone());
        if let Some(r) = self.uvals.get(&key) {
            return r.clone();
        }
        let fail = ObjType::unit;
        let r = match t.kind() {
            TypeKind::Unit => ObjType::sum(ObjType::unit(), fail()),
            TypeKind::Bool => ObjType::sum(ObjType::bool(), fail()),
            TypeKind::Arrow(a, b) => ObjType::sum(ObjType::arrow(self.uval(n - 1, a), self.uval(n - 1, b)), fail()),
            TypeKind::Prod(a, b) => ObjType::sum(ObjType::prod(self.uval(n - 1, a), self.uval(n - 1, b)), fail()),
            TypeKind::Sum(a, b) => ObjType::sum(ObjType::sum(self.uval(n - 1, a), self.uval(n - 1, b)), fail()),
            TypeKind::Mu(..) if self.dir.iso() => ObjType::sum(self.uval(n - 1, &t.unfold()), fail()),
            TypeKind::Mu(..) => self.uval(n, &t.unfold()),
            TypeKind::TVar(a) => panic!("uval of open type variable {a}"),
        };
        self.uvals.insert(key, r.clone());
        r
    }

    /// Payload of the `inl` summand of `uval(n + 1, τ)`. Undefined for μ
    /// under IC/FE.
    fn comp(&mut self, n: u32, t: &ObjType) -> ObjType {
        match t.kind() {
            TypeKind::Unit => ObjType::unit(),
            TypeKind::Bool => ObjType::bool(),
            TypeKind::Arrow(a, b) => ObjType::arrow(self.uval(n, a), self.uval(n, b)),
            TypeKind::Prod(a, b) => ObjType::prod(self.uval(n, a), self.uval(n, b)),
            TypeKind::Sum(a, b) => ObjType::sum(self.uval(n, a), self.uval(n, b)),
            TypeKind::Mu(..) if self.dir.iso() => self.uval(n, &t.unfold()),
            _ => panic!("no component type for `{t}` under {}", self.dir),
        }
    }

    /// A divergent source term of type `τ`.
    pub fn omega(&mut self, t: &ObjType) -> Term {
        let lang = self.dir.source();
        self.memo(Helper::Omega, 0, 0, t, |_| omega(lang, t))
    }

    /// `unk_d`: `unit` at `d = 0`, otherwise `inr unit`.
    pub fn unk(d: u32) -> Term {
        if d == 0 {
            Term::unit()
        } else {
            Term::inr(Term::unit())
        }
    }

    /// `upgrade(n; d; τ) : uval(n, τ) → uval(n + d, τ)`.
    pub fn upgrade(&mut self, n: u32, d: u32, t: &ObjType) -> Term {
        self.memo(Helper::Up, n, d, t, |g| {
            if n == 0 {
                return Term::lam("x", ObjType::unit(), Self::unk(d));
            }
            match t.kind() {
                TypeKind::Unit | TypeKind::Bool => Term::lam("x", g.uval(n, t), x()),
                TypeKind::Mu(..) if !g.dir.iso() => g.upgrade(n, d, &t.unfold()),
                _ => {
                    let m = g.map_payload(true, n - 1, d, t);
                    Term::lam("x", g.uval(n, t), g.case_inl(m))
                }
            }
        })
    }

    /// `downgrade(n; d; τ) : uval(n + d, τ) → uval(n, τ)`.
    pub fn downgrade(&mut self, n: u32, d: u32, t: &ObjType) -> Term {
        self.memo(Helper::Down, n, d, t, |g| {
            if n == 0 {
                return Term::lam("x", g.uval(d, t), Term::unit());
            }
            match t.kind() {
                TypeKind::Unit | TypeKind::Bool => Term::lam("x", g.uval(n + d, t), x()),
                TypeKind::Mu(..) if !g.dir.iso() => g.downgrade(n, d, &t.unfold()),
                _ => {
                    let m = g.map_payload(false, n - 1, d, t);
                    Term::lam("x", g.uval(n + d, t), g.case_inl(m))
                }
            }
        })
    }

    /// `case x of inl x1 → inl m | inr x2 → inr x2`.
    fn case_inl(&self, m: Term) -> Term {
        Term::case(x(), "x1", Term::inl(m), "x2", Term::inr(Term::var("x2")))
    }

    /// Convert the payload `x1` between levels `k` and `k + d` (up) or
    /// `k + d` and `k` (down).
    fn map_payload(&mut self, up: bool, k: u32, d: u32, t: &ObjType) -> Term {
        let x1 = Term::var("x1");
        let f = |g: &mut Self, s: &ObjType| if up { g.upgrade(k, d, s) } else { g.downgrade(k, d, s) };
        match t.kind() {
            TypeKind::Prod(a, b) => {
                let (fa, fb) = (f(self, a), f(self, b));
                Term::pair(Term::app(fa, Term::proj1(x1.clone())), Term::app(fb, Term::proj2(x1)))
            }
            TypeKind::Sum(a, b) => {
                let (fa, fb) = (f(self, a), f(self, b));
                Term::case(x1, "y", Term::inl(Term::app(fa, Term::var("y"))), "y", Term::inr(Term::app(fb, Term::var("y"))))
            }
            TypeKind::Arrow(a, b) => {
                // Contravariant in the domain.
                let (dom_level, conv_a) = if up {
                    (k + d, self.downgrade(k, d, a))
                } else {
                    (k, self.upgrade(k, d, a))
                };
                let fb = f(self, b);
                let z_ty = self.uval(dom_level, a);
                Term::lam("z", z_ty, Term::app(fb, Term::app(x1, Term::app(conv_a, Term::var("z")))))
            }
            TypeKind::Mu(..) => {
                let fu = f(self, &t.unfold());
                Term::app(fu, x1)
            }
            _ => unreachable!("base types are handled by the caller"),
        }
    }

    /// `casetag` indexed by its output level: `uval(n + 1, τ) → comp(n, τ)`.
    pub fn casetag_at(&mut self, n: u32, t: &ObjType) -> Term {
        self.memo(Helper::CaseTag, n, 0, t, |g| {
            let c = g.comp(n, t);
            let om = g.omega(&c);
            Term::lam("x", g.uval(n + 1, t), Term::case(x(), "x1", Term::var("x1"), "x2", om))
        })
    }

    /// `indn(n; τ) : comp(n, τ) → uval(n, τ)`.
    pub fn indn(&mut self, n: u32, t: &ObjType) -> Term {
        self.memo(Helper::InDn, n, 1, t, |g| {
            let down = g.downgrade(n, 1, t);
            Term::lam("x", g.comp(n, t), Term::app(down, Term::inl(x())))
        })
    }

    /// `caseup(n; τ) : uval(n, τ) → comp(n, τ)`.
    pub fn caseup(&mut self, n: u32, t: &ObjType) -> Term {
        self.memo(Helper::CaseUp, n, 1, t, |g| {
            let tag = g.casetag_at(n, t);
            let up = g.upgrade(n, 1, t);
            Term::lam("x", g.uval(n, t), Term::app(tag, Term::app(up, x())))
        })
    }

    /// `inject(n; τ) : τ → uval(n, τ)` for a source type `τ`.
    pub fn inject(&mut self, n: u32, t: &ObjType) -> Term {
        self.memo(Helper::Inject, n, 0, t, |g| {
            if n == 0 {
                return Term::lam("x", t.clone(), Term::unit());
            }
            let k = n - 1;
            let body = match t.kind() {
                TypeKind::Unit | TypeKind::Bool => Term::inl(x()),
                TypeKind::Arrow(a, b) => {
                    let (ib, ea) = (g.inject(k, b), g.extract(k, a));
                    let y_ty = g.uval(k, a);
                    Term::inl(Term::lam("y", y_ty, Term::app(ib, Term::app(x(), Term::app(ea, Term::var("y"))))))
                }
                TypeKind::Prod(a, b) => {
                    let (ia, ib) = (g.inject(k, a), g.inject(k, b));
                    Term::inl(Term::pair(Term::app(ia, Term::proj1(x())), Term::app(ib, Term::proj2(x()))))
                }
                TypeKind::Sum(a, b) => {
                    let (ia, ib) = (g.inject(k, a), g.inject(k, b));
                    Term::inl(Term::case(
                        x(),
                        "y",
                        Term::inl(Term::app(ia, Term::var("y"))),
                        "y",
                        Term::inr(Term::app(ib, Term::var("y"))),
                    ))
                }
                TypeKind::Mu(..) => {
                    let inner = g.inject(n, &t.unfold());
                    Term::app(inner, Term::unfold(t.clone(), x()))
                }
                TypeKind::TVar(a) => panic!("inject at open type variable {a}"),
            };
            Term::lam("x", t.clone(), body)
        })
    }

    /// `extract(n; τ) : uval(n, τ) → τ` for a source type `τ`.
    pub fn extract(&mut self, n: u32, t: &ObjType) -> Term {
        self.memo(Helper::Extract, n, 0, t, |g| {
            if n == 0 {
                let om = g.omega(t);
                return Term::lam("x", ObjType::unit(), om);
            }
            if let TypeKind::Mu(..) = t.kind() {
                let inner = g.extract(n, &t.unfold());
                return Term::lam("x", g.uval(n, t), Term::fold(t.clone(), Term::app(inner, x())));
            }
            let k = n - 1;
            let tag = g.casetag_at(k, t);
            if matches!(t.kind(), TypeKind::Unit | TypeKind::Bool) {
                return tag;
            }
            let tagged = Term::app(tag, x());
            let body = match t.kind() {
                TypeKind::Arrow(a, b) => {
                    let (eb, ia) = (g.extract(k, b), g.inject(k, a));
                    Term::lam("y", a.clone(), Term::app(eb, Term::app(tagged, Term::app(ia, Term::var("y")))))
                }
                TypeKind::Prod(a, b) => {
                    let (ea, eb) = (g.extract(k, a), g.extract(k, b));
                    Term::pair(Term::app(ea, Term::proj1(tagged.clone())), Term::app(eb, Term::proj2(tagged)))
                }
                TypeKind::Sum(a, b) => {
                    let (ea, eb) = (g.extract(k, a), g.extract(k, b));
                    Term::case(
                        tagged,
                        "y",
                        Term::inl(Term::app(ea, Term::var("y"))),
                        "y",
                        Term::inr(Term::app(eb, Term::var("y"))),
                    )
                }
                _ => unreachable!(),
            };
            Term::lam("x", g.uval(n, t), body)
        })
    }

    /// For IC/FE a μ-type and its unfolding have the same `uval`, so the
    /// compacted helpers are taken at the first non-μ unfolding.
    fn head(&self, t: &ObjType) -> ObjType {
        if self.dir.iso() {
            t.clone()
        } else {
            t.unfold_all()
        }
    }

    /// Emulate a target derivation at precision `n`.
    pub fn emulate(&mut self, n: u32, d: &Derivation) -> Term {
        let kid = |i: usize| &d.children[i];
        match d.rule {
            Rule::Conv => self.emulate(n, kid(0)),
            Rule::Hole => Term::hole(),
            Rule::Var => d.term.clone(),
            Rule::Unit | Rule::True | Rule::False => {
                let w = self.indn(n, &d.ty);
                Term::app(w, d.term.clone())
            }
            Rule::Lam => {
                let TermKind::Lam(xn, a, _) = d.term.kind() else { unreachable!() };
                let body = self.emulate(n, kid(0));
                let ty = self.head(&d.ty);
                let w = self.indn(n, &ty);
                let x_ty = self.uval(n, a);
                Term::app(w, Term::lam_named(xn.clone(), x_ty, body))
            }
            Rule::Pair => {
                let (a, b) = (self.emulate(n, kid(0)), self.emulate(n, kid(1)));
                let w = self.indn(n, &self.head(&d.ty));
                Term::app(w, Term::pair(a, b))
            }
            Rule::Inl | Rule::Inr => {
                let a = self.emulate(n, kid(0));
                let w = self.indn(n, &self.head(&d.ty));
                let inj = if d.rule == Rule::Inl { Term::inl(a) } else { Term::inr(a) };
                Term::app(w, inj)
            }
            Rule::Fold => {
                let a = self.emulate(n, kid(0));
                let w = self.indn(n, &d.ty);
                Term::app(w, a)
            }
            Rule::App => {
                let (f, a) = (self.emulate(n, kid(0)), self.emulate(n, kid(1)));
                let w = self.caseup(n, &self.head(&kid(0).ty));
                Term::app(Term::app(w, f), a)
            }
            Rule::Proj1 | Rule::Proj2 => {
                let p = self.emulate(n, kid(0));
                let w = self.caseup(n, &self.head(&kid(0).ty));
                let s = Term::app(w, p);
                if d.rule == Rule::Proj1 {
                    Term::proj1(s)
                } else {
                    Term::proj2(s)
                }
            }
            Rule::Case => {
                let TermKind::Case(_, x1, _, x2, _) = d.term.kind() else { unreachable!() };
                let s = self.emulate(n, kid(0));
                let (b1, b2) = (self.emulate(n, kid(1)), self.emulate(n, kid(2)));
                let w = self.caseup(n, &self.head(&kid(0).ty));
                Term::case_named(Term::app(w, s), x1.clone(), b1, x2.clone(), b2)
            }
            Rule::If => {
                let c = self.emulate(n, kid(0));
                let (a, b) = (self.emulate(n, kid(1)), self.emulate(n, kid(2)));
                let w = self.caseup(n, &ObjType::bool());
                Term::ite(Term::app(w, c), a, b)
            }
            Rule::Seq => {
                let (a, b) = (self.emulate(n, kid(0)), self.emulate(n, kid(1)));
                let w = self.caseup(n, &ObjType::unit());
                Term::seq(Term::app(w, a), b)
            }
            Rule::Unfold => {
                let a = self.emulate(n, kid(0));
                let w = self.caseup(n, &kid(0).ty);
                Term::app(w, a)
            }
            Rule::Fix => panic!("fix cannot occur in a target derivation"),
        }
    }

    /// Emulate a context derivation; the hole stays a hole.
    pub fn emulate_ctx(&mut self, n: u32, d: &CtxDerivation) -> ProgCtx {
        ProgCtx::new(self.emulate(n, &d.root)).expect("emulation preserves the hole")
    }

    /// `emulate_ctx(C)[inject(n; τs) ·]` for a context already typed with
    /// hole type `τs`.
    pub fn backtranslate_derivation(&mut self, n: u32, d: &CtxDerivation) -> ProgCtx {
        let inj = self.inject(n, &d.hole_ty);
        let em = self.emulate_ctx(n, d);
        em.compose(&ProgCtx::new(Term::app(inj, Term::hole())).expect("one hole"))
    }
}

/// A closed divergent term of type `τ` in λF or λI.
pub fn omega(lang: Lang, t: &ObjType) -> Term {
    match lang {
        Lang::Fix => {
            let f_ty = ObjType::arrow(ObjType::unit(), t.clone());
            let body = Term::lam("f", f_ty.clone(), Term::lam("x", ObjType::unit(), Term::app(Term::var("f"), Term::var("x"))));
            Term::app(Term::fix(f_ty, body), Term::unit())
        }
        Lang::Iso | Lang::Equi => {
            let a = crate::compilers::fresh_tvar(t);
            let m = ObjType::mu(&a, ObjType::arrow(ObjType::tvar(&a), t.clone()));
            let self_app = Term::lam("x", m.clone(), Term::app(Term::unfold(m.clone(), x()), x()));
            let w = Term::app(self_app.clone(), Term::fold(m, self_app));
            if lang == Lang::Equi {
                crate::compilers::compile_iso_equi(&w)
            } else {
                w
            }
        }
    }
}

fn valid(lang: Lang, t: &ObjType) -> Result<(), BacktrError> {
    check_type_lang(lang, t).map_err(|why| BacktrError::BadType { ty: t.clone(), lang, why })
}

fn no_mu(helper: &'static str, ix: &UValIndex) -> Result<(), BacktrError> {
    if !ix.dir.iso() && ix.ty.is_mu() {
        Err(BacktrError::MuIndex { helper, dir: ix.dir, ty: ix.ty.clone() })
    } else {
        Ok(())
    }
}

pub fn uval(ix: &UValIndex) -> Result<ObjType, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    Ok(Backtranslator::new(ix.dir).uval(ix.n, &ix.ty))
}

pub fn unk(ix: &UValIndex) -> Term {
    Backtranslator::unk(ix.n)
}

/// `casetag : uval(n, τ) → comp(n - 1, τ)`, for `n ≥ 1`.
pub fn casetag(ix: &UValIndex) -> Result<Term, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    no_mu("casetag", ix)?;
    if ix.n == 0 {
        return Err(BacktrError::ZeroIndex { helper: "casetag" });
    }
    Ok(Backtranslator::new(ix.dir).casetag_at(ix.n - 1, &ix.ty))
}

pub fn upgrade(ix: &UValIndex, d: u32) -> Result<Term, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    Ok(Backtranslator::new(ix.dir).upgrade(ix.n, d, &ix.ty))
}

pub fn downgrade(ix: &UValIndex, d: u32) -> Result<Term, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    Ok(Backtranslator::new(ix.dir).downgrade(ix.n, d, &ix.ty))
}

pub fn indn(ix: &UValIndex) -> Result<Term, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    no_mu("indn", ix)?;
    Ok(Backtranslator::new(ix.dir).indn(ix.n, &ix.ty))
}

pub fn caseup(ix: &UValIndex) -> Result<Term, BacktrError> {
    valid(ix.dir.target(), &ix.ty)?;
    no_mu("caseup", ix)?;
    Ok(Backtranslator::new(ix.dir).caseup(ix.n, &ix.ty))
}

pub fn inject(dir: Direction, n: u32, t: &ObjType) -> Result<Term, BacktrError> {
    valid(dir.source(), t)?;
    Ok(Backtranslator::new(dir).inject(n, t))
}

pub fn extract(dir: Direction, n: u32, t: &ObjType) -> Result<Term, BacktrError> {
    valid(dir.source(), t)?;
    Ok(Backtranslator::new(dir).extract(n, t))
}

pub fn toemul(dir: Direction, env: &TypeEnv, n: u32) -> TypeEnv {
    let mut g = Backtranslator::new(dir);
    TypeEnv::from_pairs(env.bindings().iter().map(|(x, t)| (x.clone(), g.uval(n, t))))
}

pub fn emulate(dir: Direction, n: u32, d: &Derivation) -> Term {
    Backtranslator::new(dir).emulate(n, d)
}

pub fn emulate_ctx(dir: Direction, n: u32, d: &CtxDerivation) -> ProgCtx {
    Backtranslator::new(dir).emulate_ctx(n, d)
}

/// Type `C` in the target language with hole type `τs`, emulate it and
/// precompose the hole with `inject(n; τs)`.
pub fn backtranslate_ctx(dir: Direction, c: &ProgCtx, n: u32, hole_src: &ObjType) -> Result<ProgCtx, BacktrError> {
    valid(dir.source(), hole_src)?;
    let d = typecheck_ctx_closed(dir.target(), c, hole_src)
        .map_err(|err| BacktrError::Context { hole: hole_src.clone(), err })?;
    Ok(Backtranslator::new(dir).backtranslate_derivation(n, &d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eval;
    use crate::parse::{parse_ctx, parse_term, parse_type};
    use crate::print::type_unicode;
    use crate::statics::{check, typecheck, typecheck_ctx_closed};

    fn ty(s: &str) -> ObjType {
        parse_type(s, Lang::Iso).unwrap()
    }

    fn ix(dir: Direction, n: u32, t: &str) -> UValIndex {
        UValIndex::new(dir, n, ty(t))
    }

    fn run(t: Term, fuel: u64) -> crate::dynamics::EvalOutcome {
        eval(&t, fuel)
    }

    #[test]
    fn uval_examples() {
        assert_eq!(uval(&ix(Direction::FI, 0, "Bool")).unwrap(), ObjType::unit());
        assert_eq!(uval(&ix(Direction::FI, 1, "mu a. Unit + a")).unwrap(), ty("Unit + Unit"));
        let list = uval(&ix(Direction::FE, 3, "mu a. Unit + Bool * a")).unwrap();
        assert_eq!(type_unicode(&list), "((Unit⊎Unit)⊎(((Bool⊎Unit)×((Unit⊎Unit)⊎Unit))⊎Unit))⊎Unit");
        let bad = ObjType::mu("a", ObjType::tvar("a"));
        assert!(uval(&UValIndex::new(Direction::FE, 2, bad)).is_err());
    }

    #[test]
    fn omega_diverges() {
        for t in [ObjType::unit(), ObjType::bool(), ty("Bool -> Unit")] {
            let w = omega(Lang::Fix, &t);
            assert_eq!(typecheck(Lang::Fix, &TypeEnv::empty(), &w).unwrap().ty, t);
            assert!(run(w, 10_000).out_of_fuel());
            let w = omega(Lang::Iso, &t);
            assert_eq!(typecheck(Lang::Iso, &TypeEnv::empty(), &w).unwrap().ty, t);
            assert!(run(w, 10_000).out_of_fuel());
        }
    }

    #[test]
    fn unk_examples() {
        assert_eq!(unk(&ix(Direction::FI, 0, "Bool")), Term::unit());
        assert_eq!(unk(&ix(Direction::FI, 2, "Bool")), Term::inr(Term::unit()));
        let i = ix(Direction::FI, 2, "Bool");
        check(Lang::Fix, &TypeEnv::empty(), &unk(&i), &uval(&i).unwrap()).unwrap();
    }

    #[test]
    fn casetag_examples() {
        let c = casetag(&ix(Direction::FI, 1, "Bool")).unwrap();
        assert_eq!(run(Term::app(c.clone(), Term::inl(Term::tt())), 10).value(), Some(&Term::tt()));
        assert!(run(Term::app(c, Term::inr(Term::unit())), 10_000).out_of_fuel());
        assert!(matches!(casetag(&ix(Direction::FE, 2, "mu a. Unit + a")), Err(BacktrError::MuIndex { .. })));
        assert!(casetag(&ix(Direction::FI, 0, "Bool")).is_err());
    }

    #[test]
    fn up_and_down() {
        let down = downgrade(&ix(Direction::FI, 0, "Bool"), 1).unwrap();
        assert_eq!(run(Term::app(down, Term::inl(Term::tt())), 10).value(), Some(&Term::unit()));
        let up = upgrade(&ix(Direction::FI, 0, "Bool"), 1).unwrap();
        assert_eq!(run(Term::app(up, Term::unit()), 10).value(), Some(&Term::inr(Term::unit())));
        let i = ix(Direction::FI, 1, "Bool");
        let v = Term::inl(Term::tt());
        let rt = Term::app(downgrade(&i, 1).unwrap(), Term::app(upgrade(&i, 1).unwrap(), v.clone()));
        assert_eq!(run(rt, 100).value(), Some(&v));
    }

    #[test]
    fn compacted_helpers() {
        let w = indn(&ix(Direction::FI, 1, "Unit")).unwrap();
        assert_eq!(run(Term::app(w, Term::unit()), 10).value(), Some(&Term::inl(Term::unit())));
        let i = ix(Direction::FI, 1, "Bool");
        let t = Term::app(caseup(&i).unwrap(), Term::app(indn(&i).unwrap(), Term::tt()));
        assert_eq!(run(t, 20).value(), Some(&Term::tt()));
        assert!(caseup(&ix(Direction::FE, 3, "mu a. Unit + a")).is_err());
        assert!(indn(&ix(Direction::FI, 3, "mu a. Unit + a")).is_ok());
    }

    #[test]
    fn inject_extract() {
        assert_eq!(inject(Direction::FI, 0, &ObjType::bool()).unwrap(), Term::lam("x", ObjType::bool(), Term::unit()));
        let inj = inject(Direction::FI, 2, &ObjType::bool()).unwrap();
        assert_eq!(run(Term::app(inj, Term::tt()), 10).value(), Some(&Term::inl(Term::tt())));
        let v = parse_term("inl (inl (inl (inl (inr unit))))", Lang::Fix).unwrap();
        let t = ty("(Bool + Unit) + Unit");
        for n in [2, 3] {
            let e = extract(Direction::FI, n, &t).unwrap();
            assert!(run(Term::app(e, v.clone()), 10_000).out_of_fuel());
        }
        assert!(inject(Direction::FI, 2, &ty("mu a. Unit + a")).is_err());
        assert!(inject(Direction::IC, 2, &ty("mu a. Unit + a")).is_ok());
    }

    #[test]
    fn inject_extract_roundtrip() {
        for (s, v) in [("Bool", "true"), ("Unit * Bool", "(unit, false)"), ("Bool + Unit", "inr unit")] {
            let t = ty(s);
            let v = parse_term(v, Lang::Fix).unwrap();
            let rt = Term::app(extract(Direction::FI, 3, &t).unwrap(), Term::app(inject(Direction::FI, 3, &t).unwrap(), v.clone()));
            assert_eq!(run(rt, 1000).value(), Some(&v));
        }
        let m = ty("mu a. Unit + a");
        let v = parse_term("fold[mu a. Unit + a] (inr (fold[mu a. Unit + a] (inl unit)))", Lang::Iso).unwrap();
        let rt = Term::app(extract(Direction::IC, 4, &m).unwrap(), Term::app(inject(Direction::IC, 4, &m).unwrap(), v.clone()));
        assert_eq!(run(rt, 1000).value(), Some(&v));
    }

    #[test]
    fn toemul_examples() {
        assert!(toemul(Direction::FI, &TypeEnv::empty(), 3).is_empty());
        let e = TypeEnv::from_pairs([(crate::syntax::name("x"), ObjType::bool())]);
        assert_eq!(toemul(Direction::FI, &e, 2).lookup("x"), Some(&ty("Bool + Unit")));
        let e = TypeEnv::from_pairs([(crate::syntax::name("x"), ty("mu a. Unit + a"))]);
        assert_eq!(toemul(Direction::FE, &e, 1).lookup("x"), Some(&ty("(Unit + Unit) + Unit")));
    }

    #[test]
    fn emulate_examples() {
        let d = typecheck(Lang::Iso, &TypeEnv::empty(), &Term::unit()).unwrap();
        assert_eq!(run(emulate(Direction::FI, 1, &d), 10).value(), Some(&Term::inl(Term::unit())));
        assert_eq!(run(emulate(Direction::FI, 0, &d), 10).value(), Some(&Term::unit()));
        let m = ty("mu a. Unit + a");
        let d = check(Lang::Equi, &TypeEnv::empty(), &Term::inl(Term::unit()), &m).unwrap();
        assert_eq!(d.rule, Rule::Conv);
        assert_eq!(emulate(Direction::FE, 3, &d), emulate(Direction::FE, 3, &d.children[0]));
        let e = emulate(Direction::FE, 3, &d);
        check(Lang::Fix, &TypeEnv::empty(), &e, &uval(&UValIndex::new(Direction::FE, 3, m)).unwrap()).unwrap();
    }

    #[test]
    fn emulate_ctx_examples() {
        let d = typecheck_ctx_closed(Lang::Iso, &ProgCtx::hole(), &ObjType::bool()).unwrap();
        assert_eq!(emulate_ctx(Direction::FI, 2, &d), ProgCtx::hole());
        let c = parse_ctx("if _ then unit else unit", Lang::Iso).unwrap();
        let d = typecheck_ctx_closed(Lang::Iso, &c, &ObjType::bool()).unwrap();
        let mut g = Backtranslator::new(Direction::FI);
        let e = g.emulate_ctx(2, &d);
        let up = g.caseup(2, &ObjType::bool());
        let w = g.indn(2, &ObjType::unit());
        let expected = Term::ite(Term::app(up, Term::hole()), Term::app(w.clone(), Term::unit()), Term::app(w, Term::unit()));
        assert_eq!(e.term(), &expected);
        let hole = uval(&ix(Direction::FI, 2, "Bool")).unwrap();
        let out = typecheck_ctx_closed(Lang::Fix, &e, &hole).unwrap();
        assert_eq!(out.ty, uval(&ix(Direction::FI, 2, "Unit")).unwrap());
    }

    #[test]
    fn backtranslate_examples() {
        let b = backtranslate_ctx(Direction::FI, &ProgCtx::hole(), 2, &ObjType::bool()).unwrap();
        assert_eq!(run(b.plug(&Term::tt()), 100).value(), Some(&Term::inl(Term::tt())));
        let c = parse_ctx("if _ then unit else unit", Lang::Iso).unwrap();
        let b = backtranslate_ctx(Direction::FI, &c, 3, &ObjType::bool()).unwrap();
        assert!(run(b.plug(&Term::tt()), 1000).terminated());
        assert!(backtranslate_ctx(Direction::FI, &c, 3, &ObjType::unit()).is_err());
    }

    #[test]
    fn helpers_typecheck() {
        let targets = ["Unit", "Bool", "Bool -> Unit", "Unit * Bool", "Bool + Unit", "(Unit -> Bool) -> Unit", "mu a. Unit + a", "mu a. Unit + Bool * a", "mu a. a -> Bool"];
        let sources = ["Unit", "Bool", "Bool -> Unit", "Unit * Bool", "Bool + Unit", "(Unit -> Bool) -> Unit"];
        let e = TypeEnv::empty();
        for dir in Direction::ALL {
            let src = dir.source();
            for n in 0..4u32 {
                let mut g = Backtranslator::new(dir);
                for s in targets {
                    let t = ty(s);
                    let (u, u1) = (g.uval(n, &t), g.uval(n + 1, &t));
                    let up = g.upgrade(n, 1, &t);
                    check(src, &e, &up, &ObjType::arrow(u.clone(), u1.clone())).unwrap();
                    let down = g.downgrade(n, 2, &t);
                    check(src, &e, &down, &ObjType::arrow(g.uval(n + 2, &t), u.clone())).unwrap();
                    if dir.iso() || !t.is_mu() {
                        let c = g.comp(n, &t);
                        check(src, &e, &g.indn(n, &t), &ObjType::arrow(c.clone(), u.clone())).unwrap();
                        check(src, &e, &g.caseup(n, &t), &ObjType::arrow(u, c.clone())).unwrap();
                        check(src, &e, &g.casetag_at(n, &t), &ObjType::arrow(u1, c)).unwrap();
                    }
                }
                let mut srcs: Vec<ObjType> = sources.iter().map(|s| ty(s)).collect();
                if dir == Direction::IC {
                    srcs.push(ty("mu a. Unit + a"));
                    srcs.push(ty("mu a. Unit + Bool * a"));
                }
                for t in srcs {
                    let u = g.uval(n, &t);
                    check(src, &e, &g.inject(n, &t), &ObjType::arrow(t.clone(), u.clone())).unwrap();
                    check(src, &e, &g.extract(n, &t), &ObjType::arrow(u, t.clone())).unwrap();
                }
            }
        }
    }
}
