//! Typecheckers for the three calculi, coinductive type equality, context
//! typing and typing derivations.
//!
//! Terms leave some types implicit (the other summand of `inl`/`inr`), so
//! checking runs inference with unification variables. In λE unification
//! works modulo type equality: a μ type meeting a type constructor is
//! unfolded. Unconstrained variables default to `Unit`. λE derivations get
//! an explicit conversion node wherever a premise needs a type that is
//! equal to, but not syntactically the same as, the type of the subterm.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{
    check_lang, check_type_lang, contractive, Lang, LangError, Name, ObjType, ProgCtx, Term,
    TermKind, TypeEnv, TypeKind,
};

// ---------------------------------------------------------------------------
// Type equality
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeEqError {
    #[error("type {0} is not contractive")]
    NotContractive(ObjType),
    #[error("type {0} is not closed")]
    Open(ObjType),
}

/// Decide coinductive equality of two closed contractive types.
pub fn type_eq(a: &ObjType, b: &ObjType) -> Result<bool, TypeEqError> {
    for t in [a, b] {
        if !t.is_closed() {
            return Err(TypeEqError::Open(t.clone()));
        }
        if !contractive(t) {
            return Err(TypeEqError::NotContractive(t.clone()));
        }
    }
    Ok(type_eq_unchecked(a, b))
}

/// [`type_eq`] without validating its inputs.
///
/// Pairs already under examination are assumed equal. A μ on the left is
/// unfolded before a μ on the right. Every rule has at most one instance
/// for a given pair, so the assumption set can be shared across branches.
pub fn type_eq_unchecked(a: &ObjType, b: &ObjType) -> bool {
    fn go(a: &ObjType, b: &ObjType, seen: &mut HashSet<(ObjType, ObjType)>) -> bool {
        if a.ptr_eq(b) {
            return true;
        }
        match (a.kind(), b.kind()) {
            (TypeKind::Unit, TypeKind::Unit) | (TypeKind::Bool, TypeKind::Bool) => true,
            (TypeKind::TVar(x), TypeKind::TVar(y)) => x == y,
            (TypeKind::Mu(..), _) | (_, TypeKind::Mu(..)) => {
                if !seen.insert((a.clone(), b.clone())) {
                    return true;
                }
                if a.is_mu() {
                    go(&a.unfold(), b, seen)
                } else {
                    go(a, &b.unfold(), seen)
                }
            }
            (TypeKind::Arrow(a1, a2), TypeKind::Arrow(b1, b2))
            | (TypeKind::Prod(a1, a2), TypeKind::Prod(b1, b2))
            | (TypeKind::Sum(a1, a2), TypeKind::Sum(b1, b2)) => go(a1, b1, seen) && go(a2, b2, seen),
            _ => false,
        }
    }
    go(a, b, &mut HashSet::new())
}

/// Type equality of a language: coinductive for λE, up to renaming of μ
/// binders otherwise.
pub fn lang_type_eq(lang: Lang, a: &ObjType, b: &ObjType) -> bool {
    a.alpha_eq(b) || (lang == Lang::Equi && type_eq_unchecked(a, b))
}

// ---------------------------------------------------------------------------
// Derivations
// ---------------------------------------------------------------------------

/// Typing rule instantiated by a derivation node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Unit,
    True,
    False,
    Var,
    Lam,
    App,
    Pair,
    Proj1,
    Proj2,
    Inl,
    Inr,
    Case,
    If,
    Seq,
    Fix,
    Fold,
    Unfold,
    /// λE conversion: the single child has a type equal to this node's.
    Conv,
    /// The hole of a context.
    Hole,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::Unit => "Type-unit",
            Rule::True => "Type-true",
            Rule::False => "Type-false",
            Rule::Var => "Type-var",
            Rule::Lam => "Type-lam",
            Rule::App => "Type-app",
            Rule::Pair => "Type-pair",
            Rule::Proj1 => "Type-proj1",
            Rule::Proj2 => "Type-proj2",
            Rule::Inl => "Type-inl",
            Rule::Inr => "Type-inr",
            Rule::Case => "Type-case",
            Rule::If => "Type-if",
            Rule::Seq => "Type-seq",
            Rule::Fix => "Type-fix",
            Rule::Fold => "Type-fold",
            Rule::Unfold => "Type-unfold",
            Rule::Conv => "Type-eq",
            Rule::Hole => "Type-Ctx-Hole",
        }
    }
}

/// A typing derivation `env ⊢ term : ty`.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub env: TypeEnv,
    pub term: Term,
    pub ty: ObjType,
    pub children: Vec<Derivation>,
}

impl Derivation {
    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Number of conversion nodes.
    pub fn conversions(&self) -> usize {
        (self.rule == Rule::Conv) as usize + self.children.iter().map(|c| c.conversions()).sum::<usize>()
    }

    /// Strip a root conversion chain.
    pub fn without_conv(&self) -> &Derivation {
        let mut d = self;
        while d.rule == Rule::Conv {
            d = &d.children[0];
        }
        d
    }

    /// Check local well-formedness of every node against its rule.
    pub fn validate(&self, lang: Lang) -> Result<(), String> {
        let kid = |i: usize| &self.children[i];
        let arity = match self.rule {
            Rule::Unit | Rule::True | Rule::False | Rule::Var | Rule::Hole => 0,
            Rule::Lam | Rule::Proj1 | Rule::Proj2 | Rule::Inl | Rule::Inr | Rule::Fix | Rule::Fold | Rule::Unfold | Rule::Conv => 1,
            Rule::App | Rule::Pair | Rule::Seq => 2,
            Rule::Case | Rule::If => 3,
        };
        if self.children.len() != arity {
            return Err(format!("{} node with {} children", self.rule.label(), self.children.len()));
        }
        let same = |a: &ObjType, b: &ObjType| a.alpha_eq(b);
        let ok = match (self.rule, self.term.kind(), self.ty.kind()) {
            (Rule::Unit, TermKind::Unit, TypeKind::Unit) => true,
            (Rule::True, TermKind::True, TypeKind::Bool) | (Rule::False, TermKind::False, TypeKind::Bool) => true,
            (Rule::Var, TermKind::Var(x), _) => self.env.lookup(x).is_some_and(|t| same(t, &self.ty)),
            (Rule::Hole, TermKind::Hole, _) => true,
            (Rule::Lam, TermKind::Lam(x, a, _), TypeKind::Arrow(d, c)) => {
                same(d, a) && same(&kid(0).ty, c) && kid(0).env == self.env.extend(x.clone(), a.clone())
            }
            (Rule::App, TermKind::App(..), _) => match kid(0).ty.kind() {
                TypeKind::Arrow(d, c) => same(&kid(1).ty, d) && same(c, &self.ty),
                _ => false,
            },
            (Rule::Pair, TermKind::Pair(..), TypeKind::Prod(a, b)) => same(&kid(0).ty, a) && same(&kid(1).ty, b),
            (Rule::Proj1, TermKind::Proj1(_), _) => matches!(kid(0).ty.kind(), TypeKind::Prod(a, _) if same(a, &self.ty)),
            (Rule::Proj2, TermKind::Proj2(_), _) => matches!(kid(0).ty.kind(), TypeKind::Prod(_, b) if same(b, &self.ty)),
            (Rule::Inl, TermKind::Inl(_), TypeKind::Sum(a, _)) => same(&kid(0).ty, a),
            (Rule::Inr, TermKind::Inr(_), TypeKind::Sum(_, b)) => same(&kid(0).ty, b),
            (Rule::Case, TermKind::Case(_, x1, _, x2, _), _) => match kid(0).ty.kind() {
                TypeKind::Sum(a, b) => {
                    same(&kid(1).ty, &self.ty)
                        && same(&kid(2).ty, &self.ty)
                        && kid(1).env == self.env.extend(x1.clone(), a.clone())
                        && kid(2).env == self.env.extend(x2.clone(), b.clone())
                }
                _ => false,
            },
            (Rule::If, TermKind::If(..), _) => {
                matches!(kid(0).ty.kind(), TypeKind::Bool) && same(&kid(1).ty, &self.ty) && same(&kid(2).ty, &self.ty)
            }
            (Rule::Seq, TermKind::Seq(..), _) => matches!(kid(0).ty.kind(), TypeKind::Unit) && same(&kid(1).ty, &self.ty),
            (Rule::Fix, TermKind::Fix(t, _), _) => {
                lang == Lang::Fix && same(t, &self.ty) && same(&kid(0).ty, &ObjType::arrow(t.clone(), t.clone()))
            }
            (Rule::Fold, TermKind::Fold(m, _), _) => lang == Lang::Iso && same(m, &self.ty) && same(&kid(0).ty, &m.unfold()),
            (Rule::Unfold, TermKind::Unfold(m, _), _) => lang == Lang::Iso && same(&kid(0).ty, m) && same(&self.ty, &m.unfold()),
            (Rule::Conv, _, _) => {
                lang == Lang::Equi && kid(0).term == self.term && type_eq_unchecked(&kid(0).ty, &self.ty)
            }
            _ => false,
        };
        if !ok {
            return Err(format!("ill-formed {} node for `{}` : {}", self.rule.label(), self.term, self.ty));
        }
        if self.rule != Rule::Lam && self.rule != Rule::Case {
            for k in &self.children {
                if k.env != self.env {
                    return Err(format!("environment mismatch under {}", self.rule.label()));
                }
            }
        }
        self.children.iter().try_for_each(|k| k.validate(lang))
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{:indent$}{}  {} ⊢ {} : {}", "", self.rule.label(), self.env, self.term, self.ty, indent = 2 * depth)?;
        for c in &self.children {
            c.write_tree(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_tree(f, 0)
    }
}

/// A derivation of `⊢ C : hole_env, hole_ty → env, ty`.
#[derive(Clone, Debug)]
pub struct CtxDerivation {
    pub root: Derivation,
    pub hole_env: TypeEnv,
    pub hole_ty: ObjType,
    pub env: TypeEnv,
    pub ty: ObjType,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone)]
pub enum TypeError {
    #[error("type mismatch in `{at}`: expected {expected}, found {found}")]
    Mismatch { at: Term, expected: ObjType, found: ObjType },
    #[error("unbound variable `{var}`")]
    Unbound { at: Term, var: Name },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("environment type {ty} for `{var}`: {why}")]
    BadEnv { var: Name, ty: ObjType, why: &'static str },
    #[error("hole type {ty}: {why}")]
    BadHoleType { ty: ObjType, why: &'static str },
    #[error("unexpected hole in a term")]
    Hole { at: Term },
    #[error("hole environment mismatch: `{var}` is bound at type {found} but the hole expects {expected}")]
    HoleEnv { var: Name, expected: ObjType, found: ObjType },
    #[error("a program context must contain exactly one hole")]
    HoleCount,
}

impl TypeError {
    /// The offending subterm, when there is one.
    pub fn at(&self) -> Option<&Term> {
        match self {
            TypeError::Mismatch { at, .. } | TypeError::Unbound { at, .. } | TypeError::Hole { at } => Some(at),
            TypeError::Lang(LangError::Construct { at, .. })
            | TypeError::Lang(LangError::BadType { at, .. })
            | TypeError::Lang(LangError::Shape { at, .. }) => Some(at),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Types with unification variables. `Known` holds meta-free types; the
/// constructor cases appear only when some component contains a meta.
#[derive(Clone, Debug)]
enum Ty {
    Meta(u32),
    Known(ObjType),
    Arrow(Box<Ty>, Box<Ty>),
    Prod(Box<Ty>, Box<Ty>),
    Sum(Box<Ty>, Box<Ty>),
}

enum View {
    Meta(u32),
    Known(ObjType),
    Arrow(Ty, Ty),
    Prod(Ty, Ty),
    Sum(Ty, Ty),
}

#[derive(Clone)]
struct Pre {
    rule: Rule,
    env: Vec<(Name, Ty)>,
    term: Term,
    ty: Ty,
    /// Each child with the type its premise requires.
    kids: Vec<(Pre, Ty)>,
}

struct Infer {
    lang: Lang,
    subst: Vec<Option<Ty>>,
    hole: Option<HoleSpec>,
}

struct HoleSpec {
    ty: ObjType,
    /// Expected types of the binders enclosing the hole, when given.
    env: Option<TypeEnv>,
    /// Environment seen at the hole.
    seen: Option<Vec<(Name, Ty)>>,
}

fn arrow(a: Ty, b: Ty) -> Ty {
    Ty::Arrow(Box::new(a), Box::new(b))
}
fn prod(a: Ty, b: Ty) -> Ty {
    Ty::Prod(Box::new(a), Box::new(b))
}
fn sum(a: Ty, b: Ty) -> Ty {
    Ty::Sum(Box::new(a), Box::new(b))
}

fn lookup<'a>(env: &'a [(Name, Ty)], x: &str) -> Option<&'a Ty> {
    env.iter().rev().find(|(y, _)| &**y == x).map(|(_, t)| t)
}

fn extend(env: &[(Name, Ty)], x: &Name, t: Ty) -> Vec<(Name, Ty)> {
    let mut v: Vec<(Name, Ty)> = env.iter().filter(|(y, _)| y != x).cloned().collect();
    v.push((x.clone(), t));
    v
}

impl Infer {
    fn new(lang: Lang) -> Infer {
        Infer { lang, subst: Vec::new(), hole: None }
    }

    fn meta(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Meta(self.subst.len() as u32 - 1)
    }

    fn view(&self, t: &Ty) -> View {
        match t {
            Ty::Meta(m) => match &self.subst[*m as usize] {
                Some(t) => self.view(t),
                None => View::Meta(*m),
            },
            Ty::Known(k) => View::Known(k.clone()),
            Ty::Arrow(a, b) => View::Arrow((**a).clone(), (**b).clone()),
            Ty::Prod(a, b) => View::Prod((**a).clone(), (**b).clone()),
            Ty::Sum(a, b) => View::Sum((**a).clone(), (**b).clone()),
        }
    }

    /// Resolve metas; the result is `Known` whenever it is meta-free.
    fn zonk(&self, t: &Ty) -> Ty {
        let bin = |a: &Ty, b: &Ty, mk: fn(ObjType, ObjType) -> ObjType, mkt: fn(Ty, Ty) -> Ty| {
            match (self.zonk(a), self.zonk(b)) {
                (Ty::Known(x), Ty::Known(y)) => Ty::Known(mk(x, y)),
                (x, y) => mkt(x, y),
            }
        };
        match t {
            Ty::Meta(m) => match &self.subst[*m as usize] {
                Some(t) => self.zonk(t),
                None => t.clone(),
            },
            Ty::Known(_) => t.clone(),
            Ty::Arrow(a, b) => bin(a, b, ObjType::arrow, arrow),
            Ty::Prod(a, b) => bin(a, b, ObjType::prod, prod),
            Ty::Sum(a, b) => bin(a, b, ObjType::sum, sum),
        }
    }

    /// Zonk for error messages: unsolved metas print as `?n`.
    fn show(&self, t: &Ty) -> ObjType {
        match self.zonk(t) {
            Ty::Known(k) => k,
            Ty::Meta(m) => ObjType::tvar(&format!("?{m}")),
            Ty::Arrow(a, b) => ObjType::arrow(self.show(&a), self.show(&b)),
            Ty::Prod(a, b) => ObjType::prod(self.show(&a), self.show(&b)),
            Ty::Sum(a, b) => ObjType::sum(self.show(&a), self.show(&b)),
        }
    }

    /// Zonk, committing every unsolved meta to `Unit`.
    fn finish(&mut self, t: &Ty) -> ObjType {
        match self.zonk(t) {
            Ty::Known(k) => k,
            Ty::Meta(m) => {
                self.subst[m as usize] = Some(Ty::Known(ObjType::unit()));
                ObjType::unit()
            }
            Ty::Arrow(a, b) => {
                let (a, b) = (self.finish(&a), self.finish(&b));
                ObjType::arrow(a, b)
            }
            Ty::Prod(a, b) => {
                let (a, b) = (self.finish(&a), self.finish(&b));
                ObjType::prod(a, b)
            }
            Ty::Sum(a, b) => {
                let (a, b) = (self.finish(&a), self.finish(&b));
                ObjType::sum(a, b)
            }
        }
    }

    fn occurs(&self, m: u32, t: &Ty) -> bool {
        match self.view(t) {
            View::Meta(n) => n == m,
            View::Known(_) => false,
            View::Arrow(a, b) | View::Prod(a, b) | View::Sum(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let (za, zb) = (self.zonk(a), self.zonk(b));
        self.unify_z(&za, &zb)
    }

    fn unify_z(&mut self, a: &Ty, b: &Ty) -> bool {
        match (self.view(a), self.view(b)) {
            (View::Meta(m), View::Meta(n)) if m == n => true,
            (View::Meta(m), _) => self.bind(m, b),
            (_, View::Meta(n)) => self.bind(n, a),
            (View::Known(x), View::Known(y)) => lang_type_eq(self.lang, &x, &y),
            (View::Known(x), other) => self.unify_known(&x, other, false),
            (other, View::Known(y)) => self.unify_known(&y, other, true),
            (View::Arrow(a1, a2), View::Arrow(b1, b2))
            | (View::Prod(a1, a2), View::Prod(b1, b2))
            | (View::Sum(a1, a2), View::Sum(b1, b2)) => self.unify(&a1, &b1) && self.unify(&a2, &b2),
            _ => false,
        }
    }

    /// Unify a meta-free type with a constructor view containing metas.
    fn unify_known(&mut self, k: &ObjType, other: View, flipped: bool) -> bool {
        let mut k = k.clone();
        if self.lang == Lang::Equi {
            k = k.unfold_all();
        }
        let pair = |s: &mut Self, x: &ObjType, y: &Ty| {
            let x = Ty::Known(x.clone());
            if flipped {
                s.unify(y, &x)
            } else {
                s.unify(&x, y)
            }
        };
        match (k.kind(), other) {
            (TypeKind::Arrow(x1, x2), View::Arrow(y1, y2))
            | (TypeKind::Prod(x1, x2), View::Prod(y1, y2))
            | (TypeKind::Sum(x1, x2), View::Sum(y1, y2)) => pair(self, x1, &y1) && pair(self, x2, &y2),
            _ => false,
        }
    }

    fn bind(&mut self, m: u32, t: &Ty) -> bool {
        if self.occurs(m, t) {
            return false;
        }
        self.subst[m as usize] = Some(self.zonk(t));
        true
    }

    fn expect(&mut self, at: &Term, found: &Ty, expected: &Ty) -> Result<(), TypeError> {
        if self.unify(found, expected) {
            Ok(())
        } else {
            Err(TypeError::Mismatch { at: at.clone(), expected: self.show(expected), found: self.show(found) })
        }
    }

    fn check_annot(&self, ty: &ObjType, at: &Term) -> Result<(), TypeError> {
        check_type_lang(self.lang, ty)
            .map_err(|why| LangError::BadType { ty: ty.clone(), lang: self.lang, why, at: at.clone() }.into())
    }

    fn infer(&mut self, env: &[(Name, Ty)], t: &Term) -> Result<Pre, TypeError> {
        let leaf = |rule, ty: Ty| Pre { rule, env: env.to_vec(), term: t.clone(), ty, kids: vec![] };
        let node = |rule, ty: Ty, kids: Vec<(Pre, Ty)>| Pre { rule, env: env.to_vec(), term: t.clone(), ty, kids };
        Ok(match t.kind() {
            TermKind::Unit => leaf(Rule::Unit, Ty::Known(ObjType::unit())),
            TermKind::True => leaf(Rule::True, Ty::Known(ObjType::bool())),
            TermKind::False => leaf(Rule::False, Ty::Known(ObjType::bool())),
            TermKind::Var(x) => match lookup(env, x) {
                Some(ty) => leaf(Rule::Var, ty.clone()),
                None => return Err(TypeError::Unbound { at: t.clone(), var: x.clone() }),
            },
            TermKind::Hole => {
                let Some(spec) = self.hole.as_mut() else {
                    return Err(TypeError::Hole { at: t.clone() });
                };
                spec.seen = Some(env.to_vec());
                let ty = Ty::Known(spec.ty.clone());
                leaf(Rule::Hole, ty)
            }
            TermKind::Lam(x, a, b) => {
                self.check_annot(a, t)?;
                let inner = extend(env, x, Ty::Known(a.clone()));
                let pb = self.infer(&inner, b)?;
                let ty = arrow(Ty::Known(a.clone()), pb.ty.clone());
                let req = pb.ty.clone();
                node(Rule::Lam, ty, vec![(pb, req)])
            }
            TermKind::App(f, a) => {
                let pf = self.infer(env, f)?;
                let (d, c) = (self.meta(), self.meta());
                let fty = arrow(d.clone(), c.clone());
                self.expect(f, &pf.ty, &fty)?;
                let pa = self.infer(env, a)?;
                self.expect(a, &pa.ty, &d)?;
                node(Rule::App, c, vec![(pf, fty), (pa, d)])
            }
            TermKind::Pair(a, b) => {
                let pa = self.infer(env, a)?;
                let pb = self.infer(env, b)?;
                let ty = prod(pa.ty.clone(), pb.ty.clone());
                let (ra, rb) = (pa.ty.clone(), pb.ty.clone());
                node(Rule::Pair, ty, vec![(pa, ra), (pb, rb)])
            }
            TermKind::Proj1(p) | TermKind::Proj2(p) => {
                let pp = self.infer(env, p)?;
                let (a, b) = (self.meta(), self.meta());
                let pty = prod(a.clone(), b.clone());
                self.expect(p, &pp.ty, &pty)?;
                if matches!(t.kind(), TermKind::Proj1(_)) {
                    node(Rule::Proj1, a, vec![(pp, pty)])
                } else {
                    node(Rule::Proj2, b, vec![(pp, pty)])
                }
            }
            TermKind::Inl(a) | TermKind::Inr(a) => {
                let pa = self.infer(env, a)?;
                let other = self.meta();
                let ra = pa.ty.clone();
                if matches!(t.kind(), TermKind::Inl(_)) {
                    node(Rule::Inl, sum(ra.clone(), other), vec![(pa, ra)])
                } else {
                    node(Rule::Inr, sum(other, ra.clone()), vec![(pa, ra)])
                }
            }
            TermKind::Case(s, x1, b1, x2, b2) => {
                let ps = self.infer(env, s)?;
                let (a, b) = (self.meta(), self.meta());
                let sty = sum(a.clone(), b.clone());
                self.expect(s, &ps.ty, &sty)?;
                let p1 = self.infer(&extend(env, x1, a), b1)?;
                let p2 = self.infer(&extend(env, x2, b), b2)?;
                let r = p1.ty.clone();
                self.expect(b2, &p2.ty, &r)?;
                node(Rule::Case, r.clone(), vec![(ps, sty), (p1, r.clone()), (p2, r)])
            }
            TermKind::If(c, a, b) => {
                let pc = self.infer(env, c)?;
                let bool_ty = Ty::Known(ObjType::bool());
                self.expect(c, &pc.ty, &bool_ty)?;
                let pa = self.infer(env, a)?;
                let pb = self.infer(env, b)?;
                let r = pa.ty.clone();
                self.expect(b, &pb.ty, &r)?;
                node(Rule::If, r.clone(), vec![(pc, bool_ty), (pa, r.clone()), (pb, r)])
            }
            TermKind::Seq(a, b) => {
                let pa = self.infer(env, a)?;
                let unit_ty = Ty::Known(ObjType::unit());
                self.expect(a, &pa.ty, &unit_ty)?;
                let pb = self.infer(env, b)?;
                let r = pb.ty.clone();
                node(Rule::Seq, r.clone(), vec![(pa, unit_ty), (pb, r)])
            }
            TermKind::Fix(ty, f) => {
                self.check_annot(ty, t)?;
                let pf = self.infer(env, f)?;
                let req = Ty::Known(ObjType::arrow(ty.clone(), ty.clone()));
                self.expect(f, &pf.ty, &req)?;
                node(Rule::Fix, Ty::Known(ty.clone()), vec![(pf, req)])
            }
            TermKind::Fold(m, a) => {
                self.check_annot(m, t)?;
                let pa = self.infer(env, a)?;
                let req = Ty::Known(m.unfold());
                self.expect(a, &pa.ty, &req)?;
                node(Rule::Fold, Ty::Known(m.clone()), vec![(pa, req)])
            }
            TermKind::Unfold(m, a) => {
                self.check_annot(m, t)?;
                let pa = self.infer(env, a)?;
                let req = Ty::Known(m.clone());
                self.expect(a, &pa.ty, &req)?;
                node(Rule::Unfold, Ty::Known(m.unfold()), vec![(pa, req)])
            }
        })
    }

    fn build(&mut self, p: &Pre) -> Derivation {
        let env = TypeEnv::from_pairs(p.env.iter().map(|(x, t)| (x.clone(), self.finish(t))));
        let ty = self.finish(&p.ty);
        let children = p
            .kids
            .iter()
            .map(|(k, req)| {
                let d = self.build(k);
                let req = self.finish(req);
                self.convert(d, req)
            })
            .collect();
        Derivation { rule: p.rule, env, term: p.term.clone(), ty, children }
    }

    /// Wrap `d` in a conversion to `ty` when the types differ syntactically.
    fn convert(&self, d: Derivation, ty: ObjType) -> Derivation {
        if d.ty == ty {
            return d;
        }
        if self.lang != Lang::Equi && d.ty.alpha_eq(&ty) {
            // μ binder names differ only; keep the premise's spelling.
            return Derivation { ty, ..d };
        }
        debug_assert!(self.lang == Lang::Equi && type_eq_unchecked(&d.ty, &ty));
        Derivation { rule: Rule::Conv, env: d.env.clone(), term: d.term.clone(), ty, children: vec![d] }
    }
}

fn check_env(lang: Lang, env: &TypeEnv) -> Result<(), TypeError> {
    for (x, t) in env.bindings() {
        check_type_lang(lang, t).map_err(|why| TypeError::BadEnv { var: x.clone(), ty: t.clone(), why })?;
    }
    Ok(())
}

fn env_to_ty(env: &TypeEnv) -> Vec<(Name, Ty)> {
    env.bindings().iter().map(|(x, t)| (x.clone(), Ty::Known(t.clone()))).collect()
}

/// Infer a type and build the derivation.
pub fn typecheck(lang: Lang, env: &TypeEnv, t: &Term) -> Result<Derivation, TypeError> {
    check_lang(lang, t)?;
    check_env(lang, env)?;
    let mut inf = Infer::new(lang);
    let pre = inf.infer(&env_to_ty(env), t)?;
    Ok(inf.build(&pre))
}

/// Check `t` against an expected type.
pub fn check(lang: Lang, env: &TypeEnv, t: &Term, expected: &ObjType) -> Result<Derivation, TypeError> {
    check_lang(lang, t)?;
    check_env(lang, env)?;
    check_type_lang(lang, expected).map_err(|why| TypeError::BadHoleType { ty: expected.clone(), why })?;
    let mut inf = Infer::new(lang);
    let pre = inf.infer(&env_to_ty(env), t)?;
    inf.expect(t, &pre.ty, &Ty::Known(expected.clone()))?;
    let d = inf.build(&pre);
    Ok(inf.convert(d, expected.clone()))
}

/// Type a context whose hole has type `hole_ty` in `hole_env`. Binders
/// enclosing the hole must appear in `hole_env`; the remaining bindings form
/// the outer environment.
pub fn typecheck_ctx(lang: Lang, c: &ProgCtx, hole_env: &TypeEnv, hole_ty: &ObjType) -> Result<CtxDerivation, TypeError> {
    ctx_impl(lang, c, Some(hole_env), hole_ty, None)
}

/// Type a context in the empty outer environment; the hole environment is
/// whatever the enclosing binders provide.
pub fn typecheck_ctx_closed(lang: Lang, c: &ProgCtx, hole_ty: &ObjType) -> Result<CtxDerivation, TypeError> {
    ctx_impl(lang, c, None, hole_ty, None)
}

/// As [`typecheck_ctx_closed`], also checking the result type.
pub fn check_ctx_closed(lang: Lang, c: &ProgCtx, hole_ty: &ObjType, expected: &ObjType) -> Result<CtxDerivation, TypeError> {
    ctx_impl(lang, c, None, hole_ty, Some(expected))
}

fn ctx_impl(
    lang: Lang,
    c: &ProgCtx,
    hole_env: Option<&TypeEnv>,
    hole_ty: &ObjType,
    expected: Option<&ObjType>,
) -> Result<CtxDerivation, TypeError> {
    if c.term().holes() != 1 {
        return Err(TypeError::HoleCount);
    }
    check_lang(lang, c.term())?;
    check_type_lang(lang, hole_ty).map_err(|why| TypeError::BadHoleType { ty: hole_ty.clone(), why })?;
    let binders: Vec<Name> = c.hole_binders().into_iter().map(|(x, _)| x).collect();
    let outer = match hole_env {
        Some(e) => {
            check_env(lang, e)?;
            binders.iter().fold(e.clone(), |acc, x| acc.remove(x))
        }
        None => TypeEnv::empty(),
    };
    let mut inf = Infer::new(lang);
    inf.hole = Some(HoleSpec { ty: hole_ty.clone(), env: hole_env.cloned(), seen: None });
    let pre = inf.infer(&env_to_ty(&outer), c.term())?;
    if let Some(exp) = expected {
        inf.expect(c.term(), &pre.ty, &Ty::Known(exp.clone()))?;
    }
    let spec = inf.hole.take().expect("hole spec");
    let seen = spec.seen.unwrap_or_default();
    if let Some(want) = &spec.env {
        for (x, t) in &seen {
            let Some(w) = want.lookup(x) else { continue };
            if !inf.unify(t, &Ty::Known(w.clone())) {
                return Err(TypeError::HoleEnv { var: x.clone(), expected: w.clone(), found: inf.show(t) });
            }
        }
        for x in &binders {
            if want.lookup(x).is_none() {
                let found = lookup(&seen, x).map(|t| inf.show(t)).unwrap_or_else(ObjType::unit);
                return Err(TypeError::HoleEnv { var: x.clone(), expected: ObjType::tvar("?"), found });
            }
        }
    }
    let mut root = inf.build(&pre);
    if let Some(exp) = expected {
        root = inf.convert(root, exp.clone());
    }
    let hole_env = TypeEnv::from_pairs(seen.iter().map(|(x, t)| (x.clone(), inf.finish(t))));
    Ok(CtxDerivation { env: root.env.clone(), ty: root.ty.clone(), root, hole_env, hole_ty: hole_ty.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ctx, parse_term, parse_type};

    fn ty(s: &str) -> ObjType {
        parse_type(s, Lang::Equi).unwrap()
    }

    #[test]
    fn type_eq_examples() {
        let l = ty("mu a. Unit + a");
        assert!(type_eq(&l, &ObjType::sum(ObjType::unit(), l.clone())).unwrap());
        assert!(type_eq(&ty("mu a. a -> Unit"), &ty("mu a. (a -> Unit) -> Unit")).unwrap());
        assert!(!type_eq(&ObjType::unit(), &ObjType::bool()).unwrap());
        assert!(type_eq(&ty("(mu a. Bool + a) -> Bool"), &ty("Bool + (mu a. Bool + a) -> Bool")).unwrap());
        assert!(type_eq(&ObjType::mu("a", ObjType::tvar("a")), &ObjType::unit()).is_err());
    }

    #[test]
    fn typecheck_examples() {
        let d = typecheck(Lang::Fix, &TypeEnv::empty(), &parse_term("\\x:Bool. x", Lang::Fix).unwrap()).unwrap();
        assert_eq!(d.ty, ty("Bool -> Bool"));
        let t = parse_term("fold[mu a. Unit + a] (inl unit)", Lang::Iso).unwrap();
        assert_eq!(typecheck(Lang::Iso, &TypeEnv::empty(), &t).unwrap().ty, ty("mu a. Unit + a"));
        let t = parse_term("inl unit", Lang::Equi).unwrap();
        let d = check(Lang::Equi, &TypeEnv::empty(), &t, &ty("mu a. Unit + a")).unwrap();
        assert_eq!(d.rule, Rule::Conv);
        d.validate(Lang::Equi).unwrap();
        let t = parse_term("fix[Unit -> Unit] \\f:Unit -> Unit. \\x:Unit. x", Lang::Fix).unwrap();
        assert_eq!(typecheck(Lang::Fix, &TypeEnv::empty(), &t).unwrap().ty, ty("Unit -> Unit"));
    }

    #[test]
    fn equi_self_application() {
        let t = parse_term("\\x:mu a. a -> Unit. x x", Lang::Equi).unwrap();
        let d = typecheck(Lang::Equi, &TypeEnv::empty(), &t).unwrap();
        assert_eq!(d.ty, ty("(mu a. a -> Unit) -> Unit"));
        assert!(d.conversions() >= 1);
        d.validate(Lang::Equi).unwrap();
        assert!(typecheck(Lang::Iso, &TypeEnv::empty(), &parse_term("\\x:mu a. a -> Unit. x x", Lang::Iso).unwrap()).is_err());
    }

    #[test]
    fn ctx_examples() {
        let e = TypeEnv::empty();
        let d = typecheck_ctx(Lang::Fix, &ProgCtx::hole(), &e, &ObjType::bool()).unwrap();
        assert_eq!((d.env.clone(), d.ty.clone()), (e.clone(), ObjType::bool()));
        let c = parse_ctx("if _ then unit else unit", Lang::Fix).unwrap();
        assert_eq!(typecheck_ctx(Lang::Fix, &c, &e, &ObjType::bool()).unwrap().ty, ObjType::unit());
        let c = parse_ctx("_ true", Lang::Fix).unwrap();
        assert!(typecheck_ctx(Lang::Fix, &c, &e, &ObjType::unit()).is_err());
        let c = parse_ctx("\\z:Bool. if _ then z else false", Lang::Fix).unwrap();
        let h = TypeEnv::empty().extend(crate::syntax::name("z"), ObjType::bool());
        let d = typecheck_ctx(Lang::Fix, &c, &h, &ObjType::bool()).unwrap();
        assert_eq!(d.ty, ty("Bool -> Bool"));
        assert!(d.env.is_empty());
        assert!(typecheck_ctx(Lang::Fix, &c, &TypeEnv::empty().extend(crate::syntax::name("z"), ObjType::unit()), &ObjType::bool()).is_err());
    }

    #[test]
    fn derivations_validate() {
        for (lang, src) in [
            (Lang::Fix, "(\\p:Bool * Unit. p.1) (true, unit)"),
            (Lang::Fix, "case inl true of inl x -> x | inr y -> false"),
            (Lang::Iso, "unfold[mu a. Unit + a] (fold[mu a. Unit + a] (inr (fold[mu a. Unit + a] (inl unit))))"),
            (Lang::Equi, "case (\\l:mu a. Unit + Bool * a. l) (inr (true, inl unit)) of inl u -> false | inr c -> c.1"),
        ] {
            let t = parse_term(src, lang).unwrap();
            let d = typecheck(lang, &TypeEnv::empty(), &t).unwrap();
            d.validate(lang).unwrap_or_else(|e| panic!("{src}: {e}\n{d}"));
        }
    }
}
