//! Object-language types and terms shared by the three calculi.
//!
//! Terms and types are immutable reference-counted trees. Every term node
//! caches its size, its free variables and its hole count, so substitution
//! can skip closed subterms and contexts can be validated in constant time.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Identifier for term and type variables.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// The three calculi.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lang {
    /// Term-level fixpoint, no recursive types.
    Fix,
    /// Iso-recursive types with explicit fold/unfold.
    Iso,
    /// Equi-recursive types with coinductive type equality.
    Equi,
}

impl Lang {
    pub const ALL: [Lang; 3] = [Lang::Fix, Lang::Iso, Lang::Equi];

    pub fn ascii(self) -> &'static str {
        match self {
            Lang::Fix => "fix",
            Lang::Iso => "iso",
            Lang::Equi => "equi",
        }
    }

    pub fn greek(self) -> &'static str {
        match self {
            Lang::Fix => "λF",
            Lang::Iso => "λI",
            Lang::Equi => "λE",
        }
    }

    pub fn from_name(s: &str) -> Option<Lang> {
        match s {
            "fix" | "F" | "f" | "λF" | "lf" => Some(Lang::Fix),
            "iso" | "I" | "i" | "λI" | "li" => Some(Lang::Iso),
            "equi" | "E" | "e" | "λE" | "le" => Some(Lang::Equi),
            _ => None,
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.greek())
    }
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Unit,
    Bool,
    Arrow(ObjType, ObjType),
    Prod(ObjType, ObjType),
    Sum(ObjType, ObjType),
    TVar(Name),
    Mu(Name, ObjType),
}

/// An object-language type. Equality is structural (binder names matter);
/// use [`ObjType::alpha_eq`] to compare up to renaming of μ binders.
#[derive(Clone, Eq, Hash)]
pub struct ObjType(Arc<TypeKind>);

impl PartialEq for ObjType {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl ObjType {
    pub fn new(kind: TypeKind) -> Self {
        ObjType(Arc::new(kind))
    }
    pub fn kind(&self) -> &TypeKind {
        &self.0
    }
    pub fn unit() -> Self {
        Self::new(TypeKind::Unit)
    }
    pub fn bool() -> Self {
        Self::new(TypeKind::Bool)
    }
    pub fn arrow(a: ObjType, b: ObjType) -> Self {
        Self::new(TypeKind::Arrow(a, b))
    }
    pub fn prod(a: ObjType, b: ObjType) -> Self {
        Self::new(TypeKind::Prod(a, b))
    }
    pub fn sum(a: ObjType, b: ObjType) -> Self {
        Self::new(TypeKind::Sum(a, b))
    }
    pub fn tvar(a: &str) -> Self {
        Self::new(TypeKind::TVar(name(a)))
    }
    pub fn mu(a: &str, body: ObjType) -> Self {
        Self::new(TypeKind::Mu(name(a), body))
    }
    pub fn mu_named(a: Name, body: ObjType) -> Self {
        Self::new(TypeKind::Mu(a, body))
    }

    pub fn ptr_eq(&self, other: &ObjType) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn is_mu(&self) -> bool {
        matches!(self.kind(), TypeKind::Mu(..))
    }

    /// Free type variables.
    pub fn ftv(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.ftv_into(&mut Vec::new(), &mut out);
        out
    }

    fn ftv_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self.kind() {
            TypeKind::Unit | TypeKind::Bool => {}
            TypeKind::TVar(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
                a.ftv_into(bound, out);
                b.ftv_into(bound, out);
            }
            TypeKind::Mu(a, body) => {
                bound.push(a.clone());
                body.ftv_into(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_free_tvar(&self, a: &str) -> bool {
        match self.kind() {
            TypeKind::Unit | TypeKind::Bool => false,
            TypeKind::TVar(b) => &**b == a,
            TypeKind::Arrow(x, y) | TypeKind::Prod(x, y) | TypeKind::Sum(x, y) => {
                x.has_free_tvar(a) || y.has_free_tvar(a)
            }
            TypeKind::Mu(b, body) => &**b != a && body.has_free_tvar(a),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.ftv().is_empty()
    }

    /// True when the type contains neither μ binders nor type variables.
    pub fn is_mu_free(&self) -> bool {
        match self.kind() {
            TypeKind::Unit | TypeKind::Bool => true,
            TypeKind::TVar(_) | TypeKind::Mu(..) => false,
            TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
                a.is_mu_free() && b.is_mu_free()
            }
        }
    }

    /// Number of type-constructor nodes.
    pub fn node_count(&self) -> usize {
        match self.kind() {
            TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_) => 1,
            TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            TypeKind::Mu(_, b) => 1 + b.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self.kind() {
            TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_) => 1,
            TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
                1 + a.depth().max(b.depth())
            }
            TypeKind::Mu(_, b) => 1 + b.depth(),
        }
    }

    /// One-step unfolding of a μ type; other types are returned unchanged.
    pub fn unfold(&self) -> ObjType {
        match self.kind() {
            TypeKind::Mu(a, body) => subst_type(body, a, self),
            _ => self.clone(),
        }
    }

    /// Unfold leading μ binders until the head is a constructor or variable.
    pub fn unfold_all(&self) -> ObjType {
        let mut t = self.clone();
        let mut guard = 0;
        while t.is_mu() && guard <= lmc(self) {
            t = t.unfold();
            guard += 1;
        }
        t
    }

    /// Equality up to renaming of μ-bound variables.
    pub fn alpha_eq(&self, other: &ObjType) -> bool {
        fn go(a: &ObjType, b: &ObjType, env: &mut Vec<(Name, Name)>) -> bool {
            if env.is_empty() && a.ptr_eq(b) {
                return true;
            }
            match (a.kind(), b.kind()) {
                (TypeKind::Unit, TypeKind::Unit) | (TypeKind::Bool, TypeKind::Bool) => true,
                (TypeKind::TVar(x), TypeKind::TVar(y)) => {
                    for (l, r) in env.iter().rev() {
                        if l == x || r == y {
                            return l == x && r == y;
                        }
                    }
                    x == y
                }
                (TypeKind::Arrow(a1, a2), TypeKind::Arrow(b1, b2))
                | (TypeKind::Prod(a1, a2), TypeKind::Prod(b1, b2))
                | (TypeKind::Sum(a1, a2), TypeKind::Sum(b1, b2)) => {
                    go(a1, b1, env) && go(a2, b2, env)
                }
                (TypeKind::Mu(x, a1), TypeKind::Mu(y, b1)) => {
                    env.push((x.clone(), y.clone()));
                    let r = go(a1, b1, env);
                    env.pop();
                    r
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Rename μ binders to `a0, a1, ...` in binding order.
    pub fn canonical(&self) -> ObjType {
        fn go(t: &ObjType, env: &mut Vec<(Name, Name)>, next: &mut usize) -> ObjType {
            match t.kind() {
                TypeKind::Unit | TypeKind::Bool => t.clone(),
                TypeKind::TVar(x) => match env.iter().rev().find(|(o, _)| o == x) {
                    Some((_, n)) => ObjType::new(TypeKind::TVar(n.clone())),
                    None => t.clone(),
                },
                TypeKind::Arrow(a, b) => ObjType::arrow(go(a, env, next), go(b, env, next)),
                TypeKind::Prod(a, b) => ObjType::prod(go(a, env, next), go(b, env, next)),
                TypeKind::Sum(a, b) => ObjType::sum(go(a, env, next), go(b, env, next)),
                TypeKind::Mu(x, body) => {
                    let fresh = name(&format!("a{}", *next));
                    *next += 1;
                    env.push((x.clone(), fresh.clone()));
                    let body = go(body, env, next);
                    env.pop();
                    ObjType::mu_named(fresh, body)
                }
            }
        }
        go(self, &mut Vec::new(), &mut 0)
    }
}

impl fmt::Debug for ObjType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Produce a name based on `base` for which `taken` is false.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    let stem = match base.rfind('_') {
        Some(i) if i > 0 && base[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < base.len() => {
            &base[..i]
        }
        _ => base,
    };
    let mut k = 1usize;
    loop {
        let cand = format!("{stem}_{k}");
        if !taken(&cand) {
            return name(&cand);
        }
        k += 1;
    }
}

/// Capture-avoiding substitution `τ[σ/α]`.
pub fn subst_type(t: &ObjType, a: &str, s: &ObjType) -> ObjType {
    if !t.has_free_tvar(a) {
        return t.clone();
    }
    match t.kind() {
        TypeKind::Unit | TypeKind::Bool => t.clone(),
        TypeKind::TVar(b) => {
            if &**b == a {
                s.clone()
            } else {
                t.clone()
            }
        }
        TypeKind::Arrow(x, y) => ObjType::arrow(subst_type(x, a, s), subst_type(y, a, s)),
        TypeKind::Prod(x, y) => ObjType::prod(subst_type(x, a, s), subst_type(y, a, s)),
        TypeKind::Sum(x, y) => ObjType::sum(subst_type(x, a, s), subst_type(y, a, s)),
        TypeKind::Mu(b, body) => {
            // `a` is free in t, so b != a.
            if s.has_free_tvar(b) {
                let fresh = fresh_name(b, |c| {
                    c == a || s.has_free_tvar(c) || body.has_free_tvar(c)
                });
                let renamed = subst_type(body, b, &ObjType::new(TypeKind::TVar(fresh.clone())));
                ObjType::mu_named(fresh, subst_type(&renamed, a, s))
            } else {
                ObjType::mu_named(b.clone(), subst_type(body, a, s))
            }
        }
    }
}

/// Variables of `t` reachable from the root without crossing →, × or ⊎.
fn unguarded(t: &ObjType, out: &mut BTreeSet<Name>) {
    match t.kind() {
        TypeKind::TVar(a) => {
            out.insert(a.clone());
        }
        TypeKind::Mu(a, body) => {
            let mut inner = BTreeSet::new();
            unguarded(body, &mut inner);
            inner.remove(a);
            out.extend(inner);
        }
        _ => {}
    }
}

/// Every μ binder's variable occurs only beneath a type constructor.
pub fn contractive(t: &ObjType) -> bool {
    match t.kind() {
        TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_) => true,
        TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
            contractive(a) && contractive(b)
        }
        TypeKind::Mu(a, body) => {
            let mut u = BTreeSet::new();
            unguarded(body, &mut u);
            !u.contains(a) && contractive(body)
        }
    }
}

/// Leading μ count.
pub fn lmc(t: &ObjType) -> usize {
    match t.kind() {
        TypeKind::Mu(_, body) => 1 + lmc(body),
        _ => 0,
    }
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq)]
pub enum TermKind {
    Unit,
    True,
    False,
    Var(Name),
    Lam(Name, ObjType, Term),
    App(Term, Term),
    Pair(Term, Term),
    Proj1(Term),
    Proj2(Term),
    Inl(Term),
    Inr(Term),
    Case(Term, Name, Term, Name, Term),
    If(Term, Term, Term),
    Seq(Term, Term),
    Fix(ObjType, Term),
    Fold(ObjType, Term),
    Unfold(ObjType, Term),
    /// The hole of a program context.
    Hole,
}

struct TermNode {
    kind: TermKind,
    value: bool,
    size: u64,
    holes: u32,
    fv: Arc<[Name]>,
}

/// An object-language term. Equality is structural; use [`Term::alpha_eq`]
/// for comparison up to bound-variable renaming.
#[derive(Clone)]
pub struct Term(Arc<TermNode>);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.size == other.0.size
                && self.0.holes == other.0.holes
                && self.0.kind == other.0.kind)
    }
}

fn empty_fv() -> Arc<[Name]> {
    thread_local! {
        static EMPTY: Arc<[Name]> = Arc::from(Vec::<Name>::new());
    }
    EMPTY.with(|e| e.clone())
}

fn merge_fv(parts: &[&[Name]]) -> Arc<[Name]> {
    let nonempty: Vec<&[Name]> = parts.iter().copied().filter(|p| !p.is_empty()).collect();
    if nonempty.is_empty() {
        return empty_fv();
    }
    let mut all: Vec<Name> = nonempty.iter().flat_map(|p| p.iter().cloned()).collect();
    all.sort();
    all.dedup();
    Arc::from(all)
}

fn without(fv: &[Name], x: &Name) -> Vec<Name> {
    fv.iter().filter(|y| *y != x).cloned().collect()
}

impl Term {
    pub fn new(kind: TermKind) -> Term {
        let (size, holes, fv) = match &kind {
            TermKind::Unit | TermKind::True | TermKind::False => (1, 0, empty_fv()),
            TermKind::Hole => (1, 1, empty_fv()),
            TermKind::Var(x) => (1, 0, Arc::from(vec![x.clone()])),
            TermKind::Lam(x, _, b) => {
                let fv = if b.fv().contains(x) {
                    merge_fv(&[&without(b.fv(), x)])
                } else {
                    b.0.fv.clone()
                };
                (1, b.holes(), fv)
            }
            TermKind::App(a, b) | TermKind::Pair(a, b) | TermKind::Seq(a, b) => (
                a.size() + b.size() + 1,
                a.holes() + b.holes(),
                merge_fv(&[a.fv(), b.fv()]),
            ),
            TermKind::Proj1(a)
            | TermKind::Proj2(a)
            | TermKind::Inl(a)
            | TermKind::Inr(a)
            | TermKind::Fix(_, a)
            | TermKind::Fold(_, a)
            | TermKind::Unfold(_, a) => (a.size() + 1, a.holes(), a.0.fv.clone()),
            TermKind::Case(s, x1, b1, x2, b2) => (
                s.size() + b1.size() + b2.size() + 1,
                s.holes() + b1.holes() + b2.holes(),
                merge_fv(&[s.fv(), &without(b1.fv(), x1), &without(b2.fv(), x2)]),
            ),
            TermKind::If(c, a, b) => (
                c.size() + a.size() + b.size() + 1,
                c.holes() + a.holes() + b.holes(),
                merge_fv(&[c.fv(), a.fv(), b.fv()]),
            ),
        };
        let value = match &kind {
            TermKind::Unit | TermKind::True | TermKind::False | TermKind::Lam(..) => true,
            TermKind::Pair(a, b) => a.is_value() && b.is_value(),
            TermKind::Inl(a) | TermKind::Inr(a) | TermKind::Fold(_, a) => a.is_value(),
            _ => false,
        };
        Term(Arc::new(TermNode { kind, value, size, holes, fv }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    /// Size as defined for bounded termination: lambda bodies are ignored.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    /// Number of holes in the tree.
    pub fn holes(&self) -> u32 {
        self.0.holes
    }

    /// Free term variables, sorted.
    pub fn fv(&self) -> &[Name] {
        &self.0.fv
    }

    pub fn is_closed(&self) -> bool {
        self.0.fv.is_empty()
    }

    pub fn has_free(&self, x: &str) -> bool {
        self.0.fv.binary_search_by(|y| (**y).cmp(x)).is_ok()
    }

    pub fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as *const () as usize
    }

    pub fn unit() -> Term {
        Term::new(TermKind::Unit)
    }
    pub fn tt() -> Term {
        Term::new(TermKind::True)
    }
    pub fn ff() -> Term {
        Term::new(TermKind::False)
    }
    pub fn boolean(b: bool) -> Term {
        if b {
            Term::tt()
        } else {
            Term::ff()
        }
    }
    pub fn hole() -> Term {
        Term::new(TermKind::Hole)
    }
    pub fn var(x: &str) -> Term {
        Term::new(TermKind::Var(name(x)))
    }
    pub fn var_named(x: Name) -> Term {
        Term::new(TermKind::Var(x))
    }
    pub fn lam(x: &str, ty: ObjType, body: Term) -> Term {
        Term::new(TermKind::Lam(name(x), ty, body))
    }
    pub fn lam_named(x: Name, ty: ObjType, body: Term) -> Term {
        Term::new(TermKind::Lam(x, ty, body))
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::new(TermKind::App(f, a))
    }
    pub fn pair(a: Term, b: Term) -> Term {
        Term::new(TermKind::Pair(a, b))
    }
    pub fn proj1(a: Term) -> Term {
        Term::new(TermKind::Proj1(a))
    }
    pub fn proj2(a: Term) -> Term {
        Term::new(TermKind::Proj2(a))
    }
    pub fn inl(a: Term) -> Term {
        Term::new(TermKind::Inl(a))
    }
    pub fn inr(a: Term) -> Term {
        Term::new(TermKind::Inr(a))
    }
    pub fn case(s: Term, x1: &str, b1: Term, x2: &str, b2: Term) -> Term {
        Term::new(TermKind::Case(s, name(x1), b1, name(x2), b2))
    }
    pub fn case_named(s: Term, x1: Name, b1: Term, x2: Name, b2: Term) -> Term {
        Term::new(TermKind::Case(s, x1, b1, x2, b2))
    }
    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        Term::new(TermKind::If(c, a, b))
    }
    pub fn seq(a: Term, b: Term) -> Term {
        Term::new(TermKind::Seq(a, b))
    }
    pub fn fix(ty: ObjType, a: Term) -> Term {
        Term::new(TermKind::Fix(ty, a))
    }
    pub fn fold(ty: ObjType, a: Term) -> Term {
        Term::new(TermKind::Fold(ty, a))
    }
    pub fn unfold(ty: ObjType, a: Term) -> Term {
        Term::new(TermKind::Unfold(ty, a))
    }

    /// Values: unit, booleans, lambdas, and pairs/injections/folds of values.
    pub fn is_value(&self) -> bool {
        self.0.value
    }

    /// Immediate subterms, left to right.
    pub fn children(&self) -> Vec<&Term> {
        match self.kind() {
            TermKind::Unit | TermKind::True | TermKind::False | TermKind::Var(_) | TermKind::Hole => {
                vec![]
            }
            TermKind::Lam(_, _, b) => vec![b],
            TermKind::App(a, b) | TermKind::Pair(a, b) | TermKind::Seq(a, b) => vec![a, b],
            TermKind::Proj1(a)
            | TermKind::Proj2(a)
            | TermKind::Inl(a)
            | TermKind::Inr(a)
            | TermKind::Fix(_, a)
            | TermKind::Fold(_, a)
            | TermKind::Unfold(_, a) => vec![a],
            TermKind::Case(s, _, b1, _, b2) => vec![s, b1, b2],
            TermKind::If(c, a, b) => vec![c, a, b],
        }
    }

    /// Rebuild this node with new immediate subterms (same order as `children`).
    pub fn with_children(&self, kids: Vec<Term>) -> Term {
        let mut it = kids.into_iter();
        let mut next = || it.next().expect("arity mismatch in with_children");
        let kind = match self.kind() {
            TermKind::Unit | TermKind::True | TermKind::False | TermKind::Var(_) | TermKind::Hole => {
                return self.clone()
            }
            TermKind::Lam(x, t, _) => TermKind::Lam(x.clone(), t.clone(), next()),
            TermKind::App(..) => TermKind::App(next(), next()),
            TermKind::Pair(..) => TermKind::Pair(next(), next()),
            TermKind::Seq(..) => TermKind::Seq(next(), next()),
            TermKind::Proj1(_) => TermKind::Proj1(next()),
            TermKind::Proj2(_) => TermKind::Proj2(next()),
            TermKind::Inl(_) => TermKind::Inl(next()),
            TermKind::Inr(_) => TermKind::Inr(next()),
            TermKind::Fix(t, _) => TermKind::Fix(t.clone(), next()),
            TermKind::Fold(t, _) => TermKind::Fold(t.clone(), next()),
            TermKind::Unfold(t, _) => TermKind::Unfold(t.clone(), next()),
            TermKind::Case(_, x1, _, x2, _) => {
                let (s, b1, b2) = (next(), next(), next());
                TermKind::Case(s, x1.clone(), b1, x2.clone(), b2)
            }
            TermKind::If(..) => TermKind::If(next(), next(), next()),
        };
        Term::new(kind)
    }

    /// Rewrite bottom-up: children first, then `f` on the rebuilt node.
    /// `f` returns `None` to keep the node unchanged.
    pub fn map_bottom_up(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
        let kids: Vec<Term> = self.children().into_iter().map(|k| k.map_bottom_up(f)).collect();
        let changed = kids
            .iter()
            .zip(self.children())
            .any(|(n, o)| !Arc::ptr_eq(&n.0, &o.0));
        let node = if changed { self.with_children(kids) } else { self.clone() };
        f(&node).unwrap_or(node)
    }

    /// Visit every node, pre-order.
    pub fn for_each(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        for k in self.children() {
            k.for_each(f);
        }
    }

    /// Total number of term nodes (including lambda bodies).
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|k| k.node_count()).sum::<usize>()
    }

    /// All binder names and variable occurrences.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.for_each(&mut |t| match t.kind() {
            TermKind::Var(x) | TermKind::Lam(x, _, _) => {
                out.insert(x.clone());
            }
            TermKind::Case(_, x1, _, x2, _) => {
                out.insert(x1.clone());
                out.insert(x2.clone());
            }
            _ => {}
        });
        out
    }

    /// Equality up to consistent renaming of bound term variables and μ binders.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn bind(env: &mut Vec<(Name, Name)>, x: &Name, y: &Name) {
            env.push((x.clone(), y.clone()));
        }
        fn go(a: &Term, b: &Term, env: &mut Vec<(Name, Name)>) -> bool {
            if Arc::ptr_eq(&a.0, &b.0) && a.is_closed() {
                return true;
            }
            match (a.kind(), b.kind()) {
                (TermKind::Unit, TermKind::Unit)
                | (TermKind::True, TermKind::True)
                | (TermKind::False, TermKind::False)
                | (TermKind::Hole, TermKind::Hole) => true,
                (TermKind::Var(x), TermKind::Var(y)) => {
                    for (l, r) in env.iter().rev() {
                        if l == x || r == y {
                            return l == x && r == y;
                        }
                    }
                    x == y
                }
                (TermKind::Lam(x, tx, bx), TermKind::Lam(y, ty, by)) => {
                    if !tx.alpha_eq(ty) {
                        return false;
                    }
                    bind(env, x, y);
                    let r = go(bx, by, env);
                    env.pop();
                    r
                }
                (TermKind::Case(s, x1, b1, x2, b2), TermKind::Case(t, y1, c1, y2, c2)) => {
                    if !go(s, t, env) {
                        return false;
                    }
                    bind(env, x1, y1);
                    let r1 = go(b1, c1, env);
                    env.pop();
                    if !r1 {
                        return false;
                    }
                    bind(env, x2, y2);
                    let r2 = go(b2, c2, env);
                    env.pop();
                    r2
                }
                (TermKind::Fix(s, x), TermKind::Fix(t, y))
                | (TermKind::Fold(s, x), TermKind::Fold(t, y))
                | (TermKind::Unfold(s, x), TermKind::Unfold(t, y)) => s.alpha_eq(t) && go(x, y, env),
                (ka, kb) if std::mem::discriminant(ka) == std::mem::discriminant(kb) => {
                    let (ca, cb) = (a.children(), b.children());
                    ca.len() == cb.len() && ca.iter().zip(cb.iter()).all(|(x, y)| go(x, y, env))
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Rename every binder to `x0, x1, ...` in pre-order and every μ binder
    /// canonically; alpha-equivalent terms map to identical trees.
    pub fn canonical(&self) -> Term {
        fn go(t: &Term, env: &mut Vec<(Name, Name)>, next: &mut usize) -> Term {
            let fresh = |next: &mut usize| {
                let n = name(&format!("x{}", *next));
                *next += 1;
                n
            };
            match t.kind() {
                TermKind::Var(x) => match env.iter().rev().find(|(o, _)| o == x) {
                    Some((_, n)) => Term::var_named(n.clone()),
                    None => t.clone(),
                },
                TermKind::Lam(x, ty, b) => {
                    let n = fresh(next);
                    env.push((x.clone(), n.clone()));
                    let b = go(b, env, next);
                    env.pop();
                    Term::lam_named(n, ty.canonical(), b)
                }
                TermKind::Case(s, x1, b1, x2, b2) => {
                    let s = go(s, env, next);
                    let n1 = fresh(next);
                    env.push((x1.clone(), n1.clone()));
                    let b1 = go(b1, env, next);
                    env.pop();
                    let n2 = fresh(next);
                    env.push((x2.clone(), n2.clone()));
                    let b2 = go(b2, env, next);
                    env.pop();
                    Term::case_named(s, n1, b1, n2, b2)
                }
                TermKind::Fix(ty, a) => Term::fix(ty.canonical(), go(a, env, next)),
                TermKind::Fold(ty, a) => Term::fold(ty.canonical(), go(a, env, next)),
                TermKind::Unfold(ty, a) => Term::unfold(ty.canonical(), go(a, env, next)),
                _ => {
                    let kids = t.children().into_iter().map(|k| go(k, env, next)).collect();
                    t.with_children(kids)
                }
            }
        }
        go(self, &mut Vec::new(), &mut 0)
    }

    /// Every annotation type in the term, pre-order.
    pub fn annotations(&self) -> Vec<ObjType> {
        let mut out = Vec::new();
        self.for_each(&mut |t| match t.kind() {
            TermKind::Lam(_, ty, _)
            | TermKind::Fix(ty, _)
            | TermKind::Fold(ty, _)
            | TermKind::Unfold(ty, _) => out.push(ty.clone()),
            _ => {}
        });
        out
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Size of a term: lambda bodies contribute nothing.
pub fn size(t: &Term) -> u64 {
    t.size()
}

/// Capture-avoiding substitution `t[v/x]`.
pub fn subst_term(t: &Term, x: &str, v: &Term) -> Term {
    if !t.has_free(x) {
        return t.clone();
    }
    match t.kind() {
        TermKind::Var(y) => {
            debug_assert!(&**y == x);
            v.clone()
        }
        TermKind::Lam(y, ty, b) => {
            let (y, b) = rename_if_captured(y, b, x, v);
            Term::lam_named(y, ty.clone(), subst_term(&b, x, v))
        }
        TermKind::Case(s, x1, b1, x2, b2) => {
            let s = subst_term(s, x, v);
            let b1 = if &**x1 == x {
                (x1.clone(), b1.clone())
            } else {
                let (n, b) = rename_if_captured(x1, b1, x, v);
                (n, subst_term(&b, x, v))
            };
            let b2 = if &**x2 == x {
                (x2.clone(), b2.clone())
            } else {
                let (n, b) = rename_if_captured(x2, b2, x, v);
                (n, subst_term(&b, x, v))
            };
            Term::case_named(s, b1.0, b1.1, b2.0, b2.1)
        }
        _ => {
            let kids = t.children().into_iter().map(|k| subst_term(k, x, v)).collect();
            t.with_children(kids)
        }
    }
}

fn rename_if_captured(y: &Name, body: &Term, x: &str, v: &Term) -> (Name, Term) {
    if v.has_free(y) && body.has_free(x) {
        let fresh = fresh_name(y, |c| c == x || v.has_free(c) || body.has_free(c));
        let body = subst_term(body, y, &Term::var_named(fresh.clone()));
        (fresh, body)
    } else {
        (y.clone(), body.clone())
    }
}

// ---------------------------------------------------------------------------
// Contexts and environments
// ---------------------------------------------------------------------------

/// A program context: a term containing exactly one hole.
#[derive(Clone, PartialEq)]
pub struct ProgCtx(Term);

#[derive(Debug, Error, Clone, PartialEq)]
#[error("a program context must contain exactly one hole, found {0}")]
pub struct HoleCountError(pub u32);

impl ProgCtx {
    pub fn new(t: Term) -> Result<ProgCtx, HoleCountError> {
        if t.holes() == 1 {
            Ok(ProgCtx(t))
        } else {
            Err(HoleCountError(t.holes()))
        }
    }
    pub fn hole() -> ProgCtx {
        ProgCtx(Term::hole())
    }
    pub fn term(&self) -> &Term {
        &self.0
    }

    /// Fill the hole. Variables of `t` bound by the context are captured.
    pub fn plug(&self, t: &Term) -> Term {
        plug_hole(&self.0, t)
    }

    /// Compose: the hole of `self` is filled with `inner`.
    pub fn compose(&self, inner: &ProgCtx) -> ProgCtx {
        ProgCtx(plug_hole(&self.0, inner.term()))
    }

    /// Binders enclosing the hole, outermost first.
    pub fn hole_binders(&self) -> Vec<(Name, Option<ObjType>)> {
        fn go(t: &Term, acc: &mut Vec<(Name, Option<ObjType>)>) -> bool {
            match t.kind() {
                TermKind::Hole => true,
                TermKind::Lam(x, ty, b) => {
                    acc.push((x.clone(), Some(ty.clone())));
                    if b.holes() > 0 && go(b, acc) {
                        return true;
                    }
                    acc.pop();
                    false
                }
                TermKind::Case(s, x1, b1, x2, b2) => {
                    if s.holes() > 0 {
                        return go(s, acc);
                    }
                    for (x, b) in [(x1, b1), (x2, b2)] {
                        if b.holes() > 0 {
                            acc.push((x.clone(), None));
                            if go(b, acc) {
                                return true;
                            }
                            acc.pop();
                        }
                    }
                    false
                }
                _ => t.children().into_iter().any(|k| k.holes() > 0 && go(k, acc)),
            }
        }
        let mut acc = Vec::new();
        go(&self.0, &mut acc);
        acc
    }
}

impl fmt::Debug for ProgCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ProgCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn plug_hole(c: &Term, t: &Term) -> Term {
    if c.holes() == 0 {
        return c.clone();
    }
    match c.kind() {
        TermKind::Hole => t.clone(),
        _ => {
            let kids = c.children().into_iter().map(|k| plug_hole(k, t)).collect();
            c.with_children(kids)
        }
    }
}

/// Typing environment: an ordered list of bindings without duplicates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypeEnv(Vec<(Name, ObjType)>);

impl TypeEnv {
    pub fn empty() -> TypeEnv {
        TypeEnv(Vec::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Name, ObjType)>) -> TypeEnv {
        let mut env = TypeEnv::empty();
        for (x, t) in pairs {
            env = env.extend(x, t);
        }
        env
    }

    /// Add a binding; an earlier binding of the same name is removed.
    pub fn extend(&self, x: Name, t: ObjType) -> TypeEnv {
        let mut v: Vec<(Name, ObjType)> = self.0.iter().filter(|(y, _)| *y != x).cloned().collect();
        v.push((x, t));
        TypeEnv(v)
    }

    pub fn lookup(&self, x: &str) -> Option<&ObjType> {
        self.0.iter().rev().find(|(y, _)| &**y == x).map(|(_, t)| t)
    }

    pub fn remove(&self, x: &str) -> TypeEnv {
        TypeEnv(self.0.iter().filter(|(y, _)| &**y != x).cloned().collect())
    }

    pub fn bindings(&self) -> &[(Name, ObjType)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn map_types(&self, f: impl Fn(&ObjType) -> ObjType) -> TypeEnv {
        TypeEnv(self.0.iter().map(|(x, t)| (x.clone(), f(t))).collect())
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        for (i, (x, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{t}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Language restrictions
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangError {
    #[error("`{construct}` is not part of {lang}")]
    Construct { construct: &'static str, lang: Lang, at: Term },
    #[error("type {ty} is not a {lang} type: {why}")]
    BadType { ty: ObjType, lang: Lang, why: &'static str, at: Term },
    #[error("`{construct}` annotation {ty} must be {shape}")]
    Shape { construct: &'static str, ty: ObjType, shape: &'static str, at: Term },
}

/// Check a type is admissible as an annotation in `lang`.
pub fn check_type_lang(lang: Lang, ty: &ObjType) -> Result<(), &'static str> {
    if !ty.is_closed() {
        return Err("annotation types must be closed");
    }
    match lang {
        Lang::Fix if !ty.is_mu_free() => Err("recursive types are not available"),
        _ if !contractive(ty) => Err("recursive types must be contractive"),
        _ => Ok(()),
    }
}

/// Check the language restrictions on constructs and annotations.
pub fn check_lang(lang: Lang, t: &Term) -> Result<(), LangError> {
    let mut err = None;
    t.for_each(&mut |s| {
        if err.is_some() {
            return;
        }
        let bad_type = |ty: &ObjType| {
            check_type_lang(lang, ty).err().map(|why| LangError::BadType {
                ty: ty.clone(),
                lang,
                why,
                at: s.clone(),
            })
        };
        err = match s.kind() {
            TermKind::Lam(_, ty, _) => bad_type(ty),
            TermKind::Fix(ty, _) => {
                if lang != Lang::Fix {
                    Some(LangError::Construct { construct: "fix", lang, at: s.clone() })
                } else if !matches!(ty.kind(), TypeKind::Arrow(..)) {
                    Some(LangError::Shape { construct: "fix", ty: ty.clone(), shape: "an arrow type", at: s.clone() })
                } else {
                    bad_type(ty)
                }
            }
            TermKind::Fold(ty, _) | TermKind::Unfold(ty, _) => {
                let construct = if matches!(s.kind(), TermKind::Fold(..)) { "fold" } else { "unfold" };
                if lang != Lang::Iso {
                    Some(LangError::Construct { construct, lang, at: s.clone() })
                } else if !ty.is_mu() {
                    Some(LangError::Shape { construct, ty: ty.clone(), shape: "a recursive type", at: s.clone() })
                } else {
                    bad_type(ty)
                }
            }
            _ => None,
        };
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list_b() -> ObjType {
        ObjType::mu("a", ObjType::sum(ObjType::unit(), ObjType::prod(ObjType::bool(), ObjType::tvar("a"))))
    }

    #[test]
    fn size_examples() {
        assert_eq!(size(&Term::unit()), 1);
        let l = Term::lam("x", ObjType::unit(), Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(size(&l), 1);
        assert_eq!(size(&Term::pair(Term::unit(), Term::tt())), 3);
        let c = Term::case(Term::var("s"), "a", Term::unit(), "b", Term::tt());
        assert_eq!(size(&c), 4);
    }

    #[test]
    fn subst_examples() {
        assert_eq!(subst_term(&Term::var("x"), "x", &Term::unit()), Term::unit());
        let l = Term::lam("x", ObjType::bool(), Term::var("x"));
        assert_eq!(subst_term(&l, "x", &Term::tt()), l);
        let su = ObjType::sum(ObjType::unit(), ObjType::tvar("a"));
        let m = ObjType::mu("a", su.clone());
        assert_eq!(subst_type(&su, "a", &m), ObjType::sum(ObjType::unit(), m.clone()));
    }

    #[test]
    fn subst_avoids_capture() {
        // (\y. x y)[y/x] must not capture.
        let t = Term::lam("y", ObjType::unit(), Term::app(Term::var("x"), Term::var("y")));
        let r = subst_term(&t, "x", &Term::var("y"));
        match r.kind() {
            TermKind::Lam(b, _, body) => {
                assert_ne!(&**b, "y");
                assert!(body.has_free("y") && body.has_free(b));
            }
            _ => panic!(),
        }
        let ty = ObjType::mu("b", ObjType::arrow(ObjType::tvar("a"), ObjType::tvar("b")));
        let r = subst_type(&ty, "a", &ObjType::tvar("b"));
        assert_eq!(r.ftv(), [name("b")].into_iter().collect());
    }

    #[test]
    fn contractive_examples() {
        assert!(!contractive(&ObjType::mu("a", ObjType::tvar("a"))));
        assert!(contractive(&list_b()));
        assert!(!contractive(&ObjType::mu("a", ObjType::mu("b", ObjType::tvar("a")))));
        assert!(contractive(&ObjType::mu("a", ObjType::mu("b", ObjType::arrow(ObjType::tvar("a"), ObjType::tvar("b"))))));
    }

    #[test]
    fn lmc_examples() {
        assert_eq!(lmc(&ObjType::unit()), 0);
        assert_eq!(lmc(&ObjType::mu("a", ObjType::sum(ObjType::tvar("a"), ObjType::unit()))), 1);
        assert_eq!(
            lmc(&ObjType::mu("a", ObjType::mu("b", ObjType::arrow(ObjType::unit(), ObjType::unit())))),
            2
        );
    }

    #[test]
    fn alpha_eq_types() {
        let a = ObjType::mu("a", ObjType::arrow(ObjType::tvar("a"), ObjType::unit()));
        let b = ObjType::mu("b", ObjType::arrow(ObjType::tvar("b"), ObjType::unit()));
        assert!(a.alpha_eq(&b));
        assert_ne!(a, b);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn plug_and_binders() {
        let c = ProgCtx::new(Term::lam("z", ObjType::bool(), Term::ite(Term::hole(), Term::unit(), Term::unit()))).unwrap();
        assert_eq!(c.hole_binders().len(), 1);
        let p = c.plug(&Term::var("z"));
        assert!(p.is_closed());
        assert!(ProgCtx::new(Term::unit()).is_err());
    }

    #[test]
    fn env_extend_removes_duplicates() {
        let e = TypeEnv::empty().extend(name("x"), ObjType::unit()).extend(name("x"), ObjType::bool());
        assert_eq!(e.len(), 1);
        assert_eq!(e.lookup("x"), Some(&ObjType::bool()));
    }
}
