//! The canonical compilers λF → λI, λI → λE and λF → λE, on terms and on
//! program contexts. Types are compiled by the identity.

use std::fmt;

use crate::syntax::{Lang, ObjType, ProgCtx, Term, TermKind, TypeKind};

/// Which compiler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Compiler {
    /// λF → λI: `fix` becomes the Z combinator over a recursive type.
    FI,
    /// λI → λE: fold and unfold are erased.
    IE,
    /// λF → λE: the composition of the two.
    FE,
}

impl Compiler {
    pub const ALL: [Compiler; 3] = [Compiler::FI, Compiler::IE, Compiler::FE];

    pub fn source(self) -> Lang {
        match self {
            Compiler::FI | Compiler::FE => Lang::Fix,
            Compiler::IE => Lang::Iso,
        }
    }

    pub fn target(self) -> Lang {
        match self {
            Compiler::FI => Lang::Iso,
            Compiler::IE | Compiler::FE => Lang::Equi,
        }
    }

    pub fn between(from: Lang, to: Lang) -> Option<Compiler> {
        match (from, to) {
            (Lang::Fix, Lang::Iso) => Some(Compiler::FI),
            (Lang::Iso, Lang::Equi) => Some(Compiler::IE),
            (Lang::Fix, Lang::Equi) => Some(Compiler::FE),
            _ => None,
        }
    }

    pub fn from_name(s: &str) -> Option<Compiler> {
        match s.to_ascii_uppercase().as_str() {
            "FI" => Some(Compiler::FI),
            "IE" => Some(Compiler::IE),
            "FE" => Some(Compiler::FE),
            _ => None,
        }
    }
}

impl fmt::Display for Compiler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compiler::FI => "FI",
            Compiler::IE => "IE",
            Compiler::FE => "FE",
        })
    }
}

/// The recursive type `μα. α → (τ1 → τ2)` used to compile `fix[τ1 → τ2]`.
pub fn z_type(fix_ty: &ObjType) -> ObjType {
    let a = fresh_tvar(fix_ty);
    ObjType::mu(&a, ObjType::arrow(ObjType::tvar(&a), fix_ty.clone()))
}

pub(crate) fn fresh_tvar(t: &ObjType) -> String {
    let mut names = Vec::new();
    collect_tvars(t, &mut names);
    let mut a = "a".to_string();
    let mut k = 0;
    while names.contains(&a) {
        k += 1;
        a = format!("a{k}");
    }
    a
}

fn collect_tvars(t: &ObjType, out: &mut Vec<String>) {
    match t.kind() {
        TypeKind::Unit | TypeKind::Bool => {}
        TypeKind::TVar(a) => out.push(a.to_string()),
        TypeKind::Mu(a, b) => {
            out.push(a.to_string());
            collect_tvars(b, out);
        }
        TypeKind::Arrow(a, b) | TypeKind::Prod(a, b) | TypeKind::Sum(a, b) => {
            collect_tvars(a, out);
            collect_tvars(b, out);
        }
    }
}

/// The annotated Z combinator for `fix[τ1 → τ2]`:
/// `λf:(τ1→τ2)→τ1→τ2. F (fold[M] F)` with
/// `F = λx:M. f (λy:τ1. ((unfold[M] x) x) y)` and `M = μα. α → (τ1 → τ2)`.
pub fn z_combinator(fix_ty: &ObjType) -> Term {
    let TypeKind::Arrow(dom, _) = fix_ty.kind() else {
        panic!("fix annotation {fix_ty} is not an arrow type");
    };
    let m = z_type(fix_ty);
    let f_ty = ObjType::arrow(fix_ty.clone(), fix_ty.clone());
    let self_app = Term::app(Term::unfold(m.clone(), Term::var("x")), Term::var("x"));
    let eta = Term::lam("y", dom.clone(), Term::app(self_app, Term::var("y")));
    let big_f = Term::lam("x", m.clone(), Term::app(Term::var("f"), eta));
    Term::lam("f", f_ty, Term::app(big_f.clone(), Term::fold(m, big_f)))
}

/// λF → λI.
pub fn compile_fix_iso(t: &Term) -> Term {
    t.map_bottom_up(&mut |s| match s.kind() {
        TermKind::Fix(ty, body) => Some(Term::app(z_combinator(ty), body.clone())),
        _ => None,
    })
}

/// λI → λE: erase fold and unfold.
pub fn compile_iso_equi(t: &Term) -> Term {
    t.map_bottom_up(&mut |s| match s.kind() {
        TermKind::Fold(_, a) | TermKind::Unfold(_, a) => Some(a.clone()),
        _ => None,
    })
}

/// λF → λE.
pub fn compile_fix_equi(t: &Term) -> Term {
    compile_iso_equi(&compile_fix_iso(t))
}

pub fn compile(which: Compiler, t: &Term) -> Term {
    match which {
        Compiler::FI => compile_fix_iso(t),
        Compiler::IE => compile_iso_equi(t),
        Compiler::FE => compile_fix_equi(t),
    }
}

/// Compile a context; the hole is preserved.
pub fn compile_ctx(which: Compiler, c: &ProgCtx) -> ProgCtx {
    ProgCtx::new(compile(which, c.term())).expect("compilation preserves the hole")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eval;
    use crate::parse::{parse_ctx, parse_term};
    use crate::statics::{check, typecheck};
    use crate::syntax::TypeEnv;

    #[test]
    fn fix_to_iso() {
        assert_eq!(compile_fix_iso(&Term::unit()), Term::unit());
        let src = parse_term("fix[Unit -> Unit] (\\f:Unit -> Unit. \\x:Unit. x)", Lang::Fix).unwrap();
        let out = compile_fix_iso(&src);
        let expected = parse_term(
            "(\\f:(Unit -> Unit) -> Unit -> Unit. \
               (\\x:mu a. a -> Unit -> Unit. f (\\y:Unit. unfold[mu a. a -> Unit -> Unit] x x y)) \
               (fold[mu a. a -> Unit -> Unit] (\\x:mu a. a -> Unit -> Unit. f (\\y:Unit. unfold[mu a. a -> Unit -> Unit] x x y)))) \
             (\\f:Unit -> Unit. \\x:Unit. x)",
            Lang::Iso,
        )
        .unwrap();
        assert_eq!(out, expected);
        let e = TypeEnv::empty();
        assert_eq!(typecheck(Lang::Iso, &e, &out).unwrap().ty, typecheck(Lang::Fix, &e, &src).unwrap().ty);
        let app_s = Term::app(src, Term::unit());
        let app_t = Term::app(out, Term::unit());
        assert_eq!(eval(&app_s, 100).value(), Some(&Term::unit()));
        assert_eq!(eval(&app_t, 100).value(), Some(&Term::unit()));
    }

    #[test]
    fn iso_to_equi() {
        let m = "mu a. Unit + a";
        let t = parse_term(&format!("fold[{m}] (inl unit)"), Lang::Iso).unwrap();
        assert_eq!(compile_iso_equi(&t), Term::inl(Term::unit()));
        let u = parse_term(&format!("unfold[{m}] (fold[{m}] (inl unit))"), Lang::Iso).unwrap();
        let erased = compile_iso_equi(&u);
        assert_eq!(erased, Term::inl(Term::unit()));
        assert_eq!(eval(&u, 10).steps(), 1);
        assert_eq!(eval(&erased, 10).steps(), 0);
        let ty = crate::parse::parse_type(m, Lang::Iso).unwrap();
        check(Lang::Equi, &TypeEnv::empty(), &compile_iso_equi(&t_fold()), &ty).unwrap();
    }

    fn t_fold() -> Term {
        parse_term("fold[mu a. Unit + a] (inr (fold[mu a. Unit + a] (inl unit)))", Lang::Iso).unwrap()
    }

    #[test]
    fn fix_to_equi_is_composition() {
        assert_eq!(compile_fix_equi(&Term::tt()), Term::tt());
        let src = parse_term("fix[Bool -> Bool] (\\f:Bool -> Bool. \\b:Bool. if b then f false else b) true", Lang::Fix).unwrap();
        let out = compile_fix_equi(&src);
        let mut folds = 0;
        out.for_each(&mut |s| {
            if matches!(s.kind(), TermKind::Fold(..) | TermKind::Unfold(..)) {
                folds += 1
            }
        });
        assert_eq!(folds, 0);
        assert_eq!(eval(&out, 1000).value(), Some(&Term::ff()));
        assert_eq!(typecheck(Lang::Equi, &TypeEnv::empty(), &out).unwrap().ty, ObjType::bool());
    }

    #[test]
    fn contexts() {
        assert_eq!(compile_ctx(Compiler::FI, &ProgCtx::hole()), ProgCtx::hole());
        let c = parse_ctx("if _ then unit else unit", Lang::Fix).unwrap();
        assert_eq!(compile_ctx(Compiler::FI, &c), c);
    }
}
