//! Printing in the ASCII surface syntax, with minimal parentheses.

use std::fmt::{self, Write};

use crate::syntax::{ObjType, Term, TermKind, TypeKind};

// Type precedence: arrow < sum < prod < atom.
const TY_ARROW: u8 = 0;
const TY_SUM: u8 = 1;
const TY_PROD: u8 = 2;
const TY_ATOM: u8 = 3;

fn write_type(out: &mut String, t: &ObjType, ctx: u8) {
    let (prec, paren) = match t.kind() {
        TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_) => (TY_ATOM, false),
        TypeKind::Arrow(..) | TypeKind::Mu(..) => (TY_ARROW, ctx > TY_ARROW),
        TypeKind::Sum(..) => (TY_SUM, ctx > TY_SUM),
        TypeKind::Prod(..) => (TY_PROD, ctx > TY_PROD),
    };
    let _ = prec;
    if paren {
        out.push('(');
    }
    match t.kind() {
        TypeKind::Unit => out.push_str("Unit"),
        TypeKind::Bool => out.push_str("Bool"),
        TypeKind::TVar(a) => out.push_str(a),
        TypeKind::Arrow(a, b) => {
            write_type(out, a, TY_SUM);
            out.push_str(" -> ");
            write_type(out, b, TY_ARROW);
        }
        TypeKind::Sum(a, b) => {
            write_type(out, a, TY_SUM);
            out.push_str(" + ");
            write_type(out, b, TY_PROD);
        }
        TypeKind::Prod(a, b) => {
            write_type(out, a, TY_PROD);
            out.push_str(" * ");
            write_type(out, b, TY_ATOM);
        }
        TypeKind::Mu(a, b) => {
            let _ = write!(out, "mu {a}. ");
            write_type(out, b, TY_ARROW);
        }
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for ObjType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_type(&mut s, self, TY_ARROW);
        f.write_str(&s)
    }
}

/// Unicode rendering with every compound operand parenthesised and no
/// spaces around operators, e.g. `((Unit⊎Unit)⊎Bool)→Unit`.
pub fn type_unicode(t: &ObjType) -> String {
    fn go(out: &mut String, t: &ObjType, top: bool) {
        let compound = !matches!(t.kind(), TypeKind::Unit | TypeKind::Bool | TypeKind::TVar(_));
        if compound && !top {
            out.push('(');
        }
        match t.kind() {
            TypeKind::Unit => out.push_str("Unit"),
            TypeKind::Bool => out.push_str("Bool"),
            TypeKind::TVar(a) => out.push_str(a),
            TypeKind::Arrow(a, b) | TypeKind::Sum(a, b) | TypeKind::Prod(a, b) => {
                let op = match t.kind() {
                    TypeKind::Arrow(..) => '→',
                    TypeKind::Sum(..) => '⊎',
                    _ => '×',
                };
                go(out, a, false);
                out.push(op);
                go(out, b, false);
            }
            TypeKind::Mu(a, b) => {
                let _ = write!(out, "μ{a}.");
                go(out, b, true);
            }
        }
        if compound && !top {
            out.push(')');
        }
    }
    let mut s = String::new();
    go(&mut s, t, true);
    s
}

// Term precedence levels; a node is printed bare when ctx <= its level.
const T_TOP: u8 = 0; // seq, lambda, if, case
const T_SEQL: u8 = 1; // left of `;`
const T_APP: u8 = 2; // application
const T_PREFIX: u8 = 3; // inl/inr/fix/fold/unfold
const T_POSTFIX: u8 = 4; // .1/.2

fn level(t: &Term) -> u8 {
    match t.kind() {
        TermKind::Seq(..) | TermKind::Lam(..) | TermKind::If(..) | TermKind::Case(..) => T_TOP,
        TermKind::App(..) => T_APP,
        TermKind::Inl(_)
        | TermKind::Inr(_)
        | TermKind::Fix(..)
        | TermKind::Fold(..)
        | TermKind::Unfold(..) => T_PREFIX,
        TermKind::Proj1(_) | TermKind::Proj2(_) => T_POSTFIX,
        _ => u8::MAX,
    }
}

fn write_term(out: &mut String, t: &Term, ctx: u8) {
    let paren = level(t) < ctx;
    if paren {
        out.push('(');
    }
    match t.kind() {
        TermKind::Unit => out.push_str("unit"),
        TermKind::True => out.push_str("true"),
        TermKind::False => out.push_str("false"),
        TermKind::Hole => out.push('_'),
        TermKind::Var(x) => out.push_str(x),
        TermKind::Lam(x, ty, b) => {
            let _ = write!(out, "\\{x}:{ty}. ");
            write_term(out, b, T_TOP);
        }
        TermKind::App(a, b) => {
            write_term(out, a, T_APP);
            out.push(' ');
            write_term(out, b, T_PREFIX);
        }
        TermKind::Pair(a, b) => {
            out.push('(');
            write_term(out, a, T_TOP);
            out.push_str(", ");
            write_term(out, b, T_TOP);
            out.push(')');
        }
        TermKind::Proj1(a) => {
            write_term(out, a, T_POSTFIX);
            out.push_str(".1");
        }
        TermKind::Proj2(a) => {
            write_term(out, a, T_POSTFIX);
            out.push_str(".2");
        }
        TermKind::Inl(a) => {
            out.push_str("inl ");
            write_term(out, a, T_PREFIX);
        }
        TermKind::Inr(a) => {
            out.push_str("inr ");
            write_term(out, a, T_PREFIX);
        }
        TermKind::Fix(ty, a) => {
            let _ = write!(out, "fix[{ty}] ");
            write_term(out, a, T_PREFIX);
        }
        TermKind::Fold(ty, a) => {
            let _ = write!(out, "fold[{ty}] ");
            write_term(out, a, T_PREFIX);
        }
        TermKind::Unfold(ty, a) => {
            let _ = write!(out, "unfold[{ty}] ");
            write_term(out, a, T_PREFIX);
        }
        TermKind::Case(s, x1, b1, x2, b2) => {
            out.push_str("case ");
            write_term(out, s, T_TOP);
            let _ = write!(out, " of inl {x1} -> ");
            write_term(out, b1, T_TOP);
            let _ = write!(out, " | inr {x2} -> ");
            write_term(out, b2, T_TOP);
        }
        TermKind::If(c, a, b) => {
            out.push_str("if ");
            write_term(out, c, T_TOP);
            out.push_str(" then ");
            write_term(out, a, T_TOP);
            out.push_str(" else ");
            write_term(out, b, T_TOP);
        }
        TermKind::Seq(a, b) => {
            write_term(out, a, T_SEQL);
            out.push_str("; ");
            write_term(out, b, T_TOP);
        }
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, T_TOP);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_types_minimally() {
        let t = ObjType::arrow(
            ObjType::arrow(ObjType::unit(), ObjType::bool()),
            ObjType::sum(ObjType::prod(ObjType::unit(), ObjType::bool()), ObjType::unit()),
        );
        assert_eq!(t.to_string(), "(Unit -> Bool) -> Unit * Bool + Unit");
        let m = ObjType::mu("a", ObjType::sum(ObjType::unit(), ObjType::tvar("a")));
        assert_eq!(ObjType::arrow(m.clone(), ObjType::unit()).to_string(), "(mu a. Unit + a) -> Unit");
        assert_eq!(ObjType::arrow(ObjType::unit(), m).to_string(), "Unit -> mu a. Unit + a");
    }

    #[test]
    fn prints_unicode_fully_parenthesised() {
        let t = ObjType::sum(
            ObjType::sum(ObjType::unit(), ObjType::unit()),
            ObjType::prod(ObjType::bool(), ObjType::unit()),
        );
        assert_eq!(type_unicode(&t), "(Unit⊎Unit)⊎(Bool×Unit)");
    }

    #[test]
    fn prints_terms() {
        let id = Term::lam("x", ObjType::unit(), Term::var("x"));
        assert_eq!(Term::app(id.clone(), Term::unit()).to_string(), "(\\x:Unit. x) unit");
        assert_eq!(Term::inl(Term::app(Term::var("f"), Term::unit())).to_string(), "inl (f unit)");
        assert_eq!(Term::proj1(Term::inl(Term::unit())).to_string(), "(inl unit).1");
        assert_eq!(Term::seq(id, Term::unit()).to_string(), "(\\x:Unit. x); unit");
    }
}
