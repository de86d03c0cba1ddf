//! Small-step call-by-value evaluation, fueled evaluation and the
//! bounded-termination judgments.

use std::fmt;

use crate::syntax::{subst_term, Term, TermKind};

/// One reduction step, or `None` when `t` is a value or stuck.
///
/// The redex is found by descending through evaluation positions
/// left to right; evaluation contexts are never materialised.
pub fn step(t: &Term) -> Option<Term> {
    match t.kind() {
        TermKind::App(f, a) => {
            if !f.is_value() {
                return step(f).map(|f| Term::app(f, a.clone()));
            }
            if !a.is_value() {
                return step(a).map(|a| Term::app(f.clone(), a));
            }
            match f.kind() {
                TermKind::Lam(x, _, body) => Some(subst_term(body, x, a)),
                _ => None,
            }
        }
        TermKind::Pair(a, b) => {
            if !a.is_value() {
                step(a).map(|a| Term::pair(a, b.clone()))
            } else {
                step(b).map(|b| Term::pair(a.clone(), b))
            }
        }
        TermKind::Proj1(p) | TermKind::Proj2(p) => {
            if !p.is_value() {
                let first = matches!(t.kind(), TermKind::Proj1(_));
                return step(p).map(|p| if first { Term::proj1(p) } else { Term::proj2(p) });
            }
            match (t.kind(), p.kind()) {
                (TermKind::Proj1(_), TermKind::Pair(a, _)) => Some(a.clone()),
                (TermKind::Proj2(_), TermKind::Pair(_, b)) => Some(b.clone()),
                _ => None,
            }
        }
        TermKind::Inl(a) => step(a).map(Term::inl),
        TermKind::Inr(a) => step(a).map(Term::inr),
        TermKind::Fold(ty, a) => step(a).map(|a| Term::fold(ty.clone(), a)),
        TermKind::Case(s, x1, b1, x2, b2) => {
            if !s.is_value() {
                return step(s).map(|s| Term::case_named(s, x1.clone(), b1.clone(), x2.clone(), b2.clone()));
            }
            match s.kind() {
                TermKind::Inl(v) => Some(subst_term(b1, x1, v)),
                TermKind::Inr(v) => Some(subst_term(b2, x2, v)),
                _ => None,
            }
        }
        TermKind::If(c, a, b) => {
            if !c.is_value() {
                return step(c).map(|c| Term::ite(c, a.clone(), b.clone()));
            }
            match c.kind() {
                TermKind::True => Some(a.clone()),
                TermKind::False => Some(b.clone()),
                _ => None,
            }
        }
        TermKind::Seq(a, b) => {
            if !a.is_value() {
                return step(a).map(|a| Term::seq(a, b.clone()));
            }
            match a.kind() {
                TermKind::Unit => Some(b.clone()),
                _ => None,
            }
        }
        TermKind::Fix(ty, f) => {
            if !f.is_value() {
                return step(f).map(|f| Term::fix(ty.clone(), f));
            }
            match f.kind() {
                TermKind::Lam(x, _, body) => Some(subst_term(body, x, t)),
                _ => None,
            }
        }
        TermKind::Unfold(ty, a) => {
            if !a.is_value() {
                return step(a).map(|a| Term::unfold(ty.clone(), a));
            }
            match a.kind() {
                TermKind::Fold(_, v) => Some(v.clone()),
                _ => None,
            }
        }
        TermKind::Unit
        | TermKind::True
        | TermKind::False
        | TermKind::Lam(..)
        | TermKind::Var(_)
        | TermKind::Hole => None,
    }
}

/// Why a non-value term cannot step.
pub fn stuck_reason(t: &Term) -> String {
    fn go(t: &Term) -> String {
        let first_nonvalue = t.children().into_iter().find(|k| !k.is_value() && !matches!(t.kind(), TermKind::Lam(..)));
        if let Some(k) = first_nonvalue {
            if !matches!(t.kind(), TermKind::Case(..) | TermKind::If(..)) || std::ptr::eq(k, t.children()[0]) {
                return go(k);
            }
        }
        match t.kind() {
            TermKind::Var(x) => format!("free variable `{x}`"),
            TermKind::Hole => "unfilled hole".to_string(),
            TermKind::App(f, _) => format!("application of non-function `{f}`"),
            TermKind::Proj1(p) | TermKind::Proj2(p) => format!("projection from non-pair `{p}`"),
            TermKind::Case(s, ..) => format!("case on non-injection `{s}`"),
            TermKind::If(c, ..) => format!("if on non-boolean `{c}`"),
            TermKind::Seq(a, _) => format!("sequencing on non-unit `{a}`"),
            TermKind::Fix(_, f) => format!("fix of non-function `{f}`"),
            TermKind::Unfold(_, a) => format!("unfold of non-fold `{a}`"),
            _ => format!("`{t}` cannot step"),
        }
    }
    go(t)
}

/// Result of fueled evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalOutcome {
    Value { v: Term, steps: u64 },
    OutOfFuel { last: Term, steps: u64 },
    Stuck { at: Term, steps: u64, reason: String },
}

impl EvalOutcome {
    pub fn value(&self) -> Option<&Term> {
        match self {
            EvalOutcome::Value { v, .. } => Some(v),
            _ => None,
        }
    }
    pub fn steps(&self) -> u64 {
        match self {
            EvalOutcome::Value { steps, .. } | EvalOutcome::OutOfFuel { steps, .. } | EvalOutcome::Stuck { steps, .. } => *steps,
        }
    }
    pub fn terminated(&self) -> bool {
        matches!(self, EvalOutcome::Value { .. })
    }
    pub fn out_of_fuel(&self) -> bool {
        matches!(self, EvalOutcome::OutOfFuel { .. })
    }
    pub fn is_stuck(&self) -> bool {
        matches!(self, EvalOutcome::Stuck { .. })
    }
    pub fn label(&self) -> &'static str {
        match self {
            EvalOutcome::Value { .. } => "value",
            EvalOutcome::OutOfFuel { .. } => "out-of-fuel",
            EvalOutcome::Stuck { .. } => "stuck",
        }
    }
}

impl fmt::Display for EvalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalOutcome::Value { v, steps } => write!(f, "{v}  ({steps} steps)"),
            EvalOutcome::OutOfFuel { steps, .. } => write!(f, "out of fuel after {steps} steps"),
            EvalOutcome::Stuck { at, steps, reason } => write!(f, "stuck after {steps} steps at `{at}`: {reason}"),
        }
    }
}

/// The redex at the root of `t`, when every evaluation position of `t`
/// already holds a value.
fn contract(t: &Term) -> Option<Term> {
    match t.kind() {
        TermKind::App(f, a) => match f.kind() {
            TermKind::Lam(x, _, body) => Some(subst_term(body, x, a)),
            _ => None,
        },
        TermKind::Proj1(p) => match p.kind() {
            TermKind::Pair(a, _) => Some(a.clone()),
            _ => None,
        },
        TermKind::Proj2(p) => match p.kind() {
            TermKind::Pair(_, b) => Some(b.clone()),
            _ => None,
        },
        TermKind::Case(s, x1, b1, x2, b2) => match s.kind() {
            TermKind::Inl(v) => Some(subst_term(b1, x1, v)),
            TermKind::Inr(v) => Some(subst_term(b2, x2, v)),
            _ => None,
        },
        TermKind::If(c, a, b) => match c.kind() {
            TermKind::True => Some(a.clone()),
            TermKind::False => Some(b.clone()),
            _ => None,
        },
        TermKind::Seq(a, b) => match a.kind() {
            TermKind::Unit => Some(b.clone()),
            _ => None,
        },
        TermKind::Fix(_, f) => match f.kind() {
            TermKind::Lam(x, _, body) => Some(subst_term(body, x, t)),
            _ => None,
        },
        TermKind::Unfold(_, a) => match a.kind() {
            TermKind::Fold(_, v) => Some(v.clone()),
            _ => None,
        },
        _ => None,
    }
}

/// The first evaluation position of `t` holding a non-value, as
/// `(position, subterm)`.
fn focus_child(t: &Term) -> Option<(u8, &Term)> {
    let pick = |k: &Term, i: u8| (!k.is_value()).then_some(i);
    let (i, k) = match t.kind() {
        TermKind::App(f, a) | TermKind::Pair(f, a) => {
            if !f.is_value() {
                (0, f)
            } else {
                (1, a)
            }
        }
        TermKind::Proj1(k) | TermKind::Proj2(k) | TermKind::Inl(k) | TermKind::Inr(k) => (0, k),
        TermKind::Case(k, ..) | TermKind::If(k, ..) | TermKind::Seq(k, _) => (0, k),
        TermKind::Fix(_, k) | TermKind::Fold(_, k) | TermKind::Unfold(_, k) => (0, k),
        _ => return None,
    };
    pick(k, i).map(|i| (i, k))
}

/// `parent` with the child at evaluation position `pos` replaced by `k`.
fn plug(parent: &Term, pos: u8, k: Term) -> Term {
    match parent.kind() {
        TermKind::App(f, a) => {
            if pos == 0 {
                Term::app(k, a.clone())
            } else {
                Term::app(f.clone(), k)
            }
        }
        TermKind::Pair(a, b) => {
            if pos == 0 {
                Term::pair(k, b.clone())
            } else {
                Term::pair(a.clone(), k)
            }
        }
        TermKind::Proj1(_) => Term::proj1(k),
        TermKind::Proj2(_) => Term::proj2(k),
        TermKind::Inl(_) => Term::inl(k),
        TermKind::Inr(_) => Term::inr(k),
        TermKind::Case(_, x1, b1, x2, b2) => Term::case_named(k, x1.clone(), b1.clone(), x2.clone(), b2.clone()),
        TermKind::If(_, a, b) => Term::ite(k, a.clone(), b.clone()),
        TermKind::Seq(_, b) => Term::seq(k, b.clone()),
        TermKind::Fix(ty, _) => Term::fix(ty.clone(), k),
        TermKind::Fold(ty, _) => Term::fold(ty.clone(), k),
        TermKind::Unfold(ty, _) => Term::unfold(ty.clone(), k),
        _ => unreachable!("plug into a leaf"),
    }
}

enum Focus {
    Value,
    Stuck,
    Redex(Term),
}

/// Reduction with the evaluation context kept as a stack of frames.
///
/// Takes exactly the steps of [`step`], but does not re-walk the context
/// on every step. The size of the whole term is tracked incrementally.
struct Machine {
    focus: Term,
    frames: Vec<(Term, u8, u64)>,
    ctx_size: u64,
}

impl Machine {
    fn new(t: &Term) -> Machine {
        Machine { focus: t.clone(), frames: Vec::new(), ctx_size: 0 }
    }

    fn size(&self) -> u64 {
        self.ctx_size + self.focus.size()
    }

    /// Move the focus to the next redex without stepping.
    fn refocus(&mut self) -> Focus {
        loop {
            if self.focus.is_value() {
                let Some((parent, pos, extra)) = self.frames.pop() else {
                    return Focus::Value;
                };
                self.ctx_size -= extra;
                let v = std::mem::replace(&mut self.focus, Term::unit());
                self.focus = plug(&parent, pos, v);
                continue;
            }
            match focus_child(&self.focus) {
                Some((pos, k)) => {
                    let k = k.clone();
                    let extra = self.focus.size() - k.size();
                    self.ctx_size += extra;
                    let parent = std::mem::replace(&mut self.focus, k);
                    self.frames.push((parent, pos, extra));
                }
                None => {
                    return match contract(&self.focus) {
                        Some(r) => Focus::Redex(r),
                        None => Focus::Stuck,
                    }
                }
            }
        }
    }

    fn fire(&mut self, reduct: Term) {
        self.focus = reduct;
    }

    /// The whole term.
    fn term(&self) -> Term {
        let mut t = self.focus.clone();
        for (parent, pos, _) in self.frames.iter().rev() {
            t = plug(parent, *pos, t);
        }
        t
    }
}

/// Evaluate with at most `fuel` steps.
pub fn eval(t: &Term, fuel: u64) -> EvalOutcome {
    let mut m = Machine::new(t);
    let mut steps = 0u64;
    loop {
        match m.refocus() {
            Focus::Value => return EvalOutcome::Value { v: m.focus, steps },
            Focus::Stuck => {
                let at = m.term();
                let reason = stuck_reason(&at);
                return EvalOutcome::Stuck { at, steps, reason };
            }
            Focus::Redex(r) => {
                if steps >= fuel {
                    return EvalOutcome::OutOfFuel { last: m.term(), steps };
                }
                m.fire(r);
                steps += 1;
            }
        }
    }
}

/// Evaluate, calling `on_step(i, t_i)` for the initial term and every reduct.
pub fn eval_traced(t: &Term, fuel: u64, mut on_step: impl FnMut(u64, &Term)) -> EvalOutcome {
    let mut cur = t.clone();
    let mut steps = 0u64;
    on_step(0, &cur);
    loop {
        if cur.is_value() {
            return EvalOutcome::Value { v: cur, steps };
        }
        if steps >= fuel {
            return EvalOutcome::OutOfFuel { last: cur, steps };
        }
        match step(&cur) {
            Some(next) => {
                cur = next;
                steps += 1;
                on_step(steps, &cur);
            }
            None => {
                let reason = stuck_reason(&cur);
                return EvalOutcome::Stuck { at: cur, steps, reason };
            }
        }
    }
}

/// Trace lines `<step#> <term>`, one per term in the reduction sequence.
pub fn trace(t: &Term, fuel: u64) -> (Vec<String>, EvalOutcome) {
    let mut lines = Vec::new();
    let out = eval_traced(t, fuel, |i, s| lines.push(format!("{i} {s}")));
    (lines, out)
}

/// Shrink-termination `t ⇓shrink_n v`: a value needs `size(v) ≤ n`; a step
/// from `t` at budget `n + 1` needs `size(t) ≤ n` and continues at `n`.
/// At most `fuel` steps are taken; `n` already bounds them.
pub fn shrink_holds(t: &Term, n: u64, fuel: u64) -> bool {
    let mut m = Machine::new(t);
    let mut budget = n;
    let mut steps = 0u64;
    loop {
        match m.refocus() {
            Focus::Value => return m.focus.size() <= budget,
            Focus::Stuck => return false,
            Focus::Redex(r) => {
                if budget == 0 || m.size() > budget - 1 || steps >= fuel {
                    return false;
                }
                m.fire(r);
                budget -= 1;
                steps += 1;
            }
        }
    }
}

/// Least `n` with `shrink_holds(t, n)`, when `t` reaches a value within
/// `fuel` steps. For a run `t_0 → … → t_k = v` it is the maximum of
/// `size(t_i) + i + 1` over `i < k` and `size(v) + k`.
pub fn find_shrink_bound(t: &Term, fuel: u64) -> Option<u64> {
    let mut m = Machine::new(t);
    let mut bound = 0u64;
    let mut i = 0u64;
    loop {
        match m.refocus() {
            Focus::Value => return Some(bound.max(m.focus.size() + i)),
            Focus::Stuck => return None,
            Focus::Redex(r) => {
                if i >= fuel {
                    return None;
                }
                bound = bound.max(m.size() + i + 1);
                m.fire(r);
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;
    use crate::syntax::{Lang, ObjType};

    fn p(s: &str, l: Lang) -> Term {
        parse_term(s, l).unwrap()
    }

    #[test]
    fn machine_matches_stepping() {
        let cases = [
            ("(\\x:Bool. if x then (unit, false) else (unit, true)) ((\\y:Bool. y) true)", Lang::Fix),
            ("case inl (if true then unit else unit) of inl x -> (x; true) | inr y -> y", Lang::Fix),
            ("fix[Bool -> Bool] (\\f:Bool -> Bool. \\b:Bool. if b then f false else b) true", Lang::Fix),
            ("fix[Unit -> Unit] (\\f:Unit -> Unit. \\x:Unit. f x) unit", Lang::Fix),
            ("unfold[mu a. Unit + a] (fold[mu a. Unit + a] (inl ((\\x:Unit. x) unit)))", Lang::Iso),
            ("(unit, (\\x:Bool. x) unit)", Lang::Fix),
        ];
        for (s, l) in cases {
            let t = p(s, l);
            for fuel in [0, 1, 3, 50] {
                assert_eq!(eval(&t, fuel), eval_traced(&t, fuel, |_, _| {}), "{s} at fuel {fuel}");
            }
        }
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(&p("(\\x:Unit. x) unit", Lang::Fix)), Some(Term::unit()));
        let m = "mu a. Bool + a";
        assert_eq!(step(&p(&format!("unfold[{m}] (fold[{m}] (inl true))"), Lang::Iso)), Some(p("inl true", Lang::Iso)));
        let f = p("fix[Unit -> Unit] (\\f:Unit -> Unit. \\x:Unit. f x)", Lang::Fix);
        let s = step(&f).unwrap();
        match s.kind() {
            TermKind::Lam(_, _, body) => match body.kind() {
                TermKind::App(g, _) => assert_eq!(g, &f),
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval(&Term::unit(), 0), EvalOutcome::Value { v: Term::unit(), steps: 0 });
        assert_eq!(eval(&Term::seq(Term::unit(), Term::tt()), 10), EvalOutcome::Value { v: Term::tt(), steps: 1 });
        let omega = p("fix[Unit -> Unit] (\\f:Unit -> Unit. \\x:Unit. f x) unit", Lang::Fix);
        assert!(eval(&omega, 1000).out_of_fuel());
        assert!(eval(&p("true unit", Lang::Fix), 10).is_stuck());
    }

    #[test]
    fn shrink_examples() {
        assert!(shrink_holds(&Term::unit(), 1, 1));
        assert!(!shrink_holds(&Term::unit(), 0, 0));
        let t = Term::app(Term::lam("x", ObjType::unit(), Term::var("x")), Term::unit());
        assert!(shrink_holds(&t, 4, 4));
        assert!(!shrink_holds(&t, 3, 3));
        assert_eq!(find_shrink_bound(&Term::unit(), 10), Some(1));
        assert_eq!(find_shrink_bound(&t, 10), Some(4));
        let omega = p("fix[Unit -> Unit] (\\f:Unit -> Unit. \\x:Unit. f x) unit", Lang::Fix);
        assert_eq!(find_shrink_bound(&omega, 1000), None);
    }

    #[test]
    fn trace_lines() {
        let (lines, out) = trace(&p("(\\x:Unit. x) unit; true", Lang::Fix), 10);
        assert!(out.terminated());
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("0 "));
    }
}
