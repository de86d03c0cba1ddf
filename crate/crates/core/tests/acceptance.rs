//! Acceptance criteria 1-8. Each prints one `criterion N: PASS|FAIL` line;
//! the test fails if any criterion is red.
//!
//! Run with `cargo test -p mucalc-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use mucalc_core::backtranslation::{casetag, downgrade, extract, upgrade, Backtranslator, Direction, UValIndex};
use mucalc_core::harness::*;
use mucalc_core::print::type_unicode;
use mucalc_core::{
    eval, find_shrink_bound, parse_term, parse_type, shrink_holds, type_eq, Compiler, GenConfig, Lang, ObjType, Term,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { ok: true, detail: String::new() }
    }

    /// Record a sub-check; the first failures are kept for the report.
    fn expect(&mut self, cond: bool, what: impl FnOnce() -> String) {
        if !cond {
            if self.ok || self.detail.len() < 400 {
                if !self.detail.is_empty() {
                    self.detail.push_str("; ");
                }
                self.detail.push_str(&what());
            }
            self.ok = false;
        }
    }
}

fn finish(n: u32, mut v: Verdict, summary: String, elapsed: Duration, limit: Option<Duration>) -> bool {
    if let Some(limit) = limit {
        v.expect(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"));
    }
    let status = if v.ok { "PASS" } else { "FAIL" };
    let mut line = format!("criterion {n}: {status} {summary} [{elapsed:.2?}]");
    if !v.ok {
        line.push_str(&format!(" :: {}", v.detail));
    }
    println!("{line}");
    v.ok
}

fn ty(s: &str) -> ObjType {
    parse_type(s, Lang::Equi).unwrap()
}

fn eq(a: &ObjType, b: &ObjType) -> bool {
    type_eq(a, b).unwrap()
}

fn rng(k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case_seed(SEED, k))
}

/// Type equality on 500 generated contractive types.
fn criterion_1() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let mut r = rng(1);
    let types: Vec<ObjType> = (0..500).map(|_| gen_contractive_type(&mut r, 6)).collect();
    for (i, s) in types.iter().enumerate() {
        v.expect(s.depth() <= 6, || format!("type {s} deeper than 6"));
        let other = &types[(i * 7 + 3) % types.len()];
        let s1 = random_unfold(&mut r, s);
        let s2 = random_unfold(&mut r, &s1);
        v.expect(eq(s, s), || format!("not reflexive at {s}"));
        v.expect(eq(s, &s1) && eq(&s1, s), || format!("not invariant under unfolding: {s} vs {s1}"));
        v.expect(eq(&s1, &s2) && eq(s, &s2), || format!("not transitive: {s}, {s1}, {s2}"));
        v.expect(eq(s, other) == eq(other, s), || format!("not symmetric: {s}, {other}"));
        v.expect(eq(&s1, other) == eq(s, other), || format!("unfolding changes the answer against {other}"));
        if s.is_mu() {
            v.expect(eq(&s.unfold(), s), || format!("μ-unfolding of {s}"));
        }
        for (x, y) in [
            (ObjType::arrow(s.clone(), other.clone()), ObjType::arrow(s1.clone(), other.clone())),
            (ObjType::prod(other.clone(), s.clone()), ObjType::prod(other.clone(), s2.clone())),
            (ObjType::sum(s1.clone(), s2.clone()), ObjType::sum(s2.clone(), s.clone())),
        ] {
            v.expect(eq(&x, &y), || format!("not a congruence: {x} vs {y}"));
        }
    }
    let examples = [
        eq(&ty("mu a. Unit + a"), &ty("Unit + (mu a. Unit + a)")),
        eq(&ty("mu a. a -> Unit"), &ty("mu a. (a -> Unit) -> Unit")),
        eq(&ObjType::unit(), &ObjType::bool()),
        eq(&ty("(mu a. Bool + a) -> Bool"), &ty("(Bool + (mu a. Bool + a)) -> Bool")),
    ];
    v.expect(examples == [true, true, false, true], || format!("examples gave {examples:?}"));
    finish(1, v, "type equality on 500 types, examples (true, true, false, true)".into(), start.elapsed(), Some(Duration::from_secs(10)))
}

/// Shrink-termination versus termination on 300 terminating terms per language.
fn criterion_2() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let fuel = 10_000;
    let mut counts = Vec::new();
    for (li, lang) in [Lang::Fix, Lang::Iso, Lang::Equi].into_iter().enumerate() {
        let mut found = 0;
        let mut tried = 0u64;
        while found < 300 && tried < 3000 {
            let cfg = GenConfig::new(lang, case_seed(SEED ^ (li as u64 + 1), tried));
            tried += 1;
            let (t, _) = gen_well_typed(&cfg, None).expect("generation");
            if !eval(&t, fuel).terminated() {
                continue;
            }
            found += 1;
            let Some(k) = find_shrink_bound(&t, fuel) else {
                v.expect(false, || format!("no shrink bound for terminating {t}"));
                continue;
            };
            let ns = [0, 1, k / 2, k.saturating_sub(1), k, k + 1, 2 * k + 1];
            for n in ns {
                let holds = shrink_holds(&t, n, fuel);
                if holds {
                    v.expect(eval(&t, n).terminated(), || format!("{t} shrink-terminates within {n} but does not terminate in {n} steps"));
                    v.expect(shrink_holds(&t, n + 1, fuel), || format!("shrink not monotone at {n} for {t}"));
                }
                v.expect(holds == (n >= k), || format!("bound {k} of {t} is not the least at {n}"));
            }
        }
        v.expect(found == 300, || format!("only {found} terminating {lang:?} terms in {tried} tries"));
        counts.push(format!("{lang:?} {found}"));
    }
    finish(2, v, format!("shrink-termination on {}", counts.join(", ")), start.elapsed(), Some(Duration::from_secs(30)))
}

/// Compiler campaigns and mutation sensitivity.
fn criterion_3() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let mut parts = Vec::new();
    for which in Compiler::ALL {
        let cfg = GenConfig::new(which.source(), SEED);
        let r = campaign_compiler(which, 200, 10_000, &cfg);
        v.expect(r.cases_run == 200 && r.ok(), || {
            let f = r.failures.first().map(|f| format!("{}: {} on {}", f.case_id, f.reason, f.term)).unwrap_or_default();
            format!("{} ({f})", r.summary())
        });
        let mut faults = Vec::new();
        for fault in Fault::ALL.into_iter().filter(|f| f.applies(which)) {
            let m = campaign_compiler_with(which, Some(fault), 200, 10_000, &cfg);
            v.expect(!m.failures.is_empty(), || format!("{which} with {fault:?} produced no failure"));
            faults.push(format!("{fault:?}={}", m.failures.len()));
        }
        parts.push(format!("{which} {}/{} [{}]", r.passes, r.cases_run, faults.join(" ")));
    }
    finish(3, v, format!("compiler campaigns {}", parts.join(", ")), start.elapsed(), Some(Duration::from_secs(60)))
}

/// UVal shape checks and invariance under type equality.
fn criterion_4() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let list = Backtranslator::new(Direction::FE).uval(3, &ty("mu a. Unit + Bool * a"));
    let printed = type_unicode(&list);
    let literal = "((Unit⊎Unit)⊎(((Bool⊎Unit)×Unit)⊎Unit))⊎Unit";
    v.expect(printed == literal, || format!("uval(FE, 3, List_B) is {printed}, the expected expansion reads {literal}"));

    let mut r = rng(4);
    let types: Vec<ObjType> = (0..100).map(|_| gen_contractive_type(&mut r, 4)).collect();
    for dir in Direction::ALL {
        let mut g = Backtranslator::new(dir);
        for t in &types {
            for n in 0..=5 {
                let u = g.uval(n, t);
                v.expect(u.is_mu_free() && u.is_closed(), || format!("uval({dir}, {n}, {t}) = {u} mentions μ"));
            }
        }
    }
    let mut g = Backtranslator::new(Direction::FE);
    for t in &types {
        let t2 = random_unfold(&mut r, t);
        for n in 0..=5 {
            v.expect(g.uval(n, t) == g.uval(n, &t2), || format!("uval(FE, {n}) differs on {t} and {t2}"));
        }
    }
    finish(4, v, "uval List_B expansion, μ-free on 3x100 types, equivalent pairs on 100".into(), start.elapsed(), Some(Duration::from_secs(10)))
}

/// A closed type without arrows.
fn first_order(r: &mut ChaCha8Rng, depth: u32) -> ObjType {
    let k = if depth == 0 { r.gen_range(0..4) } else { r.gen_range(0..6) };
    match k {
        0 => ObjType::unit(),
        1 => ObjType::bool(),
        2 => ty("mu a. Unit + a"),
        3 => ty("mu a. Unit + Bool * a"),
        4 => ObjType::prod(first_order(r, depth - 1), first_order(r, depth - 1)),
        _ => ObjType::sum(first_order(r, depth - 1), first_order(r, depth - 1)),
    }
}

/// Upgrade, downgrade and casetag.
fn criterion_5() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let ix = |dir, n, s: &str| UValIndex::new(dir, n, ty(s));
    let down = downgrade(&ix(Direction::FI, 0, "Bool"), 1).unwrap();
    let out = eval(&Term::app(down, Term::inl(Term::tt())), 10);
    v.expect(out.value() == Some(&Term::unit()), || format!("downgrade(inl true) gave {out}"));
    let up = upgrade(&ix(Direction::FI, 0, "Bool"), 1).unwrap();
    let out = eval(&Term::app(up, Term::unit()), 10);
    v.expect(out.value() == Some(&Term::inr(Term::unit())), || format!("upgrade(unit) gave {out}"));

    let mut r = rng(5);
    let mut checked = 0;
    while checked < 200 {
        let dir = Direction::ALL[r.gen_range(0..3)];
        let n = r.gen_range(0..4);
        let t = first_order(&mut r, 2);
        let i = UValIndex::new(dir, n, t);
        let u = Backtranslator::new(dir).uval(n, &i.ty);
        let val = gen_value(&mut r, &u, 4);
        let rt = Term::app(downgrade(&i, 1).unwrap(), Term::app(upgrade(&i, 1).unwrap(), val.clone()));
        let out = eval(&rt, 100_000);
        v.expect(out.value() == Some(&val), || format!("downgrade∘upgrade at ({dir}, {n}, {}) on {val} gave {out}", i.ty));
        checked += 1;
    }
    let c = casetag(&ix(Direction::FI, 1, "Bool")).unwrap();
    let out = eval(&Term::app(c, Term::inr(Term::unit())), 10_000);
    v.expect(out.out_of_fuel() && out.steps() == 10_000, || format!("casetag on inr gave {out}"));
    finish(5, v, format!("boolean upgrade and downgrade, {checked} round trips, casetag divergence"), start.elapsed(), Some(Duration::from_secs(20)))
}

/// The extract divergence and why the shrink premise rules it out.
fn criterion_6() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let tau = parse_type("(Bool + Unit) + Unit", Lang::Fix).unwrap();
    let src = parse_term("inl (inl (inl (inl (inr unit))))", Lang::Fix).unwrap();
    let e = extract(Direction::FI, 2, &tau).unwrap();
    let out = eval(&Term::app(e, src), 10_000);
    v.expect(out.out_of_fuel(), || format!("extract(2) gave {out}"));
    let tgt = parse_term("inl (inl true)", Lang::Iso).unwrap();
    let size = tgt.size();
    v.expect(!shrink_holds(&tgt, 0, 10_000), || "the target value shrink-terminates within 0".into());
    v.expect(shrink_holds(&tgt, size, 10_000), || format!("the target value does not shrink-terminate within its size {size}"));
    finish(6, v, format!("extract exhausts fuel; target value of size {size} fails the shrink premise at 0"), start.elapsed(), None)
}

/// Backtranslation campaigns over the curated suites.
fn criterion_7() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let mut parts = Vec::new();
    for dir in Direction::ALL {
        let suite = backtr_suite(dir, 10, SEED);
        let r = campaign_backtr(dir, &suite, 32, 100_000);
        v.expect(r.ok(), || {
            let f = r.failures.first().map(|f| format!("{}: {}", f.case_id, f.reason)).unwrap_or_default();
            format!("{} ({f})", r.summary())
        });
        parts.push(format!("{dir} {}/{}", r.passes, r.cases_run));
    }
    let structural = check_fe_is_fi_ic(&equi_suite(), 32);
    v.expect(structural == Ok(25), || format!("FE against FI∘IC: {structural:?}"));
    finish(7, v, format!("backtranslation n=32 {}, FE = FI∘IC on 25 contexts", parts.join(", ")), start.elapsed(), Some(Duration::from_secs(300)))
}

/// Distinguishing contexts and their backtranslations.
fn criterion_8() -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    let pairs = fa_pairs();
    v.expect(pairs.len() == 20, || format!("{} pairs", pairs.len()));
    let mut told = 0;
    for dir in Direction::ALL {
        let entries = if dir == Direction::FI { iso_suite() } else { equi_suite() };
        for p in &pairs {
            match distinguish(dir, p, &entries, 32, 100_000) {
                Ok(_) => told += 1,
                Err(e) => v.expect(false, || format!("{dir}: {e}")),
            }
        }
    }
    finish(8, v, format!("{told}/{} pair distinctions reflected by the backtranslation", 3 * pairs.len()), start.elapsed(), None)
}

#[test]
fn acceptance() {
    let results = with_big_stack(|| {
        [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6(), criterion_7(), criterion_8()]
    });
    let red: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(red.is_empty(), "failing criteria: {red:?}");
}
