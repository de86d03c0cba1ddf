use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mucalc_core::backtranslation::{Backtranslator, Direction};
use mucalc_core::harness::{backtr_suite, campaign_compiler};
use mucalc_core::statics::typecheck_ctx_closed;
use mucalc_core::{compile, eval, parse_term, parse_type, type_eq, typecheck, Compiler, GenConfig, Lang, TypeEnv};

fn type_equality(c: &mut Criterion) {
    let pairs = [
        ("mu a. a -> Unit", "mu a. (a -> Unit) -> Unit"),
        ("mu a. Unit + Bool * a", "Unit + Bool * (Unit + Bool * (mu a. Unit + Bool * a))"),
        ("(mu a. Bool + a) -> Bool", "(Bool + (mu a. Bool + a)) -> Bool"),
    ];
    let pairs: Vec<_> = pairs.iter().map(|(a, b)| (parse_type(a, Lang::Equi).unwrap(), parse_type(b, Lang::Equi).unwrap())).collect();
    c.bench_function("type_eq", |b| {
        b.iter(|| {
            for (x, y) in &pairs {
                black_box(type_eq(x, y).unwrap());
            }
        })
    });
}

fn evaluation(c: &mut Criterion) {
    // A fix loop counting down a three-bit counter, before and after compilation.
    let src = parse_term(
        "fix[Bool * (Bool * Bool) -> Bool] (\\f:Bool * (Bool * Bool) -> Bool. \\p:Bool * (Bool * Bool). \
           if p.1 then f (false, p.2) else if p.2.1 then f (true, (false, p.2.2)) \
           else if p.2.2 then f (true, (true, false)) else true) (true, (true, true))",
        Lang::Fix,
    )
    .unwrap();
    typecheck(Lang::Fix, &TypeEnv::empty(), &src).unwrap();
    let mut group = c.benchmark_group("eval");
    for which in [None, Some(Compiler::FI), Some(Compiler::FE)] {
        let t = which.map_or_else(|| src.clone(), |w| compile(w, &src));
        let label = which.map_or("source".to_string(), |w| w.to_string());
        group.bench_with_input(BenchmarkId::from_parameter(label), &t, |b, t| b.iter(|| black_box(eval(t, 100_000))));
    }
    group.finish();
}

fn backtranslation(c: &mut Criterion) {
    let mut group = c.benchmark_group("backtranslate_suite");
    for dir in Direction::ALL {
        let suite = backtr_suite(dir, 1, 0);
        let derivs: Vec<_> = suite.iter().map(|case| typecheck_ctx_closed(dir.target(), &case.ctx, &case.hole).unwrap()).collect();
        for n in [4u32, 32] {
            group.bench_with_input(BenchmarkId::new(dir.to_string(), n), &n, |b, &n| {
                b.iter(|| {
                    let mut g = Backtranslator::new(dir);
                    for d in &derivs {
                        black_box(g.backtranslate_derivation(n, d));
                    }
                })
            });
        }
    }
    group.finish();
}

fn compiler_campaign(c: &mut Criterion) {
    let mut group = c.benchmark_group("compiler_campaign");
    group.sample_size(10);
    for which in Compiler::ALL {
        let cfg = GenConfig::new(which.source(), 0);
        group.bench_function(which.to_string(), |b| b.iter(|| black_box(campaign_compiler(which, 50, 10_000, &cfg))));
    }
    group.finish();
}

criterion_group!(benches, type_equality, evaluation, backtranslation, compiler_campaign);
criterion_main!(benches);
