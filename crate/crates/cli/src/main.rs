//! `mucalc`: check, run, compile and backtranslate λF/λI/λE programs.
//!
//! Exit codes: 0 success, 1 type or semantic error, 2 usage or parse
//! error, 3 evaluation ran out of fuel.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mucalc_core::backtranslation::{backtranslate_ctx, uval, Direction, UValIndex};
use mucalc_core::dynamics::trace;
use mucalc_core::harness::{backtr_suite, campaign_backtr, campaign_compiler, CampaignReport, CaseRecord, GenConfig, Verdict};
use mucalc_core::{compile, eval, find_shrink_bound, parse_ctx, parse_term, parse_type, type_eq, typecheck, Compiler, EvalOutcome, Lang, ObjType, Term, TypeEnv};

#[derive(Parser)]
#[command(name = "mucalc", version, about = "Workbench for λF, λI and λE")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a closed term and print its type.
    Check {
        /// Source file, or `-` for stdin.
        file: String,
        #[arg(long, value_parser = lang)]
        lang: Lang,
    },
    /// Evaluate a closed term.
    Eval {
        file: String,
        #[arg(long, value_parser = lang)]
        lang: Lang,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
        /// Print every term of the reduction sequence.
        #[arg(long)]
        trace: bool,
        /// Print a harness record instead.
        #[arg(long)]
        json: bool,
    },
    /// Decide λE type equality.
    Eq { left: String, right: String },
    /// Compile a term between languages.
    Compile {
        file: String,
        #[arg(long, value_parser = lang)]
        from: Lang,
        #[arg(long, value_parser = lang)]
        to: Lang,
    },
    /// Print the backtranslation type of a target type.
    Uval {
        #[arg(long, value_parser = direction)]
        dir: Direction,
        #[arg(long)]
        n: u32,
        #[arg(long = "type")]
        ty: String,
    },
    /// Backtranslate a target program context.
    Backtranslate {
        /// Context file (`_` marks the hole), or `-` for stdin.
        file: String,
        #[arg(long, value_parser = direction)]
        dir: Direction,
        #[arg(long)]
        n: u32,
        /// Source type of the hole.
        #[arg(long = "hole-type")]
        hole_type: String,
    },
    /// Run a differential-testing campaign.
    #[command(subcommand)]
    Campaign(CampaignCmd),
}

#[derive(Subcommand)]
enum CampaignCmd {
    /// Generated source terms against their compilation.
    Compiler {
        #[arg(long, value_parser = compiler)]
        which: Compiler,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
        #[command(flatten)]
        common: CampaignArgs,
    },
    /// Backtranslated suite contexts against the originals.
    Backtr {
        #[arg(long, value_parser = direction)]
        dir: Direction,
        #[arg(long, default_value_t = 32)]
        n: u32,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        /// Terms plugged into each suite context.
        #[arg(long, default_value_t = 10)]
        per_entry: usize,
        #[command(flatten)]
        common: CampaignArgs,
    },
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print one JSON record per case.
    #[arg(long)]
    json: bool,
}

fn lang(s: &str) -> Result<Lang, String> {
    Lang::from_name(s).ok_or_else(|| format!("unknown language `{s}` (expected fix, iso or equi)"))
}

fn direction(s: &str) -> Result<Direction, String> {
    Direction::from_name(s).ok_or_else(|| format!("unknown direction `{s}` (expected FI, IC or FE)"))
}

fn compiler(s: &str) -> Result<Compiler, String> {
    Compiler::from_name(s).ok_or_else(|| format!("unknown compiler `{s}` (expected FI, IE or FE)"))
}

/// An error with its exit code.
struct Fail(u8, String);

fn usage(msg: impl ToString) -> Fail {
    Fail(2, msg.to_string())
}

fn semantic(msg: impl ToString) -> Fail {
    Fail(1, msg.to_string())
}

fn read_source(file: &str) -> Result<String, Fail> {
    let mut s = String::new();
    if file == "-" {
        std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("stdin: {e}")))?;
    } else {
        s = std::fs::read_to_string(file).map_err(|e| usage(format!("{file}: {e}")))?;
    }
    Ok(s)
}

fn load_term(file: &str, lang: Lang) -> Result<Term, Fail> {
    let src = read_source(file)?;
    parse_term(&src, lang).map_err(|e| usage(format!("{file}:{e}")))
}

fn typed(file: &str, lang: Lang) -> Result<(Term, ObjType), Fail> {
    let t = load_term(file, lang)?;
    let d = typecheck(lang, &TypeEnv::empty(), &t).map_err(semantic)?;
    Ok((t, d.ty))
}

fn print_report(r: &CampaignReport, json: bool) -> Result<(), Fail> {
    if json {
        print!("{}", r.to_json_lines());
    } else {
        println!("{}", r.summary());
        for f in &r.failures {
            println!("FAIL {} (seed {}): {}", f.case_id, f.seed, f.reason);
            if let Some(c) = &f.context {
                println!("  context: {c}");
            }
            println!("  term:    {}", f.term);
            println!("  source:  {}", f.outcome_source);
            println!("  target:  {}", f.outcome_target);
        }
    }
    if r.ok() {
        Ok(())
    } else {
        Err(Fail(1, format!("{} failing cases", r.failures.len())))
    }
}

fn run(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Check { file, lang } => {
            let (_, ty) = typed(&file, lang)?;
            println!("{ty}");
        }
        Cmd::Eval { file, lang, fuel, trace: tr, json } => {
            let (t, _) = typed(&file, lang)?;
            let out = if tr {
                let (lines, out) = trace(&t, fuel);
                for l in lines {
                    println!("{l}");
                }
                out
            } else {
                eval(&t, fuel)
            };
            if json {
                let record = CaseRecord {
                    case_id: file.clone(),
                    seed: 0,
                    verdict: if out.terminated() { Verdict::Pass } else { Verdict::Fail },
                    steps_source: out.terminated().then(|| out.steps()),
                    steps_target: None,
                    shrink_bound: if out.terminated() { find_shrink_bound(&t, out.steps()) } else { None },
                };
                println!("{}", serde_json::to_string(&record).expect("record serializes"));
            }
            match out {
                EvalOutcome::Value { v, steps } => {
                    if !json {
                        println!("{v}");
                        println!("steps: {steps}");
                    }
                }
                EvalOutcome::OutOfFuel { steps, .. } => return Err(Fail(3, format!("out of fuel after {steps} steps"))),
                EvalOutcome::Stuck { .. } => return Err(semantic(out)),
            }
        }
        Cmd::Eq { left, right } => {
            let a = parse_type(&left, Lang::Equi).map_err(|e| usage(format!("left type: {e}")))?;
            let b = parse_type(&right, Lang::Equi).map_err(|e| usage(format!("right type: {e}")))?;
            println!("{}", type_eq(&a, &b).map_err(semantic)?);
        }
        Cmd::Compile { file, from, to } => {
            let which = Compiler::between(from, to).ok_or_else(|| usage(format!("no compiler from {} to {}", from.ascii(), to.ascii())))?;
            let (t, _) = typed(&file, from)?;
            println!("{}", compile(which, &t));
        }
        Cmd::Uval { dir, n, ty } => {
            let t = parse_type(&ty, dir.target()).map_err(|e| usage(format!("type: {e}")))?;
            println!("{}", uval(&UValIndex::new(dir, n, t)).map_err(semantic)?);
        }
        Cmd::Backtranslate { file, dir, n, hole_type } => {
            let src = read_source(&file)?;
            let c = parse_ctx(&src, dir.target()).map_err(|e| usage(format!("{file}:{e}")))?;
            let hole = parse_type(&hole_type, dir.source()).map_err(|e| usage(format!("hole type: {e}")))?;
            println!("{}", backtranslate_ctx(dir, &c, n, &hole).map_err(semantic)?);
        }
        Cmd::Campaign(CampaignCmd::Compiler { which, count, fuel, common }) => {
            let cfg = GenConfig::new(which.source(), common.seed);
            print_report(&campaign_compiler(which, count, fuel, &cfg), common.json)?;
        }
        Cmd::Campaign(CampaignCmd::Backtr { dir, n, fuel, per_entry, common }) => {
            let suite = backtr_suite(dir, per_entry, common.seed);
            print_report(&campaign_backtr(dir, &suite, n, fuel), common.json)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("mucalc: {msg}");
            ExitCode::from(code)
        }
    }
}
