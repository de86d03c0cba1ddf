//! Typecheckers, evaluators, compilers and approximate backtranslation for
//! three simply-typed lambda calculi: λF (term-level fixpoint), λI
//! (iso-recursive types) and λE (equi-recursive types).

pub mod parse;
pub mod print;
pub mod syntax;

pub use parse::{parse, parse_ctx, parse_term, parse_type, Kind, ParseError, Parsed};
pub use syntax::{contractive, lmc, size, subst_term, subst_type, Lang, Name, ObjType, ProgCtx, Term, TermKind, TypeEnv, TypeKind};
pub mod statics;
pub use statics::{check, type_eq, typecheck, typecheck_ctx, CtxDerivation, Derivation, Rule, TypeError};
pub mod dynamics;
pub use dynamics::{eval, find_shrink_bound, shrink_holds, step, EvalOutcome};
pub mod compilers;
pub use compilers::{compile, compile_ctx, compile_fix_equi, compile_fix_iso, compile_iso_equi, z_combinator, Compiler};
pub mod backtranslation;
pub use backtranslation::{backtranslate_ctx, omega, uval, BacktrError, Backtranslator, Direction, UValIndex};
pub mod harness;
pub use harness::{campaign_backtr, campaign_compiler, gen_well_typed, CampaignReport, CaseRecord, GenConfig, TypeBias};
