//! Shared fixtures: the program corpus and proptest strategies.

#![allow(dead_code)]

use std::path::PathBuf;

use pgcl::chain::{decide_ast_past_finite, extract_chain, ChainError};
use pgcl::explorer::{brute_force_partial_sums, explore_partial_sums, ExploreError, Explorer, PartialSumRow};
use pgcl::rational::{int, rat};
use pgcl::sampler::{estimate, sample_run};
use pgcl::reductions::{flatten_to_stepper, OrdinaryProgram};
use pgcl::semantics::{
    run_deterministic, step, transition, word_weight, Continuation, State, StepResult, Transition,
};
use pgcl::{parse, pretty, ArithExpr, BoolExpr, CmpOp, Program, Rational, Valuation};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

pub fn load(name: &str) -> Program {
    let path = programs_dir().join(format!("{name}.pgcl"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text).unwrap_or_else(|e| panic!("{}:{e}", path.display()))
}

/// Probabilistic corpus: name and the variable whose outcome is tracked.
pub const CORPUS: &[(&str, &str)] = &[
    ("coin", "x"),
    ("geo", "i"),
    ("geo_prime", "c"),
    ("div", "x"),
    ("half_term", "x"),
    ("nested", "x"),
    ("nested_loop", "n"),
    ("two_coins", "z"),
    ("countdown", "s"),
    ("walk", "x"),
    ("die", "d"),
    ("lexp_halting", "v"),
    ("lexp_diverging", "v"),
    ("uh_ast_halting", "x"),
    ("uh_ast_div0", "x"),
    ("ast_exp_half", "v"),
    ("rexp_halting", "v"),
    ("past_halting", "_x"),
    ("past_div0", "_x"),
];

/// Ordinary (choice-free) corpus programs.
pub const ORDINARY: &[&str] = &["q_id", "q_div0", "q_even", "q_pair", "q_loop", "q_branch"];

pub fn env(pairs: &[(&str, i64)]) -> Valuation {
    pairs.iter().map(|(k, v)| (k.to_string(), int(*v))).collect()
}

const VARS: &[&str] = &["x", "y", "z"];

pub fn var_name() -> impl Strategy<Value = String> {
    prop::sample::select(VARS).prop_map(str::to_string)
}

pub fn literal() -> impl Strategy<Value = Rational> {
    prop_oneof![
        4 => (0i64..4).prop_map(int),
        1 => (0i64..5, 1i64..5).prop_map(|(n, d)| rat(n, d)),
    ]
}

pub fn probability() -> impl Strategy<Value = Rational> {
    prop_oneof![
        Just(rat(1, 2)),
        Just(rat(1, 3)),
        Just(rat(3, 4)),
        Just(int(0)),
        Just(int(1)),
        (0i64..=7).prop_map(|n| rat(n, 7)),
    ]
}

pub fn arith() -> impl Strategy<Value = ArithExpr> {
    let leaf = prop_oneof![literal().prop_map(ArithExpr::Lit), var_name().prop_map(ArithExpr::Var)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner, 0..3u8).prop_map(|(a, b, op)| match op {
            0 => a.add(b),
            1 => a.sub(b),
            _ => a.mul(b),
        })
    })
}

/// Arithmetic where every product has a literal factor, so values grow by
/// a bounded number of bits per step.
pub fn linear_arith() -> impl Strategy<Value = ArithExpr> {
    let leaf = prop_oneof![literal().prop_map(ArithExpr::Lit), var_name().prop_map(ArithExpr::Var)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner, literal(), 0..3u8).prop_map(|(a, q, op)| match op {
            0 => a.add(ArithExpr::Lit(q)),
            1 => a.sub(ArithExpr::Lit(q)),
            _ => a.mul(ArithExpr::Lit(q)),
        })
    })
}

pub fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge])
}

pub fn boolean() -> impl Strategy<Value = BoolExpr> {
    let leaf = (cmp_op(), arith(), arith()).prop_map(|(op, a, b)| BoolExpr::cmp(op, a, b));
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            inner.prop_map(BoolExpr::negate),
        ]
    })
}

fn program_from(
    assign: BoxedStrategy<Program>,
    guard: BoxedStrategy<BoolExpr>,
) -> impl Strategy<Value = Program> {
    let leaf = prop_oneof![4 => assign, 1 => Just(Program::Skip)];
    leaf.prop_recursive(4, 16, 3, move |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::seq(a, b)),
            2 => (inner.clone(), probability(), inner.clone())
                .prop_map(|(a, p, b)| Program::choice(a, p, b)),
            1 => (guard.clone(), inner.clone()).prop_map(|(g, b)| Program::while_loop(g, b)),
            1 => (guard.clone(), inner.clone(), inner.clone())
                .prop_map(|(g, a, b)| Program::if_then_else(g, a, b)),
        ]
    })
}

/// Arbitrary programs, including left-nested sequences and loops that may
/// diverge.
pub fn program() -> impl Strategy<Value = Program> {
    let assign = (var_name(), arith())
        .prop_map(|(v, e)| Program::assign(&v, e))
        .boxed();
    program_from(assign, boolean().boxed())
}

/// Programs that run for hundreds of steps without huge numbers.
pub fn linear_program() -> impl Strategy<Value = Program> {
    let assign = (var_name(), linear_arith())
        .prop_map(|(v, e)| Program::assign(&v, e))
        .boxed();
    let guard = (cmp_op(), linear_arith(), linear_arith())
        .prop_map(|(op, a, b)| BoolExpr::cmp(op, a, b))
        .boxed();
    program_from(assign, guard)
}

/// Programs whose assignments only copy variables or store small constants,
/// so every reachable valuation comes from a finite set.
pub fn finite_state_program() -> impl Strategy<Value = Program> {
    let rhs = prop_oneof![
        (0i64..3).prop_map(ArithExpr::int),
        var_name().prop_map(ArithExpr::Var),
    ];
    let assign = (var_name(), rhs)
        .prop_map(|(v, e)| Program::assign(&v, e))
        .boxed();
    let guard = (cmp_op(), var_name(), 0i64..3)
        .prop_map(|(op, v, n)| BoolExpr::cmp(op, ArithExpr::var(&v), ArithExpr::int(n)))
        .boxed();
    program_from(assign, guard)
}

pub fn valuation() -> impl Strategy<Value = Valuation> {
    prop::collection::vec((var_name(), literal()), 0..3)
        .prop_map(|pairs| pairs.into_iter().collect())
}

pub type Check = Result<(), TestCaseError>;

pub fn check_round_trip(p: &Program) -> Check {
    let text = pretty(p);
    let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&back, p, "{}", text);
    Ok(())
}

/// Steps every reachable state for a few layers: each probabilistic split
/// conserves mass and every state's probability is the weight of its word.
pub fn check_probability_conservation(p: &Program, env: &Valuation) -> Check {
    let mut layer = vec![State::initial(p, env)];
    for _ in 0..10 {
        let mut next = Vec::new();
        for s in &layer {
            prop_assert_eq!(word_weight(p, env, &s.word), Some(s.prob.clone()));
            match step(s) {
                StepResult::Terminal => prop_assert!(s.is_terminal()),
                StepResult::Deterministic(n) => {
                    prop_assert_eq!(&n.prob, &s.prob);
                    prop_assert_eq!(&n.word, &s.word);
                    next.push(n);
                }
                StepResult::Probabilistic(l, r) => {
                    prop_assert_eq!(&l.prob + &r.prob, s.prob.clone());
                    prop_assert_eq!(&l.word[..s.word.len()], &s.word[..]);
                    prop_assert_eq!(l.word.len(), s.word.len() + 1);
                    next.push(l);
                    next.push(r);
                }
            }
        }
        if next.len() > 2048 {
            break;
        }
        layer = next;
    }
    Ok(())
}

/// Monotonicity, boundedness and exact mass conservation of the rows.
pub fn check_partial_sums(p: &Program, env: &Valuation) -> Check {
    let mut ex = Explorer::new(p, env, "x").with_frontier_cap(4096);
    let mut prev: Option<PartialSumRow> = None;
    for _ in 0..=12 {
        let row = match ex.next_row() {
            Ok(row) => row,
            Err(ExploreError::FrontierCap { .. }) => break,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(row.pr_within >= int(0) && row.pr_within <= int(1));
        let frontier_mass: Rational = ex.frontier().iter().map(|s| &s.prob).sum();
        prop_assert_eq!(&row.pr_within + frontier_mass, int(1));
        if let Some(prev) = &prev {
            prop_assert!(row.pr_within >= prev.pr_within);
            prop_assert!(row.exp_v_partial >= prev.exp_v_partial);
            prop_assert!(row.runtime_partial >= prev.runtime_partial);
        }
        prev = Some(row);
    }
    Ok(())
}

/// On finite chains, almost-sure termination implies finite expected
/// runtime.
pub fn check_ast_past_collapse(p: &Program, env: &Valuation) -> Check {
    match extract_chain(p, env, 2000) {
        Err(ChainError::CapExceeded { .. }) => Ok(()),
        Ok(chain) => {
            prop_assert!(chain.is_row_stochastic());
            let res = decide_ast_past_finite(p, env, &["x"], 2000).unwrap();
            prop_assert!(!res.past || res.ast);
            prop_assert!(!res.ast || res.past, "AST without PAST on a finite chain");
            Ok(())
        }
    }
}

pub fn check_sampler_determinism(p: &Program, env: &Valuation, seed: u64) -> Check {
    prop_assert_eq!(sample_run(p, env, seed, 300), sample_run(p, env, seed, 300));
    let a = estimate(p, env, "x", 16, seed, 300);
    let b = estimate(p, env, "x", 16, seed, 300);
    prop_assert_eq!(&a, &b);
    prop_assert_eq!(a.terminated + a.step_capped, a.samples);
    Ok(())
}

/// Frontier propagation against literal word enumeration.
pub fn check_oracle_agreement(p: &Program, env: &Valuation, depth: usize) -> Check {
    let rows = match explore_partial_sums(p, env, "x", depth, 512) {
        Ok(rows) => rows,
        Err(_) => return Ok(()),
    };
    prop_assert_eq!(rows, brute_force_partial_sums(p, env, "x", depth));
    Ok(())
}

/// Runs `rounds` stepper rounds next to as many semantic steps of `q`,
/// comparing `q`'s variables, the simulated location and the term flag
/// after every round.
pub fn check_stepper_bisimulation(q: &Program, env: &Valuation, rounds: usize) -> Result<(), String> {
    let bundle = flatten_to_stepper(&OrdinaryProgram::new(q.clone()).map_err(|e| e.to_string())?);
    let vars = q.free_vars();
    let project = |e: &Valuation| e.project(vars.iter().map(String::as_str));
    let mut cont = Continuation::of(q);
    let mut source = env.clone();
    let mut sim = run_deterministic(&bundle.init_template, env, 100).ok_or("init did not finish")?.env;
    for n in 0..=rounds {
        if project(&sim) != project(&source) {
            return Err(format!("round {n}: valuations differ: {} vs {}", project(&sim), project(&source)));
        }
        let pc: usize = sim.get(&bundle.pc_var).to_integer().try_into().map_err(|_| "pc out of range")?;
        if bundle.locations.get(pc) != Some(&cont) {
            return Err(format!("round {n}: pc {pc} does not simulate {cont}"));
        }
        let flag = sim.get(&bundle.term_var);
        if flag != int(cont.is_terminated() as i64) {
            return Err(format!("round {n}: term flag {flag} at {cont}"));
        }
        match transition(&cont, &source) {
            Transition::Stop => {}
            Transition::Next { cont: next, update } => {
                if let Some((v, value)) = update {
                    source.set(&v, value);
                }
                cont = next;
            }
            Transition::Split { .. } => return Err("choice in an ordinary program".into()),
        }
        sim = run_deterministic(&bundle.step_block, &sim, 100_000).ok_or("round did not finish")?.env;
    }
    Ok(())
}

/// Worst-case step count of a loop-free program; branches guarded by
/// `never` are assumed not taken.
pub fn static_step_bound(p: &Program, never: &BoolExpr) -> Option<usize> {
    Some(match p {
        Program::Skip | Program::Assign(..) => 1,
        Program::Seq(a, b) => static_step_bound(a, never)? + 1 + static_step_bound(b, never)?,
        Program::Choice(a, _, b) => 1 + static_step_bound(a, never)?.max(static_step_bound(b, never)?),
        Program::If(g, _, b) if g == never => 1 + static_step_bound(b, never)?,
        Program::If(_, a, b) => 1 + static_step_bound(a, never)?.max(static_step_bound(b, never)?),
        Program::While(..) => return None,
    })
}

fn top_level(p: &Program, out: &mut Vec<Program>) {
    match p {
        Program::Seq(a, b) => {
            top_level(a, out);
            top_level(b, out);
        }
        other => out.push(other.clone()),
    }
}

pub fn statements(p: &Program) -> Vec<Program> {
    let mut out = Vec::new();
    top_level(p, &mut out);
    out
}

/// Upper bound on the expected runtime of `prefix; while (G) {body}` where
/// every body run tosses a fair coin that exits the loop: literal word
/// enumeration to `depth`, plus a geometric tail. After the prefix, a run
/// longer than `P0 + n·c + 1` steps has continued through `n` fair tosses.
pub fn runtime_upper_bound(p: &Program, never: &BoolExpr, depth: usize) -> Option<Rational> {
    let stmts = statements(p);
    let (last, prefix) = stmts.split_last()?;
    let Program::While(_, body) = last else { return None };
    let p0: usize = prefix
        .iter()
        .map(|s| static_step_bound(s, never).map(|b| b + 1))
        .sum::<Option<usize>>()?;
    let per_round = static_step_bound(body, never)? + 2;
    if depth < p0 + 1 {
        return None;
    }
    let n0 = (depth - p0 - 1) / per_round;
    let rows = brute_force_partial_sums(p, &Valuation::new(), "x", depth);
    let tail = Rational::new((2 * per_round).into(), (num_bigint::BigInt::from(1) << n0).into());
    Some(rows[depth].runtime_partial.clone() + tail)
}
