use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use super::decoder::{cheer_block, input_decoder_gadget};
use super::names::NameSupply;
use super::stepper::{flatten_with, OrdinaryProgram, StepperBundle};
use crate::ast::{ArithExpr, BoolExpr, CmpOp, Program};
use crate::rational::{int, rat, Rational};
use crate::valuation::Valuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gadget {
    Lexp,
    Rexp,
    AstExp,
    UhAst,
    AstUast,
    Past,
    Upast,
}

impl Gadget {
    pub const ALL: [Gadget; 7] = [
        Gadget::Lexp,
        Gadget::Rexp,
        Gadget::AstExp,
        Gadget::UhAst,
        Gadget::AstUast,
        Gadget::Past,
        Gadget::Upast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gadget::Lexp => "lexp",
            Gadget::Rexp => "rexp",
            Gadget::AstExp => "ast-exp",
            Gadget::UhAst => "uh-ast",
            Gadget::AstUast => "ast-uast",
            Gadget::Past => "past",
            Gadget::Upast => "upast",
        }
    }

    /// Source and target problem of the many-one reduction.
    pub fn reduction(self) -> (&'static str, &'static str) {
        match self {
            Gadget::Lexp => ("H", "LEXP"),
            Gadget::Rexp => ("co-UH", "REXP"),
            Gadget::AstExp => ("AST", "EXP"),
            Gadget::UhAst => ("UH", "AST"),
            Gadget::AstUast => ("AST", "UAST"),
            Gadget::Past => ("co-UH", "PAST"),
            Gadget::Upast => ("co-COF", "UPAST"),
        }
    }

    /// Whether the source program must be choice-free.
    pub fn needs_ordinary(self) -> bool {
        !matches!(self, Gadget::AstExp | Gadget::AstUast)
    }
}

impl fmt::Display for Gadget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gadget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Gadget::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown gadget `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    /// Compare `E(var)` against `bound` as the target problem demands.
    Expectation { var: String, bound: Rational },
    /// Ask the target termination property of the program itself.
    Termination,
}

#[derive(Clone, Debug)]
pub struct GadgetOutput {
    pub gadget: Gadget,
    pub program: Program,
    /// The fixed input the generated program is run on.
    pub input: Valuation,
    pub query: Query,
    /// Variables introduced by the generator.
    pub reserved: Vec<String>,
}

impl GadgetOutput {
    /// Sidecar text: reduction, query tuple and reserved names.
    pub fn notes(&self) -> String {
        let (source, target) = self.gadget.reduction();
        let query = match (&self.query, target) {
            (Query::Expectation { var, bound }, "LEXP") => format!("{bound} < E({var})"),
            (Query::Expectation { var, bound }, "REXP") => format!("E({var}) < {bound}"),
            (Query::Expectation { var, bound }, _) => format!("E({var}) = {bound}"),
            (Query::Termination, "AST" | "UAST") => "Pr(terminates) = 1".to_string(),
            (Query::Termination, _) => "E(runtime) < infinity".to_string(),
        };
        let input = if self.input.is_empty() {
            "all variables 0".to_string()
        } else {
            self.input.to_string()
        };
        format!(
            "gadget: {}\nreduction: {source} <=m {target}\nquery: {query}\ninput: {input}\nreserved: {}\n",
            self.gadget,
            self.reserved.join(" ")
        )
    }
}

fn var(name: &str) -> ArithExpr {
    ArithExpr::var(name)
}

fn set(name: &str, n: i64) -> Program {
    Program::assign(name, ArithExpr::int(n))
}

fn incr(name: &str) -> Program {
    Program::assign(name, var(name).add(ArithExpr::int(1)))
}

fn decr(name: &str) -> Program {
    Program::assign(name, var(name).sub(ArithExpr::int(1)))
}

fn is(name: &str, n: i64) -> BoolExpr {
    BoolExpr::var_eq(name, n)
}

fn positive(name: &str) -> BoolExpr {
    BoolExpr::cmp(CmpOp::Gt, var(name), ArithExpr::int(0))
}

/// `{c := 0} [1/2] {c := 1}`
fn coin(c: &str) -> Program {
    Program::choice(set(c, 0), rat(1, 2), set(c, 1))
}

/// `n := 0; coin; while (c != 0) { n := n + 1; coin }`: `n = j` with
/// probability `1/2^(j+1)`.
fn geometric(counter: &str, c: &str) -> Program {
    Program::seq_all([
        set(counter, 0),
        coin(c),
        Program::while_loop(
            BoolExpr::cmp(CmpOp::Ne, var(c), ArithExpr::int(0)),
            Program::seq(incr(counter), coin(c)),
        ),
    ])
}

fn output(gadget: Gadget, program: Program, query: Query, names: &NameSupply) -> GadgetOutput {
    GadgetOutput {
        gadget,
        program,
        input: Valuation::new(),
        query,
        reserved: names.reserved(),
    }
}

/// Assignments loading `env` into `vars`.
fn load(vars: impl IntoIterator<Item = String>, env: &Valuation) -> Vec<Program> {
    vars.into_iter()
        .map(|z| {
            let value = env.get(&z);
            Program::assign(&z, ArithExpr::lit(value))
        })
        .collect()
}

struct Simulation {
    bundle: StepperBundle,
    init: Program,
}

/// `InitQ` decoding input number `index` and the matching stepper.
fn simulate(q: &OrdinaryProgram, index: &str, names: &mut NameSupply) -> Simulation {
    let bundle = flatten_with(q, names);
    let targets: Vec<String> = q.free_vars().into_iter().collect();
    let decode = input_decoder_gadget(&targets, index, names);
    let init = bundle.init_with(decode);
    Simulation { bundle, init }
}

/// `v := 0; {v := 1} [1/2] {TQ; v := 1}` where `TQ` loads `η` into `Q`'s
/// variables and runs `Q`. `E(v)` is 1 if `Q` halts on `η` and 1/2
/// otherwise; the query is `1/2 < E(v)`.
pub fn gadget_lexp(q: &OrdinaryProgram, env: &Valuation) -> GadgetOutput {
    let mut names = NameSupply::avoiding(q.free_vars());
    let v = names.name("v");
    let mut tq = load(q.free_vars(), env);
    tq.push(q.program().clone());
    tq.push(set(&v, 1));
    let program = Program::seq(
        set(&v, 0),
        Program::choice(set(&v, 1), rat(1, 2), Program::seq_all(tq)),
    );
    let query = Query::Expectation { var: v, bound: rat(1, 2) };
    output(Gadget::Lexp, program, query, &names)
}

/// Geometric `i` and `k`, then `v := 2^(k+1)` if `Q` halts on input `i` in
/// exactly `k` steps and `v := 0` otherwise. `E(v)` is 1 iff `Q` halts on
/// every input; the query is `E(v) < 1`.
pub fn gadget_rexp(q: &OrdinaryProgram) -> GadgetOutput {
    let mut names = NameSupply::avoiding(q.free_vars());
    let c = names.name("c");
    let i = names.name("i");
    let k = names.name("k");
    let v = names.name("v");
    let sim = simulate(q, &i, &mut names);
    let r = names.scratch("r");
    let step = sim.bundle.step_block.clone();
    let term = sim.bundle.term_var.clone();

    // Rounds 1 .. k-1 must not halt, round k must.
    let power = Program::seq_all([
        set(&v, 2),
        Program::assign(&r, var(&k)),
        Program::while_loop(
            positive(&r),
            Program::seq(Program::assign(&v, var(&v).add(var(&v))), decr(&r)),
        ),
    ]);
    let rounds = Program::seq_all([
        Program::assign(&r, var(&k).sub(ArithExpr::int(1))),
        Program::while_loop(positive(&r), Program::seq(step.clone(), decr(&r))),
        Program::if_then(
            is(&term, 0),
            Program::seq(step, Program::if_then(is(&term, 1), power)),
        ),
    ]);
    let tq = Program::seq(sim.init, Program::if_then(positive(&k), rounds));

    let program = Program::seq_all([geometric(&i, &c), geometric(&k, &c), set(&v, 0), tq]);
    let query = Query::Expectation { var: v, bound: int(1) };
    output(Gadget::Rexp, program, query, &names)
}

/// `v := 0; Q; v := 1`: `E(v)` is the termination probability of `Q` on
/// `η`; the query is `E(v) = 1`.
pub fn gadget_ast_to_exp(q: &Program, env: &Valuation) -> GadgetOutput {
    let mut names = NameSupply::avoiding(q.free_vars());
    let v = names.name("v");
    let program = Program::seq_all([set(&v, 0), q.clone(), set(&v, 1)]);
    let query = Query::Expectation { var: v, bound: int(1) };
    let mut out = output(Gadget::AstExp, program, query, &names);
    out.input = env.clone();
    out
}

/// Geometric `i`, then simulate `Q` on input `i` to completion. Terminates
/// almost surely iff `Q` halts on every input.
pub fn gadget_uh_to_ast(q: &OrdinaryProgram) -> GadgetOutput {
    let mut names = NameSupply::avoiding(q.free_vars());
    let c = names.name("c");
    let i = names.name("i");
    let sim = simulate(q, &i, &mut names);
    let run = Program::while_loop(is(&sim.bundle.term_var, 0), sim.bundle.step_block.clone());
    let program = Program::seq_all([geometric(&i, &c), sim.init, run]);
    output(Gadget::UhAst, program, Query::Termination, &names)
}

/// Initializes every variable from `η` (and zeroes `Q`'s other variables),
/// then runs `Q`: the result behaves the same on every input.
pub fn gadget_ast_to_uast(q: &Program, env: &Valuation) -> GadgetOutput {
    let names = NameSupply::avoiding(q.free_vars());
    let from_env: Vec<String> = env.support().map(str::to_string).collect();
    let zeroed: Vec<String> = q
        .free_vars()
        .into_iter()
        .filter(|z| env.get(z).is_zero())
        .collect();
    let mut stmts = load(from_env, env);
    stmts.extend(load(zeroed, env));
    stmts.push(q.clone());
    output(Gadget::AstUast, Program::seq_all(stmts), Query::Termination, &names)
}

fn runtime_gadget(q: &OrdinaryProgram, gadget: Gadget) -> GadgetOutput {
    let mut names = NameSupply::avoiding(q.free_vars());
    let c = names.name("c");
    let i = names.name("i");
    let x = names.name("x");
    let sim = simulate(q, &i, &mut names);
    let term = sim.bundle.term_var.clone();
    let cheer = cheer_block(&x, &mut names);

    let mut prefix = vec![set(&c, 1)];
    if gadget == Gadget::Past {
        prefix.push(set(&i, 0));
    }
    prefix.extend([set(&x, 0), set(&term, 0), sim.init.clone()]);

    let restart = Program::seq_all([cheer, incr(&i), set(&term, 0), sim.init]);
    let body = Program::seq_all([
        sim.bundle.step_block.clone(),
        Program::if_then(is(&term, 1), restart),
        coin(&c),
        incr(&x),
    ]);
    prefix.push(Program::while_loop(
        BoolExpr::cmp(CmpOp::Ne, var(&c), ArithExpr::int(0)),
        body,
    ));
    output(gadget, Program::seq_all(prefix), Query::Termination, &names)
}

/// Simulates `Q` on inputs 0, 1, 2, ... one step per coin toss and, after
/// each halting simulation, spends `Θ(2^x)` steps where `x` counts the
/// tosses so far. Positively almost-surely terminating iff `Q` diverges on
/// some input.
pub fn gadget_past(q: &OrdinaryProgram) -> GadgetOutput {
    runtime_gadget(q, Gadget::Past)
}

/// [`gadget_past`] without `i := 0`: the first simulated input comes from
/// the program's own input.
pub fn gadget_upast(q: &OrdinaryProgram) -> GadgetOutput {
    runtime_gadget(q, Gadget::Upast)
}

/// Dispatches on `gadget`; `None` when the gadget needs an ordinary
/// program and `q` has a choice.
pub fn generate(gadget: Gadget, q: &Program, env: &Valuation) -> Option<GadgetOutput> {
    let ordinary = || OrdinaryProgram::new(q.clone()).ok();
    Some(match gadget {
        Gadget::Lexp => gadget_lexp(&ordinary()?, env),
        Gadget::Rexp => gadget_rexp(&ordinary()?),
        Gadget::AstExp => gadget_ast_to_exp(q, env),
        Gadget::UhAst => gadget_uh_to_ast(&ordinary()?),
        Gadget::AstUast => gadget_ast_to_uast(q, env),
        Gadget::Past => gadget_past(&ordinary()?),
        Gadget::Upast => gadget_upast(&ordinary()?),
    })
}
