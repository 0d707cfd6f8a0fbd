//! Abstract syntax of the fully probabilistic pGCL fragment.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::rational::{is_probability, Rational};
use crate::valuation::Valuation;

/// Arithmetic expressions. Literals are non-negative; evaluation ranges over
/// all of Q and clamping happens only when a value is assigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArithExpr {
    Lit(Rational),
    Var(String),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    Sub(Box<ArithExpr>, Box<ArithExpr>),
    Mul(Box<ArithExpr>, Box<ArithExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Cmp(CmpOp, ArithExpr, ArithExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

/// A pGCL program. `If` and `Skip` are kept as real nodes (not desugared)
/// so that each costs exactly one small step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Assign(String, ArithExpr),
    Seq(Arc<Program>, Arc<Program>),
    /// `{left} [p] {right}`: left with probability `p`, right with `1 - p`.
    Choice(Arc<Program>, Rational, Arc<Program>),
    While(BoolExpr, Arc<Program>),
    If(BoolExpr, Arc<Program>, Arc<Program>),
    Skip,
}

impl ArithExpr {
    pub fn lit(q: Rational) -> Self {
        ArithExpr::Lit(q)
    }

    pub fn int(n: i64) -> Self {
        ArithExpr::Lit(crate::rational::int(n))
    }

    pub fn var(name: &str) -> Self {
        ArithExpr::Var(name.to_string())
    }

    pub fn add(self, rhs: ArithExpr) -> Self {
        ArithExpr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: ArithExpr) -> Self {
        ArithExpr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: ArithExpr) -> Self {
        ArithExpr::Mul(Box::new(self), Box::new(rhs))
    }

    /// `⟦e⟧_η` over exact rationals; the result may be negative.
    pub fn eval(&self, env: &Valuation) -> Rational {
        match self {
            ArithExpr::Lit(q) => q.clone(),
            ArithExpr::Var(v) => env.get(v),
            ArithExpr::Add(a, b) => a.eval(env) + b.eval(env),
            ArithExpr::Sub(a, b) => a.eval(env) - b.eval(env),
            ArithExpr::Mul(a, b) => a.eval(env) * b.eval(env),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithExpr::Lit(_) => {}
            ArithExpr::Var(v) => {
                out.insert(v.clone());
            }
            ArithExpr::Add(a, b) | ArithExpr::Sub(a, b) | ArithExpr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl CmpOp {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, lhs: ArithExpr, rhs: ArithExpr) -> Self {
        BoolExpr::Cmp(op, lhs, rhs)
    }

    pub fn and(self, rhs: BoolExpr) -> Self {
        BoolExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(self), Box::new(rhs))
    }

    pub fn negate(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    /// `var = n`, the shape used by pc dispatch and flag tests.
    pub fn var_eq(var: &str, n: i64) -> Self {
        BoolExpr::Cmp(CmpOp::Eq, ArithExpr::var(var), ArithExpr::int(n))
    }

    pub fn eval(&self, env: &Valuation) -> bool {
        match self {
            BoolExpr::Cmp(op, a, b) => op.holds(&a.eval(env), &b.eval(env)),
            BoolExpr::And(a, b) => a.eval(env) && b.eval(env),
            BoolExpr::Or(a, b) => a.eval(env) || b.eval(env),
            BoolExpr::Not(a) => !a.eval(env),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::Not(a) => a.collect_vars(out),
        }
    }
}

impl Program {
    pub fn assign(var: &str, e: ArithExpr) -> Self {
        Program::Assign(var.to_string(), e)
    }

    pub fn seq(first: Program, second: Program) -> Self {
        Program::Seq(Arc::new(first), Arc::new(second))
    }

    /// Right-associated sequence of the given statements; `Skip` if empty.
    pub fn seq_all(stmts: impl IntoIterator<Item = Program>) -> Self {
        let mut stmts: Vec<Program> = stmts.into_iter().collect();
        let Some(mut acc) = stmts.pop() else {
            return Program::Skip;
        };
        while let Some(prev) = stmts.pop() {
            acc = Program::seq(prev, acc);
        }
        acc
    }

    /// Panics unless `p` is a probability; the parser rejects such input
    /// before it gets here.
    pub fn choice(left: Program, p: Rational, right: Program) -> Self {
        assert!(is_probability(&p), "choice probability {p} outside [0, 1]");
        Program::Choice(Arc::new(left), p, Arc::new(right))
    }

    pub fn while_loop(guard: BoolExpr, body: Program) -> Self {
        Program::While(guard, Arc::new(body))
    }

    pub fn if_then_else(guard: BoolExpr, then: Program, otherwise: Program) -> Self {
        Program::If(guard, Arc::new(then), Arc::new(otherwise))
    }

    pub fn if_then(guard: BoolExpr, then: Program) -> Self {
        Program::if_then_else(guard, then, Program::Skip)
    }

    /// Variables occurring anywhere in the program text.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Program::Assign(v, e) => {
                out.insert(v.clone());
                e.collect_vars(out);
            }
            Program::Seq(a, b) | Program::Choice(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::While(g, body) => {
                g.collect_vars(out);
                body.collect_vars(out);
            }
            Program::If(g, a, b) => {
                g.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::Skip => {}
        }
    }

    /// True for ordinary programs, i.e. those without probabilistic choice.
    pub fn is_choice_free(&self) -> bool {
        match self {
            Program::Assign(..) | Program::Skip => true,
            Program::Choice(..) => false,
            Program::Seq(a, b) | Program::If(_, a, b) => a.is_choice_free() && b.is_choice_free(),
            Program::While(_, body) => body.is_choice_free(),
        }
    }

    /// Number of AST nodes (statements only).
    pub fn size(&self) -> usize {
        match self {
            Program::Assign(..) | Program::Skip => 1,
            Program::Seq(a, b) | Program::Choice(a, _, b) | Program::If(_, a, b) => {
                1 + a.size() + b.size()
            }
            Program::While(_, body) => 1 + body.size(),
        }
    }
}
