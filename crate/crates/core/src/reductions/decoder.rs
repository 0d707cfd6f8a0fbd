//! Enumeration of program inputs and the cheering block, both emitted as
//! choice-free pGCL.

use super::names::NameSupply;
use crate::ast::{ArithExpr, BoolExpr, CmpOp, Program};

fn var(name: &str) -> ArithExpr {
    ArithExpr::var(name)
}

fn incr(name: &str, by: ArithExpr) -> Program {
    Program::assign(name, var(name).add(by))
}

fn decr(name: &str) -> Program {
    Program::assign(name, var(name).sub(ArithExpr::int(1)))
}

fn positive(name: &str) -> BoolExpr {
    BoolExpr::cmp(CmpOp::Gt, var(name), ArithExpr::int(0))
}

/// Decodes the natural number in `index_var` into `targets` by inverse
/// Cantor tupling: `pair(a, b) = (a + b)(a + b + 1)/2 + b` and
/// `tuple(a, rest) = pair(a, tuple(rest))`. One target is a plain copy; no
/// targets give `skip`.
pub fn input_decoder_gadget(targets: &[String], index_var: &str, names: &mut NameSupply) -> Program {
    match targets {
        [] => Program::Skip,
        [only] => Program::assign(only, var(index_var)),
        [init @ .., last] => {
            let n = names.scratch("n");
            let w = names.scratch("w");
            let t = names.scratch("t");
            let mut stmts = vec![Program::assign(&n, var(index_var))];
            for target in init {
                // Largest w with w(w+1)/2 <= n, keeping t = w(w+1)/2.
                let next_triangle = var(&t).add(var(&w)).add(ArithExpr::int(1));
                stmts.extend([
                    Program::assign(&w, ArithExpr::int(0)),
                    Program::assign(&t, ArithExpr::int(0)),
                    Program::while_loop(
                        BoolExpr::cmp(CmpOp::Le, next_triangle, var(&n)),
                        Program::seq(incr(&w, ArithExpr::int(1)), incr(&t, var(&w))),
                    ),
                    Program::assign(target, var(&w).sub(var(&n).sub(var(&t)))),
                    Program::assign(&n, var(&n).sub(var(&t))),
                ]);
            }
            stmts.push(Program::assign(last, var(&n)));
            Program::seq_all(stmts)
        }
    }
}

/// `2^x` rounds of an effectless countdown, after a doubling loop computes
/// the round count. Touches only scratch variables.
pub fn cheer_block(x_var: &str, names: &mut NameSupply) -> Program {
    let t = names.scratch("t");
    let s = names.scratch("s");
    Program::seq_all([
        Program::assign(&t, ArithExpr::int(1)),
        Program::assign(&s, var(x_var)),
        Program::while_loop(
            positive(&s),
            Program::seq(incr(&t, var(&t)), decr(&s)),
        ),
        Program::while_loop(positive(&t), decr(&t)),
    ])
}
