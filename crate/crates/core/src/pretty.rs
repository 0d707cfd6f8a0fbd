//! Canonical concrete syntax. Output re-parses to an identical tree: the
//! printer inserts exactly the parentheses the parser's precedences need and
//! wraps a left-nested sequence in a grouping block.

use std::fmt::{self, Write};

use crate::ast::{ArithExpr, BoolExpr, Program};

const INDENT: &str = "  ";

pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    write_prog(&mut out, p, 0).expect("writing to a String cannot fail");
    out
}

fn arith_prec(e: &ArithExpr) -> u8 {
    match e {
        ArithExpr::Add(..) | ArithExpr::Sub(..) => 1,
        ArithExpr::Mul(..) => 2,
        ArithExpr::Lit(_) | ArithExpr::Var(_) => 3,
    }
}

fn write_arith(f: &mut impl Write, e: &ArithExpr) -> fmt::Result {
    let (op, l, r, prec) = match e {
        ArithExpr::Lit(q) => return write!(f, "{q}"),
        ArithExpr::Var(v) => return f.write_str(v),
        ArithExpr::Add(l, r) => ("+", l, r, 1),
        ArithExpr::Sub(l, r) => ("-", l, r, 1),
        ArithExpr::Mul(l, r) => ("*", l, r, 2),
    };
    // All binary operators are left-associative.
    write_arith_operand(f, l, arith_prec(l) < prec)?;
    write!(f, " {op} ")?;
    write_arith_operand(f, r, arith_prec(r) <= prec)
}

fn write_arith_operand(f: &mut impl Write, e: &ArithExpr, parens: bool) -> fmt::Result {
    if parens {
        f.write_char('(')?;
        write_arith(f, e)?;
        f.write_char(')')
    } else {
        write_arith(f, e)
    }
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        BoolExpr::Not(_) | BoolExpr::Cmp(..) => 3,
    }
}

fn write_bool(f: &mut impl Write, b: &BoolExpr) -> fmt::Result {
    let (op, l, r, prec) = match b {
        BoolExpr::Cmp(op, l, r) => {
            write_arith(f, l)?;
            write!(f, " {} ", op.symbol())?;
            return write_arith(f, r);
        }
        BoolExpr::Not(inner) => {
            f.write_str("!(")?;
            write_bool(f, inner)?;
            return f.write_char(')');
        }
        BoolExpr::Or(l, r) => ("||", l, r, 1),
        BoolExpr::And(l, r) => ("&&", l, r, 2),
    };
    write_bool_operand(f, l, bool_prec(l) < prec)?;
    write!(f, " {op} ")?;
    write_bool_operand(f, r, bool_prec(r) <= prec)
}

fn write_bool_operand(f: &mut impl Write, b: &BoolExpr, parens: bool) -> fmt::Result {
    if parens {
        f.write_char('(')?;
        write_bool(f, b)?;
        f.write_char(')')
    } else {
        write_bool(f, b)
    }
}

fn indent(f: &mut impl Write, depth: usize) -> fmt::Result {
    for _ in 0..depth {
        f.write_str(INDENT)?;
    }
    Ok(())
}

/// A statement list; the first line is assumed to be indented already.
fn write_prog(f: &mut impl Write, p: &Program, depth: usize) -> fmt::Result {
    match p {
        Program::Seq(first, rest) => {
            write_stmt(f, first, depth)?;
            f.write_str(";\n")?;
            indent(f, depth)?;
            write_prog(f, rest, depth)
        }
        _ => write_stmt(f, p, depth),
    }
}

fn write_stmt(f: &mut impl Write, p: &Program, depth: usize) -> fmt::Result {
    match p {
        Program::Assign(v, e) => {
            write!(f, "{v} := ")?;
            write_arith(f, e)
        }
        Program::Skip => f.write_str("skip"),
        // A sequence in statement position is a left-nested one.
        Program::Seq(..) => write_block(f, p, depth),
        Program::Choice(l, q, r) => {
            write_block(f, l, depth)?;
            write!(f, " [{q}] ")?;
            write_block(f, r, depth)
        }
        Program::While(g, body) => {
            f.write_str("while (")?;
            write_bool(f, g)?;
            f.write_str(") ")?;
            write_block(f, body, depth)
        }
        Program::If(g, then, otherwise) => {
            f.write_str("if (")?;
            write_bool(f, g)?;
            f.write_str(") ")?;
            write_block(f, then, depth)?;
            match otherwise.as_ref() {
                Program::Skip => Ok(()),
                Program::If(..) => {
                    f.write_str(" else ")?;
                    write_stmt(f, otherwise, depth)
                }
                _ => {
                    f.write_str(" else ")?;
                    write_block(f, otherwise, depth)
                }
            }
        }
    }
}

fn write_block(f: &mut impl Write, p: &Program, depth: usize) -> fmt::Result {
    match p {
        Program::Assign(..) | Program::Skip => {
            f.write_char('{')?;
            write_stmt(f, p, depth)?;
            f.write_char('}')
        }
        _ => {
            f.write_str("{\n")?;
            indent(f, depth + 1)?;
            write_prog(f, p, depth + 1)?;
            f.write_char('\n')?;
            indent(f, depth)?;
            f.write_char('}')
        }
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_arith(f, self)
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bool(f, self)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prog(f, self, 0)
    }
}
