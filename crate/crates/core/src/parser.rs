//! Concrete syntax:
//!
//! ```text
//! prog := stmt (';' stmt)* [';']
//! stmt := VAR ':=' aexp
//!       | '{' prog '}' '[' rat ']' '{' prog '}'
//!       | '{' prog '}'                              (grouping)
//!       | 'while' '(' bexp ')' '{' prog '}'
//!       | 'if' '(' bexp ')' '{' prog '}' ['else' ('{' prog '}' | if-stmt)]
//!       | 'skip'
//! ```
//!
//! Keywords are case-insensitive, `;` is right-associative and `//` starts a
//! comment. Both ASCII and Unicode spellings are accepted for operators
//! (`!=`/`≠`, `<=`/`≤`, `&&`/`and`/`∧`, `*`/`·`, ...).

use std::fmt;

use thiserror::Error;

use crate::ast::{ArithExpr, BoolExpr, CmpOp, Program};
use crate::rational::{is_probability, parse_rational, Rational};
use crate::valuation::Valuation;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    While,
    If,
    Else,
    Skip,
    Assign,
    Semi,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Cmp(CmpOp),
    And,
    Or,
    Not,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(q) => format!("number `{q}`"),
            Tok::While => "`while`".into(),
            Tok::If => "`if`".into(),
            Tok::Else => "`else`".into(),
            Tok::Skip => "`skip`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Not => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
        expected: Vec::new(),
    };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match c {
            ';' => (Tok::Semi, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' | '·' | '×' => (Tok::Star, 1),
            '≠' => (Tok::Cmp(CmpOp::Ne), 1),
            '≤' => (Tok::Cmp(CmpOp::Le), 1),
            '≥' => (Tok::Cmp(CmpOp::Ge), 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '¬' => (Tok::Not, 1),
            ':' if next == Some('=') => (Tok::Assign, 2),
            '=' if next == Some('=') => (Tok::Cmp(CmpOp::Eq), 2),
            '=' => (Tok::Cmp(CmpOp::Eq), 1),
            '!' if next == Some('=') => (Tok::Cmp(CmpOp::Ne), 2),
            '!' => (Tok::Not, 1),
            '<' if next == Some('=') => (Tok::Cmp(CmpOp::Le), 2),
            '<' if next == Some('>') => (Tok::Cmp(CmpOp::Ne), 2),
            '<' => (Tok::Cmp(CmpOp::Lt), 1),
            '>' if next == Some('=') => (Tok::Cmp(CmpOp::Ge), 2),
            '>' => (Tok::Cmp(CmpOp::Gt), 1),
            '&' if next == Some('&') => (Tok::And, 2),
            '|' if next == Some('|') => (Tok::Or, 2),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let sep = chars.get(j).copied();
                if matches!(sep, Some('.') | Some('/'))
                    && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit())
                {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let lexeme: String = chars[i..j].iter().collect();
                let q = parse_rational(&lexeme)
                    .ok_or_else(|| err(tl, tc, format!("invalid number `{lexeme}`")))?;
                (Tok::Num(q), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.to_ascii_lowercase().as_str() {
                    "while" => Tok::While,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "skip" => Tok::Skip,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    _ => Tok::Ident(word),
                };
                (tok, j - i)
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        };
        i += len;
        col += len;
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            message: message.into(),
            expected: expected.iter().map(|e| e.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_here(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn prog(&mut self) -> PResult<Program> {
        let mut stmts = vec![self.stmt()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            stmts.push(self.stmt()?);
        }
        Ok(Program::seq_all(stmts))
    }

    fn block(&mut self) -> PResult<Program> {
        self.expect(Tok::LBrace, "`{`")?;
        if *self.peek() == Tok::RBrace {
            return Err(self.error_here("empty block", &["a statement"]));
        }
        let p = self.prog()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(p)
    }

    fn stmt(&mut self) -> PResult<Program> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::Assign, "`:=`")?;
                Ok(Program::Assign(name, self.aexp()?))
            }
            Tok::Skip => {
                self.bump();
                Ok(Program::Skip)
            }
            Tok::While => {
                self.bump();
                let guard = self.guard()?;
                let body = self.block()?;
                Ok(Program::while_loop(guard, body))
            }
            Tok::If => self.if_stmt(),
            Tok::LBrace => {
                let left = self.block()?;
                if *self.peek() != Tok::LBracket {
                    return Ok(left);
                }
                self.bump();
                let p = match self.peek().clone() {
                    Tok::Num(q) => q,
                    _ => return Err(self.unexpected(&["a probability"])),
                };
                if !is_probability(&p) {
                    return Err(self.error_here(
                        format!("probability {p} is outside [0, 1]"),
                        &["a probability in [0, 1]"],
                    ));
                }
                self.bump();
                self.expect(Tok::RBracket, "`]`")?;
                let right = self.block()?;
                Ok(Program::choice(left, p, right))
            }
            _ => Err(self.unexpected(&["a statement"])),
        }
    }

    fn if_stmt(&mut self) -> PResult<Program> {
        self.expect(Tok::If, "`if`")?;
        let guard = self.guard()?;
        let then = self.block()?;
        if *self.peek() != Tok::Else {
            return Ok(Program::if_then(guard, then));
        }
        self.bump();
        let otherwise = if *self.peek() == Tok::If {
            self.if_stmt()?
        } else {
            self.block()?
        };
        Ok(Program::if_then_else(guard, then, otherwise))
    }

    fn guard(&mut self) -> PResult<BoolExpr> {
        self.expect(Tok::LParen, "`(`")?;
        let b = self.bexp()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(b)
    }

    fn bexp(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bconj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = lhs.or(self.bconj()?);
        }
        Ok(lhs)
    }

    fn bconj(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bunary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = lhs.and(self.bunary()?);
        }
        Ok(lhs)
    }

    fn bunary(&mut self) -> PResult<BoolExpr> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(self.bunary()?.negate());
        }
        self.batom()
    }

    /// A parenthesis may open either a nested boolean or an arithmetic
    /// operand of a comparison; try the former and backtrack.
    fn batom(&mut self) -> PResult<BoolExpr> {
        if *self.peek() == Tok::LParen {
            let save = self.pos;
            self.bump();
            let nested = self
                .bexp()
                .and_then(|b| self.expect(Tok::RParen, "`)`").map(|_| b));
            match nested {
                Ok(b) if !self.continues_arith() => return Ok(b),
                Ok(_) => self.pos = save,
                Err(first) => {
                    let first_pos = (first.line, first.column);
                    self.pos = save;
                    return self.comparison().map_err(|second| {
                        if (second.line, second.column) >= first_pos {
                            second
                        } else {
                            first
                        }
                    });
                }
            }
        }
        self.comparison()
    }

    fn continues_arith(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Plus | Tok::Minus | Tok::Star | Tok::Cmp(_)
        )
    }

    fn comparison(&mut self) -> PResult<BoolExpr> {
        let lhs = self.aexp()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return Err(self.unexpected(&["a comparison operator"])),
        };
        self.bump();
        let rhs = self.aexp()?;
        Ok(BoolExpr::Cmp(op, lhs, rhs))
    }

    fn aexp(&mut self) -> PResult<ArithExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs.add(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs.sub(self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<ArithExpr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = lhs.mul(self.factor()?);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<ArithExpr> {
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(ArithExpr::Lit(q))
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(ArithExpr::Var(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.aexp()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.unexpected(&["a number", "a variable", "`(`"])),
        }
    }
}

/// Parses program text into a [`Program`].
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    if *parser.peek() == Tok::Eof {
        return Err(parser.error_here("empty program", &["a statement"]));
    }
    let p = parser.prog()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected(&["`;`", "end of input"]));
    }
    Ok(p)
}

/// Parses a valuation file: one `NAME = RAT` binding per line. Blank lines
/// and `//` or `#` comments are ignored.
pub fn parse_valuation(text: &str) -> Result<Valuation, ParseError> {
    let mut out = Valuation::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw
            .split("//")
            .next()
            .unwrap_or("")
            .split('#')
            .next()
            .unwrap_or("")
            .trim();
        if line.is_empty() {
            continue;
        }
        let column = raw.len() - raw.trim_start().len() + 1;
        let bad = |message: String| ParseError {
            line: line_no,
            column,
            message,
            expected: vec!["`NAME = RAT`".to_string()],
        };
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| bad("missing `=`".to_string()))?;
        let name = name.trim();
        let valid_name = name
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid_name {
            return Err(bad(format!("invalid variable name `{name}`")));
        }
        let value = value.trim();
        let q = parse_rational(value)
            .ok_or_else(|| bad(format!("invalid non-negative rational `{value}`")))?;
        if !seen.insert(name.to_string()) {
            return Err(bad(format!("duplicate binding for `{name}`")));
        }
        out.set(name, q);
    }
    Ok(out)
}
