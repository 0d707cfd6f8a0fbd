//! Exact analysis of finite-state programs.
//!
//! The inference rules never read the path probability or the choice word,
//! so dropping both from a state gives a bisimilar Markov chain over
//! `(continuation, valuation)` pairs. When that chain is finite, termination
//! probability, expected outcomes and expected runtime are solutions of
//! linear systems, solved here by exact elimination over the rationals.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::ast::Program;
use crate::rational::Rational;
use crate::semantics::{transition, Continuation, Transition};
use crate::valuation::Valuation;

pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("more than {cap} reachable states; the program is (or appears) infinite-state")]
    CapExceeded { cap: usize },
}

/// Quotient chain. States are numbered in breadth-first discovery order;
/// terminal states have an empty transition row.
#[derive(Clone, Debug)]
pub struct FiniteChain {
    pub states: Vec<(Continuation, Valuation)>,
    pub start: usize,
    pub transitions: Vec<Vec<(usize, Rational)>>,
    pub terminal: Vec<bool>,
}

impl FiniteChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Terminal states with their final valuations.
    pub fn terminals(&self) -> impl Iterator<Item = (usize, &Valuation)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(i, _)| self.terminal[*i])
            .map(|(i, (_, env))| (i, env))
    }

    /// Every non-terminal row sums to exactly 1 and carries only
    /// probabilities in `(0, 1]`.
    pub fn is_row_stochastic(&self) -> bool {
        self.transitions.iter().zip(&self.terminal).all(|(row, &term)| {
            if term {
                return row.is_empty();
            }
            let in_range = row
                .iter()
                .all(|(_, p)| *p > Rational::zero() && *p <= Rational::one());
            let total: Rational = row.iter().map(|(_, p)| p).sum();
            in_range && total.is_one()
        })
    }

    /// One `src dst prob` line per transition.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (src, row) in self.transitions.iter().enumerate() {
            for (dst, p) in row {
                out.push_str(&format!("{src} {dst} {p}\n"));
            }
        }
        out
    }

    /// States from which some terminal state is reachable.
    fn reaches_terminal(&self) -> Vec<bool> {
        let n = self.len();
        let mut preds = vec![Vec::new(); n];
        for (src, row) in self.transitions.iter().enumerate() {
            for &(dst, _) in row {
                preds[dst].push(src);
            }
        }
        let mut seen = self.terminal.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| seen[i]).collect();
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }
}

/// Breadth-first closure of the quotiented step graph from `(P, η)`.
pub fn extract_chain(p: &Program, env: &Valuation, cap: usize) -> Result<FiniteChain, ChainError> {
    let start = (Continuation::of(p), env.clone());
    let mut index: HashMap<(Continuation, Valuation), usize> = HashMap::new();
    let mut states = Vec::new();
    let mut transitions = Vec::new();
    let mut terminal = Vec::new();

    index.insert(start.clone(), 0);
    states.push(start);

    let mut intern = |key: (Continuation, Valuation),
                      states: &mut Vec<(Continuation, Valuation)>|
     -> Result<usize, ChainError> {
        if let Some(&i) = index.get(&key) {
            return Ok(i);
        }
        if states.len() >= cap {
            return Err(ChainError::CapExceeded { cap });
        }
        let i = states.len();
        index.insert(key.clone(), i);
        states.push(key);
        Ok(i)
    };

    let mut next = 0;
    while next < states.len() {
        let (cont, env) = states[next].clone();
        let row = match transition(&cont, &env) {
            Transition::Stop => {
                terminal.push(true);
                Vec::new()
            }
            Transition::Next { cont, update } => {
                let mut env = env;
                if let Some((v, value)) = update {
                    env.set(&v, value);
                }
                terminal.push(false);
                vec![(intern((cont, env), &mut states)?, Rational::one())]
            }
            Transition::Split { left, p, right } => {
                terminal.push(false);
                let q = Rational::one() - &p;
                let mut row: Vec<(usize, Rational)> = Vec::with_capacity(2);
                for (cont, prob) in [(left, p), (right, q)] {
                    if prob.is_zero() {
                        continue;
                    }
                    let dst = intern((cont, env.clone()), &mut states)?;
                    match row.iter_mut().find(|(d, _)| *d == dst) {
                        Some((_, existing)) => *existing += prob,
                        None => row.push((dst, prob)),
                    }
                }
                row
            }
        };
        transitions.push(row);
        next += 1;
    }

    Ok(FiniteChain {
        states,
        start: 0,
        transitions,
        terminal,
    })
}

/// Solves `A x = b` for several right-hand sides at once by Gauss–Jordan
/// elimination over exact rationals. Pivots are taken from the smallest
/// unused row index. `None` if `A` is singular.
fn solve_system(
    mut rows: Vec<BTreeMap<usize, Rational>>,
    mut rhs: Vec<Vec<Rational>>,
) -> Option<Vec<Vec<Rational>>> {
    let n = rows.len();
    let width = rhs.first().map_or(0, Vec::len);
    let mut used = vec![false; n];
    let mut pivot_row = vec![0; n];

    for col in 0..n {
        let r = (0..n).find(|&r| !used[r] && rows[r].contains_key(&col))?;
        used[r] = true;
        pivot_row[col] = r;

        let inv = rows[r][&col].recip();
        for v in rows[r].values_mut() {
            *v *= &inv;
        }
        for v in rhs[r].iter_mut() {
            *v *= &inv;
        }
        let pivot = rows[r].clone();
        let pivot_rhs = rhs[r].clone();

        for other in 0..n {
            if other == r {
                continue;
            }
            let Some(factor) = rows[other].get(&col).cloned() else {
                continue;
            };
            for (c, v) in &pivot {
                let updated = rows[other].get(c).cloned().unwrap_or_else(Rational::zero) - &factor * v;
                if updated.is_zero() {
                    rows[other].remove(c);
                } else {
                    rows[other].insert(*c, updated);
                }
            }
            for k in 0..width {
                let delta = &factor * &pivot_rhs[k];
                rhs[other][k] -= delta;
            }
        }
    }

    Some((0..n).map(|col| rhs[pivot_row[col]].clone()).collect())
}

/// Builds and solves `x_s = Σ_t P(s,t)·x_t + bonus` over the given transient
/// states, with `x_t = terminal_value(t)` on terminals and `0` on states
/// outside `active`. Returns one value vector (over all states) per column.
fn solve_columns(
    chain: &FiniteChain,
    active: &[bool],
    terminal_values: &[Vec<Rational>],
    bonus: &[Rational],
) -> Vec<Vec<Rational>> {
    let width = bonus.len();
    let n = chain.len();
    let transient: Vec<usize> = (0..n).filter(|&s| active[s] && !chain.terminal[s]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        local[s] = i;
    }

    let mut rows = Vec::with_capacity(transient.len());
    let mut rhs = Vec::with_capacity(transient.len());
    for &s in &transient {
        let mut row = BTreeMap::new();
        row.insert(local[s], Rational::one());
        let mut b = bonus.to_vec();
        for (t, p) in &chain.transitions[s] {
            if chain.terminal[*t] {
                for k in 0..width {
                    b[k] += p * &terminal_values[*t][k];
                }
            } else if active[*t] {
                let entry = row.entry(local[*t]).or_insert_with(Rational::zero);
                *entry -= p;
                if entry.is_zero() {
                    row.remove(&local[*t]);
                }
            }
        }
        rows.push(row);
        rhs.push(b);
    }

    let solution = solve_system(rows.clone(), rhs.clone())
        .expect("transient states that reach a terminal give a nonsingular system");

    // Substitute back: every equation must hold exactly.
    for (i, row) in rows.iter().enumerate() {
        for k in 0..width {
            let lhs: Rational = row.iter().map(|(c, a)| a * &solution[*c][k]).sum();
            assert_eq!(lhs, rhs[i][k], "chain solver self-check failed");
        }
    }

    let mut values = vec![vec![Rational::zero(); n]; width];
    for s in 0..n {
        for (k, column) in values.iter_mut().enumerate() {
            if chain.terminal[s] {
                column[s] = terminal_values[s][k].clone();
            } else if active[s] {
                column[s] = solution[local[s]][k].clone();
            }
        }
    }
    values
}

/// Per-state probability of eventually reaching a terminal state.
pub fn absorption_probabilities(chain: &FiniteChain) -> Vec<Rational> {
    let active = chain.reaches_terminal();
    let ones = vec![vec![Rational::one()]; chain.len()];
    solve_columns(chain, &active, &ones, &[Rational::zero()]).remove(0)
}

/// `E(v)` from the start state: absorption probability into each terminal
/// times the terminal value of `v`.
pub fn expected_outcome_exact(chain: &FiniteChain, var: &str) -> Rational {
    expected_outcomes(chain, &[var]).remove(0)
}

fn expected_outcomes(chain: &FiniteChain, vars: &[&str]) -> Vec<Rational> {
    let active = chain.reaches_terminal();
    let values: Vec<Vec<Rational>> = chain
        .states
        .iter()
        .map(|(_, env)| vars.iter().map(|v| env.get(v)).collect())
        .collect();
    let zeros = vec![Rational::zero(); vars.len()];
    solve_columns(chain, &active, &values, &zeros)
        .into_iter()
        .map(|column| column[chain.start].clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExpectedSteps {
    Finite(Rational),
    Infinite,
}

impl ExpectedSteps {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExpectedSteps::Finite(_))
    }
}

impl fmt::Display for ExpectedSteps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectedSteps::Finite(q) => write!(f, "{q}"),
            ExpectedSteps::Infinite => f.write_str("INFINITE"),
        }
    }
}

/// Expected number of steps to termination from the start state.
pub fn expected_steps_exact(chain: &FiniteChain) -> ExpectedSteps {
    let absorbed = absorption_probabilities(chain);
    // Every state is reachable with positive probability, so one state
    // with mass escaping to divergence makes the runtime infinite.
    if absorbed.iter().any(|a| !a.is_one()) {
        return ExpectedSteps::Infinite;
    }
    let active = vec![true; chain.len()];
    let zeros = vec![vec![Rational::zero()]; chain.len()];
    let hitting = solve_columns(chain, &active, &zeros, &[Rational::one()]);
    ExpectedSteps::Finite(hitting[0][chain.start].clone())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub chain_states: usize,
    pub termination_probability: Rational,
    pub expected_outcomes: Vec<(String, Rational)>,
    pub expected_steps: ExpectedSteps,
    pub ast: bool,
    pub past: bool,
}

pub fn solve_chain(chain: &FiniteChain, vars: &[&str]) -> SolveResult {
    let absorbed = absorption_probabilities(chain);
    let termination_probability = absorbed[chain.start].clone();
    let outcomes = if vars.is_empty() {
        Vec::new()
    } else {
        expected_outcomes(chain, vars)
    };
    let expected_steps = expected_steps_exact(chain);
    SolveResult {
        chain_states: chain.len(),
        ast: termination_probability.is_one(),
        past: expected_steps.is_finite(),
        termination_probability,
        expected_outcomes: vars.iter().map(|v| v.to_string()).zip(outcomes).collect(),
        expected_steps,
    }
}

/// Decides AST and PAST for `(P, η)` when its quotient chain has at most
/// `cap` states.
pub fn decide_ast_past_finite(
    p: &Program,
    env: &Valuation,
    vars: &[&str],
    cap: usize,
) -> Result<SolveResult, ChainError> {
    let chain = extract_chain(p, env, cap)?;
    Ok(solve_chain(&chain, vars))
}
