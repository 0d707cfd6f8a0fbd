//! Breadth-first unfolding of the computation tree.
//!
//! Row `k` of the unfolding holds the partial sums of the three series
//! over all runs of length at most `k`:
//!
//! * expected outcome `Σ_{j≤k} Σ_w ℘(T_j(σ, w), v)`,
//! * termination probability `Σ_{j≤k} Σ_w α(T_j(σ, w))`,
//! * expected runtime `Σ_{j<k} (1 - Pr[terminated within j steps])`.
//!
//! All three are nondecreasing in `k` and converge to their true values from
//! below, so any row that strictly exceeds a bound certifies it. Once the
//! frontier is empty every later row carries the exact values.

use std::io::{self, Write};

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::ast::Program;
use crate::rational::{is_probability, Rational};
use crate::semantics::{alpha, step, successor, wp_weight, Branch, State, StepResult};
use crate::valuation::Valuation;

pub const DEFAULT_FRONTIER_CAP: usize = 1_000_000;

pub const CSV_HEADER: &str =
    "depth,exact_k_mass,pr_within_k,exp_v_partial,runtime_partial,frontier,exhausted";

/// Frontiers at least this large are stepped on the rayon pool.
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSumRow {
    pub depth: usize,
    /// Mass of runs terminating in exactly `depth` steps.
    pub exact_k_mass: Rational,
    pub pr_within: Rational,
    pub exp_v_partial: Rational,
    pub runtime_partial: Rational,
    /// Number of live (non-terminal) paths of length `depth`.
    pub frontier_size: usize,
    pub exhausted: bool,
}

impl PartialSumRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.depth,
            self.exact_k_mass,
            self.pr_within,
            self.exp_v_partial,
            self.runtime_partial,
            self.frontier_size,
            self.exhausted
        )
    }
}

pub fn write_csv(rows: &[PartialSumRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("frontier of {size} states at depth {depth} exceeds the cap of {cap}")]
    FrontierCap { depth: usize, size: usize, cap: usize },
    #[error("invalid bound {bound}: {reason}")]
    InvalidBound { bound: Rational, reason: &'static str },
}

/// Streaming explorer: each call to [`Explorer::next_row`] advances one
/// depth.
pub struct Explorer {
    var: String,
    initial: Option<State>,
    frontier: Vec<State>,
    terminals: Vec<State>,
    depth: usize,
    pr_within: Rational,
    exp_partial: Rational,
    runtime_partial: Rational,
    cap: usize,
}

impl Explorer {
    pub fn new(p: &Program, env: &Valuation, var: &str) -> Self {
        Explorer {
            var: var.to_string(),
            initial: Some(State::initial(p, env)),
            frontier: Vec::new(),
            terminals: Vec::new(),
            depth: 0,
            pr_within: Rational::zero(),
            exp_partial: Rational::zero(),
            runtime_partial: Rational::zero(),
            cap: DEFAULT_FRONTIER_CAP,
        }
    }

    pub fn with_frontier_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Live states at the depth of the last returned row.
    pub fn frontier(&self) -> &[State] {
        &self.frontier
    }

    /// States that terminated in exactly the depth of the last returned row.
    pub fn terminals(&self) -> &[State] {
        &self.terminals
    }

    pub fn next_row(&mut self) -> Result<PartialSumRow, ExploreError> {
        let layer = match self.initial.take() {
            Some(init) => vec![init],
            None => {
                self.depth += 1;
                self.runtime_partial += Rational::one() - &self.pr_within;
                expand(&self.frontier)
            }
        };
        let (terminals, frontier): (Vec<State>, Vec<State>) =
            layer.into_iter().partition(State::is_terminal);
        if frontier.len() > self.cap {
            return Err(ExploreError::FrontierCap {
                depth: self.depth,
                size: frontier.len(),
                cap: self.cap,
            });
        }
        let mut exact = Rational::zero();
        for t in &terminals {
            exact += &t.prob;
            self.exp_partial += t.env.get(&self.var) * &t.prob;
        }
        self.pr_within += &exact;
        self.terminals = terminals;
        self.frontier = frontier;
        Ok(PartialSumRow {
            depth: self.depth,
            exact_k_mass: exact,
            pr_within: self.pr_within.clone(),
            exp_v_partial: self.exp_partial.clone(),
            runtime_partial: self.runtime_partial.clone(),
            frontier_size: self.frontier.len(),
            exhausted: self.frontier.is_empty(),
        })
    }
}

fn successors_of(s: &State) -> Vec<State> {
    match step(s) {
        StepResult::Terminal => Vec::new(),
        StepResult::Deterministic(next) => vec![next],
        StepResult::Probabilistic(l, r) => vec![l, r],
    }
}

fn expand(states: &[State]) -> Vec<State> {
    if states.len() >= PARALLEL_THRESHOLD {
        // Indexed collect keeps the sequential order, so rows do not depend
        // on the worker count.
        states
            .par_iter()
            .map(successors_of)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        states.iter().flat_map(successors_of).collect()
    }
}

/// Rows `0..=max_depth` by frontier propagation.
pub fn explore_partial_sums(
    p: &Program,
    env: &Valuation,
    var: &str,
    max_depth: usize,
    frontier_cap: usize,
) -> Result<Vec<PartialSumRow>, ExploreError> {
    let mut ex = Explorer::new(p, env, var).with_frontier_cap(frontier_cap);
    (0..=max_depth).map(|_| ex.next_row()).collect()
}

/// The same rows computed the slow way: enumerate every pair `(k, w)` with
/// `w ∈ {L,R}^{≤k}` and sum `α` and `℘` of `T_k(σ, w)`.
///
/// Words are enumerated by extension, and a word is only extended when some
/// `T_k(σ, w)` with `k < max_depth` is a state about to make a probabilistic
/// choice. Every skipped word has `T_k = ⊥` for all `k ≤ max_depth`, so the
/// sums are those of the full enumeration.
pub fn brute_force_partial_sums(
    p: &Program,
    env: &Valuation,
    var: &str,
    max_depth: usize,
) -> Vec<PartialSumRow> {
    let sigma = State::initial(p, env);
    let mut exact = vec![Rational::zero(); max_depth + 1];
    let mut outcome = vec![Rational::zero(); max_depth + 1];
    let mut live = vec![0usize; max_depth + 1];

    let mut words: Vec<Vec<Branch>> = vec![Vec::new()];
    while let Some(w) = words.pop() {
        let mut extendable = false;
        // T_k(σ, w) = ⊥ whenever |w| > k: every letter costs a step.
        for k in w.len()..=max_depth {
            let t = successor(k, &sigma, &w);
            exact[k] += alpha(t.as_ref());
            outcome[k] += wp_weight(t.as_ref(), var);
            if let Some(s) = t.filter(|s| !s.is_terminal()) {
                live[k] += 1;
                if k < max_depth && matches!(step(&s), StepResult::Probabilistic(..)) {
                    extendable = true;
                }
            }
        }
        if extendable {
            for b in [Branch::R, Branch::L] {
                let mut longer = w.clone();
                longer.push(b);
                words.push(longer);
            }
        }
    }

    let mut rows = Vec::with_capacity(max_depth + 1);
    let (mut pr, mut ev, mut rt) = (Rational::zero(), Rational::zero(), Rational::zero());
    for k in 0..=max_depth {
        if k > 0 {
            rt += Rational::one() - &pr;
        }
        pr += &exact[k];
        ev += &outcome[k];
        rows.push(PartialSumRow {
            depth: k,
            exact_k_mass: exact[k].clone(),
            pr_within: pr.clone(),
            exp_v_partial: ev.clone(),
            runtime_partial: rt.clone(),
            frontier_size: live[k],
            exhausted: live[k] == 0,
        });
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateOutcome {
    /// The partial sum at `depth` strictly exceeds the queried bound.
    Certified { depth: usize, witness: Rational },
    BudgetExhausted { last_row: PartialSumRow },
}

impl CertificateOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertificateOutcome::Certified { .. })
    }
}

fn certify_with(
    mut ex: Explorer,
    budget: usize,
    bound: &Rational,
    pick: fn(&PartialSumRow) -> &Rational,
) -> Result<CertificateOutcome, ExploreError> {
    let mut row = ex.next_row()?;
    loop {
        if pick(&row) > bound {
            return Ok(CertificateOutcome::Certified {
                depth: row.depth,
                witness: pick(&row).clone(),
            });
        }
        if row.depth >= budget {
            return Ok(CertificateOutcome::BudgetExhausted { last_row: row });
        }
        if row.exhausted {
            // Everything has terminated: all three sums are final.
            if row.depth < budget {
                row.exact_k_mass = Rational::zero();
                row.depth = budget;
            }
            return Ok(CertificateOutcome::BudgetExhausted { last_row: row });
        }
        row = ex.next_row()?;
    }
}

/// Semi-decides `q < E_{P,η}(v)`.
pub fn certify_lower_expectation(
    p: &Program,
    env: &Valuation,
    var: &str,
    q: &Rational,
    budget: usize,
    frontier_cap: usize,
) -> Result<CertificateOutcome, ExploreError> {
    if *q < Rational::zero() {
        return Err(ExploreError::InvalidBound {
            bound: q.clone(),
            reason: "expectation bounds are non-negative",
        });
    }
    let ex = Explorer::new(p, env, var).with_frontier_cap(frontier_cap);
    certify_with(ex, budget, q, |r| &r.exp_v_partial)
}

/// Semi-decides `p < Pr_{P,η}(↓)`.
pub fn certify_lower_termination(
    p: &Program,
    env: &Valuation,
    bound: &Rational,
    budget: usize,
    frontier_cap: usize,
) -> Result<CertificateOutcome, ExploreError> {
    if !is_probability(bound) || bound.is_one() {
        return Err(ExploreError::InvalidBound {
            bound: bound.clone(),
            reason: "termination bounds lie in [0, 1)",
        });
    }
    let ex = Explorer::new(p, env, "").with_frontier_cap(frontier_cap);
    certify_with(ex, budget, bound, |r| &r.pr_within)
}

/// Semi-decides `c < E_{P,η}(↓)`; a success refutes `c` as a bound on the
/// expected runtime.
pub fn certify_runtime_exceeds(
    p: &Program,
    env: &Valuation,
    c: &Rational,
    budget: usize,
    frontier_cap: usize,
) -> Result<CertificateOutcome, ExploreError> {
    if *c < Rational::zero() {
        return Err(ExploreError::InvalidBound {
            bound: c.clone(),
            reason: "runtime bounds are non-negative",
        });
    }
    let ex = Explorer::new(p, env, "").with_frontier_cap(frontier_cap);
    certify_with(ex, budget, c, |r| &r.runtime_partial)
}
