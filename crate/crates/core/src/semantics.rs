//! Small-step operational semantics.
//!
//! A state is `⟨continuation, η, a, θ⟩`: what is left to run, the current
//! valuation, the probability of the choices made so far and the word of
//! those choices. [`step`] applies exactly one inference rule; the relation
//! `⊢` is its graph. [`successor`] resolves probabilistic branching with an
//! explicit word over `{L, R}`, and [`alpha`] / [`wp_weight`] read off the
//! weight of terminal states.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::ast::Program;
use crate::rational::Rational;
use crate::valuation::Valuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    L,
    R,
}

/// What remains to be executed.
///
/// `Then(c, p)` is the continuation `c; p` where `c` may already be
/// terminated, which is the `↓; P₂` form the sequencing rules operate on.
/// Sequences are kept in the normal form `Then(start(first), second)`;
/// `Run` never holds a `Seq`. Both forms step identically, the normal form
/// just keeps equal states equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Continuation {
    Terminated,
    Run(Arc<Program>),
    Then(Arc<Continuation>, Arc<Program>),
}

impl Continuation {
    pub fn start(p: &Arc<Program>) -> Self {
        match p.as_ref() {
            Program::Seq(first, second) => {
                Continuation::Then(Arc::new(Continuation::start(first)), second.clone())
            }
            _ => Continuation::Run(p.clone()),
        }
    }

    pub fn of(p: &Program) -> Self {
        Continuation::start(&Arc::new(p.clone()))
    }

    pub fn is_terminated(&self) -> bool {
        matches!(self, Continuation::Terminated)
    }
}

impl fmt::Display for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Continuation::Terminated => f.write_str("↓"),
            Continuation::Run(p) => write!(f, "{p}"),
            Continuation::Then(c, p) => write!(f, "{c};\n{p}"),
        }
    }
}

/// One rule application on the `(continuation, η)` part of a state. The
/// rules never read `a` or `θ`, so this is also the transition function of
/// the quotient chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    /// No rule applies: the continuation is terminated.
    Stop,
    /// A deterministic rule, with the (already clamped) assignment it made.
    Next {
        cont: Continuation,
        update: Option<(String, Rational)>,
    },
    /// `prob1` / `prob2`.
    Split {
        left: Continuation,
        p: Rational,
        right: Continuation,
    },
}

pub fn transition(cont: &Continuation, env: &Valuation) -> Transition {
    match cont {
        Continuation::Terminated => Transition::Stop,
        Continuation::Then(first, rest) => match first.as_ref() {
            // concat2
            Continuation::Terminated => Transition::Next {
                cont: Continuation::start(rest),
                update: None,
            },
            // concat1
            inner => match transition(inner, env) {
                Transition::Stop => unreachable!("non-terminated continuation always steps"),
                Transition::Next { cont, update } => Transition::Next {
                    cont: Continuation::Then(Arc::new(cont), rest.clone()),
                    update,
                },
                Transition::Split { left, p, right } => Transition::Split {
                    left: Continuation::Then(Arc::new(left), rest.clone()),
                    p,
                    right: Continuation::Then(Arc::new(right), rest.clone()),
                },
            },
        },
        Continuation::Run(p) => match p.as_ref() {
            Program::Assign(v, e) => {
                let value = e.eval(env);
                let value = if value < Rational::zero() {
                    Rational::zero()
                } else {
                    value
                };
                Transition::Next {
                    cont: Continuation::Terminated,
                    update: Some((v.clone(), value)),
                }
            }
            Program::Skip => Transition::Next {
                cont: Continuation::Terminated,
                update: None,
            },
            // Only reachable for a hand-built `Run(Seq)`; same step as the
            // normal form.
            Program::Seq(..) => transition(&Continuation::start(p), env),
            Program::Choice(left, q, right) => Transition::Split {
                left: Continuation::start(left),
                p: q.clone(),
                right: Continuation::start(right),
            },
            // while1 unrolls to `body; while`, while2 terminates.
            Program::While(guard, body) => Transition::Next {
                cont: if guard.eval(env) {
                    Continuation::Then(Arc::new(Continuation::start(body)), p.clone())
                } else {
                    Continuation::Terminated
                },
                update: None,
            },
            Program::If(guard, then, otherwise) => Transition::Next {
                cont: Continuation::start(if guard.eval(env) { then } else { otherwise }),
                update: None,
            },
        },
    }
}

/// `⟨continuation, η, a, θ⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub cont: Continuation,
    pub env: Valuation,
    pub prob: Rational,
    pub word: Vec<Branch>,
}

impl State {
    /// `σ_{P,η} = ⟨P, η, 1, ε⟩`.
    pub fn initial(p: &Program, env: &Valuation) -> Self {
        State {
            cont: Continuation::of(p),
            env: env.clone(),
            prob: Rational::one(),
            word: Vec::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.cont.is_terminated()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Terminal,
    Deterministic(State),
    Probabilistic(State, State),
}

pub fn step(state: &State) -> StepResult {
    match transition(&state.cont, &state.env) {
        Transition::Stop => StepResult::Terminal,
        Transition::Next { cont, update } => {
            let mut env = state.env.clone();
            if let Some((var, value)) = update {
                env.set(&var, value);
            }
            StepResult::Deterministic(State {
                cont,
                env,
                prob: state.prob.clone(),
                word: state.word.clone(),
            })
        }
        Transition::Split { left, p, right } => {
            let branch = |cont, weight: Rational, b| {
                let mut word = Vec::with_capacity(state.word.len() + 1);
                word.extend_from_slice(&state.word);
                word.push(b);
                State {
                    cont,
                    env: state.env.clone(),
                    prob: &state.prob * weight,
                    word,
                }
            };
            let q = Rational::one() - &p;
            StepResult::Probabilistic(branch(left, p, Branch::L), branch(right, q, Branch::R))
        }
    }
}

/// `T_k(σ, w)`: the state reached after exactly `k` rule applications whose
/// probabilistic choices consume `w` exactly, or `None` (⊥) if there is no
/// such run.
pub fn successor(k: usize, state: &State, w: &[Branch]) -> Option<State> {
    let mut cur = state.clone();
    let mut rest = w;
    for _ in 0..k {
        cur = match step(&cur) {
            StepResult::Terminal => return None,
            StepResult::Deterministic(next) => next,
            StepResult::Probabilistic(left, right) => {
                let (b, tail) = rest.split_first()?;
                rest = tail;
                match b {
                    Branch::L => left,
                    Branch::R => right,
                }
            }
        };
    }
    rest.is_empty().then_some(cur)
}

/// `α`: the path probability of a terminal state, 0 otherwise (including ⊥).
pub fn alpha(s: Option<&State>) -> Rational {
    match s {
        Some(st) if st.is_terminal() => st.prob.clone(),
        _ => Rational::zero(),
    }
}

/// `℘(σ, v) = η(v)·a` for terminal states, 0 otherwise.
pub fn wp_weight(s: Option<&State>, var: &str) -> Rational {
    match s {
        Some(st) if st.is_terminal() => st.env.get(var) * &st.prob,
        _ => Rational::zero(),
    }
}

/// Outcome of running a choice-free program to completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub env: Valuation,
    pub steps: usize,
}

/// Runs `p` from `env` until it terminates. `None` if it needs more than
/// `max_steps` steps or reaches a probabilistic choice.
pub fn run_deterministic(p: &Program, env: &Valuation, max_steps: usize) -> Option<Run> {
    let mut cont = Continuation::of(p);
    let mut env = env.clone();
    for steps in 0..=max_steps {
        match transition(&cont, &env) {
            Transition::Stop => return Some(Run { env, steps }),
            Transition::Next { cont: next, update } => {
                if let Some((v, value)) = update {
                    env.set(&v, value);
                }
                cont = next;
            }
            Transition::Split { .. } => return None,
        }
    }
    None
}

/// Product of branch probabilities spelled by a word, following the
/// choices of the run from `state`. Used to check path-weight coherence.
pub fn word_weight(p: &Program, env: &Valuation, word: &[Branch]) -> Option<Rational> {
    let mut cur = State::initial(p, env);
    let mut rest = word;
    let mut weight = Rational::one();
    while !rest.is_empty() {
        match transition(&cur.cont, &cur.env) {
            Transition::Stop => return None,
            Transition::Next { .. } => match step(&cur) {
                StepResult::Deterministic(n) => cur = n,
                _ => unreachable!(),
            },
            Transition::Split { p: q, .. } => {
                let StepResult::Probabilistic(l, r) = step(&cur) else {
                    unreachable!()
                };
                let (b, tail) = rest.split_first()?;
                rest = tail;
                match b {
                    Branch::L => {
                        weight *= q;
                        cur = l;
                    }
                    Branch::R => {
                        weight *= Rational::one() - q;
                        cur = r;
                    }
                }
            }
        }
    }
    Some(weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::rational::{int, rat};

    fn prog(s: &str) -> Program {
        parse(s).unwrap()
    }

    #[test]
    fn initial_state() {
        let p = prog("x := 1");
        let s = State::initial(&p, &Valuation::new());
        assert_eq!(s.prob, int(1));
        assert!(s.word.is_empty());
        assert_eq!(s.cont, Continuation::of(&p));
        let eta = Valuation::new().with("x", rat(7, 2));
        assert_eq!(State::initial(&p, &eta).env.get("x"), rat(7, 2));
    }

    #[test]
    fn assignment_clamps_at_zero() {
        let s = State::initial(&prog("x := y - 5"), &Valuation::new().with("y", int(2)));
        let StepResult::Deterministic(next) = step(&s) else {
            panic!("expected a deterministic step")
        };
        assert!(next.is_terminal());
        assert_eq!(next.env, Valuation::new().with("y", int(2)));
        assert_eq!(next.env.get("x"), int(0));
        assert_eq!(next.prob, int(1));
    }

    #[test]
    fn probabilistic_step_splits_mass() {
        let s = State::initial(&prog("{c := 0} [1/2] {c := 1}"), &Valuation::new());
        let StepResult::Probabilistic(l, r) = step(&s) else {
            panic!("expected a probabilistic step")
        };
        assert_eq!(l.cont, Continuation::of(&prog("c := 0")));
        assert_eq!(r.cont, Continuation::of(&prog("c := 1")));
        assert_eq!((l.prob.clone(), r.prob.clone()), (rat(1, 2), rat(1, 2)));
        assert_eq!(l.word, vec![Branch::L]);
        assert_eq!(r.word, vec![Branch::R]);
    }

    #[test]
    fn terminated_state_has_no_successor() {
        let s = State {
            cont: Continuation::Terminated,
            env: Valuation::new(),
            prob: rat(1, 4),
            word: vec![Branch::L, Branch::R],
        };
        assert_eq!(step(&s), StepResult::Terminal);
    }

    #[test]
    fn sequencing_takes_a_discard_step() {
        // assign, concat2, assign
        let s = State::initial(&prog("x := 1; y := 2"), &Valuation::new());
        assert!(successor(2, &s, &[]).is_some_and(|t| !t.is_terminal()));
        let end = successor(3, &s, &[]).unwrap();
        assert!(end.is_terminal());
        assert_eq!(end.env.get("y"), int(2));
        assert!(successor(4, &s, &[]).is_none());
    }

    #[test]
    fn while_and_if_rules() {
        let s = State::initial(&prog("while (x < 2) { x := x + 1 }"), &Valuation::new());
        // while1, assign, concat2 per iteration, then while2
        let end = successor(7, &s, &[]).unwrap();
        assert!(end.is_terminal());
        assert_eq!(end.env.get("x"), int(2));

        let s = State::initial(&prog("if (x = 0) {y := 1} else {y := 2}"), &Valuation::new());
        let end = successor(2, &s, &[]).unwrap();
        assert_eq!(end.env.get("y"), int(1));
        let s = State::initial(&prog("skip"), &Valuation::new());
        assert!(successor(1, &s, &[]).unwrap().is_terminal());
    }

    #[test]
    fn successor_function() {
        let sigma = State::initial(&prog("v := 1"), &Valuation::new());
        assert_eq!(successor(0, &sigma, &[]), Some(sigma.clone()));
        assert_eq!(successor(0, &sigma, &[Branch::L]), None);
        assert_eq!(successor(1, &sigma, &[Branch::L]), None);

        let coin = State::initial(&prog("{x := 1} [1/2] {x := 2}"), &Valuation::new());
        let t = successor(2, &coin, &[Branch::L]).unwrap();
        assert!(t.is_terminal());
        assert_eq!(t.env, Valuation::new().with("x", int(1)));
        assert_eq!(t.prob, rat(1, 2));
        assert_eq!(t.word, vec![Branch::L]);
        assert_eq!(successor(2, &coin, &[]), None);
        assert_eq!(successor(2, &coin, &[Branch::L, Branch::L]), None);
    }

    #[test]
    fn alpha_and_wp_weight() {
        let done = State {
            cont: Continuation::Terminated,
            env: Valuation::new().with("v", int(3)),
            prob: rat(1, 2),
            word: vec![Branch::L],
        };
        assert_eq!(alpha(Some(&done)), rat(1, 2));
        assert_eq!(wp_weight(Some(&done), "v"), rat(3, 2));
        assert_eq!(wp_weight(Some(&done), "u"), int(0));
        assert_eq!(alpha(None), int(0));
        assert_eq!(wp_weight(None, "v"), int(0));

        let looping = State::initial(&prog("while (0 = 0) {skip}"), &Valuation::new());
        assert_eq!(alpha(Some(&looping)), int(0));
    }

    #[test]
    fn word_weight_follows_branches() {
        let p = prog("{x := 1} [1/3] {{x := 2} [1/4] {x := 3}}");
        assert_eq!(word_weight(&p, &Valuation::new(), &[Branch::R, Branch::L]), Some(rat(1, 6)));
        assert_eq!(word_weight(&p, &Valuation::new(), &[Branch::L, Branch::L]), None);
    }
}
