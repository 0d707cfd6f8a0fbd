//! Single-step simulation of an ordinary program.
//!
//! The program's reachable continuations are numbered as locations and the
//! step block is an `if`/`else if` cascade on a program counter: each round
//! performs exactly the rule application the source program would perform
//! next, then moves the counter. Location 0 means "terminated"; a round at
//! location 0 does nothing.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use super::names::NameSupply;
use crate::ast::{ArithExpr, BoolExpr, CmpOp, Program};
use crate::semantics::Continuation;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("expected an ordinary program, found a probabilistic choice")]
pub struct NotOrdinary;

/// A program without probabilistic choice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinaryProgram(Program);

impl OrdinaryProgram {
    pub fn new(p: Program) -> Result<Self, NotOrdinary> {
        if p.is_choice_free() {
            Ok(OrdinaryProgram(p))
        } else {
            Err(NotOrdinary)
        }
    }

    pub fn program(&self) -> &Program {
        &self.0
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.0.free_vars()
    }
}

impl TryFrom<Program> for OrdinaryProgram {
    type Error = NotOrdinary;

    fn try_from(p: Program) -> Result<Self, NotOrdinary> {
        OrdinaryProgram::new(p)
    }
}

#[derive(Clone, Debug)]
pub struct StepperBundle {
    /// `pc := 1; term := 0`. Gadgets put the input decoder in front.
    pub init_template: Program,
    pub step_block: Program,
    pub pc_var: String,
    pub term_var: String,
    /// The continuation simulated at each location; index 0 is terminated.
    pub locations: Vec<Continuation>,
}

impl StepperBundle {
    pub fn location_count(&self) -> usize {
        self.locations.len() - 1
    }

    /// `InitQ`: load an input, then reset the counter and the flag.
    pub fn init_with(&self, load_input: Program) -> Program {
        match load_input {
            Program::Skip => self.init_template.clone(),
            load => Program::seq(load, self.init_template.clone()),
        }
    }
}

/// The rule the source program applies at a location, abstracted from the
/// valuation.
enum Action {
    Assign(String, ArithExpr, Continuation),
    Nop(Continuation),
    Test(BoolExpr, Continuation, Continuation),
}

fn action(cont: &Continuation) -> Action {
    match cont {
        Continuation::Terminated => unreachable!("terminated continuations are not locations"),
        Continuation::Then(first, rest) => match first.as_ref() {
            Continuation::Terminated => Action::Nop(Continuation::start(rest)),
            inner => {
                let wrap = |c: Continuation| Continuation::Then(Arc::new(c), rest.clone());
                match action(inner) {
                    Action::Assign(v, e, next) => Action::Assign(v, e, wrap(next)),
                    Action::Nop(next) => Action::Nop(wrap(next)),
                    Action::Test(g, t, f) => Action::Test(g, wrap(t), wrap(f)),
                }
            }
        },
        Continuation::Run(p) => match p.as_ref() {
            Program::Assign(v, e) => Action::Assign(v.clone(), e.clone(), Continuation::Terminated),
            Program::Skip => Action::Nop(Continuation::Terminated),
            Program::Seq(..) => action(&Continuation::start(p)),
            Program::While(g, body) => Action::Test(
                g.clone(),
                Continuation::Then(Arc::new(Continuation::start(body)), p.clone()),
                Continuation::Terminated,
            ),
            Program::If(g, then, otherwise) => Action::Test(
                g.clone(),
                Continuation::start(then),
                Continuation::start(otherwise),
            ),
            Program::Choice(..) => unreachable!("ordinary programs have no choice"),
        },
    }
}

/// Flattens `q` with scratch names drawn from its own variables.
pub fn flatten_to_stepper(q: &OrdinaryProgram) -> StepperBundle {
    let mut names = NameSupply::avoiding(q.free_vars());
    flatten_with(q, &mut names)
}

pub fn flatten_with(q: &OrdinaryProgram, names: &mut NameSupply) -> StepperBundle {
    let pc = names.scratch("pc");
    let term = names.name("term");

    let mut locations = vec![Continuation::Terminated];
    let mut index: HashMap<Continuation, usize> = HashMap::from([(Continuation::Terminated, 0)]);
    let mut actions: Vec<Action> = Vec::new();
    let start = Continuation::of(q.program());
    index.insert(start.clone(), 1);
    locations.push(start);

    let mut queue = VecDeque::from([1usize]);
    let mut intern = |c: Continuation, locations: &mut Vec<Continuation>, queue: &mut VecDeque<usize>| {
        *index.entry(c.clone()).or_insert_with(|| {
            locations.push(c);
            queue.push_back(locations.len() - 1);
            locations.len() - 1
        })
    };
    let mut targets: Vec<(usize, Option<usize>)> = Vec::new();
    while let Some(loc) = queue.pop_front() {
        let act = action(&locations[loc]);
        let tgt = match &act {
            Action::Assign(_, _, next) | Action::Nop(next) => {
                (intern(next.clone(), &mut locations, &mut queue), None)
            }
            Action::Test(_, t, f) => {
                let t = intern(t.clone(), &mut locations, &mut queue);
                let f = intern(f.clone(), &mut locations, &mut queue);
                (t, Some(f))
            }
        };
        actions.push(act);
        targets.push(tgt);
    }

    let jump = |to: usize| -> Program {
        let set_pc = Program::assign(&pc, ArithExpr::int(to as i64));
        if to == 0 {
            Program::seq(set_pc, Program::assign(&term, ArithExpr::int(1)))
        } else {
            set_pc
        }
    };

    // Locations are numbered in discovery order, so actions[n] belongs to
    // location n + 1. The cascade is built inside out.
    let mut step_block = Program::Skip;
    for (n, (act, (to, alt))) in actions.iter().zip(&targets).enumerate().rev() {
        let body = match act {
            Action::Assign(v, e, _) => Program::seq(Program::assign(v, e.clone()), jump(*to)),
            Action::Nop(_) => jump(*to),
            Action::Test(g, _, _) => {
                Program::if_then_else(g.clone(), jump(*to), jump(alt.expect("tests have two targets")))
            }
        };
        let at = BoolExpr::cmp(CmpOp::Eq, ArithExpr::var(&pc), ArithExpr::int(n as i64 + 1));
        step_block = Program::if_then_else(at, body, step_block);
    }

    let init_template = Program::seq(
        Program::assign(&pc, ArithExpr::int(1)),
        Program::assign(&term, ArithExpr::int(0)),
    );
    StepperBundle {
        init_template,
        step_block,
        pc_var: pc,
        term_var: term,
        locations,
    }
}
