//! Seeded Monte-Carlo execution.
//!
//! Sample `j` of a batch draws from ChaCha8 seeded with the batch seed on
//! stream `j`, so every run is reproducible on its own and independent of
//! scheduling. A branch with probability `p` goes left iff a uniform 64-bit
//! draw `u` satisfies `u < p·2^64`, compared exactly; the bias is below
//! `2^-64`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ast::Program;
use crate::rational::Rational;
use crate::semantics::{transition, Branch, Continuation, Transition};
use crate::valuation::Valuation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleRun {
    pub terminated: bool,
    pub env: Valuation,
    pub steps: usize,
    pub word: Vec<Branch>,
    /// Product of the branch probabilities along `word`.
    pub prob: Rational,
}

fn draw_left(rng: &mut ChaCha8Rng, p: &Rational) -> bool {
    let u = BigInt::from(rng.next_u64());
    u * p.denom() < p.numer() << 64
}

fn run_stream(p: &Program, env: &Valuation, seed: u64, stream: u64, step_cap: usize) -> SampleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut cont = Continuation::of(p);
    let mut env = env.clone();
    let mut word = Vec::new();
    let mut prob = Rational::one();
    let mut steps = 0;
    loop {
        let next = match transition(&cont, &env) {
            Transition::Stop => {
                return SampleRun { terminated: true, env, steps, word, prob };
            }
            _ if steps == step_cap => {
                return SampleRun { terminated: false, env, steps, word, prob };
            }
            Transition::Next { cont, update } => {
                if let Some((v, value)) = update {
                    env.set(&v, value);
                }
                cont
            }
            Transition::Split { left, p, right } => {
                if draw_left(&mut rng, &p) {
                    word.push(Branch::L);
                    prob *= p;
                    left
                } else {
                    word.push(Branch::R);
                    prob *= Rational::one() - p;
                    right
                }
            }
        };
        cont = next;
        steps += 1;
    }
}

/// One run of at most `step_cap` steps; the same as sample 0 of
/// [`estimate`] with this seed.
pub fn sample_run(p: &Program, env: &Valuation, seed: u64, step_cap: usize) -> SampleRun {
    run_stream(p, env, seed, 0, step_cap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub seed: u64,
    pub samples: u64,
    pub terminated: u64,
    pub step_capped: u64,
    /// Mean of the variable over terminated runs.
    pub mean_outcome: Option<Rational>,
    pub outcome_std_error: Option<f64>,
    /// Mean step count over terminated runs.
    pub mean_steps: Option<Rational>,
    pub steps_std_error: Option<f64>,
}

impl SampleReport {
    pub fn terminated_fraction(&self) -> Rational {
        Rational::new(self.terminated.into(), self.samples.into())
    }

    /// Standard error of the terminated fraction.
    pub fn terminated_std_error(&self) -> f64 {
        let f = self.terminated as f64 / self.samples as f64;
        (f * (1.0 - f) / self.samples as f64).sqrt()
    }
}

/// Exact mean and floating-point standard error of the mean.
fn mean_and_error(values: &[Rational]) -> Option<(Rational, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = Rational::from_integer(values.len().into());
    let sum: Rational = values.iter().sum();
    let mean = sum / &n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let squares: Rational = values.iter().map(|v| (v - &mean) * (v - &mean)).sum();
    let variance = squares / (n.clone() - Rational::one());
    let err = (variance / n).to_f64().unwrap_or(f64::INFINITY).sqrt();
    Some((mean, err))
}

/// `n` independent runs; aggregation is exact and in sample order, so the
/// report does not depend on the worker count.
pub fn estimate(
    p: &Program,
    env: &Valuation,
    var: &str,
    n: u64,
    seed: u64,
    step_cap: usize,
) -> SampleReport {
    let runs: Vec<(bool, Rational, usize)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let run = run_stream(p, env, seed, j, step_cap);
            (run.terminated, run.env.get(var), run.steps)
        })
        .collect();

    let done: Vec<&(bool, Rational, usize)> = runs.iter().filter(|r| r.0).collect();
    let outcomes: Vec<Rational> = done.iter().map(|r| r.1.clone()).collect();
    let steps: Vec<Rational> = done
        .iter()
        .map(|r| Rational::from_integer(r.2.into()))
        .collect();
    let outcome = mean_and_error(&outcomes);
    let step_stats = mean_and_error(&steps);
    let terminated = done.len() as u64;
    SampleReport {
        seed,
        samples: n,
        terminated,
        step_capped: n - terminated,
        mean_outcome: outcome.as_ref().map(|o| o.0.clone()),
        outcome_std_error: outcome.map(|o| o.1),
        mean_steps: step_stats.as_ref().map(|s| s.0.clone()),
        steps_std_error: step_stats.map(|s| s.1),
    }
}

impl std::fmt::Display for SampleReport {
    /// `key=value` lines.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |q: &Option<Rational>| q.as_ref().map_or("none".to_string(), |q| q.to_string());
        let err = |e: &Option<f64>| e.map_or("none".to_string(), |e| format!("{e:.6}"));
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "samples={}", self.samples)?;
        writeln!(f, "terminated={}", self.terminated)?;
        writeln!(f, "step_capped={}", self.step_capped)?;
        writeln!(f, "terminated_fraction={}", self.terminated_fraction())?;
        writeln!(f, "mean_outcome={}", opt(&self.mean_outcome))?;
        writeln!(f, "outcome_std_error={}", err(&self.outcome_std_error))?;
        writeln!(f, "mean_steps={}", opt(&self.mean_steps))?;
        write!(f, "steps_std_error={}", err(&self.steps_std_error))
    }
}
