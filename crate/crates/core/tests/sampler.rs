mod common;

use common::*;
use pgcl::chain::{decide_ast_past_finite, ExpectedSteps};
use pgcl::rational::int;
use pgcl::sampler::{estimate, sample_run};
use pgcl::semantics::word_weight;
use pgcl::{Rational, Valuation};
use num_traits::ToPrimitive;

fn f(q: &Rational) -> f64 {
    q.to_f64().unwrap()
}

#[test]
fn runs_replay_their_words() {
    for (name, _) in CORPUS {
        let p = load(name);
        for seed in 0..20 {
            let run = sample_run(&p, &Valuation::new(), seed, 2000);
            assert_eq!(word_weight(&p, &Valuation::new(), &run.word), Some(run.prob.clone()), "{name}");
        }
    }
}

#[test]
fn estimate_is_independent_of_thread_count() {
    let p = load("geo");
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = one.install(|| estimate(&p, &Valuation::new(), "i", 500, 11, 10_000));
    let b = estimate(&p, &Valuation::new(), "i", 500, 11, 10_000);
    assert_eq!(a, b);
}

#[test]
fn seeds_give_different_streams() {
    let p = load("geo");
    let a = estimate(&p, &Valuation::new(), "i", 200, 1, 10_000);
    let b = estimate(&p, &Valuation::new(), "i", 200, 2, 10_000);
    assert_ne!(a.mean_steps, b.mean_steps);
}

#[test]
fn means_near_exact_values() {
    for (name, var) in [("die", "d"), ("two_coins", "z"), ("nested", "x"), ("countdown", "s")] {
        let p = load(name);
        let exact = decide_ast_past_finite(&p, &Valuation::new(), &[var], 10_000).unwrap();
        let r = estimate(&p, &Valuation::new(), var, 20_000, 5, 100_000);
        assert_eq!(r.terminated, r.samples);
        let mean = f(r.mean_outcome.as_ref().unwrap());
        let target = f(&exact.expected_outcomes[0].1);
        assert!((mean - target).abs() <= 4.0 * r.outcome_std_error.unwrap().max(1e-12), "{name}");
        let ExpectedSteps::Finite(steps) = exact.expected_steps else { panic!() };
        let mean = f(r.mean_steps.as_ref().unwrap());
        assert!((mean - f(&steps)).abs() <= 4.0 * r.steps_std_error.unwrap().max(1e-12), "{name}");
    }
}

#[test]
fn half_terminating_program() {
    let r = estimate(&load("half_term"), &Valuation::new(), "x", 20_000, 9, 500);
    let frac = f(&r.terminated_fraction());
    assert!((frac - 0.5).abs() <= 4.0 * r.terminated_std_error());
    assert_eq!(r.terminated + r.step_capped, 20_000);
    assert_eq!(r.mean_outcome.map(|m| m <= int(1)), Some(true));
}
