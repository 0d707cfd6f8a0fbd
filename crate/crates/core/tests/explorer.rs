mod common;

use std::fs;

use common::*;
use pgcl::explorer::{
    brute_force_partial_sums, certify_lower_expectation, certify_lower_termination,
    certify_runtime_exceeds, explore_partial_sums, write_csv, CertificateOutcome,
};
use pgcl::rational::{int, rat};
use pgcl::semantics::{successor, Branch, State};
use pgcl::Valuation;

const CAP: usize = 100_000;

#[test]
fn frontier_rows_equal_word_enumeration_on_corpus() {
    for (name, var) in CORPUS {
        let p = load(name);
        let env = Valuation::new();
        let fast = explore_partial_sums(&p, &env, var, 12, CAP).unwrap();
        assert_eq!(fast, brute_force_partial_sums(&p, &env, var, 12), "{name}");
    }
}

/// GEO's rows from the word-enumeration oracle, frozen. Regenerate with
/// `PGCL_BLESS=1`.
#[test]
fn geometric_loop_golden_rows() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/geo_depth12.csv");
    let rows = brute_force_partial_sums(&load("geo"), &Valuation::new(), "i", 12);
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    if std::env::var_os("PGCL_BLESS").is_some() {
        fs::write(&path, &csv).unwrap();
    }
    assert_eq!(csv, fs::read_to_string(&path).unwrap());

    let fast = explore_partial_sums(&load("geo"), &Valuation::new(), "i", 12, CAP).unwrap();
    assert_eq!(fast, rows);
}

/// Termination mass of GEO arrives in chunks of `1/2^(n+1)` as the n-th
/// toss resolves, so `pr_within` always has the form `1 - 2^-n`. The first
/// toss resolves at depth 6 and every later one six steps after the last.
#[test]
fn geometric_loop_has_dyadic_staircase() {
    let rows = explore_partial_sums(&load("geo"), &Valuation::new(), "i", 60, CAP).unwrap();
    for row in &rows {
        let missing = int(1) - &row.pr_within;
        assert!(missing.numer() == &1.into() || missing == int(0));
        assert!(missing.denom().magnitude().count_ones() == 1);
    }
    assert_eq!(rows[60].pr_within, int(1) - rat(1, 1 << 10));
}

#[test]
fn coin_successors() {
    let s = State::initial(&load("coin"), &Valuation::new());
    let t = successor(2, &s, &[Branch::L]).unwrap();
    assert!(t.is_terminal());
    assert_eq!(t.env, env(&[("x", 1)]));
    assert_eq!(t.prob, rat(1, 2));
    assert_eq!(successor(0, &s, &[]), Some(s.clone()));
    assert_eq!(successor(1, &s, &[]), None);
    assert_eq!(successor(3, &s, &[Branch::L]), None);
}

#[test]
fn certificates_re_verify_at_their_depth() {
    let env = Valuation::new();
    let cases = [("coin", "x", rat(1, 2)), ("geo", "i", rat(1, 2)), ("lexp_halting", "v", rat(1, 2))];
    for (name, var, q) in cases {
        let p = load(name);
        let CertificateOutcome::Certified { depth, witness } =
            certify_lower_expectation(&p, &env, var, &q, 200, CAP).unwrap()
        else {
            panic!("{name} not certified")
        };
        let rows = explore_partial_sums(&p, &env, var, depth, CAP).unwrap();
        assert_eq!(rows[depth].exp_v_partial, witness);
        assert!(witness > q);
        assert!(depth == 0 || rows[depth - 1].exp_v_partial <= q);
    }
}

#[test]
fn termination_certificates() {
    let env = Valuation::new();
    let out = certify_lower_termination(&load("geo"), &env, &rat(1023, 1024), 500, CAP).unwrap();
    let CertificateOutcome::Certified { depth, witness } = out else { panic!() };
    assert!(witness > rat(1023, 1024));
    // 1 - 2^-11 is reached when the toss after ten increments resolves.
    assert_eq!(depth, 6 + 6 * 10);
    assert!(!certify_lower_termination(&load("div"), &env, &int(0), 100, CAP)
        .unwrap()
        .is_certified());
    assert!(!certify_lower_termination(&load("half_term"), &env, &rat(1, 2), 200, CAP)
        .unwrap()
        .is_certified());
}

#[test]
fn runtime_certificates() {
    let env = Valuation::new();
    let out = certify_runtime_exceeds(&load("div"), &env, &int(10), 100, CAP).unwrap();
    assert_eq!(out, CertificateOutcome::Certified { depth: 11, witness: int(11) });
    let out = certify_runtime_exceeds(&load("coin"), &env, &int(2), 50, CAP).unwrap();
    assert!(!out.is_certified());
}

#[test]
fn diverging_lexp_gadget_plateaus_at_one_half() {
    let rows =
        explore_partial_sums(&load("lexp_diverging"), &Valuation::new(), "v", 20, CAP).unwrap();
    let first = rows.iter().position(|r| r.exact_k_mass > int(0)).unwrap();
    assert!(rows[..first].iter().all(|r| r.exp_v_partial == int(0)));
    assert!(rows[first..].iter().all(|r| r.exp_v_partial == rat(1, 2)));
}
