use std::time::Instant;

use losr_core::constraints::{compile, DEFAULT_MAX_VARIABLES};
use losr_core::inflation::{all_members, enumerate_inflations, DEFAULT_MAX_WIRINGS};
use losr_core::lp::{solve_feasibility, SolveOptions, Verdict};
use losr_core::network::canonical_scenario;
use losr_core::quantum::{ghz_behavior, ghz_parties};

fn run(p: f64) -> losr_core::lp::Outcome {
    let s = canonical_scenario(3, ghz_parties(3)).unwrap();
    let b = ghz_behavior(3, p).unwrap();
    let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
    let sys = compile(&s, &b, &infl, DEFAULT_MAX_VARIABLES).unwrap();
    let t = Instant::now();
    let out = solve_feasibility(&sys, SolveOptions::default()).unwrap();
    eprintln!(
        "p={p} verdict={:?} t*={:.3e} verified={} iters={} free={} time={:?} note={:?}",
        out.verdict, out.objective, out.verified, out.stats.iterations, out.stats.n_free, t.elapsed(), out.note
    );
    out
}

#[test]
fn ideal_ghz_is_refuted() {
    let out = run(1.0);
    assert_eq!(out.verdict, Verdict::Infeasible);
    assert!(out.verified);
}

#[test]
fn half_noise_is_feasible() {
    let out = run(0.5);
    assert_eq!(out.verdict, Verdict::Feasible);
}
