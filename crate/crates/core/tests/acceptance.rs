//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always shown. A FAIL
//! listed in `KNOWN_UNATTAINABLE` is reported but does not fail the run;
//! every other FAIL does.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use losr_core::behavior::deterministic;
use losr_core::constraints::shared_bit::{check_shared_bit_not_lo, ring_system, shared_bit_system};
use losr_core::constraints::{compile, DEFAULT_MAX_VARIABLES};
use losr_core::inequalities::{bkp_score, ghz_inequality_slack};
use losr_core::inflation::{all_members, enumerate_inflations, DEFAULT_MAX_WIRINGS};
use losr_core::lp::sweep::{sweep_noise, unit_interval, GhzInequalityFamily, GhzLpFamily};
use losr_core::lp::{solve_feasibility, verify, witness_for, Certificate, SolveOptions, Solver, Verdict};
use losr_core::network::{canonical_scenario, PartySpec, Scenario};
use losr_core::quantum::{fidelity_of, ghz_behavior, ghz_parties, svetlichny_lhvm_behavior, w_behavior};
use losr_core::scalar::ratio;
use losr_core::{Behavior, Error, QSqrt2};

const KNOWN_UNATTAINABLE: &[usize] = &[8];

/// How to sample behaviors the certificate must not refute.
enum Model {
    /// Local deterministic mixtures on these parties; the witness is affine in P.
    Lhv(Vec<PartySpec>),
    /// Network models without global randomness on the `n`-party bit
    /// network; the ring system is rebuilt per sample since its
    /// independence row depends on P.
    Ring(usize),
}

type Emitted = Vec<(String, Model, Certificate)>;

struct Report {
    id: usize,
    pass: bool,
    detail: String,
}

fn q(v: i64) -> QSqrt2 {
    QSqrt2::from(v)
}

fn sqrt2() -> QSqrt2 {
    QSqrt2::sqrt2()
}

/// Random local deterministic response tables.
fn random_responses(rng: &mut impl Rng, parties: &[PartySpec]) -> Vec<Vec<usize>> {
    parties
        .iter()
        .map(|p| (0..p.inputs).map(|_| rng.gen_range(0..p.outputs)).collect())
        .collect()
}

/// A mixture of `k` random deterministic points with random rational weights.
fn random_local(rng: &mut impl Rng, parties: &[PartySpec], k: usize) -> Behavior<BigRational> {
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let mut table: Vec<BigRational> = Vec::new();
    for &w in &weights {
        let d: Behavior<BigRational> = deterministic(parties.to_vec(), &random_responses(rng, parties)).unwrap();
        if table.is_empty() {
            table = vec![BigRational::zero(); d.table().len()];
        }
        for (t, v) in table.iter_mut().zip(d.table()) {
            *t += v * ratio(w, total);
        }
    }
    Behavior::new(parties.to_vec(), table).unwrap()
}

/// Every local deterministic strategy on `parties`.
fn all_deterministic(parties: &[PartySpec]) -> Vec<Behavior<BigRational>> {
    let slots: Vec<usize> = parties.iter().flat_map(|p| std::iter::repeat(p.outputs).take(p.inputs)).collect();
    let total: usize = slots.iter().product();
    (0..total)
        .map(|mut k| {
            let mut responses = Vec::new();
            for p in parties {
                let r: Vec<usize> = (0..p.inputs)
                    .map(|_| {
                        let v = k % p.outputs;
                        k /= p.outputs;
                        v
                    })
                    .collect();
                responses.push(r);
            }
            deterministic(parties.to_vec(), &responses).unwrap()
        })
        .collect()
}

/// A one-input network model without global randomness: every source sends
/// a ternary value drawn from its own random distribution, and every party
/// outputs a random function of the values it receives.
fn random_network(rng: &mut impl Rng, s: &Scenario) -> Behavior<BigRational> {
    const ALPHABET: usize = 3;
    let dists: Vec<Vec<BigRational>> = (0..s.n_sources())
        .map(|_| {
            let w: Vec<i64> = (0..ALPHABET).map(|_| rng.gen_range(0..=6)).collect();
            let t: i64 = w.iter().sum::<i64>().max(1);
            if w.iter().all(|&v| v == 0) {
                (0..ALPHABET).map(|i| ratio(i64::from(i == 0), 1)).collect()
            } else {
                w.iter().map(|&v| ratio(v, t)).collect()
            }
        })
        .collect();
    let sources: Vec<Vec<usize>> = (0..s.n_parties()).map(|j| s.sources_of(j)).collect();
    let funcs: Vec<Vec<usize>> = sources
        .iter()
        .map(|src| (0..ALPHABET.pow(src.len() as u32)).map(|_| rng.gen_range(0..2)).collect())
        .collect();
    let mut table = vec![BigRational::zero(); 1 << s.n_parties()];
    for k in 0..ALPHABET.pow(s.n_sources() as u32) {
        let vals: Vec<usize> = (0..s.n_sources()).map(|i| k / ALPHABET.pow(i as u32) % ALPHABET).collect();
        let weight = vals.iter().enumerate().fold(ratio(1, 1), |acc, (i, &v)| acc * &dists[i][v]);
        if weight.is_zero() {
            continue;
        }
        // first party most significant
        let out = sources.iter().zip(&funcs).fold(0, |acc, (src, f)| {
            let idx = src.iter().fold(0, |a, &i| a * ALPHABET + vals[i]);
            acc * 2 + f[idx]
        });
        table[out] += weight;
    }
    Behavior::new(s.parties().to_vec(), table).unwrap()
}

/// Largest witness value over 10^3 samples (plus, for affine witnesses,
/// every deterministic point).
fn max_witness(rng: &mut impl Rng, model: &Model, cert: &Certificate) -> QSqrt2 {
    let values: Vec<QSqrt2> = match model {
        Model::Lhv(parties) => (0..1000)
            .map(|_| {
                let k = rng.gen_range(1..=8);
                random_local(rng, parties, k)
            })
            .chain(all_deterministic(parties))
            .map(|b| cert.witness.evaluate(&b).unwrap())
            .collect(),
        Model::Ring(n) => {
            let bits: Vec<PartySpec> = (1..=*n).map(|i| PartySpec::new(format!("A{i}"), 1, 2)).collect();
            let s = canonical_scenario(*n, bits).unwrap();
            (0..1000)
                .map(|_| {
                    let sys = ring_system(random_network(rng, &s)).unwrap();
                    witness_for(&sys, cert).unwrap().evaluate(&sys.p).unwrap()
                })
                .collect()
        }
    };
    values.into_iter().max().unwrap()
}

fn c1_enumeration() -> Report {
    let t = Instant::now();
    let count = |n: usize, k: usize| {
        let s = canonical_scenario(n, ghz_parties(n)).unwrap();
        enumerate_inflations(&s, k, DEFAULT_MAX_WIRINGS).unwrap()
    };
    let tri1 = count(3, 1).len();
    let tri2 = count(3, 2).len();
    let tet = count(4, 2);
    let mut mult: Vec<usize> = tet.iter().map(|c| c.multiplicity).collect();
    mult.sort();
    let elapsed = t.elapsed();
    let pass = tri1 == 1 && tri2 == 2 && tet.len() == 6 && mult == [1, 1, 3, 3, 12, 12] && elapsed < Duration::from_secs(10);
    Report {
        id: 1,
        pass,
        detail: format!(
            "triangle K=1: {tri1}, K=2: {tri2}; tetrahedron K=2: {} classes, multiplicities {mult:?}; {elapsed:.2?}",
            tet.len()
        ),
    }
}

fn c2_analytic() -> Report {
    let ghz3: Behavior<QSqrt2> = ghz_behavior(3, q(1)).unwrap();
    let exact = ghz_inequality_slack(&ghz3, 3).unwrap().slack;
    let exact_ok = exact == q(2) * sqrt2() - q(2);
    let float = ghz_inequality_slack(&ghz_behavior(3, 1.0f64).unwrap(), 3).unwrap().slack;
    let float_err = (float - (2.0 * 2f64.sqrt() - 2.0)).abs();

    let ghz4 = ghz_inequality_slack(&ghz_behavior(4, q(1)).unwrap(), 4).unwrap();
    let n4_ok = ghz4.lhs == q(2) * sqrt2() + q(12) && ghz4.rhs == q(14);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let parties = ghz_parties(3);
    let (mut worst, mut singular, mut violations) = (None::<BigRational>, 0usize, 0usize);
    for _ in 0..10_000 {
        let b: Behavior<BigRational> = deterministic(parties.clone(), &random_responses(&mut rng, &parties)).unwrap();
        match ghz_inequality_slack(&b, 3) {
            Ok(s) => {
                violations += usize::from(s.slack > BigRational::zero());
                if worst.as_ref().map_or(true, |w| s.slack > *w) {
                    worst = Some(s.slack);
                }
            }
            Err(Error::Singular(_)) | Err(Error::ConditioningUndefined(_)) => singular += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let pass = exact_ok && float_err < 1e-12 && n4_ok && violations == 0;
    Report {
        id: 2,
        pass,
        detail: format!(
            "GHZ_3 slack {exact} (float error {float_err:.1e}); GHZ_4 LHS {} RHS {}; 10^4 deterministic strategies: {violations} violations, max slack {}, {singular} undefined (collective Charlie = -1)",
            ghz4.lhs,
            ghz4.rhs,
            worst.map(|w| w.to_string()).unwrap_or_default()
        ),
    }
}

fn ghz_system<T: losr_core::Scalar>(b: &Behavior<T>) -> losr_core::ConstraintSystem<T> {
    let s = canonical_scenario(3, ghz_parties(3)).unwrap();
    let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
    compile(&s, b, &infl, DEFAULT_MAX_VARIABLES).unwrap()
}

fn c3_certification(certs: &mut Emitted) -> Report {
    let t = Instant::now();
    let ideal = ghz_system(&ghz_behavior(3, q(1)).unwrap());
    let out1 = solve_feasibility(&ideal, SolveOptions::default()).unwrap();
    let t1 = t.elapsed();
    let independent = out1
        .certificate
        .as_ref()
        .map(|c| verify(&ideal, c).unwrap().valid)
        .unwrap_or(false);
    if let Some(c) = &out1.certificate {
        certs.push(("GHZ_3 p=1".into(), Model::Lhv(ghz_parties(3)), c.clone()));
    }
    let t = Instant::now();
    let half = ghz_system(&ghz_behavior(3, QSqrt2::from_rational(ratio(1, 2))).unwrap());
    let out2 = solve_feasibility(&half, SolveOptions::default()).unwrap();
    let t2 = t.elapsed();
    let pass = out1.verdict == Verdict::Infeasible
        && out1.verified
        && independent
        && out2.verdict == Verdict::Feasible
        && t1 < Duration::from_secs(300)
        && t2 < Duration::from_secs(300);
    Report {
        id: 3,
        pass,
        detail: format!(
            "p=1: {:?}, t* = {:.3e}, certificate verified = {independent} ({t1:.1?}); p=1/2: {:?}, point checked exactly = {} ({t2:.1?}); {} variables",
            out1.verdict, out1.objective, out2.verdict, out2.verified, out1.stats.n_variables
        ),
    }
}

fn c4_c5_sweeps(certs: &mut Emitted) -> (Report, Report) {
    let target = 2.0 * 2f64.sqrt() - 2.0;
    let t = Instant::now();
    let mut fam = GhzLpFamily::with_defaults(3, 2).unwrap();
    let (lo, hi) = unit_interval();
    let r = sweep_noise(&mut fam, lo, hi, 2e-3).unwrap();
    let elapsed = t.elapsed();
    let f_lo = fidelity_of(3, &r.lower).unwrap();
    let f_hi = fidelity_of(3, &r.upper).unwrap();
    if let Some(c) = &r.certificate {
        certs.push((format!("GHZ_3 p={}", r.upper_exact), Model::Lhv(ghz_parties(3)), c.clone()));
    }
    let c4 = Report {
        id: 4,
        pass: r.lower <= target
            && target < r.upper
            && r.upper - r.lower <= 2e-3
            && r.certificate_verified
            && (0.850..=0.857).contains(&f_hi),
        detail: format!(
            "p* in [{}, {}] = [{:.6}, {:.6}], certificate at upper end verified = {}; fidelity at certified end {f_hi:.5} (lower end {f_lo:.5}); {} LP solves for {} points, {elapsed:.1?}",
            r.lower_exact,
            r.upper_exact,
            r.lower,
            r.upper,
            r.certificate_verified,
            fam.solves,
            r.steps.len()
        ),
    };

    let analytic = 10.0 / (2.0 * 2f64.sqrt() + 8.0);
    let (lo, hi) = unit_interval();
    let a = sweep_noise(&mut GhzInequalityFamily { n: 3 }, lo, hi, 1e-6).unwrap();
    let c5 = Report {
        id: 5,
        pass: a.lower <= analytic && analytic < a.upper && a.lower > r.upper,
        detail: format!(
            "inequality flips in [{:.7}, {:.7}] (closed form {analytic:.7}, fidelity {:.4}); LP threshold below {:.6}",
            a.lower,
            a.upper,
            fidelity_of(3, &analytic).unwrap(),
            r.upper
        ),
    };
    (c4, c5)
}

fn c6_shared_bit(certs: &mut Emitted) -> Report {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in 3..=5 {
        let r = check_shared_bit_not_lo(n).unwrap();
        pass &= r.verdict == Verdict::Infeasible && r.certificate_verified;
        parts.push(format!("n={n}: {:?} (t* = {})", r.verdict, r.objective));
    }
    let sys = shared_bit_system(3).unwrap();
    let out = solve_feasibility(&sys, SolveOptions::default()).unwrap();
    if let Some(c) = out.certificate {
        certs.push(("shared bit n=3".into(), Model::Ring(3), c));
    }
    Report {
        id: 6,
        pass,
        detail: parts.join("; "),
    }
}

fn c7_w_suite() -> Report {
    let w2: Behavior<QSqrt2> = w_behavior(2).unwrap();
    let pc = w2.conditional_probability(&[(2, 1)], |a| a[2] == 0, None).unwrap();
    let game = w2
        .conditional_probability(&[(0, 1), (1, 0), (2, 1)], |a| a.iter().sum::<usize>() == 1, None)
        .unwrap();
    let given = losr_core::behavior::Event::Output { party: 2, input: 1, output: 0 };
    let exact2 = bkp_score(&w2, 2, Some(&given)).unwrap();
    let scores: Vec<f64> = [2usize, 4, 8, 16]
        .iter()
        .map(|&m| bkp_score(&w_behavior::<f64>(m).unwrap(), m, Some(&given)).unwrap())
        .collect();
    let decreasing = scores.windows(2).all(|w| w[1] < w[0]);
    let pass = pc == QSqrt2::from_rational(ratio(2, 3)) && game == q(1) && decreasing && exact2 < q(1);
    Report {
        id: 7,
        pass,
        detail: format!(
            "P(C=0|Z=1) = {pc}; game success = {game}; I_BKP at M=2 = {exact2}; M=2,4,8,16: {}",
            scores.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn c8_lhvm() -> Report {
    let b: Behavior<BigRational> = svetlichny_lhvm_behavior().unwrap();
    let ns = b.check_nonsignalling(0.0).unwrap();
    let s = ghz_inequality_slack(&b, 3).unwrap();
    let violated = s.lhs == ratio(12, 1) && s.rhs == ratio(10, 1);
    Report {
        id: 8,
        pass: ns && violated,
        detail: format!(
            "LHS = {} > RHS = {} holds; nonsignalling = {ns}: Alice's output depends on Bob's input in this model, so the nonsignalling clause cannot hold",
            s.lhs, s.rhs
        ),
    }
}

fn c9_soundness(certs: &Emitted) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    // 100 random local behaviors on the one-input bit triangle, exact LP
    let bits: Vec<PartySpec> = ["A", "B", "C"].iter().map(|n| PartySpec::new(*n, 1, 2)).collect();
    let s = canonical_scenario(3, bits.clone()).unwrap();
    let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
    let first = random_local(&mut rng, &bits, 3);
    let sys = compile(&s, &first, &infl, DEFAULT_MAX_VARIABLES).unwrap();
    let mut solver = Solver::new(&sys, SolveOptions::default());
    let mut feasible = 0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=6);
        let out = solver.solve(&sys.with_behavior(random_local(&mut rng, &bits, k)).unwrap()).unwrap();
        feasible += usize::from(out.verdict == Verdict::Feasible && out.verified);
    }

    // a few on the GHZ scenario against the full order-2 LP
    let parties = ghz_parties(3);
    let big = ghz_system(&random_local(&mut rng, &parties, 4));
    let mut big_solver = Solver::new(&big, SolveOptions::default());
    let mut big_feasible = 0;
    let big_trials = 3;
    for _ in 0..big_trials {
        let k = rng.gen_range(2..=8);
        let out = big_solver.solve(&big.with_behavior(random_local(&mut rng, &parties, k)).unwrap()).unwrap();
        big_feasible += usize::from(out.verdict == Verdict::Feasible);
    }

    // every certificate emitted above is valid and nonpositive on local behaviors
    let mut cert_ok = true;
    let mut notes = Vec::new();
    for (name, model, cert) in certs {
        let max = max_witness(&mut rng, model, cert);
        cert_ok &= max <= q(0);
        notes.push(format!("{name}: max w = {:.3e}", max.to_f64()));
    }
    let pass = feasible == 100 && big_feasible == big_trials && cert_ok && certs.len() >= 3;
    Report {
        id: 9,
        pass,
        detail: format!(
            "bit triangle: {feasible}/100 feasible and checked exactly; GHZ scenario: {big_feasible}/{big_trials} feasible; {} certificates against 10^3 feasible samples each: {}",
            certs.len(),
            notes.join(", ")
        ),
    }
}

fn main() -> ExitCode {
    let mut certs = Vec::new();
    let mut reports = vec![c1_enumeration(), c2_analytic(), c3_certification(&mut certs)];
    let (c4, c5) = c4_c5_sweeps(&mut certs);
    reports.extend([c4, c5, c6_shared_bit(&mut certs), c7_w_suite(), c8_lhvm()]);
    reports.push(c9_soundness(&certs));

    let mut unexpected = 0;
    for r in &reports {
        println!("criterion {}: {} - {}", r.id, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass && !KNOWN_UNATTAINABLE.contains(&r.id) {
            unexpected += 1;
        }
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria pass", reports.len());
    if unexpected > 0 {
        println!("acceptance: {unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
