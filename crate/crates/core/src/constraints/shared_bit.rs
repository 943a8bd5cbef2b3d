//! The order-2 ring inflation refuting an n-party shared random bit.
//!
//! Party `A_i` keeps the original copy of every source `S_j` with `j > i`
//! and takes the clone of every `S_j` with `j < i`. Consecutive parties then
//! share all their common sources, so C1 pins each consecutive pair to the
//! perfectly correlated bit, while `A_1` and `A_n` share none and must be
//! independent.

use num_rational::BigRational;
use serde::Serialize;

use super::{c1_rows, dedup_rows, Block, ConstraintSystem, EqRow, Node, Origin};
use crate::behavior::Behavior;
use crate::error::{Error, Result};
use crate::inflation::enumerate_c1_pairs_within;
use crate::lp::{solve_feasibility, SolveOptions, Verdict};
use crate::network::{canonical_scenario, validate_inflation, Inflation, PartyCopy, PartySpec, Scenario};
use crate::scalar::ratio;

fn bit_scenario(n: usize) -> Result<Scenario> {
    if n < 3 {
        return Err(Error::InvalidScenario(format!("need at least three parties, got {n}")));
    }
    canonical_scenario(n, (1..=n).map(|i| PartySpec::new(format!("A{i}"), 1, 2)).collect())
}

/// Uniform bit shared by all `n` parties.
pub fn shared_bit_behavior(n: usize) -> Result<Behavior<BigRational>> {
    let s = bit_scenario(n)?;
    let outputs = 1usize << n;
    let table = (0..outputs)
        .map(|o| if o == 0 || o == outputs - 1 { ratio(1, 2) } else { ratio(0, 1) })
        .collect();
    Behavior::new(s.parties().to_vec(), table)
}

/// The ring inflation on the canonical `n`-party network.
pub fn ring_inflation(n: usize) -> Result<Inflation> {
    let s = bit_scenario(n)?;
    let wiring = (0..n)
        .map(|src| {
            (0..2)
                .map(|k| {
                    s.attached(src)
                        .iter()
                        .map(|&j| usize::from((k == 0) != (j < src)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let inf = Inflation::new(s, 2, wiring);
    debug_assert!(validate_inflation(&inf));
    Ok(inf)
}

/// One block over the first copies of all parties, C1 pins, and the
/// independence of `A_1` and `A_n`.
pub fn shared_bit_system(n: usize) -> Result<ConstraintSystem<BigRational>> {
    ring_system(shared_bit_behavior(n)?)
}

/// The ring system for any behavior of `n` one-input bits.
pub fn ring_system(p: Behavior<BigRational>) -> Result<ConstraintSystem<BigRational>> {
    let n = p.n_parties();
    if p.parties().iter().any(|s| s.inputs != 1 || s.outputs != 2) {
        return Err(Error::InvalidScenario("the ring system needs one-input bits".into()));
    }
    let inflation = ring_inflation(n)?;
    let scenario = inflation.base.clone();
    let parties: Vec<PartyCopy> = (0..n).map(|party| PartyCopy { party, copy: 0 }).collect();
    let block = Block::new("ring", inflation.clone(), parties.clone());
    let pairs = enumerate_c1_pairs_within(&inflation, &scenario, &parties);
    let p_layout = super::CgLayout::new(p.parties().to_vec());
    let mut rows: Vec<EqRow<BigRational>> = c1_rows(0, &block, &pairs, &p_layout);

    // q(A_1 = 0, A_n = 0) = P(A_1 = 0) P(A_n = 0)
    let mut pick = vec![None; n];
    pick[0] = Some((0, 0));
    let a1 = p_layout.coordinate_value(&p, p_layout.encode(&pick));
    pick[n - 1] = Some((0, 0));
    let coord = block.layout.encode(&pick);
    pick[0] = None;
    let an = p_layout.coordinate_value(&p, p_layout.encode(&pick));
    rows.push(EqRow::Fix {
        origin: Origin::Independence,
        node: Node { block: 0, coord },
        value: a1 * an,
    });
    ConstraintSystem::from_parts(scenario, p, 2, vec![block], dedup_rows(rows))
}

#[derive(Clone, Debug, Serialize)]
pub struct SharedBitReport {
    pub n: usize,
    pub verdict: Verdict,
    pub rows_c1: usize,
    pub rows_independence: usize,
    /// Exact `t*` of the feasibility LP.
    pub objective: String,
    pub certificate_verified: bool,
}

/// Solves the ring system exactly; the verdict is expected to be infeasible.
pub fn check_shared_bit_not_lo(n: usize) -> Result<SharedBitReport> {
    let sys = shared_bit_system(n)?;
    let out = solve_feasibility(&sys, SolveOptions::default())?;
    Ok(SharedBitReport {
        n,
        verdict: out.verdict,
        rows_c1: sys.count_rows(Origin::C1),
        rows_independence: sys.count_rows(Origin::Independence),
        objective: out
            .exact_objective
            .map(|v| v.to_string())
            .unwrap_or_else(|| out.objective.to_string()),
        certificate_verified: out.verified,
    })
}
