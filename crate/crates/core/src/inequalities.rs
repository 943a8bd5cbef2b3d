//! Closed-form Bell-type scores.
//!
//! GHZ-structured behaviors order their parties as A (2 inputs), B (3
//! inputs), then the Charlies (2 inputs each), all binary. Correlators use
//! the ±1 convention of [`crate::behavior`].

use serde::Serialize;

use crate::behavior::{Behavior, Correlator, Event};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const A: usize = 0;
const B: usize = 1;

fn check_ghz_structure<T: Scalar>(b: &Behavior<T>, n: usize) -> Result<()> {
    let ok = n >= 3
        && b.n_parties() == n
        && b.parties().iter().enumerate().all(|(i, p)| {
            p.outputs == 2 && p.inputs == if i == B { 3 } else { 2 }
        });
    if ok {
        Ok(())
    } else {
        Err(Error::PartyMismatch(format!(
            "expected {n} binary parties with inputs 2, 3, 2, …"
        )))
    }
}

/// All Charlies on input 1 with an even number of −1 outcomes.
pub fn charlie_event(n: usize) -> Event {
    Event::Parity {
        parties: (2..n).collect(),
        input: 1,
        even: true,
    }
}

/// `⟨A₀B₀⟩ + ⟨A₀B₁⟩ + ⟨A₁B₀⟩ − ⟨A₁B₁⟩` conditioned on the collective
/// Charlie event.
pub fn i_bell_conditioned<T: Scalar>(b: &Behavior<T>, n: usize) -> Result<T> {
    check_ghz_structure(b, n)?;
    let ev = charlie_event(n);
    let e = |x, y| b.condition_expectation(&Correlator::new(vec![(A, x), (B, y)]), Some(&ev));
    let v = e(0, 0)? + e(0, 1)? + e(1, 0)? - e(1, 1)?;
    debug_assert!(v.to_f64().abs() <= 4.0 + 1e-9, "Bell score out of range");
    Ok(v)
}

/// `⟨A₀B₂⟩ + ⟨B₂C₀⁽¹⁾⟩ + Σᵢ ⟨C₀⁽ⁱ⁾C₀⁽ⁱ⁺¹⁾⟩`, a chain of `n − 1` terms.
pub fn i_same<T: Scalar>(b: &Behavior<T>, n: usize) -> Result<T> {
    check_ghz_structure(b, n)?;
    let mut v = b.correlator(&Correlator::new(vec![(A, 0), (B, 2)]))?
        + b.correlator(&Correlator::new(vec![(B, 2), (2, 0)]))?;
    for c in 2..n - 1 {
        v = v + b.correlator(&Correlator::new(vec![(c, 0), (c + 1, 0)]))?;
    }
    debug_assert!(v.to_f64().abs() <= (n - 1) as f64 + 1e-9, "same score out of range");
    Ok(v)
}

/// `⟨C̃₁⟩`: product of all Charlie outcomes at input 1.
pub fn collective_charlie<T: Scalar>(b: &Behavior<T>, n: usize) -> Result<T> {
    check_ghz_structure(b, n)?;
    b.correlator(&Correlator::new((2..n).map(|c| (c, 1)).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhzSlack<T> {
    pub i_bell: T,
    pub i_same: T,
    pub c_tilde: T,
    pub lhs: T,
    pub rhs: T,
    /// `lhs − rhs`; positive means the inequality is violated.
    pub slack: T,
}

/// `[I_Bell + 4 I_same/(1 + ⟨C̃⟩)] − [6 + (4(n − 2) − 4⟨C̃⟩)/(1 + ⟨C̃⟩)]`.
pub fn ghz_inequality_slack<T: Scalar>(b: &Behavior<T>, n: usize) -> Result<GhzSlack<T>> {
    let c_tilde = collective_charlie(b, n)?;
    let denom = T::one() + c_tilde.clone();
    if denom.is_zero() {
        return Err(Error::Singular("⟨C̃₁⟩ = −1".into()));
    }
    let i_bell = i_bell_conditioned(b, n)?;
    let i_same = i_same(b, n)?;
    let four = T::from_ratio(4, 1);
    let lhs = i_bell.clone() + four.clone() * i_same.clone() / denom.clone();
    let rhs = T::from_ratio(6, 1) + (four.clone() * T::from_usize(n - 2) - four * c_tilde.clone()) / denom;
    Ok(GhzSlack {
        slack: lhs.clone() - rhs.clone(),
        i_bell,
        i_same,
        c_tilde,
        lhs,
        rhs,
    })
}

/// Chained-Bell score between parties `alice` and `bob` with inputs
/// `1..=m`:
/// `P(A=B|1,m) + P(A≠B|m,m) + Σᵢ₌₁^{m−1} Σⱼ∈{0,1} P(A≠B|i+j,i)`,
/// optionally conditioned on an event of the remaining parties.
pub fn bkp_score_between<T: Scalar>(
    b: &Behavior<T>,
    m: usize,
    alice: usize,
    bob: usize,
    given: Option<&Event>,
) -> Result<T> {
    if m < 2 {
        return Err(Error::InvalidBehavior(format!("chained-Bell parameter must be ≥ 2, got {m}")));
    }
    for &p in &[alice, bob] {
        let spec = b
            .parties()
            .get(p)
            .ok_or_else(|| Error::PartyMismatch(format!("no party {p}")))?;
        if spec.inputs < m + 1 || spec.outputs != 2 {
            return Err(Error::PartyMismatch(format!(
                "party {} needs inputs 1..={m} and binary outputs",
                spec.name
            )));
        }
    }
    let prob = |x: usize, y: usize, equal: bool| {
        b.conditional_probability(&[(alice, x), (bob, y)], |a| (a[alice] == a[bob]) == equal, given)
    };
    let mut v = prob(1, m, true)? + prob(m, m, false)?;
    for i in 1..m {
        for j in 0..2 {
            v = v + prob(i + j, i, false)?;
        }
    }
    debug_assert!(v.to_f64() >= -1e-9, "chained-Bell score is a sum of probabilities");
    Ok(v)
}

/// Chained-Bell score of parties 0 and 1, optionally conditioned.
pub fn bkp_score<T: Scalar>(b: &Behavior<T>, m: usize, given: Option<&Event>) -> Result<T> {
    bkp_score_between(b, m, 0, 1, given)
}
