//! Bisection on a one-parameter family of behaviors for the critical noise
//! level at which the feasibility verdict flips.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::certificate::from_float_dual;
use super::{verify, Certificate, Outcome, SolveOptions, Solver, Verdict};
use crate::constraints::{compile, ConstraintSystem, DEFAULT_MAX_VARIABLES};
use crate::error::{Error, Result};
use crate::inequalities::ghz_inequality_slack;
use crate::inflation::{all_members, enumerate_inflations, DEFAULT_MAX_WIRINGS};
use crate::network::canonical_scenario;
use crate::qsqrt2::QSqrt2;
use crate::quantum::{ghz_behavior, ghz_parties};
use crate::scalar::{ratio, Scalar};

/// Verdict of one family member.
#[derive(Clone, Debug)]
pub struct Point {
    pub verdict: Verdict,
    /// LP objective, or the negated inequality slack for analytic families.
    pub objective: f64,
}

/// A family `p ↦ P_p`, feasible at small `p` and infeasible near `p = 1`.
pub trait NoiseFamily {
    fn evaluate(&mut self, p: &BigRational) -> Result<Point>;

    /// Exact certificate at an infeasible member, when the family has one.
    fn certify(&mut self, _p: &BigRational) -> Result<Option<(Certificate, bool)>> {
        Ok(None)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepStep {
    pub p: f64,
    pub verdict: Verdict,
    pub objective: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    /// Largest tested parameter found feasible.
    pub lower: f64,
    /// Smallest tested parameter found infeasible.
    pub upper: f64,
    pub lower_exact: String,
    pub upper_exact: String,
    pub steps: Vec<SweepStep>,
    #[serde(skip)]
    pub certificate: Option<Certificate>,
    pub certificate_verified: bool,
}

fn to_f64(p: &BigRational) -> f64 {
    <BigRational as Scalar>::to_f64(p)
}

/// Bisects `[lower, upper]` at dyadic midpoints until the width is at most
/// `tol`. The endpoints must give feasible and infeasible verdicts.
pub fn sweep_noise<F: NoiseFamily + ?Sized>(
    family: &mut F,
    lower: BigRational,
    upper: BigRational,
    tol: f64,
) -> Result<SweepResult> {
    if !(tol > 0.0) || lower >= upper {
        return Err(Error::InvalidBehavior("sweep needs lower < upper and tol > 0".into()));
    }
    let mut steps = Vec::new();
    let probe = |family: &mut F, p: &BigRational, steps: &mut Vec<SweepStep>| -> Result<Verdict> {
        let pt = family.evaluate(p)?;
        steps.push(SweepStep {
            p: to_f64(p),
            verdict: pt.verdict,
            objective: pt.objective,
        });
        Ok(pt.verdict)
    };
    let vl = probe(family, &lower, &mut steps)?;
    let vu = probe(family, &upper, &mut steps)?;
    if vl != Verdict::Feasible || vu != Verdict::Infeasible {
        return Err(Error::NonBracketing {
            lower: format!("{vl:?} at {}", to_f64(&lower)),
            upper: format!("{vu:?} at {}", to_f64(&upper)),
        });
    }
    let (mut lo, mut hi) = (lower, upper);
    let two = ratio(2, 1);
    while to_f64(&(hi.clone() - lo.clone())) > tol {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        match probe(family, &mid, &mut steps)? {
            Verdict::Feasible => lo = mid,
            Verdict::Infeasible => hi = mid,
        }
    }
    let (certificate, certificate_verified) = match family.certify(&hi)? {
        Some((c, ok)) => (Some(c), ok),
        None => (None, false),
    };
    Ok(SweepResult {
        lower: to_f64(&lo),
        upper: to_f64(&hi),
        lower_exact: lo.to_string(),
        upper_exact: hi.to_string(),
        steps,
        certificate,
        certificate_verified,
    })
}

/// Noisy GHZ behaviors against the order-`K` inflation LP.
///
/// The feasible region of the reduced LP does not depend on `p`, so every
/// weight vector `y` found at one member bounds `t*(p) ≤ c(p)·y` at all
/// others, and every price vector bounds it from below. Both are kept and
/// tried before a new solve. The infeasible endpoint is certified exactly.
pub struct GhzLpFamily {
    n: usize,
    system: ConstraintSystem<f64>,
    pub solver: Solver,
    primal_cuts: Vec<Vec<(usize, f64)>>,
    dual_cuts: Vec<Vec<f64>>,
    /// Number of LP solves so far.
    pub solves: usize,
}

impl GhzLpFamily {
    pub fn new(n: usize, order: usize, max_wirings: u128, max_variables: usize, options: SolveOptions) -> Result<Self> {
        let scenario = canonical_scenario(n, ghz_parties(n))?;
        let inflations = all_members(&enumerate_inflations(&scenario, order, max_wirings)?);
        let system = compile(&scenario, &ghz_behavior(n, 1.0)?, &inflations, max_variables)?;
        let solver = Solver::new(&system, SolveOptions { certify: false, ..options });
        Ok(Self {
            n,
            system,
            solver,
            primal_cuts: Vec::new(),
            dual_cuts: Vec::new(),
            solves: 0,
        })
    }

    pub fn with_defaults(n: usize, order: usize) -> Result<Self> {
        Self::new(n, order, DEFAULT_MAX_WIRINGS, DEFAULT_MAX_VARIABLES, SolveOptions::default())
    }

    fn float_system(&self, p: &BigRational) -> Result<ConstraintSystem<f64>> {
        self.system.with_behavior(ghz_behavior(self.n, to_f64(p))?)
    }

    fn exact_system(&self, p: &BigRational) -> Result<ConstraintSystem<QSqrt2>> {
        let exact = self.system.map_scalar(|v| QSqrt2::from_rational(rationalize_f64(*v)));
        exact.with_behavior(ghz_behavior(self.n, QSqrt2::from_rational(p.clone()))?)
    }

    /// Full outcome at `p` from a fresh solve, certified exactly when
    /// `certify` is set.
    pub fn outcome(&mut self, p: &BigRational, certify: bool) -> Result<Outcome> {
        self.solver.clear_warm_start();
        let saved = self.solver.options.certify;
        self.solver.options.certify = certify;
        let out = if certify {
            let exact = self.exact_system(p)?;
            self.solver.solve(&exact)
        } else {
            let sys = self.float_system(p)?;
            self.solver.solve(&sys)
        };
        self.solver.options.certify = saved;
        self.solves += 1;
        if let Some((y, pi)) = self.solver.last_solution() {
            let y: Vec<(usize, f64)> = y.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, v)| (j, *v)).collect();
            let pi = pi.to_vec();
            self.primal_cuts.push(y);
            self.dual_cuts.push(pi);
        }
        out
    }

    /// A verdict implied by earlier solves, if any.
    fn cached(&self, p: &BigRational) -> Result<Option<Point>> {
        if self.primal_cuts.is_empty() {
            return Ok(None);
        }
        let Some(costs) = self.solver.float_costs(&self.float_system(p)?) else {
            return Ok(None);
        };
        let margin = self.solver.options.boundary_tol;
        for y in &self.primal_cuts {
            let v: f64 = y.iter().map(|&(j, w)| costs[j] * w).sum();
            if v < -margin {
                return Ok(Some(Point {
                    verdict: Verdict::Infeasible,
                    objective: v,
                }));
            }
        }
        for pi in &self.dual_cuts {
            let lb = self.solver.dual_bound(&costs, pi);
            if lb > margin {
                return Ok(Some(Point {
                    verdict: Verdict::Feasible,
                    objective: lb,
                }));
            }
        }
        Ok(None)
    }
}

fn rationalize_f64(v: f64) -> BigRational {
    crate::scalar::rationalize(v, crate::scalar::RATIONALIZE_MAX_DEN)
}

impl NoiseFamily for GhzLpFamily {
    fn evaluate(&mut self, p: &BigRational) -> Result<Point> {
        if let Some(pt) = self.cached(p)? {
            return Ok(pt);
        }
        let out = self.outcome(p, false)?;
        Ok(Point {
            verdict: out.verdict,
            objective: out.objective,
        })
    }

    fn certify(&mut self, p: &BigRational) -> Result<Option<(Certificate, bool)>> {
        let exact = self.exact_system(p)?;
        let Some(costs) = self.solver.float_costs(&self.float_system(p)?) else {
            let out = self.outcome(p, true)?;
            return Ok(out.certificate.map(|c| (c, out.verified)));
        };
        // the most negative stored weights first
        let mut ranked: Vec<(f64, usize)> = self
            .primal_cuts
            .iter()
            .enumerate()
            .map(|(i, y)| (y.iter().map(|&(j, w)| costs[j] * w).sum(), i))
            .filter(|(v, _)| *v < 0.0)
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n_cols = self.solver.reduced().columns.len();
        for (_, i) in ranked {
            let mut y = vec![0.0; n_cols];
            for &(j, w) in &self.primal_cuts[i] {
                y[j] = w;
            }
            if let Ok(c) = from_float_dual(&exact, self.solver.reduced(), &y) {
                if verify(&exact, &c)?.valid {
                    return Ok(Some((c, true)));
                }
            }
        }
        let out = self.outcome(p, true)?;
        Ok(out.certificate.map(|c| (c, out.verified)))
    }
}

/// Pseudo-family: "infeasible" exactly when the closed-form GHZ inequality
/// is violated, evaluated in exact arithmetic.
pub struct GhzInequalityFamily {
    pub n: usize,
}

impl NoiseFamily for GhzInequalityFamily {
    fn evaluate(&mut self, p: &BigRational) -> Result<Point> {
        let b = ghz_behavior(self.n, QSqrt2::from_rational(p.clone()))?;
        let slack = ghz_inequality_slack(&b, self.n)?.slack;
        Ok(Point {
            verdict: if slack > QSqrt2::from(0) { Verdict::Infeasible } else { Verdict::Feasible },
            objective: -slack.to_f64(),
        })
    }
}

/// `[0, 1]` as exact endpoints.
pub fn unit_interval() -> (BigRational, BigRational) {
    (BigRational::zero(), BigRational::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(Verdict);

    impl NoiseFamily for Constant {
        fn evaluate(&mut self, _p: &BigRational) -> Result<Point> {
            Ok(Point {
                verdict: self.0,
                objective: 0.0,
            })
        }
    }

    struct Threshold(f64);

    impl NoiseFamily for Threshold {
        fn evaluate(&mut self, p: &BigRational) -> Result<Point> {
            let v = to_f64(p);
            Ok(Point {
                verdict: if v > self.0 { Verdict::Infeasible } else { Verdict::Feasible },
                objective: self.0 - v,
            })
        }
    }

    #[test]
    fn constant_family_does_not_bracket() {
        let (lo, hi) = unit_interval();
        let err = sweep_noise(&mut Constant(Verdict::Feasible), lo, hi, 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonBracketing { .. }), "{err}");
    }

    #[test]
    fn bisection_brackets_threshold() {
        let (lo, hi) = unit_interval();
        let r = sweep_noise(&mut Threshold(0.3), lo, hi, 1e-4).unwrap();
        assert!(r.lower <= 0.3 && 0.3 < r.upper && r.upper - r.lower <= 1e-4);
        // 2 endpoints + 14 halvings down to 2^-14
        assert_eq!(r.steps.len(), 16);
    }

    #[test]
    fn analytic_family_flips_at_closed_form() {
        let (lo, hi) = unit_interval();
        let r = sweep_noise(&mut GhzInequalityFamily { n: 3 }, lo, hi, 1e-6).unwrap();
        let p = 10.0 / (2.0 * 2f64.sqrt() + 8.0);
        assert!(r.lower <= p && p < r.upper, "{} {}", r.lower, r.upper);
    }
}
