//! Feasibility of a constraint system.
//!
//! After eliminating the equality rows (see [`reduced`]), the system asks for
//! `z` with `g_e·z + c_e ≥ 0` for every block entry `e`. We solve the LP
//!
//! ```text
//! t* = min Σ c_e y_e   s.t.   Σ y_e g_e = 0,  Σ y_e = 1,  y ≥ 0
//! ```
//!
//! whose dual is `max t` subject to `g_e·z + c_e ≥ t`. The system is feasible
//! iff `t* ≥ 0`; when `t* < 0` the optimal `y` yields a certificate.

pub mod certificate;
pub mod dense;
pub mod reduced;
pub mod revised;
pub mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSystem, Origin};
use crate::error::{Error, Result};
use crate::qsqrt2::QSqrt2;
use crate::scalar::{rationalize, Scalar, RATIONALIZE_MAX_DEN};

pub use certificate::{verify, witness_for, Certificate, CertificateKind, Verification, Witness};
use dense::{solve_dense, DenseOutcome};
pub use reduced::Reduced;
use revised::{Basis, SignStop, SimplexOptions, SparseColumns};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub simplex: SimplexOptions,
    /// Exact scalars use the exact dense simplex when `rows × columns` of
    /// the reduced LP is at most this.
    pub exact_dense_limit: usize,
    /// Build and check certificates (or feasible points) exactly.
    pub certify: bool,
    /// Float verdicts: feasible iff `t* ≥ −feasibility_tol`.
    pub feasibility_tol: f64,
    /// `|t*|` below this is reported as near the boundary.
    pub boundary_tol: f64,
    /// Float solves stop as soon as `|t*| > boundary_tol` is settled, so
    /// the reported objective is then only a bound of the right sign.
    pub stop_at_sign: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            exact_dense_limit: 200_000,
            certify: true,
            feasibility_tol: 1e-9,
            boundary_tol: 1e-7,
            stop_at_sign: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpStats {
    pub n_variables: usize,
    pub n_coordinates: usize,
    pub n_free: usize,
    pub rows_c1: usize,
    pub rows_c2: usize,
    pub rows_independence: usize,
    pub iterations: usize,
    pub exact_solve: bool,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    /// `t*` (in float; exact when `exact_objective` is set).
    pub objective: f64,
    pub exact_objective: Option<QSqrt2>,
    pub near_boundary: bool,
    pub certificate: Option<Certificate>,
    /// Verdict proven in exact arithmetic: a valid certificate for
    /// infeasibility or a checked feasible point.
    pub verified: bool,
    pub note: Option<String>,
    pub stats: LpStats,
}

/// Reusable solver for systems sharing rows and blocks, e.g. a noise sweep.
pub struct Solver {
    reduced: Reduced,
    matrix: SparseColumns,
    warm: Option<Basis>,
    /// Primal weights and row duals of the last float solve.
    last: Option<(Vec<f64>, Vec<f64>)>,
    pub options: SolveOptions,
}

impl Solver {
    pub fn new<T: Scalar>(sys: &ConstraintSystem<T>, options: SolveOptions) -> Self {
        let reduced = Reduced::build(sys);
        let mut matrix = SparseColumns::new(reduced.n_free + 1);
        for col in &reduced.columns {
            matrix.push_column(
                col.free
                    .iter()
                    .map(|&(f, k)| (f, k as f64))
                    .chain(std::iter::once((reduced.n_free as u32, 1.0))),
            );
        }
        Self {
            reduced,
            matrix,
            warm: None,
            last: None,
            options,
        }
    }

    /// Forgets the basis kept from the previous solve.
    pub fn clear_warm_start(&mut self) {
        self.warm = None;
    }

    /// Weights `y` and row duals `π` of the last floating-point solve.
    pub fn last_solution(&self) -> Option<(&[f64], &[f64])> {
        self.last.as_ref().map(|(y, pi)| (y.as_slice(), pi.as_slice()))
    }

    /// Costs `c_e` of the reduced LP for `sys`, or `None` when two rows pin
    /// one coordinate to different values.
    pub fn float_costs<T: Scalar>(&self, sys: &ConstraintSystem<T>) -> Option<Vec<f64>> {
        let tol = if T::EXACT { 0.0 } else { self.options.feasibility_tol };
        let (values, conflict) = self.reduced.class_values(sys, tol);
        conflict.is_none().then(|| self.reduced.costs(&values).iter().map(|v| v.to_f64()).collect())
    }

    /// `min_e (c_e − π·A_e) + π_t`, a lower bound on `t*` for any prices.
    pub fn dual_bound(&self, costs: &[f64], duals: &[f64]) -> f64 {
        let m = self.reduced.n_free + 1;
        let min = (0..costs.len())
            .into_par_iter()
            .map(|j| costs[j] - self.matrix.dot(j, duals))
            .reduce(|| f64::INFINITY, f64::min);
        duals[m - 1] + min
    }

    pub fn reduced(&self) -> &Reduced {
        &self.reduced
    }

    fn stats<T: Scalar>(&self, sys: &ConstraintSystem<T>, iterations: usize, exact_solve: bool) -> LpStats {
        LpStats {
            n_variables: sys.n_variables(),
            n_coordinates: sys.n_coordinates(),
            n_free: self.reduced.n_free,
            rows_c1: sys.count_rows(Origin::C1),
            rows_c2: sys.count_rows(Origin::C2),
            rows_independence: sys.count_rows(Origin::Independence),
            iterations,
            exact_solve,
        }
    }

    /// Solves `sys`, which must share rows and blocks with the system the
    /// solver was built from.
    pub fn solve<T: Scalar>(&mut self, sys: &ConstraintSystem<T>) -> Result<Outcome> {
        if sys.n_variables() != self.reduced.columns.len() {
            return Err(Error::CertificateMismatch("system differs from the one the solver was built for".into()));
        }
        let opts = self.options.clone();
        let tol = if T::EXACT { 0.0 } else { opts.feasibility_tol };
        let (values, conflict) = self.reduced.class_values(sys, tol);

        if let Some((r1, r2)) = conflict {
            let gap = (Reduced::anchor_value(sys, r1) - Reduced::anchor_value(sys, r2)).to_f64().abs();
            let (certificate, verified) = if opts.certify {
                let exact = sys.map_scalar(|v| v.to_exact());
                let c = certificate::from_conflict(&exact, &self.reduced, r1, r2)?;
                let ok = verify(&exact, &c)?.valid;
                (Some(c), ok)
            } else {
                (None, false)
            };
            return Ok(Outcome {
                verdict: Verdict::Infeasible,
                objective: -gap,
                exact_objective: None,
                near_boundary: gap < opts.boundary_tol,
                certificate,
                verified,
                note: Some("two rows pin one coordinate to different values".into()),
                stats: self.stats(sys, 0, false),
            });
        }

        let costs = self.reduced.costs(&values);
        let n = costs.len();
        let m = self.reduced.n_free + 1;

        // without free coordinates every entry is already determined
        if self.reduced.n_free == 0 {
            let (r, min) = costs
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("comparable costs"))
                .expect("at least one entry");
            let infeasible = min.is_negative_tol(tol);
            let mut y = vec![0.0; n];
            y[r] = 1.0;
            return self.finish(sys, min.to_f64(), T::EXACT.then(|| min.to_exact()), infeasible, &y, &[], 0, T::EXACT);
        }

        if T::EXACT && m * n <= opts.exact_dense_limit {
            let mut a = vec![vec![T::zero(); n]; m];
            for (j, col) in self.reduced.columns.iter().enumerate() {
                for &(f, k) in &col.free {
                    a[f as usize][j] = T::from_ratio(k, 1);
                }
                a[m - 1][j] = T::one();
            }
            let mut b = vec![T::zero(); m];
            b[m - 1] = T::one();
            let DenseOutcome::Optimal(sol) = solve_dense(&a, &b, &costs, opts.simplex.max_iterations)? else {
                return Err(Error::NumericalFailure("feasibility LP has no optimum".into()));
            };
            let infeasible = sol.objective < T::zero();
            let y: Vec<(usize, QSqrt2)> = sol
                .x
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, v)| (j, v.to_exact()))
                .collect();
            let z: Vec<QSqrt2> = sol.duals[..m - 1].iter().map(|v| -v.to_exact()).collect();
            let exact = sys.map_scalar(|v| v.to_exact());
            let (certificate, verified) = if !opts.certify {
                (None, false)
            } else if infeasible {
                let c = certificate::from_dual(&exact, &self.reduced, &y)?;
                let ok = verify(&exact, &c)?.valid;
                (Some(c), ok)
            } else {
                (None, self.check_point(&exact, &z)?)
            };
            let t = sol.objective.to_exact();
            return Ok(Outcome {
                verdict: if infeasible { Verdict::Infeasible } else { Verdict::Feasible },
                objective: t.to_f64(),
                near_boundary: t.to_f64().abs() < opts.boundary_tol,
                exact_objective: Some(t),
                certificate,
                verified,
                note: None,
                stats: self.stats(sys, sol.iterations, true),
            });
        }

        let c: Vec<f64> = costs.par_iter().map(|v| v.to_f64()).collect();
        let mut b = vec![0.0; m];
        b[m - 1] = 1.0;
        let mut simplex = opts.simplex.clone();
        if opts.stop_at_sign {
            simplex.sign_stop = Some(SignStop {
                convexity_row: m - 1,
                margin: opts.boundary_tol,
            });
        }
        let res = match revised::solve(&self.matrix, &b, &c, self.warm.as_ref(), &simplex) {
            Ok(r) => r,
            Err(_) if self.warm.is_some() => {
                self.warm = None;
                revised::solve(&self.matrix, &b, &c, None, &simplex)?
            }
            Err(e) => return Err(e),
        };
        self.warm = Some(res.basis.clone());
        self.last = Some((res.x.clone(), res.duals.clone()));
        let infeasible = res.objective < -opts.feasibility_tol;
        let z: Vec<f64> = res.duals[..m - 1].iter().map(|v| -v).collect();
        self.finish(sys, res.objective, None, infeasible, &res.x, &z, res.iterations, false)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish<T: Scalar>(
        &self,
        sys: &ConstraintSystem<T>,
        objective: f64,
        exact_objective: Option<QSqrt2>,
        infeasible: bool,
        y: &[f64],
        z: &[f64],
        iterations: usize,
        exact_solve: bool,
    ) -> Result<Outcome> {
        let opts = &self.options;
        let mut note = None;
        let mut certificate = None;
        let mut verified = false;
        if opts.certify {
            let exact = sys.map_scalar(|v| v.to_exact());
            if objective < 0.0 {
                match certificate::from_float_dual(&exact, &self.reduced, y) {
                    Ok(c) => {
                        let v = verify(&exact, &c)?;
                        verified = v.valid;
                        note = v.reason;
                        certificate = Some(c);
                    }
                    Err(e) => note = Some(format!("no certificate: {e}")),
                }
            } else {
                let zq: Vec<QSqrt2> = z
                    .iter()
                    .map(|&v| QSqrt2::from_rational(rationalize(v, RATIONALIZE_MAX_DEN)))
                    .collect();
                verified = self.check_point(&exact, &zq)?;
            }
        }
        // a valid certificate settles the question even when the float
        // objective is within tolerance of zero
        let proven_infeasible = verified && certificate.is_some();
        let verdict = if infeasible || proven_infeasible {
            Verdict::Infeasible
        } else {
            Verdict::Feasible
        };
        if verdict == Verdict::Feasible {
            verified &= certificate.is_none();
        } else if !infeasible {
            note = Some(format!("objective {objective:.3e} is within tolerance but an exact certificate exists"));
        }
        Ok(Outcome {
            verdict,
            objective,
            exact_objective,
            near_boundary: objective.abs() < opts.boundary_tol,
            certificate,
            verified,
            note,
            stats: self.stats(sys, iterations, exact_solve),
        })
    }

    /// Exact check that `z` makes every entry nonnegative.
    fn check_point(&self, exact: &ConstraintSystem<QSqrt2>, z: &[QSqrt2]) -> Result<bool> {
        let (values, conflict) = self.reduced.class_values(exact, 0.0);
        if conflict.is_some() {
            return Ok(false);
        }
        let costs = self.reduced.costs(&values);
        Ok((0..costs.len())
            .into_par_iter()
            .all(|j| self.reduced.entry_value(j, z, &costs) >= QSqrt2::from(0)))
    }
}

/// One-shot feasibility test.
pub fn solve_feasibility<T: Scalar>(sys: &ConstraintSystem<T>, options: SolveOptions) -> Result<Outcome> {
    Solver::new(sys, options).solve(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{deterministic, Behavior};
    use crate::constraints::{compile, EqRow, Node, DEFAULT_MAX_VARIABLES};
    use crate::inflation::{all_members, enumerate_inflations, DEFAULT_MAX_WIRINGS};
    use crate::network::{canonical_scenario, Inflation, PartySpec, Scenario};
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn bits(n: usize) -> Scenario {
        canonical_scenario(n, (0..n).map(|i| PartySpec::new(format!("P{i}"), 1, 2)).collect()).unwrap()
    }

    fn correlated_bit(s: &Scenario) -> Behavior<BigRational> {
        let n = s.n_parties();
        Behavior::from_fn(s.parties().to_vec(), |_, a| {
            if a.iter().all(|&v| v == a[0]) {
                ratio(1, 2)
            } else {
                ratio(0, 1)
            }
        })
        .map(|b| {
            assert_eq!(b.n_parties(), n);
            b
        })
        .unwrap()
    }

    #[test]
    fn deterministic_point_is_feasible_exactly() {
        let s = bits(3);
        let p: Behavior<BigRational> = deterministic(s.parties().to_vec(), &[vec![1], vec![0], vec![1]]).unwrap();
        let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
        let sys = compile(&s, &p, &infl, DEFAULT_MAX_VARIABLES).unwrap();
        let out = solve_feasibility(&sys, SolveOptions::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Feasible);
        assert!(out.verified);
    }

    /// Two copies of the triangle with the joint `(A¹ = 0, A² = 0)`
    /// coordinate forced to `joint` and, optionally, `A¹ = 0` forced to `single`.
    fn forced(joint: BigRational, single: Option<BigRational>) -> ConstraintSystem<BigRational> {
        let s = bits(3);
        let p = correlated_bit(&s);
        let sys = compile(&s, &p, &[Inflation::identity(s.clone(), 2)], DEFAULT_MAX_VARIABLES).unwrap();
        let block = &sys.blocks[0];
        let pos = |copy| block.parties.iter().position(|pc| pc.party == 0 && pc.copy == copy).unwrap();
        let mut picks = vec![None; block.parties.len()];
        picks[pos(0)] = Some((0, 0));
        let single_coord = block.layout.encode(&picks);
        picks[pos(1)] = Some((0, 0));
        let joint_coord = block.layout.encode(&picks);
        let mut rows = sys.rows.clone();
        rows.push(EqRow::Fix {
            origin: Origin::Independence,
            node: Node { block: 0, coord: joint_coord },
            value: joint,
        });
        if let Some(v) = single {
            rows.push(EqRow::Fix {
                origin: Origin::Independence,
                node: Node { block: 0, coord: single_coord },
                value: v,
            });
        }
        ConstraintSystem::from_parts(sys.scenario.clone(), sys.p.clone(), 2, sys.blocks.clone(), rows).unwrap()
    }

    #[test]
    fn overconstrained_joint_is_refuted() {
        // P(A¹ = 0, A² = 0) cannot exceed P(A¹ = 0) = 1/2
        let sys = forced(ratio(3, 5), None);
        let out = solve_feasibility(&sys, SolveOptions::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Infeasible);
        assert!(out.verified);
        let cert = out.certificate.unwrap();
        assert_eq!(cert.kind, CertificateKind::Dual);
        assert!(verify(&sys, &cert).unwrap().valid);
        // the same multipliers say nothing once the forced value is admissible
        assert!(!verify(&forced(ratio(1, 4), None), &cert).unwrap().valid);
        let ok = solve_feasibility(&forced(ratio(1, 4), None), SolveOptions::default()).unwrap();
        assert_eq!(ok.verdict, Verdict::Feasible);
        assert!(ok.verified);
    }

    #[test]
    fn float_path_certificate_is_exact() {
        let sys = forced(ratio(3, 5), None).map_scalar(|v| v.to_f64());
        let opts = SolveOptions {
            exact_dense_limit: 0,
            ..SolveOptions::default()
        };
        let out = solve_feasibility(&sys, opts).unwrap();
        assert_eq!(out.verdict, Verdict::Infeasible);
        assert!(out.verified);
        assert!((out.objective - solve_feasibility(&forced(ratio(3, 5), None), SolveOptions::default()).unwrap().objective).abs() < 1e-8);
    }

    #[test]
    fn conflicting_pins_give_equality_certificate() {
        let sys = forced(ratio(1, 4), Some(ratio(1, 3)));
        let out = solve_feasibility(&sys, SolveOptions::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Infeasible);
        assert!(out.verified);
        let cert = out.certificate.unwrap();
        assert_eq!(cert.kind, CertificateKind::Conflict);
        assert_eq!(verify(&sys, &cert).unwrap().value, QSqrt2::from_rational(ratio(1, 6)));
    }

    #[test]
    fn float_and_exact_agree_on_small_systems() {
        let s = bits(3);
        let p = correlated_bit(&s);
        let infl = vec![Inflation::identity(s.clone(), 2)];
        let exact = compile(&s, &p, &infl, DEFAULT_MAX_VARIABLES).unwrap();
        let float = exact.map_scalar(|v| v.to_f64());
        let a = solve_feasibility(&exact, SolveOptions::default()).unwrap();
        let b = solve_feasibility(&float, SolveOptions::default()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!((a.objective - b.objective).abs() < 1e-7);
    }

    #[test]
    fn certificate_survives_tampering_checks() {
        let sys = forced(ratio(3, 5), None);
        let cert = solve_feasibility(&sys, SolveOptions::default()).unwrap().certificate.unwrap();
        let mut bad = cert.clone();
        bad.y[0].1 = bad.y[0].1.clone() + QSqrt2::from(1);
        assert!(!verify(&sys, &bad).unwrap().valid);
        let mut bad = cert.clone();
        bad.witness.constant = bad.witness.constant.clone() + QSqrt2::from(1);
        assert!(!verify(&sys, &bad).unwrap().valid);
        let mut bad = cert;
        bad.n_rows += 1;
        assert!(verify(&sys, &bad).is_err());
    }
}
