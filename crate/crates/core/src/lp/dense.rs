//! Two-phase tableau simplex with Bland's rule, generic over the scalar.
//!
//! Solves `min c·x  s.t.  A x = b, x ≥ 0`. Intended for small systems and
//! for exact arithmetic, where Bland's rule guarantees termination.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct DenseSolution<T> {
    pub x: Vec<T>,
    /// `π` with `c − πA ≥ 0` and `π·b` equal to the objective.
    pub duals: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub enum DenseOutcome<T> {
    Optimal(DenseSolution<T>),
    Infeasible,
    Unbounded,
}

/// Zero threshold for float pivots; exact scalars compare with zero.
const FLOAT_TOL: f64 = 1e-11;

fn positive<T: Scalar>(v: &T) -> bool {
    if T::EXACT {
        *v > T::zero()
    } else {
        v.to_f64() > FLOAT_TOL
    }
}

fn negative<T: Scalar>(v: &T) -> bool {
    v.is_negative_tol(FLOAT_TOL)
}

struct Tableau<T> {
    m: usize,
    width: usize,
    /// Row-major `m × width`; the last column is the right-hand side.
    t: Vec<T>,
    basis: Vec<usize>,
    iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> &T {
        &self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.t[r * w + q].clone();
        for j in 0..w {
            let v = self.t[r * w + j].clone() / piv.clone();
            self.t[r * w + j] = v;
        }
        let prow: Vec<T> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..w {
                if prow[j].is_zero() {
                    continue;
                }
                let v = self.t[i * w + j].clone() - f.clone() * prow[j].clone();
                self.t[i * w + j] = v;
            }
        }
        self.basis[r] = q;
        self.iterations += 1;
    }

    fn reduced_costs(&self, cost: &[T], eligible: usize) -> Vec<T> {
        (0..eligible)
            .map(|j| {
                (0..self.m).fold(cost[j].clone(), |acc, i| {
                    acc - cost[self.basis[i]].clone() * self.at(i, j).clone()
                })
            })
            .collect()
    }

    /// Runs Bland iterations over columns `< eligible`. Returns false if
    /// unbounded.
    fn optimize(&mut self, cost: &[T], eligible: usize, max_iterations: usize) -> Result<bool> {
        loop {
            if self.iterations >= max_iterations {
                return Err(Error::NumericalFailure(format!(
                    "simplex iteration limit {max_iterations} reached"
                )));
            }
            let d = self.reduced_costs(cost, eligible);
            let Some(q) = (0..eligible).find(|&j| negative(&d[j]) && !self.basis.contains(&j)) else {
                return Ok(true);
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                if !positive(a) {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, q),
            }
        }
    }
}

/// `a` is row-major with `b.len()` rows.
pub fn solve_dense<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T], max_iterations: usize) -> Result<DenseOutcome<T>> {
    let m = b.len();
    let n = c.len();
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidBehavior("LP dimensions do not match".into()));
    }
    let width = n + m + 1;
    let mut t = vec![T::zero(); m * width];
    let mut flipped = vec![false; m];
    for i in 0..m {
        flipped[i] = b[i] < T::zero();
        let s = if flipped[i] { -T::one() } else { T::one() };
        for j in 0..n {
            t[i * width + j] = s.clone() * a[i][j].clone();
        }
        t[i * width + n + i] = T::one();
        t[i * width + width - 1] = s * b[i].clone();
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        basis: (n..n + m).collect(),
        iterations: 0,
    };

    let phase1: Vec<T> = (0..n + m).map(|j| if j < n { T::zero() } else { T::one() }).collect();
    tab.optimize(&phase1, n + m, max_iterations)?;
    let infeas = (0..m).fold(T::zero(), |acc, i| acc + phase1[tab.basis[i]].clone() * tab.rhs(i).clone());
    if positive(&infeas) {
        return Ok(DenseOutcome::Infeasible);
    }
    // drive zero-level artificials out where a structural pivot exists
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(q) = (0..n).find(|&j| !tab.at(r, j).is_zero() && !tab.basis.contains(&j)) {
                if T::EXACT || tab.at(r, q).to_f64().abs() > 1e-9 {
                    tab.pivot(r, q);
                }
            }
        }
    }

    let phase2: Vec<T> = (0..n + m).map(|j| if j < n { c[j].clone() } else { T::zero() }).collect();
    if !tab.optimize(&phase2, n, max_iterations)? {
        return Ok(DenseOutcome::Unbounded);
    }

    let mut x = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).clone();
        }
    }
    // π = c_B B⁻¹, with B⁻¹ sitting in the artificial columns
    let duals: Vec<T> = (0..m)
        .map(|k| {
            let v = (0..m).fold(T::zero(), |acc, i| {
                acc + phase2[tab.basis[i]].clone() * tab.at(i, n + k).clone()
            });
            if flipped[k] {
                -v
            } else {
                v
            }
        })
        .collect();
    let objective = x.iter().zip(c).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    Ok(DenseOutcome::Optimal(DenseSolution {
        x,
        duals,
        objective,
        iterations: tab.iterations,
    }))
}
