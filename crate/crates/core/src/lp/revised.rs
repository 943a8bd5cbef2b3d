//! Revised primal simplex in `f64` for the large feasibility LPs.
//!
//! Dense explicit inverse of the basis with product-form updates, Devex
//! pricing, a Harris ratio test and a Bland fallback on long degenerate
//! runs. Degeneracy is broken by relaxing `x ≥ 0` to `x ≥ −u` for a small
//! random `u`, widened per variable when rounding pushes a basic value
//! below zero. The relaxation is dropped at the end and a short dual pass
//! cleans up. The basis can be reused across solves that only change the
//! costs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sparse matrix stored by columns.
#[derive(Clone, Debug, Default)]
pub struct SparseColumns {
    pub m: usize,
    pub start: Vec<usize>,
    pub rows: Vec<u32>,
    pub vals: Vec<f64>,
}

impl SparseColumns {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            start: vec![0],
            rows: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn push_column(&mut self, entries: impl IntoIterator<Item = (u32, f64)>) {
        for (r, v) in entries {
            debug_assert!((r as usize) < self.m);
            self.rows.push(r);
            self.vals.push(v);
        }
        self.start.push(self.rows.len());
    }

    pub fn n(&self) -> usize {
        self.start.len() - 1
    }

    pub fn col(&self, j: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.start[j], self.start[j + 1]);
        (&self.rows[s..e], &self.vals[s..e])
    }

    pub fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let (r, v) = self.col(j);
        r.iter().zip(v).map(|(&i, &a)| a * y[i as usize]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Scale of the random relaxation `y ≥ −u` of the bounds.
    pub perturbation: f64,
    pub seed: u64,
    /// Iterations between recomputations of the basic solution.
    pub check_every: usize,
    /// Consecutive degenerate steps before switching to Bland's rule.
    pub bland_after: usize,
    /// Stop phase two once the sign of the optimum is known.
    pub sign_stop: Option<SignStop>,
}

/// Early termination for problems with a convexity row (every column has
/// coefficient 1 there and the right-hand side is 1).
#[derive(Clone, Debug)]
pub struct SignStop {
    pub convexity_row: usize,
    pub margin: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-7,
            perturbation: 1e-9,
            seed: 0x5eed,
            check_every: 50,
            bland_after: 5000,
            sign_stop: None,
        }
    }
}

/// A basis and its inverse, reusable as a warm start for the same matrix.
#[derive(Clone, Debug)]
pub struct Basis {
    basis: Vec<usize>,
    binv: Vec<f64>,
    art_sign: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub x: Vec<f64>,
    /// Row duals `π = c_B B⁻¹`.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// With a sign stop: `π_t + min_j d_j ≤ optimum`, valid for any prices.
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    /// `max |A x − b|`.
    pub primal_residual: f64,
    pub basis: Basis,
}

struct Engine<'a> {
    a: &'a SparseColumns,
    m: usize,
    n: usize,
    b: Vec<f64>,
    /// Right-hand side without the perturbation.
    b_true: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Column-major `B⁻¹`: entry `(i, k)` at `k·m + i`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_check: usize,
    degenerate_run: usize,
    /// Row duals and structural reduced costs, updated incrementally.
    pi: Vec<f64>,
    d: Vec<f64>,
    stale: bool,
    just_reinverted: bool,
    weights: Vec<f64>,
    sign_stop_active: bool,
    opts: &'a SimplexOptions,
}

enum Step {
    Optimal,
    /// The sign of the optimum relative to the stop margin is settled.
    Settled,
    Pivoted,
    Unbounded,
}

impl<'a> Engine<'a> {
    fn column_of(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            let (r, v) = self.a.col(j);
            r.iter().map(|&i| i as usize).zip(v.iter().copied()).collect()
        } else {
            vec![(j - self.n, self.art_sign[j - self.n])]
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (k, v) in self.column_of(j) {
            let col = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                out[i] += v * col[i];
            }
        }
        out
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.binv
            .par_chunks(m)
            .map(|col| col.iter().zip(&cb).map(|(a, c)| a * c).sum())
            .collect()
    }

    fn reduced_costs(&self, pi: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|j| if self.is_basic[j] { 0.0 } else { self.cost[j] - self.a.dot(j, pi) })
            .collect()
    }

    fn btran_row(&self, r: usize) -> Vec<f64> {
        (0..self.m).map(|k| self.binv[k * self.m + r]).collect()
    }

    fn solve_b(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (k, &v) in rhs.iter().enumerate() {
            if v != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for i in 0..m {
                    out[i] += v * col[i];
                }
            }
        }
        out
    }

    fn times_b(&self, xb: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (pos, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column_of(j) {
                out[i] += v * xb[pos];
            }
        }
        out
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        self.binv.par_chunks_mut(m).for_each(|col| {
            let vr = col[r] / ar;
            if vr != 0.0 {
                for i in 0..m {
                    col[i] -= alpha[i] * vr;
                }
            }
            col[r] = vr;
        });
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.stale = true;
        self.iterations += 1;
        self.since_check += 1;
    }

    /// Gauss–Jordan inversion of the current basis with partial pivoting.
    fn reinvert(&mut self) -> Result<()> {
        let m = self.m;
        // row-major augmented [B | I]
        let w = 2 * m;
        let mut t = vec![0.0; m * w];
        for (pos, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column_of(j) {
                t[i * w + pos] = v;
            }
        }
        for i in 0..m {
            t[i * w + m + i] = 1.0;
        }
        for p in 0..m {
            let (piv, best) = (p..m)
                .map(|i| (i, t[i * w + p].abs()))
                .fold((p, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-12 {
                return Err(Error::NumericalFailure("basis became singular".into()));
            }
            if piv != p {
                for j in 0..w {
                    t.swap(p * w + j, piv * w + j);
                }
            }
            let d = t[p * w + p];
            for j in 0..w {
                t[p * w + j] /= d;
            }
            let prow: Vec<f64> = t[p * w..(p + 1) * w].to_vec();
            t.par_chunks_mut(w).enumerate().for_each(|(i, row)| {
                if i != p {
                    let f = row[p];
                    if f != 0.0 {
                        for j in 0..w {
                            row[j] -= f * prow[j];
                        }
                    }
                }
            });
        }
        // B⁻¹ is the right half, row-major; store column-major
        for i in 0..m {
            for k in 0..m {
                self.binv[k * m + i] = t[i * w + m + k];
            }
        }
        Ok(())
    }

    fn refresh(&mut self, force: bool) -> Result<()> {
        if !force && self.since_check < self.opts.check_every {
            return Ok(());
        }
        self.since_check = 0;
        let mut xb = self.solve_b(&self.b);
        let bx = self.times_b(&xb);
        let bnorm = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let res = bx.iter().zip(&self.b).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        if res > 1e-9 * (1.0 + bnorm) {
            self.reinvert()?;
            xb = self.solve_b(&self.b);
        }
        // while perturbed, a basic variable that drifted below zero gets its
        // own bound relaxed: b += δ·A_j moves only x_j, by δ
        if self.b != self.b_true {
            for (pos, x) in xb.iter_mut().enumerate() {
                if *x < 0.0 {
                    let delta = self.opts.perturbation - *x;
                    for (i, v) in self.column_of(self.basis[pos]) {
                        self.b[i] += delta * v;
                    }
                    *x += delta;
                }
            }
        }
        self.xb = xb;
        Ok(())
    }

    fn check_limit(&self) -> Result<()> {
        if self.iterations >= self.opts.max_iterations {
            return Err(Error::NumericalFailure(format!(
                "simplex iteration limit {} reached",
                self.opts.max_iterations
            )));
        }
        Ok(())
    }

    fn reprice(&mut self) {
        self.pi = self.duals();
        self.d = self.reduced_costs(&self.pi);
        self.stale = false;
    }

    /// Whether the current point shows `optimum < −margin` or the current
    /// prices show `optimum > margin`.
    fn sign_settled(&self) -> bool {
        let Some(stop) = self.opts.sign_stop.as_ref().filter(|_| self.sign_stop_active) else {
            return false;
        };
        // the basic solution for the unperturbed right-hand side, clamped
        let xt = self.solve_b(&self.b_true);
        if xt.iter().all(|&v| v >= -1e3 * self.opts.feasibility_tol) {
            let obj: f64 = self.basis.iter().zip(&xt).map(|(&j, &v)| self.cost[j] * v.max(0.0)).sum();
            if obj < -stop.margin {
                return true;
            }
        }
        // every column has a 1 in the convexity row, so shifting that dual
        // by min d keeps all reduced costs nonnegative
        let min_d = (0..self.n)
            .filter(|&j| !self.is_basic[j])
            .map(|j| self.d[j])
            .fold(0.0f64, f64::min);
        self.pi[stop.convexity_row] + min_d > stop.margin
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let tol = self.opts.optimality_tol;
        let candidates = (0..self.n).filter(|&j| !self.is_basic[j] && self.d[j] < -tol);
        if bland {
            candidates.min()
        } else {
            candidates.max_by(|&i, &j| {
                (self.d[i] * self.d[i] / self.weights[i]).total_cmp(&(self.d[j] * self.d[j] / self.weights[j]))
            })
        }
    }

    /// One primal iteration on the current costs, structural columns only,
    /// with Devex pricing.
    fn primal_step(&mut self) -> Result<Step> {
        self.check_limit()?;
        if self.since_check >= self.opts.check_every {
            self.refresh(false)?;
            self.stale = true;
        }
        let fresh = self.stale;
        if self.stale {
            self.reprice();
            if self.sign_settled() {
                return Ok(Step::Settled);
            }
        }
        let bland = self.degenerate_run >= self.opts.bland_after;
        let q = match self.entering(bland) {
            Some(q) => q,
            None if fresh => return Ok(Step::Optimal),
            None => {
                // confirm optimality against freshly computed prices
                self.reprice();
                match self.entering(bland) {
                    Some(q) => q,
                    None => return Ok(Step::Optimal),
                }
            }
        };
        let alpha = self.ftran(q);
        let ptol = self.opts.pivot_tol;
        let r = if bland {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if alpha[i] > ptol {
                    let ratio = self.xb[i].max(0.0) / alpha[i];
                    best = match best {
                        Some((bi, br)) if br < ratio || (br == ratio && self.basis[bi] < self.basis[i]) => Some((bi, br)),
                        _ => Some((i, ratio)),
                    };
                }
            }
            best.map(|(i, _)| i)
        } else {
            let ftol = self.opts.feasibility_tol;
            let theta_max = (0..self.m)
                .filter(|&i| alpha[i] > ptol)
                .map(|i| (self.xb[i].max(0.0) + ftol) / alpha[i])
                .fold(f64::INFINITY, f64::min);
            (0..self.m)
                .filter(|&i| alpha[i] > ptol && self.xb[i].max(0.0) / alpha[i] <= theta_max)
                .max_by(|&i, &j| alpha[i].total_cmp(&alpha[j]))
        };
        let Some(r) = r else { return Ok(Step::Unbounded) };
        // the pivot seen from the row must agree with the column
        let rho = self.btran_row(r);
        let arq = self.a.dot(q, &rho);
        if (arq - alpha[r]).abs() > 1e-9 * (1.0 + alpha[r].abs()) && !self.just_reinverted {
            self.reinvert()?;
            self.refresh(true)?;
            self.just_reinverted = true;
            self.stale = true;
            return Ok(Step::Pivoted);
        }
        self.just_reinverted = false;
        let theta = (self.xb[r] / alpha[r]).max(0.0);
        for i in 0..self.m {
            self.xb[i] -= theta * alpha[i];
        }
        self.xb[r] = theta;
        let dq = self.d[q];
        if theta * dq.abs() < 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        self.update_prices(r, q, &alpha, &rho);
        self.pivot(r, q, &alpha);
        self.stale = false;
        Ok(Step::Pivoted)
    }

    /// Reduced costs, duals and Devex weights after `q` replaces the basic
    /// variable in row `r`.
    fn update_prices(&mut self, r: usize, q: usize, alpha: &[f64], rho: &[f64]) {
        let arq = alpha[r];
        let a = self.a;
        let is_basic = &self.is_basic;
        let row: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|j| if is_basic[j] { 0.0 } else { a.dot(j, rho) })
            .collect();
        let ratio = self.d[q] / arq;
        let wq = self.weights[q];
        let mut reset = false;
        for (j, &arj) in row.iter().enumerate() {
            if arj != 0.0 && j != q {
                self.d[j] -= ratio * arj;
                let w = (arj / arq) * (arj / arq) * wq;
                if w > self.weights[j] {
                    self.weights[j] = w;
                    reset |= w > 1e8;
                }
            }
        }
        let leaving = self.basis[r];
        if leaving < self.n {
            self.d[leaving] = -ratio;
            self.weights[leaving] = (wq / (arq * arq)).max(1.0);
        }
        self.d[q] = 0.0;
        for (p, v) in self.pi.iter_mut().zip(rho) {
            *p += ratio * v;
        }
        if reset {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    fn primal(&mut self) -> Result<()> {
        self.degenerate_run = 0;
        self.stale = true;
        loop {
            match self.primal_step()? {
                Step::Optimal | Step::Settled => return Ok(()),
                Step::Pivoted => {}
                Step::Unbounded => return Err(Error::NumericalFailure("LP is unbounded".into())),
            }
        }
    }

    /// Dual simplex until the basic solution is nonnegative. Requires
    /// (near) dual feasibility.
    fn dual(&mut self, limit: usize) -> Result<()> {
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        loop {
            self.check_limit()?;
            if self.iterations >= limit {
                return Err(Error::NumericalFailure("dual cleanup did not converge".into()));
            }
            self.refresh(false)?;
            let Some(r) = (0..self.m)
                .filter(|&i| self.xb[i] < -ftol)
                .min_by(|&i, &j| self.xb[i].total_cmp(&self.xb[j]))
            else {
                return Ok(());
            };
            let rho = self.btran_row(r);
            let pi = self.duals();
            let candidates: Vec<(usize, f64, f64)> = (0..self.n)
                .into_par_iter()
                .filter(|&j| !self.is_basic[j])
                .filter_map(|j| {
                    let arj = self.a.dot(j, &rho);
                    (arj < -ptol).then(|| (j, arj, (self.cost[j] - self.a.dot(j, &pi)).max(0.0)))
                })
                .collect();
            // Harris pass on the dual ratios
            let otol = self.opts.optimality_tol;
            let bound = candidates
                .iter()
                .map(|&(_, arj, d)| (d + otol) / -arj)
                .fold(f64::INFINITY, f64::min);
            let Some(&(q, _, _)) = candidates
                .iter()
                .filter(|&&(_, arj, d)| d / -arj <= bound)
                .max_by(|a, b| (-a.1).total_cmp(&-b.1))
            else {
                return Err(Error::NumericalFailure("LP is primal infeasible".into()));
            };
            let alpha = self.ftran(q);
            let theta = self.xb[r] / alpha[r];
            for i in 0..self.m {
                self.xb[i] -= theta * alpha[i];
            }
            self.xb[r] = theta;
            self.pivot(r, q, &alpha);
        }
    }
}

/// `min c·x  s.t.  A x = b, x ≥ 0`, optionally from a previous basis of the
/// same matrix.
pub fn solve(a: &SparseColumns, b: &[f64], c: &[f64], warm: Option<&Basis>, opts: &SimplexOptions) -> Result<LpResult> {
    let (m, n) = (a.m, a.n());
    if b.len() != m || c.len() != n {
        return Err(Error::InvalidBehavior("LP dimensions do not match".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // b + A·u with u > 0 relaxes y ≥ 0 to y ≥ −u, which is always
    // consistent and makes the vertices nondegenerate
    let mut shift = vec![0.0; m];
    for j in 0..n {
        let u = opts.perturbation * (1.0 + rng.gen::<f64>());
        let (r, v) = a.col(j);
        for (&i, &aij) in r.iter().zip(v) {
            shift[i as usize] += aij * u;
        }
    }

    let warm = warm.filter(|w| w.basis.len() == m && w.basis.iter().all(|&j| j < n + m));
    let (basis, binv, art_sign) = match warm {
        Some(w) => (w.basis.clone(), w.binv.clone(), w.art_sign.clone()),
        None => {
            let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
            let mut binv = vec![0.0; m * m];
            for i in 0..m {
                binv[i * m + i] = sign[i];
            }
            ((n..n + m).collect(), binv, sign)
        }
    };
    let mut is_basic = vec![false; n + m];
    for &j in &basis {
        is_basic[j] = true;
    }
    let mut eng = Engine {
        a,
        m,
        n,
        b: b.to_vec(),
        b_true: b.to_vec(),
        cost: vec![0.0; n + m],
        art_sign,
        basis,
        is_basic,
        binv,
        xb: Vec::new(),
        iterations: 0,
        since_check: 0,
        degenerate_run: 0,
        pi: Vec::new(),
        d: Vec::new(),
        stale: true,
        just_reinverted: false,
        weights: vec![1.0; n],
        sign_stop_active: false,
        opts,
    };
    for i in 0..m {
        eng.b[i] += shift[i];
    }
    eng.refresh(true)?;

    if warm.is_none() {
        for j in n..n + m {
            eng.cost[j] = 1.0;
        }
        eng.primal()?;
        let infeas: f64 = eng
            .basis
            .iter()
            .zip(&eng.xb)
            .filter(|(&j, _)| j >= n)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        let bnorm = b.iter().fold(0.0f64, |x, v| x.max(v.abs()));
        if infeas > 1e-5 * (1.0 + bnorm) {
            return Err(Error::NumericalFailure(format!(
                "LP appears infeasible (phase-one residual {infeas:.3e})"
            )));
        }
        // drive basic artificials out where a structural pivot exists
        for r in 0..m {
            if eng.basis[r] < n {
                continue;
            }
            let rho = eng.btran_row(r);
            let best = (0..n)
                .filter(|&j| !eng.is_basic[j])
                .map(|j| (j, a.dot(j, &rho)))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
            if let Some((q, v)) = best {
                if v.abs() > 1e-7 {
                    let alpha = eng.ftran(q);
                    let theta = eng.xb[r] / alpha[r];
                    for i in 0..m {
                        eng.xb[i] -= theta * alpha[i];
                    }
                    eng.xb[r] = theta;
                    eng.pivot(r, q, &alpha);
                }
            }
        }
    }

    for j in 0..n {
        eng.cost[j] = c[j];
    }
    eng.sign_stop_active = true;
    for j in n..n + m {
        eng.cost[j] = 0.0;
    }
    if eng.xb.iter().all(|&v| v >= -opts.feasibility_tol) {
        eng.primal()?;
    }

    // drop the shift; the negative parts it leaves are removed by a short
    // dual pass, or clamped to zero if that does not settle
    eng.b = b.to_vec();
    eng.refresh(true)?;
    if eng.xb.iter().any(|&v| v < -opts.feasibility_tol) {
        let saved = (eng.basis.clone(), eng.is_basic.clone(), eng.binv.clone(), eng.xb.clone());
        let limit = (eng.iterations + 5 * m).min(opts.max_iterations);
        let cleaned = eng.dual(limit).is_ok();
        if cleaned && opts.sign_stop.is_none() {
            eng.primal()?;
            eng.refresh(true)?;
        }
        if !cleaned {
            (eng.basis, eng.is_basic, eng.binv, eng.xb) = saved;
        }
    }

    let mut x = vec![0.0; n];
    for (pos, &j) in eng.basis.iter().enumerate() {
        if j < n {
            x[j] = eng.xb[pos].max(0.0);
        }
    }
    let mut ax = vec![0.0; m];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let (r, v) = a.col(j);
            for (&i, &aij) in r.iter().zip(v) {
                ax[i as usize] += aij * xj;
            }
        }
    }
    let primal_residual = ax.iter().zip(b).fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
    let duals = eng.duals();
    let objective = x.iter().zip(c).map(|(u, v)| u * v).sum();
    let lower_bound = opts.sign_stop.as_ref().map(|stop| {
        let d = eng.reduced_costs(&duals);
        duals[stop.convexity_row] + d.iter().fold(0.0f64, |acc, &v| acc.min(v))
    });
    Ok(LpResult {
        x,
        duals,
        objective,
        lower_bound,
        iterations: eng.iterations,
        primal_residual,
        basis: Basis {
            basis: eng.basis,
            binv: eng.binv,
            art_sign: eng.art_sign,
        },
    })
}
