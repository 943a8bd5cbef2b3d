//! Infeasibility certificates and their exact verification.
//!
//! A certificate holds nonnegative weights `y` on block entries and
//! multipliers `μ` on equality rows such that
//! `Σ y_e q_e + Σ μ_r (row_r) ≡ C(P)` as a function of the block coordinates,
//! i.e. every coordinate cancels. Every row vanishes on a feasible point and
//! every entry is nonnegative there, so `C(P) ≥ 0` is necessary for
//! feasibility. The witness is `w(P) = −C(P)`, an affine function of the
//! observed table; `w(P) > 0` proves infeasibility.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::reduced::{ClassKind, Reduced};
use crate::behavior::Behavior;
use crate::constraints::{ConstraintSystem, EqRow};
use crate::error::{Error, Result};
use crate::qsqrt2::QSqrt2;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Derived from a dual solution of the feasibility LP.
    Dual,
    /// Two anchors of one class disagree; no inequality needed.
    Conflict,
}

/// Affine function of the observed behavior's flat table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub constant: QSqrt2,
    pub coefficients: Vec<QSqrt2>,
}

impl Witness {
    pub fn evaluate<T: Scalar>(&self, p: &Behavior<T>) -> Result<QSqrt2> {
        if p.table().len() != self.coefficients.len() {
            return Err(Error::CertificateMismatch(format!(
                "witness has {} coefficients, behavior has {} entries",
                self.coefficients.len(),
                p.table().len()
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(p.table())
            .filter(|(c, _)| !c.is_zero())
            .fold(self.constant.clone(), |acc, (c, v)| acc + c * &v.to_exact()))
    }

    /// Float evaluation, for quick scans.
    pub fn evaluate_f64<T: Scalar>(&self, p: &Behavior<T>) -> f64 {
        self.coefficients
            .iter()
            .zip(p.table())
            .fold(self.constant.to_f64(), |acc, (c, v)| acc + c.to_f64() * v.to_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub n_columns: usize,
    pub n_rows: usize,
    /// (global entry index, weight ≥ 0).
    pub y: Vec<(usize, QSqrt2)>,
    /// (row index, multiplier).
    pub mu: Vec<(usize, QSqrt2)>,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub valid: bool,
    /// `w(P)` at the exact image of the behavior the system was built with.
    pub value: QSqrt2,
    pub reason: Option<String>,
}

fn int(k: i64) -> QSqrt2 {
    QSqrt2::from(k)
}

/// Global entry index → (block, entry).
fn entry_starts<T>(sys: &ConstraintSystem<T>) -> Vec<usize> {
    let mut starts = Vec::with_capacity(sys.blocks.len() + 1);
    let mut total = 0;
    starts.push(0);
    for b in &sys.blocks {
        total += b.n_entries();
        starts.push(total);
    }
    starts
}

fn locate(starts: &[usize], col: usize) -> (usize, usize) {
    let b = starts.partition_point(|&s| s <= col) - 1;
    (b, col - starts[b])
}

fn node_offsets<T>(sys: &ConstraintSystem<T>) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(sys.blocks.len());
    let mut total = 0;
    for b in &sys.blocks {
        offsets.push(total);
        total += b.n_coords();
    }
    offsets.push(total);
    offsets
}

/// Node coefficients (`offsets`-indexed, coordinate 0 collecting the
/// constant) of `Σ y_e q_e`.
fn accumulate_entries<T>(sys: &ConstraintSystem<T>, y: &[(usize, QSqrt2)]) -> Vec<QSqrt2> {
    let offsets = node_offsets(sys);
    let starts = entry_starts(sys);
    let mut acc = vec![QSqrt2::zero(); *offsets.last().unwrap()];
    for (col, w) in y {
        let (b, e) = locate(&starts, *col);
        let layout = &sys.blocks[b].layout;
        let (x, a) = layout.split_entry(e);
        for (c, k) in layout.expand_entry(&x, &a) {
            let slot = &mut acc[offsets[b] + c];
            *slot = slot.clone() + w * &int(k);
        }
    }
    acc
}

/// Witness of `Σ y_e q_e + Σ μ_r row_r` given the entry constant.
fn witness_of<T: Scalar>(sys: &ConstraintSystem<T>, entry_constant: &QSqrt2, mu: &[(usize, QSqrt2)]) -> Witness {
    // C(P) = entry_constant − Σ_fix μ v − Σ_pin μ P[coord];  w = −C
    let mut constant = -entry_constant.clone();
    let mut coefficients = vec![QSqrt2::zero(); sys.p.table().len()];
    for (r, m) in mu {
        match &sys.rows[*r] {
            EqRow::Fix { value, .. } => constant = constant + m * &value.to_exact(),
            EqRow::Pin { p_coord, .. } => {
                for i in sys.p_layout.coordinate_terms(*p_coord) {
                    coefficients[i] = coefficients[i].clone() + m.clone();
                }
            }
            EqRow::Identify { .. } => {}
        }
    }
    Witness {
        constant,
        coefficients,
    }
}

/// Multipliers that cancel the node coefficients `acc`, pushed along the
/// spanning forest. Fails if a free class has a nonzero total.
fn push_along_forest<T>(sys: &ConstraintSystem<T>, red: &Reduced, mut acc: Vec<QSqrt2>) -> Result<Vec<(usize, QSqrt2)>> {
    let mut mu: BTreeMap<usize, QSqrt2> = BTreeMap::new();
    for class in &red.classes {
        for &u in class.nodes.iter().skip(1).rev() {
            if acc[u].is_zero() {
                continue;
            }
            let (p, row) = red.parent[u].expect("non-root node has a parent");
            let EqRow::Identify { left, .. } = &sys.rows[row] else {
                unreachable!("forest edges are identify rows")
            };
            let u_is_left = red.node_id(*left) == u;
            let m = if u_is_left { -acc[u].clone() } else { acc[u].clone() };
            let prev = mu.remove(&row).unwrap_or_default();
            mu.insert(row, prev + m);
            acc[p] = acc[p].clone() + acc[u].clone();
            acc[u] = QSqrt2::zero();
        }
        let root = class.nodes[0];
        if acc[root].is_zero() {
            continue;
        }
        match class.kind {
            ClassKind::Fixed => {
                let row = class.anchors[0];
                let m = -acc[root].clone();
                let prev = mu.remove(&row).unwrap_or_default();
                mu.insert(row, prev + m);
                acc[root] = QSqrt2::zero();
            }
            ClassKind::Free(_) => {
                return Err(Error::NumericalFailure(
                    "dual weights leave a free coordinate uncancelled".into(),
                ))
            }
        }
    }
    Ok(mu.into_iter().filter(|(_, m)| !m.is_zero()).collect())
}

/// Rounds a float weight to a multiple of 2⁻⁴⁰, clamped at zero.
fn dyadic(v: f64) -> Option<QSqrt2> {
    let scale = (1u64 << 40) as f64;
    let k = (v * scale).round();
    (k > 0.0).then(|| {
        QSqrt2::from_rational(num_rational::BigRational::new(
            num_bigint::BigInt::from(k as i64),
            num_bigint::BigInt::from(1u64 << 40),
        ))
    })
}

/// Certificate from dual weights of the reduced LP. Float weights are
/// rounded and then repaired so the free coordinates cancel exactly.
pub fn from_dual<T: Scalar>(sys: &ConstraintSystem<T>, red: &Reduced, y: &[(usize, QSqrt2)]) -> Result<Certificate> {
    let mut weights: BTreeMap<usize, QSqrt2> = y.iter().filter(|(_, w)| *w > QSqrt2::zero()).cloned().collect();
    let weights_vec: Vec<(usize, QSqrt2)> = weights.iter().map(|(c, w)| (*c, w.clone())).collect();
    let acc = accumulate_entries(sys, &weights_vec);

    let starts = entry_starts(sys);
    for class in &red.classes {
        if !matches!(class.kind, ClassKind::Free(_)) {
            continue;
        }
        let total = class.nodes.iter().fold(QSqrt2::zero(), |s, &u| s + acc[u].clone());
        if total.is_zero() {
            continue;
        }
        // entries summing to the root coordinate (or to one minus it)
        let node = red.node_of(class.nodes[0]);
        let layout = &sys.blocks[node.block].layout;
        let negative = total < QSqrt2::zero();
        let delta = if negative { -total } else { total };
        for e in layout.coordinate_entry_set(node.coord, !negative) {
            let col = starts[node.block] + e;
            let w = weights.remove(&col).unwrap_or_default();
            weights.insert(col, w + delta.clone());
        }
    }
    let y: Vec<(usize, QSqrt2)> = weights.into_iter().collect();
    let acc = accumulate_entries(sys, &y);
    let offsets = node_offsets(sys);
    let entry_constant = offsets[..sys.blocks.len()]
        .iter()
        .fold(QSqrt2::zero(), |s, &o| s + acc[o].clone());
    let mut node_acc = acc;
    for &o in &offsets[..sys.blocks.len()] {
        node_acc[o] = QSqrt2::zero();
    }
    let mu = push_along_forest(sys, red, node_acc)?;
    let witness = witness_of(sys, &entry_constant, &mu);
    Ok(Certificate {
        kind: CertificateKind::Dual,
        n_columns: sys.n_variables(),
        n_rows: sys.rows.len(),
        y,
        mu,
        witness,
    })
}

/// Certificate from float dual weights.
pub fn from_float_dual<T: Scalar>(sys: &ConstraintSystem<T>, red: &Reduced, y: &[f64]) -> Result<Certificate> {
    let exact: Vec<(usize, QSqrt2)> = y
        .iter()
        .enumerate()
        .filter_map(|(c, &v)| dyadic(v).map(|w| (c, w)))
        .collect();
    from_dual(sys, red, &exact)
}

/// Certificate from two disagreeing anchors `r1`, `r2` of one class.
pub fn from_conflict<T: Scalar>(sys: &ConstraintSystem<T>, red: &Reduced, r1: usize, r2: usize) -> Result<Certificate> {
    let v1 = Reduced::anchor_value(sys, r1).to_exact();
    let v2 = Reduced::anchor_value(sys, r2).to_exact();
    // μ = (+1, −1) gives w = v1 − v2; flip so that it is positive
    let s = if v1 > v2 { QSqrt2::one() } else { -QSqrt2::one() };
    let node = |r: usize| match &sys.rows[r] {
        EqRow::Pin { node, .. } | EqRow::Fix { node, .. } => red.node_id(*node),
        EqRow::Identify { .. } => unreachable!("anchors are pin or fix rows"),
    };
    let mut acc = vec![QSqrt2::zero(); red.class_of.len()];
    acc[node(r1)] = acc[node(r1)].clone() + s.clone();
    acc[node(r2)] = acc[node(r2)].clone() - s.clone();
    let mut mu = push_along_forest(sys, red, acc)?;
    mu.push((r1, s.clone()));
    mu.push((r2, -s));
    // merge repeated rows
    let mut merged: BTreeMap<usize, QSqrt2> = BTreeMap::new();
    for (r, m) in mu {
        let prev = merged.remove(&r).unwrap_or_default();
        merged.insert(r, prev + m);
    }
    let mu: Vec<(usize, QSqrt2)> = merged.into_iter().filter(|(_, m)| !m.is_zero()).collect();
    let witness = witness_of(sys, &QSqrt2::zero(), &mu);
    Ok(Certificate {
        kind: CertificateKind::Conflict,
        n_columns: sys.n_variables(),
        n_rows: sys.rows.len(),
        y: Vec::new(),
        mu,
        witness,
    })
}

/// Exact check of a certificate against a system, recomputing everything
/// from the rows and the block layouts.
pub fn verify<T: Scalar>(sys: &ConstraintSystem<T>, cert: &Certificate) -> Result<Verification> {
    let fail = |reason: String| Verification {
        valid: false,
        value: QSqrt2::zero(),
        reason: Some(reason),
    };
    if cert.n_columns != sys.n_variables() || cert.n_rows != sys.rows.len() {
        return Err(Error::CertificateMismatch(format!(
            "certificate is for {} entries and {} rows, system has {} and {}",
            cert.n_columns,
            cert.n_rows,
            sys.n_variables(),
            sys.rows.len()
        )));
    }
    if cert.witness.coefficients.len() != sys.p.table().len() {
        return Err(Error::CertificateMismatch("witness length differs from the behavior table".into()));
    }
    if let Some((c, _)) = cert.y.iter().find(|(c, _)| *c >= cert.n_columns) {
        return Err(Error::CertificateMismatch(format!("entry index {c} out of range")));
    }
    if let Some((r, _)) = cert.mu.iter().find(|(r, _)| *r >= cert.n_rows) {
        return Err(Error::CertificateMismatch(format!("row index {r} out of range")));
    }
    let witness = match recompute(sys, cert) {
        Ok(w) => w,
        Err(reason) => return Ok(fail(reason)),
    };
    if witness != cert.witness {
        return Ok(fail("stored witness differs from the recomputed one".into()));
    }
    let value = witness.evaluate(&sys.p)?;
    let valid = value > QSqrt2::zero();
    Ok(Verification {
        reason: (!valid).then(|| format!("witness value {value} is not positive")),
        valid,
        value,
    })
}

/// Cancellation check and witness of `cert` against `sys`. Sizes must match.
fn recompute<T: Scalar>(sys: &ConstraintSystem<T>, cert: &Certificate) -> std::result::Result<Witness, String> {
    if let Some((c, w)) = cert.y.iter().find(|(_, w)| *w < QSqrt2::zero()) {
        return Err(format!("negative weight {w} on entry {c}"));
    }

    let offsets = node_offsets(sys);
    let mut acc = accumulate_entries(sys, &cert.y);
    for (r, m) in &cert.mu {
        let bump = |acc: &mut Vec<QSqrt2>, b: usize, c: usize, v: QSqrt2| {
            let i = offsets[b] + c;
            acc[i] = acc[i].clone() + v;
        };
        match &sys.rows[*r] {
            EqRow::Identify { left, right, .. } => {
                bump(&mut acc, left.block, left.coord, m.clone());
                bump(&mut acc, right.block, right.coord, -m.clone());
            }
            EqRow::Pin { node, .. } | EqRow::Fix { node, .. } => bump(&mut acc, node.block, node.coord, m.clone()),
        }
    }
    let mut entry_constant = QSqrt2::zero();
    for (b, block) in sys.blocks.iter().enumerate() {
        entry_constant = entry_constant + acc[offsets[b]].clone();
        for c in 1..block.n_coords() {
            if !acc[offsets[b] + c].is_zero() {
                return Err(format!(
                    "coordinate {c} of block {} does not cancel ({})",
                    block.label,
                    acc[offsets[b] + c]
                ));
            }
        }
    }
    Ok(witness_of(sys, &entry_constant, &cert.mu))
}

/// The witness `cert` induces on `sys`, which may differ from the system it
/// was issued for in the values of `Fix` rows (rows computed from `P`).
pub fn witness_for<T: Scalar>(sys: &ConstraintSystem<T>, cert: &Certificate) -> Result<Witness> {
    if cert.n_columns != sys.n_variables() || cert.n_rows != sys.rows.len() {
        return Err(Error::CertificateMismatch("certificate and system differ in size".into()));
    }
    if cert.y.iter().any(|(c, _)| *c >= cert.n_columns) || cert.mu.iter().any(|(r, _)| *r >= cert.n_rows) {
        return Err(Error::CertificateMismatch("index out of range".into()));
    }
    recompute(sys, cert).map_err(Error::CertificateMismatch)
}
