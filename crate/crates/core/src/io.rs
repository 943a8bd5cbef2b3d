//! JSON files for behaviors and certificates.
//!
//! A behavior file lists the parties and the flat table in the order of
//! [`Behavior`]: joint input outermost, joint output innermost, first party
//! most significant. Entries are JSON numbers in `float` mode, `"num/den"`
//! strings in `rational` mode and `"a+b*sqrt2"` strings in `quadratic` mode.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::behavior::{Behavior, DEFAULT_TOL};
use crate::constraints::CgLayout;
use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::lp::Certificate;
use crate::network::PartySpec;
use crate::qsqrt2::QSqrt2;
use crate::scalar::{rationalize, Scalar, RATIONALIZE_MAX_DEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberMode {
    Float,
    Rational,
    Quadratic,
}

#[derive(Serialize, Deserialize)]
struct BehaviorFile {
    parties: Vec<PartySpec>,
    mode: NumberMode,
    probabilities: Vec<Value>,
}

/// A behavior read from disk, exact unless the file used floats.
#[derive(Clone, Debug)]
pub enum LoadedBehavior {
    Float(Behavior<f64>),
    Exact(Behavior<QSqrt2>),
}

impl LoadedBehavior {
    pub fn parties(&self) -> &[PartySpec] {
        match self {
            LoadedBehavior::Float(b) => b.parties(),
            LoadedBehavior::Exact(b) => b.parties(),
        }
    }

    pub fn to_f64(&self) -> Behavior<f64> {
        match self {
            LoadedBehavior::Float(b) => b.clone(),
            LoadedBehavior::Exact(b) => b.map(|v| v.to_f64()),
        }
    }

    /// Exact copy. A nonsignalling float table is rounded in Collins–Gisin
    /// coordinates (denominator at most 10⁹), which keeps normalization and
    /// nonsignalling exact; rounding residue below zero is removed by mixing
    /// in the least amount of uniform noise. Signalling tables are rounded
    /// entrywise.
    pub fn to_exact(&self) -> Result<Behavior<QSqrt2>> {
        match self {
            LoadedBehavior::Exact(b) => Ok(b.clone()),
            LoadedBehavior::Float(b) if b.check_nonsignalling(DEFAULT_TOL)? => round_nonsignalling(b),
            LoadedBehavior::Float(b) => Behavior::new(
                b.parties().to_vec(),
                b.table().iter().map(|v| QSqrt2::from_rational(rationalize(*v, RATIONALIZE_MAX_DEN))).collect(),
            ),
        }
    }
}

fn round_nonsignalling(b: &Behavior<f64>) -> Result<Behavior<QSqrt2>> {
    let layout = CgLayout::new(b.parties().to_vec());
    let coords: Vec<BigRational> = (0..layout.len())
        .map(|c| {
            if c == 0 {
                BigRational::one()
            } else {
                rationalize(layout.coordinate_value(b, c), RATIONALIZE_MAX_DEN)
            }
        })
        .collect();
    let table: Vec<BigRational> = (0..b.table().len())
        .map(|flat| {
            let (x, a) = layout.split_entry(flat);
            layout
                .expand_entry(&x, &a)
                .into_iter()
                .fold(BigRational::zero(), |acc, (c, k)| acc + coords[c].clone() * BigRational::from_integer(k.into()))
        })
        .collect();
    // P' = (1 − λ) P + λ U with the least λ making every entry nonnegative
    let u = BigRational::new(1.into(), (b.n_joint_outputs() as i64).into());
    let lambda = table
        .iter()
        .filter(|v| v.is_negative())
        .map(|v| -v.clone() / (u.clone() - v.clone()))
        .max()
        .unwrap_or_else(BigRational::zero);
    let mixed = table
        .into_iter()
        .map(|v| QSqrt2::from_rational((BigRational::one() - lambda.clone()) * v + lambda.clone() * u.clone()))
        .collect();
    Behavior::new(b.parties().to_vec(), mixed)
}

fn encode_entry<T: Scalar>(v: &T, mode: NumberMode) -> Result<Value> {
    Ok(match mode {
        NumberMode::Float => Value::from(v.to_f64()),
        NumberMode::Rational => {
            let q = v.to_exact();
            if !q.is_rational() {
                return Err(Error::Unsupported(format!("{q} is not rational")));
            }
            Value::String(q.rational_part().to_string())
        }
        NumberMode::Quadratic => Value::String(v.to_exact().to_string()),
    })
}

pub fn behavior_to_json<T: Scalar>(b: &Behavior<T>, mode: NumberMode) -> Result<String> {
    let file = BehaviorFile {
        parties: b.parties().to_vec(),
        mode,
        probabilities: b.table().iter().map(|v| encode_entry(v, mode)).collect::<Result<_>>()?,
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}

pub fn behavior_from_json(s: &str) -> Result<LoadedBehavior> {
    let file: BehaviorFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    match file.mode {
        NumberMode::Float => {
            let table = file
                .probabilities
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Error::Parse(format!("expected a number, got {v}"))))
                .collect::<Result<Vec<f64>>>()?;
            Ok(LoadedBehavior::Float(Behavior::new(file.parties, table)?))
        }
        mode => {
            let table = file
                .probabilities
                .iter()
                .map(|v| {
                    let s = v.as_str().ok_or_else(|| Error::Parse(format!("expected a string, got {v}")))?;
                    let q: QSqrt2 = s.parse().map_err(|e: crate::qsqrt2::ParseQSqrt2Error| Error::Parse(e.to_string()))?;
                    if mode == NumberMode::Rational && !q.is_rational() {
                        return Err(Error::Parse(format!("`{s}` is not rational")));
                    }
                    Ok(q)
                })
                .collect::<Result<Vec<QSqrt2>>>()?;
            Ok(LoadedBehavior::Exact(Behavior::new(file.parties, table)?))
        }
    }
}

/// A certificate together with the context it was issued for.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub parties: Vec<PartySpec>,
    pub order: usize,
    /// Wiring labels of the inflation blocks.
    pub inflations: Vec<String>,
    /// `w(P)` on the behavior the certificate was issued for.
    pub value: QSqrt2,
    pub certificate: Certificate,
}

impl CertificateFile {
    pub fn new<T: Scalar>(sys: &ConstraintSystem<T>, certificate: Certificate) -> Result<Self> {
        Ok(Self {
            parties: sys.p.parties().to_vec(),
            order: sys.order,
            inflations: sys.blocks.iter().map(|b| b.inflation.wiring_label()).collect(),
            value: certificate.witness.evaluate(&sys.p)?,
            certificate,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ghz_behavior;
    use crate::scalar::ratio;

    #[test]
    fn roundtrip_all_modes() {
        let exact: Behavior<QSqrt2> = ghz_behavior(3, QSqrt2::from_rational(ratio(1, 2))).unwrap();
        let back = behavior_from_json(&behavior_to_json(&exact, NumberMode::Quadratic).unwrap()).unwrap();
        assert_eq!(back.to_exact().unwrap(), exact);
        assert!(behavior_to_json(&exact, NumberMode::Rational).is_err());

        let rational: Behavior<QSqrt2> = ghz_behavior(3, QSqrt2::from(0)).unwrap();
        let json = behavior_to_json(&rational, NumberMode::Rational).unwrap();
        assert!(json.contains("\"1/8\""));
        assert_eq!(behavior_from_json(&json).unwrap().to_exact().unwrap(), rational);

        let float = behavior_from_json(&behavior_to_json(&exact, NumberMode::Float).unwrap()).unwrap();
        assert!(matches!(float, LoadedBehavior::Float(_)));
        let diff = float
            .to_f64()
            .table()
            .iter()
            .zip(exact.table())
            .fold(0.0f64, |m, (a, b)| m.max((a - b.to_f64()).abs()));
        assert!(diff < 1e-15);
    }

    #[test]
    fn float_tables_round_to_valid_exact_behaviors() {
        for p in [0.0, 0.37, 0.5, 0.83, 1.0] {
            let exact: Behavior<QSqrt2> = ghz_behavior(3, QSqrt2::from_rational(rationalize(p, 100))).unwrap();
            let json = behavior_to_json(&exact, NumberMode::Float).unwrap();
            let rounded = behavior_from_json(&json).unwrap().to_exact().unwrap();
            assert!(rounded.check_nonsignalling(0.0).unwrap(), "p = {p}");
            let err = rounded
                .table()
                .iter()
                .zip(exact.table())
                .fold(0.0f64, |m, (a, b)| m.max((a.to_f64() - b.to_f64()).abs()));
            assert!(err < 1e-8, "p = {p}: {err}");
        }
    }

    #[test]
    fn key_order_is_stable() {
        let b: Behavior<QSqrt2> = ghz_behavior(3, QSqrt2::from(1)).unwrap();
        let json = behavior_to_json(&b, NumberMode::Quadratic).unwrap();
        let (p, m, t) = (json.find("\"parties\""), json.find("\"mode\""), json.find("\"probabilities\""));
        assert!(p < m && m < t);
        assert_eq!(json, behavior_to_json(&b, NumberMode::Quadratic).unwrap());
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matches!(behavior_from_json("{"), Err(Error::Parse(_))));
        let bad = r#"{"parties":[{"name":"A","inputs":1,"outputs":2}],"mode":"rational","probabilities":["1/2","1/3"]}"#;
        assert!(matches!(behavior_from_json(bad), Err(Error::InvalidBehavior(_))));
        let irr = r#"{"parties":[{"name":"A","inputs":1,"outputs":2}],"mode":"rational","probabilities":["1/2*sqrt2","1-1/2*sqrt2"]}"#;
        assert!(matches!(behavior_from_json(irr), Err(Error::Parse(_))));
    }
}
