//! Dense simulation of the qubit behaviors used as test inputs: noisy GHZ
//! states with the Bell/rectilinear strategy, the W-state chained-Bell
//! strategy, and a fine-tuned classical model.
//!
//! Each party holds one qubit. A dichotomic measurement along angle `θ` in
//! the Z–X plane measures `cos θ Z + sin θ X`; output 0 is the +1
//! eigenvalue. Angles are rational multiples of π so that exact scalars can
//! carry the entries (Q(√2) covers multiples of π/4).

pub mod matrix;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::behavior::{Behavior, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::index;
use crate::network::PartySpec;
use crate::scalar::Scalar;

pub use matrix::Matrix;

/// Tolerance for the positivity check on float states.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct NoisyState<T> {
    n_qubits: usize,
    rho: Matrix<T>,
    /// Weight of the pure component; 1 for states given directly.
    noise: T,
}

impl<T: Scalar> NoisyState<T> {
    /// Validates trace, hermiticity and positivity.
    pub fn new(n_qubits: usize, rho: Matrix<T>, noise: T) -> Result<Self> {
        if rho.dim() != 1 << n_qubits {
            return Err(Error::InvalidBehavior(format!(
                "density matrix of dimension {} for {n_qubits} qubits",
                rho.dim()
            )));
        }
        let tol = if T::EXACT { 0.0 } else { PSD_TOL };
        let tr = rho.trace();
        if !tr.re.approx_eq(&T::one(), tol) || !tr.im.approx_eq(&T::zero(), tol) {
            return Err(Error::InvalidBehavior(format!("state has trace {}", tr.re)));
        }
        if !rho.is_hermitian(tol) {
            return Err(Error::InvalidBehavior("state is not Hermitian".into()));
        }
        if !rho.is_psd(tol) {
            return Err(Error::InvalidBehavior("state is not positive semidefinite".into()));
        }
        Ok(Self { n_qubits, rho, noise })
    }

    /// `p |GHZ_n⟩⟨GHZ_n| + (1 − p) 𝟙/2ⁿ`.
    pub fn ghz(n: usize, p: T) -> Result<Self> {
        check_unit(&p, "noise parameter")?;
        let d = 1usize << n;
        let mut ghz = Matrix::zeros(d);
        let half = T::from_ratio(1, 2);
        for &i in &[0, d - 1] {
            for &j in &[0, d - 1] {
                ghz.set(i, j, Complex::new(half.clone(), T::zero()));
            }
        }
        let mixed = Matrix::identity(d).scale(&T::from_ratio(1, d as i64));
        let rho = ghz.scale(&p).add(&mixed.scale(&(T::one() - p.clone())));
        Self::new(n, rho, p)
    }

    /// `|W⟩⟨W|` with `|W⟩ = (|001⟩ + |010⟩ + |100⟩)/√3`.
    pub fn w() -> Result<Self> {
        let third = T::from_ratio(1, 3);
        let mut rho = Matrix::zeros(8);
        for &i in &[1usize, 2, 4] {
            for &j in &[1usize, 2, 4] {
                rho.set(i, j, Complex::new(third.clone(), T::zero()));
            }
        }
        Self::new(3, rho, T::one())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn rho(&self) -> &Matrix<T> {
        &self.rho
    }

    pub fn noise(&self) -> &T {
        &self.noise
    }
}

fn check_unit<T: Scalar>(v: &T, what: &str) -> Result<()> {
    if *v < T::zero() || *v > T::one() {
        return Err(Error::InvalidBehavior(format!("{what} {v} outside [0, 1]")));
    }
    Ok(())
}

/// A projective qubit measurement: one projector per output.
#[derive(Clone, Debug)]
pub struct Measurement<T> {
    projectors: Vec<Matrix<T>>,
}

impl<T: Scalar> Measurement<T> {
    /// Checks completeness and orthogonality.
    pub fn new(projectors: Vec<Matrix<T>>) -> Result<Self> {
        let tol = if T::EXACT { 0.0 } else { DEFAULT_TOL };
        if projectors.is_empty() || projectors.iter().any(|p| p.dim() != 2) {
            return Err(Error::InvalidBehavior("qubit projectors expected".into()));
        }
        let sum = projectors[1..].iter().fold(projectors[0].clone(), |acc, p| acc.add(p));
        if !sum.is_identity(tol) {
            return Err(Error::InvalidBehavior("projectors do not sum to the identity".into()));
        }
        for (i, p) in projectors.iter().enumerate() {
            for (j, q) in projectors.iter().enumerate() {
                let pq = p.mul(q);
                let expect = if i == j { p.clone() } else { Matrix::zeros(2) };
                if !pq.approx_eq(&expect, tol) {
                    return Err(Error::InvalidBehavior("projectors are not orthogonal".into()));
                }
            }
        }
        Ok(Self { projectors })
    }

    /// `cos θ Z + sin θ X` with `θ = π·num/den`.
    pub fn axis(num: i64, den: i64) -> Result<Self> {
        let unsupported = || Error::Unsupported(format!("angle {num}π/{den} is not representable in this scalar type"));
        let c = T::cos_pi(num, den).ok_or_else(unsupported)?;
        let s = T::sin_pi(num, den).ok_or_else(unsupported)?;
        let half = T::from_ratio(1, 2);
        let plus = Matrix::from_real(
            2,
            vec![
                half.clone() * (T::one() + c.clone()),
                half.clone() * s.clone(),
                half.clone() * s.clone(),
                half.clone() * (T::one() - c.clone()),
            ],
        );
        let minus = Matrix::identity(2).add(&plus.scale(&-T::one()));
        Self::new(vec![plus, minus])
    }

    pub fn rectilinear() -> Self {
        Self::axis(0, 1).expect("Z is exact")
    }

    pub fn hadamard() -> Self {
        Self::axis(1, 2).expect("X is exact")
    }

    pub fn projectors(&self) -> &[Matrix<T>] {
        &self.projectors
    }
}

/// Settings for every party and input: `settings[party][input]`.
pub type MeasurementSetting<T> = Vec<Vec<Measurement<T>>>;

/// Born-rule table `P(a|x) = Tr[ρ ⊗ₖ Π^{(k)}_{a_k|x_k}]`.
pub fn behavior_from_state<T: Scalar>(
    state: &NoisyState<T>,
    names: &[String],
    settings: &MeasurementSetting<T>,
) -> Result<Behavior<T>> {
    let n = state.n_qubits();
    if settings.len() != n || names.len() != n {
        return Err(Error::PartyMismatch(format!("{n} qubits need {n} parties")));
    }
    let parties: Vec<PartySpec> = settings
        .iter()
        .zip(names)
        .map(|(s, name)| PartySpec::new(name.clone(), s.len(), 2))
        .collect();
    let rho = state.rho();
    let d = rho.dim();
    let nonzero: Vec<(usize, usize, Complex<T>)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| !rho.get(i, j).is_zero())
        .map(|(i, j)| (i, j, rho.get(i, j).clone()))
        .collect();
    let bit = |idx: usize, k: usize| (idx >> (n - 1 - k)) & 1;

    let rin: Vec<usize> = parties.iter().map(|p| p.inputs).collect();
    let rout: Vec<usize> = parties.iter().map(|p| p.outputs).collect();
    let inputs: Vec<Vec<usize>> = index::tuples(&rin).collect();
    let rows: Vec<Vec<T>> = inputs
        .par_iter()
        .map(|x| {
            index::tuples(&rout)
                .map(|a| {
                    // Tr[ρ Π] = Σ_{ij} ρ_ij Π_ji with Π_ji = Πₖ (Πₖ)_{j_k i_k}
                    let total = nonzero.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (i, j, r)| {
                        let mut term = r.clone();
                        for k in 0..n {
                            let proj = &settings[k][x[k]].projectors()[a[k]];
                            term = term * proj.get(bit(*j, k), bit(*i, k)).clone();
                            if term.is_zero() {
                                break;
                            }
                        }
                        acc + term
                    });
                    total.re
                })
                .collect()
        })
        .collect();
    let table: Vec<T> = rows.into_iter().flatten().collect();
    if T::EXACT {
        Behavior::new(parties, table)
    } else {
        // round-off can leave entries at −1e-17
        let table = table
            .into_iter()
            .map(|v| if v < T::zero() && v.approx_eq(&T::zero(), 1e-12) { T::zero() } else { v })
            .collect();
        Behavior::new(parties, table)
    }
}

/// Party names for the GHZ structure: A, B, then C (n = 3) or C1, C2, ….
pub fn ghz_party_names(n: usize) -> Vec<String> {
    let mut names = vec!["A".to_string(), "B".to_string()];
    if n == 3 {
        names.push("C".into());
    } else {
        names.extend((1..=n - 2).map(|i| format!("C{i}")));
    }
    names
}

/// Party specs of the GHZ input structure: A has 2 inputs, B has 3, each
/// Charlie has 2; all outputs binary.
pub fn ghz_parties(n: usize) -> Vec<PartySpec> {
    ghz_party_names(n)
        .into_iter()
        .enumerate()
        .map(|(i, name)| PartySpec::new(name, if i == 1 { 3 } else { 2 }, 2))
        .collect()
}

/// Noisy GHZ_n with the Bell/rectilinear strategy.
///
/// A: X=0 → Z, X=1 → X. B: Y=0 → π/4, Y=1 → −π/4, Y=2 → Z.
/// Charlies: input 0 → Z, input 1 → X.
pub fn ghz_behavior<T: Scalar>(n: usize, p: T) -> Result<Behavior<T>> {
    if n < 3 {
        return Err(Error::InvalidScenario(format!("GHZ behavior needs n ≥ 3, got {n}")));
    }
    let state = NoisyState::ghz(n, p)?;
    let mut settings = vec![
        vec![Measurement::rectilinear(), Measurement::hadamard()],
        vec![Measurement::axis(1, 4)?, Measurement::axis(-1, 4)?, Measurement::rectilinear()],
    ];
    for _ in 2..n {
        settings.push(vec![Measurement::rectilinear(), Measurement::hadamard()]);
    }
    behavior_from_state(&state, &ghz_party_names(n), &settings)
}

/// W state with the chained-Bell strategy for parameter `m`.
///
/// Every party has inputs `0..=m`. Alice and Charlie: input 0 → Z (unused
/// by the games), input `i ≥ 1` → angle `(i − 1)π/m`. Bob: input 0 → Z,
/// input `i ≥ 1` → angle `π − (2i − 1)π/(2m)`. The all-rectilinear game
/// uses X = 1, Y = 0, Z = 1.
pub fn w_behavior<T: Scalar>(m: usize) -> Result<Behavior<T>> {
    if m < 2 {
        return Err(Error::InvalidBehavior(format!("chained-Bell parameter must be ≥ 2, got {m}")));
    }
    let mi = m as i64;
    let outer = |_: ()| -> Result<Vec<Measurement<T>>> {
        let mut v = vec![Measurement::rectilinear()];
        for i in 1..=mi {
            v.push(Measurement::axis(i - 1, mi)?);
        }
        Ok(v)
    };
    let mut bob = vec![Measurement::rectilinear()];
    for i in 1..=mi {
        bob.push(Measurement::axis(2 * mi - (2 * i - 1), 2 * mi)?);
    }
    let settings = vec![outer(())?, bob, outer(())?];
    let names = ["A", "B", "C"].map(String::from);
    behavior_from_state(&NoisyState::w()?, &names, &settings)
}

/// Fine-tuned classical model over the GHZ_3 input structure: λ = ±1
/// uniformly, `c = b = λ` and `a = b·(−1)^{xy}`.
///
/// Alice's output depends on Bob's input, so the table is signalling.
pub fn svetlichny_lhvm_behavior<T: Scalar>() -> Result<Behavior<T>> {
    let half = T::from_ratio(1, 2);
    Behavior::from_fn(ghz_parties(3), |x, a| {
        [0usize, 1]
            .iter()
            .filter(|&&lam| {
                let b = lam;
                let flip = (x[0] * x[1]) % 2;
                a[1] == b && a[2] == lam && a[0] == b ^ flip
            })
            .fold(T::zero(), |acc, _| acc + half.clone())
    })
}

/// `f = p + (1 − p)/2ⁿ`.
pub fn fidelity_of<T: Scalar>(n: usize, p: &T) -> Result<T> {
    check_unit(p, "noise parameter")?;
    let inv = T::from_ratio(1, 1i64 << n);
    Ok(p.clone() + (T::one() - p.clone()) * inv)
}

/// Inverse of [`fidelity_of`]: `p = (f − 2⁻ⁿ)/(1 − 2⁻ⁿ)`.
pub fn noise_of<T: Scalar>(n: usize, f: &T) -> Result<T> {
    let inv = T::from_ratio(1, 1i64 << n);
    if *f < inv || *f > T::one() {
        return Err(Error::InvalidBehavior(format!("fidelity {f} outside [1/2^{n}, 1]")));
    }
    Ok((f.clone() - inv.clone()) / (T::one() - inv))
}
